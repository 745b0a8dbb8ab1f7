#include "eyeedge/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "eyeedge/common/rng.hpp"

namespace eyeedge::eval {

std::vector<double> euclid_errors(std::span<const Gaze> preds, std::span<const Gaze> truths) {
  if (preds.size() != truths.size()) throw std::invalid_argument("prediction and truth counts differ");
  std::vector<double> d(preds.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::hypot(preds[i].x - truths[i].x, preds[i].y - truths[i].y);
  return d;
}

double mean_euclid(std::span<const double> distances) {
  if (distances.empty()) throw std::invalid_argument("mean of no distances");
  return std::accumulate(distances.begin(), distances.end(), 0.0) / static_cast<double>(distances.size());
}

double rmse(std::span<const double> distances) {
  if (distances.empty()) throw std::invalid_argument("RMSE of no distances");
  double s = 0.0;
  for (double d : distances) s += d * d;
  return std::sqrt(s / static_cast<double>(distances.size()));
}

double r_squared(std::span<const Gaze> preds, std::span<const Gaze> truths) {
  if (preds.size() != truths.size() || truths.empty()) {
    throw std::invalid_argument("r_squared needs equal, non-empty prediction and truth lists");
  }
  const double n = static_cast<double>(truths.size());
  double mx = 0.0, my = 0.0;
  for (const Gaze& t : truths) {
    mx += t.x;
    my += t.y;
  }
  mx /= n;
  my /= n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double rx = truths[i].x - preds[i].x, ry = truths[i].y - preds[i].y;
    const double tx = truths[i].x - mx, ty = truths[i].y - my;
    ss_res += rx * rx + ry * ry;
    ss_tot += tx * tx + ty * ty;
  }
  if (ss_tot == 0.0) throw UndefinedStatistic("R^2 is undefined when the truths have no variance");
  return 1.0 - ss_res / ss_tot;
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) throw std::invalid_argument("k-fold needs 2 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double tol = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < tol) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta needs 0 <= x <= 1");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a) past the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (!(f >= 0)) throw std::invalid_argument("F statistic must be non-negative");
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("ANOVA needs at least two groups");
  std::size_t n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw std::invalid_argument("ANOVA needs at least two samples per group");
    n += g.size();
    grand += std::accumulate(g.begin(), g.end(), 0.0);
  }
  grand /= static_cast<double>(n);
  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ss_within += (v - mean) * (v - mean);
  }
  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = n - groups.size();
  if (ss_between == 0.0) return r;
  if (ss_within == 0.0) throw UndefinedStatistic("ANOVA F is undefined: no within-group variance but means differ");
  r.f = (ss_between / static_cast<double>(r.df_between)) / (ss_within / static_cast<double>(r.df_within));
  r.p = f_survival(r.f, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  return r;
}

EvalResult evaluate(std::span<const Gaze> preds, std::span<const Gaze> truths) {
  const std::vector<double> d = euclid_errors(preds, truths);
  EvalResult r;
  r.n = d.size();
  r.mean_euclid_cm = mean_euclid(d);
  r.rmse_cm = rmse(d);
  r.r2 = r_squared(preds, truths);
  return r;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string exact(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

}  // namespace

std::string eval_csv(const std::vector<EvalResult>& rows) {
  std::ostringstream s;
  s << "model,params,n,mean_euclid_cm,rmse_cm,r2\n";
  for (const EvalResult& r : rows) {
    s << r.model << ',' << r.params << ',' << r.n << ',' << exact(r.mean_euclid_cm) << ',' << exact(r.rmse_cm) << ','
      << exact(r.r2) << '\n';
  }
  return s.str();
}

std::string folds_csv(const std::vector<EvalResult>& rows) {
  std::ostringstream s;
  s << "model,fold,n,mean_euclid_cm,rmse_cm,r2\n";
  for (const EvalResult& r : rows) {
    for (const FoldResult& f : r.folds) {
      s << r.model << ',' << f.fold << ',' << f.n << ',' << exact(f.mean_euclid_cm) << ',' << exact(f.rmse_cm) << ','
        << exact(f.r2) << '\n';
    }
  }
  return s.str();
}

std::string eval_markdown(const std::vector<EvalResult>& rows) {
  std::ostringstream s;
  s << "| Model | Parameters | RMSE (cm) | R² | Mean Euclidean (cm) | n |\n";
  s << "|---|---:|---:|---:|---:|---:|\n";
  for (const EvalResult& r : rows) {
    s << "| " << r.model << " | " << r.params << " | " << fixed(r.rmse_cm, 3) << " | " << fixed(r.r2, 3) << " | "
      << fixed(r.mean_euclid_cm, 3) << " | " << r.n << " |\n";
  }
  return s.str();
}

}  // namespace eyeedge::eval
