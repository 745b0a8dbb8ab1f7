#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eyeedge/common/gaze.hpp"

namespace eyeedge::eval {

struct UndefinedStatistic : std::domain_error {
  using std::domain_error::domain_error;
};

std::vector<double> euclid_errors(std::span<const Gaze> preds, std::span<const Gaze> truths);
double mean_euclid(std::span<const double> distances);
// Root of the mean squared distance.
double rmse(std::span<const double> distances);

// 1 - SS_res / SS_tot with both sums pooled over x and y; SS_tot uses the
// per-coordinate means of the truths. Throws UndefinedStatistic when the
// truths have no variance.
double r_squared(std::span<const Gaze> preds, std::span<const Gaze> truths);

// Seeded shuffle of 0..n-1 dealt into k folds; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct AnovaResult {
  double f = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p = 1.0;
};

// One-way ANOVA. Requires >= 2 groups of >= 2 samples each. Identical group
// means give F = 0, p = 1; zero within-group variance with differing means
// throws UndefinedStatistic.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);
// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
double f_survival(double f, double d1, double d2);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n = 0;
  double mean_euclid_cm = 0.0;
  double rmse_cm = 0.0;
  double r2 = 0.0;
};

struct EvalResult {
  std::string model;
  std::size_t params = 0;
  std::size_t n = 0;
  double mean_euclid_cm = 0.0;
  double rmse_cm = 0.0;
  double r2 = 0.0;
  std::vector<FoldResult> folds;
};

EvalResult evaluate(std::span<const Gaze> preds, std::span<const Gaze> truths);

// model,params,n,mean_euclid_cm,rmse_cm,r2
std::string eval_csv(const std::vector<EvalResult>& rows);
// Model | Parameters | RMSE (cm) | R² table, plus mean Euclidean distance.
std::string eval_markdown(const std::vector<EvalResult>& rows);
std::string folds_csv(const std::vector<EvalResult>& rows);

}  // namespace eyeedge::eval
