#include "eyeedge/bench/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eyeedge/common/bytes.hpp"

namespace eyeedge::bench {

namespace {

constexpr double kJoulesPerMwh = 3.6;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw PowerLogError("power log row " + std::to_string(row) + ": bad number '" + cell + "'");
  }
}

double power_at(std::span<const PowerSample> s, double t) {
  auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const PowerSample& p) { return v < p.t_s; });
  if (it == s.begin()) return s.front().watts();
  if (it == s.end()) return s.back().watts();
  const PowerSample& b = *it;
  const PowerSample& a = *(it - 1);
  const double f = (t - a.t_s) / (b.t_s - a.t_s);
  return a.watts() + f * (b.watts() - a.watts());
}

}  // namespace

PowerLog parse_power_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t_s,volts,amps") {
    throw PowerLogError("power log must start with the header t_s,volts,amps");
  }
  PowerLog log;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    ++row;
    std::istringstream cells(line);
    std::string a, b, c, extra;
    if (!std::getline(cells, a, ',') || !std::getline(cells, b, ',') || !std::getline(cells, c, ',') ||
        std::getline(cells, extra, ',')) {
      throw PowerLogError("power log row " + std::to_string(row) + ": expected 3 columns");
    }
    PowerSample s{parse_number(trim(a), row), parse_number(trim(b), row), parse_number(trim(c), row)};
    if (!log.samples.empty() && !(s.t_s > log.samples.back().t_s)) {
      throw PowerLogError("power log row " + std::to_string(row) + ": time does not increase");
    }
    if (s.t_s < 0 || s.volts < 0 || s.amps < 0) log.negative_rows.push_back(row);
    log.samples.push_back(s);
  }
  if (log.samples.empty()) throw PowerLogError("power log has no samples");
  return log;
}

PowerLog ingest_power_log(const std::string& path) { return parse_power_csv(read_file_text(path)); }

double energy_mwh(std::span<const PowerSample> s, double t0, double t1) {
  if (s.empty()) throw std::invalid_argument("no power samples");
  if (!(t1 >= t0)) throw std::invalid_argument("energy interval is reversed");
  if (t0 < s.front().t_s || t1 > s.back().t_s) throw std::out_of_range("energy interval exceeds the power log");
  double joules = 0.0;
  double t = t0;
  double p = power_at(s, t0);
  for (const PowerSample& x : s) {
    if (x.t_s <= t0) continue;
    if (x.t_s >= t1) break;
    joules += 0.5 * (p + x.watts()) * (x.t_s - t);
    t = x.t_s;
    p = x.watts();
  }
  joules += 0.5 * (p + power_at(s, t1)) * (t1 - t);
  return joules / kJoulesPerMwh;
}

double idle_energy_mwh(std::span<const PowerSample> idle, double duration_s) {
  if (idle.size() < 2) throw std::invalid_argument("idle log needs at least two samples");
  const double span_s = idle.back().t_s - idle.front().t_s;
  return energy_mwh(idle, idle.front().t_s, idle.back().t_s) / span_s * duration_s;
}

double additional_energy(double total_mwh, double idle_mwh) { return total_mwh - idle_mwh; }

EnergySummary summarize_energy(std::span<const PowerSample> run, double t0, double t1,
                               std::span<const PowerSample> idle) {
  EnergySummary e;
  e.total_mwh = energy_mwh(run, t0, t1);
  e.idle_mwh = idle_energy_mwh(idle, t1 - t0);
  e.additional_mwh = additional_energy(e.total_mwh, e.idle_mwh);
  return e;
}

EnergySummary per_frame(const EnergySummary& run, std::size_t frames) {
  if (frames == 0) throw std::invalid_argument("no frames to share the energy over");
  const double n = static_cast<double>(frames);
  return {run.total_mwh / n, run.idle_mwh / n, run.additional_mwh / n};
}

}  // namespace eyeedge::bench
