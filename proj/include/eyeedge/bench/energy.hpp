#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eyeedge::bench {

struct PowerSample {
  double t_s = 0.0;
  double volts = 0.0;
  double amps = 0.0;
  double watts() const { return volts * amps; }
};

struct PowerLogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PowerLog {
  std::vector<PowerSample> samples;
  std::vector<std::size_t> negative_rows;  // 1-based data rows with a negative reading
};

// CSV with header `t_s,volts,amps`. Time must strictly increase; an empty
// log is an error. Negative readings are kept and listed.
PowerLog parse_power_csv(std::string_view text);
PowerLog ingest_power_log(const std::string& path);

// Trapezoidal integral of V*I over [t0, t1], in mWh. Power is linear between
// samples, so the bounds may fall between them; they must lie inside the log.
double energy_mwh(std::span<const PowerSample> samples, double t0, double t1);

// Idle power averaged over the whole idle log, scaled to `duration_s`.
double idle_energy_mwh(std::span<const PowerSample> idle, double duration_s);

struct EnergySummary {
  double total_mwh = 0.0;
  double idle_mwh = 0.0;
  double additional_mwh = 0.0;
};

double additional_energy(double total_mwh, double idle_mwh);

// Energy of [t0, t1] in the run log against an idle log of the same device.
EnergySummary summarize_energy(std::span<const PowerSample> run, double t0, double t1,
                               std::span<const PowerSample> idle);
// Whole-run energy divided evenly over its frames.
EnergySummary per_frame(const EnergySummary& run, std::size_t frames);

}  // namespace eyeedge::bench
