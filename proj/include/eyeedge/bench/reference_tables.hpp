#pragma once

#include <array>
#include <string>
#include <vector>

namespace eyeedge::bench {

// Published per-frame measurements from four edge devices, kept for the
// arithmetic replays below. Order within the arrays: baseline, quantised, pruned.
struct DeviceTimingRow {
  const char* model;
  const char* device;
  double read_ms, face_ms, preproc_ms;
  std::array<double, 3> infer_ms;
  std::array<double, 3> total_ms;
};

struct DeviceEnergyRow {
  const char* model;
  const char* device;
  std::array<double, 3> total_mwh;
  std::array<double, 3> additional_mwh;
};

const std::vector<DeviceTimingRow>& device_timing_table();
const std::vector<DeviceEnergyRow>& device_energy_table();

struct EnergyReplay {
  std::string model, device, variant;
  double total_mwh, additional_mwh;
  double idle_mwh;        // total - additional
  double recomputed_mwh;  // additional_energy(total, idle)
};
std::vector<EnergyReplay> replay_energy_table();

struct TimingReplay {
  std::string model, device, variant;
  double stage_sum_ms;  // read + face + preproc + infer
  double total_ms;
  double fps;           // fps_of(total)
};
// The published totals are not always the stage sum; the gap is reported, not
// corrected.
std::vector<TimingReplay> replay_timing_table();

}  // namespace eyeedge::bench
