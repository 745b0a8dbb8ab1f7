#include "eyeedge/bench/reference_tables.hpp"

#include "eyeedge/bench/energy.hpp"
#include "eyeedge/bench/timing.hpp"

namespace eyeedge::bench {

namespace {
const char* const kVariants[3] = {"baseline", "quantised", "pruned"};
}

const std::vector<DeviceTimingRow>& device_timing_table() {
  static const std::vector<DeviceTimingRow> rows{
      {"cnn", "Odroid N2+", 4.04, 86.10, 1.96, {181.22, 56.24, 162.05}, {273.32, 148.34, 254.15}},
      {"cnn", "RPi 4", 6.69, 109.21, 2.66, {257.91, 67.84, 220.14}, {376.47, 186.4, 338.7}},
      {"cnn", "Intel NUC", 1.45, 35.59, 0.86, {84.89, 10.52, 75.24}, {122.79, 48.42, 113.14}},
      {"cnn", "Jetson AGX", 2.42, 53.90, 3.19, {102.82, 27.51, 89.91}, {162.33, 87.02, 149.42}},
      {"cnn_gru", "Odroid N2+", 4.03, 86.20, 1.97, {334.26, 223.85, 289.58}, {426.46, 315.73, 381.78}},
      {"cnn_gru", "RPi 4", 6.15, 108.85, 2.46, {433.74, 255.07, 370.61}, {551.2, 369.53, 488.07}},
      {"cnn_gru", "Intel NUC", 1.66, 35.42, 0.97, {114.38, 85.62, 96.33}, {152.43, 122.70, 134.38}},
      {"cnn_gru", "Jetson AGX", 2.36, 53.50, 3.08, {120.69, 113.53, 116.4}, {179.63, 182.18, 175.34}},
      {"cnn_lstm", "Odroid N2+", 4.04, 86.13, 1.94, {335.35, 224.83, 293.23}, {427.46, 316.93, 385.34}},
      {"cnn_lstm", "RPi 4", 6.15, 109.08, 2.46, {442.56, 257.39, 385.15}, {560.25, 371.85, 502.84}},
      {"cnn_lstm", "Intel NUC", 1.51, 34.52, 0.82, {130.48, 94.05, 109.40}, {167.33, 130.99, 146.25}},
      {"cnn_lstm", "Jetson AGX", 3.01, 56.58, 3.97, {136.99, 124.51, 128.33}, {200.55, 183.76, 191.89}},
  };
  return rows;
}

const std::vector<DeviceEnergyRow>& device_energy_table() {
  static const std::vector<DeviceEnergyRow> rows{
      {"cnn", "Odroid N2+", {0.6038, 0.1898, 0.5987}, {0.1917, 0.0548, 0.1770}},
      {"cnn", "RPi 4", {0.7053, 0.2120, 0.6894}, {0.2954, 0.0893, 0.2832}},
      {"cnn", "Intel NUC", {1.0727, 0.4138, 1.0369}, {0.8784, 0.3326, 0.8497}},
      {"cnn", "Jetson AGX", {0.7985, 0.2507, 0.6941}, {0.1970, 0.0549, 0.1520}},
      {"cnn_gru", "Odroid N2+", {1.0173, 0.3897, 0.9987}, {0.3380, 0.1095, 0.3015}},
      {"cnn_gru", "RPi 4", {1.1540, 0.4105, 1.1109}, {0.4850, 0.1659, 0.4649}},
      {"cnn_gru", "Intel NUC", {1.3309, 1.1137, 1.3322}, {1.0904, 0.9055, 1.0458}},
      {"cnn_gru", "Jetson AGX", {0.9333, 0.6926, 0.9690}, {0.2539, 0.2335, 0.2486}},
      {"cnn_lstm", "Odroid N2+", {1.0280, 0.3949, 0.9997}, {0.3414, 0.1104, 0.3215}},
      {"cnn_lstm", "RPi 4", {1.1674, 0.4172, 1.1245}, {0.4920, 0.1682, 0.4781}},
      {"cnn_lstm", "Intel NUC", {1.4897, 1.1791, 1.3888}, {1.2285, 0.9596, 1.1984}},
      {"cnn_lstm", "Jetson AGX", {0.9856, 0.8203, 1.3202}, {0.5882, 0.3005, 0.4247}},
  };
  return rows;
}

std::vector<EnergyReplay> replay_energy_table() {
  std::vector<EnergyReplay> out;
  for (const auto& r : device_energy_table()) {
    for (int v = 0; v < 3; ++v) {
      EnergyReplay e{r.model, r.device, kVariants[v], r.total_mwh[v], r.additional_mwh[v], 0.0, 0.0};
      e.idle_mwh = r.total_mwh[v] - r.additional_mwh[v];
      e.recomputed_mwh = additional_energy(e.total_mwh, e.idle_mwh);
      out.push_back(e);
    }
  }
  return out;
}

std::vector<TimingReplay> replay_timing_table() {
  std::vector<TimingReplay> out;
  for (const auto& r : device_timing_table()) {
    for (int v = 0; v < 3; ++v) {
      out.push_back({r.model, r.device, kVariants[v], r.read_ms + r.face_ms + r.preproc_ms + r.infer_ms[v],
                     r.total_ms[v], fps_of(r.total_ms[v])});
    }
  }
  return out;
}

}  // namespace eyeedge::bench
