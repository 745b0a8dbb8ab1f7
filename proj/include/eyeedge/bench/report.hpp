#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eyeedge/bench/energy.hpp"
#include "eyeedge/bench/resources.hpp"
#include "eyeedge/bench/timing.hpp"

namespace eyeedge::bench {

// One row per (model, variant); variant is baseline, quantised or pruned.
// `frames` is how many measured frames the row aggregates.
struct TimingRow {
  std::string model, variant;
  std::size_t frames = 0;
  double read_ms = 0, face_ms = 0, preproc_ms = 0, infer_ms = 0, total_ms = 0;
  friend bool operator==(const TimingRow&, const TimingRow&) = default;
};

struct ResourceRow {
  std::string model, variant;
  std::size_t frames = 0;
  double cpu_pct = 0, mem_mb = 0;
  friend bool operator==(const ResourceRow&, const ResourceRow&) = default;
};

// Per-frame energy.
struct EnergyRow {
  std::string model, variant;
  std::size_t frames = 0;
  double total_mwh = 0, additional_mwh = 0;
  friend bool operator==(const EnergyRow&, const EnergyRow&) = default;
};

bool is_variant(const std::string& v);

// CSV values are written with enough digits to parse back exactly.
std::string timing_csv(const std::vector<TimingRow>& rows);
std::string resources_csv(const std::vector<ResourceRow>& rows);
std::string energy_csv(const std::vector<EnergyRow>& rows);
std::vector<TimingRow> parse_timing_csv(const std::string& text);
std::vector<ResourceRow> parse_resources_csv(const std::string& text);
std::vector<EnergyRow> parse_energy_csv(const std::string& text);

std::string timing_markdown(const std::vector<TimingRow>& rows);
std::string resources_markdown(const std::vector<ResourceRow>& rows);
std::string energy_markdown(const std::vector<EnergyRow>& rows);

struct BenchReport {
  std::vector<TimingRow> timing;
  std::vector<ResourceRow> resources;
  std::vector<EnergyRow> energy;  // empty without power logs
  std::string notes;              // appended to the markdown files
};

// Writes bench_timing.csv/.md, bench_resources.csv/.md and, when there are
// energy rows, bench_energy.csv/.md. Returns the paths written.
std::vector<std::string> write_reports(const std::string& dir, const BenchReport& report);

}  // namespace eyeedge::bench
