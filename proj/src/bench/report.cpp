#include "eyeedge/bench/report.hpp"

#include <filesystem>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "eyeedge/common/bytes.hpp"

namespace eyeedge::bench {

namespace {

void check_name(const std::string& s) {
  if (s.empty() || s.find_first_of(",\n\r|") != std::string::npos) {
    throw std::invalid_argument("report name '" + s + "' is empty or contains a separator");
  }
}

std::ostringstream csv_stream() {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  return os;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& header,
                                               std::size_t columns) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::runtime_error("unexpected CSV header: " + line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() != columns) throw std::runtime_error("CSV row has " + std::to_string(cells.size()) + " cells");
    rows.push_back(std::move(cells));
  }
  return rows;
}

const char* const kTimingHeader = "model,variant,frames,read_ms,face_ms,preproc_ms,infer_ms,total_ms";
const char* const kResourceHeader = "model,variant,frames,cpu_pct,mem_mb";
const char* const kEnergyHeader = "model,variant,frames,total_mwh,additional_mwh";

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

bool is_variant(const std::string& v) { return v == "baseline" || v == "quantised" || v == "pruned"; }

std::string timing_csv(const std::vector<TimingRow>& rows) {
  auto os = csv_stream();
  os << kTimingHeader << '\n';
  for (const auto& r : rows) {
    check_name(r.model);
    check_name(r.variant);
    os << r.model << ',' << r.variant << ',' << r.frames << ',' << r.read_ms << ',' << r.face_ms << ','
       << r.preproc_ms << ',' << r.infer_ms << ',' << r.total_ms << '\n';
  }
  return os.str();
}

std::string resources_csv(const std::vector<ResourceRow>& rows) {
  auto os = csv_stream();
  os << kResourceHeader << '\n';
  for (const auto& r : rows) {
    check_name(r.model);
    check_name(r.variant);
    os << r.model << ',' << r.variant << ',' << r.frames << ',' << r.cpu_pct << ',' << r.mem_mb << '\n';
  }
  return os.str();
}

std::string energy_csv(const std::vector<EnergyRow>& rows) {
  auto os = csv_stream();
  os << kEnergyHeader << '\n';
  for (const auto& r : rows) {
    check_name(r.model);
    check_name(r.variant);
    os << r.model << ',' << r.variant << ',' << r.frames << ',' << r.total_mwh << ',' << r.additional_mwh << '\n';
  }
  return os.str();
}

std::vector<TimingRow> parse_timing_csv(const std::string& text) {
  std::vector<TimingRow> out;
  for (const auto& c : csv_rows(text, kTimingHeader, 8)) {
    out.push_back({c[0], c[1], std::stoul(c[2]), std::stod(c[3]), std::stod(c[4]), std::stod(c[5]), std::stod(c[6]),
                   std::stod(c[7])});
  }
  return out;
}

std::vector<ResourceRow> parse_resources_csv(const std::string& text) {
  std::vector<ResourceRow> out;
  for (const auto& c : csv_rows(text, kResourceHeader, 5)) {
    out.push_back({c[0], c[1], std::stoul(c[2]), std::stod(c[3]), std::stod(c[4])});
  }
  return out;
}

std::vector<EnergyRow> parse_energy_csv(const std::string& text) {
  std::vector<EnergyRow> out;
  for (const auto& c : csv_rows(text, kEnergyHeader, 5)) {
    out.push_back({c[0], c[1], std::stoul(c[2]), std::stod(c[3]), std::stod(c[4])});
  }
  return out;
}

std::string timing_markdown(const std::vector<TimingRow>& rows) {
  std::ostringstream os;
  os << "| Model | Variant | Frames | Fr. Read | Face | Preproc. | Infer. | Total | FPS |\n"
     << "|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << r.model << " | " << r.variant << " | " << r.frames << " | " << fixed(r.read_ms, 2) << " | "
       << fixed(r.face_ms, 2) << " | " << fixed(r.preproc_ms, 2) << " | " << fixed(r.infer_ms, 2) << " | "
       << fixed(r.total_ms, 2) << " | " << (r.total_ms > 0 ? fixed(fps_of(r.total_ms), 2) : "-") << " |\n";
  }
  return os.str();
}

std::string resources_markdown(const std::vector<ResourceRow>& rows) {
  std::ostringstream os;
  os << "| Model | Variant | Frames | CPU % | Memory (MB) |\n|---|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << r.model << " | " << r.variant << " | " << r.frames << " | " << fixed(r.cpu_pct, 2) << " | "
       << fixed(r.mem_mb, 2) << " |\n";
  }
  return os.str();
}

std::string energy_markdown(const std::vector<EnergyRow>& rows) {
  std::ostringstream os;
  os << "| Model | Variant | Frames | Total (mWh) | Additional (mWh) |\n|---|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << r.model << " | " << r.variant << " | " << r.frames << " | " << fixed(r.total_mwh, 4) << " | "
       << fixed(r.additional_mwh, 4) << " |\n";
  }
  return os.str();
}

std::vector<std::string> write_reports(const std::string& dir, const BenchReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(dir) / name).string();
    write_file_text(path, text);
    written.push_back(path);
  };
  const std::string notes = report.notes.empty() ? "" : "\n" + report.notes;
  put("bench_timing.csv", timing_csv(report.timing));
  put("bench_timing.md", "Per-frame stage times (ms)\n\n" + timing_markdown(report.timing) + notes);
  put("bench_resources.csv", resources_csv(report.resources));
  put("bench_resources.md", "Process CPU and resident memory\n\n" + resources_markdown(report.resources) + notes);
  if (!report.energy.empty()) {
    put("bench_energy.csv", energy_csv(report.energy));
    put("bench_energy.md", "Energy per frame\n\n" + energy_markdown(report.energy) + notes);
  }
  return written;
}

}  // namespace eyeedge::bench
