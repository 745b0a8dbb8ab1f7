#include "eyeedge/bench/resources.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>

namespace eyeedge::bench {

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

ProcfsProbe::ProcfsProbe(pid_t pid)
    : pid_(pid),
      tick_s_(1.0 / static_cast<double>(sysconf(_SC_CLK_TCK))),
      page_mb_(static_cast<double>(sysconf(_SC_PAGESIZE)) / (1024.0 * 1024.0)) {}

std::optional<ProcessSnapshot> ProcfsProbe::read() {
  const std::string base = "/proc/" + std::to_string(pid_);
  std::ifstream stat(base + "/stat");
  std::string line;
  if (!stat || !std::getline(stat, line)) return std::nullopt;
  // The command name is parenthesised and may contain spaces.
  const auto close = line.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream fields(line.substr(close + 2));
  std::string state;
  fields >> state;
  if (state == "Z" || state == "X") return std::nullopt;
  // Fields 4..13 precede utime (14) and stime (15).
  std::string skip;
  for (int i = 0; i < 10; ++i) fields >> skip;
  unsigned long long utime = 0, stime = 0;
  if (!(fields >> utime >> stime)) return std::nullopt;

  std::ifstream statm(base + "/statm");
  unsigned long long size = 0, resident = 0;
  if (!(statm >> size >> resident)) return std::nullopt;
  return ProcessSnapshot{static_cast<double>(utime + stime) * tick_s_, static_cast<double>(resident) * page_mb_};
}

ResourceSampler::ResourceSampler(std::unique_ptr<ProcessProbe> probe, double interval_s)
    : probe_(std::move(probe)), interval_s_(interval_s) {
  if (!(interval_s > 0.0)) throw std::invalid_argument("sampling interval must be positive");
}

ResourceSampler::ResourceSampler(pid_t pid, double interval_s)
    : ResourceSampler(std::make_unique<ProcfsProbe>(pid), interval_s) {}

ResourceSampler::~ResourceSampler() { stop(); }

void ResourceSampler::start() {
  std::lock_guard lock(mu_);
  if (running_) return;
  running_ = true;
  stop_requested_ = false;
  samples_.clear();
  exited_ = false;
  origin_ = now_s();
  last_t_ = origin_;
  last_ = probe_->read();
  if (!last_) exited_ = true;
  worker_ = std::thread([this] { run(); });
}

bool ResourceSampler::take(double t, bool final) {
  const double dt = t - last_t_;
  // A run shorter than a tenth of an interval still gets one sample.
  if (final && dt < 0.1 * interval_s_ && !samples_.empty()) return true;
  const auto snap = probe_->read();
  if (!snap) {
    exited_ = true;
    return false;
  }
  ResourceSample s;
  s.t_s = t - origin_;
  s.cpu_pct = dt > 0 ? std::max(0.0, 100.0 * (snap->cpu_s - last_->cpu_s) / dt) : 0.0;
  s.mem_mb = snap->rss_mb;
  samples_.push_back(s);
  last_ = snap;
  last_t_ = t;
  return true;
}

void ResourceSampler::run() {
  std::unique_lock lock(mu_);
  if (exited_) return;
  auto next = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                      std::chrono::duration<double>(interval_s_));
  for (;;) {
    if (cv_.wait_until(lock, next, [this] { return stop_requested_; })) {
      take(now_s(), true);
      return;
    }
    if (!take(now_s(), false)) return;
    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(interval_s_));
  }
}

void ResourceSampler::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    stop_requested_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  std::lock_guard lock(mu_);
  running_ = false;
}

std::vector<ResourceSample> ResourceSampler::samples() const {
  std::lock_guard lock(mu_);
  return samples_;
}

bool ResourceSampler::target_exited() const {
  std::lock_guard lock(mu_);
  return exited_;
}

ResourceSample mean_resources(const std::vector<ResourceSample>& samples) {
  ResourceSample m;
  if (samples.empty()) return m;
  for (const auto& s : samples) {
    m.cpu_pct += s.cpu_pct;
    m.mem_mb += s.mem_mb;
  }
  m.cpu_pct /= static_cast<double>(samples.size());
  m.mem_mb /= static_cast<double>(samples.size());
  m.t_s = samples.back().t_s;
  return m;
}

}  // namespace eyeedge::bench
