#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <sys/types.h>

namespace eyeedge::bench {

struct ResourceSample {
  double t_s = 0.0;      // seconds since the sampler started
  double cpu_pct = 0.0;  // over the interval, summed across cores
  double mem_mb = 0.0;   // resident set
};

struct ProcessSnapshot {
  double cpu_s = 0.0;  // user + system time consumed so far
  double rss_mb = 0.0;
};

// Reads a process's cumulative CPU time and resident memory.
// Returns nothing once the process is gone.
class ProcessProbe {
 public:
  virtual ~ProcessProbe() = default;
  virtual std::optional<ProcessSnapshot> read() = 0;
};

// /proc/<pid>/stat and /proc/<pid>/statm.
class ProcfsProbe : public ProcessProbe {
 public:
  explicit ProcfsProbe(pid_t pid);
  std::optional<ProcessSnapshot> read() override;

 private:
  pid_t pid_;
  double tick_s_;
  double page_mb_;
};

// Background sampler. Every interval it records the CPU share used since the
// previous sample and the current resident memory. The measured workload never
// waits on it. When the probed process disappears the series is closed.
class ResourceSampler {
 public:
  ResourceSampler(std::unique_ptr<ProcessProbe> probe, double interval_s = 1.0);
  explicit ResourceSampler(pid_t pid, double interval_s = 1.0);
  ~ResourceSampler();
  ResourceSampler(const ResourceSampler&) = delete;
  ResourceSampler& operator=(const ResourceSampler&) = delete;

  void start();
  // Records a last partial-interval sample when at least a tenth of an
  // interval has passed since the previous one, or when there is none yet.
  void stop();
  std::vector<ResourceSample> samples() const;
  bool target_exited() const;

 private:
  void run();
  bool take(double now_s, bool final);

  std::unique_ptr<ProcessProbe> probe_;
  double interval_s_;
  std::thread worker_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool stop_requested_ = false;
  bool running_ = false;
  bool exited_ = false;
  std::vector<ResourceSample> samples_;
  std::optional<ProcessSnapshot> last_;
  double last_t_ = 0.0;
  double origin_ = 0.0;
};

// Averages over a series; zeros when empty.
ResourceSample mean_resources(const std::vector<ResourceSample>& samples);

}  // namespace eyeedge::bench
