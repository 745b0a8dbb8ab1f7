#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/nn/model.hpp"
#include "eyeedge/serve/heatmap.hpp"
#include "eyeedge/serve/transport.hpp"

namespace eyeedge::serve {

// Accept loop with one worker thread per connection.
class TcpService {
 public:
  TcpService(const std::string& host, std::uint16_t port);
  virtual ~TcpService();
  TcpService(const TcpService&) = delete;
  TcpService& operator=(const TcpService&) = delete;

  void start();
  // Closes the listener and every open connection, then joins the workers.
  void stop();
  std::uint16_t port() const { return listener_.port(); }

 protected:
  // Runs on the connection's worker thread; exceptions are swallowed.
  virtual void handle(Socket& sock) = 0;

 private:
  struct Conn {
    Socket sock;
    std::thread worker;
    std::atomic<bool> done{false};
  };
  void accept_loop();
  void reap(bool all);

  Listener listener_;
  std::thread acceptor_;
  std::mutex mu_;
  std::list<Conn> conns_;
  std::atomic<bool> stopping_{false};
  bool started_ = false;
};

struct CloudConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string registry_dir;  // models live at <registry_dir>/<name>/<version>.gzlm
  std::string log_path;      // optional CSV append log of received gaze points
};

// Cloud layer stand-in: serves model containers and collects gaze logs.
// Connections may send MODEL_REQ and LOG_UPSYNC in any order; BYE ends one.
class CloudStub : public TcpService {
 public:
  explicit CloudStub(CloudConfig config);
  ~CloudStub() override;

  std::vector<Gaze> points() const;
  HeatmapGrid heatmap(const GridSpec& spec) const;

 protected:
  void handle(Socket& sock) override;

 private:
  ModelBlob lookup(const ModelReq& req) const;
  CloudConfig config_;
  mutable std::mutex store_mu_;
  std::vector<Gaze> points_;
};

// Path of a registered model; rejects names that would leave the registry.
std::string registry_path(const std::string& registry_dir, const std::string& name, const std::string& version);
// Verifies the container checksum, then stores the bytes in the registry.
void register_model(const std::string& registry_dir, const std::string& name, const std::string& version,
                    const std::vector<std::uint8_t>& container);

struct ModelNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// MODEL_REQ round trip. The returned bytes have been checked against the
// announced CRC and the container's own trailer; a mismatch throws
// nn::IntegrityError, an unknown model ModelNotFound.
std::vector<std::uint8_t> model_fetch(const Endpoint& registry, const std::string& name, const std::string& version);

struct EdgeConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string model_name;                 // announced in HELLO_ACK
  std::shared_ptr<const nn::ModelGraph> model;
  std::uint8_t face_threshold = 24;
  bool cloud_enabled = false;             // upsync gaze logs to `cloud`
  Endpoint cloud;
  std::size_t upsync_batch = 50;
};

// Edge layer: HELLO/HELLO_ACK, then FRAME -> GAZE in order. Each connection
// owns its recurrent window state. Found gaze points are sent to the cloud
// stub in batches and when the session ends.
class EdgeServer : public TcpService {
 public:
  explicit EdgeServer(EdgeConfig config);
  ~EdgeServer() override;

 protected:
  void handle(Socket& sock) override;

 private:
  EdgeConfig config_;
};

}  // namespace eyeedge::serve
