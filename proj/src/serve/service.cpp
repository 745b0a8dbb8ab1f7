#include "eyeedge/serve/service.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "eyeedge/common/bytes.hpp"
#include "eyeedge/nn/container.hpp"
#include "eyeedge/pipeline/preprocess.hpp"

namespace eyeedge::serve {

namespace fs = std::filesystem;

TcpService::TcpService(const std::string& host, std::uint16_t port) : listener_(host, port) {}

TcpService::~TcpService() { stop(); }

void TcpService::start() {
  if (started_) return;
  started_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpService::accept_loop() {
  while (!stopping_) {
    Socket s;
    try {
      s = listener_.accept();
    } catch (const TransportError&) {
      if (stopping_) return;
      continue;
    }
    std::lock_guard lock(mu_);
    if (stopping_) return;
    reap(false);
    Conn& c = conns_.emplace_back();
    c.sock = std::move(s);
    c.worker = std::thread([this, &c] {
      try {
        handle(c.sock);
      } catch (const std::exception&) {
      }
      c.sock.shutdown();
      c.done = true;
    });
  }
}

void TcpService::reap(bool all) {
  for (auto it = conns_.begin(); it != conns_.end();) {
    if (all || it->done) {
      if (all) it->sock.shutdown();
      if (it->worker.joinable()) it->worker.join();
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpService::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(mu_);
  reap(true);
}

namespace {

void send_bye(Socket& s, Status status, const std::string& reason) {
  try {
    write_message(s, encode(Bye{status, reason}));
  } catch (const TransportError&) {
  }
}

bool safe_component(const std::string& s) {
  return !s.empty() && s != "." && s != ".." && s.find('/') == std::string::npos &&
         s.find('\\') == std::string::npos;
}

}  // namespace

std::string registry_path(const std::string& registry_dir, const std::string& name, const std::string& version) {
  if (!safe_component(name) || !safe_component(version)) {
    throw std::invalid_argument("model name and version must be plain path components");
  }
  return (fs::path(registry_dir) / name / (version + ".gzlm")).string();
}

void register_model(const std::string& registry_dir, const std::string& name, const std::string& version,
                    const std::vector<std::uint8_t>& container) {
  if (!nn::verify_container(container)) throw nn::IntegrityError("refusing to register a corrupt model container");
  const std::string path = registry_path(registry_dir, name, version);
  fs::create_directories(fs::path(path).parent_path());
  write_file_bytes(path, container);
}

CloudStub::CloudStub(CloudConfig config) : TcpService(config.host, config.port), config_(std::move(config)) {}

CloudStub::~CloudStub() { stop(); }

std::vector<Gaze> CloudStub::points() const {
  std::lock_guard lock(store_mu_);
  return points_;
}

HeatmapGrid CloudStub::heatmap(const GridSpec& spec) const {
  std::lock_guard lock(store_mu_);
  return heatmap_accumulate(points_, spec);
}

ModelBlob CloudStub::lookup(const ModelReq& req) const {
  ModelBlob blob;
  blob.name = req.name;
  blob.version = req.version;
  std::string path;
  try {
    path = registry_path(config_.registry_dir, req.name, req.version);
  } catch (const std::invalid_argument&) {
    blob.status = Status::bad_request;
    return blob;
  }
  if (!fs::is_regular_file(path)) {
    blob.status = Status::not_found;
    return blob;
  }
  blob.blob = read_file_bytes(path);
  blob.crc = blob.blob.size() >= 4 ? nn::container_checksum(blob.blob) : 0;
  return blob;
}

void CloudStub::handle(Socket& sock) {
  for (;;) {
    Message m;
    try {
      m = read_message(sock);
    } catch (const ProtocolError& e) {
      send_bye(sock, Status::protocol_error, e.what());
      return;
    } catch (const TransportError&) {
      return;
    }
    try {
      switch (m.type) {
        case MsgType::model_req:
          write_message(sock, encode(lookup(decode_model_req(m))));
          break;
        case MsgType::log_upsync: {
          const LogUpsync up = decode_log_upsync(m);
          {
            std::lock_guard lock(store_mu_);
            for (const GazePoint& p : up.points) points_.push_back({p.x_cm, p.y_cm});
            if (!config_.log_path.empty()) {
              std::ofstream log(config_.log_path, std::ios::app);
              for (const GazePoint& p : up.points) log << up.session << ',' << p.index << ',' << p.x_cm << ',' << p.y_cm << '\n';
            }
          }
          write_message(sock, encode(LogAck{Status::ok, static_cast<std::uint32_t>(up.points.size())}));
          break;
        }
        case MsgType::bye:
          send_bye(sock, Status::ok, "bye");
          return;
        default:
          send_bye(sock, Status::protocol_error, std::string("unexpected ") + to_string(m.type));
          return;
      }
    } catch (const ProtocolError& e) {
      send_bye(sock, Status::protocol_error, e.what());
      return;
    }
  }
}

std::vector<std::uint8_t> model_fetch(const Endpoint& registry, const std::string& name, const std::string& version) {
  Socket s = connect_tcp(registry.host, registry.port);
  write_message(s, encode(ModelReq{name, version}));
  const ModelBlob blob = decode_model_blob(read_message(s));
  write_message(s, encode(Bye{Status::ok, "done"}));
  if (blob.status == Status::not_found) throw ModelNotFound("model " + name + "/" + version + " not found");
  if (blob.status != Status::ok) throw std::runtime_error(std::string("model fetch failed: ") + to_string(blob.status));
  if (blob.blob.size() < 4 || blob.crc != nn::container_checksum(blob.blob) || !nn::verify_container(blob.blob)) {
    throw nn::IntegrityError("model " + name + "/" + version + " failed its checksum");
  }
  return blob.blob;
}

EdgeServer::EdgeServer(EdgeConfig config) : TcpService(config.host, config.port), config_(std::move(config)) {
  if (!config_.model) throw std::invalid_argument("edge server needs a model");
}

EdgeServer::~EdgeServer() { stop(); }

namespace {

class Uplink {
 public:
  Uplink(const EdgeConfig& cfg, std::string session) : cfg_(cfg), session_(std::move(session)) {}
  ~Uplink() {
    try {
      flush();
      if (sock_.valid()) write_message(sock_, encode(Bye{Status::ok, "session end"}));
    } catch (const std::exception& e) {
      std::cerr << "gaze log upsync failed: " << e.what() << '\n';
    }
  }

  void add(std::uint32_t index, const Gaze& g) {
    if (!cfg_.cloud_enabled) return;
    pending_.push_back({index, static_cast<float>(g.x), static_cast<float>(g.y)});
    if (pending_.size() >= cfg_.upsync_batch) flush();
  }

  void flush() {
    if (pending_.empty()) return;
    if (!sock_.valid()) sock_ = connect_tcp(cfg_.cloud.host, cfg_.cloud.port);
    write_message(sock_, encode(LogUpsync{session_, pending_}));
    const LogAck ack = decode_log_ack(read_message(sock_));
    if (ack.status != Status::ok || ack.accepted != pending_.size()) throw ProtocolError("cloud rejected gaze log");
    pending_.clear();
  }

 private:
  const EdgeConfig& cfg_;
  std::string session_;
  Socket sock_;
  std::vector<GazePoint> pending_;
};

}  // namespace

void EdgeServer::handle(Socket& sock) {
  Hello hello;
  try {
    const Message first = read_message(sock);
    if (first.type != MsgType::hello) {
      send_bye(sock, Status::protocol_error, "expected HELLO");
      return;
    }
    hello = decode_hello(first);
  } catch (const ProtocolError& e) {
    send_bye(sock, Status::protocol_error, e.what());
    return;
  }

  HelloAck ack;
  ack.model = config_.model_name;
  ack.window = static_cast<std::uint32_t>(config_.model->window);
  if (hello.version != kProtocolVersion) {
    ack.status = Status::version_mismatch;
    ack.message = "server speaks protocol version " + std::to_string(kProtocolVersion);
  } else if (!hello.model.empty() && hello.model != config_.model_name) {
    ack.status = Status::not_found;
    ack.message = "this edge serves " + config_.model_name;
  } else if (hello.channels != 1 && hello.channels != 3) {
    ack.status = Status::bad_request;
    ack.message = "frames must have 1 or 3 channels";
  }
  write_message(sock, encode(ack));
  if (ack.status != Status::ok) return;

  pipeline::GazeEstimator estimator(*config_.model,
                                    std::make_shared<pipeline::BrightRegionDetector>(config_.face_threshold));
  Uplink uplink(config_, hello.client.empty() ? "edge" : hello.client);
  for (;;) {
    Message m;
    try {
      m = read_message(sock);
    } catch (const ProtocolError& e) {
      send_bye(sock, Status::protocol_error, e.what());
      return;
    }
    if (m.type == MsgType::bye) {
      send_bye(sock, Status::ok, "bye");
      return;
    }
    if (m.type != MsgType::frame) {
      send_bye(sock, Status::protocol_error, std::string("unexpected ") + to_string(m.type));
      return;
    }
    FrameMsg f;
    try {
      f = decode_frame(m);
    } catch (const ProtocolError& e) {
      send_bye(sock, Status::protocol_error, e.what());
      return;
    }
    if (f.width != hello.width || f.height != hello.height || f.channels != hello.channels) {
      send_bye(sock, Status::bad_request, "frame format differs from HELLO");
      return;
    }
    pipeline::Image img(f.width, f.height, f.channels);
    img.data = std::move(f.pixels);

    GazeResponse r;
    r.index = f.index;
    pipeline::Estimate est;
    try {
      est = estimator.process(img);
    } catch (const std::exception& e) {
      send_bye(sock, Status::internal_error, e.what());
      return;
    }
    if (est.gaze) {
      r.x_cm = static_cast<float>(est.gaze->x);
      r.y_cm = static_cast<float>(est.gaze->y);
    } else {
      r.status = Status::no_face;
      r.x_cm = r.y_cm = NAN;
    }
    r.face_ms = static_cast<float>(est.timing.face_ms);
    r.preproc_ms = static_cast<float>(est.timing.preprocess_ms);
    r.infer_ms = static_cast<float>(est.timing.inference_ms);
    r.total_ms = std::max(static_cast<float>(est.timing.total_ms), r.face_ms + r.preproc_ms + r.infer_ms);
    write_message(sock, encode(r));
    if (est.gaze) {
      try {
        uplink.add(f.index, *est.gaze);
      } catch (const std::exception& e) {
        std::cerr << "gaze log upsync failed: " << e.what() << '\n';
      }
    }
  }
}

}  // namespace eyeedge::serve
