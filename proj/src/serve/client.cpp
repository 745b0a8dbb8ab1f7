#include "eyeedge/serve/client.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

namespace eyeedge::serve {

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

std::size_t Transcript::missing_face() const {
  std::size_t n = 0;
  for (const auto& r : responses) n += r.status == Status::no_face;
  return n;
}

Transcript client_stream(const std::vector<pipeline::Image>& frames, const Endpoint& server,
                         const StreamOptions& options) {
  Transcript t;
  const auto start = Clock::now();
  try {
    Socket s = connect_tcp(server.host, server.port);
    Hello hello;
    if (!frames.empty()) {
      hello.width = static_cast<std::uint16_t>(frames.front().width);
      hello.height = static_cast<std::uint16_t>(frames.front().height);
      hello.channels = static_cast<std::uint8_t>(frames.front().channels);
    }
    hello.model = options.model;
    hello.client = options.client;
    write_message(s, encode(hello));
    const Message first = read_message(s);
    if (first.type == MsgType::bye) {
      t.error = "rejected: " + decode_bye(first).reason;
      t.wall_ms = ms_since(start);
      return t;
    }
    t.ack = decode_hello_ack(first);
    if (t.ack.status != Status::ok) {
      t.error = std::string("handshake refused: ") + to_string(t.ack.status) + " " + t.ack.message;
      t.wall_ms = ms_since(start);
      return t;
    }

    const auto period = options.fps > 0 ? std::chrono::duration<double>(1.0 / options.fps)
                                        : std::chrono::duration<double>(0);
    const auto stream_start = Clock::now();
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::this_thread::sleep_until(stream_start +
                                    std::chrono::duration_cast<Clock::duration>(period * static_cast<double>(i)));
      FrameMsg f;
      f.index = static_cast<std::uint32_t>(i);
      f.pts_ms = std::chrono::duration<double, std::milli>(period * static_cast<double>(i)).count();
      f.width = static_cast<std::uint16_t>(frames[i].width);
      f.height = static_cast<std::uint16_t>(frames[i].height);
      f.channels = static_cast<std::uint8_t>(frames[i].channels);
      f.pixels = frames[i].data;
      const auto sent = Clock::now();
      write_message(s, encode(f));
      ++t.frames_sent;
      const Message reply = read_message(s);
      if (reply.type == MsgType::bye) {
        const Bye b = decode_bye(reply);
        t.error = std::string("server closed: ") + to_string(b.status) + " " + b.reason;
        t.wall_ms = ms_since(start);
        return t;
      }
      t.responses.push_back(decode_gaze(reply));
      t.rtt_ms.push_back(ms_since(sent));
    }
    write_message(s, encode(Bye{Status::ok, "done"}));
    try {
      read_message(s);
    } catch (const TransportError&) {
    }
  } catch (const std::exception& e) {
    t.error = e.what();
  }
  t.wall_ms = ms_since(start);
  return t;
}

std::vector<pipeline::Image> load_frames(const pipeline::Recording& rec) {
  std::vector<pipeline::Image> out;
  out.reserve(rec.frames.size());
  for (std::size_t i = 0; i < rec.frames.size(); ++i) out.push_back(rec.load_frame(i));
  return out;
}

std::string transcript_csv(const Transcript& t) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<float>::max_digits10);
  os << "frame_idx,status,x_cm,y_cm,face_ms,preproc_ms,infer_ms,total_ms,rtt_ms\n";
  for (std::size_t i = 0; i < t.responses.size(); ++i) {
    const auto& r = t.responses[i];
    os << r.index << ',' << to_string(r.status) << ',' << r.x_cm << ',' << r.y_cm << ',' << r.face_ms << ','
       << r.preproc_ms << ',' << r.infer_ms << ',' << r.total_ms << ',' << t.rtt_ms[i] << '\n';
  }
  return os.str();
}

}  // namespace eyeedge::serve
