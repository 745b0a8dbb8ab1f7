#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eyeedge/pipeline/image.hpp"
#include "eyeedge/pipeline/recording.hpp"
#include "eyeedge/serve/transport.hpp"

namespace eyeedge::serve {

struct StreamOptions {
  double fps = 20.0;       // <= 0 sends as fast as responses arrive
  std::string model;       // empty accepts whatever the edge serves
  std::string client = "phone-sim";
};

struct Transcript {
  HelloAck ack;
  std::vector<GazeResponse> responses;
  std::vector<double> rtt_ms;   // one per response
  std::size_t frames_sent = 0;
  double wall_ms = 0.0;
  std::optional<std::string> error;  // set when the stream ended early

  std::size_t missing_face() const;
};

// Streams frames to an edge server, one request in flight, frame i sent no
// earlier than start + i/fps. A lost connection leaves a partial transcript
// with `error` set instead of throwing.
Transcript client_stream(const std::vector<pipeline::Image>& frames, const Endpoint& server,
                         const StreamOptions& options = {});
// All frames of a recording, in manifest order.
std::vector<pipeline::Image> load_frames(const pipeline::Recording& rec);

std::string transcript_csv(const Transcript& t);

}  // namespace eyeedge::serve
