#pragma once

// Edge wire protocol, version 1. Every message is
//
//   "EYET" | u8 version | u8 type | u32 payload length | payload
//
// All integers and floats are big-endian. Strings are u16 length + bytes.
//
//   HELLO       u8 version, u16 width, u16 height, u8 channels, str model, str client
//   HELLO_ACK   u8 status, u8 version, str model, u32 window, str message
//   FRAME       u32 index, f64 pts_ms, u16 width, u16 height, u8 channels, pixels
//   GAZE        u32 index, u8 status, f32 x_cm, y_cm, face_ms, preproc_ms, infer_ms, total_ms
//   MODEL_REQ   str name, str version
//   MODEL_BLOB  u8 status, str name, str version, u32 crc32, u32 length, bytes
//   LOG_UPSYNC  str session, u32 count, count x (u32 index, f32 x_cm, f32 y_cm)
//   LOG_ACK     u8 status, u32 accepted
//   BYE         u8 status, str reason

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eyeedge::serve {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

enum class MsgType : std::uint8_t {
  hello = 1,
  hello_ack = 2,
  frame = 3,
  gaze = 4,
  model_req = 5,
  model_blob = 6,
  log_upsync = 7,
  log_ack = 8,
  bye = 9,
};
const char* to_string(MsgType t);

enum class Status : std::uint8_t {
  ok = 0,
  no_face = 1,
  not_found = 2,
  bad_request = 3,
  protocol_error = 4,
  integrity_error = 5,
  version_mismatch = 6,
  internal_error = 7,
};
const char* to_string(Status s);

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Message {
  MsgType type = MsgType::bye;
  std::vector<std::uint8_t> payload;
  friend bool operator==(const Message&, const Message&) = default;
};

struct Header {
  MsgType type;
  std::uint32_t length;
};

std::vector<std::uint8_t> encode_message(const Message& m);
// Validates magic, version, type and the length bound.
Header decode_header(std::span<const std::uint8_t> header);
// Decodes exactly one whole message; trailing bytes are an error.
Message decode_message(std::span<const std::uint8_t> bytes);

struct Hello {
  std::uint8_t version = kProtocolVersion;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t channels = 1;
  std::string model;
  std::string client;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct HelloAck {
  Status status = Status::ok;
  std::uint8_t version = kProtocolVersion;
  std::string model;
  std::uint32_t window = 1;
  std::string message;
  friend bool operator==(const HelloAck&, const HelloAck&) = default;
};

struct FrameMsg {
  std::uint32_t index = 0;
  double pts_ms = 0.0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t channels = 1;
  std::vector<std::uint8_t> pixels;
  friend bool operator==(const FrameMsg&, const FrameMsg&) = default;
};

struct GazeResponse {
  std::uint32_t index = 0;
  Status status = Status::ok;
  float x_cm = 0.0f;
  float y_cm = 0.0f;
  float face_ms = 0.0f;
  float preproc_ms = 0.0f;
  float infer_ms = 0.0f;
  float total_ms = 0.0f;
  friend bool operator==(const GazeResponse&, const GazeResponse&) = default;
};

struct ModelReq {
  std::string name;
  std::string version;
  friend bool operator==(const ModelReq&, const ModelReq&) = default;
};

struct ModelBlob {
  Status status = Status::ok;
  std::string name;
  std::string version;
  std::uint32_t crc = 0;
  std::vector<std::uint8_t> blob;
  friend bool operator==(const ModelBlob&, const ModelBlob&) = default;
};

struct GazePoint {
  std::uint32_t index = 0;
  float x_cm = 0.0f;
  float y_cm = 0.0f;
  friend bool operator==(const GazePoint&, const GazePoint&) = default;
};

struct LogUpsync {
  std::string session;
  std::vector<GazePoint> points;
  friend bool operator==(const LogUpsync&, const LogUpsync&) = default;
};

struct LogAck {
  Status status = Status::ok;
  std::uint32_t accepted = 0;
  friend bool operator==(const LogAck&, const LogAck&) = default;
};

struct Bye {
  Status status = Status::ok;
  std::string reason;
  friend bool operator==(const Bye&, const Bye&) = default;
};

Message encode(const Hello& v);
Message encode(const HelloAck& v);
Message encode(const FrameMsg& v);
Message encode(const GazeResponse& v);
Message encode(const ModelReq& v);
Message encode(const ModelBlob& v);
Message encode(const LogUpsync& v);
Message encode(const LogAck& v);
Message encode(const Bye& v);

// Each throws ProtocolError if the message type differs or the payload is
// malformed (truncated, trailing bytes, bad enum values).
Hello decode_hello(const Message& m);
HelloAck decode_hello_ack(const Message& m);
FrameMsg decode_frame(const Message& m);
GazeResponse decode_gaze(const Message& m);
ModelReq decode_model_req(const Message& m);
ModelBlob decode_model_blob(const Message& m);
LogUpsync decode_log_upsync(const Message& m);
LogAck decode_log_ack(const Message& m);
Bye decode_bye(const Message& m);

}  // namespace eyeedge::serve
