#include "eyeedge/serve/wire.hpp"

#include <algorithm>
#include <functional>

#include "eyeedge/common/bytes.hpp"

namespace eyeedge::serve {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'Y', 'E', 'T'};

bool valid_type(std::uint8_t t) { return t >= 1 && t <= 9; }

Status read_status(ByteReader& r) {
  const std::uint8_t s = r.u8();
  if (s > static_cast<std::uint8_t>(Status::internal_error)) throw ProtocolError("unknown status code");
  return static_cast<Status>(s);
}

Message finish(MsgType type, ByteWriter& w) { return {type, w.take()}; }

template <typename T>
T parse(const Message& m, MsgType want, const std::function<T(ByteReader&)>& body) {
  if (m.type != want) {
    throw ProtocolError(std::string("expected ") + to_string(want) + ", got " + to_string(m.type));
  }
  try {
    ByteReader r(m.payload, Endian::big);
    T v = body(r);
    if (r.remaining() != 0) throw ProtocolError(std::string(to_string(want)) + " payload has trailing bytes");
    return v;
  } catch (const DecodeError& e) {
    throw ProtocolError(std::string(to_string(want)) + " payload: " + e.what());
  }
}

}  // namespace

const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::hello: return "HELLO";
    case MsgType::hello_ack: return "HELLO_ACK";
    case MsgType::frame: return "FRAME";
    case MsgType::gaze: return "GAZE";
    case MsgType::model_req: return "MODEL_REQ";
    case MsgType::model_blob: return "MODEL_BLOB";
    case MsgType::log_upsync: return "LOG_UPSYNC";
    case MsgType::log_ack: return "LOG_ACK";
    case MsgType::bye: return "BYE";
  }
  return "UNKNOWN";
}

const char* to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::no_face: return "no_face";
    case Status::not_found: return "not_found";
    case Status::bad_request: return "bad_request";
    case Status::protocol_error: return "protocol_error";
    case Status::integrity_error: return "integrity_error";
    case Status::version_mismatch: return "version_mismatch";
    case Status::internal_error: return "internal_error";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_message(const Message& m) {
  if (m.payload.size() > kMaxPayload) throw ProtocolError("payload exceeds the maximum message size");
  ByteWriter w(Endian::big);
  w.bytes(kMagic);
  w.u8(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(m.type));
  w.u32(static_cast<std::uint32_t>(m.payload.size()));
  w.bytes(m.payload);
  return w.take();
}

Header decode_header(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) throw ProtocolError("truncated message header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), header.begin())) throw ProtocolError("bad magic");
  ByteReader r(header.subspan(4, kHeaderSize - 4), Endian::big);
  const std::uint8_t version = r.u8();
  if (version != kProtocolVersion) throw ProtocolError("unsupported protocol version " + std::to_string(version));
  const std::uint8_t type = r.u8();
  if (!valid_type(type)) throw ProtocolError("unknown message type " + std::to_string(type));
  const std::uint32_t length = r.u32();
  if (length > kMaxPayload) throw ProtocolError("message length exceeds limit");
  return {static_cast<MsgType>(type), length};
}

Message decode_message(std::span<const std::uint8_t> bytes) {
  const Header h = decode_header(bytes);
  if (bytes.size() != kHeaderSize + h.length) throw ProtocolError("message length does not match payload");
  const auto p = bytes.subspan(kHeaderSize);
  return {h.type, {p.begin(), p.end()}};
}

Message encode(const Hello& v) {
  ByteWriter w(Endian::big);
  w.u8(v.version);
  w.u16(v.width);
  w.u16(v.height);
  w.u8(v.channels);
  w.str16(v.model);
  w.str16(v.client);
  return finish(MsgType::hello, w);
}

Message encode(const HelloAck& v) {
  ByteWriter w(Endian::big);
  w.u8(static_cast<std::uint8_t>(v.status));
  w.u8(v.version);
  w.str16(v.model);
  w.u32(v.window);
  w.str16(v.message);
  return finish(MsgType::hello_ack, w);
}

Message encode(const FrameMsg& v) {
  if (v.pixels.size() != static_cast<std::size_t>(v.width) * v.height * v.channels) {
    throw ProtocolError("frame pixel count does not match its dimensions");
  }
  ByteWriter w(Endian::big);
  w.u32(v.index);
  w.f64(v.pts_ms);
  w.u16(v.width);
  w.u16(v.height);
  w.u8(v.channels);
  w.bytes(v.pixels);
  return finish(MsgType::frame, w);
}

Message encode(const GazeResponse& v) {
  ByteWriter w(Endian::big);
  w.u32(v.index);
  w.u8(static_cast<std::uint8_t>(v.status));
  for (float f : {v.x_cm, v.y_cm, v.face_ms, v.preproc_ms, v.infer_ms, v.total_ms}) w.f32(f);
  return finish(MsgType::gaze, w);
}

Message encode(const ModelReq& v) {
  ByteWriter w(Endian::big);
  w.str16(v.name);
  w.str16(v.version);
  return finish(MsgType::model_req, w);
}

Message encode(const ModelBlob& v) {
  ByteWriter w(Endian::big);
  w.u8(static_cast<std::uint8_t>(v.status));
  w.str16(v.name);
  w.str16(v.version);
  w.u32(v.crc);
  w.u32(static_cast<std::uint32_t>(v.blob.size()));
  w.bytes(v.blob);
  return finish(MsgType::model_blob, w);
}

Message encode(const LogUpsync& v) {
  ByteWriter w(Endian::big);
  w.str16(v.session);
  w.u32(static_cast<std::uint32_t>(v.points.size()));
  for (const GazePoint& p : v.points) {
    w.u32(p.index);
    w.f32(p.x_cm);
    w.f32(p.y_cm);
  }
  return finish(MsgType::log_upsync, w);
}

Message encode(const LogAck& v) {
  ByteWriter w(Endian::big);
  w.u8(static_cast<std::uint8_t>(v.status));
  w.u32(v.accepted);
  return finish(MsgType::log_ack, w);
}

Message encode(const Bye& v) {
  ByteWriter w(Endian::big);
  w.u8(static_cast<std::uint8_t>(v.status));
  w.str16(v.reason);
  return finish(MsgType::bye, w);
}

Hello decode_hello(const Message& m) {
  return parse<Hello>(m, MsgType::hello, [](ByteReader& r) {
    Hello v;
    v.version = r.u8();
    v.width = r.u16();
    v.height = r.u16();
    v.channels = r.u8();
    v.model = r.str16();
    v.client = r.str16();
    return v;
  });
}

HelloAck decode_hello_ack(const Message& m) {
  return parse<HelloAck>(m, MsgType::hello_ack, [](ByteReader& r) {
    HelloAck v;
    v.status = read_status(r);
    v.version = r.u8();
    v.model = r.str16();
    v.window = r.u32();
    v.message = r.str16();
    return v;
  });
}

FrameMsg decode_frame(const Message& m) {
  return parse<FrameMsg>(m, MsgType::frame, [](ByteReader& r) {
    FrameMsg v;
    v.index = r.u32();
    v.pts_ms = r.f64();
    v.width = r.u16();
    v.height = r.u16();
    v.channels = r.u8();
    if (v.channels != 1 && v.channels != 3) throw ProtocolError("frame channels must be 1 or 3");
    const auto px = r.bytes(static_cast<std::size_t>(v.width) * v.height * v.channels);
    v.pixels.assign(px.begin(), px.end());
    return v;
  });
}

GazeResponse decode_gaze(const Message& m) {
  return parse<GazeResponse>(m, MsgType::gaze, [](ByteReader& r) {
    GazeResponse v;
    v.index = r.u32();
    v.status = read_status(r);
    v.x_cm = r.f32();
    v.y_cm = r.f32();
    v.face_ms = r.f32();
    v.preproc_ms = r.f32();
    v.infer_ms = r.f32();
    v.total_ms = r.f32();
    return v;
  });
}

ModelReq decode_model_req(const Message& m) {
  return parse<ModelReq>(m, MsgType::model_req, [](ByteReader& r) {
    ModelReq v;
    v.name = r.str16();
    v.version = r.str16();
    return v;
  });
}

ModelBlob decode_model_blob(const Message& m) {
  return parse<ModelBlob>(m, MsgType::model_blob, [](ByteReader& r) {
    ModelBlob v;
    v.status = read_status(r);
    v.name = r.str16();
    v.version = r.str16();
    v.crc = r.u32();
    const auto b = r.bytes(r.u32());
    v.blob.assign(b.begin(), b.end());
    return v;
  });
}

LogUpsync decode_log_upsync(const Message& m) {
  return parse<LogUpsync>(m, MsgType::log_upsync, [](ByteReader& r) {
    LogUpsync v;
    v.session = r.str16();
    const std::uint32_t n = r.u32();
    if (static_cast<std::size_t>(n) * 12 > r.remaining()) throw ProtocolError("LOG_UPSYNC count exceeds payload");
    v.points.resize(n);
    for (GazePoint& p : v.points) {
      p.index = r.u32();
      p.x_cm = r.f32();
      p.y_cm = r.f32();
    }
    return v;
  });
}

LogAck decode_log_ack(const Message& m) {
  return parse<LogAck>(m, MsgType::log_ack, [](ByteReader& r) {
    LogAck v;
    v.status = read_status(r);
    v.accepted = r.u32();
    return v;
  });
}

Bye decode_bye(const Message& m) {
  return parse<Bye>(m, MsgType::bye, [](ByteReader& r) {
    Bye v;
    v.status = read_status(r);
    v.reason = r.str16();
    return v;
  });
}

}  // namespace eyeedge::serve
