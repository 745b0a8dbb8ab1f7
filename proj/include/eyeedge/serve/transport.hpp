#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "eyeedge/serve/wire.hpp"

namespace eyeedge::serve {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Orderly close by the peer before a complete message arrived.
struct ConnectionClosed : TransportError {
  using TransportError::TransportError;
};

// Owning TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  // Wakes any thread blocked on this socket.
  void shutdown();

  void send_all(std::span<const std::uint8_t> bytes);
  void recv_exact(std::span<std::uint8_t> out);

 private:
  int fd_ = -1;
};

Socket connect_tcp(const std::string& host, std::uint16_t port);

class Listener {
 public:
  // Port 0 picks an ephemeral port; see port().
  Listener(const std::string& host, std::uint16_t port);
  Socket accept();
  std::uint16_t port() const { return port_; }
  void shutdown() { sock_.shutdown(); }

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

void write_message(Socket& s, const Message& m);
Message read_message(Socket& s);

// "host:port" with the host defaulting to 127.0.0.1 when omitted.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};
Endpoint parse_endpoint(const std::string& text);

}  // namespace eyeedge::serve
