// Transport abstractions for the trigger chain: an ordered datagram
// channel (the UDP leg) and an ordered byte stream (the serial leg).
// In-memory loopbacks are the test default; UDP and file-descriptor
// bindings provide the same interface over real sockets and pipes/ttys.
#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace hbci {

class DatagramChannel {
 public:
  virtual ~DatagramChannel() = default;
  virtual void send(std::span<const std::uint8_t> payload) = 0;
  /// Next datagram, or nullopt when none arrives within the timeout.
  virtual std::optional<std::vector<std::uint8_t>> recv(
      std::chrono::milliseconds timeout = std::chrono::milliseconds(0)) = 0;
};

class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write(std::span<const std::uint8_t> data) = 0;
  /// Drain whatever is currently available.
  virtual std::vector<std::uint8_t> read_available() = 0;
};

/// FIFO of datagrams in memory; preserves order, never drops.
class LoopbackDatagramChannel : public DatagramChannel {
 public:
  void send(std::span<const std::uint8_t> payload) override;
  std::optional<std::vector<std::uint8_t>> recv(
      std::chrono::milliseconds timeout = std::chrono::milliseconds(0)) override;
  std::size_t pending() const { return queue_.size(); }

 private:
  std::deque<std::vector<std::uint8_t>> queue_;
};

/// FIFO of bytes in memory.
class LoopbackByteStream : public ByteStream {
 public:
  void write(std::span<const std::uint8_t> data) override;
  std::vector<std::uint8_t> read_available() override;

 private:
  std::vector<std::uint8_t> buffer_;
};

/// One datagram per UDP packet. The receiving side binds a local port;
/// the sending side targets host:port. Construction throws
/// std::runtime_error on socket errors.
class UdpDatagramChannel : public DatagramChannel {
 public:
  /// Bind a receiver on 127.0.0.1:port (port 0 picks a free port).
  static std::unique_ptr<UdpDatagramChannel> bind(std::uint16_t port);
  /// Connect a sender towards 127.0.0.1:port.
  static std::unique_ptr<UdpDatagramChannel> connect(std::uint16_t port);

  ~UdpDatagramChannel() override;
  void send(std::span<const std::uint8_t> payload) override;
  std::optional<std::vector<std::uint8_t>> recv(
      std::chrono::milliseconds timeout = std::chrono::milliseconds(0)) override;

  std::uint16_t local_port() const { return port_; }

 private:
  explicit UdpDatagramChannel(int fd, std::uint16_t port)
      : fd_(fd), port_(port) {}
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Byte stream over a pair of file descriptors (a pipe in tests; a serial
/// tty works the same way). Takes ownership and closes on destruction;
/// pass -1 for an unused direction.
class FdByteStream : public ByteStream {
 public:
  FdByteStream(int read_fd, int write_fd);
  ~FdByteStream() override;
  void write(std::span<const std::uint8_t> data) override;
  std::vector<std::uint8_t> read_available() override;

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
};

}  // namespace hbci
