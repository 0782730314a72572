#include "hbci/transport.hpp"

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace hbci {

void LoopbackDatagramChannel::send(std::span<const std::uint8_t> payload) {
  queue_.emplace_back(payload.begin(), payload.end());
}

std::optional<std::vector<std::uint8_t>> LoopbackDatagramChannel::recv(
    std::chrono::milliseconds /*timeout*/) {
  if (queue_.empty()) return std::nullopt;
  std::vector<std::uint8_t> front = std::move(queue_.front());
  queue_.pop_front();
  return front;
}

void LoopbackByteStream::write(std::span<const std::uint8_t> data) {
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

std::vector<std::uint8_t> LoopbackByteStream::read_available() {
  std::vector<std::uint8_t> out;
  out.swap(buffer_);
  return out;
}

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

int make_udp_socket() {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw_errno("socket");
  return fd;
}

sockaddr_in localhost_addr(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

}  // namespace

std::unique_ptr<UdpDatagramChannel> UdpDatagramChannel::bind(
    std::uint16_t port) {
  const int fd = make_udp_socket();
  sockaddr_in addr = localhost_addr(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw_errno("bind");
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    throw_errno("getsockname");
  }
  return std::unique_ptr<UdpDatagramChannel>(
      new UdpDatagramChannel(fd, ntohs(addr.sin_port)));
}

std::unique_ptr<UdpDatagramChannel> UdpDatagramChannel::connect(
    std::uint16_t port) {
  const int fd = make_udp_socket();
  sockaddr_in addr = localhost_addr(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw_errno("connect");
  }
  sockaddr_in local{};
  socklen_t len = sizeof(local);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&local), &len) != 0) {
    ::close(fd);
    throw_errno("getsockname");
  }
  return std::unique_ptr<UdpDatagramChannel>(
      new UdpDatagramChannel(fd, ntohs(local.sin_port)));
}

UdpDatagramChannel::~UdpDatagramChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpDatagramChannel::send(std::span<const std::uint8_t> payload) {
  if (::send(fd_, payload.data(), payload.size(), 0) < 0) throw_errno("send");
}

std::optional<std::vector<std::uint8_t>> UdpDatagramChannel::recv(
    std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc < 0) throw_errno("poll");
  if (rc == 0) return std::nullopt;
  std::vector<std::uint8_t> buf(65536);
  const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n < 0) throw_errno("recv");
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

FdByteStream::FdByteStream(int read_fd, int write_fd)
    : read_fd_(read_fd), write_fd_(write_fd) {}

FdByteStream::~FdByteStream() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdByteStream::write(std::span<const std::uint8_t> data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) throw_errno("write");
    off += static_cast<std::size_t>(n);
  }
}

std::vector<std::uint8_t> FdByteStream::read_available() {
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[4096];
  for (;;) {
    pollfd pfd{read_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 0);
    if (rc < 0) throw_errno("poll");
    if (rc == 0) break;
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) throw_errno("read");
    if (n == 0) break;
    out.insert(out.end(), chunk, chunk + n);
  }
  return out;
}

}  // namespace hbci
