#include "musinger/pipeline/udp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>

#include "musinger/core/error.hpp"

namespace musinger::pipeline {

namespace {

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const { freeaddrinfo(p); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const char* host = ep.host.empty() ? nullptr : ep.host.c_str();
  if (const int rc = getaddrinfo(host, port.c_str(), &hints, &res); rc != 0)
    throw Error(Errc::Network, "cannot resolve " + ep.host + ":" + port + ": " + gai_strerror(rc));
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

std::string describe(const Endpoint& ep) { return (ep.host.empty() ? "*" : ep.host) + ":" + std::to_string(ep.port); }

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos)
    throw Error(Errc::InvalidInput, "endpoint must be HOST:PORT, got \"" + std::string(text) + "\"");
  std::string_view host = text.substr(0, colon);
  const std::string_view port_text = text.substr(colon + 1);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']')
    host = host.substr(1, host.size() - 2);
  else if (host.find_first_of("[]:") != std::string_view::npos)
    throw Error(Errc::InvalidInput, "bad host in endpoint \"" + std::string(text) + "\" (bracket IPv6 addresses)");
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port > 65535)
    throw Error(Errc::InvalidInput, "bad port in endpoint \"" + std::string(text) + "\"");
  return {std::string(host), static_cast<std::uint16_t>(port)};
}

UdpSender::UdpSender(const Endpoint& to) : peer_(describe(to)) {
  auto res = resolve(to, false);
  int last_errno = 0;
  for (addrinfo* ai = res.get(); ai; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) {
      last_errno = errno;
      continue;
    }
    if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) return;
    last_errno = errno;
    ::close(fd_);
    fd_ = -1;
  }
  throw Error(Errc::Network, "cannot connect to " + peer_ + ": " + std::strerror(last_errno));
}

UdpSender::~UdpSender() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSender::send(std::span<const std::uint8_t> bytes) {
  for (;;) {
    const auto n = ::send(fd_, bytes.data(), bytes.size(), 0);
    if (n >= 0) return;
    if (errno == EINTR) continue;
    throw Error(Errc::Network, "send to " + peer_ + " failed: " + std::strerror(errno));
  }
}

void UdpSender::check_refused(int timeout_ms) {
  pollfd p{fd_, POLLIN, 0};
  if (::poll(&p, 1, timeout_ms) <= 0) return;
  int err = 0;
  socklen_t len = sizeof err;
  ::getsockopt(fd_, SOL_SOCKET, SO_ERROR, &err, &len);
  if (err == ECONNREFUSED) throw Error(Errc::Network, "no listener at " + peer_ + " (connection refused)");
}

UdpReceiver::UdpReceiver(const Endpoint& bind_to) {
  auto res = resolve(bind_to, true);
  int last_errno = 0;
  for (addrinfo* ai = res.get(); ai; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) {
      last_errno = errno;
      continue;
    }
    if (::bind(fd_, ai->ai_addr, ai->ai_addrlen) == 0) {
      sockaddr_storage addr{};
      socklen_t len = sizeof addr;
      ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
      port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                               : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
      return;
    }
    last_errno = errno;
    ::close(fd_);
    fd_ = -1;
  }
  throw Error(Errc::Network, "cannot bind " + describe(bind_to) + ": " + std::strerror(last_errno));
}

UdpReceiver::~UdpReceiver() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<std::vector<std::uint8_t>> UdpReceiver::receive(int timeout_ms) {
  pollfd p{fd_, POLLIN, 0};
  const int rc = ::poll(&p, 1, timeout_ms);
  if (rc <= 0) return std::nullopt;
  std::vector<std::uint8_t> buf(2048);
  const auto n = ::recv(fd_, buf.data(), buf.size(), MSG_TRUNC);
  if (n < 0) return std::nullopt;
  buf.resize(std::min(static_cast<std::size_t>(n), buf.size()));
  return buf;
}

struct LocalChannel::State {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> queue;
};

LocalChannel::LocalChannel() : state_(std::make_unique<State>()) {}
LocalChannel::~LocalChannel() = default;

void LocalChannel::send(std::span<const std::uint8_t> bytes) {
  {
    std::lock_guard lock(state_->mutex);
    state_->queue.emplace_back(bytes.begin(), bytes.end());
  }
  state_->cv.notify_one();
}

std::optional<std::vector<std::uint8_t>> LocalChannel::receive(int timeout_ms) {
  std::unique_lock lock(state_->mutex);
  if (!state_->cv.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] { return !state_->queue.empty(); }))
    return std::nullopt;
  auto out = std::move(state_->queue.front());
  state_->queue.pop_front();
  return out;
}

}  // namespace musinger::pipeline
