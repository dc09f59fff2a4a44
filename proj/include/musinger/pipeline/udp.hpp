#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace musinger::pipeline {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port", "[v6addr]:port" or ":port" (any address). Errc::InvalidInput.
Endpoint parse_endpoint(std::string_view text);

/// Anything that yields raw datagrams; receive() returns nullopt on timeout.
class DatagramSource {
 public:
  virtual ~DatagramSource() = default;
  virtual std::optional<std::vector<std::uint8_t>> receive(int timeout_ms) = 0;
};

class DatagramSink {
 public:
  virtual ~DatagramSink() = default;
  virtual void send(std::span<const std::uint8_t> bytes) = 0;
};

/// Connected UDP socket. Errc::Network when the endpoint cannot be resolved
/// or the peer refuses datagrams (no listener on a local port).
class UdpSender final : public DatagramSink {
 public:
  explicit UdpSender(const Endpoint& to);
  ~UdpSender() override;
  UdpSender(const UdpSender&) = delete;
  UdpSender& operator=(const UdpSender&) = delete;

  void send(std::span<const std::uint8_t> bytes) override;
  /// Waits up to timeout_ms for an ICMP refusal of earlier datagrams and
  /// throws Errc::Network if one arrives.
  void check_refused(int timeout_ms);

 private:
  int fd_ = -1;
  std::string peer_;
};

/// Bound UDP socket. Errc::Network when the address is in use.
class UdpReceiver final : public DatagramSource {
 public:
  explicit UdpReceiver(const Endpoint& bind_to);
  ~UdpReceiver() override;
  UdpReceiver(const UdpReceiver&) = delete;
  UdpReceiver& operator=(const UdpReceiver&) = delete;

  std::optional<std::vector<std::uint8_t>> receive(int timeout_ms) override;
  std::uint16_t port() const noexcept { return port_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// In-process datagram queue, usable from one producer and one consumer thread.
class LocalChannel final : public DatagramSource, public DatagramSink {
 public:
  LocalChannel();
  ~LocalChannel() override;
  void send(std::span<const std::uint8_t> bytes) override;
  std::optional<std::vector<std::uint8_t>> receive(int timeout_ms) override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace musinger::pipeline
