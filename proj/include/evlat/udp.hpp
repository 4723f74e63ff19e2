#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlat/event.hpp"

namespace evlat {

class SocketError : public std::runtime_error {
  public:
    explicit SocketError(const std::string& what) : std::runtime_error(what + ": " + std::strerror(errno)) {}
};

inline sockaddr_in make_addr(const std::string& address, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, address.c_str(), &addr.sin_addr) != 1) {
        throw std::runtime_error("invalid IPv4 address: " + address);
    }
    return addr;
}

/// Newest-wins delivery policy shared by both links: every datagram
/// carries a little-endian u32 seq in its first four bytes, and a
/// datagram whose seq is not greater than the highest seq already
/// delivered is dropped. The consumer's observed seq is strictly
/// increasing even if UDP reorders.
class StaleDropGate {
  public:
    /// Returns true if the datagram is fresh and should be delivered.
    bool admit(const std::uint8_t* data, std::size_t len) {
        if (len < 4) return false;
        const std::uint32_t seq = get_u32_le(data);
        if (has_delivered_ && seq <= highest_) return false;
        highest_ = seq;
        has_delivered_ = true;
        return true;
    }

    bool admit(const std::vector<std::uint8_t>& d) { return admit(d.data(), d.size()); }

  private:
    std::uint32_t highest_ = 0;
    bool has_delivered_ = false;
};

class UdpSender {
  public:
    UdpSender(const std::string& address, std::uint16_t port) : dest_(make_addr(address, port)) {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0) throw SocketError("socket");
    }

    ~UdpSender() {
        if (fd_ >= 0) ::close(fd_);
    }

    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;

    void send(const std::vector<std::uint8_t>& payload) {
        const ssize_t n = ::sendto(fd_, payload.data(), payload.size(), 0,
                                   reinterpret_cast<const sockaddr*>(&dest_), sizeof dest_);
        if (n < 0) throw SocketError("sendto");
    }

  private:
    sockaddr_in dest_;
    int fd_ = -1;
};

class UdpReceiver {
  public:
    UdpReceiver(const std::string& address, std::uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0) throw SocketError("socket");
        const sockaddr_in addr = make_addr(address, port);
        if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw SocketError("bind " + address + ":" + std::to_string(port));
        }
    }

    ~UdpReceiver() {
        if (fd_ >= 0) ::close(fd_);
    }

    UdpReceiver(const UdpReceiver&) = delete;
    UdpReceiver& operator=(const UdpReceiver&) = delete;

    /// Blocks until a fresh datagram arrives or the timeout expires.
    std::optional<std::vector<std::uint8_t>> next(int timeout_ms) {
        for (;;) {
            pollfd pfd{fd_, POLLIN, 0};
            const int r = ::poll(&pfd, 1, timeout_ms);
            if (r < 0) {
                if (errno == EINTR) continue;
                throw SocketError("poll");
            }
            if (r == 0) return std::nullopt;
            std::vector<std::uint8_t> buf = recv_one();
            if (gate_.admit(buf)) return buf;
        }
    }

    /// Non-blocking read: drains everything queued and returns the
    /// freshest admissible datagram, or nullopt when nothing new is
    /// waiting.
    std::optional<std::vector<std::uint8_t>> latest() {
        std::optional<std::vector<std::uint8_t>> newest;
        for (;;) {
            pollfd pfd{fd_, POLLIN, 0};
            const int r = ::poll(&pfd, 1, 0);
            if (r < 0) {
                if (errno == EINTR) continue;
                throw SocketError("poll");
            }
            if (r == 0) return newest;
            std::vector<std::uint8_t> buf = recv_one();
            if (gate_.admit(buf)) newest = std::move(buf);
        }
    }

  private:
    std::vector<std::uint8_t> recv_one() {
        std::vector<std::uint8_t> buf(kMaxDatagramBytes);
        const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, nullptr, nullptr);
        if (n < 0) throw SocketError("recvfrom");
        buf.resize(static_cast<std::size_t>(n));
        return buf;
    }

    // Largest payload on either link is 8 + 750*8 bytes.
    static constexpr std::size_t kMaxDatagramBytes = 8192;

    StaleDropGate gate_;
    int fd_ = -1;
};

}  // namespace evlat
