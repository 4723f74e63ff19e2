#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlat/event.hpp"

namespace evlat {

// Event datagram (link 1, camera stage -> client stage):
//   seq    u32 LE
//   count  u16 LE
//   2 reserved zero bytes
//   count * 8-byte encoded events
// Roi datagram (link 2, client -> server), fixed 20 bytes:
//   seq u32 LE | ts u64 LE (pipeline clock, us) | cx f32 LE | cy f32 LE

inline constexpr std::size_t kEventHeaderBytes = 8;
inline constexpr std::size_t kMaxEventsPerDatagram = 750;
inline constexpr std::size_t kRoiDatagramBytes = 20;

class MalformedDatagramError : public std::runtime_error {
  public:
    explicit MalformedDatagramError(const std::string& what) : std::runtime_error(what) {}
};

/// Out-of-range field values in a structurally valid datagram.
class DatagramRangeError : public std::runtime_error {
  public:
    explicit DatagramRangeError(const std::string& what) : std::runtime_error(what) {}
};

inline std::vector<std::uint8_t> frame_events(std::uint32_t seq, const EventPacket& packet) {
    if (packet.events.size() > kMaxEventsPerDatagram) {
        throw MalformedDatagramError("packet exceeds " + std::to_string(kMaxEventsPerDatagram) +
                                     " events: " + std::to_string(packet.events.size()));
    }
    std::vector<std::uint8_t> out(kEventHeaderBytes + 8 * packet.events.size());
    put_u32_le(out.data(), seq);
    out[4] = static_cast<std::uint8_t>(packet.events.size());
    out[5] = static_cast<std::uint8_t>(packet.events.size() >> 8);
    std::size_t off = kEventHeaderBytes;
    for (const Event& e : packet.events) {
        const EncodedEvent enc = encode_event(e);
        std::memcpy(out.data() + off, enc.data(), 8);
        off += 8;
    }
    return out;
}

inline std::pair<std::uint32_t, EventPacket> parse_events(const std::uint8_t* data,
                                                          std::size_t len) {
    if (len < kEventHeaderBytes) {
        throw MalformedDatagramError("event datagram shorter than header: " + std::to_string(len) +
                                     " bytes");
    }
    const std::uint32_t seq = get_u32_le(data);
    const std::uint16_t count = static_cast<std::uint16_t>(data[4] | data[5] << 8);
    if (count > kMaxEventsPerDatagram) {
        throw MalformedDatagramError("event count exceeds maximum: " + std::to_string(count));
    }
    if (len != kEventHeaderBytes + 8u * count) {
        throw MalformedDatagramError("event datagram length mismatch: " + std::to_string(len) +
                                     " bytes for count " + std::to_string(count));
    }
    EventPacket packet;
    packet.seq = seq;
    packet.events.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        packet.events.push_back(decode_event(data + kEventHeaderBytes + 8u * i));
    }
    return {seq, std::move(packet)};
}

inline std::pair<std::uint32_t, EventPacket> parse_events(const std::vector<std::uint8_t>& data) {
    return parse_events(data.data(), data.size());
}

struct RoiMessage {
    std::uint32_t seq = 0;
    std::uint64_t ts = 0;  // pipeline clock, microseconds
    float cx = 0.0f;
    float cy = 0.0f;

    bool operator==(const RoiMessage&) const = default;
};

inline bool roi_center_in_range(float cx, float cy) {
    return cx >= 0.0f && cx <= static_cast<float>(kSensorWidth) && cy >= 0.0f &&
           cy <= static_cast<float>(kSensorHeight);
}

inline std::vector<std::uint8_t> frame_roi(std::uint32_t seq, std::uint64_t ts, float cx,
                                           float cy) {
    if (!roi_center_in_range(cx, cy)) {
        throw DatagramRangeError("roi center out of range: cx=" + std::to_string(cx) +
                                 " cy=" + std::to_string(cy));
    }
    std::vector<std::uint8_t> out(kRoiDatagramBytes);
    put_u32_le(out.data(), seq);
    put_u64_le(out.data() + 4, ts);
    std::uint32_t bits;
    std::memcpy(&bits, &cx, 4);
    put_u32_le(out.data() + 12, bits);
    std::memcpy(&bits, &cy, 4);
    put_u32_le(out.data() + 16, bits);
    return out;
}

inline RoiMessage parse_roi(const std::uint8_t* data, std::size_t len) {
    if (len != kRoiDatagramBytes) {
        throw MalformedDatagramError("roi datagram must be 20 bytes, got " + std::to_string(len));
    }
    RoiMessage msg;
    msg.seq = get_u32_le(data);
    msg.ts = get_u64_le(data + 4);
    std::uint32_t bits = get_u32_le(data + 12);
    std::memcpy(&msg.cx, &bits, 4);
    bits = get_u32_le(data + 16);
    std::memcpy(&msg.cy, &bits, 4);
    if (!roi_center_in_range(msg.cx, msg.cy)) {
        throw DatagramRangeError("roi center out of range: cx=" + std::to_string(msg.cx) +
                                 " cy=" + std::to_string(msg.cy));
    }
    return msg;
}

inline RoiMessage parse_roi(const std::vector<std::uint8_t>& data) {
    return parse_roi(data.data(), data.size());
}

}  // namespace evlat
