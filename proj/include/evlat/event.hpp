#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evlat {

// DAVIS240C sensor geometry. Only the event channel is modeled.
inline constexpr int kSensorWidth = 240;
inline constexpr int kSensorHeight = 180;

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

/// One brightness-change event: pixel location, microsecond timestamp,
/// sign of the change.
struct Event {
    std::uint16_t x = 0;   // column, [0, 239]
    std::uint16_t y = 0;   // row, [0, 179]
    std::uint32_t ts = 0;  // microseconds
    Polarity pol = Polarity::Off;

    bool operator==(const Event&) const = default;
};

/// A batch of events as carried on the wire. Events are ordered by
/// non-decreasing timestamp; a packet may be empty.
struct EventPacket {
    std::uint32_t seq = 0;
    std::vector<Event> events;

    bool operator==(const EventPacket&) const = default;
};

class MalformedEventError : public std::runtime_error {
  public:
    explicit MalformedEventError(const std::string& what) : std::runtime_error(what) {}
};

using EncodedEvent = std::array<std::uint8_t, 8>;

inline bool event_in_bounds(int x, int y) {
    return x >= 0 && x < kSensorWidth && y >= 0 && y < kSensorHeight;
}

// Address word layout (32-bit little-endian):
//   bits 0-8   x
//   bits 9-17  y
//   bit  18    polarity (1 = ON)
//   bits 19-31 reserved, written as zero, ignored on read
// followed by the 32-bit little-endian timestamp in microseconds.

inline void put_u32_le(std::uint8_t* out, std::uint32_t v) {
    out[0] = static_cast<std::uint8_t>(v);
    out[1] = static_cast<std::uint8_t>(v >> 8);
    out[2] = static_cast<std::uint8_t>(v >> 16);
    out[3] = static_cast<std::uint8_t>(v >> 24);
}

inline std::uint32_t get_u32_le(const std::uint8_t* in) {
    return static_cast<std::uint32_t>(in[0]) | static_cast<std::uint32_t>(in[1]) << 8 |
           static_cast<std::uint32_t>(in[2]) << 16 | static_cast<std::uint32_t>(in[3]) << 24;
}

inline void put_u64_le(std::uint8_t* out, std::uint64_t v) {
    put_u32_le(out, static_cast<std::uint32_t>(v));
    put_u32_le(out + 4, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t get_u64_le(const std::uint8_t* in) {
    return static_cast<std::uint64_t>(get_u32_le(in)) |
           static_cast<std::uint64_t>(get_u32_le(in + 4)) << 32;
}

/// Packs an event into its 8-byte wire form.
inline EncodedEvent encode_event(const Event& e) {
    if (!event_in_bounds(e.x, e.y)) {
        throw MalformedEventError("event out of sensor bounds: x=" + std::to_string(e.x) +
                                  " y=" + std::to_string(e.y));
    }
    const std::uint32_t addr = static_cast<std::uint32_t>(e.x) |
                               static_cast<std::uint32_t>(e.y) << 9 |
                               static_cast<std::uint32_t>(e.pol == Polarity::On ? 1u : 0u) << 18;
    EncodedEvent out{};
    put_u32_le(out.data(), addr);
    put_u32_le(out.data() + 4, e.ts);
    return out;
}

/// Inverse of encode_event. Reserved address bits are ignored; decoded
/// coordinates outside the sensor raise MalformedEventError.
inline Event decode_event(const std::uint8_t* bytes) {
    const std::uint32_t addr = get_u32_le(bytes);
    Event e;
    e.x = static_cast<std::uint16_t>(addr & 0x1FFu);
    e.y = static_cast<std::uint16_t>((addr >> 9) & 0x1FFu);
    e.pol = ((addr >> 18) & 1u) ? Polarity::On : Polarity::Off;
    e.ts = get_u32_le(bytes + 4);
    if (!event_in_bounds(e.x, e.y)) {
        throw MalformedEventError("decoded event out of sensor bounds: x=" + std::to_string(e.x) +
                                  " y=" + std::to_string(e.y));
    }
    return e;
}

inline Event decode_event(const EncodedEvent& bytes) {
    return decode_event(bytes.data());
}

}  // namespace evlat
