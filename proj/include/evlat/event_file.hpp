#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlat/wire.hpp"

namespace evlat {

// .evt file: wire event-datagram payloads concatenated back to back,
// no extra framing. Readable as a stream without loading the file.

class FileParseError : public std::runtime_error {
  public:
    FileParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)),
          offset_(offset) {}

    std::uint64_t offset() const { return offset_; }

  private:
    std::uint64_t offset_;
};

class EventFileWriter {
  public:
    explicit EventFileWriter(const std::string& path)
        : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    void write(const EventPacket& packet) {
        const std::vector<std::uint8_t> frame = frame_events(packet.seq, packet);
        out_.write(reinterpret_cast<const char*>(frame.data()),
                   static_cast<std::streamsize>(frame.size()));
        if (!out_) throw std::runtime_error("write failed");
    }

  private:
    std::ofstream out_;
};

class EventFileReader {
  public:
    explicit EventFileReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + path);
    }

    /// Reads the next packet, or nullopt at a clean end of file.
    /// A frame cut short mid-header or mid-event raises FileParseError
    /// naming the offset where the frame began.
    std::optional<EventPacket> next() {
        const std::uint64_t frame_off = offset_;
        std::uint8_t header[kEventHeaderBytes];
        in_.read(reinterpret_cast<char*>(header), kEventHeaderBytes);
        const std::streamsize got = in_.gcount();
        if (got == 0 && in_.eof()) return std::nullopt;
        if (got < static_cast<std::streamsize>(kEventHeaderBytes)) {
            throw FileParseError("truncated frame header", frame_off);
        }
        const std::uint16_t count = static_cast<std::uint16_t>(header[4] | header[5] << 8);
        if (count > kMaxEventsPerDatagram) {
            throw FileParseError("frame event count exceeds maximum", frame_off);
        }
        std::vector<std::uint8_t> frame(kEventHeaderBytes + 8u * count);
        std::memcpy(frame.data(), header, kEventHeaderBytes);
        in_.read(reinterpret_cast<char*>(frame.data() + kEventHeaderBytes), 8u * count);
        if (in_.gcount() < static_cast<std::streamsize>(8u * count)) {
            throw FileParseError("truncated frame body", frame_off);
        }
        offset_ += frame.size();
        try {
            return parse_events(frame).second;
        } catch (const std::runtime_error& err) {
            throw FileParseError(err.what(), frame_off);
        }
    }

  private:
    std::ifstream in_;
    std::uint64_t offset_ = 0;
};

inline void write_event_file(const std::string& path, const std::vector<EventPacket>& packets) {
    EventFileWriter writer(path);
    for (const EventPacket& p : packets) writer.write(p);
}

inline std::vector<EventPacket> read_event_file(const std::string& path) {
    EventFileReader reader(path);
    std::vector<EventPacket> packets;
    while (auto p = reader.next()) packets.push_back(std::move(*p));
    return packets;
}

}  // namespace evlat
