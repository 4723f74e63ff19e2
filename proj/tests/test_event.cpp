#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "evlat/event.hpp"
#include "evlat/event_file.hpp"

using namespace evlat;

namespace {

Event random_event(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> xs(0, kSensorWidth - 1);
    std::uniform_int_distribution<int> ys(0, kSensorHeight - 1);
    std::uniform_int_distribution<std::uint64_t> tss(0, 0xFFFFFFFFull);
    std::uniform_int_distribution<int> pols(0, 1);
    Event e;
    e.x = static_cast<std::uint16_t>(xs(rng));
    e.y = static_cast<std::uint16_t>(ys(rng));
    e.ts = static_cast<std::uint32_t>(tss(rng));
    e.pol = pols(rng) ? Polarity::On : Polarity::Off;
    return e;
}

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("encode_event produces the documented 8-byte layout") {
    SECTION("all-zero event") {
        const EncodedEvent bytes = encode_event({0, 0, 0, Polarity::Off});
        for (std::uint8_t b : bytes) CHECK(b == 0);
    }
    SECTION("x=1 y=1 ts=1 ON") {
        const EncodedEvent bytes = encode_event({1, 1, 1, Polarity::On});
        const EncodedEvent expected = {0x01, 0x02, 0x04, 0x00, 0x01, 0x00, 0x00, 0x00};
        CHECK(bytes == expected);
    }
    SECTION("extreme corner round-trips") {
        const Event e{239, 179, 4294967295u, Polarity::On};
        CHECK(decode_event(encode_event(e)) == e);
    }
    SECTION("out-of-bounds coordinates are rejected") {
        Event e{240, 0, 0, Polarity::Off};
        CHECK_THROWS_AS(encode_event(e), MalformedEventError);
        e = {0, 180, 0, Polarity::Off};
        CHECK_THROWS_AS(encode_event(e), MalformedEventError);
    }
}

TEST_CASE("decode_event inverts encode_event") {
    SECTION("eight zero bytes") {
        const EncodedEvent zeros{};
        const Event e = decode_event(zeros);
        CHECK(e == Event{0, 0, 0, Polarity::Off});
    }
    SECTION("reserved bits are ignored on read") {
        EncodedEvent bytes = encode_event({10, 20, 30, Polarity::On});
        bytes[3] |= 0xF8;  // top reserved bits of the address word
        const Event e = decode_event(bytes);
        CHECK(e == Event{10, 20, 30, Polarity::On});
    }
    SECTION("x field beyond the sensor is a malformed event") {
        EncodedEvent bytes{};
        put_u32_le(bytes.data(), 250u);  // x = 250 > 239
        CHECK_THROWS_AS(decode_event(bytes), MalformedEventError);
    }
    SECTION("y field beyond the sensor is a malformed event") {
        EncodedEvent bytes{};
        put_u32_le(bytes.data(), 200u << 9);
        CHECK_THROWS_AS(decode_event(bytes), MalformedEventError);
    }
}

TEST_CASE("codec round-trip property over the full domain") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20000; ++i) {
        const Event e = random_event(rng);
        const EncodedEvent bytes = encode_event(e);
        REQUIRE(bytes.size() == 8);
        if (!(decode_event(bytes) == e)) {
            FAIL("round-trip mismatch at iteration " << i);
        }
    }
    SUCCEED("20000 random events round-tripped");
}

TEST_CASE("event file round-trips packets") {
    const auto path = temp_path("evlat_test_roundtrip.evt");
    std::vector<EventPacket> packets(3);
    std::mt19937_64 rng(11);
    for (std::uint32_t i = 0; i < packets.size(); ++i) {
        packets[i].seq = i;
        for (int k = 0; k < 5 * static_cast<int>(i); ++k) {
            packets[i].events.push_back(random_event(rng));
        }
        std::sort(packets[i].events.begin(), packets[i].events.end(),
                  [](const Event& a, const Event& b) { return a.ts < b.ts; });
    }
    write_event_file(path.string(), packets);
    const std::vector<EventPacket> back = read_event_file(path.string());
    REQUIRE(back.size() == packets.size());
    CHECK(back == packets);
    std::filesystem::remove(path);
}

TEST_CASE("empty event file reads as an empty stream") {
    const auto path = temp_path("evlat_test_empty.evt");
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
    }
    EventFileReader reader(path.string());
    CHECK_FALSE(reader.next().has_value());
    std::filesystem::remove(path);
}

TEST_CASE("truncated event file names the bad frame's offset") {
    const auto path = temp_path("evlat_test_truncated.evt");
    std::vector<EventPacket> packets(2);
    packets[0].seq = 0;
    packets[0].events = {{5, 5, 100, Polarity::On}, {6, 5, 150, Polarity::Off}};
    packets[1].seq = 1;
    packets[1].events = {{7, 7, 200, Polarity::On}};
    write_event_file(path.string(), packets);

    // First frame is 8 + 16 = 24 bytes; cut into the second frame's body.
    const std::uintmax_t cut = 24 + 8 + 4;
    std::filesystem::resize_file(path, cut);

    EventFileReader reader(path.string());
    REQUIRE(reader.next().has_value());
    try {
        reader.next();
        FAIL("expected FileParseError");
    } catch (const FileParseError& err) {
        CHECK(err.offset() == 24);
        CHECK(std::string(err.what()).find("24") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("a frame with an impossible event count is rejected with its offset") {
    const auto path = temp_path("evlat_test_badcount.evt");
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        std::uint8_t header[8] = {0, 0, 0, 0, 0xEF, 0x02, 0, 0};  // count = 751
        out.write(reinterpret_cast<const char*>(header), sizeof header);
    }
    EventFileReader reader(path.string());
    try {
        reader.next();
        FAIL("expected FileParseError");
    } catch (const FileParseError& err) {
        CHECK(err.offset() == 0);
    }
    std::filesystem::remove(path);
}

TEST_CASE("file reading preserves within-packet timestamp order") {
    const auto path = temp_path("evlat_test_order.evt");
    std::mt19937_64 rng(13);
    std::vector<EventPacket> packets(4);
    for (std::uint32_t i = 0; i < packets.size(); ++i) {
        packets[i].seq = i;
        for (int k = 0; k < 100; ++k) packets[i].events.push_back(random_event(rng));
        std::sort(packets[i].events.begin(), packets[i].events.end(),
                  [](const Event& a, const Event& b) { return a.ts < b.ts; });
    }
    write_event_file(path.string(), packets);
    for (const EventPacket& p : read_event_file(path.string())) {
        for (std::size_t k = 1; k < p.events.size(); ++k) {
            REQUIRE(p.events[k - 1].ts <= p.events[k].ts);
        }
    }
    std::filesystem::remove(path);
}
