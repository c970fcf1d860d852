#pragma once

#include <random>
#include <string>

#include "scimesh/dsn/frame.hpp"

namespace testgen {

inline std::string random_bytes(std::mt19937_64& rng, size_t n) {
    std::string s(n, '\0');
    for (auto& c : s) c = char(rng() & 0xFF);
    return s;
}

inline scimesh::dsn::Frame random_frame(std::mt19937_64& rng) {
    scimesh::dsn::Frame f;
    f.type = scimesh::dsn::FrameType(rng() % 6);
    f.flags = uint8_t(rng() & 0xFF);
    f.channel_id = uint32_t(rng());
    if (f.type == scimesh::dsn::FrameType::Data) {
        std::string topic = random_bytes(rng, rng() % 32);
        std::string body = random_bytes(rng, rng() % 2048);
        f.payload = scimesh::dsn::make_data_payload(topic, body);
    } else {
        f.payload = random_bytes(rng, rng() % 256);
    }
    return f;
}

// Corrupts encoded frame bytes: bit flips, truncation, or garbage prefixes.
inline std::string corrupt(std::mt19937_64& rng, std::string bytes) {
    switch (rng() % 4) {
        case 0: {  // flip a random bit
            if (bytes.empty()) return bytes;
            size_t i = rng() % bytes.size();
            bytes[i] = char(uint8_t(bytes[i]) ^ uint8_t(1u << (rng() % 8)));
            return bytes;
        }
        case 1:  // truncate
            bytes.resize(rng() % (bytes.size() + 1));
            return bytes;
        case 2:  // garbage prefix
            return random_bytes(rng, 1 + rng() % 16) + bytes;
        default:  // pure noise
            return random_bytes(rng, rng() % 64);
    }
}

}  // namespace testgen
