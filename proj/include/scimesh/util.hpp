#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scimesh::util {

std::string base64url_encode(std::span<const uint8_t> data);
std::optional<std::vector<uint8_t>> base64url_decode(std::string_view text);

std::string hex_encode(std::span<const uint8_t> data);
std::optional<std::vector<uint8_t>> hex_decode(std::string_view text);

/// FNV-1a 64-bit, used as the rolling payload checksum in the stream tools.
class Fnv1a64 {
  public:
    void update(std::span<const uint8_t> data) {
        for (uint8_t b : data) {
            h_ ^= b;
            h_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) {
        update(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
    }
    uint64_t digest() const { return h_; }

  private:
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Parsed IPv4 CIDR block, e.g. "10.0.0.0/24".
struct Cidr {
    uint32_t network = 0;  // host byte order
    int prefix_len = 0;

    bool contains(uint32_t addr) const {
        if (prefix_len == 0) return true;
        uint32_t mask = prefix_len >= 32 ? 0xffffffffu : ~((1u << (32 - prefix_len)) - 1);
        return (addr & mask) == (network & mask);
    }
};

std::optional<Cidr> parse_cidr(std::string_view text);
std::optional<uint32_t> parse_ipv4(std::string_view text);

/// Deterministic 16-byte id source. Seeded generators give reproducible
/// registries and scenario reports; default construction seeds from entropy.
class IdGen {
  public:
    IdGen();
    explicit IdGen(uint64_t seed) : rng_(seed) {}

    /// 32 lowercase hex chars (16 bytes).
    std::string next_hex();

  private:
    std::mt19937_64 rng_;
};

std::vector<std::string> split(std::string_view s, char sep);

std::string read_file(const std::string& path);          // throws Error(IO_ERROR)
void write_file(const std::string& path, std::string_view content);

}  // namespace scimesh::util
