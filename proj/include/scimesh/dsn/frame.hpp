#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace scimesh::dsn {

// Wire unit for the L7 data plane. Layout, all integers big-endian:
//   magic   2B  0x53 0x4D ("SM")
//   version 1B  0x01
//   type    1B
//   flags   1B
//   channel 4B
//   paylen  4B
//   payload paylen bytes
// DATA payloads carry a topic prefix: topic_len (2B BE) + topic + body.
enum class FrameType : uint8_t {
    Data = 0,
    Auth = 1,
    Ack = 2,
    Err = 3,
    Close = 4,
    Sub = 5,
};

inline constexpr uint8_t kFrameMagic0 = 0x53;
inline constexpr uint8_t kFrameMagic1 = 0x4D;
inline constexpr uint8_t kFrameVersion = 0x01;
inline constexpr size_t kFrameHeaderBytes = 13;
inline constexpr size_t kDataTopicPrefixBytes = 2;
// Hard sanity bound on any payload, independent of per-template message caps.
inline constexpr size_t kMaxFramePayload = 64u * 1024u * 1024u;

struct Frame {
    FrameType type = FrameType::Data;
    uint8_t flags = 0;
    uint32_t channel_id = 0;
    std::string payload;

    bool operator==(const Frame&) const = default;
};

/// Total encoded size of a frame carrying `payload_len` payload bytes.
inline size_t frame_wire_size(size_t payload_len) { return kFrameHeaderBytes + payload_len; }

/// Encoded size of a DATA frame for the given topic and body lengths.
inline size_t data_frame_wire_size(size_t topic_len, size_t body_len) {
    return kFrameHeaderBytes + kDataTopicPrefixBytes + topic_len + body_len;
}

std::string encode_frame(const Frame& f);

enum class DecodeStatus {
    Ok,        // *out and *consumed filled
    NeedMore,  // buffer holds only a frame prefix; read more bytes
    Bad,       // irrecoverable framing error; *reason set, connection must close
};

/// Incremental decoder over a byte buffer. On Ok exactly one frame was
/// consumed; re-encoding it reproduces the consumed bytes exactly.
DecodeStatus decode_frame(const uint8_t* data, size_t len, Frame* out, size_t* consumed,
                          std::string* reason);

inline DecodeStatus decode_frame(const std::string& buf, Frame* out, size_t* consumed,
                                 std::string* reason) {
    return decode_frame(reinterpret_cast<const uint8_t*>(buf.data()), buf.size(), out, consumed,
                        reason);
}

std::string make_data_payload(const std::string& topic, const std::string& body);

/// Splits a DATA payload into topic and body. False when the payload is too
/// short for its declared topic length.
bool split_data_payload(const std::string& payload, std::string* topic, std::string* body);

}  // namespace scimesh::dsn
