#include "scimesh/dsn/frame.hpp"

namespace scimesh::dsn {

namespace {

void put_u32_be(std::string& out, uint32_t v) {
    out.push_back(char((v >> 24) & 0xFF));
    out.push_back(char((v >> 16) & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
    out.push_back(char(v & 0xFF));
}

uint32_t get_u32_be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

}  // namespace

std::string encode_frame(const Frame& f) {
    std::string out;
    out.reserve(kFrameHeaderBytes + f.payload.size());
    out.push_back(char(kFrameMagic0));
    out.push_back(char(kFrameMagic1));
    out.push_back(char(kFrameVersion));
    out.push_back(char(uint8_t(f.type)));
    out.push_back(char(f.flags));
    put_u32_be(out, f.channel_id);
    put_u32_be(out, uint32_t(f.payload.size()));
    out.append(f.payload);
    return out;
}

DecodeStatus decode_frame(const uint8_t* data, size_t len, Frame* out, size_t* consumed,
                          std::string* reason) {
    if (len < kFrameHeaderBytes) return DecodeStatus::NeedMore;
    if (data[0] != kFrameMagic0 || data[1] != kFrameMagic1) {
        if (reason) *reason = "bad magic";
        return DecodeStatus::Bad;
    }
    if (data[2] != kFrameVersion) {
        if (reason) *reason = "unsupported version";
        return DecodeStatus::Bad;
    }
    if (data[3] > uint8_t(FrameType::Sub)) {
        if (reason) *reason = "unknown frame type";
        return DecodeStatus::Bad;
    }
    uint32_t payload_len = get_u32_be(data + 9);
    if (payload_len > kMaxFramePayload) {
        if (reason) *reason = "payload length over limit";
        return DecodeStatus::Bad;
    }
    if (len < kFrameHeaderBytes + payload_len) return DecodeStatus::NeedMore;

    out->type = FrameType(data[3]);
    out->flags = data[4];
    out->channel_id = get_u32_be(data + 5);
    out->payload.assign(reinterpret_cast<const char*>(data) + kFrameHeaderBytes, payload_len);
    *consumed = kFrameHeaderBytes + payload_len;
    return DecodeStatus::Ok;
}

std::string make_data_payload(const std::string& topic, const std::string& body) {
    std::string out;
    out.reserve(kDataTopicPrefixBytes + topic.size() + body.size());
    uint16_t tl = uint16_t(topic.size());
    out.push_back(char((tl >> 8) & 0xFF));
    out.push_back(char(tl & 0xFF));
    out.append(topic);
    out.append(body);
    return out;
}

bool split_data_payload(const std::string& payload, std::string* topic, std::string* body) {
    if (payload.size() < kDataTopicPrefixBytes) return false;
    uint16_t tl = uint16_t((uint8_t(payload[0]) << 8) | uint8_t(payload[1]));
    if (payload.size() < kDataTopicPrefixBytes + tl) return false;
    topic->assign(payload, kDataTopicPrefixBytes, tl);
    body->assign(payload, kDataTopicPrefixBytes + tl, std::string::npos);
    return true;
}

}  // namespace scimesh::dsn
