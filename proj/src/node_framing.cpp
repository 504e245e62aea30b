#include "micutil/node_framing.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace micutil {

namespace {

constexpr uint8_t kMagic[4] = {'C', 'S', 'F', 'F'};

const std::array<uint32_t, 256>& crc_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1u) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
      }
      t[i] = c;
    }
    return t;
  }();
  return table;
}

void put_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(static_cast<uint8_t>(x & 0xff));
  v.push_back(static_cast<uint8_t>(x >> 8));
}
void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 8) & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 16) & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 24) & 0xff));
}
void put_f32(std::vector<uint8_t>& v, float x) {
  put_u32(v, std::bit_cast<uint32_t>(x));
}
uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
float get_f32(const uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

// magic(4) + version(1) + node_id(2) + frame_index(4) + count(1)
constexpr size_t kHeaderSize = 12;

size_t frame_size(size_t feature_count) {
  return kHeaderSize + 4 * feature_count + 4 + 4 + 4;
}

}  // namespace

uint32_t crc32(std::span<const uint8_t> data) {
  const auto& t = crc_table();
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : data) c = t[(c ^ b) & 0xffu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

const char* decode_status_name(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::BadMagic: return "BadMagic";
    case DecodeStatus::BadVersion: return "BadVersion";
    case DecodeStatus::BadCrc: return "BadCrc";
    case DecodeStatus::Truncated: return "Truncated";
  }
  return "?";
}

std::vector<uint8_t> encode_frame(const FeatureWireFrame& frame) {
  if (frame.features.size() > 255) {
    throw std::invalid_argument("encode_frame: more than 255 features");
  }
  std::vector<uint8_t> out;
  out.reserve(frame_size(frame.features.size()));
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kWireVersion);
  put_u16(out, frame.node_id);
  put_u32(out, frame.frame_index);
  out.push_back(static_cast<uint8_t>(frame.features.size()));
  for (float f : frame.features) put_f32(out, f);
  put_f32(out, frame.energy);
  put_f32(out, frame.entropy_neg);
  const uint32_t crc = crc32(std::span<const uint8_t>(out.data() + 4, out.size() - 4));
  put_u32(out, crc);
  return out;
}

DecodeResult decode_frame(std::span<const uint8_t> data) {
  DecodeResult res;
  if (data.size() < 4) {
    res.status = DecodeStatus::Truncated;
    return res;
  }
  if (std::memcmp(data.data(), kMagic, 4) != 0) {
    res.status = DecodeStatus::BadMagic;
    return res;
  }
  if (data.size() < kHeaderSize) {
    res.status = DecodeStatus::Truncated;
    return res;
  }
  const size_t count = data[kHeaderSize - 1];
  const size_t total = frame_size(count);
  if (data.size() < total) {
    res.status = DecodeStatus::Truncated;
    return res;
  }
  const uint32_t stored = get_u32(data.data() + total - 4);
  const uint32_t computed = crc32(data.subspan(4, total - 8));
  if (stored != computed) {
    res.status = DecodeStatus::BadCrc;
    return res;
  }
  if (data[4] != kWireVersion) {
    res.status = DecodeStatus::BadVersion;
    return res;
  }
  res.status = DecodeStatus::Ok;
  res.consumed = total;
  res.frame.node_id = get_u16(data.data() + 5);
  res.frame.frame_index = get_u32(data.data() + 7);
  res.frame.features.resize(count);
  for (size_t i = 0; i < count; ++i) {
    res.frame.features[i] = get_f32(data.data() + kHeaderSize + 4 * i);
  }
  res.frame.energy = get_f32(data.data() + kHeaderSize + 4 * count);
  res.frame.entropy_neg = get_f32(data.data() + kHeaderSize + 4 * count + 4);
  return res;
}

StreamDecodeResult decode_stream(std::span<const uint8_t> data) {
  StreamDecodeResult out;
  size_t pos = 0;
  size_t last_good_end = 0;
  while (pos + 4 <= data.size()) {
    if (std::memcmp(data.data() + pos, kMagic, 4) != 0) {
      ++pos;
      continue;
    }
    DecodeResult r = decode_frame(data.subspan(pos));
    if (r.status == DecodeStatus::Ok) {
      out.skipped_bytes += pos - last_good_end;
      out.frames.push_back(std::move(r.frame));
      pos += r.consumed;
      last_good_end = pos;
    } else {
      // Corrupt or partial frame: slide past this magic and rescan.
      ++pos;
    }
  }
  return out;
}

void write_frames(const std::string& path, std::span<const FeatureWireFrame> frames) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_frames: cannot open " + path);
  for (const auto& frame : frames) {
    const auto bytes = encode_frame(frame);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
  if (!f) throw std::runtime_error("write_frames: write failed: " + path);
}

StreamDecodeResult read_frames(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_frames: cannot open " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  return decode_stream(raw);
}

}  // namespace micutil
