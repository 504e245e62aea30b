#include "micutil/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace micutil {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 8) & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 16) & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 24) & 0xff));
}
void wr_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(static_cast<uint8_t>(x & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 8) & 0xff));
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_wav: cannot open " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, n_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const uint32_t chunk_len = rd_u32(raw.data() + pos + 4);
    if (std::memcmp(raw.data() + pos, "fmt ", 4) == 0) {
      if (pos + 8 + 16 > raw.size()) throw std::runtime_error("read_wav: bad fmt chunk");
      const uint8_t* p = raw.data() + pos + 8;
      format = rd_u16(p);
      n_channels = rd_u16(p + 2);
      sample_rate = rd_u32(p + 4);
      bits = rd_u16(p + 14);
    } else if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (n_channels == 0 || data_off == 0) {
    throw std::runtime_error("read_wav: missing fmt or data chunk: " + path);
  }
  if (data_off + data_len > raw.size()) data_len = raw.size() - data_off;

  WavData out;
  out.sample_rate = static_cast<double>(sample_rate);
  out.channels.assign(n_channels, {});
  const uint8_t* d = raw.data() + data_off;

  if (format == 1 && bits == 16) {
    const size_t n_frames = data_len / (2 * n_channels);
    for (auto& ch : out.channels) ch.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
      for (size_t c = 0; c < n_channels; ++c) {
        const int16_t s = static_cast<int16_t>(rd_u16(d + 2 * (i * n_channels + c)));
        out.channels[c][i] = static_cast<double>(s) / 32768.0;
      }
    }
  } else if (format == 3 && bits == 32) {
    const size_t n_frames = data_len / (4 * n_channels);
    for (auto& ch : out.channels) ch.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
      for (size_t c = 0; c < n_channels; ++c) {
        const uint32_t u = rd_u32(d + 4 * (i * n_channels + c));
        out.channels[c][i] = static_cast<double>(std::bit_cast<float>(u));
      }
    }
  } else {
    throw std::runtime_error("read_wav: unsupported encoding (need PCM16 or float32)");
  }
  return out;
}

void write_wav(const std::string& path, const WavData& data) {
  if (data.channels.empty()) throw std::invalid_argument("write_wav: no channels");
  const size_t n_frames = data.channels[0].size();
  for (const auto& ch : data.channels) {
    if (ch.size() != n_frames) throw std::invalid_argument("write_wav: ragged channels");
  }
  const uint16_t n_ch = static_cast<uint16_t>(data.channels.size());
  const uint32_t byte_rate = static_cast<uint32_t>(data.sample_rate) * n_ch * 4;
  const uint32_t data_bytes = static_cast<uint32_t>(n_frames * n_ch * 4);

  std::vector<uint8_t> v;
  v.reserve(58 + data_bytes);
  v.insert(v.end(), {'R', 'I', 'F', 'F'});
  wr_u32(v, 4 + 8 + 16 + 8 + 4 + 8 + data_bytes);  // WAVE + fmt + fact + data
  v.insert(v.end(), {'W', 'A', 'V', 'E'});
  v.insert(v.end(), {'f', 'm', 't', ' '});
  wr_u32(v, 16);
  wr_u16(v, 3);  // IEEE float
  wr_u16(v, n_ch);
  wr_u32(v, static_cast<uint32_t>(data.sample_rate));
  wr_u32(v, byte_rate);
  wr_u16(v, static_cast<uint16_t>(n_ch * 4));
  wr_u16(v, 32);
  v.insert(v.end(), {'f', 'a', 'c', 't'});
  wr_u32(v, 4);
  wr_u32(v, static_cast<uint32_t>(n_frames));
  v.insert(v.end(), {'d', 'a', 't', 'a'});
  wr_u32(v, data_bytes);
  for (size_t i = 0; i < n_frames; ++i) {
    for (size_t c = 0; c < n_ch; ++c) {
      const float s = static_cast<float>(data.channels[c][i]);
      wr_u32(v, std::bit_cast<uint32_t>(s));
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path);
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
  if (!f) throw std::runtime_error("write_wav: write failed: " + path);
}

}  // namespace micutil
