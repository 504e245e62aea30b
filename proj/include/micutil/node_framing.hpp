#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace micutil {

// Binary interchange for per-block feature frames between node-side
// extraction and the estimation side. Little-endian layout:
//
//   "CSFF" | version u8 (=1) | node_id u16 | frame_index u32 |
//   feature_count u8 | features f32[count] | energy f32 |
//   entropy_neg f32 | crc32 u32
//
// The CRC (reflected 0xEDB88320, init and final xor 0xFFFFFFFF) covers
// every byte after the magic up to and including entropy_neg. A frame
// with 4 features occupies 40 bytes.

struct FeatureWireFrame {
  uint16_t node_id = 0;
  uint32_t frame_index = 0;
  std::vector<float> features;
  float energy = 0.0f;
  float entropy_neg = 0.0f;
};

inline constexpr uint8_t kWireVersion = 1;
inline constexpr size_t kWireOverhead = 24;  // frame size with 0 features

uint32_t crc32(std::span<const uint8_t> data);

// Throws std::invalid_argument for more than 255 features.
std::vector<uint8_t> encode_frame(const FeatureWireFrame& frame);

enum class DecodeStatus { Ok, BadMagic, BadVersion, BadCrc, Truncated };
const char* decode_status_name(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Truncated;
  FeatureWireFrame frame;  // valid only when status == Ok
  size_t consumed = 0;     // bytes of the frame when status == Ok
};

// Decodes one frame from the start of the buffer. The CRC is verified
// before the version field, so any bit corruption past the magic
// (within a length-consistent frame) reports BadCrc; corruption that
// inflates the apparent length reports Truncated.
DecodeResult decode_frame(std::span<const uint8_t> data);

struct StreamDecodeResult {
  std::vector<FeatureWireFrame> frames;
  size_t skipped_bytes = 0;  // resynchronization distance over junk/corruption
};

// Scans a byte stream, resynchronizing on the magic after corrupt
// regions, so one bad frame does not take down the rest of the batch.
StreamDecodeResult decode_stream(std::span<const uint8_t> data);

// Batch container helpers (.csff files are plain frame concatenations).
void write_frames(const std::string& path, std::span<const FeatureWireFrame> frames);
StreamDecodeResult read_frames(const std::string& path);

}  // namespace micutil
