#pragma once

#include <string>
#include <vector>

namespace micutil {

struct WavData {
  double sample_rate = 0.0;
  std::vector<std::vector<double>> channels;  // deinterleaved, [-1, 1] scale
};

// Reads a RIFF/WAVE file. Accepts 16-bit PCM (scaled by 1/32768) and
// 32-bit IEEE float. Throws std::runtime_error on malformed input or
// unsupported encodings.
WavData read_wav(const std::string& path);

// Writes 32-bit IEEE float WAV. Channels must be equal length.
void write_wav(const std::string& path, const WavData& data);

}  // namespace micutil
