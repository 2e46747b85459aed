#pragma once

#include <filesystem>

#include "ancsim/signal.hpp"

namespace ancsim::io {

enum class WavSampleFormat { kPcm16, kFloat32 };

// Little-endian RIFF/WAVE writer. PCM16 output is clipped to [-1, 1) and
// rounded; float output stores samples as IEEE-754 single precision. Files
// with more than two channels use WAVE_FORMAT_EXTENSIBLE.
void write_wav(const std::filesystem::path& path, const MultiChannelWaveform& audio,
               WavSampleFormat format = WavSampleFormat::kFloat32);
void write_wav(const std::filesystem::path& path, const Waveform& audio,
               WavSampleFormat format = WavSampleFormat::kFloat32);

// Reads 16-bit PCM or 32-bit float files (plain or extensible headers).
MultiChannelWaveform read_wav(const std::filesystem::path& path);

}  // namespace ancsim::io
