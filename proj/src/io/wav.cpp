#include "ancsim/io/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ancsim/error.hpp"

namespace ancsim::io {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

// KSDATAFORMAT_SUBTYPE_* GUID tail shared by PCM and IEEE float.
constexpr std::array<std::uint8_t, 14> kGuidTail = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                                    0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_tag(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }
  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

template <typename T>
T load(const std::vector<char>& buf, std::size_t off) {
  if (off + sizeof(T) > buf.size()) throw IoError("WAV: truncated header");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

}  // namespace

void write_wav(const std::filesystem::path& path, const MultiChannelWaveform& audio,
               WavSampleFormat format) {
  const auto channels = static_cast<std::uint16_t>(audio.num_channels());
  if (channels == 0) throw InvalidArgument("write_wav: no channels");
  const std::size_t frames = audio.num_samples();
  const std::uint16_t bits = format == WavSampleFormat::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const bool extensible = channels > 2;
  const std::uint16_t tag = format == WavSampleFormat::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * block_align);
  const std::uint32_t fmt_size = extensible ? 40 : 16;
  const bool needs_fact = format == WavSampleFormat::kFloat32;

  ByteWriter w;
  w.put_tag("RIFF");
  w.put<std::uint32_t>(4 + 8 + fmt_size + (needs_fact ? 12 : 0) + 8 + data_bytes);
  w.put_tag("WAVE");
  w.put_tag("fmt ");
  w.put<std::uint32_t>(fmt_size);
  w.put<std::uint16_t>(extensible ? kFormatExtensible : tag);
  w.put<std::uint16_t>(channels);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(audio.sample_rate_hz));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(audio.sample_rate_hz) * block_align);
  w.put<std::uint16_t>(block_align);
  w.put<std::uint16_t>(bits);
  if (extensible) {
    w.put<std::uint16_t>(22);
    w.put<std::uint16_t>(bits);
    w.put<std::uint32_t>(0);  // channel mask: unassigned
    w.put<std::uint16_t>(tag);
    for (auto b : kGuidTail) w.put<std::uint8_t>(b);
  }
  if (needs_fact) {
    w.put_tag("fact");
    w.put<std::uint32_t>(4);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(frames));
  }
  w.put_tag("data");
  w.put<std::uint32_t>(data_bytes);
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = audio.channels[c][n];
      if (format == WavSampleFormat::kPcm16) {
        const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        w.put<std::int16_t>(static_cast<std::int16_t>(scaled));
      } else {
        w.put<float>(static_cast<float>(v));
      }
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_wav: cannot open " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("write_wav: write failed for " + path.string());
}

void write_wav(const std::filesystem::path& path, const Waveform& audio, WavSampleFormat format) {
  MultiChannelWaveform mc;
  mc.channels = {audio.samples};
  mc.sample_rate_hz = audio.sample_rate_hz;
  write_wav(path, mc, format);
}

MultiChannelWaveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw IoError("read_wav: " + path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  bool have_fmt = false;
  std::size_t off = 12;
  while (off + 8 <= buf.size()) {
    const std::string id(buf.data() + off, 4);
    const auto len = load<std::uint32_t>(buf, off + 4);
    const std::size_t body = off + 8;
    if (id == "fmt ") {
      format = load<std::uint16_t>(buf, body);
      channels = load<std::uint16_t>(buf, body + 2);
      rate = load<std::uint32_t>(buf, body + 4);
      bits = load<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible) format = load<std::uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
    }
    off = body + len + (len & 1u);
  }
  if (!have_fmt || data_off == 0) throw IoError("read_wav: missing fmt or data chunk in " + path.string());
  if (channels == 0 || rate == 0) throw IoError("read_wav: invalid format header in " + path.string());
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) throw IoError("read_wav: only 16-bit PCM and 32-bit float are supported");

  const std::size_t bytes_per = bits / 8;
  const std::size_t frames = data_len / (bytes_per * channels);
  MultiChannelWaveform out(channels, frames, static_cast<int>(rate));
  std::size_t p = data_off;
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      if (pcm16) {
        out.channels[c][n] = load<std::int16_t>(buf, p) / 32768.0;
      } else {
        out.channels[c][n] = load<float>(buf, p);
      }
      p += bytes_per;
    }
  }
  return out;
}

}  // namespace ancsim::io
