#include "ancsim/filters/filter_set.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/error.hpp"

namespace ancsim::filters {
namespace {

constexpr char kMagic[4] = {'A', 'N', 'C', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, std::size_t& off, const std::string& name) {
  if (off + sizeof(T) > buf.size()) throw IoError("filter file " + name + " is truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void AncFilterSet::validate() const {
  if (filters.empty()) throw InvalidArgument("filter set has no channels");
  if (sample_rate_hz <= 0) throw InvalidArgument("filter set sample rate must be positive");
  if (!(beta_used >= 0.0)) throw InvalidArgument("filter set beta must be non-negative");
  for (const auto& f : filters) {
    f.validate("control filter");
    if (f.size() != filters.front().size()) throw InvalidArgument("control filters differ in length");
    if (f.sample_rate_hz != sample_rate_hz) throw InvalidArgument("control filter rate differs from the set rate");
  }
}

AncFilterSet AncFilterSet::zeros(std::size_t channels, std::size_t length, int fs) {
  AncFilterSet set;
  set.sample_rate_hz = fs;
  set.filters.assign(channels, FirFilter(std::vector<double>(length, 0.0), fs));
  return set;
}

bool operator==(const AncFilterSet& a, const AncFilterSet& b) {
  if (a.sample_rate_hz != b.sample_rate_hz || a.filters.size() != b.filters.size()) return false;
  for (std::size_t m = 0; m < a.filters.size(); ++m) {
    if (a.filters[m].taps != b.filters[m].taps) return false;
  }
  return true;
}

void write_filter_set(const std::filesystem::path& path, const AncFilterSet& set) {
  set.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.sample_rate_hz));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.num_channels()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.length()));
  put<double>(out, set.beta_used);
  for (const auto& f : set.filters) {
    out.write(reinterpret_cast<const char*>(f.taps.data()), static_cast<std::streamsize>(f.taps.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

AncFilterSet read_filter_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open filter file " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError(name + " is not a filter file (bad magic)");
  std::size_t off = 4;
  if (take<std::uint32_t>(buf, off, name) != kVersion) throw IoError(name + ": unsupported filter file version");
  AncFilterSet set;
  set.sample_rate_hz = static_cast<int>(take<std::uint32_t>(buf, off, name));
  const auto channels = take<std::uint32_t>(buf, off, name);
  const auto length = take<std::uint32_t>(buf, off, name);
  set.beta_used = take<double>(buf, off, name);
  if (buf.size() - off != static_cast<std::size_t>(channels) * length * sizeof(double)) {
    throw IoError(name + ": payload size does not match header");
  }
  for (std::uint32_t m = 0; m < channels; ++m) {
    std::vector<double> taps(length);
    std::memcpy(taps.data(), buf.data() + off, length * sizeof(double));
    off += length * sizeof(double);
    set.filters.emplace_back(std::move(taps), set.sample_rate_hz);
  }
  try {
    set.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(name + ": " + e.what());
  }
  return set;
}

MultiChannelWaveform filtered_reference(const MultiChannelWaveform& x, const FirFilter& s_hat) {
  if (x.sample_rate_hz != s_hat.sample_rate_hz) {
    throw InvalidArgument("filtered_reference: reference rate " + std::to_string(x.sample_rate_hz) +
                          " Hz differs from secondary-path rate " + std::to_string(s_hat.sample_rate_hz) + " Hz");
  }
  MultiChannelWaveform r;
  r.sample_rate_hz = x.sample_rate_hz;
  for (const auto& ch : x.channels) r.channels.push_back(dsp::convolve_same(ch, s_hat.taps));
  return r;
}

}  // namespace ancsim::filters
