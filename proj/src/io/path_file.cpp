#include "ancsim/io/path_file.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "ancsim/error.hpp"

namespace ancsim::io {
namespace {

constexpr char kMagic[4] = {'A', 'N', 'C', 'P'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, std::size_t& off, const std::string& name) {
  if (off + sizeof(T) > buf.size()) throw IoError("path file " + name + " is truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void write_path_file(const std::filesystem::path& path, const FirFilterBank& bank) {
  if (bank.empty()) throw InvalidArgument("write_path_file: empty filter bank");
  const int fs = bank.front().sample_rate_hz;
  for (const auto& f : bank) {
    if (f.sample_rate_hz != fs) throw InvalidArgument("write_path_file: mixed sample rates");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kPathFileVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fs));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bank.size()));
  for (const auto& f : bank) put<std::uint64_t>(out, f.taps.size());
  for (const auto& f : bank) {
    out.write(reinterpret_cast<const char*>(f.taps.data()),
              static_cast<std::streamsize>(f.taps.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

FirFilterBank read_path_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open path file " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw IoError(name + " is not a path file (bad magic)");
  }
  std::size_t off = 4;
  const auto version = take<std::uint32_t>(buf, off, name);
  if (version != kPathFileVersion) {
    throw IoError(name + ": unsupported path file version " + std::to_string(version));
  }
  const auto fs = take<std::uint32_t>(buf, off, name);
  const auto count = take<std::uint32_t>(buf, off, name);
  if (fs == 0 || count == 0) throw IoError(name + ": invalid header");
  std::vector<std::uint64_t> lengths(count);
  std::uint64_t total = 0;
  for (auto& len : lengths) {
    len = take<std::uint64_t>(buf, off, name);
    total += len;
  }
  if (buf.size() - off != total * sizeof(double)) {
    throw IoError(name + ": payload size does not match header");
  }
  FirFilterBank bank;
  for (const auto len : lengths) {
    std::vector<double> taps(len);
    std::memcpy(taps.data(), buf.data() + off, len * sizeof(double));
    off += len * sizeof(double);
    for (double v : taps) {
      if (!std::isfinite(v)) throw IoError(name + ": non-finite tap");
    }
    bank.emplace_back(std::move(taps), static_cast<int>(fs));
  }
  return bank;
}

}  // namespace ancsim::io
