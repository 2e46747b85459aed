#pragma once

#include <cstdint>
#include <filesystem>

#include "ancsim/signal.hpp"

namespace ancsim::io {

// Raw float64 path bank. Layout (little-endian):
//   char[4] "ANCP", u32 version, u32 fs, u32 count, u64 length[count],
//   then each filter's taps as float64 in order.
inline constexpr std::uint32_t kPathFileVersion = 1;

void write_path_file(const std::filesystem::path& path, const FirFilterBank& bank);
FirFilterBank read_path_file(const std::filesystem::path& path);

}  // namespace ancsim::io
