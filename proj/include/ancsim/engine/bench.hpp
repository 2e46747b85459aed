#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ancsim::engine {

struct Timing {
  double mean_ns = 0.0;  // per sample, all channels
  double std_ns = 0.0;   // across repeats
};

struct BenchRow {
  std::size_t taps = 0;
  std::size_t block = 0;
  std::size_t channels = 0;
  Timing hybrid;  // full engine, AFC off
  Timing head;    // engine with only the 2B-tap head
  Timing tail;    // hybrid minus head, amortized over the block
  Timing direct;  // time-domain FIR of the full length
};

struct BenchOptions {
  std::size_t channels = 4;
  double seconds = 1.0;  // signal length per repeat
  int repeats = 5;
  std::uint64_t seed = 1;
};

// Times hybrid partitioned convolution against a direct time-domain FIR on
// the same seeded input and filters.
BenchRow bench_convolution(std::size_t taps, std::size_t block, const BenchOptions& options = {});

// Direct FIR with a mirrored history buffer; the reference used by the bench.
class DirectFir {
 public:
  explicit DirectFir(std::vector<std::vector<double>> taps);
  double process_sample(const double* frame);

 private:
  std::vector<std::vector<double>> rev_;
  std::vector<std::vector<double>> hist_;
  std::size_t len_ = 0, pos_ = 0;
};

}  // namespace ancsim::engine
