#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "ancsim/filters/filter_set.hpp"
#include "ancsim/filters/wiener.hpp"
#include "ancsim/signal.hpp"

namespace ancsim::filters {

// Produces control filters from a context window of mic signals. `ear` is the
// oracle ear signal over the same window, when the estimator needs one.
// Implementations must be safe to call concurrently on distinct inputs.
class FilterEstimator {
 public:
  virtual ~FilterEstimator() = default;
  virtual std::string name() const = 0;
  virtual std::size_t filter_length() const = 0;
  virtual AncFilterSet estimate(const MultiChannelWaveform& context, const FirFilter& s_hat,
                                const Waveform* ear) const = 0;
};

class ZeroEstimator final : public FilterEstimator {
 public:
  explicit ZeroEstimator(std::size_t filter_length) : length_(filter_length) {}
  std::string name() const override { return "zero"; }
  std::size_t filter_length() const override { return length_; }
  AncFilterSet estimate(const MultiChannelWaveform& context, const FirFilter& s_hat,
                        const Waveform* ear) const override;

 private:
  std::size_t length_;
};

enum class SilencePolicy { kZeroFilters, kError };

struct OracleWienerConfig {
  std::size_t filter_length = 2048;
  std::optional<double> beta;  // nullopt: scale-relative default
  SilencePolicy on_silence = SilencePolicy::kZeroFilters;
  WienerOptions solver;
};

class OracleWienerEstimator final : public FilterEstimator {
 public:
  explicit OracleWienerEstimator(OracleWienerConfig config = {}) : config_(std::move(config)) {}
  std::string name() const override { return "oracle_wiener"; }
  std::size_t filter_length() const override { return config_.filter_length; }
  const OracleWienerConfig& config() const { return config_; }
  AncFilterSet estimate(const MultiChannelWaveform& context, const FirFilter& s_hat,
                        const Waveform* ear) const override;

 private:
  OracleWienerConfig config_;
};

std::unique_ptr<FilterEstimator> make_estimator(const std::string& name, const OracleWienerConfig& config);

}  // namespace ancsim::filters
