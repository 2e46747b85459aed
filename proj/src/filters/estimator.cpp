#include "ancsim/filters/estimator.hpp"

#include "ancsim/error.hpp"

namespace ancsim::filters {

AncFilterSet ZeroEstimator::estimate(const MultiChannelWaveform& context, const FirFilter& /*s_hat*/,
                                     const Waveform* /*ear*/) const {
  if (context.num_channels() == 0) throw InvalidArgument("estimator context has no channels");
  return AncFilterSet::zeros(context.num_channels(), length_, context.sample_rate_hz);
}

AncFilterSet OracleWienerEstimator::estimate(const MultiChannelWaveform& context, const FirFilter& s_hat,
                                             const Waveform* ear) const {
  if (!ear) throw InvalidArgument("oracle Wiener estimator needs the ear signal");
  context.validate("estimator context");
  const auto zero = AncFilterSet::zeros(context.num_channels(), config_.filter_length, context.sample_rate_hz);

  bool silent = true;
  for (const auto& ch : context.channels) silent = silent && energy(ch) == 0.0;
  if (silent) {
    if (config_.on_silence == SilencePolicy::kError) throw NumericalError("estimator context is silent");
    return zero;
  }

  WienerProblem problem;
  problem.filtered_refs = filtered_reference(context, s_hat);
  problem.target = *ear;
  problem.filter_length = config_.filter_length;
  problem.beta = config_.beta;
  bool refs_silent = true;
  for (const auto& ch : problem.filtered_refs.channels) refs_silent = refs_silent && energy(ch) == 0.0;
  if (refs_silent) {
    if (config_.on_silence == SilencePolicy::kError) throw NumericalError("filtered references are silent");
    return zero;
  }
  return wiener_solve(problem, config_.solver);
}

std::unique_ptr<FilterEstimator> make_estimator(const std::string& name, const OracleWienerConfig& config) {
  if (name == "oracle_wiener" || name == "wiener") return std::make_unique<OracleWienerEstimator>(config);
  if (name == "zero") return std::make_unique<ZeroEstimator>(config.filter_length);
  throw ConfigError("unknown estimator '" + name + "' (expected oracle_wiener or zero)");
}

}  // namespace ancsim::filters
