#include "ancsim/eval/metric.hpp"

#include <cmath>
#include <limits>

#include "ancsim/error.hpp"

namespace ancsim::eval {

void EvalProtocol::validate(int fs) const {
  if (!(band_low_hz > 0.0 && band_high_hz > band_low_hz && band_high_hz < 0.5 * fs)) {
    throw InvalidArgument("evaluation band must satisfy 0 < low < high < Nyquist");
  }
  if (butterworth_order < 1) throw InvalidArgument("Butterworth order must be >= 1");
  if (!(chunk_s > 0.0)) throw InvalidArgument("chunk length must be positive");
  if (!(context_s > 0.0)) throw InvalidArgument("context length must be positive");
  if (!(application_delay_s >= 0.0)) throw InvalidArgument("application delay must be non-negative");
}

dsp::SosChain EvalProtocol::bandpass(int fs) const {
  validate(fs);
  return dsp::design_butterworth_bandpass(butterworth_order, band_low_hz, band_high_hz, fs);
}

double band_ratio_db(std::span<const double> d_band, std::span<const double> e_band, std::size_t begin,
                     std::size_t end) {
  if (end > d_band.size() || end > e_band.size() || begin > end) throw InvalidArgument("band ratio range out of bounds");
  const double pd = energy(d_band.subspan(begin, end - begin));
  const double pe = energy(e_band.subspan(begin, end - begin));
  if (pe == 0.0) return std::numeric_limits<double>::infinity();
  if (pd == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(pd / pe);
}

double noise_reduction_db(const Waveform& d, const Waveform& e, const EvalProtocol& protocol) {
  if (d.size() != e.size()) throw InvalidArgument("noise_reduction_db: d and e differ in length");
  if (d.sample_rate_hz != e.sample_rate_hz) throw InvalidArgument("noise_reduction_db: d and e differ in rate");
  const auto chain = protocol.bandpass(d.sample_rate_hz);
  const auto db = dsp::sos_filter(d.view(), chain);
  const auto eb = dsp::sos_filter(e.view(), chain);
  return band_ratio_db(db, eb, 0, db.size());
}

}  // namespace ancsim::eval
