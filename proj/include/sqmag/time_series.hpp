#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace sqmag {

enum class Units { Volts, Tesla, Spin, ShotNormalized, Dimensionless };

std::string_view to_string(Units u) noexcept;

/// Uniformly sampled real signal with the seeds that produced it.
struct TimeSeries {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
  std::vector<std::uint64_t> seed_provenance;
  Units units = Units::Dimensionless;

  std::size_t size() const noexcept { return samples.size(); }
  double dt() const noexcept { return 1.0 / sample_rate_hz; }
  double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate_hz; }
  /// Throws InvalidParameter unless sample_rate > 0 and the series is non-empty.
  void validate() const;
};

/// CSV with columns time_s,value.
void write_csv(const TimeSeries& ts, std::ostream& out);

/// Little-endian binary: magic "SQTS", u32 version, f64 sample rate,
/// u32 units, u64 n_seeds, seeds, u64 n_samples, samples.
void write_binary(const TimeSeries& ts, std::ostream& out);
TimeSeries read_binary(std::istream& in);

}  // namespace sqmag
