#include "sqmag/time_series.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "sqmag/errors.hpp"

namespace sqmag {

std::string_view to_string(Units u) noexcept {
  switch (u) {
    case Units::Volts: return "V";
    case Units::Tesla: return "T";
    case Units::Spin: return "spin";
    case Units::ShotNormalized: return "shot";
    case Units::Dimensionless: return "1";
  }
  return "?";
}

void TimeSeries::validate() const {
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "sample rate must be positive");
  if (samples.empty()) throw Error(ErrorCode::EmptyDuration, "time series is empty");
}

void write_csv(const TimeSeries& ts, std::ostream& out) {
  out << "# units=" << to_string(ts.units) << " sample_rate_hz=" << ts.sample_rate_hz << "\n";
  out << "time_s,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << static_cast<double>(i) / ts.sample_rate_hz << ',' << ts.samples[i] << '\n';
  }
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'S', 'Q', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::IoError, "truncated time-series file");
  return value;
}

}  // namespace

void write_binary(const TimeSeries& ts, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, ts.sample_rate_hz);
  put(out, static_cast<std::uint32_t>(ts.units));
  put(out, static_cast<std::uint64_t>(ts.seed_provenance.size()));
  for (auto s : ts.seed_provenance) put(out, s);
  put(out, static_cast<std::uint64_t>(ts.samples.size()));
  out.write(reinterpret_cast<const char*>(ts.samples.data()),
            static_cast<std::streamsize>(ts.samples.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::IoError, "failed writing time series");
}

TimeSeries read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(ErrorCode::IoError, "not a time-series file");
  if (get<std::uint32_t>(in) != kVersion) throw Error(ErrorCode::IoError, "unsupported time-series version");
  TimeSeries ts;
  ts.sample_rate_hz = get<double>(in);
  ts.units = static_cast<Units>(get<std::uint32_t>(in));
  ts.seed_provenance.resize(get<std::uint64_t>(in));
  for (auto& s : ts.seed_provenance) s = get<std::uint64_t>(in);
  ts.samples.resize(get<std::uint64_t>(in));
  in.read(reinterpret_cast<char*>(ts.samples.data()), static_cast<std::streamsize>(ts.samples.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::IoError, "truncated time-series samples");
  return ts;
}

}  // namespace sqmag
