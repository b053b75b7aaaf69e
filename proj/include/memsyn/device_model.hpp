#pragma once

// Behavioral model of the two-stage synapse READ path: resistance levels,
// per-configuration read currents, resolutions, additive read noise and the
// adjacent-level read errors that noise produces.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memsyn/errors.hpp"
#include "memsyn/rng.hpp"

namespace memsyn {

inline constexpr double kMinLrsOhms = 5e3;
inline constexpr double kMaxLrsOhms = 20e3;
inline constexpr int kMinBitWidth = 2;
inline constexpr int kMaxBitWidth = 4;
inline constexpr int kDefaultBitWidth = 4;

constexpr int level_count(int bit_width) { return 1 << bit_width; }

inline void check_bit_width(int bit_width) {
  if (bit_width < kMinBitWidth || bit_width > kMaxBitWidth)
    throw DomainError("bit width " + std::to_string(bit_width) +
                      " outside [2, 4]");
}

/// Discrete synaptic state: one of 2^b resistance levels spanning the LRS
/// programming window. Index 0 is the lowest resistance (highest current).
class WeightLevel {
 public:
  WeightLevel(int index, int bit_width = kDefaultBitWidth)
      : index_(index), bit_width_(bit_width) {
    check_bit_width(bit_width);
    if (index < 0 || index >= level_count(bit_width))
      throw DomainError("level index " + std::to_string(index) +
                        " outside [0, " +
                        std::to_string(level_count(bit_width) - 1) + "]");
  }

  int index() const { return index_; }
  int bit_width() const { return bit_width_; }
  int count() const { return level_count(bit_width_); }
  bool is_boundary() const { return index_ == 0 || index_ == count() - 1; }

  friend bool operator==(const WeightLevel&, const WeightLevel&) = default;

 private:
  int index_;
  int bit_width_;
};

inline double resistance_of(const WeightLevel& level) {
  const double step = (kMaxLrsOhms - kMinLrsOhms) / (level.count() - 1);
  return kMinLrsOhms + level.index() * step;
}

enum class PresetName { BaseSizing, Stage1Sizing, Stage2Sizing, VRead063, BodyBias03 };

inline constexpr std::array<PresetName, 5> kAllPresets = {
    PresetName::BaseSizing, PresetName::Stage1Sizing, PresetName::Stage2Sizing,
    PresetName::VRead063, PresetName::BodyBias03};

inline std::string_view to_string(PresetName n) {
  switch (n) {
    case PresetName::BaseSizing: return "BaseSizing";
    case PresetName::Stage1Sizing: return "Stage1Sizing";
    case PresetName::Stage2Sizing: return "Stage2Sizing";
    case PresetName::VRead063: return "VRead063";
    case PresetName::BodyBias03: return "BodyBias03";
  }
  return "?";
}

inline PresetName parse_preset(std::string_view s) {
  for (auto n : kAllPresets)
    if (to_string(n) == s) return n;
  throw ConfigurationError("unknown preset '" + std::string(s) + "'");
}

/// Transistor width/length in micrometers.
struct DeviceSize {
  double w_um;
  double l_um;
};

/// Named device sizing plus run-time settings of the READ circuit.
///
/// Scalar figures are stored in the units they are tabulated in (nA, uA, uW)
/// so they print exactly; the SI accessors convert.
struct ReadConfiguration {
  PresetName name;
  DeviceSize mp1;
  DeviceSize mn1;
  DeviceSize mn2;
  double vdd_read_v;
  double v_read_v;
  double body_bias_v;
  double resolution_nA;
  double anchor_5k_uA;
  double max_read_power_uW;

  double resolution() const { return resolution_nA * 1e-9; }
  double anchor_current_5k() const { return anchor_5k_uA * 1e-6; }
  double max_read_power() const { return max_read_power_uW * 1e-6; }
};

/// The five evaluated configurations. Stage1Sizing has no published 5 kOhm
/// current; it reuses the base-sizing value.
inline const std::vector<ReadConfiguration>& preset_table() {
  static const std::vector<ReadConfiguration> table = {
      {PresetName::BaseSizing, {0.5, 0.5}, {1, 0.5}, {0.5, 0.5}, 1.2, 0.6, 0.0,
       19, 21.8, 18.87},
      {PresetName::Stage1Sizing, {1, 0.5}, {4, 0.5}, {0.5, 0.5}, 1.2, 0.6, 0.0,
       81, 21.8, 19.82},
      {PresetName::Stage2Sizing, {1, 0.5}, {4, 0.5}, {4, 4}, 1.2, 0.6, 0.0,
       98, 21.8 * 1.2248, 18.84},
      {PresetName::VRead063, {1, 0.5}, {4, 0.5}, {4, 4}, 1.2, 0.63, 0.0, 143,
       19.1, 19.6},
      {PresetName::BodyBias03, {1, 0.5}, {4, 0.5}, {4, 4}, 1.2, 0.63, 0.3, 165,
       28, 18.19},
  };
  return table;
}

inline const ReadConfiguration& preset(PresetName n) {
  return preset_table()[static_cast<std::size_t>(n)];
}

enum class CurrentMapLaw { UniformStep, ConductanceAffine };

inline std::string_view to_string(CurrentMapLaw law) {
  return law == CurrentMapLaw::UniformStep ? "uniform" : "affine";
}

inline CurrentMapLaw parse_law(std::string_view s) {
  if (s == "uniform" || s == "UniformStep") return CurrentMapLaw::UniformStep;
  if (s == "affine" || s == "ConductanceAffine")
    return CurrentMapLaw::ConductanceAffine;
  throw ConfigurationError("unknown current-map law '" + std::string(s) + "'");
}

/// Level -> read current map, calibrated from a configuration's 5 kOhm
/// anchor current and its resolution.
///
/// UniformStep:       I(i) = I_5k - i * delta
/// ConductanceAffine: I(R) = a / R + c, with I(5k) = I_5k and
///                    I(19k) - I(20k) = delta.
/// A default-constructed map is uncalibrated and refuses to evaluate.
class CurrentMap {
 public:
  CurrentMap() = default;

  static CurrentMap calibrate(const ReadConfiguration& cfg,
                              CurrentMapLaw law = CurrentMapLaw::UniformStep) {
    return calibrate(cfg.anchor_current_5k(), cfg.resolution(), law);
  }

  static CurrentMap calibrate(double anchor_5k, double delta, CurrentMapLaw law) {
    if (!(anchor_5k > 0.0) || !(delta > 0.0))
      throw ConfigurationError("current map needs positive anchor and resolution");
    CurrentMap m;
    m.law_ = law;
    m.anchor_ = anchor_5k;
    m.delta_ = delta;
    m.slope_ = delta / (1.0 / 19e3 - 1.0 / 20e3);
    m.calibrated_ = true;
    return m;
  }

  bool calibrated() const { return calibrated_; }
  CurrentMapLaw law() const { return law_; }
  double anchor() const { return anchor_; }
  double delta() const { return delta_; }
  /// Conductance coefficient `a` of the affine law (A * Ohm).
  double conductance_slope() const { return slope_; }

  /// Current at an arbitrary resistance. Only defined for the affine law.
  double at_resistance(double ohms) const {
    require();
    if (law_ != CurrentMapLaw::ConductanceAffine)
      throw ConfigurationError("uniform-step map is defined on level indices only");
    if (!(ohms > 0.0)) throw DomainError("resistance must be positive");
    // Written relative to 5 kOhm so the anchor is reproduced exactly.
    return anchor_ + slope_ * (1.0 / ohms - 1.0 / kMinLrsOhms);
  }

  double operator()(const WeightLevel& level) const {
    require();
    if (law_ == CurrentMapLaw::UniformStep) return anchor_ - level.index() * delta_;
    return at_resistance(resistance_of(level));
  }

 private:
  void require() const {
    if (!calibrated_) throw ConfigurationError("current map is not calibrated");
  }

  CurrentMapLaw law_ = CurrentMapLaw::UniformStep;
  double anchor_ = 0.0;
  double delta_ = 0.0;
  double slope_ = 0.0;
  bool calibrated_ = false;
};

inline double read_current(const ReadConfiguration& cfg, const WeightLevel& level,
                           CurrentMapLaw law = CurrentMapLaw::UniformStep) {
  return CurrentMap::calibrate(cfg, law)(level);
}

/// Smallest gap between adjacent level currents.
inline double min_resolution(const CurrentMap& map, int bit_width = kDefaultBitWidth) {
  check_bit_width(bit_width);
  double best = std::numeric_limits<double>::infinity();
  double prev = map(WeightLevel(0, bit_width));
  for (int i = 1; i < level_count(bit_width); ++i) {
    const double cur = map(WeightLevel(i, bit_width));
    best = std::min(best, std::abs(prev - cur));
    prev = cur;
  }
  return best;
}

inline double min_resolution(const ReadConfiguration& cfg,
                             CurrentMapLaw law = CurrentMapLaw::UniformStep) {
  return min_resolution(CurrentMap::calibrate(cfg, law));
}

/// Zero-mean additive Gaussian read noise, level independent.
struct NoiseModel {
  explicit NoiseModel(double sigma_amps = 0.0) : sigma(sigma_amps) {
    if (!(sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
  }
  double sigma;
};

struct NoisyRead {
  double measured;
  WeightLevel decoded;
};

/// Level whose ideal current is nearest to `measured`. Exact ties go to the
/// lower-current (higher-index) level.
inline WeightLevel decode_current(const CurrentMap& map, double measured,
                                  int bit_width) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < level_count(bit_width); ++i) {
    const double d = std::abs(map(WeightLevel(i, bit_width)) - measured);
    if (d <= best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return WeightLevel(best, bit_width);
}

inline NoisyRead noisy_read(const CurrentMap& map, const WeightLevel& level,
                            const NoiseModel& noise, Rng& rng) {
  double measured = map(level);
  if (noise.sigma > 0.0)
    measured += std::normal_distribution<double>(0.0, noise.sigma)(rng);
  return {measured, decode_current(map, measured, level.bit_width())};
}

inline NoisyRead noisy_read(const ReadConfiguration& cfg, const WeightLevel& level,
                            const NoiseModel& noise, Rng& rng,
                            CurrentMapLaw law = CurrentMapLaw::UniformStep) {
  return noisy_read(CurrentMap::calibrate(cfg, law), level, noise, rng);
}

/// Standard Gaussian upper tail Q(x).
inline double gaussian_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Probability that a read lands on a neighbouring level, given level spacing
/// `delta` and noise `sigma`. Interior levels can err in two directions.
inline double adjacent_error_prob(double delta, double sigma, bool interior = true) {
  if (!(delta > 0.0)) throw DomainError("level spacing must be positive");
  if (!(sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
  if (sigma == 0.0) return 0.0;
  const double q = gaussian_tail(delta / (2.0 * sigma));
  return interior ? 2.0 * q : q;
}

struct ReadStats {
  double mean = 0.0;
  double std = 0.0;
  double error_rate = 0.0;
  std::size_t samples = 0;
};

/// Sample statistics of `n` noisy reads of one level. `std` is the
/// unbiased sample deviation (0 for n = 1).
inline ReadStats monte_carlo_read_stats(const CurrentMap& map, const WeightLevel& level,
                                        const NoiseModel& noise, std::size_t n,
                                        Rng& rng) {
  if (n == 0) throw DomainError("monte carlo needs n >= 1");
  double mean = 0.0, m2 = 0.0;
  std::size_t errors = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = noisy_read(map, level, noise, rng);
    // Welford
    const double d = r.measured - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (r.measured - mean);
    if (r.decoded != level) ++errors;
  }
  ReadStats s;
  s.samples = n;
  s.mean = mean;
  s.std = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  s.error_rate = static_cast<double>(errors) / static_cast<double>(n);
  return s;
}

inline ReadStats monte_carlo_read_stats(const ReadConfiguration& cfg,
                                        const WeightLevel& level,
                                        const NoiseModel& noise, std::size_t n,
                                        Rng& rng,
                                        CurrentMapLaw law = CurrentMapLaw::UniformStep) {
  return monte_carlo_read_stats(CurrentMap::calibrate(cfg, law), level, noise, n, rng);
}

// ---------------------------------------------------------------------------
// Run-time resolution sweeps

enum class SweepKind { VRead, BodyBias };

inline std::string_view to_string(SweepKind k) {
  return k == SweepKind::VRead ? "v_read" : "body_bias";
}

inline SweepKind parse_sweep_kind(std::string_view s) {
  if (s == "v_read") return SweepKind::VRead;
  if (s == "body_bias") return SweepKind::BodyBias;
  throw ConfigurationError("unknown sweep kind '" + std::string(s) + "'");
}

struct SweepAnchor {
  double control_v;
  double resolution_nA;
};

/// Only numerically quoted points are tabulated; control values are
/// strictly increasing.
inline std::span<const SweepAnchor> sweep_anchors(SweepKind kind) {
  static constexpr std::array<SweepAnchor, 2> v_read = {{{0.60, 98}, {0.63, 143}}};
  static constexpr std::array<SweepAnchor, 3> body = {
      {{0.0, 143}, {0.3, 165}, {0.4, 88}}};
  if (kind == SweepKind::VRead) return v_read;
  return body;
}

/// Piecewise-linear resolution (amperes) between anchors.
inline double sweep_resolution(SweepKind kind, double control_v) {
  const auto a = sweep_anchors(kind);
  if (!(control_v >= a.front().control_v && control_v <= a.back().control_v)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s control %.6g V outside [%.6g, %.6g] V",
                  std::string(to_string(kind)).c_str(), control_v,
                  a.front().control_v, a.back().control_v);
    throw RangeError(buf);
  }
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    if (control_v == a[i].control_v) return a[i].resolution_nA * 1e-9;
    if (control_v < a[i + 1].control_v) {
      const double t = (control_v - a[i].control_v) / (a[i + 1].control_v - a[i].control_v);
      return (a[i].resolution_nA + t * (a[i + 1].resolution_nA - a[i].resolution_nA)) * 1e-9;
    }
  }
  return a.back().resolution_nA * 1e-9;
}

// ---------------------------------------------------------------------------
// CSV export

/// `%.10g`, enough to print every tabulated literal exactly.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_presets_csv(std::ostream& os) {
  os << "name,mp1_w,mp1_l,mn1_w,mn1_l,mn2_w,mn2_l,v_read,body_bias,"
        "resolution_nA,anchor_uA,power_uW\n";
  for (const auto& c : preset_table()) {
    os << to_string(c.name) << ',' << format_number(c.mp1.w_um) << ','
       << format_number(c.mp1.l_um) << ',' << format_number(c.mn1.w_um) << ','
       << format_number(c.mn1.l_um) << ',' << format_number(c.mn2.w_um) << ','
       << format_number(c.mn2.l_um) << ',' << format_number(c.v_read_v) << ','
       << format_number(c.body_bias_v) << ',' << format_number(c.resolution_nA)
       << ',' << format_number(c.anchor_5k_uA) << ','
       << format_number(c.max_read_power_uW) << '\n';
  }
}

}  // namespace memsyn
