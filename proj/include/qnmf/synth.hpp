#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/qals.hpp"
#include "qnmf/quaternion.hpp"
#include "qnmf/stokes.hpp"

namespace qnmf::synth {

/// Gaussian bump in band index: amplitude * exp(-(m - center)^2 / (2 width^2)).
struct Bump {
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;

  friend bool operator==(const Bump&, const Bump&) = default;
};

/// Pure unit axis pinned at a (fractional) band position.
struct AxisKeyframe {
  double band = 0.0;
  Quaternion axis = Quaternion::i();

  friend bool operator==(const AxisKeyframe&, const AxisKeyframe&) = default;
};

/// Generative description of one polarized source spectrum.
struct SourceSpec {
  std::size_t num_bands = 0;
  std::vector<Bump> intensity_profile;
  /// Added to every band so that the intensity never vanishes.
  double floor = 0.0;
  /// One value (constant) or one value per band.
  std::vector<double> dop_profile = {0.0};
  /// One keyframe means a constant axis. Empty means keyframes drawn from the seed.
  std::vector<AxisKeyframe> axis_profile;

  void validate(const std::string& path = "source") const {
    if (num_bands == 0) throw ConfigError(path + ".num_bands", "must be >= 1");
    if (!(floor >= 0.0)) throw ConfigError(path + ".floor", "must be >= 0");
    for (std::size_t b = 0; b < intensity_profile.size(); ++b) {
      const auto& bump = intensity_profile[b];
      const std::string at = path + ".intensity_profile[" + std::to_string(b) + "]";
      if (!(bump.amplitude >= 0.0)) throw ConfigError(at + ".amplitude", "must be >= 0");
      if (!(bump.width > 0.0)) throw ConfigError(at + ".width", "must be > 0");
    }
    if (dop_profile.size() != 1 && dop_profile.size() != num_bands) {
      throw ConfigError(path + ".dop_profile", "needs 1 or num_bands values");
    }
    for (std::size_t b = 0; b < dop_profile.size(); ++b) {
      if (!(dop_profile[b] >= 0.0 && dop_profile[b] <= 1.0)) {
        throw ConfigError(path + ".dop_profile[" + std::to_string(b) + "]", "must lie in [0, 1]");
      }
    }
    for (std::size_t k = 0; k < axis_profile.size(); ++k) {
      const auto& a = axis_profile[k].axis;
      if (std::abs(a.re) > 1e-12 || std::abs(abs(a) - 1.0) > 1e-9) {
        throw ConfigError(path + ".axis_profile[" + std::to_string(k) + "]", "axis must be a pure unit quaternion");
      }
    }
  }

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

/// Isotropic 2D Gaussian blob on the pixel grid.
struct Blob {
  double row = 0.0;
  double col = 0.0;
  double sigma = 1.0;
  double amplitude = 1.0;

  friend bool operator==(const Blob&, const Blob&) = default;
};

struct ActivationSpec {
  std::size_t height = 0;
  std::size_t width = 0;
  /// blobs[p] lists the blobs of source p. An empty list is drawn from the seed.
  std::vector<std::vector<Blob>> blobs;
  /// Blob values beyond cutoff * sigma from the center are zero.
  double cutoff = 3.0;
  bool ensure_pure_pixels = false;
  double floor = 0.0;

  std::size_t pixels() const { return height * width; }

  void validate(const std::string& path = "activations") const {
    if (height == 0 || width == 0) throw ConfigError(path + ".grid", "must be non-empty");
    if (blobs.empty()) throw ConfigError(path + ".blobs", "needs one entry per source");
    if (!(floor >= 0.0)) throw ConfigError(path + ".floor", "must be >= 0");
    if (!(cutoff > 0.0)) throw ConfigError(path + ".cutoff", "must be > 0");
    for (std::size_t p = 0; p < blobs.size(); ++p) {
      for (std::size_t b = 0; b < blobs[p].size(); ++b) {
        const std::string at = path + ".blobs[" + std::to_string(p) + "][" + std::to_string(b) + "]";
        if (!(blobs[p][b].sigma > 0.0)) throw ConfigError(at + ".sigma", "must be > 0");
        if (!(blobs[p][b].amplitude >= 0.0)) throw ConfigError(at + ".amplitude", "must be >= 0");
      }
    }
  }

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

namespace detail {

inline Quaternion random_axis(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Quaternion v{0.0, normal(rng), normal(rng), normal(rng)};
    const double n = imag_abs(v);
    if (n > 1e-6) return v / n;
  }
}

/// Normalized linear interpolation between axis keyframes.
inline Quaternion axis_at(const std::vector<AxisKeyframe>& keys, double band) {
  if (keys.size() == 1 || band <= keys.front().band) return keys.front().axis;
  if (band >= keys.back().band) return keys.back().axis;
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (band > keys[k].band) continue;
    const double span = keys[k].band - keys[k - 1].band;
    const double t = span > 0.0 ? (band - keys[k - 1].band) / span : 1.0;
    const Quaternion mix = keys[k - 1].axis * (1.0 - t) + keys[k].axis * t;
    const double n = imag_abs(mix);
    // Antipodal keyframes pass through the origin; hold the earlier axis there.
    if (n < 1e-9) return keys[k - 1].axis;
    return mix / n;
  }
  return keys.back().axis;
}

}  // namespace detail

/// Intensity of a source at band m.
inline double intensity_at(const SourceSpec& spec, std::size_t m) {
  double value = spec.floor;
  for (const auto& b : spec.intensity_profile) {
    const double d = (static_cast<double>(m) - b.center) / b.width;
    value += b.amplitude * std::exp(-0.5 * d * d);
  }
  return value;
}

/// Source matrix W (M x P), column p generated from specs[p]:
/// w_mp = I(m) (1 + dop(m) axis(m)).
inline QuaternionMatrix gen_sources(const std::vector<SourceSpec>& specs, std::uint64_t seed) {
  if (specs.empty()) throw ConfigError("sources", "needs at least one source");
  const std::size_t bands = specs.front().num_bands;
  std::mt19937_64 rng(seed);
  QuaternionMatrix W(bands, specs.size());
  for (std::size_t p = 0; p < specs.size(); ++p) {
    const auto& spec = specs[p];
    spec.validate("sources[" + std::to_string(p) + "]");
    if (spec.num_bands != bands) {
      throw ConfigError("sources[" + std::to_string(p) + "].num_bands", "differs from the first source");
    }
    std::vector<AxisKeyframe> keys = spec.axis_profile;
    if (keys.empty()) {
      const double last = static_cast<double>(bands - 1);
      for (double pos : {0.0, 0.5 * last, last}) keys.push_back({pos, detail::random_axis(rng)});
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.band < b.band; });
    for (std::size_t m = 0; m < bands; ++m) {
      const double dop = spec.dop_profile.size() == 1 ? spec.dop_profile[0] : spec.dop_profile[m];
      const double intensity = intensity_at(spec, m);
      const Quaternion axis = detail::axis_at(keys, static_cast<double>(m));
      W(m, p) = Quaternion(intensity) + axis * (intensity * dop);
    }
  }
  return W;
}

/// Generated activations with the pure-pixel witnesses that were enforced.
struct Activations {
  RealMatrix H;
  /// pure_pixels[p] is a column where source p is the only active one.
  std::vector<std::size_t> pure_pixels;
};

/// Activation matrix H (P x height*width); pixel (r, c) maps to column r*width + c.
inline Activations gen_activations(ActivationSpec spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t rank = spec.blobs.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& list : spec.blobs) {
    if (!list.empty()) continue;
    const double scale = static_cast<double>(std::min(spec.height, spec.width));
    list.push_back({unit(rng) * static_cast<double>(spec.height - 1), unit(rng) * static_cast<double>(spec.width - 1),
                    (0.1 + 0.15 * unit(rng)) * scale, 0.5 + unit(rng)});
  }

  Activations out;
  out.H = RealMatrix::Constant(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(spec.pixels()), spec.floor);
  for (std::size_t p = 0; p < rank; ++p) {
    for (const auto& blob : spec.blobs[p]) {
      const double reach = spec.cutoff * blob.sigma;
      for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t c = 0; c < spec.width; ++c) {
          const double dr = static_cast<double>(r) - blob.row;
          const double dc = static_cast<double>(c) - blob.col;
          const double dist_sq = dr * dr + dc * dc;
          if (dist_sq > reach * reach) continue;
          out.H(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(r * spec.width + c)) +=
              blob.amplitude * std::exp(-0.5 * dist_sq / (blob.sigma * blob.sigma));
        }
      }
    }
  }

  if (spec.ensure_pure_pixels) {
    // For each source, take the pixel where it dominates most and silence the others there.
    std::vector<bool> used(spec.pixels(), false);
    for (std::size_t p = 0; p < rank; ++p) {
      double best_share = -1.0;
      std::size_t best = 0;
      for (Eigen::Index n = 0; n < out.H.cols(); ++n) {
        if (used[static_cast<std::size_t>(n)]) continue;
        const double total = out.H.col(n).sum();
        const double share = total > 0.0 ? out.H(static_cast<Eigen::Index>(p), n) / total : 0.0;
        if (share > best_share || (share == best_share && out.H(static_cast<Eigen::Index>(p), n) >
                                                              out.H(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(best)))) {
          best_share = share;
          best = static_cast<std::size_t>(n);
        }
      }
      const auto col = static_cast<Eigen::Index>(best);
      if (!(out.H(static_cast<Eigen::Index>(p), col) > 0.0)) out.H(static_cast<Eigen::Index>(p), col) = 1.0;
      for (std::size_t q = 0; q < rank; ++q)
        if (q != p) out.H(static_cast<Eigen::Index>(q), col) = 0.0;
      used[best] = true;
      out.pure_pixels.push_back(best);
    }
  }
  return out;
}

/// X = W H, plus optional i.i.d. Gaussian noise on all four components
/// followed by entry-wise cone projection.
inline QuaternionMatrix assemble(const QuaternionMatrix& W, const RealMatrix& H, double noise_sigma,
                                 std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma", "must be >= 0");
  QuaternionMatrix X = matmul(W, H);
  if (noise_sigma == 0.0) return X;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sigma);
  for (auto& e : X.entries()) {
    e += Quaternion{normal(rng), normal(rng), normal(rng), normal(rng)};
    e = project_cone(e);
  }
  return X;
}

/// Ground truth plus data of a generated instance.
struct Dataset {
  QnmfFactors truth;
  QuaternionMatrix X;
  std::vector<std::size_t> pure_pixels;
};

/// Three fully polarized, never-vanishing sources with broad overlapping
/// spectra (the first two share a similar peak) and spectrally varying axes;
/// activation maps are overlapping blobs with enforced pure pixels.
inline std::vector<SourceSpec> three_source_sources(std::size_t bands) {
  const double b = static_cast<double>(bands);
  std::vector<SourceSpec> s(3);
  for (auto& spec : s) {
    spec.num_bands = bands;
    spec.dop_profile = {1.0};
  }
  s[0].intensity_profile = {{0.30 * b, 0.10 * b, 1.0}, {0.65 * b, 0.15 * b, 0.4}};
  s[0].floor = 0.15;
  s[0].axis_profile = {{0.0, Quaternion(0.0, 1.0, 0.0, 0.0)},
                       {0.5 * b, Quaternion(0.0, 0.6, 0.8, 0.0)},
                       {b - 1.0, Quaternion(0.0, 0.0, 0.6, 0.8)}};
  s[1].intensity_profile = {{0.32 * b, 0.12 * b, 0.9}, {0.80 * b, 0.08 * b, 0.3}};
  s[1].floor = 0.10;
  s[1].axis_profile = {{0.0, Quaternion(0.0, 0.0, 0.0, 1.0)},
                       {0.6 * b, Quaternion(0.0, -0.8, 0.0, 0.6)},
                       {b - 1.0, Quaternion(0.0, -0.6, -0.8, 0.0)}};
  s[2].intensity_profile = {{0.60 * b, 0.20 * b, 0.8}};
  s[2].floor = 0.20;
  s[2].axis_profile = {{0.0, Quaternion(0.0, 0.0, -1.0, 0.0)},
                       {b - 1.0, Quaternion(0.0, 0.6, 0.0, -0.8)}};
  return s;
}

inline ActivationSpec three_source_activations(std::size_t height, std::size_t width) {
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const double s = std::min(h, w);
  ActivationSpec spec;
  spec.height = height;
  spec.width = width;
  spec.cutoff = 2.0;
  spec.ensure_pure_pixels = true;
  spec.blobs = {{{0.30 * h, 0.30 * w, 0.14 * s, 1.0}, {0.75 * h, 0.20 * w, 0.08 * s, 0.6}},
                {{0.45 * h, 0.65 * w, 0.16 * s, 0.9}},
                {{0.75 * h, 0.60 * w, 0.12 * s, 1.1}, {0.20 * h, 0.80 * w, 0.07 * s, 0.5}}};
  return spec;
}

inline Dataset three_source_dataset(std::size_t bands, std::size_t height, std::size_t width, std::uint64_t seed,
                                    double noise_sigma = 0.0) {
  Dataset d;
  d.truth.W = gen_sources(three_source_sources(bands), seed);
  Activations act = gen_activations(three_source_activations(height, width), seed);
  d.truth.H = std::move(act.H);
  d.pure_pixels = std::move(act.pure_pixels);
  d.X = assemble(d.truth.W, d.truth.H, noise_sigma, seed);
  return d;
}

/// Polarization constants of the two-source partially polarized scenario.
inline constexpr double kTwoSourceDop1 = 0.7;
inline constexpr double kTwoSourceDop2 = 0.5;

inline Quaternion normalized_axis(double i, double j, double k) {
  const Quaternion v{0.0, i, j, k};
  return v / imag_abs(v);
}

inline Quaternion two_source_axis1() { return normalized_axis(0.87, -0.25, -0.43); }
inline Quaternion two_source_axis2() { return normalized_axis(-0.71, 0.44, 0.55); }

/// Two partially polarized, non-vanishing sources with constant polarization
/// and smooth stand-in intensity spectra; strictly positive activations.
inline std::vector<SourceSpec> two_source_sources(std::size_t bands) {
  const double b = static_cast<double>(bands);
  std::vector<SourceSpec> s(2);
  s[0].num_bands = s[1].num_bands = bands;
  s[0].intensity_profile = {{0.25 * b, 0.12 * b, 1.0}, {0.70 * b, 0.10 * b, 0.5}};
  s[0].floor = 0.10;
  s[0].dop_profile = {kTwoSourceDop1};
  s[0].axis_profile = {{0.0, two_source_axis1()}};
  s[1].intensity_profile = {{0.55 * b, 0.15 * b, 0.9}};
  s[1].floor = 0.15;
  s[1].dop_profile = {kTwoSourceDop2};
  s[1].axis_profile = {{0.0, two_source_axis2()}};
  return s;
}

inline ActivationSpec two_source_activations(std::size_t height, std::size_t width) {
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const double s = std::min(h, w);
  ActivationSpec spec;
  spec.height = height;
  spec.width = width;
  spec.cutoff = 3.0;
  spec.floor = 0.1;
  spec.ensure_pure_pixels = false;
  spec.blobs = {{{0.35 * h, 0.35 * w, 0.2 * s, 1.0}}, {{0.65 * h, 0.60 * w, 0.2 * s, 1.0}}};
  return spec;
}

inline Dataset two_source_dataset(std::size_t bands, std::size_t height, std::size_t width, std::uint64_t seed) {
  Dataset d;
  d.truth.W = gen_sources(two_source_sources(bands), seed);
  Activations act = gen_activations(two_source_activations(height, width), seed);
  d.truth.H = std::move(act.H);
  d.X = assemble(d.truth.W, d.truth.H, 0.0, seed);
  return d;
}

}  // namespace qnmf::synth
