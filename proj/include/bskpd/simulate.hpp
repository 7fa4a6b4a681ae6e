#ifndef BSKPD_SIMULATE_HPP
#define BSKPD_SIMULATE_HPP

// Synthetic signal-image data, evaluation metrics and fold splitting.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bskpd/error.hpp"
#include "bskpd/model.hpp"
#include "bskpd/random.hpp"
#include "bskpd/tensor.hpp"

namespace bskpd {

// ---------------------------------------------------------------------------
// PGM (P5) input

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major, rescaled to [0, 1]

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

namespace detail {

inline std::string pgm_token(std::istream& in) {
  std::string tok;
  for (;;) {
    const int c = in.get();
    if (c == EOF) return tok;
    if (c == '#' && tok.empty()) {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
}

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrc::open_failed, "cannot open image " + path);
  if (detail::pgm_token(in) != "P5") throw IoError(IoErrc::bad_magic, path + " is not a P5 PGM");
  GrayImage img;
  long maxval = 0;
  try {
    img.width = std::stoul(detail::pgm_token(in));
    img.height = std::stoul(detail::pgm_token(in));
    maxval = std::stol(detail::pgm_token(in));
  } catch (const std::exception&) {
    throw IoError(IoErrc::bad_header, path + ": malformed PGM header");
  }
  if (img.width == 0 || img.height == 0 || maxval <= 0 || maxval > 65535)
    throw IoError(IoErrc::bad_header, path + ": unsupported PGM geometry or maxval");
  const std::size_t count = img.width * img.height;
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(count * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw IoError(IoErrc::truncated, path + ": expected " + std::to_string(raw.size()) +
                                         " pixel bytes, got " + std::to_string(in.gcount()));
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
    img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return img;
}

// ---------------------------------------------------------------------------
// Signal

// Two smooth blobs, peak 1, values below 0.05 zeroed. Works for any dims;
// the third mode is a Gaussian profile when D3 > 1.
inline DenseTensor3 procedural_blobs(const Dims3& dims) {
  DenseTensor3 c(dims);
  const double d1 = static_cast<double>(dims[0]);
  const double d2 = static_cast<double>(dims[1]);
  const double d3 = static_cast<double>(dims[2]);
  struct Blob {
    double c1, c2, c3, s1, s2, s3, amp;
  };
  const Blob blobs[2] = {
      {0.32 * d1, 0.34 * d2, 0.5 * d3, d1 / 8.0, d2 / 7.0, std::max(d3 / 6.0, 0.5), 1.0},
      {0.68 * d1, 0.66 * d2, 0.5 * d3, d1 / 7.0, d2 / 8.0, std::max(d3 / 6.0, 0.5), 0.8},
  };
  double peak = 0.0;
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i) {
        double v = 0.0;
        for (const auto& b : blobs) {
          const double x = (static_cast<double>(i) + 0.5 - b.c1) / b.s1;
          const double y = (static_cast<double>(j) + 0.5 - b.c2) / b.s2;
          const double z = dims[2] > 1 ? (static_cast<double>(k) + 0.5 - b.c3) / b.s3 : 0.0;
          v = std::max(v, b.amp * std::exp(-0.5 * (x * x + y * y + z * z)));
        }
        c(i, j, k) = v;
        peak = std::max(peak, v);
      }
  for (double& v : c.values()) {
    v /= peak;
    if (v < 0.05) v = 0.0;
  }
  return c;
}

// Image rows map to mode 1, columns to mode 2; D3 = 1.
inline DenseTensor3 image_signal(const GrayImage& img) {
  DenseTensor3 c({img.height, img.width, 1});
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t col = 0; col < img.width; ++col) c(r, col, 0) = img.at(r, col);
  return c;
}

// ---------------------------------------------------------------------------
// Generator

struct SimConfig {
  std::size_t n = 400;
  Dims3 dims{64, 64, 1};
  // Empty: procedural blobs; otherwise a P5 PGM whose size defines D1 x D2.
  std::string signal_image;
  double noise_sd = 0.2682;
  // Noise sd of samples that carry no signal; defaults to noise_sd.
  std::optional<double> pure_noise_sd;
  double signal_fraction = 0.5;
  // Variance of the continuous response's additive error.
  double eps_var = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    if (n == 0) throw ParameterError("simulate: n must be positive");
    if (!(noise_sd > 0.0)) throw ParameterError("simulate: noise sd must be positive");
    if (pure_noise_sd && !(*pure_noise_sd > 0.0))
      throw ParameterError("simulate: pure-noise sd must be positive");
    if (!(signal_fraction >= 0.0 && signal_fraction <= 1.0))
      throw ParameterError("simulate: signal fraction must lie in [0,1]");
    if (!(eps_var >= 0.0)) throw ParameterError("simulate: error variance must be non-negative");
    for (auto d : dims)
      if (d == 0) throw ParameterError("simulate: dims must be positive");
  }
};

struct SimulatedData {
  SampleSet samples;  // responses y1 (continuous), y2 (binary); covariate: intercept
  DenseTensor3 truth;
  std::vector<bool> carries_signal;
};

// X_i = C_true + noise for signal samples, noise otherwise;
// y1 = <X_i, C_true> + N(0, eps_var), y2 ~ Bernoulli(logistic(<X_i, C_true>)).
inline SimulatedData generate(const SimConfig& in) {
  SimConfig cfg = in;
  DenseTensor3 truth;
  if (cfg.signal_image.empty()) {
    truth = procedural_blobs(cfg.dims);
  } else {
    truth = image_signal(read_pgm(cfg.signal_image));
    cfg.dims = truth.dims();
  }
  cfg.validate();
  const double pure_sd = cfg.pure_noise_sd.value_or(cfg.noise_sd);
  const std::size_t n = cfg.n;
  const std::size_t size = product(cfg.dims);
  const RngStream base(cfg.seed, 0x5151);

  // Which samples carry the signal: a seeded shuffle, first round(n f) win.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  {
    RngStream rng = base.substream(1);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
  }
  const auto n_signal = static_cast<std::size_t>(std::llround(cfg.signal_fraction * double(n)));
  std::vector<bool> signal(n, false);
  for (std::size_t i = 0; i < n_signal; ++i) signal[order[i]] = true;

  SimulatedData out;
  auto& s = out.samples;
  s.dims = cfg.dims;
  s.x.resize(n * size);
  s.y.resize(static_cast<Eigen::Index>(n), 2);
  s.z = Matrix::Ones(1, static_cast<Eigen::Index>(n));
  s.covariate_names = {"intercept"};
  s.specs = {{"y1", ResponseKind::continuous}, {"y2", ResponseKind::binary}};
  const double eps_sd = std::sqrt(cfg.eps_var);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng = base.substream(1000 + i);
    double* rec = s.x.data() + i * size;
    const double sd = signal[i] ? cfg.noise_sd : pure_sd;
    double signal_inner = 0.0;
    for (std::size_t e = 0; e < size; ++e) {
      const double noise = sd * rng.normal();
      rec[e] = signal[i] ? truth.data()[e] + noise : noise;
      signal_inner += rec[e] * truth.data()[e];
    }
    const auto row = static_cast<Eigen::Index>(i);
    s.y(row, 0) = signal_inner + eps_sd * rng.normal();
    s.y(row, 1) = rng.uniform() < 1.0 / (1.0 + std::exp(-signal_inner)) ? 1.0 : 0.0;
  }
  out.truth = std::move(truth);
  out.carries_signal = std::move(signal);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

inline double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size())
    throw DataError("rmse: " + std::to_string(pred.size()) + " predictions for " +
                    std::to_string(actual.size()) + " observations");
  if (pred.empty()) throw DataError("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - actual[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

// Mann-Whitney AUC, P(score+ > score-) + P(tie) / 2, via mid-ranks.
inline double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size())
    throw DataError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw DataError("auc: labels must be 0 or 1");
    if (labels[i] == 1.0) ++n_pos;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("auc: undefined with a single class present");
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t)
      if (labels[idx[t]] == 1.0) rank_sum += mid_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// Pearson correlation.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("correlation: need equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Seeded partition of 0..n-1 into `folds` groups whose sizes differ by at
// most one. Returns the fold index of each sample.
inline std::vector<std::size_t> kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ParameterError("kfold: need at least 2 folds");
  if (folds > n)
    throw ParameterError("kfold: " + std::to_string(folds) + " folds for only " +
                         std::to_string(n) + " samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed, 0xF01D);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % folds;
  return fold;
}

}  // namespace bskpd

#endif  // BSKPD_SIMULATE_HPP
