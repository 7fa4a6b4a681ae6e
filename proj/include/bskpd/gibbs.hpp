#ifndef BSKPD_GIBBS_HPP
#define BSKPD_GIBBS_HPP

// Blocked Gibbs sampler for the mixed-response sparse Kronecker model.
//
// Per sweep, for each response k: PG weights and working responses, gamma_k,
// A_k, B_k, then the TPBN local scales of the three blocks; afterwards the
// latent factors U row by row and the cross-response covariance Sigma.
//
// Every random draw comes from a stream addressed by (iteration, site,
// response, row), so the result does not depend on the order in which
// independent blocks are processed. The optional thread pool therefore
// reproduces the sequential chain bit for bit.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "bskpd/distributions.hpp"
#include "bskpd/error.hpp"
#include "bskpd/model.hpp"
#include "bskpd/random.hpp"
#include "bskpd/tensor.hpp"

namespace bskpd {

// Bounds applied to zeta, xi and omega; every clamp is counted.
constexpr double kScaleFloor = 1e-12;
constexpr double kScaleCeil = 1e12;

enum class Site : std::uint64_t {
  init = 1,
  omega,
  gamma,
  a,
  b,
  scales_gamma,
  scales_a,
  scales_b,
  latent,
  sigma,
};

inline RngStream site_stream(const RngStream& base, std::size_t iteration, Site site,
                             std::size_t k, std::size_t row = 0) {
  return base.substream(iteration)
      .substream(static_cast<std::uint64_t>(site))
      .substream(k)
      .substream(row);
}

struct SamplerOptions {
  // 0 or 1 runs sequentially.
  unsigned threads = 0;
  // Keep every kept C_k draw in the output.
  bool keep_draws = false;
  // Added to the Sigma update's degrees of freedom. Zero for the correct
  // kernel; nonzero values exist only to exercise the Geweke control.
  double sigma_dof_offset = 0.0;
  std::size_t progress_every = 100;
  std::function<void(std::size_t iteration, double loglik)> progress;
};

template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::min<std::size_t>(threads, count);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

inline double clamp_scale(double v, std::size_t& events) {
  if (v < kScaleFloor || std::isnan(v)) {
    ++events;
    return kScaleFloor;
  }
  if (v > kScaleCeil) {
    ++events;
    return kScaleCeil;
  }
  return v;
}

// Exact Gaussian conditional draw: dense precision Cholesky when the
// coefficient dimension m fits within n observations, the n x n
// data-augmentation route otherwise.
inline Vector draw_regression(RngStream& rng, const Matrix& design, const Vector& weights,
                              const Vector& prior_var, const Vector& resid) {
  if (design.cols() > design.rows())
    return sample_mvn_structured(rng, design, weights, prior_var, resid);
  Matrix precision = design.transpose() * weights.asDiagonal() * design;
  precision.diagonal().array() += prior_var.array().inverse();
  const Vector linear = design.transpose() * (weights.array() * resid.array()).matrix();
  return sample_mvn_precision(rng, precision, linear);
}

// Prior variances of vec(coef) for a block, (I_R kron diag(zeta)).
inline Vector stacked_prior_var(const TPBNBlock& block) {
  const Eigen::Index m = block.zeta.size();
  const Eigen::Index r = block.coef.cols();
  Vector v(m * r);
  for (Eigen::Index c = 0; c < r; ++c) v.segment(c * m, m) = block.zeta;
  return v;
}

inline std::string where(std::size_t iteration, const char* block, std::size_t k) {
  return "iteration " + std::to_string(iteration) + ", block " + block + ", response " +
         std::to_string(k);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full conditionals

// Binary k: omega_ik ~ PG(1, Theta_ik) and ytilde = (y - 1/2) / omega.
// Continuous k: omega = 1 and ytilde = y. Returns the number of clamp events.
inline std::size_t update_omega(ChainState& state, const UnfoldedDataset& data, std::size_t k) {
  auto& r = state.responses[k];
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto kind = data.specs()[k].kind;
  const auto y = data.y().col(static_cast<Eigen::Index>(k));
  r.omega.resize(n);
  r.ytilde.resize(n);
  if (kind == ResponseKind::continuous) {
    r.omega.setOnes();
    r.ytilde = y;
    return 0;
  }
  std::size_t events = 0;
  const Vector theta = linear_predictor(state, data, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    RngStream rng = site_stream(state.rng, state.iteration, Site::omega, k,
                                static_cast<std::size_t>(i));
    const double w = detail::clamp_scale(sample_pg(rng, {1.0, theta[i]}), events);
    r.omega[i] = w;
    r.ytilde[i] = working_response(y[i], kind, w);
  }
  return events;
}

inline void update_gamma(ChainState& state, const UnfoldedDataset& data, std::size_t k) {
  auto& r = state.responses[k];
  const Vector resid = r.ytilde - tensor_term(data, r.a.coef, r.b.coef) -
                       state.u.col(static_cast<Eigen::Index>(k));
  RngStream rng = site_stream(state.rng, state.iteration, Site::gamma, k);
  try {
    r.gamma.coef.col(0) =
        detail::draw_regression(rng, data.z().transpose(), r.omega, r.gamma.zeta, resid);
  } catch (const NumericalError& e) {
    throw NumericalError(detail::where(state.iteration, "gamma", k) + ": " + e.what(), e.pivot());
  }
}

inline void update_A(ChainState& state, const UnfoldedDataset& data, std::size_t k) {
  auto& r = state.responses[k];
  const std::size_t n = data.n();
  const auto p = static_cast<Eigen::Index>(data.p());
  const Eigen::Index rank = r.a.coef.cols();
  // Row i holds vec(X_i B)^T, so trace(A^T X_i B) = row_i . vec(A).
  Matrix design(static_cast<Eigen::Index>(n), p * rank);
  Matrix xb(p, rank);
  for (std::size_t i = 0; i < n; ++i) {
    xb.noalias() = data.x(i) * r.b.coef;
    design.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(xb.data(), p * rank);
  }
  const Vector resid = r.ytilde - data.z().transpose() * r.gamma.coef.col(0) -
                       state.u.col(static_cast<Eigen::Index>(k));
  RngStream rng = site_stream(state.rng, state.iteration, Site::a, k);
  try {
    const Vector draw =
        detail::draw_regression(rng, design, r.omega, detail::stacked_prior_var(r.a), resid);
    r.a.coef = Eigen::Map<const Matrix>(draw.data(), p, rank);
  } catch (const NumericalError& e) {
    throw NumericalError(detail::where(state.iteration, "A", k) + ": " + e.what(), e.pivot());
  }
}

inline void update_B(ChainState& state, const UnfoldedDataset& data, std::size_t k) {
  auto& r = state.responses[k];
  const std::size_t n = data.n();
  const auto d = static_cast<Eigen::Index>(data.d());
  const Eigen::Index rank = r.b.coef.cols();
  // Row i holds vec(X_i^T A)^T, so trace(A^T X_i B) = row_i . vec(B).
  Matrix design(static_cast<Eigen::Index>(n), d * rank);
  Matrix xa(d, rank);
  for (std::size_t i = 0; i < n; ++i) {
    xa.noalias() = data.x(i).transpose() * r.a.coef;
    design.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(xa.data(), d * rank);
  }
  const Vector resid = r.ytilde - data.z().transpose() * r.gamma.coef.col(0) -
                       state.u.col(static_cast<Eigen::Index>(k));
  RngStream rng = site_stream(state.rng, state.iteration, Site::b, k);
  try {
    const Vector draw =
        detail::draw_regression(rng, design, r.omega, detail::stacked_prior_var(r.b), resid);
    r.b.coef = Eigen::Map<const Matrix>(draw.data(), d, rank);
  } catch (const NumericalError& e) {
    throw NumericalError(detail::where(state.iteration, "B", k) + ": " + e.what(), e.pivot());
  }
}

// zeta_j ~ GIG(u - R/2, |coef_j|^2, 2 xi_j), then xi_j ~ Gamma(a + u, tau + zeta_j).
// Returns the number of clamp events.
inline std::size_t update_local_scales(TPBNBlock& block, RngStream& rng) {
  if (!block.coef.allFinite()) throw NumericalError("local scales: non-finite coefficient row");
  std::size_t events = 0;
  const double lambda = block.u - 0.5 * static_cast<double>(block.coef.cols());
  for (Eigen::Index j = 0; j < block.rows(); ++j) {
    const double chi = block.coef.row(j).squaredNorm();
    double zeta;
    if (chi == 0.0 && lambda <= 0.0) {
      // Conditional collapses onto zero.
      zeta = 0.0;
    } else {
      zeta = sample_gig(rng, {lambda, chi, 2.0 * block.xi[j]});
    }
    block.zeta[j] = detail::clamp_scale(zeta, events);
    block.xi[j] =
        detail::clamp_scale(sample_gamma(rng, block.a + block.u, block.tau + block.zeta[j]), events);
  }
  return events;
}

// Row-wise draw of U: u_i ~ N((S^-1 + D_i)^-1 D_i m_i, (S^-1 + D_i)^-1) with
// D_i = diag(omega_i.) and m_ik = ytilde_ik - trace(A_k^T X_i B_k) - z_i^T gamma_k.
inline void update_U(ChainState& state, const UnfoldedDataset& data, unsigned threads = 0) {
  const std::size_t kk = data.responses();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto k_dim = static_cast<Eigen::Index>(kk);
  Matrix m(n, k_dim);
  Matrix w(n, k_dim);
  for (std::size_t k = 0; k < kk; ++k) {
    const auto& r = state.responses[k];
    const auto c = static_cast<Eigen::Index>(k);
    m.col(c) = r.ytilde - tensor_term(data, r.a.coef, r.b.coef) -
               data.z().transpose() * r.gamma.coef.col(0);
    w.col(c) = r.omega;
  }
  Eigen::LLT<Matrix> llt(state.sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("iteration " + std::to_string(state.iteration) +
                         ": Sigma is not positive definite in the U update");
  const Matrix sigma_inv = llt.solve(Matrix::Identity(k_dim, k_dim));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    Matrix precision = sigma_inv;
    precision.diagonal() += w.row(row).transpose();
    const Vector linear = (w.row(row).array() * m.row(row).array()).transpose();
    RngStream rng = site_stream(state.rng, state.iteration, Site::latent, 0, i);
    state.u.row(row) = sample_mvn_precision(rng, precision, linear).transpose();
  });
}

// Sigma ~ IW(n + K + c0, U^T U + c1 I).
inline void update_sigma(ChainState& state, std::size_t n, double c0, double c1,
                         double dof_offset = 0.0) {
  const Eigen::Index k = state.sigma.rows();
  Matrix scale = state.u.transpose() * state.u;
  scale.diagonal().array() += c1;
  const double dof = static_cast<double>(n) + static_cast<double>(k) + c0 + dof_offset;
  RngStream rng = site_stream(state.rng, state.iteration, Site::sigma, 0);
  state.sigma = sample_inverse_wishart(rng, dof, scale);
}

// ---------------------------------------------------------------------------
// Initialization and sweeps

namespace detail {

inline TPBNBlock init_block(const TpbnHyper& h, Matrix coef, double init_var) {
  TPBNBlock b;
  const Eigen::Index m = coef.rows();
  b.coef = std::move(coef);
  b.a = h.a;
  b.u = h.u;
  b.tau = *h.tau;
  b.zeta = Vector::Constant(m, init_var);
  b.xi = Vector::Constant(m, (h.a + h.u) / (b.tau + init_var));
  return b;
}

}  // namespace detail

// Starting state: A_k ~ MN(0, p^-1/2 I, R^-1/2 I), B_k ~ MN(0, d^-1/2 I, R^-1/2 I),
// gamma_k ~ N(0, q^-1/2 I), omega ~ PG(1, 0) for binary responses, Sigma = I,
// U = 0. Local variances start at the initialization variance of their block.
inline ChainState initialize_state(const UnfoldedDataset& data, const Hyperparams& hyper_in) {
  const Hyperparams hyper = hyper_in.resolved(data.n(), data.q(), data.p(), data.d());
  const std::size_t kk = data.responses();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  const auto d = static_cast<Eigen::Index>(data.d());
  const auto q = static_cast<Eigen::Index>(data.q());
  const auto rank = static_cast<Eigen::Index>(hyper.rank);
  const double var_a = 1.0 / std::sqrt(static_cast<double>(p * rank));
  const double var_b = 1.0 / std::sqrt(static_cast<double>(d * rank));
  const double var_g = 1.0 / std::sqrt(static_cast<double>(q));

  ChainState s;
  s.rng = RngStream(hyper.seed, 0);
  s.u = Matrix::Zero(n, static_cast<Eigen::Index>(kk));
  s.sigma = Matrix::Identity(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(kk));
  s.responses.resize(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    RngStream rng = site_stream(s.rng, 0, Site::init, k);
    auto& r = s.responses[k];
    const double rs = 1.0 / std::sqrt(static_cast<double>(rank));
    r.a = detail::init_block(hyper.tpbn[kABlock],
                             sample_matrix_normal(rng, p, rank, 1.0 / std::sqrt(double(p)), rs),
                             var_a);
    r.b = detail::init_block(hyper.tpbn[kBBlock],
                             sample_matrix_normal(rng, d, rank, 1.0 / std::sqrt(double(d)), rs),
                             var_b);
    r.gamma = detail::init_block(hyper.tpbn[kGammaBlock],
                                 sample_matrix_normal(rng, q, 1, var_g, 1.0), var_g);
    r.omega = Vector::Ones(n);
    r.ytilde = data.y().col(static_cast<Eigen::Index>(k));
    if (data.specs()[k].kind == ResponseKind::binary) {
      for (Eigen::Index i = 0; i < n; ++i) {
        r.omega[i] = sample_pg(rng, {1.0, 0.0});
        r.ytilde[i] = working_response(r.ytilde[i], ResponseKind::binary, r.omega[i]);
      }
    }
  }
  return s;
}

inline void check_finite(const ChainState& s) {
  auto fail = [&](const std::string& what, std::size_t k) {
    throw NumericalError("iteration " + std::to_string(s.iteration) + ": non-finite " + what +
                         " for response " + std::to_string(k));
  };
  for (std::size_t k = 0; k < s.responses.size(); ++k) {
    const auto& r = s.responses[k];
    if (!r.a.coef.allFinite()) fail("A", k);
    if (!r.b.coef.allFinite()) fail("B", k);
    if (!r.gamma.coef.allFinite()) fail("gamma", k);
    if (!r.omega.allFinite()) fail("omega", k);
  }
  if (!s.u.allFinite()) fail("U", 0);
  if (!s.sigma.allFinite()) fail("Sigma", 0);
}

// Per-response part of a sweep: omega, gamma, A, B, local scales.
inline std::size_t sweep_response(ChainState& state, const UnfoldedDataset& data, std::size_t k) {
  std::size_t events = update_omega(state, data, k);
  update_gamma(state, data, k);
  update_A(state, data, k);
  update_B(state, data, k);
  auto& r = state.responses[k];
  RngStream g = site_stream(state.rng, state.iteration, Site::scales_gamma, k);
  RngStream a = site_stream(state.rng, state.iteration, Site::scales_a, k);
  RngStream b = site_stream(state.rng, state.iteration, Site::scales_b, k);
  events += update_local_scales(r.gamma, g);
  events += update_local_scales(r.a, a);
  events += update_local_scales(r.b, b);
  return events;
}

// One full Gibbs sweep; advances state.iteration first.
inline void sweep(ChainState& state, const UnfoldedDataset& data, const Hyperparams& hyper,
                  const SamplerOptions& options = {}) {
  ++state.iteration;
  const std::size_t kk = data.responses();
  std::vector<std::size_t> events(kk, 0);
  parallel_for(kk, options.threads,
               [&](std::size_t k) { events[k] = sweep_response(state, data, k); });
  for (auto e : events) state.clamp_events += e;
  update_U(state, data, options.threads);
  update_sigma(state, data.n(), hyper.c0, hyper.c1, options.sigma_dof_offset);
  check_finite(state);
}

// Observed-data log-likelihood given the current linear predictors.
inline double log_likelihood(const ChainState& state, const UnfoldedDataset& data) {
  double total = 0.0;
  for (std::size_t k = 0; k < data.responses(); ++k) {
    const Vector theta = linear_predictor(state, data, k);
    const auto y = data.y().col(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (data.specs()[k].kind == ResponseKind::continuous) {
        const double e = y[i] - theta[i];
        total += -0.5 * e * e - 0.9189385332046727;
      } else {
        const double t = theta[i];
        const double log1pexp = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        total += y[i] * t - log1pexp;
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Output

// Element-wise posterior median and central 95% interval.
struct Summary {
  Matrix median;
  Matrix lower;  // 2.5%
  Matrix upper;  // 97.5%
};

struct ResponseSummary {
  Summary c;      // p x d, unfolded
  Summary gamma;  // q x 1
};

struct ChainOutput {
  BlockShape shape;
  Dims3 dims{1, 1, 1};
  std::vector<ResponseSpec> specs;
  std::vector<Standardization> standardization;
  std::vector<std::string> covariate_names;
  Hyperparams hyper;  // with resolved global scales
  std::size_t n_train = 0;
  std::size_t kept = 0;
  std::size_t clamp_events = 0;
  std::vector<ResponseSummary> responses;
  Summary sigma;  // K x K
  // Kept draws of unfolded C_k, one column per draw; empty unless requested.
  std::vector<Matrix> c_draws;
};

// Type-7 sample quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// draws: one column per draw of a flattened rows x cols quantity.
inline Summary summarize_draws(const Matrix& draws, Eigen::Index rows, Eigen::Index cols) {
  Summary s{Matrix(rows, cols), Matrix(rows, cols), Matrix(rows, cols)};
  std::vector<double> buf(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index e = 0; e < draws.rows(); ++e) {
    for (Eigen::Index m = 0; m < draws.cols(); ++m) buf[static_cast<std::size_t>(m)] = draws(e, m);
    std::sort(buf.begin(), buf.end());
    s.median.data()[e] = sorted_quantile(buf, 0.5);
    s.lower.data()[e] = sorted_quantile(buf, 0.025);
    s.upper.data()[e] = sorted_quantile(buf, 0.975);
  }
  return s;
}

// Runs T sweeps and summarizes the kept draws t = B + thin, B + 2 thin, ...
// Medians are taken on C_k = A_k B_k^T, never on A_k or B_k.
inline ChainOutput run_chain(const UnfoldedDataset& data, const Hyperparams& hyper_in,
                             const SamplerOptions& options = {},
                             std::optional<ChainState> initial = std::nullopt,
                             ChainState* final_state = nullptr) {
  hyper_in.validate();
  if (data.n() == 0) throw ShapeError("run_chain: dataset is empty");
  const Hyperparams hyper = hyper_in.resolved(data.n(), data.q(), data.p(), data.d());
  ChainState state = initial ? std::move(*initial) : initialize_state(data, hyper);
  state.iteration = 0;

  const std::size_t kk = data.responses();
  const auto pd = static_cast<Eigen::Index>(data.p() * data.d());
  const auto q = static_cast<Eigen::Index>(data.q());
  const auto kept = static_cast<Eigen::Index>(hyper.kept_draws());
  std::vector<Matrix> c_draws(kk, Matrix(pd, kept));
  std::vector<Matrix> g_draws(kk, Matrix(q, kept));
  Matrix s_draws(static_cast<Eigen::Index>(kk * kk), kept);

  Eigen::Index slot = 0;
  for (std::size_t t = 1; t <= hyper.iterations; ++t) {
    sweep(state, data, hyper, options);
    if (options.progress && options.progress_every > 0 && t % options.progress_every == 0)
      options.progress(t, log_likelihood(state, data));
    if (t > hyper.burn_in && (t - hyper.burn_in) % hyper.thin == 0 && slot < kept) {
      for (std::size_t k = 0; k < kk; ++k) {
        const auto& r = state.responses[k];
        const Matrix c = compose_coefficient(r.a.coef, r.b.coef);
        c_draws[k].col(slot) = Eigen::Map<const Vector>(c.data(), pd);
        g_draws[k].col(slot) = r.gamma.coef.col(0);
      }
      s_draws.col(slot) = Eigen::Map<const Vector>(state.sigma.data(), s_draws.rows());
      ++slot;
    }
  }

  ChainOutput out;
  out.shape = data.shape();
  out.dims = data.dims();
  out.specs = data.specs();
  out.standardization = data.standardization();
  out.covariate_names = data.covariate_names();
  out.hyper = hyper;
  out.n_train = data.n();
  out.kept = static_cast<std::size_t>(kept);
  out.clamp_events = state.clamp_events;
  for (std::size_t k = 0; k < kk; ++k) {
    out.responses.push_back({summarize_draws(c_draws[k], static_cast<Eigen::Index>(data.p()),
                                             static_cast<Eigen::Index>(data.d())),
                             summarize_draws(g_draws[k], q, 1)});
  }
  out.sigma = summarize_draws(s_draws, static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(kk));
  if (options.keep_draws) out.c_draws = std::move(c_draws);
  if (final_state) *final_state = std::move(state);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction

struct Predictions {
  Matrix linear;    // n x K, model scale, u = 0
  Matrix response;  // n x K: continuous on the data scale, binary as P(y = 1)
};

inline Predictions predict(const ChainOutput& output, const UnfoldedDataset& data) {
  if (!(data.shape() == output.shape))
    throw ShapeError("predict: dataset block split differs from the fitted one");
  if (data.q() != static_cast<std::size_t>(output.responses.at(0).gamma.median.rows()))
    throw ShapeError("predict: dataset has " + std::to_string(data.q()) + " covariates, fit has " +
                     std::to_string(output.responses.at(0).gamma.median.rows()));
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto kk = static_cast<Eigen::Index>(output.responses.size());
  Predictions pr{Matrix(n, kk), Matrix(n, kk)};
  for (Eigen::Index k = 0; k < kk; ++k) {
    const auto& rs = output.responses[static_cast<std::size_t>(k)];
    const Vector lin_z = data.z().transpose() * rs.gamma.median.col(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double theta =
          (data.x(static_cast<std::size_t>(i)).array() * rs.c.median.array()).sum() + lin_z[i];
      pr.linear(i, k) = theta;
      if (output.specs[static_cast<std::size_t>(k)].kind == ResponseKind::binary)
        pr.response(i, k) = 1.0 / (1.0 + std::exp(-theta));
      else
        pr.response(i, k) = output.standardization[static_cast<std::size_t>(k)].to_data(theta);
    }
  }
  return pr;
}

}  // namespace bskpd

#endif  // BSKPD_GIBBS_HPP
