#ifndef BSKPD_DISTRIBUTIONS_HPP
#define BSKPD_DISTRIBUTIONS_HPP

// Exact samplers for the full conditionals of the Gibbs sampler.

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "bskpd/error.hpp"
#include "bskpd/random.hpp"
#include "bskpd/tensor.hpp"

namespace bskpd {

// ---------------------------------------------------------------------------
// Polya-Gamma

struct PGParams {
  double b = 1.0;
  double c = 0.0;
};

namespace detail {

constexpr double kPgTrunc = 0.64;
constexpr double kPi = std::numbers::pi;

// log Phi(x), the standard normal log-CDF.
inline double log_norm_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

// Coefficient a_n(x) of the alternating series for the J*(1, z) density,
// piecewise around the truncation point.
inline double pg_series_coef(int n, double x) {
  const double np = n + 0.5;
  if (x > kPgTrunc) return kPi * np * std::exp(-0.5 * np * np * kPi * kPi * x);
  return std::pow(2.0 / kPi / x, 1.5) * kPi * np * std::exp(-2.0 * np * np / x);
}

// Probability of proposing from the exponential tail rather than the
// truncated inverse Gaussian.
inline double pg_tail_mass(double z) {
  const double t = kPgTrunc;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_norm_cdf(b);
  const double xa = x0 + z + log_norm_cdf(a);
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse Gaussian with mean 1/z and shape 1, truncated to (0, kPgTrunc).
inline double truncated_inverse_gaussian(RngStream& rng, double z) {
  const double t = kPgTrunc;
  double x = t + 1.0;
  if (1.0 / t > z) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = 1.0 + e1 * t;
      x = t / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
    return x;
  }
  const double mu = 1.0 / z;
  while (x > t) {
    double y = rng.normal();
    y *= y;
    const double half_mu = 0.5 * mu;
    const double mu_y = mu * y;
    x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

// Exact PG(1, c) draw by Devroye-type alternating-series rejection.
inline double sample_pg1(RngStream& rng, double c) {
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double tail = pg_tail_mass(z);
  for (;;) {
    double x;
    if (rng.uniform() < tail)
      x = kPgTrunc + rng.exponential() / fz;
    else
      x = truncated_inverse_gaussian(rng, z);
    double s = pg_series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= pg_series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += pg_series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace detail

// Number of gamma terms kept by the truncated series used for non-integer
// shapes. The omitted tail is replaced by its mean, so the draw has the
// exact first moment; its variance is short by
//   b / (4 pi^4) * sum_{l > L} ((l - 1/2)^2 + (c / 2 pi)^2)^-2  <  b / (12 pi^4 (L - 1)^3),
// i.e. about 1.1e-10 * b for L = 200.
constexpr int kPgSeriesTerms = 200;

inline double sample_pg(RngStream& rng, const PGParams& params) {
  const double b = params.b;
  const double c = params.c;
  if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(c))
    throw ParameterError("PG: shape must be positive and finite, got b=" + std::to_string(b));
  const double rb = std::round(b);
  if (rb == b && b <= 1e6) {
    double sum = 0.0;
    for (long i = 0; i < static_cast<long>(b); ++i) sum += detail::sample_pg1(rng, c);
    return sum;
  }
  const double pi = detail::kPi;
  const double shift = (c / (2.0 * pi)) * (c / (2.0 * pi));
  double sum = 0.0;
  double head_mean = 0.0;
  for (int l = 1; l <= kPgSeriesTerms; ++l) {
    const double denom = (l - 0.5) * (l - 0.5) + shift;
    sum += sample_gamma(rng, b, 1.0) / denom;
    head_mean += b / denom;
  }
  const double full_mean =
      std::fabs(c) < 1e-8 ? b / 4.0 * (2.0 * pi * pi) : b * pi * pi * std::tanh(0.5 * c) / c;
  return (sum + (full_mean - head_mean)) / (2.0 * pi * pi);
}

// ---------------------------------------------------------------------------
// Generalized inverse Gaussian: density proportional to
//   x^(lambda - 1) exp(-(chi / x + psi x) / 2),  x > 0.

struct GIGParams {
  double lambda = 0.0;
  double chi = 1.0;
  double psi = 1.0;
};

namespace detail {

inline double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0)
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// The three generators below draw from the standardized density
// x^(lambda - 1) exp(-omega (x + 1/x) / 2), lambda >= 0
// (Hoermann & Leydold 2014).

// Ratio-of-uniforms without mode shift.
inline double gig_rou_noshift(RngStream& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym =
      ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms with mode shift; used for lambda > 2 or omega > 3.
inline double gig_rou_shift(RngStream& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * kPi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);
  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece hat; for 0 <= lambda < 1 and small omega.
inline double gig_concave(RngStream& rng, double lambda, double omega) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1, k2;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];
  for (;;) {
    double v = total * rng.uniform();
    double x, hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double a = x0 > 2.0 / omega ? x0 : 2.0 / omega;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * a) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace detail

inline void validate(const GIGParams& g) {
  const bool finite = std::isfinite(g.lambda) && std::isfinite(g.chi) && std::isfinite(g.psi);
  if (!finite || g.chi < 0.0 || g.psi < 0.0 || (g.chi == 0.0 && g.lambda <= 0.0) ||
      (g.psi == 0.0 && g.lambda >= 0.0))
    throw ParameterError("GIG: invalid parameters lambda=" + std::to_string(g.lambda) +
                         " chi=" + std::to_string(g.chi) + " psi=" + std::to_string(g.psi));
}

inline double sample_gig(RngStream& rng, const GIGParams& g) {
  validate(g);
  if (g.chi == 0.0) return sample_gamma(rng, g.lambda, 0.5 * g.psi);
  if (g.psi == 0.0) return 1.0 / sample_gamma(rng, -g.lambda, 0.5 * g.chi);

  const double lambda = std::fabs(g.lambda);
  const double alpha = std::sqrt(g.chi / g.psi);
  const double omega = std::sqrt(g.chi * g.psi);
  double x;
  if (lambda > 2.0 || omega > 3.0)
    x = detail::gig_rou_shift(rng, lambda, omega);
  else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    x = detail::gig_rou_noshift(rng, lambda, omega);
  else
    x = detail::gig_concave(rng, lambda, omega);
  return g.lambda < 0.0 ? alpha / x : alpha * x;
}

// ---------------------------------------------------------------------------
// Gaussian vectors

namespace detail {

// Lower Cholesky factor; on failure reports the first non-positive pivot.
inline Eigen::LLT<Matrix> cholesky_or_throw(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  Matrix l = a;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = l(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw NumericalError(std::string(what) + ": Cholesky failed at pivot " + std::to_string(j),
                           static_cast<long>(j));
    diag = std::sqrt(diag);
    l(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (l(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / diag;
  }
  throw NumericalError(std::string(what) + ": Cholesky failed", -1);
}

inline Vector standard_normal(RngStream& rng, Eigen::Index n) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace detail

// Draw from N(P^-1 b, P^-1) for SPD precision P.
inline Vector sample_mvn_precision(RngStream& rng, const Matrix& precision, const Vector& linear) {
  if (precision.rows() != precision.cols() || precision.rows() != linear.size())
    throw ShapeError("mvn_precision: precision is " + std::to_string(precision.rows()) + "x" +
                     std::to_string(precision.cols()) + ", linear term has " +
                     std::to_string(linear.size()));
  const auto llt = detail::cholesky_or_throw(precision, "mvn_precision");
  Vector mean = llt.solve(linear);
  Vector z = detail::standard_normal(rng, linear.size());
  llt.matrixU().solveInPlace(z);
  return mean + z;
}

// Draw from the same law as sample_mvn_precision with
//   P = X^T W X + diag(prior_var)^-1,  b = X^T W r
// by perturbing prior and working data and solving an n x n system. Cost O(n^2 m + n^3).
inline Vector sample_mvn_structured(RngStream& rng, const Matrix& design, const Vector& weights,
                                    const Vector& prior_var, const Vector& resid) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  if (weights.size() != n || resid.size() != n || prior_var.size() != m)
    throw ShapeError("mvn_structured: design " + std::to_string(n) + "x" + std::to_string(m) +
                     " does not conform with weights/resid/prior_var");
  if ((weights.array() <= 0.0).any() || (prior_var.array() <= 0.0).any())
    throw ParameterError("mvn_structured: weights and prior variances must be positive");

  Vector u = prior_var.array().sqrt() * detail::standard_normal(rng, m).array();
  if (n == 0) return u;
  const Vector root_w = weights.array().sqrt();
  const Matrix phi = root_w.asDiagonal() * design;
  const Vector alpha = root_w.array() * resid.array();
  const Vector delta = detail::standard_normal(rng, n);
  const Vector v = phi * u + delta;

  Matrix scaled = phi * prior_var.asDiagonal();
  Matrix system = scaled * phi.transpose();
  system.diagonal().array() += 1.0;
  const auto llt = detail::cholesky_or_throw(system, "mvn_structured");
  const Vector w = llt.solve(alpha - v);
  return u + scaled.transpose() * w;
}

// ---------------------------------------------------------------------------
// Matrix-valued draws

// Entries i.i.d. N(0, row_scale * col_scale), i.e. MN(0, row_scale I, col_scale I).
inline Matrix sample_matrix_normal(RngStream& rng, Eigen::Index rows, Eigen::Index cols,
                                   double row_scale, double col_scale) {
  if (!(row_scale > 0.0) || !(col_scale > 0.0))
    throw ParameterError("matrix_normal: scales must be positive");
  const double sd = std::sqrt(row_scale * col_scale);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = sd * rng.normal();
  return out;
}

// Inverse-Wishart(dof, scale) with E = scale / (dof - K - 1), via the
// Bartlett decomposition of the Wishart(dof, scale^-1) precision.
inline Matrix sample_inverse_wishart(RngStream& rng, double dof, const Matrix& scale) {
  const Eigen::Index k = scale.rows();
  if (scale.cols() != k) throw ShapeError("inverse_wishart: scale must be square");
  if (!(dof > static_cast<double>(k) - 1.0))
    throw ParameterError("inverse_wishart: dof=" + std::to_string(dof) + " must exceed K-1=" +
                         std::to_string(k - 1));
  if (!scale.isApprox(scale.transpose(), 1e-12))
    throw ParameterError("inverse_wishart: scale is not symmetric");
  Eigen::LLT<Matrix> scale_llt(scale);
  if (scale_llt.info() != Eigen::Success)
    throw ParameterError("inverse_wishart: scale is not positive definite");

  // Wishart(dof, S^-1) = L A A^T L^T with L L^T = S^-1. Taking S = M M^T,
  // L = M^-T works, so the precision is M^-T A A^T M^-1 and its inverse is
  // M (A A^T)^-1 M^T = (M A^-T)(M A^-T)^T.
  Matrix bartlett = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    bartlett(i, i) = std::sqrt(sample_chi_squared(rng, dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const Matrix m = scale_llt.matrixL();
  // factor = M A^-T, computed as (A^-1 M^T)^T.
  Matrix t = m.transpose();
  bartlett.triangularView<Eigen::Lower>().solveInPlace(t);
  const Matrix factor = t.transpose();
  Matrix out = factor * factor.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace bskpd

#endif  // BSKPD_DISTRIBUTIONS_HPP
