#ifndef BSKPD_SELFTEST_HPP
#define BSKPD_SELFTEST_HPP

// Runtime checks of the samplers against closed-form moments, plus the
// Geweke harness and its corrupted-kernel control.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bskpd/distributions.hpp"
#include "bskpd/geweke.hpp"
#include "bskpd/random.hpp"

namespace bskpd {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  std::size_t moment_draws = 100000;
  std::size_t geweke_samples = 10000;
  double sigma_dof_offset = 0.0;  // corrupts the kernel under test
  std::uint64_t seed = 20240601;
  double se_tolerance = 3.0;
};

namespace detail {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
Moments sample_moments(std::size_t draws, F&& draw) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(draws);
  const double mean = s / n;
  const double var = (s2 - n * mean * mean) / (n - 1.0);
  return {mean, std::sqrt(std::max(var, 0.0) / n)};
}

inline CheckResult moment_check(const std::string& name, const Moments& m, double target,
                                double tol) {
  const double z = m.se > 0.0 ? (m.mean - target) / m.se : (m.mean == target ? 0.0 : INFINITY);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "mean %.6f target %.6f se %.2e z %+.2f", m.mean, target, m.se, z);
  return {name, std::fabs(z) <= tol, buf};
}

}  // namespace detail

inline double pg_mean(double b, double c) {
  return std::fabs(c) < 1e-8 ? b / 4.0 : b * std::tanh(c / 2.0) / (2.0 * c);
}

inline std::vector<CheckResult> moment_checks(const SelftestOptions& opt) {
  std::vector<CheckResult> out;
  std::uint64_t stream = 1;
  for (double c : {0.0, 0.5, 1.0, 2.5, 5.0}) {
    RngStream rng(opt.seed, stream++);
    const auto m = detail::sample_moments(opt.moment_draws,
                                          [&] { return sample_pg(rng, {1.0, c}); });
    out.push_back(detail::moment_check("PG(1," + std::to_string(c).substr(0, 3) + ") mean", m,
                                       pg_mean(1.0, c), opt.se_tolerance));
  }
  // Gamma boundary of the GIG family: chi -> 0 gives Gamma(lambda, psi / 2).
  for (double chi : {0.0, 1e-8}) {
    RngStream rng(opt.seed, stream++);
    const auto m = detail::sample_moments(opt.moment_draws,
                                          [&] { return sample_gig(rng, {1.5, chi, 2.0}); });
    char name[64];
    std::snprintf(name, sizeof(name), "GIG(1.5,%g,2) mean", chi);
    out.push_back(detail::moment_check(name, m, 1.5, opt.se_tolerance));
  }
  {
    RngStream rng(opt.seed, stream++);
    Matrix scale(3, 3);
    scale << 2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 1.5;
    const double dof = 8.0;
    const std::size_t draws = opt.moment_draws / 10;
    std::vector<Matrix> samples;
    samples.reserve(draws);
    for (std::size_t i = 0; i < draws; ++i) samples.push_back(sample_inverse_wishart(rng, dof, scale));
    const Matrix target = scale / (dof - 3.0 - 1.0);
    bool ok = true;
    double worst = 0.0;
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index c = r; c < 3; ++c) {
        std::size_t idx = 0;
        const auto m = detail::sample_moments(draws, [&] { return samples[idx++](r, c); });
        const double z = (m.mean - target(r, c)) / m.se;
        worst = std::max(worst, std::fabs(z));
        ok = ok && std::fabs(z) <= opt.se_tolerance;
      }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |z| over entries %.2f", worst);
    out.push_back({"IW(8, S) mean = S/4", ok, buf});
  }
  return out;
}

inline std::vector<CheckResult> geweke_checks(const SelftestOptions& opt) {
  std::vector<CheckResult> out;
  GewekeConfig cfg;
  cfg.samples = opt.geweke_samples;
  cfg.hyper.seed = opt.seed;
  cfg.sigma_dof_offset = opt.sigma_dof_offset;
  const GewekeReport r = geweke_test(cfg);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |z| %.2f over %zu functionals", r.max_abs_z(),
                r.functionals.size());
  out.push_back({"Geweke joint test (|z| < 4)", r.passed(4.0), buf});

  cfg.sigma_dof_offset = opt.sigma_dof_offset + static_cast<double>(cfg.model.kinds.size());
  const GewekeReport bad = geweke_test(cfg);
  std::snprintf(buf, sizeof(buf), "max |z| %.2f", bad.max_abs_z());
  out.push_back({"Geweke control detects dof + K (|z| > 6)", bad.max_abs_z() > 6.0, buf});
  return out;
}

}  // namespace bskpd

#endif  // BSKPD_SELFTEST_HPP
