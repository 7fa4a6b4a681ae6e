#ifndef BSKPD_TEST_FIXTURES_HPP
#define BSKPD_TEST_FIXTURES_HPP

#include <random>

#include "bskpd/gibbs.hpp"
#include "bskpd/model.hpp"
#include "test_util.hpp"

namespace testutil {

// Random sample set with the given response kinds and an intercept plus
// (q - 1) Gaussian covariates.
inline bskpd::SampleSet random_samples(std::mt19937_64& eng, std::size_t n, bskpd::Dims3 dims,
                                       std::vector<bskpd::ResponseKind> kinds, std::size_t q = 1) {
  using namespace bskpd;
  std::normal_distribution<double> n01;
  std::bernoulli_distribution coin(0.5);
  SampleSet s;
  s.dims = dims;
  s.x.resize(n * product(dims));
  for (auto& v : s.x) v = n01(eng);
  s.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kinds.size()));
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    s.specs.push_back({"y" + std::to_string(k + 1), kinds[k]});
    for (std::size_t i = 0; i < n; ++i)
      s.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          kinds[k] == ResponseKind::binary ? (coin(eng) ? 1.0 : 0.0) : 3.0 + 2.0 * n01(eng);
  }
  s.z.resize(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < q; ++c) {
    s.covariate_names.push_back(c == 0 ? "intercept" : "z" + std::to_string(c + 1));
    for (std::size_t i = 0; i < n; ++i)
      s.z(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = c == 0 ? 1.0 : n01(eng);
  }
  return s;
}

}  // namespace testutil

#endif  // BSKPD_TEST_FIXTURES_HPP
