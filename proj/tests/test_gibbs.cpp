#include <gtest/gtest.h>

#include <cmath>

#include "bskpd/gibbs.hpp"
#include "fixtures.hpp"

using namespace bskpd;

namespace {

constexpr std::size_t kDraws = 4000;

// Design column for coefficient (j, r) of A built from the bilinear form on
// unit matrices, independent of the sampler's own construction.
Matrix oracle_design_a(const UnfoldedDataset& data, const Matrix& b) {
  const auto p = static_cast<Eigen::Index>(data.p());
  const Eigen::Index rank = b.cols();
  Matrix design(static_cast<Eigen::Index>(data.n()), p * rank);
  for (std::size_t i = 0; i < data.n(); ++i)
    for (Eigen::Index r = 0; r < rank; ++r)
      for (Eigen::Index j = 0; j < p; ++j) {
        Matrix unit = Matrix::Zero(p, rank);
        unit(j, r) = 1.0;
        const Matrix c = unit * b.transpose();
        design(static_cast<Eigen::Index>(i), r * p + j) = (data.x(i).array() * c.array()).sum();
      }
  return design;
}

Matrix oracle_design_b(const UnfoldedDataset& data, const Matrix& a) {
  const auto d = static_cast<Eigen::Index>(data.d());
  const Eigen::Index rank = a.cols();
  Matrix design(static_cast<Eigen::Index>(data.n()), d * rank);
  for (std::size_t i = 0; i < data.n(); ++i)
    for (Eigen::Index r = 0; r < rank; ++r)
      for (Eigen::Index j = 0; j < d; ++j) {
        Matrix unit = Matrix::Zero(d, rank);
        unit(j, r) = 1.0;
        const Matrix c = a * unit.transpose();
        design(static_cast<Eigen::Index>(i), r * d + j) = (data.x(i).array() * c.array()).sum();
      }
  return design;
}

struct Gaussian {
  Vector mean;
  Matrix cov;
};

Gaussian oracle_posterior(const Matrix& design, const Vector& w, const Vector& prior_var,
                          const Vector& resid) {
  Matrix precision = design.transpose() * w.asDiagonal() * design;
  for (Eigen::Index j = 0; j < prior_var.size(); ++j) precision(j, j) += 1.0 / prior_var[j];
  const Matrix cov = precision.inverse();
  return {cov * design.transpose() * w.cwiseProduct(resid), cov};
}

// Every coordinate of the empirical mean within 4 SE of the oracle mean.
void expect_mean_matches(const std::vector<Vector>& draws, const Gaussian& g) {
  Vector mean = Vector::Zero(g.mean.size());
  for (const auto& v : draws) mean += v;
  mean /= static_cast<double>(draws.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    const double se = std::sqrt(g.cov(j, j) / static_cast<double>(draws.size()));
    EXPECT_NEAR(mean[j], g.mean[j], 4.0 * se) << "coordinate " << j;
  }
  // Variance of the first coordinate within 10%.
  double ss = 0.0;
  for (const auto& v : draws) ss += (v[0] - mean[0]) * (v[0] - mean[0]);
  EXPECT_NEAR(ss / static_cast<double>(draws.size() - 1) / g.cov(0, 0), 1.0, 0.1);
}

struct Setup {
  UnfoldedDataset data;
  ChainState state;
};

Setup make_setup(std::size_t n, BlockShape shape, std::size_t rank, std::uint64_t seed,
                 std::vector<ResponseKind> kinds = {ResponseKind::continuous}) {
  std::mt19937_64 eng(seed);
  const auto s = testutil::random_samples(eng, n, shape.full(), kinds, 2);
  Setup out{UnfoldedDataset(s, shape, true), {}};
  Hyperparams h;
  h.rank = rank;
  out.state = initialize_state(out.data, h);
  out.state.u = testutil::random_matrix(eng, static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(kinds.size())) * 0.3;
  for (auto& r : out.state.responses) {
    // Spread out the prior variances and use non-trivial weights.
    for (auto* b : {&r.a, &r.b, &r.gamma})
      for (Eigen::Index j = 0; j < b->zeta.size(); ++j) b->zeta[j] = 0.2 + 0.3 * double(j % 4);
    r.omega = (testutil::random_matrix(eng, static_cast<Eigen::Index>(n), 1).array().abs() + 0.5)
                  .matrix();
  }
  return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

class CoefficientConditional : public ::testing::TestWithParam<std::size_t> {};

// n = 40 exercises the dense Cholesky path, n = 4 the n x n route.
TEST_P(CoefficientConditional, AMatchesDenseOracle) {
  auto [data, state] = make_setup(GetParam(), BlockShape{{3, 2, 1}, {2, 1, 1}}, 2, 11);
  auto& r = state.responses[0];
  const Vector resid = r.ytilde - data.z().transpose() * r.gamma.coef.col(0) - state.u.col(0);
  Vector prior(r.a.zeta.size() * 2);
  prior << r.a.zeta, r.a.zeta;
  const auto g = oracle_posterior(oracle_design_a(data, r.b.coef), r.omega, prior, resid);
  std::vector<Vector> draws;
  for (std::size_t t = 0; t < kDraws; ++t) {
    state.iteration = t;
    update_A(state, data, 0);
    draws.push_back(vec(r.a.coef));
  }
  expect_mean_matches(draws, g);
}

TEST_P(CoefficientConditional, BMatchesDenseOracle) {
  auto [data, state] = make_setup(GetParam(), BlockShape{{2, 1, 1}, {3, 2, 1}}, 2, 12);
  auto& r = state.responses[0];
  const Vector resid = r.ytilde - data.z().transpose() * r.gamma.coef.col(0) - state.u.col(0);
  Vector prior(r.b.zeta.size() * 2);
  prior << r.b.zeta, r.b.zeta;
  const auto g = oracle_posterior(oracle_design_b(data, r.a.coef), r.omega, prior, resid);
  std::vector<Vector> draws;
  for (std::size_t t = 0; t < kDraws; ++t) {
    state.iteration = t;
    update_B(state, data, 0);
    draws.push_back(vec(r.b.coef));
  }
  expect_mean_matches(draws, g);
}

TEST_P(CoefficientConditional, GammaMatchesDenseOracle) {
  auto [data, state] = make_setup(GetParam(), BlockShape{{2, 1, 1}, {2, 1, 1}}, 1, 13);
  auto& r = state.responses[0];
  Vector tensor(static_cast<Eigen::Index>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i)
    tensor[static_cast<Eigen::Index>(i)] = inner(data.to_samples().tensor(i),
                                                 refold(compose_coefficient(r.a.coef, r.b.coef),
                                                        data.shape()));
  const Vector resid = r.ytilde - tensor - state.u.col(0);
  const auto g = oracle_posterior(data.z().transpose(), r.omega, r.gamma.zeta, resid);
  std::vector<Vector> draws;
  for (std::size_t t = 0; t < kDraws; ++t) {
    state.iteration = t;
    update_gamma(state, data, 0);
    draws.push_back(r.gamma.coef.col(0));
  }
  expect_mean_matches(draws, g);
}

INSTANTIATE_TEST_SUITE_P(Paths, CoefficientConditional, ::testing::Values(40u, 4u));

TEST(LocalScales, ZetaMeanMatchesBesselOracle) {
  RngStream rng(5, 0);
  TPBNBlock block;
  block.coef.resize(2, 2);
  block.coef << 0.3, -0.4, 1.2, 0.1;
  block.a = 0.5;
  block.u = 0.7;
  block.tau = 0.2;
  const Vector xi = (Vector(2) << 0.8, 2.5).finished();
  block.zeta = Vector::Ones(2);
  std::vector<double> z0, z1, scaled;
  for (std::size_t t = 0; t < 40000; ++t) {
    block.xi = xi;
    update_local_scales(block, rng);
    z0.push_back(block.zeta[0]);
    z1.push_back(block.zeta[1]);
    scaled.push_back(block.xi[0] * (block.tau + block.zeta[0]));
  }
  const double lambda = block.u - 1.0;
  for (int j = 0; j < 2; ++j) {
    const double chi = block.coef.row(j).squaredNorm();
    const double psi = 2.0 * xi[j];
    const double w = std::sqrt(chi * psi);
    const double oracle = std::sqrt(chi / psi) * std::cyl_bessel_k(std::fabs(lambda + 1.0), w) /
                          std::cyl_bessel_k(std::fabs(lambda), w);
    const auto m = testutil::mean_se(j == 0 ? z0 : z1);
    EXPECT_NEAR(m.mean, oracle, 4.0 * m.se) << "row " << j;
  }
  // xi (tau + zeta) ~ Gamma(a + u, 1) given zeta.
  const auto s = testutil::mean_se(scaled);
  EXPECT_NEAR(s.mean, block.a + block.u, 4.0 * s.se);
}

TEST(LocalScales, ZeroRowCollapsesWithoutClampLoop) {
  RngStream rng(6, 0);
  TPBNBlock block;
  block.coef = Matrix::Zero(1, 2);
  block.u = 0.5;
  block.zeta = Vector::Ones(1);
  block.xi = Vector::Ones(1);
  const std::size_t events = update_local_scales(block, rng);
  EXPECT_GE(events, 1u);
  EXPECT_GT(block.zeta[0], 0.0);
  EXPECT_TRUE(std::isfinite(block.xi[0]));
}

TEST(LatentFactors, RowMeanMatchesOracle) {
  auto [data, state] = make_setup(3, BlockShape{{2, 1, 1}, {1, 1, 1}}, 1, 21,
                                  {ResponseKind::continuous, ResponseKind::continuous});
  state.sigma << 1.0, 0.6, 0.6, 2.0;
  Matrix m(3, 2), w(3, 2);
  for (int k = 0; k < 2; ++k) {
    const auto& r = state.responses[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < 3; ++i) {
      const Matrix c = r.a.coef * r.b.coef.transpose();
      const auto ii = static_cast<Eigen::Index>(i);
      m(ii, k) = r.ytilde[ii] - (data.x(i).array() * c.array()).sum() -
                 data.z().col(ii).dot(r.gamma.coef.col(0));
      w(ii, k) = r.omega[ii];
    }
  }
  const Matrix sinv = state.sigma.inverse();
  std::vector<Vector> draws;
  for (std::size_t t = 0; t < kDraws; ++t) {
    state.iteration = t;
    update_U(state, data, 1);
    draws.push_back(state.u.row(1).transpose());
  }
  Matrix precision = sinv;
  precision.diagonal() += w.row(1).transpose();
  const Matrix cov = precision.inverse();
  const Vector mean = cov * w.row(1).cwiseProduct(m.row(1)).transpose();
  expect_mean_matches(draws, {mean, cov});
}

TEST(Covariance, SigmaMeanMatchesInverseWishart) {
  auto [data, state] = make_setup(6, BlockShape{}, 1, 22,
                                  {ResponseKind::continuous, ResponseKind::binary});
  const double c0 = 2.0, c1 = 1.5;
  Matrix scale = state.u.transpose() * state.u;
  scale.diagonal().array() += c1;
  const double dof = 6.0 + 2.0 + c0;
  const Matrix target = scale / (dof - 3.0);
  std::vector<double> s00, s01;
  for (std::size_t t = 0; t < 20000; ++t) {
    state.iteration = t;
    update_sigma(state, 6, c0, c1);
    s00.push_back(state.sigma(0, 0));
    s01.push_back(state.sigma(0, 1));
  }
  const auto a = testutil::mean_se(s00);
  const auto b = testutil::mean_se(s01);
  EXPECT_NEAR(a.mean, target(0, 0), 4.0 * a.se);
  EXPECT_NEAR(b.mean, target(0, 1), 4.0 * b.se);
}

TEST(PolyaGammaWeights, ContinuousIsOneBinaryAtZeroHasMeanQuarter) {
  auto [data, state] = make_setup(200, BlockShape{}, 1, 23,
                                  {ResponseKind::continuous, ResponseKind::binary});
  for (auto& r : state.responses) {
    r.a.coef.setZero();
    r.gamma.coef.setZero();
  }
  state.u.setZero();
  EXPECT_EQ(update_omega(state, data, 0), 0u);
  EXPECT_TRUE((state.responses[0].omega.array() == 1.0).all());
  EXPECT_EQ(state.responses[0].ytilde, data.y().col(0));
  std::vector<double> w;
  for (std::size_t t = 0; t < 50; ++t) {
    state.iteration = t;
    update_omega(state, data, 1);
    const auto& r = state.responses[1];
    for (Eigen::Index i = 0; i < r.omega.size(); ++i) {
      w.push_back(r.omega[i]);
      EXPECT_DOUBLE_EQ(r.ytilde[i], (data.y()(i, 1) - 0.5) / r.omega[i]);
    }
  }
  const auto m = testutil::mean_se(w);
  EXPECT_NEAR(m.mean, 0.25, 4.0 * m.se);
}

namespace {

UnfoldedDataset small_mixed(std::uint64_t seed, std::size_t n = 30) {
  std::mt19937_64 eng(seed);
  return UnfoldedDataset(
      testutil::random_samples(eng, n, {4, 4, 1}, {ResponseKind::continuous, ResponseKind::binary}),
      BlockShape{{2, 2, 1}, {2, 2, 1}}, true);
}

Hyperparams small_hyper() {
  Hyperparams h;
  h.rank = 2;
  h.iterations = 60;
  h.burn_in = 20;
  h.thin = 3;
  h.seed = 99;
  return h;
}

}  // namespace

TEST(Chain, ThreadCountDoesNotChangeDraws) {
  const auto data = small_mixed(31);
  SamplerOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = run_chain(data, small_hyper(), one);
  const auto b = run_chain(data, small_hyper(), many);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(a.responses[k].c.median, b.responses[k].c.median);
    EXPECT_EQ(a.responses[k].gamma.upper, b.responses[k].gamma.upper);
  }
  EXPECT_EQ(a.sigma.median, b.sigma.median);
}

TEST(Chain, SeedDeterminesOutput) {
  const auto data = small_mixed(32);
  auto h = small_hyper();
  const auto a = run_chain(data, h);
  const auto b = run_chain(data, h);
  EXPECT_EQ(a.responses[0].c.median, b.responses[0].c.median);
  h.seed = 100;
  const auto c = run_chain(data, h);
  EXPECT_NE(a.responses[0].c.median, c.responses[0].c.median);
}

TEST(Chain, KeptDrawCountAndQuantileOrder) {
  const auto data = small_mixed(33);
  SamplerOptions opt;
  opt.keep_draws = true;
  const auto h = small_hyper();
  const auto out = run_chain(data, h, opt);
  EXPECT_EQ(out.kept, (h.iterations - h.burn_in) / h.thin);
  ASSERT_EQ(out.c_draws.size(), 2u);
  EXPECT_EQ(static_cast<std::size_t>(out.c_draws[0].cols()), out.kept);
  for (const auto& r : out.responses) {
    EXPECT_TRUE((r.c.lower.array() <= r.c.median.array()).all());
    EXPECT_TRUE((r.c.median.array() <= r.c.upper.array()).all());
  }
  EXPECT_EQ(out.n_train, 30u);
  EXPECT_TRUE(out.hyper.tpbn[kABlock].tau.has_value());
}

TEST(Chain, ContinuousOnlyKeepsUnitWeights) {
  std::mt19937_64 eng(34);
  const UnfoldedDataset data(
      testutil::random_samples(eng, 20, {2, 2, 1}, {ResponseKind::continuous}),
      BlockShape{{2, 1, 1}, {1, 2, 1}}, true);
  ChainState final_state;
  run_chain(data, small_hyper(), {}, std::nullopt, &final_state);
  EXPECT_TRUE((final_state.responses[0].omega.array() == 1.0).all());
  EXPECT_EQ(final_state.iteration, small_hyper().iterations);
}

TEST(Chain, ProgressCallbackSeesLogLikelihood) {
  const auto data = small_mixed(35);
  SamplerOptions opt;
  opt.progress_every = 20;
  std::vector<std::size_t> seen;
  opt.progress = [&](std::size_t t, double ll) {
    seen.push_back(t);
    EXPECT_TRUE(std::isfinite(ll));
    EXPECT_LT(ll, 0.0);
  };
  run_chain(data, small_hyper(), opt);
  EXPECT_EQ(seen, (std::vector<std::size_t>{20, 40, 60}));
}

TEST(Chain, RejectsInvalidHyperparameters) {
  const auto data = small_mixed(36);
  auto h = small_hyper();
  h.burn_in = h.iterations;
  EXPECT_THROW(run_chain(data, h), ParameterError);
}

TEST(SortedQuantile, TypeSevenInterpolation) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.025), 1.1);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.975), 4.9);
  EXPECT_THROW(sorted_quantile({}, 0.5), DataError);
}

TEST(Predict, ZeroCoefficientsGiveHalf) {
  const auto data = small_mixed(37, 8);
  ChainOutput out;
  out.shape = data.shape();
  out.specs = data.specs();
  out.standardization = data.standardization();
  for (std::size_t k = 0; k < 2; ++k)
    out.responses.push_back({{Matrix::Zero(4, 4), Matrix::Zero(4, 4), Matrix::Zero(4, 4)},
                             {Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)}});
  const auto pr = predict(out, data);
  EXPECT_TRUE((pr.response.col(1).array() == 0.5).all());
  // Continuous zero predictor maps back to the training mean.
  EXPECT_TRUE((pr.response.col(0).array() - data.standardization()[0].mean).abs().maxCoeff() <
              1e-12);

  // Scalar hand check and monotonicity in the intercept.
  out.responses[1].gamma.median(0, 0) = std::log(3.0);
  const auto pr2 = predict(out, data);
  EXPECT_NEAR(pr2.response(0, 1), 0.75, 1e-12);
  out.responses[1].gamma.median(0, 0) = 2.0;
  EXPECT_GT(predict(out, data).response(0, 1), pr2.response(0, 1));
}

TEST(Predict, RejectsMismatchedShape) {
  const auto data = small_mixed(38, 8);
  const auto out = run_chain(data, small_hyper());
  std::mt19937_64 eng(1);
  const UnfoldedDataset other(
      testutil::random_samples(eng, 5, {4, 4, 1}, {ResponseKind::continuous, ResponseKind::binary}),
      BlockShape{{4, 1, 1}, {1, 4, 1}}, false);
  EXPECT_THROW(predict(out, other), ShapeError);
}
