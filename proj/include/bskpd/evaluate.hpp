#ifndef BSKPD_EVALUATE_HPP
#define BSKPD_EVALUATE_HPP

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "bskpd/gibbs.hpp"
#include "bskpd/io.hpp"
#include "bskpd/model.hpp"
#include "bskpd/simulate.hpp"

namespace bskpd {

struct MetricValue {
  std::string response;
  double value = 0.0;
};

struct EvalReport {
  std::optional<std::size_t> fold;
  std::vector<MetricValue> rmse;  // continuous responses
  std::vector<MetricValue> auc;   // binary responses
  std::vector<MetricValue> signal_correlation;
};

// Held-out metrics of a fitted chain on `test`. With a truth tensor, also the
// correlation between vec of each refolded median C_k and vec C_true.
inline EvalReport evaluate(const ChainOutput& output, const UnfoldedDataset& test,
                           const DenseTensor3* truth = nullptr) {
  const Predictions pr = predict(output, test);
  EvalReport r;
  for (std::size_t k = 0; k < test.responses(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const Vector pred = pr.response.col(col);
    const Vector actual = test.y_raw().col(col);
    const std::span<const double> ps(pred.data(), static_cast<std::size_t>(pred.size()));
    const std::span<const double> as(actual.data(), static_cast<std::size_t>(actual.size()));
    const std::string& name = test.specs()[k].name;
    if (test.specs()[k].kind == ResponseKind::continuous)
      r.rmse.push_back({name, rmse(ps, as)});
    else
      r.auc.push_back({name, auc(ps, as)});
    if (truth) {
      const DenseTensor3 c = refold(output.responses[k].c.median, output.shape);
      r.signal_correlation.push_back({name, correlation(c.values(), truth->values())});
    }
  }
  return r;
}

// "8.4031 ± 0.8990": mean and sample standard deviation.
inline std::string format_mean_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", mean, sd);
  return buf;
}

// K-fold cross-validation: fit on the other folds, evaluate on the held-out one.
inline std::vector<EvalReport> crossvalidate(const SampleSet& samples, const FitConfig& config,
                                             std::size_t folds, std::uint64_t seed,
                                             const SamplerOptions& options = {}) {
  check_factorization(samples.dims, config.shape);
  const auto assignment = kfold_split(samples.n(), folds, seed);
  std::vector<EvalReport> reports;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      (assignment[i] == f ? test : train).push_back(i);
    const UnfoldedDataset tr(samples.subset(train), config.shape, config.standardize);
    const UnfoldedDataset te(samples.subset(test), config.shape, false);
    Hyperparams h = config.hyper;
    h.seed = config.hyper.seed + f;
    const ChainOutput out = run_chain(tr, h, options);
    EvalReport r = evaluate(out, te);
    r.fold = f;
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace bskpd

#endif  // BSKPD_EVALUATE_HPP
