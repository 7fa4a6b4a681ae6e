#ifndef BSKPD_MODEL_HPP
#define BSKPD_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bskpd/error.hpp"
#include "bskpd/random.hpp"
#include "bskpd/tensor.hpp"

namespace bskpd {

enum class ResponseKind { continuous, binary };

inline const char* to_string(ResponseKind k) {
  return k == ResponseKind::continuous ? "continuous" : "binary";
}

inline ResponseKind parse_response_kind(const std::string& s) {
  if (s == "continuous") return ResponseKind::continuous;
  if (s == "binary") return ResponseKind::binary;
  throw DataError("unknown response kind '" + s + "' (expected continuous or binary)");
}

struct ResponseSpec {
  std::string name;
  ResponseKind kind = ResponseKind::continuous;

  bool operator==(const ResponseSpec&) const = default;
};

// Affine map y_model = (y - mean) / scale; identity for binary columns.
struct Standardization {
  double mean = 0.0;
  double scale = 1.0;

  double to_model(double y) const { return (y - mean) / scale; }
  double to_data(double y) const { return mean + scale * y; }
  bool operator==(const Standardization&) const = default;
};

namespace detail {

inline void check_response_column(const Eigen::Ref<const Vector>& y, const ResponseSpec& spec) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (spec.kind == ResponseKind::binary) {
      if (v != 0.0 && v != 1.0)
        throw DataError("response '" + spec.name + "' row " + std::to_string(i) +
                        ": binary value must be 0 or 1, got " + std::to_string(v));
    } else if (!std::isfinite(v)) {
      throw DataError("response '" + spec.name + "' row " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace detail

// Tensor samples before unfolding: n records of dims D1 x D2 x D3.
struct SampleSet {
  Dims3 dims{1, 1, 1};
  std::vector<double> x;  // n * D1 * D2 * D3, one record after another
  Matrix y;               // n x K, data scale
  std::vector<ResponseSpec> specs;
  Matrix z;  // q x n
  std::vector<std::string> covariate_names;

  std::size_t n() const { return static_cast<std::size_t>(y.rows()); }
  std::size_t record_size() const { return product(dims); }

  std::span<const double> record(std::size_t i) const {
    return std::span<const double>(x).subspan(i * record_size(), record_size());
  }

  DenseTensor3 tensor(std::size_t i) const {
    auto r = record(i);
    return {dims, std::vector<double>(r.begin(), r.end())};
  }

  void validate() const {
    const std::size_t count = n();
    if (x.size() != count * record_size())
      throw ShapeError("sample set: " + std::to_string(x.size()) + " tensor values for n=" +
                       std::to_string(count) + " records of " + to_string(dims));
    if (static_cast<std::size_t>(y.cols()) != specs.size())
      throw ShapeError("sample set: " + std::to_string(y.cols()) + " response columns but " +
                       std::to_string(specs.size()) + " response specs");
    if (specs.empty()) throw ShapeError("sample set: at least one response is required");
    if (static_cast<std::size_t>(z.cols()) != count)
      throw ShapeError("sample set: covariate matrix has " + std::to_string(z.cols()) +
                       " columns, expected n=" + std::to_string(count));
    if (z.rows() == 0) throw ShapeError("sample set: at least one covariate is required");
    for (std::size_t k = 0; k < specs.size(); ++k)
      detail::check_response_column(y.col(static_cast<Eigen::Index>(k)), specs[k]);
    if (!z.allFinite()) throw DataError("sample set: covariates contain non-finite values");
  }

  SampleSet subset(std::span<const std::size_t> rows) const {
    SampleSet out;
    out.dims = dims;
    out.specs = specs;
    out.covariate_names = covariate_names;
    out.y.resize(static_cast<Eigen::Index>(rows.size()), y.cols());
    out.z.resize(z.rows(), static_cast<Eigen::Index>(rows.size()));
    out.x.reserve(rows.size() * record_size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = static_cast<Eigen::Index>(rows[r]);
      out.y.row(static_cast<Eigen::Index>(r)) = y.row(src);
      out.z.col(static_cast<Eigen::Index>(r)) = z.col(src);
      auto rec = record(rows[r]);
      out.x.insert(out.x.end(), rec.begin(), rec.end());
    }
    return out;
  }
};

// Samples after the block unfolding, ready for the sampler.
class UnfoldedDataset {
 public:
  UnfoldedDataset() = default;

  // Unfolds every record with `shape`; standardizes continuous columns to
  // zero mean and unit variance when requested.
  UnfoldedDataset(const SampleSet& samples, const BlockShape& shape, bool standardize)
      : shape_(shape), dims_(samples.dims), specs_(samples.specs), z_(samples.z),
        y_raw_(samples.y), covariate_names_(samples.covariate_names) {
    samples.validate();
    shape.check_against(samples.dims);
    n_ = samples.n();
    const std::size_t pd = shape.rows() * shape.cols();
    x_.resize(static_cast<Eigen::Index>(shape.rows()),
              static_cast<Eigen::Index>(n_ * shape.cols()));
    for (std::size_t i = 0; i < n_; ++i) unfold_into(samples.record(i), shape, x_.data() + i * pd);

    y_ = y_raw_;
    standardization_.assign(specs_.size(), Standardization{});
    if (standardize) {
      for (std::size_t k = 0; k < specs_.size(); ++k) {
        if (specs_[k].kind != ResponseKind::continuous || n_ < 2) continue;
        auto col = y_.col(static_cast<Eigen::Index>(k));
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / static_cast<double>(n_ - 1);
        const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
        standardization_[k] = {mean, scale};
        col = (col.array() - mean) / scale;
      }
    }
  }

  std::size_t n() const { return n_; }
  std::size_t p() const { return shape_.rows(); }
  std::size_t d() const { return shape_.cols(); }
  std::size_t q() const { return static_cast<std::size_t>(z_.rows()); }
  std::size_t responses() const { return specs_.size(); }
  const BlockShape& shape() const { return shape_; }
  const Dims3& dims() const { return dims_; }
  const std::vector<ResponseSpec>& specs() const { return specs_; }
  const std::vector<Standardization>& standardization() const { return standardization_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  // Unfolded predictor of sample i, p x d.
  Eigen::Map<const Matrix> x(std::size_t i) const {
    return {x_.data() + i * p() * d(), static_cast<Eigen::Index>(p()),
            static_cast<Eigen::Index>(d())};
  }
  // All unfolded predictors side by side, p x (n d).
  const Matrix& x_all() const { return x_; }
  // Model-scale responses, n x K.
  const Matrix& y() const { return y_; }
  // Responses as read, n x K.
  const Matrix& y_raw() const { return y_raw_; }
  // Covariates, q x n.
  const Matrix& z() const { return z_; }

  // Overwrites the model-scale responses, keeping everything else. Used by
  // samplers that redraw y from the model.
  void replace_responses(const Matrix& y) {
    if (y.rows() != y_.rows() || y.cols() != y_.cols())
      throw ShapeError("replace_responses: expected " + std::to_string(y_.rows()) + "x" +
                       std::to_string(y_.cols()));
    y_ = y;
  }

  // Inverse of the constructor: the tensor records and raw responses.
  SampleSet to_samples() const {
    SampleSet s;
    s.dims = dims_;
    s.specs = specs_;
    s.covariate_names = covariate_names_;
    s.y = y_raw_;
    s.z = z_;
    s.x.resize(n_ * product(dims_));
    for (std::size_t i = 0; i < n_; ++i) {
      const DenseTensor3 t = refold(Matrix(x(i)), shape_);
      std::copy(t.values().begin(), t.values().end(), s.x.begin() + i * product(dims_));
    }
    return s;
  }

 private:
  std::size_t n_ = 0;
  BlockShape shape_;
  Dims3 dims_{1, 1, 1};
  std::vector<ResponseSpec> specs_;
  Matrix x_;
  Matrix z_;
  Matrix y_;
  Matrix y_raw_;
  std::vector<Standardization> standardization_;
  std::vector<std::string> covariate_names_;
};

// ---------------------------------------------------------------------------
// Hyperparameters

// Local shrinkage (a, u) and global scale tau of one TPBN block. An unset
// tau resolves to 1 / (m sqrt(n)), m being the block's row count.
struct TpbnHyper {
  double a = 0.5;
  double u = 0.5;
  std::optional<double> tau;
};

enum BlockIndex : std::size_t { kGammaBlock = 0, kABlock = 1, kBBlock = 2 };

struct Hyperparams {
  std::size_t rank = 1;
  std::array<TpbnHyper, 3> tpbn{};  // gamma, A, B
  double c0 = 2.0;
  double c1 = 1.0;
  std::size_t iterations = 1000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  std::uint64_t seed = 1;

  std::size_t kept_draws() const { return (iterations - burn_in) / thin; }

  // Fills unset global scales from the data dimensions.
  Hyperparams resolved(std::size_t n, std::size_t q, std::size_t p, std::size_t d) const {
    Hyperparams h = *this;
    const double root_n = std::sqrt(static_cast<double>(n > 0 ? n : 1));
    const std::array<std::size_t, 3> rows{q, p, d};
    for (std::size_t l = 0; l < 3; ++l)
      if (!h.tpbn[l].tau) h.tpbn[l].tau = 1.0 / (static_cast<double>(rows[l]) * root_n);
    return h;
  }

  void validate() const {
    if (rank < 1) throw ParameterError("rank must be at least 1");
    static const char* names[3] = {"gamma", "A", "B"};
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& t = tpbn[l];
      if (!(t.a > 0.0 && t.a < 1.0) || !(t.u > 0.0 && t.u < 1.0))
        throw ParameterError(std::string("TPBN ") + names[l] + ": a and u must lie in (0,1)");
      if (t.tau && !(*t.tau > 0.0 && *t.tau <= 1.0))
        throw ParameterError(std::string("TPBN ") + names[l] + ": tau must lie in (0,1]");
    }
    if (!(c0 > 0.0) || !(c1 > 0.0)) throw ParameterError("c0 and c1 must be positive");
    if (thin < 1) throw ParameterError("thin must be at least 1");
    if (burn_in >= iterations)
      throw ParameterError("burn-in (" + std::to_string(burn_in) +
                           ") must be smaller than iterations (" + std::to_string(iterations) + ")");
  }
};

// ---------------------------------------------------------------------------
// State

// One coefficient block with its TPBN local variances zeta and rates xi.
struct TPBNBlock {
  Matrix coef;  // m x R (R = 1 for gamma)
  Vector zeta;  // m
  Vector xi;    // m
  double a = 0.5;
  double u = 0.5;
  double tau = 1.0;

  Eigen::Index rows() const { return coef.rows(); }
};

struct ResponseState {
  TPBNBlock gamma;  // q x 1
  TPBNBlock a;      // p x R
  TPBNBlock b;      // d x R
  Vector omega;     // PG weights, 1 for continuous responses
  Vector ytilde;    // working responses
};

struct ChainState {
  std::vector<ResponseState> responses;
  Matrix u;      // n x K latent factors
  Matrix sigma;  // K x K
  RngStream rng;
  std::size_t iteration = 0;
  std::size_t clamp_events = 0;
};

inline double working_response(double y, ResponseKind kind, double omega) {
  if (kind == ResponseKind::continuous) return y;
  if (y != 0.0 && y != 1.0)
    throw DataError("binary response must be 0 or 1, got " + std::to_string(y));
  if (!(omega > 0.0)) throw ParameterError("PG weight must be positive");
  return (y - 0.5) / omega;
}

// Unfolded coefficient A B^T (p x d).
inline UnfoldedMatrix compose_coefficient(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("compose_coefficient: A has rank " + std::to_string(a.cols()) +
                     ", B has rank " + std::to_string(b.cols()));
  return a * b.transpose();
}

// trace(A^T X_i B) for every sample.
inline Vector tensor_term(const UnfoldedDataset& data, const Matrix& a, const Matrix& b) {
  const auto n = static_cast<Eigen::Index>(data.n());
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = bilinear_inner(data.x(static_cast<std::size_t>(i)), a, b);
  return out;
}

// Theta_ik = trace(A_k^T X_i B_k) + z_i^T gamma_k + u_ik.
inline Vector linear_predictor(const ChainState& state, const UnfoldedDataset& data,
                               std::size_t k) {
  if (k >= state.responses.size()) throw ShapeError("response index out of range");
  const auto& r = state.responses[k];
  if (static_cast<std::size_t>(r.a.coef.rows()) != data.p() ||
      static_cast<std::size_t>(r.b.coef.rows()) != data.d() ||
      static_cast<std::size_t>(r.gamma.coef.rows()) != data.q() ||
      static_cast<std::size_t>(state.u.rows()) != data.n())
    throw ShapeError("linear_predictor: state does not conform with the dataset");
  return tensor_term(data, r.a.coef, r.b.coef) + data.z().transpose() * r.gamma.coef.col(0) +
         state.u.col(static_cast<Eigen::Index>(k));
}

}  // namespace bskpd

#endif  // BSKPD_MODEL_HPP
