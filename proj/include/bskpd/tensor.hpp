#ifndef BSKPD_TENSOR_HPP
#define BSKPD_TENSOR_HPP

// Dense third-order tensors, the tensor Kronecker product and the block
// unfolding that maps a (p1 d1) x (p2 d2) x (p3 d3) tensor onto a p x d
// matrix whose rows are the vectorized d-blocks.
//
// Layout convention shared by every module: first index fastest, both for
// tensors and for Eigen (column-major) matrices. Under this convention
//   unfold(kron(a, b)) == vec3(a) * vec3(b)^T
// and <X, C> == trace(A^T unfold(X) B) for C = sum_r A_r (x) B_r.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bskpd/error.hpp"

namespace bskpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// p x d unfolded coefficient or predictor, column-major.
using UnfoldedMatrix = Eigen::MatrixXd;

using Dims3 = std::array<std::size_t, 3>;

inline std::size_t product(const Dims3& d) { return d[0] * d[1] * d[2]; }

inline std::string to_string(const Dims3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" +
         std::to_string(d[2]);
}

class DenseTensor3 {
 public:
  DenseTensor3() = default;

  explicit DenseTensor3(Dims3 dims) : dims_(dims), values_(product(dims), 0.0) {
    check_dims();
  }

  DenseTensor3(Dims3 dims, std::vector<double> values)
      : dims_(dims), values_(std::move(values)) {
    check_dims();
    if (values_.size() != product(dims_))
      throw ShapeError("tensor " + to_string(dims_) + " needs " +
                       std::to_string(product(dims_)) + " values, got " +
                       std::to_string(values_.size()));
  }

  const Dims3& dims() const noexcept { return dims_; }
  std::size_t dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode)); }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + dims_[0] * (j + dims_[1] * k);
  }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return values_[offset(i, j, k)];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return values_[offset(i, j, k)];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  Eigen::Map<const Vector> as_vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  bool operator==(const DenseTensor3&) const = default;

 private:
  void check_dims() const {
    for (std::size_t m = 0; m < 3; ++m)
      if (dims_[m] == 0)
        throw ShapeError("tensor dims must be positive, got " + to_string(dims_));
  }

  Dims3 dims_{1, 1, 1};
  std::vector<double> values_ = std::vector<double>(1, 0.0);
};

// Per-mode split D_l = p_l * d_l.
struct BlockShape {
  Dims3 p{1, 1, 1};
  Dims3 d{1, 1, 1};

  std::size_t rows() const { return product(p); }
  std::size_t cols() const { return product(d); }
  Dims3 full() const { return {p[0] * d[0], p[1] * d[1], p[2] * d[2]}; }

  // Throws ShapeError naming the first mode where D_l != p_l * d_l.
  void check_against(const Dims3& dims) const {
    for (std::size_t m = 0; m < 3; ++m) {
      if (p[m] == 0 || d[m] == 0)
        throw ShapeError("block split has a zero extent in mode " + std::to_string(m + 1));
      if (p[m] * d[m] != dims[m])
        throw ShapeError("mode " + std::to_string(m + 1) + ": D=" + std::to_string(dims[m]) +
                         " is not p*d=" + std::to_string(p[m]) + "*" + std::to_string(d[m]));
    }
  }

  bool operator==(const BlockShape&) const = default;
};

inline Vector vec3(const DenseTensor3& t) { return t.as_vector(); }

inline DenseTensor3 kron_tensor(const DenseTensor3& a, const DenseTensor3& b) {
  const Dims3& pa = a.dims();
  const Dims3& db = b.dims();
  DenseTensor3 out({pa[0] * db[0], pa[1] * db[1], pa[2] * db[2]});
  for (std::size_t i3 = 0; i3 < pa[2]; ++i3)
    for (std::size_t i2 = 0; i2 < pa[1]; ++i2)
      for (std::size_t i1 = 0; i1 < pa[0]; ++i1) {
        const double av = a(i1, i2, i3);
        for (std::size_t j3 = 0; j3 < db[2]; ++j3)
          for (std::size_t j2 = 0; j2 < db[1]; ++j2)
            for (std::size_t j1 = 0; j1 < db[0]; ++j1)
              out(i1 * db[0] + j1, i2 * db[1] + j2, i3 * db[2] + j3) = av * b(j1, j2, j3);
      }
  return out;
}

namespace detail {

// Visits every element of a (p*d)-shaped tensor as (tensor offset, row, col)
// of its unfolding.
template <class F>
void for_each_block_element(const BlockShape& s, const Dims3& full, F&& f) {
  const auto& p = s.p;
  const auto& d = s.d;
  for (std::size_t k3 = 0; k3 < p[2]; ++k3)
    for (std::size_t k2 = 0; k2 < p[1]; ++k2)
      for (std::size_t k1 = 0; k1 < p[0]; ++k1) {
        const std::size_t row = k1 + p[0] * (k2 + p[1] * k3);
        for (std::size_t j3 = 0; j3 < d[2]; ++j3)
          for (std::size_t j2 = 0; j2 < d[1]; ++j2)
            for (std::size_t j1 = 0; j1 < d[0]; ++j1) {
              const std::size_t col = j1 + d[0] * (j2 + d[1] * j3);
              const std::size_t i = k1 * d[0] + j1;
              const std::size_t j = k2 * d[1] + j2;
              const std::size_t k = k3 * d[2] + j3;
              f(i + full[0] * (j + full[1] * k), row, col);
            }
      }
}

}  // namespace detail

// Writes the unfolding of `values` (a tensor of dims shape.full()) into the
// p x d column-major buffer `out`.
inline void unfold_into(std::span<const double> values, const BlockShape& shape,
                        double* out) {
  const std::size_t p = shape.rows();
  detail::for_each_block_element(shape, shape.full(),
                                 [&](std::size_t off, std::size_t row, std::size_t col) {
                                   out[row + p * col] = values[off];
                                 });
}

inline UnfoldedMatrix unfold(const DenseTensor3& c, const BlockShape& shape) {
  shape.check_against(c.dims());
  UnfoldedMatrix m(static_cast<Eigen::Index>(shape.rows()),
                   static_cast<Eigen::Index>(shape.cols()));
  unfold_into(c.values(), shape, m.data());
  return m;
}

inline DenseTensor3 refold(const UnfoldedMatrix& m, const BlockShape& shape) {
  if (static_cast<std::size_t>(m.rows()) != shape.rows() ||
      static_cast<std::size_t>(m.cols()) != shape.cols())
    throw ShapeError("refold: matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", block split needs " +
                     std::to_string(shape.rows()) + "x" + std::to_string(shape.cols()));
  DenseTensor3 out(shape.full());
  const std::size_t p = shape.rows();
  const double* src = m.data();
  detail::for_each_block_element(shape, shape.full(),
                                 [&](std::size_t off, std::size_t row, std::size_t col) {
                                   out.data()[off] = src[row + p * col];
                                 });
  return out;
}

// sum_r a_r^T X b_r == trace(A^T X B).
template <class DX, class DA, class DB>
double bilinear_inner(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DA>& a,
                      const Eigen::MatrixBase<DB>& b) {
  if (a.rows() != x.rows() || b.rows() != x.cols() || a.cols() != b.cols())
    throw ShapeError("bilinear_inner: X is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + ", A is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", B is " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  return (a.derived().array() * (x.derived() * b.derived()).array()).sum();
}

// Frobenius inner product of equally-shaped tensors.
inline double inner(const DenseTensor3& x, const DenseTensor3& c) {
  if (x.dims() != c.dims())
    throw ShapeError("inner: " + to_string(x.dims()) + " vs " + to_string(c.dims()));
  return x.as_vector().dot(c.as_vector());
}

}  // namespace bskpd

#endif  // BSKPD_TENSOR_HPP
