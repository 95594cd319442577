#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace ea {

// Dense row-major matrix of doubles. All products below fix the loop and
// accumulation order, so results are bit-reproducible and row i of A*B does
// not depend on which other rows A carries. The exact-equality tests
// (teacher-forcing traces, baseline equivalence, byte-identical checkpoints)
// rely on both properties; a BLAS backend guarantees neither.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), d_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double* row(size_t i) { return d_.data() + i * cols_; }
  const double* row(size_t i) const { return d_.data() + i * cols_; }
  double& operator()(size_t i, size_t j) { return d_[i * cols_ + j]; }
  double operator()(size_t i, size_t j) const { return d_[i * cols_ + j]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

  void zero() { std::fill(d_.begin(), d_.end(), 0.0); }

  void resize(size_t rows, size_t cols) {
    rows_ = rows;
    cols_ = cols;
    d_.assign(rows * cols, 0.0);
  }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

// C = A * B
inline void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.rows());
  c.resize(a.rows(), b.cols());
  const size_t n = b.cols(), k = a.cols();
  for (size_t i = 0; i < a.rows(); ++i) {
    double* __restrict ci = c.row(i);
    const double* __restrict ai = a.row(i);
    for (size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* __restrict bp = b.row(p);
      for (size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C = A * B^T
inline void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.cols());
  c.resize(a.rows(), b.rows());
  const size_t k = a.cols();
  for (size_t i = 0; i < a.rows(); ++i) {
    const double* __restrict ai = a.row(i);
    double* __restrict ci = c.row(i);
    for (size_t j = 0; j < b.rows(); ++j) {
      const double* __restrict bj = b.row(j);
      double s = 0.0;
      for (size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

// C = A^T * B
inline void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows());
  c.resize(a.cols(), b.cols());
  const size_t n = b.cols();
  for (size_t p = 0; p < a.rows(); ++p) {
    const double* __restrict ap = a.row(p);
    const double* __restrict bp = b.row(p);
    for (size_t i = 0; i < a.cols(); ++i) {
      const double av = ap[i];
      double* __restrict ci = c.row(i);
      for (size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C += A^T * B, used for weight gradient accumulation.
inline void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows());
  assert(c.rows() == a.cols() && c.cols() == b.cols());
  const size_t n = b.cols();
  for (size_t p = 0; p < a.rows(); ++p) {
    const double* __restrict ap = a.row(p);
    const double* __restrict bp = b.row(p);
    for (size_t i = 0; i < a.cols(); ++i) {
      const double av = ap[i];
      double* __restrict ci = c.row(i);
      for (size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

inline void add_inplace(Matrix& a, const Matrix& b) {
  assert(a.same_shape(b));
  double* __restrict pa = a.data();
  const double* __restrict pb = b.data();
  for (size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

inline void scale_inplace(Matrix& a, double s) {
  double* __restrict pa = a.data();
  for (size_t i = 0; i < a.size(); ++i) pa[i] *= s;
}

inline void axpy(double alpha, const double* __restrict x, double* __restrict y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace ea
