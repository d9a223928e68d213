#include "antidote/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "antidote/error.hpp"

namespace antidote::numerics {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "matrix data size does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::vstack(const Matrix& below) const {
  if (rows_ == 0) return below;
  if (below.rows_ == 0) return *this;
  require(cols_ == below.cols_, "vstack: column counts differ");
  Matrix out(rows_ + below.rows_, cols_);
  std::copy(data_.begin(), data_.end(), out.data_.begin());
  std::copy(below.data_.begin(), below.data_.end(), out.data_.begin() + static_cast<std::ptrdiff_t>(data_.size()));
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < rows_, "select_rows: index out of range");
    std::copy_n(row(indices[i]).begin(), cols_, out.row(i).begin());
  }
  return out;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matrix product: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix sum: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix difference: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

namespace {

void check_symmetric(const Matrix& a, double tolerance) {
  require(a.rows() == a.cols(), "sym_eig: matrix is not square (" + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ")");
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  const double limit = tolerance * std::max(scale, 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      require(std::abs(a(i, j) - a(j, i)) <= limit, "sym_eig: matrix is not symmetric");
}

// Householder reduction to tridiagonal form (tred2). `storage` is used column-major; on return
// its strict upper part holds the reflectors, its diagonal the tridiagonal diagonal, d[i] the
// reflector scale h_i and e[i] the subdiagonal entry T(i, i-1).
void householder_reduce(Matrix& storage, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = storage.rows();
  auto v = [&storage](std::size_t r, std::size_t c) -> double& { return storage(c, r); };
  e.assign(n, 0.0);
  d.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k < i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

}

// Implicit QL on the tridiagonal with diagonal d and subdiagonal e (e[i] = T(i, i+1)).
// Rotations are applied to the columns of the column-major `vectors` when given.
void implicit_ql(std::vector<double>& d, std::vector<double>& e, Matrix* vectors, int max_iterations) {
  const std::size_t n = d.size();
  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iterations)
          fail(ErrorKind::NotConverged,
               "sym_eig: QL iteration did not converge within " + std::to_string(max_iterations) + " iterations");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (vectors != nullptr) {
            double* left = vectors->row(ii).data();
            double* right = vectors->row(ii + 1).data();
            for (std::size_t k = 0; k < n; ++k) {
              h = right[k];
              right[k] = s * left[k] + c * h;
              left[k] = c * left[k] - s * h;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

// Full decomposition: on return `d` holds eigenvalues and row j of `storage` the eigenvector for d[j].
void tridiagonal_ql(Matrix& storage, std::vector<double>& d, int max_iterations) {
  const std::size_t n = storage.rows();
  auto v = [&storage](std::size_t r, std::size_t c) -> double& { return storage(c, r); };
  std::vector<double> e;
  householder_reduce(storage, d, e);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  implicit_ql(d, e, &storage, max_iterations);
}

// Solves (T - shift I) x = b in place for the tridiagonal (diag, off) by Gaussian elimination
// with partial pivoting; tiny pivots are replaced by `floor`.
void shifted_tridiagonal_solve(const std::vector<double>& diag, const std::vector<double>& off, double shift,
                               double floor, std::vector<double>& b) {
  const std::size_t n = diag.size();
  // Row i of U has entries (a[i], c1[i], c2[i]) on columns i, i+1, i+2.
  std::vector<double> a(n), c1(n, 0.0), c2(n, 0.0), lower(n, 0.0);
  std::vector<bool> swapped(n, false);
  double cur_a = diag[0] - shift;
  double cur_c1 = n > 1 ? off[0] : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n) {
      const double sub = off[i];
      const double next_a = diag[i + 1] - shift;
      const double next_c1 = i + 2 < n ? off[i + 1] : 0.0;
      if (std::abs(sub) > std::abs(cur_a)) {
        swapped[i] = true;
        a[i] = sub;
        c1[i] = next_a;
        c2[i] = next_c1;
        const double m = cur_a / sub;
        lower[i] = m;
        cur_a = cur_c1 - m * next_a;
        cur_c1 = -m * next_c1;
      } else {
        if (std::abs(cur_a) < floor) cur_a = std::copysign(floor, cur_a == 0.0 ? 1.0 : cur_a);
        a[i] = cur_a;
        c1[i] = cur_c1;
        const double m = sub / cur_a;
        lower[i] = m;
        cur_a = next_a - m * cur_c1;
        cur_c1 = next_c1;
      }
    } else {
      if (std::abs(cur_a) < floor) cur_a = std::copysign(floor, cur_a == 0.0 ? 1.0 : cur_a);
      a[i] = cur_a;
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) std::swap(b[i], b[i + 1]);
    b[i + 1] -= lower[i] * b[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double x = b[i];
    if (i + 1 < n) x -= c1[i] * b[i + 1];
    if (i + 2 < n) x -= c2[i] * b[i + 2];
    b[i] = x / a[i];
  }
}

// The `want` smallest eigenpairs via eigenvalues of the tridiagonal form, inverse iteration on
// the tridiagonal and back-transformation through the stored reflectors.
EigenPairs tridiagonal_inverse_iteration(Matrix storage, std::size_t want, int max_iterations) {
  const std::size_t n = storage.rows();
  auto v = [&storage](std::size_t r, std::size_t c) -> double& { return storage(c, r); };
  std::vector<double> h;
  std::vector<double> e;
  householder_reduce(storage, h, e);
  std::vector<double> diag(n), off(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = v(i, i);
  for (std::size_t i = 1; i < n; ++i) off[i - 1] = e[i];

  std::vector<double> values = diag;
  std::vector<double> scratch = off;
  implicit_ql(values, scratch, nullptr, max_iterations);
  std::sort(values.begin(), values.end());
  values.resize(want);

  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    norm = std::max(norm, std::abs(diag[i]) + std::abs(off[i]) + (i > 0 ? std::abs(off[i - 1]) : 0.0));
  const double eps = std::ldexp(1.0, -52);
  const double scale = norm > 0.0 ? norm : 1.0;
  const double floor = eps * scale;
  const double cluster_gap = 1e-3 * scale;

  EigenPairs out;
  out.values = values;
  out.vectors = Matrix(n, want);
  std::vector<std::vector<double>> basis;
  for (std::size_t j = 0; j < want; ++j) {
    std::vector<double> x(n);
    // Deterministic, non-degenerate start vector.
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i * (j + 3) + 1));
    for (int it = 0; it < 5; ++it) {
      shifted_tridiagonal_solve(diag, off, values[j], floor, x);
      for (std::size_t p = 0; p < j; ++p) {
        if (std::abs(values[p] - values[j]) > cluster_gap) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += basis[p][i] * x[i];
        for (std::size_t i = 0; i < n; ++i) x[i] -= dot * basis[p][i];
      }
      double len = 0.0;
      for (double t : x) len += t * t;
      len = std::sqrt(len);
      if (len == 0.0) fail(ErrorKind::NotConverged, "sym_eig: inverse iteration collapsed");
      for (double& t : x) t /= len;
    }
    basis.push_back(x);
  }

  // Back-transform z -> Q z with Q = P_{n-2} ... P_0, P_i acting on coordinates 0..i.
  for (std::size_t j = 0; j < want; ++j) {
    std::vector<double>& z = basis[j];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double hi = h[i + 1];
      if (hi == 0.0) continue;
      double g = 0.0;
      for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * z[k];
      g /= hi;
      for (std::size_t k = 0; k <= i; ++k) z[k] -= g * v(k, i + 1);
    }
    double len = 0.0;
    for (double t : z) len += t * t;
    len = std::sqrt(len);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = z[i] / len;
  }
  return out;
}

void cyclic_jacobi(Matrix& a, Matrix& v, std::vector<double>& d, int max_sweeps) {
  const std::size_t n = a.rows();
  v = Matrix::identity(n);
  const double norm = frobenius_norm(a);
  const double target = 1e-15 * norm;
  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= target || off == 0.0) break;
    if (sweep >= max_sweeps)
      fail(ErrorKind::NotConverged,
           "sym_eig: Jacobi did not converge within " + std::to_string(max_sweeps) + " sweeps");
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  d.resize(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
}

}  // namespace

EigenPairs sym_eig(const Matrix& a, std::size_t want, const EigenOptions& options) {
  check_symmetric(a, options.symmetry_tolerance);
  const std::size_t n = a.rows();
  require(want >= 1 && want <= n, "sym_eig: requested eigenpair count must be in [1, dim]");

  if (options.method == EigenMethod::TridiagonalInverseIteration) {
    Matrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (a(i, j) + a(j, i));
    return tridiagonal_inverse_iteration(std::move(sym), want, options.max_ql_iterations);
  }

  std::vector<double> d;
  Matrix v;
  if (options.method == EigenMethod::CyclicJacobi) {
    Matrix work = a;
    cyclic_jacobi(work, v, d, options.max_sweeps);
  } else {
    // Work on the symmetrized matrix so tiny asymmetries cannot leak into the reduction.
    v = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) v(i, j) = 0.5 * (a(i, j) + a(j, i));
    tridiagonal_ql(v, d, options.max_ql_iterations);
  }

  const bool rows_are_vectors = options.method != EigenMethod::CyclicJacobi;
  auto vec = [&](std::size_t i, std::size_t j) { return rows_are_vectors ? v(j, i) : v(i, j); };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });

  EigenPairs out;
  out.values.resize(want);
  out.vectors = Matrix(n, want);
  for (std::size_t j = 0; j < want; ++j) {
    const std::size_t src = order[j];
    out.values[j] = d[src];
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += vec(i, src) * vec(i, src);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = vec(i, src) / norm;
  }
  return out;
}

Matrix cholesky(const Matrix& a) {
  require(a.rows() == a.cols(), "cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0))
      fail(ErrorKind::InvalidArgument,
           "cholesky: matrix is not positive definite (pivot " + std::to_string(j) + " = " + std::to_string(diag) + ")");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  require(b.rows() == a.rows(), "solve_spd: right-hand side has wrong row count");
  const Matrix l = cholesky(a);
  const std::size_t n = a.rows();
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

PcaFit pca_fit(const Matrix& x, std::size_t d_out) {
  require(d_out <= x.cols(), "pca: d_out (" + std::to_string(d_out) + ") exceeds column count (" +
                                 std::to_string(x.cols()) + ")");
  require(x.rows() >= 1, "pca: no rows");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  PcaFit fit;
  fit.mean.assign(d, 0.0);
  Matrix centered = x;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    fit.mean[c] = mean;
    for (std::size_t r = 0; r < n; ++r) centered(r, c) -= mean;
  }
  if (d_out == 0) {
    fit.basis = Matrix(d, 0);
    fit.projected = Matrix(n, 0);
    return fit;
  }
  Matrix cov = centered.transpose() * centered;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (double& v : cov.data()) v /= denom;
  // Enforce exact symmetry lost to rounding in the product.
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) cov(j, i) = cov(i, j);

  const EigenPairs eig = sym_eig(cov, d);
  Matrix basis(d, d_out);
  for (std::size_t j = 0; j < d_out; ++j) {
    const std::size_t src = d - 1 - j;  // descending variance
    // Fix the sign so the largest-magnitude loading is positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::abs(eig.vectors(i, src)) > std::abs(eig.vectors(arg, src))) arg = i;
    const double sign = eig.vectors(arg, src) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) basis(i, j) = sign * eig.vectors(i, src);
  }
  fit.projected = centered * basis;
  fit.basis = std::move(basis);
  return fit;
}

}  // namespace antidote::numerics
