#include "aelstm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aelstm/errors.hpp"

namespace aelstm {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::row(std::initializer_list<double> values) {
    Matrix m(1, values.size());
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("from_rows: ragged row lengths");
        std::copy(row.begin(), row.end(), m.data_.begin() + i * c);
        ++i;
    }
    return m;
}

void Matrix::resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, 0.0);
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Matrix::row_copy(std::size_t r) const {
    Matrix out(1, cols_);
    std::copy(row_ptr(r), row_ptr(r) + cols_, out.data());
    return out;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(where) + ": shape " + a.shape_str() +
                             " does not match " + b.shape_str());
}

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.all_finite()) throw NumericError("non-finite value in " + what);
}

void matmul_into(Matrix& out, const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + a.shape_str() + " incompatible with " + b.shape_str());
    if (out.rows() != a.rows() || out.cols() != b.cols()) out.resize(a.rows(), b.cols());
    else out.fill(0.0);
    const std::size_t p = a.rows(), n = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < p; ++i) {
        double* orow = out.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = arow[k];
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out;
    matmul_into(out, a, b);
    return out;
}

void acc_matmul(Matrix& out, const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols())
        throw DimensionError("acc_matmul: " + a.shape_str() + " * " + b.shape_str() + " -> " +
                             out.shape_str());
    const std::size_t p = a.rows(), n = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < p; ++i) {
        double* orow = out.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = arow[k];
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
}

void acc_matmul_a_bt(Matrix& out, const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("acc_matmul_a_bt: " + a.shape_str() + " vs " + b.shape_str());
    const std::size_t p = a.rows(), n = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < p; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.row_ptr(j);
            // four accumulators so the reduction vectorizes
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= n; k += 4) {
                s0 += arow[k] * brow[k];
                s1 += arow[k + 1] * brow[k + 1];
                s2 += arow[k + 2] * brow[k + 2];
                s3 += arow[k + 3] * brow[k + 3];
            }
            double acc = (s0 + s1) + (s2 + s3);
            for (; k < n; ++k) acc += arow[k] * brow[k];
            orow[j] += acc;
        }
    }
}

void acc_matmul_at_b(Matrix& out, const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("acc_matmul_at_b: " + a.shape_str() + " vs " + b.shape_str());
    const std::size_t n = a.rows(), p = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        const double* brow = b.row_ptr(i);
        for (std::size_t k = 0; k < p; ++k) {
            const double aik = arow[k];
            double* orow = out.row_ptr(k);
            for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
}

void acc_col_sums(Matrix& out, const Matrix& a) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(0);
        for (std::size_t j = 0; j < a.cols(); ++j) orow[j] += arow[j];
    }
}

void acc_scaled(Matrix& out, const Matrix& a, double s) {
    require_same_shape(out, a, "acc_scaled");
    double* o = out.data();
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) o[i] += s * p[i];
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator+");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) += b.at_flat(i);
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator-");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) -= b.at_flat(i);
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) *= b.at_flat(i);
    return out;
}

Matrix scaled(const Matrix& a, double s) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) *= s;
    return out;
}

double sum(const Matrix& m) {
    return std::accumulate(m.data(), m.data() + m.size(), 0.0);
}

double sum_squares(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m.at_flat(i) * m.at_flat(i);
    return acc;
}

double max_abs(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc = std::max(acc, std::abs(m.at_flat(i)));
    return acc;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc = std::max(acc, std::abs(a.at_flat(i) - b.at_flat(i)));
    return acc;
}

Matrix solve_linear(Matrix a, Matrix b) {
    if (a.rows() != a.cols())
        throw DimensionError("solve_linear: A must be square, got " + a.shape_str());
    if (a.rows() != b.rows())
        throw DimensionError("solve_linear: A " + a.shape_str() + " vs b " + b.shape_str());
    const std::size_t n = a.rows(), m = b.cols();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a(r, col));
            if (v > best) { best = v; pivot = r; }
        }
        if (best < 1e-300) throw NumericError("solve_linear: singular matrix");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(pivot, j), a(col, j));
            for (std::size_t j = 0; j < m; ++j) std::swap(b(pivot, j), b(col, j));
        }
        const double inv = 1.0 / a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) * inv;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < m; ++j) b(r, j) -= f * b(col, j);
        }
    }
    Matrix x(n, m);
    for (std::size_t ri = n; ri-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = b(ri, j);
            for (std::size_t k = ri + 1; k < n; ++k) acc -= a(ri, k) * x(k, j);
            x(ri, j) = acc / a(ri, ri);
        }
    }
    return x;
}

SymEigen sym_eigen(const Matrix& sym, int max_sweeps) {
    if (sym.rows() != sym.cols())
        throw DimensionError("sym_eigen: matrix must be square, got " + sym.shape_str());
    const std::size_t n = sym.rows();
    Matrix a = sym;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
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
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    SymEigen out;
    out.values.resize(n);
    out.axes.resize(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t src = order[r];
        out.values[r] = diag[src];
        for (std::size_t k = 0; k < n; ++k) out.axes(r, k) = v(k, src);
    }
    return out;
}

}  // namespace aelstm
