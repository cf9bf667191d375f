#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace aelstm {

// Dense row-major matrix of doubles. Everything in this project is
// desk-scale, so the implementation favors clarity and determinism over
// cache blocking; the hot loops are still written so the compiler can
// vectorize them.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix row(std::initializer_list<double> values);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& at_flat(std::size_t i) { return data_[i]; }
    double at_flat(std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    void resize(std::size_t rows, std::size_t cols);
    void fill(double v);
    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
    std::string shape_str() const;
    bool all_finite() const;

    Matrix row_copy(std::size_t r) const;

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

void require_same_shape(const Matrix& a, const Matrix& b, const char* where);
void require_finite(const Matrix& m, const std::string& what);

// out = a * b, with a: (p x n), b: (n x m).
void matmul_into(Matrix& out, const Matrix& a, const Matrix& b);
Matrix matmul(const Matrix& a, const Matrix& b);
// out += a * b
void acc_matmul(Matrix& out, const Matrix& a, const Matrix& b);

// out += a * b^T   (a: p x n, b: m x n, out: p x m)
void acc_matmul_a_bt(Matrix& out, const Matrix& a, const Matrix& b);
// out += a^T * b   (a: n x p, b: n x m, out: p x m)
void acc_matmul_at_b(Matrix& out, const Matrix& a, const Matrix& b);
// out(0,j) += sum_i a(i,j)
void acc_col_sums(Matrix& out, const Matrix& a);
// out += s * a
void acc_scaled(Matrix& out, const Matrix& a, double s);

Matrix transpose(const Matrix& m);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);

double sum(const Matrix& m);
double sum_squares(const Matrix& m);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Solves A x = b with Gaussian elimination and partial pivoting.
// A: n x n, b: n x m. Throws NumericError on a singular system.
Matrix solve_linear(Matrix a, Matrix b);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Values are sorted in non-increasing order; `axes` holds the matching
// eigenvectors as rows (orthonormal).
struct SymEigen {
    std::vector<double> values;
    Matrix axes;
};
SymEigen sym_eigen(const Matrix& sym, int max_sweeps = 100);

}  // namespace aelstm
