#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace wkf {

using Complex = std::complex<double>;
using Vector = std::vector<Complex>;

/// Largest dimension accepted by the dense spectral kernels.
inline constexpr std::size_t max_dim = 64;

/**
 * Dense row-major complex matrix.
 *
 * Holds every operator the library works with: K, T, their adjoints and
 * pseudoinverses, frame operators and projectors.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    Matrix(std::initializer_list<std::initializer_list<Complex>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_) {
                throw Error(Errc::DimensionMismatch, "ragged matrix literal");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    static Matrix diagonal(std::span<const double> values) {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            m(i, i) = values[i];
        }
        return m;
    }

    static Matrix diagonal(std::initializer_list<double> values) {
        return diagonal(std::span<const double>(values.begin(), values.size()));
    }

    /// Column vectors side by side; every vector must have length `rows`.
    static Matrix from_columns(std::size_t rows, std::span<const Vector> columns) {
        Matrix m(rows, columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (columns[j].size() != rows) {
                throw Error(Errc::DimensionMismatch, "column length differs from row count");
            }
            for (std::size_t i = 0; i < rows; ++i) {
                m(i, j) = columns[j][i];
            }
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return data_.empty(); }

    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const Complex> entries() const noexcept { return data_; }
    std::span<Complex> entries() noexcept { return data_; }

    Vector column(std::size_t c) const {
        Vector v(rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            v[r] = (*this)(r, c);
        }
        return v;
    }

    void set_column(std::size_t c, std::span<const Complex> v) {
        for (std::size_t r = 0; r < rows_; ++r) {
            (*this)(r, c) = v[r];
        }
    }

    /// Conjugate transpose.
    Matrix adjoint() const {
        Matrix out(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                out(c, r) = std::conj((*this)(r, c));
            }
        }
        return out;
    }

    /// First `count` columns.
    Matrix leading_columns(std::size_t count) const {
        Matrix out(rows_, count);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < count; ++c) {
                out(r, c) = (*this)(r, c);
            }
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(Errc::DimensionMismatch, "matrix product " + std::to_string(a.rows()) + "x" +
                                                 std::to_string(a.cols()) + " * " +
                                                 std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Complex aik = a(i, k);
            if (aik == Complex{}) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

inline Vector operator*(const Matrix& a, std::span<const Complex> v) {
    if (a.cols() != v.size()) {
        throw Error(Errc::DimensionMismatch, "matrix-vector product");
    }
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Complex acc{};
        for (std::size_t k = 0; k < a.cols(); ++k) {
            acc += a(i, k) * v[k];
        }
        out[i] = acc;
    }
    return out;
}

inline Vector operator*(const Matrix& a, const Vector& v) { return a * std::span<const Complex>(v); }

inline Matrix operator+(Matrix a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::DimensionMismatch, "matrix sum");
    }
    auto lhs = a.entries();
    auto rhs = b.entries();
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        lhs[i] += rhs[i];
    }
    return a;
}

inline Matrix operator-(Matrix a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::DimensionMismatch, "matrix difference");
    }
    auto lhs = a.entries();
    auto rhs = b.entries();
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        lhs[i] -= rhs[i];
    }
    return a;
}

inline Matrix operator*(Complex s, Matrix a) {
    for (auto& x : a.entries()) {
        x *= s;
    }
    return a;
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (const auto& x : m.entries()) {
        acc += std::norm(x);
    }
    return std::sqrt(acc);
}

inline bool is_finite(const Matrix& m) {
    return std::all_of(m.entries().begin(), m.entries().end(),
                       [](Complex x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

inline void require_finite(const Matrix& m, std::string_view what) {
    if (!is_finite(m)) {
        throw Error(Errc::NonFinite, std::string(what) + " has NaN or Inf entries");
    }
}

inline void require_square(const Matrix& m, std::string_view what) {
    if (!m.is_square()) {
        throw Error(Errc::NotSquare, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                         std::to_string(m.cols()));
    }
}

/// True when no entry exceeds the smallest normal double in magnitude.
inline bool is_zero(const Matrix& m) {
    return std::all_of(m.entries().begin(), m.entries().end(), [](Complex x) {
        return std::abs(x) <= std::numeric_limits<double>::min();
    });
}

/// (A + A*)/2, used to scrub rounding asymmetry before spectral work.
inline Matrix hermitian_part(const Matrix& a) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
        }
    }
    return out;
}

/// basis* M basis: M compressed onto the span of the basis columns.
inline Matrix congruence(const Matrix& basis, const Matrix& m) { return basis.adjoint() * (m * basis); }

// Inner product linear in the first argument: <f, g> = sum f_k conj(g_k).
inline Complex inner(std::span<const Complex> f, std::span<const Complex> g) {
    Complex acc{};
    for (std::size_t k = 0; k < f.size(); ++k) {
        acc += f[k] * std::conj(g[k]);
    }
    return acc;
}

inline double norm(std::span<const Complex> v) {
    double acc = 0.0;
    for (const auto& x : v) {
        acc += std::norm(x);
    }
    return std::sqrt(acc);
}

inline Vector normalized(Vector v) {
    const double n = norm(v);
    if (n > 0.0) {
        for (auto& x : v) {
            x /= n;
        }
    }
    return v;
}

inline Vector scaled(Complex s, Vector v) {
    for (auto& x : v) {
        x *= s;
    }
    return v;
}

/// Outer product v v*.
inline Matrix outer(std::span<const Complex> v) {
    Matrix out(v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) {
            out(i, j) = v[i] * std::conj(v[j]);
        }
    }
    return out;
}

} // namespace wkf
