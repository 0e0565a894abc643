#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "pencil.hpp"

namespace wkf {

/// Thresholds shared by every analysis in the library.
struct Tolerances {
    double rank_tol = default_rank_tol; // numerical rank, relative to the largest singular value
    double frame_tol = 1e-10;           // a lower bound above this counts as positive
    double cert_tol = 1e-8;             // relative slack for claimed-vs-achieved comparisons
};

/// Ordered finite family {f_i} of vectors in C^dim. Zero vectors are legal.
class FrameFamily {
public:
    FrameFamily() = default;
    FrameFamily(std::size_t dim, std::vector<Vector> vectors) : dim_(dim), vectors_(std::move(vectors)) {
        for (std::size_t i = 0; i < vectors_.size(); ++i) {
            if (vectors_[i].size() != dim_) {
                throw Error(Errc::DimensionMismatch, "vector " + std::to_string(i) + " has length " +
                                                         std::to_string(vectors_[i].size()) + ", expected " +
                                                         std::to_string(dim_));
            }
            for (const auto& x : vectors_[i]) {
                if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
                    throw Error(Errc::NonFinite, "vector " + std::to_string(i) + " has NaN or Inf entries");
                }
            }
        }
    }

    /// Columns of a dim x n matrix.
    static FrameFamily from_synthesis(const Matrix& synthesis) {
        std::vector<Vector> vs;
        vs.reserve(synthesis.cols());
        for (std::size_t j = 0; j < synthesis.cols(); ++j) {
            vs.push_back(synthesis.column(j));
        }
        return FrameFamily(synthesis.rows(), std::move(vs));
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return vectors_.size(); }
    bool empty() const noexcept { return vectors_.empty(); }
    const Vector& operator[](std::size_t i) const { return vectors_[i]; }
    const std::vector<Vector>& vectors() const noexcept { return vectors_; }

    /// Synthesis operator T: C^n -> C^dim with the f_i as columns.
    Matrix synthesis() const { return Matrix::from_columns(dim_, vectors_); }

    /// Analysis coefficients <f, f_i>.
    std::vector<Complex> analysis(std::span<const Complex> f) const {
        std::vector<Complex> c(vectors_.size());
        for (std::size_t i = 0; i < vectors_.size(); ++i) {
            c[i] = inner(f, vectors_[i]);
        }
        return c;
    }

    /// sum_i |<f, f_i>|^2
    double energy(std::span<const Complex> f) const {
        double acc = 0.0;
        for (const auto& v : vectors_) {
            acc += std::norm(inner(f, v));
        }
        return acc;
    }

    /// {M f_i}
    FrameFamily mapped(const Matrix& m) const {
        if (m.cols() != dim_) {
            throw Error(Errc::DimensionMismatch, "operator has " + std::to_string(m.cols()) +
                                                     " columns, family lives in dimension " + std::to_string(dim_));
        }
        std::vector<Vector> vs;
        vs.reserve(vectors_.size());
        for (const auto& v : vectors_) {
            vs.push_back(m * v);
        }
        return FrameFamily(m.rows(), std::move(vs));
    }

    /// The family with the listed (0-based) indices removed, order preserved.
    FrameFamily without(std::span<const std::size_t> erased) const {
        std::vector<bool> drop(vectors_.size(), false);
        for (auto i : erased) {
            if (i >= vectors_.size()) {
                throw Error(Errc::LengthMismatch, "erased index " + std::to_string(i + 1) + " outside [1, " +
                                                      std::to_string(vectors_.size()) + "]");
            }
            drop[i] = true;
        }
        std::vector<Vector> vs;
        for (std::size_t i = 0; i < vectors_.size(); ++i) {
            if (!drop[i]) {
                vs.push_back(vectors_[i]);
            }
        }
        return FrameFamily(dim_, std::move(vs));
    }

    friend bool operator==(const FrameFamily&, const FrameFamily&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<Vector> vectors_;
};

/// S = sum_i f_i f_i*, accumulated in index order.
inline Matrix frame_operator(const FrameFamily& f) {
    Matrix s(f.dim(), f.dim());
    for (const auto& v : f.vectors()) {
        for (std::size_t r = 0; r < f.dim(); ++r) {
            for (std::size_t c = 0; c < f.dim(); ++c) {
                s(r, c) += v[r] * std::conj(v[c]);
            }
        }
    }
    return s;
}

struct BoundsReport {
    double lower = 0.0;
    double upper = 0.0;
    bool is_frame = false;
    Vector lower_witness;
    Vector upper_witness;
    std::size_t subspace_dim = 0;
};

struct KBoundsReport {
    double lower = 0.0;
    double upper = 0.0;
    bool is_kframe = false;
    bool is_tight = false;
    std::optional<double> tight_constant;
    Vector lower_witness;
    Vector upper_witness;
    /// Largest value of the quotient when finite, +inf otherwise.
    double pencil_max = 0.0;
};

/// Orthonormal basis of the restriction domain, or nullopt for the whole space.
inline std::optional<Matrix> subspace_basis(const std::optional<Matrix>& subspace, std::size_t dim,
                                            double rank_tol) {
    if (!subspace) {
        return std::nullopt;
    }
    if (subspace->rows() != dim) {
        throw Error(Errc::DimensionMismatch, "subspace generators have " + std::to_string(subspace->rows()) +
                                                 " rows, expected " + std::to_string(dim));
    }
    Matrix basis = range_basis(*subspace, rank_tol);
    if (basis.cols() == 0) {
        throw Error(Errc::ZeroSubspace, "subspace has numerical rank 0");
    }
    return basis;
}

/// Extremal Rayleigh quotients of S, optionally over span(basis) only.
inline BoundsReport bounds_of_operator(const Matrix& s, const std::optional<Matrix>& basis,
                                       const Tolerances& tol = {}) {
    const Matrix compressed = basis ? hermitian_part(congruence(*basis, s)) : s;
    const auto eig = hermitian_eig(compressed);
    BoundsReport out;
    out.subspace_dim = compressed.rows();
    out.lower = std::max(0.0, eig.values.front());
    out.upper = std::max(0.0, eig.values.back());
    Vector lo = eig.vectors.column(0);
    Vector hi = eig.vectors.column(compressed.rows() - 1);
    out.lower_witness = basis ? *basis * lo : lo;
    out.upper_witness = basis ? *basis * hi : hi;
    out.is_frame = out.lower > tol.frame_tol;
    return out;
}

/**
 * Optimal frame bounds: the extremal eigenvalues of S, or of U* S U when a
 * subspace (given by spanning columns) restricts the domain to its span.
 */
inline BoundsReport frame_bounds(const FrameFamily& f, const std::optional<Matrix>& subspace = std::nullopt,
                                 const Tolerances& tol = {}) {
    if (f.empty()) {
        throw Error(Errc::EmptyFamily, "frame bounds of an empty family");
    }
    const auto basis = subspace_basis(subspace, f.dim(), tol.rank_tol);
    return bounds_of_operator(frame_operator(f), basis, tol);
}

namespace detail {

inline void require_operator(const Matrix& k, std::size_t dim, std::string_view what) {
    require_finite(k, what);
    if (k.rows() != dim || k.cols() != dim) {
        throw Error(Errc::DimensionMismatch, std::string(what) + " is " + std::to_string(k.rows()) + "x" +
                                                 std::to_string(k.cols()) + ", expected " + std::to_string(dim) +
                                                 "x" + std::to_string(dim));
    }
}

} // namespace detail

/// Pencil solver for <S f, f> against ||K* f||^2, compressed onto a subspace if given.
inline PencilSolver kframe_pencil(const Matrix& k, const std::optional<Matrix>& basis, const Tolerances& tol) {
    if (is_zero(k)) {
        throw Error(Errc::ZeroK, "K is numerically zero");
    }
    const Matrix kk = hermitian_part(k * k.adjoint());
    const Matrix rhs = basis ? hermitian_part(congruence(*basis, kk)) : kk;
    try {
        return PencilSolver(rhs, tol.frame_tol, tol.rank_tol);
    } catch (const Error& e) {
        if (e.code() == Errc::ZeroPencil) {
            throw Error(Errc::ZeroK, "K* vanishes on the restriction domain");
        }
        throw;
    }
}

inline KBoundsReport kbounds_of_operator(const Matrix& s, const PencilSolver& pencil,
                                         const std::optional<Matrix>& basis, const Tolerances& tol = {}) {
    const Matrix compressed = basis ? hermitian_part(congruence(*basis, s)) : s;
    const auto spec = pencil.solve(compressed, false);
    const auto upper = hermitian_eig(compressed);

    KBoundsReport out;
    out.lower = spec.smallest();
    out.upper = std::max(0.0, upper.values.back());
    out.pencil_max = spec.largest();
    out.is_kframe = out.lower > tol.frame_tol;
    out.lower_witness = basis ? *basis * spec.min_witness : spec.min_witness;
    const Vector hi = upper.vectors.column(compressed.rows() - 1);
    out.upper_witness = basis ? *basis * hi : hi;
    out.is_tight = spec.bounded && (spec.largest() - spec.smallest()) <= tol.frame_tol * (1.0 + out.upper);
    if (out.is_tight) {
        out.tight_constant = out.lower;
    }
    return out;
}

/**
 * Optimal K-frame bounds.
 *
 * lower is the infimum of sum |<f, f_i>|^2 / ||K* f||^2 over f with K* f != 0
 * (directions where K* f = 0 impose no constraint); upper is the Bessel bound.
 * The family is tight when that quotient is constant, i.e. its pencil
 * spectrum is a single value and S vanishes on ker K*.
 */
inline KBoundsReport kframe_bounds(const FrameFamily& f, const Matrix& k,
                                   const std::optional<Matrix>& subspace = std::nullopt,
                                   const Tolerances& tol = {}) {
    if (f.empty()) {
        throw Error(Errc::EmptyFamily, "K-frame bounds of an empty family");
    }
    detail::require_operator(k, f.dim(), "K");
    const auto basis = subspace_basis(subspace, f.dim(), tol.rank_tol);
    const auto pencil = kframe_pencil(k, basis, tol);
    return kbounds_of_operator(frame_operator(f), pencil, basis, tol);
}

} // namespace wkf
