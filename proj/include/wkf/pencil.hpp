#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "linalg.hpp"

namespace wkf {

/// Generalized Rayleigh quotient <lhs f, f> / <rhs f, f> over f with rhs f != 0.
struct PencilProblem {
    Matrix lhs; // Hermitian PSD
    Matrix rhs; // Hermitian PSD, not identically zero
    double tol = 1e-10;
    double rank_tol = default_rank_tol;
};

struct PencilSpectrum {
    /// Stationary values of the quotient after eliminating ker(rhs); ascending, >= 0.
    std::vector<double> values;
    Vector min_witness;
    /// Maximizer when bounded; otherwise a unit vector of ker(rhs) on which lhs is positive.
    Vector max_witness;
    /// Largest eigenvalue of lhs compressed onto ker(rhs).
    double kernel_mass = 0.0;
    /// lhs vanishes on ker(rhs), so the quotient is bounded above.
    bool bounded = true;

    double smallest() const { return values.front(); }
    double largest() const { return bounded ? values.back() : std::numeric_limits<double>::infinity(); }
};

namespace detail {

inline void require_psd(const Matrix& m, double tol, std::string_view what) {
    require_square(m, what);
    require_finite(m, what);
    const double scale = frobenius_norm(m);
    const auto eig = hermitian_eig(m, tol);
    if (!eig.values.empty() && eig.values.front() < -tol * (1.0 + scale)) {
        throw Error(Errc::NotHermitian, std::string(what) + " is not positive semidefinite (eigenvalue " +
                                            std::to_string(eig.values.front()) + ")");
    }
}

// Pseudoinverse of a Hermitian PSD block from its spectrum, cutting at an absolute floor.
inline Matrix psd_pinv(const EigResult& eig, double floor) {
    const std::size_t n = eig.values.size();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (eig.values[k] <= floor) {
            continue;
        }
        const double inv = 1.0 / eig.values[k];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += eig.vectors(i, k) * inv * std::conj(eig.vectors(j, k));
            }
        }
    }
    return out;
}

} // namespace detail

/**
 * PSD pencil with a fixed right-hand side, decomposed once.
 *
 * With rhs = V diag(l) V*, the space splits into R = range(rhs) (eigenvalues
 * at or above rank_tol * l_max) and N = ker(rhs). Directions in N leave the
 * denominator unchanged, so they are minimized out of the numerator first:
 * on R the quotient is governed by the Schur complement
 *
 *     lhs_RR - lhs_RN lhs_NN^+ lhs_NR,
 *
 * whitened by l^{-1/2}. Its smallest eigenvalue is the infimum of the
 * quotient over all f with rhs f != 0. If lhs does not vanish on N the
 * supremum is infinite.
 */
class PencilSolver {
public:
    PencilSolver(const Matrix& rhs, double tol = 1e-10, double rank_tol = default_rank_tol) : tol_(tol) {
        detail::require_psd(rhs, tol, "pencil rhs");
        const std::size_t n = rhs.rows();
        const auto eig = hermitian_eig(rhs, tol);
        const double lmax = n == 0 ? 0.0 : eig.values.back();
        if (n == 0 || lmax <= std::numeric_limits<double>::min() || is_zero(rhs)) {
            throw Error(Errc::ZeroPencil, "rhs is numerically zero");
        }
        std::vector<std::size_t> kept;
        std::vector<std::size_t> dropped;
        for (std::size_t k = 0; k < n; ++k) {
            (eig.values[k] >= rank_tol * lmax ? kept : dropped).push_back(k);
        }
        whiten_ = Matrix(n, kept.size());
        for (std::size_t j = 0; j < kept.size(); ++j) {
            const double w = 1.0 / std::sqrt(eig.values[kept[j]]);
            for (std::size_t i = 0; i < n; ++i) {
                whiten_(i, j) = eig.vectors(i, kept[j]) * w;
            }
        }
        kernel_ = Matrix(n, dropped.size());
        for (std::size_t j = 0; j < dropped.size(); ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                kernel_(i, j) = eig.vectors(i, dropped[j]);
            }
        }
    }

    std::size_t dim() const noexcept { return whiten_.rows(); }
    std::size_t kernel_dim() const noexcept { return kernel_.cols(); }

    /// `validate` = false skips the PSD check for callers that build lhs as a sum of outer products.
    PencilSpectrum solve(const Matrix& lhs_in, bool validate = true) const {
        if (lhs_in.rows() != dim() || lhs_in.cols() != dim()) {
            throw Error(Errc::DimensionMismatch, "pencil matrices differ in size");
        }
        if (validate) {
            detail::require_psd(lhs_in, tol_, "pencil lhs");
        }
        const std::size_t n = dim();
        const Matrix lhs = hermitian_part(lhs_in);
        const double floor = std::max(tol_ * frobenius_norm(lhs), std::numeric_limits<double>::min());

        PencilSpectrum out;
        Matrix correction; // whitened coordinates -> optimal kernel component
        Matrix schur = congruence(whiten_, lhs);
        if (kernel_dim() > 0) {
            const Matrix nn = hermitian_part(congruence(kernel_, lhs));
            const auto nn_eig = hermitian_eig(nn);
            out.kernel_mass = std::max(0.0, nn_eig.values.back());
            out.bounded = out.kernel_mass <= floor;
            if (!out.bounded) {
                out.max_witness = kernel_ * nn_eig.vectors.column(nn.rows() - 1);
            }
            const Matrix nr = kernel_.adjoint() * (lhs * whiten_);
            const Matrix nn_pinv_nr = detail::psd_pinv(nn_eig, floor) * nr;
            correction = kernel_ * nn_pinv_nr;
            schur = schur - nr.adjoint() * nn_pinv_nr;
        }
        const auto reduced = hermitian_eig(hermitian_part(schur));
        out.values.resize(reduced.values.size());
        std::transform(reduced.values.begin(), reduced.values.end(), out.values.begin(),
                       [](double x) { return std::max(0.0, x); });

        auto lift = [&](std::size_t k) {
            const Vector y = reduced.vectors.column(k);
            Vector f = whiten_ * y;
            if (!correction.empty()) {
                const Vector fix = correction * y;
                for (std::size_t i = 0; i < n; ++i) {
                    f[i] -= fix[i];
                }
            }
            return normalized(std::move(f));
        };
        out.min_witness = lift(0);
        if (out.bounded) {
            out.max_witness = lift(out.values.size() - 1);
        }
        return out;
    }

private:
    double tol_;
    Matrix whiten_; // V_R diag(l_R)^{-1/2}
    Matrix kernel_; // V_N
};

inline PencilSpectrum pencil_spectrum(const PencilProblem& p) {
    return PencilSolver(p.rhs, p.tol, p.rank_tol).solve(p.lhs);
}

/// Infimum of the quotient and a unit vector attaining it.
inline std::pair<double, Vector> smallest_pencil_eig(const PencilProblem& p) {
    auto spec = pencil_spectrum(p);
    return {spec.smallest(), std::move(spec.min_witness)};
}

/// Generalized Rayleigh quotient at f; NaN when rhs f = 0.
inline double pencil_quotient(const Matrix& lhs, const Matrix& rhs, std::span<const Complex> f) {
    const double num = inner(lhs * f, f).real();
    const double den = inner(rhs * f, f).real();
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

} // namespace wkf
