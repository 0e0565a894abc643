#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "matrix.hpp"

namespace wkf {

/// Default numerical-rank threshold, relative to the largest singular value.
inline constexpr double default_rank_tol = 1e-10;

struct EigResult {
    std::vector<double> values; // ascending
    Matrix vectors;             // orthonormal eigenvectors as columns
};

struct SvdResult {
    Matrix u;                // rows x k, orthonormal columns
    std::vector<double> s;   // descending, k = min(rows, cols)
    Matrix v;                // cols x k, orthonormal columns
};

namespace detail {

inline void require_small(const Matrix& m, std::string_view what) {
    if (m.rows() > max_dim || m.cols() > max_dim) {
        throw Error(Errc::DimensionTooLarge, std::string(what) + " exceeds the dense limit of " +
                                                 std::to_string(max_dim));
    }
}

// Plane rotation that annihilates the off-diagonal entry of the Hermitian
// 2x2 block [[app, apq], [conj(apq), aqq]]:
//   G = [[c, s*phase], [-s*conj(phase), c]],   G* A G diagonal.
struct Rotation {
    double c = 1.0;
    double s = 0.0;
    Complex phase{1.0, 0.0};
    double t = 0.0;
};

inline Rotation jacobi_rotation(double app, double aqq, Complex apq) {
    Rotation r;
    const double mag = std::abs(apq);
    r.phase = apq / mag;
    const double theta = (aqq - app) / (2.0 * mag);
    if (std::abs(theta) > 1e150) {
        r.t = 0.5 / theta;
    } else {
        r.t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    }
    r.c = 1.0 / std::sqrt(1.0 + r.t * r.t);
    r.s = r.t * r.c;
    return r;
}

// M <- M G on columns p, q.
inline void rotate_columns(Matrix& m, std::size_t p, std::size_t q, const Rotation& r) {
    const Complex gqp = -r.s * std::conj(r.phase);
    const Complex gpq = r.s * r.phase;
    for (std::size_t k = 0; k < m.rows(); ++k) {
        const Complex mp = m(k, p);
        const Complex mq = m(k, q);
        m(k, p) = r.c * mp + gqp * mq;
        m(k, q) = gpq * mp + r.c * mq;
    }
}

// M <- G* M on rows p, q.
inline void rotate_rows(Matrix& m, std::size_t p, std::size_t q, const Rotation& r) {
    const Complex hpq = -r.s * r.phase;
    const Complex hqp = r.s * std::conj(r.phase);
    for (std::size_t k = 0; k < m.cols(); ++k) {
        const Complex mp = m(p, k);
        const Complex mq = m(q, k);
        m(p, k) = r.c * mp + hpq * mq;
        m(q, k) = hqp * mp + r.c * mq;
    }
}

inline double off_diagonal_mass(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) {
                acc += std::norm(a(i, j));
            }
        }
    }
    return std::sqrt(acc);
}

// First component above the noise floor is rotated onto the positive real axis.
inline void fix_phase(Matrix& vectors, std::size_t col) {
    for (std::size_t k = 0; k < vectors.rows(); ++k) {
        const Complex x = vectors(k, col);
        const double mag = std::abs(x);
        if (mag > 1e-10) {
            const Complex rot = std::conj(x) / mag;
            for (std::size_t i = 0; i < vectors.rows(); ++i) {
                vectors(i, col) *= rot;
            }
            vectors(k, col) = mag;
            return;
        }
    }
}

// Modified Gram-Schmidt of v against the first `count` columns of q (two passes).
inline double orthogonalize(Vector& v, const Matrix& q, std::size_t count) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < count; ++j) {
            Complex proj{};
            for (std::size_t i = 0; i < q.rows(); ++i) {
                proj += std::conj(q(i, j)) * v[i];
            }
            for (std::size_t i = 0; i < q.rows(); ++i) {
                v[i] -= proj * q(i, j);
            }
        }
    }
    return norm(v);
}

} // namespace detail

/**
 * Full spectrum of a Hermitian matrix by cyclic complex Jacobi.
 *
 * Sweeps stop once the off-diagonal Frobenius mass drops to 1e-12 of the
 * input norm (hard cap of 100 sweeps). Eigenvalues come back ascending; each
 * eigenvector is phase-fixed so its first non-negligible entry is real and
 * positive.
 */
inline EigResult hermitian_eig(const Matrix& m, double tol = default_rank_tol) {
    require_square(m, "hermitian_eig input");
    require_finite(m, "hermitian_eig input");
    detail::require_small(m, "hermitian_eig input");

    const std::size_t n = m.rows();
    const double scale = frobenius_norm(m);
    const double skew = frobenius_norm(m - m.adjoint());
    if (skew > tol * (1.0 + scale)) {
        throw Error(Errc::NotHermitian, "||M - M*||_F = " + std::to_string(skew));
    }

    Matrix a = hermitian_part(m);
    Matrix v = Matrix::identity(n);

    bool converged = scale == 0.0;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        if (detail::off_diagonal_mass(a) <= 1e-12 * scale) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                if (std::abs(apq) <= std::numeric_limits<double>::min()) {
                    continue;
                }
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const auto rot = detail::jacobi_rotation(app, aqq, apq);
                const double mag = std::abs(apq);
                detail::rotate_columns(a, p, q, rot);
                detail::rotate_rows(a, p, q, rot);
                detail::rotate_columns(v, p, q, rot);
                a(p, p) = app - rot.t * mag;
                a(q, q) = aqq + rot.t * mag;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }
    if (!converged && detail::off_diagonal_mass(a) > 1e-12 * scale) {
        throw Error(Errc::NoConvergence, "Jacobi did not converge in 100 sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    EigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (std::size_t i = 0; i < n; ++i) {
            out.vectors(i, k) = v(i, order[k]);
        }
        detail::fix_phase(out.vectors, k);
    }
    return out;
}

/**
 * Thin SVD, M = U diag(s) V*.
 *
 * V comes from the eigenvectors of M*M; the columns of M V are then polished
 * by one-sided Jacobi so that small singular values keep their relative
 * accuracy, and U is recovered column by column with explicit
 * re-orthonormalization (and completion where a singular value vanishes).
 */
inline SvdResult svd(const Matrix& m) {
    require_finite(m, "svd input");
    detail::require_small(m, "svd input");
    if (m.rows() < m.cols()) {
        auto t = svd(m.adjoint());
        return {std::move(t.v), std::move(t.s), std::move(t.u)};
    }
    const std::size_t rows = m.rows();
    const std::size_t k = m.cols();

    Matrix v = hermitian_eig(hermitian_part(m.adjoint() * m)).vectors;
    Matrix w = m * v;

    for (int sweep = 0; sweep < 30; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                Complex gamma{};
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += std::norm(w(i, p));
                    beta += std::norm(w(i, q));
                    gamma += std::conj(w(i, p)) * w(i, q);
                }
                if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) ||
                    std::abs(gamma) <= std::numeric_limits<double>::min()) {
                    continue;
                }
                const auto rot = detail::jacobi_rotation(alpha, beta, gamma);
                detail::rotate_columns(w, p, q, rot);
                detail::rotate_columns(v, p, q, rot);
                rotated = true;
            }
        }
        if (!rotated) {
            break;
        }
    }

    std::vector<double> sv(k);
    for (std::size_t j = 0; j < k; ++j) {
        sv[j] = norm(w.column(j));
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sv[i] > sv[j]; });

    SvdResult out;
    out.s.resize(k);
    out.u = Matrix(rows, k);
    out.v = Matrix(k, k);
    const double smax = k == 0 ? 0.0 : sv[order[0]];
    const double floor = std::max(smax * 1e-14, std::numeric_limits<double>::min());
    std::size_t next_basis = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        out.s[j] = sv[src];
        for (std::size_t i = 0; i < k; ++i) {
            out.v(i, j) = v(i, src);
        }
        Vector u = w.column(src);
        double len = 0.0;
        if (sv[src] > floor) {
            for (auto& x : u) {
                x /= sv[src];
            }
            len = detail::orthogonalize(u, out.u, j);
        }
        // Degenerate direction: complete with a standard basis vector.
        while (len < 0.5 && next_basis < rows) {
            u.assign(rows, Complex{});
            u[next_basis++] = 1.0;
            len = detail::orthogonalize(u, out.u, j);
        }
        for (auto& x : u) {
            x /= len;
        }
        out.u.set_column(j, u);
    }
    return out;
}

inline double op_norm(const Matrix& m) {
    if (m.empty()) {
        return 0.0;
    }
    return svd(m).s.front();
}

/// Number of singular values above rank_tol times the largest.
inline std::size_t numerical_rank(const Matrix& m, double rank_tol = default_rank_tol) {
    if (m.empty()) {
        return 0;
    }
    const auto s = svd(m).s;
    if (s.front() <= 0.0) {
        return 0;
    }
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [&](double x) { return x > rank_tol * s.front(); }));
}

/// Moore-Penrose pseudoinverse; singular values below rank_tol * s_max count as zero.
inline Matrix pinv(const Matrix& m, double rank_tol = default_rank_tol) {
    require_finite(m, "pinv input");
    Matrix out(m.cols(), m.rows());
    if (m.empty()) {
        return out;
    }
    const auto d = svd(m);
    if (d.s.front() <= 0.0) {
        return out;
    }
    for (std::size_t j = 0; j < d.s.size(); ++j) {
        if (d.s[j] <= rank_tol * d.s.front()) {
            break;
        }
        const double inv = 1.0 / d.s[j];
        for (std::size_t r = 0; r < out.rows(); ++r) {
            const Complex vr = d.v(r, j) * inv;
            for (std::size_t c = 0; c < out.cols(); ++c) {
                out(r, c) += vr * std::conj(d.u(c, j));
            }
        }
    }
    return out;
}

/// Orthonormal basis (as columns) of the numerical column space.
inline Matrix range_basis(const Matrix& m, double rank_tol = default_rank_tol) {
    require_finite(m, "range_basis input");
    if (m.empty()) {
        return Matrix(m.rows(), 0);
    }
    auto d = svd(m);
    std::size_t r = 0;
    if (d.s.front() > 0.0) {
        while (r < d.s.size() && d.s[r] > rank_tol * d.s.front()) {
            ++r;
        }
    }
    return d.u.leading_columns(r);
}

/// Orthogonal projector onto the column space, M pinv(M) = U_r U_r*.
inline Matrix range_projector(const Matrix& m, double rank_tol = default_rank_tol) {
    const Matrix u = range_basis(m, rank_tol);
    return u * u.adjoint();
}

} // namespace wkf
