#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "weaving.hpp"

namespace wkf {

/// Claimed constants of a result against the optimal constants actually achieved.
struct CertificateReport {
    std::string result_id;
    double claimed_lower = 0.0;
    double claimed_upper = 0.0;
    double achieved_lower = 0.0;
    double achieved_upper = 0.0;
    bool pass = false;
    std::map<std::string, double> details;
    std::string note;
};

struct CertOptions {
    SweepOptions sweep;
    Tolerances tol;
    std::size_t probes = 32;        // random starts for the perturbation search
    double residual_tol = 1e-9;     // perturbation hypothesis holds when the max residual is below this
};

/**
 * Perturbation hypothesis ||(T* - K*) f|| <= a1 ||T* f|| + a2 ||K* f|| + a3 ||f||.
 *
 * max_residual is the largest value of lhs - rhs found on the unit sphere.
 * A positive value refutes the hypothesis with residual_witness; a value at
 * or below the residual tolerance only corroborates it. closed_form is set
 * when a2 = a3 = 0 and T, K are commuting normal operators, in which case the
 * inequality is checked exactly on a joint eigenbasis.
 */
struct PerturbationParams {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha3 = 0.0;
    double max_residual = std::numeric_limits<double>::quiet_NaN();
    Vector residual_witness;
    bool closed_form = false;

    bool holds(double residual_tol = 1e-9) const { return max_residual <= residual_tol; }
};

enum class Direction { forward, backward };
enum class ErasureMode { pushforward, identity, pullback };
enum class PerturbationMode { theorem, corollary };

namespace detail {

inline CertificateReport finish(CertificateReport r, const Tolerances& tol) {
    r.pass = r.achieved_lower >= r.claimed_lower * (1.0 - tol.cert_tol) &&
             r.achieved_upper <= r.claimed_upper * (1.0 + tol.cert_tol);
    return r;
}

inline void require_injective(const Matrix& t, const Tolerances& tol) {
    require_finite(t, "T");
    const auto rank = numerical_rank(t, tol.rank_tol);
    if (rank < t.cols()) {
        throw Error(Errc::NotInjective, "T has numerical rank " + std::to_string(rank) + " on a domain of dimension " +
                                            std::to_string(t.cols()));
    }
}

inline double nonzero_norm(const Matrix& t) {
    require_finite(t, "T");
    const double n = op_norm(t);
    if (n <= std::numeric_limits<double>::min()) {
        throw Error(Errc::ZeroT, "||T|| = 0");
    }
    return n;
}

inline std::array<FrameFamily, 2> mapped_pair(const FrameFamily& f, const FrameFamily& g, const Matrix& t) {
    return {f.mapped(t), g.mapped(t)};
}

inline void record(CertificateReport& r, const WeavingReport& w, const std::string& prefix) {
    r.details[prefix + "_lower"] = w.universal_lower;
    r.details[prefix + "_upper"] = w.universal_upper;
    r.details[prefix + "_partitions"] = static_cast<double>(w.partitions_checked);
}

inline double residual_at(const Matrix& diff, const Matrix& ts, const Matrix& ks, const PerturbationParams& p,
                          std::span<const Complex> f) {
    return norm(diff * f) - p.alpha1 * norm(ts * f) - p.alpha2 * norm(ks * f) - p.alpha3 * norm(f);
}

// Ascent direction of the residual functional, projected onto the sphere's tangent space.
inline Vector residual_gradient(const Matrix& diff, const Matrix& ts, const Matrix& ks, const PerturbationParams& p,
                                std::span<const Complex> f) {
    Vector g(f.size());
    auto accumulate = [&](const Matrix& a, double weight) {
        const Vector af = a * f;
        const double len = norm(af);
        if (len <= 0.0 || weight == 0.0) {
            return;
        }
        const Vector back = a.adjoint() * af;
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += weight * back[i] / len;
        }
    };
    accumulate(diff, 1.0);
    accumulate(ts, -p.alpha1);
    accumulate(ks, -p.alpha2);
    const double radial = inner(g, f).real();
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] -= radial * f[i];
    }
    return g;
}

// Joint eigenbasis of commuting normal T, K, or nullopt when they are not.
inline std::optional<Matrix> joint_eigenbasis(const Matrix& t, const Matrix& k) {
    const double scale = 1.0 + frobenius_norm(t) + frobenius_norm(k);
    const double tol = 1e-10 * scale * scale;
    if (frobenius_norm(t * t.adjoint() - t.adjoint() * t) > tol ||
        frobenius_norm(k * k.adjoint() - k.adjoint() * k) > tol || frobenius_norm(t * k - k * t) > tol) {
        return std::nullopt;
    }
    const Complex i{0.0, 1.0};
    const Matrix h = (t + t.adjoint()) + std::sqrt(2.0) * (i * (t - t.adjoint())) +
                     std::sqrt(3.0) * (k + k.adjoint()) + std::sqrt(5.0) * (i * (k - k.adjoint()));
    const Matrix v = hermitian_eig(hermitian_part(h)).vectors;
    auto offdiag = [](const Matrix& m) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                if (r != c) {
                    acc += std::norm(m(r, c));
                }
            }
        }
        return std::sqrt(acc);
    };
    if (offdiag(congruence(v, t)) > 1e-9 * scale || offdiag(congruence(v, k)) > 1e-9 * scale) {
        return std::nullopt;
    }
    return v;
}

} // namespace detail

/**
 * Pushforward of a K-frame: {T f_i} is a T K T*-frame with bounds at least
 * (A / ||T||^2, B ||T||^2), where (A, B) are the optimal K-frame bounds of F.
 */
inline std::pair<FrameFamily, CertificateReport> pushforward_frame(const FrameFamily& f, const Matrix& k,
                                                                   const Matrix& t, const Tolerances& tol = {}) {
    const auto input = kframe_bounds(f, k, std::nullopt, tol);
    if (!input.is_kframe) {
        throw Error(Errc::NotKFrame, "optimal K-frame lower bound is " + std::to_string(input.lower));
    }
    const double nt = detail::nonzero_norm(t);
    FrameFamily tf = f.mapped(t);
    const Matrix tkt = t * k * t.adjoint();
    const auto achieved = kframe_bounds(tf, tkt, std::nullopt, tol);

    CertificateReport r;
    r.result_id = "L2.1";
    r.claimed_lower = input.lower / (nt * nt);
    r.claimed_upper = input.upper * nt * nt;
    r.achieved_lower = achieved.lower;
    r.achieved_upper = achieved.upper;
    r.details = {{"A", input.lower}, {"B", input.upper}, {"norm_T", nt}};
    return {std::move(tf), detail::finish(std::move(r), tol)};
}

/**
 * Pullback through an injective T: if {T f_i} is a K-frame for R(T) with
 * bounds (A, B), then F is a T^+ K T-frame with bounds (A / ||T||^2, B ||T^+||^2).
 */
inline CertificateReport pullback_frame(const FrameFamily& f, const Matrix& t, const Matrix& k,
                                        const CertOptions& opts = {}) {
    detail::require_injective(t, opts.tol);
    const std::array<FrameFamily, 1> image{f.mapped(t)};
    const auto on_range = kwoven_report(image, k, t, opts.sweep, opts.tol);
    if (!on_range.verdict) {
        throw Error(Errc::NotKFrameOnRange, "K-frame lower bound on R(T) is " + std::to_string(on_range.universal_lower));
    }
    const double nt = op_norm(t);
    const Matrix tp = pinv(t, opts.tol.rank_tol);
    const double ntp = op_norm(tp);
    const Matrix pulled = tp * k * t;
    const auto achieved = kframe_bounds(f, pulled, std::nullopt, opts.tol);

    CertificateReport r;
    r.result_id = "L2.2";
    r.claimed_lower = on_range.universal_lower / (nt * nt);
    r.claimed_upper = on_range.universal_upper * ntp * ntp;
    r.achieved_lower = achieved.lower;
    r.achieved_upper = achieved.upper;
    r.details = {{"A", on_range.universal_lower}, {"B", on_range.universal_upper}, {"norm_T", nt}, {"norm_T_pinv", ntp}};
    return detail::finish(std::move(r), opts.tol);
}

/// K-woven F, G push forward to T K T*-woven {T f_i}, {T g_i} with lower bound A / ||T||^2.
inline CertificateReport woven_pushforward(const FrameFamily& f, const FrameFamily& g, const Matrix& k,
                                           const Matrix& t, const CertOptions& opts = {}) {
    const std::array<FrameFamily, 2> input{f, g};
    const auto woven = kwoven_report(input, k, std::nullopt, opts.sweep, opts.tol);
    if (!woven.verdict) {
        throw Error(Errc::NotKWoven, "universal K-woven lower bound is " + std::to_string(woven.universal_lower) +
                                         (woven.exhaustive ? "" : " (sampled sweep)"));
    }
    const double nt = detail::nonzero_norm(t);
    const auto image = detail::mapped_pair(f, g, t);
    const auto achieved = kwoven_report(image, t * k * t.adjoint(), std::nullopt, opts.sweep, opts.tol);

    CertificateReport r;
    r.result_id = "P2.3";
    r.claimed_lower = woven.universal_lower / (nt * nt);
    r.claimed_upper = weaving_bessel_bound(image);
    r.achieved_lower = achieved.universal_lower;
    r.achieved_upper = achieved.universal_upper;
    r.details = {{"A", woven.universal_lower}, {"norm_T", nt}};
    detail::record(r, achieved, "image");
    return detail::finish(std::move(r), opts.tol);
}

/**
 * Pullback of woven-ness: {T f_i}, {T g_i} K-woven on R(T) with universal
 * (A, B) gives F, G T^+ K T-woven with (A / ||T||^2, B ||T^+||^2).
 */
inline CertificateReport woven_pullback(const FrameFamily& f, const FrameFamily& g, const Matrix& t, const Matrix& k,
                                        const CertOptions& opts = {}) {
    detail::require_injective(t, opts.tol);
    const auto image = detail::mapped_pair(f, g, t);
    const auto on_range = kwoven_report(image, k, t, opts.sweep, opts.tol);
    if (!on_range.verdict) {
        throw Error(Errc::NotKWovenOnRange,
                    "universal K-woven lower bound on R(T) is " + std::to_string(on_range.universal_lower));
    }
    const double nt = op_norm(t);
    const Matrix tp = pinv(t, opts.tol.rank_tol);
    const double ntp = op_norm(tp);
    const std::array<FrameFamily, 2> input{f, g};
    const auto achieved = kwoven_report(input, tp * k * t, std::nullopt, opts.sweep, opts.tol);

    CertificateReport r;
    r.result_id = "P2.4";
    r.claimed_lower = on_range.universal_lower / (nt * nt);
    r.claimed_upper = on_range.universal_upper * ntp * ntp;
    r.achieved_lower = achieved.universal_lower;
    r.achieved_upper = achieved.universal_upper;
    r.details = {{"A", on_range.universal_lower}, {"B", on_range.universal_upper}, {"norm_T", nt},
                 {"norm_T_pinv", ntp}};
    detail::record(r, achieved, "pulled");
    return detail::finish(std::move(r), opts.tol);
}

/**
 * Woven on R(K*)  <=>  {K f_i}, {K g_i} K-woven.
 *
 * forward: the woven lower bound A on R(K*) is claimed as the K-woven lower
 * bound of the images. backward: the K-woven lower bound C of the images is
 * claimed as the woven lower bound on R(K*). Upper bounds are the summed
 * Bessel bounds of the families involved.
 */
inline CertificateReport range_equivalence_kstar(const FrameFamily& f, const FrameFamily& g, const Matrix& k,
                                                 Direction direction, const CertOptions& opts = {}) {
    const std::array<FrameFamily, 2> input{f, g};
    detail::require_compatible(input);
    detail::require_operator(k, f.dim(), "K");
    const Matrix kstar = k.adjoint();
    const auto image = detail::mapped_pair(f, g, k);

    CertificateReport r;
    r.result_id = "P2.5";
    if (direction == Direction::forward) {
        const auto woven = woven_report(input, kstar, opts.sweep, opts.tol);
        if (!woven.verdict) {
            throw Error(Errc::HypothesisFails, "F, G are not woven on R(K*): lower bound " +
                                                   std::to_string(woven.universal_lower));
        }
        const auto achieved = kwoven_report(image, k, std::nullopt, opts.sweep, opts.tol);
        r.claimed_lower = woven.universal_lower;
        r.claimed_upper = weaving_bessel_bound(image);
        r.achieved_lower = achieved.universal_lower;
        r.achieved_upper = achieved.universal_upper;
        r.details = {{"A", woven.universal_lower}};
        r.note = "forward";
    } else {
        const auto kwoven = kwoven_report(image, k, std::nullopt, opts.sweep, opts.tol);
        if (!kwoven.verdict) {
            throw Error(Errc::HypothesisFails, "{Kf_i}, {Kg_i} are not K-woven: lower bound " +
                                                   std::to_string(kwoven.universal_lower));
        }
        const auto achieved = woven_report(input, kstar, opts.sweep, opts.tol);
        r.claimed_lower = kwoven.universal_lower;
        r.claimed_upper = weaving_bessel_bound(input);
        r.achieved_lower = achieved.universal_lower;
        r.achieved_upper = achieved.universal_upper;
        r.details = {{"C", kwoven.universal_lower}};
        r.note = "backward";
    }
    return detail::finish(std::move(r), opts.tol);
}

/**
 * Woven on R(K) versus K-woven.
 *
 * forward: woven on R(K) with lower bound A, claimed K-woven on the whole
 * space with lower bound A / ||K||^2. backward: K-woven on R(K) with bounds
 * (C, D), claimed woven on R(K) with bounds (C / ||K^+||^2, D).
 *
 * The forward claim only holds when S has no mass coupling R(K) with
 * ker K*; with K rank deficient a family such as {(1, 1)} against
 * K = diag(1, 0) is woven on R(K) yet has K-frame lower bound 0.
 */
inline CertificateReport range_equivalence_k(const FrameFamily& f, const FrameFamily& g, const Matrix& k,
                                             Direction direction, const CertOptions& opts = {}) {
    const std::array<FrameFamily, 2> input{f, g};
    detail::require_compatible(input);
    detail::require_operator(k, f.dim(), "K");
    if (is_zero(k)) {
        throw Error(Errc::ZeroK, "K is numerically zero");
    }

    CertificateReport r;
    r.result_id = "P2.6";
    if (direction == Direction::forward) {
        const auto woven = woven_report(input, k, opts.sweep, opts.tol);
        if (!woven.verdict) {
            throw Error(Errc::HypothesisFails, "F, G are not woven on R(K): lower bound " +
                                                   std::to_string(woven.universal_lower));
        }
        const double nk = op_norm(k);
        const auto achieved = kwoven_report(input, k, std::nullopt, opts.sweep, opts.tol);
        r.claimed_lower = woven.universal_lower / (nk * nk);
        r.claimed_upper = weaving_bessel_bound(input);
        r.achieved_lower = achieved.universal_lower;
        r.achieved_upper = achieved.universal_upper;
        r.details = {{"A", woven.universal_lower}, {"norm_K", nk}};
        r.note = "forward";
    } else {
        const auto kwoven = kwoven_report(input, k, k, opts.sweep, opts.tol);
        if (!kwoven.verdict) {
            throw Error(Errc::HypothesisFails, "F, G are not K-woven on R(K): lower bound " +
                                                   std::to_string(kwoven.universal_lower));
        }
        const double nkp = op_norm(pinv(k, opts.tol.rank_tol));
        const auto achieved = woven_report(input, k, opts.sweep, opts.tol);
        r.claimed_lower = kwoven.universal_lower / (nkp * nkp);
        r.claimed_upper = kwoven.universal_upper;
        r.achieved_lower = achieved.universal_lower;
        r.achieved_upper = achieved.universal_upper;
        r.details = {{"C", kwoven.universal_lower}, {"D", kwoven.universal_upper}, {"norm_K_pinv", nkp}};
        r.note = "backward";
    }
    return detail::finish(std::move(r), opts.tol);
}

/**
 * Search the unit sphere for the largest residual
 *   ||(T* - K*) f|| - a1 ||T* f|| - a2 ||K* f|| - a3 ||f||.
 *
 * Each start (the standard basis, the top right singular vector of T* - K*,
 * then `probes` seeded random vectors) is refined by 50 steps of projected
 * ascent, step 0.1 halved whenever a step fails to improve.
 */
inline PerturbationParams perturbation_residual(const Matrix& t, const Matrix& k, PerturbationParams p,
                                                std::size_t probes = 32, std::uint64_t seed = 0) {
    auto in_unit = [](double a) { return a >= 0.0 && a < 1.0; };
    if (!(p.alpha1 > 0.0 && p.alpha1 < 1.0) || !in_unit(p.alpha2) || !in_unit(p.alpha3)) {
        throw Error(Errc::BadAlpha, "need alpha1 in (0, 1) and alpha2, alpha3 in [0, 1)");
    }
    require_finite(t, "T");
    require_finite(k, "K");
    require_square(t, "T");
    if (t.rows() != k.rows() || t.cols() != k.cols()) {
        throw Error(Errc::DimensionMismatch, "T and K differ in shape");
    }
    const std::size_t n = t.rows();
    const Matrix ts = t.adjoint();
    const Matrix ks = k.adjoint();
    const Matrix diff = ts - ks;

    std::vector<Vector> starts;
    for (std::size_t i = 0; i < n; ++i) {
        Vector e(n);
        e[i] = 1.0;
        starts.push_back(std::move(e));
    }
    if (!is_zero(diff)) {
        starts.push_back(svd(diff).v.column(0));
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    for (std::size_t s = 0; s < probes; ++s) {
        Vector v(n);
        for (auto& x : v) {
            x = Complex(gauss(rng), gauss(rng));
        }
        starts.push_back(normalized(std::move(v)));
    }

    p.max_residual = -std::numeric_limits<double>::infinity();
    for (auto f : starts) {
        f = normalized(std::move(f));
        double value = detail::residual_at(diff, ts, ks, p, f);
        double step = 0.1;
        for (int it = 0; it < 50; ++it) {
            const Vector g = detail::residual_gradient(diff, ts, ks, p, f);
            Vector trial = f;
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] += step * g[i];
            }
            trial = normalized(std::move(trial));
            const double tv = detail::residual_at(diff, ts, ks, p, trial);
            if (tv > value) {
                f = std::move(trial);
                value = tv;
            } else {
                step *= 0.5;
            }
        }
        if (value > p.max_residual) {
            p.max_residual = value;
            p.residual_witness = f;
        }
    }

    p.closed_form = false;
    if (p.alpha2 == 0.0 && p.alpha3 == 0.0) {
        if (const auto v = detail::joint_eigenbasis(t, k)) {
            // Squared form is linear in |c_i|^2 on a joint eigenbasis: check each eigenvector.
            bool ok = true;
            for (std::size_t j = 0; j < n && ok; ++j) {
                const Vector e = v->column(j);
                ok = detail::residual_at(diff, ts, ks, p, e) <= 1e-12 * (1.0 + op_norm(t) + op_norm(k));
            }
            p.closed_form = ok;
        }
    }
    return p;
}

/**
 * Perturbation of K-woven-ness.
 *
 * theorem: F, G K-woven on R(K) with (A, B) and the perturbation inequality
 * holding give T-woven on R(K) with lower bound
 *   A ((1 - a1) / (1 + a2 + a3 ||K^+||))^2
 * and upper bound B. corollary (a3 = 0, no range restriction): the
 * inequality is symmetric in (T, a1) <-> (K, a2), so K-woven with A gives
 * T-woven with A ((1 - a1) / (1 + a2))^2 and T-woven with A' gives K-woven
 * with A' ((1 - a2) / (1 + a1))^2; both directions are checked and the two
 * verdicts must agree.
 */
inline CertificateReport perturbed_woven_cert(const FrameFamily& f, const FrameFamily& g, const Matrix& t,
                                              const Matrix& k, PerturbationParams p,
                                              PerturbationMode mode = PerturbationMode::theorem,
                                              const CertOptions& opts = {}) {
    if (mode == PerturbationMode::corollary && p.alpha3 != 0.0) {
        throw Error(Errc::BadAlpha, "corollary mode takes alpha3 = 0");
    }
    const std::array<FrameFamily, 2> input{f, g};
    detail::require_compatible(input);
    detail::require_operator(k, f.dim(), "K");
    detail::require_operator(t, f.dim(), "T");

    p = perturbation_residual(t, k, p, opts.probes, opts.sweep.seed);
    if (!p.holds(opts.residual_tol)) {
        throw Error(Errc::HypothesisFails, "perturbation inequality refuted, residual " + std::to_string(p.max_residual));
    }

    CertificateReport r;
    r.details = {{"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"alpha3", p.alpha3}, {"max_residual", p.max_residual}};
    if (mode == PerturbationMode::theorem) {
        r.result_id = "T2.7";
        const auto kw = kwoven_report(input, k, k, opts.sweep, opts.tol);
        if (!kw.verdict) {
            throw Error(Errc::HypothesisFails, "F, G are not K-woven on R(K): lower bound " +
                                                   std::to_string(kw.universal_lower));
        }
        const double nkp = op_norm(pinv(k, opts.tol.rank_tol));
        const double ratio = (1.0 - p.alpha1) / (1.0 + p.alpha2 + p.alpha3 * nkp);
        const auto achieved = kwoven_report(input, t, k, opts.sweep, opts.tol);
        r.claimed_lower = kw.universal_lower * ratio * ratio;
        r.claimed_upper = kw.universal_upper;
        r.achieved_lower = achieved.universal_lower;
        r.achieved_upper = achieved.universal_upper;
        r.details["A"] = kw.universal_lower;
        r.details["B"] = kw.universal_upper;
        r.details["norm_K_pinv"] = nkp;
        return detail::finish(std::move(r), opts.tol);
    }

    r.result_id = "C2.7";
    const auto kw = kwoven_report(input, k, std::nullopt, opts.sweep, opts.tol);
    const auto tw = kwoven_report(input, t, std::nullopt, opts.sweep, opts.tol);
    const double forward = (1.0 - p.alpha1) / (1.0 + p.alpha2);
    const double backward = (1.0 - p.alpha2) / (1.0 + p.alpha1);
    r.claimed_lower = kw.verdict ? kw.universal_lower * forward * forward : 0.0;
    r.claimed_upper = kw.universal_upper;
    r.achieved_lower = tw.universal_lower;
    r.achieved_upper = tw.universal_upper;
    r.details["K_lower"] = kw.universal_lower;
    r.details["T_lower"] = tw.universal_lower;
    r.details["K_verdict"] = kw.verdict ? 1.0 : 0.0;
    r.details["T_verdict"] = tw.verdict ? 1.0 : 0.0;
    const double reverse_claim = tw.verdict ? tw.universal_lower * backward * backward : 0.0;
    r.details["reverse_claimed_lower"] = reverse_claim;
    r = detail::finish(std::move(r), opts.tol);
    const bool reverse_ok = kw.universal_lower >= reverse_claim * (1.0 - opts.tol.cert_tol);
    r.pass = r.pass && reverse_ok && kw.verdict == tw.verdict;
    if (kw.verdict != tw.verdict) {
        r.note = "K-woven and T-woven verdicts disagree";
    }
    return r;
}

/**
 * Smallest C with sum_{i in J} |<f, f_i>|^2 <= C ||M* f||^2 for all f:
 * the largest value of the pencil (S_J, M M*). Throws NoFiniteC when S_J is
 * positive somewhere on ker M*.
 */
inline double erasure_constant(const FrameFamily& f, std::span<const std::size_t> erased, const Matrix& m,
                               const Tolerances& tol = {}) {
    detail::require_operator(m, f.dim(), "comparison operator");
    std::vector<bool> seen(f.size(), false);
    Matrix sj(f.dim(), f.dim());
    for (auto i : erased) {
        if (i >= f.size()) {
            throw Error(Errc::LengthMismatch, "erased index " + std::to_string(i + 1) + " outside [1, " +
                                                  std::to_string(f.size()) + "]");
        }
        if (seen[i]) {
            continue;
        }
        seen[i] = true;
        sj = sj + outer(f[i]);
    }
    if (erased.empty()) {
        return 0.0;
    }
    const auto pencil = kframe_pencil(m, std::nullopt, tol);
    const auto spec = pencil.solve(sj, false);
    if (!spec.bounded) {
        throw Error(Errc::NoFiniteC, "erased vectors have mass " + std::to_string(spec.kernel_mass) +
                                         " on ker M*, where the right-hand side vanishes");
    }
    return spec.largest();
}

/**
 * Erasure: remove the indices J from both families and certify the lower
 * bound of what remains.
 *
 * pushforward: F, G K-woven with lower A; with C the erasure constant of
 * {T f_i} against T K T*, {T f_i}, {T g_i} minus J are T K T*-woven with
 * lower A / ||T||^2 - C (C must be below A / ||T||^2).
 * identity: T = I, claimed (A - C, B) with C < A.
 * pullback: {T f_i}, {T g_i} K-woven on R(T) with lower A; with C the
 * erasure constant of F against T^+ K T, F, G minus J are T^+ K T-woven with
 * lower A / ||T||^2 - C.
 */
inline CertificateReport erasure_woven_cert(const FrameFamily& f, const FrameFamily& g,
                                            std::span<const std::size_t> erased, const Matrix& k,
                                            const std::optional<Matrix>& t, ErasureMode mode,
                                            const CertOptions& opts = {}) {
    const std::array<FrameFamily, 2> input{f, g};
    detail::require_compatible(input);
    if (mode != ErasureMode::identity && !t) {
        throw Error(Errc::DimensionMismatch, "this erasure mode needs an operator T");
    }

    CertificateReport r;
    double lower_a = 0.0;
    double threshold = 0.0;
    double claimed_upper = 0.0;
    Matrix op;                          // operator the remaining families are scored against
    std::array<FrameFamily, 2> scored;  // families before erasure, in the space where they are scored
    FrameFamily erasure_source;         // family whose erased vectors define C

    switch (mode) {
    case ErasureMode::identity: {
        r.result_id = "C2.9";
        detail::require_operator(k, f.dim(), "K");
        const auto kw = kwoven_report(input, k, std::nullopt, opts.sweep, opts.tol);
        if (!kw.verdict) {
            throw Error(Errc::HypothesisFails, "F, G are not K-woven: lower bound " + std::to_string(kw.universal_lower));
        }
        lower_a = kw.universal_lower;
        threshold = lower_a;
        claimed_upper = kw.universal_upper;
        op = k;
        scored = input;
        erasure_source = f;
        r.details = {{"A", lower_a}, {"B", kw.universal_upper}};
        break;
    }
    case ErasureMode::pushforward: {
        r.result_id = "T2.8";
        detail::require_operator(k, f.dim(), "K");
        const auto kw = kwoven_report(input, k, std::nullopt, opts.sweep, opts.tol);
        if (!kw.verdict) {
            throw Error(Errc::HypothesisFails, "F, G are not K-woven: lower bound " + std::to_string(kw.universal_lower));
        }
        const double nt = detail::nonzero_norm(*t);
        lower_a = kw.universal_lower;
        threshold = lower_a / (nt * nt);
        op = *t * k * t->adjoint();
        scored = detail::mapped_pair(f, g, *t);
        erasure_source = scored[0];
        r.details = {{"A", lower_a}, {"norm_T", nt}};
        break;
    }
    case ErasureMode::pullback: {
        r.result_id = "T2.10";
        detail::require_injective(*t, opts.tol);
        const auto image = detail::mapped_pair(f, g, *t);
        detail::require_operator(k, t->rows(), "K");
        const auto kw = kwoven_report(image, k, *t, opts.sweep, opts.tol);
        if (!kw.verdict) {
            throw Error(Errc::HypothesisFails, "{Tf_i}, {Tg_i} are not K-woven on R(T): lower bound " +
                                                   std::to_string(kw.universal_lower));
        }
        const double nt = op_norm(*t);
        const Matrix tp = pinv(*t, opts.tol.rank_tol);
        const double ntp = op_norm(tp);
        lower_a = kw.universal_lower;
        threshold = lower_a / (nt * nt);
        claimed_upper = kw.universal_upper * ntp * ntp;
        op = tp * k * *t;
        scored = input;
        erasure_source = f;
        r.details = {{"A", lower_a}, {"B", kw.universal_upper}, {"norm_T", nt}, {"norm_T_pinv", ntp}};
        break;
    }
    }

    const double c = erasure_constant(erasure_source, erased, op, opts.tol);
    r.details["C"] = c;
    r.details["threshold"] = threshold;
    if (c >= threshold) {
        throw Error(Errc::CTooLarge, "C = " + std::to_string(c) + " is not below " + std::to_string(threshold));
    }
    const std::array<FrameFamily, 2> remaining{scored[0].without(erased), scored[1].without(erased)};
    if (mode == ErasureMode::pushforward) {
        claimed_upper = weaving_bessel_bound(remaining);
    }
    r.claimed_lower = threshold - c;
    r.claimed_upper = claimed_upper;
    if (remaining[0].empty()) {
        r.achieved_lower = 0.0;
        r.achieved_upper = 0.0;
    } else {
        const auto achieved = kwoven_report(remaining, op, std::nullopt, opts.sweep, opts.tol);
        r.achieved_lower = achieved.universal_lower;
        r.achieved_upper = achieved.universal_upper;
        detail::record(r, achieved, "erased");
    }
    return detail::finish(std::move(r), opts.tol);
}

} // namespace wkf
