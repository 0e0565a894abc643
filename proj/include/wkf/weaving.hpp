#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "frame.hpp"

namespace wkf {

/**
 * Assignment of each index in [0, n) to one of m families.
 *
 * For m = 2, family 0 plays the role of sigma and family 1 of its complement.
 */
struct Partition {
    std::size_t families = 0;
    std::vector<std::uint32_t> assign;

    std::size_t size() const noexcept { return assign.size(); }

    /// m = 2: sigma as a bit string ('1' = index in sigma); otherwise 1-based family labels.
    std::string label() const {
        std::string out;
        if (families == 2) {
            for (auto a : assign) {
                out.push_back(a == 0 ? '1' : '0');
            }
            return out;
        }
        for (std::size_t i = 0; i < assign.size(); ++i) {
            if (i > 0 && families > 9) {
                out.push_back(',');
            }
            out += std::to_string(assign[i] + 1);
        }
        return out;
    }

    friend bool operator==(const Partition&, const Partition&) = default;
};

struct SweepOptions {
    std::uint64_t budget = 1u << 20;
    std::uint64_t seed = 0;
    unsigned threads = 0; // 0 = pick from hardware for large sweeps
};

struct WeavingReport {
    double universal_lower = 0.0;
    double universal_upper = 0.0;
    bool verdict = false;
    Partition worst_partition;
    Vector witness;
    std::uint64_t partitions_checked = 0;
    bool exhaustive = false;
};

namespace detail {

inline void require_compatible(std::span<const FrameFamily> families) {
    if (families.empty()) {
        throw Error(Errc::LengthMismatch, "no families given");
    }
    const auto n = families.front().size();
    const auto dim = families.front().dim();
    for (std::size_t j = 1; j < families.size(); ++j) {
        if (families[j].dim() != dim) {
            throw Error(Errc::DimensionMismatch, "family " + std::to_string(j + 1) + " lives in dimension " +
                                                     std::to_string(families[j].dim()) + ", expected " +
                                                     std::to_string(dim));
        }
        if (families[j].size() != n) {
            throw Error(Errc::LengthMismatch, "family " + std::to_string(j + 1) + " has " +
                                                  std::to_string(families[j].size()) + " vectors, expected " +
                                                  std::to_string(n));
        }
    }
}

// m^n, saturating at UINT64_MAX.
inline std::uint64_t partition_count(std::size_t m, std::size_t n) {
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (total > std::numeric_limits<std::uint64_t>::max() / m) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        total *= m;
    }
    return total;
}

// Lexicographic rank -> assignment, first index most significant.
inline void unrank(std::uint64_t rank, std::size_t m, std::vector<std::uint32_t>& assign) {
    for (std::size_t i = assign.size(); i-- > 0;) {
        assign[i] = static_cast<std::uint32_t>(rank % m);
        rank /= m;
    }
}

// Counter-based generator: sample k depends only on (seed, k), never on scheduling.
struct SplitMix64 {
    using result_type = std::uint64_t;
    std::uint64_t state;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

struct Candidate {
    double lower = std::numeric_limits<double>::infinity();
    double upper = 0.0;
    std::vector<std::uint32_t> assign;
    Vector witness;
    bool valid = false;
};

inline bool better(double value, const std::vector<std::uint32_t>& assign, const Candidate& best) {
    return !best.valid || value < best.lower || (value == best.lower && assign < best.assign);
}

inline void merge(Candidate& into, const Candidate& from) {
    if (!from.valid) {
        return;
    }
    const double upper = std::max(into.upper, from.upper);
    if (better(from.lower, from.assign, into)) {
        into.lower = from.lower;
        into.assign = from.assign;
        into.witness = from.witness;
        into.valid = true;
    }
    into.upper = upper;
}

/**
 * Generic partition sweep. `score(S)` maps a weaving's frame operator to its
 * (lower, upper, witness); min/argmin and max are reduced with the
 * lexicographic tie-break, so the result is independent of how the range
 * is split across workers.
 */
template <class ScoreFn>
WeavingReport sweep(std::span<const FrameFamily> families, const SweepOptions& opts, ScoreFn&& score) {
    require_compatible(families);
    if (opts.budget == 0) {
        throw Error(Errc::BudgetZero, "partition budget must be at least 1");
    }
    const std::size_t m = families.size();
    const std::size_t n = families.front().size();
    const std::size_t dim = families.front().dim();
    if (n == 0) {
        throw Error(Errc::EmptyFamily, "families have no vectors");
    }

    // outer[j][i] = f_{j,i} f_{j,i}*
    std::vector<std::vector<Matrix>> outer(m);
    for (std::size_t j = 0; j < m; ++j) {
        outer[j].reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            outer[j].push_back(wkf::outer(families[j][i]));
        }
    }

    const std::uint64_t total = partition_count(m, n);
    const bool exhaustive = total <= opts.budget;
    const std::uint64_t checked = exhaustive ? total : opts.budget + m;

    auto fill = [&](std::uint64_t k, std::vector<std::uint32_t>& assign) {
        if (exhaustive) {
            unrank(k, m, assign);
        } else if (k < m) {
            std::fill(assign.begin(), assign.end(), static_cast<std::uint32_t>(k));
        } else {
            SplitMix64 gen{opts.seed ^ (0xd1b54a32d192ed03ULL * (k - m + 1))};
            std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(m - 1));
            for (auto& a : assign) {
                a = pick(gen);
            }
        }
    };

    auto work = [&](std::uint64_t begin, std::uint64_t end, Candidate& best) {
        std::vector<std::uint32_t> assign(n);
        Matrix s(dim, dim);
        for (std::uint64_t k = begin; k < end; ++k) {
            fill(k, assign);
            s = Matrix(dim, dim);
            for (std::size_t i = 0; i < n; ++i) {
                const auto src = outer[assign[i]][i].entries();
                auto dst = s.entries();
                for (std::size_t e = 0; e < dst.size(); ++e) {
                    dst[e] += src[e];
                }
            }
            auto [lower, upper, witness] = score(s);
            best.upper = std::max(best.upper, upper);
            if (better(lower, assign, best)) {
                best.lower = lower;
                best.assign = assign;
                best.witness = std::move(witness);
                best.valid = true;
            }
        }
    };

    unsigned workers = opts.threads;
    if (workers == 0) {
        workers = checked >= 4096 ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
    }
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, checked));

    Candidate best;
    if (workers <= 1) {
        work(0, checked, best);
    } else {
        std::vector<Candidate> partial(workers);
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const std::uint64_t chunk = (checked + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint64_t begin = std::min<std::uint64_t>(checked, w * chunk);
            const std::uint64_t end = std::min<std::uint64_t>(checked, begin + chunk);
            pool.emplace_back([&, begin, end, w] {
                try {
                    work(begin, end, partial[w]);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        for (const auto& c : partial) {
            merge(best, c);
        }
    }

    WeavingReport out;
    out.universal_lower = best.lower;
    out.universal_upper = best.upper;
    out.worst_partition = Partition{m, best.assign};
    out.witness = std::move(best.witness);
    out.partitions_checked = checked;
    out.exhaustive = exhaustive;
    return out;
}

struct Score {
    double lower;
    double upper;
    Vector witness;
};

} // namespace detail

/// The family whose i-th vector is taken from families[assign[i]].
inline FrameFamily weave(std::span<const FrameFamily> families, const Partition& p) {
    detail::require_compatible(families);
    if (p.families != families.size()) {
        throw Error(Errc::LengthMismatch, "partition is over " + std::to_string(p.families) + " families, got " +
                                              std::to_string(families.size()));
    }
    if (p.size() != families.front().size()) {
        throw Error(Errc::LengthMismatch, "partition covers " + std::to_string(p.size()) + " indices, families have " +
                                              std::to_string(families.front().size()));
    }
    std::vector<Vector> vs;
    vs.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.assign[i] >= families.size()) {
            throw Error(Errc::LengthMismatch, "partition assigns index " + std::to_string(i + 1) +
                                                  " to a family outside [1, m]");
        }
        vs.push_back(families[p.assign[i]][i]);
    }
    return FrameFamily(families.front().dim(), std::move(vs));
}

/**
 * Woven-ness by partition sweep.
 *
 * Every weaving is scored by its optimal frame bounds (restricted to the
 * subspace when one is given). The sweep is exhaustive when m^n fits the
 * budget; otherwise `budget` uniform samples plus the m single-family
 * partitions are checked, and the verdict stays false because sampling can
 * refute but never certify.
 */
inline WeavingReport woven_report(std::span<const FrameFamily> families,
                                  const std::optional<Matrix>& subspace = std::nullopt,
                                  const SweepOptions& opts = {}, const Tolerances& tol = {}) {
    detail::require_compatible(families);
    const auto basis = subspace_basis(subspace, families.front().dim(), tol.rank_tol);
    auto report = detail::sweep(families, opts, [&](const Matrix& s) {
        auto b = bounds_of_operator(s, basis, tol);
        return detail::Score{b.lower, b.upper, std::move(b.lower_witness)};
    });
    report.verdict = report.exhaustive && report.universal_lower > tol.frame_tol;
    return report;
}

/// K-woven-ness: each weaving scored by its optimal K-frame lower bound.
inline WeavingReport kwoven_report(std::span<const FrameFamily> families, const Matrix& k,
                                   const std::optional<Matrix>& subspace = std::nullopt,
                                   const SweepOptions& opts = {}, const Tolerances& tol = {}) {
    detail::require_compatible(families);
    const std::size_t dim = families.front().dim();
    detail::require_operator(k, dim, "K");
    const auto basis = subspace_basis(subspace, dim, tol.rank_tol);
    const auto pencil = kframe_pencil(k, basis, tol);
    auto report = detail::sweep(families, opts, [&](const Matrix& s) {
        auto b = kbounds_of_operator(s, pencil, basis, tol);
        return detail::Score{b.lower, b.upper, std::move(b.lower_witness)};
    });
    report.verdict = report.exhaustive && report.universal_lower > tol.frame_tol;
    return report;
}

/// Sum of the families' Bessel bounds: an upper bound for every weaving.
inline double weaving_bessel_bound(std::span<const FrameFamily> families) {
    double total = 0.0;
    for (const auto& f : families) {
        if (!f.empty()) {
            total += std::max(0.0, hermitian_eig(frame_operator(f)).values.back());
        }
    }
    return total;
}

} // namespace wkf
