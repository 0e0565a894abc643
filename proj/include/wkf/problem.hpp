#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "theorems.hpp"

namespace wkf {

using Json = nlohmann::ordered_json;

/// Restriction domain: the range of a named operator, or of its adjoint.
struct SubspaceSelector {
    std::string range;
    bool adjoint = false;

    friend bool operator==(const SubspaceSelector&, const SubspaceSelector&) = default;
};

/// Named parameters of the command a problem file describes.
struct Task {
    std::optional<std::string> name;
    std::vector<std::string> frames;
    std::optional<std::string> k;
    std::optional<std::string> t;
    std::optional<SubspaceSelector> subspace;
    std::optional<std::uint64_t> budget;
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> erased; // 1-based, as written
    std::optional<std::array<double, 3>> alphas;
    std::optional<std::string> result;
    std::optional<std::string> direction;
    std::optional<std::size_t> probes;
    std::optional<double> tol;

    friend bool operator==(const Task&, const Task&) = default;
};

inline const std::set<std::string, std::less<>>& task_names() {
    static const std::set<std::string, std::less<>> names{"bounds", "kbounds", "woven", "kwoven", "cert"};
    return names;
}

inline const std::set<std::string, std::less<>>& result_ids() {
    static const std::set<std::string, std::less<>> ids{"L2.1", "L2.2", "P2.3", "P2.4",  "P2.5", "P2.6",
                                                        "T2.7", "C2.7", "T2.8", "C2.9", "T2.10"};
    return ids;
}

namespace detail {

[[noreturn]] inline void invalid(const std::string& path, const std::string& message) {
    throw Error(Errc::ValidationError, path + ": " + message);
}

inline void require_keys(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) {
            known = known || key == a;
        }
        if (!known) {
            invalid(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

inline double read_real(const Json& j, const std::string& path) {
    if (!j.is_number()) {
        invalid(path, "expected a number");
    }
    const double x = j.get<double>();
    if (!std::isfinite(x)) {
        invalid(path, "number is not finite");
    }
    return x;
}

inline Complex read_scalar(const Json& j, const std::string& path) {
    if (j.is_array()) {
        if (j.size() != 2) {
            invalid(path, "complex scalar must be [re, im]");
        }
        return {read_real(j[0], path + "[0]"), read_real(j[1], path + "[1]")};
    }
    return read_real(j, path);
}

inline std::vector<Complex> read_row(const Json& j, const std::string& path) {
    if (!j.is_array()) {
        invalid(path, "expected a list of scalars");
    }
    std::vector<Complex> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(read_scalar(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline std::uint64_t read_count(const Json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        invalid(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

inline std::string read_string(const Json& j, const std::string& path) {
    if (!j.is_string()) {
        invalid(path, "expected a string");
    }
    return j.get<std::string>();
}

inline Json scalar_json(Complex z) {
    if (z.imag() == 0.0) {
        return z.real();
    }
    return Json::array({z.real(), z.imag()});
}

inline Json vector_json(std::span<const Complex> v) {
    Json out = Json::array();
    for (auto z : v) {
        out.push_back(scalar_json(z));
    }
    return out;
}

inline std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
        line += text[i] == '\n';
    }
    return line;
}

} // namespace detail

/**
 * A self-contained problem: ambient dimension, named frame families, named
 * operators, and a task descriptor.
 *
 * Text format (JSON):
 *   { "dim": 2,
 *     "frames":    { "F": [[1, 0], [0, 1]] },
 *     "operators": { "K": [[1, 0], [0, [0, 1]]] },
 *     "task":      { "name": "kbounds", "frames": ["F"], "K": "K" } }
 * Scalars are a bare real or [re, im]; matrices are lists of rows.
 */
struct ProblemFile {
    std::size_t dim = 0;
    std::map<std::string, FrameFamily> frames;
    std::map<std::string, Matrix> operators;
    Task task;

    friend bool operator==(const ProblemFile&, const ProblemFile&) = default;

    static ProblemFile parse(std::string_view text) {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::ParseError, "line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
        } catch (const nlohmann::json::out_of_range& e) {
            // Literals such as 1e999 overflow to infinity.
            throw Error(Errc::ValidationError, std::string("number is not finite: ") + e.what());
        }
        return from_json(j);
    }

    static ProblemFile from_json(const Json& j) {
        using detail::invalid;
        if (!j.is_object()) {
            invalid("(root)", "expected an object");
        }
        detail::require_keys(j, "", {"dim", "frames", "operators", "task"});
        ProblemFile p;
        if (!j.contains("dim")) {
            invalid("dim", "missing");
        }
        p.dim = detail::read_count(j["dim"], "dim");
        if (p.dim == 0 || p.dim > max_dim) {
            invalid("dim", "must lie in [1, " + std::to_string(max_dim) + "]");
        }

        if (j.contains("frames")) {
            if (!j["frames"].is_object()) {
                invalid("frames", "expected an object of named families");
            }
            for (const auto& [name, vectors] : j["frames"].items()) {
                const std::string path = "frames." + name;
                if (!vectors.is_array()) {
                    invalid(path, "expected a list of vectors");
                }
                std::vector<Vector> vs;
                for (std::size_t i = 0; i < vectors.size(); ++i) {
                    const std::string vpath = path + "[" + std::to_string(i) + "]";
                    auto v = detail::read_row(vectors[i], vpath);
                    if (v.size() != p.dim) {
                        invalid(vpath, "vector has length " + std::to_string(v.size()) + ", dim is " +
                                           std::to_string(p.dim));
                    }
                    vs.push_back(std::move(v));
                }
                p.frames.emplace(name, FrameFamily(p.dim, std::move(vs)));
            }
        }

        if (j.contains("operators")) {
            if (!j["operators"].is_object()) {
                invalid("operators", "expected an object of named matrices");
            }
            for (const auto& [name, rows] : j["operators"].items()) {
                const std::string path = "operators." + name;
                if (!rows.is_array() || rows.empty()) {
                    invalid(path, "expected a non-empty list of rows");
                }
                std::vector<Vector> parsed;
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    parsed.push_back(detail::read_row(rows[r], path + "[" + std::to_string(r) + "]"));
                    if (parsed.back().empty() || parsed.back().size() != parsed.front().size()) {
                        invalid(path + "[" + std::to_string(r) + "]", "rows must be non-empty and of equal length");
                    }
                }
                if (parsed.size() > max_dim || parsed.front().size() > max_dim) {
                    invalid(path, "larger than " + std::to_string(max_dim) + " in some dimension");
                }
                Matrix m(parsed.size(), parsed.front().size());
                for (std::size_t r = 0; r < m.rows(); ++r) {
                    for (std::size_t c = 0; c < m.cols(); ++c) {
                        m(r, c) = parsed[r][c];
                    }
                }
                p.operators.emplace(name, std::move(m));
            }
        }

        if (!j.contains("task")) {
            invalid("task", "missing");
        }
        p.task = p.read_task(j["task"]);
        return p;
    }

    Json to_json() const {
        Json j;
        j["dim"] = dim;
        Json fs = Json::object();
        for (const auto& [name, f] : frames) {
            Json vs = Json::array();
            for (const auto& v : f.vectors()) {
                vs.push_back(detail::vector_json(v));
            }
            fs[name] = std::move(vs);
        }
        j["frames"] = std::move(fs);
        Json ops = Json::object();
        for (const auto& [name, m] : operators) {
            Json rows = Json::array();
            for (std::size_t r = 0; r < m.rows(); ++r) {
                rows.push_back(detail::vector_json(std::span<const Complex>(&m(r, 0), m.cols())));
            }
            ops[name] = std::move(rows);
        }
        j["operators"] = std::move(ops);

        Json t = Json::object();
        if (task.name) t["name"] = *task.name;
        if (!task.frames.empty()) t["frames"] = task.frames;
        if (task.k) t["K"] = *task.k;
        if (task.t) t["T"] = *task.t;
        if (task.subspace) t["subspace"] = Json{{"range", task.subspace->range}, {"adjoint", task.subspace->adjoint}};
        if (task.budget) t["budget"] = *task.budget;
        if (task.seed) t["seed"] = *task.seed;
        if (!task.erased.empty()) t["erased"] = task.erased;
        if (task.alphas) t["alphas"] = *task.alphas;
        if (task.result) t["result"] = *task.result;
        if (task.direction) t["direction"] = *task.direction;
        if (task.probes) t["probes"] = *task.probes;
        if (task.tol) t["tol"] = *task.tol;
        j["task"] = std::move(t);
        return j;
    }

    std::string dump() const { return to_json().dump(2) + "\n"; }

    const FrameFamily& frame(const std::string& name, const std::string& path) const {
        const auto it = frames.find(name);
        if (it == frames.end()) {
            detail::invalid(path, "unknown frame '" + name + "'");
        }
        return it->second;
    }

    const Matrix& op(const std::string& name, const std::string& path) const {
        const auto it = operators.find(name);
        if (it == operators.end()) {
            detail::invalid(path, "unknown operator '" + name + "'");
        }
        return it->second;
    }

private:
    Task read_task(const Json& j) const {
        using detail::invalid;
        if (!j.is_object()) {
            invalid("task", "expected an object");
        }
        detail::require_keys(j, "task", {"name", "frames", "K", "T", "subspace", "budget", "seed", "erased", "alphas",
                                         "result", "direction", "probes", "tol"});
        Task t;
        if (j.contains("name")) {
            t.name = detail::read_string(j["name"], "task.name");
            if (!task_names().contains(*t.name)) {
                invalid("task.name", "unknown task '" + *t.name + "'");
            }
        }
        if (j.contains("frames")) {
            const auto& fs = j["frames"];
            if (!fs.is_array()) {
                invalid("task.frames", "expected a list of frame names");
            }
            for (std::size_t i = 0; i < fs.size(); ++i) {
                const std::string path = "task.frames[" + std::to_string(i) + "]";
                t.frames.push_back(detail::read_string(fs[i], path));
                frame(t.frames.back(), path);
            }
        }
        if (j.contains("K")) {
            t.k = detail::read_string(j["K"], "task.K");
            op(*t.k, "task.K");
        }
        if (j.contains("T")) {
            t.t = detail::read_string(j["T"], "task.T");
            op(*t.t, "task.T");
        }
        if (j.contains("subspace")) {
            const auto& s = j["subspace"];
            if (!s.is_object()) {
                invalid("task.subspace", "expected {\"range\": name, \"adjoint\": bool}");
            }
            detail::require_keys(s, "task.subspace", {"range", "adjoint"});
            if (!s.contains("range")) {
                invalid("task.subspace.range", "missing");
            }
            SubspaceSelector sel;
            sel.range = detail::read_string(s["range"], "task.subspace.range");
            op(sel.range, "task.subspace.range");
            if (s.contains("adjoint")) {
                if (!s["adjoint"].is_boolean()) {
                    invalid("task.subspace.adjoint", "expected true or false");
                }
                sel.adjoint = s["adjoint"].get<bool>();
            }
            t.subspace = sel;
        }
        if (j.contains("budget")) {
            t.budget = detail::read_count(j["budget"], "task.budget");
        }
        if (j.contains("seed")) {
            t.seed = detail::read_count(j["seed"], "task.seed");
        }
        if (j.contains("erased")) {
            const auto& e = j["erased"];
            if (!e.is_array()) {
                invalid("task.erased", "expected a list of 1-based indices");
            }
            for (std::size_t i = 0; i < e.size(); ++i) {
                const std::string path = "task.erased[" + std::to_string(i) + "]";
                const auto idx = detail::read_count(e[i], path);
                if (idx == 0) {
                    invalid(path, "indices are 1-based");
                }
                t.erased.push_back(static_cast<std::size_t>(idx));
            }
        }
        if (j.contains("alphas")) {
            const auto& a = j["alphas"];
            if (!a.is_array() || a.size() != 3) {
                invalid("task.alphas", "expected [alpha1, alpha2, alpha3]");
            }
            t.alphas = std::array<double, 3>{detail::read_real(a[0], "task.alphas[0]"),
                                             detail::read_real(a[1], "task.alphas[1]"),
                                             detail::read_real(a[2], "task.alphas[2]")};
        }
        if (j.contains("result")) {
            t.result = detail::read_string(j["result"], "task.result");
            if (!result_ids().contains(*t.result)) {
                invalid("task.result", "unknown result id '" + *t.result + "'");
            }
        }
        if (j.contains("direction")) {
            t.direction = detail::read_string(j["direction"], "task.direction");
            if (*t.direction != "forward" && *t.direction != "backward") {
                invalid("task.direction", "expected \"forward\" or \"backward\"");
            }
        }
        if (j.contains("probes")) {
            t.probes = static_cast<std::size_t>(detail::read_count(j["probes"], "task.probes"));
        }
        if (j.contains("tol")) {
            t.tol = detail::read_real(j["tol"], "task.tol");
            if (*t.tol <= 0.0) {
                invalid("task.tol", "must be positive");
            }
        }
        return t;
    }
};

/// Command-line overrides applied on top of the task descriptor.
struct RunOptions {
    std::optional<std::string> task;
    std::optional<std::uint64_t> budget;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

struct RunResult {
    Json report;
    int exit_code = 2;
    double seconds = 0.0;
};

namespace detail {

inline Json witness_json(std::span<const Complex> v) {
    Json out = Json::array();
    for (auto z : v) {
        out.push_back(Json::array({z.real(), z.imag()}));
    }
    return out;
}

inline Json cert_json(const CertificateReport& r) {
    Json j;
    j["task"] = "cert";
    j["result"] = r.result_id;
    j["pass"] = r.pass;
    j["claimed"] = Json{{"lower", r.claimed_lower}, {"upper", r.claimed_upper}};
    j["achieved"] = Json{{"lower", r.achieved_lower}, {"upper", r.achieved_upper}};
    Json d = Json::object();
    for (const auto& [key, value] : r.details) {
        d[key] = value;
    }
    j["details"] = std::move(d);
    if (!r.note.empty()) {
        j["note"] = r.note;
    }
    return j;
}

inline Json weaving_json(const std::string& task, const std::vector<std::string>& names, const WeavingReport& w) {
    Json j;
    j["task"] = task;
    j["frames"] = names;
    j["verdict"] = w.verdict;
    j["universal_lower"] = w.universal_lower;
    j["universal_upper"] = w.universal_upper;
    j["worst_partition"] = w.worst_partition.label();
    j["partitions_checked"] = w.partitions_checked;
    j["exhaustive"] = w.exhaustive;
    j["witness"] = witness_json(w.witness);
    return j;
}

// 12 significant digits, no negative zero, non-finite values as strings.
inline void normalize_numbers(Json& j) {
    if (j.is_structured()) {
        for (auto& child : j) {
            normalize_numbers(child);
        }
        return;
    }
    if (!j.is_number_float()) {
        return;
    }
    const double x = j.get<double>();
    if (std::isnan(x)) {
        j = "nan";
    } else if (std::isinf(x)) {
        j = x > 0 ? "inf" : "-inf";
    } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", x);
        double y = std::strtod(buf, nullptr);
        if (y == 0.0) {
            y = 0.0;
        }
        j = y;
    }
}

} // namespace detail

/**
 * Execute the problem's task. The report's numbers are rounded to 12
 * significant digits so identical inputs give byte-identical output;
 * library errors propagate as exceptions.
 */
inline RunResult run(const ProblemFile& p, const RunOptions& opts = {}) {
    using detail::invalid;
    const auto start = std::chrono::steady_clock::now();
    const Task& task = p.task;

    std::string name;
    if (opts.task) {
        name = *opts.task;
        if (!task_names().contains(name)) {
            invalid("task", "unknown task '" + name + "'");
        }
        if (task.name && *task.name != name) {
            invalid("task.name", "file describes '" + *task.name + "', command line asks for '" + name + "'");
        }
    } else if (task.name) {
        name = *task.name;
    } else {
        invalid("task.name", "no task given");
    }

    auto need_frames = [&](std::size_t lo, std::size_t hi) {
        if (task.frames.size() < lo || task.frames.size() > hi) {
            invalid("task.frames", name + (task.result ? " " + *task.result : std::string()) + " takes " +
                                       (lo == hi ? std::to_string(lo) : std::to_string(lo) + " or more") +
                                       " frame name(s), got " + std::to_string(task.frames.size()));
        }
        std::vector<FrameFamily> out;
        for (std::size_t i = 0; i < task.frames.size(); ++i) {
            out.push_back(p.frame(task.frames[i], "task.frames[" + std::to_string(i) + "]"));
        }
        return out;
    };
    auto need_op = [&](const std::optional<std::string>& ref, const char* key) -> const Matrix& {
        if (!ref) {
            invalid(std::string("task.") + key, "required by " + name + (task.result ? " " + *task.result : std::string()));
        }
        return p.op(*ref, std::string("task.") + key);
    };
    std::optional<Matrix> subspace;
    if (task.subspace) {
        const Matrix& m = p.op(task.subspace->range, "task.subspace.range");
        subspace = task.subspace->adjoint ? m.adjoint() : m;
    }

    CertOptions co;
    if (auto b = opts.budget ? opts.budget : task.budget) co.sweep.budget = *b;
    if (auto s = opts.seed ? opts.seed : task.seed) co.sweep.seed = *s;
    if (auto t = opts.tol ? opts.tol : task.tol) co.tol.cert_tol = *t;
    if (task.probes) co.probes = *task.probes;
    const Tolerances& tol = co.tol;

    RunResult out;
    Json& j = out.report;
    bool ok = false;
    if (name == "bounds") {
        const auto fs = need_frames(1, 1);
        const auto b = frame_bounds(fs[0], subspace, tol);
        j["task"] = name;
        j["frames"] = task.frames;
        j["is_frame"] = b.is_frame;
        j["lower"] = b.lower;
        j["upper"] = b.upper;
        j["subspace_dim"] = b.subspace_dim;
        j["lower_witness"] = detail::witness_json(b.lower_witness);
        j["upper_witness"] = detail::witness_json(b.upper_witness);
        ok = b.is_frame;
    } else if (name == "kbounds") {
        const auto fs = need_frames(1, 1);
        const auto b = kframe_bounds(fs[0], need_op(task.k, "K"), subspace, tol);
        j["task"] = name;
        j["frames"] = task.frames;
        j["is_kframe"] = b.is_kframe;
        j["lower"] = b.lower;
        j["upper"] = b.upper;
        j["is_tight"] = b.is_tight;
        j["tight_constant"] = b.tight_constant ? Json(*b.tight_constant) : Json(nullptr);
        j["pencil_max"] = b.pencil_max;
        j["lower_witness"] = detail::witness_json(b.lower_witness);
        j["upper_witness"] = detail::witness_json(b.upper_witness);
        ok = b.is_kframe;
    } else if (name == "woven" || name == "kwoven") {
        const auto fs = need_frames(1, 64);
        const auto w = name == "woven" ? woven_report(fs, subspace, co.sweep, tol)
                                       : kwoven_report(fs, need_op(task.k, "K"), subspace, co.sweep, tol);
        j = detail::weaving_json(name, task.frames, w);
        ok = w.verdict;
    } else {
        if (!task.result) {
            invalid("task.result", "cert needs a result id");
        }
        const std::string& id = *task.result;
        const Direction dir =
            task.direction && *task.direction == "backward" ? Direction::backward : Direction::forward;
        CertificateReport r;
        if (id == "L2.1") {
            const auto fs = need_frames(1, 1);
            r = pushforward_frame(fs[0], need_op(task.k, "K"), need_op(task.t, "T"), tol).second;
        } else if (id == "L2.2") {
            const auto fs = need_frames(1, 1);
            r = pullback_frame(fs[0], need_op(task.t, "T"), need_op(task.k, "K"), co);
        } else if (id == "P2.3") {
            const auto fs = need_frames(2, 2);
            r = woven_pushforward(fs[0], fs[1], need_op(task.k, "K"), need_op(task.t, "T"), co);
        } else if (id == "P2.4") {
            const auto fs = need_frames(2, 2);
            r = woven_pullback(fs[0], fs[1], need_op(task.t, "T"), need_op(task.k, "K"), co);
        } else if (id == "P2.5") {
            const auto fs = need_frames(2, 2);
            r = range_equivalence_kstar(fs[0], fs[1], need_op(task.k, "K"), dir, co);
        } else if (id == "P2.6") {
            const auto fs = need_frames(2, 2);
            r = range_equivalence_k(fs[0], fs[1], need_op(task.k, "K"), dir, co);
        } else if (id == "T2.7" || id == "C2.7") {
            const auto fs = need_frames(2, 2);
            if (!task.alphas) {
                invalid("task.alphas", "required by " + id);
            }
            PerturbationParams pp;
            pp.alpha1 = (*task.alphas)[0];
            pp.alpha2 = (*task.alphas)[1];
            pp.alpha3 = (*task.alphas)[2];
            r = perturbed_woven_cert(fs[0], fs[1], need_op(task.t, "T"), need_op(task.k, "K"), pp,
                                     id == "T2.7" ? PerturbationMode::theorem : PerturbationMode::corollary, co);
        } else {
            const auto fs = need_frames(2, 2);
            std::vector<std::size_t> erased;
            for (auto i : task.erased) {
                erased.push_back(i - 1);
            }
            const ErasureMode mode = id == "C2.9"   ? ErasureMode::identity
                                     : id == "T2.8" ? ErasureMode::pushforward
                                                    : ErasureMode::pullback;
            std::optional<Matrix> t;
            if (mode != ErasureMode::identity) {
                t = need_op(task.t, "T");
            }
            r = erasure_woven_cert(fs[0], fs[1], erased, need_op(task.k, "K"), t, mode, co);
        }
        j = detail::cert_json(r);
        ok = r.pass;
    }
    detail::normalize_numbers(j);
    out.exit_code = ok ? 0 : 1;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Machine-readable report: pretty JSON, no timing.
inline std::string format_json(const Json& report) { return report.dump(2) + "\n"; }

/// Human-readable report, one "key: value" line per field, with wall time.
inline std::string format_text(const RunResult& r) {
    std::ostringstream os;
    auto scalar = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (const auto& [key, value] : r.report.items()) {
        if (value.is_object()) {
            os << key << ":\n";
            for (const auto& [k2, v2] : value.items()) {
                os << "  " << k2 << ": " << scalar(v2) << "\n";
            }
        } else {
            os << key << ": " << scalar(value) << "\n";
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "time: %.3f s\n", r.seconds);
    os << buf;
    return os.str();
}

} // namespace wkf
