// wkf <task> <problem-file> [--budget N] [--seed N] [--tol X] [--json] [--quiet]
//
// Exit codes: 0 pass / true, 1 fail / false, 2 error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <wkf/problem.hpp>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frame, K-frame and weaving bounds with certificate checks"};
    std::string task;
    std::string path;
    std::optional<std::uint64_t> budget;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    bool json = false;
    bool quiet = false;
    app.add_option("task", task, "bounds | kbounds | woven | kwoven | cert")
        ->required()
        ->check(CLI::IsMember({"bounds", "kbounds", "woven", "kwoven", "cert"}));
    app.add_option("problem-file", path, "JSON problem description")->required();
    app.add_option("--budget", budget, "partition budget for sweeps (default 1048576)");
    app.add_option("--seed", seed, "seed for sampled sweeps and perturbation probes (default 0)");
    app.add_option("--tol", tol, "relative certificate tolerance (default 1e-8)")->check(CLI::PositiveNumber);
    app.add_flag("--json", json, "machine-readable report");
    app.add_flag("--quiet", quiet, "no report; exit code only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const auto problem = wkf::ProblemFile::parse(read_file(path));
        const auto result = wkf::run(problem, wkf::RunOptions{task, budget, seed, tol});
        if (!quiet) {
            std::cout << (json ? wkf::format_json(result.report) : wkf::format_text(result));
        }
        return result.exit_code;
    } catch (const std::exception& e) {
        if (json && !quiet) {
            wkf::Json err;
            err["error"] = e.what();
            std::cout << wkf::format_json(err);
        }
        std::cerr << "wkf: " << e.what() << "\n";
        return 2;
    }
}
