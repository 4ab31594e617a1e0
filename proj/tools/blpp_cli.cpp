#include "blpp/blpp.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace blpp;

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::numeric: return 3;
    case ErrorKind::io: return 4;
    }
    return 1;
}

void report(const json& j) { std::cout << j.dump(2) << "\n"; }

// Expands directories into their *.csv stream files (sorted).
std::vector<fs::path> stream_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.path().extension() == ".csv") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw Error(ErrorCode::EmptyInput, "no stream files given");
    return files;
}

std::vector<EventStream> load_streams(const std::vector<std::string>& inputs) {
    std::vector<EventStream> streams;
    for (const auto& f : stream_files(inputs)) streams.push_back(read_stream(f));
    return streams;
}

// Long-format `lag,i,j,value` for grids.
std::string grid_csv(const LagGrid& grid, std::span<const Matrix> values) {
    std::string text = "lag,i,j,value\n";
    for (int k = 0; k < grid.size(); ++k)
        for (Eigen::Index i = 0; i < values[static_cast<std::size_t>(k)].rows(); ++i)
            for (Eigen::Index j = 0; j < values[static_cast<std::size_t>(k)].cols(); ++j)
                text += format_double(grid.lag(k)) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
                        format_double(values[static_cast<std::size_t>(k)](i, j)) + "\n";
    return text;
}

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
    std::string format = "json";
};

void add_format(CLI::App* cmd, Common& c) {
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Best linear prediction for multivariate point processes"};
    app.require_subcommand(1);
    Common c;

    auto* sim = app.add_subcommand("simulate", "Simulate event streams from a config");
    sim->add_option("--config", c.config, "Experiment config (JSON)")->required();
    sim->add_option("--seed", c.seed, "Override the config seed");
    sim->add_option("--out", c.out, "Output directory");
    add_format(sim, c);

    std::vector<std::string> inputs;
    double delta = 0.1;
    int lags = 100;
    int bootstrap = 0;
    auto* est = app.add_subcommand("estimate-cov", "Estimate mean rates and covariance density");
    est->add_option("--input", inputs, "Stream CSV files or directories")->required();
    est->add_option("--config", c.config, "Take the lag grid from this config");
    est->add_option("--delta", delta, "Lag grid step");
    est->add_option("--p", lags, "Number of lags");
    est->add_option("--bootstrap", bootstrap, "Stream-level bootstrap resamples (0: off)");
    est->add_option("--seed", c.seed, "Bootstrap seed");
    est->add_option("--out", c.out, "Output directory");
    add_format(est, c);

    std::string input, solver_name = "whittle";
    int order = 0;
    bool ridge = false;
    auto* solve = app.add_subcommand("solve", "Solve the discretised Wiener-Hopf equation");
    solve->add_option("--input", input, "Covariance grid JSON")->required();
    solve->add_option("--solver", solver_name, "direct | whittle | bellman_krein")
        ->check(CLI::IsMember({"direct", "whittle", "bellman_krein"}));
    solve->add_option("--order", order, "Kernel order (default: grid size)");
    solve->add_flag("--ridge", ridge, "Add 1e-8 tr(L0)/d to the lag-zero matrix");
    solve->add_option("--out", c.out, "Output directory");
    add_format(solve, c);

    int rows = 0;
    double declared_support = -1.0;
    auto* innov = app.add_subcommand("innovations", "Run the innovations algorithm");
    innov->add_option("--input", input, "Covariance grid JSON")->required();
    innov->add_option("--rows", rows, "Number of rows (default: grid size)");
    innov->add_option("--support", declared_support, "Declared shot-kernel support for the leakage flag");
    innov->add_option("--out", c.out, "Output directory");
    add_format(innov, c);

    std::string kernel_path, innov_path, cov_path;
    double eval_delta = 0.1;
    auto* pred = app.add_subcommand("predict", "Evaluate a predictor on event streams");
    pred->add_option("--input", inputs, "Stream CSV files or directories")->required();
    auto* kopt = pred->add_option("--kernel", kernel_path, "Kernel grid JSON (AR form)");
    auto* iopt = pred->add_option("--innovations", innov_path, "Innovations JSON (MA form)");
    kopt->excludes(iopt);
    pred->add_option("--covariance", cov_path, "Covariance JSON supplying the mean rates")->required();
    pred->add_option("--eval-delta", eval_delta, "Scoring bin width");
    pred->add_option("--out", c.out, "Output directory");
    add_format(pred, c);

    std::vector<int> sizes{256, 512, 1024, 2048, 4096};
    std::vector<std::string> solver_names{"direct", "whittle"};
    int dim = 2, repeats = 5;
    double bench_delta = 0.05;
    auto* bench = app.add_subcommand("bench", "Time the kernel solvers across orders");
    bench->add_option("--sizes", sizes, "Orders p (ascending, at least four)");
    bench->add_option("--d", dim, "Dimension");
    bench->add_option("--solvers", solver_names, "Solvers to time");
    bench->add_option("--repeats", repeats, "Runs per size (median reported)");
    bench->add_option("--delta", bench_delta, "Grid step of the synthetic covariances");
    bench->add_option("--seed", c.seed, "Seed for the synthetic covariances");
    bench->add_option("--out", c.out, "Output directory");

    auto* pipe = app.add_subcommand("pipeline", "simulate, estimate, solve, assemble and evaluate");
    pipe->add_option("--config", c.config, "Experiment config (JSON)")->required();
    pipe->add_option("--seed", c.seed, "Override the config seed");
    pipe->add_option("--out", c.out, "Override the output directory");
    pipe->add_option("--solver", solver_name, "Override the solver")
        ->check(CLI::IsMember({"direct", "whittle", "bellman_krein", "innovations"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "ConfigError"}, {"kind", "config"}, {"message", e.what()}, {"fields", json::object()}}.dump()
                  << "\n";
        return 2;
    }

    try {
        const fs::path out(c.out);
        auto seed_given = [&](CLI::App* cmd) { return cmd->count("--seed") > 0; };

        if (*sim) {
            auto cfg = load_config(c.config);
            if (seed_given(sim)) cfg.seed = c.seed;
            validate_config(cfg);
            const auto streams = simulate_replicates(cfg.model, cfg.horizon, cfg.replications, cfg.seed);
            json files = json::array();
            for (std::size_t r = 0; r < streams.size(); ++r) {
                char name[32];
                std::snprintf(name, sizeof name, "stream_%04zu", r);
                write_stream(out / (std::string(name) + ".csv"), streams[r]);
                files.push_back({{"file", std::string(name) + ".csv"}, {"seed", cfg.seed + r}, {"events", streams[r].size()}});
            }
            if (c.format == "csv") {
                std::cout << "file,seed,events\n";
                for (const auto& f : files)
                    std::cout << f["file"].get<std::string>() << ',' << f["seed"] << ',' << f["events"] << '\n';
                return 0;
            }
            report({{"streams", files}});
        } else if (*est) {
            if (!c.config.empty()) {
                const auto cfg = load_config(c.config);
                delta = cfg.grid_delta;
                lags = cfg.grid_p;
            }
            const LagGrid grid(delta, lags);
            const auto streams = load_streams(inputs);
            std::vector<std::string> warnings;
            estimate_mean_rates(streams, &warnings);
            for (const auto& w : warnings) std::cerr << json{{"warning", w}}.dump() << "\n";
            if (bootstrap > 0) {
                const auto b = bootstrap_covariance(streams, grid, bootstrap, c.seed);
                json se = json::array();
                for (const auto& m : b.standard_error) se.push_back(matrix_to_json(m));
                write_json(out / "covariance_se.json", {{"delta", delta}, {"p", lags}, {"resamples", b.resamples_used}, {"values", se}});
                write_json(out / "covariance.json", to_json(b.estimate));
                if (c.format == "csv") write_text(out / "covariance.csv", grid_csv(grid, b.estimate.density()));
            } else {
                const auto cov = estimate_covariance_density(streams, grid);
                write_json(out / "covariance.json", to_json(cov));
                if (c.format == "csv") write_text(out / "covariance.csv", grid_csv(grid, cov.density()));
            }
            report({{"streams", streams.size()}, {"covariance", (out / "covariance.json").string()}});
        } else if (*solve) {
            const auto cov = covariance_grid_from_json(read_json(input));
            const auto solved = solve_covariance(cov, parse_solver(solver_name), order > 0 ? order : cov.grid().size(), ridge);
            write_json(out / "kernel.json", to_json(*solved.kernel));
            write_json(out / "diagnostics.json", solved.diagnostics);
            if (c.format == "csv") write_text(out / "kernel.csv", grid_csv(solved.kernel->grid(), solved.kernel->values()));
            report({{"kernel", (out / "kernel.json").string()}, {"residual", solved.diagnostics["residual"]}});
        } else if (*innov) {
            const auto cov = covariance_grid_from_json(read_json(input));
            const int n = rows > 0 ? rows : cov.grid().size();
            std::optional<Matrix> support;
            if (declared_support > 0.0) support = Matrix::Constant(cov.dim(), cov.dim(), declared_support);
            const auto sol = solve_innovations(cov, n);
            const auto rec = recover_shot_kernel(cov, n, support);
            json diag = innovations_diagnostics(cov, sol);
            diag["leakage_ratio"] = rec.leakage_ratio;
            diag["support_flag"] = rec.support_flag;
            write_json(out / "innovations.json", to_json(sol));
            write_json(out / "shot_kernel.json", to_json(rec.kernel));
            write_json(out / "diagnostics.json", diag);
            if (c.format == "csv") write_text(out / "shot_kernel.csv", grid_csv(rec.kernel.grid(), rec.kernel.values()));
            report({{"innovations", (out / "innovations.json").string()}, {"support_flag", rec.support_flag}});
        } else if (*pred) {
            if (kernel_path.empty() == innov_path.empty())
                throw Error(ErrorCode::ConfigError, "give exactly one of --kernel or --innovations");
            const auto cov = covariance_grid_from_json(read_json(cov_path));
            const Predictor p = kernel_path.empty()
                                    ? assemble_predictor(innovations_from_json(read_json(innov_path)), cov.mean_rates())
                                    : assemble_predictor(ArKernel{kernel_grid_from_json(read_json(kernel_path))}, cov.mean_rates());
            const auto files = stream_files(inputs);
            std::vector<EventStream> streams;
            for (const auto& f : files) streams.push_back(read_stream(f));
            const auto score = evaluate_predictor(p, streams, eval_delta);
            write_json(out / "score.json", to_json(score));
            if (c.format == "csv") {
                for (std::size_t s = 0; s < streams.size(); ++s) {
                    const auto times = evaluation_times(p, streams[s], eval_delta);
                    write_text(out / ("predictions_" + files[s].stem().string() + ".csv"),
                               prediction_csv(times, predict_intensity(p, streams[s], times)));
                }
            }
            report(to_json(score));
        } else if (*bench) {
            BenchOptions opt;
            opt.sizes = sizes;
            opt.dim = dim;
            opt.repeats = repeats;
            opt.delta = bench_delta;
            opt.seed = c.seed;
            opt.solvers.clear();
            for (const auto& s : solver_names) opt.solvers.push_back(parse_solver(s));
            const auto rep = run_bench(opt, [](const std::string& line) { std::cerr << line << "\n"; });
            const json j = to_json(rep);
            write_json(out / "bench.json", j);
            report(j);
        } else if (*pipe) {
            auto cfg = load_config(c.config);
            if (seed_given(pipe)) cfg.seed = c.seed;
            if (pipe->count("--solver")) cfg.solver = parse_solver(solver_name);
            if (pipe->count("--out")) cfg.output_dir = c.out;
            const auto res = run_pipeline(cfg);
            report({{"directory", res.directory.string()}, {"manifest", res.manifest}, {"recovery", res.recovery}});
        }
    } catch (const Error& e) {
        std::cerr << to_json(e).dump() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"kind", "internal"}, {"message", e.what()}, {"fields", json::object()}}.dump()
                  << "\n";
        return 1;
    }
    return 0;
}
