#pragma once

#include "blpp/core.hpp"
#include "blpp/innovations.hpp"
#include "blpp/io.hpp"
#include "blpp/kernels.hpp"
#include "blpp/moments.hpp"
#include "blpp/predict.hpp"
#include "blpp/rng.hpp"
#include "blpp/simulate.hpp"
#include "blpp/wh_solvers.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace blpp {

inline constexpr int kSchemaVersion = 1;

enum class ModelType { poisson, hawkes, neyman_scott };
enum class SolverChoice { direct, whittle, bellman_krein, innovations };

inline std::string to_string(ModelType m) {
    switch (m) {
    case ModelType::poisson: return "poisson";
    case ModelType::hawkes: return "hawkes";
    case ModelType::neyman_scott: return "neyman_scott";
    }
    return "?";
}

inline std::string to_string(SolverChoice s) {
    switch (s) {
    case SolverChoice::direct: return "direct";
    case SolverChoice::whittle: return "whittle";
    case SolverChoice::bellman_krein: return "bellman_krein";
    case SolverChoice::innovations: return "innovations";
    }
    return "?";
}

inline SolverChoice parse_solver(const std::string& name) {
    if (name == "direct") return SolverChoice::direct;
    if (name == "whittle") return SolverChoice::whittle;
    if (name == "bellman_krein") return SolverChoice::bellman_krein;
    if (name == "innovations") return SolverChoice::innovations;
    throw Error(ErrorCode::ConfigError, "unknown solver \"" + name + "\"");
}

struct ModelSpec {
    ModelType type = ModelType::poisson;
    Vector rates;        // Poisson rates, Hawkes baseline or latent rates
    MatrixKernel kernel; // Hawkes kernel or shot kernel (unused for Poisson)

    int dim() const { return static_cast<int>(rates.size()); }
    bool operator==(const ModelSpec& o) const {
        return type == o.type && rates.size() == o.rates.size() && rates == o.rates && kernel == o.kernel;
    }
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    ModelSpec model;
    double horizon = 1000.0;
    int replications = 1;
    std::uint64_t seed = 0;
    double grid_delta = 0.1;
    int grid_p = 100;
    SolverChoice solver = SolverChoice::whittle;
    int order = 0; // 0: use grid_p
    bool ridge = false;
    double eval_delta = 0.0; // 0: use grid_delta
    int bootstrap = 0;       // resamples; 0 disables bootstrap error bars
    std::string output_dir = "out";
    bool write_streams = false;

    int effective_order() const { return order > 0 ? order : grid_p; }
    double effective_eval_delta() const { return eval_delta > 0.0 ? eval_delta : grid_delta; }
    bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------- serialization

inline json to_json(const KernelTerm& term) {
    if (const auto* e = std::get_if<ExponentialTerm>(&term)) {
        json j{{"type", "exponential"}, {"alpha", e->alpha}, {"beta", e->beta}};
        if (!std::isnan(e->support)) j["support"] = e->support;
        return j;
    }
    const auto& b = std::get<BoxTerm>(term);
    return {{"type", "box"}, {"height", b.height}, {"support", b.support}};
}

inline KernelTerm kernel_term_from_json(const json& j) {
    const auto type = get_field<std::string>(j, "type");
    if (type == "exponential") {
        ExponentialTerm e{get_field<double>(j, "alpha"), get_field<double>(j, "beta")};
        if (j.contains("support")) e.support = get_field<double>(j, "support");
        return e;
    }
    if (type == "box") return BoxTerm{get_field<double>(j, "height"), get_field<double>(j, "support")};
    throw Error(ErrorCode::ConfigError, "unknown kernel term type \"" + type + "\"");
}

// d x d nested arrays of term lists.
inline json to_json(const MatrixKernel& k) {
    json rows = json::array();
    for (int i = 0; i < k.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < k.dim(); ++j) {
            json terms = json::array();
            for (const auto& t : k.entry(i, j).terms()) terms.push_back(to_json(t));
            row.push_back(std::move(terms));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline MatrixKernel matrix_kernel_from_json(const json& j, int d) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw Error(ErrorCode::ConfigError, "kernel must be a " + std::to_string(d) + " x " + std::to_string(d) + " array");
    MatrixKernel k(d);
    for (int i = 0; i < d; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != d) throw Error(ErrorCode::ConfigError, "kernel row has the wrong length");
        for (int c = 0; c < d; ++c) {
            const json& terms = row[static_cast<std::size_t>(c)];
            if (!terms.is_array()) throw Error(ErrorCode::ConfigError, "kernel entry must be a list of terms");
            std::vector<KernelTerm> list;
            for (const auto& t : terms) list.push_back(kernel_term_from_json(t));
            try {
                k.entry(i, c) = ScalarKernel(std::move(list));
            } catch (const Error& e) {
                throw Error(ErrorCode::ConfigError, e.detail());
            }
        }
    }
    return k;
}

inline json to_json(const ModelSpec& m) {
    switch (m.type) {
    case ModelType::poisson: return {{"type", "poisson"}, {"rates", vector_to_json(m.rates)}};
    case ModelType::hawkes:
        return {{"type", "hawkes"}, {"baseline", vector_to_json(m.rates)}, {"kernel", to_json(m.kernel)}};
    case ModelType::neyman_scott:
        return {{"type", "neyman_scott"}, {"latent_rates", vector_to_json(m.rates)}, {"shot", to_json(m.kernel)}};
    }
    return {};
}

inline ModelSpec model_from_json(const json& j) {
    ModelSpec m;
    const auto type = get_field<std::string>(j, "type");
    if (type == "poisson") {
        m.type = ModelType::poisson;
        m.rates = vector_from_json(field(j, "rates"));
        m.kernel = MatrixKernel(std::max<int>(1, m.dim()));
    } else if (type == "hawkes") {
        m.type = ModelType::hawkes;
        m.rates = vector_from_json(field(j, "baseline"));
        m.kernel = matrix_kernel_from_json(field(j, "kernel"), m.dim());
    } else if (type == "neyman_scott") {
        m.type = ModelType::neyman_scott;
        m.rates = vector_from_json(field(j, "latent_rates"));
        m.kernel = matrix_kernel_from_json(field(j, "shot"), m.dim());
    } else {
        throw Error(ErrorCode::ConfigError, "unknown model type \"" + type + "\"");
    }
    if (m.dim() < 1) throw Error(ErrorCode::ConfigError, "model needs at least one coordinate");
    return m;
}

inline json to_json(const ExperimentConfig& c) {
    return {{"schema_version", c.schema_version},
            {"model", to_json(c.model)},
            {"horizon", c.horizon},
            {"replications", c.replications},
            {"seed", c.seed},
            {"grid", {{"delta", c.grid_delta}, {"p", c.grid_p}}},
            {"solver", to_string(c.solver)},
            {"order", c.order},
            {"ridge", c.ridge},
            {"eval_delta", c.eval_delta},
            {"bootstrap", c.bootstrap},
            {"output_dir", c.output_dir},
            {"write_streams", c.write_streams}};
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.schema_version = get_field<int>(j, "schema_version");
    if (c.schema_version != kSchemaVersion)
        throw Error(ErrorCode::ConfigError, "unsupported schema_version " + std::to_string(c.schema_version));
    c.model = model_from_json(field(j, "model"));
    c.horizon = get_field<double>(j, "horizon");
    c.replications = j.contains("replications") ? get_field<int>(j, "replications") : 1;
    c.seed = get_field<std::uint64_t>(j, "seed");
    const json& grid = field(j, "grid");
    c.grid_delta = get_field<double>(grid, "delta");
    c.grid_p = get_field<int>(grid, "p");
    if (j.contains("solver")) c.solver = parse_solver(get_field<std::string>(j, "solver"));
    if (j.contains("order")) c.order = get_field<int>(j, "order");
    if (j.contains("ridge")) c.ridge = get_field<bool>(j, "ridge");
    if (j.contains("eval_delta")) c.eval_delta = get_field<double>(j, "eval_delta");
    if (j.contains("bootstrap")) c.bootstrap = get_field<int>(j, "bootstrap");
    if (j.contains("output_dir")) c.output_dir = get_field<std::string>(j, "output_dir");
    if (j.contains("write_streams")) c.write_streams = get_field<bool>(j, "write_streams");
    return c;
}

inline ExperimentConfig load_config(const fs::path& path) { return config_from_json(read_json(path)); }

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

// ---------------------------------------------------------------- validation

inline void validate_config(const ExperimentConfig& c) {
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
    if (!(std::isfinite(c.horizon) && c.horizon > 0.0)) bad("horizon must be positive");
    if (c.replications < 1) bad("replications must be at least 1");
    if (!(std::isfinite(c.grid_delta) && c.grid_delta > 0.0)) bad("grid delta must be positive");
    if (c.grid_p < 1) bad("grid p must be at least 1");
    if (c.order < 0 || c.order > c.grid_p) bad("order must lie in [0, grid p]");
    if (c.eval_delta < 0.0) bad("eval_delta must be non-negative");
    if (c.bootstrap == 1 || c.bootstrap < 0) bad("bootstrap must be 0 or at least 2");
    if (!(c.grid_p * c.grid_delta < c.horizon / 2.0))
        throw Error(ErrorCode::GridTooCoarse, "grid span must be below half the horizon",
                    {{"span", c.grid_p * c.grid_delta}, {"horizon", c.horizon}});
    const auto& m = c.model;
    if (m.kernel.dim() != m.dim()) bad("kernel and rate dimensions differ");
    switch (m.type) {
    case ModelType::poisson: detail::check_rates(m.rates, "Poisson rates"); break;
    case ModelType::hawkes: check_hawkes_params(HawkesParams<MatrixKernel>{m.rates, m.kernel}); break;
    case ModelType::neyman_scott:
        detail::check_rates(m.rates, "latent rates");
        if (!kernel_is_nonnegative(m.kernel)) throw Error(ErrorCode::NegativeRate, "shot kernel must be non-negative");
        break;
    }
}

// Runs `body`, attaching `stage` to any library error it raises.
template <class F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (Error& e) {
        if (e.stage().empty()) e.set_stage(stage);
        throw;
    }
}

// ---------------------------------------------------------------- simulation

inline EventStream simulate_model(const ModelSpec& m, double horizon, std::uint64_t seed) {
    switch (m.type) {
    case ModelType::poisson: return simulate_poisson(m.rates, horizon, seed);
    case ModelType::hawkes: return simulate_hawkes(HawkesParams<MatrixKernel>{m.rates, m.kernel}, horizon, seed);
    case ModelType::neyman_scott: return simulate_neyman_scott(NeymanScottParams{m.rates, m.kernel}, horizon, seed);
    }
    return {};
}

inline Vector model_stationary_rates(const ModelSpec& m) {
    switch (m.type) {
    case ModelType::poisson: return m.rates;
    case ModelType::hawkes: return stationary_rates(HawkesParams<MatrixKernel>{m.rates, m.kernel});
    case ModelType::neyman_scott: return stationary_rates(NeymanScottParams{m.rates, m.kernel});
    }
    return {};
}

// Replicate r uses seed + r.
inline std::vector<EventStream> simulate_replicates(const ModelSpec& m, double horizon, int replications,
                                                    std::uint64_t seed) {
    std::vector<EventStream> streams;
    streams.reserve(static_cast<std::size_t>(replications));
    for (int r = 0; r < replications; ++r) streams.push_back(simulate_model(m, horizon, seed + static_cast<std::uint64_t>(r)));
    return streams;
}

// ---------------------------------------------------------------- solving

struct SolveOutput {
    std::optional<KernelGrid> kernel;              // AR solvers
    std::optional<InnovationsSolution> innovations; // innovations solver
    json diagnostics;
};

inline KernelGrid solve_kernel(const DiscretisedWH& problem, SolverChoice solver, WHDiagnostics* diag = nullptr) {
    switch (solver) {
    case SolverChoice::direct: return solve_direct(problem, DirectMethod::dense, diag);
    case SolverChoice::whittle: {
        const auto sol = solve_whittle(problem);
        if (diag) *diag = diagnose(problem, sol);
        return whittle_kernel(sol, problem.kernel_grid());
    }
    case SolverChoice::bellman_krein: {
        const auto sol = integrate_bellman_krein(problem);
        if (diag) *diag = diagnose(problem, sol);
        return sol.kernel();
    }
    case SolverChoice::innovations: break;
    }
    throw Error(ErrorCode::InvalidArgument, "innovations does not produce an autoregressive kernel");
}

inline json innovations_diagnostics(const CovarianceGrid& cov, const InnovationsSolution& sol) {
    double boundary = 0.0;
    for (int n = 1; n <= sol.rows(); ++n)
        boundary = std::max(boundary, max_abs(sol.theta(n, n) * sol.V[0] - cov[n - 1].transpose()));
    json v = json::array();
    for (const auto& m : sol.V) v.push_back(vector_to_json(symmetric_eigenvalues(m)));
    return {{"boundary_residual", boundary}, {"v_eigenvalues", v}};
}

inline SolveOutput solve_covariance(const CovarianceGrid& cov, SolverChoice solver, int order, bool ridge) {
    SolveOutput out;
    if (solver == SolverChoice::innovations) {
        out.innovations = solve_innovations(cov, order);
        out.diagnostics = innovations_diagnostics(cov, *out.innovations);
        return out;
    }
    const DiscretisedWH problem(cov, order, ridge);
    WHDiagnostics diag;
    out.kernel = solve_kernel(problem, solver, &diag);
    out.diagnostics = to_json(diag);
    out.diagnostics["solver"] = to_string(solver);
    return out;
}

// ---------------------------------------------------------------- pipeline

struct PipelineResult {
    fs::path directory;
    json manifest;
    CovarianceGrid covariance;
    std::vector<Matrix> covariance_se; // empty without bootstrap
    std::optional<KernelGrid> kernel;
    std::vector<Matrix> kernel_se;     // empty without bootstrap or for innovations
    std::optional<InnovationsSolution> innovations;
    ScoreReport score;
    json recovery;
};

// simulate -> estimate -> solve -> assemble -> evaluate, writing every
// intermediate artifact and a manifest of their hashes into `directory`.
inline PipelineResult run_pipeline(const ExperimentConfig& config, std::optional<fs::path> directory = std::nullopt) {
    PipelineResult res;
    res.directory = directory.value_or(fs::path(config.output_dir));
    json artifacts = json::object();
    auto emit = [&](const std::string& rel, const std::string& text) {
        staged("write", [&] { write_text(res.directory / rel, text); });
        artifacts[rel] = hex64(fnv1a(text));
    };
    auto emit_json = [&](const std::string& rel, const json& j) { emit(rel, j.dump(2) + "\n"); };

    staged("validate", [&] { validate_config(config); });
    emit_json("config.json", to_json(config));

    const auto streams = staged("simulate", [&] {
        return simulate_replicates(config.model, config.horizon, config.replications, config.seed);
    });
    if (config.write_streams) {
        for (std::size_t r = 0; r < streams.size(); ++r) {
            char name[32];
            std::snprintf(name, sizeof name, "streams/stream_%04zu", r);
            std::string csv = "time,mark\n";
            for (std::size_t k = 0; k < streams[r].size(); ++k)
                csv += format_double(streams[r].times()[k]) + "," + std::to_string(streams[r].marks()[k]) + "\n";
            emit(std::string(name) + ".csv", csv);
            emit_json(std::string(name) + ".json", json{{"T", streams[r].horizon()}, {"d", streams[r].dim()}});
        }
    }

    const LagGrid grid(config.grid_delta, config.grid_p);
    const int order = config.effective_order();
    const std::uint64_t boot_seed = config.seed ^ 0xb007'5eed'0000'0000ull;
    std::vector<CovarianceGrid> draws;
    res.covariance = staged("estimate", [&] {
        const auto counts = count_pairs(streams, grid);
        if (config.bootstrap >= 2) draws = bootstrap_resamples(counts, config.bootstrap, boot_seed);
        return covariance_from_pair_counts(counts);
    });
    emit_json("covariance.json", to_json(res.covariance));
    if (!draws.empty()) {
        std::vector<std::vector<Matrix>> dens;
        for (const auto& c : draws) dens.emplace_back(c.density().begin(), c.density().end());
        res.covariance_se = entrywise_sd(dens);
        json se = json::array();
        for (const auto& m : res.covariance_se) se.push_back(matrix_to_json(m));
        emit_json("covariance_se.json", {{"delta", grid.step()}, {"p", grid.size()}, {"resamples", draws.size()}, {"values", se}});
    }

    const auto solved = staged("solve", [&] { return solve_covariance(res.covariance, config.solver, order, config.ridge); });
    emit_json("diagnostics.json", solved.diagnostics);
    res.kernel = solved.kernel;
    res.innovations = solved.innovations;
    if (res.kernel) {
        emit_json("kernel.json", to_json(*res.kernel));
        if (!draws.empty()) {
            res.kernel_se = staged("solve", [&] {
                std::vector<std::vector<Matrix>> ks;
                for (const auto& c : draws) {
                    const auto k = solve_kernel(DiscretisedWH(c, order, config.ridge), config.solver);
                    ks.emplace_back(k.values().begin(), k.values().end());
                }
                return entrywise_sd(ks);
            });
        }
    } else {
        emit_json("innovations.json", to_json(*res.innovations));
    }

    // Recovery against the generating model where a reference exists.
    const Vector true_rates = model_stationary_rates(config.model);
    json recovery{{"model", to_string(config.model.type)}, {"true_mean_rates", vector_to_json(true_rates)},
                  {"estimated_mean_rates", vector_to_json(res.covariance.mean_rates())}};
    if (res.kernel) {
        const KernelGrid truth = config.model.type == ModelType::hawkes ? sample_kernel(config.model.kernel, res.kernel->grid())
                                                                        : KernelGrid::zero(res.kernel->grid(), config.model.dim());
        const double err = sup_distance(res.kernel->values(), truth.values());
        const double scale = sup_norm(truth.values());
        recovery["kernel_sup_error"] = err;
        recovery["kernel_sup_norm"] = sup_norm(res.kernel->values());
        if (scale > 0.0) recovery["kernel_relative_error"] = err / scale;
        if (!res.kernel_se.empty()) {
            double worst = 0.0;
            for (std::size_t k = 0; k < res.kernel_se.size(); ++k) {
                const Matrix z = ((*res.kernel)[static_cast<int>(k)] - truth[static_cast<int>(k)]).cwiseAbs().cwiseQuotient(
                    res.kernel_se[k].cwiseMax(1e-300));
                worst = std::max(worst, z.maxCoeff());
            }
            recovery["kernel_max_abs_z"] = worst;
            recovery["kernel_se_max"] = sup_norm(res.kernel_se);
        }
    } else if (config.model.type == ModelType::neyman_scott) {
        const auto shot = sample_kernel(config.model.kernel, LagGrid(grid.step(), order));
        const double err = sup_distance(res.innovations->row_kernel(order).values(), shot.values());
        recovery["kernel_sup_error"] = err;
        recovery["kernel_sup_norm"] = sup_norm(shot.values());
        if (sup_norm(shot.values()) > 0.0) recovery["kernel_relative_error"] = err / sup_norm(shot.values());
    }
    res.recovery = recovery;
    emit_json("recovery.json", recovery);

    const Predictor pred = staged("assemble", [&] {
        return res.kernel ? assemble_predictor(ArKernel{*res.kernel}, res.covariance.mean_rates())
                          : assemble_predictor(*res.innovations, res.covariance.mean_rates());
    });

    const double eval_step = config.effective_eval_delta();
    res.score = staged("evaluate", [&] {
        std::vector<std::vector<Vector>> traces;
        const bool traced = config.model.type != ModelType::neyman_scott;
        if (traced) {
            for (std::size_t r = 0; r < streams.size(); ++r) {
                const auto times = evaluation_times(pred, streams[r], eval_step);
                if (config.model.type == ModelType::poisson) {
                    traces.emplace_back(times.size(), config.model.rates);
                } else {
                    HawkesParams<MatrixKernel> hp{config.model.rates, config.model.kernel};
                    traces.push_back(simulate_hawkes_traced(hp, config.horizon, config.seed + r, times).intensity_trace);
                }
            }
        }
        return evaluate_predictor(pred, streams, eval_step, traced ? &traces : nullptr);
    });
    emit_json("score.json", to_json(res.score));

    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < config.replications; ++r) seeds.push_back(config.seed + static_cast<std::uint64_t>(r));
    res.manifest = {{"schema_version", kSchemaVersion},
                    {"config_hash", config_hash(config)},
                    {"seeds", seeds},
                    {"bootstrap_seed", config.bootstrap >= 2 ? json(boot_seed) : json(nullptr)},
                    {"artifacts", artifacts}};
    staged("write", [&] { write_json(res.directory / "manifest.json", res.manifest); });
    return res;
}

// ---------------------------------------------------------------- bench

// Covariance of a d-variate Neyman-Scott process with `components` latent
// sources and exponential shots a_ki exp(-b_ki t):
//     C_ij(tau) = sum_k nu_k a_ki a_kj exp(-b_kj tau) / (b_ki + b_kj),  lambda_i = sum_k nu_k a_ki / b_ki.
// Asymmetric in (i, j) and a valid second-order structure by construction.
inline CovarianceGrid synthetic_covariance(int d, const LagGrid& grid, std::uint64_t seed, int components = 0) {
    require(d >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
    const int m = components > 0 ? components : d + 1;
    Philox4x32 rng(seed);
    Vector nu(m);
    Matrix a(m, d), b(m, d);
    for (int k = 0; k < m; ++k) {
        nu(k) = 0.5 + rng.uniform();
        for (int i = 0; i < d; ++i) {
            a(k, i) = 0.2 + 0.8 * rng.uniform();
            b(k, i) = 0.5 + 1.5 * rng.uniform();
        }
    }
    Vector rates = Vector::Zero(d);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < d; ++i) rates(i) += nu(k) * a(k, i) / b(k, i);
    std::vector<Matrix> density(static_cast<std::size_t>(grid.size()), Matrix::Zero(d, d));
    for (int h = 0; h < grid.size(); ++h) {
        const double tau = grid.lag(h);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < m; ++k)
                    density[static_cast<std::size_t>(h)](i, j) +=
                        nu(k) * a(k, i) * a(k, j) * std::exp(-b(k, j) * tau) / (b(k, i) + b(k, j));
    }
    return CovarianceGrid(grid, std::move(rates), std::move(density));
}

struct BenchOptions {
    std::vector<int> sizes{256, 512, 1024, 2048, 4096};
    int dim = 2;
    std::vector<SolverChoice> solvers{SolverChoice::direct, SolverChoice::whittle};
    std::uint64_t seed = 0;
    int repeats = 5;
    double delta = 0.05;
    double agreement_tolerance = 1e-6;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Least-squares fit of log y on log x with a 95% t-interval for the slope.
inline SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 3, ErrorCode::InvalidArgument, "slope fit needs at least three points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
        sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    }
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = std::log(y[k]) - f.intercept - f.slope * std::log(x[k]);
        ssr += r * r;
    }
    const double se = std::sqrt(ssr / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.ci_low = f.slope - q * se;
    f.ci_high = f.slope + q * se;
    return f;
}

struct BenchSeries {
    SolverChoice solver;
    std::vector<double> median_seconds; // per size
    SlopeFit fit;
};

struct BenchReport {
    std::vector<int> sizes;
    int dim = 0;
    int repeats = 0;
    std::vector<BenchSeries> series;
    std::vector<double> agreement; // per size: max sup-norm distance between solver kernels
    bool agreement_ok = true;
};

inline BenchReport run_bench(const BenchOptions& opt, const std::function<void(const std::string&)>& log = {}) {
    require(opt.sizes.size() >= 4, ErrorCode::ConfigError, "bench needs at least four sizes");
    require(std::is_sorted(opt.sizes.begin(), opt.sizes.end()), ErrorCode::ConfigError, "bench sizes must ascend");
    require(!opt.solvers.empty() && opt.repeats >= 1, ErrorCode::ConfigError, "bench needs solvers and repeats");
    for (auto s : opt.solvers)
        require(s != SolverChoice::innovations, ErrorCode::ConfigError, "innovations is not a kernel solver");
    BenchReport rep;
    rep.sizes = opt.sizes;
    rep.dim = opt.dim;
    rep.repeats = opt.repeats;
    for (auto s : opt.solvers) rep.series.push_back({s, {}, {}});
    for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
        const int p = opt.sizes[si];
        const auto cov = synthetic_covariance(opt.dim, LagGrid(opt.delta, p), opt.seed + si);
        const DiscretisedWH problem(cov, p);
        problem.lag_zero(); // fills the lag cache outside the timed region
        std::vector<KernelGrid> outputs;
        for (auto& series : rep.series) {
            std::vector<double> t;
            KernelGrid k;
            for (int r = 0; r < opt.repeats; ++r) {
                const auto start = std::chrono::steady_clock::now();
                k = solve_kernel(problem, series.solver);
                const auto stop = std::chrono::steady_clock::now();
                t.push_back(std::chrono::duration<double>(stop - start).count());
            }
            std::sort(t.begin(), t.end());
            const double med = t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
            series.median_seconds.push_back(med);
            outputs.push_back(std::move(k));
            if (log) log(to_string(series.solver) + " p=" + std::to_string(p) + " median " + format_double(med) + " s");
        }
        double worst = 0.0;
        for (std::size_t k = 1; k < outputs.size(); ++k)
            worst = std::max(worst, sup_distance(outputs[k].values(), outputs[0].values()));
        rep.agreement.push_back(worst);
        if (!(worst <= opt.agreement_tolerance)) rep.agreement_ok = false;
    }
    std::vector<double> x(opt.sizes.begin(), opt.sizes.end());
    for (auto& series : rep.series) series.fit = loglog_slope(x, series.median_seconds);
    return rep;
}

inline json to_json(const BenchReport& r) {
    json series = json::array();
    for (const auto& s : r.series)
        series.push_back({{"solver", to_string(s.solver)},
                          {"median_seconds", s.median_seconds},
                          {"slope", s.fit.slope},
                          {"slope_ci95", {s.fit.ci_low, s.fit.ci_high}}});
    return {{"sizes", r.sizes}, {"d", r.dim}, {"repeats", r.repeats}, {"series", series},
            {"agreement", r.agreement}, {"agreement_ok", r.agreement_ok}};
}

} // namespace blpp
