#pragma once

#include "blpp/core.hpp"
#include "blpp/innovations.hpp"
#include "blpp/predict.hpp"
#include "blpp/wh_solvers.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace blpp {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- text files

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------- matrices

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j, int d) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw Error(ErrorCode::ConfigError, "expected a " + std::to_string(d) + " x " + std::to_string(d) + " matrix");
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_array() || static_cast<int>(j[static_cast<std::size_t>(i)].size()) != d)
            throw Error(ErrorCode::ConfigError, "matrix row has the wrong length");
        for (int k = 0; k < d; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vector vector_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::ConfigError, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

// Accessor that reports missing keys as configuration errors.
inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ConfigError, std::string("missing field \"") + key + "\"");
    return j.at(key);
}

template <class T>
T get_field(const json& j, const char* key) {
    try {
        return field(j, key).get<T>();
    } catch (const json::type_error&) {
        throw Error(ErrorCode::ConfigError, std::string("field \"") + key + "\" has the wrong type");
    }
}

// ---------------------------------------------------------------- event streams

// CSV `time,mark` plus a sidecar `<stem>.json` holding {"T": ..., "d": ...}.
inline fs::path sidecar_path(const fs::path& csv) {
    fs::path p = csv;
    return p.replace_extension(".json");
}

inline void write_stream(const fs::path& csv, const EventStream& stream) {
    std::string text = "time,mark\n";
    const auto t = stream.times();
    const auto m = stream.marks();
    for (std::size_t k = 0; k < t.size(); ++k) text += format_double(t[k]) + "," + std::to_string(m[k]) + "\n";
    write_text(csv, text);
    json meta{{"T", stream.horizon()}, {"d", stream.dim()}};
    if (stream.origin() != 0.0) meta["origin"] = stream.origin();
    write_json(sidecar_path(csv), meta);
}

inline EventStream read_stream(const fs::path& csv) {
    const json meta = read_json(sidecar_path(csv));
    const double horizon = get_field<double>(meta, "T");
    const int d = get_field<int>(meta, "d");
    const double origin = meta.value("origin", 0.0);
    std::istringstream in(read_text(csv));
    std::string line;
    if (!std::getline(in, line) || line.rfind("time,mark", 0) != 0)
        throw Error(ErrorCode::IoError, csv.string() + ": expected header time,mark");
    std::vector<double> times;
    std::vector<int> marks;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw Error(ErrorCode::IoError, csv.string() + ":" + std::to_string(lineno) + ": expected time,mark");
        try {
            times.push_back(std::stod(line.substr(0, comma)));
            marks.push_back(std::stoi(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, csv.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return validate_stream(std::move(times), std::move(marks), horizon, d, origin);
}

// ---------------------------------------------------------------- grids

inline json to_json(const KernelGrid& k) {
    json values = json::array();
    for (const auto& v : k.values()) values.push_back(matrix_to_json(v));
    return {{"delta", k.grid().step()}, {"p", k.grid().size()}, {"d", k.dim()}, {"values", values},
            {"supports", matrix_to_json(k.supports())}};
}

inline KernelGrid kernel_grid_from_json(const json& j) {
    const LagGrid grid(get_field<double>(j, "delta"), get_field<int>(j, "p"));
    const int d = get_field<int>(j, "d");
    const json& values = field(j, "values");
    if (!values.is_array() || static_cast<int>(values.size()) != grid.size())
        throw Error(ErrorCode::ConfigError, "kernel grid needs p value matrices");
    std::vector<Matrix> v;
    for (const auto& m : values) v.push_back(matrix_from_json(m, d));
    Matrix supports = j.contains("supports") ? matrix_from_json(j.at("supports"), d) : Matrix::Constant(d, d, grid.span());
    return KernelGrid(grid, std::move(v), std::move(supports));
}

inline json to_json(const CovarianceGrid& c) {
    json values = json::array();
    for (const auto& v : c.density()) values.push_back(matrix_to_json(v));
    return {{"delta", c.grid().step()}, {"p", c.grid().size()}, {"d", c.dim()}, {"values", values},
            {"mean_rates", vector_to_json(c.mean_rates())}};
}

inline CovarianceGrid covariance_grid_from_json(const json& j) {
    const LagGrid grid(get_field<double>(j, "delta"), get_field<int>(j, "p"));
    const int d = get_field<int>(j, "d");
    const json& values = field(j, "values");
    if (!values.is_array() || static_cast<int>(values.size()) != grid.size())
        throw Error(ErrorCode::ConfigError, "covariance grid needs p value matrices");
    std::vector<Matrix> v;
    for (const auto& m : values) v.push_back(matrix_from_json(m, d));
    Vector rates = vector_from_json(field(j, "mean_rates"));
    if (rates.size() != d) throw Error(ErrorCode::ConfigError, "mean_rates must have d entries");
    return CovarianceGrid(grid, std::move(rates), std::move(v));
}

// Theta stored as explicit (t, h) entries, rows in ascending t.
inline json to_json(const InnovationsSolution& s) {
    json theta = json::array();
    for (int n = 1; n <= s.rows(); ++n)
        for (int h = 1; h <= n; ++h) theta.push_back({{"t", n}, {"h", h}, {"value", matrix_to_json(s.theta(n, h))}});
    json v = json::array();
    for (const auto& m : s.V) v.push_back(matrix_to_json(m));
    return {{"delta", s.step()}, {"rows", s.rows()}, {"d", s.V.empty() ? 0 : s.V.front().rows()}, {"theta", theta},
            {"V", v}};
}

inline InnovationsSolution innovations_from_json(const json& j) {
    const int rows = get_field<int>(j, "rows");
    const int d = get_field<int>(j, "d");
    InnovationsSolution s(rows, get_field<double>(j, "delta"));
    for (const auto& e : field(j, "theta")) {
        const int n = get_field<int>(e, "t"), h = get_field<int>(e, "h");
        if (n < 1 || n > rows || h < 1 || h > n) throw Error(ErrorCode::ConfigError, "theta index out of range");
        s.theta(n, h) = matrix_from_json(field(e, "value"), d);
    }
    for (const auto& m : field(j, "V")) s.V.push_back(matrix_from_json(m, d));
    if (static_cast<int>(s.V.size()) != rows + 1) throw Error(ErrorCode::ConfigError, "V needs rows + 1 entries");
    return s;
}

// ---------------------------------------------------------------- reports

inline json to_json(const WHDiagnostics& d) {
    json v = json::array();
    for (const auto& e : d.v_eigenvalues) v.push_back(vector_to_json(e));
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return {{"residual", num(d.residual)},
            {"rcond", num(d.rcond)},
            {"gamma_norms", d.gamma_norms},
            {"v_eigenvalues", v},
            {"kernel_min", num(d.kernel_min)},
            {"integral_spectral_radius", num(d.integral_radius)}};
}

inline json to_json(const ScoreReport& r) {
    json j{{"n_streams", r.n_streams},
           {"eval_delta", r.eval_step},
           {"mean_rates", vector_to_json(r.mean_rates)},
           {"mean_prediction", vector_to_json(r.mean_prediction)},
           {"mean_prediction_se", vector_to_json(r.mean_prediction_se)},
           {"bias", vector_to_json(r.bias)},
           {"count_mse_per_bin", r.count_mse_per_bin},
           {"count_mse_per_bin_se", r.count_mse_per_bin_se},
           {"count_mse_per_time", r.count_mse_per_time},
           {"count_mse_per_time_se", r.count_mse_per_time_se}};
    if (r.intensity_mse) {
        j["intensity_mse"] = *r.intensity_mse;
        j["intensity_mse_se"] = *r.intensity_mse_se;
    }
    return j;
}

inline json to_json(const Error& e) {
    json fields = json::object();
    for (const auto& [k, v] : e.fields()) fields[k] = std::isfinite(v) ? json(v) : json(nullptr);
    json j{{"error", std::string(code_name(e.code()))},
           {"kind", e.kind() == ErrorKind::numeric ? "numeric" : e.kind() == ErrorKind::io ? "io" : "config"},
           {"message", e.detail()},
           {"fields", fields}};
    if (!e.stage().empty()) j["stage"] = e.stage();
    return j;
}

// Per-time predictions `t,coordinate,lambda_hat[,lambda_true]`.
inline std::string prediction_csv(std::span<const double> times, const std::vector<Vector>& predicted,
                                  const std::vector<Vector>* truth = nullptr) {
    std::string text = truth ? "t,coordinate,lambda_hat,lambda_true\n" : "t,coordinate,lambda_hat\n";
    for (std::size_t m = 0; m < times.size(); ++m)
        for (Eigen::Index i = 0; i < predicted[m].size(); ++i) {
            text += format_double(times[m]) + "," + std::to_string(i) + "," + format_double(predicted[m](i));
            if (truth) text += "," + format_double((*truth)[m](i));
            text += "\n";
        }
    return text;
}

// 64-bit FNV-1a, used for manifest hashes.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

} // namespace blpp
