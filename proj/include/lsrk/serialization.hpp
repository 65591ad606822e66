#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "lsrk/coefficients.hpp"
#include "lsrk/covariance.hpp"
#include "lsrk/monte_carlo.hpp"

namespace lsrk {

using json = nlohmann::json;

inline json to_json(const Kernel& k) {
    if (!k.is_product()) return json{{"type", "gaussian"}, {"theta", k.theta()}};
    return json{{"type", "product"}, {"left", to_json(k.left())}, {"right", to_json(k.right())}};
}

inline Kernel kernel_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "gaussian") return Kernel::gaussian(j.at("theta").get<double>());
    if (type == "product")
        return Kernel::product(kernel_from_json(j.at("left")), kernel_from_json(j.at("right")));
    throw input_error("kernel: unknown type '" + type + "'");
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json to_json(const FunctionEstimate& f) {
    return json{{"kernel", to_json(f.kernel)}, {"knots", f.knots}, {"coefficients", to_std(f.coefficients)}};
}

inline FunctionEstimate function_estimate_from_json(const json& j) {
    FunctionEstimate f;
    f.kernel = kernel_from_json(j.at("kernel"));
    f.knots = j.at("knots").get<std::vector<double>>();
    f.coefficients = to_eigen(j.at("coefficients").get<std::vector<double>>());
    if (f.knots.size() != static_cast<std::size_t>(f.coefficients.size()))
        throw input_error("function estimate: knots/coefficients length mismatch");
    return f;
}

inline json to_json(const CovarianceSet& cs) {
    json j;
    j["d1"] = cs.d1;
    j["d2"] = cs.d2;
    j["mu_y"] = to_json(cs.mu_y);
    j["mu_x"] = json::array();
    for (const auto& f : cs.mu_x) j["mu_x"].push_back(to_json(f));
    j["mu_z"] = to_std(cs.mu_z);
    j["cov_xx"] = json::array();
    for (int p1 = 0; p1 < cs.d1; ++p1)
        for (int p2 = p1; p2 < cs.d1; ++p2)
            j["cov_xx"].push_back(json{{"p1", p1 + 1}, {"p2", p2 + 1}, {"estimate", to_json(cs.xx(p1, p2))}});
    j["cov_xz"] = json::array();
    for (int p = 0; p < cs.d1; ++p)
        for (int q = 0; q < cs.d2; ++q)
            j["cov_xz"].push_back(json{{"p", p + 1}, {"q", q + 1}, {"estimate", to_json(cs.xz(p, q))}});
    j["cov_yx"] = json::array();
    for (const auto& f : cs.cov_yx) j["cov_yx"].push_back(to_json(f));
    j["cov_yz"] = json::array();
    for (const auto& f : cs.cov_yz) j["cov_yz"].push_back(to_json(f));
    j["cov_zz"] = json::array();
    for (int q1 = 0; q1 < cs.d2; ++q1) {
        json row = json::array();
        for (int q2 = 0; q2 < cs.d2; ++q2) row.push_back(cs.cov_zz(q1, q2));
        j["cov_zz"].push_back(row);
    }
    return j;
}

inline CovarianceSet covariance_set_from_json(const json& j) {
    CovarianceSet cs;
    cs.d1 = j.at("d1").get<int>();
    cs.d2 = j.at("d2").get<int>();
    cs.mu_y = function_estimate_from_json(j.at("mu_y"));
    for (const auto& f : j.at("mu_x")) cs.mu_x.push_back(function_estimate_from_json(f));
    cs.mu_z = to_eigen(j.at("mu_z").get<std::vector<double>>());
    cs.cov_xx.resize(static_cast<std::size_t>(cs.d1 * (cs.d1 + 1) / 2));
    for (const auto& e : j.at("cov_xx"))
        cs.cov_xx[CovarianceSet::xx_index(e.at("p1").get<int>() - 1, e.at("p2").get<int>() - 1, cs.d1)] =
            function_estimate_from_json(e.at("estimate"));
    cs.cov_xz.resize(static_cast<std::size_t>(cs.d1 * cs.d2));
    for (const auto& e : j.at("cov_xz"))
        cs.cov_xz[static_cast<std::size_t>((e.at("p").get<int>() - 1) * cs.d2 + (e.at("q").get<int>() - 1))] =
            function_estimate_from_json(e.at("estimate"));
    for (const auto& f : j.at("cov_yx")) cs.cov_yx.push_back(function_estimate_from_json(f));
    for (const auto& f : j.at("cov_yz")) cs.cov_yz.push_back(function_estimate_from_json(f));
    cs.cov_zz.resize(cs.d2, cs.d2);
    const auto& zz = j.at("cov_zz");
    for (int q1 = 0; q1 < cs.d2; ++q1)
        for (int q2 = 0; q2 < cs.d2; ++q2) cs.cov_zz(q1, q2) = zz.at(static_cast<std::size_t>(q1)).at(static_cast<std::size_t>(q2)).get<double>();
    return cs;
}

inline json stn_to_json(double stn) {
    if (std::isinf(stn)) return json("inf");
    return json(stn);
}

inline double stn_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        throw input_error("stn: unrecognized value '" + s + "'");
    }
    return j.get<double>();
}

inline json to_json(const SimulationConfig& c) {
    return json{{"study", c.study},       {"n", c.n},
                {"stn", stn_to_json(c.stn)}, {"replications", c.replications},
                {"seed", c.seed},         {"truncation", c.truncation},
                {"fixed_m", c.fixed_m}};
}

inline SimulationConfig simulation_config_from_json(const json& j) {
    SimulationConfig c;
    c.study = j.at("study").get<int>();
    c.n = j.at("n").get<int>();
    c.stn = stn_from_json(j.at("stn"));
    c.replications = j.at("replications").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("truncation")) c.truncation = j.at("truncation").get<int>();
    if (j.contains("fixed_m")) c.fixed_m = j.at("fixed_m").get<int>();
    return c;
}

inline json to_json(const ResolvedLambdas& l) {
    return json{{"mean_y", l.mean_y}, {"mean_x", l.mean_x}, {"xx", l.xx},
                {"xz", l.xz},         {"yx", l.yx},         {"yz", l.yz}};
}

inline json to_json(const MetricsReport& m, bool include_runtime = true) {
    json j{{"made", m.made}, {"wase", m.wase}, {"per_function_ise", m.per_function_ise}};
    if (include_runtime) j["runtime_seconds"] = m.runtime_seconds;
    return j;
}

// Aggregated simulation report. Wall-clock time is intentionally left to the
// run manifest so reports from identical seeds compare byte-for-byte.
inline json to_json(const MonteCarloReport& r) {
    json j;
    j["config"] = to_json(r.config);
    j["mean_made"] = r.mean_made;
    j["sd_made"] = r.sd_made;
    j["mean_wase"] = r.mean_wase;
    j["sd_wase"] = r.sd_wase;
    j["functions"] = r.function_names;
    j["mean_ise"] = r.mean_ise;
    j["failures"] = r.failures;
    return j;
}

struct RunManifest {
    std::string command;
    json options;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;
};

inline json to_json(const RunManifest& m) {
    return json{{"artifact_version", kVersion}, {"command", m.command},   {"options", m.options},
                {"inputs", m.inputs},           {"outputs", m.outputs},   {"wall_clock_seconds", m.wall_clock_seconds}};
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.options = j.at("options");
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return m;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw input_error("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace lsrk
