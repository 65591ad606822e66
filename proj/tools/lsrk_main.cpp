// lsrk: varying coefficient models from sparse longitudinal functional data.
//
// Subcommands:
//   fit       estimate coefficient functions from a longitudinal CSV
//   simulate  run seeded Monte Carlo benchmark studies
//   evaluate  score a coefficient table against a known truth
//   rerun     repeat a previous run from its manifest

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "lsrk/lsrk.hpp"

namespace {

using lsrk::json;

constexpr const char* kCsvSchemaHelp =
    "CSV schema (UTF-8, header row, comma-separated): subject_id (string), time (real), y (real), "
    "x1..x{d1} (real), z1..z{d2} (real). A sidecar JSON schema file may rename columns: "
    "{\"subject\":\"id\",\"time\":\"day\",\"response\":\"protime\","
    "\"predictors\":[\"bili\",\"albumin\"],\"covariates\":[\"age\"]}";

double parse_stn(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    try {
        const double v = std::stod(text);
        if (!(v > 0.0)) throw lsrk::input_error("--stn must be positive or 'inf'");
        return v;
    } catch (const lsrk::input_error&) {
        throw;
    } catch (const std::exception&) {
        throw lsrk::input_error("--stn must be a number or 'inf', got '" + text + "'");
    }
}

lsrk::LambdaSpec parse_lambda(const std::string& text, const char* flag) {
    if (text == "cv") return lsrk::LambdaSpec::cv();
    try {
        const double v = std::stod(text);
        return lsrk::LambdaSpec::fixed(v);
    } catch (const std::invalid_argument&) {
        throw lsrk::input_error(std::string(flag) + " must be a positive number or 'cv', got '" + text + "'");
    }
}

std::string lambda_to_string(const lsrk::LambdaSpec& spec) {
    if (spec.cross_validate) return "cv";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", spec.value);
    return buf;
}

double wall_seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string sanitize_cell(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return text;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string data_path;
    std::string schema_path;
    std::string out_prefix = "lsrk_fit";
    std::string lambda_mean_y = "cv", lambda_mean_x = "cv", lambda_xx = "cv", lambda_xz = "cv",
                lambda_yx = "cv", lambda_yz = "cv";
    double theta = 0.1;
    bool select_theta = false;
    int grid_size = 100;
    double grid_lo = 0.005, grid_hi = 0.995;
    int cv_folds = 5;
    std::uint64_t seed = 1;
    int threads = 0;
    std::size_t dense_cap = lsrk::kDefaultDenseCap;
    double time_lo = std::numeric_limits<double>::quiet_NaN();
    double time_hi = std::numeric_limits<double>::quiet_NaN();
    double max_time = std::numeric_limits<double>::quiet_NaN();

    json to_json() const {
        return json{{"data", data_path},       {"schema", schema_path},  {"out_prefix", out_prefix},
                    {"lambda_mean_y", lambda_mean_y}, {"lambda_mean_x", lambda_mean_x},
                    {"lambda_xx", lambda_xx},   {"lambda_xz", lambda_xz}, {"lambda_yx", lambda_yx},
                    {"lambda_yz", lambda_yz},   {"theta", theta},         {"select_theta", select_theta},
                    {"grid_size", grid_size},   {"grid_lo", grid_lo},     {"grid_hi", grid_hi},
                    {"cv_folds", cv_folds},     {"seed", seed},           {"threads", threads},
                    {"dense_cap", dense_cap},   {"time_lo", time_lo},     {"time_hi", time_hi},
                    {"max_time", max_time}};
    }

    static FitArgs from_json(const json& j) {
        FitArgs a;
        a.data_path = j.at("data").get<std::string>();
        a.schema_path = j.at("schema").get<std::string>();
        a.out_prefix = j.at("out_prefix").get<std::string>();
        a.lambda_mean_y = j.at("lambda_mean_y").get<std::string>();
        a.lambda_mean_x = j.at("lambda_mean_x").get<std::string>();
        a.lambda_xx = j.at("lambda_xx").get<std::string>();
        a.lambda_xz = j.at("lambda_xz").get<std::string>();
        a.lambda_yx = j.at("lambda_yx").get<std::string>();
        a.lambda_yz = j.at("lambda_yz").get<std::string>();
        a.theta = j.at("theta").get<double>();
        a.select_theta = j.at("select_theta").get<bool>();
        a.grid_size = j.at("grid_size").get<int>();
        a.grid_lo = j.at("grid_lo").get<double>();
        a.grid_hi = j.at("grid_hi").get<double>();
        a.cv_folds = j.at("cv_folds").get<int>();
        a.seed = j.at("seed").get<std::uint64_t>();
        a.threads = j.at("threads").get<int>();
        a.dense_cap = j.at("dense_cap").get<std::size_t>();
        a.time_lo = j.at("time_lo").get<double>();
        a.time_hi = j.at("time_hi").get<double>();
        a.max_time = j.at("max_time").get<double>();
        return a;
    }

    lsrk::SmoothingConfig smoothing() const {
        lsrk::SmoothingConfig config;
        config.lambda_mean_y = parse_lambda(lambda_mean_y, "--lambda-mean-y");
        config.lambda_mean_x = parse_lambda(lambda_mean_x, "--lambda-mean-x");
        config.lambda_xx = parse_lambda(lambda_xx, "--lambda-xx");
        config.lambda_xz = parse_lambda(lambda_xz, "--lambda-xz");
        config.lambda_yx = parse_lambda(lambda_yx, "--lambda-yx");
        config.lambda_yz = parse_lambda(lambda_yz, "--lambda-yz");
        config.cv_folds = cv_folds;
        config.seed = seed;
        config.select_theta = select_theta;
        return config;
    }
};

void run_fit(const FitArgs& args) {
    const auto start = std::chrono::steady_clock::now();

    lsrk::CsvSchema schema;
    if (!args.schema_path.empty()) schema = lsrk::CsvSchema::from_json_file(args.schema_path);
    lsrk::CsvLoadOptions load_options;
    if (!std::isnan(args.time_lo) && !std::isnan(args.time_hi))
        load_options.time_range = lsrk::TimeRange{args.time_lo, args.time_hi};
    if (!std::isnan(args.max_time)) load_options.max_time = args.max_time;
    lsrk::CsvLoadReport load_report;
    const lsrk::LongitudinalDataset data =
        lsrk::load_longitudinal_csv(args.data_path, schema, load_options, &load_report);

    lsrk::PipelineOptions pipeline;
    pipeline.smoother.dense_cap = args.dense_cap;
    pipeline.threads = args.threads > 0 ? args.threads : lsrk::default_thread_count();

    const lsrk::KernelSet kernels = lsrk::KernelSet::defaults(data.d1(), args.theta);
    const lsrk::FittedModel model = lsrk::fit_model(data, kernels, args.smoothing(), pipeline);
    const lsrk::EvaluationGrid grid = lsrk::EvaluationGrid::standard(args.grid_size, args.grid_lo, args.grid_hi);
    const lsrk::CoefficientEstimates estimates =
        lsrk::solve_coefficients(model.covariances, grid, pipeline.ridge, pipeline.threads);

    const std::string coef_path = args.out_prefix + "_coefficients.csv";
    const std::string model_path = args.out_prefix + "_model.json";
    const std::string manifest_path = args.out_prefix + "_manifest.json";

    // Annotate coefficient columns only with informative names; canonical
    // x1../z1.. columns keep the plain beta/alpha headers.
    auto informative = [](std::vector<std::string> names, const char* stem) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == stem + std::to_string(i + 1)) names[i].clear();
        return names;
    };
    lsrk::write_coefficients_csv(estimates, coef_path, informative(data.predictor_names, "x"),
                                 informative(data.covariate_names, "z"));

    json model_json;
    model_json["covariances"] = lsrk::to_json(model.covariances);
    model_json["resolved_lambdas"] = lsrk::to_json(model.resolved.lambdas);
    model_json["kernel_y"] = lsrk::to_json(model.resolved.kernels.y);
    model_json["kernel_x"] = json::array();
    for (const auto& k : model.resolved.kernels.x) model_json["kernel_x"].push_back(lsrk::to_json(k));
    model_json["time_range"] = json{{"lo", load_report.applied_range.lo}, {"hi", load_report.applied_range.hi}};
    model_json["response"] = data.response_name;
    model_json["predictors"] = data.predictor_names;
    model_json["covariates"] = data.covariate_names;
    lsrk::write_json_file(model_json, model_path);

    lsrk::RunManifest manifest;
    manifest.command = "fit";
    manifest.options = args.to_json();
    manifest.options["resolved_lambdas"] = lsrk::to_json(model.resolved.lambdas);
    manifest.inputs = {args.data_path};
    if (!args.schema_path.empty()) manifest.inputs.push_back(args.schema_path);
    manifest.outputs = {coef_path, model_path};
    manifest.wall_clock_seconds = wall_seconds_since(start);
    lsrk::write_json_file(lsrk::to_json(manifest), manifest_path);

    std::cout << "fit: n=" << data.n() << " d1=" << data.d1() << " d2=" << data.d2()
              << " N=" << data.total_observations() << "\n"
              << "wrote " << coef_path << ", " << model_path << ", " << manifest_path << "\n";
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    int study = 1;
    int n = 100;
    std::string stn = "4";
    int reps = 1;
    std::uint64_t seed = 1;
    int truncation = 50;
    int fixed_m = 0;
    std::string lambda_mean_y = "cv", lambda_mean_x = "cv", lambda_xx = "cv", lambda_xz = "cv",
                lambda_yx = "cv", lambda_yz = "cv";
    double theta = 0.1;
    int cv_folds = 5;
    bool exclude_intercept = false;
    int quad_nodes = 50;
    int threads = 0;
    std::string export_data;
    std::string out_prefix = "lsrk_sim";

    json to_json() const {
        return json{{"study", study},         {"n", n},
                    {"stn", stn},             {"reps", reps},
                    {"seed", seed},           {"truncation", truncation},
                    {"fixed_m", fixed_m},     {"lambda_mean_y", lambda_mean_y},
                    {"lambda_mean_x", lambda_mean_x}, {"lambda_xx", lambda_xx},
                    {"lambda_xz", lambda_xz}, {"lambda_yx", lambda_yx},
                    {"lambda_yz", lambda_yz}, {"theta", theta},
                    {"cv_folds", cv_folds},   {"exclude_intercept", exclude_intercept},
                    {"quad_nodes", quad_nodes}, {"threads", threads},
                    {"export_data", export_data}, {"out_prefix", out_prefix}};
    }

    static SimulateArgs from_json(const json& j) {
        SimulateArgs a;
        a.study = j.at("study").get<int>();
        a.n = j.at("n").get<int>();
        a.stn = j.at("stn").get<std::string>();
        a.reps = j.at("reps").get<int>();
        a.seed = j.at("seed").get<std::uint64_t>();
        a.truncation = j.at("truncation").get<int>();
        a.fixed_m = j.at("fixed_m").get<int>();
        a.lambda_mean_y = j.at("lambda_mean_y").get<std::string>();
        a.lambda_mean_x = j.at("lambda_mean_x").get<std::string>();
        a.lambda_xx = j.at("lambda_xx").get<std::string>();
        a.lambda_xz = j.at("lambda_xz").get<std::string>();
        a.lambda_yx = j.at("lambda_yx").get<std::string>();
        a.lambda_yz = j.at("lambda_yz").get<std::string>();
        a.theta = j.at("theta").get<double>();
        a.cv_folds = j.at("cv_folds").get<int>();
        a.exclude_intercept = j.at("exclude_intercept").get<bool>();
        a.quad_nodes = j.at("quad_nodes").get<int>();
        a.threads = j.at("threads").get<int>();
        a.export_data = j.at("export_data").get<std::string>();
        a.out_prefix = j.at("out_prefix").get<std::string>();
        return a;
    }
};

void run_simulate(const SimulateArgs& args) {
    const auto start = std::chrono::steady_clock::now();

    lsrk::SimulationConfig config;
    config.study = args.study;
    config.n = args.n;
    config.stn = parse_stn(args.stn);
    config.replications = args.reps;
    config.seed = args.seed;
    config.truncation = args.truncation;
    config.fixed_m = args.fixed_m;
    config.validate();

    lsrk::MonteCarloOptions options;
    options.smoothing.lambda_mean_y = parse_lambda(args.lambda_mean_y, "--lambda-mean-y");
    options.smoothing.lambda_mean_x = parse_lambda(args.lambda_mean_x, "--lambda-mean-x");
    options.smoothing.lambda_xx = parse_lambda(args.lambda_xx, "--lambda-xx");
    options.smoothing.lambda_xz = parse_lambda(args.lambda_xz, "--lambda-xz");
    options.smoothing.lambda_yx = parse_lambda(args.lambda_yx, "--lambda-yx");
    options.smoothing.lambda_yz = parse_lambda(args.lambda_yz, "--lambda-yz");
    options.smoothing.cv_folds = args.cv_folds;
    options.include_intercept = !args.exclude_intercept;
    options.quadrature_nodes = args.quad_nodes;
    options.threads = args.threads > 0 ? args.threads : lsrk::default_thread_count();

    const lsrk::KernelSet kernels = lsrk::kernels_for_study(config, args.theta);
    const lsrk::MonteCarloReport report = lsrk::run_monte_carlo(config, kernels, options);

    const std::string metrics_path = args.out_prefix + "_metrics.json";
    const std::string reps_path = args.out_prefix + "_replications.csv";
    const std::string manifest_path = args.out_prefix + "_manifest.json";

    lsrk::write_json_file(lsrk::to_json(report), metrics_path);

    {
        std::ofstream out(reps_path);
        if (!out) throw lsrk::input_error("cannot write '" + reps_path + "'");
        out << "replication,failed,made,wase";
        for (const auto& name : report.function_names) out << ",ise_" << name;
        out << ",error\n";
        char buf[40];
        for (const auto& rep : report.replications) {
            out << rep.index << ',' << (rep.failed ? 1 : 0);
            if (rep.failed) {
                out << ",,";
                for (std::size_t i = 0; i < report.function_names.size(); ++i) out << ',';
                out << ',' << sanitize_cell(rep.error) << "\n";
                continue;
            }
            std::snprintf(buf, sizeof(buf), "%.17g", rep.metrics.made);
            out << ',' << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", rep.metrics.wase);
            out << ',' << buf;
            for (double ise : rep.metrics.per_function_ise) {
                std::snprintf(buf, sizeof(buf), "%.17g", ise);
                out << ',' << buf;
            }
            out << ",\n";
        }
    }

    if (!args.export_data.empty()) {
        const lsrk::GeneratedData first = lsrk::generate(config, lsrk::child_seed(config.seed, 0));
        lsrk::write_longitudinal_csv(first.data, args.export_data);
    }

    lsrk::RunManifest manifest;
    manifest.command = "simulate";
    manifest.options = args.to_json();
    manifest.outputs = {metrics_path, reps_path};
    if (!args.export_data.empty()) manifest.outputs.push_back(args.export_data);
    manifest.wall_clock_seconds = wall_seconds_since(start);
    lsrk::write_json_file(lsrk::to_json(manifest), manifest_path);

    std::printf("simulate: study %d, n=%d, StN=%s, %d replication(s), %d failure(s)\n", config.study,
                config.n, args.stn.c_str(), config.replications, report.failures);
    std::printf("%-12s %12s %12s\n", "", "MADE", "WASE");
    std::printf("%-12s %12.4f %12.4f\n", "mean", report.mean_made, report.mean_wase);
    std::printf("%-12s %12.4f %12.4f\n", "sd", report.sd_made, report.sd_wase);
    std::cout << "wrote " << metrics_path << ", " << reps_path << ", " << manifest_path << "\n";
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string fit_path;
    std::string truth = "study1";
    bool exclude_intercept = false;
    int quad_nodes = 50;
    std::string out_prefix = "lsrk_eval";

    json to_json() const {
        return json{{"fit", fit_path},
                    {"truth", truth},
                    {"exclude_intercept", exclude_intercept},
                    {"quad_nodes", quad_nodes},
                    {"out_prefix", out_prefix}};
    }

    static EvaluateArgs from_json(const json& j) {
        EvaluateArgs a;
        a.fit_path = j.at("fit").get<std::string>();
        a.truth = j.at("truth").get<std::string>();
        a.exclude_intercept = j.at("exclude_intercept").get<bool>();
        a.quad_nodes = j.at("quad_nodes").get<int>();
        a.out_prefix = j.at("out_prefix").get<std::string>();
        return a;
    }
};

// Piecewise-linear view of a sampled coefficient column, clamped at the ends.
lsrk::CoefficientFunction interpolant(std::shared_ptr<const lsrk::CoefficientEstimates> est,
                                      int column /* -1: beta0, then betas, alphas */) {
    return [est, column](double t) {
        const auto& grid = est->grid;
        auto value_at = [&](std::size_t i) {
            if (column < 0) return est->beta0(static_cast<Eigen::Index>(i));
            const int d1 = static_cast<int>(est->beta.rows());
            if (column < d1) return est->beta(column, static_cast<Eigen::Index>(i));
            return est->alpha(column - d1, static_cast<Eigen::Index>(i));
        };
        if (t <= grid.front()) return value_at(0);
        if (t >= grid.back()) return value_at(grid.size() - 1);
        const auto upper = std::upper_bound(grid.begin(), grid.end(), t);
        const std::size_t hi = static_cast<std::size_t>(upper - grid.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
        return (1.0 - w) * value_at(lo) + w * value_at(hi);
    };
}

void run_evaluate(const EvaluateArgs& args) {
    const auto start = std::chrono::steady_clock::now();

    auto fit = std::make_shared<const lsrk::CoefficientEstimates>(lsrk::read_coefficients_csv(args.fit_path));
    const int d1 = static_cast<int>(fit->beta.rows());
    const int d2 = static_cast<int>(fit->alpha.rows());

    std::vector<lsrk::NamedFunction> truth;
    if (args.truth == "study1" || args.truth == "study2") {
        const lsrk::TrueCoefficients t = args.truth == "study1" ? lsrk::study1_truth() : lsrk::study2_truth();
        truth = t.functions;
        if (static_cast<int>(truth.size()) != 1 + d1 + d2)
            throw lsrk::input_error("evaluate: fit has " + std::to_string(1 + d1 + d2) +
                                    " coefficient functions but truth '" + args.truth + "' has " +
                                    std::to_string(truth.size()));
    } else {
        auto truth_est = std::make_shared<const lsrk::CoefficientEstimates>(lsrk::read_coefficients_csv(args.truth));
        if (truth_est->beta.rows() != d1 || truth_est->alpha.rows() != d2 || truth_est->grid != fit->grid)
            throw lsrk::input_error("evaluate: truth grid/columns do not match the fit table");
        truth.push_back({"beta0", interpolant(truth_est, -1)});
        for (int p = 0; p < d1; ++p) truth.push_back({"beta" + std::to_string(p + 1), interpolant(truth_est, p)});
        for (int q = 0; q < d2; ++q)
            truth.push_back({"alpha" + std::to_string(q + 1), interpolant(truth_est, d1 + q)});
    }

    std::vector<lsrk::CoefficientFunction> estimate;
    estimate.push_back(interpolant(fit, -1));
    for (int c = 0; c < d1 + d2; ++c) estimate.push_back(interpolant(fit, c));

    std::vector<lsrk::NamedFunction> truth_used = truth;
    std::vector<lsrk::CoefficientFunction> est_used = estimate;
    if (args.exclude_intercept) {
        truth_used.erase(truth_used.begin());
        est_used.erase(est_used.begin());
    }

    lsrk::MetricsReport report;
    report.made = lsrk::made(truth_used, est_used, args.quad_nodes);
    report.wase = lsrk::wase(truth_used, est_used, args.quad_nodes);
    report.per_function_ise = lsrk::integrated_squared_errors(truth, estimate, args.quad_nodes);
    report.runtime_seconds = wall_seconds_since(start);

    const std::string metrics_path = args.out_prefix + "_metrics.json";
    const std::string manifest_path = args.out_prefix + "_manifest.json";
    lsrk::write_json_file(lsrk::to_json(report, /*include_runtime=*/false), metrics_path);

    lsrk::RunManifest manifest;
    manifest.command = "evaluate";
    manifest.options = args.to_json();
    manifest.inputs = {args.fit_path};
    if (args.truth != "study1" && args.truth != "study2") manifest.inputs.push_back(args.truth);
    manifest.outputs = {metrics_path};
    manifest.wall_clock_seconds = report.runtime_seconds;
    lsrk::write_json_file(lsrk::to_json(manifest), manifest_path);

    std::printf("%-12s %12s\n", "metric", "value");
    std::printf("%-12s %12.6f\n", "MADE", report.made);
    std::printf("%-12s %12.6f\n", "WASE", report.wase);
    for (std::size_t i = 0; i < truth.size(); ++i)
        std::printf("%-12s %12.6f\n", ("ISE " + truth[i].name).c_str(), report.per_function_ise[i]);
    std::cout << "wrote " << metrics_path << ", " << manifest_path << "\n";
}

// ---------------------------------------------------------------------------

void run_rerun(const std::string& manifest_path, const std::string& out_prefix_override) {
    const lsrk::RunManifest manifest = lsrk::manifest_from_json(lsrk::read_json_file(manifest_path));
    if (manifest.command == "fit") {
        FitArgs args = FitArgs::from_json(manifest.options);
        if (!out_prefix_override.empty()) args.out_prefix = out_prefix_override;
        run_fit(args);
    } else if (manifest.command == "simulate") {
        SimulateArgs args = SimulateArgs::from_json(manifest.options);
        if (!out_prefix_override.empty()) args.out_prefix = out_prefix_override;
        run_simulate(args);
    } else if (manifest.command == "evaluate") {
        EvaluateArgs args = EvaluateArgs::from_json(manifest.options);
        if (!out_prefix_override.empty()) args.out_prefix = out_prefix_override;
        run_evaluate(args);
    } else {
        throw lsrk::input_error("rerun: unknown command '" + manifest.command + "' in manifest");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Varying coefficient models for sparse longitudinal functional data"};
    app.set_version_flag("--version", lsrk::kVersion);
    app.require_subcommand(1);
    app.footer(kCsvSchemaHelp);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "Estimate coefficient functions from a longitudinal CSV");
    fit->add_option("--data", fit_args.data_path, "Input CSV")->required();
    fit->add_option("--schema", fit_args.schema_path, "Sidecar JSON schema renaming columns");
    fit->add_option("--out-prefix", fit_args.out_prefix, "Output path prefix");
    fit->add_option("--lambda-mean-y", fit_args.lambda_mean_y, "Smoothing parameter or 'cv'");
    fit->add_option("--lambda-mean-x", fit_args.lambda_mean_x, "Smoothing parameter or 'cv'");
    fit->add_option("--lambda-xx", fit_args.lambda_xx, "Smoothing parameter or 'cv'");
    fit->add_option("--lambda-xz", fit_args.lambda_xz, "Smoothing parameter or 'cv'");
    fit->add_option("--lambda-yx", fit_args.lambda_yx, "Smoothing parameter or 'cv'");
    fit->add_option("--lambda-yz", fit_args.lambda_yz, "Smoothing parameter or 'cv'");
    fit->add_option("--theta", fit_args.theta, "Gaussian kernel bandwidth (per process)");
    fit->add_flag("--select-theta", fit_args.select_theta, "Select bandwidths by CV over {0.05,0.1,0.2}");
    fit->add_option("--grid-size", fit_args.grid_size, "Evaluation grid size");
    fit->add_option("--grid-lo", fit_args.grid_lo, "Evaluation grid lower end");
    fit->add_option("--grid-hi", fit_args.grid_hi, "Evaluation grid upper end");
    fit->add_option("--cv-folds", fit_args.cv_folds, "Cross-validation folds");
    fit->add_option("--seed", fit_args.seed, "Seed for CV fold assignment");
    fit->add_option("--threads", fit_args.threads, "Worker threads (0 = hardware)");
    fit->add_option("--dense-cap", fit_args.dense_cap, "Largest N solved with a dense Gram matrix");
    fit->add_option("--time-lo", fit_args.time_lo, "Original-scale time mapped to 0");
    fit->add_option("--time-hi", fit_args.time_hi, "Original-scale time mapped to 1");
    fit->add_option("--max-time", fit_args.max_time, "Drop rows with original-scale time above this");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Run seeded Monte Carlo benchmark studies");
    simulate->add_option("--study", sim_args.study, "Study design: 1 or 2")->required();
    simulate->add_option("--n", sim_args.n, "Subjects per replication");
    simulate->add_option("--stn", sim_args.stn, "Signal-to-noise ratio (number or 'inf')");
    simulate->add_option("--reps", sim_args.reps, "Replications");
    simulate->add_option("--seed", sim_args.seed, "Master seed");
    simulate->add_option("--truncation", sim_args.truncation, "Basis terms kept (<= 50)");
    simulate->add_option("--fixed-m", sim_args.fixed_m, "Pin every M_i to this value (0 = design default)");
    simulate->add_option("--lambda-mean-y", sim_args.lambda_mean_y, "Smoothing parameter or 'cv'");
    simulate->add_option("--lambda-mean-x", sim_args.lambda_mean_x, "Smoothing parameter or 'cv'");
    simulate->add_option("--lambda-xx", sim_args.lambda_xx, "Smoothing parameter or 'cv'");
    simulate->add_option("--lambda-xz", sim_args.lambda_xz, "Smoothing parameter or 'cv'");
    simulate->add_option("--lambda-yx", sim_args.lambda_yx, "Smoothing parameter or 'cv'");
    simulate->add_option("--lambda-yz", sim_args.lambda_yz, "Smoothing parameter or 'cv'");
    simulate->add_option("--theta", sim_args.theta, "Gaussian kernel bandwidth");
    simulate->add_option("--cv-folds", sim_args.cv_folds, "Cross-validation folds");
    simulate->add_flag("--exclude-intercept", sim_args.exclude_intercept,
                       "Leave beta0 out of MADE/WASE");
    simulate->add_option("--quad-nodes", sim_args.quad_nodes, "Gauss-Legendre nodes for the metrics");
    simulate->add_option("--threads", sim_args.threads, "Worker threads (0 = hardware); never affects results");
    simulate->add_option("--export-data", sim_args.export_data, "Also write the first replication's dataset CSV");
    simulate->add_option("--out-prefix", sim_args.out_prefix, "Output path prefix");

    EvaluateArgs eval_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score a coefficient table against a truth");
    evaluate->add_option("--fit", eval_args.fit_path, "Coefficient CSV produced by fit")->required();
    evaluate->add_option("--truth", eval_args.truth, "study1, study2, or a sampled-values CSV");
    evaluate->add_flag("--exclude-intercept", eval_args.exclude_intercept, "Leave beta0 out of MADE/WASE");
    evaluate->add_option("--quad-nodes", eval_args.quad_nodes, "Gauss-Legendre nodes");
    evaluate->add_option("--out-prefix", eval_args.out_prefix, "Output path prefix");

    std::string manifest_path, rerun_prefix;
    CLI::App* rerun = app.add_subcommand("rerun", "Repeat a previous run from its manifest");
    rerun->add_option("--manifest", manifest_path, "Manifest JSON from a previous run")->required();
    rerun->add_option("--out-prefix", rerun_prefix, "Override the output prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (fit->parsed()) run_fit(fit_args);
        if (simulate->parsed()) run_simulate(sim_args);
        if (evaluate->parsed()) run_evaluate(eval_args);
        if (rerun->parsed()) run_rerun(manifest_path, rerun_prefix);
        return 0;
    } catch (const lsrk::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const lsrk::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
