// End-to-end checks of the command-line tool: exit-code classes, output
// round-trips, and the simulate -> fit -> evaluate flow.
//
//   cli_checks --cli <path-to-lsrk-binary>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "lsrk/lsrk.hpp"

namespace {

std::string g_cli;
int g_failures = 0;

void expect(bool ok, const std::string& what) {
    std::printf("  %s | %s\n", ok ? "ok  " : "FAIL", what.c_str());
    if (!ok) ++g_failures;
}

int run(const std::string& args) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--cli" && i + 1 < argc) g_cli = argv[i + 1];
    if (g_cli.empty()) {
        std::cerr << "usage: cli_checks --cli <lsrk binary>\n";
        return 2;
    }
    const auto dir = std::filesystem::temp_directory_path() / "lsrk_cli_checks";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string d = dir.string() + "/";

    // Exit-code classes.
    expect(run("fit --data " + d + "missing.csv --out-prefix " + d + "x") == 1, "missing input file exits 1");
    expect(run("simulate --study 7 --out-prefix " + d + "x") == 1, "invalid study id exits 1");
    expect(run("simulate --study 1 --n 8 --stn -2 --reps 1 --out-prefix " + d + "x") == 1,
           "negative StN exits 1");
    expect(run("fit --data " + d + "missing.csv --lambda-xx bogus --out-prefix " + d + "x") == 1,
           "malformed lambda exits 1");

    // stn accepts the infinity literal.
    expect(run("simulate --study 1 --n 16 --stn inf --reps 1 --seed 4 --cv-folds 4 --out-prefix " + d + "inf") == 0,
           "stn=inf accepted");

    // simulate -> export -> fit -> all outputs parse back.
    expect(run("simulate --study 2 --n 30 --stn 8 --reps 1 --seed 5 --cv-folds 5 --export-data " + d +
               "demo.csv --out-prefix " + d + "sim") == 0,
           "simulate with --export-data exits 0");
    expect(run("fit --data " + d + "demo.csv --seed 3 --grid-size 40 --out-prefix " + d + "fit") == 0,
           "fit on the exported dataset exits 0");
    try {
        const auto est = lsrk::read_coefficients_csv(d + "fit_coefficients.csv");
        expect(est.grid.size() == 40 && est.beta.rows() == 2 && est.alpha.rows() == 1,
               "coefficient table has t, beta0, beta1, beta2, alpha1 on the requested grid");
        const auto model = lsrk::read_json_file(d + "fit_model.json");
        const auto cs = lsrk::covariance_set_from_json(model.at("covariances"));
        expect(cs.d1 == 2 && cs.d2 == 1 && cs.cov_xx.size() == 3, "model JSON parses back into a covariance set");
        const auto manifest = lsrk::manifest_from_json(lsrk::read_json_file(d + "fit_manifest.json"));
        expect(manifest.command == "fit" && manifest.outputs.size() == 2, "fit manifest parses back");
    } catch (const std::exception& e) {
        expect(false, std::string("outputs parse back: ") + e.what());
    }

    // evaluate: a fit scored against itself as sampled truth is exactly zero.
    expect(run("evaluate --fit " + d + "fit_coefficients.csv --truth " + d + "fit_coefficients.csv" +
               " --out-prefix " + d + "self") == 0,
           "evaluate against own table exits 0");
    try {
        const auto metrics = lsrk::read_json_file(d + "self_metrics.json");
        expect(metrics.at("made").get<double>() == 0.0 && metrics.at("wase").get<double>() == 0.0,
               "self-evaluation gives MADE = WASE = 0");
    } catch (const std::exception& e) {
        expect(false, std::string("self-evaluation metrics: ") + e.what());
    }
    expect(run("evaluate --fit " + d + "fit_coefficients.csv --truth study2 --out-prefix " + d + "ev") == 0,
           "evaluate against the built-in truth exits 0");

    // Grid/column mismatch between fit and sampled truth exits 1.
    expect(run("evaluate --fit " + d + "fit_coefficients.csv --truth " + d + "inf_replications.csv --out-prefix " +
               d + "bad") == 1,
           "mismatched truth table exits 1");
    expect(run("evaluate --fit " + d + "fit_coefficients.csv --truth study1 --out-prefix " + d + "bad2") == 1,
           "structurally wrong built-in truth exits 1");

    std::filesystem::remove_all(dir);
    if (g_failures == 0) std::printf("cli_checks: all checks passed\n");
    return g_failures == 0 ? 0 : 1;
}
