#include <catch2/catch_amalgamated.hpp>

#include "lsrk/serialization.hpp"
#include "lsrk/simulation.hpp"

using namespace lsrk;

TEST_CASE("kernel json round trip", "[serialization]") {
    const Kernel g = Kernel::gaussian(0.12345678901234567);
    const Kernel back = kernel_from_json(to_json(g));
    CHECK(back.theta() == g.theta());
    CHECK_FALSE(back.is_product());

    const Kernel p = Kernel::product(Kernel::gaussian(0.1), Kernel::gaussian(0.2));
    const Kernel pback = kernel_from_json(to_json(p));
    CHECK(pback.is_product());
    CHECK(pback.left().theta() == 0.1);
    CHECK(pback.right().theta() == 0.2);

    CHECK_THROWS_AS(kernel_from_json(json{{"type", "sobolev"}}), input_error);
}

TEST_CASE("function estimate json round trip is exact", "[serialization]") {
    FunctionEstimate f;
    f.kernel = Kernel::product(Kernel::gaussian(0.1), Kernel::gaussian(0.1));
    f.knots = {0.1, 0.2, 1.0 / 3.0};
    f.coefficients.resize(3);
    f.coefficients << 1.0 / 7.0, -2.5e-13, 3.0;
    const FunctionEstimate back = function_estimate_from_json(to_json(f));
    CHECK(back.knots == f.knots);
    CHECK(back.coefficients == f.coefficients);
    for (double t : {0.0, 0.4, 0.9}) CHECK(back(t) == f(t));
}

TEST_CASE("covariance set json round trip preserves evaluations", "[serialization]") {
    SimulationConfig config;
    config.study = 2;
    config.n = 12;
    config.stn = 8.0;
    const GeneratedData gen = generate(config, 3);
    const CovarianceSet cs = estimate_covariance_set(gen.data, KernelSet::defaults(2), ResolvedLambdas{});
    const CovarianceSet back = covariance_set_from_json(to_json(cs));
    CHECK(back.d1 == cs.d1);
    CHECK(back.d2 == cs.d2);
    CHECK(back.cov_zz == cs.cov_zz);
    for (double t : {0.1, 0.5, 0.9}) {
        CHECK(back.mu_y(t) == cs.mu_y(t));
        CHECK(back.xx(0, 1)(t) == cs.xx(0, 1)(t));
        CHECK(back.xz(1, 0)(t) == cs.xz(1, 0)(t));
        CHECK(back.yx(1)(t) == cs.yx(1)(t));
        CHECK(back.yz(0)(t) == cs.yz(0)(t));
        CHECK(back.mu_z == cs.mu_z);
    }
}

TEST_CASE("stn serializes infinity as a string", "[serialization]") {
    SimulationConfig c;
    c.stn = std::numeric_limits<double>::infinity();
    const json j = to_json(c);
    CHECK(j["stn"] == "inf");
    const SimulationConfig back = simulation_config_from_json(j);
    CHECK(std::isinf(back.stn));

    c.stn = 8.0;
    CHECK(simulation_config_from_json(to_json(c)).stn == 8.0);
    CHECK_THROWS_AS(stn_from_json(json("bogus")), input_error);
}

TEST_CASE("manifest json round trip", "[serialization]") {
    RunManifest m;
    m.command = "simulate";
    m.options = json{{"study", 1}, {"n", 100}};
    m.inputs = {};
    m.outputs = {"a_metrics.json", "a_replications.csv"};
    m.wall_clock_seconds = 1.25;
    const RunManifest back = manifest_from_json(to_json(m));
    CHECK(back.command == m.command);
    CHECK(back.options == m.options);
    CHECK(back.outputs == m.outputs);
    CHECK(back.wall_clock_seconds == m.wall_clock_seconds);
    CHECK(to_json(m)["artifact_version"] == kVersion);
}

TEST_CASE("identical reports serialize to identical bytes", "[serialization]") {
    MonteCarloReport r;
    r.config.study = 1;
    r.config.n = 50;
    r.config.stn = 4.0;
    r.mean_made = 0.123456789012345;
    r.sd_made = 0.01;
    r.mean_wase = 0.05;
    r.sd_wase = 0.002;
    r.function_names = {"beta0", "beta1"};
    r.mean_ise = {0.1, 0.2};
    r.failures = 0;
    r.runtime_seconds = 123.0;  // must not appear in the serialized report
    const std::string a = to_json(r).dump(2);
    const std::string b = to_json(r).dump(2);
    CHECK(a == b);
    CHECK(a.find("runtime") == std::string::npos);
}
