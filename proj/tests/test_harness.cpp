#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sclab/harness.hpp>

using namespace sclab;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

json minimal_json() {
    return json{{"scenario", "tiny"},
                {"potential", {{"type", "harmonic"}}},
                {"lambda0", 1.0},
                {"eps0", 0.2},
                {"hbar", {0.3}}};
}

json tiny_sweep_json() {
    json j = minimal_json();
    j["window"] = {0.8, 1.2};
    j["resolution"] = {{"points_per_wavelength", 48.0}, {"box_margin_factor", 1.8}};
    j["checks"] = {"energy_ratios", "virial", "regions"};
    j["check_params"] = {{"virial_tol", 0.02}};
    return j;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& leaf) {
    fs::path p = fs::temp_directory_path() / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("scenario parser rejects malformed configurations") {
    json ok = minimal_json();
    CHECK_NOTHROW(parse_scenario(ok));

    json j = ok;
    j.erase("potential");
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("potential"));

    j = ok;
    j["potential"].erase("type");
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("potential.type"));

    j = ok;
    j.erase("lambda0");
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("lambda0"));

    j = ok;
    j["lambda0"] = -1.0;
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("positive"));

    j = ok;
    j["eps0"] = 1.5;
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("(0, lambda0)"));

    j = ok;
    j["hbar"] = json::array();
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("non-empty"));

    j = ok;
    j["hbar"] = {0.1, 0.2};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("strictly decreasing"));

    j = ok;
    j["hbar"] = {0.2, -0.1};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("positive"));

    j = ok;
    j["window"] = {0.5, 0.6, 0.7};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("[lo, hi]"));

    j = ok;
    j["window"] = {1.2, 0.8};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("lo < hi"));

    j = ok;
    j["output"] = {{"format", "xml"}};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("csv, json or both"));

    j = ok;
    j["checks"] = {"no_such_check"};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("valid: virial, regions"));

    j = ok;
    j["checks"] = {"separable"};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("requires a 'separable'"));

    j = ok;
    j["separable"] = {{"alpha1", 4.0}};
    CHECK_THROWS_WITH(parse_scenario(j), ContainsSubstring("u_targets"));
}

TEST_CASE("window defaults to the central half of the shell") {
    ScenarioConfig c = parse_scenario(minimal_json());
    CHECK(c.window_lo == 0.9);
    CHECK(c.window_hi == 1.1);
    CHECK(c.name == "tiny");
    CHECK(c.potential_type == "harmonic");
}

TEST_CASE("report column layout is frozen") {
    CHECK(std::string(report_csv_header) ==
          "scenario,hbar,pair_index,lambda,K,U,K_over_lambda,U_over_lambda,virial_residual,"
          "classic_residual,forbidden_mass,forbidden_potential_mass,c0,c1,c_pred,"
          "kinetic_bound_pass,potential_bound_pass,eigen_residual,grid_h,seed");
}

TEST_CASE("scenario serialization round-trips through the parser") {
    json j = tiny_sweep_json();
    j["check_params"] = {{"virial_tol", 0.002}};
    j["solver"] = {{"seed", 99}, {"tol", 1e-9}};
    j["output"] = {{"dir", "elsewhere"}, {"format", "json"}};
    j["separable"] = {{"alpha1", 4.0}, {"alpha2", 2.0}, {"u_targets", {0.4}}, {"hbar", {0.2, 0.1}}};
    ScenarioConfig a = parse_scenario(j);
    ScenarioConfig b = parse_scenario(scenario_to_json(a));

    CHECK(a.name == b.name);
    CHECK(a.potential_type == b.potential_type);
    CHECK(a.potential_params == b.potential_params);
    CHECK(a.lambda0 == b.lambda0);
    CHECK(a.eps0 == b.eps0);
    CHECK(a.window_lo == b.window_lo);
    CHECK(a.window_hi == b.window_hi);
    CHECK(a.hbars == b.hbars);
    CHECK(a.policy.points_per_wavelength == b.policy.points_per_wavelength);
    CHECK(a.policy.box_margin_factor == b.policy.box_margin_factor);
    CHECK(a.policy.max_points == b.policy.max_points);
    CHECK(a.policy.refinement == b.policy.refinement);
    CHECK(a.solver.tol == b.solver.tol);
    CHECK(a.solver.seed == b.solver.seed);
    CHECK(a.checks.virial == b.checks.virial);
    CHECK(a.checks.energy_ratios == b.checks.energy_ratios);
    CHECK(a.checks.separable == b.checks.separable);
    CHECK(a.check_params == b.check_params);
    CHECK(a.out_dir == b.out_dir);
    CHECK(a.format == b.format);
    CHECK(a.has_separable == b.has_separable);
    CHECK(a.separable.u_targets == b.separable.u_targets);
    CHECK(a.separable.hbars == b.separable.hbars);
    CHECK(a.separable.n_max == b.separable.n_max);
}

TEST_CASE("report rows round-trip through json with optional gaps") {
    ReportRow full;
    full.scenario = "s";
    full.hbar = 0.125;
    full.pair_index = 3;
    full.lambda = 1.01;
    full.K = 0.5;
    full.U = 0.51;
    full.K_over_lambda = 0.495;
    full.U_over_lambda = 0.505;
    full.virial_residual = 1e-4;
    full.classic_residual = -2e-5;
    full.forbidden_mass = 0.01;
    full.forbidden_potential_mass = 0.02;
    full.c0 = 1.6;
    full.c1 = 0.0;
    full.c_pred = 0.055;
    full.kinetic_bound_pass = true;
    full.potential_bound_pass = false;
    full.eigen_residual = 1e-9;
    full.grid_h = 0.01;
    full.seed = 42;

    ReportRow bare;
    bare.scenario = "s";
    bare.hbar = 0.5;
    bare.lambda = 0.9;

    for (const ReportRow& r : {full, bare}) {
        ReportRow back = row_from_json(row_to_json(r));
        CHECK(back.scenario == r.scenario);
        CHECK(back.hbar == r.hbar);
        CHECK(back.pair_index == r.pair_index);
        CHECK(back.lambda == r.lambda);
        CHECK(back.K == r.K);
        CHECK(back.U == r.U);
        CHECK(back.virial_residual == r.virial_residual);
        CHECK(back.classic_residual == r.classic_residual);
        CHECK(back.forbidden_mass == r.forbidden_mass);
        CHECK(back.forbidden_potential_mass == r.forbidden_potential_mass);
        CHECK(back.c0 == r.c0);
        CHECK(back.c1 == r.c1);
        CHECK(back.c_pred == r.c_pred);
        CHECK(back.kinetic_bound_pass == r.kinetic_bound_pass);
        CHECK(back.potential_bound_pass == r.potential_bound_pass);
        CHECK(back.eigen_residual == r.eigen_residual);
        CHECK(back.grid_h == r.grid_h);
        CHECK(back.seed == r.seed);
    }
}

TEST_CASE("eigenpair files round-trip bit for bit") {
    Grid g;
    g.d = 1;
    g.lo = {-2.0, 0.0};
    g.hi = {2.0, 0.0};
    g.m = {17, 1};
    ScalarField psi(g);
    for (std::size_t i = 0; i < psi.a.size(); ++i) psi.a[i] = std::sin(0.37 * double(i + 1));

    StoredPair p;
    p.hbar = 0.25;
    p.lambda = 1.0078125;
    p.residual = 3.5e-10;
    p.seed = 777;
    p.psi = psi;

    fs::path dir = fresh_dir("sclab_pair_roundtrip");
    std::string path = (dir / "pair.bin").string();
    write_pair_binary(path, p);
    StoredPair q = read_pair_binary(path);
    CHECK(q.hbar == p.hbar);
    CHECK(q.lambda == p.lambda);
    CHECK(q.residual == p.residual);
    CHECK(q.seed == p.seed);
    REQUIRE(q.psi.grid == g);
    CHECK(q.psi.a == psi.a);

    std::string junk = (dir / "junk.bin").string();
    std::ofstream(junk, std::ios::binary) << "definitely not a pair";
    CHECK_THROWS_WITH(read_pair_binary(junk), ContainsSubstring("not a pair file"));
    fs::remove_all(dir);
}

TEST_CASE("repeated runs of a scenario produce identical reports") {
    ScenarioConfig cfg = parse_scenario(tiny_sweep_json());
    ScenarioReport a = run_scenario(cfg);
    ScenarioReport b = run_scenario(cfg);
    CHECK(report_csv(a) == report_csv(b));
    CHECK(report_json(a).dump() == report_json(b).dump());
    REQUIRE(!a.rows.empty());
    CHECK(a.exit_code() == 0);
}

TEST_CASE("serialized pairs rebuild the report byte for byte") {
    ScenarioConfig cfg = parse_scenario(tiny_sweep_json());
    ScenarioReport rep = run_scenario(cfg);
    fs::path dir = fresh_dir("sclab_reemit");
    write_outputs(rep, dir.string(), "both");

    CHECK(fs::exists(dir / "report.csv"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "pairs" / "index.json"));
    std::string csv_file = slurp((dir / "report.csv").string());
    CHECK(csv_file == report_csv(rep));

    ScenarioReport back = reemit_report(dir.string());
    CHECK(report_csv(back) == report_csv(rep));
    REQUIRE(back.checks.size() == rep.checks.size());
    for (std::size_t i = 0; i < rep.checks.size(); ++i) {
        CHECK(back.checks[i].name == rep.checks[i].name);
        CHECK(back.checks[i].status == rep.checks[i].status);
    }
    fs::remove_all(dir);
}

TEST_CASE("exit codes order errors before failures") {
    ScenarioReport rep;
    rep.checks.push_back({"a", "pass", ""});
    CHECK(rep.exit_code() == 0);
    rep.checks.push_back({"b", "insufficient-data", ""});
    CHECK(rep.exit_code() == 2);
    rep.checks.push_back({"c", "fail", ""});
    CHECK(rep.exit_code() == 2);
    rep.checks.push_back({"d", "error: boom", ""});
    CHECK(rep.exit_code() == 1);
}

TEST_CASE("condition audit never invokes the window solver") {
    json j = minimal_json();
    j["hbar"] = {0.1};
    j["resolution"] = {{"points_per_wavelength", 64.0}};
    ScenarioConfig cfg = parse_scenario(j);
    std::uint64_t before = solve_invocations.load();
    ConditionsReport rep = check_conditions(cfg);
    CHECK(solve_invocations.load() == before);
    CHECK(rep.stability.pass);
    CHECK(rep.wells == 1);
    CHECK(rep.constants.hypothesis_ok);
    CHECK_THAT(rep.constants.c0, Catch::Matchers::WithinRel(1.6, 0.02));
    CHECK(rep.exit_code() == 0);
}

TEST_CASE("config loading reports missing or malformed files") {
    CHECK_THROWS_WITH(load_scenario("/nonexistent/path/x.json"),
                      ContainsSubstring("cannot open config file"));
    fs::path dir = fresh_dir("sclab_badcfg");
    std::string path = (dir / "bad.json").string();
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_WITH(load_scenario(path), ContainsSubstring("parse failure"));
    fs::remove_all(dir);
}
