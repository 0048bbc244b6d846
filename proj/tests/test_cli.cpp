#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "cbv/cli.hpp"
#include "support.hpp"

using namespace cbv;
using namespace cbv::testing;

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "cbv");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("pwa prints the mesh") {
    const auto r = run({"pwa", "--eps", "0.01", "--gamma", "1"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "Δ_max=0.2828, N=4\n");
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"pwa", "--eps", "0.01"}).code == kExitUsage);
    CHECK(run({"compute", "--package", "x", "--regime", "C"}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("compute on the worked example matches the library") {
    const auto dir = scratch_dir("cli-worked");
    const auto pkg = worked_example_package();
    write_package(dir, pkg);
    write_file(dir / "pov.json", emit_pov(*pkg.pov));
    const auto out = dir / "cut_summary.json";
    const auto r = run({"compute", "--pov", (dir / "pov.json").string(), "--package", dir.string(), "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    const auto doc = parse_cut_summary(read_file(out));
    const auto lib = evaluate_regime_a(to_cut_statistics(load_package(dir)));
    CHECK(doc.consolidated_value == lib.W);
    CHECK(std::abs(doc.consolidated_value - 84.56) < 1e-10);
    const auto first = read_file(out);
    run({"compute", "--pov", (dir / "pov.json").string(), "--package", dir.string(), "--out", out.string()});
    CHECK(read_file(out) == first);
}

TEST_CASE("compute in regime B and with a band") {
    const auto dir = scratch_dir("cli-worked-b");
    write_package(dir, worked_example_package(Regime::B));
    const auto r = run({"compute", "--package", dir.string(), "--method", "neumann"});
    REQUIRE(r.code == kExitOk);
    const auto j = Json::parse(r.out);
    CHECK(j["consolidated_value"].get<double>() == evaluate_regime_b(to_cut_statistics(load_package(dir)), [] {
              SolverConfig c = SolverConfig::from_observer(worked_observer(Regime::B));
              c.method = SolveMethod::neumann;
              return c;
          }()).W);
    CHECK(j["solver_log"]["method"] == "neumann");
    CHECK(run({"compute", "--package", dir.string(), "--band-draws", "10"}).code == kExitUsage);
    const auto band = run({"compute", "--package", dir.string(), "--band-draws", "20", "--seed", "1"});
    CHECK(band.code == kExitOk);
    CHECK(Json::parse(band.out)["band"]["low"].get<double>() <= Json::parse(band.out)["consolidated_value"].get<double>());
}

TEST_CASE("validate reports findings and hash failures") {
    const auto dir = scratch_dir("cli-validate");
    write_package(dir, worked_example_package());
    CHECK(run({"validate", "--package", dir.string()}).code == kExitOk);
    auto bytes = read_file(dir / "b_P.csv");
    bytes.back() = bytes.back() == '\n' ? ' ' : '\n';
    write_file(dir / "b_P.csv", bytes);
    const auto r = run({"validate", "--package", dir.string()});
    CHECK(r.code == kExitFindings);
    CHECK(r.out.find("hash error b_P.csv") != std::string::npos);
    const auto js = run({"validate", "--package", dir.string(), "--format", "json"});
    CHECK(Json::parse(js.out)["findings"][0]["rule"] == "hash");
}

TEST_CASE("computation errors map to exit 2") {
    auto pkg = worked_example_package(Regime::B);
    pkg.O_PP->values = mat(3, 3, {0, 1.2, 0, 0.9, 0, 0, 0, 0, 0});
    const auto dir = scratch_dir("cli-unstable");
    write_package(dir, pkg);
    const auto r = run({"compute", "--package", dir.string()});
    CHECK(r.code == kExitComputation);
    CHECK(r.err.find("error[D4] compute:") != std::string::npos);
}

TEST_CASE("fisher, clearing, control, report") {
    const auto prev = scratch_dir("cli-prev");
    const auto curr = scratch_dir("cli-curr");
    write_package(prev, worked_example_package());
    auto next = worked_example_package();
    next.b_P.values *= 1.1;
    next.pov->observer.fx_ppp = FxPpp{1.2, "ECB", "", ""};
    write_package(curr, next);
    const auto f = run({"fisher", "--prev", prev.string(), "--curr", curr.string()});
    REQUIRE(f.code == kExitOk);
    const auto j = Json::parse(f.out);
    CHECK(j["indices"]["IP_F"].get<double>() == doctest::Approx(1.2));
    CHECK(std::abs(j["indices"]["G_F"].get<double>() -
                   j["quad"]["W_curr_currObs"].get<double>() / j["quad"]["W_prev_prevObs"].get<double>()) < 1e-12);

    ClearingSpec spec;
    ClearingProblem prob;
    prob.nodes = make_ids({"a", "b", "x"});
    prob.classes = {mat(3, 3, {0, 5, 4, 0, 0, 3, 2, 1, 0})};
    prob.a = vec({1, 1, 1});
    spec.problem = prob;
    const auto specfile = prev / "clearing_problem.json";
    write_file(specfile, emit_clearing_spec(spec));
    const auto c = run({"clearing", "--spec", specfile.string(), "--perimeter", "a,b"});
    REQUIRE(c.code == kExitOk);
    const auto cj = Json::parse(c.out);
    const auto lib = clear(prob);
    CHECK(cj["payments"][0][0].get<double>() == lib.payments[0][0]);
    CHECK(cj["flows_stage"] == "post_clearing");

    const auto shares = prev / "shares.csv";
    write_file(shares, "id,J,O1,O2,O3\nJ,0,0,0,0\nO1,0.6,0,0,0\nO2,0.3,0,0,0\nO3,0.1,0,0,0\n");
    const auto ctl = run({"control", "--shares", shares.string(), "--option", "B"});
    REQUIRE(ctl.code == kExitOk);
    CHECK(Json::parse(ctl.out)["omega"]["O1"]["J"].get<double>() == doctest::Approx(0.276));

    const auto rdir = scratch_dir("cli-renault");
    write_package(rdir, renault_package());
    const auto rep = run({"report", "--package", rdir.string()});
    REQUIRE(rep.code == kExitOk);
    CHECK(rep.out.find("W(P)=7,701,000,000 EUR") != std::string::npos);
}
