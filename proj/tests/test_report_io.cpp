#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#ifndef CBV_FIXTURE_DIR
#error "CBV_FIXTURE_DIR must point at tests/fixtures"
#endif

using namespace cbv;
using namespace cbv::testing;

namespace fs = std::filesystem;

TEST_CASE("number formatting") {
    CHECK(format_number(84.56) == "84.56");
    CHECK(format_number(0.1 + 0.2) == "0.30000000000000004");
    CHECK(format_number(7701000000.0) == "7701000000");
    CHECK(format_grouped(7701000000.0) == "7,701,000,000");
    CHECK(format_grouped(6545183675.847, 0) == "6,545,183,676");
    CHECK(format_grouped(-1234.5) == "-1,234.5");
    CHECK(format_grouped(999) == "999");
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("CSV quoting round-trip") {
    CsvTable t;
    t.header = {"id", "label"};
    t.rows = {{"a", "plain"}, {"b", "with, comma"}, {"c", "say \"hi\""}, {"d", ""}};
    const auto text = render_csv(t);
    const auto back = parse_csv(text);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(parse_csv("id,v\r\nx,1\r\n").rows == std::vector<std::vector<std::string>>{{"x", "1"}});
    CHECK_THROWS_AS(parse_csv("id,v\n\"open,1\n"), Error);
}

TEST_CASE("ragged matrix rows are rejected") {
    CHECK_THROWS_AS(matrix_from_csv(parse_csv("id_P,X,Y\nA,0.1\n"), "O_PO.csv"), Error);
    CHECK_THROWS_AS(vector_from_csv(parse_csv("id,b\nA,abc\n"), "b_P.csv"), Error);
}

TEST_CASE("cut summary of the worked example") {
    const auto s = worked_example();
    const auto r = evaluate_regime_a(s);
    const auto doc = make_cut_summary(r, s, worked_observer(Regime::A));
    CHECK(std::abs(doc.T_out - 9.6) < 1e-12);
    CHECK(std::abs(doc.T_in - 15.04) < 1e-12);
    CHECK(std::abs(doc.consolidated_value - 84.56) < 1e-12);
    const auto text = render_cut_summary(doc);
    const auto back = parse_cut_summary(text);
    CHECK(back == doc);
    CHECK(render_cut_summary(back) == text);
    CHECK(check_cut_summary(doc).passes());
    // Key order as in the schema.
    const std::vector<std::string> keys{"perimeter", "date", "currency", "edges_PO", "edges_OP", "node_primitives",
                                        "totals", "consolidated_value", "hedge_vector_O", "missing_data"};
    std::size_t pos = 0;
    for (const auto& k : keys) {
        const auto at = text.find("\"" + k + "\"");
        REQUIRE(at != std::string::npos);
        CHECK(at >= pos);
        pos = at;
    }
}

TEST_CASE("empty cut summary") {
    CutStatistics s;
    s.p_ids = make_ids({"A"});
    s.b_P = vec({5});
    s.v_P = vec({5});
    s.v_O = Vector(0);
    s.O_PO = SparseMatrix(1, 0);
    s.O_OP = SparseMatrix(0, 1);
    const auto doc = make_cut_summary(evaluate_regime_a(s), s, worked_observer(Regime::A));
    CHECK(doc.T_out == 0.0);
    CHECK(doc.T_in == 0.0);
    CHECK(doc.consolidated_value == 5.0);
}

TEST_CASE("schema fixture from the listing") {
    const auto text = read_file(fs::path(CBV_FIXTURE_DIR) / "schema_cut_summary.json");
    const auto doc = parse_cut_summary(text);
    CHECK(doc.T_out == 123.45);
    CHECK(doc.T_in == 67.89);
    CHECK(doc.consolidated_value == 55.56);
    CHECK(format_number(doc.T_out) == "123.45");
    CHECK(format_number(doc.T_in) == "67.89");
    CHECK(format_number(doc.consolidated_value) == "55.56");
    const auto report = check_cut_summary(doc);
    CHECK(report.count("schema") == 3);  // placeholder edge types
    // Re-emission keeps every value and the key order.
    const auto again = parse_cut_summary(render_cut_summary(doc));
    CHECK(again == doc);
    CHECK(Json::parse(render_cut_summary(doc)) == Json::parse(text));
}

TEST_CASE("totals mismatch is a schema finding") {
    auto doc = parse_cut_summary(read_file(fs::path(CBV_FIXTURE_DIR) / "schema_cut_summary.json"));
    doc.T_out = 100;
    bool found = false;
    for (const auto& f : check_cut_summary(doc).findings) found = found || f.location == "totals.T_out";
    CHECK(found);
}

TEST_CASE("PoV template round-trip") {
    const auto text = read_file(fs::path(CBV_FIXTURE_DIR) / "pov_template.json");
    const auto doc = parse_pov(text);
    CHECK(doc.observer.tolerances.rounding_threshold == 1e-8);
    CHECK(doc.observer.control_rule.normalize);
    CHECK(doc.unknown_fields().empty());
    const auto emitted = emit_pov(doc);
    const auto back = parse_pov(emitted);
    CHECK(emit_pov(back) == emitted);
    CHECK(Json::parse(emitted)["tolerances"] == Json::parse(text)["tolerances"]);
}

TEST_CASE("PoV defaults and required fields") {
    Observer o;
    o.perimeter = make_ids({"A"});
    o.date = "2025-06-30";
    const auto j = Json::parse(emit_pov(o));
    CHECK(j["tolerances"]["rounding_threshold"] == 1e-8);
    CHECK(j["tolerances"]["solver_eps"] == 1e-10);
    CHECK(j["tolerances"]["max_iters"] == 10000);
    o.date.clear();
    try {
        emit_pov(o);
        FAIL("expected an emission error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::emission);
        CHECK(std::string(e.what()).find("observer.date") != std::string::npos);
    }
}

TEST_CASE("PoV for a regime B observer with option C") {
    Observer o;
    o.perimeter = make_ids({"B", "C", "H"});
    o.date = "2025-06-30";
    o.regime = Regime::B;
    o.control_rule.option = ControlOption::C_attenuated;
    o.control_rule.alpha = 0.6;
    const auto j = Json::parse(emit_pov(o));
    CHECK(j["observer"]["information_regime"] == "B");
    CHECK(j["observer"]["control_rule"]["option"] == "C");
    CHECK(j["observer"]["control_rule"]["params"]["alpha"] == 0.6);
}

TEST_CASE("unknown PoV fields are preserved as notes") {
    auto j = Json::parse(read_file(fs::path(CBV_FIXTURE_DIR) / "pov_template.json"));
    j["vendor_extension"] = {{"k", 1}};
    j["observer"]["custom"] = "x";
    const auto doc = parse_pov(j.dump());
    CHECK(doc.unknown_fields().findings.size() == 2);
    CHECK(doc.unknown_fields().passes());
    const auto again = Json::parse(emit_pov(doc));
    CHECK(again["vendor_extension"]["k"] == 1);
    CHECK(again["observer"]["custom"] == "x");
}

TEST_CASE("manifest round-trip") {
    auto p = renault_package();
    p.manifest.clearing_params = Json{{"eps", 1e-12}, {"selection", "greatest"}};
    p.manifest.data_files = {{"nodes_P", "nodes_P.csv"}};
    p.manifest.hashes = {{"nodes_P", "sha256:00"}};
    const auto text = emit_manifest(p.manifest);
    CHECK(text.rfind("version: cbv-cut-report@1.0", 0) == 0);
    CHECK(parse_manifest(text) == p.manifest);
    CHECK(emit_manifest(parse_manifest(text)) == text);
}

TEST_CASE("clearing spec round-trip") {
    ClearingSpec spec;
    ClearingProblem prob;
    prob.nodes = make_ids({"a", "b"});
    prob.classes = {mat(2, 2, {0, 100, 0, 0})};
    prob.a = vec({60, 0});
    prob.gamma = {vec({0.5, 0})};
    spec.problem = prob;
    const auto text = emit_clearing_spec(spec);
    CHECK(emit_clearing_spec(parse_clearing_spec(text)) == text);
}

TEST_CASE("package round-trip and determinism") {
    for (auto regime : {Regime::A, Regime::B}) {
        const auto pkg = worked_example_package(regime);
        const auto dir = scratch_dir(std::string("roundtrip-") + std::string(to_string(regime)));
        const Manifest written = write_package(dir, pkg);
        const auto loaded = load_package(dir);
        auto expected = pkg;
        expected.manifest = written;
        CHECK(loaded == expected);
        CHECK(validate_package(loaded).empty());
        const auto first = read_file(dir / "manifest.yaml");
        write_package(dir, loaded);
        CHECK(read_file(dir / "manifest.yaml") == first);
    }
}

TEST_CASE("Renault package loads without O_PP") {
    const auto dir = scratch_dir("renault");
    write_package(dir, renault_package());
    CHECK_FALSE(fs::exists(dir / "O_PP.csv"));
    const auto pkg = load_package(dir);
    CHECK_FALSE(pkg.O_PP.has_value());
    CHECK(validate_package(pkg).empty());
    const auto stats = to_cut_statistics(pkg);
    CHECK(evaluate_regime_a(stats).W == 7701000000.0);
}

TEST_CASE("single flipped byte is an integrity error") {
    const auto dir = scratch_dir("corrupt");
    write_package(dir, worked_example_package());
    auto bytes = read_file(dir / "O_PO.csv");
    bytes[bytes.size() / 2] ^= 0x01;
    write_file(dir / "O_PO.csv", bytes);
    try {
        load_package(dir);
        FAIL("expected an integrity error");
    } catch (const IntegrityError& e) {
        CHECK(e.file() == "O_PO.csv");
    }
}

TEST_CASE("regime B without O_PP is rejected") {
    auto pkg = worked_example_package(Regime::B);
    pkg.O_PP.reset();
    const auto dir = scratch_dir("no-opp");
    write_package(dir, pkg);
    try {
        load_package(dir);
        FAIL("expected a package error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::package);
    }
}

TEST_CASE("validation rules") {
    SUBCASE("D2 negative share") {
        auto pkg = worked_example_package();
        pkg.O_OP.values(0, 0) = -0.1;
        CHECK(validate_package(pkg).count("D2") == 1);
    }
    SUBCASE("D2 negative base needs a note") {
        auto pkg = worked_example_package();
        pkg.b_P.values[0] = -1;
        CHECK(validate_package(pkg).count("D2") == 1);
        pkg.manifest.notes.push_back("Negative base for A reflects deficit equity");
        CHECK(validate_package(pkg).count("D2") == 0);
    }
    SUBCASE("D1 header mismatch") {
        auto pkg = worked_example_package();
        pkg.O_PO.col_ids = make_ids({"X", "Z"});
        CHECK(validate_package(pkg).count("D1") == 1);
        CHECK_THROWS_AS(to_cut_statistics(pkg), Error);
    }
    SUBCASE("D3 observer mismatch") {
        auto pkg = worked_example_package();
        pkg.pov->observer.units = "USD";
        CHECK(validate_package(pkg).count("D3") == 1);
    }
    SUBCASE("D4 missing stability evidence") {
        auto pkg = worked_example_package(Regime::B);
        pkg.stability_evidence.reset();
        CHECK(validate_package(pkg).count("D4") == 1);
    }
    SUBCASE("D5 clearing consistency") {
        auto pkg = worked_example_package();
        pkg.manifest.clearing_used = true;
        CHECK(validate_package(pkg).count("D5") == 1);
        pkg.clearing = ClearingSpec{};
        pkg.clearing->flows_stage = FlowStage::pre_clearing;
        CHECK(validate_package(pkg).count("D5") == 1);
    }
}

TEST_CASE("disclosure sheet") {
    const auto pkg = renault_package();
    DisclosureInputs in;
    in.result = evaluate_regime_a(to_cut_statistics(pkg));
    in.sources = "cbv 1.0";
    const auto sheet = render_disclosure_sheet(pkg, in);
    CHECK(sheet.find("W(P)=7,701,000,000 EUR") != std::string::npos);
    CHECK(sheet.find("Not applied (pre-clearing flows)") != std::string::npos);
    const std::vector<std::string> rows{"Perimeter", "Complement", "Control rule", "Regime", "Observer",
                                        "Border statistics", "Clearing", "Output", "Sources & versions"};
    std::size_t pos = 0;
    for (const auto& r : rows) {
        const auto at = sheet.find("\n" + r + " ", pos == 0 ? 0 : pos);
        const auto first = pos == 0 && sheet.rfind(r, 0) == 0 ? 0 : at;
        REQUIRE(first != std::string::npos);
        pos = first + 1;
    }
    CHECK(sheet.find("Fisher") == std::string::npos);
    in.fisher = FisherDisclosure{"2025-07->2025-08", FisherQuad::from_values(100, 110, 105, 121),
                                 fisher_combine(elementary_indices(FisherQuad::from_values(100, 110, 105, 121)))};
    CHECK(render_disclosure_sheet(pkg, in).find("Fisher 2025-07->2025-08: IV_F=") != std::string::npos);
}
