#include <algorithm>
#include <cctype>
#include <future>
#include <set>
#include <sstream>

#include "cbv/errors.hpp"
#include "cbv/report_io.hpp"

namespace cbv {

namespace {

namespace fs = std::filesystem;

// Canonical key -> file name, in the order files are written and listed.
const std::vector<std::pair<std::string, std::string>>& canonical_files() {
    static const std::vector<std::pair<std::string, std::string>> files{
        {"nodes_P", "nodes_P.csv"}, {"nodes_O", "nodes_O.csv"},   {"b_P", "b_P.csv"},
        {"v_O", "v_O.csv"},         {"v_P", "v_P.csv"},           {"O_PO", "O_PO.csv"},
        {"O_OP", "O_OP.csv"},       {"O_PP", "O_PP.csv"},         {"clearing_spec", "clearing.json"},
        {"pov", "pov.json"},        {"proof_stability", "proof_stability.txt"},
    };
    return files;
}

bool known_key(const std::string& key) {
    const auto& files = canonical_files();
    return std::any_of(files.begin(), files.end(), [&](const auto& kv) { return kv.first == key; });
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

std::string join_ids(const NodeIds& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? ", " : "") + ids[i].str();
    return out;
}

NodeIds ids_of(const std::vector<NodeRecord>& nodes) {
    NodeIds out;
    for (const auto& n : nodes) out.push_back(n.id);
    return out;
}

std::string pov_bytes(const std::optional<PovDocument>& pov) {
    if (!pov) return {};
    try {
        return emit_pov(*pov);
    } catch (const Error& e) {
        return std::string("!") + e.what();
    }
}

SparseMatrix to_sparse(const DenseMatrix& m) { return m.sparseView(0.0, 0.0); }

}  // namespace

bool operator==(const CutReportPackage& a, const CutReportPackage& b) {
    auto clearing_bytes = [](const std::optional<ClearingSpec>& c) { return c ? emit_clearing_spec(*c) : std::string(); };
    return a.manifest == b.manifest && a.nodes_P == b.nodes_P && a.nodes_O == b.nodes_O && a.b_P == b.b_P &&
           a.v_O == b.v_O && a.v_P == b.v_P && a.O_PO == b.O_PO && a.O_OP == b.O_OP && a.O_PP == b.O_PP &&
           a.clearing.has_value() == b.clearing.has_value() && clearing_bytes(a.clearing) == clearing_bytes(b.clearing) &&
           a.pov.has_value() == b.pov.has_value() && pov_bytes(a.pov) == pov_bytes(b.pov) &&
           a.stability_evidence == b.stability_evidence && a.unknown_files == b.unknown_files;
}

CutReportPackage load_package(const fs::path& directory) {
    const fs::path manifest_path = directory / "manifest.yaml";
    if (!fs::exists(manifest_path)) fail(ErrorKind::package, "no manifest.yaml in '" + directory.string() + "'");
    CutReportPackage pkg;
    pkg.manifest = parse_manifest(read_file(manifest_path));
    const Manifest& m = pkg.manifest;
    if (m.version != kManifestVersion)
        fail(ErrorKind::package, "unsupported manifest version '" + m.version + "', expected " + std::string(kManifestVersion));

    // Read and hash every listed file concurrently; verify before parsing.
    std::vector<std::pair<std::string, std::future<std::pair<std::string, std::string>>>> jobs;
    for (const auto& [key, name] : m.data_files) {
        const auto expected = m.hash(key);
        if (!expected) fail(ErrorKind::package, "manifest lists '" + key + "' without a hash entry");
        const fs::path path = directory / name;
        if (!fs::exists(path)) fail(ErrorKind::package, "data file '" + name + "' (" + key + ") is missing");
        jobs.emplace_back(key, std::async(std::launch::async, [path] {
                              std::string bytes = read_file(path);
                              std::string digest = "sha256:" + sha256_hex(bytes);
                              return std::make_pair(std::move(bytes), std::move(digest));
                          }));
    }
    std::map<std::string, std::string> contents;
    for (auto& [key, job] : jobs) {
        auto [bytes, digest] = job.get();
        const std::string name = *m.file(key);
        if (digest != *m.hash(key))
            throw IntegrityError(name, "SHA-256 mismatch on '" + name + "': manifest " + *m.hash(key) + ", file " + digest);
        contents.emplace(key, std::move(bytes));
    }

    for (const char* key : {"nodes_P", "nodes_O", "b_P", "v_O", "O_PO", "O_OP"})
        if (!contents.count(key)) fail(ErrorKind::package, std::string("manifest does not list required file '") + key + "'");
    if (m.regime == Regime::B && !contents.count("O_PP"))
        fail(ErrorKind::package, "regime B package requires O_PP.csv");

    auto name_of = [&](const char* key) { return *m.file(key); };
    pkg.nodes_P = nodes_from_csv(parse_csv(contents["nodes_P"]), name_of("nodes_P"));
    pkg.nodes_O = nodes_from_csv(parse_csv(contents["nodes_O"]), name_of("nodes_O"));
    pkg.b_P = vector_from_csv(parse_csv(contents["b_P"]), name_of("b_P"));
    pkg.v_O = vector_from_csv(parse_csv(contents["v_O"]), name_of("v_O"));
    pkg.O_PO = matrix_from_csv(parse_csv(contents["O_PO"]), name_of("O_PO"));
    pkg.O_OP = matrix_from_csv(parse_csv(contents["O_OP"]), name_of("O_OP"));
    if (contents.count("v_P")) pkg.v_P = vector_from_csv(parse_csv(contents["v_P"]), name_of("v_P"));
    if (contents.count("O_PP")) pkg.O_PP = matrix_from_csv(parse_csv(contents["O_PP"]), name_of("O_PP"));
    if (contents.count("clearing_spec")) pkg.clearing = parse_clearing_spec(contents["clearing_spec"]);
    if (contents.count("pov")) pkg.pov = parse_pov(contents["pov"]);
    if (contents.count("proof_stability")) pkg.stability_evidence = contents["proof_stability"];
    for (const auto& [key, name] : m.data_files)
        if (!known_key(key)) pkg.unknown_files.push_back(key);
    return pkg;
}

Manifest write_package(const fs::path& directory, const CutReportPackage& package) {
    fs::create_directories(directory);
    std::map<std::string, std::string> bytes;
    bytes["nodes_P"] = render_csv(nodes_to_csv(package.nodes_P));
    bytes["nodes_O"] = render_csv(nodes_to_csv(package.nodes_O));
    bytes["b_P"] = render_csv(vector_to_csv(package.b_P, "b"));
    bytes["v_O"] = render_csv(vector_to_csv(package.v_O, "v"));
    if (package.v_P) bytes["v_P"] = render_csv(vector_to_csv(*package.v_P, "v"));
    bytes["O_PO"] = render_csv(matrix_to_csv(package.O_PO, "id_P"));
    bytes["O_OP"] = render_csv(matrix_to_csv(package.O_OP, "id_O"));
    if (package.O_PP) bytes["O_PP"] = render_csv(matrix_to_csv(*package.O_PP, "id_P"));
    if (package.clearing) bytes["clearing_spec"] = emit_clearing_spec(*package.clearing);
    if (package.pov) bytes["pov"] = emit_pov(*package.pov);
    if (package.stability_evidence) bytes["proof_stability"] = *package.stability_evidence;

    Manifest m = package.manifest;
    m.version = std::string(kManifestVersion);
    m.data_files.clear();
    m.hashes.clear();
    for (const auto& [key, name] : canonical_files()) {
        auto it = bytes.find(key);
        if (it == bytes.end()) continue;
        write_file(directory / name, it->second);
        m.data_files.emplace_back(key, name);
        m.hashes.emplace_back(key, "sha256:" + sha256_hex(it->second));
    }
    write_file(directory / "manifest.yaml", emit_manifest(m));
    return m;
}

namespace {

void check_ids(ValidationReport& r, const NodeIds& got, const NodeIds& want, const std::string& where,
               const std::string& what) {
    if (got == want) return;
    r.add("D1", Severity::error, what + " ids [" + join_ids(got) + "] do not match [" + join_ids(want) + "]", where);
}

void check_duplicates(ValidationReport& r, const NodeIds& ids, const std::string& where) {
    std::set<NodeId> seen;
    for (const auto& id : ids)
        if (!seen.insert(id).second) r.add("D1", Severity::error, "duplicate node id '" + id.str() + "'", where);
}

ValidationReport dimension_findings(const CutReportPackage& p) {
    ValidationReport r;
    const NodeIds P = ids_of(p.nodes_P);
    const NodeIds O = ids_of(p.nodes_O);
    const Manifest& m = p.manifest;
    auto file = [&](const char* key, const char* fallback) { return m.file(key).value_or(fallback); };
    check_duplicates(r, P, file("nodes_P", "nodes_P.csv"));
    check_duplicates(r, O, file("nodes_O", "nodes_O.csv"));
    for (const auto& id : P)
        if (std::find(O.begin(), O.end(), id) != O.end())
            r.add("D1", Severity::error, "node '" + id.str() + "' is listed in both P and O", file("nodes_O", "nodes_O.csv"));
    check_ids(r, p.b_P.ids, P, file("b_P", "b_P.csv"), "b_P");
    check_ids(r, p.v_O.ids, O, file("v_O", "v_O.csv"), "v_O");
    if (p.v_P) check_ids(r, p.v_P->ids, P, file("v_P", "v_P.csv"), "v_P");
    check_ids(r, p.O_PO.row_ids, P, file("O_PO", "O_PO.csv"), "O_PO row");
    check_ids(r, p.O_PO.col_ids, O, file("O_PO", "O_PO.csv"), "O_PO column");
    check_ids(r, p.O_OP.row_ids, O, file("O_OP", "O_OP.csv"), "O_OP row");
    check_ids(r, p.O_OP.col_ids, P, file("O_OP", "O_OP.csv"), "O_OP column");
    if (p.O_PP) {
        check_ids(r, p.O_PP->row_ids, P, file("O_PP", "O_PP.csv"), "O_PP row");
        check_ids(r, p.O_PP->col_ids, P, file("O_PP", "O_PP.csv"), "O_PP column");
    }
    return r;
}

bool mentions(const std::vector<std::string>& notes, std::initializer_list<const char*> words) {
    for (const auto& n : notes) {
        const auto l = lower(n);
        for (auto w : words)
            if (l.find(w) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

ValidationReport validate_package(const CutReportPackage& p) {
    ValidationReport r = dimension_findings(p);
    const Manifest& m = p.manifest;
    auto file = [&](const char* key, const char* fallback) { return m.file(key).value_or(fallback); };

    // D2
    auto nonneg = [&](const LabeledMatrix& M, const std::string& where) {
        for (Eigen::Index i = 0; i < M.values.rows(); ++i)
            for (Eigen::Index j = 0; j < M.values.cols(); ++j)
                if (M.values(i, j) < 0.0) {
                    std::ostringstream msg;
                    msg << "negative share " << format_number(M.values(i, j)) << " at ("
                        << (i < Eigen::Index(M.row_ids.size()) ? M.row_ids[std::size_t(i)].str() : "?") << ", "
                        << (j < Eigen::Index(M.col_ids.size()) ? M.col_ids[std::size_t(j)].str() : "?") << ")";
                    r.add("D2", Severity::error, msg.str(), where);
                }
    };
    nonneg(p.O_PO, file("O_PO", "O_PO.csv"));
    nonneg(p.O_OP, file("O_OP", "O_OP.csv"));
    const bool negatives_justified = mentions(m.notes, {"negative"});
    auto signed_values = [&](const LabeledVector& v, const std::string& where) {
        for (Eigen::Index i = 0; i < v.values.size(); ++i)
            if (v.values[i] < 0.0 && !negatives_justified)
                r.add("D2", Severity::error,
                      "negative value for '" + v.ids[std::size_t(i)].str() + "' without a justification note", where);
    };
    signed_values(p.b_P, file("b_P", "b_P.csv"));
    signed_values(p.v_O, file("v_O", "v_O.csv"));

    // D3
    if (p.pov) {
        const Observer& o = p.pov->observer;
        if (o.units != m.currency)
            r.add("D3", Severity::error, "PoV units " + o.units + " differ from manifest currency " + m.currency, "pov.json");
        if (o.regime != m.regime)
            r.add("D3", Severity::error, "PoV regime differs from manifest regime", "pov.json");
        const NodeIds P = ids_of(p.nodes_P);
        if (!o.perimeter.empty()) {
            NodeIds a = o.perimeter, b = P;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b) r.add("D3", Severity::error, "PoV perimeter differs from nodes_P", "pov.json");
        }
    }
    if (!is_iso4217(m.currency))
        r.add("schema", Severity::error, "manifest currency '" + m.currency + "' is not ISO-4217", "manifest.yaml");
    if (m.fx_date && !is_iso_date(*m.fx_date))
        r.add("schema", Severity::error, "fx date '" + *m.fx_date + "' is not YYYY-MM-DD", "manifest.yaml");

    // D4
    if (p.O_PP) {
        const bool evidence = p.stability_evidence.has_value() || mentions(m.notes, {"stability", "inverse norm", "(i-o_pp)"});
        if (!evidence)
            r.add("D4", Severity::error, "O_PP provided without a bound on ||(I-O_PP)^-1|| (proof_stability.txt or note)",
                  file("O_PP", "O_PP.csv"));
    }

    // D5
    if (m.clearing_used && !p.clearing)
        r.add("D5", Severity::error, "manifest declares clearing but no clearing spec is attached", "manifest.yaml");
    if (p.clearing) {
        if (!m.clearing_used)
            r.add("D5", Severity::error, "clearing spec attached but manifest declares clearing unused", "manifest.yaml");
        else if (p.clearing->flows_stage != FlowStage::post_clearing)
            r.add("D5", Severity::error, "clearing used but flows are declared pre-clearing", file("clearing_spec", "clearing.json"));
        if (m.clearing_engine && *m.clearing_engine != p.clearing->engine)
            r.add("D5", Severity::warning,
                  "manifest engine '" + *m.clearing_engine + "' differs from spec engine '" + p.clearing->engine + "'",
                  file("clearing_spec", "clearing.json"));
    }

    if (p.pov) r.merge(p.pov->unknown_fields());
    for (const auto& key : p.unknown_files) r.add("schema", Severity::note, "unknown data file key '" + key + "' ignored", "manifest.yaml");
    return r;
}

CutStatistics to_cut_statistics(const CutReportPackage& p) {
    const auto dims = dimension_findings(p);
    if (!dims.passes()) {
        const auto& f = dims.findings.front();
        fail(ErrorKind::validation, f.location + ": " + f.message);
    }
    CutStatistics s;
    s.p_ids = ids_of(p.nodes_P);
    s.o_ids = ids_of(p.nodes_O);
    s.b_P = p.b_P.values;
    s.v_O = p.v_O.values;
    if (p.v_P) s.v_P = p.v_P->values;
    s.O_PO = to_sparse(p.O_PO.values);
    s.O_OP = to_sparse(p.O_OP.values);
    if (p.O_PP) s.O_PP = to_sparse(p.O_PP->values);
    s.stage = p.manifest.clearing_used ? FlowStage::post_clearing : FlowStage::pre_clearing;
    s.validate_shapes();
    return s;
}

Observer package_observer(const CutReportPackage& p) {
    if (p.pov) return p.pov->observer;
    Observer o;
    o.perimeter_ref = p.manifest.P_ref;
    o.perimeter = ids_of(p.nodes_P);
    o.units = p.manifest.currency;
    o.date = p.manifest.fx_date.value_or("");
    o.regime = p.manifest.regime;
    return o;
}

// ------------------------------------------------------------------ disclosure

std::string render_disclosure_sheet(const CutReportPackage& p, const DisclosureInputs& in) {
    const Manifest& m = p.manifest;
    const std::string& cur = m.currency;
    auto money = [&](double v) { return format_grouped(v, in.amount_decimals); };
    auto labels = [](const std::vector<NodeRecord>& nodes) {
        std::string out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            out += (i ? "; " : "") + (nodes[i].label.empty() ? nodes[i].id.str() : nodes[i].label + " (" + nodes[i].id.str() + ")");
        return out;
    };
    auto vec = [&](const LabeledVector& v) {
        std::string out = "{";
        for (Eigen::Index i = 0; i < v.values.size(); ++i) out += (i ? ", " : "") + money(v.values[i]);
        return out + "}";
    };
    auto mat = [](const LabeledMatrix& M) {
        std::string out = "{";
        for (Eigen::Index i = 0; i < M.values.rows(); ++i) {
            if (i) out += "; ";
            for (Eigen::Index j = 0; j < M.values.cols(); ++j) out += (j ? ", " : "") + format_number(M.values(i, j));
        }
        return out + "}";
    };

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("Perimeter", labels(p.nodes_P) + (m.P_ref.empty() ? "" : " [" + m.P_ref + "]"));
    rows.emplace_back("Complement", labels(p.nodes_O) + (m.O_ref.empty() ? "" : " [" + m.O_ref + "]"));
    rows.emplace_back("Control rule", m.control_rule + " + look-through: " + (m.lookthrough ? "true" : "false"));
    std::string regime = std::string(to_string(m.regime));
    if (m.regime == Regime::A && p.nodes_P.size() == 1)
        regime += " (single-node perimeter; O_PP not required)";
    else if (!p.O_PP)
        regime += " (O_PP not provided)";
    else if (in.conditioning)
        regime += " (rho(O_PP) <= " + format_number(in.conditioning->rho_estimate) + ", kappa2 " +
                  format_number(in.conditioning->kappa2) + ")";
    rows.emplace_back("Regime", regime);
    std::string fx = m.fx_provider ? *m.fx_provider : "n/a";
    for (const auto& pair : m.fx_pairs) fx += " " + pair;
    if (m.fx_date) fx += " " + *m.fx_date;
    std::string observer = "Currency: " + cur + "; FX: " + fx + "; PPP: " + (m.ppp_used ? m.ppp_source.value_or("used") : "n/a") +
                           "; SDF: " + (m.sdf_used ? m.sdf_measure.value_or("used") : "n/a");
    if (m.fx_method) observer += "; prices: " + *m.fx_method;
    rows.emplace_back("Observer", observer);
    rows.emplace_back("Border statistics", "b_P=" + vec(p.b_P) + "; v_O=" + vec(p.v_O) + "; O_PO=" + mat(p.O_PO) +
                                               "; O_OP=" + mat(p.O_OP));
    std::string clearing = "Not applied (pre-clearing flows)";
    if (m.clearing_used || in.clearing) {
        clearing = "Applied: " + (p.clearing ? p.clearing->engine : m.clearing_engine.value_or("unspecified"));
        if (in.clearing)
            clearing += ", " + std::string(to_string(in.clearing->selection)) + " fixed point, " +
                        std::to_string(in.clearing->iterations) + " iterations";
        clearing += " (post-clearing flows)";
    }
    rows.emplace_back("Clearing", clearing);
    std::string output = "W(P)=" + money(in.result.W) + " " + cur + "; T_out=" + money(in.result.T_out) + "; T_in=" +
                         money(in.result.T_in);
    rows.emplace_back("Output", output);
    if (in.fisher) {
        const auto& f = in.fisher->indices;
        std::ostringstream s;
        s << "Fisher " << in.fisher->span << ": IV_F=" << format_number(f.IV_F) << ", IP_F=" << format_number(f.IP_F)
          << ", G_F=" << format_number(f.G_F);
        rows.emplace_back("", s.str());
    }
    std::string sources = in.sources;
    for (const auto& n : m.notes) sources += (sources.empty() ? "" : "; ") + n;
    sources += (sources.empty() ? "" : "; ") + m.version;
    rows.emplace_back("Sources & versions", sources);

    std::size_t width = 0;
    for (const auto& [k, v] : rows) width = std::max(width, k.size());
    std::ostringstream out;
    for (const auto& [k, v] : rows) out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
    return out.str();
}

}  // namespace cbv
