#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "cbv/errors.hpp"
#include "cbv/report_io.hpp"

namespace cbv {

std::string format_number(double value) {
    if (!std::isfinite(value)) fail(ErrorKind::emission, "cannot render a non-finite number");
    // Plain notation between 1e-6 and 1e21, shortest round-trip digits either way.
    const double mag = std::abs(value);
    const bool plain = mag == 0.0 || (mag >= 1e-6 && mag < 1e21);
    char buf[64];
    auto res = plain ? std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed)
                     : std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_grouped(double value, std::optional<int> decimals) {
    if (!std::isfinite(value)) fail(ErrorKind::emission, "cannot render a non-finite number");
    std::string text;
    if (decimals) {
        char buf[128];
        auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, *decimals);
        text.assign(buf, res.ptr);
    } else {
        char buf[128];
        auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
        text.assign(buf, res.ptr);
    }
    std::string sign;
    if (!text.empty() && text[0] == '-') {
        sign = "-";
        text.erase(0, 1);
    }
    const auto dot = text.find('.');
    std::string integer = text.substr(0, dot);
    const std::string frac = dot == std::string::npos ? "" : text.substr(dot);
    std::string grouped;
    for (std::size_t i = 0; i < integer.size(); ++i) {
        if (i > 0 && (integer.size() - i) % 3 == 0) grouped += ',';
        grouped += integer[i];
    }
    return sign + grouped + frac;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::integrity, "SHA-256 computation failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::package, "cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::package, "cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ------------------------------------------------------------------ CSV

CsvTable parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) fail(ErrorKind::package, "unterminated quoted CSV field");
    if (field_started || !record.empty()) end_record();
    CsvTable table;
    if (records.empty()) return table;
    table.header = std::move(records.front());
    table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
    return table;
}

namespace {

std::string csv_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void render_record(std::ostringstream& out, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out << ',';
        out << csv_field(r[i]);
    }
    out << '\n';
}

double parse_double(const std::string& text, std::string_view file) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    if (b < e && *b == '+') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e || b == e)
        fail(ErrorKind::package, std::string(file) + ": '" + text + "' is not a number");
    return v;
}

}  // namespace

std::string render_csv(const CsvTable& table) {
    std::ostringstream out;
    render_record(out, table.header);
    for (const auto& r : table.rows) render_record(out, r);
    return out.str();
}

bool operator==(const LabeledVector& a, const LabeledVector& b) {
    return a.ids == b.ids && a.values.size() == b.values.size() && a.values == b.values;
}

bool operator==(const LabeledMatrix& a, const LabeledMatrix& b) {
    return a.row_ids == b.row_ids && a.col_ids == b.col_ids && a.values.rows() == b.values.rows() &&
           a.values.cols() == b.values.cols() && a.values == b.values;
}

LabeledVector vector_from_csv(const CsvTable& table, std::string_view file) {
    if (table.header.size() != 2) fail(ErrorKind::package, std::string(file) + ": expected columns id,<value>");
    LabeledVector v;
    v.values.resize(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != 2) fail(ErrorKind::package, std::string(file) + ": row " + std::to_string(r + 2) + " is not id,value");
        v.ids.emplace_back(row[0]);
        v.values[static_cast<Eigen::Index>(r)] = parse_double(row[1], file);
    }
    return v;
}

LabeledMatrix matrix_from_csv(const CsvTable& table, std::string_view file) {
    if (table.header.empty()) fail(ErrorKind::package, std::string(file) + ": missing header");
    LabeledMatrix m;
    for (std::size_t c = 1; c < table.header.size(); ++c) m.col_ids.emplace_back(table.header[c]);
    const auto cols = static_cast<Eigen::Index>(m.col_ids.size());
    m.values.resize(static_cast<Eigen::Index>(table.rows.size()), cols);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (static_cast<Eigen::Index>(row.size()) != cols + 1)
            fail(ErrorKind::package, std::string(file) + ": row " + std::to_string(r + 2) + " has " +
                                         std::to_string(row.size()) + " fields, header has " +
                                         std::to_string(cols + 1));
        m.row_ids.emplace_back(row[0]);
        for (Eigen::Index c = 0; c < cols; ++c)
            m.values(static_cast<Eigen::Index>(r), c) = parse_double(row[static_cast<std::size_t>(c) + 1], file);
    }
    return m;
}

CsvTable vector_to_csv(const LabeledVector& v, std::string_view value_column) {
    CsvTable t;
    t.header = {"id", std::string(value_column)};
    for (std::size_t i = 0; i < v.ids.size(); ++i)
        t.rows.push_back({v.ids[i].str(), format_number(v.values[static_cast<Eigen::Index>(i)])});
    return t;
}

CsvTable matrix_to_csv(const LabeledMatrix& m, std::string_view corner) {
    CsvTable t;
    t.header.emplace_back(corner);
    for (const auto& id : m.col_ids) t.header.push_back(id.str());
    for (std::size_t r = 0; r < m.row_ids.size(); ++r) {
        std::vector<std::string> row{m.row_ids[r].str()};
        for (Eigen::Index c = 0; c < m.values.cols(); ++c)
            row.push_back(format_number(m.values(static_cast<Eigen::Index>(r), c)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<NodeRecord> nodes_from_csv(const CsvTable& table, std::string_view file) {
    if (table.header.empty() || table.header[0] != "id")
        fail(ErrorKind::package, std::string(file) + ": first column must be 'id'");
    std::vector<NodeRecord> out;
    for (const auto& row : table.rows) {
        if (row.empty() || row[0].empty()) fail(ErrorKind::package, std::string(file) + ": empty node id");
        out.push_back({NodeId(row[0]), row.size() > 1 ? row[1] : "", row.size() > 2 ? row[2] : ""});
    }
    return out;
}

CsvTable nodes_to_csv(const std::vector<NodeRecord>& nodes) {
    CsvTable t;
    t.header = {"id", "type", "label"};
    for (const auto& n : nodes) t.rows.push_back({n.id.str(), n.type, n.label});
    return t;
}

// ------------------------------------------------------------------ PoV

namespace {

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        fail(ErrorKind::package, std::string(what) + ": " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        fail(ErrorKind::package, std::string("field '") + key + "' has the wrong type");
    }
}

const Json& require(const Json& j, const char* key, std::string_view doc) {
    auto it = j.find(key);
    if (it == j.end()) fail(ErrorKind::package, std::string(doc) + ": missing field '" + key + "'");
    return *it;
}

Json split_unknown(const Json& obj, std::initializer_list<const char*> known) {
    Json extra = Json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool is_known = false;
        for (auto k : known) is_known = is_known || it.key() == k;
        if (!is_known) extra[it.key()] = it.value();
    }
    return extra;
}

std::vector<double> doubles(const Json& j, const char* key) {
    return get_or<std::vector<double>>(j, key, {});
}

}  // namespace

ValidationReport PovDocument::unknown_fields() const {
    ValidationReport r;
    for (auto it = extra_top.begin(); it != extra_top.end(); ++it)
        r.add("schema", Severity::note, "unknown PoV field preserved", it.key());
    for (auto it = extra_observer.begin(); it != extra_observer.end(); ++it)
        r.add("schema", Severity::note, "unknown PoV observer field preserved", "observer." + it.key());
    return r;
}

std::string emit_pov(const PovDocument& doc) {
    const Observer& o = doc.observer;
    auto missing = [](const std::string& field) { fail(ErrorKind::emission, "PoV field '" + field + "' is required"); };
    if (o.perimeter.empty()) missing("observer.P");
    if (o.units.empty() || !is_iso4217(o.units)) missing("observer.units");
    if (o.date.empty() || !is_iso_date(o.date)) missing("observer.date");
    o.validate();

    Json obs = Json::object();
    Json ids = Json::array();
    for (const auto& id : o.perimeter) ids.push_back(id.str());
    obs["P"] = ids;
    if (!o.perimeter_ref.empty()) obs["perimeter_ref"] = o.perimeter_ref;
    obs["basis"] = std::string(to_string(o.basis));
    obs["units"] = o.units;
    obs["date"] = o.date;
    if (o.fx_ppp) {
        Json fx = Json::object();
        fx["kappa"] = o.fx_ppp->kappa;
        fx["fx_source"] = o.fx_ppp->fx_source;
        fx["ppp_source"] = o.fx_ppp->ppp_source;
        fx["deflator"] = o.fx_ppp->deflator;
        obs["fx_ppp"] = fx;
    }
    if (o.sdf) {
        Json sdf = Json::object();
        sdf["curve_source"] = o.sdf->curve_source;
        sdf["measure"] = o.sdf->measure;
        sdf["horizon"] = o.sdf->horizon;
        if (!o.sdf->state_probabilities.empty()) sdf["state_probabilities"] = o.sdf->state_probabilities;
        if (!o.sdf->discount.empty()) sdf["discount"] = o.sdf->discount;
        if (!o.sdf->change_of_measure.empty()) sdf["change_of_measure"] = o.sdf->change_of_measure;
        obs["sdf"] = sdf;
    }
    obs["information_regime"] = std::string(to_string(o.regime));
    Json params = Json::object();
    params["tau"] = o.control_rule.tau;
    params["alpha"] = o.control_rule.alpha;
    params["normalize"] = o.control_rule.normalize;
    if (o.control_rule.reachability_depth) params["reachability_depth"] = *o.control_rule.reachability_depth;
    if (o.control_rule.cycle_attenuation) params["cycle_attenuation"] = *o.control_rule.cycle_attenuation;
    obs["control_rule"] = Json{{"option", std::string(to_string(o.control_rule.option))}, {"params", params}};
    for (auto it = doc.extra_observer.begin(); it != doc.extra_observer.end(); ++it) obs[it.key()] = it.value();

    Json root = Json::object();
    root["observer"] = obs;
    root["tolerances"] = Json{{"rounding_threshold", o.tolerances.rounding_threshold},
                              {"solver_eps", o.tolerances.solver_eps},
                              {"max_iters", o.tolerances.max_iters}};
    root["notes"] = doc.notes;
    for (auto it = doc.extra_top.begin(); it != doc.extra_top.end(); ++it) root[it.key()] = it.value();
    return dump(root);
}

std::string emit_pov(const Observer& observer, std::string_view notes) {
    PovDocument doc;
    doc.observer = observer;
    doc.notes = std::string(notes);
    return emit_pov(doc);
}

PovDocument parse_pov(std::string_view text) {
    const Json root = parse_json(text, "pov.json");
    if (!root.is_object()) fail(ErrorKind::package, "pov.json: top level must be an object");
    PovDocument doc;
    const Json& obs = require(root, "observer", "pov.json");
    Observer& o = doc.observer;
    for (const auto& id : get_or<std::vector<std::string>>(obs, "P", {})) o.perimeter.emplace_back(id);
    o.perimeter_ref = get_or<std::string>(obs, "perimeter_ref", "");
    o.basis = basis_from_string(get_or<std::string>(obs, "basis", "fair_value"));
    o.units = get_or<std::string>(obs, "units", "");
    o.date = get_or<std::string>(obs, "date", "");
    if (auto it = obs.find("fx_ppp"); it != obs.end() && it->is_object()) {
        FxPpp fx;
        fx.kappa = get_or<double>(*it, "kappa", 1.0);
        fx.fx_source = get_or<std::string>(*it, "fx_source", "");
        fx.ppp_source = get_or<std::string>(*it, "ppp_source", "");
        fx.deflator = get_or<std::string>(*it, "deflator", "");
        o.fx_ppp = fx;
    }
    if (auto it = obs.find("sdf"); it != obs.end() && it->is_object()) {
        SdfSpec sdf;
        sdf.curve_source = get_or<std::string>(*it, "curve_source", "");
        sdf.measure = get_or<std::string>(*it, "measure", "");
        sdf.horizon = get_or<std::string>(*it, "horizon", "");
        sdf.state_probabilities = doubles(*it, "state_probabilities");
        sdf.discount = doubles(*it, "discount");
        sdf.change_of_measure = doubles(*it, "change_of_measure");
        o.sdf = sdf;
    }
    o.regime = regime_from_string(get_or<std::string>(obs, "information_regime", "A"));
    if (auto it = obs.find("control_rule"); it != obs.end() && it->is_object()) {
        o.control_rule.option = control_option_from_string(get_or<std::string>(*it, "option", "A"));
        if (auto p = it->find("params"); p != it->end() && p->is_object()) {
            o.control_rule.tau = get_or<double>(*p, "tau", 0.5);
            o.control_rule.alpha = get_or<double>(*p, "alpha", 0.6);
            o.control_rule.normalize = get_or<bool>(*p, "normalize", false);
            if (p->contains("reachability_depth")) o.control_rule.reachability_depth = get_or<int>(*p, "reachability_depth", 1);
            if (p->contains("cycle_attenuation"))
                o.control_rule.cycle_attenuation = get_or<std::string>(*p, "cycle_attenuation", "");
        }
    }
    if (auto it = root.find("tolerances"); it != root.end() && it->is_object()) {
        o.tolerances.rounding_threshold = get_or<double>(*it, "rounding_threshold", 1e-8);
        o.tolerances.solver_eps = get_or<double>(*it, "solver_eps", 1e-10);
        o.tolerances.max_iters = get_or<int>(*it, "max_iters", 10000);
    }
    doc.notes = get_or<std::string>(root, "notes", "");
    doc.extra_top = split_unknown(root, {"observer", "tolerances", "notes"});
    doc.extra_observer = split_unknown(obs, {"P", "perimeter_ref", "basis", "units", "date", "fx_ppp", "sdf",
                                             "information_regime", "control_rule"});
    return doc;
}

// ------------------------------------------------------------------ Cut Summary

bool operator==(const CutSummaryDoc& a, const CutSummaryDoc& b) {
    auto edges_eq = [](const std::vector<SummaryEdge>& x, const std::vector<SummaryEdge>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i].from != y[i].from || x[i].to != y[i].to || x[i].type != y[i].type || x[i].amount != y[i].amount)
                return false;
        return true;
    };
    auto md_eq = [](const std::vector<MissingData>& x, const std::vector<MissingData>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i].field != y[i].field || x[i].imputation != y[i].imputation) return false;
        return true;
    };
    return a.perimeter == b.perimeter && a.date == b.date && a.currency == b.currency && edges_eq(a.edges_PO, b.edges_PO) &&
           edges_eq(a.edges_OP, b.edges_OP) && a.v_P == b.v_P && a.v_O == b.v_O && a.T_out == b.T_out &&
           a.T_in == b.T_in && a.consolidated_value == b.consolidated_value && a.hedge_vector_O == b.hedge_vector_O &&
           md_eq(a.missing_data, b.missing_data) && a.extra == b.extra;
}

CutSummaryDoc make_cut_summary(const ValuationResult& result, const CutStatistics& stats, const Observer& observer) {
    CutSummaryDoc doc;
    if (!observer.perimeter_ref.empty()) {
        doc.perimeter = observer.perimeter_ref;
    } else {
        for (std::size_t i = 0; i < stats.p_ids.size(); ++i) doc.perimeter += (i ? "+" : "") + stats.p_ids[i].str();
    }
    doc.date = observer.date;
    doc.currency = observer.units;
    for (const auto& e : result.edges_PO)
        doc.edges_PO.push_back({e.from.str(), e.to.str(), std::string(to_string(e.type)), e.amount});
    for (const auto& e : result.edges_OP)
        doc.edges_OP.push_back({e.from.str(), e.to.str(), std::string(to_string(e.type)), e.amount});
    for (std::size_t i = 0; i < stats.p_ids.size() && static_cast<Eigen::Index>(i) < result.v_P_used.size(); ++i)
        doc.v_P.emplace_back(stats.p_ids[i].str(), result.v_P_used[static_cast<Eigen::Index>(i)]);
    for (std::size_t k = 0; k < stats.o_ids.size(); ++k)
        doc.v_O.emplace_back(stats.o_ids[k].str(), stats.v_O[static_cast<Eigen::Index>(k)]);
    doc.T_out = result.T_out;
    doc.T_in = result.T_in;
    doc.consolidated_value = result.W;
    std::vector<std::pair<std::string, double>> h;
    for (const auto& [id, w] : hedge_vector(stats)) h.emplace_back(id.str(), w);
    doc.hedge_vector_O = std::move(h);
    return doc;
}

namespace {

Json edges_json(const std::vector<SummaryEdge>& edges) {
    Json arr = Json::array();
    for (const auto& e : edges) arr.push_back(Json{{"from", e.from}, {"to", e.to}, {"type", e.type}, {"amount", e.amount}});
    return arr;
}

Json map_json(const std::vector<std::pair<std::string, double>>& m) {
    Json obj = Json::object();
    for (const auto& [k, v] : m) obj[k] = v;
    return obj;
}

std::vector<SummaryEdge> edges_from(const Json& arr) {
    std::vector<SummaryEdge> out;
    if (!arr.is_array()) fail(ErrorKind::package, "cut_summary.json: edge list must be an array");
    for (const auto& e : arr)
        out.push_back({get_or<std::string>(e, "from", ""), get_or<std::string>(e, "to", ""),
                       get_or<std::string>(e, "type", ""), get_or<double>(e, "amount", 0.0)});
    return out;
}

std::vector<std::pair<std::string, double>> map_from(const Json& obj) {
    std::vector<std::pair<std::string, double>> out;
    if (!obj.is_object()) fail(ErrorKind::package, "cut_summary.json: expected an object of id -> amount");
    for (auto it = obj.begin(); it != obj.end(); ++it) out.emplace_back(it.key(), it.value().get<double>());
    return out;
}

}  // namespace

std::string render_cut_summary(const CutSummaryDoc& doc) {
    Json root = Json::object();
    root["perimeter"] = doc.perimeter;
    root["date"] = doc.date;
    root["currency"] = doc.currency;
    root["edges_PO"] = edges_json(doc.edges_PO);
    root["edges_OP"] = edges_json(doc.edges_OP);
    root["node_primitives"] = Json{{"v_P", map_json(doc.v_P)}, {"v_O", map_json(doc.v_O)}};
    root["totals"] = Json{{"T_out", doc.T_out}, {"T_in", doc.T_in}};
    root["consolidated_value"] = doc.consolidated_value;
    if (doc.hedge_vector_O) root["hedge_vector_O"] = map_json(*doc.hedge_vector_O);
    Json md = Json::array();
    for (const auto& m : doc.missing_data) md.push_back(Json{{"field", m.field}, {"imputation", m.imputation}});
    root["missing_data"] = md;
    for (auto it = doc.extra.begin(); it != doc.extra.end(); ++it) root[it.key()] = it.value();
    return dump(root);
}

std::string emit_cut_summary(const ValuationResult& result, const CutStatistics& stats, const Observer& observer) {
    return render_cut_summary(make_cut_summary(result, stats, observer));
}

CutSummaryDoc parse_cut_summary(std::string_view text) {
    const Json root = parse_json(text, "cut_summary.json");
    if (!root.is_object()) fail(ErrorKind::package, "cut_summary.json: top level must be an object");
    CutSummaryDoc doc;
    doc.perimeter = get_or<std::string>(root, "perimeter", "");
    doc.date = get_or<std::string>(root, "date", "");
    doc.currency = get_or<std::string>(root, "currency", "");
    doc.edges_PO = edges_from(require(root, "edges_PO", "cut_summary.json"));
    doc.edges_OP = edges_from(require(root, "edges_OP", "cut_summary.json"));
    if (auto it = root.find("node_primitives"); it != root.end()) {
        if (it->contains("v_P")) doc.v_P = map_from((*it)["v_P"]);
        if (it->contains("v_O")) doc.v_O = map_from((*it)["v_O"]);
    }
    const Json& totals = require(root, "totals", "cut_summary.json");
    doc.T_out = get_or<double>(totals, "T_out", 0.0);
    doc.T_in = get_or<double>(totals, "T_in", 0.0);
    try {
        doc.consolidated_value = require(root, "consolidated_value", "cut_summary.json").get<double>();
    } catch (const Json::exception&) {
        fail(ErrorKind::package, "cut_summary.json: consolidated_value must be a number");
    }
    if (auto it = root.find("hedge_vector_O"); it != root.end() && !it->is_null()) doc.hedge_vector_O = map_from(*it);
    if (auto it = root.find("missing_data"); it != root.end() && it->is_array())
        for (const auto& m : *it)
            doc.missing_data.push_back({get_or<std::string>(m, "field", ""), get_or<std::string>(m, "imputation", "")});
    doc.extra = split_unknown(root, {"perimeter", "date", "currency", "edges_PO", "edges_OP", "node_primitives", "totals",
                                     "consolidated_value", "hedge_vector_O", "missing_data"});
    return doc;
}

ValidationReport check_cut_summary(const CutSummaryDoc& doc) {
    ValidationReport r;
    auto reconcile = [&](const std::vector<SummaryEdge>& edges, double total, const char* name) {
        double s = 0.0;
        for (const auto& e : edges) s += e.amount;
        if (std::abs(s - total) > 1e-9 * std::max(1.0, std::abs(total))) {
            std::ostringstream msg;
            msg << name << " = " << format_number(total) << " but edges sum to " << format_number(s);
            r.add("schema", Severity::error, msg.str(), std::string("totals.") + name);
        }
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const auto& t = edges[i].type;
            if (t != "equity" && t != "debt" && t != "derivative" && t != "cashflow")
                r.add("schema", Severity::error, "edge type '" + t + "' not in {equity, debt, derivative, cashflow}",
                      std::string(name == std::string("T_out") ? "edges_PO" : "edges_OP") + "[" + std::to_string(i) + "]");
        }
    };
    reconcile(doc.edges_PO, doc.T_out, "T_out");
    reconcile(doc.edges_OP, doc.T_in, "T_in");
    if (!is_iso4217(doc.currency)) r.add("schema", Severity::error, "currency '" + doc.currency + "' is not ISO-4217", "currency");
    if (!is_iso_date(doc.date)) r.add("schema", Severity::error, "date '" + doc.date + "' is not YYYY-MM-DD", "date");
    for (auto it = doc.extra.begin(); it != doc.extra.end(); ++it)
        r.add("schema", Severity::note, "unknown Cut Summary field preserved", it.key());
    return r;
}

// ------------------------------------------------------------------ clearing.json

std::string emit_clearing_spec(const ClearingSpec& spec) {
    Json root = Json::object();
    root["engine"] = spec.engine;
    root["selection"] = std::string(to_string(spec.selection));
    root["params"] = Json{{"eps", spec.eps}, {"max_iters", spec.max_iters}};
    root["flows_stage"] = std::string(to_string(spec.flows_stage));
    if (spec.problem) {
        const auto& p = *spec.problem;
        Json prob = Json::object();
        Json nodes = Json::array();
        for (const auto& id : p.nodes) nodes.push_back(id.str());
        prob["nodes"] = nodes;
        Json classes = Json::array();
        for (const auto& L : p.classes) {
            Json rows = Json::array();
            for (Eigen::Index i = 0; i < L.rows(); ++i) {
                Json row = Json::array();
                for (Eigen::Index j = 0; j < L.cols(); ++j) row.push_back(L(i, j));
                rows.push_back(row);
            }
            classes.push_back(rows);
        }
        prob["classes"] = classes;
        prob["a"] = std::vector<double>(p.a.data(), p.a.data() + p.a.size());
        Json gamma = Json::array();
        for (const auto& g : p.gamma) gamma.push_back(std::vector<double>(g.data(), g.data() + g.size()));
        prob["gamma"] = gamma;
        root["problem"] = prob;
    }
    return dump(root);
}

ClearingSpec parse_clearing_spec(std::string_view text) {
    const Json root = parse_json(text, "clearing.json");
    ClearingSpec spec;
    spec.engine = get_or<std::string>(root, "engine", spec.engine);
    spec.selection = selection_from_string(get_or<std::string>(root, "selection", "greatest"));
    if (auto it = root.find("params"); it != root.end() && it->is_object()) {
        spec.eps = get_or<double>(*it, "eps", spec.eps);
        spec.max_iters = get_or<int>(*it, "max_iters", spec.max_iters);
    }
    const auto stage = get_or<std::string>(root, "flows_stage", "post_clearing");
    if (stage == "pre_clearing")
        spec.flows_stage = FlowStage::pre_clearing;
    else if (stage == "post_clearing")
        spec.flows_stage = FlowStage::post_clearing;
    else
        fail(ErrorKind::package, "clearing.json: flows_stage must be pre_clearing or post_clearing");
    if (auto it = root.find("problem"); it != root.end() && it->is_object()) {
        ClearingProblem p;
        for (const auto& id : get_or<std::vector<std::string>>(*it, "nodes", {})) p.nodes.emplace_back(id);
        const auto n = static_cast<Eigen::Index>(p.nodes.size());
        for (const auto& rows : require(*it, "classes", "clearing.json")) {
            DenseMatrix L(n, n);
            if (static_cast<Eigen::Index>(rows.size()) != n) fail(ErrorKind::package, "clearing.json: class is not |N|x|N|");
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
                if (static_cast<Eigen::Index>(row.size()) != n) fail(ErrorKind::package, "clearing.json: class is not |N|x|N|");
                for (Eigen::Index j = 0; j < n; ++j) L(i, j) = row[static_cast<std::size_t>(j)];
            }
            p.classes.push_back(L);
        }
        const auto a = get_or<std::vector<double>>(*it, "a", {});
        p.a = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
        for (const auto& g : get_or<std::vector<std::vector<double>>>(*it, "gamma", {}))
            p.gamma.push_back(Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(g.size())));
        spec.problem = std::move(p);
    }
    return spec;
}

// ------------------------------------------------------------------ manifest

std::optional<std::string> Manifest::file(std::string_view key) const {
    for (const auto& [k, v] : data_files)
        if (k == key) return v;
    return std::nullopt;
}

std::optional<std::string> Manifest::hash(std::string_view key) const {
    for (const auto& [k, v] : hashes)
        if (k == key) return v;
    return std::nullopt;
}

namespace {

void emit_optional(YAML::Emitter& e, const char* key, const std::optional<std::string>& v) {
    e << YAML::Key << key << YAML::Value;
    if (v)
        e << *v;
    else
        e << YAML::Null;
}

void emit_json(YAML::Emitter& e, const Json& j) {
    if (j.is_object()) {
        e << YAML::BeginMap;
        for (auto it = j.begin(); it != j.end(); ++it) {
            e << YAML::Key << it.key() << YAML::Value;
            emit_json(e, it.value());
        }
        e << YAML::EndMap;
    } else if (j.is_array()) {
        e << YAML::BeginSeq;
        for (const auto& x : j) emit_json(e, x);
        e << YAML::EndSeq;
    } else if (j.is_null()) {
        e << YAML::Null;
    } else if (j.is_boolean()) {
        e << (j.get<bool>() ? "true" : "false");
    } else if (j.is_number_integer()) {
        e << j.get<long long>();
    } else if (j.is_number()) {
        e << format_number(j.get<double>());
    } else {
        e << YAML::DoubleQuoted << j.get<std::string>();
    }
}

Json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Sequence: {
            Json arr = Json::array();
            for (const auto& x : n) arr.push_back(yaml_to_json(x));
            return arr;
        }
        case YAML::NodeType::Map: {
            Json obj = Json::object();
            for (const auto& kv : n) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return obj;
        }
        case YAML::NodeType::Scalar: {
            const std::string s = n.Scalar();
            if (n.Tag() == "!") return s;  // quoted scalar
            if (s == "true") return true;
            if (s == "false") return false;
            long long i = 0;
            auto ri = std::from_chars(s.data(), s.data() + s.size(), i);
            if (ri.ec == std::errc() && ri.ptr == s.data() + s.size()) return i;
            double d = 0;
            auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
            if (rd.ec == std::errc() && rd.ptr == s.data() + s.size()) return d;
            return s;
        }
    }
    return nullptr;
}

std::optional<std::string> opt_string(const YAML::Node& n) {
    if (!n || n.IsNull()) return std::nullopt;
    return n.as<std::string>();
}

std::string str_or(const YAML::Node& n, std::string fallback) {
    if (!n || n.IsNull()) return fallback;
    return n.as<std::string>();
}

bool bool_or(const YAML::Node& n, bool fallback) {
    if (!n || n.IsNull()) return fallback;
    return n.as<bool>();
}

}  // namespace

std::string emit_manifest(const Manifest& m) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "version" << YAML::Value << m.version;
    e << YAML::Key << "observer" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "currency" << YAML::Value << m.currency;
    e << YAML::Key << "fx" << YAML::Value << YAML::BeginMap;
    emit_optional(e, "provider", m.fx_provider);
    emit_optional(e, "date", m.fx_date);
    e << YAML::Key << "pairs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& p : m.fx_pairs) e << p;
    e << YAML::EndSeq;
    emit_optional(e, "method", m.fx_method);
    e << YAML::EndMap;
    e << YAML::Key << "ppp" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "used" << YAML::Value << m.ppp_used;
    emit_optional(e, "source", m.ppp_source);
    emit_optional(e, "base_year", m.ppp_base_year);
    e << YAML::EndMap;
    e << YAML::Key << "sdf" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "used" << YAML::Value << m.sdf_used;
    emit_optional(e, "measure", m.sdf_measure);
    emit_optional(e, "spec", m.sdf_spec);
    e << YAML::EndMap;
    e << YAML::EndMap;
    e << YAML::Key << "perimeter" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "P_ref" << YAML::Value << m.P_ref;
    e << YAML::Key << "O_ref" << YAML::Value << m.O_ref;
    e << YAML::Key << "control_rule" << YAML::Value << m.control_rule;
    e << YAML::Key << "lookthrough" << YAML::Value << m.lookthrough;
    e << YAML::EndMap;
    e << YAML::Key << "regime" << YAML::Value << std::string(to_string(m.regime));
    e << YAML::Key << "clearing" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "used" << YAML::Value << m.clearing_used;
    emit_optional(e, "engine", m.clearing_engine);
    e << YAML::Key << "params" << YAML::Value;
    if (m.clearing_params.empty()) {
        e << YAML::Flow << YAML::BeginMap << YAML::EndMap;
    } else {
        emit_json(e, m.clearing_params);
    }
    e << YAML::EndMap;
    e << YAML::Key << "data_files" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : m.data_files) e << YAML::Key << k << YAML::Value << v;
    e << YAML::EndMap;
    e << YAML::Key << "hashes" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : m.hashes) e << YAML::Key << k << YAML::Value << v;
    e << YAML::EndMap;
    e << YAML::Key << "notes" << YAML::Value << YAML::BeginSeq;
    for (const auto& n : m.notes) e << YAML::DoubleQuoted << n;
    e << YAML::EndSeq;
    e << YAML::EndMap;
    if (!e.good()) fail(ErrorKind::emission, std::string("manifest emission failed: ") + e.GetLastError());
    return std::string(e.c_str()) + "\n";
}

Manifest parse_manifest(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& ex) {
        fail(ErrorKind::package, std::string("manifest.yaml: ") + ex.what());
    }
    if (!root.IsMap()) fail(ErrorKind::package, "manifest.yaml: top level must be a mapping");
    Manifest m;
    try {
        m.version = str_or(root["version"], "");
        if (const auto obs = root["observer"]) {
            m.currency = str_or(obs["currency"], "");
            if (const auto fx = obs["fx"]) {
                m.fx_provider = opt_string(fx["provider"]);
                m.fx_date = opt_string(fx["date"]);
                if (fx["pairs"] && fx["pairs"].IsSequence())
                    for (const auto& p : fx["pairs"]) m.fx_pairs.push_back(p.as<std::string>());
                m.fx_method = opt_string(fx["method"]);
            }
            if (const auto ppp = obs["ppp"]) {
                m.ppp_used = bool_or(ppp["used"], false);
                m.ppp_source = opt_string(ppp["source"]);
                m.ppp_base_year = opt_string(ppp["base_year"]);
            }
            if (const auto sdf = obs["sdf"]) {
                m.sdf_used = bool_or(sdf["used"], false);
                m.sdf_measure = opt_string(sdf["measure"]);
                m.sdf_spec = opt_string(sdf["spec"]);
            }
        }
        if (const auto per = root["perimeter"]) {
            m.P_ref = str_or(per["P_ref"], "");
            m.O_ref = str_or(per["O_ref"], "");
            m.control_rule = str_or(per["control_rule"], "");
            m.lookthrough = bool_or(per["lookthrough"], false);
        }
        m.regime = regime_from_string(str_or(root["regime"], "A"));
        if (const auto cl = root["clearing"]) {
            m.clearing_used = bool_or(cl["used"], false);
            m.clearing_engine = opt_string(cl["engine"]);
            if (cl["params"] && cl["params"].IsMap()) m.clearing_params = yaml_to_json(cl["params"]);
        }
        if (const auto df = root["data_files"]; df && df.IsMap())
            for (const auto& kv : df) m.data_files.emplace_back(kv.first.as<std::string>(), kv.second.as<std::string>());
        if (const auto hs = root["hashes"]; hs && hs.IsMap())
            for (const auto& kv : hs) m.hashes.emplace_back(kv.first.as<std::string>(), kv.second.as<std::string>());
        if (const auto notes = root["notes"]; notes && notes.IsSequence())
            for (const auto& n : notes) m.notes.push_back(n.as<std::string>());
    } catch (const YAML::Exception& ex) {
        fail(ErrorKind::package, std::string("manifest.yaml: ") + ex.what());
    }
    return m;
}

}  // namespace cbv
