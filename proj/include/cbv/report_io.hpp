#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbv/clearing.hpp"
#include "cbv/cut_engine.hpp"
#include "cbv/fisher.hpp"
#include "cbv/observer.hpp"
#include "cbv/robustness.hpp"
#include "cbv/validation.hpp"
#include "json.hpp"

namespace cbv {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kManifestVersion = "cbv-cut-report@1.0";

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);
/// 7701000000 -> "7,701,000,000". The fractional part is the shortest form,
/// or rounded to `decimals` when given.
std::string format_grouped(double value, std::optional<int> decimals = std::nullopt);

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// ---------------------------------------------------------------- CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 style: quoted fields, doubled quotes, CRLF or LF line ends.
CsvTable parse_csv(std::string_view text);
std::string render_csv(const CsvTable& table);

struct LabeledVector {
    NodeIds ids;
    Vector values;

    friend bool operator==(const LabeledVector&, const LabeledVector&);
};

struct LabeledMatrix {
    NodeIds row_ids;
    NodeIds col_ids;
    DenseMatrix values;

    friend bool operator==(const LabeledMatrix&, const LabeledMatrix&);
};

LabeledVector vector_from_csv(const CsvTable& table, std::string_view file);
LabeledMatrix matrix_from_csv(const CsvTable& table, std::string_view file);
CsvTable vector_to_csv(const LabeledVector& v, std::string_view value_column);
CsvTable matrix_to_csv(const LabeledMatrix& m, std::string_view corner);

struct NodeRecord {
    NodeId id;
    std::string type;
    std::string label;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

std::vector<NodeRecord> nodes_from_csv(const CsvTable& table, std::string_view file);
CsvTable nodes_to_csv(const std::vector<NodeRecord>& nodes);

// ---------------------------------------------------------------- PoV

struct PovDocument {
    Observer observer;
    std::string notes;
    /// Keys not part of the schema, kept verbatim.
    Json extra_top = Json::object();
    Json extra_observer = Json::object();

    /// Unknown keys as severity-note findings.
    ValidationReport unknown_fields() const;
};

/// Throws an emission error naming the first missing required field.
std::string emit_pov(const Observer& observer, std::string_view notes = {});
std::string emit_pov(const PovDocument& doc);
PovDocument parse_pov(std::string_view text);

// ---------------------------------------------------------------- Cut Summary

struct SummaryEdge {
    std::string from;
    std::string to;
    std::string type;
    double amount = 0.0;
};

struct MissingData {
    std::string field;
    std::string imputation;
};

struct CutSummaryDoc {
    std::string perimeter;
    std::string date;
    std::string currency;
    std::vector<SummaryEdge> edges_PO;
    std::vector<SummaryEdge> edges_OP;
    std::vector<std::pair<std::string, double>> v_P;
    std::vector<std::pair<std::string, double>> v_O;
    double T_out = 0.0;
    double T_in = 0.0;
    double consolidated_value = 0.0;
    std::optional<std::vector<std::pair<std::string, double>>> hedge_vector_O;
    std::vector<MissingData> missing_data;
    Json extra = Json::object();

    friend bool operator==(const CutSummaryDoc&, const CutSummaryDoc&);
};

CutSummaryDoc make_cut_summary(const ValuationResult& result, const CutStatistics& stats,
                               const Observer& observer);
std::string render_cut_summary(const CutSummaryDoc& doc);
std::string emit_cut_summary(const ValuationResult& result, const CutStatistics& stats,
                             const Observer& observer);
CutSummaryDoc parse_cut_summary(std::string_view text);

/// Totals reconciliation, edge types, ISO currency and date.
ValidationReport check_cut_summary(const CutSummaryDoc& doc);

// ---------------------------------------------------------------- clearing.json

struct ClearingSpec {
    std::string engine = "seniority-waterfall";
    FixedPointSelection selection = FixedPointSelection::greatest;
    double eps = 1e-12;
    int max_iters = 100000;
    FlowStage flows_stage = FlowStage::post_clearing;
    std::optional<ClearingProblem> problem;
};

std::string emit_clearing_spec(const ClearingSpec& spec);
ClearingSpec parse_clearing_spec(std::string_view text);

// ---------------------------------------------------------------- manifest

struct Manifest {
    std::string version{kManifestVersion};
    std::string currency = "EUR";
    std::optional<std::string> fx_provider;
    std::optional<std::string> fx_date;
    std::vector<std::string> fx_pairs;
    std::optional<std::string> fx_method;
    bool ppp_used = false;
    std::optional<std::string> ppp_source;
    std::optional<std::string> ppp_base_year;
    bool sdf_used = false;
    std::optional<std::string> sdf_measure;
    std::optional<std::string> sdf_spec;
    std::string P_ref;
    std::string O_ref;
    std::string control_rule;
    bool lookthrough = false;
    Regime regime = Regime::A;
    bool clearing_used = false;
    std::optional<std::string> clearing_engine;
    Json clearing_params = Json::object();
    /// key -> file name, in document order.
    std::vector<std::pair<std::string, std::string>> data_files;
    /// key -> "sha256:<hex>".
    std::vector<std::pair<std::string, std::string>> hashes;
    std::vector<std::string> notes;

    std::optional<std::string> file(std::string_view key) const;
    std::optional<std::string> hash(std::string_view key) const;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string emit_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);

// ---------------------------------------------------------------- package

struct CutReportPackage {
    Manifest manifest;
    std::vector<NodeRecord> nodes_P;
    std::vector<NodeRecord> nodes_O;
    LabeledVector b_P;
    LabeledVector v_O;
    std::optional<LabeledVector> v_P;
    LabeledMatrix O_PO;
    LabeledMatrix O_OP;
    std::optional<LabeledMatrix> O_PP;
    std::optional<ClearingSpec> clearing;
    std::optional<PovDocument> pov;
    std::optional<std::string> stability_evidence;
    /// Data-file keys the loader does not know; hashed, otherwise ignored.
    std::vector<std::string> unknown_files;

    friend bool operator==(const CutReportPackage&, const CutReportPackage&);
};

/// Parses every referenced file after checking its SHA-256 against the
/// manifest. Hash mismatch -> IntegrityError; missing manifest, file or hash
/// entry, or a regime-B package without O_PP -> package error.
CutReportPackage load_package(const std::filesystem::path& directory);

/// Writes data files in canonical names, fills manifest data_files/hashes and
/// writes manifest.yaml last. Returns the manifest as written.
Manifest write_package(const std::filesystem::path& directory, const CutReportPackage& package);

/// D1 to D5 findings plus schema notes.
ValidationReport validate_package(const CutReportPackage& package);

/// Strict conversion; throws a validation error when D1 would fail.
CutStatistics to_cut_statistics(const CutReportPackage& package);

/// Observer from the package's pov.json, or one derived from the manifest.
Observer package_observer(const CutReportPackage& package);

// ---------------------------------------------------------------- disclosure

struct FisherDisclosure {
    std::string span;  // e.g. "2025-07->2025-08"
    FisherQuad quad;
    FisherIndices indices;
};

struct DisclosureInputs {
    ValuationResult result;
    std::optional<FisherDisclosure> fisher;
    std::optional<ConditioningReport> conditioning;
    std::optional<ClearingOutcome> clearing;
    std::string sources;
    /// Currency amounts rounded to this many decimals; shortest form if unset.
    std::optional<int> amount_decimals;
};

/// Fixed-order two-column sheet.
std::string render_disclosure_sheet(const CutReportPackage& package, const DisclosureInputs& inputs);

}  // namespace cbv
