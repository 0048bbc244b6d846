// Oracle inputs shared by the unit tests and the acceptance binary.
#pragma once

#include <filesystem>
#include <string>

#include "cbv/cbv.hpp"

namespace cbv::testing {

inline SparseMatrix sparse(const DenseMatrix& m) { return m.sparseView(0.0, 0.0); }

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline DenseMatrix mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> xs) {
    DenseMatrix m(rows, cols);
    auto it = xs.begin();
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = *it++;
    return m;
}

/// Three-node perimeter {A,B,C} against {X,Y}.
inline CutStatistics worked_example(bool observed_v_P = true, bool internal_block = true) {
    CutStatistics s;
    s.p_ids = make_ids({"A", "B", "C"});
    s.o_ids = make_ids({"X", "Y"});
    s.b_P = vec({25, 35, 30});
    s.v_O = vec({60, 80});
    if (observed_v_P) s.v_P = vec({52, 48, 30});
    s.O_PO = sparse(mat(3, 2, {0.05, 0.02, 0.03, 0.0, 0.0, 0.04}));
    s.O_OP = sparse(mat(2, 3, {0.10, 0.05, 0.0, 0.0, 0.08, 0.12}));
    if (internal_block) s.O_PP = sparse(mat(3, 3, {0, 0.10, 0, 0.05, 0, 0.10, 0, 0.05, 0}));
    return s;
}

/// Two-node perimeter with one outside node; v_P equals b.
inline CutStatistics scenario(int which) {
    CutStatistics s;
    s.p_ids = make_ids({"P1", "P2"});
    s.o_ids = make_ids({"O1"});
    s.b_P = which == 1 ? vec({40, 30}) : vec({50, 25});
    s.v_O = vec({which == 1 ? 50.0 : 80.0});
    s.v_P = s.b_P;
    s.O_PO = sparse(mat(2, 1, {0.10, 0.05}));
    s.O_OP = sparse(mat(1, 2, {0.20, 0.10}));
    s.O_PP = sparse(mat(2, 2, {0, 0.15, 0.10, 0}));
    return s;
}

inline CutStatistics t_account() {
    CutStatistics s;
    s.p_ids = make_ids({"A", "B"});
    s.o_ids = make_ids({"o1"});
    s.b_P = vec({10, 5});
    s.v_O = vec({100});
    s.v_P = vec({50, 30});
    s.O_PO = sparse(mat(2, 1, {0.3, 0.0}));
    s.O_OP = sparse(mat(1, 2, {0.2, 0.1}));
    return s;
}

inline constexpr double kRenaultValue = 9.06e9;
inline constexpr double kNissanValue = 7.044303429e9;
inline constexpr double kRenaultHoldsNissan = 0.357;
inline constexpr double kNissanHoldsRenault = 0.15;

inline double renault_base() { return kRenaultValue - kRenaultHoldsNissan * kNissanValue; }
inline double nissan_base() { return kNissanValue - kNissanHoldsRenault * kRenaultValue; }

inline CutStatistics renault_nissan() {
    CutStatistics s;
    s.p_ids = make_ids({"RNO"});
    s.o_ids = make_ids({"NSN"});
    s.b_P = vec({renault_base()});
    s.v_O = vec({kNissanValue});
    s.v_P = vec({kRenaultValue});
    s.O_PO = sparse(mat(1, 1, {kRenaultHoldsNissan}));
    s.O_OP = sparse(mat(1, 1, {kNissanHoldsRenault}));
    return s;
}

inline std::vector<NodeRecord> records(const NodeIds& ids, const std::string& type,
                                       std::vector<std::string> labels = {}) {
    std::vector<NodeRecord> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], type, i < labels.size() ? labels[i] : ids[i].str()});
    return out;
}

inline CutReportPackage package_from(const CutStatistics& s, Regime regime) {
    CutReportPackage p;
    p.manifest.regime = regime;
    p.nodes_P = records(s.p_ids, "firm");
    p.nodes_O = records(s.o_ids, "external");
    p.b_P = {s.p_ids, s.b_P};
    p.v_O = {s.o_ids, s.v_O};
    if (s.v_P && regime == Regime::A) p.v_P = LabeledVector{s.p_ids, *s.v_P};
    p.O_PO = {s.p_ids, s.o_ids, DenseMatrix(s.O_PO)};
    p.O_OP = {s.o_ids, s.p_ids, DenseMatrix(s.O_OP)};
    if (s.O_PP && regime == Regime::B) p.O_PP = LabeledMatrix{s.p_ids, s.p_ids, DenseMatrix(*s.O_PP)};
    return p;
}

inline Observer worked_observer(Regime regime) {
    Observer o;
    o.perimeter = make_ids({"A", "B", "C"});
    o.perimeter_ref = "P-WORKED";
    o.units = "EUR";
    o.date = "2025-06-30";
    o.regime = regime;
    return o;
}

inline CutReportPackage worked_example_package(Regime regime = Regime::A) {
    CutReportPackage p = package_from(worked_example(regime == Regime::A, regime == Regime::B), regime);
    p.manifest.fx_date = "2025-06-30";
    p.manifest.P_ref = "P-WORKED";
    p.manifest.O_ref = "O-WORKED";
    p.manifest.control_rule = "IFRS10-control@50";
    p.manifest.lookthrough = true;
    p.manifest.notes = {"Synthetic three-node example"};
    PovDocument pov;
    pov.observer = worked_observer(regime);
    pov.notes = "Synthetic inputs";
    p.pov = pov;
    if (regime == Regime::B)
        p.stability_evidence =
            "||O_PP||_inf = 0.15 < 1, so ||(I-O_PP)^-1||_inf <= 1/(1-0.15) = 1.1764705882352942\n";
    return p;
}

inline CutReportPackage renault_package() {
    CutReportPackage p = package_from(renault_nissan(), Regime::A);
    p.nodes_P = {{NodeId("RNO"), "issuer", "Renault SA (LEI: 969500UP76J7PPY6KX27)"}};
    p.nodes_O = {{NodeId("NSN"), "issuer", "Nissan Motor Co., Ltd. (TSE: 7201)"}};
    Manifest& m = p.manifest;
    m.fx_provider = "ECB";
    m.fx_date = "2025-08-20";
    m.fx_pairs = {"EUR/JPY"};
    m.fx_method = "close";
    m.P_ref = "P-REN-2025Q3";
    m.O_ref = "O-NSN-2025Q3";
    m.control_rule = "IFRS10-control@50";
    m.lookthrough = true;
    m.notes = {"Market cap data sources: exchange close 2025-08-20"};
    return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("cbv-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace cbv::testing
