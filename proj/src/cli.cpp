#include "cbv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cbv/cbv.hpp"

namespace cbv {

namespace {

namespace fs = std::filesystem;

struct SolverFlags {
    std::string method;
    std::optional<double> eps;
    std::optional<int> max_iters;
    std::optional<double> damping;
    std::optional<double> regularization;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    cmd->add_option("--method", f.method, "Solver for Regime B")
        ->check(CLI::IsMember({"direct", "neumann", "iterative_krylov"}));
    cmd->add_option("--eps", f.eps, "Solver tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", f.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--damping", f.damping, "Scale O_PP by beta in (0,1]");
    cmd->add_option("--regularization", f.regularization, "Solve (I - O_PP + eps I)");
}

SolverConfig solver_config(const Observer& observer, const SolverFlags& f) {
    SolverConfig cfg = SolverConfig::from_observer(observer);
    if (!f.method.empty()) cfg.method = solve_method_from_string(f.method);
    if (f.eps) cfg.eps = *f.eps;
    if (f.max_iters) cfg.max_iters = *f.max_iters;
    if (f.damping) cfg.damping = f.damping;
    if (f.regularization) cfg.regularization = f.regularization;
    cfg.validate();
    return cfg;
}

void write_output(const std::string& bytes, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-")
        out << bytes;
    else
        write_file(path, bytes);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json ids_json(const NodeIds& ids) {
    Json a = Json::array();
    for (const auto& id : ids) a.push_back(id.str());
    return a;
}

Json matrix_json(const NodeIds& rows, const NodeIds& cols, const DenseMatrix& m) {
    Json out = Json::object();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Json row = Json::object();
        for (std::size_t j = 0; j < cols.size(); ++j) row[cols[j].str()] = m(Eigen::Index(i), Eigen::Index(j));
        out[rows[i].str()] = row;
    }
    return out;
}

std::string report_text(const ValidationReport& r, const std::string& format) {
    if (format == "json") {
        Json arr = Json::array();
        for (const auto& f : r.findings)
            arr.push_back(Json{{"rule", f.rule},
                               {"severity", std::string(to_string(f.severity))},
                               {"message", f.message},
                               {"location", f.location}});
        return dump(Json{{"passes", r.passes()}, {"findings", arr}});
    }
    std::ostringstream s;
    for (const auto& f : r.findings)
        s << f.rule << ' ' << to_string(f.severity) << ' ' << (f.location.empty() ? "-" : f.location) << ": " << f.message
          << '\n';
    s << (r.passes() ? "PASS" : "FAIL") << " (" << r.findings.size() << " finding" << (r.findings.size() == 1 ? "" : "s")
      << ")\n";
    return s.str();
}

struct Loaded {
    CutReportPackage package;
    Observer observer;
    CutStatistics stats;
};

Loaded load(const std::string& dir, const std::string& pov_path, const std::string& regime) {
    Loaded l{load_package(dir), {}, {}};
    l.observer = pov_path.empty() ? package_observer(l.package) : parse_pov(read_file(pov_path)).observer;
    if (!regime.empty()) l.observer.regime = regime_from_string(regime);
    l.stats = to_cut_statistics(l.package);
    const double factor = l.observer.pricing_factor();
    if (factor != 1.0) l.stats = scale_units(factor, l.stats);
    return l;
}

// ------------------------------------------------------------------ subcommands

int cmd_validate(const std::string& dir, const std::string& format, std::ostream& out) {
    ValidationReport r;
    try {
        r = validate_package(load_package(dir));
    } catch (const IntegrityError& e) {
        r.add("hash", Severity::error, e.what(), e.file());
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::package) throw;
        r.add("schema", Severity::error, e.what(), dir);
    }
    out << report_text(r, format);
    return r.passes() ? kExitOk : kExitFindings;
}

struct ComputeFlags {
    std::string package, pov, out, regime, format = "json";
    SolverFlags solver;
    std::size_t band_draws = 0;
    double band_amplitude = 0.01;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

int cmd_compute(const ComputeFlags& f, std::ostream& out, std::ostream& err) {
    if (f.band_draws > 0 && !f.seed) {
        err << "error[usage] compute: --band-draws requires an explicit --seed\n";
        return kExitUsage;
    }
    Loaded l = load(f.package, f.pov, f.regime);
    const SolverConfig cfg = solver_config(l.observer, f.solver);
    const ValuationResult res = evaluate(l.stats, l.observer.regime, cfg);
    CutSummaryDoc doc = make_cut_summary(res, l.stats, l.observer);
    doc.extra["number_format"] = "shortest round-trip decimal";
    if (l.observer.regime == Regime::B) {
        Json log = Json::object();
        log["method"] = res.solver_log.method;
        log["iterations"] = res.solver_log.iterations;
        log["residual"] = res.solver_log.residual;
        log["rho_bound"] = res.solver_log.rho_bound;
        if (res.solver_log.damping) log["damping"] = *res.solver_log.damping;
        if (res.solver_log.regularization) log["regularization"] = *res.solver_log.regularization;
        log["warnings"] = res.solver_log.warnings;
        doc.extra["solver_log"] = log;
    }
    if (f.band_draws > 0) {
        const auto band = monte_carlo_band(l.stats, cfg, NoiseSpec::symmetric(f.band_amplitude), f.band_draws, *f.seed,
                                           std::max(1u, f.threads));
        doc.extra["band"] = Json{{"low", band.low},       {"high", band.high},         {"nominal", band.nominal},
                                 {"seed", *f.seed},       {"draws", f.band_draws},     {"amplitude", f.band_amplitude},
                                 {"evaluated", band.evaluated}, {"excluded", band.excluded}};
    }
    if (f.format == "table") {
        std::ostringstream s;
        s << "W(P)     " << format_number(res.W) << ' ' << l.observer.units << '\n'
          << "base     " << format_number(res.base_total) << '\n'
          << "T_out    " << format_number(res.T_out) << '\n'
          << "T_in     " << format_number(res.T_in) << '\n';
        for (std::size_t i = 0; i < l.stats.p_ids.size(); ++i)
            s << "v_P[" << l.stats.p_ids[i].str() << "]  " << format_number(res.v_P_used[Eigen::Index(i)]) << '\n';
        out << s.str();
        if (!f.out.empty()) write_file(f.out, render_cut_summary(doc));
        return kExitOk;
    }
    write_output(render_cut_summary(doc), f.out, out);
    return kExitOk;
}

struct FisherFlags {
    std::string prev, curr, prev_pov, curr_pov, out, span, format = "json";
    bool sign_fallback = false;
    bool no_reestimate = false;
    SolverFlags solver;
};

Json quad_json(const FisherQuad& q) {
    return Json{{"W_prev_prevObs", q.W_prev_prevObs},
                {"W_curr_prevObs", q.W_curr_prevObs},
                {"W_prev_currObs", q.W_prev_currObs},
                {"W_curr_currObs", q.W_curr_currObs}};
}

Json indices_json(const FisherIndices& x) {
    Json j{{"IV_L", x.IV_L}, {"IP_L", x.IP_L}, {"IV_P", x.IV_P}, {"IP_P", x.IP_P},
           {"IV_F", x.IV_F}, {"IP_F", x.IP_F}, {"G_F", x.G_F}};
    if (x.sign) j["sign"] = *x.sign;
    return j;
}

int cmd_fisher(const FisherFlags& f, std::ostream& out) {
    Loaded prev = load(f.prev, f.prev_pov, "");
    Loaded curr = load(f.curr, f.curr_pov, "");
    // Repricing is done inside the quad; start from unscaled statistics.
    prev.stats = to_cut_statistics(prev.package);
    curr.stats = to_cut_statistics(curr.package);
    const AlignedPeriods aligned = align_periods(prev.stats, curr.stats);
    const SolverConfig cfg = solver_config(curr.observer, f.solver);
    CrossPricingOptions opts;
    opts.reestimate_under_observer = !f.no_reestimate;
    const FisherQuad quad = cross_priced_quad(aligned.prev, aligned.curr, prev.observer, curr.observer, cfg, opts);
    const FisherIndices idx = fisher_combine(elementary_indices(quad, f.sign_fallback));
    const std::string span = f.span.empty() ? prev.observer.date + "->" + curr.observer.date : f.span;
    if (f.format == "table") {
        std::ostringstream s;
        s << "span  " << span << '\n';
        for (auto [k, v] : {std::pair{"IV_L", idx.IV_L}, {"IP_L", idx.IP_L}, {"IV_P", idx.IV_P}, {"IP_P", idx.IP_P},
                            {"IV_F", idx.IV_F}, {"IP_F", idx.IP_F}, {"G_F", idx.G_F}})
            s << k << "  " << format_number(v) << '\n';
        write_output(s.str(), f.out, out);
        return kExitOk;
    }
    Json j{{"span", span},
           {"quad", quad_json(quad)},
           {"indices", indices_json(idx)},
           {"excluded", ids_json(aligned.excluded)},
           {"reestimate_under_observer", opts.reestimate_under_observer}};
    write_output(dump(j), f.out, out);
    return kExitOk;
}

struct ClearingFlags {
    std::string spec, out, selection, perimeter, format = "json";
    std::optional<double> eps;
    std::optional<int> max_iters;
    bool trace = false;
};

NodeIds split_ids(const std::string& csv) {
    NodeIds ids;
    std::stringstream s(csv);
    std::string item;
    while (std::getline(s, item, ','))
        if (!item.empty()) ids.emplace_back(item);
    return ids;
}

int cmd_clearing(const ClearingFlags& f, std::ostream& out) {
    const ClearingSpec spec = parse_clearing_spec(read_file(f.spec));
    if (!spec.problem) fail(ErrorKind::package, f.spec + ": no 'problem' block to clear");
    ClearingConfig cfg;
    cfg.selection = f.selection.empty() ? spec.selection : selection_from_string(f.selection);
    cfg.eps = f.eps.value_or(spec.eps);
    cfg.max_iters = f.max_iters.value_or(spec.max_iters);
    cfg.record_trace = f.trace;
    const ClearingOutcome outcome = clear(*spec.problem, cfg);
    const NodeIds& nodes = spec.problem->nodes;

    Json j = Json::object();
    j["engine"] = spec.engine;
    j["selection"] = std::string(to_string(outcome.selection));
    j["iterations"] = outcome.iterations;
    j["residual"] = outcome.residual;
    j["nodes"] = ids_json(nodes);
    Json pay = Json::array(), theta = Json::array();
    for (const auto& p : outcome.payments) pay.push_back(vec_json(p));
    for (const auto& t : outcome.theta) theta.push_back(vec_json(t));
    j["payments"] = pay;
    j["theta"] = theta;
    if (f.trace) {
        Json tr = Json::array();
        for (const auto& sweep : outcome.trace) {
            Json s = Json::array();
            for (const auto& v : sweep) s.push_back(vec_json(v));
            tr.push_back(s);
        }
        j["trace"] = tr;
    }
    if (!f.perimeter.empty()) {
        const auto net = net_boundary_flows(*spec.problem, outcome, Perimeter(split_ids(f.perimeter)));
        Json flows = Json::array();
        for (const auto& fl : net.flows) flows.push_back(Json{{"from", fl.from.str()}, {"to", fl.to.str()}, {"amount", fl.amount}});
        j["flows_stage"] = "post_clearing";
        j["flows"] = flows;
    }
    if (f.format == "table") {
        std::ostringstream s;
        s << "selection " << j["selection"].get<std::string>() << ", iterations " << outcome.iterations << '\n';
        for (std::size_t l = 0; l < outcome.payments.size(); ++l)
            for (std::size_t i = 0; i < nodes.size(); ++i)
                s << "class " << l << "  " << nodes[i].str() << "  p=" << format_number(outcome.payments[l][Eigen::Index(i)])
                  << "  theta=" << format_number(outcome.theta[l][Eigen::Index(i)]) << '\n';
        write_output(s.str(), f.out, out);
        return kExitOk;
    }
    write_output(dump(j), f.out, out);
    return kExitOk;
}

struct ControlFlags {
    std::string shares, option = "A", out, seed_perimeter, format = "json";
    double tau = 0.5;
    double alpha = 0.6;
    std::optional<int> depth;
    bool normalize = false;
    double tau_p = 0.5;
};

int cmd_control(const ControlFlags& f, std::ostream& out) {
    const LabeledMatrix m = matrix_from_csv(parse_csv(read_file(f.shares)), f.shares);
    if (m.row_ids != m.col_ids) fail(ErrorKind::validation, f.shares + ": share matrix must list the same ids in rows and columns");
    const auto network = OwnershipNetwork::from_dense(m.row_ids, m.values);
    ControlRuleSpec rule;
    rule.option = control_option_from_string(f.option);
    rule.tau = f.tau;
    rule.alpha = f.alpha;
    rule.reachability_depth = f.depth;
    rule.normalize = f.normalize;
    rule.validate();
    const ControlMatrix omega = control_matrix(network, rule);
    if (f.format == "table") {
        LabeledMatrix lm{omega.ids, omega.ids, omega.weights};
        write_output(render_csv(matrix_to_csv(lm, "controller")), f.out, out);
        return kExitOk;
    }
    Json j{{"option", std::string(to_string(rule.option))},
           {"ids", ids_json(omega.ids)},
           {"omega", matrix_json(omega.ids, omega.ids, omega.weights)}};
    if (!f.seed_perimeter.empty()) {
        const Perimeter p = select_perimeter(omega, Perimeter(split_ids(f.seed_perimeter)), f.tau_p);
        Json members = Json::array();
        for (const auto& id : p.members()) members.push_back(id.str());
        j["perimeter"] = members;
    }
    write_output(dump(j), f.out, out);
    return kExitOk;
}

std::string fixed4(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

int cmd_pwa(double eps, double gamma, const std::string& format, std::ostream& out) {
    const DeltaMax d = delta_max(eps, gamma);
    if (format == "json")
        out << dump(Json{{"eps", eps}, {"gamma", gamma}, {"delta_max", d.delta}, {"N", d.segments}});
    else
        out << "Δ_max=" << fixed4(d.delta) << ", N=" << d.segments << '\n';
    return kExitOk;
}

struct ReportFlags {
    std::string package, pov, out, prev, prev_pov, sources;
    std::optional<int> decimals;
    SolverFlags solver;
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
    Loaded l = load(f.package, f.pov, "");
    const SolverConfig cfg = solver_config(l.observer, f.solver);
    DisclosureInputs in;
    in.result = evaluate(l.stats, l.observer.regime, cfg);
    in.amount_decimals = f.decimals;
    in.sources = f.sources;
    if (l.stats.O_PP) in.conditioning = condition_diagnostics(*l.stats.O_PP);
    if (!f.prev.empty()) {
        Loaded prev = load(f.prev, f.prev_pov, "");
        const auto aligned = align_periods(to_cut_statistics(prev.package), to_cut_statistics(l.package));
        const auto quad = cross_priced_quad(aligned.prev, aligned.curr, prev.observer, l.observer, cfg);
        in.fisher = FisherDisclosure{prev.observer.date + "->" + l.observer.date, quad,
                                     fisher_combine(elementary_indices(quad))};
    }
    write_output(render_disclosure_sheet(l.package, in), f.out, out);
    return kExitOk;
}

std::string_view diagnostic_id(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation: return "D1";
        case ErrorKind::integrity: return "hash";
        case ErrorKind::stability: return "D4";
        default: return to_string(kind);
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cut-based valuation: packages, valuation, indices, clearing, control"};
    app.name(args.empty() ? "cbv" : fs::path(args.front()).filename().string());
    app.require_subcommand(1);
    const auto formats = CLI::IsMember({"json", "table"});

    std::string v_package, v_format = "table";
    auto* validate = app.add_subcommand("validate", "Check a package against D1-D5 and its hashes");
    validate->add_option("--package", v_package, "Package directory")->required();
    validate->add_option("--format", v_format)->check(formats);

    ComputeFlags cf;
    auto* compute = app.add_subcommand("compute", "Value the perimeter and write cut_summary.json");
    compute->add_option("--package", cf.package, "Package directory")->required();
    compute->add_option("--pov", cf.pov, "PoV JSON overriding the package observer");
    compute->add_option("--out", cf.out, "Output file (stdout if omitted)");
    compute->add_option("--regime", cf.regime)->check(CLI::IsMember({"A", "B"}));
    compute->add_option("--format", cf.format)->check(formats);
    add_solver_flags(compute, cf.solver);
    compute->add_option("--band-draws", cf.band_draws, "Monte Carlo draws for a value band");
    compute->add_option("--band-amplitude", cf.band_amplitude, "Relative noise amplitude")->check(CLI::NonNegativeNumber);
    compute->add_option("--seed", cf.seed, "RNG seed (required with --band-draws)");
    compute->add_option("--threads", cf.threads)->check(CLI::PositiveNumber);

    FisherFlags ff;
    auto* fisher = app.add_subcommand("fisher", "Cross-priced Fisher indices between two period packages");
    fisher->add_option("--prev", ff.prev, "Package for t-1")->required();
    fisher->add_option("--curr", ff.curr, "Package for t")->required();
    fisher->add_option("--prev-pov", ff.prev_pov);
    fisher->add_option("--curr-pov", ff.curr_pov);
    fisher->add_option("--span", ff.span);
    fisher->add_option("--out", ff.out);
    fisher->add_option("--format", ff.format)->check(formats);
    fisher->add_flag("--allow-sign-fallback", ff.sign_fallback);
    fisher->add_flag("--no-reestimate", ff.no_reestimate);
    add_solver_flags(fisher, ff.solver);

    ClearingFlags clf;
    auto* clearing = app.add_subcommand("clearing", "Run the seniority clearing engine");
    clearing->add_option("--spec", clf.spec, "clearing.json with a problem block")->required();
    clearing->add_option("--selection", clf.selection)->check(CLI::IsMember({"greatest", "least"}));
    clearing->add_option("--eps", clf.eps)->check(CLI::PositiveNumber);
    clearing->add_option("--max-iters", clf.max_iters)->check(CLI::PositiveNumber);
    clearing->add_option("--perimeter", clf.perimeter, "Comma-separated ids of P for net boundary flows");
    clearing->add_option("--out", clf.out);
    clearing->add_option("--format", clf.format)->check(formats);
    clearing->add_flag("--trace", clf.trace);

    ControlFlags ctf;
    auto* control = app.add_subcommand("control", "Control weights from a share matrix");
    control->add_option("--shares", ctf.shares, "Square share CSV (owner rows, owned columns)")->required();
    control->add_option("--option", ctf.option)->check(CLI::IsMember({"A", "B", "B'", "C"}));
    control->add_option("--tau", ctf.tau);
    control->add_option("--alpha", ctf.alpha);
    control->add_option("--depth", ctf.depth);
    control->add_flag("--normalize", ctf.normalize);
    control->add_option("--seed-perimeter", ctf.seed_perimeter, "Comma-separated seed ids for perimeter selection");
    control->add_option("--tau-p", ctf.tau_p);
    control->add_option("--out", ctf.out);
    control->add_option("--format", ctf.format)->check(formats);

    double p_eps = 0.0, p_gamma = 0.0;
    std::string p_format = "table";
    auto* pwa = app.add_subcommand("pwa", "Mesh size for a PWA approximation error");
    pwa->add_option("--eps", p_eps)->required()->check(CLI::PositiveNumber);
    pwa->add_option("--gamma", p_gamma)->required()->check(CLI::PositiveNumber);
    pwa->add_option("--format", p_format)->check(formats);

    ReportFlags rf;
    auto* report = app.add_subcommand("report", "Render the disclosure sheet");
    report->add_option("--package", rf.package)->required();
    report->add_option("--pov", rf.pov);
    report->add_option("--prev", rf.prev, "Previous period package for the Fisher row");
    report->add_option("--prev-pov", rf.prev_pov);
    report->add_option("--sources", rf.sources);
    report->add_option("--decimals", rf.decimals)->check(CLI::NonNegativeNumber);
    report->add_option("--out", rf.out);
    add_solver_flags(report, rf.solver);

    try {
        std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
        std::reverse(rev.begin(), rev.end());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error[usage] " << e.what() << '\n';
        for (auto* sub : app.get_subcommands())
            if (sub->parsed()) err << sub->help();
        return kExitUsage;
    }

    std::string op = "cbv";
    try {
        if (validate->parsed()) return op = "validate", cmd_validate(v_package, v_format, out);
        if (compute->parsed()) return op = "compute", cmd_compute(cf, out, err);
        if (fisher->parsed()) return op = "fisher", cmd_fisher(ff, out);
        if (clearing->parsed()) return op = "clearing", cmd_clearing(clf, out);
        if (control->parsed()) return op = "control", cmd_control(ctf, out);
        if (pwa->parsed()) return op = "pwa", cmd_pwa(p_eps, p_gamma, p_format, out);
        if (report->parsed()) return op = "report", cmd_report(rf, out);
    } catch (const ConvergenceError& e) {
        err << "error[convergence] " << op << ": " << e.what() << " (last residual " << format_number(e.last_residual())
            << " after " << e.iterations() << " iterations)\n";
        return kExitComputation;
    } catch (const Error& e) {
        err << "error[" << diagnostic_id(e.kind()) << "] " << op << ": " << e.what() << '\n';
        return e.kind() == ErrorKind::package || e.kind() == ErrorKind::integrity ? kExitFindings : kExitComputation;
    } catch (const std::exception& e) {
        err << "error[internal] " << op << ": " << e.what() << '\n';
        return kExitComputation;
    }
    return kExitUsage;
}

}  // namespace cbv
