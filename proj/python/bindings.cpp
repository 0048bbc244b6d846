#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cbv/cbv.hpp"
#include "cbv/cli.hpp"

namespace py = pybind11;
using namespace cbv;

namespace {

NodeIds ids_of(const std::vector<std::string>& names) {
    NodeIds out;
    for (const auto& n : names) out.emplace_back(n);
    return out;
}

std::vector<std::string> names_of(const NodeIds& ids) {
    std::vector<std::string> out;
    for (const auto& id : ids) out.push_back(id.str());
    return out;
}

SparseMatrix to_sparse(const DenseMatrix& m) { return m.sparseView(0.0, 0.0); }

CutStatistics make_stats(const std::vector<std::string>& p_ids, const std::vector<std::string>& o_ids,
                         const Vector& b_P, const Vector& v_O, const DenseMatrix& O_PO, const DenseMatrix& O_OP,
                         std::optional<Vector> v_P, std::optional<DenseMatrix> O_PP) {
    CutStatistics s;
    s.p_ids = ids_of(p_ids);
    s.o_ids = ids_of(o_ids);
    s.b_P = b_P;
    s.v_O = v_O;
    s.v_P = std::move(v_P);
    s.O_PO = to_sparse(O_PO);
    s.O_OP = to_sparse(O_OP);
    if (O_PP) s.O_PP = to_sparse(*O_PP);
    s.validate_shapes();
    return s;
}

py::dict solver_log_dict(const SolverLog& log) {
    py::dict d;
    d["method"] = log.method;
    d["iterations"] = log.iterations;
    d["residual"] = log.residual;
    d["rho_bound"] = log.rho_bound;
    d["power_estimate"] = log.power_estimate;
    d["damping"] = log.damping;
    d["regularization"] = log.regularization;
    d["dropped_edges"] = log.dropped_edges;
    d["warnings"] = log.warnings;
    return d;
}

SolverConfig make_config(std::optional<std::string> method, double eps, int max_iters, std::optional<double> damping,
                         std::optional<double> regularization, double rounding_threshold) {
    SolverConfig cfg;
    if (method) cfg.method = solve_method_from_string(*method);
    cfg.eps = eps;
    cfg.max_iters = max_iters;
    cfg.damping = damping;
    cfg.regularization = regularization;
    cfg.rounding_threshold = rounding_threshold;
    cfg.validate();
    return cfg;
}

NoiseTarget noise_target(const std::string& s) {
    if (s == "O_PP") return NoiseTarget::O_PP;
    if (s == "O_PO") return NoiseTarget::O_PO;
    if (s == "O_OP") return NoiseTarget::O_OP;
    if (s == "b_P") return NoiseTarget::b_P;
    if (s == "v_O") return NoiseTarget::v_O;
    throw Error(ErrorKind::domain, "unknown noise target '" + s + "'");
}

py::list findings_list(const ValidationReport& report) {
    py::list out;
    for (const auto& f : report.findings) {
        py::dict d;
        d["rule"] = f.rule;
        d["severity"] = std::string(to_string(f.severity));
        d["message"] = f.message;
        d["location"] = f.location;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_cbv, m) {
    m.doc() = "Cut-based consolidated valuation";

    static py::exception<Error> base_exc(m, "CbvError", PyExc_RuntimeError);
    static py::exception<ConvergenceError> conv_exc(m, "ConvergenceError", base_exc.ptr());
    static py::exception<IntegrityError> integ_exc(m, "IntegrityError", base_exc.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        auto raise = [](py::object cls, const Error& e, py::dict extra) {
            py::object inst = cls(e.what());
            inst.attr("kind") = std::string(to_string(e.kind()));
            for (auto item : extra) inst.attr(item.first) = item.second;
            PyErr_SetObject(cls.ptr(), inst.ptr());
        };
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConvergenceError& e) {
            py::dict extra;
            extra["last_residual"] = e.last_residual();
            extra["iterations"] = e.iterations();
            raise(conv_exc, e, extra);
        } catch (const IntegrityError& e) {
            py::dict extra;
            extra["file"] = e.file();
            raise(integ_exc, e, extra);
        } catch (const Error& e) {
            raise(base_exc, e, py::dict());
        }
    });

    py::class_<CutStatistics>(m, "CutStatistics")
        .def(py::init(&make_stats), py::arg("p_ids"), py::arg("o_ids"), py::arg("b_P"), py::arg("v_O"),
             py::arg("O_PO"), py::arg("O_OP"), py::arg("v_P") = py::none(), py::arg("O_PP") = py::none())
        .def_property_readonly("p_ids", [](const CutStatistics& s) { return names_of(s.p_ids); })
        .def_property_readonly("o_ids", [](const CutStatistics& s) { return names_of(s.o_ids); })
        .def_property_readonly("b_P", [](const CutStatistics& s) { return s.b_P; })
        .def_property_readonly("v_O", [](const CutStatistics& s) { return s.v_O; })
        .def_property_readonly("v_P", [](const CutStatistics& s) { return s.v_P; })
        .def_property_readonly("O_PO", [](const CutStatistics& s) { return DenseMatrix(s.O_PO); })
        .def_property_readonly("O_OP", [](const CutStatistics& s) { return DenseMatrix(s.O_OP); })
        .def_property_readonly("O_PP", [](const CutStatistics& s) -> std::optional<DenseMatrix> {
            if (!s.O_PP) return std::nullopt;
            return DenseMatrix(*s.O_PP);
        })
        .def("add_flow",
             [](CutStatistics& s, const std::string& from, const std::string& to, double amount, const std::string& type) {
                 s.flows.push_back({NodeId(from), NodeId(to), edge_type_from_string(type), amount});
                 s.validate_shapes();
             },
             py::arg("source"), py::arg("target"), py::arg("amount"), py::arg("type") = "debt");

    py::class_<ValuationResult>(m, "ValuationResult")
        .def_readonly("W", &ValuationResult::W)
        .def_readonly("base_total", &ValuationResult::base_total)
        .def_readonly("T_out", &ValuationResult::T_out)
        .def_readonly("T_in", &ValuationResult::T_in)
        .def_readonly("v_P", &ValuationResult::v_P_used)
        .def_property_readonly("solver_log", [](const ValuationResult& r) { return solver_log_dict(r.solver_log); })
        .def("__repr__", [](const ValuationResult& r) {
            std::ostringstream s;
            s << "ValuationResult(W=" << format_number(r.W) << ", T_out=" << format_number(r.T_out)
              << ", T_in=" << format_number(r.T_in) << ")";
            return s.str();
        });

    m.def(
        "evaluate",
        [](const CutStatistics& s, const std::string& regime, std::optional<std::string> method, double eps,
           int max_iters, std::optional<double> damping, std::optional<double> regularization, double threshold) {
            return evaluate(s, regime_from_string(regime),
                            make_config(method, eps, max_iters, damping, regularization, threshold));
        },
        py::arg("stats"), py::arg("regime") = "A", py::arg("method") = py::none(), py::arg("eps") = 1e-10,
        py::arg("max_iters") = 10000, py::arg("damping") = py::none(), py::arg("regularization") = py::none(),
        py::arg("rounding_threshold") = 0.0);

    m.def("scale_units", &scale_units, py::arg("kappa"), py::arg("stats"));
    m.def("hedge_vector", [](const CutStatistics& s) {
        std::map<std::string, double> out;
        for (const auto& [k, v] : hedge_vector(s)) out[k.str()] = v;
        return out;
    });

    m.def("spectral_radius_bound", [](const DenseMatrix& block) {
        const auto b = spectral_radius_bound(to_sparse(block));
        py::dict d;
        d["rho_upper"] = b.rho_upper;
        d["norm_1"] = b.norm_1;
        d["norm_inf"] = b.norm_inf;
        d["norm_2"] = b.norm_2;
        d["gershgorin_ok"] = b.gershgorin_ok;
        d["power_iteration_estimate"] = b.power_iteration_estimate;
        return d;
    });
    m.def("condition_diagnostics", [](const DenseMatrix& block) {
        const auto c = condition_diagnostics(to_sparse(block));
        py::dict d;
        d["rho_estimate"] = c.rho_estimate;
        d["kappa2"] = c.kappa2;
        d["kappa2_exact"] = c.kappa2_exact;
        return d;
    });
    m.def(
        "boundary_bound",
        [](const CutStatistics& s, double eta, double epsilon, const std::string& p) {
            return boundary_bound({norm_from_string(p), eta, epsilon}, s.O_PO, s.p_ids.size()).bound;
        },
        py::arg("stats"), py::arg("eta"), py::arg("epsilon"), py::arg("p") = "inf");
    m.def(
        "monte_carlo_band",
        [](const CutStatistics& s, double lower, double upper, std::size_t draws, std::uint64_t seed,
           const std::string& target, bool common_factor, bool include_extremes, const std::string& quantity,
           unsigned threads) {
            NoiseSpec noise;
            noise.lower = lower;
            noise.upper = upper;
            noise.target = noise_target(target);
            noise.common_factor = common_factor;
            noise.include_extremes = include_extremes;
            if (quantity == "internal_total") noise.quantity = BandQuantity::internal_total;
            else if (quantity != "consolidated_value") throw Error(ErrorKind::domain, "unknown band quantity '" + quantity + "'");
            const auto b = monte_carlo_band(s, SolverConfig{}, noise, draws, seed, threads);
            py::dict d;
            d["low"] = b.low;
            d["high"] = b.high;
            d["nominal"] = b.nominal;
            d["evaluated"] = b.evaluated;
            d["excluded"] = b.excluded;
            return d;
        },
        py::arg("stats"), py::arg("lower"), py::arg("upper"), py::arg("draws"), py::arg("seed"),
        py::arg("target") = "O_PP", py::arg("common_factor") = false, py::arg("include_extremes") = true,
        py::arg("quantity") = "consolidated_value", py::arg("threads") = 1u);

    m.def(
        "control_matrix",
        [](const std::vector<std::string>& ids, const DenseMatrix& shares, const std::string& option, double tau,
           double alpha, bool normalize, std::optional<int> depth) {
            ControlRuleSpec rule;
            rule.option = control_option_from_string(option);
            rule.tau = tau;
            rule.alpha = alpha;
            rule.normalize = normalize;
            rule.reachability_depth = depth;
            const auto omega = control_matrix(OwnershipNetwork::from_dense(ids_of(ids), shares), rule);
            return py::make_tuple(names_of(omega.ids), omega.weights);
        },
        py::arg("ids"), py::arg("shares"), py::arg("option") = "A", py::arg("tau") = 0.5, py::arg("alpha") = 0.6,
        py::arg("normalize") = false, py::arg("depth") = py::none());

    m.def(
        "fisher_indices",
        [](double pp, double cp, double pc, double cc) {
            const auto f = fisher_combine(elementary_indices(FisherQuad::from_values(pp, cp, pc, cc)));
            py::dict d;
            d["IV_L"] = f.IV_L;
            d["IP_L"] = f.IP_L;
            d["IV_P"] = f.IV_P;
            d["IP_P"] = f.IP_P;
            d["IV_F"] = f.IV_F;
            d["IP_F"] = f.IP_F;
            d["G_F"] = f.G_F;
            return d;
        },
        py::arg("W_prev_prevObs"), py::arg("W_curr_prevObs"), py::arg("W_prev_currObs"), py::arg("W_curr_currObs"));
    m.def("chain_link", &chain_link);
    m.def("bilateral_goods_index", [](const std::vector<double>& p0, const std::vector<double>& p1,
                                      const std::vector<double>& q0, const std::vector<double>& q1) {
        const auto b = bilateral_goods_index(p0, p1, q0, q1);
        return py::make_tuple(b.L, b.P, b.F);
    });

    m.def(
        "clear",
        [](const std::vector<std::string>& nodes, const std::vector<DenseMatrix>& classes, const Vector& a,
           const std::vector<Vector>& gamma, const std::string& selection, double eps, int max_iters) {
            ClearingProblem p;
            p.nodes = ids_of(nodes);
            p.classes = classes;
            p.a = a;
            p.gamma = gamma;
            ClearingConfig cfg;
            cfg.selection = selection_from_string(selection);
            cfg.eps = eps;
            cfg.max_iters = max_iters;
            const auto out = clear(p, cfg);
            py::dict d;
            d["payments"] = out.payments;
            d["theta"] = out.theta;
            d["iterations"] = out.iterations;
            d["residual"] = out.residual;
            return d;
        },
        py::arg("nodes"), py::arg("classes"), py::arg("a"), py::arg("gamma") = std::vector<Vector>{},
        py::arg("selection") = "greatest", py::arg("eps") = 1e-12, py::arg("max_iters") = 100000);

    m.def("delta_max", [](double eps, double gamma) {
        const auto d = delta_max(eps, gamma);
        return py::make_tuple(d.delta, d.segments);
    });
    m.def("pwa_error_bound", &pwa_error_bound, py::arg("gamma_max"), py::arg("delta"));
    m.def("eval_waterfall", [](double inflow, double cap_) {
        const auto w = eval_waterfall(inflow, cap_);
        return py::make_tuple(w.senior, w.junior);
    });
    m.def("cvar", &cvar, py::arg("values"), py::arg("probs"), py::arg("alpha"));
    m.def(
        "aggregate",
        [](const std::vector<double>& values, const std::vector<double>& probs, const std::string& kind,
           double alpha, std::vector<std::string> labels, std::vector<std::string> S_star, std::vector<double> M,
           std::vector<std::pair<double, double>> mu) {
            AggregatorPolicy pol;
            pol.kind = aggregator_from_string(kind);
            pol.alpha = alpha;
            pol.S_star = std::move(S_star);
            pol.M = std::move(M);
            pol.mu = std::move(mu);
            if (labels.empty())
                for (std::size_t i = 0; i < values.size(); ++i) labels.push_back("s" + std::to_string(i));
            return aggregate(values, probs, labels, pol);
        },
        py::arg("values"), py::arg("probs"), py::arg("kind") = "expectation_Q", py::arg("alpha") = 0.95,
        py::arg("labels") = std::vector<std::string>{}, py::arg("S_star") = std::vector<std::string>{},
        py::arg("M") = std::vector<double>{}, py::arg("mu") = std::vector<std::pair<double, double>>{});

    m.def("package_statistics", [](const std::string& dir) { return to_cut_statistics(load_package(dir)); });
    m.def("validate_package", [](const std::string& dir) { return findings_list(validate_package(load_package(dir))); });
    m.def("format_grouped", [](double v, std::optional<int> decimals) { return format_grouped(v, decimals); },
          py::arg("value"), py::arg("decimals") = py::none());
    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "cbv");
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
