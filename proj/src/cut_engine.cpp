#include "cbv/cut_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <Eigen/SVD>

#include "cbv/errors.hpp"

namespace cbv {

std::string_view to_string(FlowStage stage) noexcept {
    return stage == FlowStage::pre_clearing ? "pre_clearing" : "post_clearing";
}

std::string_view to_string(SolveMethod method) noexcept {
    switch (method) {
        case SolveMethod::direct: return "direct";
        case SolveMethod::neumann: return "neumann";
        case SolveMethod::iterative_krylov: return "iterative_krylov";
    }
    return "direct";
}

SolveMethod solve_method_from_string(std::string_view text) {
    for (auto m : {SolveMethod::direct, SolveMethod::neumann, SolveMethod::iterative_krylov})
        if (to_string(m) == text) return m;
    fail(ErrorKind::domain, "unknown solver method '" + std::string(text) + "'");
}

namespace {

std::string dims(const SparseMatrix& m) {
    std::ostringstream s;
    s << m.rows() << "x" << m.cols();
    return s.str();
}

bool in_ids(const NodeIds& ids, const NodeId& id) { return std::binary_search(ids.begin(), ids.end(), id); }

}  // namespace

CutStatistics CutStatistics::from_partition(const BlockPartition& blocks, const std::map<NodeId, double>& b,
                                            const std::map<NodeId, double>& v, bool keep_internal_block) {
    CutStatistics s;
    s.p_ids = blocks.p_ids;
    s.o_ids = blocks.o_ids;
    s.b_P.resize(static_cast<Eigen::Index>(s.p_ids.size()));
    s.v_O.resize(static_cast<Eigen::Index>(s.o_ids.size()));
    bool have_vp = true;
    Vector vp(static_cast<Eigen::Index>(s.p_ids.size()));
    for (std::size_t i = 0; i < s.p_ids.size(); ++i) {
        auto it = b.find(s.p_ids[i]);
        if (it == b.end()) fail(ErrorKind::validation, "missing base value for '" + s.p_ids[i].str() + "'");
        s.b_P[static_cast<Eigen::Index>(i)] = it->second;
        auto jt = v.find(s.p_ids[i]);
        if (jt == v.end())
            have_vp = false;
        else
            vp[static_cast<Eigen::Index>(i)] = jt->second;
    }
    for (std::size_t k = 0; k < s.o_ids.size(); ++k) {
        auto it = v.find(s.o_ids[k]);
        if (it == v.end()) fail(ErrorKind::validation, "missing external value for '" + s.o_ids[k].str() + "'");
        s.v_O[static_cast<Eigen::Index>(k)] = it->second;
    }
    if (have_vp) s.v_P = vp;
    s.O_PO = blocks.O_PO;
    s.O_OP = blocks.O_OP;
    if (keep_internal_block) s.O_PP = blocks.O_PP;
    return s;
}

void CutStatistics::validate_shapes() const {
    const auto np = static_cast<Eigen::Index>(p_ids.size());
    const auto no = static_cast<Eigen::Index>(o_ids.size());
    auto bad = [](const std::string& what) { fail(ErrorKind::validation, what); };
    if (b_P.size() != np) bad("b_P has length " + std::to_string(b_P.size()) + ", |P| = " + std::to_string(np));
    if (v_O.size() != no) bad("v_O has length " + std::to_string(v_O.size()) + ", |O| = " + std::to_string(no));
    if (v_P && v_P->size() != np) bad("v_P has length " + std::to_string(v_P->size()) + ", |P| = " + std::to_string(np));
    if (O_PO.rows() != np || O_PO.cols() != no) bad("O_PO is " + dims(O_PO) + ", expected |P|x|O|");
    if (O_OP.rows() != no || O_OP.cols() != np) bad("O_OP is " + dims(O_OP) + ", expected |O|x|P|");
    if (O_PP && (O_PP->rows() != np || O_PP->cols() != np)) bad("O_PP is " + dims(*O_PP) + ", expected |P|x|P|");
    if (!std::is_sorted(p_ids.begin(), p_ids.end()) || !std::is_sorted(o_ids.begin(), o_ids.end()))
        bad("node ids must be in canonical order");
    for (const auto& f : flows) {
        const bool out = in_ids(p_ids, f.from) && in_ids(o_ids, f.to);
        const bool in = in_ids(o_ids, f.from) && in_ids(p_ids, f.to);
        if (!out && !in) bad("flow " + f.from.str() + "->" + f.to.str() + " does not cross the cut");
    }
}

CutStatistics scale_units(double kappa, const CutStatistics& stats) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) fail(ErrorKind::domain, "scale kappa must be positive and finite");
    CutStatistics out = stats;
    out.b_P *= kappa;
    out.v_O *= kappa;
    if (out.v_P) *out.v_P *= kappa;
    for (auto& f : out.flows) f.amount *= kappa;
    return out;
}

void SolverConfig::validate() const {
    if (!(eps > 0.0)) fail(ErrorKind::domain, "solver eps must be > 0");
    if (max_iters < 1) fail(ErrorKind::domain, "max_iters must be >= 1");
    if (damping && !(*damping > 0.0 && *damping < 1.0)) fail(ErrorKind::domain, "damping must lie in (0,1)");
    if (regularization && !(*regularization >= 0.0)) fail(ErrorKind::domain, "regularization must be >= 0");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) fail(ErrorKind::domain, "relaxation must lie in (0,1]");
    if (!(rounding_threshold >= 0.0)) fail(ErrorKind::domain, "rounding threshold must be >= 0");
}

SolverConfig SolverConfig::from_observer(const Observer& observer) {
    SolverConfig cfg;
    cfg.eps = observer.tolerances.solver_eps;
    cfg.max_iters = observer.tolerances.max_iters;
    cfg.rounding_threshold = observer.tolerances.rounding_threshold;
    return cfg;
}

SpectralBound spectral_radius_bound(const SparseMatrix& block) {
    if (block.rows() != block.cols()) fail(ErrorKind::validation, "spectral bound needs a square block");
    SpectralBound out;
    const auto n = block.rows();
    if (n == 0) return out;
    Vector row = Vector::Zero(n), col = Vector::Zero(n);
    for (Eigen::Index r = 0; r < block.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(block, r); it; ++it) {
            row[it.row()] += std::abs(it.value());
            col[it.col()] += std::abs(it.value());
        }
    out.norm_inf = row.maxCoeff();
    out.norm_1 = col.maxCoeff();
    if (n <= 256) {
        DenseMatrix d(block);
        out.norm_2 = Eigen::JacobiSVD<DenseMatrix>(d).singularValues()(0);
    } else {
        out.norm_2 = std::sqrt(out.norm_1 * out.norm_inf);
    }
    out.rho_upper = std::min({out.norm_1, out.norm_inf, out.norm_2});
    out.gershgorin_ok = out.norm_inf < 1.0;

    // Power method on |A| + I: the shift keeps iterates strictly positive and
    // removes periodicity, so the Collatz-Wielandt max ratio converges to
    // rho(|A|) + 1 from above.
    SparseMatrix absA = block.cwiseAbs();
    Vector x = Vector::Ones(n);
    double upper = 0.0;
    for (int k = 0; k < 2000; ++k) {
        Vector y = absA * x + x;
        const Vector ratio = y.cwiseQuotient(x);
        upper = ratio.maxCoeff();
        const double lower = ratio.minCoeff();
        x = y / y.maxCoeff();
        if (upper - lower <= 1e-13 * upper) break;
    }
    out.power_iteration_estimate = std::max(0.0, upper - 1.0);
    return out;
}

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct PreparedSystem {
    SparseMatrix M;  // effective internal block after damping
    double shift = 1.0;  // diagonal of (shift I - M)
    Vector rhs;
};

SparseMatrix system_matrix(const PreparedSystem& sys) {
    const auto n = sys.M.rows();
    SparseMatrix I(n, n);
    I.setIdentity();
    SparseMatrix A = sys.shift * I - sys.M;
    A.makeCompressed();
    return A;
}

Vector solve_direct(const PreparedSystem& sys, double tol, SolverLog& log) {
    using ColMajor = Eigen::SparseMatrix<double>;
    ColMajor A = system_matrix(sys);
    Eigen::SparseLU<ColMajor, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) fail(ErrorKind::stability, "I - O_PP is singular (sparse LU failed)");
    Vector v = lu.solve(sys.rhs);
    Vector r = sys.rhs - A * v;
    int steps = 0;
    while (inf_norm(r) > tol && steps < 3) {
        v += lu.solve(r);
        r = sys.rhs - A * v;
        ++steps;
    }
    log.iterations = 1 + steps;
    log.residual = inf_norm(r);
    if (!v.allFinite()) fail(ErrorKind::stability, "I - O_PP is numerically singular");
    if (log.residual > tol) log.warnings.push_back("direct solve residual above tolerance after refinement");
    return v;
}

Vector solve_neumann(const PreparedSystem& sys, double tol, int max_iters, double relaxation, SolverLog& log) {
    // v <- (1 - w) v + w (rhs + M v) / shift, stopped on ||rhs - (shift I - M) v||_inf.
    const SparseMatrix G = sys.M / sys.shift;
    const Vector c = sys.rhs / sys.shift;
    Vector row = Vector::Zero(G.rows());
    for (Eigen::Index r = 0; r < G.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(G, r); it; ++it) row[r] += std::abs(it.value());
    const double q = row.size() ? row.maxCoeff() : 0.0;
    // With a contraction factor q < 1 on the unrelaxed map, a residual of
    // tol (1 - q) certifies an error of at most tol.
    const double stop = q < 1.0 ? tol * (1.0 - q) : tol;
    Vector v = c;
    double res = sys.shift * inf_norm(c + G * v - v);
    int k = 0;
    while (res > stop) {
        if (k >= max_iters) {
            std::ostringstream msg;
            msg << "Neumann iteration exceeded " << max_iters << " iterations (residual " << res << ")";
            throw ConvergenceError(msg.str(), res, k);
        }
        Vector next = c + G * v;
        v = (1.0 - relaxation) * v + relaxation * next;
        ++k;
        res = sys.shift * inf_norm(c + G * v - v);
        if (!std::isfinite(res)) throw ConvergenceError("Neumann iteration diverged", res, k);
    }
    log.iterations = k;
    log.residual = res;
    return v;
}

Vector solve_krylov(const PreparedSystem& sys, double tol, int max_iters, SolverLog& log) {
    using ColMajor = Eigen::SparseMatrix<double>;
    ColMajor A = system_matrix(sys);
    Eigen::BiCGSTAB<ColMajor, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setMaxIterations(max_iters);
    const double bnorm = sys.rhs.norm();
    // Eigen's criterion is relative in the 2-norm; aim below the inf-norm
    // target, then verify explicitly.
    solver.setTolerance(bnorm > 0 ? std::max(1e-16, tol / (bnorm * std::sqrt(double(std::max<Eigen::Index>(1, A.rows()))))) : 1e-16);
    solver.compute(A);
    if (solver.info() != Eigen::Success) fail(ErrorKind::stability, "Krylov preconditioner setup failed");
    Vector v = solver.solve(sys.rhs);
    Vector r = sys.rhs - A * v;
    log.iterations = static_cast<int>(solver.iterations());
    log.residual = inf_norm(r);
    if (!(log.residual <= tol)) {
        std::ostringstream msg;
        msg << "BiCGSTAB did not reach the tolerance (residual " << log.residual << ")";
        throw ConvergenceError(msg.str(), log.residual, log.iterations);
    }
    return v;
}

}  // namespace

InternalEstimate estimate_internal_values(const CutStatistics& stats, const SolverConfig& cfg) {
    cfg.validate();
    if (!stats.O_PP) fail(ErrorKind::regime, "Regime B needs the internal block O_PP");
    stats.validate_shapes();

    InternalEstimate out;
    SolverLog& log = out.log;
    PreparedSystem sys;
    sys.M = *stats.O_PP;
    if (cfg.damping) {
        sys.M *= *cfg.damping;
        log.damping = cfg.damping;
    }
    if (cfg.regularization) {
        sys.shift = 1.0 + *cfg.regularization;
        log.regularization = cfg.regularization;
    }
    sys.rhs = stats.b_P + stats.O_PO * stats.v_O;

    const SpectralBound bound = spectral_radius_bound(sys.M);
    log.rho_bound = bound.rho_upper;
    log.power_estimate = bound.power_iteration_estimate;
    const bool explicit_fix = cfg.damping.has_value() || cfg.regularization.has_value();
    if (bound.rho_upper >= sys.shift) {
        if (bound.power_iteration_estimate < sys.shift) {
            log.warnings.push_back("norm bounds >= 1; proceeding on the power-iteration estimate " +
                                   std::to_string(bound.power_iteration_estimate));
        } else if (explicit_fix) {
            log.warnings.push_back("stability gate not satisfied; proceeding on configured damping/regularization");
        } else {
            std::ostringstream msg;
            msg << "rho(O_PP) >= 1 by every available bound (min norm " << bound.rho_upper << ", power estimate "
                << bound.power_iteration_estimate << "); configure damping or regularization";
            fail(ErrorKind::stability, msg.str());
        }
    }

    const auto np = static_cast<std::size_t>(sys.M.rows());
    const SolveMethod method = cfg.method.value_or(np <= kDirectSolveLimit ? SolveMethod::direct : SolveMethod::neumann);
    log.method = std::string(to_string(method));
    if (method == SolveMethod::neumann && cfg.relaxation != 1.0) log.method += "(relaxed)";
    const double tol = cfg.eps * std::max(1.0, inf_norm(sys.rhs));
    if (np == 0) {
        out.v_P = Vector();
        return out;
    }
    switch (method) {
        case SolveMethod::direct: out.v_P = solve_direct(sys, tol, log); break;
        case SolveMethod::neumann: out.v_P = solve_neumann(sys, tol, cfg.max_iters, cfg.relaxation, log); break;
        case SolveMethod::iterative_krylov: out.v_P = solve_krylov(sys, tol, cfg.max_iters, log); break;
    }
    return out;
}

ValuationResult evaluate_regime_a(const CutStatistics& stats, double rounding_threshold) {
    if (!stats.v_P) fail(ErrorKind::regime, "Regime A needs observed internal values v_P");
    if (!(rounding_threshold >= 0.0)) fail(ErrorKind::domain, "rounding threshold must be >= 0");
    stats.validate_shapes();
    ValuationResult r;
    const Vector& vP = *stats.v_P;
    for (Eigen::Index j = 0; j < stats.b_P.size(); ++j) r.base_total += stats.b_P[j];

    auto keep = [&](double amount) {
        if (std::abs(amount) < rounding_threshold) {
            ++r.solver_log.dropped_edges;
            return false;
        }
        return true;
    };
    for (Eigen::Index i = 0; i < stats.O_PO.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(stats.O_PO, i); it; ++it) {
            const double amount = it.value() * stats.v_O[it.col()];
            if (!keep(amount)) continue;
            r.edges_PO.push_back({stats.p_ids[static_cast<std::size_t>(it.row())],
                                  stats.o_ids[static_cast<std::size_t>(it.col())], EdgeType::equity, amount});
            r.T_out += amount;
        }
    for (Eigen::Index k = 0; k < stats.O_OP.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(stats.O_OP, k); it; ++it) {
            const double amount = it.value() * vP[it.col()];
            if (!keep(amount)) continue;
            r.edges_OP.push_back({stats.o_ids[static_cast<std::size_t>(it.row())],
                                  stats.p_ids[static_cast<std::size_t>(it.col())], EdgeType::equity, amount});
            r.T_in += amount;
        }

    std::vector<BoundaryFlow> flows = stats.flows;
    std::stable_sort(flows.begin(), flows.end(), [](const BoundaryFlow& a, const BoundaryFlow& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    for (const auto& f : flows) {
        if (!keep(f.amount)) continue;
        if (in_ids(stats.p_ids, f.from)) {
            r.edges_PO.push_back({f.from, f.to, f.type, f.amount});
            r.T_out += f.amount;
        } else {
            r.edges_OP.push_back({f.from, f.to, f.type, f.amount});
            r.T_in += f.amount;
        }
    }
    r.W = r.base_total + r.T_out - r.T_in;
    r.v_P_used = vP;
    return r;
}

ValuationResult evaluate_regime_b(const CutStatistics& stats, const SolverConfig& cfg) {
    InternalEstimate est = estimate_internal_values(stats, cfg);
    CutStatistics with_vp = stats;
    with_vp.v_P = est.v_P;
    ValuationResult r = evaluate_regime_a(with_vp, cfg.rounding_threshold);
    est.log.dropped_edges = r.solver_log.dropped_edges;
    r.solver_log = std::move(est.log);
    return r;
}

ValuationResult evaluate(const CutStatistics& stats, Regime regime, const SolverConfig& cfg) {
    if (regime == Regime::A) {
        cfg.validate();
        return evaluate_regime_a(stats, cfg.rounding_threshold);
    }
    return evaluate_regime_b(stats, cfg);
}

SchurOperators schur_operators(const BlockPartition& blocks, bool skip_gate) {
    const auto np = static_cast<Eigen::Index>(blocks.p_ids.size());
    const auto no = static_cast<Eigen::Index>(blocks.o_ids.size());
    if (blocks.O_PP.rows() != np || blocks.O_PO.rows() != np || blocks.O_OP.rows() != no ||
        blocks.O_OO.rows() != no)
        fail(ErrorKind::validation, "block dimensions inconsistent with the id lists");
    if (!skip_gate) {
        const SpectralBound b = spectral_radius_bound(blocks.O_PP);
        if (b.rho_upper >= 1.0 && b.power_iteration_estimate >= 1.0)
            fail(ErrorKind::stability, "invertibility of I - O_PP not supported by any bound");
    }
    const DenseMatrix A = DenseMatrix::Identity(np, np) - DenseMatrix(blocks.O_PP);
    Eigen::FullPivLU<DenseMatrix> lu(A);
    if (np > 0 && !lu.isInvertible()) fail(ErrorKind::stability, "I - O_PP is singular");
    SchurOperators out;
    const DenseMatrix PO(blocks.O_PO), OP(blocks.O_OP), OO(blocks.O_OO);
    out.T_PO = np > 0 ? DenseMatrix(lu.solve(PO)) : DenseMatrix(0, no);
    if (np > 0) {
        Eigen::FullPivLU<DenseMatrix> lu_t(A.transpose());
        out.U_OP = lu_t.solve(OP.transpose()).transpose();
    } else {
        out.U_OP = DenseMatrix(no, 0);
    }
    out.S_OO = DenseMatrix::Identity(no, no) - OO - OP * out.T_PO;
    return out;
}

ExternalShare effective_external_share(const CutStatistics& stats, const SolverConfig& cfg) {
    InternalEstimate est = estimate_internal_values(stats, cfg);
    ExternalShare out;
    const auto np = static_cast<Eigen::Index>(stats.p_ids.size());
    out.delta = Vector::Zero(np);
    for (Eigen::Index k = 0; k < stats.O_OP.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(stats.O_OP, k); it; ++it) out.delta[it.col()] += it.value();
    out.v_P = est.v_P;
    // delta' (I - O_PP)^{-1} pi_P with pi_P = b_P + O_PO v_O, i.e. delta' v_P.
    out.E_ext = out.delta.dot(out.v_P);
    const Vector pi = stats.b_P + stats.O_PO * stats.v_O;
    const double pi_total = pi.sum();
    if (pi_total != 0.0)
        out.omega_eff = out.E_ext / pi_total;
    else if (out.E_ext != 0.0)
        fail(ErrorKind::domain, "effective external share undefined for zero boundary primitives");
    double flows_net = 0.0;
    for (const auto& f : stats.flows) flows_net += in_ids(stats.p_ids, f.from) ? f.amount : -f.amount;
    out.W_meta = stats.b_P.sum() + (stats.O_PO * stats.v_O).sum() + flows_net - out.E_ext;
    return out;
}

std::map<NodeId, double> hedge_vector(const CutStatistics& stats) {
    std::map<NodeId, double> h;
    for (const auto& id : stats.o_ids) h[id] = 0.0;
    for (Eigen::Index i = 0; i < stats.O_PO.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(stats.O_PO, i); it; ++it)
            h[stats.o_ids.at(static_cast<std::size_t>(it.col()))] += it.value();
    return h;
}

double cut_gap(double gross, double W) {
    if (W == 0.0) fail(ErrorKind::domain, "cut gap undefined for W = 0");
    return (gross - W) / W;
}

double internal_cut_net(const OwnershipNetwork& network, const Perimeter& p, const Perimeter& r,
                        const std::map<NodeId, double>& v) {
    for (const auto& id : p.members())
        if (r.contains(id)) fail(ErrorKind::domain, "perimeters overlap on '" + id.str() + "'");
    auto value = [&](const NodeId& id) {
        auto it = v.find(id);
        if (it == v.end()) fail(ErrorKind::validation, "missing value for '" + id.str() + "'");
        return it->second;
    };
    // Seen from P: participations in R are assets, R's minorities in P are
    // claims; seen from R the same edges swap roles.
    double holdings = 0.0, minorities = 0.0;
    const auto& s = network.shares();
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
            const auto& owner = network.nodes()[static_cast<std::size_t>(it.row())];
            const auto& owned = network.nodes()[static_cast<std::size_t>(it.col())];
            const bool pr = p.contains(owner) && r.contains(owned);
            const bool rp = r.contains(owner) && p.contains(owned);
            if (pr || rp) holdings += it.value() * value(owned);
        }
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
            const auto& owner = network.nodes()[static_cast<std::size_t>(it.row())];
            const auto& owned = network.nodes()[static_cast<std::size_t>(it.col())];
            if (r.contains(owner) && p.contains(owned)) minorities += it.value() * value(owned);
        }
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
            const auto& owner = network.nodes()[static_cast<std::size_t>(it.row())];
            const auto& owned = network.nodes()[static_cast<std::size_t>(it.col())];
            if (p.contains(owner) && r.contains(owned)) minorities += it.value() * value(owned);
        }
    return holdings - minorities;
}

}  // namespace cbv
