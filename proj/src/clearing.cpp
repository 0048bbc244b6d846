#include "cbv/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbv/errors.hpp"

namespace cbv {

std::string_view to_string(FixedPointSelection selection) noexcept {
    return selection == FixedPointSelection::greatest ? "greatest" : "least";
}

FixedPointSelection selection_from_string(std::string_view text) {
    if (text == "greatest") return FixedPointSelection::greatest;
    if (text == "least") return FixedPointSelection::least;
    fail(ErrorKind::domain, "fixed-point selection must be 'greatest' or 'least'");
}

void ClearingProblem::validate() const {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    if (classes.empty()) fail(ErrorKind::validation, "clearing problem needs at least one seniority class");
    for (std::size_t l = 0; l < classes.size(); ++l) {
        const auto& L = classes[l];
        if (L.rows() != n || L.cols() != n)
            fail(ErrorKind::validation, "liability class " + std::to_string(l + 1) + " is not |N|x|N|");
        if (!L.allFinite() || (L.array() < 0.0).any())
            fail(ErrorKind::domain, "liability class " + std::to_string(l + 1) + " has negative or non-finite entries");
    }
    if (a.size() != n) fail(ErrorKind::validation, "resource vector length differs from node count");
    if (!a.allFinite() || (a.array() < 0.0).any()) fail(ErrorKind::domain, "resources must be finite and >= 0");
    if (!gamma.empty() && gamma.size() != classes.size())
        fail(ErrorKind::validation, "default costs must be given per class");
    for (const auto& g : gamma) {
        if (g.size() != n) fail(ErrorKind::validation, "default-cost vector length differs from node count");
        if ((g.array() < 0.0).any() || (g.array() > 1.0).any())
            fail(ErrorKind::domain, "default-cost fractions must lie in [0,1]");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (nodes[i] == nodes[j]) fail(ErrorKind::validation, "duplicate node '" + nodes[i].str() + "'");
}

Vector ClearingProblem::obligations(std::size_t cls) const { return classes.at(cls).rowwise().sum(); }

namespace {

Vector ratios(const Vector& p, const Vector& pbar) {
    Vector theta(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) theta[i] = pbar[i] > 0.0 ? p[i] / pbar[i] : 1.0;
    return theta;
}

}  // namespace

std::vector<Vector> payment_map(const ClearingProblem& problem, const std::vector<Vector>& payments) {
    const std::size_t m = problem.classes.size();
    const auto n = static_cast<Eigen::Index>(problem.nodes.size());
    std::vector<Vector> pbar(m);
    for (std::size_t l = 0; l < m; ++l) pbar[l] = problem.obligations(l);

    Vector inflow = problem.a;
    for (std::size_t l = 0; l < m; ++l) inflow += problem.classes[l].transpose() * ratios(payments[l], pbar[l]);

    std::vector<Vector> next(m, Vector::Zero(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        // Class l receives what is left after every senior class is paid in
        // full and after default costs on shortfalls of classes up to l.
        double senior_due = 0.0, cost = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            const double g = problem.gamma.empty() ? 0.0 : problem.gamma[l][i];
            cost += g * (pbar[l][i] - payments[l][i]);
            next[l][i] = std::clamp(inflow[i] - senior_due - cost, 0.0, pbar[l][i]);
            senior_due += pbar[l][i];
        }
    }
    return next;
}

ClearingOutcome clear(const ClearingProblem& problem, const ClearingConfig& cfg) {
    problem.validate();
    if (!(cfg.eps > 0.0) || cfg.max_iters < 1) fail(ErrorKind::domain, "clearing needs eps > 0 and max_iters >= 1");
    const std::size_t m = problem.classes.size();
    const auto n = static_cast<Eigen::Index>(problem.nodes.size());
    std::vector<Vector> pbar(m);
    double scale = 1.0;
    for (std::size_t l = 0; l < m; ++l) {
        pbar[l] = problem.obligations(l);
        if (n > 0) scale = std::max(scale, pbar[l].maxCoeff());
    }
    ClearingOutcome out;
    out.selection = cfg.selection;
    std::vector<Vector> p = cfg.selection == FixedPointSelection::greatest ? pbar : std::vector<Vector>(m, Vector::Zero(n));
    if (cfg.record_trace) out.trace.push_back(p);
    const double tol = cfg.eps * scale;
    for (int k = 1;; ++k) {
        std::vector<Vector> next = payment_map(problem, p);
        double delta = 0.0;
        for (std::size_t l = 0; l < m; ++l)
            if (n > 0) delta = std::max(delta, (next[l] - p[l]).cwiseAbs().maxCoeff());
        p = std::move(next);
        if (cfg.record_trace) out.trace.push_back(p);
        out.iterations = k;
        out.residual = delta;
        if (delta < tol) break;
        if (k >= cfg.max_iters) {
            std::ostringstream msg;
            msg << "clearing did not converge in " << cfg.max_iters << " sweeps (last change " << delta << ")";
            throw ConvergenceError(msg.str(), delta, k);
        }
    }
    out.payments = p;
    for (std::size_t l = 0; l < m; ++l) out.theta.push_back(ratios(p[l], pbar[l]));
    return out;
}

NetBoundaryFlows net_boundary_flows(const ClearingProblem& problem, const ClearingOutcome& outcome,
                                    const Perimeter& perimeter) {
    problem.validate();
    const auto n = static_cast<Eigen::Index>(problem.nodes.size());
    if (outcome.theta.size() != problem.classes.size())
        fail(ErrorKind::validation, "outcome class count differs from the problem");
    for (const auto& t : outcome.theta)
        if (t.size() != n) fail(ErrorKind::validation, "outcome payout ratios do not match the node set");
    for (const auto& id : perimeter.members())
        if (std::find(problem.nodes.begin(), problem.nodes.end(), id) == problem.nodes.end())
            fail(ErrorKind::membership, "perimeter member '" + id.str() + "' not in the clearing problem");

    std::vector<Eigen::Index> order(problem.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) {
        return problem.nodes[static_cast<std::size_t>(x)] < problem.nodes[static_cast<std::size_t>(y)];
    });
    NetBoundaryFlows out;
    std::vector<Eigen::Index> prow, orow;
    for (auto i : order) {
        const auto& id = problem.nodes[static_cast<std::size_t>(i)];
        if (perimeter.contains(id)) {
            out.p_ids.push_back(id);
            prow.push_back(i);
        } else {
            out.o_ids.push_back(id);
            orow.push_back(i);
        }
    }
    const auto np = static_cast<Eigen::Index>(prow.size()), no = static_cast<Eigen::Index>(orow.size());
    out.X_PO = DenseMatrix::Zero(np, no);
    out.X_OP = DenseMatrix::Zero(no, np);
    for (std::size_t l = 0; l < problem.classes.size(); ++l) {
        const auto& L = problem.classes[l];
        const auto& th = outcome.theta[l];
        for (Eigen::Index a = 0; a < np; ++a)
            for (Eigen::Index b = 0; b < no; ++b) {
                out.X_PO(a, b) += L(prow[static_cast<std::size_t>(a)], orow[static_cast<std::size_t>(b)]) * th[prow[static_cast<std::size_t>(a)]];
                out.X_OP(b, a) += L(orow[static_cast<std::size_t>(b)], prow[static_cast<std::size_t>(a)]) * th[orow[static_cast<std::size_t>(b)]];
            }
    }
    for (Eigen::Index a = 0; a < np; ++a)
        for (Eigen::Index b = 0; b < no; ++b)
            if (out.X_PO(a, b) != 0.0)
                out.flows.push_back({out.p_ids[static_cast<std::size_t>(a)], out.o_ids[static_cast<std::size_t>(b)], EdgeType::debt, out.X_PO(a, b)});
    for (Eigen::Index b = 0; b < no; ++b)
        for (Eigen::Index a = 0; a < np; ++a)
            if (out.X_OP(b, a) != 0.0)
                out.flows.push_back({out.o_ids[static_cast<std::size_t>(b)], out.p_ids[static_cast<std::size_t>(a)], EdgeType::debt, out.X_OP(b, a)});
    return out;
}

}  // namespace cbv
