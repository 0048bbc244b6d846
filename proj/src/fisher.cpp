#include "cbv/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

#include "cbv/errors.hpp"

namespace cbv {

FisherQuad FisherQuad::from_values(double pp, double cp, double pc, double cc) {
    FisherQuad q;
    q.W_prev_prevObs = pp;
    q.W_curr_prevObs = cp;
    q.W_prev_currObs = pc;
    q.W_curr_currObs = cc;
    return q;
}

CutStatistics reprice(const CutStatistics& stats, const Observer& observer) {
    return scale_units(observer.pricing_factor(), stats);
}

namespace {

WComponents components_of(const ValuationResult& r) { return {r.base_total, r.T_out, r.T_in}; }

ValuationResult value_under(const CutStatistics& stats, const Observer& own, const Observer& target,
                            const SolverConfig& cfg, const CrossPricingOptions& options) {
    if (target.regime == Regime::A || options.reestimate_under_observer)
        return evaluate(reprice(stats, target), target.regime, cfg);
    // Estimate under the period's own observer, then re-price the estimate.
    CutStatistics own_priced = reprice(stats, own);
    const InternalEstimate est = estimate_internal_values(own_priced, cfg);
    CutStatistics fixed = stats;
    fixed.v_P = est.v_P / own.pricing_factor();
    fixed.O_PP.reset();
    ValuationResult r = evaluate_regime_a(reprice(fixed, target), cfg.rounding_threshold);
    r.solver_log = est.log;
    return r;
}

}  // namespace

FisherQuad cross_priced_quad(const CutStatistics& stats_prev, const CutStatistics& stats_curr,
                             const Observer& obs_prev, const Observer& obs_curr, const SolverConfig& cfg,
                             const CrossPricingOptions& options) {
    if (obs_prev.regime != obs_curr.regime)
        fail(ErrorKind::protocol, "observers use different information regimes");
    if (stats_prev.stage != stats_curr.stage)
        fail(ErrorKind::protocol, "pre- and post-clearing flows mixed across periods (D5)");
    if (stats_prev.p_ids != stats_curr.p_ids || stats_prev.o_ids != stats_curr.o_ids)
        fail(ErrorKind::protocol, "perimeter or complement differs across periods; align the periods first");
    const ValuationResult pp = value_under(stats_prev, obs_prev, obs_prev, cfg, options);
    const ValuationResult cp = value_under(stats_curr, obs_curr, obs_prev, cfg, options);
    const ValuationResult pc = value_under(stats_prev, obs_prev, obs_curr, cfg, options);
    const ValuationResult cc = value_under(stats_curr, obs_curr, obs_curr, cfg, options);
    FisherQuad q = FisherQuad::from_values(pp.W, cp.W, pc.W, cc.W);
    q.components = std::array<WComponents, 4>{components_of(pp), components_of(cp), components_of(pc), components_of(cc)};
    return q;
}

namespace {

std::vector<Eigen::Index> positions(const NodeIds& all, const NodeIds& keep) {
    std::vector<Eigen::Index> out;
    for (const auto& id : keep)
        out.push_back(static_cast<Eigen::Index>(std::lower_bound(all.begin(), all.end(), id) - all.begin()));
    return out;
}

SparseMatrix subset(const SparseMatrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
    DenseMatrix d(m);
    DenseMatrix s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d(rows[r], cols[c]);
    return s.sparseView(0.0, 0.0);
}

Vector subset(const Vector& v, const std::vector<Eigen::Index>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
    return out;
}

CutStatistics restrict_to(const CutStatistics& s, const NodeIds& p, const NodeIds& o) {
    const auto pi = positions(s.p_ids, p);
    const auto oi = positions(s.o_ids, o);
    CutStatistics out;
    out.p_ids = p;
    out.o_ids = o;
    out.b_P = subset(s.b_P, pi);
    out.v_O = subset(s.v_O, oi);
    if (s.v_P) out.v_P = subset(*s.v_P, pi);
    out.O_PO = subset(s.O_PO, pi, oi);
    out.O_OP = subset(s.O_OP, oi, pi);
    if (s.O_PP) out.O_PP = subset(*s.O_PP, pi, pi);
    out.stage = s.stage;
    auto kept = [&](const NodeId& id) {
        return std::binary_search(p.begin(), p.end(), id) || std::binary_search(o.begin(), o.end(), id);
    };
    for (const auto& f : s.flows)
        if (kept(f.from) && kept(f.to)) out.flows.push_back(f);
    return out;
}

NodeIds intersect(const NodeIds& a, const NodeIds& b) {
    NodeIds out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void add_difference(const NodeIds& a, const NodeIds& b, NodeIds& out) {
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
}

}  // namespace

AlignedPeriods align_periods(const CutStatistics& prev, const CutStatistics& curr) {
    prev.validate_shapes();
    curr.validate_shapes();
    const NodeIds p = intersect(prev.p_ids, curr.p_ids);
    const NodeIds o = intersect(prev.o_ids, curr.o_ids);
    AlignedPeriods out{restrict_to(prev, p, o), restrict_to(curr, p, o), {}};
    add_difference(prev.p_ids, curr.p_ids, out.excluded);
    add_difference(prev.o_ids, curr.o_ids, out.excluded);
    std::sort(out.excluded.begin(), out.excluded.end());
    out.excluded.erase(std::unique(out.excluded.begin(), out.excluded.end()), out.excluded.end());
    return out;
}

FisherIndices elementary_indices(const FisherQuad& quad, bool allow_sign_fallback) {
    const double pp = quad.W_prev_prevObs, cp = quad.W_curr_prevObs, pc = quad.W_prev_currObs,
                 cc = quad.W_curr_currObs;
    for (double w : {pp, cp, pc, cc})
        if (!std::isfinite(w)) fail(ErrorKind::domain, "non-finite valuation in Fisher quad");
    FisherIndices out;
    if (pp > 0 && cp > 0 && pc > 0 && cc > 0) {
        out.IV_L = cp / pp;
        out.IP_L = pc / pp;
        out.IV_P = cc / pc;
        out.IP_P = cc / cp;
        return out;
    }
    if (!allow_sign_fallback || !quad.components) {
        std::ostringstream msg;
        msg << "nonpositive valuation in Fisher quad (W_prev_prevObs=" << pp << ", W_curr_prevObs=" << cp
            << ", W_prev_currObs=" << pc << ", W_curr_currObs=" << cc << ")";
        if (allow_sign_fallback) msg << "; sign fallback needs per-component values";
        fail(ErrorKind::sign, msg.str());
    }
    std::array<double, 4> a{};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& c = (*quad.components)[k];
        a[k] = std::abs(c.base_total) + std::abs(c.T_out) + std::abs(c.T_in);
        if (!(a[k] > 0)) fail(ErrorKind::sign, "all boundary components vanish in one valuation");
    }
    out.IV_L = a[1] / a[0];
    out.IP_L = a[2] / a[0];
    out.IV_P = a[3] / a[2];
    out.IP_P = a[3] / a[1];
    out.sign = (cc >= 0 ? 1 : -1) * (pp >= 0 ? 1 : -1);
    return out;
}

FisherIndices fisher_combine(const FisherIndices& e) {
    for (double x : {e.IV_L, e.IP_L, e.IV_P, e.IP_P})
        if (!(x > 0.0)) fail(ErrorKind::domain, "elementary indices must be positive");
    FisherIndices out = e;
    out.IV_F = std::sqrt(e.IV_L * e.IV_P);
    out.IP_F = std::sqrt(e.IP_L * e.IP_P);
    out.G_F = out.IV_F * out.IP_F;
    return out;
}

std::vector<double> chain_link(const std::vector<double>& multipliers) {
    std::vector<double> levels{1.0};
    levels.reserve(multipliers.size() + 1);
    for (double g : multipliers) {
        if (!(g > 0.0)) fail(ErrorKind::domain, "chain multipliers must be positive");
        levels.push_back(levels.back() * g);
    }
    return levels;
}

BilateralIndex bilateral_goods_index(const std::vector<double>& p0, const std::vector<double>& p1,
                                     const std::vector<double>& q0, const std::vector<double>& q1) {
    const auto n = p0.size();
    if (n == 0 || p1.size() != n || q0.size() != n || q1.size() != n)
        fail(ErrorKind::domain, "price and quantity vectors must be non-empty with equal length");
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };
    const double d0 = dot(p0, q0), d1 = dot(p0, q1);
    if (!(d0 > 0.0) || !(d1 > 0.0)) fail(ErrorKind::domain, "base-period expenditures must be positive");
    BilateralIndex out;
    out.L = dot(p1, q0) / d0;
    out.P = dot(p1, q1) / d1;
    if (out.L * out.P < 0.0) fail(ErrorKind::domain, "Laspeyres and Paasche have opposite signs");
    out.F = std::sqrt(out.L * out.P);
    return out;
}

}  // namespace cbv
