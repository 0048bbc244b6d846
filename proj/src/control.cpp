#include "cbv/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbv/cut_engine.hpp"
#include "cbv/errors.hpp"

namespace cbv {

double ControlMatrix::at(const NodeId& controller, const NodeId& controlled) const {
    auto pos = [&](const NodeId& id) {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) fail(ErrorKind::membership, "unknown node '" + id.str() + "'");
        return static_cast<Eigen::Index>(it - ids.begin());
    };
    return weights(pos(controller), pos(controlled));
}

DenseMatrix dense_shares(const OwnershipNetwork& network) { return DenseMatrix(network.shares()); }

void normalize_columns(DenseMatrix& weights) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
        const double s = weights.col(j).sum();
        if (s != 0.0) weights.col(j) /= s;
    }
}

ControlMatrix threshold_control(const OwnershipNetwork& network, double tau, std::optional<int> depth, bool normalize) {
    if (!(tau > 0.0 && tau <= 1.0)) fail(ErrorKind::domain, "threshold tau must lie in (0,1]");
    if (depth && *depth < 1) fail(ErrorKind::domain, "reachability depth must be >= 1");
    const DenseMatrix S = dense_shares(network);
    const auto n = S.rows();
    DenseMatrix direct = (S.array() >= tau).cast<double>().matrix();
    DenseMatrix reach = direct;
    for (int step = 2; step <= depth.value_or(1); ++step) {
        DenseMatrix next = ((reach * direct).array() > 0.0 || reach.array() > 0.0).cast<double>().matrix();
        if (next == reach) break;
        reach = std::move(next);
    }
    if (depth && *depth > 1)
        for (Eigen::Index i = 0; i < n; ++i)
            if (direct(i, i) == 0.0) reach(i, i) = 0.0;
    ControlMatrix out{network.nodes(), reach};
    if (normalize) normalize_columns(out.weights);
    return out;
}

ControlMatrix herfindahl_control(const OwnershipNetwork& network, HerfindahlVariant variant) {
    const DenseMatrix S = dense_shares(network);
    ControlMatrix out{network.nodes(), DenseMatrix::Zero(S.rows(), S.cols())};
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
        const double total = S.col(j).sum();
        if (total == 0.0) continue;
        const double residual = std::max(0.0, 1.0 - total);
        const double H = S.col(j).squaredNorm() + residual * residual;
        if (variant == HerfindahlVariant::B)
            out.weights.col(j) = S.col(j) * H;
        else
            out.weights.col(j) = S.col(j).cwiseAbs2() / H;
    }
    return out;
}

DenseMatrix attenuated_series(const DenseMatrix& S, double alpha, int terms) {
    DenseMatrix sum = DenseMatrix::Zero(S.rows(), S.cols());
    DenseMatrix power = S;  // alpha^{k-1} S^k
    for (int k = 1; k <= terms; ++k) {
        sum += power;
        power = alpha * (power * S);
    }
    return sum;
}

double attenuated_tail_bound(const DenseMatrix& S, double alpha, int terms) {
    const double s = S.size() ? S.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
    const double q = alpha * s;
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
    return s * std::pow(q, terms) / (1.0 - q);
}

ControlMatrix attenuated_control(const OwnershipNetwork& network, double alpha, bool normalize) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::domain, "attenuation alpha must lie in (0,1)");
    const DenseMatrix S = dense_shares(network);
    const auto n = S.rows();
    SparseMatrix aS = network.shares() * alpha;
    const SpectralBound b = spectral_radius_bound(aS);
    if (b.rho_upper >= 1.0 && b.power_iteration_estimate >= 1.0)
        fail(ErrorKind::stability, "rho(alpha S) >= 1: attenuated series diverges");
    ControlMatrix out{network.nodes(), DenseMatrix::Zero(n, n)};
    if (n > 0) {
        const DenseMatrix A = DenseMatrix::Identity(n, n) - alpha * S;
        // W = S A^{-1}  <=>  A' W' = S'.
        Eigen::PartialPivLU<DenseMatrix> lu(A.transpose());
        out.weights = lu.solve(S.transpose()).transpose();
    }
    if (normalize) normalize_columns(out.weights);
    return out;
}

ControlMatrix control_matrix(const OwnershipNetwork& network, const ControlRuleSpec& rule) {
    rule.validate();
    switch (rule.option) {
        case ControlOption::A_threshold:
            return threshold_control(network, rule.tau, rule.reachability_depth, rule.normalize);
        case ControlOption::B_herfindahl: {
            auto m = herfindahl_control(network, HerfindahlVariant::B);
            if (rule.normalize) normalize_columns(m.weights);
            return m;
        }
        case ControlOption::B_prime: {
            auto m = herfindahl_control(network, HerfindahlVariant::B_prime);
            if (rule.normalize) normalize_columns(m.weights);
            return m;
        }
        case ControlOption::C_attenuated: return attenuated_control(network, rule.alpha, rule.normalize);
    }
    fail(ErrorKind::domain, "unknown control option");
}

Perimeter select_perimeter(const ControlMatrix& omega, const Perimeter& seed, double tau_p) {
    if (!(tau_p > 0.0 && tau_p <= 1.0)) fail(ErrorKind::domain, "perimeter threshold must lie in (0,1]");
    const auto n = static_cast<Eigen::Index>(omega.ids.size());
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (const auto& id : seed.members()) {
        auto it = std::lower_bound(omega.ids.begin(), omega.ids.end(), id);
        if (it == omega.ids.end() || *it != id) fail(ErrorKind::membership, "seed node '" + id.str() + "' unknown");
        in[static_cast<std::size_t>(it - omega.ids.begin())] = 1;
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (in[static_cast<std::size_t>(j)]) continue;
            double weight = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (in[static_cast<std::size_t>(i)]) weight += omega.weights(i, j);
            if (weight >= tau_p) {
                in[static_cast<std::size_t>(j)] = 1;
                changed = true;
            }
        }
    }
    std::set<NodeId> members;
    for (Eigen::Index i = 0; i < n; ++i)
        if (in[static_cast<std::size_t>(i)]) members.insert(omega.ids[static_cast<std::size_t>(i)]);
    return Perimeter(std::move(members));
}

}  // namespace cbv
