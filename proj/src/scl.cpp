#include "cbv/scl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbv/errors.hpp"

namespace cbv {

PwaFunction::PwaFunction(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() < 2) fail(ErrorKind::domain, "piecewise-affine function needs at least two knots");
    if (values_.size() != knots_.size()) fail(ErrorKind::domain, "knot and value counts differ");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) fail(ErrorKind::domain, "non-finite knot or value");
        if (i > 0 && !(knots_[i] > knots_[i - 1])) fail(ErrorKind::domain, "knots must be strictly increasing");
    }
}

std::vector<double> PwaFunction::slopes() const {
    std::vector<double> s(knots_.size() - 1);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
        s[i] = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
    return s;
}

double PwaFunction::operator()(double x) const {
    if (!(x >= knots_.front() && x <= knots_.back())) fail(ErrorKind::domain, "evaluation outside the knot range");
    auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
    const auto k = static_cast<std::size_t>(it - knots_.begin());
    if (*it == x) return values_[k];
    const double x0 = knots_[k - 1], x1 = knots_[k];
    const double w = (x - x0) / (x1 - x0);
    return values_[k - 1] + w * (values_[k] - values_[k - 1]);
}

PwaFunction pwa_build(const std::vector<std::pair<double, double>>& samples) {
    std::vector<double> x, y;
    for (const auto& [a, b] : samples) {
        x.push_back(a);
        y.push_back(b);
    }
    return PwaFunction(std::move(x), std::move(y));
}

double pwa_error_bound(double gamma_max, double delta) {
    if (!(gamma_max >= 0.0) || !(delta > 0.0)) fail(ErrorKind::domain, "need curvature >= 0 and step > 0");
    return gamma_max * delta * delta / 8.0;
}

DeltaMax delta_max(double eps, double gamma_max) {
    if (!(eps > 0.0) || !(gamma_max > 0.0)) fail(ErrorKind::domain, "need eps > 0 and curvature > 0");
    DeltaMax out;
    out.delta = std::sqrt(8.0 * eps / gamma_max);
    out.segments = static_cast<long long>(std::ceil(1.0 / out.delta));
    return out;
}

Waterfall eval_waterfall(double inflow, double cap_level) {
    if (!(inflow >= 0.0) || !(cap_level >= 0.0)) fail(ErrorKind::domain, "waterfall needs inflow >= 0 and cap >= 0");
    return {std::min(inflow, cap_level), std::max(0.0, inflow - cap_level)};
}

double cap(double x, double c) { return std::min(x, c); }
double floor_at(double x, double f) { return std::max(x, f); }

void StateSpace::validate() const {
    if (states.empty()) fail(ErrorKind::domain, "state space is empty");
    double total = 0.0;
    for (const auto& s : states) {
        if (!(s.probability >= 0.0)) fail(ErrorKind::domain, "state weights must be >= 0");
        if (!s.stats && !s.value) fail(ErrorKind::domain, "state '" + s.label + "' has neither statistics nor a value");
        total += s.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::domain, "state weights must sum to 1");
}

std::string_view to_string(AggregatorKind kind) noexcept {
    switch (kind) {
        case AggregatorKind::expectation_Q: return "expectation_Q";
        case AggregatorKind::sdf_physical: return "sdf_physical";
        case AggregatorKind::cvar: return "cvar";
        case AggregatorKind::kusuoka_mix: return "kusuoka_mix";
        case AggregatorKind::worst_case: return "worst_case";
    }
    return "expectation_Q";
}

AggregatorKind aggregator_from_string(std::string_view text) {
    for (auto k : {AggregatorKind::expectation_Q, AggregatorKind::sdf_physical, AggregatorKind::cvar,
                   AggregatorKind::kusuoka_mix, AggregatorKind::worst_case})
        if (to_string(k) == text) return k;
    fail(ErrorKind::domain, "unknown aggregator '" + std::string(text) + "'");
}

void AggregatorPolicy::validate(std::size_t state_count) const {
    switch (kind) {
        case AggregatorKind::cvar:
            if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::domain, "CVaR level must lie in (0,1)");
            break;
        case AggregatorKind::kusuoka_mix: {
            if (mu.empty()) fail(ErrorKind::domain, "Kusuoka mix needs a non-empty measure");
            double total = 0.0;
            for (auto [level, w] : mu) {
                if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::domain, "Kusuoka levels must lie in (0,1)");
                if (!(w >= 0.0)) fail(ErrorKind::domain, "Kusuoka weights must be >= 0");
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::domain, "Kusuoka weights must sum to 1");
            break;
        }
        case AggregatorKind::sdf_physical:
            if (M.size() != state_count) fail(ErrorKind::domain, "SDF weights must be given per state");
            for (double m : M)
                if (!(m >= 0.0)) fail(ErrorKind::domain, "SDF weights must be >= 0");
            break;
        case AggregatorKind::expectation_Q:
        case AggregatorKind::worst_case: break;
    }
}

double cvar(const std::vector<double>& values, const std::vector<double>& probs, double alpha) {
    if (values.size() != probs.size() || values.empty()) fail(ErrorKind::domain, "values and weights must match");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::domain, "CVaR level must lie in (0,1)");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const double tail = 1.0 - alpha;
    double mass = 0.0, acc = 0.0;
    for (auto k : order) {
        const double take = std::min(probs[k], tail - mass);
        if (take <= 0.0) break;
        acc += take * values[k];
        mass += take;
    }
    return acc / tail;
}

double aggregate(const std::vector<double>& values, const std::vector<double>& probs,
                 const std::vector<std::string>& labels, const AggregatorPolicy& policy) {
    policy.validate(values.size());
    switch (policy.kind) {
        case AggregatorKind::expectation_Q: {
            double s = 0.0;
            for (std::size_t k = 0; k < values.size(); ++k) s += probs[k] * values[k];
            return s;
        }
        case AggregatorKind::sdf_physical: {
            double s = 0.0;
            for (std::size_t k = 0; k < values.size(); ++k) s += probs[k] * policy.M[k] * values[k];
            return s;
        }
        case AggregatorKind::cvar: return cvar(values, probs, policy.alpha);
        case AggregatorKind::kusuoka_mix: {
            double s = 0.0;
            for (auto [level, w] : policy.mu) s += w * cvar(values, probs, level);
            return s;
        }
        case AggregatorKind::worst_case: {
            bool any = false;
            double worst = 0.0;
            for (std::size_t k = 0; k < values.size(); ++k) {
                const bool selected = policy.S_star.empty() ||
                    std::find(policy.S_star.begin(), policy.S_star.end(), labels.at(k)) != policy.S_star.end();
                if (!selected) continue;
                worst = any ? std::min(worst, values[k]) : values[k];
                any = true;
            }
            if (!any) fail(ErrorKind::domain, "worst-case state subset is empty");
            return worst;
        }
    }
    fail(ErrorKind::domain, "unknown aggregator");
}

SclResult scl_evaluate(const StateSpace& space, const AggregatorPolicy& policy, const SolverConfig& cfg) {
    space.validate();
    SclResult out;
    std::vector<double> probs;
    std::vector<std::string> labels;
    for (const auto& s : space.states) {
        double v = 0.0;
        if (s.stats) {
            const Regime regime = s.regime.value_or(s.stats->v_P ? Regime::A : Regime::B);
            v = evaluate(*s.stats, regime, cfg).W;
        } else {
            v = *s.value;
        }
        out.per_state_values.push_back(v);
        probs.push_back(s.probability);
        labels.push_back(s.label);
    }
    if (!policy.S_star.empty())
        for (const auto& l : policy.S_star)
            if (std::find(labels.begin(), labels.end(), l) == labels.end())
                fail(ErrorKind::domain, "worst-case subset names unknown state '" + l + "'");
    out.aggregate = aggregate(out.per_state_values, probs, labels, policy);
    return out;
}

}  // namespace cbv
