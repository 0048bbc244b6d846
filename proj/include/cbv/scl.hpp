#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbv/cut_engine.hpp"

namespace cbv {

class PwaFunction {
public:
    /// Throws a domain error unless there are >= 2 strictly increasing knots.
    PwaFunction(std::vector<double> knots, std::vector<double> values);

    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double> slopes() const;

    /// Outside [x_0, x_N] this is a domain error.
    double operator()(double x) const;

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

PwaFunction pwa_build(const std::vector<std::pair<double, double>>& samples);

double pwa_error_bound(double gamma_max, double delta);

struct DeltaMax {
    double delta = 0.0;
    long long segments = 0;
};

DeltaMax delta_max(double eps, double gamma_max);

struct Waterfall {
    double senior = 0.0;
    double junior = 0.0;
};

Waterfall eval_waterfall(double inflow, double cap);

double cap(double x, double c);
double floor_at(double x, double f);

struct State {
    std::string label;
    double probability = 0.0;
    std::optional<CutStatistics> stats;
    std::optional<double> value;
    std::optional<Regime> regime;
};

struct StateSpace {
    std::vector<State> states;

    void validate() const;
};

enum class AggregatorKind { expectation_Q, sdf_physical, cvar, kusuoka_mix, worst_case };

std::string_view to_string(AggregatorKind kind) noexcept;
AggregatorKind aggregator_from_string(std::string_view text);

struct AggregatorPolicy {
    AggregatorKind kind = AggregatorKind::expectation_Q;
    double alpha = 0.95;
    /// (level, weight) pairs for kusuoka_mix.
    std::vector<std::pair<double, double>> mu;
    /// Per-state SDF weights for sdf_physical.
    std::vector<double> M;
    /// Labels for worst_case; empty means every state.
    std::vector<std::string> S_star;

    void validate(std::size_t state_count) const;
};

/// Expected value of the lowest (1 - alpha) probability mass; the boundary
/// atom is split.
double cvar(const std::vector<double>& values, const std::vector<double>& probs, double alpha);

double aggregate(const std::vector<double>& values, const std::vector<double>& probs,
                 const std::vector<std::string>& labels, const AggregatorPolicy& policy);

struct SclResult {
    std::vector<double> per_state_values;
    double aggregate = 0.0;
};

SclResult scl_evaluate(const StateSpace& space, const AggregatorPolicy& policy, const SolverConfig& cfg);

}  // namespace cbv
