#pragma once

#include <array>
#include <optional>
#include <vector>

#include "cbv/cut_engine.hpp"
#include "cbv/observer.hpp"

namespace cbv {

/// Boundary components of one valuation, kept for the sign fallback.
struct WComponents {
    double base_total = 0.0;
    double T_out = 0.0;
    double T_in = 0.0;

    double W() const noexcept { return base_total + T_out - T_in; }
};

struct FisherQuad {
    double W_prev_prevObs = 0.0;
    double W_curr_prevObs = 0.0;
    double W_prev_currObs = 0.0;
    double W_curr_currObs = 0.0;
    /// Present when the quad came from cross_priced_quad.
    std::optional<std::array<WComponents, 4>> components;

    static FisherQuad from_values(double pp, double cp, double pc, double cc);
};

struct FisherIndices {
    double IV_L = 0.0;
    double IP_L = 0.0;
    double IV_P = 0.0;
    double IP_P = 0.0;
    double IV_F = 0.0;
    double IP_F = 0.0;
    double G_F = 0.0;
    /// Set by the sign fallback: sign of W_curr_currObs * W_prev_prevObs.
    std::optional<int> sign;
};

struct CrossPricingOptions {
    /// Re-estimate v_P under each observer (Regime B) instead of re-pricing the
    /// estimate obtained under the period's own observer. With linear pricing
    /// the two coincide; the flag is disclosed.
    bool reestimate_under_observer = true;
};

/// Re-prices a period's statistics for an observer: monetary amounts scaled
/// by observer.pricing_factor().
CutStatistics reprice(const CutStatistics& stats, const Observer& observer);

FisherQuad cross_priced_quad(const CutStatistics& stats_prev, const CutStatistics& stats_curr,
                             const Observer& obs_prev, const Observer& obs_curr,
                             const SolverConfig& cfg, const CrossPricingOptions& options = {});

struct AlignedPeriods {
    CutStatistics prev;
    CutStatistics curr;
    NodeIds excluded;
};

/// Restricts two periods to their common P and O ids; entering and exiting
/// nodes are listed in `excluded`.
AlignedPeriods align_periods(const CutStatistics& prev, const CutStatistics& curr);

/// The four elementary ratios. With allow_sign_fallback, nonpositive
/// denominators switch to per-component absolute indices (requires quad
/// components) and record the sign.
FisherIndices elementary_indices(const FisherQuad& quad, bool allow_sign_fallback = false);

FisherIndices fisher_combine(const FisherIndices& elementary);

std::vector<double> chain_link(const std::vector<double>& multipliers);

struct BilateralIndex {
    double L = 0.0;
    double P = 0.0;
    double F = 0.0;
};

BilateralIndex bilateral_goods_index(const std::vector<double>& p0, const std::vector<double>& p1,
                                     const std::vector<double>& q0, const std::vector<double>& q1);

}  // namespace cbv
