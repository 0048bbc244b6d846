#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cbv/cut_engine.hpp"

namespace cbv {

enum class NormKind { one, two, inf };

std::string_view to_string(NormKind norm) noexcept;
NormKind norm_from_string(std::string_view text);

struct PerturbationSpec {
    NormKind p = NormKind::inf;
    double eta = 0.0;      // bound on ||Δb_P||_p
    double epsilon = 0.0;  // bound on ||Δv_O||_p

    void validate() const;
};

/// Induced operator norms of a dense or sparse block. norm_2 is exact (SVD)
/// up to kExactNorm2Limit rows/cols, otherwise the certified upper bound
/// sqrt(||A||_1 ||A||_inf).
inline constexpr Eigen::Index kExactNorm2Limit = 256;

double induced_norm(const DenseMatrix& a, NormKind p);
double vector_norm(const Vector& x, NormKind p);
NormKind dual_norm(NormKind p) noexcept;

struct BoundaryBound {
    double bound = 0.0;
    /// Only set for p = 2: sqrt(|P|) (eta + ||O_PO||_2 eps).
    std::optional<double> loose_l2;
};

BoundaryBound boundary_bound(const PerturbationSpec& spec, const SparseMatrix& O_PO, std::size_t p_count);

struct RegimeBBound {
    double boundary = 0.0;
    double extension = 0.0;
    double total = 0.0;
    double inverse_norm = 0.0;
};

/// Boundary bound plus the estimated-internal-values term.
RegimeBBound regime_b_bound(const PerturbationSpec& spec, const BlockPartition& blocks);

struct ConditioningReport {
    double rho_estimate = 0.0;
    double kappa2 = 1.0;
    bool kappa2_exact = true;
    std::optional<double> regularization_used;
    std::optional<std::pair<double, double>> band;
};

inline constexpr Eigen::Index kExactKappaLimit = 64;

ConditioningReport condition_diagnostics(const SparseMatrix& O_PP);

enum class NoiseTarget { O_PP, O_PO, O_OP, b_P, v_O };

enum class BandQuantity {
    consolidated_value,  // W(P)
    internal_total,      // 1' v_P
};

struct NoiseSpec {
    /// Additive noise drawn uniformly in [lower, upper]. A symmetric amplitude
    /// a is lower = -a, upper = a.
    double lower = 0.0;
    double upper = 0.0;
    NoiseTarget target = NoiseTarget::O_PP;
    /// Restricts the perturbed entries; empty means every stored nonzero of
    /// the target (every entry for vectors).
    std::vector<std::pair<Eigen::Index, Eigen::Index>> mask;
    /// One draw shared by all masked entries instead of independent draws.
    bool common_factor = false;
    /// Also evaluates the two corners lower/upper in addition to random draws.
    bool include_extremes = true;
    BandQuantity quantity = BandQuantity::consolidated_value;

    static NoiseSpec symmetric(double amplitude);
};

struct MonteCarloBand {
    double low = 0.0;
    double high = 0.0;
    double nominal = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;
    std::vector<std::size_t> excluded_draws;
};

/// Min/max envelope over perturbed recomputations. Regime B is used when
/// stats carries O_PP, Regime A otherwise. Deterministic for a fixed seed,
/// whatever the thread count.
MonteCarloBand monte_carlo_band(const CutStatistics& stats, const SolverConfig& cfg,
                                const NoiseSpec& noise, std::size_t draws, std::uint64_t seed,
                                unsigned threads = 1);

}  // namespace cbv
