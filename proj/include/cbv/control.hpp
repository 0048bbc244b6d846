#pragma once

#include <optional>

#include "cbv/network.hpp"
#include "cbv/observer.hpp"

namespace cbv {

/// Control weights omega(i, j): influence of i over j.
struct ControlMatrix {
    NodeIds ids;
    DenseMatrix weights;

    double at(const NodeId& controller, const NodeId& controlled) const;
};

DenseMatrix dense_shares(const OwnershipNetwork& network);

/// Option A. Direct indicator s_ij >= tau; depth > 1 adds boolean
/// reachability over majority edges up to that many hops.
ControlMatrix threshold_control(const OwnershipNetwork& network, double tau,
                                std::optional<int> depth = std::nullopt, bool normalize = false);

enum class HerfindahlVariant { B, B_prime };

/// Option B / B'. Sub-unit columns are completed with a dispersed holder that
/// enters H_j but never appears in the output.
ControlMatrix herfindahl_control(const OwnershipNetwork& network, HerfindahlVariant variant);

/// Option C: S (I - alpha S)^{-1}.
ControlMatrix attenuated_control(const OwnershipNetwork& network, double alpha, bool normalize = false);

/// Truncated series sum_{k=1..K} alpha^{k-1} S^k.
DenseMatrix attenuated_series(const DenseMatrix& S, double alpha, int terms);

/// ||S||_inf ||alpha S||_inf^K / (1 - ||alpha S||_inf); infinite when the
/// contraction factor is >= 1.
double attenuated_tail_bound(const DenseMatrix& S, double alpha, int terms);

ControlMatrix control_matrix(const OwnershipNetwork& network, const ControlRuleSpec& rule);

/// Rescales each nonzero column to unit sum.
void normalize_columns(DenseMatrix& weights);

/// Grows the seed until no outside node has in-perimeter control >= tau_P.
Perimeter select_perimeter(const ControlMatrix& omega, const Perimeter& seed, double tau_p);

}  // namespace cbv
