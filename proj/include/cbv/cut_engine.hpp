#pragma once

#include <map>
#include <tuple>
#include <optional>
#include <string>
#include <vector>

#include "cbv/network.hpp"
#include "cbv/observer.hpp"
#include "cbv/types.hpp"

namespace cbv {

enum class FlowStage { pre_clearing, post_clearing };

std::string_view to_string(FlowStage stage) noexcept;

/// A boundary amount already expressed in currency (e.g. a post-clearing debt
/// payment). Direction follows the endpoints: P->O adds to T_out, O->P to T_in.
struct BoundaryFlow {
    NodeId from;
    NodeId to;
    EdgeType type = EdgeType::debt;
    double amount = 0.0;
};

/// Boundary statistics of one perimeter. Share blocks are indexed by p_ids /
/// o_ids in canonical order.
struct CutStatistics {
    NodeIds p_ids;
    NodeIds o_ids;
    Vector b_P;
    Vector v_O;
    std::optional<Vector> v_P;
    SparseMatrix O_PO;
    SparseMatrix O_OP;
    std::optional<SparseMatrix> O_PP;
    std::vector<BoundaryFlow> flows;
    FlowStage stage = FlowStage::pre_clearing;

    /// Builds statistics from a partition plus node primitives keyed by id.
    static CutStatistics from_partition(const BlockPartition& blocks,
                                        const std::map<NodeId, double>& b,
                                        const std::map<NodeId, double>& v,
                                        bool keep_internal_block);

    /// Throws a validation error on any dimension mismatch or on flows whose
    /// endpoints do not straddle the cut.
    void validate_shapes() const;
};

/// Multiplies every monetary quantity by kappa (> 0); shares are untouched.
CutStatistics scale_units(double kappa, const CutStatistics& stats);

enum class SolveMethod { direct, neumann, iterative_krylov };

std::string_view to_string(SolveMethod method) noexcept;
SolveMethod solve_method_from_string(std::string_view text);

/// |P| up to which the default method is a direct sparse factorization.
inline constexpr std::size_t kDirectSolveLimit = 2048;

struct SolverConfig {
    std::optional<SolveMethod> method;
    double eps = 1e-10;
    int max_iters = 10000;
    /// O_PP <- damping * O_PP, disclosed in the log.
    std::optional<double> damping;
    /// Solves (I - O_PP + eps_reg I) instead of (I - O_PP).
    std::optional<double> regularization;
    /// Relaxation weight for the Neumann sweep; 1 is the plain series.
    double relaxation = 1.0;
    /// Threshold below which boundary amounts are dropped (observer tau).
    double rounding_threshold = 0.0;

    void validate() const;
    static SolverConfig from_observer(const Observer& observer);
};

struct SpectralBound {
    double rho_upper = 0.0;
    double norm_1 = 0.0;
    double norm_inf = 0.0;
    double norm_2 = 0.0;
    bool gershgorin_ok = true;
    double power_iteration_estimate = 0.0;
};

/// Cheap certified bounds on rho(O_PP) plus a power-method estimate on |O_PP|.
SpectralBound spectral_radius_bound(const SparseMatrix& block);

struct SolverLog {
    std::string method = "none";
    int iterations = 0;
    double residual = 0.0;
    double rho_bound = 0.0;
    double power_estimate = 0.0;
    std::optional<double> damping;
    std::optional<double> regularization;
    std::size_t dropped_edges = 0;
    std::vector<std::string> warnings;
};

struct PricedEdge {
    NodeId from;
    NodeId to;
    EdgeType type = EdgeType::equity;
    double amount = 0.0;
};

struct ValuationResult {
    double W = 0.0;
    double base_total = 0.0;
    double T_out = 0.0;
    double T_in = 0.0;
    Vector v_P_used;
    std::vector<PricedEdge> edges_PO;
    std::vector<PricedEdge> edges_OP;
    SolverLog solver_log;
};

/// Cut formula with observed v_P. O_PP is never read.
ValuationResult evaluate_regime_a(const CutStatistics& stats, double rounding_threshold = 0.0);

struct InternalEstimate {
    Vector v_P;
    SolverLog log;
};

InternalEstimate estimate_internal_values(const CutStatistics& stats, const SolverConfig& cfg);

/// Estimates v_P then applies the cut formula.
ValuationResult evaluate_regime_b(const CutStatistics& stats, const SolverConfig& cfg);

/// Dispatches on the regime.
ValuationResult evaluate(const CutStatistics& stats, Regime regime, const SolverConfig& cfg);

struct SchurOperators {
    DenseMatrix S_OO;
    DenseMatrix T_PO;
    DenseMatrix U_OP;
};

/// Effective boundary operators after eliminating P. Unless `skip_gate` is
/// set, refuses blocks whose invertibility is not supported by
/// spectral_radius_bound.
SchurOperators schur_operators(const BlockPartition& blocks, bool skip_gate = false);

struct ExternalShare {
    double E_ext = 0.0;
    /// E_ext over the boundary primitive total 1' (b_P + O_PO v_O).
    double omega_eff = 0.0;
    /// base + T_out - E_ext; equals the Regime-B W without thresholding.
    double W_meta = 0.0;
    Vector delta;
    Vector v_P;
};

ExternalShare effective_external_share(const CutStatistics& stats, const SolverConfig& cfg);

/// h_k = sum over P of O_PO(i, k), keyed by outside node.
std::map<NodeId, double> hedge_vector(const CutStatistics& stats);

/// (gross - W) / W.
double cut_gap(double gross, double W);

/// Net value on the cut between two disjoint perimeters P and R of the same
/// network: holdings of each side in the other minus the minorities each side
/// carries from the other, priced at v.
double internal_cut_net(const OwnershipNetwork& network, const Perimeter& p, const Perimeter& r,
                        const std::map<NodeId, double>& v);

}  // namespace cbv
