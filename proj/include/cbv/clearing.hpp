#pragma once

#include <vector>

#include "cbv/cut_engine.hpp"
#include "cbv/network.hpp"

namespace cbv {

/// Liabilities per seniority class (index 0 = most senior). L[l](i, j) is
/// what i owes j in class l.
struct ClearingProblem {
    NodeIds nodes;
    std::vector<DenseMatrix> classes;
    Vector a;
    /// gamma[l](i): default-cost fraction of node i in class l.
    std::vector<Vector> gamma;

    void validate() const;
    Vector obligations(std::size_t cls) const;
};

enum class FixedPointSelection { greatest, least };

std::string_view to_string(FixedPointSelection selection) noexcept;
FixedPointSelection selection_from_string(std::string_view text);

struct ClearingOutcome {
    std::vector<Vector> payments;
    std::vector<Vector> theta;
    int iterations = 0;
    double residual = 0.0;
    FixedPointSelection selection = FixedPointSelection::greatest;
    /// Total payments per class per sweep, only when tracing was requested.
    std::vector<std::vector<Vector>> trace;
};

struct ClearingConfig {
    FixedPointSelection selection = FixedPointSelection::greatest;
    double eps = 1e-12;
    int max_iters = 100000;
    bool record_trace = false;
};

/// One application of the payment map.
std::vector<Vector> payment_map(const ClearingProblem& problem, const std::vector<Vector>& payments);

ClearingOutcome clear(const ClearingProblem& problem, const ClearingConfig& cfg = {});

struct NetBoundaryFlows {
    NodeIds p_ids;
    NodeIds o_ids;
    DenseMatrix X_PO;
    DenseMatrix X_OP;
    /// Same flows as (payer, payee, amount) with zero entries omitted.
    std::vector<BoundaryFlow> flows;
};

NetBoundaryFlows net_boundary_flows(const ClearingProblem& problem, const ClearingOutcome& outcome,
                                    const Perimeter& perimeter);

}  // namespace cbv
