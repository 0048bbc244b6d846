#pragma once

#include <set>
#include <utility>

#include "cbv/types.hpp"
#include "cbv/validation.hpp"

namespace cbv {

/// Column-sum slack tolerated before a share column counts as over-allocated.
inline constexpr double kColumnSumTolerance = 1e-9;

struct ShareEntry {
    NodeId owner;
    NodeId owned;
    double share = 0.0;
};

/// Node set plus sparse share matrix. Entry (i, j) is the fraction of j owned
/// by i. Nodes are held in lexicographic order; construction reorders rows and
/// columns accordingly.
class OwnershipNetwork {
public:
    OwnershipNetwork() = default;

    /// Takes a node list and a matrix indexed in that list's order. A matrix
    /// whose dimensions disagree with the node list is kept as-is so that
    /// validate_network can report it; partition() refuses such networks.
    OwnershipNetwork(NodeIds nodes, SparseMatrix shares);

    static OwnershipNetwork from_entries(NodeIds nodes, const std::vector<ShareEntry>& entries);
    static OwnershipNetwork from_dense(NodeIds nodes, const DenseMatrix& shares);

    const NodeIds& nodes() const noexcept { return nodes_; }
    const SparseMatrix& shares() const noexcept { return shares_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Index of `id` in canonical order; throws a membership error when absent.
    std::size_t index_of(const NodeId& id) const;
    bool contains(const NodeId& id) const;
    double share(const NodeId& owner, const NodeId& owned) const;

private:
    NodeIds nodes_;
    SparseMatrix shares_;
};

class Perimeter {
public:
    Perimeter() = default;
    explicit Perimeter(std::set<NodeId> members) : members_(std::move(members)) {}
    Perimeter(std::initializer_list<std::string_view> ids);
    explicit Perimeter(const NodeIds& ids);

    const std::set<NodeId>& members() const noexcept { return members_; }
    bool contains(const NodeId& id) const { return members_.count(id) != 0; }
    std::size_t size() const noexcept { return members_.size(); }

    /// network nodes \ members, in canonical order.
    NodeIds complement(const OwnershipNetwork& network) const;

private:
    std::set<NodeId> members_;
};

/// The four share blocks of a network seen from a perimeter.
struct BlockPartition {
    NodeIds p_ids;
    NodeIds o_ids;
    SparseMatrix O_PP;
    SparseMatrix O_PO;
    SparseMatrix O_OP;
    SparseMatrix O_OO;

    /// Full matrix in the canonical order of p_ids ∪ o_ids.
    SparseMatrix reassemble() const;
};

BlockPartition partition(const OwnershipNetwork& network, const Perimeter& perimeter);

/// Reports entries outside [0,1], column sums above 1 + 1e-9, and node/matrix
/// dimension mismatches. Never throws.
ValidationReport validate_network(const OwnershipNetwork& network);

/// Liquidity and FX haircut factors; the applied factor is their product.
struct HaircutSpec {
    double liquidity = 1.0;
    double fx = 1.0;

    double combined() const;
};

double apply_haircut(const HaircutSpec& spec, double value);

}  // namespace cbv
