#pragma once

#include <compare>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace cbv {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Row-major so that row traversal visits edges (owner, owned) in canonical
/// order: owners sorted by id, then owned nodes sorted by id.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/// Opaque node identifier (LEI, ticker, sector code, ...).
class NodeId {
public:
    NodeId() = default;
    explicit NodeId(std::string value);

    const std::string& str() const noexcept { return value_; }

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
    friend bool operator==(const NodeId&, const NodeId&) = default;

private:
    std::string value_;
};

using NodeIds = std::vector<NodeId>;

NodeIds make_ids(std::initializer_list<std::string_view> ids);

enum class EdgeType { equity, debt, derivative, cashflow };

std::string_view to_string(EdgeType type) noexcept;
EdgeType edge_type_from_string(std::string_view text);

}  // namespace cbv

template <>
struct std::hash<cbv::NodeId> {
    std::size_t operator()(const cbv::NodeId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
