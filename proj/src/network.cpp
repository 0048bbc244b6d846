#include "cbv/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cbv/errors.hpp"

namespace cbv {

OwnershipNetwork::OwnershipNetwork(NodeIds nodes, SparseMatrix shares) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    if (shares.rows() != n || shares.cols() != n) {
        nodes_ = std::move(nodes);
        shares_ = std::move(shares);
        return;
    }
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return nodes[a] < nodes[b]; });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (nodes[order[k]] == nodes[order[k - 1]])
            fail(ErrorKind::validation, "duplicate node id '" + nodes[order[k]].str() + "'");

    std::vector<Eigen::Index> position(nodes.size());
    for (std::size_t k = 0; k < order.size(); ++k) position[order[k]] = static_cast<Eigen::Index>(k);

    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(shares.nonZeros()));
    for (Eigen::Index r = 0; r < shares.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(shares, r); it; ++it)
            if (it.value() != 0.0)
                triplets.emplace_back(position[it.row()], position[it.col()], it.value());

    nodes_.reserve(nodes.size());
    for (auto idx : order) nodes_.push_back(nodes[idx]);
    shares_.resize(n, n);
    shares_.setFromTriplets(triplets.begin(), triplets.end());
    shares_.makeCompressed();
}

OwnershipNetwork OwnershipNetwork::from_entries(NodeIds nodes, const std::vector<ShareEntry>& entries) {
    std::vector<Triplet> triplets;
    auto find = [&](const NodeId& id) -> Eigen::Index {
        auto it = std::find(nodes.begin(), nodes.end(), id);
        if (it == nodes.end()) fail(ErrorKind::membership, "unknown node '" + id.str() + "'");
        return static_cast<Eigen::Index>(it - nodes.begin());
    };
    for (const auto& e : entries) triplets.emplace_back(find(e.owner), find(e.owned), e.share);
    const auto n = static_cast<Eigen::Index>(nodes.size());
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return OwnershipNetwork(std::move(nodes), std::move(m));
}

OwnershipNetwork OwnershipNetwork::from_dense(NodeIds nodes, const DenseMatrix& shares) {
    SparseMatrix m = shares.sparseView(0.0, 0.0);
    return OwnershipNetwork(std::move(nodes), std::move(m));
}

std::size_t OwnershipNetwork::index_of(const NodeId& id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id) fail(ErrorKind::membership, "unknown node '" + id.str() + "'");
    return static_cast<std::size_t>(it - nodes_.begin());
}

bool OwnershipNetwork::contains(const NodeId& id) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), id);
}

double OwnershipNetwork::share(const NodeId& owner, const NodeId& owned) const {
    return shares_.coeff(static_cast<Eigen::Index>(index_of(owner)), static_cast<Eigen::Index>(index_of(owned)));
}

Perimeter::Perimeter(std::initializer_list<std::string_view> ids) {
    for (auto id : ids) members_.emplace(std::string(id));
}

Perimeter::Perimeter(const NodeIds& ids) : members_(ids.begin(), ids.end()) {}

NodeIds Perimeter::complement(const OwnershipNetwork& network) const {
    NodeIds out;
    for (const auto& id : network.nodes())
        if (!contains(id)) out.push_back(id);
    return out;
}

namespace {

SparseMatrix extract(const SparseMatrix& full, const std::vector<Eigen::Index>& rows,
                     const std::vector<Eigen::Index>& cols, const std::vector<Eigen::Index>& col_pos) {
    std::vector<Triplet> triplets;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (SparseMatrix::InnerIterator it(full, rows[r]); it; ++it) {
            auto c = col_pos[static_cast<std::size_t>(it.col())];
            if (c >= 0) triplets.emplace_back(static_cast<Eigen::Index>(r), c, it.value());
        }
    SparseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

}  // namespace

BlockPartition partition(const OwnershipNetwork& network, const Perimeter& perimeter) {
    const auto n = static_cast<Eigen::Index>(network.size());
    if (network.shares().rows() != n || network.shares().cols() != n)
        fail(ErrorKind::validation, "share matrix dimensions do not match the node list");
    for (const auto& id : perimeter.members())
        if (!network.contains(id)) fail(ErrorKind::membership, "perimeter member '" + id.str() + "' not in network");

    BlockPartition out;
    std::vector<Eigen::Index> p_rows, o_rows;
    std::vector<Eigen::Index> p_pos(static_cast<std::size_t>(n), -1), o_pos(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& id = network.nodes()[static_cast<std::size_t>(i)];
        if (perimeter.contains(id)) {
            p_pos[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(p_rows.size());
            p_rows.push_back(i);
            out.p_ids.push_back(id);
        } else {
            o_pos[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(o_rows.size());
            o_rows.push_back(i);
            out.o_ids.push_back(id);
        }
    }
    const auto& s = network.shares();
    out.O_PP = extract(s, p_rows, p_rows, p_pos);
    out.O_PO = extract(s, p_rows, o_rows, o_pos);
    out.O_OP = extract(s, o_rows, p_rows, p_pos);
    out.O_OO = extract(s, o_rows, o_rows, o_pos);
    return out;
}

SparseMatrix BlockPartition::reassemble() const {
    NodeIds all = p_ids;
    all.insert(all.end(), o_ids.begin(), o_ids.end());
    const auto np = static_cast<Eigen::Index>(p_ids.size());
    const auto n = static_cast<Eigen::Index>(all.size());
    std::vector<Triplet> triplets;
    auto add = [&](const SparseMatrix& block, Eigen::Index r0, Eigen::Index c0) {
        for (Eigen::Index r = 0; r < block.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(block, r); it; ++it)
                triplets.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
    };
    add(O_PP, 0, 0);
    add(O_PO, 0, np);
    add(O_OP, np, 0);
    add(O_OO, np, np);
    SparseMatrix stacked(n, n);
    stacked.setFromTriplets(triplets.begin(), triplets.end());
    // Back to canonical order of the union.
    return OwnershipNetwork(all, stacked).shares();
}

ValidationReport validate_network(const OwnershipNetwork& network) {
    ValidationReport report;
    const auto n = static_cast<Eigen::Index>(network.size());
    const auto& s = network.shares();
    if (s.rows() != n || s.cols() != n) {
        std::ostringstream msg;
        msg << "share matrix is " << s.rows() << "x" << s.cols() << " for " << n << " nodes";
        report.add("D1", Severity::error, msg.str(), "O");
        return report;
    }
    Vector col_sum = Vector::Zero(n);
    for (Eigen::Index r = 0; r < s.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(s, r); it; ++it) {
            const double v = it.value();
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream msg;
                msg << "share " << v << " outside [0,1]";
                report.add("D2", Severity::error, msg.str(),
                           network.nodes()[static_cast<std::size_t>(it.row())].str() + "->" +
                               network.nodes()[static_cast<std::size_t>(it.col())].str());
            }
            col_sum[it.col()] += v;
        }
    for (Eigen::Index j = 0; j < n; ++j)
        if (col_sum[j] > 1.0 + kColumnSumTolerance) {
            std::ostringstream msg;
            msg << "column sum " << col_sum[j] << " exceeds 1";
            report.add("D2", Severity::error, msg.str(), network.nodes()[static_cast<std::size_t>(j)].str());
        }
    return report;
}

double HaircutSpec::combined() const {
    auto check = [](double h, const char* name) {
        if (!(h >= 0.0 && h <= 1.0)) fail(ErrorKind::domain, std::string(name) + " haircut factor outside [0,1]");
    };
    check(liquidity, "liquidity");
    check(fx, "fx");
    return liquidity * fx;
}

double apply_haircut(const HaircutSpec& spec, double value) {
    if (!std::isfinite(value)) fail(ErrorKind::domain, "haircut applied to a non-finite value");
    return spec.combined() * value;
}

}  // namespace cbv
