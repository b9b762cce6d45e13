#include "mpdiag/graph.hpp"

#include <algorithm>
#include <string>

#include "mpdiag/error.hpp"

namespace mpdiag {

Graph build_graph(std::span<const Edge> edges, std::vector<Label> labels,
                  std::optional<Eigen::MatrixXd> features, std::optional<int> num_classes) {
    const auto n = static_cast<std::int64_t>(labels.size());
    int k = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0)
            throw DataError("negative label " + std::to_string(labels[i]) + " at node " +
                            std::to_string(i));
        k = std::max(k, labels[i] + 1);
    }
    if (num_classes) {
        if (*num_classes < k)
            throw DataError("label " + std::to_string(k - 1) + " out of range for " +
                            std::to_string(*num_classes) + " classes");
        k = *num_classes;
    }
    if (features && features->rows() != n)
        throw DataError("feature matrix has " + std::to_string(features->rows()) +
                        " rows, expected " + std::to_string(n));

    std::vector<Edge> directed;
    directed.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") out of range for " + std::to_string(n) + " nodes");
        if (u == v) continue;
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    Graph g;
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    g.neighbors_.reserve(directed.size());
    for (const auto& [u, v] : directed) {
        ++g.offsets_[static_cast<std::size_t>(u) + 1];
        g.neighbors_.push_back(v);
    }
    for (std::int64_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.labels_ = std::move(labels);
    g.num_classes_ = k;
    g.features_ = std::move(features);
    return g;
}

std::vector<NodeId> Graph::degrees() const {
    std::vector<NodeId> d(labels_.size());
    for (NodeId i = 0; i < num_nodes(); ++i) d[i] = degree(i);
    return d;
}

bool Graph::has_edge(NodeId i, NodeId j) const {
    auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> Graph::edge_list() const {
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(num_edges()));
    for (NodeId i = 0; i < num_nodes(); ++i)
        for (NodeId j : neighbors(i))
            if (i < j) out.emplace_back(i, j);
    return out;
}

SparseMatrix Graph::adjacency() const {
    const NodeId n = num_nodes();
    SparseMatrix a(n, n);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(neighbors_.size());
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j : neighbors(i)) t.emplace_back(i, j, 1.0);
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

Graph Graph::with_features(std::optional<Eigen::MatrixXd> features) const {
    if (features && features->rows() != num_nodes())
        throw DataError("feature matrix has " + std::to_string(features->rows()) +
                        " rows, expected " + std::to_string(num_nodes()));
    Graph g = *this;
    g.features_ = std::move(features);
    return g;
}

std::vector<std::vector<NodeId>> class_members(const Graph& g) {
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(g.num_classes()));
    for (NodeId i = 0; i < g.num_nodes(); ++i) members[g.labels()[i]].push_back(i);
    return members;
}

Eigen::MatrixXd class_indicators(std::span<const Label> labels, int num_classes) {
    Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw DataError("label " + std::to_string(labels[i]) + " out of range");
        ind(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return ind;
}

}  // namespace mpdiag
