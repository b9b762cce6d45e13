#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mpdiag {

using NodeId = std::int32_t;
using Label = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class Graph;

/// Builds a simple undirected graph on labels.size() nodes. Duplicate and
/// reversed edges collapse to one, self-loops are dropped. The class count
/// defaults to max(label) + 1.
/// Throws DataError on out-of-range ids/labels or feature row mismatch.
Graph build_graph(std::span<const Edge> edges, std::vector<Label> labels,
                  std::optional<Eigen::MatrixXd> features = std::nullopt,
                  std::optional<int> num_classes = std::nullopt);

/// Undirected simple graph in CSR layout with class labels and optional
/// node features. Every edge is stored in both directions; neighbour lists
/// are sorted. Immutable once built.
class Graph {
public:
    Graph() = default;

    NodeId num_nodes() const { return static_cast<NodeId>(labels_.size()); }
    /// Number of undirected edges.
    std::int64_t num_edges() const { return static_cast<std::int64_t>(neighbors_.size()) / 2; }
    int num_classes() const { return num_classes_; }

    std::span<const NodeId> neighbors(NodeId i) const {
        return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
    }
    NodeId degree(NodeId i) const { return static_cast<NodeId>(offsets_[i + 1] - offsets_[i]); }
    std::vector<NodeId> degrees() const;
    bool has_edge(NodeId i, NodeId j) const;

    const std::vector<Label>& labels() const { return labels_; }
    const std::optional<Eigen::MatrixXd>& features() const { return features_; }

    /// Undirected edge list with u < v, in CSR order.
    std::vector<Edge> edge_list() const;
    /// 0/1 adjacency as a sparse matrix.
    SparseMatrix adjacency() const;
    /// Copy with a different feature matrix (row count must match).
    Graph with_features(std::optional<Eigen::MatrixXd> features) const;

    friend Graph build_graph(std::span<const Edge>, std::vector<Label>,
                             std::optional<Eigen::MatrixXd>, std::optional<int>);

private:
    std::vector<std::int64_t> offsets_{0};
    std::vector<NodeId> neighbors_;
    std::vector<Label> labels_;
    int num_classes_ = 0;
    std::optional<Eigen::MatrixXd> features_;
};


/// Nodes of each class, in increasing node order.
std::vector<std::vector<NodeId>> class_members(const Graph& g);

/// Class indicator vectors as an n x k dense matrix.
Eigen::MatrixXd class_indicators(std::span<const Label> labels, int num_classes);

}  // namespace mpdiag
