#pragma once

#include <span>

#include "mpdiag/shift_operator.hpp"

namespace mpdiag {

/// Per-target-node path-pair scores for orders (r, s):
///   b_class[i] = sum_{j,k} [S^r]_ij [S^s]_ik [y_j == y_k]
///   b_self[i]  = sum_j     [S^r]_ij [S^s]_ij
///   b_total[i] = sum_{j,k} [S^r]_ij [S^s]_ik
struct BottleneckScores {
    int r = 0;
    int s = 0;
    Eigen::VectorXd b_class;
    Eigen::VectorXd b_self;
    Eigen::VectorXd b_total;
};

/// Graph-level order-l metrics of an operator power: higher-order homophily
/// h, self-connectivity t (mean diagonal) and total connectivity c (mean
/// entry sum per row).
struct OrderMetrics {
    int order = 0;
    double h = 0.0;
    double t = 0.0;
    double c = 0.0;
};

/// Exact scores via per-class aggregation: class-indicator vectors are pushed
/// through S^r and S^s, so the cost is O(k (r + s) nnz) plus one sparse
/// row-product for b_self.
BottleneckScores bottleneck_scores(const ShiftOperator& op, std::span<const Label> labels,
                                   int r, int s);

/// h, t, c of S^l. For asymmetric operators this is the literal power;
/// use the (r, s) overload for the (S^r)^T S^s form.
OrderMetrics order_metrics(const ShiftOperator& op, std::span<const Label> labels, int order);

/// h, t, c of (S^r)^T S^s. Equals order_metrics(op, labels, r + s) when S is
/// symmetric.
OrderMetrics order_metrics(const ShiftOperator& op, std::span<const Label> labels, int r, int s);

}  // namespace mpdiag
