#include "mpdiag/bottleneck.hpp"

#include <algorithm>
#include <string>

#include "mpdiag/error.hpp"

namespace mpdiag {

namespace {

int infer_classes(std::span<const Label> labels) {
    Label k = 0;
    for (Label y : labels) k = std::max(k, static_cast<Label>(y + 1));
    return k;
}

void check_dims(const ShiftOperator& op, std::span<const Label> labels) {
    if (op.size() != static_cast<Eigen::Index>(labels.size()))
        throw DataError("operator is " + std::to_string(op.size()) + "x" +
                        std::to_string(op.size()) + " but " + std::to_string(labels.size()) +
                        " labels were given");
}

}  // namespace

BottleneckScores bottleneck_scores(const ShiftOperator& op, std::span<const Label> labels,
                                   int r, int s) {
    check_dims(op, labels);
    if (r < 0 || s < 0) throw ConfigError("path orders must be non-negative");

    const Eigen::MatrixXd ind = class_indicators(labels, infer_classes(labels));
    const Eigen::MatrixXd reach_r = apply_power(op, ind, r);
    const Eigen::MatrixXd reach_s = r == s ? reach_r : apply_power(op, ind, s);

    BottleneckScores out;
    out.r = r;
    out.s = s;
    out.b_class = reach_r.cwiseProduct(reach_s).rowwise().sum();
    out.b_total = reach_r.rowwise().sum().cwiseProduct(reach_s.rowwise().sum());

    const SparseMatrix pow_r = sparse_power(op.matrix, r);
    if (r == s) {
        out.b_self = Eigen::VectorXd::Zero(op.size());
        for (Eigen::Index i = 0; i < pow_r.outerSize(); ++i)
            for (SparseMatrix::InnerIterator it(pow_r, i); it; ++it)
                out.b_self[i] += it.value() * it.value();
    } else {
        const SparseMatrix pow_s = sparse_power(op.matrix, s);
        const SparseMatrix prod = pow_r.cwiseProduct(pow_s);
        out.b_self = prod * Eigen::VectorXd::Ones(op.size());
    }
    return out;
}

OrderMetrics order_metrics(const ShiftOperator& op, std::span<const Label> labels, int order) {
    check_dims(op, labels);
    if (order < 0) throw ConfigError("order must be non-negative");
    const auto n = static_cast<double>(labels.size());

    const Eigen::MatrixXd ind = class_indicators(labels, infer_classes(labels));
    const Eigen::MatrixXd reached = apply_power(op, ind, order);

    OrderMetrics m;
    m.order = order;
    m.h = ind.cwiseProduct(reached).sum() / n;
    m.c = reached.sum() / n;

    // tr(S^a S^b) with a + b = order, as an entrywise product of sparse powers.
    const int a = order / 2;
    const int b = order - a;
    const SparseMatrix pow_a = sparse_power(op.matrix, a);
    const SparseMatrix pow_b_t =
        a == b && op.symmetric ? pow_a : SparseMatrix(sparse_power(op.matrix, b).transpose());
    double trace = 0.0;
    for (Eigen::Index i = 0; i < pow_a.outerSize(); ++i) {
        SparseMatrix::InnerIterator ia(pow_a, i), ib(pow_b_t, i);
        while (ia && ib) {
            if (ia.col() < ib.col()) {
                ++ia;
            } else if (ib.col() < ia.col()) {
                ++ib;
            } else {
                trace += ia.value() * ib.value();
                ++ia;
                ++ib;
            }
        }
    }
    m.t = trace / n;
    return m;
}

OrderMetrics order_metrics(const ShiftOperator& op, std::span<const Label> labels, int r, int s) {
    const BottleneckScores b = bottleneck_scores(op, labels, r, s);
    OrderMetrics m;
    m.order = r + s;
    m.h = b.b_class.mean();
    m.t = b.b_self.mean();
    m.c = b.b_total.mean();
    return m;
}

}  // namespace mpdiag
