#include "mpdiag/shift_operator.hpp"

#include <cmath>
#include <string>

#include "mpdiag/error.hpp"

namespace mpdiag {

std::string_view to_string(ShiftKind kind) {
    switch (kind) {
        case ShiftKind::SymNormalizedSelfLoops: return "sym-self-loops";
        case ShiftKind::SymNormalizedRaw: return "sym-raw";
        case ShiftKind::RandomWalk: return "random-walk";
        case ShiftKind::MeanDegreeScaled: return "mean-degree";
    }
    return "unknown";
}

ShiftKind parse_shift_kind(std::string_view name) {
    for (auto k : {ShiftKind::SymNormalizedSelfLoops, ShiftKind::SymNormalizedRaw,
                   ShiftKind::RandomWalk, ShiftKind::MeanDegreeScaled})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown operator kind '" + std::string(name) +
                      "' (expected sym-self-loops, sym-raw, random-walk or mean-degree)");
}

namespace {

bool is_symmetric(const SparseMatrix& m) {
    if (m.rows() != m.cols()) return false;
    SparseMatrix t = m.transpose();
    SparseMatrix diff = m - t;
    diff.prune(0.0);
    return diff.nonZeros() == 0;
}

}  // namespace

ShiftOperator shift_operator(const Graph& g, ShiftKind kind, ShiftOptions options) {
    const NodeId n = g.num_nodes();
    if (n == 0) throw DataError("shift operator of an empty graph");

    bool loops = options.add_self_loops;
    if (kind == ShiftKind::SymNormalizedSelfLoops) loops = true;
    if (kind == ShiftKind::SymNormalizedRaw) loops = false;

    std::vector<double> deg(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) deg[i] = g.degree(i) + (loops ? 1.0 : 0.0);

    if (kind != ShiftKind::MeanDegreeScaled && !options.allow_isolated) {
        std::string isolated;
        int count = 0;
        for (NodeId i = 0; i < n; ++i) {
            if (deg[i] > 0) continue;
            if (count < 20) isolated += (count ? ", " : "") + std::to_string(i);
            ++count;
        }
        if (count > 0)
            throw NumericalError("degenerate degree: " + std::to_string(count) +
                                 " isolated node(s) under normalisation without self-loops: " +
                                 isolated + (count > 20 ? ", ..." : ""));
    }

    std::vector<double> row_scale(deg.size()), col_scale(deg.size());
    switch (kind) {
        case ShiftKind::SymNormalizedSelfLoops:
        case ShiftKind::SymNormalizedRaw:
            for (std::size_t i = 0; i < deg.size(); ++i)
                row_scale[i] = col_scale[i] = deg[i] > 0 ? 1.0 / std::sqrt(deg[i]) : 0.0;
            break;
        case ShiftKind::RandomWalk:
            for (std::size_t i = 0; i < deg.size(); ++i) {
                row_scale[i] = deg[i] > 0 ? 1.0 / deg[i] : 0.0;
                col_scale[i] = 1.0;
            }
            break;
        case ShiftKind::MeanDegreeScaled: {
            double total = 0.0;
            for (double d : deg) total += d;
            if (total <= 0.0) throw NumericalError("mean-degree scaling of a graph with no edges");
            const double inv_mean = static_cast<double>(n) / total;
            for (std::size_t i = 0; i < deg.size(); ++i) {
                row_scale[i] = inv_mean;
                col_scale[i] = 1.0;
            }
            break;
        }
    }

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(2 * g.num_edges() + (loops ? n : 0)));
    for (NodeId i = 0; i < n; ++i) {
        if (loops) t.emplace_back(i, i, row_scale[i] * col_scale[i]);
        for (NodeId j : g.neighbors(i)) t.emplace_back(i, j, row_scale[i] * col_scale[j]);
    }
    ShiftOperator op;
    op.kind = kind;
    op.matrix.resize(n, n);
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.matrix.prune(0.0);
    op.symmetric = kind != ShiftKind::RandomWalk;
    return op;
}

ShiftOperator custom_operator(SparseMatrix matrix) {
    if (matrix.rows() != matrix.cols()) throw DataError("shift operator must be square");
    ShiftOperator op;
    op.kind = ShiftKind::SymNormalizedRaw;
    op.symmetric = is_symmetric(matrix);
    op.matrix = std::move(matrix);
    return op;
}

Eigen::MatrixXd apply_power(const ShiftOperator& s, const Eigen::MatrixXd& v, int r) {
    if (r < 0) throw ConfigError("matrix power must be non-negative");
    if (v.rows() != s.size())
        throw DataError("apply_power: operator is " + std::to_string(s.size()) + "x" +
                        std::to_string(s.size()) + " but input has " + std::to_string(v.rows()) +
                        " rows");
    Eigen::MatrixXd out = v;
    for (int step = 0; step < r; ++step) out = s.matrix * out;
    return out;
}

Eigen::VectorXd apply_power(const ShiftOperator& s, const Eigen::VectorXd& v, int r) {
    Eigen::MatrixXd m = v;
    return apply_power(s, m, r).col(0);
}

SparseMatrix sparse_power(const SparseMatrix& s, int r) {
    if (r < 0) throw ConfigError("matrix power must be non-negative");
    SparseMatrix out(s.rows(), s.cols());
    out.setIdentity();
    for (int step = 0; step < r; ++step) out = (out * s).pruned();
    return out;
}

Eigen::MatrixXd dense_power(const ShiftOperator& s, int r, Eigen::Index dense_limit) {
    if (s.size() > dense_limit)
        throw ConfigError("dense power requested for n=" + std::to_string(s.size()) +
                          " above the dense limit " + std::to_string(dense_limit));
    Eigen::MatrixXd base = Eigen::MatrixXd(s.matrix);
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(s.size(), s.size());
    for (int step = 0; step < r; ++step) out = out * base;
    return out;
}

double edge_homophily(const Graph& g) {
    if (g.num_edges() == 0) throw DataError("edge homophily of a graph with no edges");
    std::int64_t same = 0;
    const auto& y = g.labels();
    for (NodeId i = 0; i < g.num_nodes(); ++i)
        for (NodeId j : g.neighbors(i))
            if (y[i] == y[j]) ++same;
    return static_cast<double>(same) / static_cast<double>(2 * g.num_edges());
}

double node_homophily(const Graph& g) {
    if (g.num_edges() == 0) throw DataError("node homophily of a graph with no edges");
    const auto& y = g.labels();
    double sum = 0.0;
    NodeId counted = 0;
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
        if (g.degree(i) == 0) continue;
        int same = 0;
        for (NodeId j : g.neighbors(i))
            if (y[i] == y[j]) ++same;
        sum += static_cast<double>(same) / g.degree(i);
        ++counted;
    }
    return sum / counted;
}

double weighted_homophily(const SparseMatrix& s, std::span<const Label> labels) {
    if (s.rows() != s.cols() || s.rows() != static_cast<Eigen::Index>(labels.size()))
        throw DataError("weighted homophily: matrix and label dimensions differ");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(s, i); it; ++it)
            if (labels[it.row()] == labels[it.col()]) sum += it.value();
    return sum / static_cast<double>(labels.size());
}

double weighted_homophily(const Eigen::MatrixXd& s, std::span<const Label> labels) {
    if (s.rows() != s.cols() || s.rows() != static_cast<Eigen::Index>(labels.size()))
        throw DataError("weighted homophily: matrix and label dimensions differ");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            if (labels[i] == labels[j]) sum += s(i, j);
    return sum / static_cast<double>(labels.size());
}

}  // namespace mpdiag
