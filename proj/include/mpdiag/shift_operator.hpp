#pragma once

#include <span>
#include <string_view>

#include "mpdiag/graph.hpp"

namespace mpdiag {

enum class ShiftKind {
    SymNormalizedSelfLoops,  // D^-1/2 (A + I) D^-1/2
    SymNormalizedRaw,        // D^-1/2 A D^-1/2
    RandomWalk,              // D^-1 A
    MeanDegreeScaled,        // A / <d>
};

std::string_view to_string(ShiftKind kind);
ShiftKind parse_shift_kind(std::string_view name);

struct ShiftOptions {
    /// Adds I before normalising. Ignored by the two symmetric kinds, whose
    /// self-loop behaviour is fixed by the kind itself.
    bool add_self_loops = false;
    /// When false, a zero-degree node under a normalising kind is an error.
    /// When true, it gets an all-zero row and column.
    bool allow_isolated = false;
};

/// Graph shift operator: a non-negative sparse matrix derived from a graph.
struct ShiftOperator {
    ShiftKind kind = ShiftKind::SymNormalizedSelfLoops;
    SparseMatrix matrix;
    bool symmetric = true;

    Eigen::Index size() const { return matrix.rows(); }
};

/// Throws NumericalError listing node ids if a normalising kind meets an
/// isolated node and options.allow_isolated is false.
ShiftOperator shift_operator(const Graph& g, ShiftKind kind, ShiftOptions options = {});

/// Wraps an arbitrary square non-negative matrix (e.g. a derived operator).
ShiftOperator custom_operator(SparseMatrix matrix);

/// S^r v by r sparse products. Works for a vector or an n x m block.
Eigen::MatrixXd apply_power(const ShiftOperator& s, const Eigen::MatrixXd& v, int r);
Eigen::VectorXd apply_power(const ShiftOperator& s, const Eigen::VectorXd& v, int r);

/// S^r as a sparse matrix (fill-in grows with r).
SparseMatrix sparse_power(const SparseMatrix& s, int r);

/// Dense S^r; refuses n above `dense_limit`.
Eigen::MatrixXd dense_power(const ShiftOperator& s, int r, Eigen::Index dense_limit = 512);

/// Fraction of edges joining same-class endpoints. Throws DataError on an
/// empty edge set.
double edge_homophily(const Graph& g);

/// Mean over non-isolated nodes of the same-class neighbour fraction.
double node_homophily(const Graph& g);

/// (1/n) sum_ij S_ij [y_i == y_j], unnormalised.
double weighted_homophily(const SparseMatrix& s, std::span<const Label> labels);
double weighted_homophily(const Eigen::MatrixXd& s, std::span<const Label> labels);

}  // namespace mpdiag
