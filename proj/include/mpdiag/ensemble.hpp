#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpdiag/graph.hpp"

namespace mpdiag {

/// Stochastic block model: nodes of class u and v are joined with
/// probability B_uv / n, and classes have proportions pi.
struct SbmParams {
    Eigen::MatrixXd b;   // k x k, symmetric, non-negative
    Eigen::VectorXd pi;  // class proportions
    NodeId n = 0;

    int k() const { return static_cast<int>(pi.size()); }

    /// Throws ConfigError on asymmetric or negative B, a pi that is not a
    /// positive probability vector, or an edge probability above 1.
    void validate() const;

    /// Expected class degrees D = diag(B pi).
    Eigen::VectorXd class_degrees() const;
    /// <d> = pi^T B pi.
    double mean_degree() const;
    /// B_hat = D^-1/2 Pi^1/2 B Pi^1/2 D^-1/2.
    Eigen::MatrixXd normalized() const;
};

/// Planted partition: k * d * h on the diagonal, k * d (1 - h) / (k - 1)
/// elsewhere, uniform pi.
SbmParams planted_partition(int k, double d, double h, NodeId n);

/// Labels in contiguous runs with class sizes round(n * pi_u) (last class
/// absorbs rounding).
std::vector<Label> proportional_labels(NodeId n, const Eigen::VectorXd& pi);

/// Samples a graph. Without labels, each node's class is drawn from pi.
/// Every unordered pair is visited once (geometric skipping inside blocks).
Graph sample_sbm(const SbmParams& p, std::optional<std::vector<Label>> labels, std::uint64_t seed);

/// Dense node-level E[A]_ij = B_{y_i y_j} / n (diagonal included).
Eigen::MatrixXd expected_adjacency(const SbmParams& p, std::span<const Label> labels);

/// Block-level E[A]^r: (1/n) B (Pi B)^(r-1). Approximates P(lambda_ij = r)
/// for nodes of classes u, v in the sparse regime.
Eigen::MatrixXd expected_paths(const SbmParams& p, int r);
double underreaching(const SbmParams& p, Label u, Label v, int r);

/// Leading-order oversquashing factor
///   [(D^-1/2 E[A] D^-1/2)^r]_uv / [E[A]^r]_uv
/// at block level. The bound variant replaces each interior D^-1 with
/// D^-1 - D^-2 (I - e^-D). Throws NumericalError for unreachable pairs.
double oversquashing_factor(const SbmParams& p, Label u, Label v, int r, bool bound = false);

struct EnsembleMetrics {
    int order = 0;
    double expected_h = 0.0;
    double expected_c = 0.0;
    double expected_t = 0.0;  // leading order vanishes; see t_band
    double t_band = 0.0;      // <d>^-order
    double error_band = 0.0;  // 1 / <d>
};

/// Expected order-l metrics of the symmetric-normalised operator:
///   h = tr(C^T Pi^-1/2 B_hat^l Pi^-1/2 C), c = 1^T Pi^1/2 B_hat^l Pi^1/2 1.
/// C (rows: block classes, columns: true classes) defaults to Pi.
EnsembleMetrics expected_order_metrics(const SbmParams& p, int order,
                                       const std::optional<Eigen::MatrixXd>& confusion = std::nullopt);

/// 1/k + (k-1)/k * ((k h - 1) / (k - 1))^l.
double planted_partition_homophily(int k, double h, int order);

struct LowOrderBounds {
    double h1 = 0.0;
    double h2 = 0.0;
};

/// Finite-degree bounds on E[h^(1)] and E[h^(2)] of the symmetric-normalised
/// adjacency:
///   h1 <= tr(C^T D^-1/2 B D^-1/2 C)
///   h2 <= pi^T D^-1 B D^-1 pi + tr(C^T D^-1/2 B F Pi B D^-1/2 C),
/// with F = D^-1 - D^-2 (I - e^-D).
LowOrderBounds first_second_order_bounds(const SbmParams& p,
                                         const std::optional<Eigen::MatrixXd>& confusion = std::nullopt);

struct PoissonMoments {
    double inv_x1 = 0.0;            // E[1/(X+1)]
    double inv_x2 = 0.0;            // E[1/(X+2)]
    double inv_sqrt_x1_lower = 0.0; // sqrt(1/l - 1/(2 l^2)), 0 when negative
    double inv_sqrt_x1_upper = 0.0; // 1/sqrt(l)
};

/// Closed-form moments of shifted-inverse Poisson variables. Throws
/// ConfigError for lambda <= 0.
PoissonMoments poisson_moments(double lambda);
/// Leading term lambda^-k of E[1/(X+1)^k].
double poisson_inverse_power_bound(double lambda, int k);

/// Warning text when <d> > n / 10 (outside the sparse regime where the
/// ensemble approximations hold), empty otherwise.
std::optional<std::string> sparsity_warning(const SbmParams& p);

/// Checks a confusion matrix against an SBM (k x k, non-negative, total 1,
/// row sums equal to pi). Throws ConfigError otherwise.
void validate_confusion(const Eigen::MatrixXd& c, const Eigen::VectorXd& pi);

}  // namespace mpdiag
