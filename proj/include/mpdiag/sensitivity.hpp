#pragma once

#include <span>
#include <string_view>

#include "mpdiag/bottleneck.hpp"
#include "mpdiag/classifier.hpp"

namespace mpdiag {

enum class SensitivityMode { ExactSgc, ExactJacobian, IsotropicBound, AnisotropicBound };

std::string_view to_string(SensitivityMode mode);

/// Per-node signal, noise and global sensitivities for one output dimension.
///
/// `signal`, `noise`, `global` hold either a single (q, r) input pair or the
/// diagonal summed over q, depending on how they were computed. The *_qr
/// blocks are optional n x (d*d) tables (column q*d + r) needed for the
/// general-covariance SNR; they are empty unless requested.
struct SensitivityTriple {
    SensitivityMode mode = SensitivityMode::ExactSgc;
    int order = 0;
    Eigen::VectorXd signal;
    Eigen::VectorXd noise;
    Eigen::VectorXd global;
    Eigen::MatrixXd signal_qr;
    Eigen::MatrixXd noise_qr;
    Eigen::MatrixXd global_qr;

    Eigen::Index size() const { return signal.size(); }
};

/// Derivative bounds of the update (alpha) and message (beta) functions.
/// beta1/beta2 are the per-argument message bounds used by the Jacobian
/// norm bound; the bottleneck bounds use the common bound beta.
struct LipschitzParams {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double beta = 1.0;
    double beta1 = 1.0;
    double beta2 = 1.0;

    /// Throws ConfigError on negative or non-finite values.
    void validate() const;
};

/// SGC H = S^l X W: sensitivities are weight * (b_class, b_self, b_total)
/// at orders (l, l), where weight = W_pq W_pr.
SensitivityTriple sgc_sensitivities(const ShiftOperator& op, std::span<const Label> labels, int order,
                                    double weight = 1.0);

struct JacobianOptions {
    int output_dim = 0;
    /// Sum the q == r forms over q. When false, use the single pair (q, r).
    bool summed_diagonal = true;
    int q = 0;
    int r = 0;
    /// Also fill the n x d^2 tables for every (q, r).
    bool full = false;
};

/// dH_ip / dX_jq for all (j, q) at the evaluation point x0 (empty = zeros),
/// as an n x d matrix. Activation masks are taken at x0, with ReLU'(0) = 1.
Eigen::MatrixXd model_jacobian(const TrainedModel& m, const ShiftOperator& op,
                               const Eigen::MatrixXd& x0, NodeId i, int p);

/// Exact Jacobian sensitivities of a trained model (linear, SGC or 2-layer
/// GCN) computed analytically from the weights and the activation pattern at
/// x0 (empty = zeros). Works node by node over the receptive field.
SensitivityTriple gcn_jacobian_sensitivities(const TrainedModel& m, const ShiftOperator& op,
                                             std::span<const Label> labels,
                                             const Eigen::MatrixXd& x0 = {},
                                             const JacobianOptions& options = {});
SensitivityTriple gcn_jacobian_sensitivities(const TrainedModel& m, const Graph& g,
                                             const Eigen::MatrixXd& x0 = {},
                                             const JacobianOptions& options = {});

/// Node-level upper bounds: sum over s, t in [0, l] of
/// C(l,s) C(l,t) alpha1^(2l-s-t) (alpha2 beta)^(s+t) times the (s, t)
/// bottleneck scores. The anisotropic form scores S + diag(S 1) instead of S.
SensitivityTriple sensitivity_bounds(const ShiftOperator& op, std::span<const Label> labels,
                                     int order, const LipschitzParams& lip, bool isotropic = true);

struct AveragedBounds {
    double signal = 0.0;  // from h
    double noise = 0.0;   // from t
    double global = 0.0;  // from c
};

/// Graph-mean bounds: sum_u C(2l,u) alpha1^(2l-u) (alpha2 beta)^u times the
/// order-u metrics. An asymmetric operator needs general_form = true, which
/// averages the (S^s)^T S^t metrics instead.
AveragedBounds averaged_bounds(const ShiftOperator& op, std::span<const Label> labels, int order,
                               const LipschitzParams& lip, bool isotropic = true,
                               bool general_form = false);

/// K^l with K = alpha2 beta2 S + alpha2 beta1 diag(S 1) + alpha1 I, dense.
/// Throws ConfigError above dense_limit nodes; use jacobian_norm_bound_row.
Eigen::MatrixXd jacobian_norm_bound(const ShiftOperator& op, int order, const LipschitzParams& lip,
                                    Eigen::Index dense_limit = 512);
/// Row i of K^l without forming the dense power.
Eigen::VectorXd jacobian_norm_bound_row(const ShiftOperator& op, int order,
                                        const LipschitzParams& lip, NodeId i);

/// S + diag(S 1).
ShiftOperator anisotropic_operator(const ShiftOperator& op);

}  // namespace mpdiag
