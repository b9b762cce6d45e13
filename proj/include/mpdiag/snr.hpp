#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mpdiag/features.hpp"
#include "mpdiag/sensitivity.hpp"

namespace mpdiag {

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

/// Predicted per-node SNR from sensitivities.
///
/// IID parameters use the summed-diagonal triple:
///   sigma^2 S / (phi^2 G + psi^2 N)
/// = sigma^2/(phi^2+psi^2) * S / (rho N + (1 - rho) G).
/// General parameters need the *_qr tables and evaluate
///   sum_qr Sigma_qr S_qr / sum_qr (Phi_qr G_qr + Psi_qr N_qr).
/// A zero denominator gives +infinity when the numerator is positive and 0
/// when it is zero.
Eigen::VectorXd predict_snr(const SensitivityTriple& sens, const FeatureParams& p);

/// Mean over output dimensions of the predicted SNR of a trained model, with
/// Jacobians taken at X = 0.
Eigen::VectorXd predict_model_snr(const TrainedModel& m, const ShiftOperator& op,
                                  std::span<const Label> labels, const FeatureParams& p);

/// signal > rho * noise + (1 - rho) * global, strictly, per node.
std::vector<bool> sensitivity_condition(const SensitivityTriple& sens, double rho);

struct EmpiricalSnr {
    Eigen::MatrixXd per_dim;   // n x k, one SNR per output dimension
    Eigen::VectorXd per_node;  // mean over output dimensions
    /// Same ratio with the numerator reduced by denominator / N_ge, the noise
    /// that remains in each estimated conditional mean (floored at 0).
    Eigen::MatrixXd per_dim_corrected;
    Eigen::VectorXd per_node_corrected;
    int n_mu = 0;
    int n_ge = 0;
};

/// Monte-Carlo SNR of a fixed model. For m = 1..n_mu draws class means, then
/// for s = 1..n_ge draws the global shift and node noise, and records the
/// model output. Numerator: sample variance (n_mu - 1) over m of the
/// conditional means. Denominator: mean over m of the conditional sample
/// variances (n_ge - 1). Zero denominators follow predict_snr's convention.
EmpiricalSnr empirical_snr(const TrainedModel& m, const ShiftOperator& op,
                           std::span<const Label> labels, int num_classes, const FeatureParams& p,
                           int n_mu, int n_ge, std::uint64_t seed);

/// Full protocol: draw one feature matrix, train a single model on it with
/// the given split, then run the Monte-Carlo estimate above.
struct EmpiricalSnrRun {
    TrainedModel model;
    EmpiricalSnr snr;
};
EmpiricalSnrRun empirical_snr(const Graph& g, const FeatureParams& p, const ModelSpec& spec,
                              const Split& split, int n_mu, int n_ge, std::uint64_t seed);

/// Fraction of nodes where condition[i] == (gcn_acc[i] > fnn_acc[i]).
double condition_prediction_accuracy(const std::vector<bool>& condition,
                                     std::span<const double> gcn_acc,
                                     std::span<const double> fnn_acc);

/// Mean over finite entries; infinite sentinels are skipped.
double finite_mean(const Eigen::VectorXd& v);

struct SnrReport {
    Eigen::VectorXd predicted;
    std::optional<Eigen::VectorXd> empirical;
    std::vector<bool> condition;
    double mean_predicted = 0.0;
    std::optional<double> mean_empirical;
    int n_mu = 0;
    int n_ge = 0;
    std::uint64_t seed = 0;
};

}  // namespace mpdiag
