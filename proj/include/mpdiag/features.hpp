#pragma once

#include <cstdint>

#include "mpdiag/graph.hpp"
#include "mpdiag/random.hpp"

namespace mpdiag {

/// Covariance parameters of the class-signal / global-shift / node-noise
/// feature model X_j = mu_{y_j} + gamma + eps_j.
///
/// Two modes: IID dimensions with scalar variances, or full d x d covariance
/// matrices. Construct through iid() or general(); the two are never mixed.
class FeatureParams {
public:
    static FeatureParams iid(int d_in, double sigma2, double phi2, double psi2);
    static FeatureParams general(Eigen::MatrixXd signal_cov, Eigen::MatrixXd global_cov,
                                 Eigen::MatrixXd noise_cov);

    int dim() const { return static_cast<int>(signal_cov_.rows()); }
    bool is_iid() const { return iid_; }

    /// Scalar variances; only meaningful in IID mode (throws otherwise).
    double sigma2() const;
    double phi2() const;
    double psi2() const;

    const Eigen::MatrixXd& signal_cov() const { return signal_cov_; }  // Sigma
    const Eigen::MatrixXd& global_cov() const { return global_cov_; }  // Phi
    const Eigen::MatrixXd& noise_cov() const { return noise_cov_; }    // Psi

    /// sigma^2 / (phi^2 + psi^2), the SNR of the raw features (IID mode).
    double input_snr() const;

private:
    FeatureParams() = default;
    bool iid_ = true;
    Eigen::MatrixXd signal_cov_, global_cov_, noise_cov_;
};

struct FeatureSample {
    Eigen::MatrixXd x;      // n x d
    Eigen::MatrixXd mu;     // k x d class means
    Eigen::VectorXd gamma;  // d global shift
    Eigen::MatrixXd eps;    // n x d node noise
};

/// Draws mu_c ~ N(0, Sigma) per class, gamma ~ N(0, Phi), eps_j ~ N(0, Psi).
/// X is assembled as mu[y_j] + gamma + eps_j.
FeatureSample sample_features(const Graph& g, const FeatureParams& p, std::uint64_t seed);

/// Same model, but with the three components drawn from an existing stream.
FeatureSample sample_features(std::span<const Label> labels, int num_classes,
                              const FeatureParams& p, Rng& rng);

/// Draws `count` vectors from N(0, cov) as rows; cov is factored once.
class GaussianSampler {
public:
    explicit GaussianSampler(const Eigen::MatrixXd& cov);
    Eigen::MatrixXd draw(Eigen::Index count, Rng& rng) const;

private:
    Eigen::MatrixXd factor_;  // cov = factor * factor^T
    bool diagonal_ = false;
};

/// rho = psi^2 / (phi^2 + psi^2). Throws ConfigError if both are zero.
double local_noise_proportion(double phi2, double psi2);
double local_noise_proportion(const FeatureParams& p);

}  // namespace mpdiag
