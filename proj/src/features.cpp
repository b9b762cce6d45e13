#include "mpdiag/features.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mpdiag/error.hpp"

namespace mpdiag {

namespace {

constexpr double kPsdFloor = -1e-10;

void check_covariance(const Eigen::MatrixXd& m, const char* name, Eigen::Index d) {
    if (m.rows() != d || m.cols() != d)
        throw ConfigError(std::string(name) + " must be " + std::to_string(d) + "x" +
                          std::to_string(d));
    if (!m.allFinite()) throw ConfigError(std::string(name) + " has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw ConfigError(std::string(name) + " is not symmetric");
    if (d == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdFloor)
        throw ConfigError(std::string(name) + " is not positive semi-definite (min eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()) + ")");
}

}  // namespace

FeatureParams FeatureParams::iid(int d_in, double sigma2, double phi2, double psi2) {
    if (d_in < 1) throw ConfigError("feature dimension must be >= 1");
    if (!(sigma2 >= 0.0) || !(phi2 >= 0.0) || !(psi2 >= 0.0))
        throw ConfigError("feature variances must be non-negative");
    FeatureParams p;
    p.iid_ = true;
    p.signal_cov_ = sigma2 * Eigen::MatrixXd::Identity(d_in, d_in);
    p.global_cov_ = phi2 * Eigen::MatrixXd::Identity(d_in, d_in);
    p.noise_cov_ = psi2 * Eigen::MatrixXd::Identity(d_in, d_in);
    return p;
}

FeatureParams FeatureParams::general(Eigen::MatrixXd signal_cov, Eigen::MatrixXd global_cov,
                                     Eigen::MatrixXd noise_cov) {
    const Eigen::Index d = signal_cov.rows();
    if (d < 1) throw ConfigError("feature dimension must be >= 1");
    check_covariance(signal_cov, "Sigma", d);
    check_covariance(global_cov, "Phi", d);
    check_covariance(noise_cov, "Psi", d);
    FeatureParams p;
    p.iid_ = false;
    p.signal_cov_ = std::move(signal_cov);
    p.global_cov_ = std::move(global_cov);
    p.noise_cov_ = std::move(noise_cov);
    return p;
}

double FeatureParams::sigma2() const {
    if (!iid_) throw ConfigError("scalar variance requested from a general-matrix FeatureParams");
    return signal_cov_(0, 0);
}
double FeatureParams::phi2() const {
    if (!iid_) throw ConfigError("scalar variance requested from a general-matrix FeatureParams");
    return global_cov_(0, 0);
}
double FeatureParams::psi2() const {
    if (!iid_) throw ConfigError("scalar variance requested from a general-matrix FeatureParams");
    return noise_cov_(0, 0);
}

double FeatureParams::input_snr() const {
    const double denom = phi2() + psi2();
    if (denom <= 0.0) throw ConfigError("input SNR undefined when phi^2 + psi^2 = 0");
    return sigma2() / denom;
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) {
    const Eigen::MatrixXd off = cov - Eigen::MatrixXd(cov.diagonal().asDiagonal());
    diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
    if (diagonal_) {
        factor_ = cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd GaussianSampler::draw(Eigen::Index count, Rng& rng) const {
    const Eigen::Index d = factor_.rows();
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(count, d);
    for (Eigen::Index i = 0; i < count; ++i)
        for (Eigen::Index q = 0; q < d; ++q) z(i, q) = normal(rng);
    if (diagonal_) return z * factor_.diagonal().asDiagonal();
    return z * factor_.transpose();
}

FeatureSample sample_features(std::span<const Label> labels, int num_classes,
                              const FeatureParams& p, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    FeatureSample s;
    s.mu = GaussianSampler(p.signal_cov()).draw(num_classes, rng);
    s.gamma = GaussianSampler(p.global_cov()).draw(1, rng).row(0).transpose();
    s.eps = GaussianSampler(p.noise_cov()).draw(n, rng);
    s.x.resize(n, p.dim());
    for (Eigen::Index j = 0; j < n; ++j)
        s.x.row(j) = s.mu.row(labels[j]) + s.gamma.transpose() + s.eps.row(j);
    return s;
}

FeatureSample sample_features(const Graph& g, const FeatureParams& p, std::uint64_t seed) {
    Rng rng(seed);
    return sample_features(g.labels(), g.num_classes(), p, rng);
}

double local_noise_proportion(double phi2, double psi2) {
    if (phi2 < 0.0 || psi2 < 0.0) throw ConfigError("variances must be non-negative");
    if (phi2 + psi2 <= 0.0)
        throw ConfigError("local noise proportion undefined when phi^2 = psi^2 = 0");
    return psi2 / (phi2 + psi2);
}

double local_noise_proportion(const FeatureParams& p) {
    return local_noise_proportion(p.phi2(), p.psi2());
}

}  // namespace mpdiag
