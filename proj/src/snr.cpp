#include "mpdiag/snr.hpp"

#include <cmath>
#include <string>

#include "mpdiag/error.hpp"

namespace mpdiag {

namespace {

double ratio(double num, double den) {
    if (den > 0.0) return num / den;
    return num > 0.0 ? kInfiniteSnr : 0.0;
}

}  // namespace

Eigen::VectorXd predict_snr(const SensitivityTriple& sens, const FeatureParams& p) {
    const Eigen::Index n = sens.size();
    Eigen::VectorXd out(n);
    if (p.is_iid()) {
        const double s2 = p.sigma2(), f2 = p.phi2(), y2 = p.psi2();
        for (Eigen::Index i = 0; i < n; ++i)
            out[i] = ratio(s2 * sens.signal[i], f2 * sens.global[i] + y2 * sens.noise[i]);
        return out;
    }
    const Eigen::Index d = p.dim();
    if (sens.signal_qr.cols() != d * d || sens.signal_qr.rows() != n)
        throw ConfigError("general-covariance SNR needs per-(q, r) sensitivity tables of dimension " +
                          std::to_string(d));
    // Flatten with column index q * d + r to match the tables.
    auto flat = [d](const Eigen::MatrixXd& m) {
        Eigen::VectorXd v(d * d);
        for (Eigen::Index q = 0; q < d; ++q)
            for (Eigen::Index r = 0; r < d; ++r) v[q * d + r] = m(q, r);
        return v;
    };
    const Eigen::VectorXd sig = flat(p.signal_cov()), phi = flat(p.global_cov()), psi = flat(p.noise_cov());
    const Eigen::VectorXd num = sens.signal_qr * sig;
    const Eigen::VectorXd den = sens.global_qr * phi + sens.noise_qr * psi;
    for (Eigen::Index i = 0; i < n; ++i) out[i] = ratio(num[i], den[i]);
    return out;
}

Eigen::VectorXd predict_model_snr(const TrainedModel& m, const ShiftOperator& op,
                                  std::span<const Label> labels, const FeatureParams& p) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(op.size());
    const int k = m.output_dim();
    for (int out = 0; out < k; ++out) {
        JacobianOptions opt;
        opt.output_dim = out;
        opt.full = !p.is_iid();
        acc += predict_snr(gcn_jacobian_sensitivities(m, op, labels, {}, opt), p);
    }
    return acc / k;
}

std::vector<bool> sensitivity_condition(const SensitivityTriple& sens, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    std::vector<bool> out(static_cast<std::size_t>(sens.size()));
    for (Eigen::Index i = 0; i < sens.size(); ++i)
        out[i] = sens.signal[i] > rho * sens.noise[i] + (1.0 - rho) * sens.global[i];
    return out;
}

EmpiricalSnr empirical_snr(const TrainedModel& m, const ShiftOperator& op,
                           std::span<const Label> labels, int num_classes, const FeatureParams& p,
                           int n_mu, int n_ge, std::uint64_t seed) {
    if (n_mu < 2 || n_ge < 2) throw ConfigError("Monte-Carlo sizes N_mu and N_ge must be >= 2");
    const auto n = static_cast<Eigen::Index>(labels.size());
    const int k = m.output_dim();

    const GaussianSampler signal(p.signal_cov()), global(p.global_cov()), noise(p.noise_cov());
    Eigen::MatrixXd cond_mean_sum = Eigen::MatrixXd::Zero(n, k);
    Eigen::MatrixXd cond_mean_sq = Eigen::MatrixXd::Zero(n, k);
    Eigen::MatrixXd cond_var_sum = Eigen::MatrixXd::Zero(n, k);

    Eigen::MatrixXd x(n, p.dim());
    for (int mi = 0; mi < n_mu; ++mi) {
        Rng mu_rng(derive_seed(seed, static_cast<std::uint64_t>(mi)));
        const Eigen::MatrixXd mu = signal.draw(num_classes, mu_rng);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, k);
        Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, k);
        for (int s = 0; s < n_ge; ++s) {
            Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(mi)), 1 + s));
            const Eigen::RowVectorXd gamma = global.draw(1, rng).row(0);
            const Eigen::MatrixXd eps = noise.draw(n, rng);
            for (Eigen::Index j = 0; j < n; ++j) x.row(j) = mu.row(labels[j]) + gamma + eps.row(j);
            const Eigen::MatrixXd h = forward(m, op, x);
            sum += h;
            sq += h.cwiseProduct(h);
        }
        const Eigen::MatrixXd mean = sum / n_ge;
        // Conditional variance with the (N - 1) denominator.
        const Eigen::MatrixXd var = ((sq - n_ge * mean.cwiseProduct(mean)) / (n_ge - 1.0)).cwiseMax(0.0);
        cond_mean_sum += mean;
        cond_mean_sq += mean.cwiseProduct(mean);
        cond_var_sum += var;
    }
    const Eigen::MatrixXd grand = cond_mean_sum / n_mu;
    const Eigen::MatrixXd signal_var =
        ((cond_mean_sq - n_mu * grand.cwiseProduct(grand)) / (n_mu - 1.0)).cwiseMax(0.0);
    const Eigen::MatrixXd noise_var = cond_var_sum / n_mu;

    EmpiricalSnr out;
    out.n_mu = n_mu;
    out.n_ge = n_ge;
    out.per_dim.resize(n, k);
    out.per_node.resize(n);
    out.per_dim_corrected.resize(n, k);
    out.per_node_corrected.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c) {
            out.per_dim(i, c) = ratio(signal_var(i, c), noise_var(i, c));
            // Each conditional mean still carries noise_var / N_ge of noise.
            const double between = std::max(signal_var(i, c) - noise_var(i, c) / n_ge, 0.0);
            out.per_dim_corrected(i, c) = ratio(between, noise_var(i, c));
        }
        out.per_node[i] = out.per_dim.row(i).mean();
        out.per_node_corrected[i] = out.per_dim_corrected.row(i).mean();
    }
    return out;
}

EmpiricalSnrRun empirical_snr(const Graph& g, const FeatureParams& p, const ModelSpec& spec,
                              const Split& split, int n_mu, int n_ge, std::uint64_t seed) {
    if (n_mu < 2 || n_ge < 2) throw ConfigError("Monte-Carlo sizes N_mu and N_ge must be >= 2");
    const ShiftOperator op = shift_operator(g, spec.shift, {.add_self_loops = true, .allow_isolated = true});
    // The first draw X^(1,1) of the Monte-Carlo stream is the training sample.
    Rng first(derive_seed(seed, 0));
    const Eigen::MatrixXd mu = GaussianSampler(p.signal_cov()).draw(g.num_classes(), first);
    Rng rest(derive_seed(derive_seed(seed, 0), 1));
    const Eigen::RowVectorXd gamma = GaussianSampler(p.global_cov()).draw(1, rest).row(0);
    const Eigen::MatrixXd eps = GaussianSampler(p.noise_cov()).draw(g.num_nodes(), rest);
    Eigen::MatrixXd x(g.num_nodes(), p.dim());
    for (NodeId j = 0; j < g.num_nodes(); ++j) x.row(j) = mu.row(g.labels()[j]) + gamma + eps.row(j);

    EmpiricalSnrRun run;
    run.model = train(op, g.labels(), x, spec, split);
    run.snr = empirical_snr(run.model, op, g.labels(), g.num_classes(), p, n_mu, n_ge, seed);
    return run;
}

double condition_prediction_accuracy(const std::vector<bool>& condition,
                                     std::span<const double> gcn_acc,
                                     std::span<const double> fnn_acc) {
    if (condition.size() != gcn_acc.size() || condition.size() != fnn_acc.size())
        throw DataError("condition and accuracy vectors differ in length");
    if (condition.empty()) throw DataError("no nodes to score");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < condition.size(); ++i) hits += condition[i] == (gcn_acc[i] > fnn_acc[i]);
    return static_cast<double>(hits) / static_cast<double>(condition.size());
}

double finite_mean(const Eigen::VectorXd& v) {
    double s = 0.0;
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::isfinite(v[i])) {
            s += v[i];
            ++c;
        }
    return c == 0 ? 0.0 : s / static_cast<double>(c);
}

}  // namespace mpdiag
