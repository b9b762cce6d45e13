#include "mpdiag/ensemble.hpp"

#include <cmath>
#include <sstream>

#include "mpdiag/error.hpp"
#include "mpdiag/random.hpp"

namespace mpdiag {

void SbmParams::validate() const {
    const Eigen::Index k = pi.size();
    if (k < 1) throw ConfigError("SBM needs at least one class");
    if (n < 1) throw ConfigError("SBM needs n >= 1");
    if (b.rows() != k || b.cols() != k)
        throw ConfigError("block matrix must be " + std::to_string(k) + "x" + std::to_string(k));
    if (!b.allFinite() || !pi.allFinite()) throw ConfigError("SBM parameters must be finite");
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + b.cwiseAbs().maxCoeff()))
        throw ConfigError("block matrix must be symmetric");
    if (b.minCoeff() < 0.0) throw ConfigError("block matrix entries must be non-negative");
    if (pi.minCoeff() <= 0.0) throw ConfigError("class proportions must be positive");
    if (std::abs(pi.sum() - 1.0) > 1e-12) throw ConfigError("class proportions must sum to 1");
    if (b.maxCoeff() > n)
        throw ConfigError("block entry " + std::to_string(b.maxCoeff()) + " exceeds n = " +
                          std::to_string(n) + " (edge probability above 1)");
}

Eigen::VectorXd SbmParams::class_degrees() const { return b * pi; }

double SbmParams::mean_degree() const { return pi.dot(b * pi); }

Eigen::MatrixXd SbmParams::normalized() const {
    const Eigen::VectorXd d = class_degrees();
    Eigen::VectorXd scale(pi.size());
    for (Eigen::Index u = 0; u < pi.size(); ++u) {
        if (d[u] <= 0.0) throw NumericalError("class " + std::to_string(u) + " has zero expected degree");
        scale[u] = std::sqrt(pi[u] / d[u]);
    }
    return scale.asDiagonal() * b * scale.asDiagonal();
}

SbmParams planted_partition(int k, double d, double h, NodeId n) {
    if (k < 2) throw ConfigError("planted partition needs k >= 2");
    if (!(h >= 0.0 && h <= 1.0)) throw ConfigError("homophily h must lie in [0, 1]");
    if (!(d > 0.0)) throw ConfigError("mean degree must be positive");
    SbmParams p;
    p.n = n;
    p.pi = Eigen::VectorXd::Constant(k, 1.0 / k);
    p.b = Eigen::MatrixXd::Constant(k, k, k * d * (1.0 - h) / (k - 1));
    p.b.diagonal().setConstant(k * d * h);
    p.validate();
    return p;
}

std::vector<Label> proportional_labels(NodeId n, const Eigen::VectorXd& pi) {
    std::vector<Label> labels;
    labels.reserve(static_cast<std::size_t>(n));
    double cumulative = 0.0;
    for (Eigen::Index u = 0; u < pi.size(); ++u) {
        cumulative += pi[u];
        const auto end = u + 1 == pi.size() ? n : static_cast<NodeId>(std::llround(cumulative * n));
        while (static_cast<NodeId>(labels.size()) < end) labels.push_back(static_cast<Label>(u));
    }
    return labels;
}

namespace {

// Visits indices of successes in a run of `count` Bernoulli(prob) trials.
template <typename F>
void geometric_skip(std::int64_t count, double prob, Rng& rng, F&& on_hit) {
    if (prob <= 0.0 || count <= 0) return;
    if (prob >= 1.0) {
        for (std::int64_t t = 0; t < count; ++t) on_hit(t);
        return;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double log_q = std::log1p(-prob);
    std::int64_t t = -1;
    while (true) {
        const double r = u(rng);
        const double jump = std::floor(std::log1p(-r) / log_q);
        if (jump >= static_cast<double>(count)) return;
        t += 1 + static_cast<std::int64_t>(jump);
        if (t >= count) return;
        on_hit(t);
    }
}

}  // namespace

Graph sample_sbm(const SbmParams& p, std::optional<std::vector<Label>> labels, std::uint64_t seed) {
    p.validate();
    Rng rng(seed);
    std::vector<Label> y;
    if (labels) {
        if (static_cast<NodeId>(labels->size()) != p.n)
            throw DataError("expected " + std::to_string(p.n) + " labels, got " + std::to_string(labels->size()));
        for (Label l : *labels)
            if (l < 0 || l >= p.k()) throw DataError("label " + std::to_string(l) + " outside the SBM classes");
        y = std::move(*labels);
    } else {
        std::discrete_distribution<Label> cat(p.pi.data(), p.pi.data() + p.pi.size());
        y.resize(static_cast<std::size_t>(p.n));
        for (auto& l : y) l = cat(rng);
    }

    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(p.k()));
    for (NodeId i = 0; i < p.n; ++i) members[y[i]].push_back(i);

    std::vector<Edge> edges;
    for (int u = 0; u < p.k(); ++u) {
        const auto& mu = members[u];
        const auto su = static_cast<std::int64_t>(mu.size());
        // Within-block pairs (a, b) with a < b, enumerated row by row.
        const double pu = p.b(u, u) / p.n;
        geometric_skip(su * (su - 1) / 2, pu, rng, [&](std::int64_t t) {
            // Row a holds pairs (a, a+1..su-1); invert the triangular index.
            const double disc = std::sqrt(static_cast<double>((2 * su - 1) * (2 * su - 1) - 8 * t));
            auto a = static_cast<std::int64_t>(std::floor(((2 * su - 1) - disc) / 2.0));
            auto start = [&](std::int64_t row) { return row * (2 * su - row - 1) / 2; };
            while (a > 0 && start(a) > t) --a;
            while (start(a + 1) <= t) ++a;
            const std::int64_t b = a + 1 + (t - start(a));
            edges.emplace_back(mu[a], mu[b]);
        });
        for (int v = u + 1; v < p.k(); ++v) {
            const auto& mv = members[v];
            const auto sv = static_cast<std::int64_t>(mv.size());
            geometric_skip(su * sv, p.b(u, v) / p.n, rng,
                           [&](std::int64_t t) { edges.emplace_back(mu[t / sv], mv[t % sv]); });
        }
    }
    return build_graph(edges, std::move(y), std::nullopt, p.k());
}

Eigen::MatrixXd expected_adjacency(const SbmParams& p, std::span<const Label> labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd e(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) e(i, j) = p.b(labels[i], labels[j]) / p.n;
    return e;
}

Eigen::MatrixXd expected_paths(const SbmParams& p, int r) {
    p.validate();
    if (r < 1) throw ConfigError("path length must be >= 1");
    const Eigen::MatrixXd step = p.pi.asDiagonal() * p.b;
    Eigen::MatrixXd m = p.b;
    for (int i = 1; i < r; ++i) m = m * step;
    return m / p.n;
}

double underreaching(const SbmParams& p, Label u, Label v, int r) {
    if (u < 0 || v < 0 || u >= p.k() || v >= p.k()) throw ConfigError("class index out of range");
    return expected_paths(p, r)(u, v);
}

namespace {

// Interior weight per class: D^-1 or the finite-degree correction.
Eigen::VectorXd interior_weight(const Eigen::VectorXd& d, bool bound) {
    Eigen::VectorXd w(d.size());
    for (Eigen::Index u = 0; u < d.size(); ++u) {
        if (d[u] <= 0.0) throw NumericalError("class " + std::to_string(u) + " has zero expected degree");
        w[u] = bound ? 1.0 / d[u] + std::expm1(-d[u]) / (d[u] * d[u]) : 1.0 / d[u];
    }
    return w;
}

}  // namespace

double oversquashing_factor(const SbmParams& p, Label u, Label v, int r, bool bound) {
    const double reach = underreaching(p, u, v, r);
    if (reach <= 0.0)
        throw NumericalError("classes " + std::to_string(u) + " and " + std::to_string(v) +
                             " are unreachable at distance " + std::to_string(r));
    const Eigen::VectorXd d = p.class_degrees();
    const Eigen::VectorXd w = interior_weight(d, bound);
    const Eigen::MatrixXd step = w.cwiseProduct(p.pi).asDiagonal() * p.b;
    Eigen::MatrixXd m = p.b;
    for (int i = 1; i < r; ++i) m = m * step;
    const double numer = m(u, v) / std::sqrt(d[u] * d[v]) / p.n;
    return numer / reach;
}

void validate_confusion(const Eigen::MatrixXd& c, const Eigen::VectorXd& pi) {
    const Eigen::Index k = pi.size();
    if (c.rows() != k || c.cols() != k)
        throw ConfigError("confusion matrix must be " + std::to_string(k) + "x" + std::to_string(k));
    if (!c.allFinite() || c.minCoeff() < 0.0) throw ConfigError("confusion matrix entries must be non-negative");
    if (std::abs(c.sum() - 1.0) > 1e-9) throw ConfigError("confusion matrix entries must sum to 1");
    const Eigen::VectorXd rows = c.rowwise().sum();
    if ((rows - pi).cwiseAbs().maxCoeff() > 1e-6)
        throw ConfigError("confusion matrix row sums must equal the block class proportions");
}

double planted_partition_homophily(int k, double h, int order) {
    if (k < 2) throw ConfigError("planted partition needs k >= 2");
    const double lambda = (k * h - 1.0) / (k - 1.0);
    return 1.0 / k + (k - 1.0) / k * std::pow(lambda, order);
}

EnsembleMetrics expected_order_metrics(const SbmParams& p, int order,
                                       const std::optional<Eigen::MatrixXd>& confusion) {
    p.validate();
    if (order < 0) throw ConfigError("order must be non-negative");
    const Eigen::MatrixXd bhat = p.normalized();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(p.k(), p.k());
    for (int i = 0; i < order; ++i) power = power * bhat;

    const Eigen::VectorXd sqrt_pi = p.pi.cwiseSqrt();
    const Eigen::MatrixXd c = confusion ? *confusion : Eigen::MatrixXd(p.pi.asDiagonal());
    if (confusion) validate_confusion(c, p.pi);
    const Eigen::MatrixXd scaled = sqrt_pi.cwiseInverse().asDiagonal() * c;

    const double mean_degree = p.mean_degree();
    EnsembleMetrics m;
    m.order = order;
    m.expected_h = (scaled.transpose() * power * scaled).trace();
    m.expected_c = sqrt_pi.dot(power * sqrt_pi);
    m.expected_t = 0.0;
    m.t_band = order == 0 ? 1.0 : std::pow(mean_degree, -order);
    m.error_band = 1.0 / mean_degree;
    if (order == 0) m.expected_t = 1.0;
    return m;
}

LowOrderBounds first_second_order_bounds(const SbmParams& p,
                                         const std::optional<Eigen::MatrixXd>& confusion) {
    p.validate();
    const Eigen::MatrixXd c = confusion ? *confusion : Eigen::MatrixXd(p.pi.asDiagonal());
    if (confusion) validate_confusion(c, p.pi);
    const Eigen::VectorXd d = p.class_degrees();
    const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd inv = d.cwiseInverse();
    const Eigen::VectorXd f = interior_weight(d, true);

    LowOrderBounds out;
    const Eigen::MatrixXd c1 = inv_sqrt.asDiagonal() * c;
    out.h1 = (c1.transpose() * p.b * c1).trace();
    const Eigen::MatrixXd two_step = p.b * f.asDiagonal() * p.pi.asDiagonal() * p.b;
    out.h2 =p.pi.dot(inv.asDiagonal() * (p.b * (inv.asDiagonal() * p.pi)));
    out.h2 += (c1.transpose() * two_step * c1).trace();
    return out;
}

PoissonMoments poisson_moments(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("Poisson rate must be positive");
    PoissonMoments m;
    m.inv_x1 = -std::expm1(-lambda) / lambda;
    if (lambda < 0.5) {
        // Series e^-l sum_k l^k / (k! (k + 2)) avoids cancellation.
        double term = 1.0, sum = 0.0;
        for (int k = 0; k < 60; ++k) {
            sum += term / (k + 2);
            term *= lambda / (k + 1);
        }
        m.inv_x2 = std::exp(-lambda) * sum;
    } else {
        m.inv_x2 = (lambda + std::expm1(-lambda)) / (lambda * lambda);
    }
    const double lower_sq = 1.0 / lambda - 1.0 / (2.0 * lambda * lambda);
    m.inv_sqrt_x1_lower = lower_sq > 0.0 ? std::sqrt(lower_sq) : 0.0;
    m.inv_sqrt_x1_upper = 1.0 / std::sqrt(lambda);
    return m;
}

double poisson_inverse_power_bound(double lambda, int k) {
    if (!(lambda > 0.0)) throw ConfigError("Poisson rate must be positive");
    if (k < 0) throw ConfigError("power must be non-negative");
    return std::pow(lambda, -k);
}

std::optional<std::string> sparsity_warning(const SbmParams& p) {
    const double d = p.mean_degree();
    if (d <= p.n / 10.0) return std::nullopt;
    std::ostringstream os;
    os << "mean degree " << d << " exceeds n/10 = " << p.n / 10.0
       << "; sparse-ensemble approximations may be inaccurate";
    return os.str();
}

}  // namespace mpdiag
