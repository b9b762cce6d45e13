#include <doctest.h>

#include "mpdiag/bottleneck.hpp"
#include "mpdiag/ensemble.hpp"
#include "mpdiag/error.hpp"
#include "oracles.hpp"

using namespace mpdiag;

TEST_CASE("planted partition block matrix") {
    const auto p = planted_partition(2, 10, 0.5, 1000);
    CHECK(p.b.isApprox(Eigen::Matrix2d::Constant(10.0)));
    const auto one = planted_partition(3, 8, 1.0, 1000);
    CHECK(one.b(0, 1) == 0.0);
    CHECK(one.b(0, 0) == doctest::Approx(24.0));
    for (double h : {0.0, 0.3, 0.9}) {
        const auto q = planted_partition(4, 7, h, 500);
        CHECK((q.class_degrees().array() - 7.0).abs().maxCoeff() < 1e-12);
        CHECK(q.mean_degree() == doctest::Approx(7.0));
    }
    CHECK_THROWS_AS(planted_partition(2, 10, 1.0, 15), ConfigError);
    CHECK_THROWS_AS(planted_partition(1, 10, 0.5, 100), ConfigError);
    CHECK_THROWS_AS(planted_partition(2, 10, 1.5, 100), ConfigError);
}

TEST_CASE("SBM parameter validation") {
    SbmParams p;
    p.n = 100;
    p.pi = Eigen::Vector2d(0.5, 0.5);
    p.b = Eigen::Matrix2d{{1, 2}, {3, 1}};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.b = Eigen::Matrix2d{{1, -2}, {-2, 1}};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.b = Eigen::Matrix2d::Ones();
    p.pi = Eigen::Vector2d(0.6, 0.6);
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.pi = Eigen::Vector2d(0.5, 0.5);
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("proportional labels") {
    const auto y = proportional_labels(10, Eigen::Vector3d(0.5, 0.3, 0.2));
    CHECK(y == std::vector<Label>{0, 0, 0, 0, 0, 1, 1, 1, 2, 2});
}

TEST_CASE("empty block matrix samples an empty graph") {
    SbmParams p;
    p.n = 200;
    p.pi = Eigen::Vector2d(0.5, 0.5);
    p.b = Eigen::Matrix2d::Zero();
    const Graph g = sample_sbm(p, std::nullopt, 1);
    CHECK(g.num_nodes() == 200);
    CHECK(g.num_edges() == 0);
}

TEST_CASE("sampled graphs are simple and deterministic") {
    const auto p = planted_partition(3, 12, 0.6, 600);
    const Graph a = sample_sbm(p, std::nullopt, 9), b = sample_sbm(p, std::nullopt, 9);
    CHECK(a.edge_list() == b.edge_list());
    CHECK(a.labels() == b.labels());
    for (NodeId i = 0; i < a.num_nodes(); ++i) CHECK_FALSE(a.has_edge(i, i));
    const std::vector<Label> fixed = proportional_labels(600, p.pi);
    CHECK(sample_sbm(p, fixed, 3).labels() == fixed);
    CHECK_THROWS_AS(sample_sbm(p, std::vector<Label>(10, 0), 3), DataError);
}

TEST_CASE("sampled edge homophily and mean degree match the ensemble") {
    const NodeId n = 1000;
    for (double h : {0.2, 0.75}) {
        const auto p = planted_partition(2, 10, h, n);
        const auto y = proportional_labels(n, p.pi);
        std::vector<double> hom, deg;
        for (std::uint64_t s = 0; s < 50; ++s) {
            const Graph g = sample_sbm(p, y, 1000 + s);
            hom.push_back(edge_homophily(g));
            deg.push_back(2.0 * static_cast<double>(g.num_edges()) / n);
        }
        // Exact expectations for fixed balanced labels without self-pairs.
        const double same_pairs = 2.0 * (n / 2) * (n / 2 - 1) / 2.0, cross_pairs = (n / 2.0) * (n / 2.0);
        const double e_same = same_pairs * p.b(0, 0) / n, e_cross = cross_pairs * p.b(0, 1) / n;
        const double exp_deg = 2.0 * (e_same + e_cross) / n;
        CHECK(std::abs(oracle::mean(deg) - exp_deg) < 3 * oracle::stddev(deg) / std::sqrt(50.0));
        CHECK(std::abs(oracle::mean(hom) - e_same / (e_same + e_cross)) <
              3 * oracle::stddev(hom) / std::sqrt(50.0) + 1e-3);
        CHECK(std::abs(oracle::mean(deg) - p.mean_degree()) < 0.05);
    }
}

TEST_CASE("categorical labels follow the class proportions") {
    SbmParams p = planted_partition(3, 5, 0.5, 30000);
    p.pi = Eigen::Vector3d(0.2, 0.3, 0.5);
    p.b = Eigen::Matrix3d::Constant(1.0);
    const Graph g = sample_sbm(p, std::nullopt, 4);
    std::vector<double> counts(3, 0.0);
    for (Label y : g.labels()) counts[y] += 1;
    for (int u = 0; u < 3; ++u) {
        const double sd = std::sqrt(30000 * p.pi[u] * (1 - p.pi[u]));
        CHECK(std::abs(counts[u] - 30000 * p.pi[u]) < 4 * sd);
    }
}

TEST_CASE("underreaching block values") {
    const auto p = planted_partition(2, 10, 0.75, 3000);
    CHECK(underreaching(p, 0, 1, 1) == doctest::Approx(5.0 / 3000));
    CHECK(underreaching(p, 0, 0, 2) == doctest::Approx(125.0 / 3000).epsilon(1e-12));
    const Eigen::MatrixXd e2 = expected_paths(p, 2);
    CHECK(e2(0, 0) == doctest::Approx(125.0 / 3000));
}

TEST_CASE("block shortcut equals dense expected-adjacency powers") {
    SbmParams p;
    p.n = 120;
    p.pi = Eigen::Vector3d(0.25, 0.25, 0.5);
    p.b = Eigen::Matrix3d{{9, 2, 1}, {2, 6, 3}, {1, 3, 5}};
    p.validate();
    const auto y = proportional_labels(120, p.pi);
    const Eigen::MatrixXd e = expected_adjacency(p, y);
    for (int r = 1; r <= 4; ++r) {
        const Eigen::MatrixXd dense = oracle::matrix_power(e, r);
        double worst = 0;
        for (NodeId i = 0; i < 120; i += 7)
            for (NodeId j = 0; j < 120; j += 5)
                worst = std::max(worst, std::abs(dense(i, j) - underreaching(p, y[i], y[j], r)));
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("oversquashing factor") {
    SbmParams p;
    p.n = 1000;
    p.pi = Eigen::Vector2d(0.3, 0.7);
    p.b = Eigen::Matrix2d{{20, 4}, {4, 12}};
    const Eigen::VectorXd d = p.class_degrees();
    CHECK(oversquashing_factor(p, 0, 1, 1) == doctest::Approx(1.0 / std::sqrt(d[0] * d[1])));

    // Leading order shrinks like <d>^-(r-1) (times the 1/sqrt(D_u D_v) edge factor).
    for (int r : {2, 3}) {
        std::vector<double> scaled;
        for (double deg : {10.0, 30.0, 100.0}) {
            const auto pp = planted_partition(2, deg, 0.7, 100000);
            scaled.push_back(oversquashing_factor(pp, 0, 0, r) * std::pow(deg, r));
        }
        for (double s : scaled) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    const auto pp = planted_partition(2, 30, 0.7, 100000);
    const double lead = oversquashing_factor(pp, 0, 1, 2), tight = oversquashing_factor(pp, 0, 1, 2, true);
    CHECK(tight < lead);
    CHECK(tight > 0.9 * lead);

    const auto disjoint = planted_partition(2, 10, 1.0, 1000);
    CHECK_THROWS_AS(oversquashing_factor(disjoint, 0, 1, 1), NumericalError);
}

TEST_CASE("expected higher-order homophily") {
    const auto p = planted_partition(2, 10, 0.75, 3000);
    const auto m = expected_order_metrics(p, 2);
    CHECK(m.expected_h == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(m.expected_c == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.expected_t == 0.0);
    CHECK(m.t_band == doctest::Approx(0.01));
    CHECK(m.error_band == doctest::Approx(0.1));
    const Eigen::MatrixXd pi = p.pi.asDiagonal();
    CHECK(expected_order_metrics(p, 2, pi).expected_h == doctest::Approx(m.expected_h));
    CHECK(expected_order_metrics(p, 0).expected_h == doctest::Approx(1.0));

    for (int k : {2, 3, 5})
        for (double h : {0.0, 0.3, 0.5, 0.8, 1.0})
            for (int l = 1; l <= 4; ++l) {
                const auto q = planted_partition(k, 10, h, 5000);
                CHECK(expected_order_metrics(q, l).expected_h ==
                      doctest::Approx(planted_partition_homophily(k, h, l)).epsilon(1e-10));
            }
    CHECK(planted_partition_homophily(2, 0.25, 3) == doctest::Approx(0.5 + 0.5 * std::pow(-0.5, 3)));

    // Even orders are symmetric around h = 1/2 and maximal at the ends.
    double best = -1, best_h = -1;
    for (double h = 0.0; h <= 1.0 + 1e-9; h += 0.125) {
        const double v = expected_order_metrics(planted_partition(2, 10, h, 3000), 2).expected_h;
        if (v > best + 1e-12) {
            best = v;
            best_h = h;
        }
    }
    CHECK(best_h == 0.0);
    CHECK(expected_order_metrics(planted_partition(2, 10, 1.0, 3000), 2).expected_h == doctest::Approx(best));
}

TEST_CASE("confusion-matrix corrected homophily") {
    const auto p = planted_partition(2, 10, 1.0, 3000);
    // Uniform random predictions: homophily collapses to 1/2.
    const Eigen::MatrixXd c = Eigen::Matrix2d::Constant(0.25);
    CHECK(expected_order_metrics(p, 2, c).expected_h == doctest::Approx(0.5));
    CHECK_THROWS_AS(expected_order_metrics(p, 2, Eigen::MatrixXd(Eigen::Matrix2d::Constant(0.3))), ConfigError);
    const Eigen::Matrix2d skew{{0.45, 0.15}, {0.1, 0.3}};
    CHECK_THROWS_AS(validate_confusion(skew, p.pi), ConfigError);
    const Eigen::Matrix2d ok{{0.45, 0.05}, {0.05, 0.45}};
    CHECK_NOTHROW(validate_confusion(ok, p.pi));
}

TEST_CASE("first and second order bounds") {
    const auto perfect = planted_partition(2, 10, 1.0, 3000);
    const auto b = first_second_order_bounds(perfect);
    CHECK(b.h1 == doctest::Approx(1.0));

    // Large-degree limit of the second-order bound is the l = 2 ensemble value.
    for (double h : {0.2, 0.6, 0.9}) {
        const auto big = planted_partition(2, 1e6, h, 100000000);
        const auto lim = first_second_order_bounds(big);
        CHECK(lim.h2 == doctest::Approx(expected_order_metrics(big, 2).expected_h).epsilon(1e-5));
        CHECK(lim.h1 == doctest::Approx(h).epsilon(1e-12));
    }

    // Sampled first-order homophily sits at or below the bound, within 10%.
    const auto p = planted_partition(2, 30, 0.7, 1000);
    const auto bound = first_second_order_bounds(p).h1;
    std::vector<double> emp;
    for (std::uint64_t s = 0; s < 30; ++s) {
        const Graph g = sample_sbm(p, std::nullopt, 50 + s);
        const auto op = shift_operator(g, ShiftKind::SymNormalizedRaw, {.allow_isolated = true});
        emp.push_back(order_metrics(op, g.labels(), 1).h);
    }
    CHECK(oracle::mean(emp) <= bound + 3 * oracle::stddev(emp) / std::sqrt(30.0));
    CHECK(oracle::mean(emp) >= 0.9 * bound);
}

TEST_CASE("empirical homophily converges to the ensemble value as degree grows") {
    const NodeId n = 3000;
    std::vector<double> err;
    for (double d : {10.0, 30.0, 100.0}) {
        const auto p = planted_partition(2, d, 0.75, n);
        const double target = planted_partition_homophily(2, 0.75, 2);
        double acc = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const Graph g = sample_sbm(p, std::nullopt, 7000 + s);
            const auto op = shift_operator(g, ShiftKind::SymNormalizedRaw, {.allow_isolated = true});
            acc += std::abs(order_metrics(op, g.labels(), 2).h - target);
        }
        err.push_back(acc / 20);
    }
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
}

TEST_CASE("Poisson moments") {
    const auto tiny = poisson_moments(1e-9);
    CHECK(tiny.inv_x1 == doctest::Approx(1.0));
    CHECK(tiny.inv_x2 == doctest::Approx(0.5));
    CHECK_THROWS_AS(poisson_moments(0.0), ConfigError);
    CHECK_THROWS_AS(poisson_moments(-1.0), ConfigError);

    std::mt19937_64 rng(12);
    for (double lambda : {1.0, 10.0, 50.0}) {
        const auto m = poisson_moments(lambda);
        std::poisson_distribution<int> pois(lambda);
        const int draws = 200000;
        std::vector<double> a(draws), b(draws), c(draws);
        for (int i = 0; i < draws; ++i) {
            const double x = pois(rng);
            a[i] = 1.0 / (x + 1);
            b[i] = 1.0 / (x + 2);
            c[i] = 1.0 / std::sqrt(x + 1);
        }
        CHECK(std::abs(oracle::mean(a) - m.inv_x1) < 3 * oracle::stddev(a) / std::sqrt(draws));
        CHECK(std::abs(oracle::mean(b) - m.inv_x2) < 3 * oracle::stddev(b) / std::sqrt(draws));
        if (lambda >= 5) {
            CHECK(m.inv_sqrt_x1_lower < oracle::mean(c));
            CHECK(oracle::mean(c) < m.inv_sqrt_x1_upper);
        }
    }
    CHECK(poisson_inverse_power_bound(10.0, 2) == doctest::Approx(0.01));
}

TEST_CASE("sparsity warning") {
    CHECK_FALSE(sparsity_warning(planted_partition(2, 10, 0.5, 1000)).has_value());
    CHECK(sparsity_warning(planted_partition(2, 30, 0.5, 200)).has_value());
}
