#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "mpdiag/bridge.hpp"
#include "mpdiag/error.hpp"
#include "mpdiag/features.hpp"
#include "oracles.hpp"

using namespace mpdiag;

namespace {

// Brute force over all k! permutations, keeping the involutions.
std::size_t brute_force_involutions(int k) {
    std::vector<int> p(static_cast<std::size_t>(k));
    std::iota(p.begin(), p.end(), 0);
    std::size_t count = 0;
    do {
        bool inv = true;
        for (int u = 0; u < k; ++u) inv = inv && p[p[u]] == u;
        count += inv;
    } while (std::next_permutation(p.begin(), p.end()));
    return count;
}

Eigen::MatrixXd normalized_block(const SbmParams& p) {
    const Eigen::VectorXd d = p.class_degrees();
    const Eigen::VectorXd s = p.pi.cwiseSqrt().cwiseQuotient(d.cwiseSqrt());
    return s.asDiagonal() * p.b * s.asDiagonal();
}

}  // namespace

TEST_CASE("involution enumeration") {
    CHECK(enumerate_involutions(1).size() == 1);
    const auto two = enumerate_involutions(2);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == SymmetricPermutation::identity(2));
    CHECK(two[1].mapping() == std::vector<int>{1, 0});
    for (int k = 1; k <= 7; ++k) {
        const auto all = enumerate_involutions(k);
        CHECK(all.size() == brute_force_involutions(k));
        CHECK(all.size() == telephone_number(k));
        std::set<std::vector<int>> uniq;
        for (const auto& p : all) {
            uniq.insert(p.mapping());
            for (int u = 0; u < k; ++u) CHECK(p[p[u]] == u);
        }
        CHECK(uniq.size() == all.size());
        CHECK(std::is_sorted(all.begin(), all.end(),
                             [](const auto& a, const auto& b) { return a.mapping() < b.mapping(); }));
    }
    CHECK(telephone_number(4) == 10);
    CHECK(telephone_number(12) == 140152);
    CHECK_THROWS_AS(enumerate_involutions(kMaxInvolutionClasses + 1), ConfigError);
}

TEST_CASE("permutation parsing and notation") {
    const auto p = SymmetricPermutation::parse("(1, 2)(3, 4)", 5);
    CHECK(p.mapping() == std::vector<int>{1, 0, 3, 2, 4});
    CHECK(p.cycle_notation() == "(1, 2)(3, 4)");
    CHECK(p.fixed_points() == 1);
    CHECK(SymmetricPermutation::parse("(1,2),(3,4)", 4) == SymmetricPermutation::parse("(1, 2)(3, 4)", 4));
    CHECK(SymmetricPermutation::parse("()", 3) == SymmetricPermutation::identity(3));
    CHECK(SymmetricPermutation::parse("id", 3).cycle_notation() == "()");
    CHECK(p.matrix() == p.matrix().transpose());
    CHECK_THROWS_AS(SymmetricPermutation::parse("(1,2,3)", 3), ConfigError);
    CHECK_THROWS_AS(SymmetricPermutation::parse("(1,5)", 3), ConfigError);
    CHECK_THROWS_AS(SymmetricPermutation::parse("(1,2)(2,3)", 3), ConfigError);
    CHECK_THROWS_AS(SymmetricPermutation(std::vector<int>{1, 2, 0}), ConfigError);
}

TEST_CASE("optimal block matrix") {
    const auto swap = SymmetricPermutation::parse("(1,2)", 2);
    const auto p = optimal_block_matrix(Eigen::Vector2d(0.5, 0.5), swap, 10, 1000);
    CHECK(p.b.isApprox(Eigen::Matrix2d{{0, 20}, {20, 0}}));
    CHECK((p.class_degrees().array() - 10).abs().maxCoeff() < 1e-12);

    const auto id = optimal_block_matrix(Eigen::Vector2d(0.5, 0.5), SymmetricPermutation::identity(2), 10, 1000);
    CHECK(id.b(0, 1) == 0.0);

    CHECK_THROWS_AS(optimal_block_matrix(Eigen::Vector2d(1.0, 0.0), swap, 10, 1000), ConfigError);
    CHECK_THROWS_AS(optimal_block_matrix(Eigen::Vector3d(0.2, 0.3, 0.5), swap, 10, 1000), ConfigError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int k = 2; k <= 5; ++k)
        for (const auto& perm : enumerate_involutions(k)) {
            Eigen::VectorXd pi(k);
            for (int a = 0; a < k; ++a) pi[a] = u(rng);
            pi /= pi.sum();
            const auto q = optimal_block_matrix(pi, perm, 12, 100000);
            CHECK((normalized_block(q) - perm.matrix()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(q.mean_degree() == doctest::Approx(12.0).epsilon(1e-12));
            const Eigen::VectorXd sq = q.pi.cwiseSqrt();
            for (int l = 1; l <= 3; ++l) {
                Eigen::MatrixXd bh = Eigen::MatrixXd::Identity(k, k);
                for (int i = 0; i < 2 * l; ++i) bh = bh * normalized_block(q);
                CHECK((sq.asDiagonal() * bh * sq.asDiagonal()).trace() == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
}

TEST_CASE("random block matrices never beat the involution optimum") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k : {2, 3}) {
        const Eigen::VectorXd pi = Eigen::VectorXd::Constant(k, 1.0 / k);
        double best = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            SbmParams p;
            p.n = 100000;
            p.pi = pi;
            p.b = Eigen::MatrixXd::Zero(k, k);
            for (int a = 0; a < k; ++a)
                for (int b = a; b < k; ++b) p.b(a, b) = p.b(b, a) = u(rng) < 0.2 ? 0.0 : u(rng);
            if (p.class_degrees().minCoeff() <= 0) continue;
            p.b *= 10.0 / p.mean_degree();
            const Eigen::MatrixXd bh = normalized_block(p);
            const Eigen::MatrixXd b4 = bh * bh * bh * bh;
            best = std::max(best, (pi.cwiseSqrt().asDiagonal() * b4 * pi.cwiseSqrt().asDiagonal()).trace());
        }
        CHECK(best <= 1.0 + 1e-9);
    }
}

TEST_CASE("optimum value") {
    const Eigen::Vector2d pi(0.5, 0.5);
    const Eigen::MatrixXd perfect = pi.asDiagonal();
    CHECK(optimum_value(perfect) == doctest::Approx(1.0));
    CHECK(optimum_value(Eigen::Matrix2d::Constant(0.25)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(optimum_value(Eigen::Matrix2d{{0.5, 0.5}, {0.0, 0.0}}), NumericalError);

    // Random confusion matrices sit between the independent-prediction floor
    // sum_v p_v^2 and the pure-prediction ceiling 1.
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        Eigen::Matrix3d c;
        for (int a = 0; a < 9; ++a) c.data()[a] = u(rng) + 0.01;
        c /= c.sum();
        const Eigen::Vector3d truth = c.colwise().sum().transpose();
        const double v = optimum_value(c);
        CHECK(v >= truth.squaredNorm() - 1e-12);
        CHECK(v <= 1.0 + 1e-12);

        // Interpolating from independent to perfect predictions raises the value.
        const Eigen::Matrix3d indep = truth * truth.transpose();
        const Eigen::Matrix3d perfect3 = truth.asDiagonal();
        CHECK(optimum_value(indep) == doctest::Approx(truth.squaredNorm()));
        double prev = -1.0;
        for (double s = 0.0; s <= 1.0 + 1e-9; s += 0.1) {
            const double cur = optimum_value((1 - s) * indep + s * perfect3);
            CHECK(cur >= prev - 1e-12);
            prev = cur;
        }
        CHECK(prev == doctest::Approx(1.0));
    }
}

TEST_CASE("predicted proportions floor empty classes") {
    const std::vector<Label> pred{0, 0, 0, 1};
    const auto pi = predicted_proportions(pred, 3);
    CHECK(pi.sum() == doctest::Approx(1.0));
    CHECK(pi.minCoeff() > 0.0);
    CHECK(pi[0] > pi[1]);
}

TEST_CASE("BRIDGE keeps a perfect two-cluster graph at its fixed point") {
    const NodeId n = 400;
    const auto p = planted_partition(2, 10, 1.0, n);
    const Graph g = sample_sbm(p, proportional_labels(n, p.pi), 3);
    Eigen::MatrixXd x(n, 2);
    for (NodeId i = 0; i < n; ++i) x.row(i) = g.labels()[i] == 0 ? Eigen::RowVector2d(1, 0) : Eigen::RowVector2d(0, 1);
    ModelSpec spec;
    spec.arch = Arch::Sgc;
    spec.depth = 1;
    spec.epochs = 100;
    const Split split = random_split(n, 0.6, 0.2, 1);
    BridgeOptions opt;
    opt.perm = SymmetricPermutation::identity(2);
    opt.iterations = 4;
    opt.seed = 2;
    const auto state = bridge(g, x, spec, split, opt);
    CHECK(state.history.size() == 5);
    for (const auto& r : state.history) {
        CHECK(r.test_accuracy == 1.0);
        CHECK(r.edge_homophily == 1.0);
        CHECK(r.optimum == doctest::Approx(1.0));
        CHECK(std::abs(r.mean_degree - 10.0) < 1.0);
    }
    CHECK(state.graph.labels() == g.labels());
    CHECK(bridge_history_csv(state).find("iteration,") == 0);
}

TEST_CASE("BRIDGE with zero iterations returns the input graph") {
    const auto p = planted_partition(2, 6, 0.6, 200);
    const Graph g = sample_sbm(p, std::nullopt, 1);
    const auto x = sample_features(g, FeatureParams::iid(3, 1, 1, 1), 2).x;
    BridgeOptions opt;
    opt.perm = SymmetricPermutation::identity(2);
    opt.iterations = 0;
    ModelSpec spec;
    spec.epochs = 20;
    const auto state = bridge(g, x, spec, random_split(200, 0.6, 0.2, 1), opt);
    CHECK(state.history.size() == 1);
    CHECK(state.graph.edge_list() == g.edge_list());
    CHECK(state.best_iteration == 0);

    opt.perm = SymmetricPermutation::identity(3);
    CHECK_THROWS_AS(bridge(g, x, spec, random_split(200, 0.6, 0.2, 1), opt), ConfigError);
}

TEST_CASE("BRIDGE rewiring raises homophily on a mid-homophily graph") {
    const NodeId n = 600;
    const auto p = planted_partition(2, 10, 0.5, n);
    const Graph g = sample_sbm(p, std::nullopt, 12);
    const auto x = sample_features(g, FeatureParams::iid(5, 1e-5, 1e-4, 1e-4), 13).x;
    ModelSpec spec;
    spec.seed = 4;
    BridgeOptions opt;
    opt.perm = SymmetricPermutation::identity(2);
    opt.iterations = 5;
    opt.seed = 6;
    const auto state = bridge(g, x, spec, random_split(n, 0.6, 0.2, 3), opt);
    const auto& h = state.history;
    for (std::size_t m = 1; m < h.size(); ++m) {
        CHECK(h[m].homophily > h[0].homophily);
        // Sampled-graph degree within a loose 3 sigma band of the target.
        CHECK(std::abs(h[m].mean_degree - 10.0) < 3 * std::sqrt(2.0 * 10.0 / n) + 0.05);
        // h^(2) of the sample tracks the achievable optimum within the 1/<d> band.
        CHECK(std::abs(h[m].homophily - h[m - 1].optimum) < 0.1);
    }
    const auto& best = state.best();
    CHECK(best.val_accuracy >= h[0].val_accuracy);
}

TEST_CASE("BRIDGE optimum rarely decreases between iterations") {
    const NodeId n = 800;
    const auto p = planted_partition(2, 10, 0.5, n);
    const Graph g = sample_sbm(p, std::nullopt, 21);
    const auto x = sample_features(g, FeatureParams::iid(5, 1e-2, 1e-4, 1e-4), 22).x;
    ModelSpec spec;
    spec.seed = 8;
    BridgeOptions opt;
    opt.perm = SymmetricPermutation::identity(2);
    opt.iterations = 10;
    opt.seed = 9;
    const auto h = bridge(g, x, spec, random_split(n, 0.6, 0.2, 5), opt).history;
    int steps = 0, non_decreasing = 0;
    for (std::size_t m = 1; m < h.size(); ++m) {
        ++steps;
        non_decreasing += h[m].optimum >= h[m - 1].optimum - 1e-9;
    }
    CHECK(non_decreasing >= 0.8 * steps);
}
