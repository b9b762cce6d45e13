#include <doctest.h>

#include "mpdiag/error.hpp"
#include "mpdiag/shift_operator.hpp"
#include "oracles.hpp"

using namespace mpdiag;

namespace {

Graph triangle() {
    std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}};
    return build_graph(e, {0, 0, 1});
}

Graph path(NodeId n) {
    std::vector<Edge> e;
    for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return build_graph(e, std::vector<Label>(static_cast<std::size_t>(n), 0));
}

}  // namespace

TEST_CASE("build_graph basics") {
    std::vector<Edge> one{{0, 1}};
    const Graph g = build_graph(one, {0, 1});
    CHECK(g.degrees() == std::vector<NodeId>{1, 1});
    CHECK(g.num_edges() == 1);

    std::vector<Edge> messy{{0, 1}, {1, 0}, {2, 2}};
    const Graph h = build_graph(messy, {0, 0, 1});
    CHECK(h.num_edges() == 1);
    CHECK(h.edge_list() == std::vector<Edge>{{0, 1}});
    CHECK_FALSE(h.has_edge(2, 2));

    CHECK(triangle().degrees() == std::vector<NodeId>{2, 2, 2});
}

TEST_CASE("build_graph rejects bad input") {
    std::vector<Edge> bad{{0, 5}};
    CHECK_THROWS_AS(build_graph(bad, {0, 1}), DataError);
    std::vector<Edge> ok{{0, 1}};
    CHECK_THROWS_AS(build_graph(ok, {0, -1}), DataError);
    CHECK_THROWS_AS(build_graph(ok, {0, 1}, Eigen::MatrixXd::Zero(3, 2)), DataError);
    CHECK_THROWS_AS(build_graph(ok, {0, 2}, std::nullopt, 2), DataError);
}

TEST_CASE("graph invariants on random graphs") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Graph g = oracle::random_graph(30, 0.15, 3, s);
        for (NodeId i = 0; i < g.num_nodes(); ++i) {
            CHECK_FALSE(g.has_edge(i, i));
            for (NodeId j : g.neighbors(i)) CHECK(g.has_edge(j, i));
        }
    }
}

TEST_CASE("shift operator examples") {
    std::vector<Edge> one{{0, 1}};
    const Graph g = build_graph(one, {0, 1});
    const Eigen::MatrixXd raw = shift_operator(g, ShiftKind::SymNormalizedRaw).matrix;
    CHECK(raw.isApprox(Eigen::Matrix2d{{0, 1}, {1, 0}}));
    const Eigen::MatrixXd loops = shift_operator(g, ShiftKind::SymNormalizedSelfLoops).matrix;
    CHECK(loops.isApprox(Eigen::Matrix2d::Constant(0.5)));

    const Eigen::MatrixXd rw = shift_operator(path(3), ShiftKind::RandomWalk).matrix;
    CHECK(rw(1, 0) == doctest::Approx(0.5));
    CHECK(rw(1, 1) == 0.0);
    CHECK(rw(1, 2) == doctest::Approx(0.5));
}

TEST_CASE("shift operators match dense oracles and stay symmetric") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Graph g = oracle::random_graph(25, 0.2, 2, 100 + s);
        const Eigen::MatrixXd a = oracle::dense_adjacency(g);
        const auto loops = shift_operator(g, ShiftKind::SymNormalizedSelfLoops);
        CHECK((Eigen::MatrixXd(loops.matrix) - oracle::sym_normalized(a, true)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(loops.symmetric);
        // Exact bit equality of paired entries.
        const Eigen::MatrixXd m = loops.matrix;
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::MatrixXd(loops.matrix).minCoeff() >= 0.0);

        const auto md = shift_operator(g, ShiftKind::MeanDegreeScaled);
        const double mean_degree = a.sum() / a.rows();
        CHECK((Eigen::MatrixXd(md.matrix) - a / mean_degree).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("isolated nodes under normalisation") {
    std::vector<Edge> e{{0, 1}};
    const Graph g = build_graph(e, {0, 0, 1});
    CHECK_THROWS_AS(shift_operator(g, ShiftKind::SymNormalizedRaw), NumericalError);
    try {
        shift_operator(g, ShiftKind::RandomWalk);
    } catch (const NumericalError& err) {
        CHECK(std::string(err.what()).find('2') != std::string::npos);
    }
    const auto op = shift_operator(g, ShiftKind::SymNormalizedRaw, {.allow_isolated = true});
    CHECK(Eigen::MatrixXd(op.matrix).row(2).isZero());
    // Self-loops give every node degree >= 1.
    CHECK_NOTHROW(shift_operator(g, ShiftKind::SymNormalizedSelfLoops));
}

TEST_CASE("apply_power against dense powers") {
    const Graph g = path(4);
    const auto op = shift_operator(g, ShiftKind::SymNormalizedSelfLoops);
    const Eigen::MatrixXd v = Eigen::MatrixXd::Random(4, 3);
    CHECK(apply_power(op, v, 0) == v);
    CHECK((apply_power(op, v, 1) - Eigen::MatrixXd(op.matrix) * v).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((apply_power(op, v, 2) - oracle::matrix_power(op.matrix, 2) * v).cwiseAbs().maxCoeff() < 1e-12);

    for (std::uint64_t s = 0; s < 4; ++s) {
        const Graph r = oracle::random_graph(64, 0.08, 3, 200 + s);
        const auto rop = shift_operator(r, ShiftKind::SymNormalizedSelfLoops);
        const Eigen::MatrixXd x = Eigen::MatrixXd::Random(64, 2);
        for (int k = 0; k <= 6; ++k) {
            CHECK((apply_power(rop, x, k) - oracle::matrix_power(rop.matrix, k) * x).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((dense_power(rop, k) - oracle::matrix_power(rop.matrix, k)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    CHECK_THROWS_AS(apply_power(op, Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 1)), 1), DataError);
}

TEST_CASE("first-order homophily") {
    const Graph t = triangle();
    CHECK(edge_homophily(t) == doctest::Approx(1.0 / 3));
    CHECK(node_homophily(t) == doctest::Approx(1.0 / 3));

    std::vector<Edge> e{{0, 1}};
    const Graph pair = build_graph(e, {0, 1});
    CHECK(edge_homophily(pair) == 0.0);
    CHECK(node_homophily(pair) == 0.0);

    const Graph same = path(5);
    CHECK(edge_homophily(same) == 1.0);
    CHECK(node_homophily(same) == 1.0);

    const Graph empty = build_graph(std::vector<Edge>{}, {0, 1});
    CHECK_THROWS_AS(edge_homophily(empty), DataError);
}

TEST_CASE("weighted homophily reduces to edge and node homophily") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Graph g = oracle::random_graph(40, 0.1, 3, 300 + s);
        const auto md = shift_operator(g, ShiftKind::MeanDegreeScaled);
        CHECK(std::abs(weighted_homophily(md.matrix, g.labels()) - edge_homophily(g)) < 1e-12);

        // Random-walk rows of isolated nodes are zero, so rescale by the
        // number of non-isolated nodes to compare with the node average.
        const auto rw = shift_operator(g, ShiftKind::RandomWalk, {.allow_isolated = true});
        NodeId active = 0;
        for (NodeId i = 0; i < g.num_nodes(); ++i) active += g.degree(i) > 0;
        const double scaled = weighted_homophily(rw.matrix, g.labels()) * g.num_nodes() / active;
        CHECK(std::abs(scaled - node_homophily(g)) < 1e-12);
    }
    // Without isolated nodes the identity is direct.
    const Graph t = triangle();
    CHECK(std::abs(weighted_homophily(shift_operator(t, ShiftKind::RandomWalk).matrix, t.labels()) -
                   node_homophily(t)) < 1e-12);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    CHECK(weighted_homophily(id, t.labels()) == 1.0);
    CHECK_THROWS_AS(weighted_homophily(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), t.labels()), DataError);
}
