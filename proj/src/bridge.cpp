#include "mpdiag/bridge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "mpdiag/bottleneck.hpp"
#include "mpdiag/error.hpp"
#include "mpdiag/random.hpp"

namespace mpdiag {

SymmetricPermutation::SymmetricPermutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
    const int k = static_cast<int>(mapping_.size());
    for (int u = 0; u < k; ++u) {
        const int v = mapping_[u];
        if (v < 0 || v >= k) throw ConfigError("permutation entry out of range");
        if (mapping_[v] != u) throw ConfigError("permutation is not symmetric (not an involution)");
    }
}

SymmetricPermutation SymmetricPermutation::identity(int k) {
    std::vector<int> m(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) m[u] = u;
    return SymmetricPermutation(std::move(m));
}

SymmetricPermutation SymmetricPermutation::parse(std::string_view text, int k) {
    if (k < 1) throw ConfigError("permutation needs k >= 1");
    std::vector<int> m(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) m[u] = u;
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty() || s == "id" || s == "()") return SymmetricPermutation(std::move(m));

    std::size_t pos = 0;
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    while (pos < s.size()) {
        if (s[pos] == ',') {
            ++pos;
            continue;
        }
        if (s[pos] != '(') throw ConfigError("bad permutation '" + std::string(text) + "'");
        const auto close = s.find(')', pos);
        if (close == std::string::npos) throw ConfigError("unbalanced parenthesis in permutation");
        std::vector<int> cycle;
        std::stringstream in(s.substr(pos + 1, close - pos - 1));
        std::string item;
        while (std::getline(in, item, ',')) {
            try {
                cycle.push_back(std::stoi(item) - 1);
            } catch (const std::exception&) {
                throw ConfigError("bad element '" + item + "' in permutation");
            }
        }
        if (cycle.size() > 2) throw ConfigError("cycles longer than 2 are not involutions");
        for (int u : cycle) {
            if (u < 0 || u >= k) throw ConfigError("permutation element out of range 1.." + std::to_string(k));
            if (used[u]) throw ConfigError("element repeated in permutation");
            used[u] = 1;
        }
        if (cycle.size() == 2) {
            m[cycle[0]] = cycle[1];
            m[cycle[1]] = cycle[0];
        }
        pos = close + 1;
    }
    return SymmetricPermutation(std::move(m));
}

std::string SymmetricPermutation::cycle_notation() const {
    std::string out;
    for (int u = 0; u < k(); ++u)
        if (mapping_[u] > u) out += "(" + std::to_string(u + 1) + ", " + std::to_string(mapping_[u] + 1) + ")";
    return out.empty() ? "()" : out;
}

Eigen::MatrixXd SymmetricPermutation::matrix() const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k(), k());
    for (int u = 0; u < k(); ++u) p(u, mapping_[u]) = 1.0;
    return p;
}

int SymmetricPermutation::fixed_points() const {
    int c = 0;
    for (int u = 0; u < k(); ++u) c += mapping_[u] == u;
    return c;
}

std::uint64_t telephone_number(int k) {
    if (k < 0) throw ConfigError("k must be non-negative");
    std::uint64_t prev = 1, cur = 1;  // T(0), T(1)
    if (k == 0) return 1;
    for (int i = 2; i <= k; ++i) {
        const std::uint64_t next = cur + static_cast<std::uint64_t>(i - 1) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<SymmetricPermutation> enumerate_involutions(int k) {
    if (k < 1 || k > kMaxInvolutionClasses)
        throw ConfigError("involution enumeration supports 1 <= k <= " + std::to_string(kMaxInvolutionClasses));
    std::vector<SymmetricPermutation> out;
    std::vector<int> m(static_cast<std::size_t>(k), -1);
    // Depth-first over the smallest unassigned element: fix it or pair it
    // with a larger unassigned element. Produces lexicographic order.
    auto recurse = [&](auto& self, int u) -> void {
        while (u < k && m[u] != -1) ++u;
        if (u == k) {
            out.emplace_back(m);
            return;
        }
        m[u] = u;
        self(self, u + 1);
        m[u] = -1;
        for (int v = u + 1; v < k; ++v) {
            if (m[v] != -1) continue;
            m[u] = v;
            m[v] = u;
            self(self, u + 1);
            m[u] = m[v] = -1;
        }
    };
    recurse(recurse, 0);
    std::sort(out.begin(), out.end(),
              [](const SymmetricPermutation& a, const SymmetricPermutation& b) { return a.mapping() < b.mapping(); });
    return out;
}

SbmParams optimal_block_matrix(const Eigen::VectorXd& pi_hat, const SymmetricPermutation& perm,
                               double mean_degree, NodeId n) {
    const int k = static_cast<int>(pi_hat.size());
    if (perm.k() != k) throw ConfigError("permutation size does not match the number of classes");
    if (!(mean_degree > 0.0)) throw ConfigError("target mean degree must be positive");
    if (pi_hat.minCoeff() <= 0.0) throw ConfigError("class proportions must be positive");
    const Eigen::VectorXd inv = pi_hat.cwiseInverse();
    SbmParams p;
    p.n = n;
    p.pi = pi_hat / pi_hat.sum();
    p.b = (mean_degree / k) * inv.asDiagonal() * perm.matrix() * inv.asDiagonal();
    return p;
}

double optimum_value(const Eigen::MatrixXd& confusion, const Eigen::VectorXd& pi_hat) {
    const Eigen::VectorXd pi = pi_hat.size() == 0 ? Eigen::VectorXd(confusion.rowwise().sum()) : pi_hat;
    if (pi.size() != confusion.rows()) throw ConfigError("proportion vector does not match the confusion matrix");
    if (pi.minCoeff() <= 0.0) throw NumericalError("singular class-proportion matrix (an empty predicted class)");
    return (confusion.transpose() * pi.cwiseInverse().asDiagonal() * confusion).trace();
}

Eigen::VectorXd predicted_proportions(std::span<const Label> predicted, int k) {
    const auto n = static_cast<double>(predicted.size());
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(k);
    for (Label y : predicted) pi[y] += 1.0;
    pi /= n;
    for (int u = 0; u < k; ++u) pi[u] = std::max(pi[u], 1.0 / n);
    return pi / pi.sum();
}

namespace {

BridgeRecord evaluate(int iteration, const Graph& g, const std::vector<Label>& pred, const Split& split,
                      const BridgeOptions& opt) {
    BridgeRecord r;
    r.iteration = iteration;
    const auto& y = g.labels();
    r.train_accuracy = accuracy(pred, y, split.train);
    r.val_accuracy = accuracy(pred, y, split.val.empty() ? split.train : split.val);
    r.test_accuracy = accuracy(pred, y, split.test.empty() ? split.train : split.test);
    const ShiftOperator op = shift_operator(g, opt.homophily_shift, {.add_self_loops = false, .allow_isolated = true});
    r.homophily = order_metrics(op, y, 2 * opt.order).h;
    const int k = g.num_classes();
    r.optimum = optimum_value(confusion_matrix(pred, y, k), predicted_proportions(pred, k));
    r.mean_degree = g.num_nodes() == 0 ? 0.0 : 2.0 * static_cast<double>(g.num_edges()) / g.num_nodes();
    r.edge_homophily = g.num_edges() > 0 ? edge_homophily(g) : 0.0;
    return r;
}

Graph resample(const Graph& g, const std::vector<Label>& pred, const BridgeOptions& opt, std::uint64_t seed) {
    const int k = g.num_classes();
    SbmParams p = optimal_block_matrix(predicted_proportions(pred, k), opt.perm, opt.mean_degree, g.num_nodes());
    // A floored (empty) class can push entries above n; such blocks have no
    // member nodes, so capping them only keeps the ensemble valid.
    p.b = p.b.cwiseMin(static_cast<double>(p.n));
    const Graph blocks = sample_sbm(p, pred, seed);
    return build_graph(blocks.edge_list(), g.labels(), std::nullopt, k);
}

}  // namespace

BridgeState bridge(const Graph& g0, const Eigen::MatrixXd& x, const ModelSpec& spec, const Split& split,
                   const BridgeOptions& options) {
    spec.validate();
    if (options.iterations < 0) throw ConfigError("BRIDGE iterations must be >= 0");
    if (options.perm.k() != g0.num_classes())
        throw ConfigError("permutation acts on " + std::to_string(options.perm.k()) + " classes but the graph has " +
                          std::to_string(g0.num_classes()));
    if (!(options.mean_degree > 0.0)) throw ConfigError("target mean degree must be positive");
    if (options.order < 1) throw ConfigError("tracked order must be >= 1");
    split.validate(g0.num_nodes());

    auto predict_on = [&](const TrainedModel& m, const Graph& g) {
        std::vector<Label> pred = predict(m, g, x).labels;
        if (options.use_train_labels)
            for (NodeId i : split.train) pred[i] = g.labels()[i];
        return pred;
    };

    BridgeState state;
    state.perm = options.perm;
    state.mean_degree = options.mean_degree;
    state.graph = g0;

    ModelSpec s = spec;
    s.seed = derive_seed(spec.seed, 0);
    TrainedModel model = train(g0, x, s, split);
    state.predicted = predict(model, g0, x).labels;
    state.history.push_back(evaluate(0, g0, state.predicted, split, options));
    std::vector<Label> driving = predict_on(model, g0);

    double best_h = state.history.back().homophily;
    int stale = 0;
    for (int m = 1; m <= options.iterations; ++m) {
        Graph next = resample(state.graph, driving, options, derive_seed(options.seed, static_cast<std::uint64_t>(m)));
        if (m == 1 || options.retrain_every_iteration) {
            s.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(m));
            model = train(next, x, s, split);
        }
        state.graph = std::move(next);
        state.iteration = m;
        state.predicted = predict(model, state.graph, x).labels;
        driving = predict_on(model, state.graph);
        state.history.push_back(evaluate(m, state.graph, state.predicted, split, options));

        if (options.plateau_stop) {
            const double h = state.history.back().homophily;
            if (h > best_h) {
                best_h = h;
                stale = 0;
            } else if (++stale >= 3) {
                break;
            }
        }
    }
    state.best_iteration = 0;
    for (std::size_t i = 1; i < state.history.size(); ++i)
        if (state.history[i].val_accuracy > state.history[state.best_iteration].val_accuracy)
            state.best_iteration = static_cast<int>(i);
    return state;
}

std::string bridge_history_csv(const BridgeState& state) {
    std::ostringstream os;
    os.precision(10);
    os << "iteration,train_accuracy,val_accuracy,test_accuracy,homophily,optimum,mean_degree,edge_homophily\n";
    for (const auto& r : state.history)
        os << r.iteration << ',' << r.train_accuracy << ',' << r.val_accuracy << ',' << r.test_accuracy << ','
           << r.homophily << ',' << r.optimum << ',' << r.mean_degree << ',' << r.edge_homophily << '\n';
    return os.str();
}

}  // namespace mpdiag
