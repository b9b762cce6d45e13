#include "mpdiag/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mpdiag/error.hpp"
#include "mpdiag/random.hpp"

namespace mpdiag {

std::string_view to_string(Arch arch) {
    switch (arch) {
        case Arch::Linear: return "linear";
        case Arch::Sgc: return "sgc";
        case Arch::Gcn2: return "gcn2";
    }
    return "unknown";
}

Arch parse_arch(std::string_view name) {
    for (auto a : {Arch::Linear, Arch::Sgc, Arch::Gcn2})
        if (to_string(a) == name) return a;
    throw ConfigError("unknown architecture '" + std::string(name) +
                      "' (expected linear, sgc or gcn2)");
}

void ModelSpec::validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (arch == Arch::Gcn2 && hidden < 1) throw ConfigError("hidden width must be >= 1");
    if (arch == Arch::Sgc && depth < 0) throw ConfigError("SGC depth must be >= 0");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

void Split::validate(NodeId n) const {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto* set : {&train, &val, &test})
        for (NodeId i : *set) {
            if (i < 0 || i >= n) throw DataError("split index " + std::to_string(i) + " out of range");
            if (seen[i]) throw DataError("split sets overlap at node " + std::to_string(i));
            seen[i] = 1;
        }
}

Split random_split(NodeId n, double train_fraction, double val_fraction, std::uint64_t seed) {
    if (train_fraction < 0 || val_fraction < 0 || train_fraction + val_fraction > 1.0)
        throw ConfigError("split fractions must be non-negative and sum to at most 1");
    std::vector<NodeId> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * n));
    Split s;
    s.train.assign(perm.begin(), perm.begin() + n_train);
    s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    s.test.assign(perm.begin() + n_train + n_val, perm.end());
    for (auto* set : {&s.train, &s.val, &s.test}) std::sort(set->begin(), set->end());
    return s;
}

TrainedModel init_model(const ModelSpec& spec, int input_dim, int num_classes) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, 0x1417));
    auto make = [&](int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        Layer l;
        l.weight.resize(fan_in, fan_out);
        for (int a = 0; a < fan_in; ++a)
            for (int b = 0; b < fan_out; ++b) l.weight(a, b) = u(rng);
        l.bias = Eigen::VectorXd::Zero(fan_out);
        return l;
    };
    TrainedModel m;
    m.arch = spec.arch;
    m.activation = spec.activation;
    m.shift = spec.shift;
    m.depth = spec.depth;
    if (spec.arch == Arch::Gcn2) {
        m.layers = {make(input_dim, spec.hidden), make(spec.hidden, num_classes)};
    } else {
        m.layers = {make(input_dim, num_classes)};
    }
    m.final_layers = m.layers;
    return m;
}

Eigen::MatrixXd standardized_input(const TrainedModel& m, const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd x = raw;
    if (m.input_shift.size() != 0) x.rowwise() -= m.input_shift.transpose();
    if (m.input_scale.size() != 0) x = x * m.input_scale.asDiagonal();
    return x;
}

namespace {

// Input after the fixed (weight-free) propagation that precedes layer 0.
Eigen::MatrixXd propagated_input(const TrainedModel& m, const ShiftOperator& op,
                                 const Eigen::MatrixXd& raw) {
    const Eigen::MatrixXd x = standardized_input(m, raw);
    switch (m.arch) {
        case Arch::Linear: return x;
        case Arch::Sgc: return apply_power(op, x, m.depth);
        case Arch::Gcn2: return apply_power(op, x, 1);
    }
    return x;
}

// Training-row mean and 1/sd per column (scale 1 for constant columns).
void fit_standardization(TrainedModel& m, const Eigen::MatrixXd& x, std::span<const NodeId> rows) {
    m.input_shift = Eigen::VectorXd::Zero(x.cols());
    m.input_scale = Eigen::VectorXd::Ones(x.cols());
    if (rows.empty()) return;
    for (Eigen::Index q = 0; q < x.cols(); ++q) {
        double mean = 0.0, sq = 0.0;
        for (NodeId i : rows) mean += x(i, q);
        mean /= static_cast<double>(rows.size());
        m.input_shift[q] = mean;
        if (rows.size() < 2) continue;
        for (NodeId i : rows) sq += (x(i, q) - mean) * (x(i, q) - mean);
        const double sd = std::sqrt(sq / static_cast<double>(rows.size() - 1));
        if (sd > 0.0 && std::isfinite(sd)) m.input_scale[q] = 1.0 / sd;
    }
}

double activate(Activation a, double z) { return a == Activation::Relu ? std::max(z, 0.0) : z; }

// Derivative convention: ReLU'(0) = 1.
double activate_grad(Activation a, double z) {
    return a == Activation::Relu ? (z >= 0.0 ? 1.0 : 0.0) : 1.0;
}

struct ForwardCache {
    Eigen::MatrixXd input;   // propagated input
    Eigen::MatrixXd z1;      // Gcn2 pre-activation
    Eigen::MatrixXd h1;      // Gcn2 hidden after activation and dropout
    Eigen::MatrixXd drop;    // Gcn2 dropout scale (empty when off)
    Eigen::MatrixXd logits;
};

void run_forward(const TrainedModel& m, std::span<const Layer> layers, const ShiftOperator& op,
                 ForwardCache& c) {
    if (m.arch != Arch::Gcn2) {
        c.logits = (c.input * layers[0].weight).rowwise() + layers[0].bias.transpose();
        return;
    }
    c.z1 = (c.input * layers[0].weight).rowwise() + layers[0].bias.transpose();
    c.h1 = c.z1.unaryExpr([&](double z) { return activate(m.activation, z); });
    if (c.drop.size() > 0) c.h1 = c.h1.cwiseProduct(c.drop);
    c.logits = (op.matrix * (c.h1 * layers[1].weight)).rowwise() + layers[1].bias.transpose();
}

// d(loss)/d(layers) given d(loss)/d(logits).
std::vector<Layer> run_backward(const TrainedModel& m, std::span<const Layer> layers,
                                const ShiftOperator& op, const ForwardCache& c,
                                const Eigen::MatrixXd& dlogits) {
    std::vector<Layer> g(layers.size());
    if (m.arch != Arch::Gcn2) {
        g[0].weight = c.input.transpose() * dlogits;
        g[0].bias = dlogits.colwise().sum().transpose();
        return g;
    }
    const Eigen::MatrixXd back = op.matrix.transpose() * dlogits;  // d/d(h1 W2)
    g[1].weight = c.h1.transpose() * back;
    g[1].bias = dlogits.colwise().sum().transpose();
    Eigen::MatrixXd dh1 = back * layers[1].weight.transpose();
    if (c.drop.size() > 0) dh1 = dh1.cwiseProduct(c.drop);
    const Eigen::MatrixXd dz1 =
        dh1.cwiseProduct(c.z1.unaryExpr([&](double z) { return activate_grad(m.activation, z); }));
    g[0].weight = c.input.transpose() * dz1;
    g[0].bias = dz1.colwise().sum().transpose();
    return g;
}

// Cross-entropy over rows and its logit gradient (already divided by |rows|).
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const Label> labels,
                     std::span<const NodeId> rows, Eigen::MatrixXd& dlogits) {
    const Eigen::MatrixXd p = softmax_rows(logits);
    dlogits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(rows.size());
    for (NodeId i : rows) {
        loss -= std::log(std::max(p(i, labels[i]), 1e-300));
        dlogits.row(i) = p.row(i) * scale;
        dlogits(i, labels[i]) -= scale;
    }
    return loss * scale;
}

double decay_term(std::span<const Layer> layers, double weight_decay) {
    double s = 0.0;
    for (const auto& l : layers) s += l.weight.squaredNorm();
    return 0.5 * weight_decay * s;
}

std::vector<Label> argmax_rows(const Eigen::MatrixXd& m) {
    std::vector<Label> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index best;
        m.row(i).maxCoeff(&best);
        out[i] = static_cast<Label>(best);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp();
    p = p.array().colwise() / p.rowwise().sum().array();
    return p;
}

Eigen::MatrixXd forward_layers(const TrainedModel& m, std::span<const Layer> layers,
                               const ShiftOperator& op, const Eigen::MatrixXd& x) {
    if (x.cols() != m.input_dim())
        throw DataError("model expects " + std::to_string(m.input_dim()) + " input features, got " +
                        std::to_string(x.cols()));
    if (x.rows() != op.size()) throw DataError("feature rows do not match the operator size");
    ForwardCache c;
    c.input = propagated_input(m, op, x);
    run_forward(m, layers, op, c);
    return c.logits;
}

Eigen::MatrixXd forward(const TrainedModel& m, const ShiftOperator& op, const Eigen::MatrixXd& x) {
    return forward_layers(m, m.layers, op, x);
}

LossAndGradient loss_and_gradient(const TrainedModel& m, const ShiftOperator& op,
                                  const Eigen::MatrixXd& x, std::span<const Label> labels,
                                  std::span<const NodeId> rows, double weight_decay) {
    ForwardCache c;
    c.input = propagated_input(m, op, x);
    run_forward(m, m.layers, op, c);
    Eigen::MatrixXd dlogits;
    LossAndGradient out;
    out.loss = cross_entropy(c.logits, labels, rows, dlogits) + decay_term(m.layers, weight_decay);
    out.grad = run_backward(m, m.layers, op, c, dlogits);
    for (std::size_t l = 0; l < out.grad.size(); ++l)
        out.grad[l].weight += weight_decay * m.layers[l].weight;
    return out;
}

TrainedModel train(const ShiftOperator& op, std::span<const Label> labels,
                   const Eigen::MatrixXd& x, const ModelSpec& spec, const Split& split) {
    spec.validate();
    const auto n = static_cast<NodeId>(labels.size());
    if (x.rows() != n || op.size() != n) throw DataError("features, operator and labels disagree on n");
    split.validate(n);
    if (split.train.empty()) throw DataError("empty training set");

    int k = 0;
    for (Label y : labels) k = std::max(k, y + 1);
    TrainedModel m = init_model(spec, static_cast<int>(x.cols()), k);
    if (spec.standardize) fit_standardization(m, x, split.train);

    ForwardCache c;
    c.input = propagated_input(m, op, x);
    std::vector<Layer> velocity = m.layers;
    for (auto& v : velocity) {
        v.weight.setZero();
        v.bias.setZero();
    }

    Rng drop_rng(derive_seed(spec.seed, 0xd0));
    std::bernoulli_distribution keep(1.0 - spec.dropout);
    const bool use_dropout = spec.arch == Arch::Gcn2 && spec.dropout > 0.0;

    double best_val = -1.0, best_loss = std::numeric_limits<double>::infinity();
    const auto& eval_set = split.val.empty() ? split.train : split.val;
    // Validation accuracy first, validation loss breaks ties.
    auto better = [&](double acc, double vloss) { return acc > best_val || (acc == best_val && vloss < best_loss); };
    std::vector<Layer> current = m.layers;

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        if (use_dropout) {
            c.drop.resize(n, spec.hidden);
            const double scale = 1.0 / (1.0 - spec.dropout);
            for (Eigen::Index i = 0; i < c.drop.size(); ++i)
                c.drop.data()[i] = keep(drop_rng) ? scale : 0.0;
        }
        run_forward(m, current, op, c);
        Eigen::MatrixXd dlogits;
        const double loss =
            cross_entropy(c.logits, labels, split.train, dlogits) + decay_term(current, spec.weight_decay);
        if (!std::isfinite(loss))
            throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                                 " (loss is not finite) with learning rate " + std::to_string(spec.lr));

        // Evaluate the pre-update weights without dropout.
        ForwardCache eval;
        eval.input = c.input;
        run_forward(m, current, op, eval);
        const auto pred = argmax_rows(eval.logits);
        Eigen::MatrixXd unused;
        EpochRecord rec{epoch, loss, accuracy(pred, labels, split.train), accuracy(pred, labels, eval_set),
                        cross_entropy(eval.logits, labels, eval_set, unused)};
        m.history.push_back(rec);
        if (better(rec.val_accuracy, rec.val_loss)) {
            best_val = rec.val_accuracy;
            best_loss = rec.val_loss;
            m.best_epoch = epoch;
            m.layers = current;
        }

        auto grad = run_backward(m, current, op, c, dlogits);
        for (std::size_t l = 0; l < current.size(); ++l) {
            grad[l].weight += spec.weight_decay * current[l].weight;
            if (!spec.bias) grad[l].bias.setZero();
            velocity[l].weight = spec.momentum * velocity[l].weight - spec.lr * grad[l].weight;
            velocity[l].bias = spec.momentum * velocity[l].bias - spec.lr * grad[l].bias;
            current[l].weight += velocity[l].weight;
            current[l].bias += velocity[l].bias;
        }
    }
    c.drop.resize(0, 0);

    // Final weights compete for the checkpoint too.
    ForwardCache eval;
    eval.input = c.input;
    run_forward(m, current, op, eval);
    const auto pred = argmax_rows(eval.logits);
    if (!eval.logits.allFinite())
        throw NumericalError("training diverged (non-finite outputs) with learning rate " +
                             std::to_string(spec.lr));
    Eigen::MatrixXd unused;
    if (better(accuracy(pred, labels, eval_set), cross_entropy(eval.logits, labels, eval_set, unused))) {
        m.best_epoch = spec.epochs;
        m.layers = current;
    }
    m.final_layers = current;
    return m;
}

TrainedModel train(const Graph& g, const Eigen::MatrixXd& x, const ModelSpec& spec,
                   const Split& split) {
    const ShiftOperator op = shift_operator(g, spec.shift, {.add_self_loops = true, .allow_isolated = true});
    return train(op, g.labels(), x, spec, split);
}

Prediction predict(const TrainedModel& m, const ShiftOperator& op, const Eigen::MatrixXd& x) {
    Prediction p;
    const Eigen::MatrixXd logits = forward(m, op, x);
    p.probabilities = softmax_rows(logits);
    p.labels = argmax_rows(logits);
    return p;
}

Prediction predict(const TrainedModel& m, const Graph& g, const Eigen::MatrixXd& x) {
    const ShiftOperator op = shift_operator(g, m.shift, {.add_self_loops = true, .allow_isolated = true});
    return predict(m, op, x);
}

double accuracy(std::span<const Label> pred, std::span<const Label> truth,
                std::span<const NodeId> index) {
    if (pred.size() != truth.size()) throw DataError("prediction and truth lengths differ");
    std::size_t hits = 0, total = 0;
    if (index.empty()) {
        for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
        total = pred.size();
    } else {
        for (NodeId i : index) hits += pred[i] == truth[i];
        total = index.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

Eigen::MatrixXd confusion_matrix(std::span<const Label> pred, std::span<const Label> truth, int k) {
    if (pred.size() != truth.size()) throw DataError("prediction and truth lengths differ");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= k || truth[i] < 0 || truth[i] >= k)
            throw DataError("label out of range in confusion matrix at node " + std::to_string(i));
        c(pred[i], truth[i]) += 1.0;
    }
    return c / static_cast<double>(pred.size());
}

}  // namespace mpdiag
