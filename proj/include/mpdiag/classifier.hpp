#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mpdiag/shift_operator.hpp"

namespace mpdiag {

enum class Arch {
    Linear,  // H = X W + b (graph-agnostic baseline)
    Sgc,     // H = S^l X W + b
    Gcn2,    // H = S act(S X W1 + b1) W2 + b2
};

enum class Activation { Relu, Identity };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view name);

struct ModelSpec {
    Arch arch = Arch::Gcn2;
    int hidden = 16;
    int depth = 2;  // propagation steps for Sgc
    double lr = 0.2;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int epochs = 200;
    double dropout = 0.0;  // Gcn2 hidden layer only
    bool bias = true;
    bool standardize = true;  // center and rescale input columns on the training rows
    Activation activation = Activation::Relu;
    ShiftKind shift = ShiftKind::SymNormalizedSelfLoops;
    std::uint64_t seed = 0;

    /// Throws ConfigError on lr <= 0, epochs < 1, hidden < 1 (Gcn2), etc.
    void validate() const;
};

struct Layer {
    Eigen::MatrixXd weight;  // fan_in x fan_out
    Eigen::VectorXd bias;    // fan_out
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double val_loss = 0.0;
};

struct TrainedModel {
    Arch arch = Arch::Gcn2;
    Activation activation = Activation::Relu;
    ShiftKind shift = ShiftKind::SymNormalizedSelfLoops;
    int depth = 2;
    Eigen::VectorXd input_shift;     // per-column offset removed before scaling, empty = none
    Eigen::VectorXd input_scale;     // per-column input multiplier, empty = none
    std::vector<Layer> layers;       // best-validation checkpoint
    std::vector<Layer> final_layers; // weights after the last epoch
    int best_epoch = 0;
    std::vector<EpochRecord> history;

    int input_dim() const { return static_cast<int>(layers.front().weight.rows()); }
    int output_dim() const { return static_cast<int>(layers.back().weight.cols()); }
};

struct Split {
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;

    /// Throws DataError unless the sets are disjoint and inside [0, n).
    void validate(NodeId n) const;
};

/// Random split with the given train and validation fractions; the rest is
/// test.
Split random_split(NodeId n, double train_fraction, double val_fraction, std::uint64_t seed);

/// Full-batch gradient descent (with momentum) on softmax cross-entropy over
/// the training nodes, plus 0.5 * weight_decay * ||W||^2 on weight matrices.
/// Keeps the weights with the best validation accuracy (ties: earliest).
/// Throws NumericalError if the loss becomes non-finite.
TrainedModel train(const ShiftOperator& op, std::span<const Label> labels,
                   const Eigen::MatrixXd& x, const ModelSpec& spec, const Split& split);
TrainedModel train(const Graph& g, const Eigen::MatrixXd& x, const ModelSpec& spec,
                   const Split& split);

/// Raw features after the model's input standardization, (x - shift) * diag(scale).
Eigen::MatrixXd standardized_input(const TrainedModel& m, const Eigen::MatrixXd& raw);

/// Pre-softmax outputs (n x k) for the given layers.
Eigen::MatrixXd forward(const TrainedModel& m, const ShiftOperator& op, const Eigen::MatrixXd& x);
Eigen::MatrixXd forward_layers(const TrainedModel& m, std::span<const Layer> layers,
                               const ShiftOperator& op, const Eigen::MatrixXd& x);

struct Prediction {
    std::vector<Label> labels;
    Eigen::MatrixXd probabilities;  // rows sum to 1
};

Prediction predict(const TrainedModel& m, const ShiftOperator& op, const Eigen::MatrixXd& x);
Prediction predict(const TrainedModel& m, const Graph& g, const Eigen::MatrixXd& x);

/// Row-wise softmax, max-shifted.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Mean softmax cross-entropy on `rows` plus the weight-decay term, and its
/// gradient with respect to every layer. Dropout is not applied.
struct LossAndGradient {
    double loss = 0.0;
    std::vector<Layer> grad;
};
LossAndGradient loss_and_gradient(const TrainedModel& m, const ShiftOperator& op,
                                  const Eigen::MatrixXd& x, std::span<const Label> labels,
                                  std::span<const NodeId> rows, double weight_decay);

/// Fraction of `index` where pred == truth; all nodes if index is empty.
double accuracy(std::span<const Label> pred, std::span<const Label> truth,
                std::span<const NodeId> index = {});

/// C_uv = (1/n) #{i : pred_i = u, truth_i = v}.
Eigen::MatrixXd confusion_matrix(std::span<const Label> pred, std::span<const Label> truth, int k);

/// Model with freshly initialised weights (uniform +-sqrt(6/(fan_in+fan_out))).
TrainedModel init_model(const ModelSpec& spec, int input_dim, int num_classes);

}  // namespace mpdiag
