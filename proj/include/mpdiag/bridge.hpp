#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mpdiag/classifier.hpp"
#include "mpdiag/ensemble.hpp"

namespace mpdiag {

/// An involution on {0, ..., k-1}: mapping[mapping[u]] == u.
class SymmetricPermutation {
public:
    SymmetricPermutation() = default;
    /// Throws ConfigError unless `mapping` is an involution.
    explicit SymmetricPermutation(std::vector<int> mapping);

    static SymmetricPermutation identity(int k);
    /// Parses 1-based cycle notation such as "(1, 2)(3, 4)", "(1,2),(3,4)",
    /// "()" or "id". Elements not mentioned are fixed points.
    static SymmetricPermutation parse(std::string_view text, int k);

    int k() const { return static_cast<int>(mapping_.size()); }
    int operator[](int u) const { return mapping_[u]; }
    const std::vector<int>& mapping() const { return mapping_; }
    /// 1-based transpositions, e.g. "(1, 2)"; "()" for the identity.
    std::string cycle_notation() const;
    Eigen::MatrixXd matrix() const;
    /// Number of fixed points (single-class clusters).
    int fixed_points() const;

    bool operator==(const SymmetricPermutation&) const = default;

private:
    std::vector<int> mapping_;
};

inline constexpr int kMaxInvolutionClasses = 12;

/// All involutions of [k] in lexicographic order of their mappings.
/// Throws ConfigError for k < 1 or k > 12.
std::vector<SymmetricPermutation> enumerate_involutions(int k);
/// T(k) = T(k-1) + (k-1) T(k-2).
std::uint64_t telephone_number(int k);

/// B = (<d>/k) Pi^-1 P Pi^-1, so that B_hat = P and pi^T B pi = <d>.
SbmParams optimal_block_matrix(const Eigen::VectorXd& pi_hat, const SymmetricPermutation& perm,
                               double mean_degree, NodeId n);

/// tr(C^T Pi^-1 C), the achievable expected higher-order homophily for a
/// confusion matrix C (rows: predicted, columns: true) with Pi = diag of the
/// predicted proportions (row sums of C when pi_hat is empty).
double optimum_value(const Eigen::MatrixXd& confusion, const Eigen::VectorXd& pi_hat = {});

/// Predicted class proportions, with empty classes floored at 1/n and the
/// vector renormalised.
Eigen::VectorXd predicted_proportions(std::span<const Label> predicted, int k);

struct BridgeOptions {
    SymmetricPermutation perm;
    double mean_degree = 10.0;
    int iterations = 10;  // M
    /// Retrain on every sampled graph instead of only on G^(1).
    bool retrain_every_iteration = false;
    /// Stop when h^(2l) has not improved for three iterations.
    bool plateau_stop = false;
    /// l in h^(2l) tracked per iteration.
    int order = 1;
    /// Operator used for the tracked homophily.
    ShiftKind homophily_shift = ShiftKind::SymNormalizedRaw;
    /// Replace predictions on training nodes with their known labels before
    /// resampling.
    bool use_train_labels = false;
    std::uint64_t seed = 0;
};

struct BridgeRecord {
    int iteration = 0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double homophily = 0.0;      // h^(2l) of the graph at this iteration
    double optimum = 0.0;        // tr(C^T Pi^-1 C) of the predictions
    double mean_degree = 0.0;    // realised mean degree
    double edge_homophily = 0.0;
};

struct BridgeState {
    int iteration = 0;
    Graph graph;                  // G^(m) of the last iteration
    std::vector<Label> predicted; // y_hat^(m)
    SymmetricPermutation perm;
    double mean_degree = 0.0;
    std::vector<BridgeRecord> history;  // one entry per iteration 0..m
    int best_iteration = 0;             // highest validation accuracy (earliest tie)

    const BridgeRecord& best() const { return history[best_iteration]; }
};

/// Runs the rewiring loop on fixed node features x. Iteration 0 trains on
/// g0; iteration m >= 1 samples G^(m) from the optimal SBM on y_hat^(m-1),
/// predicts with the model trained on G^(1) (or retrained each time) and
/// records accuracies and homophily.
BridgeState bridge(const Graph& g0, const Eigen::MatrixXd& x, const ModelSpec& spec, const Split& split,
                   const BridgeOptions& options);

/// Writes the history as CSV with header
/// iteration,train_accuracy,val_accuracy,test_accuracy,homophily,optimum,mean_degree,edge_homophily.
std::string bridge_history_csv(const BridgeState& state);

}  // namespace mpdiag
