#include "mpdiag/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mpdiag/error.hpp"

namespace mpdiag {

std::string_view to_string(SensitivityMode mode) {
    switch (mode) {
        case SensitivityMode::ExactSgc: return "exact-sgc";
        case SensitivityMode::ExactJacobian: return "exact-jacobian";
        case SensitivityMode::IsotropicBound: return "isotropic-bound";
        case SensitivityMode::AnisotropicBound: return "anisotropic-bound";
    }
    return "unknown";
}

void LipschitzParams::validate() const {
    for (double v : {alpha1, alpha2, beta, beta1, beta2})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError("Lipschitz constants must be finite and non-negative");
}

SensitivityTriple sgc_sensitivities(const ShiftOperator& op, std::span<const Label> labels, int order,
                                    double weight) {
    if (order < 0) throw ConfigError("order must be non-negative");
    const BottleneckScores b = bottleneck_scores(op, labels, order, order);
    SensitivityTriple t;
    t.mode = SensitivityMode::ExactSgc;
    t.order = order;
    t.signal = weight * b.b_class;
    t.noise = weight * b.b_self;
    t.global = weight * b.b_total;
    return t;
}

namespace {

SparseMatrix identity(Eigen::Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

// The Jacobian of every supported model has the form
//   dH_ip / dX_j. = sum_m P_im Q_mj V_m.
// P, Q are fixed propagation matrices and V (n x d) holds the per-node weight
// products for output p.
struct JacobianForm {
    SparseMatrix p;
    SparseMatrix q;
    Eigen::MatrixXd v;
};

JacobianForm jacobian_form(const TrainedModel& m, const ShiftOperator& op, const Eigen::MatrixXd& x0,
                           int out) {
    const Eigen::Index n = op.size();
    if (out < 0 || out >= m.output_dim())
        throw ConfigError("output dimension " + std::to_string(out) + " out of range");
    if (x0.size() != 0 && (x0.rows() != n || x0.cols() != m.input_dim()))
        throw DataError("evaluation point has the wrong shape");

    JacobianForm f;
    const Eigen::VectorXd w_out = m.layers.back().weight.col(out);
    switch (m.arch) {
        case Arch::Linear:
            f.p = identity(n);
            f.q = identity(n);
            f.v = w_out.transpose().replicate(n, 1);
            break;
        case Arch::Sgc:
            f.p = sparse_power(op.matrix, m.depth);
            f.q = identity(n);
            f.v = w_out.transpose().replicate(n, 1);
            break;
        case Arch::Gcn2: {
            const Layer& l1 = m.layers[0];
            Eigen::MatrixXd z1;
            if (x0.size() == 0 && m.input_shift.size() == 0) {
                z1 = l1.bias.transpose().replicate(n, 1);
            } else {
                const Eigen::MatrixXd raw = x0.size() == 0 ? Eigen::MatrixXd::Zero(n, m.input_dim()) : x0;
                z1 = ((op.matrix * standardized_input(m, raw)) * l1.weight).rowwise() + l1.bias.transpose();
            }
            f.p = op.matrix;
            f.q = op.matrix;
            f.v.resize(n, m.input_dim());
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd gate(z1.cols());
                for (Eigen::Index h = 0; h < z1.cols(); ++h) {
                    const bool on = m.activation == Activation::Identity || z1(i, h) >= 0.0;
                    gate[h] = on ? w_out[h] : 0.0;
                }
                f.v.row(i) = (l1.weight * gate).transpose();
            }
            break;
        }
    }
    if (m.input_scale.size() != 0) f.v = f.v * m.input_scale.asDiagonal();
    return f;
}

// Dense accumulator for one Jacobian row block with a list of touched rows.
class RowAccumulator {
public:
    RowAccumulator(Eigen::Index n, Eigen::Index d) : values_(Eigen::MatrixXd::Zero(n, d)), mark_(n, 0) {}

    void fill(const JacobianForm& f, Eigen::Index i) {
        for (Eigen::Index j : touched_) {
            values_.row(j).setZero();
            mark_[j] = 0;
        }
        touched_.clear();
        for (SparseMatrix::InnerIterator pm(f.p, i); pm; ++pm) {
            const Eigen::Index mid = pm.col();
            for (SparseMatrix::InnerIterator qm(f.q, mid); qm; ++qm) {
                const Eigen::Index j = qm.col();
                if (!mark_[j]) {
                    mark_[j] = 1;
                    touched_.push_back(j);
                }
                values_.row(j) += (pm.value() * qm.value()) * f.v.row(mid);
            }
        }
        std::sort(touched_.begin(), touched_.end());
    }

    const std::vector<Eigen::Index>& touched() const { return touched_; }
    const Eigen::MatrixXd& values() const { return values_; }

private:
    Eigen::MatrixXd values_;
    std::vector<char> mark_;
    std::vector<Eigen::Index> touched_;
};

int infer_classes(std::span<const Label> labels) {
    Label k = 0;
    for (Label y : labels) k = std::max(k, static_cast<Label>(y + 1));
    return k;
}

}  // namespace

Eigen::MatrixXd model_jacobian(const TrainedModel& m, const ShiftOperator& op,
                               const Eigen::MatrixXd& x0, NodeId i, int p) {
    if (i < 0 || i >= op.size()) throw DataError("node index out of range");
    const JacobianForm f = jacobian_form(m, op, x0, p);
    RowAccumulator acc(op.size(), m.input_dim());
    acc.fill(f, i);
    return acc.values();
}

SensitivityTriple gcn_jacobian_sensitivities(const TrainedModel& m, const ShiftOperator& op,
                                             std::span<const Label> labels,
                                             const Eigen::MatrixXd& x0,
                                             const JacobianOptions& options) {
    const Eigen::Index n = op.size();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw DataError("label count does not match the operator size");
    const int d = m.input_dim();
    if (!options.summed_diagonal && (options.q < 0 || options.q >= d || options.r < 0 || options.r >= d))
        throw ConfigError("input dimension pair out of range");

    const JacobianForm f = jacobian_form(m, op, x0, options.output_dim);
    const int k = infer_classes(labels);

    SensitivityTriple t;
    t.mode = SensitivityMode::ExactJacobian;
    t.order = m.arch == Arch::Gcn2 ? 2 : (m.arch == Arch::Sgc ? m.depth : 0);
    t.signal.resize(n);
    t.noise.resize(n);
    t.global.resize(n);
    if (options.full) {
        t.signal_qr.resize(n, d * d);
        t.noise_qr.resize(n, d * d);
        t.global_qr.resize(n, d * d);
    }

    RowAccumulator acc(n, d);
    Eigen::MatrixXd per_class(k, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        acc.fill(f, i);
        per_class.setZero();
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);  // sum_j J_j J_j^T
        for (Eigen::Index j : acc.touched()) {
            const auto row = acc.values().row(j);
            per_class.row(labels[j]) += row;
            gram.noalias() += row.transpose() * row;
        }
        const Eigen::RowVectorXd total = per_class.colwise().sum();
        const Eigen::MatrixXd class_gram = per_class.transpose() * per_class;
        const Eigen::MatrixXd total_gram = total.transpose() * total;

        if (options.summed_diagonal) {
            t.signal[i] = class_gram.trace();
            t.noise[i] = gram.trace();
            t.global[i] = total_gram.trace();
        } else {
            t.signal[i] = class_gram(options.q, options.r);
            t.noise[i] = gram(options.q, options.r);
            t.global[i] = total_gram(options.q, options.r);
        }
        if (options.full) {
            for (int q = 0; q < d; ++q)
                for (int r = 0; r < d; ++r) {
                    t.signal_qr(i, q * d + r) = class_gram(q, r);
                    t.noise_qr(i, q * d + r) = gram(q, r);
                    t.global_qr(i, q * d + r) = total_gram(q, r);
                }
        }
    }
    return t;
}

SensitivityTriple gcn_jacobian_sensitivities(const TrainedModel& m, const Graph& g,
                                             const Eigen::MatrixXd& x0,
                                             const JacobianOptions& options) {
    const ShiftOperator op = shift_operator(g, m.shift, {.add_self_loops = true, .allow_isolated = true});
    return gcn_jacobian_sensitivities(m, op, g.labels(), x0, options);
}

ShiftOperator anisotropic_operator(const ShiftOperator& op) {
    const Eigen::VectorXd row_sums = op.matrix * Eigen::VectorXd::Ones(op.size());
    SparseMatrix diag(op.size(), op.size());
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index i = 0; i < op.size(); ++i)
        if (row_sums[i] != 0.0) entries.emplace_back(i, i, row_sums[i]);
    diag.setFromTriplets(entries.begin(), entries.end());
    ShiftOperator out = custom_operator(SparseMatrix(op.matrix + diag));
    out.kind = op.kind;
    out.symmetric = op.symmetric;
    return out;
}

namespace {

double binomial(int n, int r) {
    double c = 1.0;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

}  // namespace

SensitivityTriple sensitivity_bounds(const ShiftOperator& op, std::span<const Label> labels,
                                     int order, const LipschitzParams& lip, bool isotropic) {
    lip.validate();
    if (order < 0) throw ConfigError("order must be non-negative");
    const ShiftOperator base = isotropic ? op : anisotropic_operator(op);
    const Eigen::Index n = op.size();
    const double ab = lip.alpha2 * lip.beta;

    SensitivityTriple t;
    t.mode = isotropic ? SensitivityMode::IsotropicBound : SensitivityMode::AnisotropicBound;
    t.order = order;
    t.signal = Eigen::VectorXd::Zero(n);
    t.noise = Eigen::VectorXd::Zero(n);
    t.global = Eigen::VectorXd::Zero(n);
    for (int s = 0; s <= order; ++s)
        for (int u = 0; u <= order; ++u) {
            const double w = binomial(order, s) * binomial(order, u) *
                             std::pow(lip.alpha1, 2 * order - s - u) * std::pow(ab, s + u);
            if (w == 0.0) continue;
            const BottleneckScores b = bottleneck_scores(base, labels, s, u);
            t.signal += w * b.b_class;
            t.noise += w * b.b_self;
            t.global += w * b.b_total;
        }
    return t;
}

AveragedBounds averaged_bounds(const ShiftOperator& op, std::span<const Label> labels, int order,
                               const LipschitzParams& lip, bool isotropic, bool general_form) {
    lip.validate();
    if (order < 0) throw ConfigError("order must be non-negative");
    if (!op.symmetric && !general_form)
        throw ConfigError(
            "averaged bounds need a symmetric operator; enable the general (S^s)^T S^t form");
    const ShiftOperator base = isotropic ? op : anisotropic_operator(op);
    const double ab = lip.alpha2 * lip.beta;

    AveragedBounds out;
    if (base.symmetric && !general_form) {
        for (int u = 0; u <= 2 * order; ++u) {
            const double w = binomial(2 * order, u) * std::pow(lip.alpha1, 2 * order - u) * std::pow(ab, u);
            if (w == 0.0) continue;
            const OrderMetrics m = order_metrics(base, labels, u);
            out.signal += w * m.h;
            out.noise += w * m.t;
            out.global += w * m.c;
        }
        return out;
    }
    for (int s = 0; s <= order; ++s)
        for (int u = 0; u <= order; ++u) {
            const double w = binomial(order, s) * binomial(order, u) *
                             std::pow(lip.alpha1, 2 * order - s - u) * std::pow(ab, s + u);
            if (w == 0.0) continue;
            const OrderMetrics m = order_metrics(base, labels, s, u);
            out.signal += w * m.h;
            out.noise += w * m.t;
            out.global += w * m.c;
        }
    return out;
}

namespace {

SparseMatrix k_matrix(const ShiftOperator& op, const LipschitzParams& lip) {
    lip.validate();
    const Eigen::Index n = op.size();
    const Eigen::VectorXd row_sums = op.matrix * Eigen::VectorXd::Ones(n);
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (SparseMatrix::InnerIterator it(op.matrix, i); it; ++it)
            entries.emplace_back(i, it.col(), lip.alpha2 * lip.beta2 * it.value());
        entries.emplace_back(i, i, lip.alpha2 * lip.beta1 * row_sums[i] + lip.alpha1);
    }
    SparseMatrix k(n, n);
    k.setFromTriplets(entries.begin(), entries.end());
    k.prune(0.0);
    return k;
}

}  // namespace

Eigen::MatrixXd jacobian_norm_bound(const ShiftOperator& op, int order, const LipschitzParams& lip,
                                    Eigen::Index dense_limit) {
    if (order < 0) throw ConfigError("order must be non-negative");
    if (op.size() > dense_limit)
        throw ConfigError("dense Jacobian bound refused for n = " + std::to_string(op.size()) +
                          " (limit " + std::to_string(dense_limit) + "); query rows instead");
    const ShiftOperator k = custom_operator(k_matrix(op, lip));
    return apply_power(k, Eigen::MatrixXd(Eigen::MatrixXd::Identity(op.size(), op.size())), order);
}

Eigen::VectorXd jacobian_norm_bound_row(const ShiftOperator& op, int order,
                                        const LipschitzParams& lip, NodeId i) {
    if (order < 0) throw ConfigError("order must be non-negative");
    if (i < 0 || i >= op.size()) throw DataError("node index out of range");
    const ShiftOperator kt = custom_operator(SparseMatrix(k_matrix(op, lip).transpose()));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(op.size());
    e[i] = 1.0;
    return apply_power(kt, e, order);
}

}  // namespace mpdiag
