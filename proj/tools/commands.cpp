#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpdiag/bottleneck.hpp"
#include "mpdiag/bridge.hpp"
#include "mpdiag/ensemble.hpp"
#include "mpdiag/error.hpp"
#include "mpdiag/features.hpp"
#include "mpdiag/io.hpp"
#include "mpdiag/snr.hpp"

namespace mpdiag::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

// Sub-seed streams derived from the master seed.
enum Stream : std::uint64_t { kGraph = 1, kFeatures = 2, kSplit = 3, kModel = 4, kMonteCarlo = 5, kBridge = 6, kSweep = 7 };

struct GraphSource {
    fs::path edges, labels, features;
    std::optional<SbmParams> sbm;
    bool balanced = false;
    // Planted-partition description, kept for analytic comparisons.
    std::optional<double> pp_h;
};

struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    fs::path out;
    GraphSource source;
    ShiftKind op = ShiftKind::SymNormalizedSelfLoops;
    bool allow_isolated = false;
    std::vector<int> orders{1, 2};
    std::optional<FeatureParams> features;
    ModelSpec model;
    double train_frac = 0.6, val_frac = 0.2;
    int n_mu = 0, n_ge = 0;
    BridgeOptions bridge;
    std::string bridge_perm = "auto";
    // benchmark
    int bench_k = 2, bench_n = 3000, bench_samples = 10;
    double bench_d = 30;
    std::vector<double> h_grid{0.0, 0.25, 0.5, 0.75, 1.0};
};

json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

std::vector<int> to_ints(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

void read_source(const Config& c, RunConfig& rc, bool require) {
    GraphSource& s = rc.source;
    const bool files = c.has("edges") || c.has("labels");
    const bool sbm = c.has("sbm.k") || c.has("sbm.b") || c.has("sbm.h") || c.has("sbm.d") || c.has("sbm.n") ||
                     c.has("sbm.pi") || c.has("sbm.balanced");
    if (files && sbm) throw ConfigError("give either input files (edges/labels) or an SBM spec, not both");
    if (files) {
        s.edges = c.get_string("edges", "");
        s.labels = c.get_string("labels", "");
        s.features = c.get_string("features", "");
        if (s.edges.empty() || s.labels.empty()) throw ConfigError("both 'edges' and 'labels' are required");
        return;
    }
    if (!sbm) {
        if (require) throw ConfigError("no graph source: set edges/labels or an SBM spec (sbm.n, sbm.k, ...)");
        return;
    }
    const long long n = c.get_int("sbm.n", 1000);
    if (n < 1 || n > 50'000'000) throw ConfigError("sbm.n out of range");
    s.balanced = c.get_bool("sbm.balanced", false);
    if (c.has("sbm.b")) {
        const auto b = c.get_doubles("sbm.b", {});
        const auto pi = c.get_doubles("sbm.pi", {});
        const auto k = static_cast<Eigen::Index>(pi.size());
        if (k < 1 || static_cast<Eigen::Index>(b.size()) != k * k)
            throw ConfigError("sbm.b must list k*k entries where k = length of sbm.pi");
        SbmParams p;
        p.n = static_cast<NodeId>(n);
        p.pi = Eigen::Map<const Eigen::VectorXd>(pi.data(), k);
        p.b = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(b.data(), k, k);
        p.validate();
        s.sbm = p;
    } else {
        const double h = c.get_double("sbm.h", 0.5);
        s.sbm = planted_partition(static_cast<int>(c.get_int("sbm.k", 2)), c.get_double("sbm.d", 10.0), h,
                                  static_cast<NodeId>(n));
        s.pp_h = h;
    }
}

void read_features(const Config& c, RunConfig& rc) {
    if (!(c.has("features.d") || c.has("features.sigma2") || c.has("features.phi2") || c.has("features.psi2"))) return;
    rc.features = FeatureParams::iid(static_cast<int>(c.get_int("features.d", 5)), c.get_double("features.sigma2", 1e-5),
                                     c.get_double("features.phi2", 1e-4), c.get_double("features.psi2", 1e-4));
}

void read_model(const Config& c, RunConfig& rc) {
    ModelSpec& m = rc.model;
    m.arch = parse_arch(c.get_string("model.arch", "gcn2"));
    m.hidden = static_cast<int>(c.get_int("model.hidden", m.hidden));
    m.depth = static_cast<int>(c.get_int("model.depth", m.depth));
    m.lr = c.get_double("model.lr", m.lr);
    m.momentum = c.get_double("model.momentum", m.momentum);
    m.weight_decay = c.get_double("model.weight_decay", m.weight_decay);
    m.epochs = static_cast<int>(c.get_int("model.epochs", m.epochs));
    m.dropout = c.get_double("model.dropout", m.dropout);
    m.shift = rc.op;
    m.seed = derive_seed(rc.seed, kModel);
    m.validate();
    rc.train_frac = c.get_double("split.train", rc.train_frac);
    rc.val_frac = c.get_double("split.val", rc.val_frac);
    if (rc.train_frac <= 0 || rc.val_frac < 0 || rc.train_frac + rc.val_frac > 1)
        throw ConfigError("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1");
}

RunConfig parse_run_config(const std::string& command, const Config& c) {
    RunConfig rc;
    rc.command = command;
    if (!c.has("seed")) throw ConfigError("'seed' is mandatory");
    const long long seed = c.get_int("seed", 0);
    if (seed < 0) throw ConfigError("seed must be non-negative");
    rc.seed = static_cast<std::uint64_t>(seed);
    rc.out = c.get_string("out", "");
    if (rc.out.empty()) throw ConfigError("'out' (output directory) is mandatory");
    rc.op = parse_shift_kind(c.get_string("operator", std::string(to_string(rc.op))));
    rc.allow_isolated = c.get_bool("operator.allow_isolated", false);

    if (command == "sample") {
        read_source(c, rc, true);
        if (!rc.source.sbm) throw ConfigError("'sample' needs an SBM spec");
        read_features(c, rc);
    } else if (command == "analyze") {
        read_source(c, rc, true);
        rc.orders = to_ints(c.get_ints("orders", {1, 2, 3, 4}));
        for (int o : rc.orders)
            if (o < 0 || o > 64) throw ConfigError("orders must lie in [0, 64]");
    } else if (command == "snr") {
        read_source(c, rc, true);
        read_features(c, rc);
        if (!rc.features) throw ConfigError("'snr' needs feature parameters (features.d, features.sigma2, ...)");
        read_model(c, rc);
        rc.n_mu = static_cast<int>(c.get_int("mc.n_mu", 0));
        rc.n_ge = static_cast<int>(c.get_int("mc.n_ge", 0));
        if ((rc.n_mu != 0 || rc.n_ge != 0) && (rc.n_mu < 2 || rc.n_ge < 2))
            throw ConfigError("mc.n_mu and mc.n_ge must both be >= 2 (or both 0 to skip the Monte-Carlo estimate)");
    } else if (command == "bridge") {
        read_source(c, rc, true);
        read_features(c, rc);
        read_model(c, rc);
        rc.bridge.mean_degree = c.get_double("bridge.mean_degree", 10.0);
        rc.bridge.iterations = static_cast<int>(c.get_int("bridge.iterations", 10));
        rc.bridge.retrain_every_iteration = c.get_bool("bridge.retrain_every", false);
        rc.bridge.plateau_stop = c.get_bool("bridge.plateau_stop", false);
        rc.bridge.use_train_labels = c.get_bool("bridge.use_train_labels", false);
        rc.bridge.order = static_cast<int>(c.get_int("bridge.order", 1));
        rc.bridge.seed = derive_seed(rc.seed, kBridge);
        rc.bridge_perm = c.get_string("bridge.perm", "auto");
        if (rc.bridge.iterations < 0) throw ConfigError("bridge.iterations must be >= 0");
        if (!(rc.bridge.mean_degree > 0)) throw ConfigError("bridge.mean_degree must be positive");
        if (rc.bridge.order < 1) throw ConfigError("bridge.order must be >= 1");
    } else if (command == "benchmark") {
        rc.bench_k = static_cast<int>(c.get_int("benchmark.k", rc.bench_k));
        rc.bench_n = static_cast<int>(c.get_int("benchmark.n", rc.bench_n));
        rc.bench_d = c.get_double("benchmark.d", rc.bench_d);
        rc.bench_samples = static_cast<int>(c.get_int("benchmark.samples", rc.bench_samples));
        rc.h_grid = c.get_doubles("benchmark.h_grid", rc.h_grid);
        rc.orders = to_ints(c.get_ints("orders", {1, 2, 3, 4}));
        if (rc.bench_samples < 1) throw ConfigError("benchmark.samples must be >= 1");
        for (double h : rc.h_grid) planted_partition(rc.bench_k, rc.bench_d, h, rc.bench_n);  // validates
        for (int o : rc.orders)
            if (o < 0 || o > 64) throw ConfigError("orders must lie in [0, 64]");
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    const auto unused = c.unused_keys();
    if (!unused.empty()) {
        std::string list;
        for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError("unknown or unused configuration keys for '" + command + "': " + list);
    }
    return rc;
}

Graph acquire_graph(const RunConfig& rc) {
    const GraphSource& s = rc.source;
    if (!s.edges.empty()) return load_graph(s.edges, s.labels, s.features);
    std::optional<std::vector<Label>> labels;
    if (s.balanced) labels = proportional_labels(s.sbm->n, s.sbm->pi);
    return sample_sbm(*s.sbm, labels, derive_seed(rc.seed, kGraph));
}

Eigen::MatrixXd acquire_features(const RunConfig& rc, const Graph& g) {
    if (g.features()) return *g.features();
    if (!rc.features) throw ConfigError("no features: give a features file or feature parameters");
    return sample_features(g, *rc.features, derive_seed(rc.seed, kFeatures)).x;
}

json base_report(const RunConfig& rc, const Config& c) {
    json r;
    r["schema_version"] = kSchemaVersion;
    r["command"] = rc.command;
    json cfg = json::object();
    for (const auto& [k, v] : c.entries()) cfg[k] = v;
    r["config"] = cfg;
    json seeds;
    seeds["master"] = rc.seed;
    seeds["graph"] = derive_seed(rc.seed, kGraph);
    seeds["features"] = derive_seed(rc.seed, kFeatures);
    seeds["split"] = derive_seed(rc.seed, kSplit);
    seeds["model"] = derive_seed(rc.seed, kModel);
    seeds["monte_carlo"] = derive_seed(rc.seed, kMonteCarlo);
    seeds["bridge"] = derive_seed(rc.seed, kBridge);
    seeds["sweep"] = derive_seed(rc.seed, kSweep);
    r["seeds"] = seeds;
    r["warnings"] = json::array();
    return r;
}

json graph_summary(const Graph& g) {
    json j;
    j["n"] = g.num_nodes();
    j["edges"] = g.num_edges();
    j["classes"] = g.num_classes();
    j["mean_degree"] = g.num_nodes() ? 2.0 * static_cast<double>(g.num_edges()) / g.num_nodes() : 0.0;
    j["edge_homophily"] = g.num_edges() ? number(edge_homophily(g)) : json("undefined");
    j["node_homophily"] = number(node_homophily(g));
    return j;
}

std::string text_of(const auto& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

// --- commands ------------------------------------------------------------

void cmd_sample(const RunConfig& rc, json& report, std::vector<std::pair<fs::path, std::string>>& files) {
    const Graph g = acquire_graph(rc);
    files.emplace_back(rc.out / "edges.txt", text_of([&](std::ostream& os) { write_edge_list(os, g); }));
    files.emplace_back(rc.out / "labels.txt", text_of([&](std::ostream& os) { write_labels(os, g.labels()); }));
    if (rc.features) {
        const auto x = sample_features(g, *rc.features, derive_seed(rc.seed, kFeatures)).x;
        files.emplace_back(rc.out / "features.csv", text_of([&](std::ostream& os) { write_matrix_csv(os, x); }));
    }
    report["graph"] = graph_summary(g);
    if (auto w = sparsity_warning(*rc.source.sbm)) report["warnings"].push_back(*w);
}

void cmd_analyze(const RunConfig& rc, json& report, std::vector<std::pair<fs::path, std::string>>& files) {
    const Graph g = acquire_graph(rc);
    report["graph"] = graph_summary(g);
    const ShiftOperator op = shift_operator(g, rc.op, {.add_self_loops = false, .allow_isolated = rc.allow_isolated});
    report["operator"] = std::string(to_string(rc.op));

    json metrics = json::array();
    std::ostringstream csv;
    csv << "order,h,t,c\n";
    for (int order : rc.orders) {
        const OrderMetrics m = order_metrics(op, g.labels(), order);
        metrics.push_back({{"operator", std::string(to_string(rc.op))}, {"order", order}, {"h", number(m.h)},
                           {"t", number(m.t)}, {"c", number(m.c)}});
        csv << order << ',' << format_number(m.h) << ',' << format_number(m.t) << ',' << format_number(m.c) << '\n';

        const BottleneckScores b = bottleneck_scores(op, g.labels(), order, order);
        std::ostringstream nodes;
        nodes << "node_id,b_class,b_self,b_total\n";
        for (NodeId i = 0; i < g.num_nodes(); ++i)
            nodes << i << ',' << format_number(b.b_class[i]) << ',' << format_number(b.b_self[i]) << ','
                  << format_number(b.b_total[i]) << '\n';
        files.emplace_back(rc.out / ("bottleneck_r" + std::to_string(order) + ".csv"), nodes.str());
    }
    report["metrics"] = metrics;
    files.emplace_back(rc.out / "metrics.csv", csv.str());

    if (rc.source.sbm) {
        json ens = json::array();
        for (int order : rc.orders) {
            const EnsembleMetrics e = expected_order_metrics(*rc.source.sbm, order);
            ens.push_back({{"ell", order}, {"expected_h", number(e.expected_h)}, {"expected_c", number(e.expected_c)},
                           {"expected_t", number(e.expected_t)}, {"t_band", number(e.t_band)},
                           {"band", number(e.error_band)}});
        }
        report["ensemble"] = ens;
        if (auto w = sparsity_warning(*rc.source.sbm)) report["warnings"].push_back(*w);
        if (rc.op != ShiftKind::SymNormalizedRaw && rc.op != ShiftKind::SymNormalizedSelfLoops)
            report["warnings"].push_back("ensemble predictions describe the symmetric-normalised operator");
    }
}

void cmd_snr(const RunConfig& rc, json& report, std::vector<std::pair<fs::path, std::string>>& files) {
    const Graph g = acquire_graph(rc);
    report["graph"] = graph_summary(g);
    const FeatureParams& fp = *rc.features;
    const Split split = random_split(g.num_nodes(), rc.train_frac, rc.val_frac, derive_seed(rc.seed, kSplit));
    const ShiftOperator op = shift_operator(g, rc.model.shift, {.add_self_loops = true, .allow_isolated = true});

    std::optional<EmpiricalSnr> empirical;
    TrainedModel model;
    if (rc.n_mu >= 2) {
        auto run = empirical_snr(g, fp, rc.model, split, rc.n_mu, rc.n_ge, derive_seed(rc.seed, kMonteCarlo));
        model = std::move(run.model);
        empirical = std::move(run.snr);
    } else {
        const Eigen::MatrixXd x = acquire_features(rc, g);
        model = train(op, g.labels(), x, rc.model, split);
    }

    const Eigen::VectorXd predicted = predict_model_snr(model, op, g.labels(), fp);
    // Condition from the summed-diagonal triple pooled over output dimensions.
    SensitivityTriple pooled;
    for (int p = 0; p < model.output_dim(); ++p) {
        JacobianOptions opt;
        opt.output_dim = p;
        auto t = gcn_jacobian_sensitivities(model, op, g.labels(), {}, opt);
        if (p == 0) {
            pooled = std::move(t);
        } else {
            pooled.signal += t.signal;
            pooled.noise += t.noise;
            pooled.global += t.global;
        }
    }
    const double rho = local_noise_proportion(fp);
    const std::vector<bool> condition = sensitivity_condition(pooled, rho);

    std::ostringstream csv;
    csv << "node_id,predicted_snr,empirical_snr,condition\n";
    std::size_t satisfied = 0;
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
        csv << i << ',' << format_number(predicted[i]) << ','
            << (empirical ? format_number(empirical->per_node[i]) : std::string("")) << ','
            << (condition[i] ? 1 : 0) << '\n';
        satisfied += condition[i];
    }
    files.emplace_back(rc.out / "snr_nodes.csv", csv.str());

    json s;
    s["arch"] = std::string(to_string(rc.model.arch));
    s["input_snr"] = number(fp.input_snr());
    s["rho"] = rho;
    s["mean_predicted_snr"] = number(finite_mean(predicted));
    s["condition_fraction"] = static_cast<double>(satisfied) / g.num_nodes();
    if (empirical) {
        s["mean_empirical_snr"] = number(finite_mean(empirical->per_node));
        s["mean_empirical_snr_corrected"] = number(finite_mean(empirical->per_node_corrected));
        s["n_mu"] = empirical->n_mu;
        s["n_ge"] = empirical->n_ge;
    }
    s["best_epoch"] = model.best_epoch;
    report["snr"] = s;
}

void cmd_bridge(const RunConfig& rc, json& report, std::vector<std::pair<fs::path, std::string>>& files) {
    const Graph g = acquire_graph(rc);
    report["graph"] = graph_summary(g);
    const Eigen::MatrixXd x = acquire_features(rc, g);
    const Split split = random_split(g.num_nodes(), rc.train_frac, rc.val_frac, derive_seed(rc.seed, kSplit));

    std::vector<SymmetricPermutation> candidates;
    if (rc.bridge_perm == "auto" || rc.bridge_perm == "search") {
        if (g.num_classes() > 6) throw ConfigError("permutation search is limited to k <= 6; set bridge.perm explicitly");
        candidates = enumerate_involutions(g.num_classes());
    } else {
        candidates.push_back(SymmetricPermutation::parse(rc.bridge_perm, g.num_classes()));
    }

    std::optional<BridgeState> best;
    json tried = json::array();
    for (const auto& perm : candidates) {
        BridgeOptions opt = rc.bridge;
        opt.perm = perm;
        BridgeState st = bridge(g, x, rc.model, split, opt);
        tried.push_back({{"perm", perm.cycle_notation()}, {"best_val_accuracy", st.best().val_accuracy},
                         {"test_accuracy", st.best().test_accuracy}});
        if (!best || st.best().val_accuracy > best->best().val_accuracy) best = std::move(st);
    }

    files.emplace_back(rc.out / "history.csv", bridge_history_csv(*best));
    SvgSeries acc{"test accuracy", {}, {}}, hom{"h^(2l)", {}, {}};
    for (const auto& r : best->history) {
        acc.x.push_back(r.iteration);
        acc.y.push_back(r.test_accuracy);
        hom.x.push_back(r.iteration);
        hom.y.push_back(r.homophily);
    }
    files.emplace_back(rc.out / "history.svg", svg_line_chart("BRIDGE", "iteration", "value", {acc, hom}));
    files.emplace_back(rc.out / "rewired_edges.txt", text_of([&](std::ostream& os) { write_edge_list(os, best->graph); }));
    files.emplace_back(rc.out / "rewired_labels.txt",
                       text_of([&](std::ostream& os) { write_labels(os, best->graph.labels()); }));

    json b;
    b["perm"] = best->perm.cycle_notation();
    b["candidates"] = tried;
    b["iterations"] = best->iteration;
    b["best_iteration"] = best->best_iteration;
    b["baseline_test_accuracy"] = best->history.front().test_accuracy;
    b["best_test_accuracy"] = best->best().test_accuracy;
    b["final_test_accuracy"] = best->history.back().test_accuracy;
    b["baseline_homophily"] = best->history.front().homophily;
    b["final_homophily"] = best->history.back().homophily;
    b["retrain_every_iteration"] = rc.bridge.retrain_every_iteration;
    report["bridge"] = b;
}

void cmd_benchmark(const RunConfig& rc, json& report, std::vector<std::pair<fs::path, std::string>>& files) {
    std::ostringstream csv;
    csv << "h,ell,empirical,empirical_sd,predicted,band\n";
    std::vector<SvgSeries> series;
    for (int order : rc.orders) series.push_back({"l=" + std::to_string(order), {}, {}});
    std::vector<SvgSeries> predicted_series;

    json rows = json::array();
    std::uint64_t task = 0;
    for (double h : rc.h_grid) {
        const SbmParams p = planted_partition(rc.bench_k, rc.bench_d, h, rc.bench_n);
        std::vector<std::vector<double>> values(rc.orders.size());
        for (int s = 0; s < rc.bench_samples; ++s) {
            const Graph g = sample_sbm(p, std::nullopt, derive_seed(derive_seed(rc.seed, kSweep), task++));
            const ShiftOperator op =
                shift_operator(g, ShiftKind::SymNormalizedRaw, {.add_self_loops = false, .allow_isolated = true});
            for (std::size_t o = 0; o < rc.orders.size(); ++o)
                values[o].push_back(order_metrics(op, g.labels(), rc.orders[o]).h);
        }
        for (std::size_t o = 0; o < rc.orders.size(); ++o) {
            double mean = 0, sq = 0;
            for (double v : values[o]) mean += v;
            mean /= values[o].size();
            for (double v : values[o]) sq += (v - mean) * (v - mean);
            const double sd = values[o].size() > 1 ? std::sqrt(sq / (values[o].size() - 1)) : 0.0;
            const double pred = planted_partition_homophily(rc.bench_k, h, rc.orders[o]);
            csv << format_number(h) << ',' << rc.orders[o] << ',' << format_number(mean) << ',' << format_number(sd)
                << ',' << format_number(pred) << ',' << format_number(1.0 / rc.bench_d) << '\n';
            series[o].x.push_back(h);
            series[o].y.push_back(mean);
            rows.push_back({{"h", h}, {"ell", rc.orders[o]}, {"empirical", mean}, {"predicted", pred}});
        }
    }
    files.emplace_back(rc.out / "benchmark.csv", csv.str());
    files.emplace_back(rc.out / "benchmark.svg",
                       svg_line_chart("higher-order homophily", "edge homophily h", "h^(l)", series));
    report["benchmark"] = {{"k", rc.bench_k}, {"n", rc.bench_n}, {"d", rc.bench_d}, {"samples", rc.bench_samples},
                           {"rows", rows}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feature-agnostic diagnostics for message-passing networks"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<long long> seed;
    std::string out_dir;
    app.add_option("-c,--config", config_path, "key = value configuration file");
    app.add_option("-s,--set", overrides, "override a configuration key (key=value), repeatable");
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("-o,--out", out_dir, "output directory (overrides the config)");
    app.fallthrough();
    for (const char* name : {"sample", "analyze", "snr", "bridge", "benchmark"}) {
        static const std::map<std::string, std::string> help{
            {"sample", "sample an SBM graph to edge/label files"},
            {"analyze", "bottleneck scores, higher-order homophily and ensemble predictions"},
            {"snr", "predicted and Monte-Carlo SNR with the sensitivity condition"},
            {"bridge", "BRIDGE rewiring loop"},
            {"benchmark", "planted-partition higher-order homophily sweep"}};
        app.add_subcommand(name, help.at(name));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    const auto start = std::chrono::steady_clock::now();
    try {
        Config config = config_path.empty() ? Config{} : Config::load(config_path);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
            config.set(o.substr(0, eq), o.substr(eq + 1));
        }
        if (seed) config.set("seed", std::to_string(*seed));
        if (!out_dir.empty()) config.set("out", out_dir);

        // Everything is validated before any output is produced.
        const RunConfig rc = parse_run_config(command, config);
        json report = base_report(rc, config);
        std::vector<std::pair<fs::path, std::string>> files;
        if (command == "sample") cmd_sample(rc, report, files);
        else if (command == "analyze") cmd_analyze(rc, report, files);
        else if (command == "snr") cmd_snr(rc, report, files);
        else if (command == "bridge") cmd_bridge(rc, report, files);
        else cmd_benchmark(rc, report, files);

        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report["timing"] = {{"seconds", seconds}};
        for (const auto& [path, content] : files) write_text_file(path, content);
        write_text_file(rc.out / "report.json", report.dump(2) + "\n");
        out << "wrote " << files.size() + 1 << " files to " << rc.out.string() << "\n";
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mpdiag::cli
