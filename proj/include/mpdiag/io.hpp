#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mpdiag/graph.hpp"

namespace mpdiag {

/// "u v" per line; '#' starts a comment; blank lines are skipped. Throws
/// DataError naming the offending line.
std::vector<Edge> read_edge_list(std::istream& in, const std::string& source = "<stream>");
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

/// One integer label per line ('#' comments allowed).
std::vector<Label> read_labels(std::istream& in, const std::string& source = "<stream>");
std::vector<Label> read_labels(const std::filesystem::path& path);

/// Headerless numeric CSV; every row must have the same column count.
Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source = "<stream>");
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Loads edges + labels (+ optional features) into a Graph.
Graph load_graph(const std::filesystem::path& edges, const std::filesystem::path& labels,
                 const std::filesystem::path& features = {});

void write_edge_list(std::ostream& out, const Graph& g);
void write_labels(std::ostream& out, std::span<const Label> labels);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

/// Writes `content` to `path`, creating parent directories. Throws
/// DataError when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite.
std::string format_number(double v);

/// Flat key = value configuration. '#' comments, blank lines ignored.
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<stream>");
    static Config load(const std::filesystem::path& path);

    /// Applies "key=value" overrides (e.g. from the command line).
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<long long> get_ints(const std::string& key, const std::vector<long long>& fallback) const;

    /// Keys that were set but never read; used to reject typos.
    std::vector<std::string> unused_keys() const;
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> read_;
};

struct SvgSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal self-contained SVG line chart with axes and a legend.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series);

}  // namespace mpdiag
