#include "mpdiag/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mpdiag/error.hpp"

namespace mpdiag {

namespace {

std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    std::string s = hash == std::string::npos ? line : line.substr(0, hash);
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::vector<Edge> read_edge_list(std::istream& in, const std::string& source) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string s = strip_comment(line);
        if (s.empty()) continue;
        std::istringstream fields(s);
        std::string a, b, extra;
        fields >> a >> b;
        NodeId u = 0, v = 0;
        if (b.empty() || (fields >> extra) || !parse_number(a, u) || !parse_number(b, v))
            throw DataError(where(source, number) + "expected two integer node ids, got '" + s + "'");
        if (u < 0 || v < 0) throw DataError(where(source, number) + "negative node id");
        edges.emplace_back(u, v);
    }
    return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_edge_list(in, path.string());
}

std::vector<Label> read_labels(std::istream& in, const std::string& source) {
    std::vector<Label> labels;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string s = strip_comment(line);
        if (s.empty()) continue;
        Label y = 0;
        if (!parse_number(std::string_view(s), y))
            throw DataError(where(source, number) + "expected an integer label, got '" + s + "'");
        if (y < 0) throw DataError(where(source, number) + "labels must be non-negative");
        labels.push_back(y);
    }
    return labels;
}

std::vector<Label> read_labels(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_labels(in, path.string());
}

Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string s = strip_comment(line);
        if (s.empty()) continue;
        std::vector<double> row;
        std::stringstream fields(s);
        std::string cell;
        while (std::getline(fields, cell, ',')) {
            const std::string c = strip_comment(cell);
            double v = 0.0;
            if (!parse_number(std::string_view(c), v))
                throw DataError(where(source, number) + "non-numeric value '" + cell + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError(where(source, number) + "expected " + std::to_string(rows.front().size()) +
                            " columns, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_matrix_csv(in, path.string());
}

Graph load_graph(const std::filesystem::path& edges, const std::filesystem::path& labels,
                 const std::filesystem::path& features) {
    const auto e = read_edge_list(edges);
    auto y = read_labels(labels);
    std::optional<Eigen::MatrixXd> x;
    if (!features.empty()) x = read_matrix_csv(features);
    return build_graph(e, std::move(y), std::move(x));
}

void write_edge_list(std::ostream& out, const Graph& g) {
    for (const auto& [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
}

void write_labels(std::ostream& out, std::span<const Label> labels) {
    for (Label y : labels) out << y << '\n';
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
        out << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Config Config::parse(std::istream& in, const std::string& source) {
    Config c;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string s = strip_comment(line);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where(source, number) + "expected 'key = value'");
        const std::string key = strip_comment(s.substr(0, eq));
        if (key.empty()) throw ConfigError(where(source, number) + "empty key");
        c.set(key, strip_comment(s.substr(eq + 1)));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
    read_.emplace(key, false);
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    read_[key] = true;
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string s = get_string(key, "");
    double v = 0.0;
    if (!parse_number(std::string_view(s), v)) throw ConfigError("'" + key + "' must be a number, got '" + s + "'");
    return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const std::string s = get_string(key, "");
    long long v = 0;
    if (!parse_number(std::string_view(s), v)) throw ConfigError("'" + key + "' must be an integer, got '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string s = get_string(key, "");
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("'" + key + "' must be a boolean, got '" + s + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    std::stringstream in(get_string(key, ""));
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string s = strip_comment(item);
        double v = 0.0;
        if (!parse_number(std::string_view(s), v)) throw ConfigError("'" + key + "' has a non-numeric entry '" + s + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<long long> Config::get_ints(const std::string& key, const std::vector<long long>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<long long> out;
    std::stringstream in(get_string(key, ""));
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string s = strip_comment(item);
        long long v = 0;
        if (!parse_number(std::string_view(s), v)) throw ConfigError("'" + key + "' has a non-integer entry '" + s + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, used] : read_)
        if (!used) out.push_back(k);
    return out;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series) {
    constexpr double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\" font-size=\"12\">" << y_label << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << format_number(std::round(xv * 1000) / 1000) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
           << format_number(std::round(yv * 1000) / 1000) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = colours[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i)
            if (std::isfinite(series[s].x[i]) && std::isfinite(series[s].y[i]))
                os << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
        os << "\"/>\n";
        const double ly = T + 16.0 * static_cast<double>(s);
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << series[s].name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace mpdiag
