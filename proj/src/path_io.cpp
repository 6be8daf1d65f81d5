#include "skflow/path_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

namespace skflow {

std::string format_double(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, p);
}

namespace {

double parse_double(const std::string& s) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("bad number in CSV: '" + s + "'");
    return x;
}

void write_row(std::ostream& os, double t, const Eigen::VectorXd& v, const char* kind) {
    os << format_double(t);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        os << ',' << format_double(v(i));
    os << ',' << kind << '\n';
}

struct Row {
    double t;
    Eigen::VectorXd v;
    std::string kind;
};

} // namespace

void write_path_csv(std::ostream& os, const CadlagPath& path) {
    os << "t";
    for (Eigen::Index i = 1; i <= path.dim(); ++i)
        os << ",v" << i;
    os << ",kind\n";
    const Eigen::Index K = path.segments();
    write_row(os, 0.0, path.values().col(0), "anchor");
    for (Eigen::Index k = 1; k <= K; ++k) {
        const double s = path.times()[static_cast<std::size_t>(k)];
        const double dt = s - path.times()[static_cast<std::size_t>(k - 1)];
        const Eigen::VectorXd pre = path.values().col(k - 1) + path.slopes().col(k - 1) * dt;
        const Eigen::VectorXd post = path.values().col(k);
        if ((pre.array() == post.array()).all()) {
            write_row(os, s, post, "anchor");
        } else {
            write_row(os, s, pre, "jump-pre");
            write_row(os, s, post, "jump-post");
        }
    }
}

void write_path_csv(const std::string& filename, const CadlagPath& path) {
    std::ofstream f(filename);
    if (!f)
        throw ConfigError("cannot open for writing: " + filename);
    write_path_csv(f, path);
}

CadlagPath read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw ConfigError("empty path CSV");
    // header determines dim
    Eigen::Index dim = -1;
    {
        std::stringstream hs(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(hs, field, ','))
            fields.push_back(field);
        if (fields.size() < 3 || fields.front() != "t" || fields.back() != "kind")
            throw ConfigError("bad path CSV header");
        dim = static_cast<Eigen::Index>(fields.size()) - 2;
    }
    std::vector<Row> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::stringstream ls(line);
        std::string field;
        Row row;
        row.v.resize(dim);
        if (!std::getline(ls, field, ','))
            throw ConfigError("short CSV row");
        row.t = parse_double(field);
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (!std::getline(ls, field, ','))
                throw ConfigError("short CSV row");
            row.v(i) = parse_double(field);
        }
        if (!std::getline(ls, row.kind))
            throw ConfigError("missing kind field");
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw ConfigError("path CSV needs breakpoints at 0 and T");

    // collapse rows into (time, pre, post) anchors
    std::vector<double> times;
    std::vector<Eigen::VectorXd> pre, post;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        if (row.kind == "anchor") {
            times.push_back(row.t);
            pre.push_back(row.v);
            post.push_back(row.v);
        } else if (row.kind == "jump-pre") {
            if (i + 1 >= rows.size() || rows[i + 1].kind != "jump-post" || rows[i + 1].t != row.t)
                throw ConfigError("jump-pre row must pair with jump-post at the same time");
            times.push_back(row.t);
            pre.push_back(row.v);
            post.push_back(rows[i + 1].v);
            ++i;
        } else {
            throw ConfigError("unknown row kind: '" + row.kind + "'");
        }
    }
    if (times.front() != 0.0)
        throw ConfigError("path CSV must start at t = 0");

    const auto K = static_cast<Eigen::Index>(times.size()) - 1;
    Eigen::MatrixXd values(dim, K + 1);
    Eigen::MatrixXd slopes(dim, K);
    for (Eigen::Index k = 0; k <= K; ++k)
        values.col(k) = post[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < K; ++k) {
        const double dt = times[static_cast<std::size_t>(k + 1)] - times[static_cast<std::size_t>(k)];
        slopes.col(k) = (pre[static_cast<std::size_t>(k + 1)] - post[static_cast<std::size_t>(k)]) / dt;
    }
    return CadlagPath(std::move(times), std::move(values), std::move(slopes));
}

CadlagPath read_path_csv(const std::string& filename) {
    std::ifstream f(filename);
    if (!f)
        throw ConfigError("cannot open for reading: " + filename);
    return read_path_csv(f);
}

} // namespace skflow
