#include "clsna/network_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace clsna {

InteractionCounts::InteractionCounts(std::vector<CountMatrix> counts, NodeRegistry registry)
    : counts_(std::move(counts)), registry_(std::move(registry)) {
    const auto n = static_cast<Eigen::Index>(registry_.ids.size());
    if (registry_.labels.size() != registry_.ids.size()) throw InvalidInput("counts: registry ids and labels differ");
    if (counts_.empty()) throw InvalidInput("counts: at least one time step is required");
    for (const auto& c : counts_) {
        if (c.rows() != n || c.cols() != n) throw InvalidInput("counts: every matrix must be N x N");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (c(i, i) != 0) throw InvalidInput("counts: diagonal must be zero");
            for (Eigen::Index j = 0; j < i; ++j) {
                if (c(i, j) != c(j, i)) throw InvalidInput("counts: matrices must be symmetric");
                if (c(i, j) < 0) throw InvalidInput("counts: entries must be nonnegative");
            }
        }
    }
}

ThresholdPolicy ThresholdPolicy::fixed(double theta) {
    ThresholdPolicy p{Kind::static_threshold, theta};
    p.validate();
    return p;
}

ThresholdPolicy ThresholdPolicy::dynamic() { return {Kind::dynamic_mean, 0.0}; }

void ThresholdPolicy::validate() const {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw InvalidInput("threshold must be a nonnegative number");
}

BinarizedSeries binarize(const InteractionCounts& counts, const ThresholdPolicy& policy) {
    policy.validate();
    const auto n = static_cast<Eigen::Index>(counts.node_count());
    BinarizedSeries out;
    std::vector<Adjacency> slices;
    for (const auto& c : counts.slices()) {
        double theta = policy.theta;
        if (policy.kind == ThresholdPolicy::Kind::dynamic_mean) {
            double total = 0.0;
            for (Eigen::Index j = 1; j < n; ++j)
                for (Eigen::Index i = 0; i < j; ++i) total += static_cast<double>(c(i, j));
            theta = total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
        }
        Adjacency a = Adjacency::Zero(n, n);
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                if (static_cast<double>(c(i, j)) > theta) a(i, j) = a(j, i) = 1;
            }
        }
        slices.push_back(std::move(a));
        out.thresholds.push_back(theta);
    }
    out.networks = AdjacencySeries(std::move(slices));
    return out;
}

bool has_interaction(const InteractionCounts& counts, std::size_t node, std::size_t t) {
    return counts[t].row(static_cast<Eigen::Index>(node)).sum() > 0;
}

InteractionCounts restrict_to_persistent_nodes(const InteractionCounts& counts,
                                               const std::function<bool(std::size_t, std::size_t)>& active) {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < counts.node_count(); ++i) {
        bool always = true;
        for (std::size_t t = 0; t < counts.horizon() && always; ++t) always = active(i, t);
        if (always) keep.push_back(static_cast<Eigen::Index>(i));
    }
    NodeRegistry registry;
    std::vector<int> labels;
    for (Eigen::Index i : keep) {
        registry.ids.push_back(counts.registry().ids[static_cast<std::size_t>(i)]);
        labels.push_back(counts.registry().labels[static_cast<std::size_t>(i)]);
    }
    registry.labels = GroupLabels(labels);
    if (registry.labels.count(1) < 2 || registry.labels.count(2) < 2) {
        throw InvalidInput("fewer than two persistent nodes remain in a group");
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    std::vector<CountMatrix> slices;
    for (const auto& c : counts.slices()) {
        CountMatrix r(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b) r(a, b) = c(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
        slices.push_back(std::move(r));
    }
    return InteractionCounts(std::move(slices), std::move(registry));
}

NodeRegistry default_registry(const GroupLabels& labels) {
    NodeRegistry r;
    for (std::size_t i = 0; i < labels.size(); ++i) r.ids.push_back("v" + std::to_string(i));
    r.labels = labels;
    return r;
}

namespace {

struct Header {
    std::size_t n = 0;
    std::size_t t = 0;
};

bool content_line(const std::string& raw, std::string& line) {
    const auto hash = raw.find('#');
    line = raw.substr(0, hash);
    return line.find_first_not_of(" \t\r") != std::string::npos;
}

std::size_t parse_size_field(const std::string& token, const std::string& key, std::size_t line) {
    const std::string prefix = key + "=";
    if (token.rfind(prefix, 0) != 0) throw ParseError(line, "expected " + prefix + "<count>");
    try {
        std::size_t used = 0;
        const auto v = std::stoull(token.substr(prefix.size()), &used);
        if (used != token.size() - prefix.size()) throw ParseError(line, "malformed " + key);
        return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
        throw ParseError(line, "malformed " + key);
    }
}

template <typename T>
T take(std::istringstream& in, std::size_t line, const char* what) {
    T value{};
    if (!(in >> value)) throw ParseError(line, std::string("missing or malformed ") + what);
    return value;
}

void expect_end(std::istringstream& in, std::size_t line) {
    std::string extra;
    if (in >> extra) throw ParseError(line, "unexpected trailing field '" + extra + "'");
}

// Reads the header and then hands every further content line to `body`.
template <typename Body>
Header parse(std::istream& in, const std::string& magic, Body body) {
    std::string raw;
    std::string line;
    std::size_t number = 0;
    bool have_header = false;
    Header h;
    while (std::getline(in, raw)) {
        ++number;
        if (!content_line(raw, line)) continue;
        std::istringstream fields(line);
        if (!have_header) {
            std::string a, b, nf, tf;
            fields >> a >> b >> nf >> tf;
            if (a + " " + b != magic) throw ParseError(number, "expected header '" + magic + " N=<n> T=<t>'");
            h.n = parse_size_field(nf, "N", number);
            h.t = parse_size_field(tf, "T", number);
            expect_end(fields, number);
            if (h.n < 2) throw ParseError(number, "N must be at least 2");
            if (h.t < 1) throw ParseError(number, "T must be at least 1");
            have_header = true;
            body(h, fields, std::string(), 0, true);
            continue;
        }
        std::string kind;
        fields >> kind;
        body(h, fields, kind, number, false);
    }
    if (!have_header) throw ParseError(number, "missing header");
    return h;
}

struct RegistryBuilder {
    std::vector<std::string> ids;
    std::vector<int> groups;
    std::vector<bool> seen;

    void reset(std::size_t n) {
        ids.assign(n, "");
        groups.assign(n, 0);
        seen.assign(n, false);
    }

    void add(std::istringstream& fields, std::size_t line) {
        const auto index = take<long long>(fields, line, "node index");
        const auto id = take<std::string>(fields, line, "node id");
        const auto group = take<int>(fields, line, "group");
        expect_end(fields, line);
        if (index < 0 || static_cast<std::size_t>(index) >= ids.size()) throw ParseError(line, "node index out of range");
        if (group != 1 && group != 2) throw ParseError(line, "group must be 1 or 2");
        const auto k = static_cast<std::size_t>(index);
        if (seen[k]) throw ParseError(line, "node " + std::to_string(k) + " declared twice");
        seen[k] = true;
        ids[k] = id;
        groups[k] = group;
    }

    NodeRegistry finish(std::size_t line) const {
        for (std::size_t k = 0; k < seen.size(); ++k) {
            if (!seen[k]) throw ParseError(line, "node " + std::to_string(k) + " is not declared");
        }
        return {ids, GroupLabels(groups)};
    }
};

std::pair<Eigen::Index, Eigen::Index> take_pair(std::istringstream& fields, std::size_t line, std::size_t n,
                                                std::size_t& t, std::size_t horizon) {
    const auto tt = take<long long>(fields, line, "time");
    const auto i = take<long long>(fields, line, "node i");
    const auto j = take<long long>(fields, line, "node j");
    if (tt < 1 || static_cast<std::size_t>(tt) > horizon) throw ParseError(line, "time out of range");
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
        throw ParseError(line, "node index out of range");
    }
    if (i == j) throw ParseError(line, "self-pairs are not allowed");
    t = static_cast<std::size_t>(tt) - 1;
    return {static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)};
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open for writing: " + path);
    return out;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open: " + path);
    return in;
}

}  // namespace

void write_adjacency(std::ostream& out, const AdjacencySeries& y, const NodeRegistry& registry,
                     const std::vector<std::string>& comments) {
    if (registry.ids.size() != y.node_count()) throw InvalidInput("write_adjacency: registry size differs");
    out << "clsna-adj v1 N=" << y.node_count() << " T=" << y.horizon() << '\n';
    for (const auto& c : comments) out << "# " << c << '\n';
    for (std::size_t i = 0; i < registry.ids.size(); ++i) {
        out << "node " << i << ' ' << registry.ids[i] << ' ' << registry.labels[i] << '\n';
    }
    const auto n = static_cast<Eigen::Index>(y.node_count());
    for (std::size_t t = 0; t < y.horizon(); ++t)
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (y[t](i, j)) out << "edge " << t + 1 << ' ' << i << ' ' << j << '\n';
}

AdjacencyFile read_adjacency(std::istream& in) {
    std::vector<Adjacency> slices;
    RegistryBuilder registry;
    std::size_t last_line = 0;
    parse(in, "clsna-adj v1", [&](const Header& h, std::istringstream& fields, const std::string& kind,
                                  std::size_t line, bool header) {
        if (header) {
            slices.assign(h.t, Adjacency::Zero(static_cast<Eigen::Index>(h.n), static_cast<Eigen::Index>(h.n)));
            registry.reset(h.n);
            return;
        }
        last_line = line;
        if (kind == "node") {
            registry.add(fields, line);
        } else if (kind == "edge") {
            std::size_t t = 0;
            const auto [i, j] = take_pair(fields, line, h.n, t, h.t);
            expect_end(fields, line);
            slices[t](i, j) = slices[t](j, i) = 1;
        } else {
            throw ParseError(line, "unknown record '" + kind + "'");
        }
    });
    AdjacencyFile file;
    file.registry = registry.finish(last_line);
    file.networks = AdjacencySeries(std::move(slices));
    return file;
}

void write_counts(std::ostream& out, const InteractionCounts& counts) {
    out << "clsna-counts v1 N=" << counts.node_count() << " T=" << counts.horizon() << '\n';
    const NodeRegistry& registry = counts.registry();
    for (std::size_t i = 0; i < registry.ids.size(); ++i) {
        out << "node " << i << ' ' << registry.ids[i] << ' ' << registry.labels[i] << '\n';
    }
    const auto n = static_cast<Eigen::Index>(counts.node_count());
    for (std::size_t t = 0; t < counts.horizon(); ++t)
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (counts[t](i, j) != 0) out << "count " << t + 1 << ' ' << i << ' ' << j << ' ' << counts[t](i, j) << '\n';
}

InteractionCounts read_counts(std::istream& in) {
    std::vector<CountMatrix> slices;
    std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> seen;
    RegistryBuilder registry;
    std::size_t last_line = 0;
    parse(in, "clsna-counts v1", [&](const Header& h, std::istringstream& fields, const std::string& kind,
                                     std::size_t line, bool header) {
        const auto n = static_cast<Eigen::Index>(h.n);
        if (header) {
            slices.assign(h.t, CountMatrix::Zero(n, n));
            seen.assign(h.t, Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false));
            registry.reset(h.n);
            return;
        }
        last_line = line;
        if (kind == "node") {
            registry.add(fields, line);
        } else if (kind == "count") {
            std::size_t t = 0;
            const auto [i, j] = take_pair(fields, line, h.n, t, h.t);
            const auto value = take<long long>(fields, line, "count value");
            expect_end(fields, line);
            if (value < 0) throw ParseError(line, "counts must be nonnegative");
            if (seen[t](i, j)) throw ParseError(line, "pair listed twice for the same time");
            seen[t](i, j) = seen[t](j, i) = true;
            slices[t](i, j) = slices[t](j, i) = value;
        } else {
            throw ParseError(line, "unknown record '" + kind + "'");
        }
    });
    return InteractionCounts(std::move(slices), registry.finish(last_line));
}

AdjacencyFile read_adjacency_file(const std::string& path) {
    auto in = open_input(path);
    return read_adjacency(in);
}

void write_adjacency_file(const std::string& path, const AdjacencySeries& y, const NodeRegistry& registry,
                          const std::vector<std::string>& comments) {
    auto out = open_output(path);
    write_adjacency(out, y, registry, comments);
    if (!out) throw InvalidInput("failed writing " + path);
}

InteractionCounts read_counts_file(const std::string& path) {
    auto in = open_input(path);
    return read_counts(in);
}

void write_counts_file(const std::string& path, const InteractionCounts& counts) {
    auto out = open_output(path);
    write_counts(out, counts);
    if (!out) throw InvalidInput("failed writing " + path);
}

void write_latent_csv(std::ostream& out, const LatentTrajectory<double>& latent, const GroupLabels& labels) {
    const auto precision = out.precision(17);
    const Eigen::Index p = latent.empty() ? 0 : latent.front().cols();
    out << "time,node,group";
    for (Eigen::Index k = 0; k < p; ++k) out << ",z" << k + 1;
    out << '\n';
    for (std::size_t t = 0; t < latent.size(); ++t) {
        for (Eigen::Index i = 0; i < latent[t].rows(); ++i) {
            out << t + 1 << ',' << i << ',' << labels[static_cast<std::size_t>(i)];
            for (Eigen::Index k = 0; k < p; ++k) out << ',' << latent[t](i, k);
            out << '\n';
        }
    }
    out.precision(precision);
}

}  // namespace clsna
