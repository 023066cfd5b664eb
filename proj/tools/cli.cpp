#include "cli.hpp"

#include "clsna/evaluation.hpp"
#include "clsna/model_selection.hpp"
#include "clsna/network_io.hpp"
#include "clsna/random.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef CLSNA_VERSION
#define CLSNA_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace clsna::cli {

namespace {

// ---------------------------------------------------------------------------
// Small helpers

fs::path prepare_directory(const std::string& dir) {
    if (dir.empty()) throw InvalidInput("an output directory is required (--out)");
    const fs::path path(dir);
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec || !fs::is_directory(path)) throw InvalidInput("cannot create output directory " + dir);
    const fs::path probe = path / ".write-probe";
    {
        std::ofstream test(probe);
        if (!test) throw InvalidInput("output directory is not writable: " + dir);
    }
    fs::remove(probe, ec);
    return path;
}

class OutputSet {
public:
    explicit OutputSet(fs::path root) : root_(std::move(root)) {}

    std::ofstream open(const std::string& relative) {
        const fs::path full = root_ / relative;
        fs::create_directories(full.parent_path());
        std::ofstream out(full);
        if (!out) throw InvalidInput("cannot write " + full.string());
        record(relative);
        return out;
    }

    std::string path(const std::string& relative) {
        const fs::path full = root_ / relative;
        fs::create_directories(full.parent_path());
        record(relative);
        return full.string();
    }

    const fs::path& root() const { return root_; }
    std::vector<std::string> files() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> sorted = files_;
        std::sort(sorted.begin(), sorted.end());
        return sorted;
    }

private:
    void record(const std::string& relative) {
        std::lock_guard lock(mutex_);
        files_.push_back(relative);
    }

    fs::path root_;
    mutable std::mutex mutex_;
    std::vector<std::string> files_;
};

std::string fnv1a_file(const std::string& path, std::uintmax_t& bytes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot read " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    bytes = 0;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
        ++bytes;
    }
    std::ostringstream s;
    s << std::hex << h;
    return s.str();
}

json input_record(const std::string& path) {
    std::uintmax_t bytes = 0;
    const std::string hash = fnv1a_file(path, bytes);
    return {{"path", fs::absolute(path).string()}, {"bytes", bytes}, {"fnv1a64", hash}};
}

void write_manifest(OutputSet& outputs, const std::string& subcommand, const json& config, std::uint64_t seed,
                    const json& inputs, const json& extra = json::object()) {
    json manifest = {{"tool", "clsna"},
                     {"version", CLSNA_VERSION},
                     {"subcommand", subcommand},
                     {"config", config},
                     {"seed", seed},
                     {"inputs", inputs},
                     {"output_dir", fs::absolute(outputs.root()).string()},
                     {"outputs", outputs.files()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    std::ofstream out(outputs.root() / "manifest.json");
    if (!out) throw InvalidInput("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw InvalidInput("failed writing manifest.json");
}

/// Runs fn(0..count-1) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            try {
                fn(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

std::string replicate_dir(std::size_t r) {
    std::ostringstream s;
    s << "rep-";
    s.width(3);
    s.fill('0');
    s << r + 1;
    return s.str();
}

std::uint64_t replicate_seed(std::uint64_t seed, unsigned replicates, std::size_t r) {
    return replicates == 1 ? seed : CounterRng(seed).derive(1000 + r);
}

template <typename T>
void precise(std::ostream& out, const T& value) {
    out << value;
}

json params_json(const Params& p) {
    return {{"alpha", p.alpha},   {"delta", p.delta}, {"gamma1w", p.gamma1w}, {"gamma2w", p.gamma2w},
            {"gammab", p.gammab}, {"tau2", p.tau2},   {"sigma2", p.sigma2}};
}

Params params_from(const json& j) {
    Params p;
    p.alpha = j.at("alpha");
    p.delta = j.at("delta");
    p.gamma1w = j.at("gamma1w");
    p.gamma2w = j.at("gamma2w");
    p.gammab = j.at("gammab");
    p.tau2 = j.at("tau2");
    p.sigma2 = j.at("sigma2");
    return p;
}

// ---------------------------------------------------------------------------
// Writers shared by fit outputs

void write_trace(std::ostream& out, const PosteriorSamples& samples) {
    out.precision(17);
    out << "iteration,alpha,delta,gamma1w,gamma2w,gammab,tau2,deviance\n";
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Params& p = samples.params[k];
        out << samples.iterations[k] << ',' << p.alpha << ',' << p.delta << ',' << p.gamma1w << ',' << p.gamma2w
            << ',' << p.gammab << ',' << p.tau2 << ',' << samples.deviance[k] << '\n';
    }
}

void write_acceptance(std::ostream& out, const PosteriorSamples& samples) {
    out.precision(17);
    const Eigen::MatrixXd rates = samples.acceptance.latent_rates();
    out << "quantity,acceptance_rate\n";
    out << "alpha," << samples.acceptance.alpha_rate() << '\n';
    out << "delta," << samples.acceptance.delta_rate() << '\n';
    out << "latent_mean," << samples.acceptance.mean_latent_rate() << '\n';
    out << "latent_min," << (rates.size() ? rates.minCoeff() : 0.0) << '\n';
    out << "latent_max," << (rates.size() ? rates.maxCoeff() : 0.0) << '\n';
}

void write_dic(std::ostream& out, const DicResult& dic) {
    out.precision(17);
    out << "dic,mean_deviance,effective_parameters,deviance_at_mean\n";
    out << dic.dic << ',' << dic.mean_deviance << ',' << dic.effective_parameters << ',' << dic.deviance_at_mean
        << '\n';
}

struct FitRecord {
    std::optional<PosteriorSummary> summary;
    std::optional<double> auc;
    std::optional<double> dic;
};

FitRecord write_posterior(OutputSet& outputs, const std::string& prefix, const PosteriorSamples& samples,
                          const AdjacencySeries& y, const GroupLabels& labels) {
    FitRecord record;
    {
        auto out = outputs.open(prefix + "trace.csv");
        write_trace(out, samples);
    }
    {
        auto out = outputs.open(prefix + "acceptance.csv");
        write_acceptance(out, samples);
    }
    {
        auto out = outputs.open(prefix + "latent_mean.csv");
        write_latent_csv(out, samples.latent_mean, labels);
    }
    {
        auto out = outputs.open(prefix + "latent_distance.csv");
        write_csv(out, latent_distance_report(samples.latent_mean, labels));
    }
    write_checkpoint(outputs.path(prefix + "checkpoint.json"), samples.checkpoint);
    if (samples.size() == 0) return record;

    record.summary = posterior_summary(samples);
    {
        auto out = outputs.open(prefix + "summary.csv");
        write_csv(out, *record.summary);
    }
    const AucReport auc = in_sample_auc(samples, y);
    record.auc = auc.overall;
    {
        auto out = outputs.open(prefix + "auc.csv");
        write_csv(out, auc);
    }
    if (samples.size() >= 2) {
        const DicResult dic = compute_dic(samples, y, labels);
        record.dic = dic.dic;
        auto out = outputs.open(prefix + "dic.csv");
        write_dic(out, dic);
    }
    return record;
}

void write_pooled(OutputSet& outputs, const std::vector<FitRecord>& records) {
    if (records.size() < 2) return;
    std::vector<std::string> names;
    for (const auto& r : records) {
        if (!r.summary) return;
    }
    auto out = outputs.open("pooled.csv");
    out.precision(17);
    out << "quantity,mean_over_replicates,sd_over_replicates,replicates\n";
    auto row = [&](const std::string& name, const std::vector<double>& values) {
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        out << name << ',' << mean << ',' << std::sqrt(ss / (n - 1.0)) << ',' << values.size() << '\n';
    };
    for (const auto& p : records.front().summary->parameters) {
        std::vector<double> values;
        for (const auto& r : records) values.push_back(r.summary->parameter(p.name).mean);
        row(p.name, values);
    }
    std::vector<double> aucs, dics;
    for (const auto& r : records) {
        if (r.auc) aucs.push_back(*r.auc);
        if (r.dic) dics.push_back(*r.dic);
    }
    if (aucs.size() == records.size()) row("auc", aucs);
    if (dics.size() == records.size()) row("dic", dics);
}

ThresholdPolicy policy_from(const ConstructOptions& o) {
    if (o.policy == "dynamic-mean") return ThresholdPolicy::dynamic();
    if (o.policy == "static") return ThresholdPolicy::fixed(o.theta);
    throw InvalidInput("unknown policy '" + o.policy + "' (expected static or dynamic-mean)");
}

SimulateOptions simulate_from(const json& j) {
    SimulateOptions o;
    o.preset = j.at("preset");
    o.nodes = j.at("nodes");
    o.horizon = j.at("horizon");
    o.dimension = j.at("dimension");
    o.params = params_from(j.at("params"));
    for (const auto& e : j.at("schedule")) o.schedule.push_back({e.at("start_time"), params_from(e.at("params"))});
    o.seed = j.at("seed");
    o.replicates = j.at("replicates");
    o.jobs = j.at("jobs");
    return o;
}

FitOptions fit_from(const json& j) {
    FitOptions o;
    o.input = j.at("input");
    o.iterations = j.at("iterations");
    o.burn_in = j.at("burn_in");
    o.thin = j.at("thin");
    o.seed = j.at("seed");
    o.dimension = j.at("dimension");
    o.pair_counting = j.at("pair_counting") == "unordered" ? PairCounting::unordered : PairCounting::ordered;
    o.changepoint = j.at("changepoint").get<std::vector<std::size_t>>();
    if (!j.at("select_range").is_null()) {
        o.select_range = std::pair{j["select_range"].at(0).get<std::size_t>(), j["select_range"].at(1).get<std::size_t>()};
    }
    o.resume = j.at("resume");
    o.replicates = j.at("replicates");
    o.jobs = j.at("jobs");
    return o;
}

ConstructOptions construct_from(const json& j) {
    ConstructOptions o;
    o.input = j.at("input");
    o.policy = j.at("policy");
    o.theta = j.at("theta");
    o.persistent = j.at("persistent");
    return o;
}

}  // namespace

// ---------------------------------------------------------------------------
// Presets and parsing

std::vector<std::string> preset_names() {
    return {"flocking", "polarization", "recovery-flocking", "recovery-polarization", "changepoint"};
}

SimulateOptions preset(const std::string& name) {
    SimulateOptions o;
    o.preset = name;
    if (name == "flocking") {
        // Spread-out start, attraction everywhere: the groups contract together.
        o.nodes = 10;
        o.horizon = 50;
        o.dimension = 1;
        o.params = Params{3.0, 1.0, 0.4, 0.4, 0.4, 9.0, 0.25};
    } else if (name == "polarization") {
        // Start together, repel across groups: two clusters separate.
        o.nodes = 10;
        o.horizon = 50;
        o.dimension = 1;
        o.params = Params{3.0, 1.0, 0.4, 0.4, -0.4, 0.25, 0.25};
    } else if (name == "recovery-flocking") {
        o.params = Params{1.0, 2.0, 0.3, 0.2, 0.5, 1.0, 1.0};
    } else if (name == "recovery-polarization") {
        o.params = Params{1.0, 3.0, 0.7, 0.2, -0.5, 1.0, 1.0};
    } else if (name == "changepoint") {
        o.params = Params{1.0, 3.0, 0.6, 0.6, -0.2, 1.0, 1.0};
        Params later = o.params;
        later.gamma1w = 0.8;
        later.gamma2w = 0.2;
        later.gammab = -0.5;
        o.schedule = {{1, o.params}, {6, later}};
    } else {
        throw InvalidInput("unknown preset '" + name + "'");
    }
    return o;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw InvalidInput("expected a range a..b, got '" + text + "'");
    try {
        std::size_t used_a = 0, used_b = 0;
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        const auto lo = std::stoull(a, &used_a);
        const auto hi = std::stoull(b, &used_b);
        if (used_a != a.size() || used_b != b.size()) throw InvalidInput("malformed range '" + text + "'");
        if (hi < lo) throw InvalidInput("empty candidate range '" + text + "'");
        return {lo, hi};
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const InvalidInput*>(&e)) throw;
        throw InvalidInput("malformed range '" + text + "'");
    }
}

std::vector<std::size_t> parse_times(const std::string& text) {
    std::vector<std::size_t> times;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            times.push_back(v);
        } catch (const std::logic_error&) {
            throw InvalidInput("malformed change time '" + item + "'");
        }
    }
    if (times.empty()) throw InvalidInput("no change times given");
    return times;
}

json to_json(const SimulateOptions& o) {
    json schedule = json::array();
    for (const auto& e : o.schedule) schedule.push_back({{"start_time", e.start_time}, {"params", params_json(e.params)}});
    return {{"preset", o.preset},   {"nodes", o.nodes},     {"horizon", o.horizon},
            {"dimension", o.dimension}, {"params", params_json(o.params)}, {"schedule", schedule},
            {"seed", o.seed},       {"replicates", o.replicates}, {"jobs", o.jobs}};
}

json to_json(const FitOptions& o) {
    json range = nullptr;
    if (o.select_range) range = {o.select_range->first, o.select_range->second};
    return {{"input", o.input.empty() ? std::string() : fs::absolute(o.input).string()},
            {"iterations", o.iterations},
            {"burn_in", o.burn_in},
            {"thin", o.thin},
            {"seed", o.seed},
            {"dimension", o.dimension},
            {"pair_counting", o.pair_counting == PairCounting::ordered ? "ordered" : "unordered"},
            {"changepoint", o.changepoint},
            {"select_range", range},
            {"resume", o.resume.empty() ? std::string() : fs::absolute(o.resume).string()},
            {"replicates", o.replicates},
            {"jobs", o.jobs},
            {"priors",
             {{"alpha", "N(0, 100)"},
              {"delta", "N(0, 100)"},
              {"gamma_w", "N(0.5, 100)"},
              {"gamma_b", "N(-0.5, 100)"},
              {"tau2", "IG(2.05, 1.05 * sum ||Z_1||^2 / (N p)) at the initial positions"}}}};
}

json to_json(const ConstructOptions& o) {
    return {{"input", fs::absolute(o.input).string()},
            {"policy", o.policy},
            {"theta", o.theta},
            {"persistent", o.persistent}};
}

// ---------------------------------------------------------------------------
// Subcommands

void run_simulate(const SimulateOptions& o) {
    OutputSet outputs(prepare_directory(o.out));
    if (o.replicates < 1) throw InvalidInput("--replicates must be at least 1");
    std::vector<SimResult> results(o.replicates);
    std::vector<std::vector<std::string>> warnings(o.replicates);

    parallel_for(o.replicates, o.jobs, [&](std::size_t r) {
        SimConfig config;
        config.node_count = o.nodes;
        config.horizon = o.horizon;
        config.dimension = o.dimension;
        config.params = o.params;
        config.labels = GroupLabels::balanced(o.nodes);
        config.seed = replicate_seed(o.seed, o.replicates, r);
        config.schedule = o.schedule;
        SimResult sim = o.schedule.empty() ? simulate(config) : simulate_changepoint(config);

        const std::string prefix = o.replicates == 1 ? "" : replicate_dir(r) + "/";
        const NodeRegistry registry = default_registry(config.labels);
        const std::string adj = outputs.path(prefix + "networks.adj");
        write_adjacency_file(adj, sim.networks, registry);
        const AdjacencyFile check = read_adjacency_file(adj);
        if (!(check.networks == sim.networks) || !(check.registry.labels == config.labels)) {
            throw NumericalError("written networks failed to read back identically");
        }
        {
            auto out = outputs.open(prefix + "latent.csv");
            write_latent_csv(out, sim.latent, config.labels);
        }
        {
            auto out = outputs.open(prefix + "density.csv");
            write_csv(out, density_report(sim.networks, config.labels));
        }
        {
            auto out = outputs.open(prefix + "latent_distance.csv");
            write_csv(out, latent_distance_report(sim.latent, config.labels));
        }
        warnings[r] = sim.warnings;
        results[r] = std::move(sim);
    });

    if (o.replicates > 1) {
        auto out = outputs.open("pooled.csv");
        out.precision(17);
        out << "replicate,seed,mean_within1_density,mean_within2_density,mean_between_density,mean_overall_density\n";
        for (std::size_t r = 0; r < results.size(); ++r) {
            const DensityReport d = density_report(results[r].networks, GroupLabels::balanced(o.nodes));
            auto mean = [](const std::vector<double>& v) {
                double s = 0.0;
                for (double x : v) s += x;
                return s / static_cast<double>(v.size());
            };
            out << r + 1 << ',' << replicate_seed(o.seed, o.replicates, r) << ',' << mean(d.within1) << ','
                << mean(d.within2) << ',' << mean(d.between) << ',' << mean(d.overall) << '\n';
        }
    }

    json warning_list = json::array();
    for (std::size_t r = 0; r < warnings.size(); ++r) {
        for (const auto& w : warnings[r]) {
            std::cerr << "warning: " << (o.replicates > 1 ? replicate_dir(r) + ": " : "") << w << '\n';
            warning_list.push_back(w);
        }
    }
    json change_times = results.empty() ? json::array() : json(results.front().change_times);
    write_manifest(outputs, "simulate", to_json(o), o.seed, json::array(),
                   {{"warnings", warning_list}, {"change_times", change_times}});
}

void run_fit(const FitOptions& o) {
    if (o.input.empty()) throw InvalidInput("--input is required");
    if (o.replicates < 1) throw InvalidInput("--replicates must be at least 1");
    if (!o.changepoint.empty() && o.select_range) {
        throw InvalidInput("--changepoint and --select-changepoint are mutually exclusive");
    }
    if (!o.resume.empty() && (!o.changepoint.empty() || o.select_range || o.replicates > 1)) {
        throw InvalidInput("--resume applies to a single plain fit only");
    }
    const AdjacencyFile data = read_adjacency_file(o.input);
    const GroupLabels& labels = data.registry.labels;
    if (o.select_range) {
        if (o.select_range->first < 2 || o.select_range->second > data.networks.horizon()) {
            throw InvalidInput("candidate change times must lie in [2, T]");
        }
    }
    OutputSet outputs(prepare_directory(o.out));
    {
        auto out = outputs.open("density.csv");
        write_csv(out, density_report(data.networks, labels));
    }

    std::vector<FitRecord> records(o.replicates);
    parallel_for(o.replicates, o.jobs, [&](std::size_t r) {
        McmcConfig config;
        config.n_iterations = o.iterations;
        config.burn_in = o.burn_in;
        config.thin = o.thin;
        config.seed = replicate_seed(o.seed, o.replicates, r);
        config.dimension = o.dimension;
        config.pair_counting = o.pair_counting;
        config.store_latent_draws = false;
        const std::string prefix = o.replicates == 1 ? "" : replicate_dir(r) + "/";
        const PriorSpec priors;

        auto write_changepoint = [&](const ChangePointFit& fit) {
            for (std::size_t k = 0; k < fit.periods.size(); ++k) {
                const PeriodFit& period = fit.periods[k];
                const AdjacencySeries part = data.networks.subseries(period.first_time - 1, period.last_time);
                write_posterior(outputs, prefix + "period-" + std::to_string(k + 1) + "/", period.samples, part,
                                labels);
            }
            FitRecord rec;
            rec.dic = fit.dic;
            return rec;
        };

        if (o.select_range) {
            std::vector<std::vector<std::size_t>> candidates;
            for (std::size_t t = o.select_range->first; t <= o.select_range->second; ++t) candidates.push_back({t});
            const unsigned inner_jobs = o.replicates == 1 ? o.jobs : 1;
            const ChangePointSelection selection =
                select_changepoint(data.networks, labels, priors, config, candidates, inner_jobs);
            {
                auto out = outputs.open(prefix + "dic_table.csv");
                write_csv(out, selection.table);
            }
            records[r] = write_changepoint(selection.best);
        } else if (!o.changepoint.empty()) {
            const ChangePointFit fit = fit_changepoint(data.networks, labels, priors, config, o.changepoint);
            {
                auto out = outputs.open(prefix + "dic_table.csv");
                write_csv(out, std::vector<DicRow>{{fit.change_times, fit.dic}});
            }
            records[r] = write_changepoint(fit);
        } else {
            RunOptions run;
            if (!o.resume.empty()) run.resume = read_checkpoint(o.resume);
            const PosteriorSamples samples = run_mcmc(data.networks, labels, priors, config, run);
            records[r] = write_posterior(outputs, prefix, samples, data.networks, labels);
        }
    });
    if (o.changepoint.empty() && !o.select_range) write_pooled(outputs, records);

    json inputs = json::array({input_record(o.input)});
    if (!o.resume.empty()) inputs.push_back(input_record(o.resume));
    write_manifest(outputs, "fit", to_json(o), o.seed, inputs);
}

void run_construct(const ConstructOptions& o) {
    if (o.input.empty()) throw InvalidInput("--input is required");
    const ThresholdPolicy policy = policy_from(o);
    InteractionCounts counts = read_counts_file(o.input);
    OutputSet outputs(prepare_directory(o.out));
    if (o.persistent) {
        const InteractionCounts& source = counts;
        counts = restrict_to_persistent_nodes(
            source, [&](std::size_t node, std::size_t t) { return has_interaction(source, node, t); });
    }
    const BinarizedSeries binary = binarize(counts, policy);
    std::vector<std::string> comments;
    {
        std::ostringstream s;
        s << "policy " << o.policy;
        if (policy.kind == ThresholdPolicy::Kind::static_threshold) s << " theta=" << o.theta;
        comments.push_back(s.str());
    }
    for (std::size_t t = 0; t < binary.thresholds.size(); ++t) {
        std::ostringstream s;
        s.precision(17);
        s << "threshold t=" << t + 1 << " value=" << binary.thresholds[t];
        comments.push_back(s.str());
    }
    const std::string adj = outputs.path("networks.adj");
    write_adjacency_file(adj, binary.networks, counts.registry(), comments);
    const AdjacencyFile check = read_adjacency_file(adj);
    if (!(check.networks == binary.networks)) throw NumericalError("written networks failed to read back identically");
    {
        auto out = outputs.open("thresholds.csv");
        out.precision(17);
        out << "time,threshold\n";
        for (std::size_t t = 0; t < binary.thresholds.size(); ++t) out << t + 1 << ',' << binary.thresholds[t] << '\n';
    }
    {
        auto out = outputs.open("density.csv");
        write_csv(out, density_report(binary.networks, counts.registry().labels));
    }
    write_manifest(outputs, "construct", to_json(o), 0, json::array({input_record(o.input)}),
                   {{"thresholds", binary.thresholds}, {"nodes_kept", counts.node_count()}});
}

ReplayResult replay(const std::string& run_dir, const std::string& replay_dir) {
    const fs::path manifest_path = fs::path(run_dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw InvalidInput("cannot read " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed manifest: ") + e.what());
    }
    for (const auto& input : manifest.at("inputs")) {
        std::uintmax_t bytes = 0;
        const std::string hash = fnv1a_file(input.at("path"), bytes);
        if (hash != input.at("fnv1a64").get<std::string>() || bytes != input.at("bytes").get<std::uintmax_t>()) {
            throw InvalidInput("input changed since the run: " + input.at("path").get<std::string>());
        }
    }
    if (fs::absolute(replay_dir) == fs::absolute(run_dir)) throw InvalidInput("replay directory must differ from the run");

    const std::string subcommand = manifest.at("subcommand");
    const json& config = manifest.at("config");
    if (subcommand == "simulate") {
        SimulateOptions o = simulate_from(config);
        o.out = replay_dir;
        run_simulate(o);
    } else if (subcommand == "fit") {
        FitOptions o = fit_from(config);
        o.out = replay_dir;
        run_fit(o);
    } else if (subcommand == "construct") {
        ConstructOptions o = construct_from(config);
        o.out = replay_dir;
        run_construct(o);
    } else {
        throw InvalidInput("manifest names an unknown subcommand '" + subcommand + "'");
    }

    ReplayResult result;
    for (const auto& file : manifest.at("outputs")) {
        const std::string name = file;
        std::ifstream a(fs::path(run_dir) / name, std::ios::binary), b(fs::path(replay_dir) / name, std::ios::binary);
        std::ostringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        if (a && b && sa.str() == sb.str()) {
            result.identical.push_back(name);
        } else {
            result.differing.push_back(name);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"Two-group coevolving latent space network toolkit"};
    app.set_version_flag("--version", std::string(CLSNA_VERSION));
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate network time series");
    std::string sim_preset;
    std::optional<std::size_t> nodes, horizon, change_at;
    std::optional<int> dimension;
    std::optional<double> alpha, delta, g1, g2, gb, tau, sigma, after_g1, after_g2, after_gb;
    SimulateOptions sim_opts;
    sim->add_option("--preset", sim_preset, "Named design")->check(CLI::IsMember(preset_names()));
    sim->add_option("--nodes", nodes, "Number of nodes");
    sim->add_option("--horizon", horizon, "Number of time steps");
    sim->add_option("--dim", dimension, "Latent dimension");
    sim->add_option("--alpha", alpha);
    sim->add_option("--delta", delta);
    sim->add_option("--gamma1w", g1);
    sim->add_option("--gamma2w", g2);
    sim->add_option("--gammab", gb);
    sim->add_option("--tau", tau, "Initial standard deviation");
    sim->add_option("--sigma", sigma, "Transition standard deviation");
    sim->add_option("--change-at", change_at, "Time at which the gammas switch to the --after-* values");
    sim->add_option("--after-gamma1w", after_g1);
    sim->add_option("--after-gamma2w", after_g2);
    sim->add_option("--after-gammab", after_gb);
    sim->add_option("--seed", sim_opts.seed);
    sim->add_option("--replicates", sim_opts.replicates)->check(CLI::PositiveNumber);
    sim->add_option("--jobs", sim_opts.jobs)->check(CLI::PositiveNumber);
    sim_opts.out = "clsna-simulate";
    sim->add_option("--out", sim_opts.out, "Output directory")->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit the model by MCMC");
    FitOptions fit_opts;
    std::string changepoint_text, select_text, counting = "ordered";
    fit->add_option("--input", fit_opts.input, "Adjacency file")->required();
    fit->add_option("--iterations", fit_opts.iterations);
    fit->add_option("--burn-in", fit_opts.burn_in);
    fit->add_option("--thin", fit_opts.thin)->check(CLI::PositiveNumber);
    fit->add_option("--seed", fit_opts.seed);
    fit->add_option("--dim", fit_opts.dimension)->check(CLI::PositiveNumber);
    fit->add_option("--pair-counting", counting, "ordered (product over i != j) or unordered")
        ->check(CLI::IsMember({"ordered", "unordered"}));
    fit->add_option("--changepoint", changepoint_text, "Change times t1[,t2...]");
    fit->add_option("--select-changepoint", select_text, "Candidate single change times a..b");
    fit->add_option("--resume", fit_opts.resume, "Continue from a checkpoint");
    fit->add_option("--replicates", fit_opts.replicates, "Independent chains")->check(CLI::PositiveNumber);
    fit->add_option("--jobs", fit_opts.jobs)->check(CLI::PositiveNumber);
    fit_opts.out = "clsna-fit";
    fit->add_option("--out", fit_opts.out, "Output directory")->capture_default_str();

    // construct
    auto* con = app.add_subcommand("construct", "Binarize interaction counts");
    ConstructOptions con_opts;
    con->add_option("--input", con_opts.input, "Counts file")->required();
    con->add_option("--policy", con_opts.policy)->check(CLI::IsMember({"static", "dynamic-mean"}));
    con->add_option("--theta", con_opts.theta, "Static threshold")->check(CLI::NonNegativeNumber);
    con->add_flag("--persistent", con_opts.persistent, "Keep only nodes with interactions at every time");
    con_opts.out = "clsna-construct";
    con->add_option("--out", con_opts.out, "Output directory")->capture_default_str();

    // replay
    auto* rep = app.add_subcommand("replay", "Re-run a manifest and compare outputs");
    std::string run_dir, replay_dir;
    rep->add_option("--run", run_dir, "Directory holding manifest.json")->required();
    rep->add_option("--out", replay_dir, "Directory for the re-run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) {
            SimulateOptions o = sim_preset.empty() ? SimulateOptions{} : preset(sim_preset);
            o.seed = sim_opts.seed;
            o.replicates = sim_opts.replicates;
            o.jobs = sim_opts.jobs;
            o.out = sim_opts.out;
            if (nodes) o.nodes = *nodes;
            if (horizon) o.horizon = *horizon;
            if (dimension) o.dimension = *dimension;
            auto apply = [&](Params& p) {
                if (alpha) p.alpha = *alpha;
                if (delta) p.delta = *delta;
                if (tau) p.tau2 = *tau * *tau;
                if (sigma) p.sigma2 = *sigma * *sigma;
            };
            apply(o.params);
            if (g1) o.params.gamma1w = *g1;
            if (g2) o.params.gamma2w = *g2;
            if (gb) o.params.gammab = *gb;
            if (!o.schedule.empty()) {
                apply(o.schedule[0].params);
                apply(o.schedule[1].params);
                if (g1) o.schedule[0].params.gamma1w = *g1;
                if (g2) o.schedule[0].params.gamma2w = *g2;
                if (gb) o.schedule[0].params.gammab = *gb;
            }
            if (change_at) {
                Params later = o.params;
                later.gamma1w = after_g1.value_or(o.params.gamma1w);
                later.gamma2w = after_g2.value_or(o.params.gamma2w);
                later.gammab = after_gb.value_or(o.params.gammab);
                o.schedule = {{1, o.params}, {*change_at, later}};
            } else if (!o.schedule.empty()) {
                if (after_g1) o.schedule[1].params.gamma1w = *after_g1;
                if (after_g2) o.schedule[1].params.gamma2w = *after_g2;
                if (after_gb) o.schedule[1].params.gammab = *after_gb;
            } else if (after_g1 || after_g2 || after_gb) {
                throw InvalidInput("--after-* values need --change-at");
            }
            if (o.nodes < 4) throw InvalidInput("--nodes must be at least 4 so both groups have two members");
            run_simulate(o);
        } else if (*fit) {
            FitOptions o = fit_opts;
            o.pair_counting = counting == "unordered" ? PairCounting::unordered : PairCounting::ordered;
            if (!changepoint_text.empty()) o.changepoint = parse_times(changepoint_text);
            if (!select_text.empty()) o.select_range = parse_range(select_text);
            run_fit(o);
        } else if (*con) {
            run_construct(con_opts);
        } else if (*rep) {
            const ReplayResult result = replay(run_dir, replay_dir);
            for (const auto& f : result.differing) std::cout << "differs: " << f << '\n';
            std::cout << (result.ok() ? "identical" : "not identical") << ": " << result.identical.size() << " of "
                      << result.identical.size() + result.differing.size() << " outputs match\n";
            return result.ok() ? 0 : 1;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace clsna::cli
