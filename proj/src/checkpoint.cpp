#include "clsna/mcmc.hpp"

#include <json.hpp>

#include <fstream>

namespace clsna {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows) throw InvalidInput("checkpoint: matrix row count mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = data.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw InvalidInput("checkpoint: matrix column count mismatch");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

json params_to_json(const Params& p) {
    return {{"alpha", p.alpha},     {"delta", p.delta},   {"gamma1w", p.gamma1w}, {"gamma2w", p.gamma2w},
            {"gammab", p.gammab},   {"tau2", p.tau2},     {"sigma2", p.sigma2}};
}

Params params_from_json(const json& j) {
    Params p;
    p.alpha = j.at("alpha").get<double>();
    p.delta = j.at("delta").get<double>();
    p.gamma1w = j.at("gamma1w").get<double>();
    p.gamma2w = j.at("gamma2w").get<double>();
    p.gammab = j.at("gammab").get<double>();
    p.tau2 = j.at("tau2").get<double>();
    p.sigma2 = j.at("sigma2").get<double>();
    return p;
}

json normal_to_json(const NormalPrior& p) { return {{"mean", p.mean}, {"variance", p.variance}}; }

NormalPrior normal_from_json(const json& j) {
    return {j.at("mean").get<double>(), j.at("variance").get<double>()};
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& c) {
    json latent = json::array();
    for (const auto& z : c.state.latent) latent.push_back(matrix_to_json(z));
    json priors = {{"alpha", normal_to_json(c.priors.alpha)},
                   {"delta", normal_to_json(c.priors.delta)},
                   {"gamma_w", normal_to_json(c.priors.gamma_w)},
                   {"gamma_b", normal_to_json(c.priors.gamma_b)}};
    if (c.priors.tau2) priors["tau2"] = {{"shape", c.priors.tau2->shape}, {"scale", c.priors.tau2->scale}};
    const json doc = {{"format", "clsna-checkpoint v1"},
                      {"iteration", c.iteration},
                      {"params", params_to_json(c.state.params)},
                      {"latent", std::move(latent)},
                      {"tuning",
                       {{"alpha", c.tuning.alpha}, {"delta", c.tuning.delta}, {"latent", matrix_to_json(c.tuning.latent)}}},
                      {"rng_state", c.rng_state},
                      {"priors", std::move(priors)},
                      {"reference", matrix_to_json(c.reference)}};
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open checkpoint for writing: " + path);
    out << doc.dump(1) << '\n';
    if (!out) throw InvalidInput("failed writing checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open checkpoint: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "clsna-checkpoint v1") {
            throw InvalidInput("unsupported checkpoint format");
        }
        Checkpoint c;
        c.iteration = doc.at("iteration").get<std::size_t>();
        c.state.params = params_from_json(doc.at("params"));
        for (const json& z : doc.at("latent")) c.state.latent.push_back(matrix_from_json(z));
        const json& tuning = doc.at("tuning");
        c.tuning.alpha = tuning.at("alpha").get<double>();
        c.tuning.delta = tuning.at("delta").get<double>();
        c.tuning.latent = matrix_from_json(tuning.at("latent"));
        c.rng_state = doc.at("rng_state").get<std::string>();
        const json& priors = doc.at("priors");
        c.priors.alpha = normal_from_json(priors.at("alpha"));
        c.priors.delta = normal_from_json(priors.at("delta"));
        c.priors.gamma_w = normal_from_json(priors.at("gamma_w"));
        c.priors.gamma_b = normal_from_json(priors.at("gamma_b"));
        if (priors.contains("tau2")) {
            c.priors.tau2 = InverseGammaPrior{priors["tau2"].at("shape").get<double>(),
                                              priors["tau2"].at("scale").get<double>()};
        }
        c.reference = matrix_from_json(doc.at("reference"));
        return c;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace clsna
