#include "serialize.hpp"

#include "bnn/errors.hpp"

#include <string>

namespace bnn::detail {

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(std::string(what) + " must hold numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::VectorXd row = vector_from_json(j[static_cast<std::size_t>(r)], what);
        if (row.size() != cols) throw ConfigError(std::string(what) + " has ragged rows");
        m.row(r) = row.transpose();
    }
    return m;
}

json probit_to_json(const ProbitConfig& cfg) {
    return json{{"lambda", cfg.lambda},
                {"rho", matrix_to_json(cfg.rho)},
                {"mvn",
                 {{"seed", cfg.mvn.seed},
                  {"abs_tol_low_dim", cfg.mvn.abs_tol_low_dim},
                  {"abs_tol_high_dim", cfg.mvn.abs_tol_high_dim},
                  {"shifts", cfg.mvn.shifts},
                  {"min_points", cfg.mvn.min_points},
                  {"max_points", cfg.mvn.max_points}}}};
}

ProbitConfig probit_from_json(const json& j) {
    ProbitConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.rho = matrix_from_json(j.at("rho"), "probit rho");
    if (j.contains("mvn")) {
        const json& m = j.at("mvn");
        cfg.mvn.seed = m.value("seed", cfg.mvn.seed);
        cfg.mvn.abs_tol_low_dim = m.value("abs_tol_low_dim", cfg.mvn.abs_tol_low_dim);
        cfg.mvn.abs_tol_high_dim = m.value("abs_tol_high_dim", cfg.mvn.abs_tol_high_dim);
        cfg.mvn.shifts = m.value("shifts", cfg.mvn.shifts);
        cfg.mvn.min_points = m.value("min_points", cfg.mvn.min_points);
        cfg.mvn.max_points = m.value("max_points", cfg.mvn.max_points);
    }
    if (cfg.mvn.shifts < 2 || cfg.mvn.min_points < 1 || cfg.mvn.max_points < cfg.mvn.min_points) {
        throw ConfigError("invalid mvn integration settings");
    }
    cfg.validate();
    return cfg;
}

json network_to_json(const NetworkState& net) {
    json layers = json::array();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LayerSpec& spec = net.layers[l];
        json layer{{"width", spec.width}, {"bias", spec.bias}};
        if (spec.activation.kind == Activation::Kind::softmax) {
            layer["activation"] = "softmax";
        } else {
            layer["activation"] = "pwl";
            layer["alpha"] = spec.activation.pwl.alpha;
            layer["beta"] = spec.activation.pwl.beta;
        }
        json weights = json::array();
        for (const WeightPosterior& w : net.posteriors[l]) {
            weights.push_back({{"mean", vector_to_json(w.mean)}, {"cov", matrix_to_json(w.cov)}});
        }
        layer["weights"] = std::move(weights);
        layers.push_back(std::move(layer));
    }
    return json{{"input_width", net.input_width},
                {"step_count", net.step_count},
                {"probit", probit_to_json(net.probit)},
                {"layers", std::move(layers)}};
}

NetworkState network_from_json(const json& j) {
    NetworkState net;
    net.input_width = j.at("input_width").get<std::size_t>();
    net.step_count = j.value("step_count", std::size_t{0});
    for (const json& layer : j.at("layers")) {
        LayerSpec spec;
        spec.width = layer.at("width").get<std::size_t>();
        spec.bias = layer.value("bias", true);
        const std::string act = layer.at("activation").get<std::string>();
        if (act == "softmax") {
            spec.activation = Activation::softmax();
        } else if (act == "pwl") {
            spec.activation = Activation::piecewise({layer.value("alpha", 0.0), layer.value("beta", 1.0)});
        } else {
            throw ConfigError("unknown activation '" + act + "'");
        }
        std::vector<WeightPosterior> weights;
        for (const json& w : layer.at("weights")) {
            weights.push_back({vector_from_json(w.at("mean"), "weight mean"), matrix_from_json(w.at("cov"), "weight cov")});
        }
        net.layers.push_back(spec);
        net.posteriors.push_back(std::move(weights));
    }
    net.probit = j.contains("probit") ? probit_from_json(j.at("probit"))
                                      : ProbitConfig::equicorrelated(net.layers.empty() ? 2 : net.layers.back().width);
    net.validate();
    return net;
}

}  // namespace bnn::detail
