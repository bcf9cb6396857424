#include "bnn/experiment.hpp"

#include "bnn/checkpoint.hpp"
#include "bnn/errors.hpp"
#include "serialize.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace bnn {

using detail::json;

namespace {

const char* observation_name(ObservationModel m) {
    return m == ObservationModel::categorical ? "categorical" : "softmax_output";
}

ObservationModel observation_from_name(const std::string& s) {
    if (s == "categorical") return ObservationModel::categorical;
    if (s == "softmax_output") return ObservationModel::softmax_output;
    throw ConfigError("unknown observation model '" + s + "'");
}

void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

std::string step_name(std::size_t k) {
    std::string digits = std::to_string(k);
    if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
    return "grid_step_" + digits + ".csv";
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("sampling bounds need lo < hi");
    if (grid_resolution < 2) throw ConfigError("grid resolution must be at least 2");
    for (std::size_t s : snapshots) {
        if (s > m) throw ConfigError("snapshot step " + std::to_string(s) + " exceeds m = " + std::to_string(m));
    }
    if (!(update.variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
    network.validate();
    if (network.input_width != 2 || network.classes() != 3) {
        throw ConfigError("the wedge experiment needs two inputs and three classes");
    }
}

ExperimentConfig ExperimentConfig::standard() {
    ExperimentConfig cfg;
    NetworkState& net = cfg.network;
    net.input_width = 2;
    net.layers = {LayerSpec{3, Activation::softmax(), false}};
    const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
    net.posteriors = {{WeightPosterior{Eigen::Vector2d(1.0, 0.0), eye}, WeightPosterior{Eigen::Vector2d(0.0, 1.0), eye},
                       WeightPosterior{Eigen::Vector2d(1.0, 1.0), eye}}};
    net.probit = ProbitConfig::equicorrelated(3);
    return cfg;
}

std::string config_to_string(const ExperimentConfig& cfg) {
    json doc{{"m", cfg.m},
             {"bounds", {cfg.lo, cfg.hi}},
             {"seed", cfg.seed},
             {"snapshots", cfg.snapshots},
             {"grid_resolution", cfg.grid_resolution},
             {"observation", observation_name(cfg.update.observation)},
             {"variance_floor", cfg.update.variance_floor},
             {"jitter",
              {{"initial", cfg.update.jitter.initial},
               {"maximum", cfg.update.jitter.maximum},
               {"factor", cfg.update.jitter.factor}}},
             {"network", detail::network_to_json(cfg.network)}};
    return doc.dump(1) + "\n";
}

ExperimentConfig config_from_string(const std::string& text) {
    ExperimentConfig cfg = ExperimentConfig::standard();
    try {
        const json doc = json::parse(text);
        if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
        cfg.m = doc.value("m", cfg.m);
        if (doc.contains("bounds")) {
            const auto b = doc.at("bounds").get<std::vector<double>>();
            if (b.size() != 2) throw ConfigError("bounds must be [lo, hi]");
            cfg.lo = b[0];
            cfg.hi = b[1];
        }
        cfg.seed = doc.value("seed", cfg.seed);
        if (doc.contains("snapshots")) cfg.snapshots = doc.at("snapshots").get<std::vector<std::size_t>>();
        cfg.grid_resolution = doc.value("grid_resolution", cfg.grid_resolution);
        if (doc.contains("observation")) cfg.update.observation = observation_from_name(doc.at("observation").get<std::string>());
        cfg.update.variance_floor = doc.value("variance_floor", cfg.update.variance_floor);
        if (doc.contains("jitter")) {
            const json& j = doc.at("jitter");
            cfg.update.jitter.initial = j.value("initial", cfg.update.jitter.initial);
            cfg.update.jitter.maximum = j.value("maximum", cfg.update.jitter.maximum);
            cfg.update.jitter.factor = j.value("factor", cfg.update.jitter.factor);
        }
        if (doc.contains("network")) cfg.network = detail::network_from_json(doc.at("network"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_string(ss.str());
}

double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Dataset gen_data(const ExperimentConfig& cfg) {
    if (!(cfg.lo < cfg.hi) || !std::isfinite(cfg.lo) || !std::isfinite(cfg.hi)) {
        throw ConfigError("sampling bounds need lo < hi");
    }
    std::mt19937_64 engine(cfg.seed);
    Dataset data;
    data.rows.reserve(cfg.m);
    const double width = cfg.hi - cfg.lo;
    for (std::size_t k = 0; k < cfg.m; ++k) {
        const double x1 = cfg.lo + width * unit_double(engine());
        const double x2 = cfg.lo + width * unit_double(engine());
        data.rows.push_back({Eigen::Vector2d(x1, x2), encode_label(wedge_class(x1, x2), 3)});
    }
    return data;
}

std::string grid_csv(const NetworkState& net, double lo, double hi, std::size_t resolution) {
    if (resolution < 2) throw ConfigError("grid resolution must be at least 2");
    if (net.input_width != 2) throw ConfigError("grids need a two-input network");
    const std::size_t k = net.classes() - 1;
    std::string out = "x1,x2";
    for (std::size_t i = 1; i <= k; ++i) out += ",mu_y" + std::to_string(i);
    for (std::size_t i = 1; i <= k; ++i) out += ",var_y" + std::to_string(i);
    out += '\n';
    const double step = (hi - lo) / static_cast<double>(resolution - 1);
    for (std::size_t a = 0; a < resolution; ++a) {
        const double x1 = a + 1 == resolution ? hi : lo + step * static_cast<double>(a);
        for (std::size_t b = 0; b < resolution; ++b) {
            const double x2 = b + 1 == resolution ? hi : lo + step * static_cast<double>(b);
            const Prediction p = predict(net, Eigen::Vector2d(x1, x2));
            append_number(out, x1);
            out += ',';
            append_number(out, x2);
            for (std::size_t i = 0; i < k; ++i) {
                out += ',';
                append_number(out, p.probabilities[static_cast<Eigen::Index>(i)]);
            }
            for (std::size_t i = 0; i < k; ++i) {
                out += ',';
                const auto ii = static_cast<Eigen::Index>(i);
                append_number(out, p.covariance(ii, ii));
            }
            out += '\n';
        }
    }
    return out;
}

double accuracy(const NetworkState& net, const Dataset& data) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (const Sample& s : data.rows) hits += predict(net, s.x).label == decode_label(s.y) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.data = gen_data(cfg);
    const std::set<std::size_t> steps(cfg.snapshots.begin(), cfg.snapshots.end());
    if (steps.count(0)) result.grids[0] = grid_csv(cfg.network, cfg.lo, cfg.hi, cfg.grid_resolution);

    NetworkState previous = cfg.network;
    double worst = 0.0;
    auto observer = [&](std::size_t k, const NetworkState& state) {
        for (std::size_t l = 0; l < state.posteriors.size(); ++l) {
            for (std::size_t j = 0; j < state.posteriors[l].size(); ++j) {
                const Eigen::VectorXd grow =
                    state.posteriors[l][j].cov.diagonal() - previous.posteriors[l][j].cov.diagonal();
                worst = std::max(worst, grow.maxCoeff());
            }
        }
        previous = state;
        if (steps.count(k)) result.grids[k] = grid_csv(state, cfg.lo, cfg.hi, cfg.grid_resolution);
    };
    TrainResult trained = train(cfg.network, result.data, cfg.update, observer);
    result.final_state = std::move(trained.state);
    result.report = std::move(trained.report);
    result.train_accuracy = accuracy(result.final_state, result.data);
    result.max_variance_increase = worst;
    return result;
}

std::string report_to_string(const ExperimentResult& result) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::vector<std::size_t> snapshot_steps;
    for (const auto& [k, grid] : result.grids) snapshot_steps.push_back(k);
    json doc{{"header", {{"generated_at", stamp}}},
             {"instances", result.data.size()},
             {"train_accuracy", result.train_accuracy},
             {"applied", result.report.applied},
             {"skipped", result.report.skipped},
             {"skipped_indices", result.report.skipped_indices},
             {"skip_reasons", result.report.skip_reasons},
             {"jitter_events", result.report.jitter_events},
             {"clamp_events", result.report.clamp_events},
             {"rescale_events", result.report.rescale_events},
             {"max_variance_increase", result.max_variance_increase},
             {"snapshots", snapshot_steps}};
    return doc.dump(1) + "\n";
}

void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    write_dataset_csv(result.data, 3, out_dir / "data.csv");
    for (const auto& [k, grid] : result.grids) write_text(out_dir / step_name(k), grid);
    save_checkpoint(result.final_state, out_dir / "checkpoint.json");
    write_text(out_dir / "config.json", config_to_string(cfg));
    write_text(out_dir / "report.json", report_to_string(result));
}

}  // namespace bnn
