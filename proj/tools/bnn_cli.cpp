#include "bnn/checkpoint.hpp"
#include "bnn/errors.hpp"
#include "bnn/experiment.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Options {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string point;
    std::size_t resolution = 0;
};

bnn::ExperimentConfig make_config(const Options& o) {
    bnn::ExperimentConfig cfg = o.config.empty() ? bnn::ExperimentConfig::standard() : bnn::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    return cfg;
}

fs::path out_dir(const Options& o) {
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw bnn::IoError("cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw bnn::IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw bnn::IoError("failed writing " + path.string());
}

std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Eigen::VectorXd parse_point(const std::string& text) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        double v = 0.0;
        const auto res = std::from_chars(text.data() + start, text.data() + end, v);
        if (res.ec != std::errc() || res.ptr != text.data() + end) {
            throw bnn::ConfigError("cannot parse point '" + text + "'");
        }
        values.push_back(v);
        start = end + 1;
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int cmd_gen_data(const Options& o) {
    const bnn::ExperimentConfig cfg = make_config(o);
    const fs::path path = out_dir(o) / "data.csv";
    bnn::write_dataset_csv(bnn::gen_data(cfg), cfg.network.classes(), path);
    std::cout << path.string() << '\n';
    return 0;
}

int cmd_train(const Options& o) {
    const bnn::ExperimentConfig cfg = make_config(o);
    const bnn::Dataset data = bnn::read_dataset_csv(o.data, cfg.network.classes());
    const bnn::TrainResult trained = bnn::train(cfg.network, data, cfg.update);
    const fs::path dir = out_dir(o);
    bnn::save_checkpoint(trained.state, dir / "checkpoint.json");
    std::cout << "instances=" << data.size() << " applied=" << trained.report.applied
              << " skipped=" << trained.report.skipped << " accuracy=" << number(bnn::accuracy(trained.state, data))
              << '\n';
    return 0;
}

int cmd_predict(const Options& o) {
    const bnn::NetworkState net = bnn::load_checkpoint(o.checkpoint);
    std::vector<Eigen::VectorXd> points;
    if (!o.point.empty()) points.push_back(parse_point(o.point));
    if (!o.data.empty()) {
        for (const bnn::Sample& s : bnn::read_dataset_csv(o.data, net.classes()).rows) points.push_back(s.x);
    }
    if (points.empty()) throw bnn::ConfigError("predict needs --x or --data");

    std::string text;
    for (std::size_t i = 1; i <= net.input_width; ++i) text += "x" + std::to_string(i) + ",";
    for (std::size_t i = 1; i <= net.classes(); ++i) text += "p" + std::to_string(i) + ",";
    text += "label\n";
    for (const Eigen::VectorXd& x : points) {
        const bnn::Prediction p = bnn::predict(net, x);
        for (Eigen::Index i = 0; i < x.size(); ++i) text += number(x[i]) + ",";
        for (Eigen::Index i = 0; i < p.probabilities.size(); ++i) text += number(p.probabilities[i]) + ",";
        text += std::to_string(p.label + 1) + "\n";
    }
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_file(out_dir(o) / "predictions.csv", text);
    }
    return 0;
}

int cmd_grid(const Options& o) {
    const bnn::NetworkState net = bnn::load_checkpoint(o.checkpoint);
    const bnn::ExperimentConfig cfg = make_config(o);
    const std::size_t res = o.resolution ? o.resolution : cfg.grid_resolution;
    const fs::path path = out_dir(o) / "grid.csv";
    write_file(path, bnn::grid_csv(net, cfg.lo, cfg.hi, res));
    std::cout << path.string() << '\n';
    return 0;
}

int cmd_experiment(const Options& o) {
    const bnn::ExperimentConfig cfg = make_config(o);
    const bnn::ExperimentResult result = bnn::run_experiment(cfg);
    bnn::write_experiment(cfg, result, out_dir(o));
    std::cout << "accuracy=" << number(result.train_accuracy) << " applied=" << result.report.applied
              << " skipped=" << result.report.skipped << " snapshots=" << result.grids.size() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form Bayesian training and prediction for multi-class networks"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Data seed (overrides the config)");
        sub->add_option("--config", o.config, "Experiment config JSON");
        sub->add_option("--out", o.out, "Output directory");
    };
    CLI::App* gen = app.add_subcommand("gen-data", "Sample the wedge dataset");
    add_common(gen);
    CLI::App* tr = app.add_subcommand("train", "Train sequentially on a dataset CSV");
    add_common(tr);
    tr->add_option("--data", o.data, "Dataset CSV (x1,x2,label)")->required();
    CLI::App* pr = app.add_subcommand("predict", "Predict class probabilities from a checkpoint");
    pr->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
    pr->add_option("--x", o.point, "Comma-separated input point");
    pr->add_option("--data", o.data, "Dataset CSV of input points");
    pr->add_option("--out", o.out, "Output directory (default: stdout)");
    CLI::App* gr = app.add_subcommand("grid", "Export the predictive grid of a checkpoint");
    add_common(gr);
    gr->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
    gr->add_option("--resolution", o.resolution, "Points per axis")->check(CLI::Range(2, 10000));
    CLI::App* ex = app.add_subcommand("experiment", "Generate data, train and export snapshot grids");
    add_common(ex);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[" << bnn::to_string(bnn::ErrorCategory::config) << "]: " << e.what() << '\n';
        return bnn::exit_code(bnn::ErrorCategory::config);
    }

    try {
        if (gen->parsed()) return cmd_gen_data(o);
        if (tr->parsed()) return cmd_train(o);
        if (pr->parsed()) return cmd_predict(o);
        if (gr->parsed()) return cmd_grid(o);
        return cmd_experiment(o);
    } catch (const bnn::Error& e) {
        std::cerr << "error[" << bnn::to_string(e.category()) << "]: " << e.what() << '\n';
        return bnn::exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 1;
    }
}
