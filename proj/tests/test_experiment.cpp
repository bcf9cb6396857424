#include "bnn/checkpoint.hpp"
#include "bnn/dataset.hpp"
#include "bnn/errors.hpp"
#include "bnn/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bnn_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string& header) {
    std::istringstream in(text);
    std::getline(in, header);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

double column_std(const std::vector<std::vector<double>>& rows, std::size_t col) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : rows) {
        s += r[col];
        s2 += r[col] * r[col];
    }
    const double n = static_cast<double>(rows.size());
    return std::sqrt(std::max(0.0, s2 / n - (s / n) * (s / n)));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Wedge, Labels) {
    EXPECT_EQ(wedge_class(0.0, 1.0), 0u);
    EXPECT_EQ(wedge_class(0.0, -1.0), 1u);
    EXPECT_EQ(wedge_class(1.0, 0.0), 2u);
    EXPECT_EQ(wedge_class(-1.0, 0.0), 2u);
    EXPECT_EQ(wedge_class(1.0, 1.0), 2u);
    EXPECT_EQ(wedge_class(0.0, 0.0), 2u);
}

TEST(Labels, EncodeDecode) {
    EXPECT_EQ(encode_label(0, 3), Eigen::Vector2d(1, 0));
    EXPECT_EQ(encode_label(2, 3), Eigen::Vector2d(0, 0));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(decode_label(encode_label(c, 4)), c);
    EXPECT_THROW((void)encode_label(3, 3), ConfigError);
}

TEST(GenData, ReproducibleAndInBounds) {
    const ExperimentConfig cfg = ExperimentConfig::standard();
    const Dataset a = gen_data(cfg);
    const Dataset b = gen_data(cfg);
    ASSERT_EQ(a.size(), 25u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.rows[i].x, b.rows[i].x);
        EXPECT_EQ(a.rows[i].y, b.rows[i].y);
        EXPECT_GE(a.rows[i].x.minCoeff(), -2.0);
        EXPECT_LE(a.rows[i].x.maxCoeff(), 2.0);
        EXPECT_EQ(decode_label(a.rows[i].y), wedge_class(a.rows[i].x[0], a.rows[i].x[1]));
    }
    ExperimentConfig other = cfg;
    other.seed = 43;
    EXPECT_NE(gen_data(other).rows[0].x, a.rows[0].x);
}

TEST(UnitDouble, Range) {
    EXPECT_EQ(unit_double(0), 0.0);
    EXPECT_LT(unit_double(~0ULL), 1.0);
    EXPECT_EQ(unit_double(1ULL << 63), 0.5);
}

TEST(Grid, ShapeAndFiniteness) {
    const std::string csv = grid_csv(ExperimentConfig::standard().network, -2.0, 2.0, 5);
    std::string header;
    const auto rows = parse_csv(csv, header);
    EXPECT_EQ(header, "x1,x2,mu_y1,mu_y2,var_y1,var_y2");
    ASSERT_EQ(rows.size(), 25u);
    EXPECT_EQ(rows.front()[0], -2.0);
    EXPECT_EQ(rows.back()[0], 2.0);
    EXPECT_EQ(rows[1][1], -1.0);
    for (const auto& r : rows) {
        ASSERT_EQ(r.size(), 6u);
        for (double v : r) EXPECT_TRUE(std::isfinite(v));
    }
}

TEST(Experiment, SnapshotZeroWithoutData) {
    ExperimentConfig cfg = ExperimentConfig::standard();
    cfg.m = 0;
    cfg.snapshots = {0};
    const ExperimentResult r = run_experiment(cfg);
    EXPECT_EQ(r.grids.size(), 1u);
    EXPECT_EQ(r.grids.at(0), grid_csv(cfg.network, cfg.lo, cfg.hi, cfg.grid_resolution));
}

TEST(Experiment, SnapshotBeyondDataIsRejected) {
    ExperimentConfig cfg = ExperimentConfig::standard();
    cfg.snapshots = {0, 26};
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Experiment, PredictionsSharpenAfterTraining) {
    const ExperimentResult r = run_experiment(ExperimentConfig::standard());
    std::string header;
    const auto first = parse_csv(r.grids.at(0), header);
    const auto last = parse_csv(r.grids.at(25), header);
    EXPECT_LT(column_std(first, 2), column_std(last, 2));
    EXPECT_EQ(r.report.applied + r.report.skipped, 25u);
    EXPECT_LE(r.max_variance_increase, 1e-9);
}

TEST(Checkpoint, RoundTripIsExact) {
    const ExperimentResult r = run_experiment(ExperimentConfig::standard());
    const NetworkState back = checkpoint_from_string(checkpoint_to_string(r.final_state));
    EXPECT_EQ(back.step_count, r.final_state.step_count);
    EXPECT_EQ(back.probit.lambda, r.final_state.probit.lambda);
    EXPECT_EQ(back.probit.rho, r.final_state.probit.rho);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_EQ(back.posteriors[0][j].mean, r.final_state.posteriors[0][j].mean);
        EXPECT_EQ(back.posteriors[0][j].cov, r.final_state.posteriors[0][j].cov);
    }
    const Eigen::Vector2d x(0.3, -0.8);
    EXPECT_EQ(predict(back, x).probabilities, predict(r.final_state, x).probabilities);
}

TEST(Checkpoint, FileRoundTrip) {
    const fs::path dir = scratch("ckpt");
    const NetworkState net = ExperimentConfig::standard().network;
    save_checkpoint(net, dir / "c.json");
    EXPECT_EQ(checkpoint_to_string(load_checkpoint(dir / "c.json")), checkpoint_to_string(net));
    fs::remove_all(dir);
}

TEST(Checkpoint, RejectsWrongVersionAndGarbage) {
    std::string text = checkpoint_to_string(ExperimentConfig::standard().network);
    const auto pos = text.find("\"version\"");
    ASSERT_NE(pos, std::string::npos);
    const auto digit = text.find('1', pos);
    text[digit] = '9';
    EXPECT_THROW((void)checkpoint_from_string(text), CheckpointError);
    EXPECT_THROW((void)checkpoint_from_string("{not json"), CheckpointError);
    EXPECT_THROW((void)checkpoint_from_string("{\"format\": \"bnn-checkpoint\", \"version\": 1}"), CheckpointError);
    EXPECT_THROW((void)load_checkpoint("/nonexistent/bnn/c.json"), Error);
}

TEST(Config, RoundTrip) {
    ExperimentConfig cfg = ExperimentConfig::standard();
    cfg.m = 10;
    cfg.seed = 7;
    cfg.snapshots = {0, 5, 10};
    cfg.update.observation = ObservationModel::softmax_output;
    const ExperimentConfig back = config_from_string(config_to_string(cfg));
    EXPECT_EQ(back.m, 10u);
    EXPECT_EQ(back.seed, 7u);
    EXPECT_EQ(back.snapshots, cfg.snapshots);
    EXPECT_EQ(back.update.observation, ObservationModel::softmax_output);
    EXPECT_EQ(config_to_string(back), config_to_string(cfg));
}

TEST(Config, PartialDocumentKeepsDefaults) {
    const ExperimentConfig cfg = config_from_string("{\"seed\": 5}");
    EXPECT_EQ(cfg.seed, 5u);
    EXPECT_EQ(cfg.m, 25u);
}

TEST(Config, InvalidDocumentIsConfigError) {
    EXPECT_THROW((void)config_from_string("[1, 2]"), ConfigError);
    EXPECT_THROW((void)config_from_string("{\"bounds\": [1]}"), ConfigError);
    EXPECT_THROW((void)config_from_string("{\"observation\": \"nope\"}"), ConfigError);
    EXPECT_THROW((void)config_from_string("{oops"), ConfigError);
}

TEST(DatasetCsv, RoundTrip) {
    const fs::path dir = scratch("csv");
    const Dataset data = gen_data(ExperimentConfig::standard());
    write_dataset_csv(data, 3, dir / "d.csv");
    const Dataset back = read_dataset_csv(dir / "d.csv", 3);
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_EQ(back.rows[i].x, data.rows[i].x);
        EXPECT_EQ(back.rows[i].y, data.rows[i].y);
    }
    fs::remove_all(dir);
}

TEST(DatasetCsv, BadLabelIsIoError) {
    const fs::path dir = scratch("badcsv");
    std::ofstream(dir / "d.csv") << "x1,x2,label\n0.1,0.2,4\n";
    EXPECT_THROW((void)read_dataset_csv(dir / "d.csv", 3), IoError);
    std::ofstream(dir / "e.csv") << "x1,x2,label\n0.1,abc,1\n";
    EXPECT_THROW((void)read_dataset_csv(dir / "e.csv", 3), IoError);
    EXPECT_THROW((void)read_dataset_csv(dir / "missing.csv", 3), IoError);
    fs::remove_all(dir);
}

TEST(WriteExperiment, ProducesExpectedFiles) {
    const fs::path dir = scratch("exp");
    const ExperimentConfig cfg = ExperimentConfig::standard();
    write_experiment(cfg, run_experiment(cfg), dir);
    for (const char* f : {"data.csv", "grid_step_000.csv", "grid_step_012.csv", "grid_step_025.csv", "checkpoint.json",
                          "config.json", "report.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_FALSE(slurp(dir / "report.json").empty());
    fs::remove_all(dir);
}
