#include "specgp/cli.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "testutil.hpp"

using namespace specgp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Synthetic labeled pixel CSV: `areas` areas per class, `months` monthly
/// rows per area starting at 2000-01. Classes separate in the SWIR:SWIR2
/// ratio; NIR/Red carry no signal.
std::string make_csv(int areas_per_class, int months, std::uint64_t seed) {
  Rng rng(seed);
  std::ostringstream out;
  out << "area_id,year_month,label,Blue,Green,Red,NIR,SWIR,SWIR2\n";
  for (int label = 0; label < 2; ++label) {
    for (int a = 0; a < areas_per_class; ++a) {
      for (int m = 0; m < months; ++m) {
        double ratio = label == 0 ? 0.5 : 0.0;
        double scale = rand_range(rng, 0.5, 1.1);
        double noise = 0.03;
        double b4 = scale * (1.0 + ratio) / 2.0 + noise * testutil::gaussian(rng);
        double b5 = scale * (1.0 - ratio) / 2.0 + noise * testutil::gaussian(rng);
        out << (label == 0 ? "forest_" : "savanna_") << a << ','
            << format_year_month(2000 * 12 + m) << ','
            << (label == 0 ? "forest" : "savanna") << ','
            << format_double(0.25 + noise * testutil::gaussian(rng)) << ','
            << format_double(0.35 + noise * testutil::gaussian(rng)) << ','
            << format_double(0.30 + noise * testutil::gaussian(rng)) << ','
            << format_double(0.45 + noise * testutil::gaussian(rng)) << ','
            << format_double(b4) << ',' << format_double(b5) << '\n';
      }
    }
  }
  return out.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("specgp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_file(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }

  ExperimentConfig base_config(const fs::path& data, const std::string& out) {
    ExperimentConfig cfg;
    cfg.data_path = data.string();
    cfg.out_dir = (dir_ / out).string();
    cfg.gp.population_size = 30;
    cfg.gp.generations = 8;
    cfg.gp.seed = 7;
    cfg.train_months = 12;
    return cfg;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream log_;
};

}  // namespace

TEST_F(CliTest, ConfigFileAndOverrides) {
  auto conf = write_file("run.conf",
                         "# comment\n"
                         "schema = landsat\n"
                         "population_size = 40\n"
                         "generations=5\n"
                         "p_crossover = 0.8\n"
                         "seed = 11\n"
                         "baseline = ndvi,evi\n");
  ExperimentConfig cfg;
  apply_config_file(cfg, conf);
  EXPECT_EQ(cfg.schema_name, "landsat");
  EXPECT_EQ(cfg.gp.population_size, 40u);
  EXPECT_EQ(cfg.gp.generations, 5u);
  EXPECT_DOUBLE_EQ(cfg.gp.p_crossover, 0.8);
  EXPECT_EQ(cfg.gp.seed, 11u);
  EXPECT_EQ(cfg.baselines, (std::vector<std::string>{"ndvi", "evi"}));
  // Flag-style overrides reuse the same entry point.
  apply_config_entry(cfg, "seed", "99");
  EXPECT_EQ(cfg.gp.seed, 99u);
}

TEST_F(CliTest, ConfigFileErrors) {
  auto bad_key = write_file("bad.conf", "no_such_key = 1\n");
  ExperimentConfig cfg;
  EXPECT_THROW(apply_config_file(cfg, bad_key), std::runtime_error);
  auto bad_line = write_file("line.conf", "just a line\n");
  EXPECT_THROW(apply_config_file(cfg, bad_line), std::runtime_error);
  auto bad_value = write_file("value.conf", "generations = soon\n");
  EXPECT_THROW(apply_config_file(cfg, bad_value), std::runtime_error);
  EXPECT_THROW(apply_config_file(cfg, dir_ / "missing.conf"), std::runtime_error);
}

TEST_F(CliTest, TrainWritesAllOutputs) {
  auto data = write_file("pixels.csv", make_csv(4, 24, 1));
  auto cfg = base_config(data, "train_out");
  auto outputs = run_train(cfg, out_, log_);
  EXPECT_TRUE(fs::exists(outputs.formula_file));
  EXPECT_TRUE(fs::exists(outputs.history_file));
  EXPECT_TRUE(fs::exists(outputs.population_file));
  EXPECT_TRUE(fs::exists(outputs.report_file));

  auto loaded = read_formula_file(outputs.formula_file);
  EXPECT_EQ(loaded.schema.sensor_name, "landsat");

  auto pop = read_population_csv(outputs.population_file);
  EXPECT_EQ(pop.individuals.size(), cfg.gp.population_size);

  std::string history = slurp(outputs.history_file);
  EXPECT_NE(history.find("generation,best_fitness,mean_fitness"), std::string::npos);
  EXPECT_EQ(static_cast<std::size_t>(
                std::count(history.begin(), history.end(), '\n')),
            cfg.gp.generations + 1);

  auto report = nlohmann::json::parse(slurp(outputs.report_file));
  EXPECT_EQ(report["command"], "train");
  EXPECT_EQ(report["label_mapping"]["0"], "forest");
  EXPECT_GT(report["best"]["fitness"].get<double>(), 0.0);

  EXPECT_NE(out_.str().find("best fitness"), std::string::npos);
}

TEST_F(CliTest, TrainIsByteDeterministic) {
  auto data = write_file("pixels.csv", make_csv(3, 20, 2));
  auto cfg1 = base_config(data, "d1");
  auto cfg2 = base_config(data, "d2");
  std::ostringstream o1, o2, l1, l2;
  auto r1 = run_train(cfg1, o1, l1);
  auto r2 = run_train(cfg2, o2, l2);
  EXPECT_EQ(slurp(r1.formula_file), slurp(r2.formula_file));
  EXPECT_EQ(slurp(r1.history_file), slurp(r2.history_file));
  EXPECT_EQ(slurp(r1.population_file), slurp(r2.population_file));
}

TEST_F(CliTest, TrainGenerationZeroSinglePop) {
  auto data = write_file("pixels.csv", make_csv(2, 14, 3));
  auto cfg = base_config(data, "g0");
  cfg.gp.population_size = 1;
  cfg.gp.generations = 0;
  auto outputs = run_train(cfg, out_, log_);
  auto loaded = read_formula_file(outputs.formula_file);
  EXPECT_TRUE(loaded.tree != nullptr);
  auto pop = read_population_csv(outputs.population_file);
  EXPECT_EQ(pop.individuals.size(), 1u);
}

TEST_F(CliTest, TrainRejectsBadSplit) {
  auto data = write_file("pixels.csv", make_csv(2, 10, 4));
  auto cfg = base_config(data, "bad_split");
  cfg.train_months = 99;  // outside the 10-month range
  EXPECT_THROW(run_train(cfg, out_, log_), std::runtime_error);
}

TEST_F(CliTest, ClassifyWithBaselineAndWithLearnedIndex) {
  auto data = write_file("pixels.csv", make_csv(4, 24, 5));
  auto cfg = base_config(data, "cls");
  cfg.baselines = {"ndvi"};
  auto outputs = run_classify(cfg, out_, log_);
  EXPECT_TRUE(fs::exists(outputs.report_csv));
  EXPECT_TRUE(fs::exists(outputs.report_json));
  EXPECT_TRUE(fs::exists(outputs.confidence_csv));
  EXPECT_GE(outputs.summary.normalized, 0.0);
  EXPECT_LE(outputs.summary.normalized, 1.0);
  // NDVI ignores the SWIR bands that carry the signal here.
  EXPECT_LT(outputs.summary.normalized, 0.8);

  // The planted ratio separates the classes nearly perfectly.
  auto schema = landsat_schema();
  auto formula = dir_ / "planted.formula";
  write_formula_file(formula, schema, testutil::planted_ratio_tree());
  auto cfg2 = base_config(data, "cls2");
  cfg2.index_paths = {formula.string()};
  auto outputs2 = run_classify(cfg2, out_, log_);
  EXPECT_GT(outputs2.summary.normalized, 0.9);

  std::string confidence = slurp(outputs2.confidence_csv);
  EXPECT_NE(confidence.find("area_id,mean_confidence,mean_accuracy"),
            std::string::npos);
  // One row per area plus header.
  EXPECT_EQ(std::count(confidence.begin(), confidence.end(), '\n'), 8 + 1);

  std::string report = slurp(outputs2.report_csv);
  EXPECT_NE(report.find("normalized_accuracy"), std::string::npos);
}

TEST_F(CliTest, ClassifyNormalizedIsMeanOfProducerCells) {
  auto data = write_file("pixels.csv", make_csv(3, 18, 6));
  auto cfg = base_config(data, "cls_mean");
  cfg.baselines = {"evi2"};
  auto outputs = run_classify(cfg, out_, log_);
  const auto& s = outputs.summary;
  ASSERT_TRUE(s.producer[0] && s.producer[1]);
  EXPECT_DOUBLE_EQ(s.normalized, (*s.producer[0] + *s.producer[1]) / 2.0);
}

TEST_F(CliTest, ClassifyNeedsExactlyOneMethod) {
  auto data = write_file("pixels.csv", make_csv(2, 14, 7));
  auto cfg = base_config(data, "cls_err");
  EXPECT_THROW(run_classify(cfg, out_, log_), std::runtime_error);
  cfg.baselines = {"ndvi", "evi"};
  EXPECT_THROW(run_classify(cfg, out_, log_), std::runtime_error);
}

TEST_F(CliTest, ClassifySchemaMismatchIsError) {
  auto data = write_file("pixels.csv", make_csv(2, 14, 8));
  auto modis = modis_schema();
  auto formula = dir_ / "modis.formula";
  write_formula_file(formula, modis, ndvi(modis));
  auto cfg = base_config(data, "cls_schema");
  cfg.index_paths = {formula.string()};
  EXPECT_THROW(run_classify(cfg, out_, log_), std::runtime_error);
}

TEST_F(CliTest, EvalTsSameMethodTwiceTies) {
  auto data = write_file("pixels.csv", make_csv(4, 24, 9));
  auto cfg = base_config(data, "ts1");
  cfg.baselines = {"ndvi", "ndvi"};
  auto outputs = run_eval_ts(cfg, out_, log_);
  ASSERT_EQ(outputs.per_method_records.size(), 2u);
  EXPECT_EQ(outputs.per_method_records[0].size(), 10u);
  EXPECT_EQ(outputs.per_method_records[1].size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(outputs.per_method_records[0][i].normalized,
                     outputs.per_method_records[1][i].normalized);
  }
  ASSERT_EQ(outputs.comparison.pairs.size(), 1u);
  EXPECT_EQ(outputs.comparison.pairs[0].verdict, Verdict::tied);
  EXPECT_TRUE(outputs.comparison.pairs[0].wilcoxon.all_zero);
}

TEST_F(CliTest, EvalTsPlantedIndexBeatsNdvi) {
  auto data = write_file("pixels.csv", make_csv(6, 24, 10));
  auto schema = landsat_schema();
  auto formula = dir_ / "planted.formula";
  write_formula_file(formula, schema, testutil::planted_ratio_tree());
  auto cfg = base_config(data, "ts2");
  cfg.index_paths = {formula.string()};
  cfg.baselines = {"ndvi", "evi", "evi2"};
  auto outputs = run_eval_ts(cfg, out_, log_);
  ASSERT_EQ(outputs.comparison.pairs.size(), 3u);
  for (const auto& pair : outputs.comparison.pairs) {
    EXPECT_EQ(pair.verdict, Verdict::superior);
  }
  std::string csv = slurp(outputs.comparison_csv);
  EXPECT_NE(csv.find("▲"), std::string::npos);
  EXPECT_TRUE(fs::exists(outputs.series_csv));
  std::string series = slurp(outputs.series_csv);
  EXPECT_NE(series.find("method,year_month,class,label,mean,stddev,count"),
            std::string::npos);

  auto report = nlohmann::json::parse(slurp(outputs.comparison_json));
  EXPECT_EQ(report["methods"].size(), 4u);
  EXPECT_EQ(report["methods"][1]["verdict"], "superior");
}

TEST_F(CliTest, EvalTsNeedsTwoMethods) {
  auto data = write_file("pixels.csv", make_csv(3, 14, 11));
  auto cfg = base_config(data, "ts_err");
  cfg.baselines = {"ndvi"};
  EXPECT_THROW(run_eval_ts(cfg, out_, log_), std::runtime_error);
}

TEST_F(CliTest, EvalTsSharedSplitsAcrossMethods) {
  auto data = write_file("pixels.csv", make_csv(4, 20, 12));
  auto cfg = base_config(data, "ts_paired");
  cfg.baselines = {"evi", "evi"};
  auto o1 = run_eval_ts(cfg, out_, log_);
  // Re-running with the same seed reproduces the identical accuracies.
  auto cfg2 = base_config(data, "ts_paired2");
  cfg2.baselines = {"evi", "evi"};
  auto o2 = run_eval_ts(cfg2, out_, log_);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(o1.per_method_records[0][i].normalized,
                     o2.per_method_records[0][i].normalized);
  }
}

TEST_F(CliTest, AnalyzeDirectoryOfFormulas) {
  auto schema = landsat_schema();
  fs::path formulas = dir_ / "formulas";
  fs::create_directories(formulas);
  write_formula_file(formulas / "ndvi.formula", schema, ndvi(schema));
  auto cfg = base_config(dir_ / "unused.csv", "an1");
  cfg.index_paths = {formulas.string()};
  auto outputs = run_analyze(cfg, out_, log_);
  EXPECT_EQ(outputs.histogram.at("NIR"), 2u);
  EXPECT_EQ(outputs.histogram.at("Red"), 2u);
  std::string hist = slurp(outputs.histogram_csv);
  EXPECT_NE(hist.find("NIR,2"), std::string::npos);
  EXPECT_NE(hist.find("Blue,0"), std::string::npos);
  std::string elements = slurp(outputs.elements_csv);
  EXPECT_NE(elements.find("rank,element,count"), std::string::npos);
  // Rank column is bounded by k.
  EXPECT_LE(std::count(elements.begin(), elements.end(), '\n'),
            static_cast<long>(cfg.top_k) + 1);
}

TEST_F(CliTest, AnalyzeEmptyDirectoryIsError) {
  fs::path empty = dir_ / "empty";
  fs::create_directories(empty);
  auto cfg = base_config(dir_ / "unused.csv", "an2");
  cfg.index_paths = {empty.string()};
  EXPECT_THROW(run_analyze(cfg, out_, log_), std::runtime_error);
}

TEST_F(CliTest, AnalyzeMixedSchemasIsError) {
  fs::path formulas = dir_ / "mixed";
  fs::create_directories(formulas);
  auto landsat = landsat_schema();
  auto modis = modis_schema();
  write_formula_file(formulas / "a.formula", landsat, ndvi(landsat));
  write_formula_file(formulas / "b.formula", modis, ndvi(modis));
  auto cfg = base_config(dir_ / "unused.csv", "an3");
  cfg.index_paths = {formulas.string()};
  EXPECT_THROW(run_analyze(cfg, out_, log_), std::runtime_error);
}

TEST_F(CliTest, AnalyzePopulationFileTakesTopK) {
  auto schema = landsat_schema();
  std::vector<Individual> pop = {
      {ndvi(schema), 0.5},
      {binary_node(BinaryOp::mul, band_node(4), band_node(5)), 3.0},
      {band_node(0), 1.0},
  };
  auto path = dir_ / "population.csv";
  write_population_csv(path, schema, pop);
  auto cfg = base_config(dir_ / "unused.csv", "an4");
  cfg.index_paths = {path.string()};
  cfg.top_k = 2;
  auto outputs = run_analyze(cfg, out_, log_);
  // Top-2 by fitness: the SWIR*SWIR2 tree and the bare Blue terminal.
  EXPECT_EQ(outputs.histogram.count("NIR"), 0u);
  EXPECT_EQ(outputs.histogram.at("SWIR"), 1u);
  EXPECT_EQ(outputs.histogram.at("Blue"), 1u);

  cfg.top_k = 5;  // more than the population holds
  EXPECT_THROW(run_analyze(cfg, out_, log_), std::invalid_argument);
}

TEST_F(CliTest, AnalyzeSingleFormulaFile) {
  auto schema = modis_schema();
  auto path = dir_ / "one.formula";
  write_formula_file(path, schema, evi(schema));
  auto cfg = base_config(dir_ / "unused.csv", "an5");
  cfg.index_paths = {path.string()};
  auto outputs = run_analyze(cfg, out_, log_);
  EXPECT_EQ(outputs.histogram.at("NIR"), 2u);
  EXPECT_EQ(outputs.histogram.at("Blue"), 1u);
}
