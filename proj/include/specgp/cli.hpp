#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specgp/analysis.hpp"
#include "specgp/classify.hpp"
#include "specgp/engine.hpp"
#include "specgp/indices.hpp"
#include "specgp/io.hpp"
#include "specgp/stats.hpp"
#include "specgp/tseries.hpp"
#include "specgp/version.hpp"

namespace specgp {

/// Everything a command run needs. Populated from defaults, then a flat
/// key=value config file, then command-line flags (highest precedence).
struct ExperimentConfig {
  std::string schema_name = "landsat";
  std::string data_path;
  std::string out_dir = "out";
  GPConfig gp;
  int train_months = 60;  // temporal split: first N months train, rest test
  std::vector<std::string> index_paths;
  std::vector<std::string> baselines;
  std::size_t top_k = 10;
  double max_missing_fraction = 0.5;
  double alpha = 0.05;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_config_number(const std::string& key, const std::string& value) {
  T parsed{};
  std::stringstream ss(value);
  ss >> parsed;
  if (ss.fail() || !ss.eof()) {
    throw std::runtime_error("config key '" + key + "': bad value '" + value +
                             "'");
  }
  return parsed;
}

}  // namespace detail

/// Applies one key=value entry to the config; used for both config files and
/// flag overrides so both spell values identically.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_config_number;
  if (key == "schema") {
    cfg.schema_name = value;
  } else if (key == "data") {
    cfg.data_path = value;
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "seed") {
    cfg.gp.seed = parse_config_number<std::uint64_t>(key, value);
  } else if (key == "train_months") {
    cfg.train_months = parse_config_number<int>(key, value);
  } else if (key == "population_size") {
    cfg.gp.population_size = parse_config_number<std::size_t>(key, value);
  } else if (key == "generations") {
    cfg.gp.generations = parse_config_number<std::size_t>(key, value);
  } else if (key == "max_initial_depth") {
    cfg.gp.max_initial_depth = parse_config_number<int>(key, value);
  } else if (key == "max_tree_depth") {
    cfg.gp.max_tree_depth = parse_config_number<int>(key, value);
  } else if (key == "tournament_k") {
    cfg.gp.tournament_k = parse_config_number<std::size_t>(key, value);
  } else if (key == "p_crossover") {
    cfg.gp.p_crossover = parse_config_number<double>(key, value);
  } else if (key == "p_mutation") {
    cfg.gp.p_mutation = parse_config_number<double>(key, value);
  } else if (key == "p_replication") {
    cfg.gp.p_replication = parse_config_number<double>(key, value);
  } else if (key == "mutation_subtree_max_depth") {
    cfg.gp.mutation_subtree_max_depth = parse_config_number<int>(key, value);
  } else if (key == "k") {
    cfg.top_k = parse_config_number<std::size_t>(key, value);
  } else if (key == "index") {
    for (auto& item : detail::split_list(value)) cfg.index_paths.push_back(item);
  } else if (key == "baseline") {
    for (auto& item : detail::split_list(value)) cfg.baselines.push_back(item);
  } else if (key == "max_missing_fraction") {
    cfg.max_missing_fraction = parse_config_number<double>(key, value);
  } else if (key == "alpha") {
    cfg.alpha = parse_config_number<double>(key, value);
  } else {
    throw std::runtime_error("unknown config key '" + key + "'");
  }
}

/// Flat key=value config file; '#' starts a comment, blank lines are ignored.
inline void apply_config_file(ExperimentConfig& cfg,
                              const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file '" + path.string() + "'");
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config file '" + path.string() + "' line " +
                               std::to_string(line_no) +
                               ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    apply_config_entry(cfg, key, value);
  }
}

// ---------------------------------------------------------------------------
// Shared command plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  return nlohmann::json{
      {"schema", cfg.schema_name},
      {"data", cfg.data_path},
      {"out", cfg.out_dir},
      {"seed", cfg.gp.seed},
      {"train_months", cfg.train_months},
      {"population_size", cfg.gp.population_size},
      {"generations", cfg.gp.generations},
      {"max_initial_depth", cfg.gp.max_initial_depth},
      {"max_tree_depth", cfg.gp.max_tree_depth},
      {"tournament_k", cfg.gp.tournament_k},
      {"p_crossover", cfg.gp.p_crossover},
      {"p_mutation", cfg.gp.p_mutation},
      {"p_replication", cfg.gp.p_replication},
      {"mutation_subtree_max_depth", cfg.gp.mutation_subtree_max_depth},
      {"k", cfg.top_k},
      {"index", cfg.index_paths},
      {"baseline", cfg.baselines},
      {"max_missing_fraction", cfg.max_missing_fraction},
      {"alpha", cfg.alpha},
  };
}

inline void write_json_file(const std::filesystem::path& path,
                            const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("failed writing '" + path.string() + "'");
  }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

inline void log_rejected_rows(const LabeledPixelData& data, std::ostream& log) {
  for (const auto& d : data.rejected) {
    log << "warning: rejected row " << d.row << ": " << d.message << '\n';
  }
}

/// Validates the temporal split and returns the first test month.
inline int split_boundary(const LabeledPixelData& data, int train_months) {
  int lo = data.min_month();
  int hi = data.max_month();
  if (train_months < 1 || lo + train_months > hi + 1) {
    throw std::runtime_error(
        "train_months=" + std::to_string(train_months) +
        " does not lie inside the dataset's time range (" +
        format_year_month(lo) + " .. " + format_year_month(hi) + ")");
  }
  return lo + train_months;
}

struct NamedIndex {
  std::string name;
  ExprTree tree;
};

/// Resolves --index files and --baseline names against the dataset schema.
inline std::vector<NamedIndex> resolve_methods(const ExperimentConfig& cfg,
                                               const BandSchema& schema) {
  std::vector<NamedIndex> methods;
  for (const auto& path : cfg.index_paths) {
    LoadedFormula f = read_formula_file(path);
    if (f.schema.sensor_name != schema.sensor_name) {
      throw std::runtime_error("formula file '" + path + "' is for schema '" +
                               f.schema.sensor_name +
                               "' but the dataset uses '" +
                               schema.sensor_name + "'");
    }
    methods.push_back({std::filesystem::path(path).stem().string(), f.tree});
  }
  for (const auto& name : cfg.baselines) {
    methods.push_back({name, baseline_index(name, schema)});
  }
  return methods;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOutputs {
  std::filesystem::path formula_file;
  std::filesystem::path history_file;
  std::filesystem::path population_file;
  std::filesystem::path report_file;
  double best_fitness = 0.0;
  std::string best_formula;
};

/// Evolves an index on the temporal training slice and persists the best
/// formula, the fitness history and the final population.
inline TrainOutputs run_train(const ExperimentConfig& cfg, std::ostream& out,
                              std::ostream& log) {
  BandSchema schema = require_schema(cfg.schema_name);
  LabeledPixelData data = load_pixels(cfg.data_path, schema);
  detail::log_rejected_rows(data, log);

  int boundary = detail::split_boundary(data, cfg.train_months);
  PixelDataset train = to_dataset(
      data, [&](const PixelRecord& r) { return r.month < boundary; });
  train.require_both_classes();

  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path out_dir(cfg.out_dir);

  TrainOutputs outputs;
  outputs.history_file = out_dir / "history.csv";
  auto history = detail::open_output(outputs.history_file);
  history << "generation,best_fitness,mean_fitness\n";
  ProgressSink sink = [&](const GenerationRecord& rec) {
    history << rec.generation << ',' << format_double(rec.best_fitness) << ','
            << format_double(rec.mean_fitness) << '\n';
    if (rec.generation % 20 == 0 || rec.generation == cfg.gp.generations) {
      log << "generation " << rec.generation << ": best "
          << format_double(rec.best_fitness) << ", mean "
          << format_double(rec.mean_fitness) << '\n';
    }
  };

  EvolveResult result = evolve(cfg.gp, train, sink);
  history.close();
  if (!history) {
    throw std::runtime_error("failed writing '" + outputs.history_file.string() + "'");
  }

  outputs.formula_file = out_dir / "best.formula";
  write_formula_file(outputs.formula_file, schema, result.best.tree);

  outputs.population_file = out_dir / "population.csv";
  write_population_csv(outputs.population_file, schema, result.final_population);

  outputs.best_fitness = *result.best.fitness;
  outputs.best_formula = to_formula(result.best.tree, schema);

  nlohmann::json report{
      {"command", "train"},
      {"version", kVersion},
      {"config", detail::config_json(cfg)},
      {"label_mapping",
       {{"0", data.label_names[0]},
        {"1", data.label_names.size() > 1 ? data.label_names[1] : ""}}},
      {"rejected_rows", data.rejected.size()},
      {"train_samples", train.samples.size()},
      {"best",
       {{"fitness", outputs.best_fitness},
        {"formula", outputs.best_formula},
        {"depth", depth(result.best.tree)},
        {"nodes", node_count(result.best.tree)}}},
  };
  outputs.report_file = out_dir / "report.json";
  detail::write_json_file(outputs.report_file, report);

  out << "best fitness: " << format_double(outputs.best_fitness) << '\n'
      << "best formula: " << outputs.best_formula << '\n';
  return outputs;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

struct ClassifyOutputs {
  std::filesystem::path report_csv;
  std::filesystem::path report_json;
  std::filesystem::path confidence_csv;
  ConfusionSummary summary;
};

/// Fits the nearest-centroid classifier on the temporal training slice,
/// classifies the test slice and writes the accuracy report plus the
/// per-area confidence/accuracy table.
inline ClassifyOutputs run_classify(const ExperimentConfig& cfg,
                                    std::ostream& out, std::ostream& log) {
  BandSchema schema = require_schema(cfg.schema_name);
  LabeledPixelData data = load_pixels(cfg.data_path, schema);
  detail::log_rejected_rows(data, log);

  auto methods = detail::resolve_methods(cfg, schema);
  if (methods.size() != 1) {
    throw std::runtime_error(
        "classify needs exactly one --index file or --baseline name (got " +
        std::to_string(methods.size()) + ")");
  }
  const auto& method = methods.front();

  int boundary = detail::split_boundary(data, cfg.train_months);
  std::vector<double> train_proj, test_proj;
  std::vector<int> train_labels, test_labels;
  std::vector<const PixelRecord*> test_rows;
  for (const auto& r : data.rows) {
    double v = evaluate(method.tree, r.bands);
    if (r.month < boundary) {
      train_proj.push_back(v);
      train_labels.push_back(r.label);
    } else {
      test_proj.push_back(v);
      test_labels.push_back(r.label);
      test_rows.push_back(&r);
    }
  }
  if (test_proj.empty()) {
    throw std::runtime_error("temporal split leaves no test samples");
  }

  NccCentroids centroids = ncc_fit_projected(train_proj, train_labels);
  std::vector<int> predicted = ncc_predict_projected(centroids, test_proj);
  ConfusionSummary summary = confusion(predicted, test_labels);

  LogisticModel confidence_model = fit_logistic(train_proj, train_labels);

  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path out_dir(cfg.out_dir);
  ClassifyOutputs outputs;
  outputs.summary = summary;

  auto opt_str = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("undefined");
  };

  outputs.report_csv = out_dir / "report.csv";
  {
    auto csv = detail::open_output(outputs.report_csv);
    csv << "index,class0,class1,producer_0,user_0,producer_1,user_1,"
           "normalized_accuracy\n";
    csv << method.name << ',' << data.label_names[0] << ','
        << (data.label_names.size() > 1 ? data.label_names[1] : "") << ','
        << opt_str(summary.producer[0]) << ',' << opt_str(summary.user[0])
        << ',' << opt_str(summary.producer[1]) << ','
        << opt_str(summary.user[1]) << ','
        << format_double(summary.normalized) << '\n';
  }

  // Mean confidence vs mean accuracy per area over the test slice.
  outputs.confidence_csv = out_dir / "confidence.csv";
  {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
        per_area;  // area -> (confidences, correct flags)
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      double p = logistic_prob(confidence_model, test_proj[i]);
      auto& [confs, hits] = per_area[test_rows[i]->area_id];
      confs.push_back(prediction_confidence(p));
      hits.push_back(predicted[i] == test_labels[i] ? 1.0 : 0.0);
    }
    auto csv = detail::open_output(outputs.confidence_csv);
    csv << "area_id,mean_confidence,mean_accuracy\n";
    for (const auto& [area, values] : per_area) {
      const auto& [confs, hits] = values;
      double mc = 0.0, ma = 0.0;
      for (double c : confs) mc += c;
      for (double h : hits) ma += h;
      mc /= static_cast<double>(confs.size());
      ma /= static_cast<double>(hits.size());
      csv << area << ',' << format_double(mc) << ',' << format_double(ma)
          << '\n';
    }
  }

  nlohmann::json report{
      {"command", "classify"},
      {"version", kVersion},
      {"config", detail::config_json(cfg)},
      {"index", method.name},
      {"label_mapping",
       {{"0", data.label_names[0]},
        {"1", data.label_names.size() > 1 ? data.label_names[1] : ""}}},
      {"train_samples", train_proj.size()},
      {"test_samples", test_proj.size()},
      {"confidence_model",
       {{"intercept", confidence_model.intercept},
        {"slope", confidence_model.slope},
        {"capped", confidence_model.capped}}},
      {"counts",
       {{"true0_pred0", summary.counts[0][0]},
        {"true0_pred1", summary.counts[0][1]},
        {"true1_pred0", summary.counts[1][0]},
        {"true1_pred1", summary.counts[1][1]}}},
      {"normalized_accuracy", summary.normalized},
  };
  for (int c = 0; c < 2; ++c) {
    auto key = "class" + std::to_string(c);
    report[key] = nlohmann::json::object();
    if (summary.producer[c]) report[key]["producer"] = *summary.producer[c];
    if (summary.user[c]) report[key]["user"] = *summary.user[c];
  }
  outputs.report_json = out_dir / "report.json";
  detail::write_json_file(outputs.report_json, report);

  out << "index: " << method.name << '\n';
  for (int c = 0; c < 2; ++c) {
    out << "class " << c << " ("
        << (static_cast<std::size_t>(c) < data.label_names.size()
                ? data.label_names[c]
                : "")
        << "): producer " << opt_str(summary.producer[c]) << ", user "
        << opt_str(summary.user[c]) << '\n';
  }
  out << "normalized accuracy: " << format_double(summary.normalized) << '\n';
  return outputs;
}

// ---------------------------------------------------------------------------
// eval-ts
// ---------------------------------------------------------------------------

struct EvalTsOutputs {
  std::filesystem::path comparison_csv;
  std::filesystem::path comparison_json;
  std::filesystem::path series_csv;
  MethodComparison comparison;
  std::vector<std::vector<ConfusionSummary>> per_method_records;
};

/// Runs the 5x2 DTW 1-NN protocol for every supplied method on shared splits
/// and writes the statistical comparison of the first method against the
/// rest.
inline EvalTsOutputs run_eval_ts(const ExperimentConfig& cfg, std::ostream& out,
                                 std::ostream& log) {
  BandSchema schema = require_schema(cfg.schema_name);
  LabeledPixelData data = load_pixels(cfg.data_path, schema);
  detail::log_rejected_rows(data, log);

  auto methods = detail::resolve_methods(cfg, schema);
  if (methods.size() < 2) {
    throw std::runtime_error(
        "eval-ts needs at least two methods (--index/--baseline), got " +
        std::to_string(methods.size()));
  }

  // Preprocess: monthly compositing, then linear interpolation; areas with
  // too many gaps are dropped.
  std::vector<LabeledBandSeries> series;
  for (const auto& area : group_by_area(data)) {
    GappedBandSeries composed =
        monthly_composite(area.area_id, area.label, area.observations);
    auto filled = interpolate_gaps(composed, cfg.max_missing_fraction);
    if (!filled) {
      log << "warning: area '" << area.area_id << "' rejected ("
          << composed.missing_count() << '/' << composed.values.size()
          << " months missing)\n";
      continue;
    }
    series.push_back(std::move(*filled));
  }

  std::vector<int> labels;
  labels.reserve(series.size());
  for (const auto& s : series) labels.push_back(s.label);

  // One split set, shared by every method, so the per-experiment accuracies
  // are paired.
  Rng rng(cfg.gp.seed);
  auto splits = cv_5x2(rng, labels);

  std::vector<std::vector<ConfusionSummary>> records;
  std::vector<std::vector<double>> accuracies;
  for (const auto& method : methods) {
    records.push_back(run_ts_with_splits(method.tree, series, splits));
    std::vector<double> accs;
    accs.reserve(records.back().size());
    for (const auto& s : records.back()) accs.push_back(s.normalized);
    accuracies.push_back(std::move(accs));
  }

  std::vector<std::vector<double>> baseline_accs(accuracies.begin() + 1,
                                                 accuracies.end());
  MethodComparison comparison = verdicts(accuracies[0], baseline_accs, cfg.alpha);

  auto mean_std = [](std::span<const double> xs) {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size());
    return std::pair<double, double>(mean, std::sqrt(var));
  };

  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path out_dir(cfg.out_dir);
  EvalTsOutputs outputs;
  outputs.comparison = comparison;
  outputs.per_method_records = records;

  // Per-class producer/user accuracies over the ten experiments, undefined
  // cells excluded.
  auto class_stats = [&](const std::vector<ConfusionSummary>& recs, int cls,
                         bool producer) {
    std::vector<double> vals;
    for (const auto& r : recs) {
      const auto& cell = producer ? r.producer[cls] : r.user[cls];
      if (cell) vals.push_back(*cell);
    }
    if (vals.empty()) return std::pair<double, double>(0.0, 0.0);
    return mean_std(vals);
  };

  outputs.comparison_csv = out_dir / "comparison.csv";
  {
    auto csv = detail::open_output(outputs.comparison_csv);
    csv << "method,producer0_mean,producer0_std,user0_mean,user0_std,"
           "producer1_mean,producer1_std,user1_mean,user1_std,"
           "mean_accuracy,std_accuracy,verdict,wilcoxon_p,"
           "wilcoxon_p_adjusted\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
      csv << methods[i].name;
      for (int cls = 0; cls < 2; ++cls) {
        for (bool producer : {true, false}) {
          auto [m, sd] = class_stats(records[i], cls, producer);
          csv << ',' << format_double(m) << ',' << format_double(sd);
        }
      }
      auto [mean, sd] = mean_std(accuracies[i]);
      csv << ',' << format_double(mean) << ',' << format_double(sd) << ',';
      if (i == 0) {
        csv << ",,";
      } else {
        const auto& pair = comparison.pairs[i - 1];
        csv << verdict_glyph(pair.verdict) << ','
            << format_double(pair.wilcoxon.p_value) << ','
            << format_double(pair.p_adjusted);
      }
      csv << '\n';
    }
  }

  outputs.series_csv = out_dir / "series_stats.csv";
  {
    auto csv = detail::open_output(outputs.series_csv);
    csv << "method,year_month,class,label,mean,stddev,count\n";
    for (const auto& method : methods) {
      std::vector<LabeledIndexSeries> projected;
      projected.reserve(series.size());
      for (const auto& s : series) {
        projected.push_back(project_series(method.tree, s));
      }
      for (const auto& point : class_mean_series(projected)) {
        csv << method.name << ',' << format_year_month(point.month) << ','
            << point.label << ','
            << (static_cast<std::size_t>(point.label) < data.label_names.size()
                    ? data.label_names[static_cast<std::size_t>(point.label)]
                    : "")
            << ',' << format_double(point.mean) << ','
            << format_double(point.stddev) << ',' << point.count << '\n';
      }
    }
  }

  nlohmann::json jmethods = nlohmann::json::array();
  for (std::size_t i = 0; i < methods.size(); ++i) {
    auto [mean, sd] = mean_std(accuracies[i]);
    nlohmann::json jm{{"name", methods[i].name},
                      {"mean_accuracy", mean},
                      {"std_accuracy", sd},
                      {"accuracies", accuracies[i]}};
    if (i > 0) {
      const auto& pair = comparison.pairs[i - 1];
      jm["verdict"] = verdict_name(pair.verdict);
      jm["wilcoxon_p"] = pair.wilcoxon.p_value;
      jm["wilcoxon_p_adjusted"] = pair.p_adjusted;
      jm["mean_difference"] = pair.mean_difference;
    }
    jmethods.push_back(std::move(jm));
  }
  nlohmann::json report{
      {"command", "eval-ts"},
      {"version", kVersion},
      {"config", detail::config_json(cfg)},
      {"areas_total", group_by_area(data).size()},
      {"areas_used", series.size()},
      {"friedman",
       {{"statistic", comparison.friedman.statistic},
        {"p_value", comparison.friedman.p_value}}},
      {"methods", jmethods},
  };
  outputs.comparison_json = out_dir / "comparison.json";
  detail::write_json_file(outputs.comparison_json, report);

  out << "friedman: statistic " << format_double(comparison.friedman.statistic)
      << ", p " << format_double(comparison.friedman.p_value) << '\n';
  for (std::size_t i = 0; i < methods.size(); ++i) {
    auto [mean, sd] = mean_std(accuracies[i]);
    out << methods[i].name << ": " << format_double(mean) << " +/- "
        << format_double(sd);
    if (i > 0) {
      out << "  " << verdict_glyph(comparison.pairs[i - 1].verdict);
    }
    out << '\n';
  }
  return outputs;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOutputs {
  std::filesystem::path histogram_csv;
  std::filesystem::path elements_csv;
  std::map<std::string, std::size_t> histogram;
  std::vector<std::pair<std::string, std::size_t>> elements;
};

namespace detail {

/// Loads the formulas to analyze: a directory of formula files, a population
/// CSV (top-k by fitness) or a single formula file.
inline std::pair<BandSchema, std::vector<ExprTree>> load_analysis_trees(
    const std::string& input, std::size_t k) {
  namespace fs = std::filesystem;
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw std::runtime_error("directory '" + input +
                               "' contains no formula files");
    }
    std::optional<BandSchema> schema;
    std::vector<ExprTree> trees;
    for (const auto& f : files) {
      LoadedFormula lf = read_formula_file(f);
      if (!schema) {
        schema = lf.schema;
      } else if (schema->sensor_name != lf.schema.sensor_name) {
        throw std::runtime_error("mixed schemas in '" + input + "': '" +
                                 schema->sensor_name + "' vs '" +
                                 lf.schema.sensor_name + "' (" + f.string() +
                                 ")");
      }
      trees.push_back(lf.tree);
    }
    return {*schema, std::move(trees)};
  }

  std::ifstream probe(input);
  if (!probe) {
    throw std::runtime_error("cannot open '" + input + "'");
  }
  std::string first_line;
  std::getline(probe, first_line);
  probe.close();
  if (strip_cr(first_line) == "schema,fitness,formula") {
    LoadedPopulation pop = read_population_csv(input);
    auto top = top_k_individuals(pop.individuals, k);
    return {pop.schema, trees_of(top)};
  }
  LoadedFormula lf = read_formula_file(input);
  return {lf.schema, {lf.tree}};
}

}  // namespace detail

/// Structure analysis: band occurrence histogram and top-k formula element
/// ranking over the selected formulas.
inline AnalyzeOutputs run_analyze(const ExperimentConfig& cfg, std::ostream& out,
                                  std::ostream& log) {
  if (cfg.index_paths.size() != 1) {
    throw std::runtime_error(
        "analyze needs exactly one --index argument (population file, formula "
        "file or directory of formula files)");
  }
  auto [schema, trees] = detail::load_analysis_trees(cfg.index_paths[0],
                                                     cfg.top_k);
  log << "analyzing " << trees.size() << " formula(s) under schema '"
      << schema.sensor_name << "'\n";

  AnalyzeOutputs outputs;
  outputs.histogram = band_histogram(trees, schema);
  outputs.elements = element_frequency(trees, schema, cfg.top_k);

  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path out_dir(cfg.out_dir);

  outputs.histogram_csv = out_dir / "band_histogram.csv";
  {
    auto csv = detail::open_output(outputs.histogram_csv);
    csv << "band,count\n";
    for (const auto& band : schema.bands) {
      auto it = outputs.histogram.find(band.name);
      csv << band.name << ','
          << (it == outputs.histogram.end() ? 0 : it->second) << '\n';
    }
  }

  outputs.elements_csv = out_dir / "elements.csv";
  {
    auto csv = detail::open_output(outputs.elements_csv);
    csv << "rank,element,count\n";
    for (std::size_t i = 0; i < outputs.elements.size(); ++i) {
      csv << (i + 1) << ',' << outputs.elements[i].first << ','
          << outputs.elements[i].second << '\n';
    }
  }

  out << "bands:";
  for (const auto& band : schema.bands) {
    auto it = outputs.histogram.find(band.name);
    out << ' ' << band.name << '='
        << (it == outputs.histogram.end() ? 0 : it->second);
  }
  out << '\n' << "top elements:" << '\n';
  for (std::size_t i = 0; i < outputs.elements.size(); ++i) {
    out << "  " << (i + 1) << ". " << outputs.elements[i].first << " ("
        << outputs.elements[i].second << ")\n";
  }
  return outputs;
}

}  // namespace specgp
