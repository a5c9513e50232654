// specgp: evolve discriminative spectral indices from labeled pixel data and
// use them for classification, time-series comparison and structure analysis.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specgp/cli.hpp"

namespace {

struct FlagValues {
  std::optional<std::string> config;
  std::optional<std::string> schema;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::vector<std::string> index;
  std::vector<std::string> baseline;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
};

void add_common_flags(CLI::App* cmd, FlagValues& flags) {
  cmd->add_option("--config", flags.config,
                  "flat key=value config file; flags override file values");
  cmd->add_option("--schema", flags.schema, "band schema: landsat or modis");
  cmd->add_option("--data", flags.data, "labeled pixel CSV");
  cmd->add_option("--index", flags.index,
                  "formula file (repeatable; for analyze: population file, "
                  "formula file or directory)");
  cmd->add_option("--baseline", flags.baseline,
                  "built-in index: ndvi, evi or evi2 (repeatable)");
  cmd->add_option("--seed", flags.seed, "master random seed");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--k", flags.k, "top-k size for analyze");
}

specgp::ExperimentConfig build_config(const FlagValues& flags) {
  specgp::ExperimentConfig cfg;
  if (flags.config) specgp::apply_config_file(cfg, *flags.config);
  if (flags.schema) cfg.schema_name = *flags.schema;
  if (flags.data) cfg.data_path = *flags.data;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.seed) cfg.gp.seed = *flags.seed;
  if (flags.k) cfg.top_k = *flags.k;
  if (!flags.index.empty()) cfg.index_paths = flags.index;
  if (!flags.baseline.empty()) cfg.baselines = flags.baseline;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genetic-programming spectral index toolkit"};
  app.require_subcommand(1);

  FlagValues flags;
  CLI::App* train = app.add_subcommand("train", "evolve an index from labeled pixels");
  CLI::App* classify =
      app.add_subcommand("classify", "nearest-centroid classification report");
  CLI::App* eval_ts = app.add_subcommand(
      "eval-ts", "5x2 DTW 1-NN comparison of several indices");
  CLI::App* analyze =
      app.add_subcommand("analyze", "band histogram and element ranking");
  for (CLI::App* cmd : {train, classify, eval_ts, analyze}) {
    add_common_flags(cmd, flags);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    specgp::ExperimentConfig cfg = build_config(flags);
    if (train->parsed()) {
      specgp::run_train(cfg, std::cout, std::cerr);
    } else if (classify->parsed()) {
      specgp::run_classify(cfg, std::cout, std::cerr);
    } else if (eval_ts->parsed()) {
      specgp::run_eval_ts(cfg, std::cout, std::cerr);
    } else if (analyze->parsed()) {
      specgp::run_analyze(cfg, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
