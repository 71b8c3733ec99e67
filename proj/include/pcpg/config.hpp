#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "pcpg/model.hpp"
#include "pcpg/tasks.hpp"
#include "pcpg/trainer.hpp"

namespace pcpg {

// One experiment, fully specified: model dimensions, training
// hyperparameters, dataset source (generated or loaded from files), and the
// sweep grids. Parsed from a versioned key = value file where unknown keys
// are hard errors, so hyperparameter typos cannot pass silently.
struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;

  // dataset generation (ignored for the axes a loaded file provides)
  std::string task = "copy";
  int n_train = 2000;
  int n_val = 200;
  int min_len = 4;
  int max_len = 10;
  int min_words = 2;
  int max_words = 4;
  int n_classes = 10;
  int samples_per_class = 20;
  FrameOptions frames;
  std::uint64_t data_seed = 1234;
  std::string train_data;  // optional dataset file paths; override generation
  std::string val_data;

  std::string out_dir = "runs/experiment";

  // sweep grids
  std::vector<std::pair<int, int>> sweep_kernels;    // (k, s)
  std::vector<std::vector<double>> sweep_weights;    // presets, pre-normalization
  std::vector<double> sweep_lambdas;
  std::vector<std::uint64_t> seeds = {1};            // per-cell repetitions
  bool include_ce_baseline = true;
};

// Throws std::invalid_argument with file/line context on version mismatch,
// unknown keys, or malformed values.
ExperimentConfig parse_config(std::istream& in, const std::string& origin);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

}  // namespace pcpg
