#include "pcpg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "pcpg/config.hpp"
#include "pcpg/gradcheck.hpp"
#include "pcpg/kernel.hpp"
#include "pcpg/model.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/tasks.hpp"
#include "pcpg/trainer.hpp"
#include "pcpg/vocab.hpp"

namespace fs = std::filesystem;

namespace pcpg {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_pct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  const std::size_t idx =
      static_cast<std::size_t>(std::lround(q * static_cast<double>(n - 1)));
  return sorted[std::min(idx, n - 1)];
}

std::string weights_tag(const PcpgKernel& kernel) {
  std::string out;
  for (int i = 0; i < kernel.size(); ++i) {
    if (i) out += '|';
    out += fmt_g(kernel.weights()[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset plumbing

Dataset make_dataset(const ExperimentConfig& cfg, int n, std::uint64_t seed) {
  if (cfg.task == "copy")
    return gen_copy(n, cfg.min_len, cfg.max_len, seed, cfg.frames);
  if (cfg.task == "reverse")
    return gen_reverse(n, cfg.min_len, cfg.max_len, seed, cfg.frames);
  if (cfg.task == "sentences")
    return gen_sentences(n, cfg.min_words, cfg.max_words, seed, cfg.frames);
  if (cfg.task == "words")
    return gen_words(cfg.n_classes, std::max(1, n / cfg.n_classes), seed, cfg.frames);
  throw std::invalid_argument("unknown task '" + cfg.task + "'");
}

// Loads the datasets named in the config, generating the missing ones. When
// both sides are generated they come from one pool cut by split_dataset, so
// train and val are disjoint by construction.
std::pair<Dataset, Dataset> load_or_generate(const ExperimentConfig& cfg,
                                             std::ostream& log) {
  Dataset train_ds, val_ds;
  const bool gen_train = cfg.train_data.empty();
  const bool gen_val = cfg.val_data.empty();
  if (gen_train || gen_val) {
    if (cfg.n_train < 1 || cfg.n_val < 1)
      throw std::invalid_argument("n_train and n_val must be positive to generate data");
  }
  if (gen_train && gen_val) {
    const Dataset pool = make_dataset(cfg, cfg.n_train + cfg.n_val, cfg.data_seed);
    // the 0.5 margin makes floor(size * fraction) hit n_val exactly
    const double val_frac = (static_cast<double>(cfg.n_val) + 0.5) /
                            static_cast<double>(pool.size());
    Splits parts = split_dataset(pool, val_frac, 0.0, cfg.data_seed);
    train_ds = std::move(parts.train);
    val_ds = std::move(parts.val);
    log << "generated " << pool.size() << " " << cfg.task << " samples, split "
        << train_ds.size() << " train / " << val_ds.size() << " val\n";
  } else {
    if (gen_train) {
      train_ds = make_dataset(cfg, cfg.n_train, substream_seed(cfg.data_seed, "train-data"));
      log << "generated " << train_ds.size() << " " << cfg.task << " training samples\n";
    } else {
      train_ds = load_dataset(cfg.train_data);
      log << "loaded " << train_ds.size() << " training samples from " << cfg.train_data
          << "\n";
    }
    if (gen_val) {
      val_ds = make_dataset(cfg, cfg.n_val, substream_seed(cfg.data_seed, "val-data"));
      log << "generated " << val_ds.size() << " " << cfg.task << " validation samples\n";
    } else {
      val_ds = load_dataset(cfg.val_data);
      log << "loaded " << val_ds.size() << " validation samples from " << cfg.val_data
          << "\n";
    }
  }
  if (train_ds.feature_dim != cfg.model.feature_dim ||
      val_ds.feature_dim != cfg.model.feature_dim)
    throw std::runtime_error("dataset feature width does not match the model (model " +
                             std::to_string(cfg.model.feature_dim) + ", train " +
                             std::to_string(train_ds.feature_dim) + ", val " +
                             std::to_string(val_ds.feature_dim) + ")");
  return {std::move(train_ds), std::move(val_ds)};
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::string config_path;
  std::string out;
  bool force = false;
  std::string task;
  int n = 0;
  int min_len = 0, max_len = 0;
  int min_words = 0, max_words = 0;
  int n_classes = 0, per_class = 0;
  int feature_dim = 0;
  double noise = 0.0;
  int min_repeat = 0, max_repeat = 0;
  std::uint64_t seed = 0;
  // presence flags, set from the parsed option counts
  bool has_task = false, has_n = false, has_min_len = false, has_max_len = false;
  bool has_min_words = false, has_max_words = false, has_n_classes = false;
  bool has_per_class = false, has_feature_dim = false, has_noise = false;
  bool has_min_repeat = false, has_max_repeat = false, has_seed = false;
};

int cmd_gen_data(const GenDataArgs& a) {
  ExperimentConfig cfg;
  if (!a.config_path.empty()) cfg = parse_config_file(a.config_path);
  if (a.has_task) cfg.task = a.task;
  if (a.has_n) cfg.n_train = a.n;
  if (a.has_min_len) cfg.min_len = a.min_len;
  if (a.has_max_len) cfg.max_len = a.max_len;
  if (a.has_min_words) cfg.min_words = a.min_words;
  if (a.has_max_words) cfg.max_words = a.max_words;
  if (a.has_n_classes) cfg.n_classes = a.n_classes;
  if (a.has_per_class) cfg.samples_per_class = a.per_class;
  if (a.has_feature_dim) cfg.frames.feature_dim = a.feature_dim;
  if (a.has_noise) cfg.frames.noise = a.noise;
  if (a.has_min_repeat) cfg.frames.min_repeat = a.min_repeat;
  if (a.has_max_repeat) cfg.frames.max_repeat = a.max_repeat;
  if (a.has_seed) cfg.data_seed = a.seed;

  const fs::path out = a.out;
  if (fs::exists(out) && !a.force) {
    std::cerr << "error: " << out.string() << " already exists; pass --force to overwrite\n";
    return kExitUsage;
  }

  const int count = cfg.task == "words" ? cfg.n_classes * cfg.samples_per_class
                                        : cfg.n_train;
  const Dataset ds = make_dataset(cfg, count, cfg.data_seed);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_dataset(out, ds);
  std::cout << "wrote " << ds.size() << " " << cfg.task << " samples (feature width "
            << ds.feature_dim << ", seed " << cfg.data_seed << ") to " << out.string()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_override, bool resume) {
  ExperimentConfig cfg = parse_config_file(config_path);
  if (seed) cfg.train.seed = *seed;
  if (!out_override.empty()) cfg.out_dir = out_override;

  auto [train_ds, val_ds] = load_or_generate(cfg, std::cout);

  Seq2Seq model(cfg.model);
  model.init_params(cfg.train.seed);
  std::cout << "model: " << model.params().scalar_count() << " parameters; lambda "
            << fmt_g(cfg.train.lambda) << ", kernel k=" << cfg.train.kernel.size()
            << " s=" << cfg.train.kernel.stride() << ", seed " << cfg.train.seed
            << ", out " << cfg.out_dir << "\n";

  const TrainResult r =
      train(model, train_ds, val_ds, cfg.train, cfg.out_dir, resume, &std::cout);
  if (r.aborted_non_finite) {
    std::cerr << "error: training aborted on a non-finite training signal\n";
    return kExitNumerical;
  }
  std::cout << "done: " << r.iterations << " iterations, final val CER "
            << fmt_pct(r.final_val_cer) << ", best " << fmt_pct(r.best_val_cer)
            << (r.stopped_early ? " (stopped early)" : "") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, int beam,
             int limit, int max_len) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Seq2Seq model(config_from_checkpoint(ckpt));
  load_model_checkpoint(ckpt, model);

  const Dataset data = load_dataset(data_path);
  if (data.feature_dim != model.config().feature_dim)
    throw std::runtime_error("dataset feature width " + std::to_string(data.feature_dim) +
                             " does not match the checkpoint (" +
                             std::to_string(model.config().feature_dim) + ")");

  const EvalSummary s = evaluate(model, data, beam, max_len, limit);
  std::cout << "scored " << s.scored << " of " << data.size() << " samples\n";
  std::cout << "greedy : CER " << fmt_pct(s.cer) << "  WER " << fmt_pct(s.wer)
            << "  mean logP " << fmt_g(s.mean_log_prob) << "\n";
  if (beam > 1)
    std::cout << "beam-" << beam << " : CER " << fmt_pct(s.beam_cer) << "  WER "
              << fmt_pct(s.beam_wer) << "  mean logP " << fmt_g(s.mean_beam_log_prob)
              << "\n";

  std::vector<double> d = s.sample_cer;
  std::sort(d.begin(), d.end());
  std::cout << "per-sample CER: min " << fmt_pct(d.front()) << ", p25 "
            << fmt_pct(percentile(d, 0.25)) << ", median " << fmt_pct(percentile(d, 0.5))
            << ", p75 " << fmt_pct(percentile(d, 0.75)) << ", max " << fmt_pct(d.back())
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepCell {
  std::string id;
  PcpgKernel kernel;
  double lambda;
};

std::vector<SweepCell> build_cells(const ExperimentConfig& cfg) {
  std::vector<SweepCell> cells;
  std::vector<std::pair<int, int>> kernels = cfg.sweep_kernels;
  if (kernels.empty())
    kernels.emplace_back(cfg.train.kernel.size(), cfg.train.kernel.stride());
  std::vector<double> lambdas = cfg.sweep_lambdas;
  if (lambdas.empty()) lambdas.push_back(cfg.train.lambda);

  for (const auto& [k, s] : kernels) {
    for (const double l : lambdas) {
      std::ostringstream base;
      base << "k" << k << "s" << s;
      cells.push_back({base.str() + "-uniform-l" + fmt_g(l), PcpgKernel::uniform(k, s), l});
      for (std::size_t p = 0; p < cfg.sweep_weights.size(); ++p) {
        const auto& w = cfg.sweep_weights[p];
        // a preset only applies to kernels of its own width
        if (static_cast<int>(w.size()) != k) continue;
        Eigen::VectorXd wv(k);
        for (int i = 0; i < k; ++i) wv[i] = w[static_cast<std::size_t>(i)];
        cells.push_back({base.str() + "-w" + std::to_string(p + 1) + "-l" + fmt_g(l),
                         PcpgKernel(k, s, wv), l});
      }
    }
  }
  if (cfg.include_ce_baseline)
    cells.push_back({"ce-baseline", PcpgKernel::uniform(1, 1), 0.0});
  return cells;
}

int cmd_sweep(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig cfg = parse_config_file(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;

  auto [train_ds, val_ds] = load_or_generate(cfg, std::cout);
  const std::vector<SweepCell> cells = build_cells(cfg);
  std::cout << "sweep: " << cells.size() << " cells x " << cfg.seeds.size()
            << " seeds, out " << cfg.out_dir << "\n";

  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);
  const fs::path results_path = out_dir / "results.csv";

  // completed (cell, seed) pairs survive a rerun untouched
  std::set<std::string> done;
  if (fs::exists(results_path)) {
    std::ifstream in(results_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const auto f = split(line, ',');
      if (f.size() >= 6) done.insert(f[0] + "#" + f[5]);
    }
  } else {
    std::ofstream header(results_path);
    header << "cell,k,s,weights,lambda,seed,iterations,val_cer,best_val_cer\n";
  }

  std::ofstream results(results_path, std::ios::app);
  int aborted_cells = 0;
  for (const SweepCell& cell : cells) {
    for (const std::uint64_t seed : cfg.seeds) {
      const std::string key = cell.id + "#" + std::to_string(seed);
      if (done.count(key)) {
        std::cout << "  " << cell.id << " seed " << seed << ": done, skipping\n";
        continue;
      }
      TrainConfig tc = cfg.train;
      tc.kernel = cell.kernel;
      tc.lambda = cell.lambda;
      tc.seed = seed;

      Seq2Seq model(cfg.model);
      model.init_params(seed);
      const fs::path cell_dir =
          out_dir / "cells" / (cell.id + "-s" + std::to_string(seed));
      const TrainResult r = train(model, train_ds, val_ds, tc, cell_dir, false, nullptr);

      const double cer =
          r.aborted_non_finite ? std::numeric_limits<double>::quiet_NaN() : r.final_val_cer;
      results << cell.id << ',' << cell.kernel.size() << ',' << cell.kernel.stride()
              << ',' << weights_tag(cell.kernel) << ',' << fmt_g(cell.lambda) << ','
              << seed << ',' << r.iterations << ',' << fmt_full(cer) << ','
              << fmt_full(r.aborted_non_finite ? cer : r.best_val_cer) << '\n';
      results.flush();
      done.insert(key);

      if (r.aborted_non_finite) {
        ++aborted_cells;
        std::cerr << "  " << cell.id << " seed " << seed
                  << ": aborted on a non-finite training signal\n";
      } else {
        std::cout << "  " << cell.id << " seed " << seed << ": val CER "
                  << fmt_pct(r.final_val_cer) << " after " << r.iterations << " iters\n";
      }
    }
  }
  results.close();

  // aggregate everything recorded so far, including earlier partial runs
  struct Agg {
    std::string k, s, weights, lambda;
    std::vector<double> cers;
    int aborted = 0;
  };
  std::map<std::string, Agg> agg;
  std::vector<std::string> order;
  {
    std::ifstream in(results_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto f = split(line, ',');
      if (f.size() < 9) continue;
      auto [it, fresh] = agg.try_emplace(f[0]);
      if (fresh) {
        order.push_back(f[0]);
        it->second.k = f[1];
        it->second.s = f[2];
        it->second.weights = f[3];
        it->second.lambda = f[4];
      }
      const double cer = std::strtod(f[7].c_str(), nullptr);
      if (std::isfinite(cer))
        it->second.cers.push_back(cer);
      else
        ++it->second.aborted;
    }
  }

  std::ofstream summary(out_dir / "summary.csv");
  summary << "cell,k,s,weights,lambda,n_seeds,median_val_cer\n";
  std::cout << "\n" << std::left << std::setw(28) << "cell" << std::right
            << std::setw(4) << "k" << std::setw(4) << "s" << std::setw(8) << "lambda"
            << std::setw(7) << "seeds" << std::setw(16) << "median val CER" << "\n";
  for (const std::string& id : order) {
    const Agg& a = agg.at(id);
    const double med = median_of(a.cers);
    summary << id << ',' << a.k << ',' << a.s << ',' << a.weights << ',' << a.lambda
            << ',' << a.cers.size() << ',' << fmt_full(med) << '\n';
    std::cout << std::left << std::setw(28) << id << std::right << std::setw(4) << a.k
              << std::setw(4) << a.s << std::setw(8) << a.lambda << std::setw(7)
              << a.cers.size() << std::setw(16)
              << (a.cers.empty() ? std::string("n/a") : fmt_pct(med));
    if (a.aborted) std::cout << "  (" << a.aborted << " aborted)";
    std::cout << "\n";
  }
  if (aborted_cells)
    std::cerr << "warning: " << aborted_cells << " runs aborted on non-finite signals\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// grad-check

int cmd_grad_check(bool inject_sign_bug) {
  bool all_ok = true;
  const auto report_line = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << what << "\n";
    all_ok = all_ok && ok;
  };

  // two independent window routes must agree to near machine precision
  {
    Rng rng = substream(404, "gc-linearity");
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const int u = rng.uniform_int(1, 12);
      const int k = rng.uniform_int(1, 5);
      const int s = rng.uniform_int(1, 5);
      Eigen::VectorXd w(k);
      for (int i = 0; i < k; ++i) w[i] = rng.uniform(0.05, 1.0);
      const PcpgKernel kernel(k, s, w);
      Eigen::VectorXd losses(u);
      for (int i = 0; i < u; ++i) losses[i] = rng.normal();
      for (const BoundaryPolicy p : {BoundaryPolicy::ZeroPad, BoundaryPolicy::Truncate}) {
        const double via_windows = aggregate(window_map(losses, kernel, p));
        const double via_coeffs = coefficient_map(kernel, u, p).dot(losses);
        worst = std::max(worst, std::abs(via_windows - via_coeffs));
      }
    }
    std::ostringstream what;
    what << "window map vs closed-form coefficients: 50 random kernels, max |diff| "
         << fmt_g(worst);
    report_line(worst < 1e-12, what.str());
  }

  // finite differences through the full model for each objective
  ModelConfig mc;
  mc.feature_dim = 8;
  mc.embed_dim = 3;
  mc.enc_hidden = 3;
  mc.dec_hidden = 4;
  mc.attn_dim = 3;
  mc.dropout = 0.0;
  Seq2Seq model(mc);
  model.init_params(99);

  Rng rng = substream(404, "gc-data");
  ad::Matrix frames(5, mc.feature_dim);
  for (int r = 0; r < frames.rows(); ++r)
    for (int c = 0; c < frames.cols(); ++c) frames(r, c) = rng.normal();
  std::vector<int> toks(3);
  for (int& t : toks) t = vocab::kFirstLetter + rng.uniform_int(0, 25);
  const TokenSequence target = with_eos(TokenSequence(std::move(toks)));

  Eigen::VectorXd tent(3);
  tent << 0.25, 0.5, 0.25;
  const struct {
    const char* name;
    Objective obj;
    PcpgKernel kernel;
    double lambda;
  } suites[] = {
      {"cross-entropy gradient", Objective::CrossEntropy, PcpgKernel::uniform(1, 1), 0.0},
      {"policy-gradient gradient (k=3 s=2, tent weights)", Objective::PolicyGradient,
       PcpgKernel(3, 2, tent), 1.0},
      {"combined gradient (lambda 0.5, k=3 s=1)", Objective::Combined,
       PcpgKernel::uniform(3, 1), 0.5},
  };
  for (const auto& suite : suites) {
    const GradCheckReport rep =
        objective_gradient_check(model, frames, target, suite.obj, suite.kernel,
                                 suite.lambda, 505, 1e-5, inject_sign_bug);
    std::ostringstream what;
    what << suite.name << ": " << rep.checked << " entries, max rel err "
         << fmt_g(rep.max_rel_error);
    if (!rep.passed(1e-4))
      what << " (worst " << rep.worst.name << "[" << rep.worst.row << ","
           << rep.worst.col << "] analytic " << fmt_g(rep.worst.analytic) << " vs fd "
           << fmt_g(rep.worst.numeric) << ")";
    report_line(rep.passed(1e-4), what.str());
  }

  if (!all_ok) {
    std::cerr << "gradient check failed\n";
    return kExitNumerical;
  }
  std::cout << "all gradient checks passed\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"pseudo-convolutional policy-gradient training for attention seq2seq"};
  app.require_subcommand(1);

  GenDataArgs ga;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset file");
  gen->add_option("--config", ga.config_path, "config file supplying defaults");
  gen->add_option("--out", ga.out, "destination dataset file")->required();
  gen->add_flag("--force", ga.force, "overwrite an existing file");
  const CLI::Option* g_task =
      gen->add_option("--task", ga.task, "copy | reverse | sentences | words");
  const CLI::Option* g_n = gen->add_option("--n", ga.n, "sample count");
  const CLI::Option* g_min_len = gen->add_option("--min-len", ga.min_len);
  const CLI::Option* g_max_len = gen->add_option("--max-len", ga.max_len);
  const CLI::Option* g_min_words = gen->add_option("--min-words", ga.min_words);
  const CLI::Option* g_max_words = gen->add_option("--max-words", ga.max_words);
  const CLI::Option* g_classes = gen->add_option("--n-classes", ga.n_classes);
  const CLI::Option* g_per_class = gen->add_option("--per-class", ga.per_class);
  const CLI::Option* g_feat = gen->add_option("--feature-dim", ga.feature_dim);
  const CLI::Option* g_noise = gen->add_option("--noise", ga.noise);
  const CLI::Option* g_min_rep = gen->add_option("--min-repeat", ga.min_repeat);
  const CLI::Option* g_max_rep = gen->add_option("--max-repeat", ga.max_repeat);
  const CLI::Option* g_seed = gen->add_option("--seed", ga.seed, "generation seed");

  std::string t_config, t_out;
  std::uint64_t t_seed = 0;
  bool t_resume = false;
  CLI::App* tr = app.add_subcommand("train", "train one model from a config file");
  tr->add_option("--config", t_config, "experiment config file")->required();
  const CLI::Option* t_seed_opt =
      tr->add_option("--seed", t_seed, "override the training seed");
  tr->add_option("--out", t_out, "override the output directory");
  tr->add_flag("--resume", t_resume, "continue from the latest checkpoint");

  std::string e_ckpt, e_data;
  int e_beam = 4, e_limit = 0, e_max_len = 24;
  CLI::App* ev = app.add_subcommand("eval", "score a checkpoint on a dataset file");
  ev->add_option("--checkpoint", e_ckpt, "model checkpoint")->required();
  ev->add_option("--data", e_data, "dataset file")->required();
  ev->add_option("--beam", e_beam, "beam width, 1 = greedy only");
  ev->add_option("--limit", e_limit, "score at most this many samples, 0 = all");
  ev->add_option("--max-len", e_max_len, "decode length cap");

  std::string s_config, s_out;
  CLI::App* sw =
      app.add_subcommand("sweep", "train every kernel/lambda cell in a config's grid");
  sw->add_option("--config", s_config, "experiment config file")->required();
  sw->add_option("--out", s_out, "override the output directory");

  bool gc_inject = false;
  CLI::App* gc = app.add_subcommand("grad-check",
                                    "finite-difference audit of the training gradients");
  gc->add_flag("--inject-sign-bug", gc_inject)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      ga.has_task = g_task->count() > 0;
      ga.has_n = g_n->count() > 0;
      ga.has_min_len = g_min_len->count() > 0;
      ga.has_max_len = g_max_len->count() > 0;
      ga.has_min_words = g_min_words->count() > 0;
      ga.has_max_words = g_max_words->count() > 0;
      ga.has_n_classes = g_classes->count() > 0;
      ga.has_per_class = g_per_class->count() > 0;
      ga.has_feature_dim = g_feat->count() > 0;
      ga.has_noise = g_noise->count() > 0;
      ga.has_min_repeat = g_min_rep->count() > 0;
      ga.has_max_repeat = g_max_rep->count() > 0;
      ga.has_seed = g_seed->count() > 0;
      return cmd_gen_data(ga);
    }
    if (tr->parsed())
      return cmd_train(t_config,
                       t_seed_opt->count() > 0 ? std::optional<std::uint64_t>(t_seed)
                                               : std::nullopt,
                       t_out, t_resume);
    if (ev->parsed()) return cmd_eval(e_ckpt, e_data, e_beam, e_limit, e_max_len);
    if (sw->parsed()) return cmd_sweep(s_config, s_out);
    if (gc->parsed()) return cmd_grad_check(gc_inject);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace pcpg
