#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pcpg/checkpoint.hpp"
#include "pcpg/gradcheck.hpp"
#include "pcpg/kernel.hpp"
#include "pcpg/model.hpp"
#include "pcpg/reward.hpp"
#include "pcpg/tasks.hpp"

namespace pcpg {

struct TrainConfig {
  double lambda = 0.5;  // 0 is pure cross-entropy, 1 is pure policy gradient
  double gamma = 0.99;
  int mc_samples = 1;  // episodes drawn per training sample
  PcpgKernel kernel = PcpgKernel::uniform(5, 1);
  BoundaryPolicy padding = BoundaryPolicy::ZeroPad;
  DiscountMode discount = DiscountMode::EndAnchored;
  double lr = 1e-3;
  std::string optimizer = "adam";  // or "sgd"
  int batch_size = 16;
  int max_iters = 20000;
  std::uint64_t seed = 1;
  // When set, the cross-entropy term scores the model's own sampled
  // sequences instead of the ground-truth transcript.
  bool ce_on_samples = false;
  int max_decode_len = 24;
  int eval_every = 200;
  int checkpoint_every = 2000;
  int eval_samples = 64;       // per-eval decode budget, 0 = everything
  double stop_at_cer = -1.0;   // stop once val CER drops this low; negative disables
  int patience = 0;            // evals without val improvement before stopping; 0 disables

  void validate() const;  // throws std::invalid_argument
};

// Negative sum of reference log-probabilities.
ad::Var ce_loss(ad::Tape& tape, std::span<const ad::Var> ref_log_probs);

// Windowed policy-gradient loss of one episode; the episode's returns must
// be filled in. Empty episodes contribute a constant zero.
ad::Var pcpg_episode_loss(ad::Tape& tape, const Episode& episode,
                          const PcpgKernel& kernel, BoundaryPolicy padding);

// Plain REINFORCE loss, composed without any window machinery; the
// independent reference route for the k=1, s=1 degeneracy.
ad::Var reinforce_episode_loss(ad::Tape& tape, const Episode& episode);

// Which training objective a gradient check exercises.
enum class Objective { CrossEntropy, PolicyGradient, Combined };

// Finite-difference check of d(objective)/d(theta) over every parameter of
// the model. The policy-gradient episode is sampled once from episode_seed
// and then frozen, so the objective is a deterministic function of the
// parameters. flip_analytic_sign negates the backward result before
// comparing; it exists so the failure path of the checker itself can be
// demonstrated.
GradCheckReport objective_gradient_check(Seq2Seq& model, const ad::Matrix& frames,
                                         const TokenSequence& target, Objective objective,
                                         const PcpgKernel& kernel, double lambda,
                                         std::uint64_t episode_seed, double eps = 1e-5,
                                         bool flip_analytic_sign = false);

// One batch forward/backward at a fixed iteration number. All randomness
// (episode sampling, dropout) is keyed by (config.seed, iter, position), so
// a step is replayable in isolation.
struct TrainStep {
  double loss_ce = 0.0;
  double loss_pcpg = 0.0;
  double loss_combined = 0.0;
  double grad_norm = 0.0;      // of the batch-mean gradient
  double grad_variance = 0.0;  // per-coordinate variance across the batch, averaged
  std::vector<ad::Matrix> grads;  // batch mean, parameter-store order
};
TrainStep combined_step(const Seq2Seq& model, std::span<const SyntheticSample* const> batch,
                        const TrainConfig& config, std::uint64_t iter);

// sgd: theta -= lr * g.  adam: bias-corrected moments, beta1 0.9, beta2
// 0.999, eps 1e-8. State survives checkpoint round trips bit-exactly.
class Optimizer {
 public:
  Optimizer(std::string kind, double lr, ParamStore& params);

  void apply(const std::vector<ad::Matrix>& grads);
  long step_count() const { return step_; }

  void to_checkpoint(Checkpoint& ckpt) const;
  void from_checkpoint(const Checkpoint& ckpt);

 private:
  std::string kind_;
  double lr_;
  ParamStore* params_;
  long step_ = 0;
  std::vector<ad::Matrix> m_, v_;  // adam first/second moments
};

// Model weights + dimensions as a checkpoint; dimension mismatch on load is
// an error.
Checkpoint make_model_checkpoint(const Seq2Seq& model);
void load_model_checkpoint(const Checkpoint& ckpt, Seq2Seq& model);
ModelConfig config_from_checkpoint(const Checkpoint& ckpt);

// Greedy (and optionally beam) decoding over a dataset. CER/WER are pooled:
// total edits over total reference length. limit 0 scores every sample.
struct EvalSummary {
  double cer = 1.0;
  double wer = 1.0;
  double beam_cer = 1.0;
  double beam_wer = 1.0;
  double mean_log_prob = 0.0;       // greedy, per sample
  double mean_beam_log_prob = 0.0;  // raw cumulative
  std::vector<double> sample_cer;   // greedy, per sample
  int scored = 0;
};
EvalSummary evaluate(const Seq2Seq& model, const Dataset& data, int beam_width,
                     int max_len, int limit = 0);

// Full loop: samples batches, steps the optimizer, logs
// `iter,loss_ce,loss_pcpg,loss_combined,train_cer,val_cer,grad_norm,seconds`
// to out_dir/metrics.csv (appending when resuming), per-iteration gradient
// variance to out_dir/diagnostics.csv, and rolling checkpoints with
// optimizer state to out_dir/checkpoint_latest.bin. Aborts on non-finite
// loss or gradient instead of logging garbage.
struct TrainResult {
  int iterations = 0;  // last iteration executed
  double final_val_cer = 1.0;
  double best_val_cer = 1.0;
  bool aborted_non_finite = false;
  bool stopped_early = false;
};
TrainResult train(Seq2Seq& model, const Dataset& train_data, const Dataset& val_data,
                  const TrainConfig& config, const std::filesystem::path& out_dir,
                  bool resume = false, std::ostream* log = nullptr);

// Single-layer softmax read-out on mean-pooled encoder outputs over a
// labeled word dataset; the decoder never runs. train_encoder false freezes
// the encoder (probe head only), true fine-tunes it.
struct ProbeConfig {
  int iters = 1500;
  double lr = 1e-3;
  int batch_size = 16;
  std::uint64_t seed = 1;
  std::string optimizer = "adam";
  bool train_encoder = false;
};
struct ProbeResult {
  double accuracy = 0.0;        // on eval_data
  double train_accuracy = 0.0;  // on train_data
  int n_classes = 0;
};
ProbeResult classifier_probe(Seq2Seq& model, const Dataset& train_data,
                             const Dataset& eval_data, const ProbeConfig& config);

}  // namespace pcpg
