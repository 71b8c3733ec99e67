#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcpg/reward.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/tape.hpp"
#include "pcpg/token_sequence.hpp"

namespace pcpg {

struct ModelConfig {
  int feature_dim = 48;
  int embed_dim = 24;
  int enc_hidden = 32;  // per direction
  int dec_hidden = 64;
  int attn_dim = 32;
  int enc_layers = 2;
  int dec_layers = 2;
  int vocab_size = 40;
  double dropout = 0.5;  // decoder output, train mode only
};

// Named parameter tensors in a fixed registration order. The order defines
// gradient accumulation and checkpoint layout.
class ParamStore {
 public:
  std::size_t add(const std::string& name, ad::Matrix value);
  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const ad::Matrix& value(std::size_t i) const { return values_[i]; }
  ad::Matrix& value(std::size_t i) { return values_[i]; }
  std::size_t index(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<ad::Matrix> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One Monte-Carlo rollout. log_probs are tape handles so the episode's loss
// stays differentiable; tokens are truncated at the first EOS (excluded).
struct Episode {
  TokenSequence tokens;
  std::vector<ad::Var> log_probs;  // one per kept token
  RewardTrace reward;              // filled by the trainer
  bool hit_eos = false;
};

struct DecodeResult {
  TokenSequence tokens;  // EOS stripped
  double log_prob = 0.0;
  bool hit_eos = false;
};

struct BeamResult {
  TokenSequence tokens;
  double log_prob = 0.0;    // raw cumulative log-probability
  double normalized = 0.0;  // log_prob / emitted length
  bool hit_eos = false;
};

// Bidirectional-GRU encoder + additive attention + GRU decoder over the
// 40-symbol vocabulary. Parameters live in a ParamStore; every forward pass
// binds them onto a caller-owned tape so each training sample gets a fresh
// graph.
class Seq2Seq {
 public:
  explicit Seq2Seq(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Scaled-normal initialization, deterministic per tensor name.
  void init_params(std::uint64_t seed);

  // Parameter leaves on a tape, in store order.
  struct Bound {
    ad::Tape* tape = nullptr;
    std::vector<ad::Var> vars;
  };
  Bound bind(ad::Tape& tape, bool requires_grad = true) const;

  struct EncoderGraph {
    ad::Var outputs;                 // T x 2H
    ad::Var keys;                    // T x A, attention keys precomputed once
    std::vector<ad::Var> fwd_final;  // per layer, 1 x H
    std::vector<ad::Var> bwd_final;  // per layer, 1 x H
    int t_len = 0;
  };
  // frames: T x F. Throws on width mismatch or empty input.
  EncoderGraph encode(Bound& bound, const ad::Matrix& frames) const;

  // Per-layer decoder start states derived from the encoder finals.
  std::vector<ad::Var> initial_state(Bound& bound, const EncoderGraph& enc) const;

  // Additive attention: (weights 1 x T on the simplex, context 1 x 2H).
  std::pair<ad::Var, ad::Var> attend(Bound& bound, ad::Var h_top,
                                     const EncoderGraph& enc) const;

  struct StepResult {
    std::vector<ad::Var> hidden;  // advanced per-layer states
    ad::Var logits;               // 1 x vocab
    ad::Var attention;            // 1 x T simplex
  };
  // Advance one step fed with token y_prev. dropout_rng enables the training
  // dropout mask; pass nullptr for inference.
  StepResult decode_step(Bound& bound, const std::vector<ad::Var>& hidden, int y_prev,
                         const EncoderGraph& enc, Rng* dropout_rng) const;

  // Log-probabilities of each target token under teacher forcing; the caller
  // supplies the EOS-terminated target. Output length == |target|.
  std::vector<ad::Var> decode_teacher_forced(Bound& bound, const EncoderGraph& enc,
                                             const TokenSequence& target,
                                             Rng* dropout_rng) const;

  // Feed back own samples until EOS or max_len. temperature 0 is argmax.
  Episode sample_episode(Bound& bound, const EncoderGraph& enc, int max_len, Rng& rng,
                         Rng* dropout_rng, double temperature = 1.0) const;

  // allowed: optional token whitelist (must include EOS to ever stop);
  // empty means the full vocabulary.
  DecodeResult greedy_decode(Bound& bound, const EncoderGraph& enc, int max_len,
                             std::span<const int> allowed = {}) const;
  BeamResult beam_search(Bound& bound, const EncoderGraph& enc, int width, int max_len,
                         std::span<const int> allowed = {}) const;

  // Raw log-probability of forcing exactly `tokens` (+ EOS when requested);
  // the oracle route for beam-search equivalence checks.
  double score_sequence(Bound& bound, const EncoderGraph& enc, const TokenSequence& tokens,
                        bool end_with_eos, std::span<const int> allowed = {}) const;

 private:
  struct GruCellRef {
    ad::Var wxz, whz, bz, wxr, whr, br, wxn, whn, bn;
  };
  GruCellRef cell(const Bound& bound, const std::string& prefix) const;
  ad::Var var(const Bound& bound, const std::string& name) const;
  ad::Var gru_advance(ad::Tape& t, const GruCellRef& c, ad::Var x, ad::Var h) const;
  Eigen::RowVectorXd restricted_log_softmax(const ad::Matrix& logits,
                                            std::span<const int> allowed) const;

  ModelConfig config_;
  ParamStore params_;
};

}  // namespace pcpg
