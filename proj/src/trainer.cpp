#include "pcpg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "pcpg/metrics.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/vocab.hpp"

namespace pcpg {

namespace {

// shortest round-trip-exact decimal
std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("TrainConfig: lambda must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("TrainConfig: gamma must lie in [0, 1]");
  if (mc_samples < 1) throw std::invalid_argument("TrainConfig: mc_samples must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (optimizer != "sgd" && optimizer != "adam")
    throw std::invalid_argument("TrainConfig: optimizer must be 'sgd' or 'adam'");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("TrainConfig: max_iters must be >= 1");
  if (max_decode_len < 1)
    throw std::invalid_argument("TrainConfig: max_decode_len must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
  if (checkpoint_every < 1)
    throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
  if (eval_samples < 0)
    throw std::invalid_argument("TrainConfig: eval_samples must be >= 0");
  if (patience < 0) throw std::invalid_argument("TrainConfig: patience must be >= 0");
}

ad::Var ce_loss(ad::Tape& tape, std::span<const ad::Var> ref_log_probs) {
  if (ref_log_probs.empty())
    throw std::invalid_argument("ce_loss: no log-probabilities");
  return tape.scale(tape.add_n(ref_log_probs), -1.0);
}

ad::Var pcpg_episode_loss(ad::Tape& tape, const Episode& episode,
                          const PcpgKernel& kernel, BoundaryPolicy padding) {
  if (episode.log_probs.empty()) return tape.scalar(0.0);
  if (episode.reward.returns.size() !=
      static_cast<Eigen::Index>(episode.log_probs.size()))
    throw std::invalid_argument("pcpg_episode_loss: returns do not match the episode");
  std::vector<ad::Var> steps;
  steps.reserve(episode.log_probs.size());
  for (std::size_t u = 0; u < episode.log_probs.size(); ++u)
    steps.push_back(tape.scale(episode.log_probs[u],
                               -episode.reward.returns[static_cast<Eigen::Index>(u)]));
  return windowed_loss(tape, steps, kernel, padding);
}

ad::Var reinforce_episode_loss(ad::Tape& tape, const Episode& episode) {
  if (episode.log_probs.empty()) return tape.scalar(0.0);
  if (episode.reward.returns.size() !=
      static_cast<Eigen::Index>(episode.log_probs.size()))
    throw std::invalid_argument("reinforce_episode_loss: returns do not match the episode");
  std::vector<ad::Var> steps;
  steps.reserve(episode.log_probs.size());
  for (std::size_t u = 0; u < episode.log_probs.size(); ++u)
    steps.push_back(tape.scale(episode.log_probs[u],
                               -episode.reward.returns[static_cast<Eigen::Index>(u)]));
  return tape.add_n(steps);
}

GradCheckReport objective_gradient_check(Seq2Seq& model, const ad::Matrix& frames,
                                         const TokenSequence& target, Objective objective,
                                         const PcpgKernel& kernel, double lambda,
                                         std::uint64_t episode_seed, double eps,
                                         bool flip_analytic_sign) {
  const int max_len = static_cast<int>(strip_controls(target).size()) + 2;

  // Freeze one sampled episode up front; afterwards every evaluation is a
  // deterministic function of the parameters.
  TokenSequence sampled;
  if (objective != Objective::CrossEntropy) {
    ad::Tape tape;
    auto bound = model.bind(tape, false);
    const auto enc = model.encode(bound, frames);
    for (std::uint64_t attempt = 0; attempt < 16 && sampled.empty(); ++attempt) {
      Rng rng = substream(episode_seed, "gradcheck-episode", attempt);
      sampled = model.sample_episode(bound, enc, max_len, rng, nullptr).tokens;
    }
    if (sampled.empty())
      throw std::runtime_error("objective_gradient_check: sampled only empty episodes");
  }
  Eigen::VectorXd returns;
  if (!sampled.empty())
    returns = discounted_returns(immediate_rewards(sampled, strip_controls(target)), 0.99,
                                 DiscountMode::EndAnchored);

  const auto build = [&](ad::Tape& tape, Seq2Seq::Bound& bound) {
    const auto enc = model.encode(bound, frames);
    ad::Var ce = tape.scalar(0.0);
    if (objective != Objective::PolicyGradient)
      ce = ce_loss(tape, model.decode_teacher_forced(bound, enc, target, nullptr));
    ad::Var pg = tape.scalar(0.0);
    if (objective != Objective::CrossEntropy) {
      const auto lps = model.decode_teacher_forced(bound, enc, sampled, nullptr);
      std::vector<ad::Var> steps;
      steps.reserve(lps.size());
      for (std::size_t u = 0; u < lps.size(); ++u)
        steps.push_back(tape.scale(lps[u], -returns[static_cast<Eigen::Index>(u)]));
      pg = windowed_loss(tape, steps, kernel, BoundaryPolicy::ZeroPad);
    }
    switch (objective) {
      case Objective::CrossEntropy:
        return ce;
      case Objective::PolicyGradient:
        return pg;
      default:
        return tape.add(tape.scale(ce, 1.0 - lambda), tape.scale(pg, lambda));
    }
  };

  std::vector<ad::Matrix> base;
  base.reserve(model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i)
    base.push_back(model.params().value(i));
  const auto restore = [&] {
    for (std::size_t i = 0; i < base.size(); ++i) model.params().value(i) = base[i];
  };

  const auto loss_at = [&](const std::vector<ad::Matrix>& point) {
    for (std::size_t i = 0; i < point.size(); ++i) model.params().value(i) = point[i];
    ad::Tape tape;
    auto bound = model.bind(tape, false);
    return tape.value(build(tape, bound))(0, 0);
  };

  restore();
  ad::Tape tape;
  auto bound = model.bind(tape, true);
  tape.backward(build(tape, bound));

  std::vector<GradCheckInput> inputs;
  inputs.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    ad::Matrix g = tape.grad(bound.vars[i]);
    if (flip_analytic_sign) g = -g;
    inputs.push_back({model.params().name(i), base[i], std::move(g)});
  }
  const GradCheckReport report = gradient_check(loss_at, inputs, eps);
  restore();
  return report;
}

TrainStep combined_step(const Seq2Seq& model, std::span<const SyntheticSample* const> batch,
                        const TrainConfig& config, std::uint64_t iter) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("combined_step: empty batch");

  const ParamStore& params = model.params();
  const std::size_t n_params = params.size();
  TrainStep out;
  out.grads.reserve(n_params);
  std::vector<ad::Matrix> sumsq;
  sumsq.reserve(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    out.grads.push_back(ad::Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
    sumsq.push_back(out.grads.back());
  }

  const bool want_episodes = config.lambda > 0.0 || config.ce_on_samples;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const SyntheticSample& sample = *batch[b];
    ad::Tape tape;
    auto bound = model.bind(tape, true);
    const auto enc = model.encode(bound, sample.frames);

    ad::Var ce{};
    if (!config.ce_on_samples) {
      Rng dropout = substream(config.seed, "ce-dropout", iter, b);
      const auto lps =
          model.decode_teacher_forced(bound, enc, with_eos(sample.transcript), &dropout);
      ce = ce_loss(tape, lps);
    }

    ad::Var pg{};
    if (want_episodes) {
      std::vector<ad::Var> ep_losses, ep_ces;
      for (int m = 0; m < config.mc_samples; ++m) {
        const std::uint64_t slot =
            b * static_cast<std::uint64_t>(config.mc_samples) + static_cast<std::uint64_t>(m);
        Rng ep_rng = substream(config.seed, "episode", iter, slot);
        Rng ep_dropout = substream(config.seed, "episode-dropout", iter, slot);
        Episode ep =
            model.sample_episode(bound, enc, config.max_decode_len, ep_rng, &ep_dropout);
        if (!ep.tokens.empty())
          ep.reward =
              reward_trace(ep.tokens, sample.transcript, config.gamma, config.discount);
        ep_losses.push_back(pcpg_episode_loss(tape, ep, config.kernel, config.padding));
        if (config.ce_on_samples)
          ep_ces.push_back(ep.log_probs.empty() ? tape.scalar(0.0)
                                                : ce_loss(tape, ep.log_probs));
      }
      pg = tape.scale(tape.add_n(ep_losses), 1.0 / config.mc_samples);
      if (config.ce_on_samples)
        ce = tape.scale(tape.add_n(ep_ces), 1.0 / config.mc_samples);
    }

    ad::Var loss{};
    if (config.lambda == 0.0)
      loss = ce;
    else if (config.lambda == 1.0)
      loss = pg;
    else
      loss = tape.add(tape.scale(ce, 1.0 - config.lambda), tape.scale(pg, config.lambda));

    tape.backward(loss);
    for (std::size_t i = 0; i < n_params; ++i) {
      const ad::Matrix& g = tape.grad(bound.vars[i]);
      out.grads[i] += g;
      sumsq[i].array() += g.array().square();
    }
    out.loss_ce += tape.value(ce)(0, 0);
    out.loss_pcpg += want_episodes ? tape.value(pg)(0, 0) : 0.0;
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  out.loss_ce *= inv_b;
  out.loss_pcpg *= inv_b;
  // derived from the means so the logged decomposition holds exactly
  out.loss_combined = combine(out.loss_ce, out.loss_pcpg, config.lambda);

  double sq_norm = 0.0;
  double var_total = 0.0;
  std::size_t coords = 0;
  for (std::size_t i = 0; i < n_params; ++i) {
    out.grads[i] *= inv_b;
    sq_norm += out.grads[i].squaredNorm();
    var_total += (sumsq[i].array() * inv_b - out.grads[i].array().square())
                     .max(0.0)
                     .sum();
    coords += static_cast<std::size_t>(out.grads[i].size());
  }
  out.grad_norm = std::sqrt(sq_norm);
  out.grad_variance = var_total / static_cast<double>(coords);
  return out;
}

Optimizer::Optimizer(std::string kind, double lr, ParamStore& params)
    : kind_(std::move(kind)), lr_(lr), params_(&params) {
  if (kind_ != "sgd" && kind_ != "adam")
    throw std::invalid_argument("Optimizer: kind must be 'sgd' or 'adam'");
  if (!(lr_ > 0.0)) throw std::invalid_argument("Optimizer: lr must be positive");
  if (kind_ == "adam") {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(ad::Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
      v_.push_back(m_.back());
    }
  }
}

void Optimizer::apply(const std::vector<ad::Matrix>& grads) {
  if (grads.size() != params_->size())
    throw std::invalid_argument("Optimizer::apply: gradient count mismatch");
  ++step_;
  if (kind_ == "sgd") {
    for (std::size_t i = 0; i < grads.size(); ++i)
      params_->value(i) -= lr_ * grads[i];
    return;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
    v_[i].array() = kBeta2 * v_[i].array() + (1.0 - kBeta2) * grads[i].array().square();
    params_->value(i).array() -=
        lr_ * (m_[i].array() / corr1) / ((v_[i].array() / corr2).sqrt() + kEps);
  }
}

void Optimizer::to_checkpoint(Checkpoint& ckpt) const {
  ckpt.meta.push_back({"opt.kind", kind_});
  ckpt.meta.push_back({"opt.step", std::to_string(step_)});
  ckpt.meta.push_back({"opt.lr", g17(lr_)});
  if (kind_ == "adam") {
    for (std::size_t i = 0; i < m_.size(); ++i) {
      ckpt.tensors.push_back({"opt.m." + params_->name(i), m_[i]});
      ckpt.tensors.push_back({"opt.v." + params_->name(i), v_[i]});
    }
  }
}

void Optimizer::from_checkpoint(const Checkpoint& ckpt) {
  const std::string* kind = ckpt.find_meta("opt.kind");
  const std::string* step = ckpt.find_meta("opt.step");
  if (!kind || !step)
    throw std::runtime_error("Optimizer: checkpoint carries no optimizer state");
  if (*kind != kind_)
    throw std::runtime_error("Optimizer: checkpoint was written by '" + *kind +
                             "', this run uses '" + kind_ + "'");
  step_ = std::stol(*step);
  if (kind_ != "adam") return;
  for (std::size_t i = 0; i < params_->size(); ++i) {
    const ad::Matrix* m = ckpt.find_tensor("opt.m." + params_->name(i));
    const ad::Matrix* v = ckpt.find_tensor("opt.v." + params_->name(i));
    if (!m || !v)
      throw std::runtime_error("Optimizer: checkpoint lacks moments for " +
                               params_->name(i));
    if (m->rows() != m_[i].rows() || m->cols() != m_[i].cols())
      throw std::runtime_error("Optimizer: moment shape mismatch for " +
                               params_->name(i));
    m_[i] = *m;
    v_[i] = *v;
  }
}

Checkpoint make_model_checkpoint(const Seq2Seq& model) {
  Checkpoint ckpt;
  const ModelConfig& c = model.config();
  ckpt.meta = {{"feature_dim", std::to_string(c.feature_dim)},
               {"embed_dim", std::to_string(c.embed_dim)},
               {"enc_hidden", std::to_string(c.enc_hidden)},
               {"dec_hidden", std::to_string(c.dec_hidden)},
               {"attn_dim", std::to_string(c.attn_dim)},
               {"enc_layers", std::to_string(c.enc_layers)},
               {"dec_layers", std::to_string(c.dec_layers)},
               {"vocab_size", std::to_string(c.vocab_size)},
               {"dropout", g17(c.dropout)}};
  const ParamStore& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i)
    ckpt.tensors.push_back({params.name(i), params.value(i)});
  return ckpt;
}

ModelConfig config_from_checkpoint(const Checkpoint& ckpt) {
  const auto geti = [&](const char* key) {
    const std::string* v = ckpt.find_meta(key);
    if (!v)
      throw std::runtime_error(std::string("checkpoint lacks model field ") + key);
    return std::stoi(*v);
  };
  ModelConfig c;
  c.feature_dim = geti("feature_dim");
  c.embed_dim = geti("embed_dim");
  c.enc_hidden = geti("enc_hidden");
  c.dec_hidden = geti("dec_hidden");
  c.attn_dim = geti("attn_dim");
  c.enc_layers = geti("enc_layers");
  c.dec_layers = geti("dec_layers");
  c.vocab_size = geti("vocab_size");
  const std::string* dropout = ckpt.find_meta("dropout");
  if (!dropout) throw std::runtime_error("checkpoint lacks model field dropout");
  c.dropout = std::strtod(dropout->c_str(), nullptr);
  return c;
}

void load_model_checkpoint(const Checkpoint& ckpt, Seq2Seq& model) {
  ParamStore& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Matrix* t = ckpt.find_tensor(params.name(i));
    if (!t)
      throw std::runtime_error("checkpoint lacks tensor " + params.name(i));
    if (t->rows() != params.value(i).rows() || t->cols() != params.value(i).cols())
      throw std::runtime_error("checkpoint tensor " + params.name(i) +
                               " has the wrong shape");
    params.value(i) = *t;
  }
}

namespace {

struct PooledErrors {
  long edits = 0;
  long length = 0;
  double rate() const { return length > 0 ? static_cast<double>(edits) / length : 1.0; }
};

void pool_cer(PooledErrors& pool, const TokenSequence& hyp, const TokenSequence& ref) {
  const TokenSequence h = strip_controls(hyp);
  const TokenSequence r = strip_controls(ref);
  pool.edits += edit_distance(h, r);
  pool.length += static_cast<long>(r.size());
}

}  // namespace

EvalSummary evaluate(const Seq2Seq& model, const Dataset& data, int beam_width,
                     int max_len, int limit) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (max_len < 1) throw std::invalid_argument("evaluate: max_len must be >= 1");
  const std::size_t n =
      limit > 0 ? std::min(data.size(), static_cast<std::size_t>(limit)) : data.size();

  EvalSummary out;
  PooledErrors greedy_pool, beam_pool;
  double wer_sum = 0.0, beam_wer_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SyntheticSample& sample = data.samples[i];
    ad::Tape tape;
    auto bound = model.bind(tape, false);
    const auto enc = model.encode(bound, sample.frames);
    const DecodeResult greedy = model.greedy_decode(bound, enc, max_len);
    pool_cer(greedy_pool, greedy.tokens, sample.transcript);
    out.sample_cer.push_back(cer(greedy.tokens, sample.transcript));
    wer_sum += wer(greedy.tokens, sample.transcript, vocab::kSpace);
    out.mean_log_prob += greedy.log_prob;
    if (beam_width > 1) {
      const BeamResult beam = model.beam_search(bound, enc, beam_width, max_len);
      pool_cer(beam_pool, beam.tokens, sample.transcript);
      beam_wer_sum += wer(beam.tokens, sample.transcript, vocab::kSpace);
      out.mean_beam_log_prob += beam.log_prob;
    }
  }
  out.scored = static_cast<int>(n);
  out.cer = greedy_pool.rate();
  out.wer = wer_sum / static_cast<double>(n);
  out.mean_log_prob /= static_cast<double>(n);
  if (beam_width > 1) {
    out.beam_cer = beam_pool.rate();
    out.beam_wer = beam_wer_sum / static_cast<double>(n);
    out.mean_beam_log_prob /= static_cast<double>(n);
  } else {
    out.beam_cer = out.cer;
    out.beam_wer = out.wer;
    out.mean_beam_log_prob = out.mean_log_prob;
  }
  return out;
}

TrainResult train(Seq2Seq& model, const Dataset& train_data, const Dataset& val_data,
                  const TrainConfig& config, const std::filesystem::path& out_dir,
                  bool resume, std::ostream* log) {
  config.validate();
  if (train_data.empty() || val_data.empty())
    throw std::invalid_argument("train: datasets must be non-empty");
  if (train_data.feature_dim != model.config().feature_dim)
    throw std::invalid_argument("train: dataset feature width does not match the model");

  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / "metrics.csv";
  const auto diag_path = out_dir / "diagnostics.csv";
  const auto latest_path = out_dir / "checkpoint_latest.bin";
  const auto final_path = out_dir / "checkpoint_final.bin";

  Optimizer opt(config.optimizer, config.lr, model.params());
  int start_iter = 0;
  if (resume && std::filesystem::exists(latest_path)) {
    const Checkpoint ckpt = load_checkpoint(latest_path);
    load_model_checkpoint(ckpt, model);
    opt.from_checkpoint(ckpt);
    const std::string* it = ckpt.find_meta("iter");
    if (!it) throw std::runtime_error("train: resume checkpoint lacks iteration metadata");
    start_iter = std::stoi(*it);
    if (log) *log << "resuming from iteration " << start_iter << "\n";
  }

  const bool fresh = start_iter == 0;
  std::ofstream csv(csv_path, fresh ? std::ios::trunc : std::ios::app);
  std::ofstream diag(diag_path, fresh ? std::ios::trunc : std::ios::app);
  if (!csv || !diag)
    throw std::runtime_error("train: cannot open log files under " + out_dir.string());
  if (fresh) {
    csv << "iter,loss_ce,loss_pcpg,loss_combined,train_cer,val_cer,grad_norm,seconds\n";
    diag << "iter,grad_variance\n";
  }

  const auto save_state = [&](int iter, const std::filesystem::path& path,
                              bool with_optimizer) {
    Checkpoint ckpt = make_model_checkpoint(model);
    ckpt.meta.push_back({"iter", std::to_string(iter)});
    if (with_optimizer) opt.to_checkpoint(ckpt);
    save_checkpoint(path, ckpt);
  };

  TrainResult result;
  result.iterations = start_iter;
  result.best_val_cer = std::numeric_limits<double>::infinity();
  int since_improve = 0;
  std::vector<const SyntheticSample*> batch(static_cast<std::size_t>(config.batch_size));
  const auto t0 = std::chrono::steady_clock::now();

  for (int iter = start_iter + 1; iter <= config.max_iters; ++iter) {
    Rng batch_rng = substream(config.seed, "batch", static_cast<std::uint64_t>(iter));
    for (auto& slot : batch)
      slot = &train_data.samples[static_cast<std::size_t>(
          batch_rng.uniform_int(0, static_cast<int>(train_data.size()) - 1))];

    const TrainStep step =
        combined_step(model, batch, config, static_cast<std::uint64_t>(iter));
    result.iterations = iter;

    if (!std::isfinite(step.loss_ce) || !std::isfinite(step.loss_pcpg) ||
        !std::isfinite(step.loss_combined) || !std::isfinite(step.grad_norm)) {
      if (log)
        *log << "aborting: non-finite training signal at iteration " << iter
             << " (ce=" << step.loss_ce << " pcpg=" << step.loss_pcpg
             << " grad_norm=" << step.grad_norm << ")\n";
      save_state(iter - 1, latest_path, true);  // parameters predate the bad step
      result.aborted_non_finite = true;
      break;
    }

    opt.apply(step.grads);
    diag << iter << ',' << g17(step.grad_variance) << '\n';

    bool stopping = false;
    if (iter % config.eval_every == 0 || iter == config.max_iters) {
      const double train_cer =
          evaluate(model, train_data, 1, config.max_decode_len, config.eval_samples).cer;
      const double val_cer =
          evaluate(model, val_data, 1, config.max_decode_len, config.eval_samples).cer;
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char secbuf[32];
      std::snprintf(secbuf, sizeof(secbuf), "%.3f", seconds);
      csv << iter << ',' << g17(step.loss_ce) << ',' << g17(step.loss_pcpg) << ','
          << g17(step.loss_combined) << ',' << g17(train_cer) << ',' << g17(val_cer)
          << ',' << g17(step.grad_norm) << ',' << secbuf << '\n';
      csv.flush();

      result.final_val_cer = val_cer;
      if (val_cer < result.best_val_cer) {
        result.best_val_cer = val_cer;
        since_improve = 0;
      } else {
        ++since_improve;
      }
      if (config.stop_at_cer >= 0.0 && val_cer <= config.stop_at_cer) {
        stopping = true;
        result.stopped_early = true;
      }
      if (config.patience > 0 && since_improve >= config.patience) {
        stopping = true;
        result.stopped_early = true;
      }
      if (log)
        *log << "iter " << iter << " loss " << step.loss_combined << " val_cer "
             << val_cer << "\n";
    }

    if (iter % config.checkpoint_every == 0 || iter == config.max_iters || stopping)
      save_state(iter, latest_path, true);
    if (stopping) break;
  }

  if (!result.aborted_non_finite) save_state(result.iterations, final_path, false);
  if (!std::isfinite(result.best_val_cer)) result.best_val_cer = result.final_val_cer;
  return result;
}

ProbeResult classifier_probe(Seq2Seq& model, const Dataset& train_data,
                             const Dataset& eval_data, const ProbeConfig& config) {
  if (config.iters < 1 || config.batch_size < 1 || !(config.lr > 0.0))
    throw std::invalid_argument("classifier_probe: bad config");
  if (train_data.empty() || eval_data.empty())
    throw std::invalid_argument("classifier_probe: datasets must be non-empty");

  int n_classes = 0;
  for (const Dataset* d : {&train_data, &eval_data})
    for (const SyntheticSample& s : d->samples) {
      if (s.label < 0)
        throw std::invalid_argument("classifier_probe: dataset carries no labels");
      n_classes = std::max(n_classes, s.label + 1);
    }

  const int width = 2 * model.config().enc_hidden;
  ParamStore head;
  {
    Rng init = substream(config.seed, "probe-init");
    ad::Matrix w(width, n_classes);
    const double scale = 1.0 / std::sqrt(static_cast<double>(width));
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * init.normal();
    head.add("probe.w", std::move(w));
    head.add("probe.b", ad::Matrix::Zero(1, n_classes));
  }
  Optimizer head_opt(config.optimizer, config.lr, head);
  std::unique_ptr<Optimizer> enc_opt;
  if (config.train_encoder)
    enc_opt = std::make_unique<Optimizer>(config.optimizer, config.lr, model.params());

  // pooled logits for one sample; head vars are rebound per tape
  const auto forward = [&](ad::Tape& tape, Seq2Seq::Bound& bound,
                           const SyntheticSample& sample, ad::Var w, ad::Var b) {
    const auto enc = model.encode(bound, sample.frames);
    const auto t_len = tape.value(enc.outputs).rows();
    const ad::Var pool = tape.matmul(
        tape.leaf(ad::Matrix::Constant(1, t_len, 1.0 / static_cast<double>(t_len))),
        enc.outputs);
    return tape.add(tape.matmul(pool, w), b);
  };

  for (int iter = 1; iter <= config.iters; ++iter) {
    Rng batch_rng = substream(config.seed, "probe-batch", static_cast<std::uint64_t>(iter));
    std::vector<ad::Matrix> head_grads = {
        ad::Matrix::Zero(width, n_classes), ad::Matrix::Zero(1, n_classes)};
    std::vector<ad::Matrix> enc_grads;
    if (config.train_encoder)
      for (std::size_t i = 0; i < model.params().size(); ++i)
        enc_grads.push_back(ad::Matrix::Zero(model.params().value(i).rows(),
                                             model.params().value(i).cols()));

    for (int bi = 0; bi < config.batch_size; ++bi) {
      const SyntheticSample& sample = train_data.samples[static_cast<std::size_t>(
          batch_rng.uniform_int(0, static_cast<int>(train_data.size()) - 1))];
      ad::Tape tape;
      auto bound = model.bind(tape, config.train_encoder);
      const ad::Var w = tape.leaf(head.value(0), true);
      const ad::Var b = tape.leaf(head.value(1), true);
      const ad::Var logits = forward(tape, bound, sample, w, b);
      const ad::Var loss =
          tape.scale(tape.pick(tape.log_softmax(logits), 0, sample.label), -1.0);
      tape.backward(loss);
      head_grads[0] += tape.grad(w);
      head_grads[1] += tape.grad(b);
      if (config.train_encoder)
        for (std::size_t i = 0; i < enc_grads.size(); ++i)
          enc_grads[i] += tape.grad(bound.vars[i]);
    }
    const double inv_b = 1.0 / static_cast<double>(config.batch_size);
    for (auto& g : head_grads) g *= inv_b;
    head_opt.apply(head_grads);
    if (config.train_encoder) {
      for (auto& g : enc_grads) g *= inv_b;
      enc_opt->apply(enc_grads);
    }
  }

  const auto accuracy_on = [&](const Dataset& data) {
    int correct = 0;
    for (const SyntheticSample& sample : data.samples) {
      ad::Tape tape;
      auto bound = model.bind(tape, false);
      const ad::Var w = tape.leaf(head.value(0));
      const ad::Var b = tape.leaf(head.value(1));
      const ad::Matrix& logits = tape.value(forward(tape, bound, sample, w, b));
      int arg = 0;
      for (int c = 1; c < logits.cols(); ++c)
        if (logits(0, c) > logits(0, arg)) arg = c;
      if (arg == sample.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
  };

  ProbeResult result;
  result.n_classes = n_classes;
  result.train_accuracy = accuracy_on(train_data);
  result.accuracy = accuracy_on(eval_data);
  return result;
}

}  // namespace pcpg
