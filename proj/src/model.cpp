#include "pcpg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcpg/vocab.hpp"

namespace pcpg {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_bias_name(const std::string& name) {
  const std::size_t dot = name.rfind('.');
  const std::size_t start = dot == std::string::npos ? 0 : dot + 1;
  return start < name.size() && name[start] == 'b';
}
}  // namespace

std::size_t ParamStore::add(const std::string& name, ad::Matrix value) {
  if (index_.count(name) > 0)
    throw std::invalid_argument("ParamStore: duplicate tensor name '" + name + "'");
  const std::size_t i = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
  index_.emplace(name, i);
  return i;
}

std::size_t ParamStore::index(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end())
    throw std::out_of_range("ParamStore: no tensor named '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

Seq2Seq::Seq2Seq(ModelConfig config) : config_(config) {
  if (config_.feature_dim < 1 || config_.embed_dim < 1 || config_.enc_hidden < 1 ||
      config_.dec_hidden < 1 || config_.attn_dim < 1)
    throw std::invalid_argument("Seq2Seq: dimensions must be positive");
  if (config_.enc_layers < 1 || config_.dec_layers < 1)
    throw std::invalid_argument("Seq2Seq: layer counts must be positive");
  if (config_.vocab_size <= vocab::kSpace)
    throw std::invalid_argument("Seq2Seq: vocabulary too small for control tokens");
  if (!(config_.dropout >= 0.0 && config_.dropout < 1.0))
    throw std::invalid_argument("Seq2Seq: dropout must lie in [0, 1)");

  const int f = config_.feature_dim;
  const int e = config_.embed_dim;
  const int h = config_.enc_hidden;
  const int hd = config_.dec_hidden;
  const int a = config_.attn_dim;
  const int c = config_.vocab_size;

  const auto add_cell = [&](const std::string& prefix, int in_dim, int hidden_dim) {
    for (const char* gate : {"z", "r", "n"}) {
      params_.add(prefix + ".wx" + gate, ad::Matrix::Zero(in_dim, hidden_dim));
      params_.add(prefix + ".wh" + gate, ad::Matrix::Zero(hidden_dim, hidden_dim));
      params_.add(prefix + ".b" + gate, ad::Matrix::Zero(1, hidden_dim));
    }
  };

  params_.add("embed.w", ad::Matrix::Zero(f, e));
  params_.add("embed.b", ad::Matrix::Zero(1, e));
  for (int l = 0; l < config_.enc_layers; ++l) {
    const int in_dim = l == 0 ? e : 2 * h;
    const std::string layer = "enc.l" + std::to_string(l);
    add_cell(layer + ".fwd", in_dim, h);
    add_cell(layer + ".bwd", in_dim, h);
  }
  params_.add("dec.embed.w", ad::Matrix::Zero(c, e));
  for (int l = 0; l < config_.dec_layers; ++l) {
    const int in_dim = l == 0 ? e + 2 * h : hd;
    add_cell("dec.l" + std::to_string(l), in_dim, hd);
  }
  for (int l = 0; l < config_.dec_layers; ++l) {
    const std::string prefix = "dec.init.l" + std::to_string(l);
    params_.add(prefix + ".w", ad::Matrix::Zero(2 * h, hd));
    params_.add(prefix + ".b", ad::Matrix::Zero(1, hd));
  }
  params_.add("attn.wq", ad::Matrix::Zero(hd, a));
  params_.add("attn.wk", ad::Matrix::Zero(2 * h, a));
  params_.add("attn.b", ad::Matrix::Zero(1, a));
  params_.add("attn.v", ad::Matrix::Zero(a, 1));
  params_.add("out.w", ad::Matrix::Zero(hd, c));
  params_.add("out.b", ad::Matrix::Zero(1, c));
}

void Seq2Seq::init_params(std::uint64_t seed) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    ad::Matrix& m = params_.value(i);
    if (is_bias_name(name)) {
      m.setZero();
      continue;
    }
    Rng rng = substream(seed, "init", fnv1a(name));
    const double scale = 1.0 / std::sqrt(static_cast<double>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.normal();
  }
}

Seq2Seq::Bound Seq2Seq::bind(ad::Tape& tape, bool requires_grad) const {
  Bound bound;
  bound.tape = &tape;
  bound.vars.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i)
    bound.vars.push_back(tape.leaf(params_.value(i), requires_grad));
  return bound;
}

ad::Var Seq2Seq::var(const Bound& bound, const std::string& name) const {
  return bound.vars[params_.index(name)];
}

Seq2Seq::GruCellRef Seq2Seq::cell(const Bound& bound, const std::string& prefix) const {
  return GruCellRef{var(bound, prefix + ".wxz"), var(bound, prefix + ".whz"),
                    var(bound, prefix + ".bz"),  var(bound, prefix + ".wxr"),
                    var(bound, prefix + ".whr"), var(bound, prefix + ".br"),
                    var(bound, prefix + ".wxn"), var(bound, prefix + ".whn"),
                    var(bound, prefix + ".bn")};
}

ad::Var Seq2Seq::gru_advance(ad::Tape& t, const GruCellRef& c, ad::Var x, ad::Var h) const {
  const ad::Var z = t.sigmoid(t.add(t.add(t.matmul(x, c.wxz), t.matmul(h, c.whz)), c.bz));
  const ad::Var r = t.sigmoid(t.add(t.add(t.matmul(x, c.wxr), t.matmul(h, c.whr)), c.br));
  const ad::Var n =
      t.tanh(t.add(t.add(t.matmul(x, c.wxn), t.matmul(t.mul(r, h), c.whn)), c.bn));
  return t.add(t.mul(t.affine(z, -1.0, 1.0), h), t.mul(z, n));
}

Seq2Seq::EncoderGraph Seq2Seq::encode(Bound& bound, const ad::Matrix& frames) const {
  if (frames.rows() < 1)
    throw std::invalid_argument("Seq2Seq::encode: input must have at least one frame");
  if (frames.cols() != config_.feature_dim)
    throw std::invalid_argument("Seq2Seq::encode: frame width " +
                                std::to_string(frames.cols()) + " does not match F=" +
                                std::to_string(config_.feature_dim));
  ad::Tape& t = *bound.tape;
  const int t_len = static_cast<int>(frames.rows());

  ad::Var x = t.add_rowvec(t.matmul(t.leaf(frames), var(bound, "embed.w")),
                           var(bound, "embed.b"));

  EncoderGraph enc;
  enc.t_len = t_len;
  const ad::Matrix h0 = ad::Matrix::Zero(1, config_.enc_hidden);
  for (int l = 0; l < config_.enc_layers; ++l) {
    const std::string layer = "enc.l" + std::to_string(l);
    const GruCellRef fwd = cell(bound, layer + ".fwd");
    const GruCellRef bwd = cell(bound, layer + ".bwd");

    std::vector<ad::Var> fwd_rows(static_cast<std::size_t>(t_len));
    ad::Var h = t.leaf(h0);
    for (int step = 0; step < t_len; ++step) {
      h = gru_advance(t, fwd, t.row(x, step), h);
      fwd_rows[static_cast<std::size_t>(step)] = h;
    }
    enc.fwd_final.push_back(h);

    std::vector<ad::Var> bwd_rows(static_cast<std::size_t>(t_len));
    h = t.leaf(h0);
    for (int step = t_len - 1; step >= 0; --step) {
      h = gru_advance(t, bwd, t.row(x, step), h);
      bwd_rows[static_cast<std::size_t>(step)] = h;
    }
    enc.bwd_final.push_back(h);

    x = t.concat(t.vstack(fwd_rows), t.vstack(bwd_rows));
  }
  enc.outputs = x;
  enc.keys = t.matmul(enc.outputs, var(bound, "attn.wk"));
  return enc;
}

std::vector<ad::Var> Seq2Seq::initial_state(Bound& bound, const EncoderGraph& enc) const {
  ad::Tape& t = *bound.tape;
  std::vector<ad::Var> hidden;
  hidden.reserve(static_cast<std::size_t>(config_.dec_layers));
  for (int l = 0; l < config_.dec_layers; ++l) {
    const std::size_t src = static_cast<std::size_t>(
        std::min(l, config_.enc_layers - 1));
    const ad::Var finals = t.concat(enc.fwd_final[src], enc.bwd_final[src]);
    const std::string prefix = "dec.init.l" + std::to_string(l);
    hidden.push_back(t.tanh(
        t.add(t.matmul(finals, var(bound, prefix + ".w")), var(bound, prefix + ".b"))));
  }
  return hidden;
}

std::pair<ad::Var, ad::Var> Seq2Seq::attend(Bound& bound, ad::Var h_top,
                                            const EncoderGraph& enc) const {
  ad::Tape& t = *bound.tape;
  const ad::Var query = t.add(t.matmul(h_top, var(bound, "attn.wq")), var(bound, "attn.b"));
  const ad::Var scores =
      t.transpose(t.matmul(t.tanh(t.add_rowvec(enc.keys, query)), var(bound, "attn.v")));
  const ad::Var weights = t.softmax(scores);
  const ad::Var context = t.matmul(weights, enc.outputs);
  return {weights, context};
}

Seq2Seq::StepResult Seq2Seq::decode_step(Bound& bound, const std::vector<ad::Var>& hidden,
                                         int y_prev, const EncoderGraph& enc,
                                         Rng* dropout_rng) const {
  if (y_prev < 0 || y_prev >= config_.vocab_size)
    throw std::invalid_argument("Seq2Seq::decode_step: token " + std::to_string(y_prev) +
                                " outside the vocabulary");
  if (hidden.size() != static_cast<std::size_t>(config_.dec_layers))
    throw std::invalid_argument("Seq2Seq::decode_step: wrong hidden state count");
  ad::Tape& t = *bound.tape;

  const auto [weights, context] = attend(bound, hidden.back(), enc);
  const ad::Var y_embed = t.row(var(bound, "dec.embed.w"), y_prev);
  ad::Var x = t.concat(y_embed, context);

  StepResult result;
  result.attention = weights;
  result.hidden.reserve(hidden.size());
  for (int l = 0; l < config_.dec_layers; ++l) {
    const ad::Var h = gru_advance(t, cell(bound, "dec.l" + std::to_string(l)), x,
                                  hidden[static_cast<std::size_t>(l)]);
    result.hidden.push_back(h);
    x = h;
  }

  ad::Var top = result.hidden.back();
  if (dropout_rng != nullptr && config_.dropout > 0.0) {
    const double keep = 1.0 - config_.dropout;
    ad::Matrix mask(1, config_.dec_hidden);
    for (int i = 0; i < config_.dec_hidden; ++i)
      mask(0, i) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    top = t.mul(top, t.leaf(mask));
  }
  result.logits = t.add(t.matmul(top, var(bound, "out.w")), var(bound, "out.b"));
  return result;
}

std::vector<ad::Var> Seq2Seq::decode_teacher_forced(Bound& bound, const EncoderGraph& enc,
                                                    const TokenSequence& target,
                                                    Rng* dropout_rng) const {
  if (target.empty())
    throw std::invalid_argument("Seq2Seq::decode_teacher_forced: empty target");
  ad::Tape& t = *bound.tape;
  std::vector<ad::Var> hidden = initial_state(bound, enc);
  std::vector<ad::Var> log_probs;
  log_probs.reserve(target.size());
  int y_prev = vocab::kBos;
  for (int token : target.tokens) {
    if (token < 0 || token >= config_.vocab_size)
      throw std::invalid_argument("Seq2Seq::decode_teacher_forced: token " +
                                  std::to_string(token) + " outside the vocabulary");
    StepResult step = decode_step(bound, hidden, y_prev, enc, dropout_rng);
    log_probs.push_back(t.pick(t.log_softmax(step.logits), 0, token));
    hidden = std::move(step.hidden);
    y_prev = token;
  }
  return log_probs;
}

Episode Seq2Seq::sample_episode(Bound& bound, const EncoderGraph& enc, int max_len,
                                Rng& rng, Rng* dropout_rng, double temperature) const {
  if (max_len < 1)
    throw std::invalid_argument("Seq2Seq::sample_episode: max_len must be >= 1");
  if (temperature < 0.0)
    throw std::invalid_argument("Seq2Seq::sample_episode: negative temperature");
  ad::Tape& t = *bound.tape;

  Episode episode;
  std::vector<ad::Var> hidden = initial_state(bound, enc);
  int y_prev = vocab::kBos;
  for (int u = 0; u < max_len; ++u) {
    StepResult step = decode_step(bound, hidden, y_prev, enc, dropout_rng);
    const ad::Matrix& logits = t.value(step.logits);

    int token;
    if (temperature == 0.0) {
      // argmax, lowest id on ties
      token = 0;
      for (int i = 1; i < config_.vocab_size; ++i)
        if (logits(0, i) > logits(0, token)) token = i;
    } else {
      // tempered draw for exploration; the recorded log-probability below
      // stays the model's own
      const Eigen::ArrayXd scaled = logits.row(0).transpose().array() / temperature;
      const Eigen::ArrayXd probs = (scaled - scaled.maxCoeff()).exp();
      std::vector<double> weights(probs.data(), probs.data() + probs.size());
      token = rng.categorical(weights);
    }

    if (token == vocab::kEos) {
      episode.hit_eos = true;
      break;
    }
    episode.tokens.tokens.push_back(token);
    episode.log_probs.push_back(t.pick(t.log_softmax(step.logits), 0, token));
    hidden = std::move(step.hidden);
    y_prev = token;
  }
  return episode;
}

Eigen::RowVectorXd Seq2Seq::restricted_log_softmax(const ad::Matrix& logits,
                                                   std::span<const int> allowed) const {
  const int c = config_.vocab_size;
  Eigen::RowVectorXd out(c);
  if (allowed.empty()) {
    const double m = logits.row(0).maxCoeff();
    const double lse = m + std::log((logits.row(0).array() - m).exp().sum());
    out = logits.row(0).array() - lse;
    return out;
  }
  out.setConstant(kNegInf);
  double m = kNegInf;
  for (int id : allowed) {
    if (id < 0 || id >= c)
      throw std::invalid_argument("restricted_log_softmax: token " + std::to_string(id) +
                                  " outside the vocabulary");
    m = std::max(m, logits(0, id));
  }
  double sum = 0.0;
  for (int id : allowed) sum += std::exp(logits(0, id) - m);
  const double lse = m + std::log(sum);
  for (int id : allowed) out(id) = logits(0, id) - lse;
  return out;
}

DecodeResult Seq2Seq::greedy_decode(Bound& bound, const EncoderGraph& enc, int max_len,
                                    std::span<const int> allowed) const {
  if (max_len < 1)
    throw std::invalid_argument("Seq2Seq::greedy_decode: max_len must be >= 1");
  DecodeResult result;
  std::vector<ad::Var> hidden = initial_state(bound, enc);
  int y_prev = vocab::kBos;
  for (int u = 0; u < max_len; ++u) {
    StepResult step = decode_step(bound, hidden, y_prev, enc, nullptr);
    const Eigen::RowVectorXd lsm =
        restricted_log_softmax(bound.tape->value(step.logits), allowed);
    int token = 0;
    for (int i = 1; i < config_.vocab_size; ++i)
      if (lsm(i) > lsm(token)) token = i;
    result.log_prob += lsm(token);
    if (token == vocab::kEos) {
      result.hit_eos = true;
      break;
    }
    result.tokens.tokens.push_back(token);
    hidden = std::move(step.hidden);
    y_prev = token;
  }
  return result;
}

BeamResult Seq2Seq::beam_search(Bound& bound, const EncoderGraph& enc, int width,
                                int max_len, std::span<const int> allowed) const {
  if (width < 1)
    throw std::invalid_argument("Seq2Seq::beam_search: width must be >= 1");
  if (max_len < 1)
    throw std::invalid_argument("Seq2Seq::beam_search: max_len must be >= 1");

  struct Hyp {
    std::vector<int> tokens;
    std::vector<ad::Var> hidden;
    double cum = 0.0;
    bool hit_eos = false;
  };
  const auto emitted = [](const Hyp& h) {
    return static_cast<int>(h.tokens.size()) + (h.hit_eos ? 1 : 0);
  };

  std::vector<int> full_vocab;
  if (allowed.empty()) {
    full_vocab.resize(static_cast<std::size_t>(config_.vocab_size));
    for (int i = 0; i < config_.vocab_size; ++i) full_vocab[static_cast<std::size_t>(i)] = i;
    allowed = full_vocab;
  }

  std::vector<Hyp> live;
  live.push_back(Hyp{{}, initial_state(bound, enc), 0.0, false});
  std::vector<Hyp> completed;

  for (int depth = 0; depth < max_len && !live.empty(); ++depth) {
    std::vector<Hyp> candidates;
    candidates.reserve(live.size() * allowed.size());
    for (Hyp& hyp : live) {
      const int y_prev = hyp.tokens.empty() ? vocab::kBos : hyp.tokens.back();
      StepResult step = decode_step(bound, hyp.hidden, y_prev, enc, nullptr);
      const Eigen::RowVectorXd lsm =
          restricted_log_softmax(bound.tape->value(step.logits), allowed);
      for (int token : allowed) {
        Hyp next;
        next.tokens = hyp.tokens;
        next.cum = hyp.cum + lsm(token);
        if (token == vocab::kEos) {
          next.hit_eos = true;  // hidden no longer needed
        } else {
          next.tokens.push_back(token);
          next.hidden = step.hidden;
        }
        candidates.push_back(std::move(next));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Hyp& a, const Hyp& b) {
      if (a.cum != b.cum) return a.cum > b.cum;
      return a.tokens < b.tokens;
    });
    if (static_cast<int>(candidates.size()) > width) candidates.resize(width);

    live.clear();
    for (Hyp& cand : candidates) {
      if (cand.hit_eos)
        completed.push_back(std::move(cand));
      else
        live.push_back(std::move(cand));
    }
  }
  for (Hyp& hyp : live) completed.push_back(std::move(hyp));  // ran out of length

  const auto norm = [&](const Hyp& h) {
    return h.cum / static_cast<double>(std::max(1, emitted(h)));
  };
  const Hyp* best = &completed.front();
  for (const Hyp& h : completed) {
    if (norm(h) > norm(*best) ||
        (norm(h) == norm(*best) &&
         (h.cum > best->cum || (h.cum == best->cum && h.tokens < best->tokens))))
      best = &h;
  }

  BeamResult result;
  result.tokens = TokenSequence(best->tokens);
  result.log_prob = best->cum;
  result.normalized = norm(*best);
  result.hit_eos = best->hit_eos;
  return result;
}

double Seq2Seq::score_sequence(Bound& bound, const EncoderGraph& enc,
                               const TokenSequence& tokens, bool end_with_eos,
                               std::span<const int> allowed) const {
  std::vector<ad::Var> hidden = initial_state(bound, enc);
  int y_prev = vocab::kBos;
  double cum = 0.0;
  for (int token : tokens.tokens) {
    if (token < 0 || token >= config_.vocab_size)
      throw std::invalid_argument("Seq2Seq::score_sequence: token outside the vocabulary");
    StepResult step = decode_step(bound, hidden, y_prev, enc, nullptr);
    cum += restricted_log_softmax(bound.tape->value(step.logits), allowed)(token);
    hidden = std::move(step.hidden);
    y_prev = token;
  }
  if (end_with_eos) {
    StepResult step = decode_step(bound, hidden, y_prev, enc, nullptr);
    cum += restricted_log_softmax(bound.tape->value(step.logits), allowed)(vocab::kEos);
  }
  return cum;
}

}  // namespace pcpg
