#include "pcpg/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcpg {

namespace {

constexpr const char* kVersionLine = "pcpg-config v1";

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
  throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

struct Parser {
  std::string origin;
  int line = 0;

  int to_int(const std::string& v) const {
    try {
      std::size_t used = 0;
      const int x = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(origin, line, "expected an integer, got '" + v + "'");
    }
  }

  std::uint64_t to_u64(const std::string& v) const {
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
      fail(origin, line, "expected an unsigned integer, got '" + v + "'");
    }
  }

  // plain decimal or a p/q fraction like 1/3
  double to_double(const std::string& v) const {
    const auto slash = v.find('/');
    try {
      if (slash != std::string::npos) {
        const double num = std::stod(trim(v.substr(0, slash)));
        const double den = std::stod(trim(v.substr(slash + 1)));
        if (den == 0.0) throw std::invalid_argument("");
        return num / den;
      }
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(origin, line, "expected a number, got '" + v + "'");
    }
  }

  bool to_bool(const std::string& v) const {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin, line, "expected true or false, got '" + v + "'");
  }
};

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  Parser p{origin};

  // kernel pieces are assembled after the whole file is read
  int kernel_k = cfg.train.kernel.size();
  int kernel_s = cfg.train.kernel.stride();
  std::vector<double> kernel_w;

  std::string raw;
  bool versioned = false;
  while (std::getline(in, raw)) {
    ++p.line;
    const std::string stripped = trim(raw.substr(0, raw.find('#')));
    if (stripped.empty()) continue;
    if (!versioned) {
      if (stripped != kVersionLine)
        fail(origin, p.line,
             std::string("first line must be '") + kVersionLine + "', got '" + stripped +
                 "'");
      versioned = true;
      continue;
    }

    const auto eq = stripped.find('=');
    if (eq == std::string::npos) fail(origin, p.line, "expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) fail(origin, p.line, "empty key");
    if (value.empty()) fail(origin, p.line, "empty value for '" + key + "'");

    // model
    if (key == "feature_dim") {
      cfg.model.feature_dim = p.to_int(value);
      cfg.frames.feature_dim = cfg.model.feature_dim;
    } else if (key == "embed_dim")
      cfg.model.embed_dim = p.to_int(value);
    else if (key == "enc_hidden")
      cfg.model.enc_hidden = p.to_int(value);
    else if (key == "dec_hidden")
      cfg.model.dec_hidden = p.to_int(value);
    else if (key == "attn_dim")
      cfg.model.attn_dim = p.to_int(value);
    else if (key == "enc_layers")
      cfg.model.enc_layers = p.to_int(value);
    else if (key == "dec_layers")
      cfg.model.dec_layers = p.to_int(value);
    else if (key == "vocab_size")
      cfg.model.vocab_size = p.to_int(value);
    else if (key == "dropout")
      cfg.model.dropout = p.to_double(value);

    // training
    else if (key == "lambda")
      cfg.train.lambda = p.to_double(value);
    else if (key == "gamma")
      cfg.train.gamma = p.to_double(value);
    else if (key == "mc_samples")
      cfg.train.mc_samples = p.to_int(value);
    else if (key == "kernel_k")
      kernel_k = p.to_int(value);
    else if (key == "kernel_s")
      kernel_s = p.to_int(value);
    else if (key == "kernel_w") {
      kernel_w.clear();
      if (value != "uniform")
        for (const std::string& part : split(value, ','))
          kernel_w.push_back(p.to_double(part));
    } else if (key == "padding") {
      if (value == "zeropad")
        cfg.train.padding = BoundaryPolicy::ZeroPad;
      else if (value == "truncate")
        cfg.train.padding = BoundaryPolicy::Truncate;
      else
        fail(origin, p.line, "padding must be zeropad or truncate");
    } else if (key == "discount") {
      if (value == "end-anchored")
        cfg.train.discount = DiscountMode::EndAnchored;
      else if (value == "conventional")
        cfg.train.discount = DiscountMode::Conventional;
      else
        fail(origin, p.line, "discount must be end-anchored or conventional");
    } else if (key == "lr")
      cfg.train.lr = p.to_double(value);
    else if (key == "optimizer")
      cfg.train.optimizer = value;
    else if (key == "batch_size")
      cfg.train.batch_size = p.to_int(value);
    else if (key == "max_iters")
      cfg.train.max_iters = p.to_int(value);
    else if (key == "seed")
      cfg.train.seed = p.to_u64(value);
    else if (key == "ce_source") {
      if (value == "teacher")
        cfg.train.ce_on_samples = false;
      else if (value == "sampled")
        cfg.train.ce_on_samples = true;
      else
        fail(origin, p.line, "ce_source must be teacher or sampled");
    } else if (key == "max_decode_len")
      cfg.train.max_decode_len = p.to_int(value);
    else if (key == "eval_every")
      cfg.train.eval_every = p.to_int(value);
    else if (key == "checkpoint_every")
      cfg.train.checkpoint_every = p.to_int(value);
    else if (key == "eval_samples")
      cfg.train.eval_samples = p.to_int(value);
    else if (key == "stop_at_cer")
      cfg.train.stop_at_cer = p.to_double(value);
    else if (key == "patience")
      cfg.train.patience = p.to_int(value);

    // data
    else if (key == "task")
      cfg.task = value;
    else if (key == "n_train")
      cfg.n_train = p.to_int(value);
    else if (key == "n_val")
      cfg.n_val = p.to_int(value);
    else if (key == "min_len")
      cfg.min_len = p.to_int(value);
    else if (key == "max_len")
      cfg.max_len = p.to_int(value);
    else if (key == "min_words")
      cfg.min_words = p.to_int(value);
    else if (key == "max_words")
      cfg.max_words = p.to_int(value);
    else if (key == "n_classes")
      cfg.n_classes = p.to_int(value);
    else if (key == "samples_per_class")
      cfg.samples_per_class = p.to_int(value);
    else if (key == "noise")
      cfg.frames.noise = p.to_double(value);
    else if (key == "min_repeat")
      cfg.frames.min_repeat = p.to_int(value);
    else if (key == "max_repeat")
      cfg.frames.max_repeat = p.to_int(value);
    else if (key == "data_seed")
      cfg.data_seed = p.to_u64(value);
    else if (key == "train_data")
      cfg.train_data = value;
    else if (key == "val_data")
      cfg.val_data = value;
    else if (key == "out_dir")
      cfg.out_dir = value;

    // sweep
    else if (key == "sweep_kernels") {
      cfg.sweep_kernels.clear();
      for (const std::string& pair : split(value, ';')) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos)
          fail(origin, p.line, "sweep_kernels entries look like k:s");
        cfg.sweep_kernels.emplace_back(p.to_int(trim(pair.substr(0, colon))),
                                       p.to_int(trim(pair.substr(colon + 1))));
      }
    } else if (key == "sweep_weights") {
      cfg.sweep_weights.clear();
      for (const std::string& preset : split(value, ';')) {
        std::vector<double> w;
        for (const std::string& part : split(preset, ',')) w.push_back(p.to_double(part));
        if (w.empty()) fail(origin, p.line, "empty weight preset");
        cfg.sweep_weights.push_back(std::move(w));
      }
    } else if (key == "sweep_lambda") {
      cfg.sweep_lambdas.clear();
      for (const std::string& part : split(value, ','))
        cfg.sweep_lambdas.push_back(p.to_double(part));
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const std::string& part : split(value, ','))
        cfg.seeds.push_back(p.to_u64(part));
    } else if (key == "include_ce_baseline")
      cfg.include_ce_baseline = p.to_bool(value);

    else
      fail(origin, p.line, "unknown key '" + key + "'");
  }
  if (!versioned) fail(origin, p.line, "empty config, expected a version line");

  if (kernel_w.empty()) {
    cfg.train.kernel = PcpgKernel::uniform(kernel_k, kernel_s);
  } else {
    Eigen::VectorXd w(static_cast<Eigen::Index>(kernel_w.size()));
    for (std::size_t i = 0; i < kernel_w.size(); ++i)
      w[static_cast<Eigen::Index>(i)] = kernel_w[i];
    cfg.train.kernel = PcpgKernel(kernel_k, kernel_s, std::move(w));
  }
  cfg.train.validate();
  if (cfg.seeds.empty()) throw std::invalid_argument(origin + ": seeds must be non-empty");
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

}  // namespace pcpg
