#include "pcpg/tasks.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pcpg/rng.hpp"
#include "pcpg/vocab.hpp"

namespace pcpg {

namespace {

void check_options(const FrameOptions& opt) {
  if (opt.feature_dim < vocab::kSize)
    throw std::invalid_argument("FrameOptions: feature_dim must cover the vocabulary");
  if (opt.noise < 0.0) throw std::invalid_argument("FrameOptions: negative noise");
  if (opt.min_repeat < 1 || opt.max_repeat < opt.min_repeat)
    throw std::invalid_argument("FrameOptions: need 1 <= min_repeat <= max_repeat");
}

void check_len_range(int min_len, int max_len) {
  if (min_len < 1 || max_len > 20 || max_len < min_len)
    throw std::invalid_argument("length range must sit within [1, 20]");
}

TokenSequence random_letters(Rng& rng, int min_len, int max_len) {
  std::vector<int> toks(static_cast<std::size_t>(rng.uniform_int(min_len, max_len)));
  for (int& t : toks) t = vocab::kFirstLetter + rng.uniform_int(0, 25);
  return TokenSequence(std::move(toks));
}

// One-hot rows with additive noise; noise draws are consumed even at
// sigma 0 so the stream layout does not depend on the option.
ad::Matrix frames_for(const TokenSequence& tokens, Rng& rng, const FrameOptions& opt) {
  std::vector<int> row_token;
  for (int tok : tokens) {
    const int repeats = rng.uniform_int(opt.min_repeat, opt.max_repeat);
    for (int r = 0; r < repeats; ++r) row_token.push_back(tok);
  }
  ad::Matrix frames(static_cast<Eigen::Index>(row_token.size()), opt.feature_dim);
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    for (int c = 0; c < opt.feature_dim; ++c) frames(r, c) = rng.normal(0.0, opt.noise);
    frames(r, row_token[static_cast<std::size_t>(r)]) += 1.0;
  }
  return frames;
}

Dataset gen_strings(const std::string& task, int n, int min_len, int max_len,
                    std::uint64_t seed, const FrameOptions& opt, bool reversed) {
  check_options(opt);
  check_len_range(min_len, max_len);
  if (n < 1) throw std::invalid_argument("dataset size must be positive");

  Dataset out{task, opt.feature_dim, {}};
  out.samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SyntheticSample s;
    s.seed = substream_seed(seed, "sample", static_cast<std::uint64_t>(i));
    Rng rng(s.seed);
    TokenSequence tokens = random_letters(rng, min_len, max_len);
    s.frames = frames_for(tokens, rng, opt);
    if (reversed) std::reverse(tokens.tokens.begin(), tokens.tokens.end());
    s.transcript = std::move(tokens);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace

bool operator==(const SyntheticSample& a, const SyntheticSample& b) {
  return a.seed == b.seed && a.label == b.label && a.transcript == b.transcript &&
         a.frames.rows() == b.frames.rows() && a.frames.cols() == b.frames.cols() &&
         std::memcmp(a.frames.data(), b.frames.data(),
                     sizeof(double) * static_cast<std::size_t>(a.frames.size())) == 0;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.task == b.task && a.feature_dim == b.feature_dim && a.samples == b.samples;
}

Dataset gen_copy(int n, int min_len, int max_len, std::uint64_t seed,
                 const FrameOptions& opt) {
  return gen_strings("copy", n, min_len, max_len, seed, opt, false);
}

Dataset gen_reverse(int n, int min_len, int max_len, std::uint64_t seed,
                    const FrameOptions& opt) {
  return gen_strings("reverse", n, min_len, max_len, seed, opt, true);
}

Dataset gen_sentences(int n, int min_words, int max_words, std::uint64_t seed,
                      const FrameOptions& opt) {
  check_options(opt);
  if (min_words < 1 || max_words < min_words)
    throw std::invalid_argument("need 1 <= min_words <= max_words");
  if (n < 1) throw std::invalid_argument("dataset size must be positive");

  Dataset out{"sentences", opt.feature_dim, {}};
  out.samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SyntheticSample s;
    s.seed = substream_seed(seed, "sample", static_cast<std::uint64_t>(i));
    Rng rng(s.seed);
    std::vector<int> tokens;
    const int words = rng.uniform_int(min_words, max_words);
    for (int w = 0; w < words; ++w) {
      if (w > 0) tokens.push_back(vocab::kSpace);
      const TokenSequence word = random_letters(rng, 2, 4);
      tokens.insert(tokens.end(), word.begin(), word.end());
    }
    s.transcript = TokenSequence(std::move(tokens));
    s.frames = frames_for(s.transcript, rng, opt);
    out.samples.push_back(std::move(s));
  }
  return out;
}

Dataset gen_words(int n_classes, int samples_per_class, std::uint64_t seed,
                  const FrameOptions& opt) {
  check_options(opt);
  if (n_classes < 2 || n_classes > vocab::kSize)
    throw std::invalid_argument("need 2 <= n_classes <= 40");
  if (samples_per_class < 1)
    throw std::invalid_argument("samples_per_class must be positive");

  // distinct class words, order fixed by the draw sequence
  Rng class_rng = substream(seed, "classes");
  std::vector<TokenSequence> words;
  std::set<std::vector<int>> taken;
  while (static_cast<int>(words.size()) < n_classes) {
    TokenSequence w = random_letters(class_rng, 3, 6);
    if (taken.insert(w.tokens).second) words.push_back(std::move(w));
  }

  Dataset out{"words", opt.feature_dim, {}};
  out.samples.reserve(static_cast<std::size_t>(n_classes) *
                      static_cast<std::size_t>(samples_per_class));
  std::uint64_t index = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int k = 0; k < samples_per_class; ++k, ++index) {
      SyntheticSample s;
      s.seed = substream_seed(seed, "sample", index);
      s.label = c;
      s.transcript = words[static_cast<std::size_t>(c)];
      Rng rng(s.seed);
      s.frames = frames_for(s.transcript, rng, opt);
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

constexpr const char* kMagic = "pcpg-dataset v1";

[[noreturn]] void load_error(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("load_dataset(" + path.string() + "): " + what);
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());
  out << kMagic << "\n";
  out << "task " << dataset.task << "\n";
  out << "feature_dim " << dataset.feature_dim << "\n";
  out << "vocab_hash " << std::hex << vocab::table_hash() << std::dec << "\n";
  out << "count " << dataset.samples.size() << "\n";
  char buf[64];
  for (const SyntheticSample& s : dataset.samples) {
    out << "sample " << s.seed << " " << s.label << " " << s.frames.rows() << "\n";
    out << tokens_to_text(s.transcript) << "\n";
    for (Eigen::Index r = 0; r < s.frames.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.frames.cols(); ++c) {
        // hexfloat keeps the round trip bit-exact
        std::snprintf(buf, sizeof(buf), "%a", s.frames(r, c));
        out << (c ? " " : "") << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("save_dataset: write failed on " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());

  std::string line;
  const auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) load_error(path, std::string("truncated, expected ") + what);
    return std::istringstream(line);
  };

  next_line("magic");
  if (line != kMagic) load_error(path, "unrecognized header '" + line + "'");

  Dataset out;
  std::string key;
  std::uint64_t stored_hash = 0;
  std::size_t count = 0;
  {
    auto s = next_line("task");
    if (!(s >> key >> out.task) || key != "task") load_error(path, "bad task line");
  }
  {
    auto s = next_line("feature_dim");
    if (!(s >> key >> out.feature_dim) || key != "feature_dim" || out.feature_dim < 1)
      load_error(path, "bad feature_dim line");
  }
  {
    auto s = next_line("vocab_hash");
    if (!(s >> key >> std::hex >> stored_hash) || key != "vocab_hash")
      load_error(path, "bad vocab_hash line");
    if (stored_hash != vocab::table_hash())
      load_error(path, "file was generated against a different symbol table");
  }
  {
    auto s = next_line("count");
    if (!(s >> key >> count) || key != "count") load_error(path, "bad count line");
  }

  out.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSample sample;
    Eigen::Index t_len = 0;
    {
      auto s = next_line("sample descriptor");
      if (!(s >> key >> sample.seed >> sample.label >> t_len) || key != "sample" ||
          t_len < 0)
        load_error(path, "bad sample descriptor");
    }
    if (!std::getline(in, line)) load_error(path, "truncated, expected transcript");
    sample.transcript = tokens_from_text(line);
    sample.frames.resize(t_len, out.feature_dim);
    for (Eigen::Index r = 0; r < t_len; ++r) {
      if (!std::getline(in, line)) load_error(path, "truncated, expected frame row");
      const char* p = line.c_str();
      char* end = nullptr;
      for (Eigen::Index c = 0; c < out.feature_dim; ++c) {
        sample.frames(r, c) = std::strtod(p, &end);
        if (end == p) load_error(path, "short frame row");
        p = end;
      }
    }
    out.samples.push_back(std::move(sample));
  }
  return out;
}

Splits split_dataset(const Dataset& dataset, double val_fraction, double test_fraction,
                     std::uint64_t seed) {
  if (val_fraction < 0.0 || test_fraction < 0.0 || val_fraction + test_fraction >= 1.0)
    throw std::invalid_argument("split fractions must be nonnegative and leave room for train");

  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = substream(seed, "split");
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }

  const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * val_fraction);
  const auto n_test = static_cast<std::size_t>(static_cast<double>(n) * test_fraction);
  Splits splits;
  for (Dataset* d : {&splits.train, &splits.val, &splits.test}) {
    d->task = dataset.task;
    d->feature_dim = dataset.feature_dim;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const SyntheticSample& s = dataset.samples[order[i]];
    if (i < n_val)
      splits.val.samples.push_back(s);
    else if (i < n_val + n_test)
      splits.test.samples.push_back(s);
    else
      splits.train.samples.push_back(s);
  }
  return splits;
}

}  // namespace pcpg
