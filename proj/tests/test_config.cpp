#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "pcpg/config.hpp"

using namespace pcpg;

namespace {

ExperimentConfig parse(const std::string& body) {
  std::istringstream in("pcpg-config v1\n" + body);
  return parse_config(in, "test");
}

std::string error_of(const std::string& body) {
  std::istringstream in(body);
  try {
    parse_config(in, "test");
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("the version line is mandatory and checked") {
  CHECK_NOTHROW(parse(""));

  std::string msg = error_of("task = copy\n");
  CHECK(msg.find("test:1") != std::string::npos);
  CHECK(msg.find("first line must be") != std::string::npos);

  msg = error_of("pcpg-config v2\n");
  CHECK(msg.find("first line must be") != std::string::npos);

  msg = error_of("");
  CHECK(msg.find("version line") != std::string::npos);

  // comments and blank lines may precede it
  std::istringstream in("\n# header comment\n\npcpg-config v1\nlambda = 0.25\n");
  CHECK(parse_config(in, "test").train.lambda == 0.25);
}

TEST_CASE("an empty body yields the default experiment") {
  const ExperimentConfig cfg = parse("");
  const ExperimentConfig def;
  CHECK(cfg.model.feature_dim == def.model.feature_dim);
  CHECK(cfg.model.dropout == def.model.dropout);
  CHECK(cfg.train.lambda == def.train.lambda);
  CHECK(cfg.train.kernel == def.train.kernel);
  CHECK(cfg.train.optimizer == def.train.optimizer);
  CHECK(cfg.task == "copy");
  CHECK(cfg.out_dir == def.out_dir);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.sweep_kernels.empty());
  CHECK(cfg.include_ce_baseline);
}

TEST_CASE("every section parses and lands on the right field") {
  const ExperimentConfig cfg = parse(
      "feature_dim = 52\n"
      "embed_dim = 10\n"
      "enc_hidden = 12\n"
      "dec_hidden = 14\n"
      "attn_dim = 9\n"
      "enc_layers = 1\n"
      "dec_layers = 1\n"
      "dropout = 0.25\n"
      "lambda = 0.75\n"
      "gamma = 0.9\n"
      "mc_samples = 3\n"
      "kernel_k = 5\n"
      "kernel_s = 2\n"
      "padding = truncate\n"
      "discount = conventional\n"
      "lr = 0.01\n"
      "optimizer = sgd\n"
      "batch_size = 8\n"
      "max_iters = 123\n"
      "seed = 42\n"
      "ce_source = sampled\n"
      "max_decode_len = 30\n"
      "eval_every = 50\n"
      "checkpoint_every = 100\n"
      "eval_samples = 32\n"
      "stop_at_cer = 0.02\n"
      "patience = 7\n"
      "task = reverse\n"
      "n_train = 300\n"
      "n_val = 40\n"
      "min_len = 3\n"
      "max_len = 6\n"
      "min_words = 1\n"
      "max_words = 2\n"
      "n_classes = 8\n"
      "samples_per_class = 5\n"
      "noise = 0.1\n"
      "min_repeat = 2\n"
      "max_repeat = 2\n"
      "data_seed = 99\n"
      "train_data = a.ds\n"
      "val_data = b.ds\n"
      "out_dir = runs/x\n");
  CHECK(cfg.model.feature_dim == 52);
  CHECK(cfg.frames.feature_dim == 52);  // feature_dim drives both
  CHECK(cfg.model.embed_dim == 10);
  CHECK(cfg.model.enc_hidden == 12);
  CHECK(cfg.model.dec_hidden == 14);
  CHECK(cfg.model.attn_dim == 9);
  CHECK(cfg.model.enc_layers == 1);
  CHECK(cfg.model.dec_layers == 1);
  CHECK(cfg.model.dropout == 0.25);
  CHECK(cfg.train.lambda == 0.75);
  CHECK(cfg.train.gamma == 0.9);
  CHECK(cfg.train.mc_samples == 3);
  CHECK(cfg.train.kernel == PcpgKernel::uniform(5, 2));
  CHECK(cfg.train.padding == BoundaryPolicy::Truncate);
  CHECK(cfg.train.discount == DiscountMode::Conventional);
  CHECK(cfg.train.lr == 0.01);
  CHECK(cfg.train.optimizer == "sgd");
  CHECK(cfg.train.batch_size == 8);
  CHECK(cfg.train.max_iters == 123);
  CHECK(cfg.train.seed == 42);
  CHECK(cfg.train.ce_on_samples);
  CHECK(cfg.train.max_decode_len == 30);
  CHECK(cfg.train.eval_every == 50);
  CHECK(cfg.train.checkpoint_every == 100);
  CHECK(cfg.train.eval_samples == 32);
  CHECK(cfg.train.stop_at_cer == 0.02);
  CHECK(cfg.train.patience == 7);
  CHECK(cfg.task == "reverse");
  CHECK(cfg.n_train == 300);
  CHECK(cfg.n_val == 40);
  CHECK(cfg.min_len == 3);
  CHECK(cfg.max_len == 6);
  CHECK(cfg.min_words == 1);
  CHECK(cfg.max_words == 2);
  CHECK(cfg.n_classes == 8);
  CHECK(cfg.samples_per_class == 5);
  CHECK(cfg.frames.noise == 0.1);
  CHECK(cfg.frames.min_repeat == 2);
  CHECK(cfg.frames.max_repeat == 2);
  CHECK(cfg.data_seed == 99);
  CHECK(cfg.train_data == "a.ds");
  CHECK(cfg.val_data == "b.ds");
  CHECK(cfg.out_dir == "runs/x");
}

TEST_CASE("kernel weights accept fractions and renormalize") {
  const ExperimentConfig cfg = parse(
      "kernel_k = 3\n"
      "kernel_s = 1\n"
      "kernel_w = 1/3, 1/2, 1/6\n");
  const Eigen::VectorXd& w = cfg.train.kernel.weights();
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0 / 2).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) acc += w[i];
  CHECK(acc == 1.0);  // left-to-right sum is exact by construction

  // unnormalized counts scale down
  const ExperimentConfig counts = parse(
      "kernel_k = 3\n"
      "kernel_w = 1, 2, 1\n");
  CHECK(counts.train.kernel.weights()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(counts.train.kernel.weights()[1] == doctest::Approx(0.5).epsilon(1e-12));

  // explicit uniform resets an inherited list
  const ExperimentConfig uni = parse(
      "kernel_k = 4\n"
      "kernel_w = uniform\n");
  CHECK(uni.train.kernel == PcpgKernel::uniform(4, 1));

  // length must match k
  CHECK_THROWS_AS(parse("kernel_k = 3\nkernel_w = 1, 2\n"), std::invalid_argument);
}

TEST_CASE("sweep grids parse into their vectors") {
  const ExperimentConfig cfg = parse(
      "sweep_kernels = 1:1; 5:5; 5:1\n"
      "sweep_weights = 1/3,1/3,1/3; 1/4,1/2,1/4\n"
      "sweep_lambda = 0, 0.5, 1\n"
      "seeds = 1, 2, 3, 4, 5\n"
      "include_ce_baseline = false\n");
  REQUIRE(cfg.sweep_kernels.size() == 3);
  CHECK(cfg.sweep_kernels[0] == std::pair<int, int>(1, 1));
  CHECK(cfg.sweep_kernels[1] == std::pair<int, int>(5, 5));
  CHECK(cfg.sweep_kernels[2] == std::pair<int, int>(5, 1));
  REQUIRE(cfg.sweep_weights.size() == 2);
  CHECK(cfg.sweep_weights[0].size() == 3);
  CHECK(cfg.sweep_weights[1][1] == 0.5);
  CHECK(cfg.sweep_lambdas == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(!cfg.include_ce_baseline);

  CHECK_THROWS_AS(parse("sweep_kernels = 5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("seeds = \n"), std::invalid_argument);
}

TEST_CASE("comments, spacing, and errors carry line numbers") {
  const ExperimentConfig cfg = parse(
      "# full-line comment\n"
      "   lambda=0.125   # trailing comment\n"
      "\n"
      "\tgamma\t=\t1\n");
  CHECK(cfg.train.lambda == 0.125);
  CHECK(cfg.train.gamma == 1.0);

  std::string msg = error_of("pcpg-config v1\n\nlambdaa = 0.5\n");
  CHECK(msg.find("test:3") != std::string::npos);
  CHECK(msg.find("unknown key 'lambdaa'") != std::string::npos);

  msg = error_of("pcpg-config v1\nlambda 0.5\n");
  CHECK(msg.find("expected key = value") != std::string::npos);

  msg = error_of("pcpg-config v1\nlambda =\n");
  CHECK(msg.find("empty value") != std::string::npos);

  msg = error_of("pcpg-config v1\nbatch_size = four\n");
  CHECK(msg.find("expected an integer") != std::string::npos);
  CHECK(msg.find("test:2") != std::string::npos);

  msg = error_of("pcpg-config v1\nlambda = 0.5x\n");
  CHECK(msg.find("expected a number") != std::string::npos);

  msg = error_of("pcpg-config v1\ninclude_ce_baseline = yep\n");
  CHECK(msg.find("expected true or false") != std::string::npos);

  msg = error_of("pcpg-config v1\npadding = mirror\n");
  CHECK(msg.find("padding must be") != std::string::npos);

  msg = error_of("pcpg-config v1\ndiscount = none\n");
  CHECK(msg.find("discount must be") != std::string::npos);

  msg = error_of("pcpg-config v1\nce_source = oracle\n");
  CHECK(msg.find("ce_source must be") != std::string::npos);
}

TEST_CASE("semantic validation still applies after parsing") {
  CHECK_THROWS_AS(parse("lambda = 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("gamma = -0.1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("batch_size = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("kernel_k = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("kernel_w = 1/0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("optimizer = lbfgs\n"), std::invalid_argument);
}

TEST_CASE("missing config files are reported as file errors") {
  CHECK_THROWS_AS(parse_config_file("/nonexistent/nope.conf"), std::runtime_error);
}
