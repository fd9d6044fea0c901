// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tarn/commands.hpp"
#include "tarn/config.hpp"

namespace {

std::size_t thread_count() {
  const char* env = std::getenv("TARN_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const long n = std::stol(env);
    if (n > 0) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  std::cerr << "warning: ignoring TARN_THREADS='" << env << "'\n";
  return 1;
}

// Loads a JSON document and applies "--set a.b=value" overrides.
int load(const std::string& path, const std::vector<std::string>& overrides, nlohmann::json& doc) {
  return tarn::cli::guarded(std::cerr, [&] {
    doc = tarn::read_json_file(path);
    for (const auto& o : overrides) tarn::apply_override(doc, o);
    return tarn::cli::kOk;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal attentive relation network: training and evaluation"};
  app.require_subcommand(1);
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "Override a config key, e.g. --set train.episodes=500")
      ->allow_extra_args(false);

  std::string spec_path, out_dir, config_path, checkpoint, fault;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "Run config JSON")->required()->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on test episodes");
  eval->add_option("--config", config_path, "Run config JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad->add_option("--config", config_path, "Run config JSON")->required()->check(CLI::ExistingFile);
  grad->add_option("--inject-fault", fault, "Corrupt the analytic gradient of this tensor");

  for (auto* sub : {synth, train, eval, grad}) {
    sub->add_option("--set", overrides, "Override a config key")->allow_extra_args(false);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tarn::cli::kUsage;
  }

  nlohmann::json doc;
  if (*synth) {
    if (int rc = load(spec_path, overrides, doc); rc != 0) return rc;
    return tarn::cli::cmd_synth(doc, out_dir, std::cout, std::cerr);
  }
  if (int rc = load(config_path, overrides, doc); rc != 0) return rc;
  if (*train) return tarn::cli::cmd_train(doc, std::cout, std::cerr);
  if (*eval) return tarn::cli::cmd_eval(doc, checkpoint, std::cout, std::cerr, thread_count());
  return tarn::cli::cmd_gradcheck(doc, std::cout, std::cerr,
                                  fault.empty() ? std::nullopt : std::optional<std::string>(fault));
}
