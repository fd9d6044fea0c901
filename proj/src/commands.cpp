// SPDX-License-Identifier: Apache-2.0
#include "tarn/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "tarn/config.hpp"
#include "tarn/gradcheck.hpp"

namespace tarn::cli {
namespace {

using nlohmann::json;

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

json manifest(const ParameterSet& params) {
  json tensors = json::array();
  for (const auto& e : params.entries()) {
    tensors.push_back({{"name", e.name}, {"rows", e.var.rows()}, {"cols", e.var.cols()}});
  }
  return tensors;
}

json model_json(const ModelConfig& m) {
  return {{"mode", to_string(m.mode)},
          {"variant", to_string(m.variant)},
          {"measure", to_string(m.measure)},
          {"d_in", m.feature_size},
          {"visual_hidden", m.visual_hidden},
          {"relation_hidden", m.relation_hidden},
          {"nn_hidden", m.nn_hidden},
          {"semantic_size", m.semantic_size},
          {"semantic_hidden", m.semantic_hidden}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// A dataset holding exactly one hand-built episode: C classes with `shots`
// support videos of `sample_segments` rows and one query of `query_segments`.
struct TinyEpisode {
  Dataset dataset;
  Episode episode;
};

TinyEpisode tiny_episode(const ModelConfig& model, std::size_t way, std::size_t shots,
                         std::size_t sample_segments, std::size_t query_segments, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = gauss(rng);
    return m;
  };
  TinyEpisode t;
  t.dataset.feature_size = model.feature_size;
  for (std::size_t c = 0; c < way; ++c) {
    const auto id = static_cast<std::uint32_t>(c);
    t.episode.classes.push_back(id);
    if (model.mode == Mode::kFsl) {
      auto& row = t.episode.support.emplace_back();
      for (std::size_t k = 0; k < shots; ++k) {
        row.push_back(t.dataset.videos.size());
        t.dataset.videos.push_back({"s" + std::to_string(c) + "_" + std::to_string(k), id,
                                    random_matrix(sample_segments, model.feature_size)});
      }
    } else {
      t.dataset.semantics.push_back({id, random_matrix(1, model.semantic_size)});
    }
  }
  t.episode.queries.push_back(t.dataset.videos.size());
  t.episode.labels.push_back(0);
  t.dataset.videos.push_back({"query", 0, random_matrix(query_segments, model.feature_size)});
  return t;
}

}  // namespace

int cmd_synth(const json& spec_doc, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const SyntheticSpec spec = synthetic_spec_from_json(spec_doc);
    const std::string name = spec_doc.value("name", std::string("synthetic"));
    const Dataset ds = generate_synthetic(spec);
    ensure_dir(out_dir);
    const auto tsf = out_dir / (name + ".tsf");
    save_dataset(tsf, ds);
    json summary{{"tsf", tsf.string()},
                 {"bytes", std::filesystem::file_size(tsf)},
                 {"videos", ds.videos.size()},
                 {"classes", spec.n_classes},
                 {"d_in", ds.feature_size}};
    if (!ds.semantics.empty()) {
      auto tsv = tsf;
      tsv.replace_extension(".tsv");
      summary["tsv"] = tsv.string();
      summary["tsv_bytes"] = std::filesystem::file_size(tsv);
    }
    out << summary.dump() << '\n';
    return kOk;
  });
}

int cmd_train(const json& config_doc, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = std::chrono::steady_clock::now();
    const RunConfig config = run_config_from_json(config_doc);
    const Dataset dataset = materialize_dataset(config);
    const TaskSetup task = make_task(config, dataset);
    TarnModel model(config.model);

    const TrainResult result = train(model, task, config.train);
    ensure_dir(config.output_dir);
    {
      auto csv = open_out(config.output_dir / "train_log.csv");
      write_train_log_csv(csv, result.log);
    }
    save_checkpoint(config.output_dir / "checkpoint.tck", model.parameters());
    {
      auto man = open_out(config.output_dir / "checkpoint.json");
      man << json{{"format", "TCK1"}, {"model", model_json(config.model)},
                  {"best_episode", result.best_episode}, {"tensors", manifest(model.parameters())}}
                 .dump(2)
          << '\n';
    }

    std::optional<double> final_val;
    for (const auto& row : result.log)
      if (row.val_accuracy) final_val = row.val_accuracy;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json summary{{"mode", to_string(config.model.mode)},
                 {"variant", to_string(config.model.variant)},
                 {"measure", to_string(config.model.measure)},
                 {"train_episodes", config.train.train_episodes},
                 {"val_episodes", config.train.val_episodes},
                 {"val_every", config.train.val_every},
                 {"final_loss", result.log.empty() ? json(nullptr) : json(result.log.back().loss)},
                 {"final_val_accuracy", optional_number(final_val)},
                 {"best_val_accuracy", optional_number(result.best_val_accuracy)},
                 {"best_episode", result.best_episode},
                 {"parameters", model.parameters().scalar_count()},
                 {"wall_time_s", wall}};
    {
      auto s = open_out(config.output_dir / "summary.json");
      s << summary.dump(2) << '\n';
    }
    out << summary.dump() << '\n';
    return kOk;
  });
}

int cmd_eval(const json& config_doc, const std::filesystem::path& checkpoint, std::ostream& out,
             std::ostream& err, std::size_t threads) {
  return guarded(err, [&] {
    const RunConfig config = run_config_from_json(config_doc);
    const Dataset dataset = materialize_dataset(config);
    const TaskSetup task = make_task(config, dataset);
    TarnModel model(config.model);
    load_checkpoint(checkpoint, model.parameters());

    const EvalResult result =
        evaluate(model, dataset, task.test_classes, task.eval_spec, config.train.test_episodes,
                 stream_seed(config.seed, RngStream::kTest), threads);
    ensure_dir(config.output_dir);
    {
      auto csv = open_out(config.output_dir / "eval.csv");
      write_eval_csv(csv, result.records);
    }
    char line[128];
    std::snprintf(line, sizeof(line), "accuracy: %.4f +/- %.4f (95%%, n=%zu)", result.accuracy(),
                  result.half_width95(), result.total);
    out << line << '\n';
    out << json{{"accuracy", result.accuracy()},
                {"half_width95", result.half_width95()},
                {"correct", result.correct},
                {"total", result.total},
                {"episodes", config.train.test_episodes}}
               .dump()
        << '\n';
    return kOk;
  });
}

int cmd_gradcheck(const json& config_doc, std::ostream& out, std::ostream& err,
                  const std::optional<std::string>& inject_fault) {
  return guarded(err, [&] {
    const RunConfig config = run_config_from_json(config_doc);
    const json gc = config_doc.value("gradcheck", json::object());
    const std::size_t sample_segments = gc.value("sample_segments", std::size_t{3});
    const std::size_t query_segments = gc.value("query_segments", std::size_t{3});
    const double h = gc.value("h", 1e-5);
    const double threshold = gc.value("threshold", 1e-4);
    if (sample_segments == 0 || query_segments == 0) throw SpecError("gradcheck segment counts must be >= 1");

    TarnModel model(config.model);
    perturb_zero_tensors(model.parameters(), derive_seed(config.seed, 12));
    const std::size_t way = std::max<std::size_t>(2, config.train_episode.way == 0 ? 2 : config.train_episode.way);
    const TinyEpisode tiny = tiny_episode(config.model, way, config.train_episode.shots,
                                          sample_segments, query_segments, derive_seed(config.seed, 11));

    std::function<void(ParameterSet&)> corrupt;
    if (inject_fault) {
      if (model.parameters().find(*inject_fault) == nullptr) {
        throw SpecError("cannot inject fault: no tensor named '" + *inject_fault + "'");
      }
      corrupt = [name = *inject_fault](ParameterSet& params) {
        for (auto& e : params.entries()) {
          if (e.name != name) continue;
          for (double& g : e.var.mutable_grad().data()) g = 1.5 * g + 1e-3;
        }
      };
    }
    const GradcheckReport report = gradcheck(
        model.parameters(), [&] { return run_episode(model, tiny.dataset, tiny.episode).loss; }, h,
        threshold, corrupt);

    for (const auto& t : report.tensors) {
      char line[256];
      std::snprintf(line, sizeof(line), "%-24s %.3e %s", t.name.c_str(), t.max_relative_error,
                    t.passed ? "PASS" : "FAIL");
      out << line << '\n';
    }
    out << json{{"passed", report.passed()}, {"worst", report.worst()},
                {"tensors", report.tensors.size()}, {"threshold", threshold}}
               .dump()
        << '\n';
    return report.passed() ? kOk : kNumerical;
  });
}

}  // namespace tarn::cli
