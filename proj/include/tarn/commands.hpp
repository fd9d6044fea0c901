// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarn/errors.hpp"

namespace tarn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Writes "<out_dir>/<name>.tsf" (+ ".tsv" when semantics are requested).
int cmd_synth(const nlohmann::json& spec, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err);

/// Trains and writes train_log.csv, checkpoint.tck, checkpoint.json and summary.json.
int cmd_train(const nlohmann::json& config, std::ostream& out, std::ostream& err);

/// Evaluates a checkpoint on test episodes and writes eval.csv.
int cmd_eval(const nlohmann::json& config, const std::filesystem::path& checkpoint,
             std::ostream& out, std::ostream& err, std::size_t threads = 1);

/// Gradient check of the configured model on one tiny synthetic episode.
/// `inject_fault` names a tensor whose analytic gradient is corrupted.
int cmd_gradcheck(const nlohmann::json& config, std::ostream& out, std::ostream& err,
                  const std::optional<std::string>& inject_fault = std::nullopt);

/// Runs `fn`, mapping library exceptions to exit codes and messages on `err`.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const SpecError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
}


}  // namespace tarn::cli
