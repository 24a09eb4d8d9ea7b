#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "space3/cli/run_config.hpp"
#include "space3/eval/synthetic.hpp"

namespace space3::cli {

// Every command returns a process exit code and never throws; errors go to
// `err` prefixed with "error: ".

struct PreprocessOptions {
  std::string labeled_path;
  std::string unlabeled_path;
  std::string out_dir;
  std::string config_path;  // optional, for data.min_freq and the word list
};
int cmd_preprocess(const PreprocessOptions& opt, std::ostream& out, std::ostream& err);

struct PretrainOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> resume;  // checkpoint to continue from
};
int cmd_pretrain(const PretrainOptions& opt, std::ostream& out, std::ostream& err);

struct FinetuneOptions {
  std::string task;
  std::string checkpoint;  // optional; a fresh model is initialized without it
  std::string dataset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};
int cmd_finetune(const FinetuneOptions& opt, std::ostream& out, std::ostream& err);

struct EvaluateOptions {
  std::string task;
  std::string checkpoint;
  std::string dataset;
  std::string out_dir;
};
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err);

int cmd_treesim(const std::string& first, const std::string& second, std::ostream& out,
                std::ostream& err);

struct SynthOptions {
  std::string kind;  // intent | e2e | overfit
  std::uint64_t seed = 0;
  std::size_t train = 40;
  std::size_t test = 10;
  std::string out_path;
};
int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Dataset files.
//   intent: JSON lines {"text", "label", "split"} with split train|validation|test
//   e2e:    one JSON object {"id", "db", "train", "test"}; dialogs carry a "goal"
void write_intent_dataset(const std::filesystem::path& path, const eval::IntentDataset& data);
eval::IntentDataset load_intent_dataset(const std::filesystem::path& path);
void write_e2e_dataset(const std::filesystem::path& path, const eval::E2ECorpus& corpus,
                       const std::string& id);
eval::E2ECorpus load_e2e_dataset(const std::filesystem::path& path, std::string* id = nullptr);

}  // namespace space3::cli
