#include "space3/cli/run_config.hpp"

#include <fstream>
#include <stdexcept>

namespace space3::cli {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  return model == o.model && training == o.training && data == o.data &&
         to_json(*this) == to_json(o);
}

objectives::TrainingConfig RunConfig::training_config() const {
  objectives::TrainingConfig c;
  c.batch_size = training.batch_size;
  c.steps = training.steps;
  c.optimizer.learning_rate = training.learning_rate;
  c.optimizer.warmup_steps = training.warmup_steps;
  c.optimizer.weight_decay = training.weight_decay;
  c.loss.temperature = training.temperature;
  c.loss.psm_stop_gradient = training.psm_stop_gradient;
  c.loss.scl_include_self = training.scl_include_self;
  c.labeled_ratio = training.labeled_ratio;
  c.unlabeled_ratio = training.unlabeled_ratio;
  c.seed = training.seed;
  return c;
}

corpus::Limits RunConfig::limits() const { return {data.max_context_len, data.max_response_len}; }

nlohmann::json to_json(const RunConfig& c) {
  const auto& t = c.training;
  const auto& d = c.data;
  nlohmann::json model = model::to_json(c.model);
  model["dropout_rate"] = t.dropout;
  nlohmann::json e2e = c.e2e.to_json();
  return {{"model", model},
          {"training",
           {{"batch_size", t.batch_size},
            {"steps", t.steps},
            {"learning_rate", t.learning_rate},
            {"warmup_steps", t.warmup_steps},
            {"weight_decay", t.weight_decay},
            {"dropout", t.dropout},
            {"temperature", t.temperature},
            {"labeled_ratio", t.labeled_ratio},
            {"unlabeled_ratio", t.unlabeled_ratio},
            {"psm_stop_gradient", t.psm_stop_gradient},
            {"scl_include_self", t.scl_include_self},
            {"seed", t.seed},
            {"checkpoint_every", t.checkpoint_every},
            {"init_seed", t.init_seed}}},
          {"data",
           {{"labeled_path", d.labeled_path},
            {"unlabeled_path", d.unlabeled_path},
            {"max_context_len", d.max_context_len},
            {"max_response_len", d.max_response_len},
            {"min_freq", d.min_freq},
            {"offensive_words_path", d.offensive_words_path}}},
          {"finetune", {{"intent", c.intent.to_json()}, {"e2e", e2e}}},
          {"output_dir", c.output_dir}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    model::reject_unknown_keys(j, {"model", "training", "data", "finetune", "output_dir"},
                               "config");
    RunConfig c;
    const auto& m = section(j, "model");
    c.model = model::model_config_from_json(m);

    const auto& t = section(j, "training");
    model::reject_unknown_keys(t,
                               {"batch_size", "steps", "learning_rate", "warmup_steps",
                                "weight_decay", "dropout", "temperature", "labeled_ratio",
                                "unlabeled_ratio", "psm_stop_gradient", "scl_include_self",
                                "seed", "checkpoint_every", "init_seed"},
                               "training");
    auto& tr = c.training;
    read(t, "batch_size", tr.batch_size);
    read(t, "steps", tr.steps);
    read(t, "learning_rate", tr.learning_rate);
    read(t, "warmup_steps", tr.warmup_steps);
    read(t, "weight_decay", tr.weight_decay);
    read(t, "dropout", tr.dropout);
    read(t, "temperature", tr.temperature);
    read(t, "labeled_ratio", tr.labeled_ratio);
    read(t, "unlabeled_ratio", tr.unlabeled_ratio);
    read(t, "psm_stop_gradient", tr.psm_stop_gradient);
    read(t, "scl_include_self", tr.scl_include_self);
    read(t, "seed", tr.seed);
    read(t, "checkpoint_every", tr.checkpoint_every);
    read(t, "init_seed", tr.init_seed);

    if (m.contains("dropout_rate") && t.contains("dropout") && c.model.dropout_rate != tr.dropout) {
      throw std::invalid_argument("model.dropout_rate and training.dropout disagree");
    }
    if (m.contains("dropout_rate") && !t.contains("dropout")) tr.dropout = c.model.dropout_rate;
    c.model.dropout_rate = tr.dropout;

    if (tr.batch_size == 0) throw std::invalid_argument("training.batch_size must be positive");
    if (tr.steps < 0) throw std::invalid_argument("training.steps must be >= 0");
    if (!(tr.temperature > 0 && tr.temperature <= 1)) {
      throw std::invalid_argument("training.temperature must be in (0, 1]");
    }
    if (tr.checkpoint_every < 0) throw std::invalid_argument("training.checkpoint_every must be >= 0");

    const auto& d = section(j, "data");
    model::reject_unknown_keys(d,
                               {"labeled_path", "unlabeled_path", "max_context_len",
                                "max_response_len", "min_freq", "offensive_words_path"},
                               "data");
    read(d, "labeled_path", c.data.labeled_path);
    read(d, "unlabeled_path", c.data.unlabeled_path);
    read(d, "max_context_len", c.data.max_context_len);
    read(d, "max_response_len", c.data.max_response_len);
    read(d, "min_freq", c.data.min_freq);
    read(d, "offensive_words_path", c.data.offensive_words_path);

    const auto& f = section(j, "finetune");
    model::reject_unknown_keys(f, {"intent", "e2e"}, "finetune");
    const auto& fi = section(f, "intent");
    model::reject_unknown_keys(fi,
                               {"learning_rate", "epochs", "batch_size", "weight_decay",
                                "head_only", "train_fraction", "seed"},
                               "finetune.intent");
    read(fi, "learning_rate", c.intent.learning_rate);
    read(fi, "epochs", c.intent.epochs);
    read(fi, "batch_size", c.intent.batch_size);
    read(fi, "weight_decay", c.intent.weight_decay);
    read(fi, "head_only", c.intent.head_only);
    read(fi, "train_fraction", c.intent.train_fraction);
    read(fi, "seed", c.intent.seed);
    const auto& fe = section(f, "e2e");
    model::reject_unknown_keys(fe,
                               {"learning_rate", "steps", "batch_size", "weight_decay",
                                "warmup_steps", "auxiliary_psm", "max_response_len", "seed"},
                               "finetune.e2e");
    read(fe, "learning_rate", c.e2e.learning_rate);
    read(fe, "steps", c.e2e.steps);
    read(fe, "batch_size", c.e2e.batch_size);
    read(fe, "weight_decay", c.e2e.weight_decay);
    read(fe, "warmup_steps", c.e2e.warmup_steps);
    read(fe, "auxiliary_psm", c.e2e.auxiliary_psm);
    read(fe, "max_response_len", c.e2e.max_response_len);
    read(fe, "seed", c.e2e.seed);

    read(j, "output_dir", c.output_dir);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

std::filesystem::path write_effective_config(const RunConfig& config,
                                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / "effective_config.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
  return path;
}

}  // namespace space3::cli
