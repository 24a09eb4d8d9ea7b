#include "space3/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "space3/corpus/cleaning.hpp"
#include "space3/eval/finetune.hpp"
#include "space3/model/checkpoint.hpp"
#include "space3/objectives/trainer.hpp"
#include "space3/semtree/annotation_parser.hpp"
#include "space3/semtree/semantic_tree.hpp"
#include "space3/semtree/similarity.hpp"
#include "space3/semtree/tree_edit_distance.hpp"

namespace space3::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reported to the user as "error: ..." with exit code 1.
struct CommandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw CommandError(std::string(what) + " path is empty");
  if (!fs::exists(path)) throw CommandError(std::string(what) + " not found: " + path);
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw CommandError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

json entity_to_json(const eval::Entity& e) {
  return {{"name", e.name}, {"domain", e.domain}, {"attributes", e.attributes}};
}

eval::Entity entity_from_json(const json& j) {
  return {j.at("name").get<std::string>(), j.at("domain").get<std::string>(),
          j.at("attributes").get<std::map<std::string, std::string>>()};
}

json goal_dialog_to_json(const eval::GoalDialog& g) {
  json j = corpus::dialog_to_json(g.dialog);
  j["goal"] = {{"domain", g.goal.domain},
               {"constraints", g.goal.constraints},
               {"requests", g.goal.requests}};
  return j;
}

eval::GoalDialog goal_dialog_from_json(json j) {
  eval::GoalDialog g;
  const json goal = j.at("goal");
  g.goal.domain = goal.at("domain").get<std::string>();
  g.goal.constraints = goal.at("constraints").get<std::map<std::string, std::string>>();
  g.goal.requests = goal.at("requests").get<std::set<std::string>>();
  j.erase("goal");
  const bool labeled = !j.at("turns").empty() && j.at("turns")[0].contains("annotations");
  g.dialog = corpus::dialog_from_json(j, labeled ? corpus::Source::kLabeled
                                                 : corpus::Source::kUnlabeled);
  return g;
}

std::vector<std::string> labels_in_order(const std::vector<eval::IntentExample>& xs) {
  std::vector<std::string> labels;
  for (const auto& x : xs) {
    if (std::find(labels.begin(), labels.end(), x.label) == labels.end()) labels.push_back(x.label);
  }
  return labels;
}

struct LoadedModel {
  model::ModelConfig config;
  corpus::Vocabulary vocab;
  ad::ParameterStore params;
  json meta = json::object();
};

LoadedModel load_model(const std::string& checkpoint) {
  require_file(checkpoint, "checkpoint");
  model::Checkpoint ck = model::load_checkpoint(checkpoint);
  return {ck.config, ck.vocab, std::move(ck.params), ck.meta};
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_intent_dataset(const fs::path& path, const eval::IntentDataset& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::pair<const char*, const std::vector<eval::IntentExample>*> splits[] = {
      {"train", &data.train}, {"validation", &data.validation}, {"test", &data.test}};
  for (const auto& [name, xs] : splits) {
    for (const auto& x : *xs) {
      out << json{{"text", x.text}, {"label", x.label}, {"split", name}}.dump() << '\n';
    }
  }
}

eval::IntentDataset load_intent_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open intent dataset " + path.string());
  eval::IntentDataset data;
  data.id = path.filename().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      model::reject_unknown_keys(j, {"text", "label", "split"}, "intent record");
      eval::IntentExample x{j.at("text").get<std::string>(), j.at("label").get<std::string>()};
      const std::string split = j.value("split", "train");
      if (split == "train") data.train.push_back(x);
      else if (split == "validation") data.validation.push_back(x);
      else if (split == "test") data.test.push_back(x);
      else throw std::invalid_argument("unknown split '" + split + "'");
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (data.train.empty()) throw std::runtime_error(path.string() + ": no training examples");
  data.labels = labels_in_order(data.train);
  return data;
}

void write_e2e_dataset(const fs::path& path, const eval::E2ECorpus& c, const std::string& id) {
  json db = json::array(), train = json::array(), test = json::array();
  for (const auto& e : c.db) db.push_back(entity_to_json(e));
  for (const auto& g : c.train) train.push_back(goal_dialog_to_json(g));
  for (const auto& g : c.test) test.push_back(goal_dialog_to_json(g));
  write_json(path, {{"id", id}, {"db", db}, {"train", train}, {"test", test}});
}

eval::E2ECorpus load_e2e_dataset(const fs::path& path, std::string* id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open e2e dataset " + path.string());
  try {
    json j;
    in >> j;
    model::reject_unknown_keys(j, {"id", "db", "train", "test"}, "e2e dataset");
    eval::E2ECorpus c;
    for (const auto& e : j.at("db")) c.db.push_back(entity_from_json(e));
    for (const auto& g : j.at("train")) c.train.push_back(goal_dialog_from_json(g));
    if (j.contains("test")) {
      for (const auto& g : j.at("test")) c.test.push_back(goal_dialog_from_json(g));
    }
    if (id) *id = j.value("id", path.filename().string());
    return c;
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

int cmd_preprocess(const PreprocessOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.labeled_path.empty() && opt.unlabeled_path.empty()) {
      throw CommandError("preprocess needs --labeled and/or --unlabeled");
    }
    if (!opt.labeled_path.empty()) require_file(opt.labeled_path, "labeled corpus");
    if (!opt.unlabeled_path.empty()) require_file(opt.unlabeled_path, "unlabeled corpus");
    RunConfig config;
    if (!opt.config_path.empty()) {
      require_file(opt.config_path, "config");
      config = load_run_config(opt.config_path);
    }
    corpus::CleaningConfig cleaning;
    if (!config.data.offensive_words_path.empty()) {
      require_file(config.data.offensive_words_path, "offensive word list");
      cleaning.offensive_words = corpus::load_word_list(config.data.offensive_words_path);
    }
    const fs::path dir = opt.out_dir.empty() ? fs::path(config.output_dir) : fs::path(opt.out_dir);
    fs::create_directories(dir);

    json report = json::object();
    std::vector<corpus::Dialog> everything;
    const std::tuple<const char*, std::string, corpus::Source> inputs[] = {
        {"labeled", opt.labeled_path, corpus::Source::kLabeled},
        {"unlabeled", opt.unlabeled_path, corpus::Source::kUnlabeled}};
    for (const auto& [name, path, source] : inputs) {
      if (path.empty()) continue;
      corpus::LoadResult loaded = corpus::load_corpus(path, source);
      corpus::CleaningReport rep;
      auto kept = corpus::clean_corpus(loaded.dialogs, cleaning, rep);
      corpus::write_corpus(dir / (std::string(name) + ".jsonl"), kept);
      json diagnostics = json::array();
      for (const auto& d : loaded.diagnostics) {
        diagnostics.push_back({{"line", d.line}, {"message", d.message}});
      }
      json r = rep.to_json();
      r["invalid_records"] = diagnostics;
      report[name] = r;
      out << name << ": " << rep.input_dialogs << " dialogs in, " << rep.kept_dialogs << " kept";
      for (std::size_t i = 0; i < corpus::kNumCleanRules; ++i) {
        if (rep.rejected[i] == 0) continue;
        out << ", " << corpus::clean_rule_name(static_cast<corpus::CleanRule>(i)) << "="
            << rep.rejected[i];
      }
      if (!loaded.diagnostics.empty()) out << ", " << loaded.diagnostics.size() << " invalid records";
      out << '\n';
      everything.insert(everything.end(), kept.begin(), kept.end());
    }
    if (!everything.empty()) {
      auto vocab = corpus::Vocabulary::build(everything, config.data.min_freq);
      std::ofstream v(dir / "vocab.txt");
      for (const auto& t : vocab.tokens()) v << t << '\n';
      report["vocab_size"] = vocab.size();
    }
    write_json(dir / "cleaning_report.json", report);
    write_effective_config(config, dir);
    return 0;
  });
}

int cmd_pretrain(const PretrainOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config;
    if (!opt.config_path.empty()) {
      require_file(opt.config_path, "config");
      config = load_run_config(opt.config_path);
    }
    if (opt.seed) config.training.seed = *opt.seed;
    if (opt.out_dir) config.output_dir = *opt.out_dir;
    const fs::path dir = config.output_dir;

    std::vector<corpus::Dialog> labeled, unlabeled;
    auto load = [&](const std::string& path, corpus::Source source, const char* what) {
      require_file(path, what);
      auto r = corpus::load_corpus(path, source);
      for (const auto& d : r.diagnostics) {
        err << "warning: " << path << ":" << d.line << ": " << d.message << '\n';
      }
      return r.dialogs;
    };
    if (!config.data.labeled_path.empty()) {
      labeled = load(config.data.labeled_path, corpus::Source::kLabeled, "labeled corpus");
    }
    if (!config.data.unlabeled_path.empty()) {
      unlabeled = load(config.data.unlabeled_path, corpus::Source::kUnlabeled, "unlabeled corpus");
    }
    if (labeled.empty() && unlabeled.empty()) {
      throw CommandError("no training dialogs: set data.labeled_path and/or data.unlabeled_path");
    }

    std::optional<model::Checkpoint> resume;
    if (opt.resume) {
      require_file(*opt.resume, "checkpoint");
      resume = model::load_checkpoint(*opt.resume);
    }
    corpus::Vocabulary vocab;
    if (resume) {
      vocab = resume->vocab;
    } else {
      std::vector<corpus::Dialog> all = labeled;
      all.insert(all.end(), unlabeled.begin(), unlabeled.end());
      vocab = corpus::Vocabulary::build(all, config.data.min_freq);
    }
    config.model.vocab_size = static_cast<int>(vocab.size());
    config.model.validate();
    if (resume && !(resume->config == config.model)) {
      throw CommandError("checkpoint model config differs from the run config");
    }

    auto examples = [&](const std::vector<corpus::Dialog>& ds) {
      std::vector<corpus::TrainingExample> xs;
      for (const auto& d : ds) {
        auto e = corpus::assemble_all(d, vocab, config.limits());
        xs.insert(xs.end(), e.begin(), e.end());
      }
      return xs;
    };
    model::Transformer model(config.model);
    objectives::Pretrainer trainer(model,
                                   objectives::init_pretraining_params(model, config.training.init_seed),
                                   config.training_config(), examples(labeled), examples(unlabeled));
    if (resume) trainer.restore(resume->params, resume->optimizer_state, resume->step);

    fs::create_directories(dir);
    write_effective_config(config, dir);
    auto save = [&](const fs::path& path) {
      model::Checkpoint ck{config.model, vocab, trainer.params(), trainer.optimizer().export_state(),
                           trainer.steps_done(), {{"kind", "pretrain"}, {"config", to_json(config)}}};
      model::save_checkpoint(path, ck);
    };

    std::ofstream log(dir / "train_log.jsonl", resume ? std::ios::app : std::ios::trunc);
    if (!log) throw CommandError("cannot write " + (dir / "train_log.jsonl").string());
    const std::int64_t total = config.training.steps;
    if (trainer.steps_done() > total) {
      throw CommandError("checkpoint is at step " + std::to_string(trainer.steps_done()) +
                         ", beyond training.steps = " + std::to_string(total));
    }
    while (trainer.steps_done() < total) {
      objectives::StepRecord rec;
      try {
        rec = trainer.step();
      } catch (const objectives::NonFiniteLoss& e) {
        throw CommandError("step " + std::to_string(trainer.steps_done() + 1) + ": " + e.what());
      }
      log << rec.to_json().dump() << '\n';
      if (rec.step % 10 == 0 || rec.step == total) {
        out << "step " << rec.step << "/" << total << "  L_joint " << format_number(rec.losses.joint)
            << "  L_rgm " << format_number(rec.losses.rgm) << '\n';
      }
      const auto every = config.training.checkpoint_every;
      if (every > 0 && rec.step % every == 0 && rec.step != total) {
        save(dir / ("checkpoint-" + std::to_string(rec.step) + ".ckpt"));
      }
    }
    save(dir / "final.ckpt");
    out << "wrote " << (dir / "final.ckpt").string() << " at step " << trainer.steps_done() << '\n';
    return 0;
  });
}

namespace {

constexpr const char* kTaskHelp = "task must be one of: intent, e2e";

bool supported_task(const std::string& task) { return task == "intent" || task == "e2e"; }

}  // namespace

int cmd_finetune(const FinetuneOptions& opt, std::ostream& out, std::ostream& err) {
  if (!supported_task(opt.task)) {
    err << "error: unknown task '" << opt.task << "'; " << kTaskHelp << '\n';
    return 2;
  }
  return guarded(err, [&] {
    RunConfig config;
    if (!opt.config_path.empty()) {
      require_file(opt.config_path, "config");
      config = load_run_config(opt.config_path);
    }
    if (opt.out_dir) config.output_dir = *opt.out_dir;
    if (opt.seed) config.intent.seed = config.e2e.seed = *opt.seed;
    require_file(opt.dataset, "dataset");
    const fs::path dir = config.output_dir;

    eval::IntentDataset intent;
    eval::E2ECorpus e2e;
    std::string dataset_id;
    if (opt.task == "intent") {
      intent = load_intent_dataset(opt.dataset);
      dataset_id = intent.id;
    } else {
      e2e = load_e2e_dataset(opt.dataset, &dataset_id);
    }

    LoadedModel m;
    if (!opt.checkpoint.empty()) {
      m = load_model(opt.checkpoint);
    } else {
      m.vocab = corpus::Vocabulary::build(
          opt.task == "intent" ? eval::dialogs_of(intent) : eval::dialogs_of(e2e.train),
          config.data.min_freq);
      m.config = config.model;
      m.config.vocab_size = static_cast<int>(m.vocab.size());
      model::Transformer fresh(m.config);
      m.params = objectives::init_pretraining_params(fresh, config.training.init_seed);
    }
    m.config.validate();
    model::Transformer model(m.config);

    eval::EvalReport report;
    json meta = {{"kind", "finetune"}, {"task", opt.task}, {"config", to_json(config)}};
    if (opt.task == "intent") {
      report = eval::finetune_intent(model, m.params, m.vocab, intent, config.intent);
      meta["labels"] = intent.labels;
    } else {
      eval::finetune_e2e(model, m.params, m.vocab, e2e.train, config.e2e);
      const auto& eval_set = e2e.test.empty() ? e2e.train : e2e.test;
      report = eval::evaluate_e2e(model, m.params, m.vocab, eval_set, e2e.db, config.e2e, dataset_id);
      if (e2e.test.empty()) report.warnings.push_back("no test split; scored on the training split");
    }
    fs::create_directories(dir);
    write_effective_config(config, dir);
    model::save_checkpoint(dir / "finetuned.ckpt",
                           {m.config, m.vocab, m.params, ad::ParameterStore{}, 0, meta});
    write_json(dir / "report.json", report.to_json());
    out << report.table();
    return 0;
  });
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  if (!supported_task(opt.task)) {
    err << "error: unknown task '" << opt.task << "'; " << kTaskHelp << '\n';
    return 2;
  }
  return guarded(err, [&] {
    require_file(opt.dataset, "dataset");
    LoadedModel m = load_model(opt.checkpoint);
    model::Transformer model(m.config);
    eval::EvalReport report;
    if (opt.task == "intent") {
      if (!m.params.contains(eval::intent_names::kWeight) || !m.meta.contains("labels")) {
        throw CommandError("checkpoint has no intent head; run finetune --task intent first");
      }
      const auto data = load_intent_dataset(opt.dataset);
      const auto labels = m.meta.at("labels").get<std::vector<std::string>>();
      const auto& split = data.test.empty() ? data.train : data.test;
      report.task = eval::Task::kIntent;
      report.dataset_id = data.id;
      report.config = {{"checkpoint", opt.checkpoint}};
      report.metrics["ACC"] = eval::intent_accuracy(
          eval::predict_intents(model, m.params, m.vocab, labels, split), split, labels,
          &report.warnings);
    } else {
      std::string id;
      const auto c = load_e2e_dataset(opt.dataset, &id);
      eval::E2EConfig ec;
      if (m.meta.contains("config")) ec = run_config_from_json(m.meta.at("config")).e2e;
      report = eval::evaluate_e2e(model, m.params, m.vocab, c.test.empty() ? c.train : c.test,
                                  c.db, ec, id);
    }
    const fs::path dir = opt.out_dir.empty() ? fs::path(".") : fs::path(opt.out_dir);
    write_json(dir / "report.json", report.to_json());
    out << report.table();
    return 0;
  });
}

int cmd_treesim(const std::string& first, const std::string& second, std::ostream& out,
                std::ostream& err) {
  semtree::SemanticTree trees[2];
  const std::string* inputs[] = {&first, &second};
  for (int i = 0; i < 2; ++i) {
    try {
      trees[i] = semtree::canonicalize(semtree::build_semantic_tree(semtree::parse_annotations(*inputs[i])));
    } catch (const semtree::AnnotationParseError& e) {
      err << "error: annotation " << i + 1 << ": " << e.what() << '\n';
      return 1;
    }
  }
  const std::size_t d = semtree::tree_edit_distance(trees[0], trees[1]);
  out << "|T1| = " << trees[0].size() << '\n'
      << "|T2| = " << trees[1].size() << '\n'
      << "d = " << d << '\n'
      << "f = " << format_number(semtree::similarity_coefficient(trees[0], trees[1])) << '\n';
  return 0;
}

int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.out_path.empty()) throw CommandError("synth needs --out");
    if (opt.kind == "intent") {
      auto data = eval::synthetic_intent_dataset(opt.seed);
      write_intent_dataset(opt.out_path, data);
      out << "wrote " << data.train.size() << "/" << data.validation.size() << "/"
          << data.test.size() << " intent examples to " << opt.out_path << '\n';
    } else if (opt.kind == "e2e") {
      auto c = eval::synthetic_e2e_corpus(opt.train, opt.test, opt.seed);
      write_e2e_dataset(opt.out_path, c, "synthetic-e2e-seed" + std::to_string(opt.seed));
      out << "wrote " << c.train.size() << " train and " << c.test.size() << " test dialogs to "
          << opt.out_path << '\n';
    } else if (opt.kind == "labeled" || opt.kind == "unlabeled") {
      const bool labeled = opt.kind == "labeled";
      auto c = eval::synthetic_e2e_corpus(opt.train, 0, opt.seed, labeled);
      corpus::write_corpus(opt.out_path, eval::dialogs_of(c.train));
      out << "wrote " << c.train.size() << " " << opt.kind << " dialogs to " << opt.out_path << '\n';
    } else {
      throw CommandError("unknown synth kind '" + opt.kind +
                         "'; expected intent, e2e, labeled or unlabeled");
    }
    return 0;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-flow dialog pre-training toolkit"};
  app.require_subcommand(1);

  PreprocessOptions pre;
  auto* p = app.add_subcommand("preprocess", "Load, clean and index raw corpora");
  p->add_option("--labeled", pre.labeled_path, "Labeled corpus (JSON lines)");
  p->add_option("--unlabeled", pre.unlabeled_path, "Unlabeled corpus (JSON lines)");
  p->add_option("--out", pre.out_dir, "Output directory");
  p->add_option("--config", pre.config_path, "Run config (JSON)");

  PretrainOptions pt;
  std::uint64_t pt_seed = 0;
  std::string pt_out, pt_resume;
  auto* t = app.add_subcommand("pretrain", "Joint pre-training");
  t->add_option("--config", pt.config_path, "Run config (JSON)");
  auto* pt_seed_opt = t->add_option("--seed", pt_seed, "Overrides training.seed");
  auto* pt_out_opt = t->add_option("--out", pt_out, "Overrides output_dir");
  auto* pt_resume_opt = t->add_option("--resume", pt_resume, "Checkpoint to resume from");

  FinetuneOptions ft;
  std::uint64_t ft_seed = 0;
  std::string ft_out;
  auto* f = app.add_subcommand("finetune", "Fine-tune on a downstream task");
  f->add_option("--task", ft.task, "intent or e2e")->required();
  f->add_option("--checkpoint", ft.checkpoint, "Pre-trained checkpoint");
  f->add_option("--dataset", ft.dataset, "Dataset file")->required();
  f->add_option("--config", ft.config_path, "Run config (JSON)");
  auto* ft_seed_opt = f->add_option("--seed", ft_seed, "Fine-tuning seed");
  auto* ft_out_opt = f->add_option("--out", ft_out, "Overrides output_dir");

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  e->add_option("--task", ev.task, "intent or e2e")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint")->required();
  e->add_option("--dataset", ev.dataset, "Dataset file")->required();
  e->add_option("--out", ev.out_dir, "Directory for report.json");

  std::string ann1, ann2;
  auto* s = app.add_subcommand("treesim", "Semantic tree similarity of two annotation strings");
  s->add_option("first", ann1, "e.g. \"restaurant-inform(area=park)\"")->required();
  s->add_option("second", ann2)->required();

  SynthOptions sy;
  auto* g = app.add_subcommand("synth", "Write a synthetic dataset");
  g->add_option("--kind", sy.kind, "intent, e2e, labeled or unlabeled")->required();
  g->add_option("--seed", sy.seed);
  g->add_option("--train", sy.train, "Dialogs in the training split");
  g->add_option("--test", sy.test, "Dialogs in the test split");
  g->add_option("--out", sy.out_path, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }

  if (p->parsed()) return cmd_preprocess(pre, out, err);
  if (t->parsed()) {
    if (*pt_seed_opt) pt.seed = pt_seed;
    if (*pt_out_opt) pt.out_dir = pt_out;
    if (*pt_resume_opt) pt.resume = pt_resume;
    return cmd_pretrain(pt, out, err);
  }
  if (f->parsed()) {
    if (!supported_task(ft.task)) {
      err << "error: unknown task '" << ft.task << "'; " << kTaskHelp << "\n\n" << f->help();
      return 2;
    }
    if (*ft_seed_opt) ft.seed = ft_seed;
    if (*ft_out_opt) ft.out_dir = ft_out;
    return cmd_finetune(ft, out, err);
  }
  if (e->parsed()) {
    if (!supported_task(ev.task)) {
      err << "error: unknown task '" << ev.task << "'; " << kTaskHelp << "\n\n" << e->help();
      return 2;
    }
    return cmd_evaluate(ev, out, err);
  }
  if (s->parsed()) return cmd_treesim(ann1, ann2, out, err);
  if (g->parsed()) return cmd_synth(sy, out, err);
  return 2;
}

}  // namespace space3::cli
