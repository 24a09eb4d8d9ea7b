#include "space3/eval/synthetic.hpp"

#include <random>
#include <set>
#include <stdexcept>

#include "space3/semtree/annotation_parser.hpp"

namespace space3::eval {

namespace {

const std::vector<std::string> kAreas = {"north", "south", "centre", "east", "west"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "expensive"};
const std::vector<std::string> kRequestable = {"phone", "address", "postcode"};

std::string slot_words(const std::string& slot) {
  return slot == "phone" ? "phone number" : slot;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep,
                 const std::string& last_sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += i + 1 == parts.size() ? last_sep : sep;
    out += parts[i];
  }
  return out;
}

corpus::Turn make_turn(corpus::Speaker speaker, std::string text, const std::string& acts,
                       bool labeled) {
  corpus::Turn t;
  t.speaker = speaker;
  t.text = std::move(text);
  if (labeled) t.annotations = semtree::parse_annotations(acts);
  return t;
}

struct DialogSpec {
  std::string domain;
  std::string area, price;
  int opening = 0;
  int closing = 0;
  std::vector<std::string> requests;

  std::string key() const {
    return domain + "|" + area + "|" + price + "|" + std::to_string(opening) + "|" +
           join(requests, ",", ",");
  }
};

const Entity& lookup(const std::vector<Entity>& db, const DialogSpec& s) {
  for (const Entity& e : db) {
    if (e.domain == s.domain && e.attributes.at("area") == s.area &&
        e.attributes.at("price") == s.price) {
      return e;
    }
  }
  throw std::logic_error("synthetic database has no entity for " + s.key());
}

GoalDialog render(const std::vector<Entity>& db, const DialogSpec& s, const std::string& id,
                  bool labeled) {
  using corpus::Speaker;
  const Entity& e = lookup(db, s);
  const bool restaurant = s.domain == "restaurant";
  GoalDialog gd;
  gd.dialog.dialog_id = id;
  gd.dialog.source = labeled ? corpus::Source::kLabeled : corpus::Source::kUnlabeled;
  gd.goal.domain = s.domain;
  gd.goal.constraints = {{"area", s.area}, {"price", s.price}};
  gd.goal.requests = {s.requests.begin(), s.requests.end()};

  const std::string noun = restaurant ? "restaurant" : "hotel";
  const std::string verb = restaurant ? "place to eat" : "place to stay";
  std::string opening;
  switch (s.opening) {
    case 0: opening = "i want a " + s.price + " " + noun + " in the " + s.area; break;
    case 1: opening = "find me a " + s.price + " " + verb + " in the " + s.area; break;
    default: opening = "i am looking for a " + noun + " in the " + s.area + " that is " + s.price; break;
  }
  auto& turns = gd.dialog.turns;
  const std::string& d = s.domain;
  turns.push_back(make_turn(Speaker::kUser, opening,
                            d + "-inform(area=" + s.area + ", price=" + s.price + ")", labeled));

  std::string detail = restaurant ? e.attributes.at("food")
                                  : e.attributes.at("stars") + " star";
  turns.push_back(make_turn(Speaker::kSystem,
                            e.name + " is a " + s.price + " " + detail + " " + noun + " in the " +
                                s.area + " .",
                            d + "-inform(name=" + e.name + ", area=" + s.area + ")", labeled));

  std::vector<std::string> asked, told, req_acts, inf_acts;
  for (const std::string& slot : s.requests) {
    asked.push_back("the " + slot_words(slot));
    told.push_back("the " + slot_words(slot) + " is " + slot_placeholder(slot));
    req_acts.push_back(slot);
    inf_acts.push_back(slot + "=" + slot_placeholder(slot));
  }
  turns.push_back(make_turn(Speaker::kUser, "can i have " + join(asked, " , ", " and ") + " ?",
                            d + "-request(" + join(req_acts, ", ", ", ") + ")", labeled));
  turns.push_back(make_turn(Speaker::kSystem, join(told, " , ", " and ") + " .",
                            d + "-inform(" + join(inf_acts, ", ", ", ") + ")", labeled));

  turns.push_back(make_turn(Speaker::kUser,
                            s.closing == 0 ? "thank you , goodbye" : "thanks , that is all",
                            "general-thank", labeled));
  turns.push_back(make_turn(Speaker::kSystem, "you are welcome , goodbye .", "general-bye",
                            labeled));
  return gd;
}

DialogSpec random_spec(std::mt19937_64& rng) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  DialogSpec s;
  s.domain = pick(2) == 0 ? "restaurant" : "hotel";
  s.area = kAreas[pick(kAreas.size())];
  s.price = kPrices[pick(kPrices.size())];
  s.opening = static_cast<int>(pick(3));
  s.closing = static_cast<int>(pick(2));
  // Non-empty subset of the requestable slots, in canonical order.
  const std::size_t mask = 1 + pick(7);
  for (std::size_t i = 0; i < kRequestable.size(); ++i) {
    if (mask & (std::size_t{1} << i)) s.requests.push_back(kRequestable[i]);
  }
  return s;
}

}  // namespace

std::vector<Entity> synthetic_database() {
  const std::vector<std::string> r_prefix = {"golden", "royal", "lucky", "little", "happy"};
  const std::vector<std::pair<std::string, std::string>> r_suffix = {
      {"curry", "indian"}, {"wok", "chinese"}, {"grill", "british"}};
  const std::vector<std::string> h_prefix = {"alpha", "bridge", "city", "river", "park"};
  const std::vector<std::string> h_suffix = {"lodge", "inn", "house"};
  const std::vector<std::string> stars = {"two", "three", "four"};
  std::vector<Entity> db;
  for (std::size_t a = 0; a < kAreas.size(); ++a) {
    for (std::size_t p = 0; p < kPrices.size(); ++p) {
      const std::size_t k = (a + p) % 3;
      db.push_back({r_prefix[a] + "_" + r_suffix[p].first,
                    "restaurant",
                    {{"area", kAreas[a]}, {"price", kPrices[p]}, {"food", r_suffix[(p + a) % 3].second}}});
      db.push_back({h_prefix[a] + "_" + h_suffix[p],
                    "hotel",
                    {{"area", kAreas[a]}, {"price", kPrices[p]}, {"stars", stars[k]}}});
    }
  }
  return db;
}

E2ECorpus synthetic_e2e_corpus(std::size_t train_dialogs, std::size_t test_dialogs,
                               std::uint64_t seed, bool labeled) {
  E2ECorpus out;
  out.db = synthetic_database();
  std::mt19937_64 rng(seed);
  std::set<std::string> seen;
  const std::size_t total = train_dialogs + test_dialogs;
  std::size_t attempts = 0;
  while (out.train.size() + out.test.size() < total) {
    if (++attempts > 100000) throw std::invalid_argument("synthetic corpus: too many dialogs requested");
    DialogSpec s = random_spec(rng);
    if (!seen.insert(s.key()).second) continue;
    const std::size_t n = out.train.size() + out.test.size();
    auto& bucket = n < train_dialogs ? out.train : out.test;
    bucket.push_back(render(out.db, s, (n < train_dialogs ? "train-" : "test-") + std::to_string(n),
                            labeled));
  }
  return out;
}

std::vector<corpus::Dialog> overfit_dialogs(std::uint64_t seed) {
  E2ECorpus c = synthetic_e2e_corpus(20, 0, seed, true);
  std::vector<corpus::Dialog> out;
  for (std::size_t i = 0; i < c.train.size(); ++i) {
    corpus::Dialog d = c.train[i].dialog;
    if (i >= 10) {
      d.source = corpus::Source::kUnlabeled;
      for (auto& t : d.turns) t.annotations.reset();
    }
    out.push_back(std::move(d));
  }
  return out;
}

IntentDataset synthetic_intent_dataset(std::uint64_t seed) {
  const std::vector<std::string> labels = {"book", "find", "cancel"};
  const std::vector<std::vector<std::string>> keywords = {
      {"book", "reserve"}, {"find", "search"}, {"cancel", "drop"}};
  const std::vector<std::string> filler = {
      "a",    "table", "room",   "for",  "two",  "people", "tonight", "tomorrow",
      "please", "at",  "the",    "hotel", "restaurant", "in", "centre", "north",
      "my",   "i",     "want",   "to",   "could", "you",  "me",      "near"};
  std::mt19937_64 rng(seed);
  std::set<std::string> seen;
  auto make_split = [&](std::size_t n) {
    std::vector<IntentExample> split;
    while (split.size() < n) {
      const std::size_t label = split.size() % labels.size();
      const std::size_t len = std::uniform_int_distribution<std::size_t>(3, 6)(rng);
      std::vector<std::string> words;
      for (std::size_t i = 0; i < len; ++i) {
        words.push_back(filler[std::uniform_int_distribution<std::size_t>(0, filler.size() - 1)(rng)]);
      }
      const auto& kw = keywords[label][(split.size() / labels.size()) % 2];
      words.insert(words.begin() + static_cast<long>(std::uniform_int_distribution<std::size_t>(0, len)(rng)), kw);
      std::string text = join(words, " ", " ");
      if (!seen.insert(text).second) continue;
      split.push_back({text, labels[label]});
    }
    return split;
  };
  IntentDataset ds;
  ds.id = "synthetic-intent-3way-seed" + std::to_string(seed);
  ds.labels = labels;
  ds.train = make_split(50);
  ds.validation = make_split(30);
  ds.test = make_split(60);
  return ds;
}

std::vector<corpus::Dialog> dialogs_of(const std::vector<GoalDialog>& dialogs) {
  std::vector<corpus::Dialog> out;
  for (const GoalDialog& g : dialogs) out.push_back(g.dialog);
  return out;
}

std::vector<corpus::Dialog> dialogs_of(const IntentDataset& data) {
  std::vector<corpus::Dialog> out;
  for (const auto* split : {&data.train, &data.validation, &data.test}) {
    for (const IntentExample& ex : *split) {
      corpus::Dialog d;
      d.dialog_id = "intent-" + std::to_string(out.size());
      d.turns = {{corpus::Speaker::kUser, ex.text, std::nullopt},
                 {corpus::Speaker::kSystem, "", std::nullopt}};
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace space3::eval
