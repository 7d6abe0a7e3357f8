// Copyright 2026 The mwpx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mwpx/harness.h"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mwpx/error.h"
#include "mwpx/solver/net.h"

namespace mwpx {

using nlohmann::json;
using solver::TrainMode;

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::kSolved: return "solved";
    case Outcome::kInvalidTree: return "invalid_tree";
    case Outcome::kEvalError: return "eval_error";
    case Outcome::kWrongValue: return "wrong_value";
  }
  return "?";
}

namespace {

Outcome outcome_from_name(std::string_view name) {
  for (Outcome o : {Outcome::kSolved, Outcome::kInvalidTree, Outcome::kEvalError,
                    Outcome::kWrongValue}) {
    if (outcome_name(o) == name) return o;
  }
  throw Error(Errc::kFileFormatError, "unknown outcome " + std::string(name));
}

}  // namespace

EvalReport EvalReport::from_records(std::string dataset, std::string lang,
                                    std::vector<RecordOutcome> records) {
  EvalReport r;
  r.dataset = std::move(dataset);
  r.lang = std::move(lang);
  std::sort(records.begin(), records.end(),
            [](const RecordOutcome& a, const RecordOutcome& b) { return a.id < b.id; });
  for (Outcome o : {Outcome::kInvalidTree, Outcome::kEvalError, Outcome::kWrongValue}) {
    r.unsolved_reasons[std::string(outcome_name(o))] = 0;
  }
  for (const RecordOutcome& rec : records) {
    ++r.total;
    CategoryCount& cc = r.breakdown[rec.category];
    ++cc.total;
    if (rec.outcome == Outcome::kSolved) {
      ++r.solved;
      ++cc.solved;
    } else {
      ++r.unsolved_reasons[std::string(outcome_name(rec.outcome))];
    }
  }
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.solved) / r.total;
  r.records = std::move(records);
  return r;
}

bool EvalReport::consistent() const {
  EvalReport again = from_records(dataset, lang, records);
  return again.total == total && again.solved == solved &&
         again.accuracy == accuracy && again.breakdown == breakdown &&
         again.unsolved_reasons == unsolved_reasons;
}

namespace {

json report_json(const EvalReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["lang"] = r.lang;
  j["total"] = r.total;
  j["solved"] = r.solved;
  j["accuracy"] = r.accuracy;
  json breakdown = json::object();
  for (const auto& [cat, cc] : r.breakdown) {
    breakdown[cat] = {{"solved", cc.solved}, {"total", cc.total}};
  }
  j["breakdown"] = breakdown;
  j["unsolved_reasons"] = r.unsolved_reasons;
  json recs = json::array();
  for (const RecordOutcome& rec : r.records) {
    json o{{"id", rec.id},
           {"category", rec.category},
           {"outcome", outcome_name(rec.outcome)},
           {"prediction", rec.prediction},
           {"gold", rec.gold}};
    o["value"] = rec.value ? json(*rec.value) : json(nullptr);
    if (!rec.detail.empty()) o["detail"] = rec.detail;
    recs.push_back(std::move(o));
  }
  j["records"] = std::move(recs);
  return j;
}

}  // namespace

std::string EvalReport::to_json() const { return report_json(*this).dump(2); }

EvalReport EvalReport::from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    std::vector<RecordOutcome> records;
    for (const json& o : j.at("records")) {
      RecordOutcome rec;
      rec.id = o.at("id").get<std::string>();
      rec.category = o.value("category", "");
      rec.outcome = outcome_from_name(o.at("outcome").get<std::string>());
      rec.prediction = o.value("prediction", "");
      if (o.contains("value") && !o["value"].is_null()) rec.value = o["value"].get<double>();
      rec.gold = o.at("gold").get<double>();
      rec.detail = o.value("detail", "");
      records.push_back(std::move(rec));
    }
    EvalReport r = from_records(j.value("dataset", ""), j.value("lang", ""),
                                std::move(records));
    // Keep the stored summary so consistent() can compare it to the log.
    r.total = j.at("total").get<std::size_t>();
    r.solved = j.at("solved").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.unsolved_reasons = j.at("unsolved_reasons").get<std::map<std::string, std::size_t>>();
    r.breakdown.clear();
    for (const auto& [cat, cc] : j.at("breakdown").items()) {
      r.breakdown[cat] = {cc.at("solved").get<std::size_t>(), cc.at("total").get<std::size_t>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::kFileFormatError, std::string("eval report: ") + e.what());
  }
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  out << (dataset.empty() ? "records" : dataset);
  if (!lang.empty()) out << "/" << lang;
  out << ": " << solved << "/" << total << " solved, accuracy "
      << std::fixed << std::setprecision(4) << accuracy << "\n";
  out << "  unsolved:";
  for (const auto& [reason, n] : unsolved_reasons) out << " " << reason << "=" << n;
  out << "\n";
  for (const auto& [cat, cc] : breakdown) {
    out << "  " << (cat.empty() ? "(none)" : cat) << ": " << cc.solved << "/"
        << cc.total << "\n";
  }
  return out.str();
}

RecordOutcome solve_one(const solver::Model& model, const ProblemRecord& record,
                        int max_len, double threshold) {
  RecordOutcome out;
  out.id = record.id;
  out.category = record.category;
  out.gold = record.gold_answer;
  solver::Decoded decoded;
  try {
    decoded = solver::greedy_decode(model, record, max_len);
  } catch (const Error& e) {
    out.outcome = Outcome::kInvalidTree;
    out.detail = e.what();
    return out;
  }
  out.prediction = join_tokens(decoded.tokens);
  if (!decoded.tree) {
    out.outcome = Outcome::kInvalidTree;
    out.detail = decoded.failure;
    return out;
  }
  try {
    std::vector<double> values = record.quantity_values();
    out.value = evaluate(*decoded.tree, values, model.vocab.constants());
  } catch (const Error& e) {
    out.outcome = Outcome::kEvalError;
    out.detail = e.what();
    return out;
  }
  out.outcome = check_answer(*out.value, record.gold_answer, threshold)
                    ? Outcome::kSolved
                    : Outcome::kWrongValue;
  return out;
}

EvalReport solve_accuracy(const solver::Model& model,
                          std::span<const ProblemRecord> records,
                          double threshold, int max_len, std::string dataset,
                          std::string lang, int threads) {
  std::vector<RecordOutcome> outcomes(records.size());
  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(records.size(), 1));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < records.size(); i += workers) {
      outcomes[i] = solve_one(model, records[i], max_len, threshold);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return EvalReport::from_records(std::move(dataset), std::move(lang), std::move(outcomes));
}

std::string MethodSpec::label() const {
  std::string out(solver::train_mode_name(mode));
  if (!languages.empty()) {
    out += "(";
    for (std::size_t i = 0; i < languages.size(); ++i) {
      if (i) out += ",";
      out += languages[i];
    }
    out += ")";
  }
  return out;
}

// ---- config I/O ----

namespace {

json model_json(const solver::ModelConfig& m) {
  return {{"embed_dim", m.embed_dim},
          {"hidden_dim", m.hidden_dim},
          {"state_dim", m.state_dim},
          {"squash", m.squash == solver::Squash::kTanh ? "tanh" : "sigmoid"},
          {"max_quantity_tokens", m.max_quantity_tokens},
          {"init_range", m.init_range}};
}

solver::ModelConfig model_from_json(const json& j) {
  solver::ModelConfig m;
  m.embed_dim = j.value("embed_dim", m.embed_dim);
  m.hidden_dim = j.value("hidden_dim", m.hidden_dim);
  m.state_dim = j.value("state_dim", m.state_dim);
  std::string squash = j.value("squash", "tanh");
  if (squash == "tanh") {
    m.squash = solver::Squash::kTanh;
  } else if (squash == "sigmoid") {
    m.squash = solver::Squash::kSigmoid;
  } else {
    throw Error(Errc::kConfigError, "unknown squash " + squash);
  }
  m.max_quantity_tokens = j.value("max_quantity_tokens", m.max_quantity_tokens);
  m.init_range = j.value("init_range", m.init_range);
  return m;
}

json train_json(const solver::TrainConfig& t) {
  return {{"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"end_learning_rate", t.end_learning_rate},
          {"decay_power", t.decay_power},
          {"momentum", t.momentum},
          {"clip_norm", t.clip_norm},
          {"lambda", t.lambda},
          {"temperature", t.temperature},
          {"negatives", t.negatives == solver::NegativeSet::kOtherPositives
                            ? "other_positives"
                            : "all_others"},
          {"mask_constants", t.mask_constants},
          {"max_decode_len", t.max_decode_len},
          {"threshold", t.threshold},
          {"stop_at_dev_accuracy", t.stop_at_dev_accuracy}};
}

solver::TrainConfig train_from_json(const json& j) {
  solver::TrainConfig t;
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.patience = j.value("patience", t.patience);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.end_learning_rate = j.value("end_learning_rate", t.end_learning_rate);
  t.decay_power = j.value("decay_power", t.decay_power);
  t.momentum = j.value("momentum", t.momentum);
  t.clip_norm = j.value("clip_norm", t.clip_norm);
  t.lambda = j.value("lambda", t.lambda);
  t.temperature = j.value("temperature", t.temperature);
  std::string neg = j.value("negatives", "other_positives");
  if (neg == "other_positives") {
    t.negatives = solver::NegativeSet::kOtherPositives;
  } else if (neg == "all_others") {
    t.negatives = solver::NegativeSet::kAllOthers;
  } else {
    throw Error(Errc::kConfigError, "unknown negatives " + neg);
  }
  t.mask_constants = j.value("mask_constants", t.mask_constants);
  t.max_decode_len = j.value("max_decode_len", t.max_decode_len);
  t.threshold = j.value("threshold", t.threshold);
  t.stop_at_dev_accuracy = j.value("stop_at_dev_accuracy", t.stop_at_dev_accuracy);
  return t;
}

SynthConfig synthetic_from_json(const json& j) {
  if (j.contains("preset")) {
    std::string preset = j.at("preset").get<std::string>();
    int train = j.value("train", 600), dev = j.value("dev", 100),
        test = j.value("test", 100);
    std::uint64_t seed = j.value("seed", std::uint64_t{1});
    if (preset == "desk") return desk_synth_config(train, dev, test, seed);
    if (preset == "half_paired") return half_paired_synth_config(train, dev, test, seed);
    throw Error(Errc::kConfigError, "unknown synthetic preset " + preset);
  }
  return synth_config_from_json(j.dump());
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  ExperimentConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kConfigError, std::string("experiment config: ") + e.what());
  }
  try {
    const int version = j.value("version", kExperimentSchemaVersion);
    if (version != kExperimentSchemaVersion) {
      throw Error(Errc::kConfigError,
                  "unsupported experiment schema version " + std::to_string(version));
    }
    c.name = j.value("name", c.name);
    if (j.contains("synthetic")) c.synthetic = synthetic_from_json(j["synthetic"]);
    c.corpus_files = j.value("corpus_files", std::vector<std::string>{});
    for (const json& m : j.at("methods")) {
      MethodSpec spec;
      auto mode = solver::train_mode_from_name(m.at("mode").get<std::string>());
      if (!mode) throw Error(Errc::kConfigError, "unknown mode " + m["mode"].dump());
      spec.mode = *mode;
      spec.languages = m.value("languages", std::vector<std::string>{});
      c.methods.push_back(std::move(spec));
    }
    c.eval_langs = j.value("eval_langs", std::vector<std::string>{});
    if (j.contains("model")) c.model = model_from_json(j["model"]);
    if (j.contains("train")) c.train = train_from_json(j["train"]);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(Errc::kConfigError, std::string("experiment config: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["version"] = kExperimentSchemaVersion;
  j["name"] = name;
  if (synthetic) j["synthetic"] = json::parse(synth_config_to_json(*synthetic));
  j["corpus_files"] = corpus_files;
  json methods = json::array();
  for (const MethodSpec& m : this->methods) {
    methods.push_back({{"mode", solver::train_mode_name(m.mode)},
                       {"languages", m.languages}});
  }
  j["methods"] = methods;
  j["eval_langs"] = eval_langs;
  j["model"] = model_json(model);
  j["train"] = train_json(train);
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump(2);
}

// ---- experiment ----

ExperimentData load_experiment_data(const ExperimentConfig& config,
                                    const ConstantTable& constants) {
  std::vector<ProblemRecord> all;
  if (config.synthetic) {
    all = generate_synthetic_bilingual(*config.synthetic, constants);
  }
  for (const std::string& path : config.corpus_files) {
    auto recs = read_records(path, constants);
    all.insert(all.end(), std::make_move_iterator(recs.begin()),
               std::make_move_iterator(recs.end()));
  }
  if (all.empty()) throw Error(Errc::kConfigError, "experiment has no data");
  ExperimentData data;
  for (ProblemRecord& r : all) {
    switch (r.split) {
      case Split::kTrain: data.train.push_back(std::move(r)); break;
      case Split::kDev: data.dev.push_back(std::move(r)); break;
      case Split::kTest: data.test.push_back(std::move(r)); break;
    }
  }
  return data;
}

namespace {

std::vector<ProblemRecord> by_langs(std::span<const ProblemRecord> records,
                                    const std::vector<std::string>& langs) {
  std::vector<ProblemRecord> out;
  for (const ProblemRecord& r : records) {
    if (langs.empty() || std::find(langs.begin(), langs.end(), r.lang) != langs.end()) {
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::vector<solver::Model>* models) {
  if (config.methods.empty()) throw Error(Errc::kConfigError, "no methods configured");
  const ConstantTable constants = ConstantTable::standard();
  ExperimentData data = load_experiment_data(config, constants);

  std::vector<solver::TrainConfig> train_configs;
  std::vector<std::vector<ProblemRecord>> selected;
  for (const MethodSpec& m : config.methods) {
    solver::TrainConfig tc = config.train;
    tc.mode = m.mode;
    tc.languages = m.languages;
    tc.seed = config.seed;
    selected.push_back(solver::select_training_records(data.train, tc));
    train_configs.push_back(std::move(tc));
  }

  // Evaluation cells: (dataset, lang) of the test split.
  std::set<std::pair<std::string, std::string>> cells;
  for (const ProblemRecord& r : data.test) {
    if (config.eval_langs.empty() ||
        std::find(config.eval_langs.begin(), config.eval_langs.end(), r.lang) !=
            config.eval_langs.end()) {
      cells.emplace(r.dataset, r.lang);
    }
  }

  ExperimentResult result;
  result.name = config.name;
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    const MethodSpec& method = config.methods[k];
    const solver::TrainConfig& tc = train_configs[k];
    solver::Model model = solver::make_model(config.model, constants, selected[k], config.seed);
    std::vector<ProblemRecord> dev = by_langs(data.dev, method.languages);
    ExperimentRow row;
    row.method = method;
    // Selection already applied; train re-applies the same filters.
    row.training = solver::train(model, data.train, dev, tc);
    for (const auto& [dataset, lang] : cells) {
      std::vector<ProblemRecord> subset;
      for (const ProblemRecord& r : data.test) {
        if (r.dataset == dataset && r.lang == lang) subset.push_back(r);
      }
      row.cells.emplace(std::make_pair(dataset, lang),
                        solve_accuracy(model, subset, tc.threshold, tc.max_decode_len,
                                       dataset, lang, config.threads));
    }
    result.rows.push_back(std::move(row));
    if (models != nullptr) models->push_back(std::move(model));
  }
  return result;
}

std::string ExperimentResult::table() const {
  std::vector<std::pair<std::string, std::string>> columns;
  for (const ExperimentRow& row : rows) {
    for (const auto& [key, _] : row.cells) {
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) {
        columns.push_back(key);
      }
    }
  }
  std::size_t label_width = 6;
  for (const ExperimentRow& row : rows) label_width = std::max(label_width, row.method.label().size());
  std::vector<std::size_t> widths;
  for (const auto& [dataset, lang] : columns) {
    widths.push_back(std::max<std::size_t>(7, dataset.size() + lang.size() + 1));
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "method";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << "  " << std::right << std::setw(static_cast<int>(widths[c]))
        << (columns[c].first + "/" + columns[c].second);
  }
  out << "\n";
  for (const ExperimentRow& row : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << row.method.label();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto it = row.cells.find(columns[c]);
      char cell[32] = "-";
      if (it != row.cells.end()) {
        std::snprintf(cell, sizeof cell, "%.1f", 100.0 * it->second.accuracy);
      }
      out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << cell;
    }
    out << "\n";
  }
  return out.str();
}

std::string ExperimentResult::to_json() const {
  json j;
  j["name"] = name;
  json rows_json = json::array();
  for (const ExperimentRow& row : rows) {
    json r;
    r["method"] = row.method.label();
    r["mode"] = solver::train_mode_name(row.method.mode);
    r["languages"] = row.method.languages;
    json epochs = json::array();
    for (const solver::EpochLog& e : row.training.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"cross_entropy", e.cross_entropy},
                        {"contrastive", e.contrastive},
                        {"learning_rate", e.learning_rate},
                        {"dev_accuracy", e.dev_accuracy}});
    }
    r["training"] = {{"train_size", row.training.train_size},
                     {"languages", row.training.languages},
                     {"best_epoch", row.training.best_epoch},
                     {"best_dev_accuracy", row.training.best_dev_accuracy},
                     {"epochs", epochs}};
    json cells = json::array();
    for (const auto& [key, report] : row.cells) cells.push_back(report_json(report));
    r["cells"] = cells;
    rows_json.push_back(std::move(r));
  }
  j["rows"] = rows_json;
  return j.dump(2);
}

}  // namespace mwpx
