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

#include "cli.h"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwpx/corpus.h"
#include "mwpx/error.h"
#include "mwpx/expr.h"
#include "mwpx/harness.h"
#include "mwpx/mathqa.h"
#include "mwpx/numbers.h"
#include "mwpx/solver/gradient_check.h"
#include "mwpx/solver/model.h"
#include "mwpx/solver/net.h"
#include "mwpx/solver/train.h"
#include "mwpx/templates.h"

namespace mwpx::cli {
namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileFormatError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kFileFormatError, "cannot write " + path);
  out << text;
}

// Standard table plus entries from a constants file: a JSON array of
// {"id", "value"} objects, as written by `adapt --constants-out`.
ConstantTable load_constants(const std::string& path) {
  ConstantTable table = ConstantTable::standard();
  if (path.empty()) return table;
  try {
    for (const json& e : json::parse(slurp(path))) {
      table.add(e.at("id").get<std::string>(), e.at("value").get<double>());
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kFileFormatError, path + ": " + e.what());
  }
  return table;
}

std::string constants_json(const ConstantTable& table) {
  json arr = json::array();
  for (const auto& e : table.entries()) arr.push_back({{"id", e.id}, {"value", e.value}});
  return arr.dump(2) + "\n";
}

std::vector<ProblemRecord> filter_records(std::vector<ProblemRecord> records,
                                          const std::string& split,
                                          const std::vector<std::string>& langs) {
  std::optional<Split> want;
  if (split != "all") {
    want = split_from_name(split);
    if (!want) throw Error(Errc::kConfigError, "unknown split " + split);
  }
  std::vector<ProblemRecord> out;
  for (ProblemRecord& r : records) {
    if (want && r.split != *want) continue;
    if (!langs.empty() && std::find(langs.begin(), langs.end(), r.lang) == langs.end()) continue;
    out.push_back(std::move(r));
  }
  return out;
}

struct AdaptArgs {
  std::string input, out, report, constants_out, split;
  std::size_t limit = 0;
  bool keep_pow = false;
  double threshold = kDefaultAnswerThreshold;
};

int run_adapt(const AdaptArgs& a, std::ostream& out) {
  std::optional<std::string> split;
  if (!a.split.empty()) split = a.split;
  std::optional<std::size_t> limit;
  if (a.limit > 0) limit = a.limit;
  std::vector<mathqa::RawRecord> raw = mathqa::load_raw(a.input, split, limit);
  ConstantTable constants = ConstantTable::standard();
  mathqa::AdaptConfig config;
  config.exclude_pow = !a.keep_pow;
  config.threshold = a.threshold;
  mathqa::AdaptResult result =
      mathqa::adapt_dataset(raw, config, mathqa::RuleTable::standard(), constants);
  write_records(a.out, result.records);
  if (!a.report.empty()) write_text(a.report, result.report.to_json() + "\n");
  if (!a.constants_out.empty()) write_text(a.constants_out, constants_json(constants));
  const auto& r = result.report;
  out << "input " << r.input << ", kept " << r.kept << ", filtered "
      << r.rejected_filtered_op << ", pow " << r.rejected_pow << ", parse "
      << r.rejected_parse << ", verification " << r.rejected_verification << "\n";
  for (const auto& [name, c] : r.per_split) {
    out << "  " << name << ": kept " << c.kept << " of " << c.input << "\n";
  }
  return 0;
}

struct TemplatesArgs {
  std::string input, constants, split = "all";
  bool mask_constants = false;
  bool filter_tc = false;
};

int run_templates(const TemplatesArgs& a, std::ostream& out) {
  ConstantTable constants = load_constants(a.constants);
  auto records = filter_records(read_records(a.input, constants), a.split, {});
  TemplateGroups groups = group_by_template(records, a.mask_constants);
  out << template_histogram(groups);
  if (a.filter_tc) {
    auto kept = mwpx::filter_tc(records, groups);
    out << "filter_tc: kept " << kept.size() << " of " << records.size() << "\n";
  }
  return 0;
}

struct SynthArgs {
  std::string preset = "desk", config, out, dump_config;
  int train = 600, dev = 100, test = 100;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  SynthConfig config;
  if (!a.config.empty()) {
    config = synth_config_from_json(slurp(a.config));
  } else if (a.preset == "desk") {
    config = desk_synth_config(a.train, a.dev, a.test, a.seed);
  } else if (a.preset == "half_paired") {
    config = half_paired_synth_config(a.train, a.dev, a.test, a.seed);
  } else if (a.preset == "english") {
    config = english_synth_config(a.train + a.dev + a.test, a.seed);
    config.dev_problems = a.dev;
    config.test_problems = a.test;
  } else {
    throw Error(Errc::kConfigError, "unknown preset " + a.preset);
  }
  if (!a.dump_config.empty()) write_text(a.dump_config, synth_config_to_json(config));
  auto records = generate_synthetic_bilingual(config, ConstantTable::standard());
  write_records(a.out, records);
  out << "wrote " << records.size() << " records to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string train, dev, out, constants, mode = "mixed", log;
  std::string format = "records";
  std::vector<std::string> langs;
  int epochs = 150, patience = 30, batch = 32;
  int embed = 64, hidden = 128, state = 128, max_len = 32;
  double lr = 0.1, lambda = 1.0, tau = 0.1, stop_at = 2.0;
  std::string squash = "tanh", negatives = "other_positives";
  bool pretrained_schedule = false;
  bool mask_constants = false;
  std::uint64_t seed = 1;
};

std::vector<ProblemRecord> load_training_file(const std::string& path,
                                              const std::string& format,
                                              const ConstantTable& constants,
                                              std::ostream& out) {
  if (format == "records") return read_records(path, constants);
  if (format == "math23k") {
    LoadResult lr = load_math23k(path, constants);
    out << "math23k: " << lr.records.size() << " records, " << lr.rejects.size()
        << " rejected\n";
    return std::move(lr.records);
  }
  throw Error(Errc::kConfigError, "unknown format " + format);
}

int run_train(const TrainArgs& a, std::ostream& out) {
  ConstantTable constants = load_constants(a.constants);
  auto mode = solver::train_mode_from_name(a.mode);
  if (!mode) throw Error(Errc::kConfigError, "unknown mode " + a.mode);
  std::vector<ProblemRecord> all = load_training_file(a.train, a.format, constants, out);
  std::vector<ProblemRecord> train_set = filter_records(all, "train", {});
  std::vector<ProblemRecord> dev_set =
      a.dev.empty() ? filter_records(all, "dev", a.langs)
                    : filter_records(load_training_file(a.dev, a.format, constants, out),
                                     "all", a.langs);
  if (train_set.empty()) train_set = all;  // files without split fields

  solver::TrainConfig tc = a.pretrained_schedule ? solver::TrainConfig::pretrained_preset()
                                            : solver::TrainConfig{};
  tc.mode = *mode;
  tc.languages = a.langs;
  tc.max_epochs = a.epochs;
  tc.patience = a.patience;
  tc.batch_size = a.batch;
  if (!a.pretrained_schedule) tc.learning_rate = a.lr;
  tc.lambda = a.lambda;
  tc.temperature = a.tau;
  tc.negatives = a.negatives == "all_others" ? solver::NegativeSet::kAllOthers
                                             : solver::NegativeSet::kOtherPositives;
  tc.mask_constants = a.mask_constants;
  tc.max_decode_len = a.max_len;
  tc.stop_at_dev_accuracy = a.stop_at;
  tc.seed = a.seed;
  json log = json::array();
  tc.on_epoch = [&](const solver::EpochLog& e) {
    out << "epoch " << e.epoch << "  loss " << std::fixed << std::setprecision(4)
        << e.loss << "  ce " << e.cross_entropy << "  cl " << e.contrastive
        << "  dev " << e.dev_accuracy << std::defaultfloat << "\n";
    log.push_back({{"epoch", e.epoch},
                   {"loss", e.loss},
                   {"cross_entropy", e.cross_entropy},
                   {"contrastive", e.contrastive},
                   {"learning_rate", e.learning_rate},
                   {"dev_accuracy", e.dev_accuracy}});
  };

  solver::ModelConfig mc;
  mc.embed_dim = a.embed;
  mc.hidden_dim = a.hidden;
  mc.state_dim = a.state;
  if (a.squash == "sigmoid") {
    mc.squash = solver::Squash::kSigmoid;
  } else if (a.squash != "tanh") {
    throw Error(Errc::kConfigError, "unknown squash " + a.squash);
  }
  std::vector<ProblemRecord> selected = solver::select_training_records(train_set, tc);
  solver::Model model = solver::make_model(mc, constants, selected, a.seed);
  solver::TrainResult result = solver::train(model, train_set, dev_set, tc);
  solver::save_checkpoint(a.out, model);
  if (!a.log.empty()) write_text(a.log, log.dump(2) + "\n");
  out << "trained on " << result.train_size << " records; best epoch "
      << result.best_epoch << ", dev accuracy " << result.best_dev_accuracy
      << "\nsaved " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string model, input, report, constants, split = "all";
  std::vector<std::string> langs;
  double threshold = kDefaultAnswerThreshold;
  int max_len = 32, threads = 1;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  ConstantTable constants = load_constants(a.constants);
  solver::Model model = solver::load_checkpoint(a.model);
  auto records = filter_records(read_records(a.input, constants), a.split, a.langs);
  // One report per (dataset, lang).
  std::map<std::pair<std::string, std::string>, std::vector<ProblemRecord>> cells;
  for (ProblemRecord& r : records) cells[{r.dataset, r.lang}].push_back(std::move(r));
  json reports = json::array();
  for (const auto& [key, subset] : cells) {
    EvalReport rep = solve_accuracy(model, subset, a.threshold, a.max_len,
                                    key.first, key.second, a.threads);
    out << rep.summary();
    reports.push_back(json::parse(rep.to_json()));
  }
  if (!a.report.empty()) write_text(a.report, reports.dump(2) + "\n");
  return 0;
}

struct SolveArgs {
  std::string model, text, lang = "en";
  int max_len = 32;
};

int run_solve(const SolveArgs& a, std::istream& in, std::ostream& out,
              std::ostream& err) {
  std::string text = a.text;
  if (text.empty()) {
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  solver::Model model = solver::load_checkpoint(a.model);
  Extraction ex = extract_quantities(tokenize(text, a.lang));
  ProblemRecord record;
  record.id = "input";
  record.lang = a.lang;
  record.tokens = std::move(ex.tokens);
  record.quantities = std::move(ex.quantities);
  if (record.tokens.empty()) throw Error(Errc::kConfigError, "empty problem text");
  solver::Decoded d = solver::greedy_decode(model, record, a.max_len);
  if (!d.tree) {
    err << "unsolved: " << d.failure << "\n";
    return 1;
  }
  std::vector<double> values = record.quantity_values();
  const double value = evaluate(*d.tree, values, model.vocab.constants());
  out << join_tokens(d.tokens) << "\n" << format_number(value) << "\n";
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  double eps = 1e-5, tolerance = 1e-5;
  std::string loss = "both";
};

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::vector<bool> modes;
  if (a.loss == "ce" || a.loss == "both") modes.push_back(false);
  if (a.loss == "joint" || a.loss == "both") modes.push_back(true);
  if (modes.empty()) throw Error(Errc::kConfigError, "unknown loss " + a.loss);
  bool ok = true;
  for (bool contrastive : modes) {
    solver::GradCheckResult r = solver::tiny_gradient_check(contrastive, a.seed, a.eps);
    out << (contrastive ? "ce+nt_xent" : "ce") << ": max relative error "
        << r.max_relative_error << " (" << r.worst_tensor << ", " << r.entries
        << " entries, " << r.kinks << " kinks)\n";
    for (const auto& t : r.tensors) {
      out << "  " << std::left << std::setw(18) << t.name << " " << t.max_relative_error << "\n";
    }
    ok = ok && r.max_relative_error < a.tolerance;
  }
  out << (ok ? "ok" : "FAILED") << "\n";
  return ok ? 0 : 1;
}

struct ExperimentArgs {
  std::string config, out, table;
  int threads = 0;
};

int run_experiment_cmd(const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig config = ExperimentConfig::from_json(slurp(a.config));
  if (a.threads > 0) config.threads = a.threads;
  ExperimentResult result = mwpx::run_experiment(config);
  out << result.table();
  if (!a.out.empty()) write_text(a.out, result.to_json() + "\n");
  if (!a.table.empty()) write_text(a.table, result.table());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::istream& in,
             std::ostream& out, std::ostream& err) {
  CLI::App app{"Math word problem solver toolkit", "mwpx"};
  app.require_subcommand(1, 1);

  AdaptArgs adapt;
  auto* c_adapt = app.add_subcommand("adapt", "Rewrite MathQA programs into basic-operator trees");
  c_adapt->add_option("--input", adapt.input, "MathQA release file")->required();
  c_adapt->add_option("--out", adapt.out, "Output records (JSON lines)")->required();
  c_adapt->add_option("--report", adapt.report, "Adaptation report (JSON)");
  c_adapt->add_option("--constants-out", adapt.constants_out, "Constant table after adaptation");
  c_adapt->add_option("--split", adapt.split, "Split name for every record");
  c_adapt->add_option("--limit", adapt.limit, "Read at most this many records");
  c_adapt->add_flag("--keep-pow", adapt.keep_pow, "Keep samples whose trees use Pow");
  c_adapt->add_option("--threshold", adapt.threshold, "Relative answer tolerance");

  TemplatesArgs templates;
  auto* c_templates = app.add_subcommand("templates", "Print template group histograms");
  c_templates->add_option("--input", templates.input, "Records (JSON lines)")->required();
  c_templates->add_option("--constants", templates.constants, "Extra constants file");
  c_templates->add_option("--split", templates.split, "train, dev, test or all");
  c_templates->add_flag("--mask-constants", templates.mask_constants);
  c_templates->add_flag("--filter-tc", templates.filter_tc, "Also report filter_tc counts");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic corpus");
  c_synth->add_option("--preset", synth.preset, "desk, half_paired or english");
  c_synth->add_option("--config", synth.config, "Synthetic corpus config (JSON)");
  c_synth->add_option("--dump-config", synth.dump_config, "Write the effective config");
  c_synth->add_option("--train", synth.train);
  c_synth->add_option("--dev", synth.dev);
  c_synth->add_option("--test", synth.test);
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--out", synth.out, "Output records (JSON lines)")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a solver and save a checkpoint");
  c_train->add_option("--train", train.train, "Training records")->required();
  c_train->add_option("--dev", train.dev, "Dev records (default: dev split of --train)");
  c_train->add_option("--format", train.format, "records or math23k");
  c_train->add_option("--out", train.out, "Checkpoint path")->required();
  c_train->add_option("--constants", train.constants, "Extra constants file");
  c_train->add_option("--mode", train.mode, "mono, mixed, mixed+cl or mixed+cl+tc");
  c_train->add_option("--lang", train.langs, "Training language (repeatable)");
  c_train->add_option("--epochs", train.epochs);
  c_train->add_option("--patience", train.patience);
  c_train->add_option("--batch", train.batch);
  c_train->add_option("--lr", train.lr);
  c_train->add_flag("--pretrained-schedule", train.pretrained_schedule, "Use the 3e-5 schedule preset");
  c_train->add_option("--lambda", train.lambda, "Contrastive loss weight");
  c_train->add_option("--tau", train.tau, "Contrastive temperature");
  c_train->add_option("--negatives", train.negatives, "other_positives or all_others");
  c_train->add_flag("--mask-constants", train.mask_constants);
  c_train->add_option("--embed-dim", train.embed);
  c_train->add_option("--hidden-dim", train.hidden);
  c_train->add_option("--state-dim", train.state);
  c_train->add_option("--squash", train.squash, "tanh or sigmoid");
  c_train->add_option("--max-len", train.max_len);
  c_train->add_option("--stop-at", train.stop_at, "Stop when dev accuracy reaches this");
  c_train->add_option("--log", train.log, "Per-epoch log (JSON)");
  c_train->add_option("--seed", train.seed);

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Solve accuracy of a checkpoint");
  c_eval->add_option("--model", eval.model)->required();
  c_eval->add_option("--input", eval.input, "Records (JSON lines)")->required();
  c_eval->add_option("--constants", eval.constants, "Extra constants file");
  c_eval->add_option("--split", eval.split, "train, dev, test or all");
  c_eval->add_option("--lang", eval.langs, "Language filter (repeatable)");
  c_eval->add_option("--report", eval.report, "Report with per-record outcomes (JSON)");
  c_eval->add_option("--threshold", eval.threshold);
  c_eval->add_option("--max-len", eval.max_len);
  c_eval->add_option("--threads", eval.threads);

  SolveArgs solve;
  auto* c_solve = app.add_subcommand("solve", "Solve one problem from --text or stdin");
  c_solve->add_option("--model", solve.model)->required();
  c_solve->add_option("--text", solve.text);
  c_solve->add_option("--lang", solve.lang);
  c_solve->add_option("--max-len", solve.max_len);

  GradcheckArgs gradcheck;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  c_grad->add_option("--seed", gradcheck.seed);
  c_grad->add_option("--eps", gradcheck.eps);
  c_grad->add_option("--tolerance", gradcheck.tolerance);
  c_grad->add_option("--loss", gradcheck.loss, "ce, joint or both");

  ExperimentArgs experiment;
  auto* c_exp = app.add_subcommand("experiment", "Train and evaluate an experiment matrix");
  c_exp->add_option("--config", experiment.config, "Experiment config (JSON)")->required();
  c_exp->add_option("--out", experiment.out, "Result (JSON)");
  c_exp->add_option("--table", experiment.table, "Result table (text)");
  c_exp->add_option("--threads", experiment.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*c_adapt) return run_adapt(adapt, out);
    if (*c_templates) return run_templates(templates, out);
    if (*c_synth) return run_synth(synth, out);
    if (*c_train) return run_train(train, out);
    if (*c_eval) return run_eval(eval, out);
    if (*c_solve) return run_solve(solve, in, out, err);
    if (*c_grad) return run_gradcheck(gradcheck, out);
    if (*c_exp) return run_experiment_cmd(experiment, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace mwpx::cli
