#include "gpta/trainer.hpp"

#include <filesystem>

#include "gpta/dialogue_gradient.hpp"
#include "gpta/error.hpp"
#include "gpta/log.hpp"
#include "gpta/report.hpp"
#include "gpta/rng.hpp"
#include "gpta/text.hpp"

namespace gpta {

namespace fs = std::filesystem;
using nlohmann::json;

RunData prepare_data(const RunConfig& cfg) {
  RunData data;
  const auto& d = cfg.data;
  if (!d.validation_path.empty()) {
    data.train = load_jsonl(d.train_path);
    data.validation = load_jsonl(d.validation_path);
    if (!d.test_path.empty()) data.test = load_jsonl(d.test_path);
    const int classes = std::max({data.train.class_count, data.validation.class_count,
                                  data.test ? data.test->class_count : 0});
    data.train.class_count = data.validation.class_count = classes;
    if (data.test) data.test->class_count = classes;
  } else {
    const Dataset all = d.synthetic ? synth_generate(*d.synthetic) : load_jsonl(d.train_path);
    auto parts = split(all, d.split, d.split_seed);
    data.train = std::move(parts.train);
    data.validation = std::move(parts.validation);
    data.test = std::move(parts.test);
  }
  validate(data.train);
  validate(data.validation);

  auto& desc = data.meta.description;
  desc = cfg.description;
  if (desc.name.empty()) {
    desc.name = d.synthetic ? "synthetic" : fs::path(d.train_path).stem().string();
  }
  if (text::trim(desc.task_summary).empty()) {
    desc.task_summary = "Classify each input text into one of " +
                        std::to_string(data.train.class_count) + " classes.";
  }
  if (desc.label_semantics.empty()) {
    for (int c = 0; c < data.train.class_count; ++c) {
      desc.label_semantics.push_back(data.train.class_names.empty()
                                         ? "class " + std::to_string(c)
                                         : data.train.class_names[static_cast<std::size_t>(c)]);
    }
  }
  data.meta.instruction = cfg.instruction;
  data.meta.exemplars = make_exemplars(data.train, cfg.exemplars, cfg.exemplar_seed);
  return data;
}

RunState initial_state(const RunConfig& cfg, const RunData& data) {
  RunState s;
  s.student = StudentParams(cfg.student.dims, data.train.class_count, cfg.student.hash_seed);
  s.ta = initial_ta_handle(cfg.ta);
  s.base_ta = s.ta;
  s.history = PrefixHistory(static_cast<std::size_t>(cfg.k));
  return s;
}

double improvement_rate(std::span<const RoundStats> rounds) {
  if (rounds.empty()) throw ValidationError("improvement rate needs at least one round");
  long generated = 0;
  long exceeded = 0;
  for (const auto& r : rounds) {
    generated += r.generated;
    exceeded += r.exceeded;
  }
  return generated == 0 ? 0.0 : static_cast<double>(exceeded) / static_cast<double>(generated);
}

EpochOutcome run_epoch(RunState state, const RunConfig& cfg, const RunData& data,
                       TaClient& client) {
  const int epoch = state.epoch;
  const auto k = static_cast<std::size_t>(cfg.k);
  EpochRecord rec;
  rec.epoch = epoch;

  if (epoch == 0 && state.s0.empty()) {
    const auto request =
        render_generation_request(data.meta, PrefixHistory(k), 1, cfg.temperature);
    state.s0 = client.generate(state.ta, request).front();
  }

  // (1) Student training on the current prefix.
  rec.train_prefix = state.history.empty() ? state.s0 : state.history.best().prefix;
  state.student.unfreeze();
  auto pass = train_pass(std::move(state.student), data.train, rec.train_prefix, cfg.student.lr,
                         splitmix64(cfg.student.shuffle_seed + static_cast<std::uint64_t>(epoch)));
  state.student = std::move(pass.params);
  rec.train_loss = pass.mean_loss;

  // (2) Freeze, then collect the history on the validation split.
  state.student.freeze();
  PrefixHistory h0(k);
  if (state.history.empty()) {
    const std::string seeds[] = {state.s0};
    h0 = seed_history(state.student, data.validation, cfg.metric, seeds, k);
  } else {
    const std::size_t keep = std::min(k / 2, k - 2);
    h0 = retain_best(rescore(state.history, state.student, data.validation, cfg.metric), keep);
  }

  EpochOutcome out;
  if (h0.size() < k) {
    CollectParams cp;
    cp.kind = cfg.metric;
    cp.k = k;
    cp.per_round = cfg.l;
    cp.temperature = cfg.temperature;
    cp.epoch = epoch;
    auto collected = collect(client, state.ta, data.meta, state.student, data.validation,
                             std::move(h0), cp);
    state.history = std::move(collected.history);
    out.rounds = std::move(collected.rounds);
  } else {
    state.history = std::move(h0);
  }
  rec.best_prefix = state.history.best().prefix;
  rec.val_best = state.history.max_score();
  rec.val_empty = state.history.find("")->score;
  rec.rounds = static_cast<int>(out.rounds.size());
  for (const auto& r : out.rounds) {
    rec.candidates += r.generated;
    rec.improvements += r.exceeded;
  }
  rec.improvement_rate = out.rounds.empty() ? 0.0 : improvement_rate(out.rounds);

  // (3) Dialogue gradients.
  std::vector<FinetuneExample> examples;
  if (state.history.size() > static_cast<std::size_t>(cfg.w)) {
    const auto gradients = build_windows(state.history, cfg.w);
    examples = cap(enrich(gradients, data.meta), cfg.finetune_cap);
  }
  rec.finetune_examples = static_cast<int>(examples.size());

  // (4) TA optimization.
  if (!examples.empty()) {
    out.finetune_file = serialize_jsonl(examples);
    TaHandle source = state.ta;
    if (cfg.ta.lineage == Lineage::FromBase) {
      source = state.base_ta;
      if (source.sim && state.ta.sim) source.sim->calls = state.ta.sim->calls;
    }
    try {
      state.ta = client.finetune(source, out.finetune_file);
      rec.finetune_ok = true;
    } catch (const Error& e) {
      rec.warning = std::string("TA fine-tune failed: ") + e.what();
      log::warn("epoch " + std::to_string(epoch) + ": " + rec.warning);
    }
  } else {
    rec.warning = "no dialogue gradients; TA not fine-tuned";
  }
  rec.ta_generation = state.ta.generation;

  if (!state.best || rec.val_best > state.best->score) {
    state.best = BestRecord{rec.best_prefix, rec.val_best, epoch};
  }
  state.records.push_back(std::move(rec));
  state.epoch = epoch + 1;
  out.state = std::move(state);
  return out;
}

std::vector<double> RunReport::improvement_rates() const {
  std::vector<double> out;
  for (const auto& e : epochs) out.push_back(e.improvement_rate);
  return out;
}

namespace {

std::string state_file(const fs::path& dir, int epoch) {
  return (dir / ("state_epoch" + std::to_string(epoch) + ".json")).string();
}

RunReport make_report(const RunConfig& cfg, const RunState& s) {
  RunReport r;
  r.epochs = s.records;
  r.best = s.best;
  r.metric = to_string(cfg.metric);
  return r;
}

}  // namespace

RunReport run(const RunConfig& cfg, const RunOptions& options) {
  TaClient client(remote_options(cfg.ta));
  return run(cfg, options, client);
}

RunReport run(const RunConfig& cfg, const RunOptions& options, TaClient& client) {
  for (const auto& w : validate(cfg)) log::warn(w);
  const fs::path dir(options.out_dir);
  fs::create_directories(dir);
  text::write_file((dir / "config.json").string(), to_json(cfg).dump(2) + "\n");

  const RunData data = prepare_data(cfg);
  RunState state = options.resume_path.empty()
                       ? initial_state(cfg, data)
                       : parse_state(text::read_file(options.resume_path));
  if (state.epoch > cfg.epochs) {
    throw ValidationError("checkpoint is past the configured number of epochs");
  }

  while (state.epoch < cfg.epochs) {
    const int epoch = state.epoch;
    log::info("epoch " + std::to_string(epoch) + " started");
    auto outcome = run_epoch(std::move(state), cfg, data, client);
    state = std::move(outcome.state);
    if (!outcome.finetune_file.empty()) {
      text::write_file((dir / ("gradients_epoch" + std::to_string(epoch) + ".jsonl")).string(),
                       outcome.finetune_file);
    }
    text::write_file(state_file(dir, epoch), serialize_state(state));
    const RunReport partial = make_report(cfg, state);
    text::write_file((dir / "report.json").string(), to_json(partial).dump(2) + "\n");
    text::write_file((dir / "metrics.csv").string(), metrics_csv(partial));
    const auto& rec = state.records.back();
    log::info("epoch " + std::to_string(epoch) + ": loss " + text::fixed(rec.train_loss, 4) +
              ", val best " + text::fixed(rec.val_best, 4) + " (\"" + rec.best_prefix +
              "\"), val empty " + text::fixed(rec.val_empty, 4) + ", improvement rate " +
              text::fixed(rec.improvement_rate, 4));
  }

  RunReport report = make_report(cfg, state);
  if (state.best) {
    // Reload the best checkpoint, not the last one. After a resume into a
    // fresh directory it may only exist next to the resume file.
    RunState best = state;
    std::vector<fs::path> places{state_file(dir, state.best->epoch)};
    if (!options.resume_path.empty()) {
      places.push_back(state_file(fs::path(options.resume_path).parent_path(), state.best->epoch));
    }
    bool found = state.best->epoch == state.epoch - 1;
    for (const auto& p : places) {
      if (found) break;
      if (fs::exists(p)) {
        best = parse_state(text::read_file(p.string()));
        found = true;
      }
    }
    if (!found) log::warn("best checkpoint not found; reporting the final student instead");
    save_checkpoint(best.student, (dir / "best_student.json").string());
    if (data.test && !data.test->empty()) {
      best.student.freeze();
      report.test = TestScores{score_prefix(best.student, state.best->prefix, *data.test, cfg.metric),
                               score_prefix(best.student, "", *data.test, cfg.metric)};
    }
  }
  text::write_file((dir / "report.json").string(), to_json(report).dump(2) + "\n");
  text::write_file((dir / "metrics.csv").string(), metrics_csv(report));
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"train_prefix", r.train_prefix},
              {"train_loss", r.train_loss},
              {"best_prefix", r.best_prefix},
              {"val_best", r.val_best},
              {"val_empty", r.val_empty},
              {"improvement_rate", r.improvement_rate},
              {"rounds", r.rounds},
              {"candidates", r.candidates},
              {"improvements", r.improvements},
              {"finetune_examples", r.finetune_examples},
              {"finetune_ok", r.finetune_ok},
              {"ta_generation", r.ta_generation},
              {"warning", r.warning}};
}

EpochRecord epoch_record_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.train_prefix = j.at("train_prefix").get<std::string>();
  r.train_loss = j.at("train_loss").get<double>();
  r.best_prefix = j.at("best_prefix").get<std::string>();
  r.val_best = j.at("val_best").get<double>();
  r.val_empty = j.at("val_empty").get<double>();
  r.improvement_rate = j.at("improvement_rate").get<double>();
  r.rounds = j.at("rounds").get<int>();
  r.candidates = j.at("candidates").get<int>();
  r.improvements = j.at("improvements").get<int>();
  r.finetune_examples = j.at("finetune_examples").get<int>();
  r.finetune_ok = j.at("finetune_ok").get<bool>();
  r.ta_generation = j.at("ta_generation").get<int>();
  r.warning = j.at("warning").get<std::string>();
  return r;
}

json to_json(const std::optional<BestRecord>& b) {
  if (!b) return nullptr;
  return json{{"prefix", b->prefix}, {"score", b->score}, {"epoch", b->epoch}};
}

std::optional<BestRecord> best_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return BestRecord{j.at("prefix").get<std::string>(), j.at("score").get<double>(),
                    j.at("epoch").get<int>()};
}

}  // namespace

json to_json(const RunState& s) {
  json records = json::array();
  for (const auto& r : s.records) records.push_back(to_json(r));
  return json{{"epoch", s.epoch},
              {"s0", s.s0},
              {"k", s.history.capacity()},
              {"history", to_json(s.history)},
              {"best", to_json(s.best)},
              {"records", std::move(records)},
              {"ta", to_json(s.ta)},
              {"base_ta", to_json(s.base_ta)},
              {"student", to_json(s.student)}};
}

RunState run_state_from_json(const json& j) {
  try {
    RunState s;
    s.epoch = j.at("epoch").get<int>();
    s.s0 = j.at("s0").get<std::string>();
    s.history = history_from_json(j.at("history"), j.at("k").get<std::size_t>());
    s.best = best_from_json(j.at("best"));
    for (const auto& r : j.at("records")) s.records.push_back(epoch_record_from_json(r));
    s.ta = ta_handle_from_json(j.at("ta"));
    s.base_ta = ta_handle_from_json(j.at("base_ta"));
    s.student = student_from_json(j.at("student"));
    // Checkpoints are written after step (2), so the student is frozen.
    if (s.epoch > 0) s.student.freeze();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("run state: ") + e.what());
  }
}

std::string serialize_state(const RunState& s) { return to_json(s).dump() + "\n"; }

RunState parse_state(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("run state: ") + e.what());
  }
  return run_state_from_json(j);
}

json to_json(const RunReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) epochs.push_back(to_json(e));
  json j{{"metric", r.metric},
         {"epochs", std::move(epochs)},
         {"best", to_json(r.best)},
         {"improvement_rates", r.improvement_rates()}};
  if (r.test) {
    j["test"] = {{"best_prefix", r.test->best_prefix}, {"empty_prefix", r.test->empty_prefix}};
  }
  return j;
}

RunReport run_report_from_json(const json& j) {
  try {
    RunReport r;
    r.metric = j.value("metric", std::string("accuracy"));
    for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_record_from_json(e));
    if (j.contains("best")) r.best = best_from_json(j.at("best"));
    if (j.contains("test")) {
      r.test = TestScores{j["test"].at("best_prefix").get<double>(),
                          j["test"].at("empty_prefix").get<double>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

}  // namespace gpta
