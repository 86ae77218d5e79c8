#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpta/config.hpp"
#include "gpta/dataset.hpp"
#include "gpta/history.hpp"
#include "gpta/student.hpp"
#include "gpta/ta.hpp"

namespace gpta {

struct EpochRecord {
  int epoch = 0;
  std::string train_prefix;
  double train_loss = 0.0;
  std::string best_prefix;
  double val_best = 0.0;   // best history entry on the validation split
  double val_empty = 0.0;  // empty prefix, same frozen checkpoint
  double improvement_rate = 0.0;
  int rounds = 0;
  int candidates = 0;
  int improvements = 0;
  int finetune_examples = 0;
  bool finetune_ok = false;
  int ta_generation = 0;
  std::string warning;

  bool operator==(const EpochRecord&) const = default;
};

struct BestRecord {
  std::string prefix;
  double score = 0.0;
  int epoch = 0;

  bool operator==(const BestRecord&) const = default;
};

struct RunState {
  int epoch = 0;  // number of completed epochs
  StudentParams student;
  TaHandle ta;
  // Starting point of every fine-tune in FromBase lineage.
  TaHandle base_ta;
  // First TA prefix; trains the student in epoch 0.
  std::string s0;
  PrefixHistory history;
  std::optional<BestRecord> best;
  std::vector<EpochRecord> records;

  bool operator==(const RunState&) const = default;
};

// Inputs derived once per run from the config.
struct RunData {
  Dataset train;
  Dataset validation;
  std::optional<Dataset> test;
  MetaPrompt meta;
};

RunData prepare_data(const RunConfig& cfg);
RunState initial_state(const RunConfig& cfg, const RunData& data);

struct EpochOutcome {
  RunState state;
  std::vector<RoundStats> rounds;
  std::string finetune_file;  // bytes sent to the TA; empty if nothing was sent
};

// One four-step epoch: train the student on the current prefix, freeze it and
// collect k scored prefixes on the validation split, turn the history into
// dialogue gradients, and fine-tune the TA. A failed fine-tune leaves the TA
// handle unchanged and is recorded as a warning.
EpochOutcome run_epoch(RunState state, const RunConfig& cfg, const RunData& data,
                       TaClient& client);

// Fraction of generated candidates that beat the pre-round maximum.
double improvement_rate(std::span<const RoundStats> rounds);

struct TestScores {
  double best_prefix = 0.0;
  double empty_prefix = 0.0;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  std::optional<BestRecord> best;
  std::optional<TestScores> test;
  std::string metric;

  std::vector<double> improvement_rates() const;
};

struct RunOptions {
  std::string out_dir = "run";
  std::string resume_path;  // state_epoch{N}.json to continue from
};

// Runs the remaining epochs, writing config.json, state_epoch{N}.json,
// gradients_epoch{N}.jsonl, report.json, metrics.csv and best_student.json
// into out_dir. N counts from 0.
RunReport run(const RunConfig& cfg, const RunOptions& options);
RunReport run(const RunConfig& cfg, const RunOptions& options, TaClient& client);

nlohmann::json to_json(const RunState& s);
RunState run_state_from_json(const nlohmann::json& j);
std::string serialize_state(const RunState& s);
RunState parse_state(std::string_view bytes);

nlohmann::json to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);

}  // namespace gpta
