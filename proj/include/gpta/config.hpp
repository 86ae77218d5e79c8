#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpta/dataset.hpp"
#include "gpta/dialogue_gradient.hpp"
#include "gpta/history.hpp"
#include "gpta/metrics.hpp"
#include "gpta/student.hpp"
#include "gpta/ta.hpp"

namespace gpta {

inline constexpr int kDefaultEpochs = 5;

enum class Lineage { Continual, FromBase };

struct DataConfig {
  std::string train_path;
  std::string validation_path;  // empty: split train_path (or the synthetic set)
  std::string test_path;
  std::optional<SynthParams> synthetic;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 42;

  bool operator==(const DataConfig& o) const;
};

struct StudentConfig {
  double lr = kDefaultStudentLr;
  std::size_t dims = kDefaultDims;
  std::uint64_t hash_seed = 0;
  std::uint64_t shuffle_seed = 1;

  bool operator==(const StudentConfig&) const = default;
};

struct TaConfig {
  Backend backend = Backend::Remote;
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-3.5-turbo-0613";
  Lineage lineage = Lineage::Continual;
  int max_attempts = 3;
  int backoff_ms = 500;
  int poll_interval_ms = 5000;
  int finetune_timeout_s = 6 * 3600;
  int request_timeout_s = 120;
  int max_in_flight = 4;
  // Simulated backend.
  std::vector<PoolEntry> pool;
  std::uint64_t seed = 0;
  double temperature_scale = 1.0;

  bool operator==(const TaConfig&) const = default;
};

struct RunConfig {
  DataConfig data;
  MetricKind metric = MetricKind::Accuracy;
  int epochs = kDefaultEpochs;
  int k = static_cast<int>(kDefaultHistorySize);
  int w = kDefaultWindow;
  int l = kDefaultPrefixesPerRound;
  double temperature = kDefaultTemperature;
  int finetune_cap = kDefaultFinetuneCap;
  StudentConfig student;
  TaConfig ta;
  std::string instruction = kDefaultInstruction;
  DatasetDescription description;
  int exemplars = 0;
  std::uint64_t exemplar_seed = 0;

  bool operator==(const RunConfig&) const = default;
};

struct LoadedConfig {
  RunConfig config;
  std::vector<std::string> warnings;
};

// Strict parse: unknown keys and type mismatches raise ValidationError with
// the offending JSON path. Unspecified fields take the RunConfig defaults.
LoadedConfig config_from_json(const nlohmann::json& j);
LoadedConfig load_config(const std::string& path);

// Fully resolved form; config_from_json(to_json(c)).config == c.
nlohmann::json to_json(const RunConfig& c);

// Invariant checks shared by the loader and programmatic callers.
std::vector<std::string> validate(const RunConfig& c);

RemoteOptions remote_options(const TaConfig& ta);
TaHandle initial_ta_handle(const TaConfig& ta);

}  // namespace gpta
