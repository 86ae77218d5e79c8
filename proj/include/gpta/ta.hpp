#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpta/dataset.hpp"
#include "gpta/prefix_history.hpp"

namespace gpta {

enum class Role { System, User, Assistant };

std::string to_string(Role role);
Role parse_role(std::string_view name);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// Meta-prompt: instruction p, description d and exemplars E.
struct MetaPrompt {
  std::string instruction;
  DatasetDescription description;
  ExemplarSet exemplars;

  bool operator==(const MetaPrompt&) const = default;
};

// Shipped default for the instruction p; replaceable through the run config.
extern const char* const kDefaultInstruction;

inline constexpr int kMaxPrefixWords = 10;
// Requests show at most this many history lines (the best ones).
inline constexpr std::size_t kMaxRenderedHistory = 60;
inline constexpr double kDefaultTemperature = 1.0;

// System message: p, d, and E when non-empty ("INPUT → LABEL" lines). Shared
// by generation requests and fine-tune examples.
std::string render_system_message(const MetaPrompt& mp);

// User message: one "PREFIX: <s> | SCORE: <m>" line per entry, in the given
// (ascending) order, followed by the request for `count` new prefixes.
std::string render_history_message(std::span<const ScoredPrefix> entries, int count);

std::string format_history_line(const ScoredPrefix& sp);

struct GenerationRequest {
  std::vector<ChatMessage> messages;
  int count = 1;
  double temperature = kDefaultTemperature;
};

GenerationRequest render_generation_request(const MetaPrompt& mp, const PrefixHistory& history,
                                            int count, double temperature);

// Splits a completion into prefixes: strips list markers, quotes and
// whitespace, truncates to kMaxPrefixWords words, de-duplicates (first wins)
// and keeps at most `count`. Throws ProtocolError when nothing is usable.
std::vector<std::string> parse_prefixes(std::string_view completion, int count);

struct PoolEntry {
  std::string prefix;
  double weight = 0.0;

  bool operator==(const PoolEntry&) const = default;
};

// Deterministic stand-in for the TA model.
struct SimState {
  std::vector<PoolEntry> pool;
  std::uint64_t rng_seed = 0;
  double temperature_scale = 1.0;
  // Number of generate calls served; each call draws from a generator
  // derived from (rng_seed, calls).
  std::uint64_t calls = 0;

  bool operator==(const SimState&) const = default;
};

void validate(const SimState& s);

// Softmax probability that a single draw at `temperature` returns one of
// `prefixes`.
double sim_probability_mass(const SimState& s, std::span<const std::string> prefixes,
                            double temperature);

enum class Backend { Remote, Simulated };

struct TaHandle {
  Backend backend = Backend::Simulated;
  // Remote: provider model id. Simulated: "simulated".
  std::string model_id;
  // Number of fine-tunes applied along this lineage.
  int generation = 0;
  std::optional<SimState> sim;

  static TaHandle remote(std::string model_id);
  static TaHandle simulated(SimState state);
  bool operator==(const TaHandle&) const = default;
};

nlohmann::json to_json(const TaHandle& h);
TaHandle ta_handle_from_json(const nlohmann::json& j);

struct RemoteOptions {
  std::string base_url = "http://127.0.0.1:8000";
  // Sent as "Authorization: Bearer <key>" when non-empty.
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds poll_interval{5000};
  std::chrono::milliseconds finetune_timeout{std::chrono::hours(6)};
  std::chrono::milliseconds request_timeout{std::chrono::seconds(120)};
  int max_in_flight = 4;
};

// API key from the GPTA_API_KEY environment variable, or empty.
std::string api_key_from_env();

// Executes TA operations. Remote generate calls may overlap up to
// max_in_flight; finetune excludes all generate calls. Simulated calls are
// serialized.
class TaClient {
 public:
  explicit TaClient(RemoteOptions options = {});
  TaClient(const TaClient&) = delete;
  TaClient& operator=(const TaClient&) = delete;

  // Simulated handles advance their generator state. Remote handles are
  // never modified.
  std::vector<std::string> generate(TaHandle& handle, const GenerationRequest& request);

  // Returns the fine-tuned handle (generation + 1). The input handle is left
  // untouched on every path, including errors.
  TaHandle finetune(const TaHandle& handle, std::string_view training_file);

  const RemoteOptions& options() const noexcept { return options_; }

 private:
  static constexpr std::ptrdiff_t kMaxInFlight = 256;

  RemoteOptions options_;
  std::counting_semaphore<kMaxInFlight> in_flight_;
  std::shared_mutex lineage_;
  std::mutex sim_mutex_;
};

}  // namespace gpta
