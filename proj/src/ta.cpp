#include "gpta/ta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

#include "gpta/dialogue_gradient.hpp"
#include "gpta/error.hpp"
#include "gpta/rng.hpp"
#include "gpta/text.hpp"
#include "ta_remote.hpp"

namespace gpta {

using nlohmann::json;

const char* const kDefaultInstruction =
    "You write prefix prompts for a small text classifier. A prefix prompt is a short phrase "
    "that is prepended to every input text before the classifier reads it, both while it is "
    "trained and when it predicts. Good prefixes make the trained classifier more accurate.";

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw ValidationError("unknown chat role \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_system_message(const MetaPrompt& mp) {
  std::string out = mp.instruction;
  out += "\n\nDataset: ";
  out += mp.description.name;
  out += "\nTask: ";
  out += mp.description.task_summary;
  if (!mp.description.label_semantics.empty()) {
    out += "\nLabels:";
    for (std::size_t i = 0; i < mp.description.label_semantics.size(); ++i) {
      out += "\n" + std::to_string(i) + ": " + mp.description.label_semantics[i];
    }
  }
  if (!mp.exemplars.examples.empty()) {
    out += "\nExamples:";
    for (const auto& ex : mp.exemplars.examples) {
      out += "\n" + ex.text + " → " + std::to_string(ex.label);
    }
  }
  return out;
}

std::string format_history_line(const ScoredPrefix& sp) {
  return "PREFIX: " + sp.prefix + " | SCORE: " + text::fixed(sp.score, 4);
}

std::string render_history_message(std::span<const ScoredPrefix> entries, int count) {
  std::string out;
  if (entries.empty()) {
    out = "No prefix prompts have been scored yet.\n";
  } else {
    out = "Previous prefix prompts and their scores, from lowest to highest:\n";
    for (const auto& e : entries) {
      out += format_history_line(e);
      out += '\n';
    }
  }
  out += "\nPropose exactly " + std::to_string(count) + " new prefix " +
         (count == 1 ? "prompt" : "prompts") +
         " that would score higher than every prefix above. Write one prefix per line, at most " +
         std::to_string(kMaxPrefixWords) + " words each, with no numbering or commentary.";
  return out;
}

GenerationRequest render_generation_request(const MetaPrompt& mp, const PrefixHistory& history,
                                            int count, double temperature) {
  if (count < 1) throw ValidationError("prefix count must be >= 1");
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (text::trim(mp.instruction).empty()) throw ValidationError("instruction must be non-empty");
  std::span<const ScoredPrefix> entries(history.entries());
  if (entries.size() > kMaxRenderedHistory) entries = entries.last(kMaxRenderedHistory);

  GenerationRequest req;
  req.count = count;
  req.temperature = temperature;
  req.messages.push_back({Role::System, render_system_message(mp)});
  req.messages.push_back({Role::User, render_history_message(entries, count)});
  return req;
}

// ---------------------------------------------------------------------------
// Completion parsing

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::string strip_marker(std::string s) {
  for (;;) {
    s = text::trim(s);
    if (s.empty()) return s;
    if (starts_with(s, "•")) {  // bullet
      s.erase(0, 3);
      continue;
    }
    if ((s[0] == '-' || s[0] == '*' || s[0] == '+') && (s.size() == 1 || text::is_space(s[1]))) {
      s.erase(0, 1);
      continue;
    }
    std::size_t d = 0;
    while (d < s.size() && s[d] >= '0' && s[d] <= '9') ++d;
    if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')' || s[d] == ':') &&
        (d + 1 == s.size() || text::is_space(s[d + 1]))) {
      s.erase(0, d + 1);
      continue;
    }
    return s;
  }
}

std::string strip_quotes(std::string s) {
  static const std::string_view kPairs[][2] = {
      {"\"", "\""}, {"'", "'"}, {"`", "`"}, {"“", "”"}, {"‘", "’"}};
  bool changed = true;
  while (changed) {
    changed = false;
    s = text::trim(s);
    for (const auto& pair : kPairs) {
      const auto& open = pair[0];
      const auto& close = pair[1];
      if (s.size() >= open.size() + close.size() && starts_with(s, open) &&
          s.compare(s.size() - close.size(), close.size(), close) == 0) {
        s = s.substr(open.size(), s.size() - open.size() - close.size());
        changed = true;
      }
    }
  }
  return s;
}

}  // namespace

std::vector<std::string> parse_prefixes(std::string_view completion, int count) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= completion.size() && static_cast<int>(out.size()) < count) {
    std::size_t end = completion.find('\n', pos);
    if (end == std::string_view::npos) end = completion.size();
    std::string line = strip_marker(std::string(completion.substr(pos, end - pos)));
    pos = end + 1;

    // An echoed history line: keep only the prefix part.
    if (starts_with(line, "PREFIX:")) {
      line.erase(0, 7);
      if (auto bar = line.find(" | SCORE:"); bar != std::string::npos) line.erase(bar);
    }
    line = strip_quotes(line);
    auto words = text::split_whitespace(line);
    if (words.size() > static_cast<std::size_t>(kMaxPrefixWords)) words.resize(kMaxPrefixWords);
    std::string prefix = text::join(words, " ");
    if (prefix.empty()) continue;
    if (seen.insert(prefix).second) out.push_back(std::move(prefix));
  }
  if (out.empty()) throw ProtocolError("completion contained no usable prefix");
  return out;
}

// ---------------------------------------------------------------------------
// Simulated backend

void validate(const SimState& s) {
  if (s.pool.empty()) throw ValidationError("simulated TA pool must be non-empty");
  if (!(s.temperature_scale > 0.0) || !std::isfinite(s.temperature_scale)) {
    throw ValidationError("temperature_scale must be positive");
  }
  for (const auto& e : s.pool) {
    if (!std::isfinite(e.weight)) throw ValidationError("pool weights must be finite");
  }
}

namespace {

// Log-weights of the sampling distribution; an infinitely cold temperature
// is handled by the caller.
std::vector<double> sim_logits(const SimState& s, double temperature) {
  std::vector<double> out;
  out.reserve(s.pool.size());
  for (const auto& e : s.pool) out.push_back(e.weight / (s.temperature_scale * temperature));
  return out;
}

std::vector<std::string> sim_generate(SimState& s, int count, double temperature) {
  validate(s);
  Rng rng(splitmix64(s.rng_seed ^ splitmix64(s.calls)));
  ++s.calls;

  std::vector<std::size_t> remaining(s.pool.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  const auto draws = std::min(static_cast<std::size_t>(count), remaining.size());
  const bool greedy = temperature == 0.0;
  const auto logits = greedy ? std::vector<double>{} : sim_logits(s, temperature);

  std::vector<std::string> out;
  for (std::size_t d = 0; d < draws; ++d) {
    std::size_t pick = 0;
    if (greedy) {
      for (std::size_t r = 1; r < remaining.size(); ++r) {
        if (s.pool[remaining[r]].weight > s.pool[remaining[pick]].weight) pick = r;
      }
    } else {
      double mx = -INFINITY;
      for (std::size_t idx : remaining) mx = std::max(mx, logits[idx]);
      std::vector<double> mass(remaining.size());
      double total = 0.0;
      for (std::size_t r = 0; r < remaining.size(); ++r) {
        mass[r] = std::exp(logits[remaining[r]] - mx);
        total += mass[r];
      }
      double u = rng.uniform() * total;
      pick = remaining.size() - 1;
      for (std::size_t r = 0; r < remaining.size(); ++r) {
        if (u < mass[r]) {
          pick = r;
          break;
        }
        u -= mass[r];
      }
    }
    out.push_back(s.pool[remaining[pick]].prefix);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

SimState sim_finetune(SimState s, const std::vector<FinetuneExample>& examples) {
  for (const auto& ex : examples) {
    const std::string& target = ex.messages.back().content;
    auto it = std::find_if(s.pool.begin(), s.pool.end(),
                           [&](const PoolEntry& e) { return e.prefix == target; });
    if (it == s.pool.end()) {
      s.pool.push_back({target, 1.0});
    } else {
      it->weight += 1.0;
    }
  }
  return s;
}

}  // namespace

double sim_probability_mass(const SimState& s, std::span<const std::string> prefixes,
                            double temperature) {
  validate(s);
  std::unordered_set<std::string> wanted(prefixes.begin(), prefixes.end());
  if (temperature == 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.pool.size(); ++i) {
      if (s.pool[i].weight > s.pool[best].weight) best = i;
    }
    return wanted.count(s.pool[best].prefix) ? 1.0 : 0.0;
  }
  const auto logits = sim_logits(s, temperature);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  double hit = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double m = std::exp(logits[i] - mx);
    total += m;
    if (wanted.count(s.pool[i].prefix)) hit += m;
  }
  return hit / total;
}

// ---------------------------------------------------------------------------
// Handles

TaHandle TaHandle::remote(std::string model_id) {
  TaHandle h;
  h.backend = Backend::Remote;
  h.model_id = std::move(model_id);
  return h;
}

TaHandle TaHandle::simulated(SimState state) {
  validate(state);
  TaHandle h;
  h.backend = Backend::Simulated;
  h.model_id = "simulated";
  h.sim = std::move(state);
  return h;
}

json to_json(const TaHandle& h) {
  json j = json::object();
  j["backend"] = h.backend == Backend::Remote ? "remote" : "simulated";
  j["model_id"] = h.model_id;
  j["generation"] = h.generation;
  if (h.sim) {
    json pool = json::array();
    for (const auto& e : h.sim->pool) pool.push_back({{"prefix", e.prefix}, {"weight", e.weight}});
    j["sim"] = {{"pool", std::move(pool)},
                {"rng_seed", h.sim->rng_seed},
                {"temperature_scale", h.sim->temperature_scale},
                {"calls", h.sim->calls}};
  }
  return j;
}

TaHandle ta_handle_from_json(const json& j) {
  try {
    TaHandle h;
    const auto backend = j.at("backend").get<std::string>();
    if (backend == "remote") {
      h.backend = Backend::Remote;
    } else if (backend == "simulated") {
      h.backend = Backend::Simulated;
    } else {
      throw ValidationError("unknown TA backend \"" + backend + "\"");
    }
    h.model_id = j.at("model_id").get<std::string>();
    h.generation = j.at("generation").get<int>();
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      SimState state;
      for (const auto& e : s.at("pool")) {
        state.pool.push_back({e.at("prefix").get<std::string>(), e.at("weight").get<double>()});
      }
      state.rng_seed = s.at("rng_seed").get<std::uint64_t>();
      state.temperature_scale = s.at("temperature_scale").get<double>();
      state.calls = s.at("calls").get<std::uint64_t>();
      validate(state);
      h.sim = std::move(state);
    }
    if (h.backend == Backend::Simulated && !h.sim) {
      throw ValidationError("simulated TA handle without state");
    }
    return h;
  } catch (const json::exception& e) {
    throw ParseError(std::string("TA handle: ") + e.what());
  }
}

std::string api_key_from_env() {
  const char* key = std::getenv("GPTA_API_KEY");
  return key ? std::string(key) : std::string();
}

// ---------------------------------------------------------------------------
// Client

TaClient::TaClient(RemoteOptions options)
    : options_(std::move(options)),
      in_flight_(std::clamp<std::ptrdiff_t>(options_.max_in_flight, 1, kMaxInFlight)) {
  if (options_.max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
}

std::vector<std::string> TaClient::generate(TaHandle& handle, const GenerationRequest& request) {
  if (request.count < 1) throw ValidationError("prefix count must be >= 1");
  if (handle.backend == Backend::Simulated) {
    if (!handle.sim) throw ValidationError("simulated TA handle without state");
    std::lock_guard lock(sim_mutex_);
    return sim_generate(*handle.sim, request.count, request.temperature);
  }
  std::shared_lock lineage(lineage_);
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<kMaxInFlight>& s;
    ~Release() { s.release(); }
  } release{in_flight_};
  return remote::generate(options_, handle.model_id, request);
}

TaHandle TaClient::finetune(const TaHandle& handle, std::string_view training_file) {
  const auto examples = parse_finetune_jsonl(training_file);
  if (handle.backend == Backend::Simulated) {
    if (!handle.sim) throw ValidationError("simulated TA handle without state");
    std::lock_guard lock(sim_mutex_);
    TaHandle next = handle;
    next.sim = sim_finetune(*handle.sim, examples);
    next.generation = handle.generation + 1;
    return next;
  }
  std::unique_lock lineage(lineage_);
  TaHandle next = handle;
  next.model_id = remote::finetune(options_, handle.model_id, training_file);
  next.generation = handle.generation + 1;
  return next;
}

}  // namespace gpta
