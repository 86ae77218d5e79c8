#include "gpta/config.hpp"

#include <cmath>
#include <set>

#include "gpta/error.hpp"
#include "gpta/text.hpp"

namespace gpta {

using nlohmann::json;

bool DataConfig::operator==(const DataConfig& o) const {
  auto synth_eq = [](const std::optional<SynthParams>& a, const std::optional<SynthParams>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->class_count == b->class_count && a->per_class == b->per_class &&
           a->vocab_size == b->vocab_size && a->noise == b->noise && a->seed == b->seed;
  };
  return train_path == o.train_path && validation_path == o.validation_path &&
         test_path == o.test_path && synth_eq(synthetic, o.synthetic) && split == o.split &&
         split_seed == o.split_seed;
}

namespace {

// Typed access into a JSON object that remembers which keys were consumed
// so leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(where() + ": expected an object");
  }

  std::string where(const std::string& key = "") const {
    const std::string p = key.empty() ? path_ : path_ + "/" + key;
    return p.empty() ? "/" : p;
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <typename T>
  void integer(const std::string& key, T& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ValidationError(where(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v->is_number_unsigned()) {
          out = v->get<T>();
        } else {
          if (v->get<std::int64_t>() < 0) {
            throw ValidationError(where(key) + ": expected a non-negative integer");
          }
          out = static_cast<T>(v->get<std::int64_t>());
        }
      } else {
        out = v->get<T>();
      }
    }
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ValidationError(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ValidationError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) throw ValidationError(where(key) + ": expected an array of strings");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) {
          throw ValidationError(where(key) + "/" + std::to_string(i) + ": expected a string");
        }
        out.push_back((*v)[i].get<std::string>());
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(where(it.key()) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_synth(Reader& parent, SynthParams& s) {
  const json* v = parent.get("synthetic");
  if (!v) return;
  Reader r(*v, parent.where("synthetic"));
  r.integer("classes", s.class_count);
  r.integer("per_class", s.per_class);
  r.integer("vocab_size", s.vocab_size);
  r.number("noise", s.noise);
  r.integer("seed", s.seed);
  r.finish();
}

void read_student(Reader& parent, StudentConfig& s) {
  const json* v = parent.get("student");
  if (!v) return;
  Reader r(*v, parent.where("student"));
  r.number("lr", s.lr);
  r.integer("dims", s.dims);
  r.integer("hash_seed", s.hash_seed);
  r.integer("shuffle_seed", s.shuffle_seed);
  r.finish();
}

void read_ta(Reader& parent, TaConfig& t) {
  const json* v = parent.get("ta");
  if (!v) return;
  Reader r(*v, parent.where("ta"));
  std::string backend = t.backend == Backend::Remote ? "remote" : "simulated";
  r.string("backend", backend);
  if (backend == "remote") {
    t.backend = Backend::Remote;
  } else if (backend == "simulated") {
    t.backend = Backend::Simulated;
  } else {
    throw ValidationError(r.where("backend") + ": expected \"remote\" or \"simulated\"");
  }
  r.string("base_url", t.base_url);
  r.string("model", t.model);
  std::string lineage = t.lineage == Lineage::Continual ? "continual" : "from_base";
  r.string("lineage", lineage);
  if (lineage == "continual") {
    t.lineage = Lineage::Continual;
  } else if (lineage == "from_base") {
    t.lineage = Lineage::FromBase;
  } else {
    throw ValidationError(r.where("lineage") + ": expected \"continual\" or \"from_base\"");
  }
  r.integer("max_attempts", t.max_attempts);
  r.integer("backoff_ms", t.backoff_ms);
  r.integer("poll_interval_ms", t.poll_interval_ms);
  r.integer("finetune_timeout_s", t.finetune_timeout_s);
  r.integer("request_timeout_s", t.request_timeout_s);
  r.integer("max_in_flight", t.max_in_flight);
  if (const json* pool = r.get("pool")) {
    if (!pool->is_array()) throw ValidationError(r.where("pool") + ": expected an array");
    t.pool.clear();
    for (std::size_t i = 0; i < pool->size(); ++i) {
      const json& e = (*pool)[i];
      const std::string at = r.where("pool") + "/" + std::to_string(i);
      if (e.is_string()) {
        t.pool.push_back({e.get<std::string>(), 0.0});
        continue;
      }
      Reader er(e, at);
      PoolEntry entry;
      er.string("prefix", entry.prefix);
      er.number("weight", entry.weight);
      er.finish();
      t.pool.push_back(std::move(entry));
    }
  }
  r.integer("seed", t.seed);
  r.number("temperature_scale", t.temperature_scale);
  r.finish();
}

void read_description(Reader& parent, DatasetDescription& d) {
  const json* v = parent.get("description");
  if (!v) return;
  Reader r(*v, parent.where("description"));
  r.string("name", d.name);
  r.string("task_summary", d.task_summary);
  r.strings("label_semantics", d.label_semantics);
  r.finish();
}

}  // namespace

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> warnings;
  const auto& d = c.data;
  if (d.synthetic && !d.train_path.empty()) {
    throw ValidationError("give either train_data or synthetic, not both");
  }
  if (!d.synthetic && d.train_path.empty()) {
    throw ValidationError("missing dataset: set train_data or synthetic");
  }
  if (!d.test_path.empty() && d.validation_path.empty()) {
    throw ValidationError("test_data requires validation_data");
  }
  if (c.epochs < 1) throw ValidationError("epochs >= 1 required");
  if (c.w < 1) throw ValidationError("w >= 1 required");
  if (c.k < 2) throw ValidationError("k >= 2 required");
  if (c.w >= c.k) throw ValidationError("w < k required");
  if (c.l < 1) throw ValidationError("l >= 1 required");
  if (!(c.temperature >= 0.0) || !std::isfinite(c.temperature)) {
    throw ValidationError("temperature >= 0 required");
  }
  if (c.finetune_cap < 1) throw ValidationError("finetune_cap >= 1 required");
  if (c.finetune_cap > kFinetuneDegradationThreshold) {
    warnings.push_back("finetune_cap " + std::to_string(c.finetune_cap) +
                       " exceeds 150; TA quality degrades beyond 150 data points");
  }
  if (!(c.student.lr >= 0.0) || !std::isfinite(c.student.lr)) {
    throw ValidationError("student lr >= 0 required");
  }
  if (c.student.dims < 2 || (c.student.dims & (c.student.dims - 1)) != 0) {
    throw ValidationError("student dims must be a power of two >= 2");
  }
  if (c.exemplars < 0 || c.exemplars > kMaxExemplars) {
    throw ValidationError("exemplars must be in [0, 8]");
  }
  if (text::trim(c.instruction).empty()) throw ValidationError("instruction must be non-empty");
  const auto& t = c.ta;
  if (t.max_attempts < 1) throw ValidationError("ta.max_attempts >= 1 required");
  if (t.backoff_ms < 0 || t.poll_interval_ms < 0) throw ValidationError("ta delays must be >= 0");
  if (t.finetune_timeout_s < 1 || t.request_timeout_s < 1) {
    throw ValidationError("ta timeouts must be >= 1 s");
  }
  if (t.max_in_flight < 1) throw ValidationError("ta.max_in_flight >= 1 required");
  if (t.backend == Backend::Simulated) {
    SimState s{t.pool, t.seed, t.temperature_scale, 0};
    validate(s);
  } else if (t.model.empty()) {
    throw ValidationError("ta.model must be set for the remote backend");
  }
  return warnings;
}

LoadedConfig config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "");
  r.string("train_data", c.data.train_path);
  r.string("validation_data", c.data.validation_path);
  r.string("test_data", c.data.test_path);
  if (r.get("synthetic")) {
    c.data.synthetic = SynthParams{};
    read_synth(r, *c.data.synthetic);
  }
  if (const json* s = r.get("split")) {
    if (!s->is_array() || s->size() != 3 || !(*s)[0].is_number() || !(*s)[1].is_number() ||
        !(*s)[2].is_number()) {
      throw ValidationError(r.where("split") + ": expected three numbers");
    }
    for (std::size_t i = 0; i < 3; ++i) c.data.split[i] = (*s)[i].get<double>();
  }
  r.integer("split_seed", c.data.split_seed);
  std::string metric = to_string(c.metric);
  r.string("metric", metric);
  try {
    c.metric = parse_metric_kind(metric);
  } catch (const ValidationError& e) {
    throw ValidationError(r.where("metric") + ": " + e.what());
  }
  r.integer("epochs", c.epochs);
  r.integer("k", c.k);
  r.integer("w", c.w);
  r.integer("l", c.l);
  r.number("temperature", c.temperature);
  r.integer("finetune_cap", c.finetune_cap);
  read_student(r, c.student);
  read_ta(r, c.ta);
  r.string("instruction", c.instruction);
  read_description(r, c.description);
  r.integer("exemplars", c.exemplars);
  r.integer("exemplar_seed", c.exemplar_seed);
  r.finish();

  LoadedConfig out{std::move(c), {}};
  out.warnings = validate(out.config);
  return out;
}

LoadedConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const RunConfig& c) {
  json j = json::object();
  j["train_data"] = c.data.train_path;
  j["validation_data"] = c.data.validation_path;
  j["test_data"] = c.data.test_path;
  if (c.data.synthetic) {
    const auto& s = *c.data.synthetic;
    j["synthetic"] = {{"classes", s.class_count},
                      {"per_class", s.per_class},
                      {"vocab_size", s.vocab_size},
                      {"noise", s.noise},
                      {"seed", s.seed}};
  }
  j["split"] = c.data.split;
  j["split_seed"] = c.data.split_seed;
  j["metric"] = to_string(c.metric);
  j["epochs"] = c.epochs;
  j["k"] = c.k;
  j["w"] = c.w;
  j["l"] = c.l;
  j["temperature"] = c.temperature;
  j["finetune_cap"] = c.finetune_cap;
  j["student"] = {{"lr", c.student.lr},
                  {"dims", c.student.dims},
                  {"hash_seed", c.student.hash_seed},
                  {"shuffle_seed", c.student.shuffle_seed}};
  json pool = json::array();
  for (const auto& e : c.ta.pool) pool.push_back({{"prefix", e.prefix}, {"weight", e.weight}});
  j["ta"] = {{"backend", c.ta.backend == Backend::Remote ? "remote" : "simulated"},
             {"base_url", c.ta.base_url},
             {"model", c.ta.model},
             {"lineage", c.ta.lineage == Lineage::Continual ? "continual" : "from_base"},
             {"max_attempts", c.ta.max_attempts},
             {"backoff_ms", c.ta.backoff_ms},
             {"poll_interval_ms", c.ta.poll_interval_ms},
             {"finetune_timeout_s", c.ta.finetune_timeout_s},
             {"request_timeout_s", c.ta.request_timeout_s},
             {"max_in_flight", c.ta.max_in_flight},
             {"pool", std::move(pool)},
             {"seed", c.ta.seed},
             {"temperature_scale", c.ta.temperature_scale}};
  j["instruction"] = c.instruction;
  j["description"] = {{"name", c.description.name},
                      {"task_summary", c.description.task_summary},
                      {"label_semantics", c.description.label_semantics}};
  j["exemplars"] = c.exemplars;
  j["exemplar_seed"] = c.exemplar_seed;
  return j;
}

RemoteOptions remote_options(const TaConfig& ta) {
  RemoteOptions o;
  o.base_url = ta.base_url;
  o.api_key = api_key_from_env();
  o.max_attempts = ta.max_attempts;
  o.backoff_initial = std::chrono::milliseconds(ta.backoff_ms);
  o.poll_interval = std::chrono::milliseconds(ta.poll_interval_ms);
  o.finetune_timeout = std::chrono::seconds(ta.finetune_timeout_s);
  o.request_timeout = std::chrono::seconds(ta.request_timeout_s);
  o.max_in_flight = ta.max_in_flight;
  return o;
}

TaHandle initial_ta_handle(const TaConfig& ta) {
  if (ta.backend == Backend::Remote) return TaHandle::remote(ta.model);
  return TaHandle::simulated(SimState{ta.pool, ta.seed, ta.temperature_scale, 0});
}

}  // namespace gpta
