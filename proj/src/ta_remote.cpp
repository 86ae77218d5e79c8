#include "ta_remote.hpp"

#include <chrono>
#include <optional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gpta/error.hpp"
#include "gpta/log.hpp"

namespace gpta::remote {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Internal marker for failures worth another attempt.
struct Transient {
  std::string message;
  bool transport = true;
};

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing '/'
};

Endpoint split_base_url(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  if (scheme == std::string::npos) throw ValidationError("base_url needs a scheme: " + base_url);
  const auto slash = base_url.find('/', scheme + 3);
  Endpoint ep;
  if (slash == std::string::npos) {
    ep.origin = base_url;
  } else {
    ep.origin = base_url.substr(0, slash);
    ep.path = base_url.substr(slash);
    while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  }
  return ep;
}

class Http {
 public:
  explicit Http(const RemoteOptions& options)
      : options_(options), endpoint_(split_base_url(options.base_url)), client_(endpoint_.origin) {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.request_timeout);
    client_.set_connection_timeout(std::max<std::int64_t>(1, secs.count()), 0);
    client_.set_read_timeout(std::max<std::int64_t>(1, secs.count()), 0);
    client_.set_write_timeout(std::max<std::int64_t>(1, secs.count()), 0);
    if (!options.api_key.empty()) {
      headers_.emplace("Authorization", "Bearer " + options.api_key);
    }
  }

  // Each call returns the parsed JSON body or throws Transient/ProtocolError.
  json post_json(const std::string& path, const std::string& body) {
    return check(client_.Post(endpoint_.path + path, headers_, body, "application/json"), path);
  }

  json post_multipart(const std::string& path, const httplib::MultipartFormDataItems& items) {
    return check(client_.Post(endpoint_.path + path, headers_, items), path);
  }

  json get(const std::string& path) { return check(client_.Get(endpoint_.path + path, headers_), path); }

 private:
  json check(const httplib::Result& res, const std::string& path) {
    if (!res) throw Transient{path + ": " + httplib::to_string(res.error())};
    const int status = res->status;
    if (status == 429 || status >= 500) {
      throw Transient{path + ": HTTP " + std::to_string(status)};
    }
    if (status < 200 || status >= 300) {
      throw ProtocolError(path + ": HTTP " + std::to_string(status) + ": " +
                          res->body.substr(0, 200));
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error&) {
      throw Transient{path + ": response is not JSON", false};
    }
  }

  const RemoteOptions& options_;
  Endpoint endpoint_;
  httplib::Client client_;
  httplib::Headers headers_;
};

// Runs `attempt` up to max_attempts times with exponential backoff between
// attempts. When `retry_protocol` is set, ProtocolError is retried as well.
template <typename F>
auto with_retries(const RemoteOptions& options, const std::string& what, bool retry_protocol,
                  F&& attempt) -> decltype(attempt()) {
  auto delay = options.backoff_initial;
  std::string last;
  bool last_was_transport = true;
  for (int i = 1; i <= options.max_attempts; ++i) {
    try {
      return attempt();
    } catch (const Transient& t) {
      last = t.message;
      last_was_transport = t.transport;
    } catch (const ProtocolError& e) {
      if (!retry_protocol) throw;
      last = e.what();
      last_was_transport = false;
    }
    if (i < options.max_attempts) {
      log::warn(what + " attempt " + std::to_string(i) + " failed (" + last + "); retrying");
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  const std::string msg =
      what + " failed after " + std::to_string(options.max_attempts) + " attempts: " + last;
  if (last_was_transport) throw TransportError(msg);
  throw ProtocolError(msg);
}

std::string content_of(const json& reply) {
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("chat reply content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed chat reply: ") + e.what());
  }
}

std::string string_field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw ProtocolError(what + ": missing string field \"" + key + "\"");
  }
  return j[key].get<std::string>();
}

}  // namespace

std::vector<std::string> generate(const RemoteOptions& options, const std::string& model,
                                  const GenerationRequest& request) {
  ordered_json body = ordered_json::object();
  body["model"] = model;
  body["temperature"] = request.temperature;
  body["messages"] = ordered_json::array();
  for (const auto& m : request.messages) {
    ordered_json msg = ordered_json::object();
    msg["role"] = to_string(m.role);
    msg["content"] = m.content;
    body["messages"].push_back(std::move(msg));
  }
  const std::string payload = body.dump();

  Http http(options);
  return with_retries(options, "chat completion", true, [&] {
    const json reply = http.post_json("/v1/chat/completions", payload);
    return parse_prefixes(content_of(reply), request.count);
  });
}

std::string finetune(const RemoteOptions& options, const std::string& model,
                     std::string_view training_file) {
  Http http(options);

  const httplib::MultipartFormDataItems items = {
      {"purpose", "fine-tune", "", ""},
      {"file", std::string(training_file), "dialogue_gradients.jsonl", "application/jsonl"},
  };
  const json file = with_retries(options, "file upload", false,
                                 [&] { return http.post_multipart("/v1/files", items); });
  const std::string file_id = string_field(file, "id", "file upload");

  ordered_json job_req = ordered_json::object();
  job_req["model"] = model;
  job_req["training_file"] = file_id;
  const std::string job_body = job_req.dump();
  const json job = with_retries(options, "fine-tune job creation", false,
                                [&] { return http.post_json("/v1/fine_tuning/jobs", job_body); });
  const std::string job_id = string_field(job, "id", "fine-tune job creation");
  log::info("fine-tune job " + job_id + " created for " + model);

  const auto deadline = std::chrono::steady_clock::now() + options.finetune_timeout;
  for (;;) {
    const json state = with_retries(options, "fine-tune job poll", false,
                                    [&] { return http.get("/v1/fine_tuning/jobs/" + job_id); });
    const std::string status = string_field(state, "status", "fine-tune job poll");
    if (status == "succeeded") {
      const auto tuned = state.contains("fine_tuned_model") && state["fine_tuned_model"].is_string()
                             ? state["fine_tuned_model"].get<std::string>()
                             : std::string();
      if (tuned.empty()) throw FinetuneError(status, "job " + job_id + " succeeded without a model");
      return tuned;
    }
    if (status == "failed" || status == "cancelled") {
      std::string detail;
      if (state.contains("error") && !state["error"].is_null()) detail = ": " + state["error"].dump();
      throw FinetuneError(status, "fine-tune job " + job_id + " " + status + detail);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw FinetuneError("timeout", "fine-tune job " + job_id + " did not finish in time");
    }
    std::this_thread::sleep_for(options.poll_interval);
  }
}

}  // namespace gpta::remote
