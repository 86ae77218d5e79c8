#pragma once

// Local stand-in for an OpenAI-compatible endpoint: chat completions, file
// upload and fine-tune jobs. Records every request and can be told to fail.

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace gpta::testing {

struct RecordedRequest {
  std::string method;
  std::string path;
  std::string body;
  std::string authorization;
  // Multipart uploads only.
  std::string purpose;
  std::string file_content;
  std::string file_name;
  std::chrono::steady_clock::time_point at;
};

class MockServer {
 public:
  MockServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      if (take_failure(chat_failures_)) return fail(res);
      std::lock_guard lock(mu_);
      std::string content = chat_reply_;
      if (!scripted_replies_.empty()) {
        content = scripted_replies_.front();
        scripted_replies_.pop_front();
      }
      nlohmann::json reply = {
          {"id", "chatcmpl-1"},
          {"object", "chat.completion"},
          {"choices", {{{"index", 0},
                        {"message", {{"role", "assistant"}, {"content", content}}},
                        {"finish_reason", "stop"}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/files", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      if (take_failure(upload_failures_)) return fail(res);
      res.set_content(R"({"id":"file-abc","object":"file","purpose":"fine-tune"})",
                      "application/json");
    });
    server_.Post("/v1/fine_tuning/jobs", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      if (take_failure(job_failures_)) return fail(res);
      res.set_content(R"({"id":"ftjob-1","status":"queued"})", "application/json");
    });
    server_.Get(R"(/v1/fine_tuning/jobs/([^/]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  record(req);
                  std::lock_guard lock(mu_);
                  std::string status = final_status_;
                  if (!poll_statuses_.empty()) {
                    status = poll_statuses_.front();
                    poll_statuses_.pop_front();
                  }
                  nlohmann::json reply = {{"id", req.matches[1].str()}, {"status", status}};
                  if (status == "succeeded") {
                    reply["fine_tuned_model"] = tuned_model_;
                  } else {
                    reply["fine_tuned_model"] = nullptr;
                  }
                  res.set_content(reply.dump(), "application/json");
                });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  void set_chat_reply(std::string content) {
    std::lock_guard lock(mu_);
    chat_reply_ = std::move(content);
  }
  // Served in order before falling back to the fixed reply.
  void queue_chat_replies(std::vector<std::string> replies) {
    std::lock_guard lock(mu_);
    scripted_replies_.insert(scripted_replies_.end(), replies.begin(), replies.end());
  }
  // The next n calls of the given kind answer HTTP 503.
  void fail_chat(int n) { chat_failures_ = n; }
  void fail_upload(int n) { upload_failures_ = n; }
  void fail_job_create(int n) { job_failures_ = n; }
  // Statuses returned by successive polls; afterwards final_status.
  void set_poll_statuses(std::vector<std::string> statuses, std::string final_status,
                         std::string tuned_model = "ft:mock:gpta:1") {
    std::lock_guard lock(mu_);
    poll_statuses_.assign(statuses.begin(), statuses.end());
    final_status_ = std::move(final_status);
    tuned_model_ = std::move(tuned_model);
  }

  std::vector<RecordedRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::size_t count(const std::string& method, const std::string& path_start) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& r : requests_) {
      if (r.method == method && r.path.rfind(path_start, 0) == 0) ++n;
    }
    return n;
  }

 private:
  void record(const httplib::Request& req) {
    RecordedRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    r.authorization = req.get_header_value("Authorization");
    if (req.has_file("purpose")) r.purpose = req.get_file_value("purpose").content;
    if (req.has_file("file")) {
      const auto f = req.get_file_value("file");
      r.file_content = f.content;
      r.file_name = f.filename;
    }
    r.at = std::chrono::steady_clock::now();
    std::lock_guard lock(mu_);
    requests_.push_back(std::move(r));
  }

  static bool take_failure(std::atomic<int>& n) {
    int cur = n.load();
    while (cur > 0) {
      if (n.compare_exchange_weak(cur, cur - 1)) return true;
    }
    return false;
  }

  static void fail(httplib::Response& res) {
    res.status = 503;
    res.set_content(R"({"error":{"message":"overloaded"}})", "application/json");
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<RecordedRequest> requests_;
  std::string chat_reply_ = "Read carefully";
  std::deque<std::string> scripted_replies_;
  std::atomic<int> chat_failures_{0};
  std::atomic<int> upload_failures_{0};
  std::atomic<int> job_failures_{0};
  std::deque<std::string> poll_statuses_;
  std::string final_status_ = "succeeded";
  std::string tuned_model_ = "ft:mock:gpta:1";
};

}  // namespace gpta::testing
