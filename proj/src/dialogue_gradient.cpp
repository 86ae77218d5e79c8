#include "gpta/dialogue_gradient.hpp"

#include <nlohmann/json.hpp>

#include "gpta/error.hpp"
#include "gpta/log.hpp"

namespace gpta {

using ordered_json = nlohmann::ordered_json;

std::vector<DialogueGradient> build_windows(const PrefixHistory& h, int w) {
  if (w < 1) throw ValidationError("window size must be >= 1");
  const auto width = static_cast<std::size_t>(w);
  if (h.size() <= width) {
    throw ValidationError("history of size " + std::to_string(h.size()) +
                          " is too short for window " + std::to_string(w));
  }
  const auto& e = h.entries();
  std::vector<DialogueGradient> out;
  out.reserve(e.size() - width);
  for (std::size_t i = 0; i + width < e.size(); ++i) {
    DialogueGradient g;
    g.window.assign(e.begin() + static_cast<std::ptrdiff_t>(i),
                    e.begin() + static_cast<std::ptrdiff_t>(i + width));
    g.target = e[i + width].prefix;
    g.target_score = e[i + width].score;
    g.index = i;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<FinetuneExample> enrich(std::span<const DialogueGradient> gradients,
                                    const MetaPrompt& mp) {
  std::vector<FinetuneExample> out;
  if (gradients.empty()) return out;
  const std::string system = render_system_message(mp);
  for (const auto& g : gradients) {
    if (g.target.empty()) continue;
    FinetuneExample ex;
    ex.messages.push_back({Role::System, system});
    ex.messages.push_back({Role::User, render_history_message(g.window, 1)});
    ex.messages.push_back({Role::Assistant, g.target});
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<FinetuneExample> cap(std::vector<FinetuneExample> examples, int max_n) {
  if (max_n < 1) throw ValidationError("fine-tune cap must be >= 1");
  if (max_n > kFinetuneDegradationThreshold) {
    log::warn("fine-tune cap " + std::to_string(max_n) + " exceeds " +
              std::to_string(kFinetuneDegradationThreshold) +
              " examples; TA quality degrades beyond 150 data points");
  }
  const auto n = static_cast<std::size_t>(max_n);
  if (examples.size() > n) {
    examples.erase(examples.begin(), examples.end() - static_cast<std::ptrdiff_t>(n));
  }
  return examples;
}

std::string serialize_jsonl(std::span<const FinetuneExample> examples) {
  if (examples.empty()) throw ValidationError("no fine-tune examples to serialize");
  std::string out;
  for (const auto& ex : examples) {
    ordered_json messages = ordered_json::array();
    for (const auto& m : ex.messages) {
      ordered_json msg = ordered_json::object();
      msg["role"] = to_string(m.role);
      msg["content"] = m.content;
      messages.push_back(std::move(msg));
    }
    ordered_json line = ordered_json::object();
    line["messages"] = std::move(messages);
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<FinetuneExample> parse_finetune_jsonl(std::string_view bytes) {
  std::vector<FinetuneExample> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  static constexpr Role kOrder[] = {Role::System, Role::User, Role::Assistant};
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    const std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string where = "fine-tune line " + std::to_string(line_no) + ": ";
    if (line.empty()) throw ParseError(where + "empty line");

    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw ParseError(where + e.what());
    }
    if (!j.is_object() || j.size() != 1 || !j.contains("messages") || !j["messages"].is_array()) {
      throw ParseError(where + "expected {\"messages\":[...]}");
    }
    const auto& msgs = j["messages"];
    if (msgs.size() != 3) throw ValidationError(where + "expected exactly 3 messages");
    FinetuneExample ex;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& m = msgs[i];
      if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
          !m["role"].is_string() || !m["content"].is_string()) {
        throw ParseError(where + "message needs string role and content");
      }
      const Role role = parse_role(m["role"].get<std::string>());
      if (role != kOrder[i]) throw ValidationError(where + "roles must be system, user, assistant");
      auto content = m["content"].get<std::string>();
      if (content.empty()) throw ValidationError(where + "empty message content");
      ex.messages.push_back({role, std::move(content)});
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw ValidationError("fine-tune file has no examples");
  return out;
}

}  // namespace gpta
