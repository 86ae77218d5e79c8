#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpta/prefix_history.hpp"
#include "gpta/ta.hpp"

namespace gpta {

inline constexpr int kDefaultWindow = 5;
inline constexpr int kDefaultFinetuneCap = 50;
// Fine-tune sets larger than this are known to hurt the TA.
inline constexpr int kFinetuneDegradationThreshold = 150;

// One sliding-window position: `window` is history[i, i+w) and `target` is
// history[i+w].
struct DialogueGradient {
  std::vector<ScoredPrefix> window;
  std::string target;
  double target_score = 0.0;
  std::size_t index = 0;

  bool operator==(const DialogueGradient&) const = default;
};

// Exactly three messages: system (enrichment), user (window), assistant
// (target prefix).
struct FinetuneExample {
  std::vector<ChatMessage> messages;

  bool operator==(const FinetuneExample&) const = default;
};

// Yields |h| - w gradients in index order. Throws ValidationError unless
// w >= 1 and |h| > w.
std::vector<DialogueGradient> build_windows(const PrefixHistory& h, int w);

// Wraps each gradient in the system/user/assistant triple. Gradients whose
// target is the empty (baseline) prefix are skipped: an assistant turn must
// carry text.
std::vector<FinetuneExample> enrich(std::span<const DialogueGradient> gradients,
                                    const MetaPrompt& mp);

// Keeps the last max_n examples, i.e. those with the best targets. Warns when
// max_n exceeds kFinetuneDegradationThreshold.
std::vector<FinetuneExample> cap(std::vector<FinetuneExample> examples, int max_n);

// Canonical fine-tune JSONL: one {"messages":[{"role","content"},...]} object
// per line, each line terminated by exactly one '\n'.
std::string serialize_jsonl(std::span<const FinetuneExample> examples);

// Strict inverse of serialize_jsonl. Throws ParseError/ValidationError.
std::vector<FinetuneExample> parse_finetune_jsonl(std::string_view bytes);

}  // namespace gpta
