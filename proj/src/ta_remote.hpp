#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gpta/ta.hpp"

// OpenAI-compatible HTTP backend of the TA client.
namespace gpta::remote {

// One chat-completion call per attempt; the reply is run through
// parse_prefixes. Transport and parse failures are retried.
std::vector<std::string> generate(const RemoteOptions& options, const std::string& model,
                                  const GenerationRequest& request);

// Upload, job creation and polling. Returns the fine-tuned model id.
std::string finetune(const RemoteOptions& options, const std::string& model,
                     std::string_view training_file);

}  // namespace gpta::remote
