#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gpta/dataset.hpp"
#include "gpta/error.hpp"
#include "gpta/metrics.hpp"

namespace gpta::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

struct TrainCommand {
  std::string config;
  std::string out = "run";
  std::string resume;
};

struct EvalCommand {
  std::string checkpoint;
  std::string data;
  std::optional<std::string> prefix;
  MetricKind metric = MetricKind::Accuracy;
};

struct ReportCommand {
  std::string run_dir;
  std::string out_dir;
};

struct GenSynthCommand {
  SynthParams params;
  std::string out;
};

// --help anywhere: the text to print, exit code 0.
struct HelpCommand {
  std::string text;
};

using Command = std::variant<TrainCommand, EvalCommand, ReportCommand, GenSynthCommand, HelpCommand>;

// `args` excludes the program name. Throws UsageError.
Command parse_args(const std::vector<std::string>& args);

// Parses, dispatches and maps errors onto exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpta::cli
