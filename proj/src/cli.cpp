#include "gpta/cli.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gpta/config.hpp"
#include "gpta/history.hpp"
#include "gpta/report.hpp"
#include "gpta/student.hpp"
#include "gpta/text.hpp"
#include "gpta/trainer.hpp"

namespace gpta::cli {
namespace {

struct Parsed {
  std::string config, out, resume;
  std::string checkpoint, data, prefix, metric;
  bool has_prefix = false;
  std::string run_dir, report_out;
  int classes = -1, per_class = -1, vocab = 200;
  double noise = -1.0;
  std::string seed;
  std::string synth_out;
};

void require(bool present, const std::string& flag) {
  if (!present) throw UsageError("missing " + flag);
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Prefix-prompt assisted training with a fine-tunable teaching assistant", "gpta"};
  app.require_subcommand(0, 1);
  Parsed p;

  auto* train = app.add_subcommand("train", "Run the alternating student/TA training loop");
  train->add_option("--config", p.config, "Run configuration (JSON)");
  train->add_option("--out", p.out, "Run directory (default: run)");
  train->add_option("--resume", p.resume, "Continue from a state_epoch{N}.json checkpoint");

  auto* eval = app.add_subcommand("eval", "Score a student checkpoint on a JSONL dataset");
  eval->add_option("--checkpoint", p.checkpoint, "Student checkpoint (JSON)");
  eval->add_option("--data", p.data, "Labeled JSONL dataset");
  auto* prefix_opt = eval->add_option("--prefix", p.prefix, "Prefix prepended to every input");
  eval->add_option("--metric", p.metric, "accuracy | macro_f1 | neg_loss");

  auto* report = app.add_subcommand("report", "Render metrics.csv and curves.svg for a run");
  report->add_option("--run", p.run_dir, "Run directory containing report.json");
  report->add_option("--out", p.report_out, "Output directory");

  auto* synth = app.add_subcommand("gen-synth", "Write a planted-keyword synthetic corpus");
  synth->add_option("--classes", p.classes, "Number of classes (>= 2)");
  synth->add_option("--per-class", p.per_class, "Examples per class (>= 1)");
  synth->add_option("--noise", p.noise, "Label noise probability in [0,1)");
  synth->add_option("--seed", p.seed, "Generator seed");
  synth->add_option("--vocab", p.vocab, "Shared noise vocabulary size (default 200)");
  synth->add_option("--out", p.synth_out, "Output JSONL path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::ostringstream ss;
    const CLI::App* target = &app;
    for (auto* sub : {train, eval, report, synth}) {
      if (std::find(args.begin(), args.end(), sub->get_name()) != args.end()) target = sub;
    }
    ss << target->help();
    return HelpCommand{ss.str()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (train->parsed()) {
    require(!p.config.empty(), "--config");
    return TrainCommand{p.config, p.out.empty() ? "run" : p.out, p.resume};
  }
  if (eval->parsed()) {
    require(!p.checkpoint.empty(), "--checkpoint");
    require(!p.data.empty(), "--data");
    require(!p.metric.empty(), "--metric");
    EvalCommand c{p.checkpoint, p.data, std::nullopt, MetricKind::Accuracy};
    if (prefix_opt->count() > 0) c.prefix = p.prefix;
    try {
      c.metric = parse_metric_kind(p.metric);
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
  if (report->parsed()) {
    require(!p.run_dir.empty(), "--run");
    require(!p.report_out.empty(), "--out");
    return ReportCommand{p.run_dir, p.report_out};
  }
  if (synth->parsed()) {
    require(p.classes >= 0, "--classes");
    require(p.per_class >= 0, "--per-class");
    require(p.noise >= 0.0, "--noise");
    require(!p.seed.empty(), "--seed");
    require(!p.synth_out.empty(), "--out");
    GenSynthCommand c;
    c.params.class_count = p.classes;
    c.params.per_class = p.per_class;
    c.params.noise = p.noise;
    c.params.vocab_size = p.vocab;
    try {
      // stoull accepts "-1" and wraps it; only plain digits are a seed.
      if (!std::all_of(p.seed.begin(), p.seed.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
        throw std::invalid_argument(p.seed);
      }
      c.params.seed = std::stoull(p.seed);
    } catch (const std::exception&) {
      throw UsageError("--seed must be an unsigned integer");
    }
    c.out = p.synth_out;
    return c;
  }
  throw UsageError("missing subcommand (train, eval, report or gen-synth); see --help");
}

namespace {

int dispatch(const TrainCommand& c, std::ostream& out, std::ostream& err) {
  auto loaded = load_config(c.config);
  for (const auto& w : loaded.warnings) err << "[warn] " << w << '\n';
  RunOptions options{c.out, c.resume};
  const RunReport report = run(loaded.config, options);
  out << "run directory: " << c.out << '\n';
  if (report.best) {
    out << "best prefix: \"" << report.best->prefix << "\" (epoch " << report.best->epoch
        << ", validation " << report.metric << " " << text::fixed(report.best->score, 6) << ")\n";
  }
  if (report.test) {
    out << "test " << report.metric << ": best prefix " << text::fixed(report.test->best_prefix, 6)
        << ", empty prefix " << text::fixed(report.test->empty_prefix, 6) << '\n';
  }
  return kOk;
}

int dispatch(const EvalCommand& c, std::ostream& out, std::ostream&) {
  StudentParams student = load_checkpoint(c.checkpoint);
  student.freeze();
  Dataset data = load_jsonl(c.data);
  if (data.class_count > student.class_count()) {
    throw ValidationError("dataset has more classes than the checkpoint");
  }
  const std::string prefix = c.prefix.value_or("");
  const double score = score_prefix(student, prefix, data, c.metric);
  out << to_string(c.metric) << ' ' << text::fixed(score, 6) << " (n=" << data.size()
      << ", prefix=\"" << prefix << "\")\n";
  return kOk;
}

int dispatch(const ReportCommand& c, std::ostream& out, std::ostream&) {
  for (const auto& path : emit_report(c.run_dir, c.out_dir)) out << path << '\n';
  return kOk;
}

int dispatch(const GenSynthCommand& c, std::ostream& out, std::ostream&) {
  const Dataset d = synth_generate(c.params);
  save_jsonl(d, c.out);
  out << "wrote " << d.size() << " examples to " << c.out << '\n';
  return kOk;
}

int dispatch(const HelpCommand& c, std::ostream& out, std::ostream&) {
  out << c.text;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const Command cmd = parse_args(args);
    return std::visit([&](const auto& c) { return dispatch(c, out, err); }, cmd);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace gpta::cli
