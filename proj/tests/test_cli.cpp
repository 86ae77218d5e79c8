#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <regex>
#include <sstream>

#include "gpta/cli.hpp"
#include "gpta/config.hpp"
#include "gpta/error.hpp"
#include "gpta/log.hpp"
#include "gpta/report.hpp"
#include "gpta/text.hpp"
#include "gpta/trainer.hpp"

using namespace gpta;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "gpta_cli_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

struct Quiet {
  log::Sink prev = log::set_sink(nullptr);
  ~Quiet() { log::set_sink(prev); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

RunReport sample_report(int epochs) {
  RunReport r;
  r.metric = "accuracy";
  for (int e = 0; e < epochs; ++e) {
    EpochRecord rec;
    rec.epoch = e;
    rec.train_loss = 0.6 - 0.1 * e;
    rec.val_best = 0.8 + 0.01 * e;
    rec.val_empty = 0.78 + 0.01 * e;
    rec.improvement_rate = e == 0 ? 0.25 : 0.0;
    r.epochs.push_back(rec);
  }
  return r;
}

// A printed nan or inf appears as its own token, e.g. x="nan" or >-inf<.
bool has_non_finite(const std::string& svg) {
  static const std::regex token(R"re((^|[\s">=,(])[-+]?(nan|inf)\b)re", std::regex::icase);
  return std::regex_search(svg, token);
}

}  // namespace

TEST_CASE("parse_args builds commands") {
  const auto t = std::get<cli::TrainCommand>(cli::parse_args({"train", "--config", "c.json"}));
  CHECK(t.config == "c.json");
  CHECK(t.out == "run");
  CHECK(t.resume.empty());

  const auto e = std::get<cli::EvalCommand>(
      cli::parse_args({"eval", "--checkpoint", "s.json", "--data", "d.jsonl", "--metric", "macro_f1"}));
  CHECK(e.metric == MetricKind::MacroF1);
  CHECK_FALSE(e.prefix.has_value());
  const auto e2 = std::get<cli::EvalCommand>(cli::parse_args(
      {"eval", "--checkpoint", "s.json", "--data", "d.jsonl", "--prefix", "", "--metric", "accuracy"}));
  CHECK(e2.prefix == std::optional<std::string>(""));

  const auto g = std::get<cli::GenSynthCommand>(cli::parse_args(
      {"gen-synth", "--classes", "3", "--per-class", "7", "--noise", "0.2", "--seed", "18446744073709551615",
       "--out", "x.jsonl"}));
  CHECK(g.params.class_count == 3);
  CHECK(g.params.per_class == 7);
  CHECK(g.params.seed == 18446744073709551615ull);
  CHECK(g.params.vocab_size == 200);

  CHECK(std::holds_alternative<cli::HelpCommand>(cli::parse_args({"--help"})));
  const auto h = std::get<cli::HelpCommand>(cli::parse_args({"eval", "--help"}));
  CHECK(h.text.find("--checkpoint") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK_THROWS_WITH_AS(cli::parse_args({"train"}), doctest::Contains("--config"), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"train", "--config", "c", "--bogus"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"fly"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"eval", "--checkpoint", "a", "--data", "b", "--metric", "f2"}), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_args({"gen-synth", "--classes", "2", "--per-class", "1", "--noise", "0", "--seed",
                                   "-1", "--out", "x"}),
                  cli::UsageError);

  const Result help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-synth") != std::string::npos);
  CHECK(run_cli({"train", "--nope"}).code == cli::kUsage);
  CHECK(run_cli({"train", "--config", "/nonexistent/c.json"}).code == cli::kRuntime);
}

TEST_CASE("minimal config resolves to the documented defaults") {
  const auto lc = config_from_json(json{{"train_data", "t.jsonl"}});
  const RunConfig& c = lc.config;
  CHECK(c.k == 50);
  CHECK(c.w == 5);
  CHECK(c.l == 8);
  CHECK(c.temperature == 1.0);
  CHECK(c.epochs == 5);
  CHECK(c.finetune_cap == 50);
  CHECK(c.metric == MetricKind::Accuracy);
  CHECK(c.ta.model == "gpt-3.5-turbo-0613");
  CHECK(c.ta.backend == Backend::Remote);
  CHECK(c.student.lr == 0.1);
  CHECK(c.exemplars == 0);
  CHECK(lc.warnings.empty());
}

TEST_CASE("config validation") {
  CHECK_THROWS_WITH_AS(config_from_json(json{{"train_data", "t"}, {"k", 5}, {"w", 5}}),
                       doctest::Contains("w < k required"), ValidationError);
  CHECK_THROWS_WITH_AS(config_from_json(json{{"train_data", "t"}, {"ta", {{"foo", 1}}}}),
                       doctest::Contains("/ta/foo"), ValidationError);
  CHECK_THROWS_WITH_AS(config_from_json(json{{"train_data", "t"}, {"k", "many"}}), doctest::Contains("/k"),
                       ValidationError);
  CHECK_THROWS_AS(config_from_json(json::object()), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"train_data", "t"}, {"synthetic", json::object()}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"train_data", "t"}, {"epochs", 0}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"train_data", "t"}, {"ta", {{"backend", "simulated"}}}}),
                  ValidationError);

  const auto big = config_from_json(json{{"train_data", "t"}, {"finetune_cap", 200}});
  REQUIRE(big.warnings.size() == 1);
  CHECK(big.warnings[0].find("150") != std::string::npos);
}

TEST_CASE("resolved config is idempotent") {
  const json j = {{"synthetic", {{"classes", 3}, {"per_class", 20}, {"noise", 0.1}, {"seed", 4}}},
                  {"metric", "macro_f1"},
                  {"k", 12},
                  {"ta", {{"backend", "simulated"}, {"pool", {"a", {{"prefix", "b"}, {"weight", 0.5}}}}}}};
  const RunConfig c = config_from_json(j).config;
  CHECK(c.ta.pool[1] == PoolEntry{"b", 0.5});
  const json resolved = to_json(c);
  CHECK(config_from_json(resolved).config == c);
  CHECK(to_json(config_from_json(resolved).config) == resolved);
}

TEST_CASE("metrics CSV and SVG") {
  const RunReport r = sample_report(5);
  const std::string csv = metrics_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.rfind("epoch,train_loss,val_best,val_empty,improvement_rate\n0,0.600000,0.800000,0.780000,0.250000\n",
                  0) == 0);
  const std::string svg = curves_svg(r);
  CHECK(svg == curves_svg(r));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK_FALSE(has_non_finite(svg));

  const std::string one = curves_svg(sample_report(1));
  CHECK_FALSE(has_non_finite(one));
}

TEST_CASE("emit_report writes both files") {
  TempDir tmp;
  fs::create_directories(tmp.sub("run"));
  text::write_file(tmp.sub("run/report.json"), to_json(sample_report(5)).dump(2));
  const auto written = emit_report(tmp.sub("run"), tmp.sub("out"));
  CHECK(written.size() == 2);
  const std::string csv = text::read_file(tmp.sub("out/metrics.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  const std::string svg = text::read_file(tmp.sub("out/curves.svg"));
  (void)emit_report(tmp.sub("run"), tmp.sub("out2"));
  CHECK(text::read_file(tmp.sub("out2/curves.svg")) == svg);
  CHECK_THROWS_AS(emit_report(tmp.sub("missing"), tmp.sub("out3")), IoError);
}

TEST_CASE("end to end through the command line") {
  Quiet quiet;
  TempDir tmp;
  const Result g = run_cli({"gen-synth", "--classes", "2", "--per-class", "40", "--noise", "0", "--seed", "3",
                            "--out", tmp.sub("d.jsonl")});
  REQUIRE(g.code == 0);
  CHECK(load_jsonl(tmp.sub("d.jsonl")).size() == 80);

  const json cfg = {{"train_data", tmp.sub("d.jsonl")},
                    {"epochs", 2},
                    {"k", 6},
                    {"w", 2},
                    {"l", 3},
                    {"student", {{"dims", 256}}},
                    {"ta", {{"backend", "simulated"}, {"pool", {"one", "two", "three", "four", "five", "six"}}}}};
  text::write_file(tmp.sub("cfg.json"), cfg.dump());
  const Result t = run_cli({"train", "--config", tmp.sub("cfg.json"), "--out", tmp.sub("run")});
  CHECK(t.code == 0);
  CHECK(t.out.find("best prefix") != std::string::npos);

  const Result e = run_cli({"eval", "--checkpoint", tmp.sub("run/best_student.json"), "--data",
                            tmp.sub("d.jsonl"), "--metric", "accuracy"});
  CHECK(e.code == 0);
  CHECK(e.out.rfind("accuracy ", 0) == 0);

  const Result r = run_cli({"report", "--run", tmp.sub("run"), "--out", tmp.sub("rep")});
  CHECK(r.code == 0);
  CHECK(fs::exists(tmp.sub("rep/curves.svg")));

  text::write_file(tmp.sub("bad.json"), R"({"train_data":"x","k":3,"w":5})");
  CHECK(run_cli({"train", "--config", tmp.sub("bad.json")}).code == cli::kValidation);
}
