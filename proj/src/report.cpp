#include "gpta/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gpta/error.hpp"
#include "gpta/text.hpp"

namespace gpta {

namespace fs = std::filesystem;

std::string metrics_csv(const RunReport& report) {
  std::string out = "epoch,train_loss,val_best,val_empty,improvement_rate\n";
  for (const auto& e : report.epochs) {
    out += std::to_string(e.epoch) + "," + text::fixed(e.train_loss, 6) + "," +
           text::fixed(e.val_best, 6) + "," + text::fixed(e.val_empty, 6) + "," +
           text::fixed(e.improvement_rate, 6) + "\n";
  }
  return out;
}

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 480;
constexpr double kLeft = 70;
constexpr double kRight = 630;
constexpr double kTop = 40;
constexpr double kBottom = 420;

struct Series {
  const char* name;
  const char* color;
  double EpochRecord::*field;
};

constexpr Series kSeries[] = {
    {"train_loss", "#1f77b4", &EpochRecord::train_loss},
    {"val_best", "#d62728", &EpochRecord::val_best},
    {"val_empty", "#2ca02c", &EpochRecord::val_empty},
    {"improvement_rate", "#9467bd", &EpochRecord::improvement_rate},
};

std::string num(double v) { return text::fixed(v, 2); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string curves_svg(const RunReport& report) {
  const auto& epochs = report.epochs;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (const auto& e : epochs) {
    for (const auto& s : kSeries) {
      lo = std::min(lo, e.*(s.field));
      hi = std::max(hi, e.*(s.field));
    }
  }
  if (epochs.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }

  const int first = epochs.empty() ? 0 : epochs.front().epoch;
  const int last = epochs.empty() ? 0 : epochs.back().epoch;
  auto x_of = [&](int epoch) {
    if (last == first) return (kLeft + kRight) / 2;
    return kLeft + (kRight - kLeft) * (epoch - first) / static_cast<double>(last - first);
  };
  auto y_of = [&](double v) { return kBottom - (kBottom - kTop) * (v - lo) / (hi - lo); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"480\" "
         "viewBox=\"0 0 800 480\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + num((kLeft + kRight) / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">Training curves (" +
         escape(report.metric) + ")</text>\n";

  // Horizontal grid with value labels.
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const std::string y = num(y_of(v));
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + y + "\" x2=\"" + num(kRight) + "\" y2=\"" + y +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + y +
           "\" text-anchor=\"end\" dominant-baseline=\"middle\">" + text::fixed(v, 3) +
           "</text>\n";
  }
  // Epoch ticks.
  for (const auto& e : epochs) {
    const std::string x = num(x_of(e.epoch));
    svg += "<line x1=\"" + x + "\" y1=\"" + num(kBottom) + "\" x2=\"" + x + "\" y2=\"" +
           num(kBottom + 5) + "\" stroke=\"#000000\"/>\n";
    svg += "<text x=\"" + x + "\" y=\"" + num(kBottom + 18) + "\" text-anchor=\"middle\">" +
           std::to_string(e.epoch) + "</text>\n";
  }
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"#000000\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"#000000\"/>\n";
  svg += "<text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kBottom + 40) +
         "\" text-anchor=\"middle\">epoch</text>\n";

  for (std::size_t si = 0; si < std::size(kSeries); ++si) {
    const auto& s = kSeries[si];
    std::string points;
    for (const auto& e : epochs) {
      if (!points.empty()) points += ' ';
      points += num(x_of(e.epoch)) + "," + num(y_of(e.*(s.field)));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(s.color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    for (const auto& e : epochs) {
      svg += "<circle cx=\"" + num(x_of(e.epoch)) + "\" cy=\"" + num(y_of(e.*(s.field))) +
             "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
    }
    const double ly = kTop + 10 + 22.0 * static_cast<double>(si);
    svg += "<line x1=\"650\" y1=\"" + num(ly) + "\" x2=\"675\" y2=\"" + num(ly) + "\" stroke=\"" +
           s.color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"682\" y=\"" + num(ly) + "\" dominant-baseline=\"middle\">" + s.name +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> emit_report(const std::string& run_dir, const std::string& out_dir) {
  const fs::path src = fs::path(run_dir) / "report.json";
  if (!fs::exists(src)) throw IoError("missing " + src.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(src.string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(src.string() + ": " + e.what());
  }
  const RunReport report = run_report_from_json(j);
  fs::create_directories(out_dir);
  const std::string csv = (fs::path(out_dir) / "metrics.csv").string();
  const std::string svg = (fs::path(out_dir) / "curves.svg").string();
  text::write_file(csv, metrics_csv(report));
  text::write_file(svg, curves_svg(report));
  return {csv, svg};
}

}  // namespace gpta
