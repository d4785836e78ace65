#include "fdbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdbench/error.hpp"

namespace fdbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& node, const char* key) {
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json stats_json(const SummaryStats& s) {
  return {{"count", s.count}, {"min", s.min},   {"q1", s.q1},     {"median", s.median},
          {"q3", s.q3},       {"max", s.max},   {"mean", s.mean}, {"std", s.stddev}};
}

SummaryStats stats_from(const json& node) {
  SummaryStats s;
  s.count = node.at("count").get<std::size_t>();
  s.min = node.at("min").get<double>();
  s.q1 = node.at("q1").get<double>();
  s.median = node.at("median").get<double>();
  s.q3 = node.at("q3").get<double>();
  s.max = node.at("max").get<double>();
  s.mean = node.at("mean").get<double>();
  s.stddev = node.at("std").get<double>();
  return s;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + file.string());
  out.precision(17);
  return out;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string results_to_json(const BenchmarkResult& result) {
  json reports = json::array();
  for (const auto& r : result.reports) {
    json curve = json::array();
    for (const auto& p : r.risk_coverage) curve.push_back({p.coverage, p.risk});
    reports.push_back({{"score", r.score},
                       {"seed", r.seed},
                       {"group", r.group},
                       {"n_samples", r.n_samples},
                       {"accuracy", r.accuracy},
                       {"roc_auc_error_detection", r.roc_auc_error_detection},
                       {"fpr_at_tpr", r.fpr_at_tpr},
                       {"target_tpr", r.target_tpr},
                       {"ece", optional_json(r.ece)},
                       {"binary_roc_auc", optional_json(r.binary_roc_auc)},
                       {"threshold", optional_json(r.threshold)},
                       {"risk_coverage", curve}});
  }
  json skipped = json::array();
  for (const auto& s : result.skipped) {
    skipped.push_back({{"score", s.score}, {"seed", s.seed}, {"error", s.error}, {"reason", s.reason}});
  }
  json aggregation = json::object();
  for (const auto& [score, metrics] : result.aggregation) {
    for (const auto& [metric, stats] : metrics) aggregation[score][metric] = stats_json(stats);
  }
  const auto& p = result.provenance;
  json config = p.config_json.empty() ? json(nullptr) : json::parse(p.config_json);
  json doc{{"provenance",
            {{"config_hash", p.config_hash},
             {"toolkit_version", p.toolkit_version},
             {"seeds", p.seeds},
             {"scores", p.scores},
             {"config", config}}},
           {"reports", reports},
           {"skipped", skipped},
           {"aggregation", aggregation}};
  return doc.dump(2);
}

BenchmarkResult results_from_json(const std::string& text) {
  BenchmarkResult result;
  try {
    const json doc = json::parse(text);
    for (const auto& node : doc.at("reports")) {
      EvalReport r;
      r.score = node.at("score").get<std::string>();
      r.seed = node.at("seed").get<std::int64_t>();
      r.group = node.value("group", std::string("seed"));
      r.n_samples = node.at("n_samples").get<std::size_t>();
      r.accuracy = node.at("accuracy").get<double>();
      r.roc_auc_error_detection = node.at("roc_auc_error_detection").get<double>();
      r.fpr_at_tpr = node.at("fpr_at_tpr").get<double>();
      r.target_tpr = node.value("target_tpr", 0.8);
      r.ece = optional_from(node, "ece");
      r.binary_roc_auc = optional_from(node, "binary_roc_auc");
      r.threshold = optional_from(node, "threshold");
      for (const auto& pt : node.at("risk_coverage")) {
        r.risk_coverage.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
      }
      result.reports.push_back(std::move(r));
    }
    for (const auto& node : doc.at("skipped")) {
      result.skipped.push_back({node.at("score").get<std::string>(), node.at("seed").get<std::int64_t>(),
                                node.at("error").get<std::string>(),
                                node.at("reason").get<std::string>()});
    }
    for (const auto& [score, metrics] : doc.at("aggregation").items()) {
      for (const auto& [metric, stats] : metrics.items()) {
        result.aggregation[score][metric] = stats_from(stats);
      }
    }
    const auto& p = doc.at("provenance");
    result.provenance.config_hash = p.at("config_hash").get<std::string>();
    result.provenance.toolkit_version = p.at("toolkit_version").get<std::string>();
    result.provenance.seeds = p.at("seeds").get<std::vector<std::int64_t>>();
    result.provenance.scores = p.at("scores").get<std::vector<std::string>>();
    if (!p.at("config").is_null()) result.provenance.config_json = p.at("config").dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifestParse, std::string("results.json: ") + e.what());
  }
  return result;
}

BenchmarkResult load_results(const fs::path& results_json) {
  std::ifstream in(results_json);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + results_json.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return results_from_json(buffer.str());
}

std::string boxplot_svg(const std::string& metric,
                        const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  constexpr double kLeft = 70.0;
  constexpr double kTop = 40.0;
  constexpr double kPlotHeight = 260.0;
  constexpr double kSlot = 90.0;
  const double width = kLeft + kSlot * static_cast<double>(std::max<std::size_t>(groups.size(), 1)) + 20.0;
  const double height = kTop + kPlotHeight + 60.0;

  double lo = HUGE_VAL;
  double hi = -HUGE_VAL;
  for (const auto& [name, values] : groups) {
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double span = std::max(hi - lo, 0.05);
  lo -= 0.1 * span;
  hi += 0.1 * span;
  auto y = [&](double v) { return kTop + kPlotHeight * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(metric) << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + kPlotHeight << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5.0;
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y(v) << "\" x2=\"" << kLeft << "\" y2=\""
        << y(v) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << v
        << "</text>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& [name, values] = groups[g];
    const double cx = kLeft + kSlot * (static_cast<double>(g) + 0.5);
    svg << "<text x=\"" << cx << "\" y=\"" << kTop + kPlotHeight + 18
        << "\" text-anchor=\"middle\">" << escape_xml(name) << "</text>\n";
    if (values.empty()) continue;
    const auto s = summarize(values);
    const double half = kSlot * 0.3;
    svg << "<line x1=\"" << cx << "\" y1=\"" << y(s.max) << "\" x2=\"" << cx << "\" y2=\""
        << y(s.min) << "\" stroke=\"black\"/>\n";
    for (double w : {s.min, s.max}) {
      svg << "<line x1=\"" << cx - half / 2 << "\" y1=\"" << y(w) << "\" x2=\"" << cx + half / 2
          << "\" y2=\"" << y(w) << "\" stroke=\"black\"/>\n";
    }
    svg << "<rect x=\"" << cx - half << "\" y=\"" << y(s.q3) << "\" width=\"" << 2 * half
        << "\" height=\"" << std::max(y(s.q1) - y(s.q3), 0.0)
        << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << cx - half << "\" y1=\"" << y(s.median) << "\" x2=\"" << cx + half
        << "\" y2=\"" << y(s.median) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_report(const BenchmarkResult& result, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out / "risk_coverage", ec);
  fs::create_directories(out / "plots", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create report directories under " + out.string());

  {
    auto file = open_out(out / "results.json");
    file << results_to_json(result) << '\n';
  }
  {
    auto file = open_out(out / "results.csv");
    file << "score,seed,group,metric,value\n";
    for (const auto& r : result.reports) {
      for (const auto& [metric, value] : r.metric_values()) {
        file << r.score << ',' << r.seed << ",\"" << r.group << "\"," << metric << ',' << value << '\n';
      }
    }
  }
  for (const auto& r : result.reports) {
    auto file = open_out(out / "risk_coverage" / (r.score + "_seed" + std::to_string(r.seed) + ".csv"));
    file << "coverage,risk\n";
    for (const auto& p : r.risk_coverage) file << p.coverage << ',' << p.risk << '\n';
  }

  // metric -> ordered (score -> values), scores in first-seen order
  std::map<std::string, std::vector<std::pair<std::string, std::vector<double>>>> by_metric;
  for (const auto& r : result.reports) {
    for (const auto& [metric, value] : r.metric_values()) {
      auto& groups = by_metric[metric];
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == r.score; });
      if (it == groups.end()) {
        groups.emplace_back(r.score, std::vector<double>{});
        it = std::prev(groups.end());
      }
      it->second.push_back(value);
    }
  }
  for (const auto& [metric, groups] : by_metric) {
    auto file = open_out(out / "plots" / (metric + ".svg"));
    file << boxplot_svg(metric, groups);
  }
}

void write_scores_csv(const ScoredPredictions& scored, const fs::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  auto out = open_out(file);
  out << "sample_index,score,predicted_class,label,correct\n";
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    out << i << ',' << scored.scores[i] << ',' << scored.predicted[i] << ',' << scored.labels[i]
        << ',' << (scored.predicted[i] == scored.labels[i] ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + file.string());
}

ScoredPredictions read_scores_csv(const fs::path& file, ScoreMethod method) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != "sample_index,score,predicted_class,label,correct") {
    throw Error(ErrorCode::kInvalidField, file.string() + ": unexpected score CSV header");
  }
  ScoredPredictions scored;
  scored.method = method;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell[5];
    for (auto& c : cell) {
      if (!std::getline(fields, c, ',')) {
        throw Error(ErrorCode::kInvalidField, file.string() + ": short row " + std::to_string(row));
      }
    }
    try {
      if (std::stoull(cell[0]) != row) {
        throw Error(ErrorCode::kInvalidField, file.string() + ": sample_index out of order");
      }
      scored.scores.push_back(std::stod(cell[1]));
      scored.predicted.push_back(std::stoi(cell[2]));
      scored.labels.push_back(std::stoi(cell[3]));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidField, file.string() + ": bad number in row " + std::to_string(row));
    }
    ++row;
  }
  if (scored.scores.empty()) throw Error(ErrorCode::kEmptyInput, file.string() + ": no rows");
  return scored;
}

}  // namespace fdbench
