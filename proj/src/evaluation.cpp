#include "mrefg/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mrefg/util.hpp"

namespace mrefg {

using json = nlohmann::ordered_json;

Metrics score(const std::map<std::string, std::string>& predictions,
              const std::map<std::string, std::string>& gold, const RelationVocab& vocab) {
  if (gold.empty()) throw ValidationError("cannot score an empty gold set");
  if (predictions.size() != gold.size()) {
    throw ValidationError("prediction and gold id sets differ in size");
  }
  Metrics m;
  for (const auto& [id, g] : gold) {
    auto it = predictions.find(id);
    if (it == predictions.end()) throw ValidationError("missing prediction for sample " + id);
    const std::string& p = it->second;
    vocab.index(p);  // both labels must belong to the vocabulary
    vocab.index(g);
    if (p != RelationVocab::kNoRelation) {
      if (p == g) {
        ++m.tp;
        ++m.per_class[p][0];
      } else {
        ++m.fp;
        ++m.per_class[p][1];
      }
    }
    if (g != RelationVocab::kNoRelation && p != g) {
      ++m.fn;
      ++m.per_class[g][2];
    }
  }
  m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

namespace {

json metrics_to_json(const Metrics& m) {
  json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  json pc = json::object();
  for (const auto& [label, counts] : m.per_class) {
    pc[label] = {{"tp", counts[0]}, {"fp", counts[1]}, {"fn", counts[2]}};
  }
  j["per_class"] = pc;
  return j;
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.precision = j.at("precision").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.tp = j.at("tp").get<long>();
  m.fp = j.at("fp").get<long>();
  m.fn = j.at("fn").get<long>();
  for (auto it = j.at("per_class").begin(); it != j.at("per_class").end(); ++it) {
    m.per_class[it.key()] = {it.value().at("tp").get<long>(), it.value().at("fp").get<long>(),
                             it.value().at("fn").get<long>()};
  }
  return m;
}

double json_double(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_run_log(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write run log " + path);
  for (const IterationRecord& r : history) {
    json j;
    j["iteration"] = r.iteration;
    j["dev"] = metrics_to_json(r.dev);
    j["test"] = metrics_to_json(r.test);
    j["train_loss"] = r.train_loss;  // NaN serializes as null
    j["labeled_size"] = r.labeled_size;
    j["pool_size"] = r.pool_size;
    j["agreeing"] = r.agreeing;
    j["augmented"] = r.augmented;
    j["augmentation_precision"] = r.augmentation_precision;
    json sel = json::array();
    for (const auto& [id, label] : r.selected) sel.push_back({{"id", id}, {"label", label}});
    j["selected"] = sel;
    j["beta"] = r.beta;
    j["edge_counts"] = r.edge_counts;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed while writing run log " + path);
}

TrainHistory read_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read run log " + path);
  TrainHistory history;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    IterationRecord r;
    try {
      const json j = json::parse(line);
      r.iteration = j.at("iteration").get<int>();
      r.dev = metrics_from_json(j.at("dev"));
      r.test = metrics_from_json(j.at("test"));
      r.train_loss = json_double(j.at("train_loss"));
      r.labeled_size = j.at("labeled_size").get<int>();
      r.pool_size = j.at("pool_size").get<int>();
      r.agreeing = j.at("agreeing").get<int>();
      r.augmented = j.at("augmented").get<int>();
      r.augmentation_precision = json_double(j.at("augmentation_precision"));
      for (const json& s : j.at("selected")) {
        r.selected.emplace_back(s.at("id").get<std::string>(), s.at("label").get<std::string>());
      }
      for (auto it = j.at("beta").begin(); it != j.at("beta").end(); ++it) {
        r.beta[it.key()] = json_double(it.value());
      }
      for (auto it = j.at("edge_counts").begin(); it != j.at("edge_counts").end(); ++it) {
        r.edge_counts[it.key()] = it.value().get<long>();
      }
    } catch (const json::exception& e) {
      throw ParseError("run log " + path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    history.push_back(std::move(r));
  }
  return history;
}

namespace {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> values;  // aligned with iterations; NaN = gap
};

// Minimal hand-rolled SVG line chart; axes, ticks, legend, one polyline per
// series. Good enough for eyeballing training trajectories.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<int>& xs, const std::vector<Series>& series,
                     double ymin, double ymax) {
  const double width = 640, height = 400;
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  double xmin = xs.empty() ? 0 : xs.front();
  double xmax = xs.empty() ? 1 : xs.back();
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw
      << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double y = ymin + (ymax - ymin) * i / 4.0;
    svg << "<line x1=\"" << left - 4 << "\" y1=\"" << py(y) << "\" x2=\"" << left
        << "\" y2=\"" << py(y) << "\" stroke=\"black\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", y);
    svg << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4
        << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << buf
        << "</text>\n";
  }
  for (int x : xs) {
    svg << "<line x1=\"" << px(x) << "\" y1=\"" << top + ph << "\" x2=\"" << px(x)
        << "\" y2=\"" << top + ph + 4 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 16
        << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << x
        << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">iteration"
      << "</text>\n";

  double lx = left + 10, ly = top + 10;
  for (const Series& s : series) {
    std::ostringstream pts;
    bool open = false;
    for (size_t i = 0; i < xs.size(); ++i) {
      double v = i < s.values.size() ? s.values[i] : std::numeric_limits<double>::quiet_NaN();
      if (std::isnan(v)) {
        open = false;
        continue;
      }
      if (!open) {
        if (pts.tellp() > 0) {
          svg << "<polyline fill=\"none\" stroke=\"" << s.color
              << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
          pts.str("");
        }
        open = true;
      }
      pts << px(xs[i]) << "," << py(v) << " ";
      svg << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(v) << "\" r=\"2.5\" fill=\""
          << s.color << "\"/>\n";
    }
    if (pts.tellp() > 0) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    }
    svg << "<rect x=\"" << lx << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
        << s.color << "\"/>\n";
    svg << "<text x=\"" << lx + 14 << "\" y=\"" << ly
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.label << "</text>\n";
    ly += 16;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IoError("cannot write chart " + path);
  out << svg.str();
}

}  // namespace

void emit_curves(const TrainHistory& history, const std::string& out_dir) {
  if (history.empty()) throw ValidationError("cannot emit curves for an empty history");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const std::vector<std::string> graph_names = {"entity", "verb", "semantics"};
  std::ofstream tsv(fs::path(out_dir) / "curves.tsv");
  if (!tsv) throw IoError("cannot write curves.tsv under " + out_dir);
  tsv << "iteration\tdev_precision\tdev_recall\tdev_f1\ttest_precision\ttest_recall\ttest_f1"
      << "\ttrain_loss\tlabeled_size\tpool_size\tagreeing\taugmented\taugmentation_precision";
  for (const std::string& g : graph_names) tsv << "\tbeta_" << g << "\tedges_" << g;
  tsv << "\n";
  for (const IterationRecord& r : history) {
    tsv << r.iteration << "\t" << fmt17(r.dev.precision) << "\t" << fmt17(r.dev.recall) << "\t"
        << fmt17(r.dev.f1) << "\t" << fmt17(r.test.precision) << "\t" << fmt17(r.test.recall)
        << "\t" << fmt17(r.test.f1) << "\t" << fmt17(r.train_loss) << "\t" << r.labeled_size
        << "\t" << r.pool_size << "\t" << r.agreeing << "\t" << r.augmented << "\t"
        << fmt17(r.augmentation_precision);
    for (const std::string& g : graph_names) {
      auto bit = r.beta.find(g);
      tsv << "\t" << (bit == r.beta.end() ? "nan" : fmt17(bit->second));
      auto eit = r.edge_counts.find(g);
      tsv << "\t" << (eit == r.edge_counts.end() ? 0 : eit->second);
    }
    tsv << "\n";
  }
  if (!tsv) throw IoError("failed while writing curves.tsv under " + out_dir);

  std::vector<int> xs;
  Series dev{"dev F1", "#1f77b4", {}}, test{"test F1", "#d62728", {}};
  Series aug_prec{"augmentation precision", "#ff7f0e", {}};
  Series labeled{"labeled", "#2ca02c", {}}, augmented{"augmented", "#9467bd", {}};
  double count_max = 1.0;
  for (const IterationRecord& r : history) {
    xs.push_back(r.iteration);
    dev.values.push_back(r.dev.f1);
    test.values.push_back(r.test.f1);
    aug_prec.values.push_back(r.augmentation_precision);
    labeled.values.push_back(r.labeled_size);
    augmented.values.push_back(r.augmented);
    count_max = std::max(count_max, static_cast<double>(r.labeled_size));
  }
  write_svg_chart((fs::path(out_dir) / "f1_curve.svg").string(), "F1 over self-training iterations",
                  xs, {dev, test}, 0.0, 1.0);
  write_svg_chart((fs::path(out_dir) / "augmentation_precision.svg").string(),
                  "Precision of promoted samples per iteration", xs, {aug_prec}, 0.0, 1.0);
  write_svg_chart((fs::path(out_dir) / "labeled_growth.svg").string(),
                  "Labeled-set growth over iterations", xs, {labeled, augmented}, 0.0, count_max);
}

}  // namespace mrefg
