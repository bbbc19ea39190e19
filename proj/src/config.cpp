#include "mrefg/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mrefg/util.hpp"

namespace mrefg {

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + " line " + std::to_string(lineno) +
                       ": expected key=value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(origin + " line " + std::to_string(lineno) + ": empty key");
    }
    if (cfg.entries_.count(key) > 0) {
      throw ParseError(origin + " line " + std::to_string(lineno) + ": duplicate key '" + key +
                       "'");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": '" + it->second + "' is not a number");
  }
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": '" + it->second + "' is not an integer");
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ParseError("config key " + key + ": '" + it->second + "' is not an unsigned integer");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = to_lower(it->second);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("config key " + key + ": '" + it->second + "' is not a boolean");
}

std::string Config::canonical() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
  return out.str();
}

std::uint64_t Config::hash() const { return fnv1a(canonical()); }

std::vector<GraphKind> parse_graph_list(const std::string& csv) {
  std::vector<GraphKind> kinds;
  for (const std::string& part : split(csv, ',')) {
    std::string name = trim(part);
    if (name.empty()) continue;
    kinds.push_back(graph_kind_from_string(name));
  }
  if (kinds.empty()) throw ValidationError("graph list is empty");
  return kinds;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "labeled_frac", "unlabeled_frac", "seed", "embeddings",
      "delta", "max_degree", "adjacency_window", "graphs",
      "token_dim", "tag_dim", "position_dim", "hidden", "max_offset", "dropout",
      "finetune_tokens",
      "mgat_heads", "mgat_dim", "mgat_fusion_dim", "mgat_leaky_slope", "mgat_backprop_encoder",
      "optimizer", "lr_p", "lr_m", "batch_size", "init_epochs", "epochs_p", "epochs_m",
      "max_iters", "patience", "select_frac", "select_frac_of_original",
      "corpus", "out",  // consumed by the CLI, allowed in files for convenience
  };
  return keys;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainConfig train_config_from(const Config& cfg) {
  for (const auto& [key, value] : cfg.entries()) {
    if (known_keys().count(key) == 0) {
      std::ostringstream msg;
      msg << "unknown config key '" << key << "'; known keys:";
      for (const std::string& k : known_keys()) msg << " " << k;
      throw ValidationError(msg.str());
    }
  }
  TrainConfig out;
  out.labeled_frac = cfg.get_double("labeled_frac", out.labeled_frac);
  out.unlabeled_frac = cfg.get_double("unlabeled_frac", out.unlabeled_frac);
  out.seed = cfg.get_u64("seed", out.seed);
  out.embeddings_path = cfg.get_string("embeddings", out.embeddings_path);
  out.graph.delta = cfg.get_double("delta", out.graph.delta);
  out.graph.max_degree = cfg.get_int("max_degree", out.graph.max_degree);
  out.graph.adjacency_window = cfg.get_int("adjacency_window", out.graph.adjacency_window);
  out.graphs = parse_graph_list(cfg.get_string("graphs", "entity,verb,semantics"));
  out.encoder.token_dim = cfg.get_int("token_dim", out.encoder.token_dim);
  out.encoder.tag_dim = cfg.get_int("tag_dim", out.encoder.tag_dim);
  out.encoder.position_dim = cfg.get_int("position_dim", out.encoder.position_dim);
  out.encoder.hidden = cfg.get_int("hidden", out.encoder.hidden);
  out.encoder.max_offset = cfg.get_int("max_offset", out.encoder.max_offset);
  out.encoder.dropout = cfg.get_double("dropout", out.encoder.dropout);
  out.encoder.finetune_tokens = cfg.get_bool("finetune_tokens", out.encoder.finetune_tokens);
  out.mgat.heads = cfg.get_int("mgat_heads", out.mgat.heads);
  out.mgat.dim = cfg.get_int("mgat_dim", out.mgat.dim);
  out.mgat.fusion_dim = cfg.get_int("mgat_fusion_dim", out.mgat.fusion_dim);
  out.mgat.leaky_slope = cfg.get_double("mgat_leaky_slope", out.mgat.leaky_slope);
  out.mgat_backprop_encoder = cfg.get_bool("mgat_backprop_encoder", out.mgat_backprop_encoder);
  out.optimizer = cfg.get_string("optimizer", out.optimizer);
  out.lr_p = cfg.get_double("lr_p", out.lr_p);
  out.lr_m = cfg.get_double("lr_m", out.lr_m);
  out.batch_size = cfg.get_int("batch_size", out.batch_size);
  out.init_epochs = cfg.get_int("init_epochs", out.init_epochs);
  out.epochs_p = cfg.get_int("epochs_p", out.epochs_p);
  out.epochs_m = cfg.get_int("epochs_m", out.epochs_m);
  out.max_iters = cfg.get_int("max_iters", out.max_iters);
  out.patience = cfg.get_int("patience", out.patience);
  out.select_frac = cfg.get_double("select_frac", out.select_frac);
  out.select_frac_of_original =
      cfg.get_bool("select_frac_of_original", out.select_frac_of_original);
  validate_train_config(out);
  return out;
}

Config to_config(const TrainConfig& cfg) {
  Config out;
  out.set("labeled_frac", fmt_double(cfg.labeled_frac));
  out.set("unlabeled_frac", fmt_double(cfg.unlabeled_frac));
  out.set("seed", std::to_string(cfg.seed));
  out.set("embeddings", cfg.embeddings_path);
  out.set("delta", fmt_double(cfg.graph.delta));
  out.set("max_degree", std::to_string(cfg.graph.max_degree));
  out.set("adjacency_window", std::to_string(cfg.graph.adjacency_window));
  std::string graphs;
  for (GraphKind k : cfg.graphs) {
    if (!graphs.empty()) graphs += ",";
    graphs += to_string(k);
  }
  out.set("graphs", graphs);
  out.set("token_dim", std::to_string(cfg.encoder.token_dim));
  out.set("tag_dim", std::to_string(cfg.encoder.tag_dim));
  out.set("position_dim", std::to_string(cfg.encoder.position_dim));
  out.set("hidden", std::to_string(cfg.encoder.hidden));
  out.set("max_offset", std::to_string(cfg.encoder.max_offset));
  out.set("dropout", fmt_double(cfg.encoder.dropout));
  out.set("finetune_tokens", cfg.encoder.finetune_tokens ? "true" : "false");
  out.set("mgat_heads", std::to_string(cfg.mgat.heads));
  out.set("mgat_dim", std::to_string(cfg.mgat.dim));
  out.set("mgat_fusion_dim", std::to_string(cfg.mgat.fusion_dim));
  out.set("mgat_leaky_slope", fmt_double(cfg.mgat.leaky_slope));
  out.set("mgat_backprop_encoder", cfg.mgat_backprop_encoder ? "true" : "false");
  out.set("optimizer", cfg.optimizer);
  out.set("lr_p", fmt_double(cfg.lr_p));
  out.set("lr_m", fmt_double(cfg.lr_m));
  out.set("batch_size", std::to_string(cfg.batch_size));
  out.set("init_epochs", std::to_string(cfg.init_epochs));
  out.set("epochs_p", std::to_string(cfg.epochs_p));
  out.set("epochs_m", std::to_string(cfg.epochs_m));
  out.set("max_iters", std::to_string(cfg.max_iters));
  out.set("patience", std::to_string(cfg.patience));
  out.set("select_frac", fmt_double(cfg.select_frac));
  out.set("select_frac_of_original", cfg.select_frac_of_original ? "true" : "false");
  return out;
}

}  // namespace mrefg
