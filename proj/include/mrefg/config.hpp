#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mrefg/trainer.hpp"

namespace mrefg {

// Flat key=value configuration. '#' starts a comment; blank lines are
// ignored; duplicate keys in one file are rejected.
class Config {
 public:
  Config() = default;
  explicit Config(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Sorted key=value lines; hash() is FNV-1a over this text.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

// Materializes a TrainConfig, rejecting unknown keys.
TrainConfig train_config_from(const Config& cfg);
Config to_config(const TrainConfig& cfg);

std::vector<GraphKind> parse_graph_list(const std::string& csv);

}  // namespace mrefg
