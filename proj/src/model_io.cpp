#include "mrefg/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "mrefg/config.hpp"

namespace mrefg {

using json = nlohmann::ordered_json;

namespace {

json mat_to_json(const ad::Mat& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ad::Mat mat_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ParseError("tensor " + name + " is not a 2-d array");
  long rows = static_cast<long>(j.size());
  long cols = static_cast<long>(j[0].size());
  ad::Mat m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    const json& row = j[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<long>(row.size()) != cols) {
      throw ParseError("tensor " + name + " has ragged rows");
    }
    for (long c = 0; c < cols; ++c) m(r, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return m;
}

json state_to_json(const std::map<std::string, ad::Mat>& state) {
  json out = json::object();
  for (const auto& [name, m] : state) out[name] = mat_to_json(m);
  return out;
}

std::map<std::string, ad::Mat> state_from_json(const json& j) {
  std::map<std::string, ad::Mat> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[it.key()] = mat_from_json(it.value(), it.key());
  }
  return out;
}

}  // namespace

void save_checkpoint(const CheckpointData& data, const std::string& path) {
  Config cfg{std::map<std::string, std::string>(data.config)};
  json j;
  j["format"] = 1;
  j["config"] = data.config;
  j["config_hash"] = cfg.hash();
  j["relations"] = data.relations;
  j["tokens"] = data.tokens;
  j["pos"] = data.pos;
  j["ner"] = data.ner;
  j["encoder"] = state_to_json(data.encoder_state);
  j["mgat"] = state_to_json(data.mgat_state);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << j.dump();
  if (!out) throw IoError("failed while writing checkpoint " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", 0) != 1) throw ParseError("checkpoint " + path + ": unsupported format");
  CheckpointData data;
  data.config = j.at("config").get<std::map<std::string, std::string>>();
  Config cfg{std::map<std::string, std::string>(data.config)};
  if (j.contains("config_hash") && j.at("config_hash").get<std::uint64_t>() != cfg.hash()) {
    throw ValidationError("checkpoint " + path + ": config hash mismatch");
  }
  data.relations = j.at("relations").get<std::vector<std::string>>();
  data.tokens = j.at("tokens").get<std::vector<std::string>>();
  data.pos = j.at("pos").get<std::vector<std::string>>();
  data.ner = j.at("ner").get<std::vector<std::string>>();
  data.encoder_state = state_from_json(j.at("encoder"));
  data.mgat_state = state_from_json(j.at("mgat"));
  return data;
}

CheckpointData snapshot(SemiSupervisedRunner& runner) {
  CheckpointData data;
  data.config = to_config(runner.config()).entries();
  for (int i = 0; i < runner.relations().size(); ++i) {
    data.relations.push_back(runner.relations().label(i));
  }
  data.tokens = runner.encoder().token_vocab().items();
  data.pos = runner.encoder().pos_vocab().items();
  data.ner = runner.encoder().ner_vocab().items();
  data.encoder_state = runner.encoder().state();
  data.mgat_state = runner.mgat().state();
  return data;
}

std::unique_ptr<Encoder> restore_encoder(const CheckpointData& data) {
  TrainConfig tc = train_config_from(Config{std::map<std::string, std::string>(data.config)});
  Rng rng(0);  // initialization is immediately overwritten by the stored state
  auto enc = std::make_unique<Encoder>(tc.encoder, Vocab(data.tokens), Vocab(data.pos),
                                       Vocab(data.ner), static_cast<int>(data.relations.size()),
                                       nullptr, rng);
  enc->load_state(data.encoder_state);
  return enc;
}

std::unique_ptr<Mgat> restore_mgat(const CheckpointData& data, int input_dim) {
  TrainConfig tc = train_config_from(Config{std::map<std::string, std::string>(data.config)});
  Rng rng(0);
  auto mg = std::make_unique<Mgat>(tc.mgat, input_dim, static_cast<int>(data.relations.size()),
                                   rng);
  mg->load_state(data.mgat_state);
  return mg;
}

RelationVocab restore_relations(const CheckpointData& data) {
  // The stored list is already in canonical order; the constructor re-derives
  // the same order (no_relation pinned first, the rest sorted).
  return RelationVocab(data.relations);
}

}  // namespace mrefg
