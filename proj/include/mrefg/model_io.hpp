#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mrefg/encoder.hpp"
#include "mrefg/mgat.hpp"
#include "mrefg/trainer.hpp"

namespace mrefg {

struct CheckpointData {
  std::map<std::string, std::string> config;   // flat key=value entries
  std::vector<std::string> relations;          // label strings in index order
  std::vector<std::string> tokens, pos, ner;   // encoder vocabularies
  std::map<std::string, ad::Mat> encoder_state;
  std::map<std::string, ad::Mat> mgat_state;
};

// JSON on disk; includes a hash of the canonical config for provenance.
void save_checkpoint(const CheckpointData& data, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

CheckpointData snapshot(SemiSupervisedRunner& runner);

std::unique_ptr<Encoder> restore_encoder(const CheckpointData& data);
std::unique_ptr<Mgat> restore_mgat(const CheckpointData& data, int input_dim);
RelationVocab restore_relations(const CheckpointData& data);

}  // namespace mrefg
