#pragma once

#include <array>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mrefg/corpus.hpp"

namespace mrefg {

// Micro-averaged precision/recall/F1 over all classes except no_relation.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::map<std::string, std::array<long, 3>> per_class;  // label -> {tp, fp, fn}
};

// `predictions` and `gold` must cover exactly the same sample ids.
Metrics score(const std::map<std::string, std::string>& predictions,
              const std::map<std::string, std::string>& gold, const RelationVocab& vocab);

struct IterationRecord {
  int iteration = 0;
  Metrics dev;
  Metrics test;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  int labeled_size = 0;
  int pool_size = 0;                       // after this iteration's promotion
  int agreeing = 0;                        // pool samples where both modules agree
  int augmented = 0;                       // samples promoted this iteration
  double augmentation_precision = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, std::string>> selected;  // (id, pseudo label)
  std::map<std::string, double> beta;      // graph name -> fusion weight
  std::map<std::string, long> edge_counts; // graph name -> edge count
};

using TrainHistory = std::vector<IterationRecord>;

// One JSON object per line; doubles survive a round trip exactly.
void write_run_log(const TrainHistory& history, const std::string& path);
TrainHistory read_run_log(const std::string& path);

// Writes curves.tsv plus SVG line charts (F1 and labeled-set growth over
// iterations) under out_dir.
void emit_curves(const TrainHistory& history, const std::string& out_dir);

}  // namespace mrefg
