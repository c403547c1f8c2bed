#pragma once

#include <string>

#include "rger/mine.hpp"
#include "rger/toy_lm.hpp"
#include "rger/vocab.hpp"

namespace rger::pipeline {

// Everything a trained system carries: the toy LM (base + adapters), the
// vocabulary, and, for the distilled variant, the tuner and MINE network.
struct TrainState {
  toy_lm::ToyLM model;
  CharVocab vocab;
  bool has_distill = false;
  mine::EmbeddingTuner tuner;
  mine::StatisticsNetwork mine_net;
  int d_embed = 384;
  int d_audio = 64;
};

// Self-describing JSON container with named parameter tensors. Loading
// rejects mismatched shapes.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace rger::pipeline
