#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rger/checkpoint.hpp"
#include "rger/embedder.hpp"
#include "rger/nbest.hpp"

namespace rger::pipeline {

// Deterministic serialization of an N-best list into prompt token ids:
// hypotheses in rank order with separator tokens, then the output marker.
//   HYP1: <h1> | HYP2: <h2> | ... OUT:
std::vector<int> build_prompt(const NBestList& list, const CharVocab& vocab);

struct TrainConfig {
  double lambda = 0.5;
  int batch = 4;        // micro-batch B
  int accum = 8;        // gradient accumulation steps
  int iterations = 100; // M
  double lr = 1e-2;
  double mine_lr_ratio = 0.1;
  double weight_decay = 0.02;
  double warmup_frac = 0.2;  // of one epoch's steps
  std::uint64_t seed = 0;
  bool freeze_dn_gates = false;

  void validate() const;
  int effective_batch() const { return batch * accum; }
};

enum class TrainMode { Ger, RobustGer };

struct IterationTrace {
  int iteration = 0;
  double lr = 0.0;
  double h2t_loss = 0.0;
  double mi_estimate = 0.0;  // NaN outside the robustger mode
  double i1 = 0.0;           // NaN when unused
  std::uint64_t theta_start = 0, theta_after_mine = 0, theta_after_ger = 0;
  std::uint64_t upsilon_omega_start = 0, upsilon_omega_after_mine = 0, upsilon_omega_after_ger = 0;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_iteration(const IterationTrace&) {}
};

// Fresh state; robustger also carries the tuner and MINE network. Parameter
// init draws from named sub-streams of `seed` so both modes share base and
// adapter initialization.
TrainState make_state(const toy_lm::ToyLMConfig& cfg, TrainMode mode, std::uint64_t seed,
                      int d_embed = 384, int d_audio = 64, int mine_hidden = 256);

// Full-model warmup on the plain GER objective (no adapters). Stands in for
// the pretrained LM the adapter tuning assumes.
void pretrain_base(TrainState& state, const Dataset& data, const TrainConfig& cfg,
                   TraceSink* sink = nullptr);

// Adapter-phase training. ger: Eq.-2 descent on the adapters, base frozen.
// robustger: per iteration, MINE ascent on theta, then descent on
// (upsilon, omega) against L_H2T - lambda * I1. Base weights stay
// bit-identical in both modes.
void train(TrainState& state, const Dataset& data, const TrainConfig& cfg, TrainMode mode,
           TraceSink* sink = nullptr);

struct EvalRow {
  std::string condition;
  int utterances = 0;
  double baseline = 0.0;
  double ger = 0.0;
  double robust = 0.0;
  double o_nb = 0.0;
  double o_cp = 0.0;
  double rr_ger = 0.0;
  double rr_robust = 0.0;
  bool has_ger = false;
  bool has_robust = false;
};

struct EvalOptions {
  const TrainState* ger_state = nullptr;
  const TrainState* robust_state = nullptr;
  int threads = 1;
  int max_generate = 96;
};

// Per-condition corpus-level WERs plus an unweighted avg row (when more than
// one condition). Generation fans out across utterances; results merge
// deterministically by utterance index.
std::vector<EvalRow> evaluate(const Dataset& data, const EvalOptions& opts,
                              std::vector<std::string>* warnings = nullptr);

enum class EvalMode { Baseline1Best, Ger, RobustGer };
std::vector<EvalRow> evaluate_mode(const TrainState* state, const Dataset& data, EvalMode mode,
                                   int threads = 1);

// condition,baseline,ger,robustger,o_nb,o_cp,rr_ger,rr_robustger
void write_results_csv(const std::vector<EvalRow>& rows, std::ostream& out);

// One row per utterance: id, condition, pooled raw noise embedding, pooled
// tuned embedding when a tuner is given.
void export_embeddings(const Dataset& data, const TextEmbedder& embedder,
                       const mine::EmbeddingTuner* tuner, std::ostream& out);

}  // namespace rger::pipeline
