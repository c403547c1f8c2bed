#pragma once

#include <vector>

#include "rger/noise_embedding.hpp"
#include "rger/optim.hpp"
#include "rger/tensor.hpp"

namespace rger::mine {

enum class Activation { Sigmoid, Identity };
enum class LangKind { Raw, Tuned };

struct StatisticsNetworkConfig {
  int d_lang = 384;   // raw pooled noise embedding
  int d_tuned = 64;   // tuned embedding ("extra interface")
  int d_audio = 64;
  int hidden = 256;
  Activation activation = Activation::Sigmoid;
};

// Donsker-Varadhan statistics network: language and audio inputs are
// projected to the shared hidden width and added, then scored by an MLP.
struct StatisticsNetwork {
  StatisticsNetworkConfig cfg;
  Tensor w_lang;   // d_lang x H
  Tensor w_tuned;  // d_tuned x H
  Tensor w_audio;  // d_audio x H
  Tensor b_in;     // 1 x H
  Tensor w1, b1;   // H x H, 1 x H
  Tensor w2, b2;   // H x 1, 1 x 1

  static StatisticsNetwork init(const StatisticsNetworkConfig& cfg, Rng& rng);
  std::vector<Tensor> parameters() const;

  // Batched scores: lang B x (d_lang|d_tuned), audio B x d_audio -> B x 1.
  Tensor forward(const Tensor& lang, const Tensor& audio, LangKind kind) const;
};

// Convenience single-pair score.
double statistics_forward(const StatisticsNetwork& net, const std::vector<double>& lang,
                          const std::vector<double>& audio, LangKind kind);

// Linear, bias-free modulation of the noise embedding rows: D_model x D_embed.
struct EmbeddingTuner {
  Tensor weight;

  static EmbeddingTuner init(int d_model, int d_embed, Rng& rng);
  static EmbeddingTuner identity(int d);

  // E: U x D_embed -> U x D_model
  Tensor apply(const Tensor& embedding) const;
};

Tensor tune_embedding(const EmbeddingTuner& tuner, const Tensor& embedding);

// Mean over the N(N-1) combined rows.
Tensor pool_noise_embedding(const lang_noise::NoiseEmbedding& e);

struct MiBatch {
  Tensor lang;   // B x D (pooled language embeddings)
  Tensor noisy;  // B x d_audio
  Tensor clean;  // B x d_audio

  int batch_size() const { return lang.rows(); }
};

// DV lower-bound estimate: mean joint score minus log mean exp marginal
// score. Joint pairs use noisy audio, marginal pairs clean audio.
Tensor mine_objective(const StatisticsNetwork& net, const MiBatch& batch,
                      LangKind kind = LangKind::Raw);

// One gradient-ascent step on the statistics network only. Returns the
// objective value before the step.
double mine_train_step(StatisticsNetwork& net, const MiBatch& batch, AdamW& optimizer,
                       LangKind kind = LangKind::Raw);

// First DV term re-evaluated through the tuned-language entry point:
// mean_b psi(tuned_pooled_b, noisy_b). Differentiable wrt the tuner.
Tensor distill_regularizer(const StatisticsNetwork& net, const Tensor& tuned_pooled,
                           const Tensor& noisy);

}  // namespace rger::mine
