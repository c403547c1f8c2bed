#include "rger/mine.hpp"

#include <algorithm>
#include <cmath>

#include "rger/errors.hpp"
#include "rger/ops.hpp"

namespace rger::mine {

using namespace rger::ops;

StatisticsNetwork StatisticsNetwork::init(const StatisticsNetworkConfig& cfg, Rng& rng) {
  StatisticsNetwork net;
  net.cfg = cfg;
  const int h = cfg.hidden;
  const auto xavier = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
  net.w_lang = Tensor::randn(cfg.d_lang, h, xavier(cfg.d_lang), rng, true);
  net.w_tuned = Tensor::randn(cfg.d_tuned, h, xavier(cfg.d_tuned), rng, true);
  net.w_audio = Tensor::randn(cfg.d_audio, h, xavier(cfg.d_audio), rng, true);
  // small positive bias: an all-zero input row (clean speech) must not land
  // the relu pre-activations exactly on the kink
  net.b_in = Tensor::full(1, h, 0.01, true);
  net.w1 = Tensor::randn(h, h, xavier(h), rng, true);
  net.b1 = Tensor::full(1, h, 0.01, true);
  net.w2 = Tensor::randn(h, 1, xavier(h), rng, true);
  net.b2 = Tensor::zeros(1, 1, true);
  return net;
}

std::vector<Tensor> StatisticsNetwork::parameters() const {
  return {w_lang, w_tuned, w_audio, b_in, w1, b1, w2, b2};
}

Tensor StatisticsNetwork::forward(const Tensor& lang, const Tensor& audio, LangKind kind) const {
  const Tensor& wl = kind == LangKind::Raw ? w_lang : w_tuned;
  if (lang.cols() != wl.rows())
    throw ContractError("statistics network: language input has dimension " +
                        std::to_string(lang.cols()) + ", expected " + std::to_string(wl.rows()));
  if (audio.cols() != w_audio.rows())
    throw ContractError("statistics network: audio input has dimension " +
                        std::to_string(audio.cols()) + ", expected " +
                        std::to_string(w_audio.rows()));
  if (lang.rows() != audio.rows())
    throw ContractError("statistics network: batch sizes differ");

  Tensor h0 = add(add(matmul(lang, wl), matmul(audio, w_audio)), b_in);
  Tensor h1 = relu(h0);
  Tensor h2 = relu(add(matmul(h1, w1), b1));
  Tensor out = add(matmul(h2, w2), b2);
  if (cfg.activation == Activation::Sigmoid) out = sigmoid(out);
  return out;
}

double statistics_forward(const StatisticsNetwork& net, const std::vector<double>& lang,
                          const std::vector<double>& audio, LangKind kind) {
  NoGradGuard ng;
  Tensor l = Tensor::row(lang);
  Tensor a = Tensor::row(audio);
  return net.forward(l, a, kind).item();
}

EmbeddingTuner EmbeddingTuner::init(int d_model, int d_embed, Rng& rng) {
  EmbeddingTuner t;
  t.weight = Tensor::randn(d_model, d_embed, 1.0 / std::sqrt(static_cast<double>(d_embed)), rng, true);
  return t;
}

EmbeddingTuner EmbeddingTuner::identity(int d) {
  EmbeddingTuner t;
  t.weight = Tensor::zeros(d, d, true);
  for (int i = 0; i < d; ++i) t.weight.at(i, i) = 1.0;
  return t;
}

Tensor EmbeddingTuner::apply(const Tensor& embedding) const {
  if (embedding.cols() != weight.cols())
    throw ContractError("tuner: embedding dimension " + std::to_string(embedding.cols()) +
                        " does not match weight columns " + std::to_string(weight.cols()));
  return matmul(embedding, transpose(weight));
}

Tensor tune_embedding(const EmbeddingTuner& tuner, const Tensor& embedding) {
  return tuner.apply(embedding);
}

Tensor pool_noise_embedding(const lang_noise::NoiseEmbedding& e) {
  if (!e.combined.defined() || e.combined.rows() == 0)
    throw ContractError("pool_noise_embedding: empty embedding");
  return mean_rows(e.combined);
}

Tensor mine_objective(const StatisticsNetwork& net, const MiBatch& batch, LangKind kind) {
  const int b = batch.batch_size();
  if (b < 2) throw ContractError("mine_objective: batch size must be at least 2");
  if (batch.noisy.rows() != b || batch.clean.rows() != b)
    throw ContractError("mine_objective: batch components have different lengths");

  Tensor joint = net.forward(batch.lang, batch.noisy, kind);
  Tensor marginal = net.forward(batch.lang, batch.clean, kind);

  // log mean exp with a constant max shift for stability
  double mx = marginal.data()[0];
  for (double v : marginal.data()) mx = std::max(mx, v);
  Tensor shift = Tensor::scalar(mx);
  Tensor lme = add(log(mean_all(exp(sub(marginal, shift)))), shift);
  return sub(mean_all(joint), lme);
}

double mine_train_step(StatisticsNetwork& net, const MiBatch& batch, AdamW& optimizer,
                       LangKind kind) {
  Tensor objective = mine_objective(net, batch, kind);
  optimizer.zero_grad();
  backward(objective);
  optimizer.step(StepDirection::Ascent);
  return objective.item();
}

Tensor distill_regularizer(const StatisticsNetwork& net, const Tensor& tuned_pooled,
                           const Tensor& noisy) {
  return mean_all(net.forward(tuned_pooled, noisy, LangKind::Tuned));
}

}  // namespace rger::mine
