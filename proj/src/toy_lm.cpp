#include "rger/toy_lm.hpp"

#include <cmath>

#include "rger/errors.hpp"
#include "rger/ops.hpp"

namespace rger::toy_lm {

using namespace rger::ops;

void ToyLMConfig::validate() const {
  if (layers < 1) throw ContractError("toy lm: need at least one layer");
  if (adapted_layers > layers - 1)
    throw ContractError("toy lm: adapted layers must leave the first layer untouched");
  if (d_model % heads != 0) throw ContractError("toy lm: d_model must be divisible by heads");
  if (vocab < 2) throw ContractError("toy lm: vocabulary too small");
}

Tensor denoised_prompt(const AdapterPromptLayer& layer, const Tensor& tuned) {
  if (!tuned.defined()) return layer.prompt;
  if (tuned.rows() != layer.prompt.rows() || tuned.cols() != layer.prompt.cols())
    throw ContractError("denoised_prompt: tuned embedding is " + std::to_string(tuned.rows()) +
                        "x" + std::to_string(tuned.cols()) + ", prompt is " +
                        std::to_string(layer.prompt.rows()) + "x" +
                        std::to_string(layer.prompt.cols()));
  return sub(layer.prompt, scale(tuned, layer.dn_gate));
}

Tensor prompted_attention(const LayerWeights& w, const AdapterPromptLayer* adapter,
                          const Tensor& hidden, const Tensor& prompt, int heads) {
  const int d = hidden.cols();
  const int dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = matmul(hidden, w.wq);
  Tensor k = matmul(hidden, w.wk);
  Tensor v = matmul(hidden, w.wv);
  Tensor kp, vp;
  if (prompt.defined()) {
    kp = matmul(prompt, w.wk);
    vp = matmul(prompt, w.wv);
  }

  std::vector<Tensor> head_outs;
  head_outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * dh, c1 = (h + 1) * dh;
    Tensor qh = slice_cols(q, c0, c1);
    Tensor kh = slice_cols(k, c0, c1);
    Tensor vh = slice_cols(v, c0, c1);

    Tensor probs_tok = causal_softmax(scale(matmul(qh, transpose(kh)), inv_sqrt));
    Tensor out_h = matmul(probs_tok, vh);

    if (prompt.defined()) {
      Tensor kph = slice_cols(kp, c0, c1);
      Tensor vph = slice_cols(vp, c0, c1);
      Tensor probs_p = softmax_rows(scale(matmul(qh, transpose(kph)), inv_sqrt));
      Tensor gate = adapter->attn_gate.rows() > 1
                        ? slice_rows(adapter->attn_gate, h, h + 1)
                        : adapter->attn_gate;
      out_h = add(out_h, matmul(scale(probs_p, gate), vph));
    }
    head_outs.push_back(out_h);
  }
  return matmul(concat_cols(head_outs), w.wo);
}

ToyLM ToyLM::init(const ToyLMConfig& cfg, Rng& rng) {
  cfg.validate();
  ToyLM m;
  m.cfg = cfg;
  const int d = cfg.d_model;
  const auto w_std = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };

  m.tok_emb = Tensor::randn(cfg.vocab, d, 0.1, rng, true);
  m.pos_emb = Tensor::randn(cfg.block, d, 0.1, rng, true);
  m.blocks.resize(cfg.layers);
  for (auto& b : m.blocks) {
    b.wq = Tensor::randn(d, d, w_std(d), rng, true);
    b.wk = Tensor::randn(d, d, w_std(d), rng, true);
    b.wv = Tensor::randn(d, d, w_std(d), rng, true);
    b.wo = Tensor::randn(d, d, w_std(d), rng, true);
    b.ln1_gain = Tensor::full(1, d, 1.0, true);
    b.ln1_bias = Tensor::zeros(1, d, true);
    b.w1 = Tensor::randn(d, 4 * d, w_std(d), rng, true);
    b.b1 = Tensor::zeros(1, 4 * d, true);
    b.w2 = Tensor::randn(4 * d, d, w_std(4 * d), rng, true);
    b.b2 = Tensor::zeros(1, d, true);
    b.ln2_gain = Tensor::full(1, d, 1.0, true);
    b.ln2_bias = Tensor::zeros(1, d, true);
  }
  m.lnf_gain = Tensor::full(1, d, 1.0, true);
  m.lnf_bias = Tensor::zeros(1, d, true);
  m.head = Tensor::randn(d, cfg.vocab, w_std(d), rng, true);

  m.adapters.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    if (!m.layer_adapted(l)) continue;
    auto& a = m.adapters[l];
    a.prompt = Tensor::randn(cfg.prompt_len, d, 0.02, rng, true);
    a.attn_gate = Tensor::zeros(cfg.per_head_gate ? cfg.heads : 1, 1, true);
    a.dn_gate = Tensor::zeros(1, 1, true);
  }
  return m;
}

std::vector<Tensor> ToyLM::base_params() const {
  std::vector<Tensor> out = {tok_emb, pos_emb};
  for (const auto& b : blocks) {
    for (const auto& t : {b.wq, b.wk, b.wv, b.wo, b.ln1_gain, b.ln1_bias, b.w1, b.b1, b.w2,
                          b.b2, b.ln2_gain, b.ln2_bias})
      out.push_back(t);
  }
  out.push_back(lnf_gain);
  out.push_back(lnf_bias);
  out.push_back(head);
  return out;
}

std::vector<Tensor> ToyLM::adapter_params() const {
  std::vector<Tensor> out;
  for (int l = 0; l < cfg.layers; ++l) {
    if (!layer_adapted(l)) continue;
    out.push_back(adapters[l].prompt);
    out.push_back(adapters[l].attn_gate);
    out.push_back(adapters[l].dn_gate);
  }
  return out;
}

void ToyLM::set_base_requires_grad(bool rg) {
  for (auto t : base_params()) t.set_requires_grad(rg);
}

void ToyLM::set_adapter_requires_grad(bool rg) {
  for (auto t : adapter_params()) t.set_requires_grad(rg);
}

Tensor ToyLM::forward(const std::vector<int>& tokens, const Tensor& tuned,
                      bool use_adapters) const {
  const int t = static_cast<int>(tokens.size());
  if (t == 0) throw ContractError("toy lm forward: empty input");
  if (t > cfg.block)
    throw ContractError("toy lm forward: input length " + std::to_string(t) +
                        " exceeds block size " + std::to_string(cfg.block));

  Tensor x = add(embed_lookup(tok_emb, tokens), slice_rows(pos_emb, 0, t));
  for (int l = 0; l < cfg.layers; ++l) {
    const auto& b = blocks[l];
    Tensor h = add(mul(layer_norm_rows(x), b.ln1_gain), b.ln1_bias);
    const bool adapted = use_adapters && layer_adapted(l);
    Tensor prompt;
    if (adapted) prompt = denoised_prompt(adapters[l], tuned);
    x = add(x, prompted_attention(b, adapted ? &adapters[l] : nullptr, h, prompt, cfg.heads));
    Tensor h2 = add(mul(layer_norm_rows(x), b.ln2_gain), b.ln2_bias);
    Tensor mlp = add(matmul(relu(add(matmul(h2, b.w1), b.b1)), b.w2), b.b2);
    x = add(x, mlp);
  }
  Tensor hf = add(mul(layer_norm_rows(x), lnf_gain), lnf_bias);
  return matmul(hf, head);
}

Tensor ToyLM::h2t_loss(const std::vector<int>& prompt, const std::vector<int>& reference,
                       const Tensor& tuned, bool use_adapters) const {
  if (reference.empty()) throw ContractError("h2t_loss: empty reference");
  if (prompt.empty()) throw ContractError("h2t_loss: empty prompt");

  std::vector<int> tokens = prompt;
  tokens.insert(tokens.end(), reference.begin(), reference.end());
  Tensor logits = forward(tokens, tuned, use_adapters);

  const int p = static_cast<int>(prompt.size());
  const int r = static_cast<int>(reference.size());
  Tensor ref_logits = slice_rows(logits, p - 1, p + r - 1);
  Tensor logp = pick_per_row(log_softmax_rows(ref_logits), reference);
  return scale(sum_all(logp), -1.0);
}

std::vector<int> ToyLM::generate(const std::vector<int>& prompt, int max_len, int eos_id,
                                 const Tensor& tuned, bool use_adapters) const {
  if (max_len < 1) throw ContractError("generate: max_len must be at least 1");
  NoGradGuard ng;
  std::vector<int> ids = prompt;
  std::vector<int> out;
  while (static_cast<int>(out.size()) < max_len && static_cast<int>(ids.size()) < cfg.block) {
    Tensor logits = forward(ids, tuned, use_adapters);
    const int last = logits.rows() - 1;
    int best = 0;
    double best_v = logits.at(last, 0);
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits.at(last, c) > best_v) {
        best_v = logits.at(last, c);
        best = c;
      }
    }
    if (best == eos_id) break;
    out.push_back(best);
    ids.push_back(best);
  }
  return out;
}

}  // namespace rger::toy_lm
