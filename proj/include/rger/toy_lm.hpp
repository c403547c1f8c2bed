#pragma once

#include <string>
#include <vector>

#include "rger/tensor.hpp"

namespace rger::toy_lm {

struct ToyLMConfig {
  int layers = 4;
  int adapted_layers = 3;  // top layers carrying prompts; first layer never adapted
  int heads = 4;
  int d_model = 64;
  int vocab = 0;
  int block = 256;
  int prompt_len = 20;  // U = N(N-1)
  bool per_head_gate = true;

  void validate() const;
};

// Trainable adapter state for one layer: prompt rows, the zero-initialized
// attention gate, and the zero-initialized denoise gate.
struct AdapterPromptLayer {
  Tensor prompt;     // U x D
  Tensor attn_gate;  // heads x 1 (per-head) or 1 x 1
  Tensor dn_gate;    // 1 x 1
};

struct LayerWeights {
  Tensor wq, wk, wv, wo;      // D x D
  Tensor ln1_gain, ln1_bias;  // 1 x D
  Tensor w1, b1;              // D x 4D, 1 x 4D
  Tensor w2, b2;              // 4D x D, 1 x D
  Tensor ln2_gain, ln2_bias;  // 1 x D
};

// G_l - g_l^dn * tuned; the subtraction is the denoise of the prompt.
Tensor denoised_prompt(const AdapterPromptLayer& layer, const Tensor& tuned);

// Gated two-segment prompt attention: causal softmax over token scores,
// separate softmax over prompt scores scaled by the gate, summed per head.
// `hidden` is the normalized layer input; `prompt` may be undefined.
Tensor prompted_attention(const LayerWeights& w, const AdapterPromptLayer* adapter,
                          const Tensor& hidden, const Tensor& prompt, int heads);

struct ToyLM {
  ToyLMConfig cfg;
  Tensor tok_emb;  // V x D
  Tensor pos_emb;  // block x D
  std::vector<LayerWeights> blocks;
  Tensor lnf_gain, lnf_bias;
  Tensor head;  // D x V
  std::vector<AdapterPromptLayer> adapters;  // indexed by layer; unused below cutoff

  static ToyLM init(const ToyLMConfig& cfg, Rng& rng);

  bool layer_adapted(int layer) const { return layer >= cfg.layers - cfg.adapted_layers; }

  std::vector<Tensor> base_params() const;     // frozen during adapter tuning
  std::vector<Tensor> adapter_params() const;  // the upsilon set
  void set_base_requires_grad(bool rg);
  void set_adapter_requires_grad(bool rg);

  // Logits for every position (T x V). `tuned` carries T_omega(E_LN) rows for
  // the denoised path, or stays undefined for the plain GER path. With
  // use_adapters=false the forward is the frozen base model.
  Tensor forward(const std::vector<int>& tokens, const Tensor& tuned = {},
                 bool use_adapters = true) const;

  // Sum of per-token NLL over the reference positions (teacher forcing); the
  // prompt positions carry no loss.
  Tensor h2t_loss(const std::vector<int>& prompt, const std::vector<int>& reference,
                  const Tensor& tuned = {}, bool use_adapters = true) const;

  // Greedy continuation until eos or max_len tokens; returns the emitted ids.
  std::vector<int> generate(const std::vector<int>& prompt, int max_len, int eos_id,
                            const Tensor& tuned = {}, bool use_adapters = true) const;
};

}  // namespace rger::toy_lm
