#include "rger/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "rger/errors.hpp"

namespace rger::pipeline {

using json = nlohmann::ordered_json;

namespace {

json tensor_to_json(const Tensor& t) {
  json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["data"] = t.data();
  return j;
}

Tensor tensor_from_json(const json& j, const std::string& name, int rows, int cols,
                        bool requires_grad) {
  if (!j.contains(name)) throw DataError("checkpoint: missing tensor \"" + name + "\"");
  const json& tj = j.at(name);
  const int r = tj.at("rows").get<int>();
  const int c = tj.at("cols").get<int>();
  if (r != rows || c != cols)
    throw DataError("checkpoint: tensor \"" + name + "\" has shape " + std::to_string(r) + "x" +
                    std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  auto data = tj.at("data").get<std::vector<double>>();
  return Tensor::from(rows, cols, std::move(data), requires_grad);
}

void put_model(json& tensors, const toy_lm::ToyLM& m) {
  tensors["emb.tok"] = tensor_to_json(m.tok_emb);
  tensors["emb.pos"] = tensor_to_json(m.pos_emb);
  for (int l = 0; l < m.cfg.layers; ++l) {
    const auto& b = m.blocks[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    tensors[p + "wq"] = tensor_to_json(b.wq);
    tensors[p + "wk"] = tensor_to_json(b.wk);
    tensors[p + "wv"] = tensor_to_json(b.wv);
    tensors[p + "wo"] = tensor_to_json(b.wo);
    tensors[p + "ln1_gain"] = tensor_to_json(b.ln1_gain);
    tensors[p + "ln1_bias"] = tensor_to_json(b.ln1_bias);
    tensors[p + "w1"] = tensor_to_json(b.w1);
    tensors[p + "b1"] = tensor_to_json(b.b1);
    tensors[p + "w2"] = tensor_to_json(b.w2);
    tensors[p + "b2"] = tensor_to_json(b.b2);
    tensors[p + "ln2_gain"] = tensor_to_json(b.ln2_gain);
    tensors[p + "ln2_bias"] = tensor_to_json(b.ln2_bias);
    if (m.layer_adapted(l)) {
      const auto& a = m.adapters[l];
      tensors[p + "adapter.prompt"] = tensor_to_json(a.prompt);
      tensors[p + "adapter.attn_gate"] = tensor_to_json(a.attn_gate);
      tensors[p + "adapter.dn_gate"] = tensor_to_json(a.dn_gate);
    }
  }
  tensors["final.ln_gain"] = tensor_to_json(m.lnf_gain);
  tensors["final.ln_bias"] = tensor_to_json(m.lnf_bias);
  tensors["final.head"] = tensor_to_json(m.head);
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
  const auto& cfg = state.model.cfg;
  json j;
  j["format"] = "rger-checkpoint-v1";
  json jc;
  jc["layers"] = cfg.layers;
  jc["adapted_layers"] = cfg.adapted_layers;
  jc["heads"] = cfg.heads;
  jc["d_model"] = cfg.d_model;
  jc["vocab"] = cfg.vocab;
  jc["block"] = cfg.block;
  jc["prompt_len"] = cfg.prompt_len;
  jc["per_head_gate"] = cfg.per_head_gate;
  j["config"] = jc;
  j["vocab_chars"] = state.vocab.chars;
  j["d_embed"] = state.d_embed;
  j["d_audio"] = state.d_audio;
  j["has_distill"] = state.has_distill;

  json tensors;
  put_model(tensors, state.model);
  if (state.has_distill) {
    tensors["tuner.weight"] = tensor_to_json(state.tuner.weight);
    const auto& net = state.mine_net;
    j["mine_hidden"] = net.cfg.hidden;
    j["mine_activation"] = net.cfg.activation == mine::Activation::Sigmoid ? "sigmoid" : "identity";
    tensors["mine.w_lang"] = tensor_to_json(net.w_lang);
    tensors["mine.w_tuned"] = tensor_to_json(net.w_tuned);
    tensors["mine.w_audio"] = tensor_to_json(net.w_audio);
    tensors["mine.b_in"] = tensor_to_json(net.b_in);
    tensors["mine.w1"] = tensor_to_json(net.w1);
    tensors["mine.b1"] = tensor_to_json(net.b1);
    tensors["mine.w2"] = tensor_to_json(net.w2);
    tensors["mine.b2"] = tensor_to_json(net.b2);
  }
  j["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out << j.dump() << '\n';
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint: " + path + ": " + e.what());
  }
  if (!j.contains("format") || j.at("format").get<std::string>() != "rger-checkpoint-v1")
    throw DataError("checkpoint: " + path + " has unknown format");

  TrainState state;
  const json& jc = j.at("config");
  toy_lm::ToyLMConfig cfg;
  cfg.layers = jc.at("layers").get<int>();
  cfg.adapted_layers = jc.at("adapted_layers").get<int>();
  cfg.heads = jc.at("heads").get<int>();
  cfg.d_model = jc.at("d_model").get<int>();
  cfg.vocab = jc.at("vocab").get<int>();
  cfg.block = jc.at("block").get<int>();
  cfg.prompt_len = jc.at("prompt_len").get<int>();
  cfg.per_head_gate = jc.at("per_head_gate").get<bool>();
  cfg.validate();

  state.vocab.chars = j.at("vocab_chars").get<std::string>();
  if (state.vocab.size() != cfg.vocab)
    throw DataError("checkpoint: vocabulary does not match configured size");
  state.d_embed = j.at("d_embed").get<int>();
  state.d_audio = j.at("d_audio").get<int>();

  const json& tensors = j.at("tensors");
  const int d = cfg.d_model;
  toy_lm::ToyLM& m = state.model;
  m.cfg = cfg;
  m.tok_emb = tensor_from_json(tensors, "emb.tok", cfg.vocab, d, true);
  m.pos_emb = tensor_from_json(tensors, "emb.pos", cfg.block, d, true);
  m.blocks.resize(cfg.layers);
  m.adapters.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    auto& b = m.blocks[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    b.wq = tensor_from_json(tensors, p + "wq", d, d, true);
    b.wk = tensor_from_json(tensors, p + "wk", d, d, true);
    b.wv = tensor_from_json(tensors, p + "wv", d, d, true);
    b.wo = tensor_from_json(tensors, p + "wo", d, d, true);
    b.ln1_gain = tensor_from_json(tensors, p + "ln1_gain", 1, d, true);
    b.ln1_bias = tensor_from_json(tensors, p + "ln1_bias", 1, d, true);
    b.w1 = tensor_from_json(tensors, p + "w1", d, 4 * d, true);
    b.b1 = tensor_from_json(tensors, p + "b1", 1, 4 * d, true);
    b.w2 = tensor_from_json(tensors, p + "w2", 4 * d, d, true);
    b.b2 = tensor_from_json(tensors, p + "b2", 1, d, true);
    b.ln2_gain = tensor_from_json(tensors, p + "ln2_gain", 1, d, true);
    b.ln2_bias = tensor_from_json(tensors, p + "ln2_bias", 1, d, true);
    if (m.layer_adapted(l)) {
      auto& a = m.adapters[l];
      a.prompt = tensor_from_json(tensors, p + "adapter.prompt", cfg.prompt_len, d, true);
      a.attn_gate =
          tensor_from_json(tensors, p + "adapter.attn_gate", cfg.per_head_gate ? cfg.heads : 1, 1, true);
      a.dn_gate = tensor_from_json(tensors, p + "adapter.dn_gate", 1, 1, true);
    }
  }
  m.lnf_gain = tensor_from_json(tensors, "final.ln_gain", 1, d, true);
  m.lnf_bias = tensor_from_json(tensors, "final.ln_bias", 1, d, true);
  m.head = tensor_from_json(tensors, "final.head", d, cfg.vocab, true);

  state.has_distill = j.value("has_distill", false);
  if (state.has_distill) {
    state.tuner.weight = tensor_from_json(tensors, "tuner.weight", d, state.d_embed, true);
    mine::StatisticsNetworkConfig mc;
    mc.d_lang = state.d_embed;
    mc.d_tuned = d;
    mc.d_audio = state.d_audio;
    mc.hidden = j.at("mine_hidden").get<int>();
    mc.activation = j.at("mine_activation").get<std::string>() == "identity"
                        ? mine::Activation::Identity
                        : mine::Activation::Sigmoid;
    auto& net = state.mine_net;
    net.cfg = mc;
    net.w_lang = tensor_from_json(tensors, "mine.w_lang", mc.d_lang, mc.hidden, true);
    net.w_tuned = tensor_from_json(tensors, "mine.w_tuned", mc.d_tuned, mc.hidden, true);
    net.w_audio = tensor_from_json(tensors, "mine.w_audio", mc.d_audio, mc.hidden, true);
    net.b_in = tensor_from_json(tensors, "mine.b_in", 1, mc.hidden, true);
    net.w1 = tensor_from_json(tensors, "mine.w1", mc.hidden, mc.hidden, true);
    net.b1 = tensor_from_json(tensors, "mine.b1", 1, mc.hidden, true);
    net.w2 = tensor_from_json(tensors, "mine.w2", mc.hidden, 1, true);
    net.b2 = tensor_from_json(tensors, "mine.b2", 1, 1, true);
  }
  return state;
}

}  // namespace rger::pipeline
