#include "rger/noise_embedding.hpp"

#include <cmath>
#include <unordered_map>

#include "rger/errors.hpp"
#include "rger/ops.hpp"
#include "rger/text.hpp"

namespace rger::lang_noise {

double NoiseEmbedding::frobenius_norm() const {
  double s = 0.0;
  for (double v : combined.data()) s += v * v;
  return std::sqrt(s);
}

std::vector<double> embed_utterance(const TextEmbedder& embedder, const std::string& textval) {
  return embedder.embed(text::join(text::tokenize(textval)));
}

std::vector<double> embed_token(const TextEmbedder& embedder, const std::string& token) {
  return embedder.embed(token);
}

Tensor utterance_noise_embedding(const NBestList& list, const TextEmbedder& embedder) {
  const int n = list.n();
  if (n < 2) throw ContractError("utterance_noise_embedding: need at least 2 hypotheses");
  const int d = embedder.dimension();

  std::vector<std::vector<double>> embs(n);
  for (int i = 0; i < n; ++i) embs[i] = embed_utterance(embedder, list.hypotheses[i]);

  const int pairs = n * (n - 1) / 2;
  Tensor out = Tensor::zeros(pairs, d);
  int row = 0;
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j, ++row)
      for (int c = 0; c < d; ++c) out.at(row, c) = embs[i][c] - embs[j][c];
  return out;
}

Tensor token_noise_embedding(const alignment::AlignedNBest& aligned, const TextEmbedder& embedder) {
  alignment::validate(aligned);
  const int n = aligned.n();
  if (n < 2) throw ContractError("token_noise_embedding: need at least 2 hypotheses");
  const int d = embedder.dimension();
  const int t = aligned.t();

  std::unordered_map<std::string, std::vector<double>> cache;
  const auto emb = [&](const std::string& tok) -> const std::vector<double>& {
    auto it = cache.find(tok);
    if (it == cache.end()) it = cache.emplace(tok, embed_token(embedder, tok)).first;
    return it->second;
  };

  const int pairs = n * (n - 1) / 2;
  Tensor out = Tensor::zeros(pairs, d);
  int row = 0;
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j, ++row) {
      for (int s = 0; s < t; ++s) {
        const std::string& ti = aligned.rows[i][s];
        const std::string& tj = aligned.rows[j][s];
        if (ti == tj) continue;  // matching slots contribute zero exactly
        const auto& ei = emb(ti);
        const auto& ej = emb(tj);
        for (int c = 0; c < d; ++c) out.at(row, c) += ei[c] - ej[c];
      }
    }
  return out;
}

NoiseEmbedding extract_noise_embedding(const NBestList& list, const TextEmbedder& embedder) {
  NoiseEmbedding e;
  e.n = list.n();
  e.utt_block = utterance_noise_embedding(list, embedder);
  e.tok_block = token_noise_embedding(alignment::align_nbest(list), embedder);
  e.combined = ops::concat_rows({e.utt_block, e.tok_block});
  return e;
}

}  // namespace rger::lang_noise
