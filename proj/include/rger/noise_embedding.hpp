#pragma once

#include <string>
#include <vector>

#include "rger/alignment.hpp"
#include "rger/embedder.hpp"
#include "rger/nbest.hpp"
#include "rger/tensor.hpp"

namespace rger::lang_noise {

// Language-space noise embedding of an N-best list: utterance-level sentence
// embedding differences stacked over token-level edit embeddings, both in the
// canonical pair order (i = 2..N outer, j = 1..i-1 inner, lower rank minus
// higher rank).
struct NoiseEmbedding {
  Tensor utt_block;  // N(N-1)/2 x D
  Tensor tok_block;  // N(N-1)/2 x D
  Tensor combined;   // N(N-1) x D, utterance rows first
  int n = 0;

  double frobenius_norm() const;
};

std::vector<double> embed_utterance(const TextEmbedder& embedder, const std::string& textval);
std::vector<double> embed_token(const TextEmbedder& embedder, const std::string& token);

// Rows are E(Y_i) - E(Y_j) for i > j. Requires N >= 2.
Tensor utterance_noise_embedding(const NBestList& list, const TextEmbedder& embedder);

// Edit embeddings over a validated aligned matrix: row(i,j) is the summed
// per-slot token embedding difference. Requires N >= 2.
Tensor token_noise_embedding(const alignment::AlignedNBest& aligned, const TextEmbedder& embedder);

NoiseEmbedding extract_noise_embedding(const NBestList& list, const TextEmbedder& embedder);

}  // namespace rger::lang_noise
