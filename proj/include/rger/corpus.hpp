#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rger/nbest.hpp"
#include "rger/rng.hpp"

namespace rger::corpus {

// Controllable noisy channel standing in for ASR decoding of noisy speech.
// The effective per-token error rate is r0 * 2^(-snr/10), strictly
// decreasing in SNR; +inf SNR is the clean channel.
struct NoiseChannelSpec {
  std::string noise_type = "babble";
  double snr_db = 10.0;
  double base_error_rate = 0.25;  // r0
  double sub_fraction = 0.8;
  double del_fraction = 0.1;
  double ins_fraction = 0.1;
  double rank_noise = 0.01;  // score jitter producing rank diversity
  int n = 5;
  int d_audio = 64;

  double error_rate() const {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return base_error_rate * std::pow(2.0, -snr_db / 10.0);
  }
  bool clean() const { return std::isinf(snr_db) && snr_db > 0; }
};

// Vocabulary the channel draws confusables from; neighbors are words at
// character edit distance exactly 1.
class WordPool {
 public:
  static WordPool from_words(std::vector<std::string> words);
  static WordPool from_sentences(const std::vector<std::string>& sentences);
  // Small built-in pool of short words with dense confusable neighborhoods.
  static const WordPool& builtin();

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& neighbors(const std::string& word) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::vector<std::string>> neighbors_;
  std::vector<std::string> empty_;
};

// Samples one N-best list from the channel. Hypotheses are drawn
// independently per rank and sorted by score (error count plus jitter);
// duplicates are expected, and the clean channel yields N copies of the
// reference.
NBestList corrupt(const std::string& reference, const NoiseChannelSpec& spec,
                  const WordPool& pool, Rng rng);

// (noisy, clean) surrogate audio embeddings: clean is a deterministic
// content embedding; noisy adds a noise-type direction scaled by a strictly
// SNR-decreasing magnitude, plus small per-utterance jitter.
std::pair<std::vector<double>, std::vector<double>> audio_embed_surrogate(
    const std::string& reference, const NoiseChannelSpec& spec, Rng rng);

// Full record: corrupt + audio surrogates + metadata.
NBestList make_record(const std::string& id, const std::string& reference,
                      const NoiseChannelSpec& spec, const WordPool& pool, Rng rng);

// Per-utterance seed streams derived from (seed, index); output order is
// deterministic by index.
Dataset generate(const std::vector<std::string>& references, const NoiseChannelSpec& spec,
                 const WordPool& pool, std::uint64_t seed, const std::string& id_prefix);

// JSON Lines interchange. write(read(path)) is the identity field-for-field;
// unknown fields are preserved.
Dataset read_corpus(const std::string& path);
void write_corpus(const Dataset& dataset, const std::string& path);

// Synthetic reference sentences from the built-in pool.
std::vector<std::string> sample_references(int count, int min_words, int max_words, Rng rng);

}  // namespace rger::corpus
