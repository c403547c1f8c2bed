#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace rger {

// One hypotheses-transcription record: ranked hypotheses, reference, noise
// metadata and surrogate audio embeddings. The unit of all processing.
struct NBestList {
  std::string id;
  std::vector<std::string> hypotheses;  // rank 1 first
  std::vector<double> scores;           // weakly descending with rank
  std::string reference;
  std::string noise_type;                       // empty = unlabeled
  double snr_db = std::numeric_limits<double>::infinity();  // +inf = clean
  std::vector<double> audio_emb_noisy;  // empty = absent
  std::vector<double> audio_emb_clean;
  // Unknown corpus fields, preserved verbatim on roundtrip (raw JSON text).
  std::map<std::string, std::string> extras;

  int n() const { return static_cast<int>(hypotheses.size()); }
  bool has_audio() const { return !audio_emb_noisy.empty() && !audio_emb_clean.empty(); }
  bool is_clean() const { return std::isinf(snr_db) && snr_db > 0; }

  std::string condition() const {
    if (is_clean()) return noise_type.empty() ? "clean" : noise_type + "/clean";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%gdB", snr_db);
    return (noise_type.empty() ? std::string("noise") : noise_type) + "/" + buf;
  }
};

using Dataset = std::vector<NBestList>;

}  // namespace rger
