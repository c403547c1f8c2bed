#pragma once

#include <string>
#include <vector>

#include "rger/alignment.hpp"
#include "rger/nbest.hpp"

namespace rger::metrics {

using TokenSeq = std::vector<std::string>;

// Levenshtein with unit costs and the alignment module's deterministic
// tie-breaking. Returns (distance, S, D, I, hits).
alignment::EditCounts edit_distance(const TokenSeq& reference, const TokenSeq& hypothesis);

struct WerReport {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int hits = 0;
  int reference_length = 0;
  double wer = 0.0;

  int errors() const { return substitutions + deletions + insertions; }
  // percent rounded to one decimal, as reported in result tables
  double percent() const;
};

WerReport wer(const TokenSeq& reference, const TokenSeq& hypothesis);
WerReport wer(const std::string& reference, const std::string& hypothesis);

struct OraclePair {
  WerReport o_nb;
  WerReport o_cp;
};

// WER of the best single candidate; ties broken by lower rank index.
WerReport oracle_nbest(const NBestList& list);

// Best achievable WER composing, per aligned slot, one of the tokens that
// occur in that slot across hypotheses (or epsilon), scored against the
// reference by dynamic programming over the sausage.
WerReport oracle_compositional(const NBestList& list);

OraclePair oracles(const NBestList& list);

// (system - baseline) / baseline; negative = improvement.
double relative_wer_reduction(double baseline, double system);

// round to one decimal (for percent comparisons against reported tables)
double round1(double x);

}  // namespace rger::metrics
