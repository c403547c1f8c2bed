#include "rger/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rger/errors.hpp"
#include "rger/text.hpp"

namespace rger::metrics {

alignment::EditCounts edit_distance(const TokenSeq& reference, const TokenSeq& hypothesis) {
  return alignment::align_pair(reference, hypothesis).counts;
}

double WerReport::percent() const { return round1(wer * 100.0); }

WerReport wer(const TokenSeq& reference, const TokenSeq& hypothesis) {
  if (reference.empty()) throw ContractError("wer: empty reference makes WER undefined");
  const auto c = edit_distance(reference, hypothesis);
  WerReport r;
  r.substitutions = c.substitutions;
  r.deletions = c.deletions;
  r.insertions = c.insertions;
  r.hits = c.hits;
  r.reference_length = static_cast<int>(reference.size());
  r.wer = static_cast<double>(c.substitutions + c.deletions + c.insertions) / r.reference_length;
  return r;
}

WerReport wer(const std::string& reference, const std::string& hypothesis) {
  return wer(text::tokenize(reference), text::tokenize(hypothesis));
}

WerReport oracle_nbest(const NBestList& list) {
  if (list.reference.empty()) throw ContractError("oracle_nbest: list has no reference");
  if (list.hypotheses.empty()) throw ContractError("oracle_nbest: list has no hypotheses");
  const TokenSeq ref = text::tokenize(list.reference);
  WerReport best;
  bool have = false;
  for (const auto& h : list.hypotheses) {
    WerReport r = wer(ref, text::tokenize(h));
    if (!have || r.wer < best.wer) {
      best = r;
      have = true;
    }
  }
  return best;
}

WerReport oracle_compositional(const NBestList& list) {
  if (list.reference.empty()) throw ContractError("oracle_compositional: list has no reference");
  if (list.hypotheses.empty()) throw ContractError("oracle_compositional: list has no hypotheses");

  const TokenSeq ref = text::tokenize(list.reference);
  const int nref = static_cast<int>(ref.size());
  if (nref == 0) throw ContractError("oracle_compositional: reference has no tokens");

  const auto aligned = alignment::align_nbest(list);
  const int t = aligned.t();

  // Per-slot candidate sets (epsilon handled by the slot-skip transition).
  std::vector<std::vector<std::string>> cands(t);
  for (int c = 0; c < t; ++c) {
    std::unordered_set<std::string> seen;
    for (const auto& row : aligned.rows) {
      const std::string& tok = row[c];
      if (tok != alignment::kPad && seen.insert(tok).second) cands[c].push_back(tok);
    }
  }

  // d[s][j]: min edits after consuming slots [0, s) and ref tokens [0, j).
  // Transitions: skip slot (epsilon, free), delete ref token, or emit a slot
  // candidate matched against ref[j] (cost 0 when some candidate equals it).
  const int inf = 1 << 28;
  std::vector<std::vector<int>> d(t + 1, std::vector<int>(nref + 1, inf));
  // 0 = emit (match/sub), 1 = delete ref token, 2 = skip slot
  std::vector<std::vector<unsigned char>> from(t + 1, std::vector<unsigned char>(nref + 1, 255));
  d[0][0] = 0;
  for (int s = 0; s <= t; ++s)
    for (int j = 0; j <= nref; ++j) {
      const int cur = d[s][j];
      if (cur >= inf) continue;
      if (s < t && j < nref) {
        bool match = false;
        for (const auto& w : cands[s])
          if (w == ref[j]) {
            match = true;
            break;
          }
        const int cost = cur + (match ? 0 : 1);
        if (cost < d[s + 1][j + 1]) {
          d[s + 1][j + 1] = cost;
          from[s + 1][j + 1] = 0;
        }
      }
      if (j < nref && cur + 1 < d[s][j + 1]) {
        d[s][j + 1] = cur + 1;
        from[s][j + 1] = 1;
      }
      if (s < t && cur < d[s + 1][j]) {
        d[s + 1][j] = cur;
        from[s + 1][j] = 2;
      }
    }

  // Walk back for the S/D split (insertions never help: epsilon dominates).
  int s = t, j = nref, subs = 0, dels = 0, hits = 0;
  while (s > 0 || j > 0) {
    switch (from[s][j]) {
      case 0: {
        --s, --j;
        bool match = false;
        for (const auto& w : cands[s])
          if (w == ref[j]) {
            match = true;
            break;
          }
        if (match)
          ++hits;
        else
          ++subs;
        break;
      }
      case 1:
        --j;
        ++dels;
        break;
      case 2:
        --s;
        break;
      default:
        throw ContractError("oracle_compositional: broken DP traceback");
    }
  }

  WerReport r;
  r.substitutions = subs;
  r.deletions = dels;
  r.insertions = 0;
  r.hits = hits;
  r.reference_length = nref;
  r.wer = static_cast<double>(d[t][nref]) / nref;
  return r;
}

OraclePair oracles(const NBestList& list) { return {oracle_nbest(list), oracle_compositional(list)}; }

double relative_wer_reduction(double baseline, double system) {
  if (!(baseline > 0.0)) throw ContractError("relative_wer_reduction: baseline must be positive");
  return (system - baseline) / baseline;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace rger::metrics
