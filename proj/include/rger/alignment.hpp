#pragma once

#include <string>
#include <vector>

#include "rger/nbest.hpp"

namespace rger::alignment {

// Reserved gap symbol; distinct from every vocabulary token (tokenization
// never yields '<' or '>') and from the empty string.
inline const std::string kPad = "<pad>";

using TokenSeq = std::vector<std::string>;

struct EditCounts {
  int distance = 0;
  int substitutions = 0;
  int deletions = 0;   // token of `a` absent from `b`
  int insertions = 0;  // token of `b` absent from `a`
  int hits = 0;
};

// Cost-minimal pairwise alignment under unit costs. Tie-breaking is
// deterministic: match > substitution > deletion > insertion, resolved
// leftmost-first; a residual deletion/insertion tie is broken by lexicographic
// comparison of the remaining suffixes so counts are transpose-symmetric.
struct PairAlignment {
  TokenSeq a_padded;
  TokenSeq b_padded;
  EditCounts counts;
};

PairAlignment align_pair(const TokenSeq& a, const TokenSeq& b);

// N x T matrix over vocabulary tokens and kPad. Stripping pads from row i
// reproduces hypothesis i; no column is all-pad.
struct AlignedNBest {
  std::vector<TokenSeq> rows;
  std::vector<TokenSeq> source;  // original hypothesis token sequences
  std::string source_id;

  int n() const { return static_cast<int>(rows.size()); }
  int t() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
};

// Progressive alignment anchored on the rank-1 hypothesis with gap
// propagation ("once a gap, always a gap").
AlignedNBest align_nbest(const std::vector<TokenSeq>& hypotheses, const std::string& id = "");
AlignedNBest align_nbest(const NBestList& list);

// Throws ContractError when the row-strip property or the no-all-pad-column
// invariant is violated.
void validate(const AlignedNBest& aligned);

}  // namespace rger::alignment
