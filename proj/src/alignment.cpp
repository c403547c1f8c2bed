#include "rger/alignment.hpp"

#include <algorithm>

#include "rger/errors.hpp"
#include "rger/text.hpp"

namespace rger::alignment {

namespace {

// Suffix-cost table: cost[i][j] = edit distance between a[i:] and b[j:].
std::vector<std::vector<int>> suffix_costs(const TokenSeq& a, const TokenSeq& b) {
  const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
  std::vector<std::vector<int>> cost(la + 1, std::vector<int>(lb + 1, 0));
  for (int i = 0; i <= la; ++i) cost[i][lb] = la - i;
  for (int j = 0; j <= lb; ++j) cost[la][j] = lb - j;
  for (int i = la - 1; i >= 0; --i)
    for (int j = lb - 1; j >= 0; --j) {
      int best = cost[i + 1][j + 1] + (a[i] == b[j] ? 0 : 1);
      best = std::min(best, cost[i + 1][j] + 1);
      best = std::min(best, cost[i][j + 1] + 1);
      cost[i][j] = best;
    }
  return cost;
}

bool suffix_greater(const TokenSeq& a, int i, const TokenSeq& b, int j) {
  return std::lexicographical_compare(b.begin() + j, b.end(), a.begin() + i, a.end());
}

}  // namespace

PairAlignment align_pair(const TokenSeq& a, const TokenSeq& b) {
  const auto cost = suffix_costs(a, b);
  const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());

  PairAlignment out;
  out.counts.distance = cost[0][0];
  int i = 0, j = 0;
  while (i < la || j < lb) {
    const int here = cost[i][j];
    const bool can_diag = i < la && j < lb;
    if (can_diag && a[i] == b[j] && cost[i + 1][j + 1] == here) {
      out.a_padded.push_back(a[i]);
      out.b_padded.push_back(b[j]);
      ++out.counts.hits;
      ++i, ++j;
    } else if (can_diag && cost[i + 1][j + 1] + 1 == here) {
      out.a_padded.push_back(a[i]);
      out.b_padded.push_back(b[j]);
      ++out.counts.substitutions;
      ++i, ++j;
    } else {
      const bool del_ok = i < la && cost[i + 1][j] + 1 == here;
      const bool ins_ok = j < lb && cost[i][j + 1] + 1 == here;
      bool take_del;
      if (del_ok && ins_ok)
        take_del = suffix_greater(a, i, b, j);
      else
        take_del = del_ok;
      if (take_del) {
        out.a_padded.push_back(a[i]);
        out.b_padded.push_back(kPad);
        ++out.counts.deletions;
        ++i;
      } else {
        out.a_padded.push_back(kPad);
        out.b_padded.push_back(b[j]);
        ++out.counts.insertions;
        ++j;
      }
    }
  }
  return out;
}

AlignedNBest align_nbest(const std::vector<TokenSeq>& hypotheses, const std::string& id) {
  if (hypotheses.empty()) throw ContractError("align_nbest: need at least one hypothesis");
  const int n = static_cast<int>(hypotheses.size());
  const TokenSeq& anchor = hypotheses[0];
  const int la = static_cast<int>(anchor.size());

  // Pairwise-align every hypothesis to the anchor; record, per anchor gap
  // position p (insertions before anchor token p, p == la for trailing), the
  // inserted tokens of each row.
  std::vector<std::vector<std::vector<std::string>>> inserted(n);  // [row][p] -> tokens
  std::vector<TokenSeq> row_at_anchor(n);                          // [row][p] -> aligned token or pad
  std::vector<int> gap_width(la + 1, 0);

  for (int r = 0; r < n; ++r) {
    inserted[r].assign(la + 1, {});
    row_at_anchor[r].assign(la, kPad);
    if (r == 0) {
      row_at_anchor[0] = anchor;
      continue;
    }
    const PairAlignment pa = align_pair(anchor, hypotheses[r]);
    int p = 0;  // next anchor position
    for (std::size_t k = 0; k < pa.a_padded.size(); ++k) {
      if (pa.a_padded[k] == kPad) {
        inserted[r][p].push_back(pa.b_padded[k]);
      } else {
        row_at_anchor[r][p] = pa.b_padded[k];
        ++p;
      }
    }
  }
  for (int p = 0; p <= la; ++p)
    for (int r = 1; r < n; ++r)
      gap_width[p] = std::max(gap_width[p], static_cast<int>(inserted[r][p].size()));

  AlignedNBest out;
  out.source = hypotheses;
  out.source_id = id;
  out.rows.assign(n, {});
  for (int r = 0; r < n; ++r) {
    TokenSeq& row = out.rows[r];
    for (int p = 0; p <= la; ++p) {
      const auto& ins = inserted[r][p];
      for (int k = 0; k < gap_width[p]; ++k)
        row.push_back(k < static_cast<int>(ins.size()) ? ins[k] : kPad);
      if (p < la) row.push_back(row_at_anchor[r][p]);
    }
  }
  return out;
}

AlignedNBest align_nbest(const NBestList& list) {
  std::vector<TokenSeq> hyps;
  hyps.reserve(list.hypotheses.size());
  for (const auto& h : list.hypotheses) hyps.push_back(text::tokenize(h));
  return align_nbest(hyps, list.id);
}

void validate(const AlignedNBest& aligned) {
  if (aligned.rows.size() != aligned.source.size())
    throw ContractError("aligned n-best: row count does not match source");
  const int t = aligned.t();
  for (std::size_t r = 0; r < aligned.rows.size(); ++r) {
    if (static_cast<int>(aligned.rows[r].size()) != t)
      throw ContractError("aligned n-best: ragged rows");
    TokenSeq stripped;
    for (const auto& tok : aligned.rows[r])
      if (tok != kPad) stripped.push_back(tok);
    if (stripped != aligned.source[r])
      throw ContractError("aligned n-best: stripping pads does not reproduce hypothesis " +
                          std::to_string(r + 1));
  }
  for (int c = 0; c < t; ++c) {
    bool any = false;
    for (const auto& row : aligned.rows)
      if (row[c] != kPad) {
        any = true;
        break;
      }
    if (!any) throw ContractError("aligned n-best: column " + std::to_string(c) + " is all-pad");
  }
}

}  // namespace rger::alignment
