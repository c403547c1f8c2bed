#include "rger/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rger/embedder.hpp"
#include "rger/errors.hpp"
#include "rger/text.hpp"

namespace rger::corpus {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// word pool
// ---------------------------------------------------------------------------

namespace {

bool edit_distance_one(const std::string& a, const std::string& b) {
  const std::size_t la = a.size(), lb = b.size();
  if (la == lb) {
    int diff = 0;
    for (std::size_t i = 0; i < la; ++i)
      if (a[i] != b[i] && ++diff > 1) return false;
    return diff == 1;
  }
  const std::string& s = la < lb ? a : b;
  const std::string& l = la < lb ? b : a;
  if (l.size() - s.size() != 1) return false;
  std::size_t i = 0;
  while (i < s.size() && s[i] == l[i]) ++i;
  return std::equal(s.begin() + i, s.end(), l.begin() + i + 1);
}

const char* kBuiltinWords[] = {
    "cat", "bat", "hat", "rat", "mat", "sat", "pat", "can", "cap", "cup", "cut", "car",
    "bar", "bag", "big", "bit", "bin", "pin", "pit", "pot", "dot", "dog", "log", "leg",
    "let", "bet", "bed", "red", "rod", "rot", "hot", "hop", "top", "tip", "lip", "lap",
    "map", "man", "men", "ten", "tan", "fan", "far", "for", "fog", "fig", "dig", "dip",
    "day", "way", "may", "say", "sun", "run", "ran", "rain", "main", "mind", "wind",
    "wine", "line", "lane", "land", "sand", "send", "bend", "band", "hand", "cold",
    "gold", "bold", "bolt", "belt", "best", "rest", "test", "fast", "last", "list",
    "fist", "fish", "wish", "wash", "cash", "case", "base", "pass", "past", "post",
    "cost", "coat", "goat", "boat", "road", "read", "real", "seal", "sell", "tell",
    "tall", "ball", "bell", "will", "wall", "well", "fell", "fall", "full", "pull",
};

}  // namespace

WordPool WordPool::from_words(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  WordPool pool;
  pool.words_ = std::move(words);
  for (const auto& w : pool.words_) pool.neighbors_[w] = {};
  for (std::size_t i = 0; i < pool.words_.size(); ++i)
    for (std::size_t j = i + 1; j < pool.words_.size(); ++j)
      if (edit_distance_one(pool.words_[i], pool.words_[j])) {
        pool.neighbors_[pool.words_[i]].push_back(pool.words_[j]);
        pool.neighbors_[pool.words_[j]].push_back(pool.words_[i]);
      }
  return pool;
}

WordPool WordPool::from_sentences(const std::vector<std::string>& sentences) {
  std::vector<std::string> words;
  for (const auto& s : sentences)
    for (auto& w : text::tokenize(s)) words.push_back(std::move(w));
  return from_words(std::move(words));
}

const WordPool& WordPool::builtin() {
  static const WordPool pool = [] {
    std::vector<std::string> words(std::begin(kBuiltinWords), std::end(kBuiltinWords));
    return from_words(std::move(words));
  }();
  return pool;
}

const std::vector<std::string>& WordPool::neighbors(const std::string& word) const {
  const auto it = neighbors_.find(word);
  return it == neighbors_.end() ? empty_ : it->second;
}

// ---------------------------------------------------------------------------
// channel
// ---------------------------------------------------------------------------

namespace {

std::string perturb_word(const std::string& word, Rng& rng) {
  // single character edit yielding a pseudo-word
  std::string out = word;
  const int kind = static_cast<int>(rng.uniform_int(out.size() > 1 ? 3 : 2));
  const char c = static_cast<char>('a' + rng.uniform_int(26));
  switch (kind) {
    case 0: {  // replace
      const std::size_t p = rng.uniform_int(out.size());
      out[p] = out[p] == c ? (c == 'z' ? 'a' : c + 1) : c;
      break;
    }
    case 1: {  // insert
      const std::size_t p = rng.uniform_int(out.size() + 1);
      out.insert(out.begin() + p, c);
      break;
    }
    default: {  // delete
      const std::size_t p = rng.uniform_int(out.size());
      out.erase(out.begin() + p);
      break;
    }
  }
  if (out.empty() || out == word) out = word + c;
  return out;
}

std::string confusable(const std::string& word, const WordPool& pool, Rng& rng) {
  const auto& nb = pool.neighbors(word);
  if (!nb.empty()) return nb[rng.uniform_int(nb.size())];
  return perturb_word(word, rng);
}

}  // namespace

NBestList corrupt(const std::string& reference, const NoiseChannelSpec& spec,
                  const WordPool& pool, Rng rng) {
  const auto ref_tokens = text::tokenize(reference);
  if (ref_tokens.empty()) throw ContractError("corrupt: empty reference");
  const double rate = spec.error_rate();
  const double frac_total = spec.sub_fraction + spec.del_fraction + spec.ins_fraction;

  struct Draw {
    std::string hyp;
    double score;
    int order;
  };
  std::vector<Draw> draws;
  draws.reserve(spec.n);
  for (int k = 0; k < spec.n; ++k) {
    Rng hyp_rng = rng.derived("hyp", static_cast<std::uint64_t>(k));
    std::vector<std::string> out;
    int errors = 0;
    for (const auto& tok : ref_tokens) {
      if (rate > 0.0 && hyp_rng.uniform() < rate) {
        ++errors;
        const double e = hyp_rng.uniform() * frac_total;
        if (e < spec.sub_fraction) {
          out.push_back(confusable(tok, pool, hyp_rng));
        } else if (e < spec.sub_fraction + spec.del_fraction) {
          // deletion: token dropped
        } else {
          const auto& words = pool.words();
          out.push_back(words.empty() ? perturb_word(tok, hyp_rng)
                                      : words[hyp_rng.uniform_int(words.size())]);
          out.push_back(tok);
        }
      } else {
        out.push_back(tok);
      }
    }
    if (out.empty()) {
      out.push_back(ref_tokens.front());  // keep hypotheses nonempty
    }
    Draw d;
    d.hyp = text::join(out);
    d.score = -static_cast<double>(errors) + spec.rank_noise * hyp_rng.gaussian();
    d.order = k;
    draws.push_back(std::move(d));
  }
  std::stable_sort(draws.begin(), draws.end(), [](const Draw& a, const Draw& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.order < b.order;
  });

  NBestList list;
  list.reference = text::join(ref_tokens);
  list.noise_type = spec.noise_type;
  list.snr_db = spec.snr_db;
  for (auto& d : draws) {
    list.hypotheses.push_back(std::move(d.hyp));
    list.scores.push_back(d.score);
  }
  return list;
}

std::pair<std::vector<double>, std::vector<double>> audio_embed_surrogate(
    const std::string& reference, const NoiseChannelSpec& spec, Rng rng) {
  static const std::uint64_t kContentSeed = 0x41554449u;  // distinct from the text embedder
  HashNGramEmbedder content(spec.d_audio, kContentSeed);
  std::vector<double> clean = content.embed(text::join(text::tokenize(reference)));
  if (spec.clean()) return {clean, clean};

  const double magnitude = std::pow(2.0, -spec.snr_db / 10.0);
  const std::size_t k = mix64(fnv1a(spec.noise_type)) % static_cast<std::uint64_t>(spec.d_audio);

  Rng jrng = rng.derived("audio-jitter");
  std::vector<double> jitter(spec.d_audio);
  double jn = 0.0;
  for (auto& v : jitter) {
    v = jrng.gaussian();
    jn += v * v;
  }
  jn = std::sqrt(jn);

  std::vector<double> noisy = clean;
  for (int i = 0; i < spec.d_audio; ++i) {
    double dir = (static_cast<std::size_t>(i) == k ? 1.0 : 0.0) + 0.1 * jitter[i] / jn;
    noisy[i] += magnitude * dir;
  }
  return {noisy, clean};
}

NBestList make_record(const std::string& id, const std::string& reference,
                      const NoiseChannelSpec& spec, const WordPool& pool, Rng rng) {
  NBestList list = corrupt(reference, spec, pool, rng.derived("channel"));
  list.id = id;
  auto [noisy, clean] = audio_embed_surrogate(reference, spec, rng.derived("audio"));
  list.audio_emb_noisy = std::move(noisy);
  list.audio_emb_clean = std::move(clean);
  return list;
}

Dataset generate(const std::vector<std::string>& references, const NoiseChannelSpec& spec,
                 const WordPool& pool, std::uint64_t seed, const std::string& id_prefix) {
  Dataset out;
  out.reserve(references.size());
  Rng root(seed);
  for (std::size_t i = 0; i < references.size(); ++i) {
    Rng utt = root.derived("utt", i);
    out.push_back(make_record(id_prefix + std::to_string(i), references[i], spec, pool, utt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// interchange format
// ---------------------------------------------------------------------------

Dataset read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("corpus: cannot open " + path);
  Dataset out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("corpus: " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const auto where = [&] { return path + ":" + std::to_string(lineno); };
    if (!j.is_object()) throw DataError("corpus: " + where() + ": record is not an object");
    for (const char* field : {"id", "hypotheses", "scores", "reference"})
      if (!j.contains(field))
        throw DataError("corpus: " + where() + ": missing required field \"" + field + "\"");

    NBestList rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.hypotheses = j.at("hypotheses").get<std::vector<std::string>>();
      rec.scores = j.at("scores").get<std::vector<double>>();
      rec.reference = j.at("reference").get<std::string>();
      if (j.contains("noise_type")) rec.noise_type = j.at("noise_type").get<std::string>();
      if (j.contains("snr_db")) rec.snr_db = j.at("snr_db").get<double>();
      if (j.contains("audio_emb_noisy"))
        rec.audio_emb_noisy = j.at("audio_emb_noisy").get<std::vector<double>>();
      if (j.contains("audio_emb_clean"))
        rec.audio_emb_clean = j.at("audio_emb_clean").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw DataError("corpus: " + where() + ": " + e.what());
    }
    static const char* known[] = {"id",     "hypotheses",      "scores",         "reference",
                                  "noise_type", "snr_db", "audio_emb_noisy", "audio_emb_clean"};
    for (const auto& [key, value] : j.items()) {
      bool is_known = false;
      for (const char* k : known)
        if (key == k) {
          is_known = true;
          break;
        }
      if (!is_known) rec.extras[key] = value.dump();
    }

    if (rec.hypotheses.empty()) throw DataError("corpus: " + where() + ": no hypotheses");
    for (const auto& h : rec.hypotheses)
      if (h.empty()) throw DataError("corpus: " + where() + ": empty hypothesis");
    if (rec.scores.size() != rec.hypotheses.size())
      throw DataError("corpus: " + where() + ": scores/hypotheses length mismatch");
    for (std::size_t i = 1; i < rec.scores.size(); ++i)
      if (rec.scores[i] > rec.scores[i - 1])
        throw DataError("corpus: " + where() + ": scores increase with rank (inversion at " +
                        std::to_string(i + 1) + ")");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_corpus(const Dataset& dataset, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw DataError("corpus: cannot write " + path);
  for (const auto& rec : dataset) {
    json j;
    j["id"] = rec.id;
    j["hypotheses"] = rec.hypotheses;
    j["scores"] = rec.scores;
    j["reference"] = rec.reference;
    if (!rec.noise_type.empty()) j["noise_type"] = rec.noise_type;
    if (!rec.is_clean()) j["snr_db"] = rec.snr_db;
    if (!rec.audio_emb_noisy.empty()) j["audio_emb_noisy"] = rec.audio_emb_noisy;
    if (!rec.audio_emb_clean.empty()) j["audio_emb_clean"] = rec.audio_emb_clean;
    for (const auto& [key, value] : rec.extras) j[key] = json::parse(value);
    outf << j.dump() << '\n';
  }
}

std::vector<std::string> sample_references(int count, int min_words, int max_words, Rng rng) {
  if (min_words < 1 || max_words < min_words)
    throw ContractError("sample_references: bad word-count range");
  const auto& words = WordPool::builtin().words();
  std::vector<std::string> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng srng = rng.derived("sentence", static_cast<std::uint64_t>(i));
    const int len =
        min_words + static_cast<int>(srng.uniform_int(static_cast<std::uint64_t>(max_words - min_words + 1)));
    std::vector<std::string> sent;
    for (int w = 0; w < len; ++w) sent.push_back(words[srng.uniform_int(words.size())]);
    out.push_back(text::join(sent));
  }
  return out;
}

}  // namespace rger::corpus
