#include "rger/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "rger/errors.hpp"
#include "rger/noise_embedding.hpp"
#include "rger/ops.hpp"
#include "rger/optim.hpp"
#include "rger/text.hpp"
#include "rger/text_metrics.hpp"

namespace rger::pipeline {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<int> build_prompt(const NBestList& list, const CharVocab& vocab) {
  if (list.hypotheses.empty()) throw ContractError("build_prompt: list has no hypotheses");
  std::string s;
  for (std::size_t i = 0; i < list.hypotheses.size(); ++i) {
    if (i) s += " | ";
    s += "HYP" + std::to_string(i + 1) + ": ";
    s += text::join(text::tokenize(list.hypotheses[i]));
  }
  s += " OUT:";
  return vocab.encode(s);
}

void TrainConfig::validate() const {
  if (lambda < 0.0) throw ContractError("train config: lambda must be nonnegative");
  if (batch < 1 || accum < 1) throw ContractError("train config: batch and accum must be positive");
  if (iterations < 0) throw ContractError("train config: negative iteration count");
  if (!(lr > 0.0) || !(mine_lr_ratio > 0.0)) throw ContractError("train config: rates must be positive");
}

TrainState make_state(const toy_lm::ToyLMConfig& cfg, TrainMode mode, std::uint64_t seed,
                      int d_embed, int d_audio, int mine_hidden) {
  TrainState state;
  state.vocab = CharVocab::standard();
  toy_lm::ToyLMConfig c = cfg;
  c.vocab = state.vocab.size();
  Rng model_rng = Rng(seed).derived("init-model");
  state.model = toy_lm::ToyLM::init(c, model_rng);
  state.d_embed = d_embed;
  state.d_audio = d_audio;
  if (mode == TrainMode::RobustGer) {
    state.has_distill = true;
    Rng tuner_rng = Rng(seed).derived("init-tuner");
    state.tuner = mine::EmbeddingTuner::init(c.d_model, d_embed, tuner_rng);
    mine::StatisticsNetworkConfig mc;
    mc.d_lang = d_embed;
    mc.d_tuned = c.d_model;
    mc.d_audio = d_audio;
    mc.hidden = mine_hidden;
    Rng mine_rng = Rng(seed).derived("init-mine");
    state.mine_net = mine::StatisticsNetwork::init(mc, mine_rng);
  }
  return state;
}

// ---------------------------------------------------------------------------
// dataset preparation
// ---------------------------------------------------------------------------

namespace {

struct PreparedExample {
  std::vector<int> prompt;
  std::vector<int> reference;  // with trailing eos
  Tensor e_ln;                 // U x d_embed (undefined in ger mode)
  Tensor pooled;               // 1 x d_embed
  Tensor noisy;                // 1 x d_audio
  Tensor clean;                // 1 x d_audio
};

std::vector<PreparedExample> prepare(const TrainState& state, const Dataset& data,
                                     bool need_distill) {
  if (data.empty()) throw DataError("train: empty dataset");
  const auto& cfg = state.model.cfg;
  HashNGramEmbedder embedder(state.d_embed);
  std::vector<PreparedExample> out;
  out.reserve(data.size());
  for (const auto& rec : data) {
    PreparedExample ex;
    ex.prompt = build_prompt(rec, state.vocab);
    ex.reference = state.vocab.encode(text::join(text::tokenize(rec.reference)));
    if (ex.reference.empty()) throw DataError("train: record " + rec.id + " has an empty reference");
    ex.reference.push_back(state.vocab.eos_id());
    const int total = static_cast<int>(ex.prompt.size() + ex.reference.size());
    if (total > cfg.block)
      throw DataError("train: record " + rec.id + " needs " + std::to_string(total) +
                      " positions, block size is " + std::to_string(cfg.block));
    if (need_distill) {
      if (!rec.has_audio())
        throw DataError("train: record " + rec.id + " is missing audio embeddings");
      if (static_cast<int>(rec.audio_emb_noisy.size()) != state.d_audio ||
          static_cast<int>(rec.audio_emb_clean.size()) != state.d_audio)
        throw DataError("train: record " + rec.id + " audio embedding dimension mismatch");
      if (rec.n() < 2) throw DataError("train: record " + rec.id + " has fewer than 2 hypotheses");
      if (rec.n() * (rec.n() - 1) != cfg.prompt_len)
        throw DataError("train: record " + rec.id + " yields a " +
                        std::to_string(rec.n() * (rec.n() - 1)) + "-row noise embedding, prompt length is " +
                        std::to_string(cfg.prompt_len));
      auto e = lang_noise::extract_noise_embedding(rec, embedder);
      ex.e_ln = e.combined;
      ex.pooled = mine::pool_noise_embedding(e);
      ex.noisy = Tensor::row(rec.audio_emb_noisy);
      ex.clean = Tensor::row(rec.audio_emb_clean);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// Epoch-reshuffled index stream.
class BatchStream {
 public:
  BatchStream(std::size_t n, Rng rng) : n_(n), rng_(rng) { refill(); }

  std::size_t next() {
    if (pos_ == order_.size()) refill();
    return order_[pos_++];
  }

 private:
  void refill() {
    if (order_.empty()) {
      order_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    }
    // Fisher-Yates with the stream's own draws
    for (std::size_t i = n_ - 1; i > 0; --i) {
      const std::size_t j = rng_.uniform_int(i + 1);
      std::swap(order_[i], order_[j]);
    }
    pos_ = 0;
  }

  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

int warmup_steps_for(const TrainConfig& cfg, std::size_t n_examples) {
  const int epoch_steps =
      static_cast<int>((n_examples + cfg.effective_batch() - 1) / cfg.effective_batch());
  return std::max(1, static_cast<int>(std::lround(cfg.warmup_frac * epoch_steps)));
}

double lr_at(const TrainConfig& cfg, int warmup_steps, int iteration) {
  const double f = std::min(1.0, static_cast<double>(iteration + 1) / warmup_steps);
  return cfg.lr * f;
}

}  // namespace

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

void pretrain_base(TrainState& state, const Dataset& data, const TrainConfig& cfg,
                   TraceSink* sink) {
  cfg.validate();
  auto examples = prepare(state, data, false);
  state.model.set_base_requires_grad(true);
  state.model.set_adapter_requires_grad(false);

  AdamWConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = cfg.weight_decay;
  AdamW opt(state.model.base_params(), ocfg);

  BatchStream stream(examples.size(), Rng(cfg.seed).derived("base-batches"));
  const int warmup = warmup_steps_for(cfg, examples.size());
  const int b_eff = cfg.effective_batch();

  for (int m = 0; m < cfg.iterations; ++m) {
    opt.set_lr(lr_at(cfg, warmup, m));
    std::vector<std::size_t> idx(b_eff);
    for (auto& i : idx) i = stream.next();

    opt.zero_grad();
    double loss_sum = 0.0;
    for (int micro = 0; micro < cfg.accum; ++micro) {
      Tensor micro_sum;
      for (int k = 0; k < cfg.batch; ++k) {
        const auto& ex = examples[idx[micro * cfg.batch + k]];
        Tensor loss = state.model.h2t_loss(ex.prompt, ex.reference, {}, /*use_adapters=*/false);
        loss_sum += loss.item() / ex.reference.size();
        micro_sum = micro_sum.defined() ? ops::add(micro_sum, loss) : loss;
      }
      backward(ops::scale(micro_sum, 1.0 / b_eff));
    }
    opt.step(StepDirection::Descent);

    if (sink) {
      IterationTrace tr;
      tr.iteration = m;
      tr.lr = opt.lr();
      tr.h2t_loss = loss_sum / b_eff;
      tr.mi_estimate = kNaN;
      tr.i1 = kNaN;
      sink->on_iteration(tr);
    }
  }
  state.model.set_adapter_requires_grad(true);
}

void train(TrainState& state, const Dataset& data, const TrainConfig& cfg, TrainMode mode,
           TraceSink* sink) {
  cfg.validate();
  const bool robust = mode == TrainMode::RobustGer;
  if (robust && !state.has_distill)
    throw ContractError("train: robustger mode needs a state with tuner and MINE network");
  auto examples = prepare(state, data, robust);

  // Freeze contract: base weights are untouched by the adapter phase.
  state.model.set_base_requires_grad(false);
  state.model.set_adapter_requires_grad(true);

  std::vector<Tensor> upsilon_omega;
  for (int l = 0; l < state.model.cfg.layers; ++l) {
    if (!state.model.layer_adapted(l)) continue;
    const auto& a = state.model.adapters[l];
    upsilon_omega.push_back(a.prompt);
    upsilon_omega.push_back(a.attn_gate);
    if (!cfg.freeze_dn_gates)
      upsilon_omega.push_back(a.dn_gate);
    else
      a.dn_gate.impl()->requires_grad = false;
  }
  if (robust) upsilon_omega.push_back(state.tuner.weight);

  AdamWConfig gcfg;
  gcfg.lr = cfg.lr;
  gcfg.weight_decay = cfg.weight_decay;
  AdamW opt_ger(upsilon_omega, gcfg);

  std::vector<Tensor> theta;
  std::unique_ptr<AdamW> opt_mine;
  if (robust) {
    theta = state.mine_net.parameters();
    AdamWConfig mcfg;
    mcfg.lr = cfg.lr * cfg.mine_lr_ratio;
    mcfg.weight_decay = cfg.weight_decay;
    opt_mine = std::make_unique<AdamW>(theta, mcfg);
  }

  const std::vector<Tensor> upsilon_omega_all = [&] {
    // hash set includes frozen dn gates so any unexpected drift is caught
    std::vector<Tensor> all = state.model.adapter_params();
    if (robust) all.push_back(state.tuner.weight);
    return all;
  }();

  BatchStream stream(examples.size(), Rng(cfg.seed).derived("batches"));
  const int warmup = warmup_steps_for(cfg, examples.size());
  const int b_eff = cfg.effective_batch();

  for (int m = 0; m < cfg.iterations; ++m) {
    const double lr = lr_at(cfg, warmup, m);
    opt_ger.set_lr(lr);
    if (opt_mine) opt_mine->set_lr(lr * cfg.mine_lr_ratio);

    std::vector<std::size_t> idx(b_eff);
    for (auto& i : idx) i = stream.next();

    IterationTrace tr;
    tr.iteration = m;
    tr.lr = lr;
    tr.mi_estimate = kNaN;
    tr.i1 = kNaN;
    tr.theta_start = hash_params(theta);
    tr.upsilon_omega_start = hash_params(upsilon_omega_all);

    // --- MINE stage: ascent on theta only -------------------------------
    if (robust) {
      std::vector<Tensor> lang_rows, noisy_rows, clean_rows;
      lang_rows.reserve(b_eff);
      for (auto i : idx) {
        lang_rows.push_back(examples[i].pooled);
        noisy_rows.push_back(examples[i].noisy);
        clean_rows.push_back(examples[i].clean);
      }
      mine::MiBatch batch;
      batch.lang = ops::concat_rows(lang_rows);
      batch.noisy = ops::concat_rows(noisy_rows);
      batch.clean = ops::concat_rows(clean_rows);
      tr.mi_estimate = mine::mine_train_step(state.mine_net, batch, *opt_mine);
    }
    tr.theta_after_mine = hash_params(theta);
    tr.upsilon_omega_after_mine = hash_params(upsilon_omega_all);

    // --- GER stage: descent on (upsilon, omega) --------------------------
    opt_ger.zero_grad();
    if (robust)
      for (auto t : theta) t.zero_grad();  // values stay fixed; buffers reused
    double loss_sum = 0.0;
    double i1_sum = 0.0;
    for (int micro = 0; micro < cfg.accum; ++micro) {
      Tensor micro_obj;
      for (int k = 0; k < cfg.batch; ++k) {
        const auto& ex = examples[idx[micro * cfg.batch + k]];
        Tensor term;
        if (robust) {
          Tensor tuned = state.tuner.apply(ex.e_ln);
          Tensor loss = state.model.h2t_loss(ex.prompt, ex.reference, tuned);
          loss_sum += loss.item() / ex.reference.size();
          term = loss;
          if (cfg.lambda != 0.0) {
            Tensor psi = mine::distill_regularizer(state.mine_net, ops::mean_rows(tuned), ex.noisy);
            i1_sum += psi.item();
            term = ops::sub(term, ops::scale(psi, cfg.lambda));
          }
        } else {
          Tensor loss = state.model.h2t_loss(ex.prompt, ex.reference);
          loss_sum += loss.item() / ex.reference.size();
          term = loss;
        }
        micro_obj = micro_obj.defined() ? ops::add(micro_obj, term) : term;
      }
      backward(ops::scale(micro_obj, 1.0 / b_eff));
    }
    opt_ger.step(StepDirection::Descent);

    tr.theta_after_ger = hash_params(theta);
    tr.upsilon_omega_after_ger = hash_params(upsilon_omega_all);
    tr.h2t_loss = loss_sum / b_eff;
    if (robust && cfg.lambda != 0.0) tr.i1 = i1_sum / b_eff;
    if (sink) sink->on_iteration(tr);
  }

  if (cfg.freeze_dn_gates)
    for (int l = 0; l < state.model.cfg.layers; ++l)
      if (state.model.layer_adapted(l))
        state.model.adapters[l].dn_gate.set_requires_grad(true);
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

struct ConditionKey {
  std::string noise_type;
  double snr_db;

  bool operator<(const ConditionKey& o) const {
    if (noise_type != o.noise_type) return noise_type < o.noise_type;
    return snr_db < o.snr_db;
  }
};

struct SystemTally {
  long long errors = 0;
  long long ref_len = 0;

  double wer() const { return ref_len == 0 ? 0.0 : static_cast<double>(errors) / ref_len; }
};

struct UttResult {
  int ref_len = 0;
  int baseline_errors = 0;
  int onb_errors = 0;
  int ocp_errors = 0;
  int ger_errors = 0;
  int robust_errors = 0;
};

std::string generate_text(const TrainState& state, const NBestList& rec,
                          const HashNGramEmbedder* embedder, int max_generate, bool robust) {
  const std::vector<int> prompt = build_prompt(rec, state.vocab);
  Tensor tuned;
  if (robust) {
    auto e = lang_noise::extract_noise_embedding(rec, *embedder);
    tuned = state.tuner.apply(e.combined);
  }
  const int room = state.model.cfg.block - static_cast<int>(prompt.size()) - 1;
  if (room < 1)
    throw DataError("evaluate: record " + rec.id + " leaves no room for generation");
  const int max_len = std::min(max_generate, room);
  NoGradGuard ng;
  const auto ids = state.model.generate(prompt, max_len, state.vocab.eos_id(), tuned);
  return state.vocab.decode(ids);
}

}  // namespace

std::vector<EvalRow> evaluate(const Dataset& data, const EvalOptions& opts,
                              std::vector<std::string>* warnings) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  const bool do_ger = opts.ger_state != nullptr;
  const bool do_robust = opts.robust_state != nullptr;

  std::unique_ptr<HashNGramEmbedder> robust_embedder;
  if (do_robust)
    robust_embedder = std::make_unique<HashNGramEmbedder>(opts.robust_state->d_embed);

  std::vector<UttResult> results(data.size());
  const int threads = std::max(1, opts.threads);
  std::vector<std::string> errors(threads);

  const auto worker = [&](int tid) {
    try {
      for (std::size_t i = tid; i < data.size(); i += threads) {
        const auto& rec = data[i];
        const auto ref = text::tokenize(rec.reference);
        UttResult r;
        r.ref_len = static_cast<int>(ref.size());
        r.baseline_errors = metrics::wer(ref, text::tokenize(rec.hypotheses.at(0))).errors();
        const auto oracle = metrics::oracles(rec);
        r.onb_errors = oracle.o_nb.errors();
        r.ocp_errors = oracle.o_cp.errors();
        if (do_ger) {
          const std::string out =
              generate_text(*opts.ger_state, rec, nullptr, opts.max_generate, false);
          r.ger_errors = metrics::wer(ref, text::tokenize(out)).errors();
        }
        if (do_robust) {
          const std::string out = generate_text(*opts.robust_state, rec, robust_embedder.get(),
                                                opts.max_generate, true);
          r.robust_errors = metrics::wer(ref, text::tokenize(out)).errors();
        }
        results[i] = r;
      }
    } catch (const std::exception& e) {
      errors[tid] = e.what();
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DataError("evaluate: " + e);

  std::map<ConditionKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i)
    groups[{data[i].noise_type, data[i].snr_db}].push_back(i);

  std::vector<EvalRow> rows;
  for (const auto& [key, members] : groups) {
    if (members.empty()) {
      if (warnings)
        warnings->push_back("condition " + key.noise_type + " has no utterances; skipped");
      continue;
    }
    SystemTally base, onb, ocp, ger, robust;
    for (auto i : members) {
      const auto& r = results[i];
      base.errors += r.baseline_errors;
      onb.errors += r.onb_errors;
      ocp.errors += r.ocp_errors;
      ger.errors += r.ger_errors;
      robust.errors += r.robust_errors;
      base.ref_len += r.ref_len;
      onb.ref_len += r.ref_len;
      ocp.ref_len += r.ref_len;
      ger.ref_len += r.ref_len;
      robust.ref_len += r.ref_len;
    }
    EvalRow row;
    row.condition = data[members[0]].condition();
    row.utterances = static_cast<int>(members.size());
    row.baseline = base.wer();
    row.o_nb = onb.wer();
    row.o_cp = ocp.wer();
    row.has_ger = do_ger;
    row.has_robust = do_robust;
    row.ger = do_ger ? ger.wer() : kNaN;
    row.robust = do_robust ? robust.wer() : kNaN;
    row.rr_ger = do_ger && row.baseline > 0.0
                     ? metrics::relative_wer_reduction(row.baseline, row.ger)
                     : kNaN;
    row.rr_robust = do_robust && row.baseline > 0.0
                        ? metrics::relative_wer_reduction(row.baseline, row.robust)
                        : kNaN;
    rows.push_back(std::move(row));
  }

  if (rows.size() > 1) {
    EvalRow avg;
    avg.condition = "avg";
    avg.has_ger = do_ger;
    avg.has_robust = do_robust;
    double b = 0, g = 0, rb = 0, nb = 0, cp = 0;
    for (const auto& r : rows) {
      avg.utterances += r.utterances;
      b += r.baseline;
      nb += r.o_nb;
      cp += r.o_cp;
      if (do_ger) g += r.ger;
      if (do_robust) rb += r.robust;
    }
    const double n = static_cast<double>(rows.size());
    avg.baseline = b / n;
    avg.o_nb = nb / n;
    avg.o_cp = cp / n;
    avg.ger = do_ger ? g / n : kNaN;
    avg.robust = do_robust ? rb / n : kNaN;
    avg.rr_ger = do_ger && avg.baseline > 0.0
                     ? metrics::relative_wer_reduction(avg.baseline, avg.ger)
                     : kNaN;
    avg.rr_robust = do_robust && avg.baseline > 0.0
                        ? metrics::relative_wer_reduction(avg.baseline, avg.robust)
                        : kNaN;
    rows.push_back(std::move(avg));
  }
  return rows;
}

std::vector<EvalRow> evaluate_mode(const TrainState* state, const Dataset& data, EvalMode mode,
                                   int threads) {
  EvalOptions opts;
  opts.threads = threads;
  switch (mode) {
    case EvalMode::Baseline1Best:
      break;
    case EvalMode::Ger:
      if (!state) throw ContractError("evaluate: ger mode needs a trained state");
      opts.ger_state = state;
      break;
    case EvalMode::RobustGer:
      if (!state) throw ContractError("evaluate: robustger mode needs a trained state");
      if (!state->has_distill)
        throw ContractError("evaluate: robustger mode needs a state with a tuner");
      opts.robust_state = state;
      break;
  }
  return evaluate(data, opts);
}

namespace {

void csv_number(std::ostream& out, double v) {
  if (std::isnan(v)) return;  // empty cell
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  out << ss.str();
}

}  // namespace

void write_results_csv(const std::vector<EvalRow>& rows, std::ostream& out) {
  out << "condition,baseline,ger,robustger,o_nb,o_cp,rr_ger,rr_robustger\n";
  for (const auto& r : rows) {
    out << r.condition << ',';
    csv_number(out, r.baseline);
    out << ',';
    csv_number(out, r.has_ger ? r.ger : kNaN);
    out << ',';
    csv_number(out, r.has_robust ? r.robust : kNaN);
    out << ',';
    csv_number(out, r.o_nb);
    out << ',';
    csv_number(out, r.o_cp);
    out << ',';
    csv_number(out, r.rr_ger);
    out << ',';
    csv_number(out, r.rr_robust);
    out << '\n';
  }
}

void export_embeddings(const Dataset& data, const TextEmbedder& embedder,
                       const mine::EmbeddingTuner* tuner, std::ostream& out) {
  const int d = embedder.dimension();
  const int dt = tuner ? tuner->weight.rows() : 0;
  out << "id,condition";
  for (int i = 0; i < d; ++i) out << ",raw_" << i;
  for (int i = 0; i < dt; ++i) out << ",tuned_" << i;
  out << '\n';
  for (const auto& rec : data) {
    out << rec.id << ',' << rec.condition();
    if (rec.n() >= 2) {
      auto e = lang_noise::extract_noise_embedding(rec, embedder);
      Tensor pooled = mine::pool_noise_embedding(e);
      for (int i = 0; i < d; ++i) {
        out << ',';
        csv_number(out, pooled.at(0, i));
      }
      if (tuner) {
        NoGradGuard ng;
        Tensor tuned_pooled = ops::mean_rows(tuner->apply(e.combined));
        for (int i = 0; i < dt; ++i) {
          out << ',';
          csv_number(out, tuned_pooled.at(0, i));
        }
      }
    } else {
      for (int i = 0; i < d + dt; ++i) out << ",0";
    }
    out << '\n';
  }
}

}  // namespace rger::pipeline
