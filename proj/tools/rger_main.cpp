// Command-line surface: corpus generation, diagnostics, training, evaluation,
// verification and embedding export.
//
// Exit codes: 0 success, 1 usage, 2 data/validation, 3 verification failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rger/corpus.hpp"
#include "rger/errors.hpp"
#include "rger/noise_embedding.hpp"
#include "rger/pipeline.hpp"
#include "rger/text.hpp"
#include "rger/text_metrics.hpp"
#include "rger/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rger;

namespace {

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Built-in defaults < config file < command-line flags. The config file is a
// flat JSON object keyed by long flag names (without the leading dashes).
json load_config_overrides(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc - 1; ++i)
    if (std::string(argv[i]) == "--config") path = argv[i + 1];
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config: " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config: " + path + " must hold a JSON object");
  return j;
}

template <typename T>
void cfg_get(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

std::vector<double> parse_snrs(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "clean")
      out.push_back(std::numeric_limits<double>::infinity());
    else
      out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::string> parse_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

Dataset read_corpora(const std::vector<std::string>& paths) {
  Dataset all;
  for (const auto& p : paths) {
    auto part = corpus::read_corpus(p);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  if (all.empty()) throw DataError("no records in the given corpora");
  return all;
}

std::string snr_tag(double snr) {
  if (std::isinf(snr)) return "clean";
  std::ostringstream ss;
  ss << snr << "dB";
  return ss.str();
}

class CsvTraceSink : public pipeline::TraceSink {
 public:
  explicit CsvTraceSink(const std::string& path) : out_(path) {
    if (!out_) throw DataError("cannot write " + path);
    out_ << "iteration,lr,h2t_loss,mi_estimate,i1\n";
  }
  void on_iteration(const pipeline::IterationTrace& t) override {
    out_ << t.iteration << ',' << t.lr << ',' << t.h2t_loss << ',';
    if (!std::isnan(t.mi_estimate)) out_ << t.mi_estimate;
    out_ << ',';
    if (!std::isnan(t.i1)) out_ << t.i1;
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen_sentences(const std::string& out_path, int count, int min_words, int max_words,
                      std::uint64_t seed) {
  auto refs = corpus::sample_references(count, min_words, max_words, Rng(seed));
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  for (const auto& r : refs) out << r << '\n';
  std::cout << "wrote " << refs.size() << " sentences to " << out_path << '\n';
  return 0;
}

int cmd_gen_corpus(const std::string& sentences_path, const std::string& out_dir,
                   const std::string& noise_types_csv, const std::string& snrs_csv, int n,
                   std::uint64_t seed) {
  const auto refs = read_lines(sentences_path);
  if (refs.empty()) throw UsageError("sentence source " + sentences_path + " is empty");
  const auto types = parse_list(noise_types_csv);
  auto snrs = parse_snrs(snrs_csv);
  if (types.empty()) throw UsageError("no noise types given");

  fs::create_directories(out_dir);
  const auto pool = corpus::WordPool::from_sentences(refs);

  json manifest;
  manifest["sentences"] = sentences_path;
  manifest["seed"] = seed;
  manifest["files"] = json::array();

  const auto emit = [&](const corpus::NoiseChannelSpec& spec, const std::string& name,
                        std::uint64_t cell_seed) {
    auto data = corpus::generate(refs, spec, pool, cell_seed, name + "-");
    const std::string path = (fs::path(out_dir) / ("corpus_" + name + ".jsonl")).string();
    corpus::write_corpus(data, path);
    json f;
    f["path"] = path;
    f["noise_type"] = spec.noise_type;
    f["snr_db"] = spec.clean() ? json() : json(spec.snr_db);
    f["records"] = data.size();
    manifest["files"].push_back(f);
  };

  for (const auto& type : types) {
    for (double snr : snrs) {
      if (std::isinf(snr)) continue;  // the clean split is emitted once below
      corpus::NoiseChannelSpec spec;
      spec.noise_type = type;
      spec.snr_db = snr;
      spec.n = n;
      const std::string name = type + "_" + snr_tag(snr);
      emit(spec, name, mix64(seed ^ fnv1a(name)));
    }
  }
  corpus::NoiseChannelSpec clean;
  clean.noise_type = "clean";
  clean.snr_db = std::numeric_limits<double>::infinity();
  clean.n = n;
  emit(clean, "clean", mix64(seed ^ fnv1a("clean")));

  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  std::ofstream mf(manifest_path);
  mf << manifest.dump(2) << '\n';
  std::cout << "wrote " << manifest["files"].size() << " corpus files and " << manifest_path
            << '\n';
  return 0;
}

int cmd_diagnose(const std::vector<std::string>& corpora, const std::string& out_path) {
  const Dataset data = read_corpora(corpora);
  HashNGramEmbedder embedder(384);

  struct Agg {
    long long base_errors = 0, onb_errors = 0, ocp_errors = 0, ref_len = 0;
    double eln_norm = 0.0, pair_dist = 0.0;
    int count = 0;
  };
  std::map<std::pair<std::string, double>, Agg> groups;

  for (const auto& rec : data) {
    auto& g = groups[{rec.noise_type, rec.snr_db}];
    const auto ref = text::tokenize(rec.reference);
    g.base_errors += metrics::wer(ref, text::tokenize(rec.hypotheses.at(0))).errors();
    const auto oracle = metrics::oracles(rec);
    g.onb_errors += oracle.o_nb.errors();
    g.ocp_errors += oracle.o_cp.errors();
    g.ref_len += static_cast<long long>(ref.size());
    if (rec.n() >= 2) {
      g.eln_norm += lang_noise::extract_noise_embedding(rec, embedder).frobenius_norm();
      double dist = 0.0;
      int pairs = 0;
      for (int i = 1; i < rec.n(); ++i)
        for (int j = 0; j < i; ++j, ++pairs)
          dist += metrics::edit_distance(text::tokenize(rec.hypotheses[i]),
                                         text::tokenize(rec.hypotheses[j]))
                      .distance;
      g.pair_dist += dist / pairs;
    }
    ++g.count;
  }

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  out << "noise_type,snr_db,utterances,wer_1best,o_nb,o_cp,mean_eln_norm,mean_pairwise_edit\n";
  out.precision(10);
  for (const auto& [key, g] : groups) {
    out << key.first << ',' << (std::isinf(key.second) ? "inf" : std::to_string(key.second)) << ','
        << g.count << ',' << static_cast<double>(g.base_errors) / g.ref_len << ','
        << static_cast<double>(g.onb_errors) / g.ref_len << ','
        << static_cast<double>(g.ocp_errors) / g.ref_len << ',' << g.eln_norm / g.count << ','
        << g.pair_dist / g.count << '\n';
  }
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& mode_name,
              const std::string& out_dir, const pipeline::TrainConfig& tcfg, int base_iters,
              const std::string& base_checkpoint, const std::string& init_checkpoint,
              const toy_lm::ToyLMConfig& mcfg) {
  if (mode_name != "ger" && mode_name != "robustger")
    throw UsageError("train: mode must be ger or robustger");
  const auto mode =
      mode_name == "ger" ? pipeline::TrainMode::Ger : pipeline::TrainMode::RobustGer;
  const Dataset data = corpus::read_corpus(corpus_path);
  fs::create_directories(out_dir);

  pipeline::TrainState state;
  if (!init_checkpoint.empty()) {
    state = pipeline::load_checkpoint(init_checkpoint);
    if (mode == pipeline::TrainMode::RobustGer && !state.has_distill) {
      // extend a base/ger checkpoint with fresh tuner and MINE parameters
      pipeline::TrainState fresh = pipeline::make_state(state.model.cfg, mode, tcfg.seed);
      state.has_distill = true;
      state.tuner = fresh.tuner;
      state.mine_net = fresh.mine_net;
    }
  } else {
    state = pipeline::make_state(mcfg, mode, tcfg.seed);
  }

  if (base_iters > 0) {
    pipeline::TrainConfig bcfg = tcfg;
    bcfg.iterations = base_iters;
    CsvTraceSink sink((fs::path(out_dir) / "base_trace.csv").string());
    pipeline::pretrain_base(state, data, bcfg, &sink);
    pipeline::save_checkpoint(state, (fs::path(out_dir) / "base_checkpoint.json").string());
  } else if (!base_checkpoint.empty()) {
    pipeline::TrainState base = pipeline::load_checkpoint(base_checkpoint);
    // adopt the base model wholesale; adapters/tuner stay from `state`
    state.model = base.model;
    if (mode == pipeline::TrainMode::RobustGer && !state.has_distill) {
      pipeline::TrainState fresh = pipeline::make_state(state.model.cfg, mode, tcfg.seed);
      state.has_distill = true;
      state.tuner = fresh.tuner;
      state.mine_net = fresh.mine_net;
    }
  }

  CsvTraceSink sink((fs::path(out_dir) / "trace.csv").string());
  pipeline::train(state, data, tcfg, mode, &sink);
  const std::string ckpt = (fs::path(out_dir) / "checkpoint.json").string();
  pipeline::save_checkpoint(state, ckpt);
  std::cout << "wrote " << ckpt << '\n';
  return 0;
}

int cmd_eval(const std::vector<std::string>& corpora, const std::string& out_path,
             const std::string& ger_ckpt, const std::string& robust_ckpt, int threads,
             int max_generate) {
  const Dataset data = read_corpora(corpora);
  std::optional<pipeline::TrainState> ger_state, robust_state;
  pipeline::EvalOptions opts;
  opts.threads = threads;
  opts.max_generate = max_generate;
  if (!ger_ckpt.empty()) {
    ger_state = pipeline::load_checkpoint(ger_ckpt);
    opts.ger_state = &*ger_state;
  }
  if (!robust_ckpt.empty()) {
    robust_state = pipeline::load_checkpoint(robust_ckpt);
    if (!robust_state->has_distill)
      throw DataError("eval: " + robust_ckpt + " carries no tuner; cannot run robustger");
    opts.robust_state = &*robust_state;
  }
  std::vector<std::string> warnings;
  const auto rows = pipeline::evaluate(data, opts, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  pipeline::write_results_csv(rows, out);
  std::cout << "wrote " << out_path << '\n';
  for (const auto& r : rows) {
    std::printf("  %-18s baseline %6.2f%%", r.condition.c_str(), 100.0 * r.baseline);
    if (r.has_ger) std::printf("  ger %6.2f%%", 100.0 * r.ger);
    if (r.has_robust) std::printf("  robustger %6.2f%%", 100.0 * r.robust);
    std::printf("  o_nb %6.2f%%  o_cp %6.2f%%\n", 100.0 * r.o_nb, 100.0 * r.o_cp);
  }
  return 0;
}

int cmd_export_embeddings(const std::vector<std::string>& corpora, const std::string& out_path,
                          const std::string& ckpt_path) {
  const Dataset data = read_corpora(corpora);
  std::optional<pipeline::TrainState> state;
  const mine::EmbeddingTuner* tuner = nullptr;
  int d_embed = 384;
  if (!ckpt_path.empty()) {
    state = pipeline::load_checkpoint(ckpt_path);
    if (state->has_distill) tuner = &state->tuner;
    d_embed = state->d_embed;
  }
  HashNGramEmbedder embedder(d_embed);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  pipeline::export_embeddings(data, embedder, tuner, out);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  std::vector<verify::CheckResult> results;
  if (suite == "grad")
    results = verify::suite_grad(seed);
  else if (suite == "mi")
    results = verify::suite_mi(seed);
  else if (suite == "metrics")
    results = verify::suite_metrics();
  else if (suite == "invariants")
    results = verify::suite_invariants(seed);
  else
    throw UsageError("verify: unknown suite \"" + suite + "\" (grad|mi|metrics|invariants)");

  bool ok = true;
  for (const auto& r : results) {
    std::printf("[%s] %-36s measured %.6g vs threshold %.6g%s%s\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.measured, r.threshold, r.detail.empty() ? "" : "  # ",
                r.detail.c_str());
    ok = ok && r.pass;
  }
  std::printf("%s: %zu checks, %s\n", suite.c_str(), results.size(), ok ? "all passed" : "FAILURES");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const json cfg = load_config_overrides(argc, argv);

    CLI::App app{"noise-aware generative error correction at desk scale"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file with flag defaults");

    std::uint64_t seed = 0;
    cfg_get(cfg, "seed", seed);

    // gen-sentences
    auto* gs = app.add_subcommand("gen-sentences", "write synthetic reference sentences");
    std::string gs_out = "sentences.txt";
    int gs_count = 1000, gs_min = 3, gs_max = 5;
    gs->add_option("--out", gs_out, "output file");
    gs->add_option("--count", gs_count, "number of sentences");
    gs->add_option("--min-words", gs_min);
    gs->add_option("--max-words", gs_max);
    gs->add_option("--seed", seed);

    // gen-corpus
    auto* gc = app.add_subcommand("gen-corpus", "generate a noisy corpus grid plus clean split");
    std::string gc_sentences, gc_out = "corpus";
    std::string gc_types = "babble,ac";
    std::string gc_snrs = "0,5,10,20";
    int gc_n = 5;
    cfg_get(cfg, "noise-types", gc_types);
    cfg_get(cfg, "snrs", gc_snrs);
    cfg_get(cfg, "n", gc_n);
    gc->add_option("--sentences", gc_sentences, "file with one reference per line")->required();
    gc->add_option("--out", gc_out, "output directory");
    gc->add_option("--noise-types", gc_types, "comma-separated noise type labels");
    gc->add_option("--snrs", gc_snrs, "comma-separated SNR levels in dB");
    gc->add_option("--n", gc_n, "hypotheses per list");
    gc->add_option("--seed", seed);

    // diagnose
    auto* dg = app.add_subcommand("diagnose", "per-condition corpus diagnostics");
    std::vector<std::string> dg_corpora;
    std::string dg_out = "diagnostics.csv";
    dg->add_option("--corpus", dg_corpora, "corpus file(s)")->required();
    dg->add_option("--out", dg_out, "output CSV");

    // train
    auto* tr = app.add_subcommand("train", "train ger or robustger");
    std::string tr_corpus, tr_mode = "ger", tr_out = "run";
    std::string tr_base_ckpt, tr_init_ckpt;
    int tr_base_iters = 0;
    pipeline::TrainConfig tcfg;
    toy_lm::ToyLMConfig mcfg;
    cfg_get(cfg, "lambda", tcfg.lambda);
    cfg_get(cfg, "batch", tcfg.batch);
    cfg_get(cfg, "accum", tcfg.accum);
    cfg_get(cfg, "iters", tcfg.iterations);
    cfg_get(cfg, "lr", tcfg.lr);
    cfg_get(cfg, "weight-decay", tcfg.weight_decay);
    cfg_get(cfg, "warmup-frac", tcfg.warmup_frac);
    cfg_get(cfg, "base-iters", tr_base_iters);
    cfg_get(cfg, "layers", mcfg.layers);
    cfg_get(cfg, "adapted-layers", mcfg.adapted_layers);
    cfg_get(cfg, "heads", mcfg.heads);
    cfg_get(cfg, "d-model", mcfg.d_model);
    cfg_get(cfg, "block", mcfg.block);
    cfg_get(cfg, "prompt-len", mcfg.prompt_len);
    tr->add_option("--corpus", tr_corpus, "training corpus")->required();
    tr->add_option("--mode", tr_mode, "ger | robustger");
    tr->add_option("--out", tr_out, "output directory");
    tr->add_option("--lambda", tcfg.lambda, "distillation weight");
    tr->add_option("--batch", tcfg.batch);
    tr->add_option("--accum", tcfg.accum, "gradient accumulation steps");
    tr->add_option("--iters", tcfg.iterations, "adapter-phase iterations");
    tr->add_option("--lr", tcfg.lr);
    tr->add_option("--weight-decay", tcfg.weight_decay);
    tr->add_option("--warmup-frac", tcfg.warmup_frac);
    tr->add_option("--base-iters", tr_base_iters, "full-model warmup iterations before freezing");
    tr->add_option("--base-checkpoint", tr_base_ckpt, "start from this frozen base");
    tr->add_option("--init-checkpoint", tr_init_ckpt, "resume from a full checkpoint");
    tr->add_option("--layers", mcfg.layers);
    tr->add_option("--adapted-layers", mcfg.adapted_layers);
    tr->add_option("--heads", mcfg.heads);
    tr->add_option("--d-model", mcfg.d_model);
    tr->add_option("--block", mcfg.block);
    tr->add_option("--prompt-len", mcfg.prompt_len);
    tr->add_option("--seed", seed);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate baseline/ger/robustger on a corpus");
    std::vector<std::string> ev_corpora;
    std::string ev_out = "results.csv", ev_ger, ev_robust;
    int ev_threads = 1, ev_maxgen = 96;
    cfg_get(cfg, "threads", ev_threads);
    ev->add_option("--corpus", ev_corpora, "corpus file(s)")->required();
    ev->add_option("--out", ev_out, "results CSV");
    ev->add_option("--ger-checkpoint", ev_ger);
    ev->add_option("--robust-checkpoint", ev_robust);
    ev->add_option("--threads", ev_threads);
    ev->add_option("--max-generate", ev_maxgen);

    // export-embeddings
    auto* ex = app.add_subcommand("export-embeddings", "dump pooled noise embeddings as CSV");
    std::vector<std::string> ex_corpora;
    std::string ex_out = "embeddings.csv", ex_ckpt;
    ex->add_option("--corpus", ex_corpora, "corpus file(s)")->required();
    ex->add_option("--out", ex_out, "output CSV");
    ex->add_option("--checkpoint", ex_ckpt, "checkpoint providing the tuner");

    // verify
    auto* vf = app.add_subcommand("verify", "run a verification suite");
    std::string vf_suite = "metrics";
    vf->add_option("--suite", vf_suite, "grad | mi | metrics | invariants")->required();
    vf->add_option("--seed", seed);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e);  // --help
      app.exit(e);
      return 1;
    }

    if (gs->parsed()) return cmd_gen_sentences(gs_out, gs_count, gs_min, gs_max, seed);
    if (gc->parsed()) return cmd_gen_corpus(gc_sentences, gc_out, gc_types, gc_snrs, gc_n, seed);
    if (dg->parsed()) return cmd_diagnose(dg_corpora, dg_out);
    if (tr->parsed()) {
      tcfg.seed = seed;
      return cmd_train(tr_corpus, tr_mode, tr_out, tcfg, tr_base_iters, tr_base_ckpt, tr_init_ckpt,
                       mcfg);
    }
    if (ev->parsed()) return cmd_eval(ev_corpora, ev_out, ev_ger, ev_robust, ev_threads, ev_maxgen);
    if (ex->parsed()) return cmd_export_embeddings(ex_corpora, ex_out, ex_ckpt);
    if (vf->parsed()) return cmd_verify(vf_suite, seed);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
