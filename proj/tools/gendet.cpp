// gendet: command-line front end for every pipeline stage.

#include <httplib.h>

#include <CLI11.hpp>
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "gendet/analysis.hpp"
#include "gendet/corpus.hpp"
#include "gendet/dataset_dir.hpp"
#include "gendet/kernels.hpp"
#include "gendet/lm.hpp"
#include "gendet/rater.hpp"
#include "gendet/study.hpp"
#include "gendet/study_http.hpp"
#include "gendet/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gendet;

namespace {

// Flat JSON config: every key names a flag of the chosen subcommand. Keys for
// flags already on the command line are skipped, so flags win.
std::vector<std::string> inject_config(CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config-file" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config-file=", 0) == 0) {
      config_path = args[i].substr(14);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty() || args.empty()) return args;

  CLI::App* sub = nullptr;
  std::size_t depth = 0;
  for (CLI::App* cur = &app; depth < args.size(); ++depth) {
    CLI::App* next = nullptr;
    try {
      next = cur->get_subcommand(args[depth]);
    } catch (const CLI::OptionNotFound&) {
    }
    if (!next) break;
    sub = cur = next;
  }
  if (!sub) return args;

  const json cfg = json::parse(read_file(config_path));
  if (!cfg.is_object()) throw std::runtime_error("config file must hold a flat JSON object");
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (!sub->get_option_no_throw(flag) || given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      args.push_back(flag);
      for (const auto& v : value) args.push_back(scalar(v));
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

std::string strategy_flag(Strategy s) { return s == Strategy::top_k ? "topk" : std::string(to_string(s)); }

std::string resolve_model(const std::string& flag_value, const DatasetDir& d) {
  if (!flag_value.empty()) return flag_value;
  const auto m = d.meta.value("model", std::string());
  if (m.empty()) throw std::runtime_error("no --model given and " + d.path + "/meta.json names none");
  return m;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string source_name(const DatasetDir& d) {
  std::string s(to_string(d.strategy()));
  if (d.priming() == Priming::one_word) s += "/1wordcond";
  return s;
}

std::vector<std::string> dataset_subdirs(const std::string& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no dataset directories under " + root);
  return out;
}

void save_detector_file(const std::string& path, const Detector& d, const json& info) {
  json j = d.to_json();
  j["trained_on"] = info;
  write_file(path, j.dump(1) + "\n");
}

struct DetectorFile {
  Detector detector;
  int length = 0;
};

DetectorFile load_detector_file(const std::string& path) {
  const json j = json::parse(read_file(path));
  DetectorFile f{Detector::from_json(j), 0};
  if (j.contains("trained_on")) f.length = j["trained_on"].value("length", 0);
  return f;
}

volatile std::sig_atomic_t g_stop = 0;
httplib::Server* g_server = nullptr;

void on_signal(int) {
  g_stop = 1;
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Machine-generated text detection benchmark"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  app.add_option("--config-file", "flat JSON object of flag values for the subcommand (flags take precedence)");
  int jobs = 0;

  // train-lm
  auto* train_lm = app.add_subcommand("train-lm", "train the n-gram language model");
  std::string corpus, lm_out;
  LmTrainConfig lmc;
  train_lm->add_option("--corpus", corpus, "plain-text corpus, blank-line separated documents")->required();
  train_lm->add_option("--order", lmc.order, "n-gram order (1-4)")->capture_default_str();
  train_lm->add_option("--alpha", lmc.alpha, "add-alpha smoothing")->capture_default_str();
  train_lm->add_option("--vocab-size", lmc.vocab_size, "vocabulary size incl. reserved tokens")->capture_default_str();
  train_lm->add_option("--min-count", lmc.min_count)->capture_default_str();
  train_lm->add_option("--heldout-fraction", lmc.heldout_fraction, "documents held out for human excerpts")
      ->capture_default_str();
  train_lm->add_option("--seed", lmc.seed)->capture_default_str();
  train_lm->add_option("--out", lm_out)->required();

  // generate
  auto* gen = app.add_subcommand("generate", "sample excerpts from the language model");
  std::string gen_model, gen_strategy = "topk", gen_priming = "nocond", gen_out, gen_corpus, gen_traces;
  DecodingConfig dec;
  std::size_t gen_n = 10;
  gen->add_option("--model", gen_model)->required();
  gen->add_option("--strategy", gen_strategy, "topk | nucleus | untruncated")->capture_default_str();
  gen->add_option("--k", dec.k)->capture_default_str();
  gen->add_option("--p", dec.p)->capture_default_str();
  gen->add_option("--temperature", dec.temperature)->capture_default_str();
  gen->add_option("--priming", gen_priming, "nocond | 1wordcond")->capture_default_str();
  gen->add_option("--n", gen_n)->capture_default_str();
  gen->add_option("--max-len", dec.max_len)->capture_default_str();
  gen->add_option("--seed", dec.seed)->capture_default_str();
  gen->add_flag("--nucleus-geq", dec.nucleus_geq, "keep the smallest prefix reaching p instead of staying within p");
  gen->add_option("--human-corpus", gen_corpus, "corpus to draw priming words from (1wordcond)");
  gen->add_option("--traces-out", gen_traces, "write per-step support sizes here");
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--jobs", jobs, "worker threads (0 = all)");

  // build-dataset
  auto* bd = app.add_subcommand("build-dataset", "build a paired human/machine dataset");
  std::string bd_corpus, bd_model, bd_strategy = "topk", bd_priming = "nocond", bd_out;
  PairedDatasetConfig pdc;
  DecodingConfig bd_dec;
  std::vector<int> bd_lengths;
  std::size_t bd_train = 0, bd_valid = 0, bd_test = 0;
  bd->add_option("--human-corpus", bd_corpus, "the corpus the LM was trained on")->required();
  bd->add_option("--model", bd_model)->required();
  bd->add_option("--strategy", bd_strategy)->capture_default_str();
  bd->add_option("--k", bd_dec.k)->capture_default_str();
  bd->add_option("--p", bd_dec.p)->capture_default_str();
  bd->add_option("--temperature", bd_dec.temperature)->capture_default_str();
  bd->add_flag("--nucleus-geq", bd_dec.nucleus_geq);
  bd->add_option("--priming", bd_priming)->capture_default_str();
  bd->add_option("--pairs", pdc.n_pairs)->capture_default_str();
  bd->add_option("--min-len", pdc.min_len, "excerpt length and minimum accepted length")->capture_default_str();
  bd->add_option("--retry-cap", pdc.retry_cap)->capture_default_str();
  bd->add_option("--lengths", bd_lengths, "truncation lengths (default: the scaled ten-length grid)");
  bd->add_option("--train", bd_train, "training pairs (default 70%)");
  bd->add_option("--valid", bd_valid, "validation pairs (default 5%)");
  bd->add_option("--test", bd_test, "test pairs (default: the rest)");
  bd->add_option("--seed", pdc.seed)->capture_default_str();
  bd->add_option("--out-dir", bd_out)->required();
  bd->add_option("--jobs", jobs, "worker threads (0 = all)");

  // train-detector
  auto* td = app.add_subcommand("train-detector", "train a detector on one or more datasets");
  std::vector<std::string> td_datasets;
  std::string td_kind = "combined", td_out, td_model, td_split = "train";
  int td_length = 0;
  DetectorTrainConfig dtc;
  td->add_option("--dataset", td_datasets, "dataset directory; several are mixed pair-wise")->required();
  td->add_option("--kind", td_kind, "bow | hist4 | hist50 | totalprob | combined")->capture_default_str();
  td->add_option("--length", td_length, "truncation length (0 = full)")->capture_default_str();
  td->add_option("--split", td_split)->capture_default_str();
  td->add_option("--seed", dtc.logreg.seed)->capture_default_str();
  td->add_option("--epochs", dtc.logreg.epochs)->capture_default_str();
  td->add_option("--lr", dtc.logreg.learning_rate)->capture_default_str();
  td->add_option("--l2", dtc.logreg.l2)->capture_default_str();
  td->add_option("--tolerance", dtc.logreg.tolerance)->capture_default_str();
  td->add_option("--bow-min-freq", dtc.bow_min_freq, "drop BoW dims rarer than this in LM training")
      ->capture_default_str();
  td->add_option("--model", td_model, "LM file (default: the one recorded in meta.json)");
  td->add_option("--out", td_out)->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a detector on a dataset split");
  std::string ev_detector, ev_dataset, ev_csv, ev_model, ev_split = "test";
  int ev_length = -1;
  ev->add_option("--detector", ev_detector)->required();
  ev->add_option("--dataset", ev_dataset)->required();
  ev->add_option("--split", ev_split)->capture_default_str();
  ev->add_option("--length", ev_length, "truncation length (default: the detector's training length)");
  ev->add_option("--model", ev_model);
  ev->add_option("--report-csv", ev_csv);

  // transfer-matrix
  auto* tm = app.add_subcommand("transfer-matrix", "train on each strategy, evaluate on every strategy");
  std::string tm_det_dir, tm_data_dir, tm_csv, tm_kind = "combined", tm_model;
  int tm_length = 0;
  std::uint64_t tm_seed = 1;
  bool tm_no_mixed = false;
  tm->add_option("--detectors-dir", tm_det_dir, "<strategy>.json and mixed.json; missing ones are trained")
      ->required();
  tm->add_option("--datasets-dir", tm_data_dir, "one dataset directory per strategy")->required();
  tm->add_option("--out-csv", tm_csv)->required();
  tm->add_option("--kind", tm_kind)->capture_default_str();
  tm->add_option("--length", tm_length)->capture_default_str();
  tm->add_option("--seed", tm_seed)->capture_default_str();
  tm->add_option("--model", tm_model);
  tm->add_flag("--no-mixed", tm_no_mixed);

  // analyze
  auto* an = app.add_subcommand("analyze", "distribution analyses");
  an->require_subcommand(1);
  std::vector<std::string> an_in;
  std::string an_csv, an_model, an_kind = "combined", an_split = "all";
  std::vector<int> an_lengths;
  std::uint64_t an_seed = 1;
  auto* an_conc = an->add_subcommand("concentration", "first-token concentration in the most frequent types");
  auto* an_kt = an->add_subcommand("mean-kt", "mean support size per generation step");
  auto* an_lc = an->add_subcommand("length-curve", "detector accuracy per excerpt length");
  for (auto* s : {an_conc, an_kt, an_lc}) {
    s->add_option("--in", an_in, "dataset directories")->required();
    s->add_option("--out-csv", an_csv)->required();
  }
  an_conc->add_option("--model", an_model);
  an_conc->add_option("--split", an_split)->capture_default_str();
  an_lc->add_option("--model", an_model);
  an_lc->add_option("--kind", an_kind)->capture_default_str();
  an_lc->add_option("--lengths", an_lengths, "default: the lengths recorded in meta.json");
  an_lc->add_option("--seed", an_seed)->capture_default_str();

  // serve-study
  auto* ss = app.add_subcommand("serve-study", "run the human-evaluation HTTP service");
  std::string ss_items, ss_config, ss_log = "study-events.jsonl", ss_host = "127.0.0.1";
  int ss_port = 8080;
  ss->add_option("--items", ss_items, "study items (dataset JSONL); creates a study if the log has none");
  ss->add_option("--config", ss_config, "study config JSON file");
  ss->add_option("--port", ss_port, "0 picks a free port")->capture_default_str();
  ss->add_option("--host", ss_host)->capture_default_str();
  ss->add_option("--log-path", ss_log)->capture_default_str();

  // rater-report
  auto* rr = app.add_subcommand("rater-report", "rater accuracy, agreement, convergence, vote counts");
  std::string rr_export, rr_csv;
  std::uint64_t rr_seed = 1;
  rr->add_option("--export", rr_export)->required();
  rr->add_option("--out-csv", rr_csv)->required();
  rr->add_option("--pairing-seed", rr_seed)->capture_default_str();

  // build-study-set
  auto* bs = app.add_subcommand("build-study-set", "draw study items from test splits");
  std::vector<std::string> bs_datasets;
  std::string bs_out, bs_split = "test";
  std::size_t bs_human = 150, bs_per = 50;
  std::uint64_t bs_seed = 1;
  bs->add_option("--dataset", bs_datasets)->required();
  bs->add_option("--n-human", bs_human)->capture_default_str();
  bs->add_option("--n-per-strategy", bs_per)->capture_default_str();
  bs->add_option("--split", bs_split)->capture_default_str();
  bs->add_option("--seed", bs_seed)->capture_default_str();
  bs->add_option("--out", bs_out)->required();

  // simulate-raters
  auto* sr = app.add_subcommand("simulate-raters", "drive a running study with scripted raters");
  std::string sr_host = "127.0.0.1", sr_study, sr_items, sr_policy = "correct";
  int sr_port = 8080, sr_raters = 3;
  std::size_t sr_max = static_cast<std::size_t>(-1);
  std::uint64_t sr_seed = 1;
  sr->add_option("--host", sr_host)->capture_default_str();
  sr->add_option("--port", sr_port)->capture_default_str();
  sr->add_option("--study", sr_study)->required();
  sr->add_option("--items", sr_items, "item file, for ground truth")->required();
  sr->add_option("--raters", sr_raters)->capture_default_str();
  sr->add_option("--policy", sr_policy, "correct | wrong | coin")->capture_default_str();
  sr->add_option("--max-items", sr_max);
  sr->add_option("--seed", sr_seed)->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = inject_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "gendet: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gendet: error: " << e.what() << "\n";
    return 2;
  }

  try {
    kernels::set_jobs(jobs);

    if (*train_lm) {
      const auto docs = read_corpus(corpus);
      const auto lm = train_language_model(docs, lmc);
      save_language_model(lm_out, lm);
      const auto held = heldout_documents(docs, lm.provenance);
      std::printf("trained order-%d LM: vocab %d, %zu training / %zu held-out documents -> %s\n", lmc.order,
                  lm.vocab.size(), docs.size() - held.size(), held.size(), lm_out.c_str());
    } else if (*gen) {
      const auto lm = load_language_model(gen_model);
      dec.strategy = parse_strategy(gen_strategy);
      dec.priming = parse_priming(gen_priming);
      dec.validate(lm.vocab.size());
      std::vector<kernels::GenerationJob> work(gen_n);
      if (dec.priming == Priming::one_word) {
        if (gen_corpus.empty()) throw std::invalid_argument("1wordcond generation needs --human-corpus");
        const auto docs = read_corpus(gen_corpus);
        auto humans = make_human_excerpts(docs, heldout_documents(docs, lm.provenance), lm.vocab, 1, 1);
        if (humans.empty()) throw std::runtime_error("no held-out human documents to prime from");
        Rng rng(derive_seed(dec.seed, 0x9817));
        rng.shuffle(humans.begin(), humans.end());
        for (std::size_t i = 0; i < gen_n; ++i) work[i].prime = humans[i % humans.size()].tokens.front();
      }
      for (std::size_t i = 0; i < gen_n; ++i) work[i].seed = derive_seed(dec.seed, i);
      const auto gens = kernels::generate_parallel(lm.ngram, dec, work, jobs);
      std::ofstream out(gen_out, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + gen_out);
      std::vector<GenerationTrace> traces;
      for (std::size_t i = 0; i < gen_n; ++i) {
        Excerpt e;
        char id[96];
        std::snprintf(id, sizeof id, "%s-%s-%05zu", std::string(to_string(dec.strategy)).c_str(),
                      std::string(to_string(dec.priming)).c_str(), i);
        e.id = id;
        e.tokens = gens[i].tokens;
        e.text = detokenize(e.tokens, lm.vocab);
        e.label = Label::machine;
        e.strategy = dec.strategy;
        e.priming = dec.priming;
        e.seed = work[i].seed;
        out << excerpt_to_line(e) << '\n';
        traces.push_back({e.id, gens[i].trace});
      }
      if (!gen_traces.empty()) write_traces(gen_traces, traces);
      std::printf("generated %zu %s excerpts -> %s\n", gen_n, strategy_flag(dec.strategy).c_str(), gen_out.c_str());
    } else if (*bd) {
      const auto lm = load_language_model(bd_model);
      const auto docs = read_corpus(bd_corpus);
      const auto held = heldout_documents(docs, lm.provenance);
      const auto humans = make_human_excerpts(docs, held, lm.vocab, pdc.min_len, pdc.min_len);
      bd_dec.strategy = parse_strategy(bd_strategy);
      bd_dec.priming = parse_priming(bd_priming);
      bd_dec.max_len = pdc.min_len;
      bd_dec.seed = pdc.seed;
      pdc.decoding = bd_dec;
      pdc.jobs = jobs;
      DatasetDirWrite w;
      w.min_len = pdc.min_len;
      w.data = build_paired_dataset(humans, lm.ngram, lm.vocab, pdc, &w.traces);
      SplitSizes sizes;
      const std::size_t n = pdc.n_pairs;
      const bool any = bd_train || bd_valid || bd_test;
      sizes.train = any ? bd_train : n * 70 / 100;
      sizes.valid = any ? bd_valid : n * 5 / 100;
      sizes.test = any ? bd_test : n - sizes.train - sizes.valid;
      w.splits = split_dataset(w.data, sizes, pdc.seed);
      w.scores = kernels::score_parallel(lm.ngram, w.data, jobs);
      w.lengths = bd_lengths.empty() ? default_lengths(pdc.min_len) : bd_lengths;
      for (int L : w.lengths)
        if (L < 1 || L > pdc.min_len)
          throw std::invalid_argument("--lengths: " + std::to_string(L) + " is outside [1, min_len]");
      std::error_code ec;
      const auto model_abs = fs::absolute(bd_model, ec).string();
      w.meta = {{"format", "gendet-dataset/1"},
                {"strategy", to_string(bd_dec.strategy)},
                {"priming", to_string(bd_dec.priming)},
                {"decoding", bd_dec.to_json()},
                {"pairs", n},
                {"min_len", pdc.min_len},
                {"retry_cap", pdc.retry_cap},
                {"lengths", w.lengths},
                {"seed", pdc.seed},
                {"splits", {{"train", sizes.train}, {"valid", sizes.valid}, {"test", sizes.test}}},
                {"model", model_abs},
                {"vocab_hash", hash_hex(lm.vocab.hash())},
                {"corpus_hash", lm.provenance.corpus_hash}};
      write_dataset_dir(bd_out, w, lm.vocab);
      std::printf("built %zu pairs (%s, %s) -> %s\n", n, strategy_flag(bd_dec.strategy).c_str(),
                  std::string(to_string(bd_dec.priming)).c_str(), bd_out.c_str());
    } else if (*td) {
      std::vector<DatasetDir> dirs;
      for (const auto& p : td_datasets) dirs.push_back(load_dataset_dir(p));
      const auto lm = load_language_model(resolve_model(td_model, dirs.front()));
      std::vector<LabeledSet> sets;
      for (const auto& d : dirs) sets.push_back(d.labeled(td_split, td_length, lm.vocab));
      const LabeledSet train = sets.size() == 1 ? sets.front() : mix_labeled(sets, dtc.logreg.seed);
      const auto kind = parse_detector_kind(td_kind);
      const Detector det = train_detector(kind, train.data, train.scores, lm.vocab, dtc);
      save_detector_file(td_out, det,
                         {{"datasets", td_datasets}, {"split", td_split}, {"length", td_length},
                          {"strategy", describe_strategy(train.data)}, {"n", train.data.size()}});
      std::printf("trained %s detector on %zu excerpts (%s) -> %s\n", td_kind.c_str(), train.data.size(),
                  describe_strategy(train.data).c_str(), td_out.c_str());
    } else if (*ev) {
      const auto f = load_detector_file(ev_detector);
      const auto d = load_dataset_dir(ev_dataset);
      const auto lm = load_language_model(resolve_model(ev_model, d));
      const int L = ev_length >= 0 ? ev_length : f.length;
      const auto set = d.labeled(ev_split, L, lm.vocab);
      const auto r = evaluate(f.detector, set, lm.vocab, fs::path(ev_detector).stem().string());
      std::printf("%s on %s (%s, L=%d): accuracy %.4f auc %.4f fp %zu fn %zu avg_machine_prob %.4f n %zu\n",
                  r.detector.c_str(), ev_dataset.c_str(), r.strategy.c_str(), r.length, r.accuracy, r.auc,
                  r.fp_count, r.fn_count, r.avg_machine_prob, r.n);
      if (!ev_csv.empty()) {
        std::ofstream out(ev_csv, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + ev_csv);
        out << "detector,kind,strategy,priming,length,n,accuracy,auc,fp,fn,avg_machine_prob\n"
            << r.detector << ',' << to_string(f.detector.kind) << ',' << r.strategy << ',' << r.priming << ','
            << r.length << ',' << r.n << ',' << fmt6(r.accuracy) << ',' << fmt6(r.auc) << ',' << r.fp_count << ','
            << r.fn_count << ',' << fmt6(r.avg_machine_prob) << '\n';
      }
    } else if (*tm) {
      std::map<Strategy, DatasetDir> dirs;
      for (const auto& p : dataset_subdirs(tm_data_dir)) {
        auto d = load_dataset_dir(p);
        const Strategy s = d.strategy();
        if (dirs.count(s)) throw std::runtime_error("two datasets for strategy " + std::string(to_string(s)));
        dirs.emplace(s, std::move(d));
      }
      const auto lm = load_language_model(resolve_model(tm_model, dirs.begin()->second));
      std::map<Strategy, LabeledSet> train, test;
      for (const auto& [s, d] : dirs) {
        train[s] = d.labeled("train", tm_length, lm.vocab);
        test[s] = d.labeled("test", tm_length, lm.vocab);
      }
      fs::create_directories(tm_det_dir);
      const auto kind = parse_detector_kind(tm_kind);
      DetectorFactory factory = [&](const LabeledSet& tr) {
        const std::string name = describe_strategy(tr.data);
        const auto path = (fs::path(tm_det_dir) / (name + ".json")).string();
        if (fs::exists(path)) return load_detector_file(path).detector;
        DetectorTrainConfig cfg;
        cfg.logreg.seed = tm_seed;
        Detector d = train_detector(kind, tr.data, tr.scores, lm.vocab, cfg);
        save_detector_file(path, d, {{"strategy", name}, {"split", "train"}, {"length", tm_length}});
        return d;
      };
      const auto m = transfer_matrix(factory, train, test, lm.vocab, !tm_no_mixed, tm_seed);
      write_transfer_csv(tm_csv, m);
      for (std::size_t r = 0; r < m.rows.size(); ++r) {
        std::printf("%-12s", m.rows[r].c_str());
        for (std::size_t c = 0; c < m.cols.size(); ++c)
          std::printf("  %s %.3f (p %.3f)", m.cols[c].c_str(), m.accuracy[r][c], m.avg_prob[r][c]);
        std::printf("\n");
      }
    } else if (*an_conc) {
      std::vector<ConcentrationRow> rows;
      std::vector<DatasetDir> dirs;
      for (const auto& p : an_in) dirs.push_back(load_dataset_dir(p));
      const auto lm = load_language_model(resolve_model(an_model, dirs.front()));
      const auto ms = concentration_grid(lm.vocab.size());
      auto add = [&](const std::string& source, const Dataset& ds) {
        const auto f = first_token_concentration(ds, lm.vocab, ms);
        for (std::size_t i = 0; i < ms.size(); ++i) rows.push_back({source, ms[i], f[i]});
      };
      Dataset humans;
      std::set<std::string> seen;
      for (const auto& d : dirs) {
        const auto set = d.labeled(an_split, 0, lm.vocab);
        Dataset machine;
        for (const auto& e : set.data) {
          if (e.label == Label::machine) machine.push_back(e);
          else if (seen.insert(e.id).second) humans.push_back(e);
        }
        add(source_name(d), machine);
      }
      add("human", humans);
      write_concentration_csv(an_csv, rows);
      std::printf("wrote %zu concentration rows -> %s\n", rows.size(), an_csv.c_str());
    } else if (*an_kt) {
      std::ofstream out(an_csv, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + an_csv);
      out << "source,position,mean_k,count\n";
      for (const auto& p : an_in) {
        const auto d = load_dataset_dir(p);
        std::vector<NucleusTrace> traces;
        for (auto& t : read_traces((fs::path(p) / "traces.jsonl").string())) traces.push_back(std::move(t.trace));
        const auto m = mean_kt_per_position(traces);
        // Positions are counted in excerpt tokens, so a primed excerpt starts at 1.
        const std::size_t offset = d.priming() == Priming::one_word ? 1 : 0;
        for (std::size_t i = 0; i < m.mean.size(); ++i)
          out << source_name(d) << ',' << i + offset << ',' << fmt6(m.mean[i]) << ',' << m.count[i] << '\n';
      }
      std::printf("wrote mean k_t -> %s\n", an_csv.c_str());
    } else if (*an_lc) {
      std::vector<LengthCurveRow> rows;
      const auto kind = parse_detector_kind(an_kind);
      for (const auto& p : an_in) {
        const auto d = load_dataset_dir(p);
        const auto lm = load_language_model(resolve_model(an_model, d));
        std::vector<int> lengths = an_lengths;
        if (lengths.empty()) lengths = d.meta.at("lengths").get<std::vector<int>>();
        std::map<int, LabeledSet> train, test;
        for (int L : lengths) {
          train[L] = d.labeled("train", L, lm.vocab);
          test[L] = d.labeled("test", L, lm.vocab);
        }
        DetectorTrainConfig cfg;
        cfg.logreg.seed = an_seed;
        const auto curve = length_curve(
            [&](const LabeledSet& tr) { return train_detector(kind, tr.data, tr.scores, lm.vocab, cfg); }, train,
            test, lm.vocab);
        for (const auto& pt : curve) {
          rows.push_back({std::string(to_string(d.strategy())), std::string(to_string(d.priming())), pt.length,
                          pt.report.accuracy, pt.report.auc});
          std::printf("%s %s L=%d accuracy %.4f auc %.4f\n", rows.back().strategy.c_str(),
                      rows.back().priming.c_str(), pt.length, pt.report.accuracy, pt.report.auc);
        }
      }
      write_length_curve_csv(an_csv, rows);
    } else if (*ss) {
      StudyConfig cfg;
      if (!ss_config.empty()) cfg = StudyConfig::from_json(json::parse(read_file(ss_config)));
      for (const auto& w : cfg.validate()) std::fprintf(stderr, "gendet: warning: %s\n", w.c_str());
      StudyService service(ss_log);
      if (service.study_ids().empty() && !ss_items.empty()) service.create_study(ss_items, cfg);
      for (const auto& id : service.study_ids()) std::printf("study %s\n", id.c_str());
      httplib::Server server;
      register_study_routes(server, service);
      int port = ss_port;
      if (port == 0) {
        port = server.bind_to_any_port(ss_host);
      } else if (!server.bind_to_port(ss_host, port)) {
        port = -1;
      }
      if (port < 0) throw std::runtime_error("cannot bind " + ss_host + ":" + std::to_string(ss_port));
      std::printf("listening on http://%s:%d\n", ss_host.c_str(), port);
      std::fflush(stdout);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      if (!g_stop) server.listen_after_bind();
    } else if (*rr) {
      const auto ex = parse_annotation_export(read_file(rr_export));
      write_rater_metrics_csv(rr_csv, ex, rr_seed);
      const auto judgments = collect_judgments(ex.votes, ex.reveal_lengths.size());
      const auto acc = rater_accuracy(judgments, ex.items, rr_seed);
      const auto agree = rater_agreement(judgments);
      std::printf("%zu completed judgments, %zu votes\n", judgments.size(), ex.votes.size());
      for (const auto& [name, ci] : acc.by_strategy)
        std::printf("accuracy %-12s %.3f [%.3f, %.3f]\n", name.c_str(), ci.value, ci.low, ci.high);
      std::printf("agreement %.3f over %zu pairs; honeypot pass %.3f over %zu\n", agree.value, agree.n,
                  acc.honeypot_pass.value, acc.honeypot_pass.n);
    } else if (*bs) {
      std::map<Strategy, Dataset> by;
      for (const auto& p : bs_datasets) {
        const auto d = load_dataset_dir(p);
        if (by.count(d.strategy())) throw std::runtime_error("two datasets for one strategy in build-study-set");
        by[d.strategy()] = bs_split == "all" ? d.data : select_ids(d.data, d.split(bs_split));
      }
      const auto items = build_study_set(by, bs_human, bs_per, bs_seed);
      write_dataset(bs_out, items);
      std::printf("wrote %zu study items -> %s\n", items.size(), bs_out.c_str());
    } else if (*sr) {
      std::map<std::string, Label> truths;
      for (const auto& e : read_dataset(sr_items)) truths[e.id] = e.label;
      StudyClient client(sr_host, sr_port);
      for (int r = 0; r < sr_raters; ++r) {
        RaterPolicy policy = sr_policy == "correct" ? always_correct_policy(truths)
                             : sr_policy == "wrong" ? always_wrong_policy(truths)
                             : sr_policy == "coin"  ? coin_flip_policy(derive_seed(sr_seed, static_cast<std::uint64_t>(r)))
                                                    : throw std::invalid_argument("unknown policy '" + sr_policy + "'");
        const auto res = run_synthetic_session(client, sr_study, "synthetic-" + std::to_string(r + 1), policy, sr_max);
        std::size_t ok = 0;
        for (const auto& f : res.finals) ok += f.second;
        std::printf("%s: %zu items, %zu correct\n", res.session_id.c_str(), res.items_completed, ok);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "gendet: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
