// sembridge: command-line pipelines for vocabulary transplantation,
// sparse-retrieval evaluation and the synthetic benchmark.
//
// Exit codes: 0 success, 2 usage/validation, 3 runtime/numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "sembridge/bridge.hpp"
#include "sembridge/corevec.hpp"
#include "sembridge/error.hpp"
#include "sembridge/parallel.hpp"
#include "sembridge/retrieval.hpp"
#include "sembridge/synthbench.hpp"
#include "sembridge/transplant.hpp"
#include "sembridge/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sembridge;

namespace {

std::string sha256_file(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
}

/// Run manifest written beside the primary output as <output>.manifest.json.
class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv) : command_(std::move(command)) {
    for (int i = 0; i < argc; ++i) argv_.push_back(argv[i]);
  }

  void input(const fs::path& p) {
    if (!p.empty()) inputs_[p.string()] = sha256_file(p);
  }
  json& config() { return config_; }

  void write(const fs::path& primary_output, unsigned threads) const {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started_).count();
    json j = {{"command", command_}, {"argv", argv_},          {"config", config_},
              {"inputs", inputs_},   {"tool_version", SEMBRIDGE_VERSION}, {"threads", threads},
              {"wall_time_ms", ms}};
    write_text(fs::path(primary_output.string() + ".manifest.json"), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::map<std::string, std::string> inputs_;
  json config_ = json::object();
  std::chrono::steady_clock::time_point started_ = std::chrono::steady_clock::now();
};

struct PolicyFlags {
  bool case_fold = false;
  bool trim = false;
  bool nfkc = false;
  std::vector<std::string> markers;

  void add(CLI::App* app) {
    app->add_flag("--case-fold", case_fold, "Fold case before matching");
    app->add_flag("--trim-whitespace", trim, "Trim surrounding whitespace before matching");
    app->add_flag("--nfkc", nfkc, "Apply Unicode NFKC before matching");
    app->add_option("--strip-marker", markers, "Subword marker stripped from token starts (repeatable)");
  }

  NormalizationPolicy policy() const { return {case_fold, trim, markers, nfkc}; }
};

std::vector<TokenId> parse_id_list(const std::string& text) {
  std::vector<TokenId> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      ids.push_back(static_cast<TokenId>(std::stoul(item)));
    } catch (...) {
      fail(ErrorKind::validation, "bad token id \"" + item + "\" in id list");
    }
  }
  return ids;
}

// ---------------------------------------------------------------------------

struct TransplantArgs {
  std::string source_emb, source_vocab, target_vocab;
  std::string bridge_src, bridge_tgt, bridge_src_vocab, bridge_tgt_vocab;
  std::string strategy = "sembridge";
  double alpha = 4.0;
  std::uint64_t seed = 42;
  std::string fallback = "mean";
  std::size_t ofa_rank = 0;
  std::size_t ofa_top_k = 10;
  std::size_t report_top_k = 8;
  std::string exclude;
  std::string out, report, overlap_out;
  PolicyFlags policy;
};

int cmd_transplant(const TransplantArgs& a, unsigned threads, Manifest manifest) {
  TransplantConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.alpha = a.alpha;
  cfg.seed = a.seed;
  cfg.fallback = parse_fallback(a.fallback);
  cfg.ofa_rank = a.ofa_rank;
  cfg.ofa_top_k = a.ofa_top_k;
  cfg.report_top_k = a.report_top_k;
  cfg.exclude_source_ids = parse_id_list(a.exclude);
  cfg.validate();

  if (uses_bridge(cfg.strategy) && (a.bridge_src.empty() || a.bridge_tgt.empty())) {
    fail(ErrorKind::config, "strategy " + a.strategy + " requires --bridge-src and --bridge-tgt");
  }

  const auto source_emb = read_matrix(a.source_emb);
  const auto source_vocab = read_vocabulary(a.source_vocab);
  const auto target_vocab = read_vocabulary(a.target_vocab);
  const auto policy = a.policy.policy();
  const auto overlap = compute_overlap(source_vocab, target_vocab, policy);

  std::optional<BridgeEmbeddings> bsrc, btgt;
  if (!a.bridge_src.empty()) {
    Vocabulary v = a.bridge_src_vocab.empty() ? source_vocab : read_vocabulary(a.bridge_src_vocab);
    if (!(v == source_vocab)) fail(ErrorKind::alignment, "source bridge vocabulary differs from --source-vocab");
    bsrc.emplace(std::move(v), read_matrix(a.bridge_src));
  }
  if (!a.bridge_tgt.empty()) {
    Vocabulary v = a.bridge_tgt_vocab.empty() ? target_vocab : read_vocabulary(a.bridge_tgt_vocab);
    if (!(v == target_vocab)) fail(ErrorKind::alignment, "target bridge vocabulary differs from --target-vocab");
    btgt.emplace(std::move(v), read_matrix(a.bridge_tgt));
  }

  auto result = transplant(source_emb, source_vocab, target_vocab, overlap, bsrc ? &*bsrc : nullptr,
                           btgt ? &*btgt : nullptr, cfg, threads);

  write_matrix(result.embeddings, a.out);
  write_vocabulary(target_vocab, fs::path(a.out + ".vocab.jsonl"));
  json report = report_json(result.report);
  report["overlap_policy"] = policy;
  report["overlap_conflicts"] = overlap_report_json(overlap, policy)["conflicts"];
  write_text(a.report, report.dump(1) + "\n");
  if (!a.overlap_out.empty()) write_text(a.overlap_out, overlap_report_json(overlap, policy).dump(1) + "\n");

  for (const auto& p : {a.source_emb, a.source_vocab, a.target_vocab, a.bridge_src, a.bridge_tgt, a.bridge_src_vocab,
                        a.bridge_tgt_vocab}) {
    manifest.input(p);
  }
  manifest.config() = {{"transplant", cfg}, {"policy", policy}, {"report_wall_time_ms", result.report.wall_time_ms}};
  manifest.write(a.out, threads);

  std::cout << "target rows " << result.embeddings.rows() << ": copied " << result.report.overlap_copied
            << ", synthesized " << result.report.synthesized << ", fallback " << result.report.fallback << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct OverlapArgs {
  std::string source_vocab, target_vocab, out;
  PolicyFlags policy;
};

int cmd_overlap(const OverlapArgs& a, Manifest manifest) {
  const auto policy = a.policy.policy();
  policy.validate();
  const auto overlap = compute_overlap(read_vocabulary(a.source_vocab), read_vocabulary(a.target_vocab), policy);
  const json report = overlap_report_json(overlap, policy);
  if (a.out.empty()) {
    std::cout << report.dump(1) << "\n";
    return 0;
  }
  write_text(a.out, report.dump(1) + "\n");
  manifest.input(a.source_vocab);
  manifest.input(a.target_vocab);
  manifest.config() = {{"policy", policy}};
  manifest.write(a.out, 1);
  std::cout << "overlap " << overlap.overlap_count() << ", remaining " << overlap.remaining().size() << ", conflicts "
            << overlap.conflicts.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string corpus, queries, qrels, run_out;
  std::string run_tag = "sembridge";
  std::size_t k = 10;
  std::size_t depth = 100;
  bool as_json = false;
};

int cmd_eval(const EvalArgs& a, Manifest manifest) {
  const auto docs = read_sparse_vectors(a.corpus);
  const auto queries = read_sparse_vectors(a.queries);
  const auto qrels = read_qrels(a.qrels);
  const auto index = build_index(docs);
  Run run;
  for (const auto& q : queries) {
    if (run.contains(q.id)) fail(ErrorKind::validation, "duplicate query id \"" + q.id + "\"");
    run[q.id] = search(index, q, std::max(a.depth, a.k));
  }
  auto res = ndcg_at_k(run, qrels, a.k);
  res.flops = flops_metric(queries, docs);
  if (!a.run_out.empty()) {
    write_run(run, a.run_tag, a.run_out);
    for (const auto& p : {a.corpus, a.queries, a.qrels}) manifest.input(p);
    manifest.config() = {{"k", a.k}, {"depth", a.depth}, {"run_tag", a.run_tag}};
    manifest.write(a.run_out, 1);
  }
  if (a.as_json) {
    std::cout << json{{"ndcg_at_k", res.mean_ndcg}, {"k", a.k}, {"flops", res.flops}, {"queries", res.query_count},
                      {"per_query", res.per_query_ndcg}}
                     .dump(1)
              << "\n";
  } else {
    std::printf("nDCG@%zu %.6f\nFLOPS %.6f\nqueries %zu\n", a.k, res.mean_ndcg, res.flops, res.query_count);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SpecFlags {
  synth::SyntheticLanguageSpec spec;

  void add(CLI::App* app) {
    app->add_option("--n-source", spec.n_source, "Source vocabulary size")->capture_default_str();
    app->add_option("--n-target", spec.n_target, "Target vocabulary size")->capture_default_str();
    app->add_option("--overlap", spec.overlap_fraction, "Fraction of target tokens shared verbatim")->capture_default_str();
    app->add_option("--bridge-dim", spec.bridge_dim, "Bridge-space width")->capture_default_str();
    app->add_option("--model-dim", spec.model_dim, "Model embedding width")->capture_default_str();
    app->add_option("--sigma", spec.noise_sigma, "Bridge noise on target twins")->capture_default_str();
    app->add_option("--docs", spec.docs, "Number of documents")->capture_default_str();
    app->add_option("--queries", spec.queries, "Number of queries")->capture_default_str();
    app->add_option("--doc-len", spec.doc_len, "Tokens per document")->capture_default_str();
    app->add_option("--query-len", spec.query_len, "Tokens per query")->capture_default_str();
    app->add_option("--world-seed", spec.seed, "World seed")->capture_default_str();
  }
};

int cmd_synth(const SpecFlags& f, const std::string& out_dir, Manifest manifest) {
  const auto world = synth::generate_world(f.spec);
  synth::write_world(world, out_dir);
  manifest.config() = {{"spec", f.spec}};
  manifest.write(fs::path(out_dir) / "world", 1);
  std::cout << "wrote world to " << out_dir << ": " << world.source_vocab.size() << " source tokens, "
            << world.target_vocab.size() << " target tokens, " << world.docs.size() << " docs, " << world.queries.size()
            << " queries\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string world_dir;
  SpecFlags spec;
  std::string strategies = "sembridge:4,sembridge:1,multivariate,random";
  std::uint64_t seed = 42;
  std::size_t encoder_top_k = 64;
  std::string out, emit_vectors;
  bool as_json = false;
};

std::vector<TransplantConfig> parse_strategy_list(const std::string& text, std::uint64_t seed) {
  std::vector<TransplantConfig> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    TransplantConfig c;
    c.seed = seed;
    const auto colon = item.find(':');
    c.strategy = parse_strategy(item.substr(0, colon));
    if (colon != std::string::npos) {
      try {
        c.alpha = std::stod(item.substr(colon + 1));
      } catch (...) {
        fail(ErrorKind::config, "bad alpha in strategy \"" + item + "\"");
      }
    }
    c.validate();
    out.push_back(c);
  }
  if (out.empty()) fail(ErrorKind::config, "empty strategy list");
  return out;
}

int cmd_bench(const BenchArgs& a, unsigned threads, Manifest manifest) {
  const auto strategies = parse_strategy_list(a.strategies, a.seed);
  const auto world = a.world_dir.empty() ? synth::generate_world(a.spec.spec) : synth::read_world(a.world_dir);
  synth::BenchOptions opt;
  opt.encoder_top_k = a.encoder_top_k;
  opt.threads = threads;
  const auto rows = synth::run_zero_shot_bench(world, strategies, opt);
  const json table = synth::bench_json(rows);

  if (!a.emit_vectors.empty()) {
    fs::create_directories(a.emit_vectors);
    const auto overlap = compute_overlap(world.source_vocab, world.target_vocab, NormalizationPolicy{});
    const auto corpus = synth::encode_corpus(world, opt);
    write_sparse_vectors(corpus.docs, fs::path(a.emit_vectors) / "docs.jsonl");
    write_qrels(world.qrels, fs::path(a.emit_vectors) / "qrels.txt");
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      auto result = transplant(world.source_emb, world.source_vocab, world.target_vocab, overlap, &world.bridge_src,
                               &world.bridge_tgt, strategies[i], threads);
      const auto ev = synth::evaluate_query_embeddings(world, corpus, result.embeddings, opt);
      write_sparse_vectors(ev.query_vectors, fs::path(a.emit_vectors) / ("queries." + std::to_string(i) + ".jsonl"));
    }
  }
  if (!a.out.empty()) {
    write_text(a.out, json{{"spec", world.spec}, {"options", opt}, {"rows", table}}.dump(1) + "\n");
    if (!a.world_dir.empty()) {
      for (const char* name : {synth::files::spec, synth::files::source_vocab, synth::files::source_emb,
                               synth::files::source_bridge, synth::files::target_vocab, synth::files::target_bridge,
                               synth::files::alignment, synth::files::docs, synth::files::queries, synth::files::qrels}) {
        manifest.input(fs::path(a.world_dir) / name);
      }
    }
    manifest.config() = {{"strategies", strategies}, {"options", opt}, {"spec", world.spec}};
    manifest.write(a.out, threads);
  }
  if (a.as_json) {
    std::cout << table.dump(1) << "\n";
  } else {
    std::cout << synth::bench_table(rows);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct InspectArgs {
  std::string report, source_vocab, target_vocab, token;
  std::size_t top_k = 8;
  bool as_json = false;
};

int cmd_inspect(const InspectArgs& a) {
  std::ifstream in(a.report);
  if (!in) fail(ErrorKind::io, "cannot open " + a.report);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("report: ") + e.what());
  }
  const auto report = report_from_json(j);
  const auto source = read_vocabulary(a.source_vocab);
  const auto target = read_vocabulary(a.target_vocab);

  std::optional<TokenId> id = target.find(a.token);
  if (!id && !a.token.empty() && a.token.find_first_not_of("0123456789") == std::string::npos) {
    const auto n = std::stoull(a.token);
    if (n < target.size()) id = static_cast<TokenId>(n);
  }
  if (!id) fail(ErrorKind::validation, "unknown target token \"" + a.token + "\"");
  if (*id >= report.records.size()) fail(ErrorKind::validation, "report does not cover target id " + std::to_string(*id));
  const auto& rec = report.records[*id];

  json out = {{"target_id", *id}, {"token", target.token(*id)}, {"kind", to_string(rec.kind)}, {"method", rec.method}};
  std::ostringstream text;
  text << target.token(*id) << " (id " << *id << "): ";
  if (rec.kind == ProvenanceKind::copied) {
    out["source_id"] = *rec.source_id;
    out["source_token"] = source.token(*rec.source_id);
    text << "copied from " << source.token(*rec.source_id) << "\n";
  } else if (rec.has_weights()) {
    json w = json::array();
    text << rec.method << ", support " << rec.support_size << "\n";
    for (std::size_t i = 0; i < std::min(a.top_k, rec.weights.size()); ++i) {
      const auto [sid, weight] = rec.weights[i];
      w.push_back({{"source_id", sid}, {"source_token", source.token(sid)}, {"weight", weight}});
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", weight);
      text << "  " << source.token(sid) << "\t" << buf << "\n";
    }
    out["support_size"] = rec.support_size;
    out["weights"] = w;
  } else {
    text << (rec.kind == ProvenanceKind::fallback ? "fallback " : "synthesized by ") << rec.method << "\n";
  }
  std::cout << (a.as_json ? out.dump(1) + "\n" : text.str());
  return 0;
}

int cmd_vocab_stats(const std::string& vocab_path, bool as_json) {
  const auto vocab = read_vocabulary(vocab_path);
  const auto counts = script_distribution(vocab);
  json out = json::array();
  for (auto c : all_script_classes) {
    const std::size_t n = counts.contains(c) ? counts.at(c) : 0;
    out.push_back({{"script", to_string(c)},
                   {"count", n},
                   {"percent", 100.0 * static_cast<double>(n) / static_cast<double>(vocab.size())}});
  }
  if (as_json) {
    std::cout << json{{"vocab_size", vocab.size()}, {"scripts", out}}.dump(1) << "\n";
    return 0;
  }
  std::printf("%-12s  %8s  %7s\n", "script", "count", "percent");
  for (const auto& row : out) {
    std::printf("%-12s  %8zu  %6.2f%%\n", row["script"].get<std::string>().c_str(), row["count"].get<std::size_t>(),
                row["percent"].get<double>());
  }
  std::printf("%-12s  %8zu\n", "total", vocab.size());
  return 0;
}

void report_error(ErrorKind kind, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::cerr << "error kind=" << to_string(kind) << " message=" << json(flat).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vocabulary transplantation and sparse-retrieval evaluation toolkit"};
  app.require_subcommand(1);
  unsigned threads_flag = 0;
  app.add_option("--threads", threads_flag, "Worker threads (default: SEMBRIDGE_THREADS or logical cores)");
  app.set_version_flag("--version", SEMBRIDGE_VERSION);

  TransplantArgs ta;
  auto* tr = app.add_subcommand("transplant", "Initialize target-vocabulary embeddings from a source model");
  tr->add_option("--source-emb", ta.source_emb, "Source embedding matrix (EMBM)")->required()->check(CLI::ExistingFile);
  tr->add_option("--source-vocab", ta.source_vocab, "Source vocabulary (JSON-lines)")->required()->check(CLI::ExistingFile);
  tr->add_option("--target-vocab", ta.target_vocab, "Target vocabulary (JSON-lines)")->required()->check(CLI::ExistingFile);
  tr->add_option("--bridge-src", ta.bridge_src, "Source bridge matrix (EMBM)")->check(CLI::ExistingFile);
  tr->add_option("--bridge-tgt", ta.bridge_tgt, "Target bridge matrix (EMBM)")->check(CLI::ExistingFile);
  tr->add_option("--bridge-src-vocab", ta.bridge_src_vocab, "Vocabulary file shipped with the source bridge matrix")
      ->check(CLI::ExistingFile);
  tr->add_option("--bridge-tgt-vocab", ta.bridge_tgt_vocab, "Vocabulary file shipped with the target bridge matrix")
      ->check(CLI::ExistingFile);
  tr->add_option("--strategy", ta.strategy, "sembridge|random|mean|univariate|multivariate|focus_like|ofa_like")
      ->capture_default_str();
  tr->add_option("--alpha", ta.alpha, "Entmax sparsity exponent")->capture_default_str();
  tr->add_option("--seed", ta.seed, "Seed for sampled rows")->capture_default_str();
  tr->add_option("--fallback", ta.fallback, "mean|random for tokens without a bridge vector")->capture_default_str();
  tr->add_option("--ofa-rank", ta.ofa_rank, "Factorization rank for ofa_like (0: min(d, 100))")->capture_default_str();
  tr->add_option("--ofa-top-k", ta.ofa_top_k, "Neighbours mixed by ofa_like")->capture_default_str();
  tr->add_option("--report-top-k", ta.report_top_k, "Weights kept per token in the report (0: all)")->capture_default_str();
  tr->add_option("--exclude-source-ids", ta.exclude, "Comma-separated source ids removed from the candidate pool");
  tr->add_option("--out", ta.out, "Output target embedding matrix (EMBM)")->required();
  tr->add_option("--report", ta.report, "Output report (JSON)")->required();
  tr->add_option("--overlap-out", ta.overlap_out, "Optional overlap report (JSON)");
  ta.policy.add(tr);

  OverlapArgs oa;
  auto* ov = app.add_subcommand("overlap", "Compute the overlapping token set of two vocabularies");
  ov->add_option("--source-vocab", oa.source_vocab)->required()->check(CLI::ExistingFile);
  ov->add_option("--target-vocab", oa.target_vocab)->required()->check(CLI::ExistingFile);
  ov->add_option("--out", oa.out, "Output overlap report (JSON); stdout when omitted");
  oa.policy.add(ov);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Score sparse queries against a sparse corpus");
  ev->add_option("--corpus", ea.corpus, "Document vectors (JSON-lines)")->required()->check(CLI::ExistingFile);
  ev->add_option("--queries", ea.queries, "Query vectors (JSON-lines)")->required()->check(CLI::ExistingFile);
  ev->add_option("--qrels", ea.qrels, "Relevance judgements")->required()->check(CLI::ExistingFile);
  ev->add_option("--run-out", ea.run_out, "Write the ranked run file here");
  ev->add_option("--run-tag", ea.run_tag)->capture_default_str();
  ev->add_option("--k", ea.k, "nDCG cutoff")->capture_default_str();
  ev->add_option("--depth", ea.depth, "Results retrieved per query")->capture_default_str();
  ev->add_flag("--json", ea.as_json);

  SpecFlags sf;
  std::string synth_out;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic language pair with ground-truth alignment");
  sy->add_option("--out-dir", synth_out)->required();
  sf.add(sy);

  BenchArgs ba;
  auto* be = app.add_subcommand("bench", "Zero-shot strategy comparison on a synthetic world");
  be->add_option("--world", ba.world_dir, "World directory from `synth`; generated from flags when omitted");
  be->add_option("--strategies", ba.strategies, "Comma list, e.g. sembridge:4,sembridge:1,multivariate,random")
      ->capture_default_str();
  be->add_option("--seed", ba.seed, "Seed for sampled rows")->capture_default_str();
  be->add_option("--encoder-top-k", ba.encoder_top_k)->capture_default_str();
  be->add_option("--out", ba.out, "Write the table as JSON");
  be->add_option("--emit-vectors", ba.emit_vectors, "Directory for encoded docs/queries/qrels");
  be->add_flag("--json", ba.as_json);
  ba.spec.add(be);

  InspectArgs ia;
  auto* in = app.add_subcommand("inspect", "Show the provenance of one target token");
  in->add_option("--report", ia.report)->required()->check(CLI::ExistingFile);
  in->add_option("--source-vocab", ia.source_vocab)->required()->check(CLI::ExistingFile);
  in->add_option("--target-vocab", ia.target_vocab)->required()->check(CLI::ExistingFile);
  in->add_option("--token", ia.token, "Target token string or id")->required();
  in->add_option("--top-k", ia.top_k)->capture_default_str();
  in->add_flag("--json", ia.as_json);

  std::string stats_vocab;
  bool stats_json = false;
  auto* vs = app.add_subcommand("vocab-stats", "Unicode-script distribution of a vocabulary");
  vs->add_option("--vocab", stats_vocab)->required()->check(CLI::ExistingFile);
  vs->add_flag("--json", stats_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(ErrorKind::validation, e.what());
    return 2;
  }

  const unsigned threads = resolve_threads(threads_flag);
  const std::string command = app.get_subcommands().front()->get_name();
  Manifest manifest(command, argc, argv);
  try {
    if (*tr) return cmd_transplant(ta, threads, manifest);
    if (*ov) return cmd_overlap(oa, manifest);
    if (*ev) return cmd_eval(ea, manifest);
    if (*sy) return cmd_synth(sf, synth_out, manifest);
    if (*be) return cmd_bench(ba, threads, manifest);
    if (*in) return cmd_inspect(ia);
    if (*vs) return cmd_vocab_stats(stats_vocab, stats_json);
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    report_error(ErrorKind::numeric, e.what());
    return 3;
  }
  return 2;
}
