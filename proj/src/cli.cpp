#include "ctrnli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

#include "ctrnli/corpus.hpp"
#include "ctrnli/exemplars.hpp"
#include "ctrnli/file_util.hpp"
#include "ctrnli/metrics.hpp"
#include "ctrnli/opro.hpp"
#include "ctrnli/parallel.hpp"
#include "ctrnli/pipeline.hpp"
#include "ctrnli/strategies.hpp"

namespace ctrnli::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::string_view kStubScheme = "stub:";
constexpr std::string_view kLinksFile = "contrast_links.json";
constexpr std::string_view kTrialsDir = "trials";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string endpoint;
  std::string model = "default";
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t workers = 4;
  std::string cache;
  std::string templates = CTRNLI_DEFAULT_TEMPLATE_DIR;
  std::uint64_t seed = 0;
  int max_tokens = 1024;
  std::size_t max_context_chars = 0;
  int retries = 3;
  int backoff_ms = 1000;
  double rate_limit = 0.0;
  int timeout_s = 300;
  double opro_temperature = 1.0;
  std::string subtitle_regex;
  bool no_keyword_rescue = false;
  std::string embedding = "hash";
  std::string embedding_model;
  std::size_t embedding_dim = 384;
  std::uint64_t embedding_seed = 0;
  bool type_before_section = false;
  bool allow_identical_exemplar = false;

  nlohmann::json to_json() const {
    return {
        {"endpoint", endpoint},
        {"model", model},
        {"api_key_env", api_key_env},
        {"workers", workers},
        {"cache", cache},
        {"templates", templates},
        {"seed", seed},
        {"max_tokens", max_tokens},
        {"max_context_chars", max_context_chars},
        {"retries", retries},
        {"backoff_ms", backoff_ms},
        {"rate_limit", rate_limit},
        {"timeout_s", timeout_s},
        {"opro_temperature", opro_temperature},
        {"subtitle_regex", subtitle_regex},
        {"no_keyword_rescue", no_keyword_rescue},
        {"embedding", embedding},
        {"embedding_model", embedding_model},
        {"embedding_dim", embedding_dim},
        {"embedding_seed", embedding_seed},
        {"type_before_section", type_before_section},
        {"allow_identical_exemplar", allow_identical_exemplar},
    };
  }
};

struct CommandArgs {
  std::string data_dir;
  std::string samples;
  std::string out;
  std::string strategy;
  std::string store;
  std::string pool;
  int iterations = 10;
  std::size_t demos = 8;
  std::size_t eval = 50;
  std::size_t capacity = 8;
  std::string predictions;
  std::string gold;
  std::string links;
  std::string json_out;
  bool macro = false;
};

// Everything a command needs to talk to the model, built only after the
// configuration has been validated.
struct Runtime {
  std::shared_ptr<LlmClient> client;
  std::unique_ptr<PromptBuilder> prompts;
  ParseOptions parse;
  SubtitleRule subtitles;

  Engine engine() const { return Engine{*client, *prompts, parse}; }
};

SubtitleRule make_subtitle_rule(const RunConfig& c) {
  if (c.subtitle_regex.empty()) return {};
  try {
    return SubtitleRule(c.subtitle_regex);
  } catch (const std::regex_error& e) {
    throw ConfigError("--subtitle-regex does not compile: " + std::string(e.what()));
  }
}

std::shared_ptr<ChatBackend> make_backend(const RunConfig& c) {
  if (c.endpoint.empty()) throw ConfigError("--endpoint is required");
  if (c.endpoint.starts_with(kStubScheme)) {
    const fs::path script = c.endpoint.substr(kStubScheme.size());
    try {
      return std::make_shared<ScriptedBackend>(read_json_file(script).get<std::vector<std::string>>());
    } catch (const std::exception& e) {
      throw ConfigError("stub script " + script.string() + " must be a JSON array of strings: " + e.what());
    }
  }
  if (!c.endpoint.starts_with("http://") && !c.endpoint.starts_with("https://")) {
    throw ConfigError("--endpoint must be an http(s) URL or stub:<file>");
  }
  return std::make_shared<HttpBackend>(
      EndpointConfig{c.endpoint, c.model, c.api_key_env, std::chrono::seconds(c.timeout_s)});
}

Runtime make_runtime(const RunConfig& c, std::ostream& err) {
  if (c.workers == 0) throw ConfigError("--workers must be positive");
  if (c.retries < 1) throw ConfigError("--retries must be >= 1");
  if (c.model.empty()) throw ConfigError("--model is required");
  if (!fs::is_directory(c.templates)) throw ConfigError("template directory not found: " + c.templates);

  Runtime rt;
  rt.subtitles = make_subtitle_rule(c);
  rt.parse.keyword_rescue = !c.no_keyword_rescue;
  try {
    rt.prompts = std::make_unique<PromptBuilder>(TemplateSet::load(c.templates),
                                                 GenerationParams::deterministic(c.max_tokens),
                                                 GenerationParams::sampled(c.opro_temperature, c.max_tokens));
  } catch (const TemplateError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("generation parameters: ") + e.what());
  }

  std::shared_ptr<ResponseCache> cache;
  if (c.cache.empty()) {
    err << "warning: no --cache given; responses are kept in memory only and runs cannot resume\n";
    cache = std::make_shared<ResponseCache>();
  } else {
    const auto parent = fs::absolute(c.cache).parent_path();
    if (!fs::is_directory(parent)) throw ConfigError("cache directory not found: " + parent.string());
    cache = std::make_shared<ResponseCache>(fs::path(c.cache));
  }

  if (!c.api_key_env.empty() && !c.endpoint.starts_with(kStubScheme) && !std::getenv(c.api_key_env.c_str())) {
    err << "warning: " << c.api_key_env << " is not set; sending requests without a bearer token\n";
  }

  ClientOptions options;
  options.model = c.model;
  options.max_attempts = c.retries;
  options.initial_backoff = std::chrono::milliseconds(c.backoff_ms);
  options.requests_per_minute = c.rate_limit;
  options.max_context_chars = c.max_context_chars;
  rt.client = std::make_shared<LlmClient>(make_backend(c), options, std::move(cache));
  return rt;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& c, std::size_t dim) {
  if (c.embedding == "hash") return std::make_unique<HashEmbeddingProvider>(dim, c.embedding_seed);
  if (c.embedding.starts_with("http://") || c.embedding.starts_with("https://")) {
    return std::make_unique<HttpEmbeddingProvider>(c.embedding, c.embedding_model, dim, c.api_key_env);
  }
  throw ConfigError("--embedding must be \"hash\" or an http(s) URL");
}

SelectionOptions make_selection(const RunConfig& c) {
  return {!c.type_before_section, !c.allow_identical_exemplar};
}

fs::path samples_path(const CommandArgs& a) {
  const fs::path p(a.samples);
  return p.is_absolute() ? p : fs::path(a.data_dir) / p;
}

Corpus load_run_corpus(const CommandArgs& a) {
  if (!fs::is_directory(a.data_dir)) throw ConfigError("data directory not found: " + a.data_dir);
  const auto path = samples_path(a);
  if (!fs::is_regular_file(path)) throw ConfigError("sample file not found: " + path.string());
  try {
    Corpus corpus;
    corpus.samples = load_samples(path);
    corpus.trials = load_trials(fs::path(a.data_dir) / kTrialsDir);
    check_trial_references(corpus.samples, corpus.trials);
    return corpus;
  } catch (const CorpusError& e) {
    throw ConfigError(e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_file_atomic(path, doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
}

RunManifest start_manifest(Strategy strategy, const RunConfig& c, const Runtime& rt,
                           const std::vector<std::string>& command) {
  RunManifest m;
  m.strategy = strategy;
  m.model = c.model;
  m.template_versions = rt.prompts->templates().versions();
  m.config = c.to_json();
  m.command = command;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const Runtime& rt, const std::string& status) {
  m.status = status;
  m.finished_at = utc_timestamp();
  m.backend_calls = rt.client->backend_calls();
  m.cache_hits = rt.client->cache_hits();
}

// validate ------------------------------------------------------------------

int cmd_validate(const CommandArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir(a.data_dir);
  if (!fs::is_directory(dir)) {
    err << "error: data directory not found: " << dir.string() << "\n";
    return kValidationFailed;
  }
  std::vector<fs::path> sample_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != kLinksFile) {
      sample_files.push_back(entry.path());
    }
  }
  std::sort(sample_files.begin(), sample_files.end());
  if (sample_files.empty()) {
    err << "error: no sample files found in " << dir.string() << "\n";
    return kValidationFailed;
  }

  bool ok = true;
  SampleMap all;
  for (const auto& file : sample_files) {
    try {
      auto samples = load_samples(file);
      const auto n = samples.size();
      for (auto& [id, s] : samples) {
        if (!all.emplace(id, std::move(s)).second) {
          err << "error: " << file.filename().string() << ": DuplicateId " << id << " also defined in another file\n";
          ok = false;
        }
      }
      out << "ok     " << file.filename().string() << " (" << n << " samples)\n";
    } catch (const CorpusError& e) {
      err << "error: " << file.filename().string() << ": " << e.what() << "\n";
      ok = false;
    }
  }

  TrialMap trials;
  const auto trial_dir = dir / kTrialsDir;
  if (!fs::is_directory(trial_dir)) {
    err << "error: trial directory not found: " << trial_dir.string() << "\n";
    ok = false;
  } else {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(trial_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::size_t bad = 0;
    for (const auto& file : files) {
      try {
        auto trial = load_trial(file);
        const auto id = trial.id;
        if (!trials.emplace(id, std::move(trial)).second) {
          err << "error: trials/" << file.filename().string() << ": DuplicateId " << id << "\n";
          ++bad;
        }
      } catch (const CorpusError& e) {
        err << "error: trials/" << file.filename().string() << ": " << e.what() << "\n";
        ++bad;
      }
    }
    ok = ok && bad == 0;
    out << (bad == 0 ? "ok     " : "errors ") << "trials/ (" << trials.size() << " trials)\n";
  }

  std::size_t dangling = 0;
  for (const auto& [id, s] : all) {
    for (const auto* trial : {&s.primary_trial, s.secondary_trial ? &*s.secondary_trial : nullptr}) {
      if (trial && !trials.contains(*trial)) {
        err << "error: sample " << id << " references missing trial " << *trial << "\n";
        ++dangling;
      }
    }
  }
  ok = ok && dangling == 0;

  const auto links_path = dir / kLinksFile;
  if (fs::exists(links_path)) {
    try {
      const auto links = load_contrast_links(links_path, all);
      out << "ok     " << kLinksFile << " (" << links.size() << " links)\n";
    } catch (const CorpusError& e) {
      err << "error: " << kLinksFile << ": " << e.what() << "\n";
      ok = false;
    }
  }

  out << (ok ? "corpus is valid" : "corpus has errors") << ": " << all.size() << " samples, " << trials.size()
      << " trials\n";
  return ok ? kOk : kValidationFailed;
}

// build-store ---------------------------------------------------------------

int cmd_build_store(const RunConfig& c, const CommandArgs& a, std::ostream& out, std::ostream& err,
                    const std::atomic<bool>* cancel) {
  if (a.out.empty()) throw ConfigError("--out is required");
  const auto corpus = load_run_corpus(a);
  std::vector<Sample> train;
  for (const auto& [id, s] : corpus.samples) {
    if (!s.gold) throw ConfigError("training sample " + id + " has no gold label");
    train.push_back(s);
  }
  const auto rt = make_runtime(c, err);
  auto embedder = make_embedder(c, c.embedding_dim);
  const auto engine = rt.engine();
  const CotPipeline pipeline = [&](const Sample& s) -> CotOutcome {
    if (cancel && cancel->load()) throw Cancelled();
    try {
      return run_cot(engine, s, render_evidence(s, corpus.trials, rt.subtitles));
    } catch (const EmptyReasoning&) {
      return {};
    }
  };
  try {
    const auto store = build_store(train, pipeline, *embedder, c.workers);
    store.save(a.out);
    out << "exemplar store: kept " << store.size() << " of " << train.size() << " training samples -> " << a.out
        << "\n";
  } catch (const Cancelled&) {
    err << "interrupted; cached responses are kept, rerun to resume\n";
    return kPartial;
  } catch (const EmptyStore& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailed;
  } catch (const LlmError& e) {
    err << "error: " << e.what() << "\n";
    return kEndpointFailure;
  } catch (const ProviderUnavailable& e) {
    err << "error: " << e.what() << "\n";
    return kEndpointFailure;
  }
  return kOk;
}

// run -----------------------------------------------------------------------

int cmd_run(const RunConfig& c, const CommandArgs& a, const std::vector<std::string>& command, std::ostream& out,
            std::ostream& err, const std::atomic<bool>* cancel) {
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw ConfigError("--strategy must be one of zeroshot-cot, oneshot, opro");
  if (a.out.empty()) throw ConfigError("--out is required");

  std::optional<ExemplarStore> store;
  std::optional<InstructionPool> pool;
  if (*strategy == Strategy::DynamicOneShot) {
    if (a.store.empty() || !fs::is_regular_file(a.store)) throw ConfigError("exemplar store not found: " + a.store);
    try {
      store = ExemplarStore::load(a.store);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (*strategy == Strategy::Opro) {
    if (a.pool.empty() || !fs::is_regular_file(a.pool)) throw ConfigError("instruction pool not found: " + a.pool);
    try {
      pool = load_pool(a.pool);
    } catch (const std::exception& e) {
      throw ConfigError("cannot read instruction pool: " + std::string(e.what()));
    }
    if (pool->empty()) throw ConfigError("instruction pool is empty: " + a.pool);
  }
  const auto corpus = load_run_corpus(a);
  const auto rt = make_runtime(c, err);
  std::unique_ptr<EmbeddingProvider> embedder;
  if (store) embedder = make_embedder(c, store->dim());

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  const auto manifest_path = out_dir / "manifest.json";
  auto manifest = start_manifest(*strategy, c, rt, command);
  manifest.total = corpus.samples.size();
  write_json(manifest_path, manifest.to_json());

  RunOptions options;
  options.workers = c.workers;
  options.cancel = cancel;
  options.subtitles = rt.subtitles;
  options.on_checkpoint = [&](std::size_t done, std::size_t) {
    rt.client->cache().flush();
    manifest.completed = done;
    manifest.backend_calls = rt.client->backend_calls();
    manifest.cache_hits = rt.client->cache_hits();
    write_json(manifest_path, manifest.to_json());
  };

  const auto engine = rt.engine();
  std::vector<Prediction> predictions;
  try {
    switch (*strategy) {
      case Strategy::ZeroShotCot:
        predictions = run_zero_shot_cot(corpus.samples, corpus.trials, engine, options);
        break;
      case Strategy::DynamicOneShot:
        predictions = run_dynamic_one_shot(corpus.samples, corpus.trials, *store, *embedder, engine,
                                           make_selection(c), options);
        break;
      case Strategy::Opro:
        predictions = run_opro_predict(corpus.samples, corpus.trials, *pool, engine, options);
        break;
    }
  } catch (const Cancelled&) {
    rt.client->cache().flush();
    finish_manifest(manifest, rt, "interrupted");
    write_json(manifest_path, manifest.to_json());
    err << "interrupted; no predictions written, rerun with the same cache to resume\n";
    return kPartial;
  }

  const auto failures = static_cast<std::size_t>(
      std::count_if(predictions.begin(), predictions.end(), [](const Prediction& p) { return p.error.has_value(); }));
  manifest.completed = predictions.size();
  manifest.failures = failures;
  if (!predictions.empty() && failures == predictions.size()) {
    finish_manifest(manifest, rt, "failed");
    write_json(manifest_path, manifest.to_json());
    err << "error: every sample failed; first error: " << *predictions.front().error << "\n";
    return kEndpointFailure;
  }

  write_json(out_dir / "predictions.json", predictions_json(predictions));
  write_json(out_dir / "details.json", details_json(predictions));
  finish_manifest(manifest, rt, failures == 0 ? "complete" : "partial");
  write_json(manifest_path, manifest.to_json());

  std::size_t fallbacks = 0;
  for (const auto& p : predictions) fallbacks += p.status == AnswerStatus::Fallback ? 1 : 0;
  out << to_string(*strategy) << ": " << predictions.size() << " predictions (" << fallbacks << " fallback, "
      << failures << " failed), " << rt.client->backend_calls() << " endpoint calls, " << rt.client->cache_hits()
      << " cache hits -> " << out_dir.string() << "\n";
  if (failures > 0) {
    err << "warning: " << failures << " sample(s) failed and were recorded as Contradiction; see details.json\n";
    return kPartial;
  }
  return kOk;
}

// opro ----------------------------------------------------------------------

int cmd_opro(const RunConfig& c, const CommandArgs& a, const std::vector<std::string>& command, std::ostream& out,
             std::ostream& err) {
  if (a.out.empty()) throw ConfigError("--out is required");
  OproConfig ocfg;
  ocfg.iterations = a.iterations;
  ocfg.demo_count = a.demos;
  ocfg.eval_count = a.eval;
  ocfg.capacity = a.capacity;
  ocfg.seed = c.seed;
  ocfg.workers = c.workers;
  const auto corpus = load_run_corpus(a);
  const auto rt = make_runtime(c, err);
  OproSplit split;
  try {
    split = select_opro_samples(corpus.samples, corpus.trials, ocfg, rt.subtitles);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  const auto manifest_path = out_dir / "manifest.json";
  auto manifest = start_manifest(Strategy::Opro, c, rt, command);
  manifest.total = static_cast<std::size_t>(ocfg.iterations);
  write_json(manifest_path, manifest.to_json());

  const auto log_path = out_dir / "opro_log.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  const auto log_event = [&](const OproEvent& e) { log << e.to_json().dump() << '\n' << std::flush; };

  const auto engine = rt.engine();
  std::optional<OproResult> seeded;
  try {
    seeded = seed_pool(ocfg, split.eval, engine);
  } catch (const LlmError& e) {
    finish_manifest(manifest, rt, "failed");
    write_json(manifest_path, manifest.to_json());
    err << "error: scoring the seed instruction failed: " << e.what() << "\n";
    return kEndpointFailure;
  }
  log_event(seeded->log.front());

  const auto result = run_opro(ocfg, split, engine, seeded->pool, [&](const OproEvent& e, const InstructionPool& p) {
    log_event(e);
    save_pool(p, out_dir / "pool.json");
    manifest.completed = static_cast<std::size_t>(e.iteration);
    write_json(manifest_path, manifest.to_json());
  });
  save_pool(result.pool, out_dir / "pool.json");
  finish_manifest(manifest, rt, result.aborted ? "partial" : "complete");
  write_json(manifest_path, manifest.to_json());
  if (result.aborted) {
    err << "error: OPRO aborted at " << *result.aborted << "; partial log in " << log_path.string() << "\n";
    return kEndpointFailure;
  }
  out << "opro: best F1 " << format_score(result.pool.best().f1) << " after " << ocfg.iterations
      << " iterations -> " << (out_dir / "pool.json").string() << "\n";
  return kOk;
}

// score ---------------------------------------------------------------------

int cmd_score(const CommandArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const auto predictions = load_predictions(a.predictions);
    const auto gold_samples = load_samples(a.gold);
    LabelMap gold;
    for (const auto& [id, s] : gold_samples) {
      if (s.gold) gold[id] = *s.gold;
    }
    std::vector<ContrastPair> links;
    if (!a.links.empty()) links = load_contrast_links(a.links, gold_samples);
    const auto report = evaluate(predictions, gold, links, a.macro ? F1Mode::Macro : F1Mode::EntailmentPositive);
    if (predictions.size() < gold.size()) {
      err << "warning: " << gold.size() - predictions.size() << " gold sample(s) have no prediction\n";
    }
    out << report.to_table();
    if (!a.json_out.empty()) write_json(a.json_out, report.to_json());
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailed;
  }
}

void add_config_options(CLI::App& app, RunConfig& c) {
  app.add_option("--endpoint", c.endpoint, "Chat-completions base URL, or stub:<file> with a JSON array of replies");
  app.add_option("--model", c.model, "Model name sent with each request")->capture_default_str();
  app.add_option("--api-key-env", c.api_key_env, "Environment variable holding the bearer token")
      ->capture_default_str();
  app.add_option("--workers", c.workers, "Parallel requests")->capture_default_str();
  app.add_option("--cache", c.cache, "Response cache file (JSON lines, append-only)");
  app.add_option("--templates", c.templates, "Prompt template directory")->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for sample splits and sampled requests")->capture_default_str();
  app.add_option("--max-tokens", c.max_tokens, "max_tokens per request")->capture_default_str();
  app.add_option("--max-context-chars", c.max_context_chars, "Reject prompts longer than this (0 = off)")
      ->capture_default_str();
  app.add_option("--retries", c.retries, "Attempts per request")->capture_default_str();
  app.add_option("--backoff-ms", c.backoff_ms, "First retry delay; doubles per attempt")->capture_default_str();
  app.add_option("--rate-limit", c.rate_limit, "Requests per minute (0 = unlimited)")->capture_default_str();
  app.add_option("--timeout", c.timeout_s, "HTTP timeout in seconds")->capture_default_str();
  app.add_option("--opro-temperature", c.opro_temperature, "Sampling temperature for instruction generation")
      ->capture_default_str();
  app.add_option("--subtitle-regex", c.subtitle_regex, "Regex matching whole cohort-subtitle lines");
  app.add_flag("--no-keyword-rescue", c.no_keyword_rescue, "Do not accept bare label words outside JSON");
  app.add_option("--embedding", c.embedding, "\"hash\" or an embeddings endpoint URL")->capture_default_str();
  app.add_option("--embedding-model", c.embedding_model, "Model name for the embeddings endpoint");
  app.add_option("--embedding-dim", c.embedding_dim, "Embedding dimension for build-store")->capture_default_str();
  app.add_option("--embedding-seed", c.embedding_seed, "Seed of the hash embedding")->capture_default_str();
  app.add_flag("--type-before-section", c.type_before_section,
               "Prefer same-type over same-section exemplars when no exemplar matches both");
  app.add_flag("--allow-identical-exemplar", c.allow_identical_exemplar,
               "Allow an exemplar whose statement equals the query statement");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* cancel) {
  CLI::App app{"Clinical-trial NLI prompting harness"};
  app.name("ctrnli");
  app.set_help_flag("--help", "Print help");
  app.set_config("--config", "", "key = value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig config;
  CommandArgs a;
  add_config_options(app, config);

  auto* validate = app.add_subcommand("validate", "Check samples, trials, and contrast links in a data directory");
  validate->add_option("data_dir", a.data_dir, "Data directory")->required();

  auto* build = app.add_subcommand("build-store", "Build the exemplar store from correctly answered training samples");
  build->add_option("--data-dir", a.data_dir, "Data directory")->required();
  build->add_option("--samples", a.samples, "Training sample file, relative to the data directory");
  build->add_option("--out", a.out, "Output store file (JSON lines)")->required();

  auto* run = app.add_subcommand("run", "Predict labels for a sample file with one strategy");
  run->add_option("--strategy", a.strategy, "zeroshot-cot | oneshot | opro")->required();
  run->add_option("--data-dir", a.data_dir, "Data directory")->required();
  run->add_option("--samples", a.samples, "Sample file, relative to the data directory");
  run->add_option("--out", a.out, "Run directory")->required();
  run->add_option("--store", a.store, "Exemplar store (oneshot)");
  run->add_option("--pool", a.pool, "Instruction pool (opro)");

  auto* opro = app.add_subcommand("opro", "Search for an instruction with the OPRO loop");
  opro->add_option("--data-dir", a.data_dir, "Data directory")->required();
  opro->add_option("--samples", a.samples, "Labeled sample file, relative to the data directory");
  opro->add_option("--out", a.out, "Output directory")->required();
  opro->add_option("--iterations", a.iterations, "Meta-prompt generations")->capture_default_str();
  opro->add_option("--demos", a.demos, "Examples shown in the meta-prompt")->capture_default_str();
  opro->add_option("--eval", a.eval, "Held-out samples scored per candidate")->capture_default_str();
  opro->add_option("--capacity", a.capacity, "Instruction pool size")->capture_default_str();

  auto* score = app.add_subcommand("score", "Score a predictions file against gold labels");
  score->add_option("--predictions", a.predictions, "Predictions file")->required();
  score->add_option("--gold", a.gold, "Sample file with gold labels")->required();
  score->add_option("--links", a.links, "Contrast links file");
  score->add_option("--json-out", a.json_out, "Also write the report as JSON");
  score->add_flag("--macro", a.macro, "Macro-averaged F1 instead of Entailment-positive F1");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) {
      err << sub->help();
    }
    return kConfigError;
  }

  std::vector<std::string> command{"ctrnli"};
  command.insert(command.end(), args.begin(), args.end());
  try {
    if (validate->parsed()) return cmd_validate(a, out, err);
    if (score->parsed()) return cmd_score(a, out, err);
    if (build->parsed()) {
      if (a.samples.empty()) a.samples = "train.json";
      return cmd_build_store(config, a, out, err, cancel);
    }
    if (a.samples.empty()) a.samples = "dev.json";
    if (run->parsed()) return cmd_run(config, a, command, out, err, cancel);
    if (opro->parsed()) return cmd_opro(config, a, command, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace ctrnli::cli
