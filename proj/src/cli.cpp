#include "ehpc/cli.hpp"

#include "ehpc/compressor.hpp"
#include "ehpc/cost_model.hpp"
#include "ehpc/errors.hpp"
#include "ehpc/fabricate.hpp"
#include "ehpc/pilot.hpp"
#include "ehpc/presets.hpp"
#include "ehpc/reference_model.hpp"
#include "ehpc/serialization.hpp"
#include "ehpc/tokenizer.hpp"
#include "ehpc/trace_io.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

namespace ehpc::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kDefaultFiller =
    "The committee met on a grey morning to review the quarterly figures. Most of the "
    "discussion concerned shipping delays, the price of steel, and whether the new warehouse "
    "would open before winter. Several members wandered off topic to talk about gardening. ";
constexpr std::string_view kDefaultNeedle = "The secret passcode for the vault is 4721. ";
constexpr std::string_view kDefaultQuestion = "\nQuestion: What is the secret passcode?\nAnswer:";

struct ModelFlags {
  std::uint64_t seed = 0;
  int num_layers = 2;
  int num_heads = 2;
  int head_dim = 4;
  int max_seq_len = 4096;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "Weight seed of the reference model")->capture_default_str();
    app->add_option("--num-layers", num_layers, "Reference model depth")->capture_default_str();
    app->add_option("--num-heads", num_heads, "Heads per layer")->capture_default_str();
    app->add_option("--head-dim", head_dim, "Per-head dimension d_k")->capture_default_str();
    app->add_option("--max-seq-len", max_seq_len, "Longest accepted prompt")->capture_default_str();
  }

  ModelConfig config() const {
    ModelConfig c;
    c.seed = seed;
    c.num_layers = num_layers;
    c.num_heads = num_heads;
    c.head_dim = head_dim;
    c.max_seq_len = max_seq_len;
    return c;
  }
};

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_text_file(path, contents);
  }
}

std::vector<std::int32_t> parse_token_file(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::int32_t> ids;
  std::string word;
  while (in >> word) {
    try {
      std::size_t used = 0;
      const long v = std::stol(word, &used);
      if (used != word.size()) throw std::invalid_argument(word);
      ids.push_back(static_cast<std::int32_t>(v));
    } catch (const std::logic_error&) {
      throw FormatError("token file '" + path.string() + "' contains non-integer '" + word + "'");
    }
  }
  return ids;
}

std::string dims_summary(const AttentionTrace& t) {
  std::ostringstream os;
  os << "L=" << t.num_layers << " H=" << t.num_heads << " N=" << t.seq_len << " W=" << t.window
     << " layers=[";
  for (std::size_t i = 0; i < t.layers_present.size(); ++i) os << (i ? "," : "") << t.layers_present[i];
  os << "]";
  return os.str();
}

std::string heads_summary(const EvaluatorHeadSet& h) {
  std::ostringstream os;
  os << "layer " << h.layer << " heads [";
  for (std::size_t i = 0; i < h.heads.size(); ++i) os << (i ? "," : "") << h.heads[i];
  os << "]";
  if (!h.provenance.empty()) os << " (" << h.provenance << ")";
  return os.str();
}

// ---- trace ------------------------------------------------------------------

struct TraceArgs {
  ModelFlags model;
  std::string input;
  std::string tokens;
  std::string fabricate;
  std::string output;
  std::vector<int> layers;
  int window = 1;
};

int cmd_trace(const TraceArgs& a, std::ostream& err) {
  AttentionTrace trace;
  if (!a.fabricate.empty()) {
    trace = fabricate_trace(fabrication_from_json(read_text_file(a.fabricate)));
  } else {
    const ReferenceModel<double> model(a.model.config());
    std::vector<int> capture = a.layers;
    if (capture.empty()) {
      for (int l = 0; l < a.model.num_layers; ++l) capture.push_back(l);
    }
    if (!a.input.empty()) {
      const auto enc = ByteTokenizer{}.encode(read_text_file(a.input));
      trace = model.forward_prefill(enc.ids, capture, a.window);
      trace.token_texts = enc.texts;
    } else {
      trace = model.forward_prefill(parse_token_file(a.tokens), capture, a.window);
    }
  }
  const std::size_t bytes = write_trace_file(trace, a.output);
  err << "wrote " << a.output << ": " << dims_summary(trace) << " bytes=" << bytes << '\n';
  return kOk;
}

// ---- detect -----------------------------------------------------------------

struct DetectArgs {
  std::string traces;
  std::string manifest;
  bool probe = false;
  ModelFlags model;
  std::vector<int> lengths{256};
  std::vector<double> depths{0.0, 0.25, 0.5, 0.75, 1.0};
  std::string filler{kDefaultFiller};
  std::string needle{kDefaultNeedle};
  std::string question{kDefaultQuestion};
  int k = 1;
  std::string output;
  std::string matrix;
  bool strict = true;
};

std::vector<EvidencePartial> partials_from_directory(const DetectArgs& a, std::ostream& err) {
  const fs::path manifest_path =
      a.manifest.empty() ? fs::path(a.traces) / "manifest.json" : fs::path(a.manifest);
  const auto entries = manifest_from_json(read_text_file(manifest_path));
  if (entries.empty()) throw ArgumentError("manifest '" + manifest_path.string() + "' lists no cases");
  const fs::path base = manifest_path.parent_path();

  std::vector<EvidencePartial> partials;
  std::optional<AttentionTrace> first;
  for (const auto& e : entries) {
    AttentionTrace t = read_trace_file(base / e.trace, ReadOptions{a.strict});
    if (first && (t.num_layers != first->num_layers || t.num_heads != first->num_heads ||
                  t.layers_present != first->layers_present)) {
      throw ValidationError("trace '" + e.trace + "' (" + dims_summary(t) +
                            ") does not match the first case (" + dims_summary(*first) + ")");
    }
    partials.push_back(accumulate_evidence(t, e.evidence));
    if (!first) first = std::move(t);
  }
  err << "accumulated evidence over " << partials.size() << " traces\n";
  return partials;
}

std::vector<EvidencePartial> partials_from_probe(const DetectArgs& a, std::ostream& err) {
  const ByteTokenizer tok;
  const auto filler = tok.ids(a.filler);
  const auto needle = tok.ids(a.needle);
  const auto question = tok.ids(a.question);
  const auto cases = needle_sweep(filler, needle, question, a.lengths, a.depths);
  if (cases.empty()) throw ArgumentError("probe sweep produced no cases");
  const ReferenceModel<double> model(a.model.config());
  std::vector<EvidencePartial> partials;
  partials.reserve(cases.size());
  for (const auto& c : cases) {
    partials.push_back(accumulate_evidence(model.forward_prefill(c.token_ids, 1), c.evidence));
  }
  err << "ran " << cases.size() << " needle probes on " << a.model.config().model_id() << '\n';
  return partials;
}

int cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
  const auto partials = a.probe ? partials_from_probe(a, err) : partials_from_directory(a, err);
  const EvidenceScoreMatrix s = build_matrix(partials);
  const EvaluatorHeadSet heads = select_heads(s, a.k);
  emit(a.output, heads_to_json(heads), out);
  if (!a.matrix.empty()) {
    std::ostringstream csv;
    write_matrix_csv(s, csv);
    write_text_file(a.matrix, csv.str());
  }
  err << "selected " << heads_summary(heads) << '\n';
  return kOk;
}

// ---- compress ---------------------------------------------------------------

struct CompressArgs {
  std::string trace;
  std::string preset;
  std::string heads;
  std::optional<int> window;
  std::optional<int> kernel;
  std::optional<std::string> pool;
  std::optional<int> budget;
  std::optional<double> ratio;
  std::optional<int> tail;
  std::string mode = "NMI";
  std::string output;
  std::string text_output;
  std::string format = "json";
  bool strict = true;
};

int cmd_compress(const CompressArgs& a, std::ostream& out, std::ostream& err) {
  CompressionConfig config;
  EvaluatorHeadSet heads;
  if (!a.preset.empty()) {
    const Preset p = find_preset(a.preset);
    heads = p.heads;
    config.observation_window = p.window;
    config.kernel = p.kernel;
    config.pool = p.pool;
  } else {
    heads = heads_from_json(read_text_file(a.heads));
  }
  if (a.window) config.observation_window = *a.window;
  if (a.kernel) config.kernel = *a.kernel;
  if (a.pool) config.pool = parse_pool_kind(*a.pool);
  config.protected_tail = a.tail;
  config.mode = parse_inference_mode(a.mode);
  if (a.budget) {
    config.budget = TokenBudget{*a.budget};
  } else {
    config.budget = RatioBudget{*a.ratio};
  }
  config.validate();

  const AttentionTrace trace = read_trace_file(a.trace, ReadOptions{a.strict});
  err << "heads: " << heads_summary(heads) << '\n';
  const CompressedPrompt prompt = compress_pipeline(trace, heads, config);

  const bool has_text = prompt.retained_texts.has_value();
  if (a.format == "text") {
    emit(a.output, render(prompt), out);
  } else {
    emit(a.output, compressed_to_json(prompt, has_text), out);
  }
  if (!a.text_output.empty()) write_text_file(a.text_output, render(prompt));
  err << "retained " << prompt.retained_indices.size() << "/" << prompt.original_len
      << " tokens, kappa2=" << prompt.achieved_kappa2 << " (" << to_string(config.mode) << ")\n";
  return kOk;
}

// ---- cost -------------------------------------------------------------------

struct CostArgs {
  CostParams params{32, 32, 128, 8192, 0, 1.0, 1.0};
  std::optional<int> layer;
  std::vector<std::string> sweeps;
  bool csv = false;
  std::string output;
};

int cmd_cost(CostArgs a, std::ostream& out, std::ostream& err) {
  if (a.layer) a.params.kappa1 = kappa1_for_layer(a.params.num_layers, *a.layer);
  a.params.validate();
  if (a.sweeps.empty() && !a.csv) {
    const CostReport r = cost_pipeline(a.params);
    emit(a.output, cost_report_to_json(r), out);
    err << "prefill factor " << r.prefill_ratio
        << (check_speedup(a.params.kappa1, a.params.kappa2) ? " (faster)" : " (not faster)") << '\n';
    return kOk;
  }
  std::vector<SweepAxis> axes;
  for (const auto& s : a.sweeps) axes.push_back(parse_sweep_axis(s));
  const auto rows = cost_sweep(a.params, axes);
  std::ostringstream csv;
  write_cost_csv(rows, csv);
  emit(a.output, csv.str(), out);
  err << rows.size() << " sweep rows\n";
  return kOk;
}

// ---- validate ---------------------------------------------------------------

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const AttentionTrace trace = read_trace_file(path, ReadOptions{false});
  const auto violations = validate_trace(trace);
  for (const auto& v : violations) out << v << '\n';
  if (!violations.empty()) {
    err << path << ": " << violations.size() << " violation(s)\n";
    return kValidationError;
  }
  err << path << ": ok, " << dims_summary(trace) << '\n';
  return kOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const IoError*>(&e)) return kIoError;
  if (dynamic_cast<const ValidationError*>(&e)) return kValidationError;
  return kArgumentError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluator-head prompt compression toolkit", "ehpc"};
  app.require_subcommand(1);

  TraceArgs trace_args;
  auto* trace = app.add_subcommand("trace", "Run the reference model (or fabricate) and write a .ehpct trace");
  trace_args.model.attach(trace);
  auto* in_text = trace->add_option("-i,--input", trace_args.input, "Prompt text file (byte-tokenized)");
  auto* in_tokens = trace->add_option("--tokens", trace_args.tokens, "Whitespace-separated token id file");
  auto* in_fab = trace->add_option("--fabricate", trace_args.fabricate, "Fabrication spec JSON");
  in_text->excludes(in_tokens, in_fab);
  in_tokens->excludes(in_fab);
  trace->add_option("-o,--output", trace_args.output, "Output .ehpct path")->required();
  trace->add_option("--layers", trace_args.layers, "Layers to capture (default: all)")->delimiter(',');
  trace->add_option("--window", trace_args.window, "Trailing attention rows to keep")->capture_default_str();

  DetectArgs detect_args;
  auto* detect = app.add_subcommand("detect", "Select evaluator heads from pilot traces or probes");
  auto* d_traces = detect->add_option("--traces", detect_args.traces, "Directory with manifest.json and traces");
  auto* d_manifest = detect->add_option("--manifest", detect_args.manifest, "Explicit manifest path");
  auto* d_probe = detect->add_flag("--probe", detect_args.probe, "Synthesize needle probes with the reference model");
  d_probe->excludes(d_traces, d_manifest);
  detect_args.model.attach(detect);
  detect->add_option("--lengths", detect_args.lengths, "Probe prompt lengths")->delimiter(',');
  detect->add_option("--depths", detect_args.depths, "Needle depths in [0,1]")->delimiter(',');
  detect->add_option("--filler", detect_args.filler, "Haystack filler text");
  detect->add_option("--needle", detect_args.needle, "Needle text");
  detect->add_option("--question", detect_args.question, "Trailing question text");
  detect->add_option("--k", detect_args.k, "Heads to select")->required();
  detect->add_option("-o,--output", detect_args.output, "Heads JSON path (default stdout)");
  detect->add_option("--matrix", detect_args.matrix, "Write the evidence-score matrix as CSV");
  detect->add_flag("!--no-strict", detect_args.strict, "Skip attention-row validation when reading");

  CompressArgs compress_args;
  auto* compress = app.add_subcommand("compress", "Delete low-utility tokens from a traced prompt");
  compress->add_option("--trace", compress_args.trace, "Input .ehpct trace")->required();
  auto* c_preset = compress->add_option("--preset", compress_args.preset, "Built-in evaluator head preset");
  auto* c_heads = compress->add_option("--heads", compress_args.heads, "Heads JSON from `detect`");
  c_preset->excludes(c_heads);
  compress->add_option("--window", compress_args.window, "Observation window N_o");
  compress->add_option("--kernel", compress_args.kernel, "Pooling kernel r");
  compress->add_option("--pool", compress_args.pool, "average or max");
  auto* c_budget = compress->add_option("--budget", compress_args.budget, "Absolute token budget");
  auto* c_ratio = compress->add_option("--ratio", compress_args.ratio, "Target compression ratio kappa2");
  c_budget->excludes(c_ratio);
  compress->add_option("--tail", compress_args.tail, "Protected trailing tokens (default N_o)");
  compress->add_option("--mode", compress_args.mode, "EMI or NMI")->capture_default_str();
  compress->add_option("-o,--output", compress_args.output, "Output path (default stdout)");
  compress->add_option("--text", compress_args.text_output, "Also write the rendered prompt here");
  compress->add_option("--format", compress_args.format, "json or text")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  compress->add_flag("!--no-strict", compress_args.strict, "Skip attention-row validation when reading");

  CostArgs cost_args;
  auto& p = cost_args.params;
  auto* cost = app.add_subcommand("cost", "Attention-cost accounting for two-stage prefill");
  cost->add_option("--L,--num-layers", p.num_layers, "Layers")->capture_default_str();
  cost->add_option("--H,--num-heads", p.num_heads, "Heads per layer")->capture_default_str();
  cost->add_option("--dk,--head-dim", p.head_dim, "Per-head dimension")->capture_default_str();
  cost->add_option("--N,--prompt-tokens", p.prompt_tokens, "Prompt tokens")->capture_default_str();
  cost->add_option("--t,--generated-tokens", p.generated_tokens, "Generated tokens")->capture_default_str();
  auto* c_k1 = cost->add_option("--kappa1", p.kappa1, "Depth ratio L / evaluator depth")->capture_default_str();
  auto* c_layer = cost->add_option("--layer", cost_args.layer, "Evaluator layer (0-based); sets kappa1");
  c_layer->excludes(c_k1);
  cost->add_option("--kappa2", p.kappa2, "Compression ratio")->capture_default_str();
  cost->add_option("--sweep", cost_args.sweeps, "Grid axis, e.g. kappa2=1..8 (repeatable)");
  cost->add_flag("--csv", cost_args.csv, "Emit CSV even without a sweep");
  cost->add_option("-o,--output", cost_args.output, "Output path (default stdout)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a .ehpct trace; violations one per line");
  validate->add_option("trace", validate_path, "Trace file")->required();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("ehpc");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kArgumentError;
  }

  try {
    if (*trace) {
      if (trace_args.input.empty() && trace_args.tokens.empty() && trace_args.fabricate.empty()) {
        throw ArgumentError("trace needs one of --input, --tokens or --fabricate");
      }
      return cmd_trace(trace_args, err);
    }
    if (*detect) {
      if (!detect_args.probe && detect_args.traces.empty() && detect_args.manifest.empty()) {
        throw ArgumentError("detect needs --traces, --manifest or --probe");
      }
      return cmd_detect(detect_args, out, err);
    }
    if (*compress) {
      if (compress_args.preset.empty() && compress_args.heads.empty()) {
        throw ArgumentError("compress needs exactly one of --preset or --heads");
      }
      if (!compress_args.budget && !compress_args.ratio) {
        throw ArgumentError("compress needs exactly one of --budget or --ratio");
      }
      return cmd_compress(compress_args, out, err);
    }
    if (*cost) return cmd_cost(cost_args, out, err);
    if (*validate) return cmd_validate(validate_path, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  }
  return kArgumentError;
}

}  // namespace ehpc::cli
