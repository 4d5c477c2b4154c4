#include "commands.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>

#include "itosr/config.hpp"
#include "itosr/dataset.hpp"
#include "itosr/grad_check.hpp"
#include "itosr/metrics.hpp"
#include "itosr/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace itosr::cli {

namespace {

// Raised for failures that map to the data-error exit code.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char h[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json metrics_json(const EvalResult& r) {
  ordered_json j;
  j["auroc"] = r.auroc;
  j["acc"] = r.acc;
  j["macro_f1"] = r.macro_f1;
  j["confusion"] = r.confusion;
  j["n_known"] = r.n_known;
  j["n_unknown"] = r.n_unknown;
  j["undefined_f1_classes"] = r.undefined_f1_classes;
  return j;
}

ordered_json config_json(const PipelineConfig& cfg) {
  ordered_json j = ordered_json::object();
  // Numbers and booleans keep their JSON type; enum values stay strings.
  for (const auto& [k, v] : describe(cfg)) {
    j[k] = ordered_json::accept(v) ? ordered_json::parse(v) : ordered_json(v);
  }
  return j;
}

ordered_json report_json(const RunResult& res, const PipelineConfig& cfg) {
  ordered_json j;
  j["tool"] = "itosr";
  j["version"] = kToolVersion;
  j["config"] = config_json(cfg);
  j["initial"]["metrics"] =
      res.initial_metrics ? metrics_json(*res.initial_metrics) : ordered_json(nullptr);
  ordered_json iters = ordered_json::array();
  for (const auto& it : res.iterations) {
    ordered_json e;
    e["t"] = it.t;
    e["sampling_mode"] = it.sampling_mode;
    e["mu"] = it.stats.mu;
    e["delta"] = it.stats.delta;
    e["alpha"] = it.stats.alpha;
    e["known"] = it.groups.known;
    e["unknown"] = it.groups.unknown;
    e["undetermined"] = it.groups.undetermined;
    e["selected"] = it.selected;
    e["selected_unknown"] = it.selected_unknown;
    e["generated"] = it.generated;
    e["gan_skipped"] = it.gan_skipped;
    e["generation_targets"] = it.generation_targets;
    if (!it.gan_trace.empty()) {
      const auto& last = it.gan_trace.back();
      e["gan_final_loss"] = {{"loss_d1", last.loss_d1},
                             {"loss_d2", last.loss_d2},
                             {"loss_cls", last.loss_cls},
                             {"loss_g", last.loss_g}};
    } else {
      e["gan_final_loss"] = nullptr;
    }
    e["metrics"] = it.metrics ? metrics_json(*it.metrics) : ordered_json(nullptr);
    iters.push_back(std::move(e));
  }
  j["iterations"] = std::move(iters);
  return j;
}

std::string predictions_csv(const Predictions& p) {
  std::string out = "row_id,predicted_label,confidence\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(p.labels[i]) + "," + fmt17(p.confidence[i]) + "\n";
  }
  return out;
}

// ---- synth ----

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
  bool binary = false;
};

int cmd_synth(const SynthArgs& a) {
  const FeatureDataset ds = synth_openset(a.cfg);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::string ext = a.binary ? ".bin" : ".txt";
  const fs::path train = dir / ("train" + ext);
  const fs::path test = dir / ("test" + ext);
  save_dataset(ds, train, test, a.binary ? Encoding::kBinary : Encoding::kText);
  ordered_json m;
  m["tool"] = "itosr";
  m["version"] = kToolVersion;
  m["command"] = "synth";
  m["config"] = {{"c_known", a.cfg.c_known},   {"c_unknown", a.cfg.c_unknown},
                 {"dim", a.cfg.dim},           {"per_class_n", a.cfg.per_class_n},
                 {"center_scale", a.cfg.center_scale}, {"noise_sigma", a.cfg.noise_sigma},
                 {"seed", a.cfg.seed},         {"encoding", a.binary ? "binary" : "text"}};
  m["seed"] = a.cfg.seed;
  m["outputs"] = {{"train", {{"path", train.string()}, {"sha256", sha256_file(train)}}},
                  {"test", {{"path", test.string()}, {"sha256", sha256_file(test)}}}};
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  std::cout << "wrote " << train.string() << " (" << ds.train_size() << " rows) and "
            << test.string() << " (" << ds.test_size() << " rows)\n";
  return kExitOk;
}

// ---- run ----

struct RunArgs {
  std::string train, test, config, out;
  std::map<std::string, std::string> overrides;
  bool ablate_dscs = false, ablate_d2 = false, ablate_c2 = false;
  bool quiet = false;
};

PipelineConfig resolve_config(const RunArgs& a) {
  PipelineConfig cfg;
  if (!a.config.empty()) cfg = load_config_file(a.config, cfg);
  for (const auto& [k, v] : a.overrides) apply_setting(cfg, k, v);
  if (a.ablate_dscs) cfg.use_dual_space_sampling = false;
  if (a.ablate_d2) cfg.gan.use_d2 = false;
  if (a.ablate_c2) cfg.gan.use_c2 = false;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

int cmd_run(const RunArgs& a) {
  const PipelineConfig cfg = resolve_config(a);
  const FeatureDataset ds = load_dataset(a.train, a.test);
  RunResult res;
  try {
    res = run_it_osr(ds, cfg);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  } catch (const std::out_of_range& e) {
    throw DataError(e.what());
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const fs::path report = dir / "report.json";
  const fs::path preds = dir / "predictions.csv";
  write_text(report, report_json(res, cfg).dump(2) + "\n");
  write_text(preds, predictions_csv(res.final_predictions));
  for (const auto& it : res.iterations) {
    const std::string t = std::to_string(it.t);
    write_sampling_csv(dir / ("sampling_t" + t + ".csv"), it.grouping, it.selection);
    write_loss_trace(dir / ("gan_loss_t" + t + ".csv"), it.gan_trace);
  }

  ordered_json m;
  m["tool"] = "itosr";
  m["version"] = kToolVersion;
  m["command"] = "run";
  m["config"] = config_json(cfg);
  m["seed"] = cfg.seed;
  m["inputs"] = {{"train", {{"path", a.train}, {"sha256", sha256_file(a.train)}}},
                 {"test", {{"path", a.test}, {"sha256", sha256_file(a.test)}}}};
  if (!a.config.empty()) m["inputs"]["config"] = {{"path", a.config}, {"sha256", sha256_file(a.config)}};
  m["outputs"] = {{"report", report.string()}, {"predictions", preds.string()}};
  write_text(dir / "manifest.json", m.dump(2) + "\n");

  if (!a.quiet) {
    if (res.initial_metrics) {
      std::printf("M_0: auroc=%.4f acc=%.4f macro_f1=%.4f\n", res.initial_metrics->auroc,
                  res.initial_metrics->acc, res.initial_metrics->macro_f1);
    }
    for (const auto& it : res.iterations) {
      std::printf("t=%d [%s] known=%zu unknown=%zu undetermined=%zu selected=%zu generated=%zu%s",
                  it.t, it.sampling_mode.c_str(), it.groups.known, it.groups.unknown,
                  it.groups.undetermined, it.selected, it.generated,
                  it.gan_skipped ? " (gan skipped)" : "");
      if (it.metrics) {
        std::printf(" auroc=%.4f acc=%.4f macro_f1=%.4f", it.metrics->auroc, it.metrics->acc,
                    it.metrics->macro_f1);
      }
      std::printf("\n");
    }
  }
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string predictions, truth, out;
};

int cmd_eval(const EvalArgs& a) {
  const FeatureTable truth = read_feature_table(a.truth);
  if (!truth.truth) throw DataError(a.truth + ": no truth column");
  const int c = truth.num_classes;

  std::ifstream in(a.predictions);
  if (!in) throw DataError("cannot open " + a.predictions);
  std::string line;
  std::getline(in, line);
  if (line.rfind("row_id,predicted_label,confidence", 0) != 0) {
    throw DataError(a.predictions + ": unexpected header");
  }
  const std::size_t n = truth.truth->size();
  std::vector<int> predicted(n, 0);
  std::vector<double> confidence(n, 0.0);
  std::vector<bool> seen(n, false);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t row = 0;
    int label = 0;
    double conf = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%d,%lf", &row, &label, &conf) != 3 || row >= n ||
        label < 1 || label > c + 1 || seen[row]) {
      throw DataError(a.predictions + ": bad row '" + line + "'");
    }
    seen[row] = true;
    predicted[row] = label;
    confidence[row] = conf;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw DataError(a.predictions + ": missing rows");
  }
  const EvalResult r = evaluate(predicted, confidence, *truth.truth, c);
  ordered_json j = metrics_json(r);
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
  }
  return kExitOk;
}

// ---- gan-check ----

int cmd_gan_check(const GradCheckOptions& opts) {
  bool ok = true;
  for (const auto& r : run_gradient_checks(opts)) {
    std::printf("%s %-24s max_rel_err=%.3e coords=%zu kink_skipped=%zu tol=%.1e\n",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.max_rel_error, r.coordinates,
                r.skipped, opts.tolerance);
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

}  // namespace

int main_dispatch(int argc, char** argv) {
  CLI::App app{"Iterative transductive open-set recognition over feature tables"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic open-set feature dataset");
  s->add_option("--known", synth.cfg.c_known, "Known classes")->capture_default_str();
  s->add_option("--unknown", synth.cfg.c_unknown, "Unknown classes")->capture_default_str();
  s->add_option("--per-class", synth.cfg.per_class_n, "Rows per class and split")->capture_default_str();
  s->add_option("--dim", synth.cfg.dim, "Feature dimension")->capture_default_str();
  s->add_option("--center-scale", synth.cfg.center_scale, "Class means ~ U[-s, s]^d")->capture_default_str();
  s->add_option("--noise-sigma", synth.cfg.noise_sigma, "Within-class std")->capture_default_str();
  s->add_option("--seed", synth.cfg.seed, "Random seed")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_flag("--binary", synth.binary, "Write the binary encoding");

  RunArgs run;
  std::map<std::string, std::string> flag_values;
  auto* r = app.add_subcommand("run", "Run the iterative transductive pipeline");
  r->add_option("--train", run.train, "Train feature table")->required()->check(CLI::ExistingFile);
  r->add_option("--test", run.test, "Test feature table")->required()->check(CLI::ExistingFile);
  r->add_option("--config", run.config, "key=value config file")->check(CLI::ExistingFile);
  r->add_option("--out", run.out, "Output directory")->required();
  r->add_flag("--ablate-dscs", run.ablate_dscs, "Score-only sampling (no KNN consistency filter)");
  r->add_flag("--ablate-d2", run.ablate_d2, "Drop discriminator D2");
  r->add_flag("--ablate-c2", run.ablate_c2, "Drop classifier C2");
  r->add_flag("--quiet", run.quiet, "No progress output");
  for (const auto& key : config_keys()) {
    r->add_option(flag_name(key), flag_values[key], "Override config key '" + key + "'");
  }

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score predictions against a test table with truth");
  e->add_option("--predictions", eval.predictions, "predictions.csv")->required()->check(CLI::ExistingFile);
  e->add_option("--truth", eval.truth, "Test feature table with truth column")->required()->check(CLI::ExistingFile);
  e->add_option("--out", eval.out, "Write metrics JSON here instead of stdout");

  GradCheckOptions check;
  auto* g = app.add_subcommand("gan-check", "Finite-difference gradient checks of all networks and losses");
  g->add_option("--tolerance", check.tolerance, "Max relative error")->capture_default_str();
  g->add_option("--step", check.step, "Central-difference step")->capture_default_str();
  g->add_option("--instances", check.instances, "Random instances per check")->capture_default_str();
  g->add_option("--seed", check.seed, "Random seed")->capture_default_str();
  g->add_flag("--inject-bug", check.inject_bug, "Corrupt one analytic gradient (harness self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*r) {
      for (const auto& key : config_keys()) {
        if (r->count(flag_name(key)) > 0) run.overrides[key] = flag_values[key];
      }
      return cmd_run(run);
    }
    if (*e) return cmd_eval(eval);
    if (*g) return cmd_gan_check(check);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const DatasetError& err) {
    std::cerr << "data error (" << to_string(err.kind()) << "): " << err.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace itosr::cli
