#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>

#include "qkan/data.hpp"
#include "qkan/distill.hpp"
#include "qkan/error.hpp"
#include "qkan/network.hpp"
#include "qkan/rng.hpp"
#include "qkan/serialize.hpp"
#include "qkan/spectrum.hpp"
#include "qkan/train.hpp"

namespace qkan::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::vector<std::size_t> parse_shape(const std::string& text, const char* field) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    const std::string tok = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError(std::string("field '") + field + "': bad entry '" + tok + "'");
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

DatasetSplit load_or_generate(const RunConfig& cfg) {
  if (!cfg.dataset.empty()) {
    DatasetSplit split{read_csv(fs::path(cfg.dataset) / "train.csv"), read_csv(fs::path(cfg.dataset) / "test.csv")};
    split.train.validate();
    split.test.validate();
    return split;
  }
  if (cfg.equation == "sinc") return gen_sinc(cfg.n_train, cfg.n_test, cfg.noise_frac, cfg.data_seed);
  return gen_regression(find_feynman(cfg.equation), cfg.n_train, cfg.n_test, cfg.noise_frac, cfg.data_seed,
                        {cfg.range_lo, cfg.range_hi});
}

std::vector<std::size_t> resolve_shape(const RunConfig& cfg, const DatasetSplit& data) {
  if (!cfg.shape.empty()) return cfg.shape;
  if (cfg.equation == "sinc") return {1, 1};
  if (cfg.dataset.empty()) return find_feynman(cfg.equation).default_shape;
  return {data.train.n_features(), data.train.n_targets()};
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.optimizer = cfg.optimizer == "adam" ? OptimizerKind::kAdam : OptimizerKind::kLbfgs;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.lbfgs.history = cfg.history;
  tc.seed = seed;
  tc.threads = cfg.threads;
  tc.record_elapsed = cfg.record_elapsed;
  return tc;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------

int cmd_gen_data(const RunConfig& cfg) {
  const DatasetSplit data = load_or_generate(cfg);
  const fs::path out = output_root(cfg);
  const std::string train_csv = format_csv(data.train);
  const std::string test_csv = format_csv(data.test);
  const std::string meta = dump_json(dataset_meta_to_json(data.train.meta));
  write_file_atomic(out / "train.csv", train_csv);
  write_file_atomic(out / "test.csv", test_csv);
  write_file_atomic(out / "meta.json", meta);
  std::cout << "wrote " << data.train.size() << " train / " << data.test.size() << " test rows to " << out.string()
            << "\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg) {
  const DatasetSplit data = load_or_generate(cfg);
  const auto shape = resolve_shape(cfg, data);
  if (shape.front() != data.train.n_features() || shape.back() != data.train.n_targets()) {
    throw ConfigError("field 'shape': endpoints do not match dataset dims");
  }

  struct SeedRun {
    std::uint64_t seed;
    Checkpoint ckpt;
    std::string metrics;
  };
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : cfg.seeds) {
    Rng init_rng = Rng::stream(seed, "init");
    const QkanNetwork net = make_qkan(shape, cfg.r, init_rng, cfg.init);
    const TrainResult res = train(net, data.train, data.test, train_config(cfg, seed));
    for (const auto& e : res.events) std::cerr << "seed " << seed << ": " << e << "\n";
    Checkpoint ck;
    ck.net = res.best;
    ck.provenance = {seed, cfg.hash(), res.best_epoch, res.best_test_rmse};
    runs.push_back({seed, std::move(ck), format_metrics_csv(res.trace)});
    std::cout << "seed " << seed << ": best test RMSE " << res.best_test_rmse << " at epoch " << res.best_epoch
              << "\n";
  }
  const auto best = std::min_element(runs.begin(), runs.end(), [](const SeedRun& a, const SeedRun& b) {
    return a.ckpt.provenance.best_test_rmse < b.ckpt.provenance.best_test_rmse;
  });

  json report = {{"equation", cfg.dataset.empty() ? cfg.equation : cfg.dataset},
                 {"shape", shape},
                 {"r", cfg.r},
                 {"param_count", param_count(best->ckpt.net)},
                 {"best_seed", best->seed},
                 {"best_test_rmse", best->ckpt.provenance.best_test_rmse},
                 {"runs", json::array()}};
  for (const auto& run : runs) {
    report["runs"].push_back({{"seed", run.seed},
                              {"best_test_rmse", run.ckpt.provenance.best_test_rmse},
                              {"best_epoch", run.ckpt.provenance.epoch}});
  }

  const fs::path out = output_root(cfg);
  for (const auto& run : runs) {
    const std::string suffix = "_seed" + std::to_string(run.seed);
    save_checkpoint(run.ckpt, out / ("checkpoint" + suffix + ".json"));
    write_file_atomic(out / ("metrics" + suffix + ".csv"), run.metrics);
  }
  save_checkpoint(best->ckpt, out / "checkpoint.json");
  write_file_atomic(out / "metrics.csv", best->metrics);
  write_file_atomic(out / "train_report.json", dump_json(report));
  std::cout << "best seed " << best->seed << ": test RMSE " << best->ckpt.provenance.best_test_rmse << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("field 'checkpoint' is required for eval");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const DatasetSplit data = load_or_generate(cfg);
  if (data.test.n_features() != ck.net.input_dim()) throw DataError("dataset width does not match checkpoint input");
  const json report = {{"checkpoint", cfg.checkpoint},
                       {"train_rmse", dataset_rmse(ck.net, data.train)},
                       {"test_rmse", dataset_rmse(ck.net, data.test)},
                       {"n_train", data.train.size()},
                       {"n_test", data.test.size()}};
  write_file_atomic(output_root(cfg) / "eval.json", dump_json(report));
  print_json(report);
  return kOk;
}

int cmd_spectrum(const RunConfig& cfg) {
  DaruanParams p;
  if (!cfg.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(cfg.checkpoint);
    if (cfg.layer >= ck.net.layers.size()) throw ConfigError("field 'layer' out of range");
    const QkanLayer& layer = ck.net.layers[cfg.layer];
    if (cfg.edge_out >= layer.n_out || cfg.edge_in >= layer.n_in) throw ConfigError("field 'edge_out/edge_in' out of range");
    p = layer.edge(cfg.edge_out, cfg.edge_in);
  } else {
    Rng rng = Rng::stream(cfg.seeds.front(), "spectrum");
    DaruanInit init = cfg.init;
    init.geometric_weights = cfg.weights == "geometric";
    init.angle_range = std::numbers::pi;
    p = DaruanParams::random(cfg.r, rng, init);
    for (double& b : p.enc_b) b = rng.uniform(-std::numbers::pi, std::numbers::pi);
  }
  const auto [ok, rep] = verify_spectrum(p, cfg.tol);
  json doc = spectrum_to_json(rep);
  doc["tolerance"] = cfg.tol;
  doc["verified"] = ok;
  write_file_atomic(output_root(cfg) / "spectrum.json", dump_json(doc));
  std::cout << "frequencies: " << rep.frequencies.size() << " (nonzero " << rep.nonzero_count
            << "), max frequency " << rep.max_frequency << ", residual " << rep.residual_l2
            << (ok ? " [verified]" : " [NOT verified]") << "\n";
  return ok ? kOk : kNumericalError;
}

int cmd_extend(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("field 'checkpoint' is required for extend");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  std::size_t max_r = 0;
  for (const auto& l : ck.net.layers) max_r = std::max(max_r, l.reps());
  if (cfg.new_r <= max_r) {
    throw ConfigError("field 'new_r' must exceed the checkpoint's r (" + std::to_string(max_r) + ")");
  }
  Checkpoint out = ck;
  out.net = extend_network(ck.net, cfg.new_r);
  out.optimizer.reset();

  Rng probe = Rng::stream(cfg.seeds.front(), "probe");
  double worst = 0.0;
  for (int k = 0; k < 256; ++k) {
    std::vector<double> x(ck.net.input_dim());
    for (double& v : x) v = probe.uniform(cfg.range_lo - 1.0, cfg.range_hi + 1.0);
    const auto a = network_forward(ck.net, x);
    const auto b = network_forward(out.net, x);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  if (!(worst < 1e-12)) {
    throw NumericalError("extend: forward changed by " + std::to_string(worst) + " on the probe grid");
  }
  save_checkpoint(out, output_root(cfg) / "checkpoint_extended.json");
  std::cout << "extended to r = " << cfg.new_r << " (max probe deviation " << worst << ")\n";
  return kOk;
}

int cmd_distill(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("field 'checkpoint' is required for distill");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const DatasetSplit data = load_or_generate(cfg);
  const auto domains = calibrate_domains(ck.net, data.train.inputs);
  const DistillResult res = distill_network(ck.net, domains, {cfg.grid, cfg.degree, 0});

  ClampCounter clamps;
  std::vector<double> src, dst, target;
  for (std::size_t k = 0; k < data.test.size(); ++k) {
    const auto a = network_forward(ck.net, data.test.inputs[k]);
    const auto b = spline_network_forward(res.network, data.test.inputs[k], &clamps);
    src.insert(src.end(), a.begin(), a.end());
    dst.insert(dst.end(), b.begin(), b.end());
    target.insert(target.end(), data.test.targets[k].begin(), data.test.targets[k].end());
  }
  json edges = json::array();
  for (const auto& e : res.report) {
    edges.push_back({{"layer", e.edge.layer},
                     {"out", e.edge.j},
                     {"in", e.edge.i},
                     {"domain", {e.domain.lo, e.domain.hi}},
                     {"max_error", e.max_error},
                     {"rms_error", e.rms_error}});
  }
  const json report = {{"grid", cfg.grid},
                       {"degree", cfg.degree},
                       {"rmse_vs_source", rmse(dst, src)},
                       {"source_test_rmse", rmse(src, target)},
                       {"distilled_test_rmse", rmse(dst, target)},
                       {"clamped_evaluations", clamps.clamped},
                       {"total_evaluations", clamps.evaluations},
                       {"edges", edges}};
  const fs::path out = output_root(cfg);
  const std::string net_doc = dump_json(spline_network_to_json(res.network));
  write_file_atomic(out / "spline_network.json", net_doc);
  write_file_atomic(out / "distill_report.json", dump_json(report));
  std::cout << "distilled " << res.report.size() << " edges; RMSE vs source " << report["rmse_vs_source"] << "\n";
  return kOk;
}

struct MnistSubset {
  Dataset train;
  Dataset test;
};

Dataset two_class(const IdxArray& images, const IdxArray& labels, std::size_t limit) {
  if (images.count() != labels.count()) throw DataError("MNIST: image and label counts differ");
  Dataset d;
  const std::size_t sz = images.item_size();
  for (std::size_t k = 0; k < images.count() && d.size() < limit; ++k) {
    const int label = static_cast<int>(labels.values[k]);
    if (label != 0 && label != 1) continue;
    d.inputs.emplace_back(images.values.begin() + static_cast<std::ptrdiff_t>(k * sz),
                          images.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * sz));
    d.targets.push_back({label == 0 ? 1.0 : 0.0, label == 1 ? 1.0 : 0.0});
  }
  d.meta.equation = "mnist-0-1";
  return d;
}

int cmd_mnist_demo(const RunConfig& cfg) {
  const fs::path dir = cfg.mnist_dir.empty() ? fs::path("mnist") : fs::path(cfg.mnist_dir);
  const Dataset train_set = two_class(read_idx(dir / "train-images-idx3-ubyte"),
                                      read_idx(dir / "train-labels-idx1-ubyte"), cfg.mnist_samples);
  const Dataset test_set = two_class(read_idx(dir / "t10k-images-idx3-ubyte"),
                                     read_idx(dir / "t10k-labels-idx1-ubyte"), std::numeric_limits<std::size_t>::max());
  if (train_set.size() == 0 || test_set.size() == 0) throw DataError("MNIST: no 0/1 samples found");

  Rng init_rng = Rng::stream(cfg.seeds.front(), "init");
  const QkanNetwork net = make_hqkan(train_set.n_features(), 2, cfg.r, cfg.hidden_shape, init_rng, cfg.init);
  TrainConfig tc = train_config(cfg, cfg.seeds.front());
  tc.optimizer = OptimizerKind::kAdam;
  tc.loss = LossKind::kCrossEntropy;
  if (tc.batch_size == 0) tc.batch_size = 64;
  const TrainResult res = train(net, train_set, test_set, tc);
  const double acc = dataset_accuracy(res.final_net, test_set);

  Checkpoint ck;
  ck.net = res.final_net;
  ck.provenance = {cfg.seeds.front(), cfg.hash(), cfg.epochs, res.trace.empty() ? 0.0 : res.trace.back().test_rmse};
  const json report = {{"train_samples", train_set.size()},
                       {"test_samples", test_set.size()},
                       {"param_count", param_count(net)},
                       {"test_accuracy", acc}};
  const fs::path out = output_root(cfg);
  save_checkpoint(ck, out / "checkpoint.json");
  write_file_atomic(out / "metrics.csv", format_metrics_csv(res.trace));
  write_file_atomic(out / "mnist_report.json", dump_json(report));
  print_json(report);
  return kOk;
}

}  // namespace

void RunConfig::validate() const {
  static const std::set<std::string> tasks{"regression", "spectrum", "distill", "extend", "mnist-demo"};
  if (!tasks.count(task)) throw ConfigError("field 'task': unknown task '" + task + "'");
  if (dataset.empty() && equation != "sinc") {
    try {
      find_feynman(equation);
    } catch (const DataError&) {
      throw ConfigError("field 'equation': unknown equation '" + equation + "'");
    }
  }
  if (!shape.empty() && shape.size() < 2) throw ConfigError("field 'shape': needs at least two node counts");
  for (std::size_t n : shape) {
    if (n == 0) throw ConfigError("field 'shape': node counts must be >= 1");
  }
  for (std::size_t n : hidden_shape) {
    if (n == 0) throw ConfigError("field 'hidden_shape': node counts must be >= 1");
  }
  if (r == 0) throw ConfigError("field 'r': must be >= 1");
  if (optimizer != "lbfgs" && optimizer != "adam") throw ConfigError("field 'optimizer': expected lbfgs or adam");
  if (history == 0) throw ConfigError("field 'history': must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("field 'lr': must be positive");
  if (seeds.empty()) throw ConfigError("field 'seeds': at least one seed required");
  if (!(noise_frac >= 0.0) || !std::isfinite(noise_frac)) throw ConfigError("field 'noise_frac': must be >= 0");
  if (!(range_lo < range_hi)) throw ConfigError("field 'range': lo must be < hi");
  if (grid == 0) throw ConfigError("field 'grid': must be >= 1");
  if (degree == 0) throw ConfigError("field 'degree': must be >= 1");
  if (weights != "geometric" && weights != "unit") throw ConfigError("field 'weights': expected geometric or unit");
  if (!(tol > 0.0)) throw ConfigError("field 'tol': must be positive");
  if (!(init.angle_range >= 0.0)) throw ConfigError("field 'init.angle_range': must be >= 0");
}

json RunConfig::to_json() const {
  return {{"task", task},
          {"equation", equation},
          {"dataset", dataset},
          {"shape", shape},
          {"hidden_shape", hidden_shape},
          {"r", r},
          {"optimizer", optimizer},
          {"history", history},
          {"lr", lr},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seeds", seeds},
          {"data_seed", data_seed},
          {"noise_frac", noise_frac},
          {"n_train", n_train},
          {"n_test", n_test},
          {"range", {range_lo, range_hi}},
          {"init",
           {{"angle_range", init.angle_range},
            {"geometric_weights", init.geometric_weights},
            {"w_base", init.w_base},
            {"w_quant", init.w_quant},
            {"out_bias", init.out_bias}}},
          {"output_dir", output_dir},
          {"record_elapsed", record_elapsed},
          {"threads", threads},
          {"checkpoint", checkpoint},
          {"new_r", new_r},
          {"grid", grid},
          {"degree", degree},
          {"mnist_dir", mnist_dir},
          {"mnist_samples", mnist_samples},
          {"layer", layer},
          {"edge_out", edge_out},
          {"edge_in", edge_in},
          {"weights", weights},
          {"tol", tol}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  RunConfig c;
  const json known = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (key != "seed" && !known.contains(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  read_field(j, "task", c.task);
  read_field(j, "equation", c.equation);
  read_field(j, "dataset", c.dataset);
  read_field(j, "shape", c.shape);
  read_field(j, "hidden_shape", c.hidden_shape);
  read_field(j, "r", c.r);
  read_field(j, "optimizer", c.optimizer);
  read_field(j, "history", c.history);
  read_field(j, "lr", c.lr);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "epochs", c.epochs);
  read_field(j, "seeds", c.seeds);
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    read_field(j, "seed", s);
    c.seeds = {s};
  }
  read_field(j, "data_seed", c.data_seed);
  read_field(j, "noise_frac", c.noise_frac);
  read_field(j, "n_train", c.n_train);
  read_field(j, "n_test", c.n_test);
  if (j.contains("range")) {
    std::vector<double> range;
    read_field(j, "range", range);
    if (range.size() != 2) throw ConfigError("config field 'range' must be [lo, hi]");
    c.range_lo = range[0];
    c.range_hi = range[1];
  }
  if (j.contains("init")) {
    const json& ji = j.at("init");
    if (!ji.is_object()) throw ConfigError("config field 'init' must be an object");
    for (const auto& [key, value] : ji.items()) {
      if (!known.at("init").contains(key)) throw ConfigError("config: unknown field 'init." + key + "'");
    }
    read_field(ji, "angle_range", c.init.angle_range);
    read_field(ji, "geometric_weights", c.init.geometric_weights);
    read_field(ji, "w_base", c.init.w_base);
    read_field(ji, "w_quant", c.init.w_quant);
    read_field(ji, "out_bias", c.init.out_bias);
  }
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "record_elapsed", c.record_elapsed);
  read_field(j, "threads", c.threads);
  read_field(j, "checkpoint", c.checkpoint);
  read_field(j, "new_r", c.new_r);
  read_field(j, "grid", c.grid);
  read_field(j, "degree", c.degree);
  read_field(j, "mnist_dir", c.mnist_dir);
  read_field(j, "mnist_samples", c.mnist_samples);
  read_field(j, "layer", c.layer);
  read_field(j, "edge_out", c.edge_out);
  read_field(j, "edge_in", c.edge_in);
  read_field(j, "weights", c.weights);
  read_field(j, "tol", c.tol);
  return c;
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("output_dir");
  j.erase("threads");
  j.erase("record_elapsed");
  return hex64(fnv1a64(j.dump()));
}

fs::path output_root(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("QKAN_OUT_ROOT"); env && *env) return env;
  return "qkan_out";
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Quantum variational activation networks: training, spectrum checks, extension, distillation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Seed (replaces the config's seed list)");
  app.add_option("--out", out_dir, "Output directory");

  // Flags that mirror config fields; each applies only when given.
  std::optional<std::string> equation, dataset, shape, hidden, optimizer, checkpoint, mnist_dir, weights;
  std::optional<std::size_t> r, epochs, history, batch, n_train, n_test, new_r, grid, degree, threads, layer,
      edge_out, edge_in, mnist_samples;
  std::optional<double> lr, noise_frac, tol;
  std::optional<std::uint64_t> data_seed;
  std::optional<bool> record_elapsed;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--equation", equation, "Feynman equation id or 'sinc'");
    sub->add_option("--dataset", dataset, "Directory with train.csv and test.csv");
    sub->add_option("--shape", shape, "Comma-separated node counts, e.g. 2,2,1");
    sub->add_option("--r", r, "Re-uploading repetitions per edge");
    sub->add_option("--epochs", epochs);
    sub->add_option("--optimizer", optimizer, "lbfgs or adam");
    sub->add_option("--history", history, "L-BFGS history size");
    sub->add_option("--lr", lr, "Adam learning rate");
    sub->add_option("--batch-size", batch);
    sub->add_option("--data-seed", data_seed);
    sub->add_option("--noise-frac", noise_frac);
    sub->add_option("--n-train", n_train);
    sub->add_option("--n-test", n_test);
    sub->add_option("--threads", threads);
    sub->add_option("--record-elapsed", record_elapsed);
    sub->add_option("--checkpoint", checkpoint);
  };
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a benchmark dataset as CSV");
  CLI::App* tr = app.add_subcommand("train", "Train a QKAN over the configured seeds");
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  CLI::App* sp = app.add_subcommand("spectrum", "Verify the Fourier support of one edge");
  CLI::App* ex = app.add_subcommand("extend", "Extend every edge to a larger r");
  CLI::App* di = app.add_subcommand("distill", "Distill a checkpoint into B-spline activations");
  CLI::App* mn = app.add_subcommand("mnist-demo", "HQKAN on MNIST digits 0/1");
  for (CLI::App* sub : {gen, tr, ev, sp, ex, di, mn}) common(sub);
  sp->add_option("--layer", layer);
  sp->add_option("--edge-out", edge_out);
  sp->add_option("--edge-in", edge_in);
  sp->add_option("--weights", weights, "geometric or unit (random circuit)");
  sp->add_option("--tol", tol);
  ex->add_option("--new-r", new_r);
  di->add_option("--grid", grid);
  di->add_option("--degree", degree);
  mn->add_option("--mnist-dir", mnist_dir);
  mn->add_option("--mnist-samples", mnist_samples);
  mn->add_option("--hidden-shape", hidden);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      json j;
      try {
        j = parse_json_file(config_path);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
      cfg = RunConfig::from_json(j);
    }
    if (seed) cfg.seeds = {*seed};
    if (out_dir) cfg.output_dir = *out_dir;
    if (equation) cfg.equation = *equation;
    if (dataset) cfg.dataset = *dataset;
    if (shape) cfg.shape = parse_shape(*shape, "shape");
    if (hidden) cfg.hidden_shape = parse_shape(*hidden, "hidden_shape");
    if (r) cfg.r = *r;
    if (epochs) cfg.epochs = *epochs;
    if (optimizer) cfg.optimizer = *optimizer;
    if (history) cfg.history = *history;
    if (lr) cfg.lr = *lr;
    if (batch) cfg.batch_size = *batch;
    if (data_seed) cfg.data_seed = *data_seed;
    if (noise_frac) cfg.noise_frac = *noise_frac;
    if (n_train) cfg.n_train = *n_train;
    if (n_test) cfg.n_test = *n_test;
    if (threads) cfg.threads = *threads;
    if (record_elapsed) cfg.record_elapsed = *record_elapsed;
    if (checkpoint) cfg.checkpoint = *checkpoint;
    if (layer) cfg.layer = *layer;
    if (edge_out) cfg.edge_out = *edge_out;
    if (edge_in) cfg.edge_in = *edge_in;
    if (weights) cfg.weights = *weights;
    if (tol) cfg.tol = *tol;
    if (new_r) cfg.new_r = *new_r;
    if (grid) cfg.grid = *grid;
    if (degree) cfg.degree = *degree;
    if (mnist_dir) cfg.mnist_dir = *mnist_dir;
    if (mnist_samples) cfg.mnist_samples = *mnist_samples;
    cfg.validate();

    if (gen->parsed()) return cmd_gen_data(cfg);
    if (tr->parsed()) return cmd_train(cfg);
    if (ev->parsed()) return cmd_eval(cfg);
    if (sp->parsed()) return cmd_spectrum(cfg);
    if (ex->parsed()) return cmd_extend(cfg);
    if (di->parsed()) return cmd_distill(cfg);
    if (mn->parsed()) return cmd_mnist_demo(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace qkan::cli
