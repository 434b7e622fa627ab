#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "qkan/error.hpp"
#include "qkan/rng.hpp"
#include "qkan/serialize.hpp"
#include "qkan/train.hpp"

using namespace qkan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "qkan_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(std::vector<std::string> args) { return cli::run(args); }

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(1);
  Checkpoint ck;
  ck.net = make_hqkan(6, 2, 3, {3}, rng);
  ck.provenance = {42, "abc", 17, 0.125};
  AdamState a;
  a.step = 3;
  a.m = {0.1, 1e-300, -3.0};
  a.v = {1.0 / 3.0, 2.0, 0.0};
  ck.optimizer = a;
  const fs::path dir = scratch("roundtrip");
  save_checkpoint(ck, dir / "c.json");
  const Checkpoint back = load_checkpoint(dir / "c.json");
  CHECK(back.net.pack() == ck.net.pack());
  CHECK(back.net.shape == ck.net.shape);
  CHECK(back.provenance.seed == 42);
  CHECK(back.provenance.config_hash == "abc");
  CHECK(back.provenance.epoch == 17);
  CHECK(back.provenance.best_test_rmse == 0.125);
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->m == a.m);
  CHECK(back.optimizer->v == a.v);
  CHECK(back.optimizer->step == 3);
  // Re-serializing reproduces the same bytes.
  CHECK(dump_json(checkpoint_to_json(back)) == dump_json(checkpoint_to_json(ck)));
}

TEST_CASE("checkpoint version and structure checks") {
  Rng rng(2);
  Checkpoint ck;
  ck.net = make_qkan({2, 1}, 2, rng);
  json j = checkpoint_to_json(ck);
  j["format_version"] = 99;
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
  j = checkpoint_to_json(ck);
  j["network"]["layers"][0]["edges"][0].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
  j = checkpoint_to_json(ck);
  j["network"].erase("shape");
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
  const fs::path dir = scratch("badjson");
  write_text(dir / "broken.json", "{\"format_version\": 1,");
  CHECK_THROWS_AS(load_checkpoint(dir / "broken.json"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), DataError);
}

TEST_CASE("spline network round trip") {
  Rng rng(3);
  const QkanNetwork net = make_qkan({2, 2, 1}, 2, rng);
  std::vector<std::vector<double>> calib;
  for (int k = 0; k < 50; ++k) calib.push_back({rng.uniform01(), rng.uniform01()});
  const DistillResult res = distill_network(net, calibrate_domains(net, calib), {8, 3, 0});
  const SplineNetwork back = spline_network_from_json(spline_network_to_json(res.network));
  for (const auto& x : calib) {
    CHECK(spline_network_forward(back, x) == spline_network_forward(res.network, x));
  }
}

TEST_CASE("spectrum json carries complex pairs") {
  DaruanParams p = DaruanParams::zeros(1);
  const json j = spectrum_to_json(empirical_spectrum(p));
  CHECK(j.at("coefficients").size() == 3);
  CHECK(j.at("coefficients")[0].size() == 2);
  CHECK(j.at("max_frequency") == 1.0);
}

TEST_CASE("CLI: gen-data, train, eval, extend, distill") {
  const fs::path dir = scratch("pipeline");
  const std::string out = dir.string();
  REQUIRE(run_cli({"gen-data", "--equation", "II.2.42", "--n-train", "120", "--n-test", "60", "--out", out + "/data"}) ==
          0);
  CHECK(fs::exists(dir / "data" / "train.csv"));
  CHECK(fs::exists(dir / "data" / "meta.json"));

  REQUIRE(run_cli({"train", "--dataset", out + "/data", "--shape", "2,2,1", "--r", "2", "--epochs", "5", "--out",
               out + "/run", "--seed", "3"}) == 0);
  CHECK(fs::exists(dir / "run" / "checkpoint_seed3.json"));
  CHECK(fs::exists(dir / "run" / "metrics_seed3.csv"));
  const json report = parse_json_file(dir / "run" / "train_report.json");
  const double best = report.at("best_test_rmse").get<double>();

  REQUIRE(run_cli({"eval", "--dataset", out + "/data", "--checkpoint", out + "/run/checkpoint.json", "--out",
               out + "/eval"}) == 0);
  const double evaluated = parse_json_file(dir / "eval" / "eval.json").at("test_rmse").get<double>();
  CHECK(evaluated == doctest::Approx(best).epsilon(1e-12));

  REQUIRE(run_cli({"extend", "--checkpoint", out + "/run/checkpoint.json", "--new-r", "4", "--out", out + "/ext"}) == 0);
  const Checkpoint ext = load_checkpoint(dir / "ext" / "checkpoint_extended.json");
  CHECK(ext.net.layers[0].reps() == 4);
  REQUIRE(run_cli({"eval", "--dataset", out + "/data", "--checkpoint", out + "/ext/checkpoint_extended.json", "--out",
               out + "/eval_ext"}) == 0);
  const double after = parse_json_file(dir / "eval_ext" / "eval.json").at("test_rmse").get<double>();
  CHECK(std::abs(after - evaluated) < 1e-12);

  CHECK(run_cli({"extend", "--checkpoint", out + "/run/checkpoint.json", "--new-r", "2", "--out", out + "/ext2"}) ==
        cli::kConfigError);

  REQUIRE(run_cli({"distill", "--dataset", out + "/data", "--checkpoint", out + "/run/checkpoint.json", "--grid", "10",
               "--out", out + "/distill"}) == 0);
  const json dist = parse_json_file(dir / "distill" / "distill_report.json");
  CHECK(dist.at("edges").size() == 6);
  CHECK(dist.at("rmse_vs_source").get<double>() < 1e-2);
  CHECK(fs::exists(dir / "distill" / "spline_network.json"));
}

TEST_CASE("CLI: zero epochs writes the initial network") {
  const fs::path dir = scratch("zero");
  REQUIRE(run_cli({"train", "--equation", "I.12.11", "--n-train", "40", "--n-test", "40", "--epochs", "0", "--out",
               dir.string()}) == 0);
  const std::string metrics = read_file(dir / "metrics.csv");
  CHECK(metrics == "epoch,train_rmse,test_rmse,elapsed_ms\n");
  Rng init = Rng::stream(0, "init");
  const QkanNetwork expected = make_qkan({2, 2, 1}, 3, init);
  CHECK(load_checkpoint(dir / "checkpoint.json").net.pack() == expected.pack());
}

TEST_CASE("CLI: spectrum of a random geometric edge") {
  const fs::path dir = scratch("spectrum");
  REQUIRE(run_cli({"spectrum", "--r", "4", "--out", dir.string()}) == 0);
  const json j = parse_json_file(dir / "spectrum.json");
  CHECK(j.at("max_frequency").get<double>() == 15.0);
  CHECK(j.at("nonzero_count").get<std::size_t>() == 30);
  CHECK(j.at("verified").get<bool>());
}

TEST_CASE("CLI: exit codes and config errors") {
  const fs::path dir = scratch("errors");
  CHECK(run_cli({}) == cli::kConfigError);
  CHECK(run_cli({"bogus"}) == cli::kConfigError);
  CHECK(run_cli({"train", "--r", "notanumber"}) == cli::kConfigError);
  CHECK(run_cli({"train", "--equation", "X.1.1", "--out", dir.string()}) == cli::kConfigError);
  CHECK(run_cli({"eval", "--out", dir.string()}) == cli::kConfigError);
  CHECK(run_cli({"eval", "--checkpoint", (dir / "none.json").string(), "--out", dir.string()}) == cli::kDataError);
  CHECK(run_cli({"train", "--dataset", (dir / "nodata").string(), "--out", dir.string()}) == cli::kDataError);
  CHECK(run_cli({"mnist-demo", "--mnist-dir", (dir / "nomnist").string(), "--out", dir.string()}) == cli::kDataError);

  write_text(dir / "unknown.json", R"({"equation": "I.12.11", "epochs": 1, "learning_rate": 0.1})");
  CHECK(run_cli({"train", "--config", (dir / "unknown.json").string(), "--out", dir.string()}) == cli::kConfigError);
  write_text(dir / "badtype.json", R"({"epochs": "many"})");
  CHECK(run_cli({"train", "--config", (dir / "badtype.json").string(), "--out", dir.string()}) == cli::kConfigError);
  write_text(dir / "badinit.json", R"({"init": {"angle_span": 0.1}})");
  CHECK(run_cli({"train", "--config", (dir / "badinit.json").string(), "--out", dir.string()}) == cli::kConfigError);
  write_text(dir / "zero_r.json", R"({"r": 0})");
  CHECK(run_cli({"train", "--config", (dir / "zero_r.json").string(), "--out", dir.string()}) == cli::kConfigError);
  write_text(dir / "broken.json", "{");
  CHECK(run_cli({"train", "--config", (dir / "broken.json").string(), "--out", dir.string()}) == cli::kConfigError);

  // A bad CSV surfaces as a data error.
  fs::create_directories(dir / "badcsv");
  write_text(dir / "badcsv" / "train.csv", "x1,y1\n1,2\n1,x\n");
  write_text(dir / "badcsv" / "test.csv", "x1,y1\n1,2\n");
  CHECK(run_cli({"train", "--dataset", (dir / "badcsv").string(), "--out", dir.string()}) == cli::kDataError);
}

TEST_CASE("config hash ignores output and timing fields") {
  cli::RunConfig a;
  cli::RunConfig b = a;
  b.output_dir = "elsewhere";
  b.threads = 7;
  b.record_elapsed = false;
  CHECK(a.hash() == b.hash());
  b.r = 4;
  CHECK(a.hash() != b.hash());
  const cli::RunConfig c = cli::RunConfig::from_json(a.to_json());
  CHECK(c.hash() == a.hash());
}

TEST_CASE("CLI: mnist-demo on synthetic IDX files") {
  const fs::path dir = scratch("mnist");
  // 4x4 images: digit 0 lights the left half, digit 1 the right half.
  auto write_idx = [&](const std::string& name, std::uint32_t magic, std::vector<std::uint32_t> dims,
                       const std::vector<std::uint8_t>& body) {
    std::string bytes;
    auto be32 = [&](std::uint32_t v) {
      for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<char>((v >> s) & 0xff));
    };
    be32(magic);
    for (auto d : dims) be32(d);
    bytes.append(body.begin(), body.end());
    write_file_atomic(dir / name, bytes);
  };
  for (const std::string prefix : {"train", "t10k"}) {
    const std::uint32_t n = prefix == "train" ? 60 : 20;
    Rng rng(prefix == "train" ? 1 : 2);
    std::vector<std::uint8_t> images;
    std::vector<std::uint8_t> labels;
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint8_t label = static_cast<std::uint8_t>(k % 3);  // 2 is filtered out
      labels.push_back(label);
      for (int px = 0; px < 16; ++px) {
        const bool left = px % 4 < 2;
        const bool lit = (label == 0 && left) || (label == 1 && !left);
        images.push_back(static_cast<std::uint8_t>(lit ? 200 + rng.below(56) : rng.below(40)));
      }
    }
    write_idx(prefix + "-images-idx3-ubyte", kIdxImagesMagic, {n, 4, 4}, images);
    write_idx(prefix + "-labels-idx1-ubyte", kIdxLabelsMagic, {n}, labels);
  }
  REQUIRE(run_cli({"mnist-demo", "--mnist-dir", dir.string(), "--epochs", "30", "--lr", "0.05", "--r", "2", "--out",
                   (dir / "out").string()}) == 0);
  const json report = parse_json_file(dir / "out" / "mnist_report.json");
  CHECK(report.at("train_samples").get<std::size_t>() == 40);
  CHECK(report.at("test_samples").get<std::size_t>() == 14);
  CHECK(report.at("test_accuracy").get<double>() >= 0.9);
}
