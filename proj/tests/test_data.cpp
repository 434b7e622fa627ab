#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>

#include "qkan/data.hpp"
#include "qkan/error.hpp"

using namespace qkan;
using std::numbers::pi;

namespace {

double eval(const std::string& id, std::vector<double> v) { return find_feynman(id).formula(v); }

std::vector<std::uint8_t> idx_bytes(std::uint32_t magic, std::vector<std::uint32_t> dims,
                                    std::vector<std::uint8_t> body) {
  std::vector<std::uint8_t> out;
  auto be32 = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  };
  be32(magic);
  for (auto d : dims) be32(d);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

}  // namespace

TEST_CASE("benchmark formulas at reference points") {
  CHECK(feynman_specs().size() == 10);
  CHECK(eval("I.12.11", {0.5, pi / 6}) == doctest::Approx(1.25));
  CHECK(eval("I.29.16", {1.0, 0.3, 0.3}) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(eval("I.29.16", {1.0, pi, 0.0}) == doctest::Approx(2.0));
  CHECK(eval("I.29.16", {2.0, pi / 2, 0.0}) == doctest::Approx(std::sqrt(5.0)));
  CHECK(eval("I.40.1", {2.0, std::log(2.0)}) == doctest::Approx(1.0));
  CHECK(eval("I.50.26", {0.0, 0.5}) == doctest::Approx(1.5));
  CHECK(eval("I.50.26", {pi / 2, 3.0}) == doctest::Approx(0.0).scale(1.0));
  CHECK(eval("II.2.42", {0.25, 0.8}) == doctest::Approx(-0.6));
  CHECK(eval("II.6.15a", {0.6, 0.8, pi}) == doctest::Approx(0.25));
  CHECK(eval("II.35.18", {1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(eval("II.36.38", {0.2, 0.5, 0.4}) == doctest::Approx(0.4));
  CHECK(eval("III.10.19", {0.4, 0.8}) == doctest::Approx(std::sqrt(1.8)));
  CHECK(eval("III.17.37", {0.5, 2.0, 0.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(find_feynman("I.99.99"), DataError);
}

TEST_CASE("default shapes match arity") {
  for (const auto& s : feynman_specs()) {
    CAPTURE(s.id);
    CHECK(s.default_shape.front() == s.arity);
    CHECK(s.default_shape.back() == 1);
  }
  CHECK(find_feynman("I.12.11").default_shape == std::vector<std::size_t>{2, 2, 1});
}

TEST_CASE("sinc target") {
  CHECK(sinc_target(0.0) == 1.0);
  CHECK(sinc_target(pi / 20) == doctest::Approx(0.0).scale(1.0));
  CHECK(sinc_target(0.05) == doctest::Approx(std::sin(1.0)));
  CHECK(sinc_target(-0.05) == sinc_target(0.05));
}

TEST_CASE("regression data generation") {
  const auto& spec = find_feynman("II.2.42");
  const DatasetSplit clean = gen_regression(spec, 20000, 100, 0.0, 7);
  double mean_abs = 0.0;
  for (const auto& t : clean.train.targets) mean_abs += std::abs(t[0]);
  mean_abs /= 20000.0;
  CHECK(mean_abs == doctest::Approx(0.25).epsilon(0.02));
  for (const auto& x : clean.train.inputs) {
    CHECK(x.size() == 2);
    CHECK(x[0] >= 0.0);
    CHECK(x[0] < 1.0);
  }
  for (std::size_t k = 0; k < 100; ++k) CHECK(clean.test.targets[k][0] == spec.formula(clean.test.inputs[k]));

  // Noise is drawn after all inputs, so inputs do not depend on the noise level.
  const DatasetSplit noisy = gen_regression(spec, 20000, 100, 0.1, 7);
  CHECK(noisy.train.inputs == clean.train.inputs);
  CHECK(noisy.test.inputs == clean.test.inputs);
  double var = 0.0;
  for (std::size_t k = 0; k < 20000; ++k) var += std::pow(noisy.train.targets[k][0] - clean.train.targets[k][0], 2);
  CHECK(std::sqrt(var / 20000.0) == doctest::Approx(0.1 * mean_abs).epsilon(0.03));
  bool test_noisy = false;
  for (std::size_t k = 0; k < 100; ++k) test_noisy |= noisy.test.targets[k][0] != clean.test.targets[k][0];
  CHECK(test_noisy);

  const DatasetSplit again = gen_regression(spec, 20000, 100, 0.1, 7);
  CHECK(again.train.targets == noisy.train.targets);
  const DatasetSplit other = gen_regression(spec, 20000, 100, 0.1, 8);
  CHECK(other.train.inputs != noisy.train.inputs);

  const DatasetSplit ranged = gen_regression(spec, 50, 0, 0.0, 1, {-2.0, -1.0});
  for (const auto& x : ranged.train.inputs) CHECK((x[0] >= -2.0 && x[0] < -1.0));
  CHECK_THROWS(gen_regression(spec, 10, 10, -0.1, 1));
}

TEST_CASE("sinc data") {
  const DatasetSplit d = gen_sinc(200, 50, 0.0, 3);
  CHECK(d.train.size() == 200);
  CHECK(d.test.size() == 50);
  for (std::size_t k = 0; k < d.train.size(); ++k) CHECK(d.train.targets[k][0] == sinc_target(d.train.inputs[k][0]));
  const DatasetSplit n = gen_sinc(200, 50, 0.1, 3);
  CHECK(n.train.inputs == d.train.inputs);
}

TEST_CASE("CSV round trip is exact") {
  const DatasetSplit d = gen_regression(find_feynman("I.29.16"), 50, 10, 0.1, 2);
  const std::string text = format_csv(d.train);
  CHECK(text.rfind("x1,x2,x3,y1\n", 0) == 0);
  const Dataset back = parse_csv(text);
  CHECK(back.inputs == d.train.inputs);
  CHECK(back.targets == d.train.targets);

  const auto path = std::filesystem::temp_directory_path() / "qkan_test_roundtrip.csv";
  write_csv(d.test, path);
  const Dataset file = read_csv(path);
  CHECK(file.inputs == d.test.inputs);
  CHECK(file.targets == d.test.targets);
  std::filesystem::remove(path);
}

TEST_CASE("CSV errors name the line") {
  try {
    parse_csv("x1,y1\n1,2\n3,abc\n");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(parse_csv("x1,y1\n1,2,3\n"), DataError);
  CHECK_THROWS_AS(parse_csv("x1,y1\n1,nan\n"), DataError);
  CHECK_THROWS_AS(read_csv("/nonexistent/qkan.csv"), DataError);
}

TEST_CASE("IDX parsing") {
  const auto images = idx_bytes(0x803, {2, 1, 2}, {0, 255, 51, 204});
  const IdxArray a = parse_idx(images);
  CHECK(a.count() == 2);
  CHECK(a.item_size() == 2);
  REQUIRE(a.values.size() == 4);
  CHECK(a.values[0] == doctest::Approx(-1.0));
  CHECK(a.values[1] == doctest::Approx(1.0));
  CHECK(a.values[2] == doctest::Approx(-0.6));

  const IdxArray l = parse_idx(idx_bytes(0x801, {3}, {7, 0, 9}));
  CHECK(l.values == std::vector<double>{7, 0, 9});

  CHECK_THROWS_AS(parse_idx(idx_bytes(0x804, {2, 1, 2}, {0, 0, 0, 0})), DataError);
  try {
    parse_idx(idx_bytes(0x803, {2, 2, 2}, {1, 2, 3}));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  const std::vector<std::uint8_t> tiny{0, 0, 8};
  CHECK_THROWS_AS(parse_idx(tiny), DataError);
  const auto header_cut = idx_bytes(0x803, {2}, {});
  CHECK_THROWS_AS(parse_idx(header_cut), DataError);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.inputs = {{1.0, 2.0}, {3.0}};
  d.targets = {{1.0}, {2.0}};
  CHECK_THROWS_AS(d.validate(), DataError);
  d.inputs = {{1.0}, {3.0}};
  d.targets = {{1.0}};
  CHECK_THROWS_AS(d.validate(), DataError);
  d.targets = {{1.0}, {INFINITY}};
  CHECK_THROWS_AS(d.validate(), DataError);
}
