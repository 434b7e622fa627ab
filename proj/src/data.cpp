#include "qkan/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qkan/error.hpp"
#include "qkan/rng.hpp"

namespace qkan {

namespace {

std::vector<std::vector<double>> sample_inputs(Rng& rng, std::size_t n, std::size_t d, InputRange range) {
  std::vector<std::vector<double>> xs(n, std::vector<double>(d));
  for (auto& row : xs) {
    for (double& v : row) v = rng.uniform(range.lo, range.hi);
  }
  return xs;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw DataError("IDX: truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.size() != targets.size()) throw DataError("dataset: input and target row counts differ");
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].size() != n_features() || targets[k].size() != n_targets()) {
      throw DataError("dataset: ragged row " + std::to_string(k));
    }
    for (double v : inputs[k]) {
      if (!std::isfinite(v)) throw DataError("dataset: non-finite input in row " + std::to_string(k));
    }
    for (double v : targets[k]) {
      if (!std::isfinite(v)) throw DataError("dataset: non-finite target in row " + std::to_string(k));
    }
  }
}

const std::vector<FeynmanSpec>& feynman_specs() {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  static const std::vector<FeynmanSpec> specs = {
      {"I.12.11", "1 + a*sin(theta)", 2, [](std::span<const double> v) { return 1.0 + v[0] * sin(v[1]); }, {2, 2, 1}},
      {"I.29.16", "sqrt(1 + a^2 - 2a*cos(theta1 - theta2))", 3,
       [](std::span<const double> v) { return sqrt(1.0 + v[0] * v[0] - 2.0 * v[0] * cos(v[1] - v[2])); },
       {3, 2, 3, 1}},
      {"I.40.1", "n0*exp(-a)", 2, [](std::span<const double> v) { return v[0] * exp(-v[1]); },
       {2, 2, 1, 1, 1, 2, 1}},
      {"I.50.26", "cos(a) + alpha*cos(a)^2", 2,
       [](std::span<const double> v) { return cos(v[0]) + v[1] * cos(v[0]) * cos(v[0]); }, {2, 2, 3, 1}},
      {"II.2.42", "(a - 1)*b", 2, [](std::span<const double> v) { return (v[0] - 1.0) * v[1]; }, {2, 2, 1}},
      {"II.6.15a", "c*sqrt(a^2 + b^2)/(4*pi)", 3,
       [](std::span<const double> v) {
         return v[2] * sqrt(v[0] * v[0] + v[1] * v[1]) / (4.0 * std::numbers::pi);
       },
       {3, 2, 1, 1}},
      {"II.35.18", "n0/(exp(a) + exp(-a))", 2,
       [](std::span<const double> v) { return v[0] / (exp(v[1]) + exp(-v[1])); }, {2, 1, 1}},
      {"II.36.38", "a + alpha*b", 3, [](std::span<const double> v) { return v[0] + v[2] * v[1]; }, {3, 2, 1}},
      {"III.10.19", "sqrt(1 + a^2 + b^2)", 2,
       [](std::span<const double> v) { return sqrt(1.0 + v[0] * v[0] + v[1] * v[1]); }, {2, 1, 1}},
      {"III.17.37", "beta*(1 + alpha*cos(theta))", 3,
       [](std::span<const double> v) { return v[1] * (1.0 + v[0] * cos(v[2])); }, {3, 3, 1}},
  };
  return specs;
}

const FeynmanSpec& find_feynman(const std::string& id) {
  for (const auto& s : feynman_specs()) {
    if (s.id == id) return s;
  }
  throw DataError("unknown equation id '" + id + "'");
}

DatasetSplit gen_regression(const FeynmanSpec& spec, std::size_t n_train, std::size_t n_test, double noise_frac,
                            std::uint64_t seed, InputRange range) {
  if (!(noise_frac >= 0.0)) throw std::invalid_argument("gen_regression: noise_frac must be >= 0");
  if (!(range.lo < range.hi)) throw std::invalid_argument("gen_regression: empty input range");
  Rng rng = Rng::stream(seed, "data");
  DatasetSplit out;
  out.train.inputs = sample_inputs(rng, n_train, spec.arity, range);
  out.test.inputs = sample_inputs(rng, n_test, spec.arity, range);

  auto clean = [&](const std::vector<std::vector<double>>& xs) {
    std::vector<double> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) ys.push_back(spec.formula(x));
    return ys;
  };
  const auto train_clean = clean(out.train.inputs);
  const auto test_clean = clean(out.test.inputs);

  double mean_abs = 0.0;
  for (double y : train_clean) mean_abs += std::abs(y);
  if (!train_clean.empty()) mean_abs /= static_cast<double>(train_clean.size());
  const double stddev = noise_frac * mean_abs;

  auto noisy = [&](const std::vector<double>& ys) {
    std::vector<std::vector<double>> t;
    t.reserve(ys.size());
    for (double y : ys) t.push_back({stddev > 0.0 ? y + rng.normal(0.0, stddev) : y});
    return t;
  };
  out.train.targets = noisy(train_clean);
  out.test.targets = noisy(test_clean);
  out.train.meta = out.test.meta = {spec.id, noise_frac, seed, range.lo, range.hi};
  return out;
}

double sinc_target(double x) {
  const double u = 20.0 * x;
  return u == 0.0 ? 1.0 : std::sin(u) / u;
}

DatasetSplit gen_sinc(std::size_t n_train, std::size_t n_test, double noise_std, std::uint64_t seed) {
  if (!(noise_std >= 0.0)) throw std::invalid_argument("gen_sinc: noise_std must be >= 0");
  Rng rng = Rng::stream(seed, "data");
  DatasetSplit out;
  out.train.inputs = sample_inputs(rng, n_train, 1, {0.0, 1.0});
  out.test.inputs = sample_inputs(rng, n_test, 1, {0.0, 1.0});
  for (auto* d : {&out.train, &out.test}) {
    for (const auto& x : d->inputs) {
      const double y = sinc_target(x[0]);
      d->targets.push_back({noise_std > 0.0 ? y + rng.normal(0.0, noise_std) : y});
    }
    d->meta = {"sinc", noise_std, seed, 0.0, 1.0};
  }
  return out;
}

std::size_t IdxArray::item_size() const {
  std::size_t n = 1;
  for (std::size_t k = 1; k < dims.size(); ++k) n *= dims[k];
  return n;
}

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  IdxArray out;
  out.magic = read_be32(bytes, 0);
  std::size_t rank = 0;
  if (out.magic == kIdxImagesMagic) {
    rank = 3;
  } else if (out.magic == kIdxLabelsMagic) {
    rank = 1;
  } else {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", out.magic);
    throw DataError(std::string("IDX: bad magic ") + buf + " at byte offset 0");
  }
  std::size_t offset = 4;
  std::size_t total = 1;
  for (std::size_t k = 0; k < rank; ++k, offset += 4) {
    out.dims.push_back(read_be32(bytes, offset));
    total *= out.dims.back();
  }
  if (bytes.size() < offset + total) {
    throw DataError("IDX: truncated body at byte offset " + std::to_string(bytes.size()) + ", expected " +
                    std::to_string(offset + total) + " bytes");
  }
  out.values.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    const double b = bytes[offset + k];
    out.values[k] = rank == 3 ? (b / 255.0 - 0.5) / 0.5 : b;
  }
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data());
  try {
    return parse_idx({p, raw.size()});
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_csv(const Dataset& d) {
  std::string out;
  for (std::size_t k = 0; k < d.n_features(); ++k) out += (k ? ",x" : "x") + std::to_string(k + 1);
  for (std::size_t k = 0; k < d.n_targets(); ++k) {
    out += (d.n_features() || k ? ",y" : "y") + std::to_string(k + 1);
  }
  out += '\n';
  char buf[40];
  for (std::size_t r = 0; r < d.size(); ++r) {
    bool first = true;
    for (const auto* row : {&d.inputs[r], &d.targets[r]}) {
      for (double v : *row) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (!first) out += ',';
        out += buf;
        first = false;
      }
    }
    out += '\n';
  }
  return out;
}

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV: missing header at line 1");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  std::size_t nx = 0;
  std::size_t ny = 0;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string& h = header[k];
    const bool is_x = !h.empty() && h[0] == 'x' && ny == 0 && h == "x" + std::to_string(nx + 1);
    const bool is_y = !h.empty() && h[0] == 'y' && h == "y" + std::to_string(ny + 1);
    if (is_x) {
      ++nx;
    } else if (is_y) {
      ++ny;
    } else {
      throw DataError("CSV: bad header column '" + h + "' at line 1");
    }
  }

  Dataset d;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != nx + ny) {
      throw DataError("CSV: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(nx + ny));
    }
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const char* b = cells[k].data();
      const char* e = b + cells[k].size();
      auto [ptr, ec] = std::from_chars(b, e, row[k]);
      if (ec != std::errc() || ptr != e || !std::isfinite(row[k])) {
        throw DataError("CSV: line " + std::to_string(line_no) + ": bad number '" + cells[k] + "'");
      }
    }
    d.inputs.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(nx));
    d.targets.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(nx), row.end());
  }
  return d;
}

void write_csv(const Dataset& d, const std::filesystem::path& path) { write_file_atomic(path, format_csv(d)); }

Dataset read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw DataError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qkan
