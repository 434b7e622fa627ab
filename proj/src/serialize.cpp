#include "qkan/serialize.hpp"

#include <string>

#include "qkan/error.hpp"

namespace qkan {

using nlohmann::json;

namespace {

json linear_to_json(const LinearLayer& lin) {
  return {{"n_in", lin.n_in}, {"n_out", lin.n_out}, {"weight", lin.weight}, {"bias", lin.bias}};
}

LinearLayer linear_from_json(const json& j) {
  LinearLayer lin;
  lin.n_in = j.at("n_in").get<std::size_t>();
  lin.n_out = j.at("n_out").get<std::size_t>();
  lin.weight = j.at("weight").get<std::vector<double>>();
  lin.bias = j.at("bias").get<std::vector<double>>();
  return lin;
}

template <typename F>
auto wrap_parse(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json network_to_json(const QkanNetwork& net) {
  json layers = json::array();
  std::vector<std::size_t> reps;
  for (const auto& layer : net.layers) {
    json edges = json::array();
    for (const auto& e : layer.edges) edges.push_back(e.flat());
    layers.push_back({{"n_in", layer.n_in}, {"n_out", layer.n_out}, {"r", layer.reps()}, {"edges", edges}});
    reps.push_back(layer.reps());
  }
  return {
      {"shape", net.shape},
      {"r", reps},
      {"edge_parameter_order", "enc_w[r], enc_b[r], angles[(r+1)][alpha,beta,gamma], w_base, w_quant, out_bias"},
      {"encoder", net.encoder ? linear_to_json(*net.encoder) : json(nullptr)},
      {"decoder", net.decoder ? linear_to_json(*net.decoder) : json(nullptr)},
      {"layers", layers},
  };
}

QkanNetwork network_from_json(const json& j) {
  return wrap_parse("network", [&] {
    QkanNetwork net;
    net.shape = j.at("shape").get<std::vector<std::size_t>>();
    if (!j.at("encoder").is_null()) net.encoder = linear_from_json(j.at("encoder"));
    if (!j.at("decoder").is_null()) net.decoder = linear_from_json(j.at("decoder"));
    for (const auto& jl : j.at("layers")) {
      QkanLayer layer;
      layer.n_in = jl.at("n_in").get<std::size_t>();
      layer.n_out = jl.at("n_out").get<std::size_t>();
      const auto r = jl.at("r").get<std::size_t>();
      for (const auto& je : jl.at("edges")) {
        const auto flat = je.get<std::vector<double>>();
        DaruanParams p = DaruanParams::zeros(r);
        p.read_flat(flat);
        layer.edges.push_back(std::move(p));
      }
      net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
  });
}

json checkpoint_to_json(const Checkpoint& c) {
  json j = {
      {"format_version", c.format_version},
      {"network", network_to_json(c.net)},
      {"provenance",
       {{"seed", c.provenance.seed},
        {"config_hash", c.provenance.config_hash},
        {"epoch", c.provenance.epoch},
        {"best_test_rmse", c.provenance.best_test_rmse}}},
      {"optimizer", nullptr},
  };
  if (c.optimizer) {
    const AdamState& a = *c.optimizer;
    j["optimizer"] = {{"kind", "adam"}, {"lr", a.lr},     {"beta1", a.beta1}, {"beta2", a.beta2},
                      {"eps", a.eps},   {"step", a.step}, {"m", a.m},         {"v", a.v}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  const int version = wrap_parse("checkpoint", [&] { return j.at("format_version").get<int>(); });
  if (version != kCheckpointFormatVersion) {
    throw DataError("checkpoint: format_version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointFormatVersion) + ")");
  }
  return wrap_parse("checkpoint", [&] {
    Checkpoint c;
    c.format_version = version;
    c.net = network_from_json(j.at("network"));
    const auto& p = j.at("provenance");
    c.provenance.seed = p.at("seed").get<std::uint64_t>();
    c.provenance.config_hash = p.at("config_hash").get<std::string>();
    c.provenance.epoch = p.at("epoch").get<std::size_t>();
    c.provenance.best_test_rmse = p.at("best_test_rmse").get<double>();
    if (j.contains("optimizer") && !j.at("optimizer").is_null()) {
      const auto& o = j.at("optimizer");
      AdamState a;
      a.lr = o.at("lr").get<double>();
      a.beta1 = o.at("beta1").get<double>();
      a.beta2 = o.at("beta2").get<double>();
      a.eps = o.at("eps").get<double>();
      a.step = o.at("step").get<std::size_t>();
      a.m = o.at("m").get<std::vector<double>>();
      a.v = o.at("v").get<std::vector<double>>();
      c.optimizer = std::move(a);
    }
    return c;
  });
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file_atomic(path, dump_json(checkpoint_to_json(c)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_json(parse_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json spectrum_to_json(const SpectrumReport& rep) {
  json coeffs = json::array();
  for (const auto& c : rep.coefficients) coeffs.push_back({c.real(), c.imag()});
  return {
      {"weights", rep.weights},
      {"frequencies", rep.frequencies},
      {"nonzero_count", rep.nonzero_count},
      {"max_frequency", rep.max_frequency},
      {"coefficients", coeffs},
      {"residual_l2", rep.residual_l2},
      {"sample_count", rep.sample_count},
      {"sample_span", rep.sample_span},
      {"condition_number", rep.condition_number},
  };
}

json spline_model_to_json(const SplineModel& m) {
  return {
      {"degree", m.degree},
      {"grid", m.grid},
      {"knots", m.knots},
      {"coefficients", m.coefficients},
      {"domain", {m.domain.lo, m.domain.hi}},
      {"residual", {{"base", "silu"}, {"w_base", m.w_base}, {"out_bias", m.out_bias}, {"bias_in_coefficients", true}}},
      {"fit_error", {{"max", m.max_fit_error}, {"rms", m.rms_fit_error}}},
  };
}

SplineModel spline_model_from_json(const json& j) {
  return wrap_parse("spline", [&] {
    SplineModel m;
    m.degree = j.at("degree").get<std::size_t>();
    m.grid = j.at("grid").get<std::size_t>();
    m.knots = j.at("knots").get<std::vector<double>>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    const auto dom = j.at("domain").get<std::vector<double>>();
    if (dom.size() != 2) throw std::invalid_argument("domain must be [lo, hi]");
    m.domain = {dom[0], dom[1]};
    m.w_base = j.at("residual").at("w_base").get<double>();
    m.out_bias = j.at("residual").at("out_bias").get<double>();
    if (j.contains("fit_error")) {
      m.max_fit_error = j.at("fit_error").at("max").get<double>();
      m.rms_fit_error = j.at("fit_error").at("rms").get<double>();
    }
    m.validate();
    return m;
  });
}

json spline_network_to_json(const SplineNetwork& net) {
  json layers = json::array();
  for (const auto& layer : net.layers) {
    json edges = json::array();
    for (const auto& e : layer.edges) edges.push_back(spline_model_to_json(e));
    layers.push_back({{"n_in", layer.n_in}, {"n_out", layer.n_out}, {"edges", edges}});
  }
  return {
      {"kind", "spline_kan"},
      {"shape", net.shape},
      {"encoder", net.encoder ? linear_to_json(*net.encoder) : json(nullptr)},
      {"decoder", net.decoder ? linear_to_json(*net.decoder) : json(nullptr)},
      {"layers", layers},
  };
}

SplineNetwork spline_network_from_json(const json& j) {
  return wrap_parse("spline network", [&] {
    SplineNetwork net;
    net.shape = j.at("shape").get<std::vector<std::size_t>>();
    if (!j.at("encoder").is_null()) net.encoder = linear_from_json(j.at("encoder"));
    if (!j.at("decoder").is_null()) net.decoder = linear_from_json(j.at("decoder"));
    for (const auto& jl : j.at("layers")) {
      SplineLayer layer;
      layer.n_in = jl.at("n_in").get<std::size_t>();
      layer.n_out = jl.at("n_out").get<std::size_t>();
      for (const auto& je : jl.at("edges")) layer.edges.push_back(spline_model_from_json(je));
      if (layer.edges.size() != layer.n_in * layer.n_out) throw std::invalid_argument("edge grid size mismatch");
      net.layers.push_back(std::move(layer));
    }
    return net;
  });
}

json dataset_meta_to_json(const DatasetMeta& meta) {
  return {{"equation", meta.equation},
          {"seed", meta.seed},
          {"noise_frac", meta.noise},
          {"range", {meta.range_lo, meta.range_hi}}};
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace qkan
