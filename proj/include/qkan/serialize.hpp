#pragma once

// JSON documents: checkpoints, spectrum reports, spline-network exports and
// dataset sidecars. Doubles are written in shortest round-trip form, which
// restores every value bit-exactly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "qkan/data.hpp"
#include "qkan/distill.hpp"
#include "qkan/network.hpp"
#include "qkan/spectrum.hpp"
#include "qkan/train.hpp"

namespace qkan {

inline constexpr int kCheckpointFormatVersion = 1;

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;  // hex FNV-1a of the canonical config dump
  std::size_t epoch = 0;
  double best_test_rmse = 0.0;
};

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  QkanNetwork net;
  Provenance provenance;
  std::optional<AdamState> optimizer;
};

nlohmann::json network_to_json(const QkanNetwork& net);
/// Throws DataError on malformed documents.
QkanNetwork network_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
/// Rejects any format_version other than kCheckpointFormatVersion.
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Complex coefficients as [re, im] pairs.
nlohmann::json spectrum_to_json(const SpectrumReport& rep);

nlohmann::json spline_model_to_json(const SplineModel& m);
SplineModel spline_model_from_json(const nlohmann::json& j);
nlohmann::json spline_network_to_json(const SplineNetwork& net);
SplineNetwork spline_network_from_json(const nlohmann::json& j);

nlohmann::json dataset_meta_to_json(const DatasetMeta& meta);

/// Pretty-printed with a trailing newline.
std::string dump_json(const nlohmann::json& j);
nlohmann::json parse_json_file(const std::filesystem::path& path);

}  // namespace qkan
