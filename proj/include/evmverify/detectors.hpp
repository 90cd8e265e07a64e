/**
 * Copyright 2026 The evmverify Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EVMVERIFY_DETECTORS_HPP
#define EVMVERIFY_DETECTORS_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"

namespace evmverify {

enum class Scheme { active, passive };

inline std::string to_string(Scheme s) { return s == Scheme::active ? "active" : "passive"; }

/// Measurement topology. The active scheme has two detectors (columns
/// H/D and V/A); the passive scheme has four (H, V, D, A). The basis
/// choice probability is 1/2 in both.
struct SchemeConfig {
  Scheme scheme = Scheme::active;
  int spatial_modes = 1;
  double basis_choice_probability = 0.5;

  int detector_count() const { return scheme == Scheme::active ? 2 : 4; }
};

/// Per-detector, per-spatial-mode efficiencies. Rows index spatial modes,
/// columns index detectors in the scheme's column order.
struct DetectorModel {
  Eigen::MatrixXd efficiencies;

  int spatial_modes() const { return int(efficiencies.rows()); }
  int detectors() const { return int(efficiencies.cols()); }
};

struct RenormalizedModel {
  DetectorModel model;           // max entry exactly 1
  double common_transmittance;   // eta0 factored into transmission loss
};

inline void validate_model(const SchemeConfig& config, const DetectorModel& model) {
  if (model.detectors() != config.detector_count())
    throw std::invalid_argument("detector model: column count does not match scheme");
  if (model.spatial_modes() != config.spatial_modes)
    throw std::invalid_argument("detector model: row count does not match spatial modes");
  for (int r = 0; r < model.spatial_modes(); ++r)
    for (int c = 0; c < model.detectors(); ++c) {
      double v = model.efficiencies(r, c);
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("detector model: efficiency outside [0,1]");
    }
}

/// Symmetric one-parameter mismatch pattern: 1 on the diagonal wrapped over
/// detector columns, eta elsewhere. With as many spatial modes as detectors
/// this reproduces the standard two- and four-mode tables; with one spatial
/// mode it gives the (1, eta, ...) spatial-mode-independent row.
inline DetectorModel symmetric_eta_model(const SchemeConfig& config, double eta) {
  int rows = config.spatial_modes, cols = config.detector_count();
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = (c == r % cols) ? 1.0 : eta;
  DetectorModel model{m};
  validate_model(config, model);
  return model;
}

/// Divides all efficiencies by the global maximum so the largest relative
/// efficiency is exactly 1; the factored-out maximum is reported as the
/// common transmittance.
inline RenormalizedModel renormalize(const DetectorModel& model) {
  double eta0 = model.efficiencies.maxCoeff();
  if (eta0 <= 0.0)
    throw std::invalid_argument("renormalize: all-zero model, no detection possible");
  RenormalizedModel out{DetectorModel{model.efficiencies / eta0}, eta0};
  // Guard against round-off leaving the max a hair above 1.
  for (int r = 0; r < out.model.spatial_modes(); ++r)
    for (int c = 0; c < out.model.detectors(); ++c)
      if (out.model.efficiencies(r, c) > 1.0) out.model.efficiencies(r, c) = 1.0;
  return out;
}

/// Parses the JSON model-config schema:
///   {"scheme": "active"|"passive", "spatial_modes": N,
///    "efficiencies": [[...], ...]}  or  {"eta": x} as the symmetric shortcut.
inline std::pair<SchemeConfig, DetectorModel> load_detector_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("model config: ") + e.what());
  }
  SchemeConfig config;
  std::string scheme = j.value("scheme", "");
  if (scheme == "active")
    config.scheme = Scheme::active;
  else if (scheme == "passive")
    config.scheme = Scheme::passive;
  else
    throw std::invalid_argument("model config: unknown scheme '" + scheme + "'");
  config.spatial_modes = j.value("spatial_modes", 1);
  if (config.spatial_modes < 1)
    throw std::invalid_argument("model config: spatial_modes must be >= 1");

  DetectorModel model;
  if (j.contains("eta")) {
    model = symmetric_eta_model(config, j["eta"].get<double>());
  } else if (j.contains("efficiencies")) {
    auto rows = j["efficiencies"];
    if (!rows.is_array() || rows.empty())
      throw std::invalid_argument("model config: efficiencies must be a non-empty matrix");
    model.efficiencies.resize(rows.size(), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size())
        throw std::invalid_argument("model config: ragged efficiency matrix");
      for (size_t c = 0; c < rows[r].size(); ++c)
        model.efficiencies(r, c) = rows[r][c].get<double>();
    }
  } else {
    throw std::invalid_argument("model config: need either 'eta' or 'efficiencies'");
  }
  validate_model(config, model);
  return {config, model};
}

}  // namespace evmverify

#endif  // EVMVERIFY_DETECTORS_HPP
