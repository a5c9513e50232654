#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace specgp {

/// One spectral band: channel name, wavelength range in micrometers and the
/// sensor-specific band code (e.g. "B4").
struct Band {
  std::string name;
  double wavelength_lo = 0.0;
  double wavelength_hi = 0.0;
  std::string code;
};

/// Ordered band set for a sensor family. Band order defines the terminal
/// indices used by expression trees and the column order of pixel CSV files.
struct BandSchema {
  std::string sensor_name;
  std::vector<Band> bands;

  std::size_t arity() const { return bands.size(); }

  std::optional<std::size_t> find(std::string_view band_name) const {
    for (std::size_t i = 0; i < bands.size(); ++i) {
      if (bands[i].name == band_name) return i;
    }
    return std::nullopt;
  }

  /// Like find() but throws with a descriptive message.
  std::size_t require(std::string_view band_name) const {
    if (auto idx = find(band_name)) return *idx;
    throw std::invalid_argument("schema '" + sensor_name +
                                "' has no band named '" +
                                std::string(band_name) + "'");
  }

  void validate() const {
    for (std::size_t i = 0; i < bands.size(); ++i) {
      for (std::size_t j = i + 1; j < bands.size(); ++j) {
        if (bands[i].name == bands[j].name) {
          throw std::invalid_argument("duplicate band name '" + bands[i].name +
                                      "' in schema '" + sensor_name + "'");
        }
      }
    }
  }
};

}  // namespace specgp
