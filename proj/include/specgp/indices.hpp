#pragma once

#include <optional>
#include <string_view>

#include "specgp/expr.hpp"
#include "specgp/schema.hpp"

namespace specgp {

/// Landsat surface-reflectance band set (TM / ETM+; the thermal band B6 is
/// not part of the SR product and is omitted).
inline BandSchema landsat_schema() {
  return BandSchema{
      "landsat",
      {
          {"Blue", 0.45, 0.52, "B1"},
          {"Green", 0.52, 0.60, "B2"},
          {"Red", 0.63, 0.69, "B3"},
          {"NIR", 0.76, 0.90, "B4"},
          {"SWIR", 1.55, 1.75, "B5"},
          {"SWIR2", 2.08, 2.35, "B7"},
      }};
}

/// MODIS MOD09A1/MYD09A1 band set; adds a second near-infrared channel.
inline BandSchema modis_schema() {
  return BandSchema{
      "modis",
      {
          {"Blue", 0.46, 0.48, "B3"},
          {"Green", 0.55, 0.57, "B4"},
          {"Red", 0.62, 0.67, "B1"},
          {"NIR", 0.84, 0.88, "B2"},
          {"NIR2", 1.23, 1.25, "B5"},
          {"SWIR", 1.63, 1.65, "B6"},
          {"SWIR2", 2.11, 2.16, "B7"},
      }};
}

inline std::optional<BandSchema> find_schema(std::string_view name) {
  if (name == "landsat") return landsat_schema();
  if (name == "modis") return modis_schema();
  return std::nullopt;
}

inline BandSchema require_schema(std::string_view name) {
  if (auto s = find_schema(name)) return *s;
  throw std::invalid_argument("unknown schema '" + std::string(name) +
                              "' (expected 'landsat' or 'modis')");
}

// ---------------------------------------------------------------------------
// Baseline vegetation indices, expressed in the same tree algebra as learned
// indices so every downstream code path treats them identically. Protected
// division stands in for plain division; the closed forms are undefined at
// the singular denominators anyway.
// ---------------------------------------------------------------------------

/// NDVI = (NIR - Red) / (NIR + Red)
inline ExprTree ndvi(const BandSchema& schema) {
  auto nir = static_cast<int>(schema.require("NIR"));
  auto red = static_cast<int>(schema.require("Red"));
  return binary_node(BinaryOp::pdiv,
                     binary_node(BinaryOp::sub, band_node(nir), band_node(red)),
                     binary_node(BinaryOp::add, band_node(nir), band_node(red)));
}

/// EVI = 2.5 (NIR - Red) / (NIR + 6 Red - 7.5 Blue + 1)
inline ExprTree evi(const BandSchema& schema) {
  auto nir = static_cast<int>(schema.require("NIR"));
  auto red = static_cast<int>(schema.require("Red"));
  auto blue = static_cast<int>(schema.require("Blue"));
  auto numerator = binary_node(
      BinaryOp::mul, const_node(2.5),
      binary_node(BinaryOp::sub, band_node(nir), band_node(red)));
  auto denominator = binary_node(
      BinaryOp::add,
      binary_node(BinaryOp::sub,
                  binary_node(BinaryOp::add, band_node(nir),
                              binary_node(BinaryOp::mul, const_node(6.0),
                                          band_node(red))),
                  binary_node(BinaryOp::mul, const_node(7.5), band_node(blue))),
      const_node(1.0));
  return binary_node(BinaryOp::pdiv, numerator, denominator);
}

/// EVI2 = 2.5 (NIR - Red) / (NIR + 2.4 Red + 1); blue-band-free EVI variant.
inline ExprTree evi2(const BandSchema& schema) {
  auto nir = static_cast<int>(schema.require("NIR"));
  auto red = static_cast<int>(schema.require("Red"));
  auto numerator = binary_node(
      BinaryOp::mul, const_node(2.5),
      binary_node(BinaryOp::sub, band_node(nir), band_node(red)));
  auto denominator = binary_node(
      BinaryOp::add,
      binary_node(BinaryOp::add, band_node(nir),
                  binary_node(BinaryOp::mul, const_node(2.4), band_node(red))),
      const_node(1.0));
  return binary_node(BinaryOp::pdiv, numerator, denominator);
}

/// Baseline index by name ("ndvi", "evi", "evi2").
inline ExprTree baseline_index(std::string_view name, const BandSchema& schema) {
  if (name == "ndvi") return ndvi(schema);
  if (name == "evi") return evi(schema);
  if (name == "evi2") return evi2(schema);
  throw std::invalid_argument("unknown baseline index '" + std::string(name) +
                              "' (expected ndvi, evi or evi2)");
}

}  // namespace specgp
