#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "specgp/engine.hpp"
#include "specgp/formula.hpp"
#include "specgp/indices.hpp"
#include "specgp/schema.hpp"
#include "specgp/tseries.hpp"

namespace specgp {

// CSV dialect: comma separated, mandatory header row, UTF-8, '.' decimals,
// no quoting (none of the emitted fields ever contains a comma).

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::optional<double> parse_number(std::string_view text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

/// "YYYY-MM" -> absolute month index (year * 12 + month - 1).
inline std::optional<int> parse_year_month(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  int year = 0, month = 0;
  auto [p1, e1] = std::from_chars(text.data(), text.data() + 4, year);
  auto [p2, e2] = std::from_chars(text.data() + 5, text.data() + 7, month);
  if (e1 != std::errc() || e2 != std::errc()) return std::nullopt;
  if (p1 != text.data() + 4 || p2 != text.data() + 7) return std::nullopt;
  if (month < 1 || month > 12) return std::nullopt;
  return year * 12 + (month - 1);
}

inline std::string format_year_month(int month_index) {
  int year = month_index / 12;
  int month = month_index % 12 + 1;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

// ---------------------------------------------------------------------------
// Labeled pixel CSV
//
// Header: area_id,year_month,label,<band name per schema, in schema order>
// ---------------------------------------------------------------------------

struct PixelRecord {
  std::string area_id;
  int month = 0;
  int label = 0;  // mapped class ordinal
  std::vector<double> bands;
};

struct LoadDiagnostic {
  std::size_t row = 0;  // 1-based file line number
  std::string message;
};

struct LabeledPixelData {
  BandSchema schema;
  std::vector<std::string> label_names;  // index = class ordinal, first-seen order
  std::vector<PixelRecord> rows;
  std::vector<LoadDiagnostic> rejected;

  int min_month() const {
    int m = rows.front().month;
    for (const auto& r : rows) m = std::min(m, r.month);
    return m;
  }
  int max_month() const {
    int m = rows.front().month;
    for (const auto& r : rows) m = std::max(m, r.month);
    return m;
  }
};

/// Loads and validates a labeled pixel CSV. Rows with non-finite or
/// unparseable band values are rejected with row-numbered diagnostics; a
/// third class label or a header/schema mismatch is a hard error.
inline LabeledPixelData load_pixels(const std::filesystem::path& path,
                                    const BandSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open pixel CSV '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("pixel CSV '" + path.string() + "' is empty");
  }
  auto header = split_csv_line(strip_cr(line));
  std::vector<std::string> expected = {"area_id", "year_month", "label"};
  for (const auto& b : schema.bands) expected.push_back(b.name);
  if (header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) want += ',';
      want += expected[i];
    }
    throw std::runtime_error("pixel CSV '" + path.string() +
                             "' header does not match schema '" +
                             schema.sensor_name + "': expected \"" + want +
                             "\", got \"" + strip_cr(line) + "\"");
  }

  LabeledPixelData data;
  data.schema = schema;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != expected.size()) {
      data.rejected.push_back({line_no, "expected " +
                                            std::to_string(expected.size()) +
                                            " fields, got " +
                                            std::to_string(fields.size())});
      continue;
    }
    auto month = parse_year_month(fields[1]);
    if (!month) {
      data.rejected.push_back({line_no, "invalid year_month '" + fields[1] + "'"});
      continue;
    }
    PixelRecord rec;
    rec.area_id = fields[0];
    rec.month = *month;
    rec.bands.reserve(schema.arity());
    bool ok = true;
    for (std::size_t b = 0; b < schema.arity(); ++b) {
      const std::string& cell = fields[3 + b];
      auto v = parse_number(cell);
      if (!v || !std::isfinite(*v)) {
        data.rejected.push_back({line_no, "non-finite or unparseable value '" +
                                              cell + "' in band column '" +
                                              schema.bands[b].name + "'"});
        ok = false;
        break;
      }
      rec.bands.push_back(*v);
    }
    if (!ok) continue;

    const std::string& label = fields[2];
    std::size_t ordinal = data.label_names.size();
    for (std::size_t i = 0; i < data.label_names.size(); ++i) {
      if (data.label_names[i] == label) {
        ordinal = i;
        break;
      }
    }
    if (ordinal == data.label_names.size()) {
      if (data.label_names.size() == 2) {
        throw std::runtime_error(
            "pixel CSV '" + path.string() + "' row " + std::to_string(line_no) +
            ": third class label '" + label + "' (binary datasets only; saw '" +
            data.label_names[0] + "' and '" + data.label_names[1] + "')");
      }
      data.label_names.push_back(label);
    }
    rec.label = static_cast<int>(ordinal);
    data.rows.push_back(std::move(rec));
  }
  if (data.rows.empty()) {
    throw std::runtime_error("pixel CSV '" + path.string() +
                             "' contains no usable data rows");
  }
  return data;
}

/// Flattens records into the engine's sample form, keeping rows that satisfy
/// the predicate.
template <typename Pred>
PixelDataset to_dataset(const LabeledPixelData& data, Pred&& keep) {
  PixelDataset out;
  out.schema = data.schema;
  for (const auto& r : data.rows) {
    if (keep(r)) out.samples.push_back({r.bands, r.label});
  }
  return out;
}

inline PixelDataset to_dataset(const LabeledPixelData& data) {
  return to_dataset(data, [](const PixelRecord&) { return true; });
}

/// Groups pixel records into per-area observation lists for time-series work.
/// An area with inconsistent labels is a hard error.
struct AreaObservations {
  std::string area_id;
  int label = 0;
  std::vector<std::pair<int, std::vector<double>>> observations;
};

inline std::vector<AreaObservations> group_by_area(const LabeledPixelData& data) {
  std::map<std::string, std::size_t> index;
  std::vector<AreaObservations> areas;
  for (const auto& r : data.rows) {
    auto it = index.find(r.area_id);
    if (it == index.end()) {
      index.emplace(r.area_id, areas.size());
      areas.push_back({r.area_id, r.label, {}});
      it = index.find(r.area_id);
    } else if (areas[it->second].label != r.label) {
      throw std::runtime_error("area '" + r.area_id +
                               "' has inconsistent class labels");
    }
    areas[it->second].observations.emplace_back(r.month, r.bands);
  }
  return areas;
}

// ---------------------------------------------------------------------------
// Formula files: a header line naming the schema, then the formula.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFormulaHeaderPrefix = "schema:";

struct LoadedFormula {
  BandSchema schema;
  ExprTree tree;
};

inline void write_formula_file(const std::filesystem::path& path,
                               const BandSchema& schema, const ExprTree& tree) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write formula file '" + path.string() + "'");
  }
  out << kFormulaHeaderPrefix << ' ' << schema.sensor_name << '\n'
      << to_formula(tree, schema) << '\n';
  if (!out) {
    throw std::runtime_error("failed writing formula file '" + path.string() + "'");
  }
}

inline LoadedFormula read_formula_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open formula file '" + path.string() + "'");
  }
  std::string header;
  do {
    if (!std::getline(in, header)) {
      throw std::runtime_error("formula file '" + path.string() +
                               "' is missing its schema header line");
    }
    header = strip_cr(header);
  } while (header.empty());
  if (header.rfind(kFormulaHeaderPrefix, 0) != 0) {
    throw std::runtime_error("formula file '" + path.string() +
                             "' must start with 'schema: <name>'");
  }
  std::string name = header.substr(kFormulaHeaderPrefix.size());
  while (!name.empty() && name.front() == ' ') name.erase(name.begin());
  BandSchema schema = require_schema(name);

  std::string formula;
  do {
    if (!std::getline(in, formula)) {
      throw std::runtime_error("formula file '" + path.string() +
                               "' has no formula line");
    }
    formula = strip_cr(formula);
  } while (formula.empty());
  return {schema, parse_formula(formula, schema)};
}

// ---------------------------------------------------------------------------
// Population CSV: schema,fitness,formula with one individual per row.
// ---------------------------------------------------------------------------

struct LoadedPopulation {
  BandSchema schema;
  std::vector<Individual> individuals;
};

inline void write_population_csv(const std::filesystem::path& path,
                                 const BandSchema& schema,
                                 const std::vector<Individual>& individuals) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write population file '" + path.string() +
                             "'");
  }
  out << "schema,fitness,formula\n";
  for (const auto& ind : individuals) {
    out << schema.sensor_name << ','
        << (ind.fitness ? format_double(*ind.fitness) : "") << ','
        << to_formula(ind.tree, schema) << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing population file '" +
                             path.string() + "'");
  }
}

inline LoadedPopulation read_population_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open population file '" + path.string() +
                             "'");
  }
  std::string line;
  if (!std::getline(in, line) ||
      strip_cr(line) != "schema,fitness,formula") {
    throw std::runtime_error("population file '" + path.string() +
                             "' must start with 'schema,fitness,formula'");
  }
  LoadedPopulation out;
  bool have_schema = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw std::runtime_error("population file '" + path.string() + "' row " +
                               std::to_string(line_no) + ": expected 3 fields");
    }
    if (!have_schema) {
      out.schema = require_schema(fields[0]);
      have_schema = true;
    } else if (fields[0] != out.schema.sensor_name) {
      throw std::runtime_error("population file '" + path.string() + "' row " +
                               std::to_string(line_no) +
                               ": mixed schemas ('" + out.schema.sensor_name +
                               "' vs '" + fields[0] + "')");
    }
    Individual ind;
    if (!fields[1].empty()) {
      auto f = parse_number(fields[1]);
      if (!f) {
        throw std::runtime_error("population file '" + path.string() +
                                 "' row " + std::to_string(line_no) +
                                 ": bad fitness value '" + fields[1] + "'");
      }
      ind.fitness = *f;
    }
    ind.tree = parse_formula(fields[2], out.schema);
    out.individuals.push_back(std::move(ind));
  }
  if (!have_schema) {
    throw std::runtime_error("population file '" + path.string() +
                             "' contains no individuals");
  }
  return out;
}

}  // namespace specgp
