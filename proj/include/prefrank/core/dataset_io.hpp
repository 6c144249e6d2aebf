#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prefrank/core/types.hpp"

namespace prefrank {

struct DatasetPaths {
  std::filesystem::path venues;
  std::filesystem::path comparisons;
  std::filesystem::path respondents;
  std::optional<std::filesystem::path> publications;
  std::optional<std::filesystem::path> citations;

  // venues.csv, comparisons.csv, respondents.csv and, when present,
  // publications.csv and citations.csv inside `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct Violation {
  std::string entity;  // e.g. "comparison r1#4"
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

std::string to_string(const Violation& v);

// Throws Error(kParse) with file and line for malformed rows,
// Error(kDuplicateKey) for repeated ids, Error(kDanglingReference) for
// unresolved ids and Error(kInvalidDataset) when validate() reports anything.
Dataset load_dataset(const DatasetPaths& paths);

std::vector<Violation> validate(const Dataset& dataset);

// Canonical serialization: every file sorted by its key. Loading the output
// yields an equal Dataset.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

std::string serialize_venues(const Dataset& dataset);
std::string serialize_comparisons(const Dataset& dataset);
std::string serialize_respondents(const Dataset& dataset);
std::string serialize_publications(const Dataset& dataset);
std::string serialize_citations(const Dataset& dataset);

// Hex SHA-256 over the canonical serialization of all five files.
std::string dataset_hash(const Dataset& dataset);

// CSV helpers shared with the transcript and scores formats.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no,
                                        std::string_view file);
std::string csv_escape(std::string_view field);
std::string format_real(double value);

}  // namespace prefrank
