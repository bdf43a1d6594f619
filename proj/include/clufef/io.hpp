#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clufef/core.hpp"
#include "clufef/eval.hpp"
#include "clufef/optimizer.hpp"
#include "clufef/preprocess.hpp"

namespace clufef {

// 17 significant digits: parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& context);
long long parse_integer(std::string_view text, const std::string& context);
bool parse_bool(std::string_view text, const std::string& context);

struct LabelColumn {
  enum class Kind { Last, None, At };
  Kind kind = Kind::Last;
  // 0-based column, used when kind == At.
  Index column = 0;

  // "last", "none", "first" or a 0-based column number.
  static LabelColumn parse(std::string_view text);
  std::string str() const;
};

// Rows are samples; cells separated by commas.
struct DatasetFile {
  std::string path;
  bool header = false;
  LabelColumn labels;
};

struct LoadedData {
  // Column per sample. May hold a single sample (transform input).
  Matrix X;
  std::optional<LabelVector> labels;
};

LoadedData parse_csv(std::istream& in, const DatasetFile& layout);
LoadedData load_csv(const DatasetFile& file);

// Writes one row per column of `samples` (17-digit cells), optionally with a
// trailing label column.
void write_csv(std::ostream& out, const Matrix& samples, const std::vector<long long>* labels = nullptr);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// `key = value` lines; '#' starts a comment; blank lines ignored. Duplicate
// keys are rejected.
KeyValues parse_key_values(std::istream& in, const std::string& source);

struct ModelFile {
  KeyValues config;
  FitResult fit;
  Preprocessor preprocess;
};

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);

// Full report of a (possibly single-cell) grid evaluation.
void write_report(std::ostream& out, const KeyValues& config, const LabelVector& labels,
                  const GridResult& grid);

// k, sigma, mean_accuracy, mean_recall for every successful cell.
void write_grid_csv(std::ostream& out, const GridResult& grid);

}  // namespace clufef
