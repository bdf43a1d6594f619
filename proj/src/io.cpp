#include "clufef/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace clufef {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    parse_fail(context + ": '" + std::string(text) + "' is not a number");
  }
  if (!std::isfinite(value)) parse_fail(context + ": '" + std::string(text) + "' is not finite");
  return value;
}

long long parse_integer(std::string_view text, const std::string& context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    parse_fail(context + ": '" + std::string(text) + "' is not an integer");
  }
  return value;
}

bool parse_bool(std::string_view text, const std::string& context) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  parse_fail(context + ": '" + std::string(text) + "' is not a boolean");
}

LabelColumn LabelColumn::parse(std::string_view text) {
  text = trim(text);
  if (text == "last") return {Kind::Last, 0};
  if (text == "none") return {Kind::None, 0};
  if (text == "first") return {Kind::At, 0};
  long long col = 0;
  try {
    col = parse_integer(text, "label column");
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError,
                "label column must be last, none, first or a 0-based index, got '" + std::string(text) + "'");
  }
  if (col < 0) throw Error(ErrorCode::ConfigError, "label column index must be non-negative");
  return {Kind::At, static_cast<Index>(col)};
}

std::string LabelColumn::str() const {
  switch (kind) {
    case Kind::Last: return "last";
    case Kind::None: return "none";
    case Kind::At: return std::to_string(column);
  }
  return "last";
}

LoadedData parse_csv(std::istream& in, const DatasetFile& layout) {
  std::vector<std::vector<double>> rows;
  std::vector<long long> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool header_pending = layout.header;
  const std::string name = layout.path.empty() ? "<input>" : layout.path;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    auto cells = split(line, ',');
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      parse_fail(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                 " cells, found " + std::to_string(cells.size()));
    }
    std::size_t label_at = cells.size();
    if (layout.labels.kind == LabelColumn::Kind::Last) label_at = cells.size() - 1;
    if (layout.labels.kind == LabelColumn::Kind::At) {
      label_at = static_cast<std::size_t>(layout.labels.column);
      if (label_at >= cells.size()) {
        parse_fail(name + ":" + std::to_string(line_no) + ": label column " + std::to_string(label_at) +
                   " beyond row width " + std::to_string(cells.size()));
      }
    }
    std::vector<double> features;
    features.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string where = name + ":" + std::to_string(line_no) + ":" + std::to_string(c + 1);
      if (c == label_at) {
        raw_labels.push_back(parse_integer(cells[c], where));
      } else {
        features.push_back(parse_double(cells[c], where));
      }
    }
    if (features.empty()) parse_fail(name + ":" + std::to_string(line_no) + ": no feature columns");
    rows.push_back(std::move(features));
  }
  if (rows.empty()) parse_fail(name + ": no data rows");

  LoadedData out;
  out.X.resize(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t i = 0; i < rows[j].size(); ++i) {
      out.X(static_cast<Index>(i), static_cast<Index>(j)) = rows[j][i];
    }
  }
  if (layout.labels.kind != LabelColumn::Kind::None) out.labels = LabelVector::from_raw(raw_labels);
  return out;
}

LoadedData load_csv(const DatasetFile& file) {
  std::ifstream in(file.path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + file.path + "'");
  return parse_csv(in, file);
}

void write_csv(std::ostream& out, const Matrix& samples, const std::vector<long long>* labels) {
  if (labels && static_cast<Index>(labels->size()) != samples.cols()) {
    throw Error(ErrorCode::LengthMismatch, "label count does not match sample count");
  }
  for (Index j = 0; j < samples.cols(); ++j) {
    for (Index i = 0; i < samples.rows(); ++i) {
      if (i) out << ',';
      out << format_double(samples(i, j));
    }
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(j)];
    out << '\n';
  }
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues entries;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(view.substr(0, eq)));
    std::string value(trim(view.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "[matrix " << name << ' ' << m.rows() << ' ' << m.cols() << "]\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_section(std::ostream& out, const std::string& name, const KeyValues& kv) {
  out << '[' << name << "]\n";
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::string join_doubles(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_double(values[i]);
  }
  return s;
}

struct Sections {
  std::map<std::string, KeyValues> keyed;
  std::map<std::string, Matrix> matrices;
  std::vector<std::string> order;
};

Sections read_sections(std::istream& in, const std::string& magic, int version) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != magic + " " + std::to_string(version)) {
    throw Error(ErrorCode::ParseError, "missing '" + magic + " " + std::to_string(version) + "' header");
  }
  Sections out;
  std::size_t line_no = 1;
  std::string current;
  Matrix* matrix = nullptr;
  Index matrix_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    const std::string where = magic + ":" + std::to_string(line_no);
    if (view.front() == '[') {
      if (matrix && matrix_row != matrix->rows()) parse_fail(where + ": matrix section ended early");
      matrix = nullptr;
      if (view.back() != ']') parse_fail(where + ": malformed section header");
      std::istringstream header(std::string(view.substr(1, view.size() - 2)));
      std::string kind;
      header >> kind;
      if (kind == "matrix") {
        std::string name;
        Index rows = -1, cols = -1;
        header >> name >> rows >> cols;
        if (!header || rows < 0 || cols < 0) parse_fail(where + ": malformed matrix header");
        matrix = &out.matrices[name];
        matrix->resize(rows, cols);
        matrix_row = 0;
        current.clear();
      } else {
        current = std::string(view.substr(1, view.size() - 2));
        out.keyed[current];
        out.order.push_back(current);
      }
      continue;
    }
    if (matrix) {
      if (matrix_row >= matrix->rows()) parse_fail(where + ": too many matrix rows");
      auto cells = split(view, ',');
      if (static_cast<Index>(cells.size()) != matrix->cols()) parse_fail(where + ": wrong matrix row width");
      for (std::size_t c = 0; c < cells.size(); ++c) {
        (*matrix)(matrix_row, static_cast<Index>(c)) = parse_double(cells[c], where);
      }
      ++matrix_row;
      continue;
    }
    if (current.empty()) parse_fail(where + ": entry outside any section");
    auto eq = view.find('=');
    if (eq == std::string_view::npos) parse_fail(where + ": expected 'key = value'");
    out.keyed[current].emplace_back(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }
  if (matrix && matrix_row != matrix->rows()) parse_fail(magic + ": matrix section ended early");
  return out;
}

const std::string& lookup(const KeyValues& kv, const std::string& key, const std::string& section) {
  for (const auto& [k, v] : kv) {
    if (k == key) return v;
  }
  throw Error(ErrorCode::ParseError, "model file: [" + section + "] lacks '" + key + "'");
}

const Matrix& need_matrix(const Sections& s, const std::string& name) {
  auto it = s.matrices.find(name);
  if (it == s.matrices.end()) throw Error(ErrorCode::ParseError, "model file: missing matrix '" + name + "'");
  return it->second;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& model) {
  out << "clufef-model " << kModelFormatVersion << '\n';
  write_section(out, "config", model.config);

  const FitResult& fit = model.fit;
  write_section(out, "fit",
                {{"sigma", format_double(fit.sigma)},
                 {"alpha", format_double(fit.hyperparams.alpha)},
                 {"beta1", format_double(fit.hyperparams.beta1)},
                 {"beta2", format_double(fit.hyperparams.beta2)},
                 {"epsilon", format_double(fit.hyperparams.epsilon)},
                 {"max_iter", std::to_string(fit.hyperparams.max_iter)},
                 {"tol", format_double(fit.hyperparams.tol)},
                 {"iterations", std::to_string(fit.iterations)},
                 {"converged", fit.converged ? "true" : "false"},
                 {"initial_loss", format_double(fit.initial_loss())},
                 {"final_loss", format_double(fit.final_loss())},
                 {"loss_trace", join_doubles(fit.loss_trace)}});

  const Preprocessor& pre = model.preprocess;
  write_section(out, "preprocess",
                {{"input_dim", std::to_string(pre.input_dim)},
                 {"pca", pre.pca ? "true" : "false"},
                 {"standardize", pre.scaler ? "true" : "false"}});
  write_matrix(out, "projection", fit.projection.values());
  if (pre.pca) {
    write_matrix(out, "pca_mean", pre.pca->mean);
    write_matrix(out, "pca_components", pre.pca->components);
    write_matrix(out, "pca_eigenvalues", pre.pca->eigenvalues);
  }
  if (pre.scaler) {
    write_matrix(out, "standardize_mean", pre.scaler->mean);
    write_matrix(out, "standardize_std", pre.scaler->std);
  }
}

ModelFile read_model(std::istream& in) {
  Sections s = read_sections(in, "clufef-model", kModelFormatVersion);
  for (const char* name : {"config", "fit", "preprocess"}) {
    if (!s.keyed.count(name)) throw Error(ErrorCode::ParseError, std::string("model file: missing [") + name + "]");
  }
  const KeyValues& fit_kv = s.keyed["fit"];
  const KeyValues& pre_kv = s.keyed["preprocess"];
  auto num = [&](const std::string& key) { return parse_double(lookup(fit_kv, key, "fit"), "model fit." + key); };
  auto integer = [&](const KeyValues& kv, const std::string& key, const std::string& section) {
    return parse_integer(lookup(kv, key, section), "model " + section + "." + key);
  };

  AdamHyperparams h;
  h.alpha = num("alpha");
  h.beta1 = num("beta1");
  h.beta2 = num("beta2");
  h.epsilon = num("epsilon");
  h.max_iter = static_cast<int>(integer(fit_kv, "max_iter", "fit"));
  h.tol = num("tol");

  std::vector<double> trace;
  for (auto cell : split(lookup(fit_kv, "loss_trace", "fit"), ',')) trace.push_back(parse_double(cell, "model loss_trace"));

  FitResult fit{ProjectionMatrix(need_matrix(s, "projection")), std::move(trace),
                static_cast<int>(integer(fit_kv, "iterations", "fit")),
                parse_bool(lookup(fit_kv, "converged", "fit"), "model fit.converged"), num("sigma"), h};

  Preprocessor pre;
  pre.input_dim = static_cast<Index>(integer(pre_kv, "input_dim", "preprocess"));
  if (parse_bool(lookup(pre_kv, "pca", "preprocess"), "model preprocess.pca")) {
    PcaModel pca;
    pca.mean = need_matrix(s, "pca_mean").col(0);
    pca.components = need_matrix(s, "pca_components");
    pca.eigenvalues = need_matrix(s, "pca_eigenvalues").col(0);
    if (pca.mean.size() != pre.input_dim || pca.components.rows() != pre.input_dim) {
      throw Error(ErrorCode::ParseError, "model file: PCA shape does not match input_dim");
    }
    pre.pca = std::move(pca);
  }
  if (parse_bool(lookup(pre_kv, "standardize", "preprocess"), "model preprocess.standardize")) {
    StandardizeModel scaler{need_matrix(s, "standardize_mean").col(0), need_matrix(s, "standardize_std").col(0)};
    pre.scaler = std::move(scaler);
  }
  if (pre.output_dim() != fit.projection.input_dim()) {
    throw Error(ErrorCode::ParseError, "model file: projection rows do not match preprocessed dimension");
  }
  return ModelFile{s.keyed["config"], std::move(fit), std::move(pre)};
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string confusion_text(const ConfusionMatrix& cm) {
  std::string s;
  for (Index r = 0; r < cm.rows(); ++r) {
    if (r) s += ';';
    for (Index c = 0; c < cm.cols(); ++c) {
      if (c) s += ',';
      s += std::to_string(cm(r, c));
    }
  }
  return s;
}

}  // namespace

void write_report(std::ostream& out, const KeyValues& config, const LabelVector& labels, const GridResult& grid) {
  out << "clufef-report " << kReportFormatVersion << '\n';
  write_section(out, "config", config);

  std::string mapping;
  for (int c = 1; c <= labels.class_count(); ++c) {
    if (c > 1) mapping += ',';
    mapping += std::to_string(c) + ":" + std::to_string(labels.original(c));
  }
  write_section(out, "labels", {{"class_count", std::to_string(labels.class_count())},
                                {"samples", std::to_string(labels.size())},
                                {"mapping", mapping}});

  std::size_t ok = 0;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    const GridCell& cell = grid.cells[c];
    const std::string name = "cell " + std::to_string(c);
    if (!cell.report) {
      write_section(out, name, {{"k", std::to_string(cell.k)},
                                {"sigma", format_double(cell.sigma)},
                                {"status", "failed"},
                                {"error", cell.error}});
      continue;
    }
    ++ok;
    const EvaluationReport& rep = *cell.report;
    write_section(out, name, {{"k", std::to_string(cell.k)},
                              {"sigma", format_double(cell.sigma)},
                              {"status", "ok"},
                              {"repeats", std::to_string(rep.repeats.size())},
                              {"recall_mode", std::string(to_string(rep.config.recall_mode))},
                              {"mean_accuracy", format_double(rep.mean_accuracy)},
                              {"mean_recall", format_double(rep.mean_recall)}});
    for (std::size_t r = 0; r < rep.repeats.size(); ++r) {
      const RepeatResult& rr = rep.repeats[r];
      write_section(out, name + " repeat " + std::to_string(r),
                    {{"split_seed", std::to_string(rr.split_seed.value)},
                     {"init_seed", std::to_string(rr.init_seed.value)},
                     {"train_size", std::to_string(rr.train_size)},
                     {"test_size", std::to_string(rr.test_size)},
                     {"accuracy", format_double(rr.accuracy)},
                     {"recall", format_double(rr.recall)},
                     {"iterations", std::to_string(rr.iterations)},
                     {"converged", rr.converged ? "true" : "false"},
                     {"initial_loss", format_double(rr.initial_loss)},
                     {"final_loss", format_double(rr.final_loss)},
                     {"confusion", confusion_text(rr.confusion)}});
    }
  }

  const GridCell& best = grid.best_cell();
  write_section(out, "summary", {{"cells", std::to_string(grid.cells.size())},
                                 {"successful_cells", std::to_string(ok)},
                                 {"best_cell", std::to_string(grid.best)},
                                 {"best_k", std::to_string(best.k)},
                                 {"best_sigma", format_double(best.sigma)},
                                 {"best_mean_accuracy", format_double(best.report->mean_accuracy)},
                                 {"best_mean_recall", format_double(best.report->mean_recall)}});
}

void write_grid_csv(std::ostream& out, const GridResult& grid) {
  out << "k,sigma,mean_accuracy,mean_recall\n";
  for (const GridCell& cell : grid.cells) {
    if (!cell.report) continue;
    out << cell.k << ',' << format_double(cell.sigma) << ',' << format_double(cell.report->mean_accuracy) << ','
        << format_double(cell.report->mean_recall) << '\n';
  }
}

}  // namespace clufef
