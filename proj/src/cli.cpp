#include "clufef/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "clufef/graphs.hpp"
#include "clufef/objective.hpp"
#include "clufef/optimizer.hpp"
#include "clufef/preprocess.hpp"

namespace clufef::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MissingLabels:
    case ErrorCode::ConfigError:
    case ErrorCode::KTooLarge:
      return kUsageError;
    default:
      return kDataError;
  }
}

namespace {

template <typename Parse>
auto config_value(const std::string& key, const std::string& value, Parse parse) {
  try {
    return parse(value, "config key '" + key + "'");
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }
}

Index positive_index(const std::string& key, const std::string& value) {
  long long v = config_value(key, value, parse_integer);
  if (v < 1) throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be at least 1");
  return static_cast<Index>(v);
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find(',', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view item = text.substr(start, pos - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) items.push_back(item);
    start = pos + 1;
  }
  return items;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "method") {
    method = parse_graph_method(value);
  } else if (key == "dim") {
    dim = positive_index(key, value);
  } else if (key == "k") {
    k = positive_index(key, value);
  } else if (key == "sigma") {
    sigma = config_value(key, value, parse_double);
  } else if (key == "pca_dim") {
    if (value == "none" || value.empty()) {
      pca_dim.reset();
    } else {
      pca_dim = positive_index(key, value);
    }
  } else if (key == "standardize") {
    standardize = config_value(key, value, parse_bool);
  } else if (key == "train_per_class") {
    train_per_class = positive_index(key, value);
  } else if (key == "repeats") {
    repeats = static_cast<int>(positive_index(key, value));
  } else if (key == "seed") {
    long long v = config_value(key, value, parse_integer);
    if (v < 0) throw Error(ErrorCode::ConfigError, "seed must be non-negative");
    seed = static_cast<std::uint64_t>(v);
  } else if (key == "alpha") {
    adam.alpha = config_value(key, value, parse_double);
  } else if (key == "beta1") {
    adam.beta1 = config_value(key, value, parse_double);
  } else if (key == "beta2") {
    adam.beta2 = config_value(key, value, parse_double);
  } else if (key == "epsilon") {
    adam.epsilon = config_value(key, value, parse_double);
  } else if (key == "max_iter") {
    adam.max_iter = static_cast<int>(positive_index(key, value));
  } else if (key == "tol") {
    adam.tol = config_value(key, value, parse_double);
  } else if (key == "recall_mode") {
    recall_mode = parse_recall_mode(value);
  } else if (key == "grid") {
    grid = config_value(key, value, parse_bool);
  } else if (key == "k_values") {
    grid_spec.k_values.clear();
    for (auto item : split_list(value)) grid_spec.k_values.push_back(positive_index(key, std::string(item)));
  } else if (key == "sigma_values") {
    grid_spec.sigma_values.clear();
    for (auto item : split_list(value)) {
      grid_spec.sigma_values.push_back(config_value(key, std::string(item), parse_double));
    }
  } else if (key == "jobs") {
    jobs = static_cast<int>(positive_index(key, value));
  } else if (key == "data") {
    data = value;
  } else if (key == "header") {
    header = config_value(key, value, parse_bool);
  } else if (key == "label_column") {
    label_column = LabelColumn::parse(value);
  } else if (key == "output") {
    output = value;
  } else if (key == "grid_output") {
    grid_output = value;
  } else if (key == "fd_step") {
    fd_step = config_value(key, value, parse_double);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
}

void RunConfig::apply(const KeyValues& entries) {
  for (const auto& [key, value] : entries) set(key, value);
}

KeyValues RunConfig::echo() const {
  std::string ks, ss;
  for (std::size_t i = 0; i < grid_spec.k_values.size(); ++i) {
    ks += (i ? "," : "") + std::to_string(grid_spec.k_values[i]);
  }
  for (std::size_t i = 0; i < grid_spec.sigma_values.size(); ++i) {
    ss += (i ? "," : "") + format_double(grid_spec.sigma_values[i]);
  }
  return {
      {"method", std::string(to_string(method))},
      {"dim", std::to_string(dim)},
      {"k", std::to_string(k)},
      {"sigma", format_double(sigma)},
      {"pca_dim", pca_dim ? std::to_string(*pca_dim) : "none"},
      {"standardize", bool_text(standardize)},
      {"train_per_class", std::to_string(train_per_class)},
      {"repeats", std::to_string(repeats)},
      {"seed", std::to_string(seed)},
      {"alpha", format_double(adam.alpha)},
      {"beta1", format_double(adam.beta1)},
      {"beta2", format_double(adam.beta2)},
      {"epsilon", format_double(adam.epsilon)},
      {"max_iter", std::to_string(adam.max_iter)},
      {"tol", format_double(adam.tol)},
      {"recall_mode", std::string(to_string(recall_mode))},
      {"grid", bool_text(grid)},
      {"k_values", ks},
      {"sigma_values", ss},
      {"jobs", std::to_string(jobs)},
      {"data", data},
      {"header", bool_text(header)},
      {"label_column", label_column.str()},
      {"output", output},
      {"grid_output", grid_output},
      {"fd_step", format_double(fd_step)},
  };
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.method = method;
  e.embed_dim = dim;
  e.k = k;
  e.sigma = sigma;
  e.split = SplitSpec{train_per_class, repeats, RandomSeed{seed}};
  e.preprocess = PreprocessConfig{pca_dim, standardize};
  e.adam = adam;
  e.recall_mode = recall_mode;
  return e;
}

DatasetFile RunConfig::dataset() const { return DatasetFile{data, header, label_column}; }

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  RunConfig config;
  config.apply(parse_key_values(in, path));
  return config;
}

namespace {

struct Fitted {
  Preprocessor pre;
  DataMatrix X;
  std::optional<LabelVector> labels;
};

Fitted load_training_data(const RunConfig& config) {
  if (config.data.empty()) throw Error(ErrorCode::ConfigError, "no data file given (--data)");
  LoadedData loaded = load_csv(config.dataset());
  if (needs_labels(config.method) && !loaded.labels) {
    throw Error(ErrorCode::MissingLabels,
                std::string(to_string(config.method)) + " needs a label column, but labels are disabled");
  }
  DataMatrix raw(std::move(loaded.X));
  Preprocessor pre = Preprocessor::fit(raw, PreprocessConfig{config.pca_dim, config.standardize});
  DataMatrix X(pre.apply(raw.values()));
  if (config.dim > X.feature_count()) {
    throw Error(ErrorCode::ConfigError, "dim=" + std::to_string(config.dim) + " exceeds the " +
                                            std::to_string(X.feature_count()) + " preprocessed features");
  }
  return Fitted{std::move(pre), std::move(X), std::move(loaded.labels)};
}

void open_output(const std::string& path, std::ofstream& file) {
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
}

int cmd_fit(const RunConfig& config, std::ostream& out) {
  if (config.output.empty()) throw Error(ErrorCode::ConfigError, "fit needs --output");
  ObjectiveParams{config.sigma}.validate();
  config.adam.validate();
  Fitted data = load_training_data(config);
  const LabelVector* labels = data.labels ? &*data.labels : nullptr;
  ContrastiveGraphPair graph = build_graph(config.method, data.X, labels, config.k);
  ProjectionMatrix P0 = init_projection(data.X.feature_count(), config.dim, init_seed(RandomSeed{config.seed}, 0));
  FitResult result = fit(data.X, graph, config.sigma, config.adam, P0);

  std::ofstream file;
  open_output(config.output, file);
  write_model(file, ModelFile{config.echo(), result, data.pre});
  file.close();
  if (!file) throw Error(ErrorCode::IoError, "failed writing '" + config.output + "'");

  out << "final_loss = " << format_double(result.final_loss()) << '\n'
      << "iterations = " << result.iterations << '\n'
      << "converged = " << bool_text(result.converged) << '\n';
  return kSuccess;
}

// Layout options left unset fall back to the ones recorded at fit time.
int cmd_transform(const std::string& model_path, DatasetFile layout, std::optional<std::string> label_column,
                  bool header_flag, const std::string& output, std::ostream& out) {
  std::ifstream in(model_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model '" + model_path + "'");
  ModelFile model = read_model(in);
  RunConfig recorded;
  for (const auto& [key, value] : model.config) {
    if (key == "label_column" || key == "header") recorded.set(key, value);
  }
  layout.labels = label_column ? LabelColumn::parse(*label_column) : recorded.label_column;
  layout.header = header_flag || recorded.header;
  LoadedData loaded = load_csv(layout);
  if (!loaded.X.allFinite()) throw Error(ErrorCode::NonFiniteEntry, "input contains non-finite values");
  Matrix embedded = project(model.fit.projection, model.preprocess.apply(loaded.X));
  if (output.empty() || output == "-") {
    write_csv(out, embedded);
    return kSuccess;
  }
  std::ofstream file;
  open_output(output, file);
  write_csv(file, embedded);
  return kSuccess;
}

int cmd_benchmark(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.output.empty()) throw Error(ErrorCode::ConfigError, "benchmark needs --output");
  if (config.data.empty()) throw Error(ErrorCode::ConfigError, "no data file given (--data)");
  LoadedData loaded = load_csv(config.dataset());
  if (!loaded.labels) throw Error(ErrorCode::MissingLabels, "benchmark needs labelled data");
  DataMatrix X(std::move(loaded.X));
  const LabelVector& labels = *loaded.labels;
  ExperimentConfig experiment = config.experiment();

  GridResult result;
  if (config.grid) {
    result = grid_search(X, labels, experiment, config.grid_spec, config.jobs);
  } else {
    result.cells.push_back(GridCell{config.k, config.sigma, run_experiment(X, labels, experiment), {}});
    result.best = 0;
  }

  std::ofstream file;
  open_output(config.output, file);
  write_report(file, config.echo(), labels, result);
  const std::string grid_path = config.grid_output.empty() ? config.output + ".grid.csv" : config.grid_output;
  std::ofstream grid_file;
  open_output(grid_path, grid_file);
  write_grid_csv(grid_file, result);

  for (const GridCell& cell : result.cells) {
    if (!cell.report) err << "cell k=" << cell.k << " sigma=" << format_double(cell.sigma) << " failed: " << cell.error << '\n';
  }
  const GridCell& best = result.best_cell();
  out << "best_k = " << best.k << '\n'
      << "best_sigma = " << format_double(best.sigma) << '\n'
      << "mean_accuracy = " << format_double(best.report->mean_accuracy) << '\n'
      << "mean_recall = " << format_double(best.report->mean_recall) << '\n';
  return kSuccess;
}

int cmd_gradcheck(const RunConfig& config, double corruption, std::ostream& out, std::ostream& err) {
  ObjectiveParams{config.sigma}.validate();
  Fitted data = load_training_data(config);
  if (data.X.sample_count() > 100) {
    err << "warning: gradcheck on n=" << data.X.sample_count()
        << " samples costs O(n^2 D d) per probe and may be slow\n";
  }
  const LabelVector* labels = data.labels ? &*data.labels : nullptr;
  ContrastiveGraphPair graph = build_graph(config.method, data.X, labels, config.k);
  ProjectionMatrix P = init_projection(data.X.feature_count(), config.dim, init_seed(RandomSeed{config.seed}, 0));
  GradientMatrix analytic = gradient(P, data.X, graph, config.sigma);
  if (corruption != 0.0) analytic.array() += corruption;
  GradientMatrix numeric = finite_diff_gradient(P, data.X, graph, config.sigma, config.fd_step);
  const double worst = max_relative_disagreement(analytic, numeric);
  constexpr double kThreshold = 1e-4;
  const bool pass = worst < kThreshold;
  out << "max_relative_disagreement = " << format_double(worst) << '\n'
      << "threshold = " << format_double(kThreshold) << '\n'
      << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kSuccess : kCheckFailed;
}

// Flags that map one-to-one onto config keys.
struct ConfigFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr ConfigFlag kRunFlags[] = {
    {"--method", "method", "u-cl, s-cl1 or s-cl2"},
    {"--dim", "dim", "embedding dimension d"},
    {"--k", "k", "number of neighbours"},
    {"--sigma", "sigma", "temperature"},
    {"--pca-dim", "pca_dim", "PCA target dimension, or 'none'"},
    {"--standardize", "standardize", "standardize features (true/false)"},
    {"--seed", "seed", "master random seed"},
    {"--repeats", "repeats", "number of random splits"},
    {"--train-per-class", "train_per_class", "training samples per class"},
    {"--jobs", "jobs", "worker threads for grid cells"},
    {"--output", "output", "output path"},
    {"--grid-output", "grid_output", "grid CSV path (default <output>.grid.csv)"},
    {"--alpha", "alpha", "Adam learning rate"},
    {"--beta1", "beta1", "Adam first-moment decay"},
    {"--beta2", "beta2", "Adam second-moment decay"},
    {"--epsilon", "epsilon", "Adam division guard"},
    {"--max-iter", "max_iter", "iteration cap"},
    {"--tol", "tol", "stop when |loss change| < tol"},
    {"--k-values", "k_values", "comma-separated grid of k"},
    {"--sigma-values", "sigma_values", "comma-separated grid of sigma"},
    {"--recall-mode", "recall_mode", "standard or predicted-count"},
    {"--data", "data", "input CSV (rows are samples)"},
    {"--label-col", "label_column", "last, first, none or a 0-based column"},
    {"--step", "fd_step", "finite-difference step"},
};

struct RunOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool header = false;
  bool grid = false;
  CLI::Option* header_flag = nullptr;
  CLI::Option* grid_flag = nullptr;
  double corruption = 0.0;
};

void add_run_options(CLI::App* app, RunOptions& opts) {
  app->add_option("--config", opts.config_path, "key = value config file");
  for (const ConfigFlag& f : kRunFlags) {
    opts.options[f.key] = app->add_option(f.flag, opts.values[f.key], f.help);
  }
  opts.header_flag = app->add_flag("--header", opts.header, "first CSV line is a header");
  opts.grid_flag = app->add_flag("--grid", opts.grid, "search the (k, sigma) grid");
}

RunConfig resolve(const RunOptions& opts, const std::optional<std::string>& env_seed) {
  RunConfig config;
  if (env_seed && !env_seed->empty()) config.set("seed", *env_seed);
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + opts.config_path + "'");
    config.apply(parse_key_values(in, opts.config_path));
  }
  for (const auto& [key, option] : opts.options) {
    if (option->count() > 0) config.set(key, opts.values.at(key));
  }
  if (opts.header_flag->count() > 0) config.header = true;
  if (opts.grid_flag->count() > 0) config.grid = true;
  return config;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::string> env_seed) {
  CLI::App app{"Contrastive-graph linear feature extraction"};
  app.name("clufef");
  app.require_subcommand(1);

  RunOptions fit_opts, bench_opts, grad_opts;
  CLI::App* fit_cmd = app.add_subcommand("fit", "learn a projection and write a model file");
  add_run_options(fit_cmd, fit_opts);
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "repeated-split 1-NN evaluation, optionally over a grid");
  add_run_options(bench_cmd, bench_opts);
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  add_run_options(grad_cmd, grad_opts);
  grad_cmd->add_option("--corrupt-gradient", grad_opts.corruption, "test hook: offset added to the analytic gradient")
      ->group("");

  std::string model_path, transform_data, transform_out, transform_labels;
  bool transform_header = false;
  CLI::App* transform_cmd = app.add_subcommand("transform", "embed a CSV with a fitted model");
  transform_cmd->add_option("--model", model_path, "model file from `fit`")->required();
  transform_cmd->add_option("--data", transform_data, "input CSV")->required();
  transform_cmd->add_option("--output", transform_out, "output CSV (default stdout)");
  CLI::Option* transform_label_opt = transform_cmd->add_option(
      "--label-col", transform_labels, "label column to drop: last, first, none or index (default: as at fit)");
  transform_cmd->add_flag("--header", transform_header, "first CSV line is a header");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(resolve(fit_opts, env_seed), out);
    if (bench_cmd->parsed()) return cmd_benchmark(resolve(bench_opts, env_seed), out, err);
    if (grad_cmd->parsed()) return cmd_gradcheck(resolve(grad_opts, env_seed), grad_opts.corruption, out, err);
    if (transform_cmd->parsed()) {
      std::optional<std::string> labels;
      if (transform_label_opt->count() > 0) labels = transform_labels;
      return cmd_transform(model_path, DatasetFile{transform_data, false, {}}, labels, transform_header,
                           transform_out, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace clufef::cli
