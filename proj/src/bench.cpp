#include "linprobit/bench.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "linprobit/errors.hpp"
#include "linprobit/linearization.hpp"
#include "linprobit/parallel.hpp"

namespace linprobit {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno == 0 && std::isfinite(out);
}

std::vector<std::string> split_csv_line(const std::string& line,
                                        const std::string& path, long line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (in_quotes) {
    throw LoadError(path + ": unterminated quote on line " +
                    std::to_string(line_no));
  }
  fields.push_back(trim(field));
  return fields;
}

bool label_matches(const std::string& cell, const std::string& positive) {
  if (cell == positive) return true;
  double a = 0.0, b = 0.0;
  return parse_double(cell, a) && parse_double(positive, b) && a == b;
}

std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string base =
      slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base;
}

void fisher_yates(std::vector<int>& idx, RandomStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
}

/// Standardizes columns of both matrices using statistics from `train`
/// only. Columns that are constant on the training rows pass through
/// unchanged (this keeps an all-ones intercept column intact).
void standardize_on_train(Eigen::MatrixXd& train, Eigen::MatrixXd& test) {
  const Eigen::Index m = train.rows();
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    const double mean = train.col(c).mean();
    const double var =
        (train.col(c).array() - mean).square().sum() / static_cast<double>(m);
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) continue;
    train.col(c) = (train.col(c).array() - mean) / sd;
    if (test.rows() > 0) test.col(c) = (test.col(c).array() - mean) / sd;
  }
}

EstimatorReport fit_cell(EstimatorId id, const Eigen::MatrixXd& design,
                         const Eigen::VectorXd& labels, double sigma_x_sq,
                         const SolverConfig& solver, RandomStream& rng) {
  const Eigen::Index m = design.rows();
  const Eigen::Index n = design.cols();
  const ProbitProblem problem(
      design, sigma_x_sq * Eigen::MatrixXd::Identity(n, n),
      Eigen::MatrixXd::Identity(m, m), 0.0);
  const ObservationVector obs = ObservationVector::binary(labels);
  switch (id) {
    case EstimatorId::LMMSE:
    case EstimatorId::LS: {
      const Linearization lin = linearize(problem);
      return run_estimator(id, problem, lin, obs, solver, rng);
    }
    case EstimatorId::MAP:
      return map_probit(problem, obs, solver);
    case EstimatorId::ML:
      return ml_probit(problem, obs, solver);
    case EstimatorId::LogitMAP:
      return map_logit(problem, obs, solver);
    case EstimatorId::PM:
      return pm_gibbs(problem, obs, solver, rng);
  }
  throw std::logic_error("fit_cell: unknown estimator");
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& src,
                          const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd take_entries(const Eigen::VectorXd& src,
                             const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = src(rows[i]);
  }
  return out;
}

double sample_std(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

void Dataset::validate() const {
  if (name.empty()) throw std::invalid_argument("dataset: empty name");
  if (features.rows() < 2 || features.cols() < 1) {
    throw std::invalid_argument("dataset '" + name + "': needs at least 2 rows and 1 feature");
  }
  if (!features.allFinite()) {
    throw std::invalid_argument("dataset '" + name + "': non-finite feature value");
  }
  if (labels.size() != features.rows()) {
    throw std::invalid_argument("dataset '" + name + "': label count mismatch");
  }
  if (feature_names.size() != static_cast<std::size_t>(features.cols())) {
    throw std::invalid_argument("dataset '" + name + "': feature name count mismatch");
  }
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1.0) {
      has_pos = true;
    } else if (labels(i) == -1.0) {
      has_neg = true;
    } else {
      throw std::invalid_argument("dataset '" + name + "': label not +-1 at row " +
                                  std::to_string(i));
    }
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("dataset '" + name + "': only one class present");
  }
}

IngestionSpec IngestionSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("ingestion spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw LoadError("ingestion spec: expected a JSON object");

  static const std::set<std::string> known = {
      "label_column", "positive_value", "add_intercept", "drop_columns"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw LoadError("ingestion spec: unknown field '" + key + "'");
    }
  }
  if (!j.contains("label_column") || !j["label_column"].is_string()) {
    throw LoadError("ingestion spec: 'label_column' (string) is required");
  }
  if (!j.contains("positive_value")) {
    throw LoadError("ingestion spec: 'positive_value' is required");
  }

  IngestionSpec spec;
  spec.label_column = j["label_column"].get<std::string>();
  const auto& pos = j["positive_value"];
  spec.positive_value = pos.is_string() ? pos.get<std::string>() : pos.dump();
  if (j.contains("add_intercept")) {
    if (!j["add_intercept"].is_boolean()) {
      throw LoadError("ingestion spec: 'add_intercept' must be a boolean");
    }
    spec.add_intercept = j["add_intercept"].get<bool>();
  }
  if (j.contains("drop_columns")) {
    if (!j["drop_columns"].is_array()) {
      throw LoadError("ingestion spec: 'drop_columns' must be an array");
    }
    for (const auto& item : j["drop_columns"]) {
      if (!item.is_string()) {
        throw LoadError("ingestion spec: 'drop_columns' entries must be strings");
      }
      spec.drop_columns.push_back(item.get<std::string>());
    }
  }
  return spec;
}

IngestionSpec IngestionSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("ingestion spec: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

Dataset load_dataset(const std::string& path, const IngestionSpec& spec) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset file " + path);

  std::string line;
  if (!std::getline(in, line)) throw LoadError(path + ": empty file");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);

  const std::vector<std::string> header = split_csv_line(line, path, 1);
  std::set<std::string> seen;
  for (const auto& name : header) {
    if (name.empty()) throw LoadError(path + ": empty column name in header");
    if (!seen.insert(name).second) {
      throw LoadError(path + ": duplicate column name '" + name + "'");
    }
  }

  long label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == spec.label_column) label_col = static_cast<long>(c);
  }
  if (label_col < 0) {
    throw LoadError(path + ": label column '" + spec.label_column + "' not found");
  }

  std::set<std::string> drops(spec.drop_columns.begin(), spec.drop_columns.end());
  for (const auto& name : spec.drop_columns) {
    if (!seen.count(name)) {
      throw LoadError(path + ": drop column '" + name + "' not found");
    }
  }
  if (drops.count(spec.label_column)) {
    throw LoadError(path + ": label column '" + spec.label_column +
                    "' also listed in drop_columns");
  }

  std::vector<long> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<long>(c) == label_col || drops.count(header[c])) continue;
    feature_cols.push_back(static_cast<long>(c));
    feature_names.push_back(header[c]);
  }
  if (feature_cols.empty()) {
    throw LoadError(path + ": no feature columns remain");
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line, path, line_no);
    if (fields.size() != header.size()) {
      throw LoadError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }

    const std::string& label_cell = fields[static_cast<std::size_t>(label_col)];
    if (label_cell.empty()) {
      throw LoadError(path + ": missing value at line " + std::to_string(line_no) +
                      ", column '" + spec.label_column + "'");
    }
    labels.push_back(label_matches(label_cell, spec.positive_value) ? 1.0 : -1.0);

    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& cell = fields[static_cast<std::size_t>(feature_cols[k])];
      if (cell.empty()) {
        throw LoadError(path + ": missing value at line " + std::to_string(line_no) +
                        ", column '" + feature_names[k] + "'");
      }
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw LoadError(path + ": non-numeric value '" + cell + "' at line " +
                        std::to_string(line_no) + ", column '" + feature_names[k] +
                        "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) {
    throw LoadError(path + ": needs at least 2 data rows");
  }

  Dataset ds;
  ds.name = stem_of(path);
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  Eigen::Index n = static_cast<Eigen::Index>(feature_cols.size());
  ds.features.resize(m, spec.add_intercept ? n + 1 : n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index c = 0; c < n; ++c) {
      ds.features(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
  }
  ds.feature_names = feature_names;
  if (spec.add_intercept) {
    ds.features.col(n).setOnes();
    ds.feature_names.push_back("intercept");
  }
  ds.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), m);

  bool has_pos = false, has_neg = false;
  for (const double y : labels) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw LoadError(path + ": labels contain a single class only");
  }
  ds.validate();
  return ds;
}

void CvPlan::validate() const {
  if (folds < 2) throw std::invalid_argument("cv plan: folds must be >= 2");
  if (partitions < 1) throw std::invalid_argument("cv plan: partitions must be >= 1");
}

std::vector<std::vector<FoldSplit>> kfold_split(int m, const CvPlan& plan) {
  plan.validate();
  if (m < plan.folds) {
    throw std::invalid_argument("kfold_split: fewer samples than folds");
  }

  std::vector<std::vector<FoldSplit>> out(static_cast<std::size_t>(plan.partitions));
  for (int p = 0; p < plan.partitions; ++p) {
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    RandomStream rng = RandomStream::substream(
        plan.seed, kStreamPartition, static_cast<std::uint64_t>(p));
    fisher_yates(perm, rng);

    const int base = m / plan.folds;
    const int remainder = m % plan.folds;
    std::size_t offset = 0;
    std::vector<FoldSplit>& folds = out[static_cast<std::size_t>(p)];
    folds.resize(static_cast<std::size_t>(plan.folds));
    for (int f = 0; f < plan.folds; ++f) {
      const std::size_t size =
          static_cast<std::size_t>(base + (f < remainder ? 1 : 0));
      FoldSplit& split = folds[static_cast<std::size_t>(f)];
      split.test.assign(perm.begin() + offset, perm.begin() + offset + size);
      split.train.reserve(perm.size() - size);
      split.train.insert(split.train.end(), perm.begin(), perm.begin() + offset);
      split.train.insert(split.train.end(), perm.begin() + offset + size, perm.end());
      std::sort(split.test.begin(), split.test.end());
      std::sort(split.train.begin(), split.train.end());
      offset += size;
    }
  }
  return out;
}

double grid_search_sigma_x(const Eigen::MatrixXd& train_features,
                           const Eigen::VectorXd& train_labels,
                           EstimatorId estimator_id,
                           const std::vector<double>& grid,
                           const SolverConfig& solver, std::uint64_t seed,
                           std::uint64_t cell_key) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  for (const double g : grid) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("grid_search: grid values must be positive");
    }
  }
  const int m = static_cast<int>(train_features.rows());
  if (m < 2 || train_labels.size() != m) {
    throw std::invalid_argument("grid_search: bad training slice");
  }

  std::vector<int> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  RandomStream shuffle_rng =
      RandomStream::substream(seed, kStreamInnerSplit, cell_key);
  fisher_yates(idx, shuffle_rng);

  const int n_val = std::max(1, m / 4);
  const int n_fit = m - n_val;
  const std::vector<int> fit_rows(idx.begin(), idx.begin() + n_fit);
  const std::vector<int> val_rows(idx.begin() + n_fit, idx.end());

  const Eigen::MatrixXd fit_x = take_rows(train_features, fit_rows);
  const Eigen::VectorXd fit_y = take_entries(train_labels, fit_rows);
  const Eigen::MatrixXd val_x = take_rows(train_features, val_rows);
  const Eigen::VectorXd val_y = take_entries(train_labels, val_rows);

  // The fit slice may be single-class; the probit objective still fits, so
  // only estimator-level failures disqualify a grid point.
  double best_acc = -1.0;
  double best_sigma = std::numeric_limits<double>::quiet_NaN();
  for (const double g : grid) {
    RandomStream fit_rng = RandomStream::substream(
        seed, kStreamGridFit, cell_key, std::bit_cast<std::uint64_t>(g));
    double acc = 0.0;
    try {
      const EstimatorReport report =
          fit_cell(estimator_id, fit_x, fit_y, g, solver, fit_rng);
      if (report.failed()) continue;
      acc = evaluate_acc(val_x * report.estimate, val_y);
    } catch (const EstimatorUnavailable&) {
      continue;
    } catch (const NumericError&) {
      continue;
    }
    if (acc > best_acc || (acc == best_acc && g < best_sigma)) {
      best_acc = acc;
      best_sigma = g;
    }
  }
  if (best_acc < 0.0) {
    throw EstimatorUnavailable("grid_search: no grid point produced a usable fit");
  }
  return best_sigma;
}

double evaluate_acc(const Eigen::VectorXd& scores,
                    const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw std::invalid_argument("evaluate_acc: length mismatch or empty input");
  }
  long correct = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double predicted = scores(i) >= 0.0 ? 1.0 : -1.0;
    if (labels(i) != 1.0 && labels(i) != -1.0) {
      throw std::invalid_argument("evaluate_acc: label not +-1");
    }
    if (predicted == labels(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double evaluate_auc(const Eigen::VectorXd& scores,
                    const Eigen::VectorXd& labels) {
  const Eigen::Index m = scores.size();
  if (labels.size() != m || m == 0) {
    throw std::invalid_argument("evaluate_auc: length mismatch or empty input");
  }
  long positives = 0, negatives = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (labels(i) == 1.0) {
      ++positives;
    } else if (labels(i) == -1.0) {
      ++negatives;
    } else {
      throw std::invalid_argument("evaluate_auc: label not +-1");
    }
  }
  if (positives == 0 || negatives == 0) {
    throw NumericError("evaluate_auc: only one class present");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores(a) < scores(b);
  });

  // Midranks: tied scores share the average of their 1-based positions.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (labels(order[k]) == 1.0) positive_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double u = positive_rank_sum -
                   0.5 * static_cast<double>(positives) *
                       static_cast<double>(positives + 1);
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

std::vector<double> default_sigma_x_grid() {
  std::vector<double> grid;
  grid.reserve(9);
  for (int k = 0; k < 9; ++k) {
    grid.push_back(std::pow(10.0, -2.0 + 0.5 * static_cast<double>(k)));
  }
  return grid;
}

std::vector<BenchResult> run_benchmark(const Dataset& dataset,
                                       const std::vector<EstimatorId>& estimators,
                                       const CvPlan& plan,
                                       const std::vector<double>& grid,
                                       const SolverConfig& solver,
                                       int threads) {
  dataset.validate();
  plan.validate();
  solver.validate();
  if (estimators.empty()) {
    throw std::invalid_argument("run_benchmark: no estimators selected");
  }
  if (grid.empty()) {
    throw std::invalid_argument("run_benchmark: empty sigma_x^2 grid");
  }
  const int m = static_cast<int>(dataset.rows());
  const auto splits = kfold_split(m, plan);

  std::vector<BenchResult> results;
  results.reserve(estimators.size());

  for (std::size_t ei = 0; ei < estimators.size(); ++ei) {
    const EstimatorId id = estimators[ei];
    const std::size_t cells =
        static_cast<std::size_t>(plan.partitions) *
        static_cast<std::size_t>(plan.folds);
    std::vector<double> cell_acc(cells, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> cell_auc(cells, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> cell_sigma(cells, std::numeric_limits<double>::quiet_NaN());
    std::atomic<bool> available{true};

    parallel_for_index(static_cast<std::size_t>(plan.partitions), threads,
                       [&](std::size_t p) {
      for (int f = 0; f < plan.folds; ++f) {
        if (!available.load(std::memory_order_relaxed)) return;
        const FoldSplit& split = splits[p][static_cast<std::size_t>(f)];
        Eigen::MatrixXd train_x = take_rows(dataset.features, split.train);
        Eigen::MatrixXd test_x = take_rows(dataset.features, split.test);
        const Eigen::VectorXd train_y = take_entries(dataset.labels, split.train);
        const Eigen::VectorXd test_y = take_entries(dataset.labels, split.test);
        standardize_on_train(train_x, test_x);

        const std::uint64_t cell =
            static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(plan.folds) +
            static_cast<std::uint64_t>(f);
        const std::uint64_t cell_key =
            ((static_cast<std::uint64_t>(id) + 1) << 32) | cell;
        try {
          const double sigma = grid_search_sigma_x(
              train_x, train_y, id, grid, solver, plan.seed, cell_key);
          RandomStream final_rng =
              RandomStream::substream(plan.seed, kStreamFinalFit, cell_key);
          const EstimatorReport report =
              fit_cell(id, train_x, train_y, sigma, solver, final_rng);
          if (report.failed()) {
            throw EstimatorUnavailable("refit at chosen sigma_x^2 failed");
          }
          const Eigen::VectorXd scores = test_x * report.estimate;
          cell_acc[cell] = evaluate_acc(scores, test_y);
          cell_auc[cell] = evaluate_auc(scores, test_y);
          cell_sigma[cell] = sigma;
        } catch (const EstimatorUnavailable&) {
          available.store(false, std::memory_order_relaxed);
          return;
        } catch (const NumericError&) {
          available.store(false, std::memory_order_relaxed);
          return;
        }
      }
    });

    BenchResult result;
    result.dataset = dataset.name;
    result.estimator_id = id;
    result.available = available.load();
    if (result.available) {
      std::vector<double> partition_acc, partition_auc;
      partition_acc.reserve(static_cast<std::size_t>(plan.partitions));
      partition_auc.reserve(static_cast<std::size_t>(plan.partitions));
      for (int p = 0; p < plan.partitions; ++p) {
        double acc_sum = 0.0, auc_sum = 0.0;
        for (int f = 0; f < plan.folds; ++f) {
          const std::size_t cell = static_cast<std::size_t>(p) *
                                       static_cast<std::size_t>(plan.folds) +
                                   static_cast<std::size_t>(f);
          acc_sum += cell_acc[cell];
          auc_sum += cell_auc[cell];
        }
        partition_acc.push_back(acc_sum / plan.folds);
        partition_auc.push_back(auc_sum / plan.folds);
      }
      result.acc_mean =
          std::accumulate(partition_acc.begin(), partition_acc.end(), 0.0) /
          static_cast<double>(plan.partitions);
      result.auc_mean =
          std::accumulate(partition_auc.begin(), partition_auc.end(), 0.0) /
          static_cast<double>(plan.partitions);
      result.acc_std = sample_std(partition_acc, result.acc_mean);
      result.auc_std = sample_std(partition_auc, result.auc_mean);

      // Modal grid choice across cells, ties toward the smaller value.
      std::map<double, int> counts;
      for (const double s : cell_sigma) ++counts[s];
      int best_count = -1;
      for (const auto& [value, count] : counts) {
        if (count > best_count) {
          best_count = count;
          result.chosen_sigma_x_sq = value;
        }
      }
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace linprobit
