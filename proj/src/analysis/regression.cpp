// SPDX-License-Identifier: Apache-2.0
#include "analysis/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "tensor/errors.hpp"

namespace cgnmt::analysis {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorCode::Dimension, "pearson: lengths differ");
  if (x.size() < 2) fail(ErrorCode::InvalidArgument, "pearson: need at least two points");
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) fail(ErrorCode::Numeric, "pearson: zero variance");
  const double r = (sxy / (n - 1)) / std::sqrt((sxx / (n - 1)) * (syy / (n - 1)));
  return std::clamp(r, -1.0, 1.0);
}

double relative_gain(double bleu_cg, double bleu_std) {
  if (bleu_std <= 0) fail(ErrorCode::InvalidArgument, "relative_gain: baseline BLEU must be positive");
  return (bleu_cg - bleu_std) / bleu_std;
}

std::vector<std::vector<double>> min_max_normalize(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> lo(cols, INFINITY), hi(cols, -INFINITY);
  for (const auto& r : rows) {
    if (r.size() != cols) fail(ErrorCode::Dimension, "min_max_normalize: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      lo[c] = std::min(lo[c], r[c]);
      hi[c] = std::max(hi[c], r[c]);
    }
  }
  auto out = rows;
  for (auto& r : out)
    for (std::size_t c = 0; c < cols; ++c) r[c] = hi[c] > lo[c] ? (r[c] == hi[c] ? 1.0 : (r[c] - lo[c]) / (hi[c] - lo[c])) : 0.0;
  return out;
}

std::vector<std::string> FeatureTable::languages() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.lang) == out.end()) out.push_back(r.lang);
  return out;
}

FeatureTable parse_feature_table(const std::string& tsv) {
  FeatureTable table;
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  while (pos < tsv.size()) {
    std::size_t end = tsv.find('\n', pos);
    if (end == std::string::npos) end = tsv.size();
    std::string line = tsv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t s = 0;
    for (std::size_t t; (t = line.find('\t', s)) != std::string::npos; s = t + 1) f.push_back(line.substr(s, t - s));
    f.push_back(line.substr(s));
    if (header) {
      header = false;
      if (f.size() != 7 || f[0] != "lang" || f[6] != "gain")
        fail(ErrorCode::Format, "feature table: header must be lang TT A H UT UTC gain");
      continue;
    }
    if (f.size() != 7) fail(ErrorCode::Format, "feature table line " + std::to_string(line_no) + ": expected 7 fields");
    FeatureRow row;
    row.lang = f[0];
    for (std::size_t k = 0; k < 6; ++k) {
      double v = 0;
      const auto& cell = f[k + 1];
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || p != cell.data() + cell.size())
        fail(ErrorCode::Format, "feature table line " + std::to_string(line_no) + ": bad number \"" + cell + "\"");
      (k < 5 ? row.x[k] : row.gain) = v;
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string format_feature_table(const FeatureTable& table) {
  std::string out = "lang\tTT\tA\tH\tUT\tUTC\tgain\n";
  char buf[64];
  for (const auto& r : table.rows) {
    out += r.lang;
    for (double v : r.x) {
      std::snprintf(buf, sizeof buf, "\t%.6g", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "\t%.6g\n", r.gain);
    out += buf;
  }
  return out;
}

std::vector<double> RegressionModel::flat() const {
  std::vector<double> w = general;
  for (const auto& b : per_language) w.insert(w.end(), b.begin(), b.end());
  return w;
}

double RegressionModel::objective(const std::vector<double>& w) const {
  double loss = 0;
  for (std::size_t r = 0; r < design.size(); ++r) {
    double pred = 0;
    for (std::size_t c = 0; c < w.size(); ++c) pred += design[r][c] * w[c];
    loss += (targets[r] - pred) * (targets[r] - pred);
  }
  for (double v : w) loss += lambda * v * v;
  return loss;
}

double RegressionModel::objective() const { return objective(flat()); }

double RegressionModel::predict(std::size_t row) const {
  const auto w = flat();
  double pred = 0;
  for (std::size_t c = 0; c < w.size(); ++c) pred += design.at(row)[c] * w[c];
  return pred;
}

RegressionModel fit_augmented(const std::vector<std::string>& row_language, const std::vector<std::vector<double>>& x,
                              const std::vector<double>& y, double lambda) {
  if (x.empty() || x.size() != y.size() || x.size() != row_language.size())
    fail(ErrorCode::Dimension, "ridge: need matching non-empty rows, languages and targets");
  if (lambda < 0) fail(ErrorCode::InvalidArgument, "ridge: lambda must be non-negative");
  const std::size_t f = x.front().size();
  RegressionModel m;
  m.lambda = lambda;
  std::map<std::string, std::size_t> block;
  for (const auto& l : row_language)
    if (block.emplace(l, m.languages.size()).second) m.languages.push_back(l);
  const std::size_t cols = f * (1 + m.languages.size());

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(long(x.size()), long(cols));
  Eigen::VectorXd Y(long(y.size()));
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r].size() != f) fail(ErrorCode::Dimension, "ridge: ragged feature rows");
    const std::size_t off = f * (1 + block[row_language[r]]);
    for (std::size_t c = 0; c < f; ++c) {
      X(long(r), long(c)) = x[r][c];
      X(long(r), long(off + c)) = x[r][c];
    }
    Y(long(r)) = y[r];
  }
  const Eigen::MatrixXd A = X.transpose() * X + lambda * Eigen::MatrixXd::Identity(long(cols), long(cols));
  const Eigen::VectorXd b = X.transpose() * Y;
  Eigen::VectorXd w;
  if (lambda > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) fail(ErrorCode::Numeric, "ridge: normal equations are not positive definite");
    w = llt.solve(b);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) fail(ErrorCode::Numeric, "ridge: singular normal equations (lambda = 0)");
    w = lu.solve(b);
  }
  m.general.assign(w.data(), w.data() + f);
  for (std::size_t l = 0; l < m.languages.size(); ++l) m.per_language.emplace_back(w.data() + f * (1 + l), w.data() + f * (2 + l));
  m.design.resize(x.size());
  for (auto& d : m.design) d.resize(cols);
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) m.design[r][c] = X(long(r), long(c));
  m.targets = y;
  return m;
}

RegressionModel fit_feature_augmented_ridge(const FeatureTable& table, double lambda) {
  if (table.languages().size() < 2) fail(ErrorCode::InvalidArgument, "ridge: need at least two languages");
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<std::string> langs;
  for (const auto& r : table.rows) {
    x.emplace_back(r.x.begin(), r.x.end());
    y.push_back(r.gain);
    langs.push_back(r.lang);
  }
  return fit_augmented(langs, min_max_normalize(x), y, lambda);
}

std::string format_weights(const RegressionModel& model, const std::vector<std::string>& names) {
  std::string out = "weights";
  for (const auto& n : names) out += "\t" + n;
  out += "\n";
  char buf[64];
  auto row = [&](const std::string& label, const std::vector<double>& w) {
    out += label;
    for (double v : w) {
      std::snprintf(buf, sizeof buf, "\t%.6f", v);
      out += buf;
    }
    out += "\n";
  };
  row("ALL", model.general);
  for (std::size_t l = 0; l < model.languages.size(); ++l) row(model.languages[l], model.per_language[l]);
  return out;
}

}  // namespace cgnmt::analysis
