#include "ho/samples.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ho {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

SampleSet::SampleSet(MatrixXd atoms, VectorXd weights, std::optional<std::uint64_t> seed)
    : atoms_(std::move(atoms)), weights_(std::move(weights)), seed_(seed) {
  require(atoms_.rows() >= 1, "SampleSet: needs at least one atom");
  require(all_finite(atoms_), "SampleSet: atoms must be finite");
  require(weights_.size() == atoms_.rows(), "SampleSet: weights length must match atom count");
  require((weights_.array() >= 0.0).all(), "SampleSet: weights must be nonnegative");
  require(std::abs(weights_.sum() - 1.0) <= tolerances().weight_sum,
          "SampleSet: weights must sum to 1 within 1e-12");
}

SampleSet::SampleSet(MatrixXd atoms, std::optional<std::uint64_t> seed)
    : SampleSet(std::move(atoms),
                VectorXd::Constant(atoms.rows(), 1.0 / static_cast<double>(atoms.rows())),
                seed) {}

SampleMoments SampleSet::moments() const {
  SampleMoments m;
  m.mean = atoms_.transpose() * weights_;
  MatrixXd centered = atoms_.rowwise() - m.mean.transpose();
  m.covariance = centered.transpose() * weights_.asDiagonal() * centered;
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();
  m.mad = centered.cwiseAbs().transpose() * weights_;
  return m;
}

SampleSet SampleSet::select(const std::vector<int>& rows) const {
  require(!rows.empty(), "SampleSet::select: empty selection");
  MatrixXd a(static_cast<Index>(rows.size()), dim());
  VectorXd w(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < size(), "SampleSet::select: index out of range");
    a.row(static_cast<Index>(i)) = atoms_.row(rows[i]);
    w(static_cast<Index>(i)) = weights_(rows[i]);
  }
  const double total = w.sum();
  require(total > 0.0, "SampleSet::select: selected weights sum to zero");
  return SampleSet(std::move(a), w / total, seed_);
}

std::string SampleSet::to_csv() const {
  std::ostringstream os;
  const bool uniform =
      (weights_.array() - 1.0 / static_cast<double>(size())).abs().maxCoeff() == 0.0;
  for (Index c = 0; c < dim(); ++c) {
    if (c) os << ',';
    os << 'x' << (c + 1);
  }
  if (!uniform) os << ",weight";
  os << '\n';
  for (Index r = 0; r < size(); ++r) {
    for (Index c = 0; c < dim(); ++c) {
      if (c) os << ',';
      os << format_double(atoms_(r, c));
    }
    if (!uniform) os << ',' << format_double(weights_(r));
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

SampleSet SampleSet::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "SampleSet CSV: missing header");
  auto header = split_csv_line(line);
  bool has_weight = !header.empty() && header.back() == "weight";
  const Index m = static_cast<Index>(header.size()) - (has_weight ? 1 : 0);
  require(m >= 1, "SampleSet CSV: no coordinate columns");
  std::vector<std::array<double, 1>> dummy;
  std::vector<double> values;
  std::vector<double> weights;
  Index rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    require(static_cast<Index>(fields.size()) == m + (has_weight ? 1 : 0),
            "SampleSet CSV: ragged row");
    for (Index c = 0; c < m; ++c) values.push_back(std::stod(fields[static_cast<size_t>(c)]));
    if (has_weight) weights.push_back(std::stod(fields.back()));
    ++rows;
  }
  require(rows >= 1, "SampleSet CSV: no data rows");
  MatrixXd atoms(rows, m);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < m; ++c) atoms(r, c) = values[static_cast<size_t>(r * m + c)];
  if (has_weight) {
    VectorXd w = Eigen::Map<VectorXd>(weights.data(), rows);
    return SampleSet(std::move(atoms), std::move(w));
  }
  return SampleSet(std::move(atoms));
}

void SampleSet::save_csv(const std::string& path) const {
  std::ofstream f(path);
  require(f.good(), "SampleSet: cannot open " + path + " for writing");
  f << to_csv();
}

SampleSet SampleSet::load_csv(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "SampleSet: cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return from_csv(os.str());
}

std::string SampleSet::to_json() const {
  json j;
  j["atoms"] = json::array();
  for (Index r = 0; r < size(); ++r) {
    json row = json::array();
    for (Index c = 0; c < dim(); ++c) row.push_back(atoms_(r, c));
    j["atoms"].push_back(std::move(row));
  }
  j["weights"] = json::array();
  for (Index r = 0; r < size(); ++r) j["weights"].push_back(weights_(r));
  if (seed_) j["seed"] = *seed_;
  return j.dump();
}

SampleSet SampleSet::from_json(const std::string& text) {
  json j = json::parse(text);
  require(j.contains("atoms") && j["atoms"].is_array() && !j["atoms"].empty(),
          "SampleSet JSON: atoms missing or empty");
  const Index n = static_cast<Index>(j["atoms"].size());
  const Index m = static_cast<Index>(j["atoms"][0].size());
  MatrixXd atoms(n, m);
  for (Index r = 0; r < n; ++r) {
    require(static_cast<Index>(j["atoms"][r].size()) == m, "SampleSet JSON: ragged atoms");
    for (Index c = 0; c < m; ++c) atoms(r, c) = j["atoms"][r][c].get<double>();
  }
  std::optional<std::uint64_t> seed;
  if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
  if (j.contains("weights") && !j["weights"].is_null()) {
    VectorXd w(n);
    require(static_cast<Index>(j["weights"].size()) == n, "SampleSet JSON: weights length");
    for (Index r = 0; r < n; ++r) w(r) = j["weights"][r].get<double>();
    return SampleSet(std::move(atoms), std::move(w), seed);
  }
  return SampleSet(std::move(atoms), seed);
}

}  // namespace ho
