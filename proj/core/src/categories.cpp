#include "droploss/categories.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace droploss {

const char* bin_name(Bin b) {
  switch (b) {
    case Bin::kRare: return "rare";
    case Bin::kCommon: return "common";
    case Bin::kFrequent: return "frequent";
  }
  return "?";
}

Bin bin_of(std::int64_t count) {
  if (count < 0) throw std::invalid_argument("bin_of: negative count");
  if (count <= 10) return Bin::kRare;
  if (count <= 100) return Bin::kCommon;
  return Bin::kFrequent;
}

int tail_indicator(double f, double lambda) { return f < lambda ? 1 : 0; }

CategoryTable CategoryTable::from_counts(const std::vector<std::int64_t>& counts,
                                         LambdaMode mode, double lambda) {
  if (counts.empty()) throw std::invalid_argument("CategoryTable: empty counts");
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw std::invalid_argument("CategoryTable: negative count");
    total += c;
  }
  if (total == 0) throw std::invalid_argument("CategoryTable: all counts zero");

  CategoryTable t;
  t.counts_ = counts;
  t.frequencies_.resize(counts.size());
  t.bins_.resize(counts.size());
  t.tail_.resize(counts.size());
  std::int64_t tail_mass = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    t.frequencies_[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
    t.bins_[j] = bin_of(counts[j]);
    if (t.bins_[j] != Bin::kFrequent) tail_mass += counts[j];
  }
  t.tail_fraction_ = static_cast<double>(tail_mass) / static_cast<double>(total);

  if (mode == LambdaMode::kExplicit) {
    if (lambda < 0.0 || lambda > 1.0)
      throw std::invalid_argument("CategoryTable: lambda outside [0,1]");
    t.lambda_ = lambda;
    for (std::size_t j = 0; j < counts.size(); ++j)
      t.tail_[j] = tail_indicator(t.frequencies_[j], lambda) == 1;
  } else {
    // Bin-aligned: tail flags follow the bins directly; lambda is the
    // representative threshold where one exists. A vector with all mass in
    // one rare/common category admits no separating threshold, so the flags
    // are the source of truth.
    double max_tail = -1.0;
    double min_freq = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < counts.size(); ++j) {
      t.tail_[j] = t.bins_[j] != Bin::kFrequent;
      if (t.tail_[j])
        max_tail = std::max(max_tail, t.frequencies_[j]);
      else
        min_freq = std::min(min_freq, t.frequencies_[j]);
    }
    if (max_tail < 0.0) {
      t.lambda_ = 0.0;  // no tail categories
    } else if (!std::isfinite(min_freq)) {
      t.lambda_ = 1.0;  // no frequent categories
    } else {
      t.lambda_ = 0.5 * (max_tail + min_freq);
    }
  }
  return t;
}

CategoryTable CategoryTable::from_csv(const std::string& path, LambdaMode mode,
                                      double lambda) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("CategoryTable: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("CategoryTable: empty file " + path);
  // Header required; validated loosely (first field non-numeric).
  {
    std::istringstream probe(line);
    double v;
    if (probe >> v)
      throw std::runtime_error("CategoryTable: missing header row in " + path);
  }
  std::vector<std::pair<int, std::int64_t>> rows;
  int max_id = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id_str, count_str;
    if (!std::getline(ss, id_str, ',') || !std::getline(ss, count_str))
      throw std::runtime_error("CategoryTable: malformed row: " + line);
    int id = std::stoi(id_str);
    std::int64_t count = std::stoll(count_str);
    rows.emplace_back(id, count);
    max_id = std::max(max_id, id);
  }
  if (rows.empty()) throw std::runtime_error("CategoryTable: no data rows in " + path);
  std::vector<std::int64_t> counts(max_id + 1, -1);
  for (auto [id, count] : rows) {
    if (id < 0 || counts[id] != -1)
      throw std::runtime_error("CategoryTable: duplicate or invalid id in " + path);
    counts[id] = count;
  }
  for (std::int64_t c : counts)
    if (c == -1) throw std::runtime_error("CategoryTable: missing id in " + path);
  return from_counts(counts, mode, lambda);
}

}  // namespace droploss
