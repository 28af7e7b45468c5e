#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "droploss/diagnostics.hpp"

using namespace droploss;

namespace {

// Brute-force O(n^2) domination oracle, written independently of the
// production scan: point i is on the front iff no other point is >= in both
// coordinates and > in at least one.
std::vector<std::size_t> brute_force_front(const std::vector<ParetoPoint>& pts) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t k = 0; k < pts.size() && !dominated; ++k) {
      if (k == i) continue;
      const bool geq = pts[k].tail >= pts[i].tail && pts[k].head >= pts[i].head;
      const bool gt = pts[k].tail > pts[i].tail || pts[k].head > pts[i].head;
      dominated = geq && gt;
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

ParetoPoint point(double tail, double head) {
  ParetoPoint p;
  p.tail = tail;
  p.head = head;
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("diagnostics");

TEST_CASE("ledger buckets on a hand-worked two-by-two batch") {
  LogitsBatch batch;
  batch.logits = Eigen::MatrixXd::Zero(2, 2);
  batch.labels = {0, kBackground};
  Eigen::MatrixXd grad(2, 2);
  grad << -0.5, 0.25,   // fg row of category 0
           0.125, -0.75;  // background row
  GradientLedger ledger(2);
  account_gradients(batch, grad, ledger);
  CHECK(ledger.encouraging[0] == 0.5);
  CHECK(ledger.encouraging[1] == 0.0);
  CHECK(ledger.fg_mis_discouraging[1] == 0.25);
  CHECK(ledger.fg_mis_discouraging[0] == 0.0);
  CHECK(ledger.bg_discouraging[0] == 0.125);
  CHECK(ledger.bg_discouraging[1] == 0.75);
  CHECK(ledger.total() == 0.5 + 0.25 + 0.125 + 0.75);

  CHECK(bg_origin_fraction(ledger, 0) == doctest::Approx(0.125 / 0.125));
  CHECK(bg_origin_fraction(ledger, 1) == doctest::Approx(0.75 / 1.0));
  GradientLedger empty(2);
  CHECK(bg_origin_fraction(empty, 0) < 0.0);
}

TEST_CASE("ledger partition is exact on random accounted batches") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label_dist(-1, 5);
  for (int rep = 0; rep < 20; ++rep) {
    const int rows = 32, cats = 6;
    LogitsBatch batch;
    batch.logits.resize(rows, cats);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cats; ++j) batch.logits(i, j) = normal(rng);
      batch.labels.push_back(label_dist(rng));
    }
    Eigen::MatrixXd grad(rows, cats);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cats; ++j) grad(i, j) = normal(rng);

    GradientLedger ledger(cats);
    account_gradients(batch, grad, ledger);

    // Independent re-derivation, accumulated in the same traversal order
    // (rows within a category column), so sums must agree bit for bit.
    std::vector<double> enc(cats, 0.0), bg(cats, 0.0), mis(cats, 0.0);
    for (int j = 0; j < cats; ++j) {
      for (int i = 0; i < rows; ++i) {
        const double mag = std::abs(grad(i, j));
        if (batch.labels[i] == j) enc[j] += mag;
        else if (batch.labels[i] == kBackground) bg[j] += mag;
        else mis[j] += mag;
      }
    }
    double oracle_total = 0.0;
    for (int j = 0; j < cats; ++j) {
      CHECK(ledger.encouraging[j] == enc[j]);
      CHECK(ledger.bg_discouraging[j] == bg[j]);
      CHECK(ledger.fg_mis_discouraging[j] == mis[j]);
      oracle_total += enc[j] + bg[j] + mis[j];
    }
    CHECK(ledger.total() ==
          doctest::Approx(grad.cwiseAbs().sum()).epsilon(1e-12));
    CHECK(ledger.total() == doctest::Approx(oracle_total).epsilon(1e-14));
  }
}

TEST_CASE("pareto front agrees with the brute-force oracle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> size_dist(1, 40);
  std::uniform_int_distribution<int> grid_dist(0, 7);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ParetoPoint> pts;
    const int n = size_dist(rng);
    for (int i = 0; i < n; ++i) {
      // Half the sets live on a coarse grid to exercise ties.
      if (rep % 2 == 0)
        pts.push_back(point(grid_dist(rng) / 7.0, grid_dist(rng) / 7.0));
      else
        pts.push_back(point(uni(rng), uni(rng)));
    }
    auto got = pareto_front(pts);
    auto want = brute_force_front(pts);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }
}

TEST_CASE("duplicate extreme points are both kept on the front") {
  std::vector<ParetoPoint> pts = {point(0.9, 0.1), point(0.9, 0.1),
                                  point(0.2, 0.8), point(0.1, 0.05)};
  auto front = pareto_front(pts);
  std::sort(front.begin(), front.end());
  CHECK(front == std::vector<std::size_t>{0, 1, 2});
  mark_front(pts);
  CHECK(pts[0].on_front);
  CHECK(pts[1].on_front);
  CHECK(pts[2].on_front);
  CHECK_FALSE(pts[3].on_front);
}

TEST_CASE("drop rate audit flags only well-sampled deviations") {
  TrainLog log;
  IterRecord a;
  a.kept[0] = 4850;  a.total[0] = 10000;  // rare: empirical 0.485
  a.kept[1] = 50;    a.total[1] = 100;    // common: tiny sample, off by a lot
  a.kept[2] = 9990;  a.total[2] = 10000;  // frequent: within tolerance
  a.mu_tail = 0.5;
  a.mu_freq = 1.0;
  log.rows.push_back(a);
  DropRateAudit audit = drop_rate_audit(log);
  CHECK(audit.bins[0].empirical == doctest::Approx(0.485));
  CHECK(audit.bins[0].expected == doctest::Approx(0.5));
  CHECK_FALSE(audit.bins[0].flagged);  // inside the 0.02 tolerance
  CHECK_FALSE(audit.bins[1].flagged);  // under-sampled, never flagged
  CHECK_FALSE(audit.bins[2].flagged);

  IterRecord b = a;
  b.kept[0] = 4000;  // empirical drifts to 0.44 overall
  log.rows.push_back(b);
  audit = drop_rate_audit(log);
  CHECK(audit.bins[0].samples == 20000);
  CHECK(audit.bins[0].flagged);
}

TEST_CASE("frequency rank order is descending with index tie-break") {
  auto table = CategoryTable::from_counts({50, 900, 50, 300}, LambdaMode::kBinAligned);
  CHECK(frequency_rank_order(table) == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("background score profile averages per-category sigmoid scores") {
  ClassifierParams params;
  params.has_hidden = false;
  params.w2 = Eigen::MatrixXd::Identity(2, 2);
  params.b2 = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd bg(2, 2);
  bg << 0, 2,
        0, 4;
  auto table = CategoryTable::from_counts({5, 500}, LambdaMode::kBinAligned);
  auto profile = bg_score_profile(params, bg, table);
  REQUIRE(profile.size() == 2);
  CHECK(profile[0] == doctest::Approx(0.5));
  CHECK(profile[1] == doctest::Approx(0.5 * (1 / (1 + std::exp(-2.0)) +
                                             1 / (1 + std::exp(-4.0)))));

  ClassifierParams softmax_like = params;
  softmax_like.w2 = Eigen::MatrixXd::Identity(2, 3);  // width C+1
  CHECK_THROWS(bg_score_profile(softmax_like, bg, table));
}

TEST_SUITE_END();
