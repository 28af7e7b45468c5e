#include "droploss/model.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "droploss/csv.hpp"

namespace droploss {

ClassifierParams init_params(int in_dim, int hidden_dim, int out_dim,
                             std::uint64_t seed) {
  if (in_dim < 1 || out_dim < 1 || hidden_dim < 0)
    throw std::invalid_argument("init_params: bad dimensions");
  std::seed_seq seq{seed, std::uint64_t{4}};
  std::mt19937_64 rng(seq);
  auto gaussian = [&rng](Eigen::MatrixXd& m, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  };

  ClassifierParams p;
  p.has_hidden = hidden_dim > 0;
  if (p.has_hidden) {
    p.w1.resize(in_dim, hidden_dim);
    gaussian(p.w1, 1.0 / std::sqrt(static_cast<double>(in_dim)));
    p.b1 = Eigen::VectorXd::Zero(hidden_dim);
    p.w2.resize(hidden_dim, out_dim);
    gaussian(p.w2, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  } else {
    p.w2.resize(in_dim, out_dim);
    gaussian(p.w2, 1.0 / std::sqrt(static_cast<double>(in_dim)));
  }
  p.b2 = Eigen::VectorXd::Zero(out_dim);
  return p;
}

Eigen::MatrixXd forward(const ClassifierParams& params,
                        const Eigen::MatrixXd& features) {
  if (features.cols() != params.in_dim())
    throw std::invalid_argument("forward: feature dimension mismatch");
  if (params.has_hidden) {
    Eigen::MatrixXd hidden =
        ((features * params.w1).rowwise() + params.b1.transpose()).array().tanh();
    return (hidden * params.w2).rowwise() + params.b2.transpose();
  }
  return (features * params.w2).rowwise() + params.b2.transpose();
}

ParamGrads backward(const ClassifierParams& params, const Eigen::MatrixXd& features,
                    const Eigen::MatrixXd& upstream) {
  if (upstream.rows() != features.rows() || upstream.cols() != params.out_dim())
    throw std::invalid_argument("backward: upstream shape mismatch");
  ParamGrads g;
  if (params.has_hidden) {
    Eigen::MatrixXd hidden =
        ((features * params.w1).rowwise() + params.b1.transpose()).array().tanh();
    g.w2 = hidden.transpose() * upstream;
    g.b2 = upstream.colwise().sum();
    Eigen::MatrixXd d_hidden = (upstream * params.w2.transpose()).array() *
                               (1.0 - hidden.array().square());
    g.w1 = features.transpose() * d_hidden;
    g.b1 = d_hidden.colwise().sum();
  } else {
    g.w2 = features.transpose() * upstream;
    g.b2 = upstream.colwise().sum();
  }
  return g;
}

double lr_at(const TrainSchedule& schedule, int iteration) {
  if (schedule.milestone1 <= 0.0 || schedule.milestone1 >= schedule.milestone2 ||
      schedule.milestone2 >= 1.0)
    throw std::invalid_argument("TrainSchedule: milestones must increase within (0,1)");
  double lr = schedule.base_lr;
  if (iteration >= schedule.milestone1 * schedule.iterations) lr *= schedule.decay_factor;
  if (iteration >= schedule.milestone2 * schedule.iterations) lr *= schedule.decay_factor;
  return lr;
}

MomentumState MomentumState::zeros_like(const ClassifierParams& params) {
  MomentumState s;
  if (params.has_hidden) {
    s.w1 = Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols());
    s.b1 = Eigen::VectorXd::Zero(params.b1.size());
  }
  s.w2 = Eigen::MatrixXd::Zero(params.w2.rows(), params.w2.cols());
  s.b2 = Eigen::VectorXd::Zero(params.b2.size());
  return s;
}

void sgd_step(ClassifierParams& params, const ParamGrads& grads,
              const TrainSchedule& schedule, int iteration, MomentumState& state) {
  if (iteration >= schedule.iterations)
    throw std::invalid_argument("sgd_step: iteration past schedule end");
  const double lr = lr_at(schedule, iteration);
  auto update = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                    Eigen::MatrixXd& velocity) {
    velocity = schedule.momentum * velocity + grad + schedule.weight_decay * param;
    param -= lr * velocity;
  };
  auto update_vec = [&](Eigen::VectorXd& param, const Eigen::VectorXd& grad,
                        Eigen::VectorXd& velocity) {
    velocity = schedule.momentum * velocity + grad + schedule.weight_decay * param;
    param -= lr * velocity;
  };
  if (params.has_hidden) {
    update(params.w1, grads.w1, state.w1);
    update_vec(params.b1, grads.b1, state.b1);
  }
  update(params.w2, grads.w2, state.w2);
  update_vec(params.b2, grads.b2, state.b2);
}

TrainResult train(const ProposalPool& pool, const CategoryTable& table,
                  const LossSpec& spec, const TrainSchedule& schedule,
                  std::uint64_t seed) {
  const int c = table.num_categories();
  const int out_dim = spec.kind == LossKind::kSoftmax ? c + 1 : c;
  TrainResult result;
  result.params = init_params(static_cast<int>(pool.features.cols()),
                              schedule.hidden_dim, out_dim, seed);
  result.log.ledger = GradientLedger(c);
  result.log.early_iteration = schedule.iterations / 10;
  result.log.early_params = result.params;

  std::seed_seq seq{seed, std::uint64_t{3}};
  std::mt19937_64 rng(seq);
  MomentumState momentum = MomentumState::zeros_like(result.params);
  result.log.rows.reserve(schedule.iterations);

  for (int it = 0; it < schedule.iterations; ++it) {
    ProposalBatch batch = sample_batch(pool, schedule.batch_size, rng);
    LogitsBatch lb{forward(result.params, batch.features), batch.labels};
    LossEval eval = evaluate_loss(spec, lb, table, rng);
    if (!std::isfinite(eval.loss)) throw TrainingDiverged(it);

    IterRecord rec;
    rec.iteration = it;
    rec.loss = eval.loss;
    rec.lr = lr_at(schedule, it);
    BinOccurrences occ = foreground_bin_counts(batch.labels, table);
    rec.fg_occ[0] = occ.rare;
    rec.fg_occ[1] = occ.common;
    rec.fg_occ[2] = occ.frequent;

    if (spec.kind != LossKind::kSoftmax) {
      account_gradients(lb, eval.grad, result.log.ledger);
      // Background keep mass per bin, for the drop-rate audit.
      for (int i = 0; i < static_cast<int>(lb.labels.size()); ++i) {
        if (lb.is_foreground(i)) continue;
        for (int j = 0; j < c; ++j) {
          const int b = static_cast<int>(table.bin(j));
          rec.kept[b] += eval.weights(i, j);
          ++rec.total[b];
        }
      }
      switch (spec.kind) {
        case LossKind::kDropLoss:
        case LossKind::kFixedDrop:
          rec.mu_tail = eval.mu.tail;
          rec.mu_freq = eval.mu.freq;
          break;
        case LossKind::kBeql:
          // Continuous weights have no Bernoulli parameter; report realized
          // mass so the audit sees zero deviation.
          rec.mu_tail = rec.total[0] + rec.total[1] > 0
                            ? (rec.kept[0] + rec.kept[1]) / (rec.total[0] + rec.total[1])
                            : 1.0;
          rec.mu_freq = rec.total[2] > 0 ? rec.kept[2] / rec.total[2] : 1.0;
          break;
        default:
          break;  // bce/eql keep everything
      }
    }
    result.log.rows.push_back(rec);

    ParamGrads grads = backward(result.params, batch.features, eval.grad);
    sgd_step(result.params, grads, schedule, it, momentum);

    if (it + 1 == result.log.early_iteration) result.log.early_params = result.params;
    if (schedule.snapshot_every > 0 && (it + 1) % schedule.snapshot_every == 0)
      result.log.snapshots.push_back({it + 1, result.log.ledger});
  }
  return result;
}

void write_params_csv(const ClassifierParams& params, const std::string& path) {
  csv::Writer out(path);
  out.row({"name", "row", "col", "value"});
  auto dump = [&out](const char* name, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        out.row({name, std::to_string(i), std::to_string(j), csv::format(m(i, j))});
  };
  out.row({"shape", std::to_string(params.has_hidden ? params.w1.rows() : 0),
           std::to_string(params.has_hidden ? params.w1.cols() : 0), "w1"});
  out.row({"shape", std::to_string(params.w2.rows()), std::to_string(params.w2.cols()),
           "w2"});
  if (params.has_hidden) {
    dump("w1", params.w1);
    dump("b1", params.b1);
  }
  dump("w2", params.w2);
  dump("b2", params.b2);
}

ClassifierParams read_params_csv(const std::string& path) {
  auto rows = csv::read(path);
  if (rows.size() < 3) throw std::runtime_error("read_params_csv: truncated " + path);
  ClassifierParams p;
  long w1_rows = 0, w1_cols = 0, w2_rows = 0, w2_cols = 0;
  for (const auto& r : rows) {
    if (r.size() != 4 || r[0] != "shape") continue;
    if (r[3] == "w1") {
      w1_rows = std::stol(r[1]);
      w1_cols = std::stol(r[2]);
    } else if (r[3] == "w2") {
      w2_rows = std::stol(r[1]);
      w2_cols = std::stol(r[2]);
    }
  }
  if (w2_rows == 0) throw std::runtime_error("read_params_csv: missing shapes in " + path);
  p.has_hidden = w1_rows > 0;
  if (p.has_hidden) {
    p.w1.setZero(w1_rows, w1_cols);
    p.b1.setZero(w1_cols);
  }
  p.w2.setZero(w2_rows, w2_cols);
  p.b2.setZero(w2_cols);
  for (const auto& r : rows) {
    if (r.size() != 4 || r[0] == "shape" || r[0] == "name") continue;
    const long i = std::stol(r[1]);
    const long j = std::stol(r[2]);
    const double v = std::stod(r[3]);
    if (r[0] == "w1") p.w1(i, j) = v;
    else if (r[0] == "b1") p.b1(i) = v;
    else if (r[0] == "w2") p.w2(i, j) = v;
    else if (r[0] == "b2") p.b2(i) = v;
    else throw std::runtime_error("read_params_csv: unknown block " + r[0]);
  }
  return p;
}

}  // namespace droploss
