#pragma once
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepfield/regularize.hpp"
#include "sepfield/sampler.hpp"
#include "sepfield/synth.hpp"

namespace sepfield {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0; // decoupled; 0 by default
};

/// Adam with bias correction and optional decoupled weight decay. Moments are
/// keyed by binding order, which is stable across iterations for a fixed
/// model.
class Adam {
public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Apply one update. Returns false and leaves parameters untouched when any
  /// gradient entry is non-finite (the iteration is skipped and counted).
  bool step(Tape& tape, Bindings& bindings, double lr) {
    if (m_.empty()) {
      for (const auto& b : bindings) {
        m_.emplace_back(b.storage->size(), 0.0);
        v_.emplace_back(b.storage->size(), 0.0);
      }
    }
    detail::check(m_.size() == bindings.size(), "adam: binding count changed");
    for (const auto& b : bindings)
      for (double g : tape.grad(b.var))
        if (!std::isfinite(g)) {
          ++skipped_;
          return false;
        }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));
    for (std::size_t i = 0; i < bindings.size(); ++i) {
      auto& param = *bindings[i].storage;
      const auto& g = tape.grad(bindings[i].var);
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < param.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        param[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        if (cfg_.weight_decay > 0.0) param[j] -= lr * cfg_.weight_decay * param[j];
      }
    }
    return true;
  }

  long steps() const { return step_; }
  int skipped() const { return skipped_; }

private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long step_ = 0;
  int skipped_ = 0;
};

struct PlateauConfig {
  int patience = 150;
  double factor = 0.5;
  double ema_decay = 0.99;
  double rel_improve = 1e-3;
  double min_lr = 1e-8;
};

/// Reduce-on-plateau: tracks an EMA of the data loss and cuts the rate when it
/// fails to improve for `patience` iterations.
class PlateauScheduler {
public:
  explicit PlateauScheduler(PlateauConfig cfg = {}) : cfg_(cfg) {
    detail::check(cfg_.patience >= 1, "scheduler: patience must be >= 1");
    detail::check(cfg_.factor > 0.0 && cfg_.factor < 1.0, "scheduler: factor must be in (0,1)");
  }

  double update(double data_loss, double lr) {
    detail::check(std::isfinite(data_loss), "scheduler: loss must be finite");
    ema_ = std::isnan(ema_) ? data_loss : cfg_.ema_decay * ema_ + (1.0 - cfg_.ema_decay) * data_loss;
    if (ema_ < best_ * (1.0 - cfg_.rel_improve)) {
      best_ = ema_;
      stall_ = 0;
    } else if (++stall_ >= cfg_.patience) {
      lr = std::max(lr * cfg_.factor, cfg_.min_lr);
      stall_ = 0;
    }
    return lr;
  }

  double ema() const { return ema_; }

private:
  PlateauConfig cfg_;
  double ema_ = std::numeric_limits<double>::quiet_NaN();
  double best_ = std::numeric_limits<double>::infinity();
  int stall_ = 0;
};

struct WarmupConfig {
  bool enabled = true;
  int total_iters = 500;   // across all three stages
  double ladder_base = 1e-5;
  double growth = 2.0;     // per rung
  int segment_iters = 15;  // iterations per rung
  double stall_rel = 0.05; // stall: EMA rises by more than this over a segment
  double shrink = 0.5;     // selected weight = last non-stalling rung * shrink
};

struct RunConfig {
  std::uint64_t seed = 1;
  int iterations = 1000;
  double learning_rate = 1e-3;
  ModelConfig model;
  std::optional<RegWeights> lambdas; // unset: warm-up selects the weights
  double epsilon_rel = 1e-3;
  BatchSpec batch;
  AdamConfig adam;
  PlateauConfig plateau;
  WarmupConfig warmup;
  int checkpoint_every = 0; // 0: max(1, iterations / 20)

  void validate(const Geometry& geom) const {
    detail::check(iterations >= 0, "config: iterations must be >= 0");
    detail::check(learning_rate > 0, "config: learning rate must be positive");
    detail::check(epsilon_rel > 0, "config: epsilon_rel must be positive");
    detail::check(int(model.modes_image.size()) == geom.dim() + 1,
                  "config: image modes must have time plus spatial entries");
    detail::check(int(model.modes_coils.size()) == geom.dim(),
                  "config: coil modes must match the spatial rank");
    batch.validate(geom);
    detail::check(batch.time.second >= 1, "config: need at least one discrete time draw");
    if (lambdas) lambdas->validate();
  }
};

struct TraceRow {
  int iter = 0;
  double data = 0, tv_x = 0, tv_t = 0, coil = 0, lr = 0;
};

struct ReconResult {
  ReconstructionModel model;
  std::vector<TraceRow> trace;
  RegWeights weights;   // used by the main loop
  int warmup_iters = 0;
  int skipped_steps = 0;
  bool warmup_all_stalled = false;
  int empty_frame_hits = 0;
  std::uint64_t image_evals = 0, sens_evals = 0;
};

/// Thrown when the objective goes non-finite; carries the trace so callers can
/// dump diagnostics.
struct NumericalFailure : std::runtime_error {
  NumericalFailure(const std::string& msg, std::vector<TraceRow> tr)
      : std::runtime_error(msg), trace(std::move(tr)) {}
  std::vector<TraceRow> trace;
};

using CheckpointFn = std::function<void(const ReconstructionModel&, int iter)>;

namespace detail {

struct LoopState {
  Adam adam;
  Rng rng;
  WeightSpec wspec;
  int iter = 0;
  explicit LoopState(const RunConfig& cfg, const KSpaceDataset& data)
      : adam(cfg.adam), rng(Rng(cfg.seed).fork(0xB47C)), wspec(relative_weight_spec(data, cfg.epsilon_rel)) {}
};

inline ObjectiveResult run_iteration(ReconstructionModel& model, const KSpaceDataset& data,
                                     const RunConfig& cfg, const RegWeights& weights,
                                     LoopState& st, double lr, std::vector<TraceRow>& trace,
                                     ReconResult& result) {
  Tape tape;
  Bindings bindings;
  ModelVars vars = bind_model(tape, model, bindings);
  DcBatch dc = draw_dc_batch(cfg.batch, model.geom, st.rng);
  SampleSet reg = draw_batch(cfg.batch, model.geom, st.rng);
  ObjectiveResult obj = total_objective(tape, model, vars, data, dc, reg, weights, st.wspec);
  result.empty_frame_hits += obj.empty_frames;

  ++st.iter;
  const double total = tape.scalar(obj.total);
  if (!std::isfinite(total))
    throw NumericalFailure("non-finite objective at iteration " + std::to_string(st.iter), trace);
  tape.backward(obj.total);
  st.adam.step(tape, bindings, lr);
  trace.push_back({st.iter, obj.data, obj.tv_x, obj.tv_t, obj.coil, lr});
  return obj;
}

/// Staged warm-up: enable one regularizer at a time, raise its weight on a
/// geometric ladder until the data-consistency EMA stalls, then keep a
/// slightly smaller value. Training continues on the same parameters.
inline RegWeights warmup_weights(ReconstructionModel& model, const KSpaceDataset& data,
                                 const RunConfig& cfg, LoopState& st,
                                 std::vector<TraceRow>& trace, ReconResult& result) {
  const WarmupConfig& wu = cfg.warmup;
  RegWeights selected;
  double* slot[3] = {&selected.tv_t, &selected.tv_x, &selected.coil};
  const int per_stage = wu.total_iters / 3;

  double ema = std::numeric_limits<double>::quiet_NaN();
  auto run_segment = [&](const RegWeights& w) {
    for (int k = 0; k < wu.segment_iters; ++k) {
      auto obj = run_iteration(model, data, cfg, w, st, cfg.learning_rate, trace, result);
      ema = std::isnan(ema) ? obj.data : 0.99 * ema + 0.01 * obj.data;
    }
  };

  for (int stage = 0; stage < 3; ++stage) {
    int left = per_stage;
    double rung = wu.ladder_base;
    double last_ok = -1.0;
    while (left >= wu.segment_iters) {
      *slot[stage] = rung; // selected carries the candidate during its segment
      const double ema_start = ema;
      run_segment(selected);
      left -= wu.segment_iters;
      const bool stalled = !std::isnan(ema_start) && ema > (1.0 + wu.stall_rel) * ema_start;
      if (stalled) break;
      last_ok = rung;
      rung *= wu.growth;
    }
    if (last_ok > 0) {
      *slot[stage] = last_ok * wu.shrink;
    } else {
      *slot[stage] = wu.ladder_base;
      if (per_stage >= wu.segment_iters) result.warmup_all_stalled = true;
    }
  }
  return selected;
}

} // namespace detail

/// Full reconstruction: build the model, optionally run the warm-up to pick
/// regularization weights, then the main Adam loop with plateau scheduling.
/// Deterministic under (dataset, config): every random draw comes from the
/// config seed.
inline ReconResult reconstruct(const KSpaceDataset& data, const RunConfig& cfg,
                               CheckpointFn on_checkpoint = nullptr) {
  data.validate();
  cfg.validate(data.geom);

  ModelConfig mc = cfg.model;
  mc.seed = Rng(cfg.seed).fork(0x5EED).next_u64();
  ReconResult result{make_model(data.geom, mc)};
  if (cfg.iterations == 0) return result;

  detail::LoopState st(cfg, data);

  if (cfg.lambdas) {
    result.weights = *cfg.lambdas;
  } else if (cfg.warmup.enabled) {
    result.weights = detail::warmup_weights(result.model, data, cfg, st, result.trace, result);
    result.warmup_iters = st.iter;
  }

  PlateauScheduler sched(cfg.plateau);
  double lr = cfg.learning_rate;
  const int cadence = (cfg.checkpoint_every > 0) ? cfg.checkpoint_every
                                                 : std::max(1, cfg.iterations / 20);
  for (int i = 1; i <= cfg.iterations; ++i) {
    auto obj = detail::run_iteration(result.model, data, cfg, result.weights, st, lr,
                                     result.trace, result);
    lr = sched.update(obj.data, lr);
    if (on_checkpoint && (i % cadence == 0 || i == cfg.iterations))
      on_checkpoint(result.model, st.iter);
  }
  result.skipped_steps = st.adam.skipped();
  result.image_evals = result.model.image.eval_count;
  result.sens_evals = result.model.sens.eval_count;
  return result;
}

} // namespace sepfield
