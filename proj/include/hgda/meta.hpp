#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hgda/model.hpp"
#include "hgda/sampler.hpp"

namespace hgda {

enum class WeightMode { hardness, uniform };

// Learning-rate transfer rule: base_lr * sqrt(K / base_batch).
double scaled_lr(double base_lr, std::size_t k, std::size_t base_batch);

struct TrainConfig {
  double base_lr = 1e-2;
  std::size_t base_batch = 32;
  double alpha = 0.0;   // outer LR; 0 means derive via scaled_lr
  double beta = 0.0;    // inner LR; 0 means derive via scaled_lr
  double lambda = 1.0;  // trade-off between labelling and domain losses
  std::size_t k = 5;
  std::size_t task_batch = 4;  // m
  std::size_t adaptation_steps = 2;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  double grad_clip = 5.0;
  double dropout = 0.2;
  std::size_t max_outer_iters = 300;
  std::size_t patience = 20;
  std::size_t dev_episode_count = 16;
  WeightMode weight_mode = WeightMode::hardness;
  // Interrupt the loop after this many total iterations (0 = run to the
  // cap). The LR schedule still spans max_outer_iters, so an interrupted
  // run resumed from its checkpoint retraces the uninterrupted trajectory.
  std::size_t stop_after_iterations = 0;

  double resolved_alpha() const {
    return alpha > 0.0 ? alpha : scaled_lr(base_lr, k, base_batch);
  }
  double resolved_beta() const {
    return beta > 0.0 ? beta : scaled_lr(base_lr, k, base_batch);
  }
  void validate() const;
};

// Query-set losses and first-order meta-gradients of one adapted task.
struct TaskLosses {
  double lab = 0.0;
  double cls = 0.0;
  double total = 0.0;  // lab + lambda * cls
  ModelGrads meta_grads;
};

struct HardnessScores {
  std::vector<double> gamma_theta;
  std::vector<double> gamma_phi;
  std::vector<double> gamma_omega;
};

// Clones the parameters, takes `adaptation_steps` inner gradient steps on the
// support set (theta by the combined loss, phi by the labelling loss, omega
// by lambda-weighted classification loss), then evaluates losses and
// meta-gradients on the query set. The original parameters are untouched.
// domain_class is the classifier column of the task's domain; pass -1 to
// skip the classifier branch.
TaskLosses inner_adapt(const ModelParams& params, const EmbeddingTable& table,
                       const Task& task, int domain_class,
                       const TrainConfig& cfg, SplitRng rng,
                       bool want_meta_grads = true);

// Per-task weights: each task's share of the batch total, separately for the
// combined, labelling, and classification losses. A zero denominator falls
// back to uniform 1/m.
HardnessScores hardness(const std::vector<TaskLosses>& batch);

HardnessScores uniform_scores(std::size_t m);

struct SgdState {
  ModelGrads velocity;
  bool initialized = false;
};

struct OuterStepInfo {
  double grad_norm = 0.0;          // aggregated meta-gradient, pre-clip
  double clipped_grad_norm = 0.0;  // post-clip, <= grad_clip
  double lr = 0.0;
};

// Hardness-weighted aggregation, global-norm clip, then SGD with momentum
// and weight decay under a linear LR decay over max_outer_iters.
OuterStepInfo outer_step(ModelParams& params,
                         const std::vector<TaskLosses>& batch,
                         const HardnessScores& scores, const TrainConfig& cfg,
                         SgdState& state, std::size_t iteration);

struct IterationRecord {
  std::size_t iteration = 0;
  double lr = 0.0;
  std::vector<std::string> task_domains;
  std::vector<double> task_lab;
  std::vector<double> task_cls;
  HardnessScores gammas;
  double grad_norm = 0.0;
  double clipped_grad_norm = 0.0;
  double dev_lab = 0.0;
  double best_dev_lab = 0.0;
  std::size_t patience_left = 0;
};

struct TrainContext {
  const TaskPool* train_pool = nullptr;
  const TaskPool* dev_pool = nullptr;  // falls back to train_pool when null
  const EmbeddingTable* table = nullptr;
  std::size_t workers = 1;
};

struct TrainResult {
  ModelParams params;
  SgdState optimizer;
  std::size_t iterations = 0;
  bool early_stopped = false;
  double best_dev_lab = 0.0;
  std::vector<IterationRecord> log;
};

struct ResumeState {
  SgdState optimizer;
  std::size_t start_iteration = 0;
  double best_dev_lab = 0.0;
  std::size_t patience_left = 0;
};

// Alg-1-style outer loop: sample m tasks, adapt each (in parallel when
// workers > 1; results are ordered by task index so the outcome is identical
// to sequential execution), weight their meta-gradients, step, and early-stop
// on a fixed set of held-out dev episodes.
TrainResult train(const TrainContext& ctx, ModelParams initial,
                  const TrainConfig& cfg, const SamplerConfig& sampler_cfg,
                  uint64_t seed,
                  const std::function<void(const IterationRecord&)>& on_iteration = {},
                  const ResumeState* resume = nullptr);

// Dev-episode objective: adaptation then query labelling loss, dropout off,
// no meta-gradients.
double episode_query_loss(const ModelParams& params, const EmbeddingTable& table,
                          const Task& task, int domain_class,
                          const TrainConfig& cfg);

}  // namespace hgda
