#include "hgda/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hgda/parallel.hpp"

namespace hgda {

namespace {

constexpr uint64_t kSampleStream = 0x5a3c;
constexpr uint64_t kTaskStream = 0x7a51;
constexpr uint64_t kDevStream = 0xd301;

int classifier_column(const ModelParams& params, const TaskPool& pool,
                      int domain_id) {
  for (const auto& domain : pool.domains) {
    if (domain.domain_id == domain_id) {
      for (std::size_t i = 0; i < params.domain_names.size(); ++i) {
        if (params.domain_names[i] == domain.name) return static_cast<int>(i);
      }
    }
  }
  return -1;
}

}  // namespace

double scaled_lr(double base_lr, std::size_t k, std::size_t base_batch) {
  if (k == 0 || base_batch == 0) {
    raise(ErrorCode::invalid_config, "scaled_lr requires K, base_batch >= 1");
  }
  return base_lr * std::sqrt(static_cast<double>(k) /
                             static_cast<double>(base_batch));
}

void TrainConfig::validate() const {
  if (resolved_alpha() <= 0.0 || resolved_beta() <= 0.0) {
    raise(ErrorCode::invalid_config, "learning rates must be positive");
  }
  if (lambda < 0.0) raise(ErrorCode::invalid_config, "lambda must be >= 0");
  if (grad_clip <= 0.0) raise(ErrorCode::invalid_config, "grad_clip must be > 0");
  if (dropout < 0.0 || dropout >= 1.0) {
    raise(ErrorCode::invalid_config, "dropout must lie in [0, 1)");
  }
  if (k == 0) raise(ErrorCode::invalid_config, "K must be >= 1");
  if (task_batch == 0) raise(ErrorCode::invalid_batch_size, "m must be >= 1");
}

TaskLosses inner_adapt(const ModelParams& params, const EmbeddingTable& table,
                       const Task& task, int domain_class,
                       const TrainConfig& cfg, SplitRng rng,
                       bool want_meta_grads) {
  const double beta = cfg.resolved_beta();
  ModelParams adapted = params;

  GradRequest inner_want;
  inner_want.theta = true;
  inner_want.phi = true;
  inner_want.omega = domain_class >= 0 && cfg.lambda != 0.0;

  for (std::size_t step = 0; step < cfg.adaptation_steps; ++step) {
    ModelGrads grads = zeros_like(adapted);
    const TaskEval eval = task_forward_backward(
        adapted, table, task.support, domain_class, cfg.lambda, cfg.dropout,
        rng, inner_want, &grads);
    if (!std::isfinite(eval.lab) || !std::isfinite(eval.cls)) {
      raise(ErrorCode::non_finite_loss,
            "inner step " + std::to_string(step) + " on task " + task.describe());
    }
    // theta_i <- theta_i - beta * d(lab + lambda*cls); phi_i by the labelling
    // loss; omega_i by the lambda-weighted classification loss.
    add_scaled(adapted.theta, grads.theta, -beta);
    add_scaled(adapted.phi, grads.phi, -beta);
    if (inner_want.omega) {
      add_scaled(adapted.omega, grads.omega, -beta * cfg.lambda);
    }
  }

  TaskLosses losses;
  GradRequest query_want;
  query_want.theta = want_meta_grads;
  query_want.phi = want_meta_grads;
  query_want.omega = want_meta_grads && domain_class >= 0;
  if (want_meta_grads) losses.meta_grads = zeros_like(adapted);
  const TaskEval eval = task_forward_backward(
      adapted, table, task.query, domain_class, cfg.lambda, cfg.dropout, rng,
      query_want, want_meta_grads ? &losses.meta_grads : nullptr);
  if (!std::isfinite(eval.lab) || !std::isfinite(eval.cls)) {
    raise(ErrorCode::non_finite_loss, "query pass on task " + task.describe());
  }
  losses.lab = eval.lab;
  losses.cls = eval.cls;
  losses.total = eval.lab + cfg.lambda * eval.cls;
  return losses;
}

namespace {

std::vector<double> ratio_scores(const std::vector<double>& losses) {
  const std::size_t m = losses.size();
  double sum = 0.0;
  for (double value : losses) {
    if (value < -1e-9) {
      raise(ErrorCode::negative_loss, std::to_string(value));
    }
    sum += std::max(value, 0.0);
  }
  std::vector<double> scores(m);
  if (sum <= 0.0) {
    std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(m));
    return scores;
  }
  for (std::size_t i = 0; i < m; ++i) {
    scores[i] = std::max(losses[i], 0.0) / sum;
  }
  return scores;
}

}  // namespace

HardnessScores hardness(const std::vector<TaskLosses>& batch) {
  if (batch.empty()) {
    raise(ErrorCode::invalid_batch_size, "empty task batch");
  }
  std::vector<double> total(batch.size());
  std::vector<double> lab(batch.size());
  std::vector<double> cls(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total[i] = batch[i].total;
    lab[i] = batch[i].lab;
    cls[i] = batch[i].cls;
  }
  HardnessScores scores;
  scores.gamma_theta = ratio_scores(total);
  scores.gamma_phi = ratio_scores(lab);
  scores.gamma_omega = ratio_scores(cls);
  return scores;
}

HardnessScores uniform_scores(std::size_t m) {
  if (m == 0) raise(ErrorCode::invalid_batch_size, "m must be >= 1");
  HardnessScores scores;
  scores.gamma_theta.assign(m, 1.0 / static_cast<double>(m));
  scores.gamma_phi = scores.gamma_theta;
  scores.gamma_omega = scores.gamma_theta;
  return scores;
}

OuterStepInfo outer_step(ModelParams& params,
                         const std::vector<TaskLosses>& batch,
                         const HardnessScores& scores, const TrainConfig& cfg,
                         SgdState& state, std::size_t iteration) {
  const std::size_t m = batch.size();
  if (m == 0 || scores.gamma_theta.size() != m ||
      scores.gamma_phi.size() != m || scores.gamma_omega.size() != m) {
    raise(ErrorCode::invalid_batch_size, "batch/scores length mismatch");
  }

  ModelGrads aggregate = zeros_like(params);
  for (std::size_t i = 0; i < m; ++i) {
    const ModelGrads& g = batch[i].meta_grads;
    add_scaled(aggregate.theta, g.theta, scores.gamma_theta[i]);
    add_scaled(aggregate.phi, g.phi, scores.gamma_phi[i]);
    add_scaled(aggregate.omega, g.omega, scores.gamma_omega[i]);
  }

  if (!all_finite(aggregate)) {
    raise(ErrorCode::non_finite_gradient,
          "aggregated meta-gradient at iteration " + std::to_string(iteration));
  }

  OuterStepInfo info;
  info.grad_norm = std::sqrt(squared_norm(aggregate));
  if (info.grad_norm > cfg.grad_clip) {
    scale(aggregate, cfg.grad_clip / info.grad_norm);
  }
  info.clipped_grad_norm = std::sqrt(squared_norm(aggregate));

  // Linear decay from the scaled rate to 0 over max_outer_iters.
  const double alpha0 = cfg.resolved_alpha();
  const double frac =
      cfg.max_outer_iters == 0
          ? 0.0
          : static_cast<double>(iteration) / static_cast<double>(cfg.max_outer_iters);
  info.lr = alpha0 * (1.0 - frac);

  if (!state.initialized) {
    state.velocity = zeros_like(params);
    state.initialized = true;
  }

  // SGD with momentum and coupled weight decay per tensor.
  std::vector<Matrix*> p_list;
  std::vector<Matrix*> g_list;
  std::vector<Matrix*> v_list;
  visit_model_tensors(params, [&p_list](const std::string&, Matrix& t) {
    p_list.push_back(&t);
  });
  visit_model_tensors(aggregate, [&g_list](const std::string&, Matrix& t) {
    g_list.push_back(&t);
  });
  visit_model_tensors(state.velocity, [&v_list](const std::string&, Matrix& t) {
    v_list.push_back(&t);
  });
  for (std::size_t j = 0; j < p_list.size(); ++j) {
    Matrix& p = *p_list[j];
    Matrix& g = *g_list[j];
    Matrix& v = *v_list[j];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = g[k] + cfg.weight_decay * p[k];
      v[k] = cfg.momentum * v[k] + d;
      p[k] -= info.lr * v[k];
    }
  }
  return info;
}

double episode_query_loss(const ModelParams& params, const EmbeddingTable& table,
                          const Task& task, int domain_class,
                          const TrainConfig& cfg) {
  TrainConfig eval_cfg = cfg;
  eval_cfg.dropout = 0.0;
  SplitRng unused(0);
  const TaskLosses losses = inner_adapt(params, table, task, domain_class,
                                        eval_cfg, unused,
                                        /*want_meta_grads=*/false);
  return losses.lab;
}

TrainResult train(const TrainContext& ctx, ModelParams initial,
                  const TrainConfig& cfg, const SamplerConfig& sampler_cfg,
                  uint64_t seed,
                  const std::function<void(const IterationRecord&)>& on_iteration,
                  const ResumeState* resume) {
  cfg.validate();
  if (ctx.train_pool == nullptr || ctx.table == nullptr) {
    raise(ErrorCode::invalid_config, "train context is incomplete");
  }
  const TaskPool& train_pool = *ctx.train_pool;
  const TaskPool& dev_pool =
      ctx.dev_pool != nullptr && !ctx.dev_pool->empty() ? *ctx.dev_pool
                                                        : train_pool;
  if (train_pool.domains.size() < 2) {
    raise(ErrorCode::invalid_config,
          "meta-training needs at least 2 source domains");
  }

  TrainResult result;
  result.params = std::move(initial);

  // Fixed dev episodes; the early-stopping signal is comparable across
  // iterations because the episodes never change.
  std::vector<Task> dev_tasks;
  std::vector<int> dev_classes;
  {
    const SplitRng dev_root(seed, kDevStream);
    for (std::size_t e = 0; e < cfg.dev_episode_count; ++e) {
      SplitRng rng = dev_root.split(e);
      dev_tasks.push_back(sample_task(dev_pool, sampler_cfg, rng));
      dev_classes.push_back(
          classifier_column(result.params, dev_pool, dev_tasks.back().domain_id));
    }
  }

  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t patience_left = cfg.patience;
  std::size_t start_iter = 0;
  if (resume != nullptr) {
    result.optimizer = resume->optimizer;
    best_dev = resume->best_dev_lab;
    patience_left = resume->patience_left;
    start_iter = resume->start_iteration;
  }
  result.iterations = start_iter;
  result.best_dev_lab = best_dev;

  for (std::size_t iter = start_iter; iter < cfg.max_outer_iters; ++iter) {
    if (cfg.stop_after_iterations > 0 && iter >= cfg.stop_after_iterations) {
      break;
    }
    const SplitRng sample_root = SplitRng(seed, kSampleStream).split(iter);
    const std::vector<Task> tasks =
        sample_batch(train_pool, sampler_cfg, cfg.task_batch, sample_root);

    std::vector<TaskLosses> batch(tasks.size());
    const SplitRng task_root = SplitRng(seed, kTaskStream).split(iter);
    parallel_for(tasks.size(), ctx.workers, [&](std::size_t i) {
      const int cls =
          classifier_column(result.params, train_pool, tasks[i].domain_id);
      batch[i] = inner_adapt(result.params, *ctx.table, tasks[i], cls, cfg,
                             task_root.split(i));
    });

    const HardnessScores scores = cfg.weight_mode == WeightMode::hardness
                                      ? hardness(batch)
                                      : uniform_scores(batch.size());
    const OuterStepInfo info =
        outer_step(result.params, batch, scores, cfg, result.optimizer, iter);

    double dev_sum = 0.0;
    std::vector<double> dev_losses(dev_tasks.size());
    parallel_for(dev_tasks.size(), ctx.workers, [&](std::size_t e) {
      dev_losses[e] = episode_query_loss(result.params, *ctx.table,
                                         dev_tasks[e], dev_classes[e], cfg);
    });
    for (double value : dev_losses) dev_sum += value;
    const double dev_lab =
        dev_tasks.empty() ? 0.0 : dev_sum / static_cast<double>(dev_tasks.size());

    if (dev_lab < best_dev) {
      best_dev = dev_lab;
      patience_left = cfg.patience;
    } else if (patience_left > 0) {
      --patience_left;
    }

    IterationRecord record;
    record.iteration = iter;
    record.lr = info.lr;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& domain_pools = train_pool.domains;
      std::string name;
      for (const auto& domain : domain_pools) {
        if (domain.domain_id == tasks[i].domain_id) name = domain.name;
      }
      record.task_domains.push_back(name);
      record.task_lab.push_back(batch[i].lab);
      record.task_cls.push_back(batch[i].cls);
    }
    record.gammas = scores;
    record.grad_norm = info.grad_norm;
    record.clipped_grad_norm = info.clipped_grad_norm;
    record.dev_lab = dev_lab;
    record.best_dev_lab = best_dev;
    record.patience_left = patience_left;
    if (on_iteration) on_iteration(record);
    result.log.push_back(std::move(record));
    result.iterations = iter + 1;

    if (patience_left == 0) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_dev_lab = best_dev;
  return result;
}

}  // namespace hgda
