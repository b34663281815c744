#include <doctest.h>

#include <cmath>

#include "hgda/meta.hpp"
#include "hgda/synth.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace hgda;
using testutil::micro_model;
using testutil::micro_task;

TEST_CASE("scaled_lr is exact on the reference points") {
  CHECK(scaled_lr(1e-2, 32, 32) == 1e-2);
  CHECK(scaled_lr(1e-2, 8, 32) == 5e-3);
  CHECK(scaled_lr(1e-2, 32 * 4, 32) == 2e-2);
  CHECK_THROWS_AS(scaled_lr(1e-2, 0, 32), Error);
}

TEST_CASE("hardness: ratio arithmetic is exact") {
  std::vector<TaskLosses> batch(3);
  batch[0].lab = 2.0;
  batch[1].lab = 1.0;
  batch[2].lab = 1.0;
  for (auto& losses : batch) {
    losses.cls = 1.0;
    losses.total = losses.lab + losses.cls;
  }
  const HardnessScores scores = hardness(batch);
  CHECK(scores.gamma_phi == std::vector<double>{0.5, 0.25, 0.25});
  for (double g : scores.gamma_omega) CHECK(g == doctest::Approx(1.0 / 3));
}

TEST_CASE("hardness: equal losses give uniform scores") {
  std::vector<TaskLosses> batch(4);
  for (auto& losses : batch) {
    losses.lab = 0.7;
    losses.cls = 0.3;
    losses.total = 1.0;
  }
  const HardnessScores scores = hardness(batch);
  for (double g : scores.gamma_theta) CHECK(g == 0.25);
  for (double g : scores.gamma_phi) CHECK(g == 0.25);
  for (double g : scores.gamma_omega) CHECK(g == 0.25);
}

TEST_CASE("hardness: zero denominator falls back to uniform") {
  std::vector<TaskLosses> batch(4);
  for (auto& losses : batch) {
    losses.lab = 1.0;
    losses.cls = 0.0;  // all classification losses zero
    losses.total = 1.0;
  }
  const HardnessScores scores = hardness(batch);
  for (double g : scores.gamma_omega) CHECK(g == 0.25);
}

TEST_CASE("hardness: zero-loss task gets zero weight") {
  std::vector<TaskLosses> batch(2);
  batch[0].lab = 0.0;
  batch[1].lab = 3.0;
  batch[0].total = batch[0].lab;
  batch[1].total = batch[1].lab;
  const HardnessScores scores = hardness(batch);
  CHECK(scores.gamma_phi[0] == 0.0);
  CHECK(scores.gamma_phi[1] == 1.0);
}

TEST_CASE("hardness matches a direct reimplementation and sums to one") {
  SplitRng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.next_below(6);
    std::vector<TaskLosses> batch(m);
    double lab_sum = 0.0;
    double cls_sum = 0.0;
    double total_sum = 0.0;
    for (auto& losses : batch) {
      losses.lab = rng.next_double() * 3.0;
      losses.cls = rng.next_double() * 2.0;
      losses.total = losses.lab + losses.cls;
      lab_sum += losses.lab;
      cls_sum += losses.cls;
      total_sum += losses.total;
    }
    const HardnessScores scores = hardness(batch);
    double st = 0.0;
    double sp = 0.0;
    double so = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(std::abs(scores.gamma_theta[i] - batch[i].total / total_sum) < 1e-12);
      CHECK(std::abs(scores.gamma_phi[i] - batch[i].lab / lab_sum) < 1e-12);
      CHECK(std::abs(scores.gamma_omega[i] - batch[i].cls / cls_sum) < 1e-12);
      st += scores.gamma_theta[i];
      sp += scores.gamma_phi[i];
      so += scores.gamma_omega[i];
    }
    CHECK(std::abs(st - 1.0) < 1e-12);
    CHECK(std::abs(sp - 1.0) < 1e-12);
    CHECK(std::abs(so - 1.0) < 1e-12);
    // monotone: larger lab loss, larger gamma_phi
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (batch[i].lab > batch[j].lab) {
          CHECK(scores.gamma_phi[i] > scores.gamma_phi[j]);
        }
      }
    }
  }
}

TEST_CASE("hardness rejects negative losses") {
  std::vector<TaskLosses> batch(2);
  batch[0].lab = -0.5;
  batch[1].lab = 1.0;
  CHECK_THROWS_AS(hardness(batch), Error);
}

TEST_CASE("task_forward_backward gradients match finite differences end to end") {
  ModelParams model = micro_model(21, /*emb_dim=*/3, /*hidden=*/2);
  const EmbeddingTable table(3, UnkPolicy::zeros);
  const Task task = micro_task();
  const double lambda = 0.7;

  GradRequest want;
  want.theta = true;
  want.phi = true;
  want.omega = true;
  ModelGrads grads = zeros_like(model);
  SplitRng rng(0);
  task_forward_backward(model, table, task.support, /*domain_index=*/1, lambda,
                        /*dropout=*/0.0, rng, want, &grads);

  auto eval = [&]() {
    SplitRng inner(0);
    return task_forward_backward(model, table, task.support, 1, lambda, 0.0,
                                 inner, GradRequest{}, nullptr);
  };

  SUBCASE("theta sees lab + lambda * cls") {
    auto loss = [&]() {
      const TaskEval e = eval();
      return e.lab + lambda * e.cls;
    };
    const double err = oracle::max_gradient_error(
        loss,
        {&model.theta.embedding, &model.theta.fwd.w_in, &model.theta.fwd.w_rec,
         &model.theta.fwd.bias, &model.theta.bwd.w_in, &model.theta.bwd.w_rec,
         &model.theta.bwd.bias},
        {&grads.theta.embedding, &grads.theta.fwd.w_in, &grads.theta.fwd.w_rec,
         &grads.theta.fwd.bias, &grads.theta.bwd.w_in, &grads.theta.bwd.w_rec,
         &grads.theta.bwd.bias});
    CHECK(err < 1e-4);
  }

  SUBCASE("phi sees the labelling loss only") {
    auto loss = [&]() { return eval().lab; };
    const double err = oracle::max_gradient_error(
        loss,
        {&model.phi.emission_proj, &model.phi.transition,
         &model.phi.start_scores, &model.phi.end_scores},
        {&grads.phi.emission_proj, &grads.phi.transition,
         &grads.phi.start_scores, &grads.phi.end_scores});
    CHECK(err < 1e-4);
  }

  SUBCASE("omega sees the classification loss only") {
    auto loss = [&]() { return eval().cls; };
    const double err = oracle::max_gradient_error(
        loss, {&model.omega.weight, &model.omega.bias},
        {&grads.omega.weight, &grads.omega.bias});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("inner_adapt leaves the outer parameters bitwise unchanged") {
  const ModelParams model = micro_model(22);
  const ModelParams snapshot = model;
  const EmbeddingTable table(4, UnkPolicy::zeros);
  TrainConfig cfg;
  cfg.k = 2;
  cfg.dropout = 0.0;
  cfg.adaptation_steps = 3;
  inner_adapt(model, table, micro_task(), /*domain_class=*/0, cfg, SplitRng(5));
  CHECK(testutil::params_identical(model, snapshot));
}

TEST_CASE("beta=0 and adaptation_steps=0 both reduce to plain query gradients") {
  const ModelParams model = micro_model(23);
  const EmbeddingTable table(4, UnkPolicy::zeros);
  const Task task = micro_task();

  TrainConfig cfg;
  cfg.k = 2;
  cfg.dropout = 0.0;
  cfg.lambda = 1.0;

  // Direct query gradients at the original parameters.
  ModelGrads direct = zeros_like(model);
  GradRequest want;
  want.theta = true;
  want.phi = true;
  want.omega = true;
  SplitRng rng(0);
  const TaskEval direct_eval = task_forward_backward(
      model, table, task.query, 0, cfg.lambda, 0.0, rng, want, &direct);

  SUBCASE("beta=0") {
    // beta stays 0 and base_lr drops to 0, so resolved_beta() is exactly 0
    // and every inner step is the identity.
    cfg.adaptation_steps = 4;
    cfg.base_lr = 0.0;
    const TaskLosses losses = inner_adapt(model, table, task, 0, cfg, SplitRng(9));
    CHECK(losses.lab == direct_eval.lab);
    CHECK(losses.cls == direct_eval.cls);
    CHECK(testutil::grads_identical(losses.meta_grads, direct));
  }

  SUBCASE("adaptation_steps=0") {
    cfg.adaptation_steps = 0;
    const TaskLosses losses = inner_adapt(model, table, task, 0, cfg, SplitRng(9));
    CHECK(losses.lab == direct_eval.lab);
    CHECK(losses.cls == direct_eval.cls);
    CHECK(testutil::grads_identical(losses.meta_grads, direct));
  }
}

TEST_CASE("inner_adapt matches a reimplementation of the update rule") {
  const ModelParams model = micro_model(24);
  const EmbeddingTable table(4, UnkPolicy::zeros);
  const Task task = micro_task();

  TrainConfig cfg;
  cfg.k = 2;
  cfg.dropout = 0.0;
  cfg.adaptation_steps = 3;
  cfg.beta = 0.05;

  for (double lambda : {1.0, 0.5, 0.0}) {
    cfg.lambda = lambda;
    const TaskLosses reported =
        inner_adapt(model, table, task, 0, cfg, SplitRng(1));

    // Manual clone-and-step replica.
    ModelParams adapted = model;
    for (std::size_t step = 0; step < cfg.adaptation_steps; ++step) {
      ModelGrads grads = zeros_like(adapted);
      GradRequest want;
      want.theta = true;
      want.phi = true;
      want.omega = lambda != 0.0;
      SplitRng rng(0);
      task_forward_backward(adapted, table, task.support, 0, lambda, 0.0, rng,
                            want, &grads);
      add_scaled(adapted.theta, grads.theta, -cfg.beta);
      add_scaled(adapted.phi, grads.phi, -cfg.beta);
      if (lambda != 0.0) {
        add_scaled(adapted.omega, grads.omega, -cfg.beta * lambda);
      }
    }
    SplitRng rng(0);
    const TaskEval manual = task_forward_backward(
        adapted, table, task.query, 0, lambda, 0.0, rng, GradRequest{}, nullptr);
    CHECK(reported.lab == manual.lab);
    CHECK(reported.cls == manual.cls);
    CHECK(reported.total == manual.lab + lambda * manual.cls);
  }
}

TEST_CASE("inner_adapt descends on a separable task") {
  const ModelParams model = micro_model(25);
  const EmbeddingTable table(4, UnkPolicy::zeros);
  const Task task = micro_task();

  TrainConfig cfg;
  cfg.k = 2;
  cfg.dropout = 0.0;
  cfg.lambda = 0.0;
  cfg.beta = 0.01;

  cfg.adaptation_steps = 0;
  const double before =
      inner_adapt(model, table, task, -1, cfg, SplitRng(2), false).lab;
  cfg.adaptation_steps = 50;
  const double after =
      inner_adapt(model, table, task, -1, cfg, SplitRng(2), false).lab;
  CHECK(after < before);
}

TEST_CASE("outer_step: aggregation, clipping, and the update rule") {
  ModelParams model = micro_model(26);
  const EmbeddingTable table(4, UnkPolicy::zeros);
  TrainConfig cfg;
  cfg.k = 2;
  cfg.alpha = 0.1;
  cfg.max_outer_iters = 10;

  // Build a 2-task batch with synthetic gradients.
  std::vector<TaskLosses> batch(2);
  SplitRng rng(3);
  for (auto& losses : batch) {
    losses.meta_grads = zeros_like(model);
    visit_model_tensors(losses.meta_grads, [&](const std::string&, Matrix& t) {
      for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = rng.next_uniform(-2.0, 2.0);
      }
    });
    losses.lab = 1.0;
    losses.cls = 1.0;
    losses.total = 2.0;
  }

  SUBCASE("post-clip norm obeys the bound") {
    // Inflate gradients far beyond the clip threshold.
    for (auto& losses : batch) {
      scale(losses.meta_grads, 100.0);
    }
    SgdState state;
    const OuterStepInfo info =
        outer_step(model, batch, uniform_scores(2), cfg, state, 0);
    CHECK(info.grad_norm > cfg.grad_clip);
    CHECK(info.clipped_grad_norm <= cfg.grad_clip + 1e-9);
  }

  SUBCASE("m=1 reduces to the unweighted update") {
    std::vector<TaskLosses> single;
    single.push_back(batch[0]);
    const HardnessScores scores = hardness(single);
    CHECK(scores.gamma_theta == std::vector<double>{1.0});
    CHECK(scores.gamma_phi == std::vector<double>{1.0});
    CHECK(scores.gamma_omega == std::vector<double>{1.0});

    ModelParams manual = model;
    {
      // Reimplementation: clip, then v = mu v + (g + wd p), p -= lr v.
      ModelGrads g = single[0].meta_grads;
      const double norm = std::sqrt(squared_norm(g));
      if (norm > cfg.grad_clip) scale(g, cfg.grad_clip / norm);
      std::vector<Matrix*> ps;
      std::vector<const Matrix*> gs;
      visit_model_tensors(manual, [&](const std::string&, Matrix& t) {
        ps.push_back(&t);
      });
      visit_model_tensors(
          static_cast<const ModelGrads&>(g),
          [&](const std::string&, const Matrix& t) { gs.push_back(&t); });
      const double lr = cfg.alpha;  // iteration 0: no decay yet
      for (std::size_t i = 0; i < ps.size(); ++i) {
        for (std::size_t k = 0; k < ps[i]->size(); ++k) {
          const double d = (*gs[i])[k] + cfg.weight_decay * (*ps[i])[k];
          (*ps[i])[k] -= lr * d;  // velocity starts at zero
        }
      }
    }
    SgdState state;
    outer_step(model, single, scores, cfg, state, 0);
    CHECK(testutil::params_identical(model, manual));
  }

  SUBCASE("doubling every loss leaves the scores unchanged") {
    const HardnessScores before = hardness(batch);
    auto doubled = batch;
    for (auto& losses : doubled) {
      losses.lab *= 2.0;
      losses.cls *= 2.0;
      losses.total *= 2.0;
    }
    const HardnessScores after = hardness(doubled);
    CHECK(before.gamma_theta == after.gamma_theta);
    CHECK(before.gamma_phi == after.gamma_phi);
    CHECK(before.gamma_omega == after.gamma_omega);
  }

  SUBCASE("zero gradients: only weight decay moves the parameters") {
    for (auto& losses : batch) {
      visit_model_tensors(losses.meta_grads,
                          [](const std::string&, Matrix& t) { t.set_zero(); });
    }
    ModelParams before = model;
    SgdState state;
    outer_step(model, batch, uniform_scores(2), cfg, state, 0);
    std::vector<const Matrix*> old_tensors;
    std::vector<const Matrix*> new_tensors;
    visit_model_tensors(
        static_cast<const ModelParams&>(before),
        [&](const std::string&, const Matrix& t) { old_tensors.push_back(&t); });
    visit_model_tensors(
        static_cast<const ModelParams&>(model),
        [&](const std::string&, const Matrix& t) { new_tensors.push_back(&t); });
    for (std::size_t i = 0; i < old_tensors.size(); ++i) {
      for (std::size_t k = 0; k < old_tensors[i]->size(); ++k) {
        const double expected = (*old_tensors[i])[k] *
                                (1.0 - cfg.alpha * cfg.weight_decay);
        CHECK((*new_tensors[i])[k] == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("train: zero iterations returns the initial parameters unchanged") {
  const SynthConfig synth_cfg = [] {
    SynthConfig c;
    c.num_domains = 3;
    c.densities = {0.8, 0.5, 0.8};
    c.train_per_domain = 40;
    c.dev_per_domain = 16;
    c.test_per_domain = 8;
    c.seed = 9;
    return c;
  }();
  const SynthResult synth = generate_synthetic(synth_cfg);
  const TaskPool train_pool =
      build_task_pool(synth.corpora, synth.registry, Split::train);
  const TaskPool dev_pool =
      build_task_pool(synth.corpora, synth.registry, Split::dev);

  std::vector<const Corpus*> source;
  for (const auto& corpus : synth.corpora) {
    if (synth.registry.domains[corpus.domain_id] != "target" &&
        corpus.split != Split::test) {
      source.push_back(&corpus);
    }
  }
  std::set<std::string> types;
  for (const auto* corpus : source) {
    types.insert(corpus->entity_types.begin(), corpus->entity_types.end());
  }
  EncoderConfig enc;
  enc.emb_dim = 6;
  enc.hidden = 6;
  std::vector<std::string> domain_names;
  for (const auto& domain : train_pool.domains) domain_names.push_back(domain.name);
  const EmbeddingTable table(6, UnkPolicy::zeros);
  ModelParams model =
      init_model(enc, build_vocab(source), CharVocab{},
                 TagVocab::for_entity_types(types), domain_names, table, 33);

  TrainConfig cfg;
  cfg.k = 3;
  cfg.task_batch = 2;
  cfg.dropout = 0.0;
  cfg.max_outer_iters = 0;
  cfg.dev_episode_count = 2;

  TrainContext ctx;
  ctx.train_pool = &train_pool;
  ctx.dev_pool = &dev_pool;
  ctx.table = &table;

  const ModelParams snapshot = model;
  const TrainResult result = train(ctx, model, cfg, SamplerConfig{.k = 3}, 1);
  CHECK(result.iterations == 0);
  CHECK(result.log.empty());
  CHECK(testutil::params_identical(result.params, snapshot));

  SUBCASE("two seeded runs produce identical logs and parameters") {
    TrainConfig run_cfg = cfg;
    run_cfg.max_outer_iters = 6;
    run_cfg.dev_episode_count = 3;
    const TrainResult a = train(ctx, snapshot, run_cfg, SamplerConfig{.k = 3}, 7);
    const TrainResult b = train(ctx, snapshot, run_cfg, SamplerConfig{.k = 3}, 7);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].task_lab == b.log[i].task_lab);
      CHECK(a.log[i].task_cls == b.log[i].task_cls);
      CHECK(a.log[i].gammas.gamma_theta == b.log[i].gammas.gamma_theta);
      CHECK(a.log[i].dev_lab == b.log[i].dev_lab);
      CHECK(a.log[i].grad_norm == b.log[i].grad_norm);
    }
    CHECK(testutil::params_identical(a.params, b.params));
  }

  SUBCASE("interrupted run resumed from its state retraces the full run") {
    TrainConfig run_cfg = cfg;
    run_cfg.max_outer_iters = 10;
    run_cfg.dev_episode_count = 3;

    const TrainResult full = train(ctx, snapshot, run_cfg, SamplerConfig{.k = 3}, 7);

    TrainConfig interrupted_cfg = run_cfg;
    interrupted_cfg.stop_after_iterations = 4;
    const TrainResult interrupted =
        train(ctx, snapshot, interrupted_cfg, SamplerConfig{.k = 3}, 7);
    CHECK(interrupted.iterations == 4);

    ResumeState resume;
    resume.optimizer = interrupted.optimizer;
    resume.start_iteration = interrupted.iterations;
    resume.best_dev_lab = interrupted.best_dev_lab;
    resume.patience_left = interrupted.log.back().patience_left;
    const TrainResult resumed = train(ctx, interrupted.params, run_cfg,
                                      SamplerConfig{.k = 3}, 7, {}, &resume);

    CHECK(testutil::params_identical(resumed.params, full.params));
    REQUIRE(interrupted.log.size() + resumed.log.size() == full.log.size());
    for (std::size_t i = 0; i < resumed.log.size(); ++i) {
      const auto& a = resumed.log[i];
      const auto& b = full.log[4 + i];
      CHECK(a.iteration == b.iteration);
      CHECK(a.task_lab == b.task_lab);
      CHECK(a.dev_lab == b.dev_lab);
      CHECK(a.lr == b.lr);
    }
  }

  SUBCASE("worker count does not change the result") {
    TrainConfig run_cfg = cfg;
    run_cfg.max_outer_iters = 4;
    run_cfg.dev_episode_count = 3;
    TrainContext serial = ctx;
    serial.workers = 1;
    TrainContext threaded = ctx;
    threaded.workers = 2;
    const TrainResult a = train(serial, snapshot, run_cfg, SamplerConfig{.k = 3}, 7);
    const TrainResult b = train(threaded, snapshot, run_cfg, SamplerConfig{.k = 3}, 7);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].task_lab == b.log[i].task_lab);
      CHECK(a.log[i].dev_lab == b.log[i].dev_lab);
    }
    CHECK(testutil::params_identical(a.params, b.params));
  }
}
