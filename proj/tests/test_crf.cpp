#include <doctest.h>

#include <cmath>

#include "hgda/corpus.hpp"
#include "hgda/crf.hpp"
#include "hgda/rng.hpp"
#include "oracles.hpp"

using namespace hgda;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, SplitRng& rng,
                     double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k] = rng.next_uniform(-scale, scale);
  }
  return m;
}

CrfParams random_crf(std::size_t num_tags, SplitRng& rng, double scale = 1.0) {
  CrfParams params;
  params.emission_proj = Matrix(0, num_tags);  // unused in these tests
  params.transition = random_matrix(num_tags, num_tags, rng, scale);
  params.start_scores = random_matrix(1, num_tags, rng, scale);
  params.end_scores = random_matrix(1, num_tags, rng, scale);
  return params;
}

CrfParams zero_crf(std::size_t num_tags) {
  CrfParams params;
  params.emission_proj = Matrix(0, num_tags);
  params.transition = Matrix(num_tags, num_tags);
  params.start_scores = Matrix::row(num_tags);
  params.end_scores = Matrix::row(num_tags);
  return params;
}

}  // namespace

TEST_CASE("log_partition: L=1 T=2 all-zero scores gives log 2") {
  const CrfParams params = zero_crf(2);
  const Matrix emissions(1, 2);
  CHECK(log_partition(emissions, params) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("log_partition matches exhaustive enumeration") {
  SplitRng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t length = 1 + rng.next_below(3);
    const std::size_t num_tags = 2 + rng.next_below(2);
    CrfParams params = random_crf(num_tags, rng);
    const Matrix emissions = random_matrix(length, num_tags, rng, 2.0);
    const auto enumerated = oracle::enumerate_paths(emissions, params);
    CHECK(log_partition(emissions, params) ==
          doctest::Approx(enumerated.log_partition).epsilon(1e-10));
  }
}

TEST_CASE("log_partition shift identity: +c at one position adds c") {
  SplitRng rng(42);
  CrfParams params = random_crf(3, rng);
  Matrix emissions = random_matrix(2, 3, rng);
  const double base = log_partition(emissions, params);
  const double c = 0.73;
  for (std::size_t y = 0; y < 3; ++y) emissions.at(1, y) += c;
  CHECK(log_partition(emissions, params) == doctest::Approx(base + c).epsilon(1e-12));
}

TEST_CASE("log_partition stays finite at emission magnitude 1e4") {
  SplitRng rng(43);
  CrfParams params = random_crf(3, rng);
  const Matrix emissions = random_matrix(4, 3, rng, 1e4);
  CHECK(std::isfinite(log_partition(emissions, params)));
}

TEST_CASE("nll: uniform zero scores, L=1 T=2 gives log 2") {
  const CrfParams params = zero_crf(2);
  const Matrix emissions(1, 2);
  CHECK(nll(emissions, {0}, params) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("nll approaches zero when the gold path dominates") {
  const std::size_t num_tags = 3;
  CrfParams params = zero_crf(num_tags);
  Matrix emissions(4, num_tags);
  const std::vector<int> gold = {1, 0, 2, 1};
  for (std::size_t t = 0; t < 4; ++t) emissions.at(t, gold[t]) = 50.0;
  const double loss = nll(emissions, gold, params);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-8);
}

TEST_CASE("nll matches -log of the enumerated path probability") {
  SplitRng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t length = 3;
    const std::size_t num_tags = 3;
    CrfParams params = random_crf(num_tags, rng);
    const Matrix emissions = random_matrix(length, num_tags, rng, 2.0);
    std::vector<int> gold(length);
    for (auto& g : gold) g = static_cast<int>(rng.next_below(num_tags));
    const auto enumerated = oracle::enumerate_paths(emissions, params);
    const double gold_score = gold_path_score(emissions, gold, params);
    CHECK(nll(emissions, gold, params) ==
          doctest::Approx(enumerated.log_partition - gold_score).epsilon(1e-10));
    // exp(gold - logZ) is a probability
    const double p = std::exp(-nll(emissions, gold, params));
    CHECK(p > 0.0);
    CHECK(p <= 1.0 + 1e-12);
  }
}

TEST_CASE("path probabilities sum to one on enumerable instances") {
  SplitRng rng(45);
  CrfParams params = random_crf(3, rng);
  const Matrix emissions = random_matrix(3, 3, rng, 2.0);
  const double log_z = log_partition(emissions, params);
  double total = 0.0;
  std::vector<int> path(3, 0);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        const std::vector<int> p = {a, b, c};
        total += std::exp(gold_path_score(emissions, p, params) - log_z);
      }
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("nll_backward: per-position emission gradients sum to zero") {
  SplitRng rng(46);
  CrfParams params = random_crf(4, rng);
  const Matrix emissions = random_matrix(3, 4, rng);
  NllCache cache;
  nll(emissions, {0, 2, 1}, params, &cache);
  const CrfBackward grads = nll_backward(cache, params);
  for (std::size_t t = 0; t < 3; ++t) {
    double row_sum = 0.0;
    for (std::size_t y = 0; y < 4; ++y) row_sum += grads.d_emissions.at(t, y);
    CHECK(row_sum == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("nll_backward matches central finite differences") {
  SplitRng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t length = 1 + rng.next_below(3);
    const std::size_t num_tags = 2 + rng.next_below(2);
    CrfParams params = random_crf(num_tags, rng);
    Matrix emissions = random_matrix(length, num_tags, rng);
    std::vector<int> gold(length);
    for (auto& g : gold) g = static_cast<int>(rng.next_below(num_tags));

    NllCache cache;
    nll(emissions, gold, params, &cache);
    const CrfBackward grads = nll_backward(cache, params);

    auto loss = [&]() { return nll(emissions, gold, params); };
    const double err = oracle::max_gradient_error(
        loss,
        {&emissions, &params.transition, &params.start_scores, &params.end_scores},
        {&grads.d_emissions, &grads.d_transition, &grads.d_start, &grads.d_end});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("nll_backward gradients vanish when gold dominates") {
  CrfParams params = zero_crf(3);
  Matrix emissions(3, 3);
  const std::vector<int> gold = {2, 0, 1};
  for (std::size_t t = 0; t < 3; ++t) emissions.at(t, gold[t]) = 50.0;
  NllCache cache;
  nll(emissions, gold, params, &cache);
  const CrfBackward grads = nll_backward(cache, params);
  double max_abs = 0.0;
  for (std::size_t k = 0; k < grads.d_emissions.size(); ++k) {
    max_abs = std::max(max_abs, std::abs(grads.d_emissions[k]));
  }
  for (std::size_t k = 0; k < grads.d_transition.size(); ++k) {
    max_abs = std::max(max_abs, std::abs(grads.d_transition[k]));
  }
  CHECK(max_abs < 1e-6);
}

TEST_CASE("nll_backward rejects a stale cache") {
  NllCache cache;
  SplitRng rng(48);
  const CrfParams params = random_crf(3, rng);
  CHECK_THROWS_AS(nll_backward(cache, params), Error);
}

TEST_CASE("viterbi picks per-position argmax under zero transitions") {
  CrfParams params = zero_crf(3);
  Matrix emissions(4, 3);
  const std::vector<int> expected = {2, 0, 1, 2};
  for (std::size_t t = 0; t < 4; ++t) emissions.at(t, expected[t]) = 9.0;
  CHECK(viterbi(emissions, params) == expected);
}

TEST_CASE("viterbi tie-break: all-equal scores give the all-zeros path") {
  const CrfParams params = zero_crf(4);
  const Matrix emissions(3, 4);
  CHECK(viterbi(emissions, params) == std::vector<int>{0, 0, 0});
}

TEST_CASE("viterbi matches exhaustive argmax") {
  SplitRng rng(49);
  for (int trial = 0; trial < 50; ++trial) {
    CrfParams params = random_crf(3, rng);
    const Matrix emissions = random_matrix(4, 3, rng, 2.0);
    const auto enumerated = oracle::enumerate_paths(emissions, params);
    const auto path = viterbi(emissions, params);
    CHECK(path == enumerated.best_path);
    CHECK(gold_path_score(emissions, path, params) ==
          doctest::Approx(enumerated.best_score).epsilon(1e-12));
  }
}

TEST_CASE("viterbi path score is an upper bound on any gold score") {
  SplitRng rng(50);
  CrfParams params = random_crf(3, rng);
  const Matrix emissions = random_matrix(5, 3, rng, 2.0);
  const auto best = viterbi(emissions, params);
  const double best_score = gold_path_score(emissions, best, params);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> gold(5);
    for (auto& g : gold) g = static_cast<int>(rng.next_below(3));
    CHECK(best_score >= gold_path_score(emissions, gold, params) - 1e-12);
  }
}

TEST_CASE("constrained decoding never emits dangling I- tags") {
  const TagVocab tags({"O", "B-X", "I-X", "B-Y", "I-Y"});
  const IobMask mask = make_iob_mask(tags);
  SplitRng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    CrfParams params = random_crf(tags.size(), rng, 3.0);
    const Matrix emissions = random_matrix(1 + rng.next_below(6), tags.size(), rng, 3.0);
    const auto decoded = tags.decode(viterbi(emissions, params, &mask));
    auto copy = decoded;
    CHECK_NOTHROW(validate_iob2(copy, /*repair=*/false));
  }
}

TEST_CASE("tag vocabulary construction and lookups") {
  const TagVocab tags = TagVocab::for_entity_types({"Gene", "Drug"});
  CHECK(tags.size() == 5);
  CHECK(tags.tag(0) == "O");
  CHECK(tags.tag(1) == "B-Drug");  // types in sorted order
  CHECK(tags.index_of("I-Gene") == 4);
  CHECK(tags.index_of("B-Chemical") == -1);
  CHECK_THROWS_AS(tags.encode({"B-Chemical"}), Error);
  CHECK_THROWS_AS(TagVocab({"B-X"}), Error);  // no "O"
}

TEST_CASE("nll rejects out-of-range gold indices") {
  const CrfParams params = zero_crf(2);
  const Matrix emissions(2, 2);
  CHECK_THROWS_AS(nll(emissions, {0, 5}, params), Error);
}
