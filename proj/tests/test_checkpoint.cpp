#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hgda/checkpoint.hpp"
#include "helpers.hpp"

using namespace hgda;

namespace {

std::filesystem::path temp_file(const std::string& stem) {
  return std::filesystem::temp_directory_path() /
         (stem + "_" + std::to_string(::getpid()) + ".ckpt");
}

}  // namespace

TEST_CASE("checkpoint round-trips parameters and optimizer state exactly") {
  CheckpointData data;
  data.params = testutil::micro_model(40);
  EncoderConfig enc;
  enc.emb_dim = 4;
  enc.hidden = 4;
  data.encoder_config = enc;
  data.seed = 123456789;
  data.config_hash = 0xdeadbeef;
  data.iteration = 17;
  data.best_dev = 0.1234567890123456789;  // exercises bit-exact storage
  data.patience_left = 3;
  data.has_optimizer = true;
  data.optimizer.velocity = zeros_like(data.params);
  data.optimizer.initialized = true;
  SplitRng rng(41);
  visit_model_tensors(data.optimizer.velocity,
                      [&](const std::string&, Matrix& t) {
                        for (std::size_t k = 0; k < t.size(); ++k) {
                          t[k] = rng.next_uniform(-1, 1);
                        }
                      });
  data.extra = {{"note", "round-trip"}};

  const auto path = temp_file("roundtrip");
  save_checkpoint(path, data);
  const CheckpointData loaded = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(testutil::params_identical(loaded.params, data.params));
  CHECK(testutil::grads_identical(loaded.optimizer.velocity,
                                  data.optimizer.velocity));
  CHECK(loaded.seed == data.seed);
  CHECK(loaded.config_hash == data.config_hash);
  CHECK(loaded.iteration == 17);
  CHECK(loaded.best_dev == data.best_dev);  // bitwise
  CHECK(loaded.patience_left == 3);
  CHECK(loaded.params.tags.tags() == data.params.tags.tags());
  CHECK(loaded.params.theta.vocab.tokens() == data.params.theta.vocab.tokens());
  CHECK(loaded.params.domain_names == data.params.domain_names);
  CHECK(loaded.extra.at("note") == "round-trip");
}

TEST_CASE("checkpoint files are byte-identical across saves") {
  CheckpointData data;
  data.params = testutil::micro_model(42);
  EncoderConfig enc;
  enc.emb_dim = 4;
  enc.hidden = 4;
  data.encoder_config = enc;

  const auto path_a = temp_file("bytes_a");
  const auto path_b = temp_file("bytes_b");
  save_checkpoint(path_a, data);
  save_checkpoint(path_b, data);
  std::ifstream a(path_a, std::ios::binary);
  std::ifstream b(path_b, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
}

TEST_CASE("corrupted checkpoints are rejected") {
  SUBCASE("not a checkpoint at all") {
    const auto path = temp_file("garbage");
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a checkpoint";
    out.close();
    try {
      load_checkpoint(path);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::incompatible_checkpoint);
    }
    std::filesystem::remove(path);
  }

  SUBCASE("truncated tensor payload") {
    CheckpointData data;
    data.params = testutil::micro_model(43);
    EncoderConfig enc;
    enc.emb_dim = 4;
    enc.hidden = 4;
    data.encoder_config = enc;
    const auto path = temp_file("truncated");
    save_checkpoint(path, data);
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 16);
    CHECK_THROWS_AS(load_checkpoint(path), Error);
    std::filesystem::remove(path);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(temp_file("never_written")), Error);
  }
}
