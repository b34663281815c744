#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "hgda/manifest.hpp"

using namespace hgda;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hgda_manifest_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("manifest: parse, resolve domains, load corpora") {
  TempDir dir;
  write_file(dir.path / "gene.conll", "alpha O\nbeta B-Gene\n\nx O\n\n");
  write_file(dir.path / "drug.conll", "p B-Drug\nq I-Drug\n\n");
  write_file(dir.path / "manifest.json", R"({
    "target_domain": "Drug",
    "corpora": [
      {"path": "gene.conll", "name": "G", "domain": "Gene", "split": "train"},
      {"path": "drug.conll", "name": "D", "domain": "Drug", "split": "test"}
    ]
  })");

  const DataManifest manifest = load_manifest(dir.path / "manifest.json");
  CHECK(manifest.corpora.size() == 2);
  CHECK(manifest.target_domain == "Drug");

  const LoadedData data = load_data(manifest, 8);
  CHECK(data.registry.domains == std::vector<std::string>{"Gene", "Drug"});
  CHECK(data.registry.target_index() == 1);
  REQUIRE(data.corpora.size() == 2);
  CHECK(data.corpora[0].name == "G");
  CHECK(data.corpora[0].domain_id == 0);
  CHECK(data.corpora[0].split == Split::train);
  CHECK(data.corpora[1].split == Split::test);
  CHECK(!data.has_table);
  CHECK(data.table.dimension() == 8);
}

TEST_CASE("manifest: keep_types filter applies on load") {
  TempDir dir;
  write_file(dir.path / "mixed.conll", "a B-Gene\nb B-Cell\n\n");
  write_file(dir.path / "manifest.json", R"({
    "corpora": [
      {"path": "mixed.conll", "domain": "Gene", "split": "train",
       "keep_types": ["Gene"]}
    ]
  })");
  const LoadedData data = load_data(load_manifest(dir.path / "manifest.json"), 4);
  CHECK(data.corpora[0].sentences[0].tags ==
        std::vector<std::string>{"B-Gene", "O"});
  CHECK(data.corpora[0].entity_types == std::set<std::string>{"Gene"});
}

TEST_CASE("manifest: embedding file and policy-only entries") {
  TempDir dir;
  write_file(dir.path / "c.conll", "a O\n\n");
  SUBCASE("with a vector file") {
    write_file(dir.path / "vec.txt", "a 1.0 2.0\nb 3.0 4.0\n");
    write_file(dir.path / "manifest.json", R"({
      "embeddings": {"path": "vec.txt", "dim": 2},
      "corpora": [{"path": "c.conll", "domain": "X", "split": "train"}]
    })");
    const LoadedData data = load_data(load_manifest(dir.path / "manifest.json"), 2);
    CHECK(data.has_table);
    CHECK(data.table.lookup("a") == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("policy only") {
    write_file(dir.path / "manifest.json", R"({
      "embeddings": {"unk": "random_normal", "sigma": 0.5, "unk_seed": 9},
      "corpora": [{"path": "c.conll", "domain": "X", "split": "train"}]
    })");
    const LoadedData data = load_data(load_manifest(dir.path / "manifest.json"), 3);
    CHECK(!data.has_table);
    CHECK(data.table.dimension() == 3);
    const auto v = data.table.lookup("unseen");
    CHECK((v[0] != 0.0 || v[1] != 0.0));
  }
  SUBCASE("path without dim is rejected") {
    write_file(dir.path / "manifest.json", R"({
      "embeddings": {"path": "vec.txt"},
      "corpora": [{"path": "c.conll", "domain": "X", "split": "train"}]
    })");
    CHECK_THROWS_AS(load_manifest(dir.path / "manifest.json"), Error);
  }
}

TEST_CASE("manifest error paths") {
  TempDir dir;
  SUBCASE("empty manifest") {
    write_file(dir.path / "manifest.json", R"({"corpora": []})");
    try {
      load_data(load_manifest(dir.path / "manifest.json"), 4);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::empty_manifest);
    }
  }
  SUBCASE("missing corpus file") {
    write_file(dir.path / "manifest.json", R"({
      "corpora": [{"path": "nope.conll", "domain": "X", "split": "train"}]
    })");
    CHECK_THROWS_AS(load_data(load_manifest(dir.path / "manifest.json"), 4),
                    Error);
  }
  SUBCASE("target domain without corpora") {
    write_file(dir.path / "c.conll", "a O\n\n");
    write_file(dir.path / "manifest.json", R"({
      "target_domain": "Ghost",
      "corpora": [{"path": "c.conll", "domain": "X", "split": "train"}]
    })");
    CHECK_THROWS_AS(load_data(load_manifest(dir.path / "manifest.json"), 4),
                    Error);
  }
  SUBCASE("malformed json") {
    write_file(dir.path / "manifest.json", "{nope");
    CHECK_THROWS_AS(load_manifest(dir.path / "manifest.json"), Error);
  }
}

TEST_CASE("manifest json round-trip") {
  DataManifest manifest;
  manifest.domains = {"Gene", "Drug"};
  manifest.target_domain = "Drug";
  EmbeddingSpec emb;
  emb.unk = UnkPolicy::random_normal;
  emb.sigma = 0.25;
  emb.unk_seed = 777;
  manifest.embeddings = emb;
  CorpusSpec spec;
  spec.path = "a.conll";
  spec.name = "A";
  spec.domain = "Gene";
  spec.split = Split::dev;
  spec.keep_types = {"Gene"};
  manifest.corpora.push_back(spec);

  const auto parsed = parse_manifest(manifest_to_json(manifest), "");
  CHECK(parsed.domains == manifest.domains);
  CHECK(parsed.target_domain == manifest.target_domain);
  REQUIRE(parsed.embeddings.has_value());
  CHECK(parsed.embeddings->unk == UnkPolicy::random_normal);
  CHECK(parsed.embeddings->sigma == 0.25);
  CHECK(parsed.embeddings->unk_seed == 777);
  REQUIRE(parsed.corpora.size() == 1);
  CHECK(parsed.corpora[0].name == "A");
  CHECK(parsed.corpora[0].split == Split::dev);
  CHECK(parsed.corpora[0].keep_types == std::set<std::string>{"Gene"});
}

TEST_CASE("run config: defaults, file values, and flag-style overrides") {
  const RunConfig defaults = parse_run_config(nlohmann::json::object());
  CHECK(defaults.model.emb_dim == 200);
  CHECK(defaults.model.hidden == 256);
  CHECK(defaults.model.char_features == false);
  CHECK(defaults.train.base_lr == 1e-2);
  CHECK(defaults.train.lambda == 1.0);
  CHECK(defaults.train.momentum == 0.9);
  CHECK(defaults.train.weight_decay == 1e-6);
  CHECK(defaults.train.grad_clip == 5.0);
  CHECK(defaults.train.dropout == 0.2);
  CHECK(defaults.train.patience == 20);
  CHECK(defaults.train.adaptation_steps == 2);
  CHECK(defaults.adapt.adapt_steps == 100);
  CHECK(defaults.adapt.early_stop_nll == 1e-3);
  CHECK(defaults.sizes == std::vector<std::size_t>{5, 10, 20, 50});
  // alpha/beta derive through the scaling rule when unset
  CHECK(defaults.train.resolved_alpha() == scaled_lr(1e-2, 5, 32));

  const RunConfig custom = parse_run_config(nlohmann::json::parse(R"({
    "model": {"emb_dim": 16, "hidden": 32},
    "train": {"k": 8, "lambda": 0.5, "alpha": 0.2},
    "sampler": {"mode": "ne_constrained"},
    "adapt": {"sizes": [5], "repeats": 3}
  })"));
  CHECK(custom.model.emb_dim == 16);
  CHECK(custom.train.k == 8);
  CHECK(custom.sampler.k == 8);  // mirrored
  CHECK(custom.train.lambda == 0.5);
  CHECK(custom.train.resolved_alpha() == 0.2);
  CHECK(custom.sampler.mode == SampleMode::ne_constrained);
  CHECK(custom.sizes == std::vector<std::size_t>{5});
  CHECK(custom.adapt.repeats == 3);

  const auto json = run_config_to_json(custom);
  const RunConfig reparsed = parse_run_config(json);
  CHECK(reparsed.train.k == 8);
  CHECK(reparsed.train.lambda == 0.5);
  CHECK(reparsed.model.hidden == 32);
}
