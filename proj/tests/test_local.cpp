#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "provenance/backends/local.hpp"
#include "provenance/backends/stub.hpp"
#include "provenance/error.hpp"
#include "tiny_model.hpp"

using namespace provenance;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("provenance_local_" + name);
  fs::remove_all(dir);
  return dir;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::ConfigError;
}

int id(const std::string& token) {
  const auto v = tiny::vocabulary();
  return static_cast<int>(std::find(v.begin(), v.end(), token) - v.begin());
}

std::vector<int> ids_of(std::initializer_list<const char*> tokens) {
  std::vector<int> out;
  for (const auto* t : tokens) out.push_back(id(t));
  return out;
}

WordPieceTokenizer small_tokenizer() { return WordPieceTokenizer(tiny::vocabulary(), {}); }

}  // namespace

TEST_CASE("wordpiece splits words, punctuation and continuations") {
  const auto tok = small_tokenizer();
  CHECK(tok.tokenize("UNaffable hello, world!") ==
        std::vector<std::string>{"un", "##aff", "##able", "hello", ",", "world", "!"});
  CHECK(tok.tokenize("rivers") == std::vector<std::string>{"river", "##s"});
  CHECK(tok.tokenize("zebra paris") == std::vector<std::string>{"[UNK]", "paris"});
  CHECK(tok.tokenize("  \t\n ").empty());
  CHECK(tok.to_ids({"the", "nope"}) == std::vector<std::int32_t>{4, 1});

  WordPieceTokenizer::Options cased;
  cased.lowercase = false;
  CHECK(WordPieceTokenizer(tiny::vocabulary(), cased).tokenize("Paris") == std::vector<std::string>{"[UNK]"});
  CHECK(code_of([] { WordPieceTokenizer({"a", "b"}, {}); }) == ErrorCode::ModelFormat);
}

TEST_CASE("pair encoding layout and longest-first truncation") {
  const auto tok = small_tokenizer();
  const auto enc = tok.encode_pair("paris", "the city", 16);
  CHECK(enc.ids == std::vector<std::int32_t>{2, 9, 3, 4, 27, 3});
  CHECK(enc.type_ids == std::vector<std::int32_t>{0, 0, 0, 1, 1, 1});
  CHECK_FALSE(enc.truncated);

  const auto cut = tok.encode_pair("the capital of france is paris", "hello world", 8);
  CHECK(cut.truncated);
  CHECK(cut.ids.size() == 8);
  // 6 + 2 tokens must shrink to 5: the first side loses three.
  CHECK(cut.ids == std::vector<std::int32_t>{2, 4, 5, 6, 3, 28, 29, 3});

  const auto single = tok.encode("hello world hello", 4);
  CHECK(single.truncated);
  CHECK(single.ids == std::vector<std::int32_t>{2, 28, 29, 3});
}

TEST_CASE("tensor file round trip and corruption") {
  const auto dir = scratch("tensors");
  fs::create_directories(dir);
  TensorMap tensors;
  tensors["a"] = {{2, 3}, {1, 2, 3, 4, 5, 6}};
  tensors["b.bias"] = {{1}, {-0.5F}};
  write_tensor_file(dir / "w.pvtw", tensors);
  const auto back = read_tensor_file(dir / "w.pvtw");
  REQUIRE(back.size() == 2);
  CHECK(back.at("a").shape == std::vector<std::uint64_t>{2, 3});
  CHECK(back.at("a").data == tensors["a"].data);
  CHECK(back.at("b.bias").data[0] == -0.5F);

  fs::resize_file(dir / "w.pvtw", fs::file_size(dir / "w.pvtw") - 2);
  CHECK(code_of([&] { read_tensor_file(dir / "w.pvtw"); }) == ErrorCode::ModelFormat);
  std::ofstream(dir / "bad.pvtw") << "NOPE0000";
  CHECK(code_of([&] { read_tensor_file(dir / "bad.pvtw"); }) == ErrorCode::ModelFormat);
  fs::remove_all(dir);
}

TEST_CASE("local cross-encoder matches the reference forward pass") {
  for (const std::string head : {"pooler", "dense"}) {
    tiny::Spec spec;
    spec.head = head;
    spec.prefix = head == "pooler" ? "bert." : "roberta.";
    spec.position_offset = head == "pooler" ? 0 : 2;
    const auto dir = scratch("ce_" + head);
    const auto model_data = tiny::random_model(spec);
    tiny::write_model(model_data, dir);
    const auto model = LocalModel::load(dir);

    const auto ids = ids_of({"[CLS]", "the", "capital", "of", "france", "?", "[SEP]", "paris", "is", "the",
                             "capital", "of", "france", ".", "[SEP]"});
    std::vector<int> types(ids.size(), 0);
    std::fill(types.begin() + 7, types.end(), 1);
    const double expected = tiny::logits(model_data, ids, types)[0];
    const double actual = model->score_pair("The capital of France?", "Paris is the capital of France.");
    CAPTURE(head);
    CHECK(std::abs(actual - expected) <= 1e-5 * std::max(1.0, std::abs(expected)));

    LocalRelevanceBackend relevance(model);
    CHECK(relevance.score_pair("The capital of France?", "Paris is the capital of France.") == actual);
    LocalNliBackend nli(model);
    const double p = nli.entail("The capital of France?", "Paris is the capital of France.");
    CHECK(p == doctest::Approx(1.0 / (1.0 + std::exp(-expected))).epsilon(1e-5));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    fs::remove_all(dir);
  }
}

TEST_CASE("probability head with softmax over labels") {
  tiny::Spec spec;
  spec.labels = 3;
  spec.interpretation = "probability";
  spec.transform = "softmax";
  spec.seed = 11;
  const auto dir = scratch("softmax");
  const auto data = tiny::random_model(spec);
  tiny::write_model(data, dir);
  const auto model = LocalModel::load(dir);

  const auto ids = ids_of({"[CLS]", "a", "river", "[SEP]", "the", "river", "##s", "[SEP]"});
  const std::vector<int> types{0, 0, 0, 0, 1, 1, 1, 1};
  const auto z = tiny::logits(data, ids, types);
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (const double v : z) total += std::exp(v - top);
  const double expected = std::exp(z[2] - top) / total;

  LocalNliBackend nli(model);
  CHECK(nli.entail("a river", "the rivers") == doctest::Approx(expected).epsilon(1e-5));
  fs::remove_all(dir);
}

TEST_CASE("embedding model pools and normalizes") {
  for (const std::string pooling : {"cls", "mean"}) {
    tiny::Spec spec;
    spec.task = "embedding";
    spec.pooling = pooling;
    spec.normalize = true;
    const auto dir = scratch("embed_" + pooling);
    const auto data = tiny::random_model(spec);
    tiny::write_model(data, dir);
    LocalEmbeddingBackend backend(LocalModel::load(dir));

    const auto m = backend.embed({"hello world", "paris"});
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == spec.hidden);
    CHECK(m.row(0).norm() == doctest::Approx(1.0).epsilon(1e-9));

    const auto hidden = tiny::hidden_states(data, ids_of({"[CLS]", "hello", "world", "[SEP]"}), {0, 0, 0, 0});
    std::vector<double> pooled(static_cast<std::size_t>(spec.hidden), 0.0);
    for (std::size_t h = 0; h < pooled.size(); ++h) {
      if (pooling == "cls") {
        pooled[h] = hidden[0][h];
      } else {
        for (const auto& row : hidden) pooled[h] += row[h] / static_cast<double>(hidden.size());
      }
    }
    double norm = 0.0;
    for (const double v : pooled) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t h = 0; h < pooled.size(); ++h) {
      CHECK(std::abs(m(0, static_cast<Eigen::Index>(h)) - pooled[h] / norm) < 1e-5);
    }
    CHECK(code_of([&] { LocalNliBackend{LocalModel::load(dir)}; }) == ErrorCode::ConfigError);
    fs::remove_all(dir);
  }
}

TEST_CASE("long inputs are truncated to the manifest length") {
  tiny::Spec spec;
  spec.max_len = 8;
  const auto dir = scratch("truncate");
  const auto data = tiny::random_model(spec);
  tiny::write_model(data, dir);
  const auto model = LocalModel::load(dir);
  const double score = model->score_pair("the capital of france is paris", "hello world");
  const auto ids = ids_of({"[CLS]", "the", "capital", "of", "[SEP]", "hello", "world", "[SEP]"});
  const double expected = tiny::logits(data, ids, {0, 0, 0, 0, 0, 1, 1, 1})[0];
  CHECK(std::abs(score - expected) <= 1e-5 * std::max(1.0, std::abs(expected)));
  fs::remove_all(dir);
}

TEST_CASE("checksums and manifest validation") {
  const auto dir = scratch("checksum");
  const auto data = tiny::random_model({});
  auto manifest = tiny::write_model(data, dir);
  REQUIRE_NOTHROW(LocalModel::load(dir));

  SUBCASE("flipped byte") {
    std::fstream f(dir / "weights.pvtw", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
    f.close();
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ChecksumMismatch);
  }
  SUBCASE("truncated weight file") {
    fs::resize_file(dir / "weights.pvtw", fs::file_size(dir / "weights.pvtw") - 16);
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ChecksumMismatch);
  }
  SUBCASE("missing vocabulary") {
    fs::remove(dir / "vocab.txt");
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ChecksumMismatch);
  }
  SUBCASE("manifest errors") {
    const auto rewrite = [&](const nlohmann::json& m) { std::ofstream(dir / "manifest.json") << m.dump(); };
    auto bad = manifest;
    bad.erase("score_interpretation");
    rewrite(bad);
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ModelFormat);

    bad = manifest;
    bad["tokenizer"]["type"] = "bpe";
    rewrite(bad);
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ModelFormat);

    bad = manifest;
    bad["max_sequence_length"] = 100;
    rewrite(bad);
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ModelFormat);

    bad = manifest;
    bad["output"]["transform"] = "sigmoid";
    rewrite(bad);
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ModelFormat);

    bad = manifest;
    bad["encoder"]["hidden_size"] = 6;
    rewrite(bad);
    CHECK(code_of([&] { LocalModel::load(dir); }) == ErrorCode::ModelFormat);

    rewrite(ModelManifest::from_json(manifest).to_json());
    CHECK_NOTHROW(LocalModel::load(dir));
  }
  fs::remove_all(dir);
}

TEST_CASE("local backends drive the full pipeline and tolerate concurrent calls") {
  const auto dir = scratch("pipeline");
  tiny::write_model(tiny::random_model({}), dir);
  const auto model = LocalModel::load(dir);
  LocalRelevanceBackend relevance(model);
  LocalNliBackend nli(model);
  const auto input = CheckInput::from_sources("What is the capital of France?", "Paris",
                                              {"Paris is the capital of France.", "Berlin is in Germany.",
                                               "A river flows through the city."});
  const auto report = check(relevance, nli, input, PipelineConfig{});
  CHECK(report.aggregate >= 0.0);
  CHECK(report.aggregate <= 1.0);

  std::vector<double> results(4);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < results.size(); ++i) {
      threads.emplace_back([&, i] { results[i] = check(relevance, nli, input, PipelineConfig{}).aggregate; });
    }
  }
  for (const double r : results) CHECK(r == report.aggregate);
  fs::remove_all(dir);
}
