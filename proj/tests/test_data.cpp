#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gsan/data.hpp"

#include "test_util.hpp"

using namespace gsan;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = GSAN_FIXTURE_DIR;

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("gsan_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void copy_fixture(const fs::path& dst) {
  fs::create_directories(dst);
  for (const char* file : {"edges.tsv", "features.csv", "labels.txt", "splits.json"})
    fs::copy_file(kFixtures / "toy" / file, dst / file, fs::copy_options::overwrite_existing);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an Error");
}

}  // namespace

TEST_CASE("toy fixture loads with expected statistics", "[data]") {
  const Dataset ds = load_dataset(kFixtures / "toy");
  REQUIRE(ds.node_count() == 12);
  REQUIRE(ds.num_classes() == 3);
  REQUIRE(ds.features.cols() == 4);
  const DatasetStats stats = dataset_stats(ds);
  REQUIRE(stats.nodes == 12);
  REQUIRE(stats.edges == 14);
  REQUIRE(stats.classes == 3);
  REQUIRE(stats.homophily.has_value());
  REQUIRE(*stats.homophily == Catch::Approx(12.0 / 14.0).margin(1e-15));
  REQUIRE(ds.train_mask[0]);
  REQUIRE(ds.valid_mask[5]);
  REQUIRE(ds.test_mask[11]);
  REQUIRE(ds.name == "toy");
}

TEST_CASE("loader validates files and masks", "[data]") {
  // Missing file names the file.
  {
    const fs::path dir = temp_dir("missing");
    copy_fixture(dir);
    fs::remove(dir / "features.csv");
    try {
      load_dataset(dir);
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::MissingFile);
      REQUIRE(std::string(e.what()).find("features.csv") != std::string::npos);
    }
  }
  // Overlapping masks name the first offending node.
  {
    const fs::path dir = temp_dir("overlap");
    copy_fixture(dir);
    std::ofstream out(dir / "splits.json", std::ios::binary);
    out << R"({"train": [0, 4], "valid": [4, 5], "test": [6]})";
    out.close();
    try {
      load_dataset(dir);
      FAIL("expected MaskOverlap");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::MaskOverlap);
      REQUIRE(std::string(e.what()).find("node 4") != std::string::npos);
    }
  }
  // Bad number reports file and line.
  {
    const fs::path dir = temp_dir("badnum");
    copy_fixture(dir);
    std::ofstream out(dir / "features.csv", std::ios::binary | std::ios::app);
    out << "1,2,oops,4\n";
    out.close();
    try {
      load_dataset(dir);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::ParseError);
      REQUIRE(std::string(e.what()).find(":13") != std::string::npos);
    }
  }
  // Label count must match the feature rows.
  {
    const fs::path dir = temp_dir("labelcount");
    copy_fixture(dir);
    std::ofstream out(dir / "labels.txt", std::ios::binary | std::ios::app);
    out << "1\n";
    out.close();
    REQUIRE(code_of([&] { load_dataset(dir); }) == ErrorCode::ShapeMismatch);
  }
  // Negative labels are rejected.
  {
    const fs::path dir = temp_dir("neglabel");
    copy_fixture(dir);
    std::ofstream out(dir / "labels.txt", std::ios::binary);
    for (int i = 0; i < 12; ++i) out << (i == 3 ? -1 : 0) << "\n";
    out.close();
    REQUIRE(code_of([&] { load_dataset(dir); }) == ErrorCode::LabelOutOfRange);
  }
  // Split indices must be in range.
  {
    const fs::path dir = temp_dir("splitrange");
    copy_fixture(dir);
    std::ofstream out(dir / "splits.json", std::ios::binary);
    out << R"({"train": [0], "valid": [1], "test": [99]})";
    out.close();
    REQUIRE(code_of([&] { load_dataset(dir); }) == ErrorCode::IndexOutOfRange);
  }
}

TEST_CASE("save and load round-trip bit-exactly", "[data]") {
  const Dataset ds = generate_sbm(80, 3, 0.2, 0.05, 5, 1.3, 99);
  const fs::path dir = temp_dir("roundtrip");
  save_dataset(ds, dir);
  const Dataset back = load_dataset(dir);
  REQUIRE(back.node_count() == ds.node_count());
  REQUIRE(back.graph.edge_count() == ds.graph.edge_count());
  for (std::size_t e = 0; e < ds.graph.edge_count(); ++e) {
    REQUIRE(back.graph.edges()[e].u == ds.graph.edges()[e].u);
    REQUIRE(back.graph.edges()[e].v == ds.graph.edges()[e].v);
    REQUIRE(back.graph.edges()[e].weight == ds.graph.edges()[e].weight);
  }
  REQUIRE(back.features == ds.features);
  REQUIRE(back.labels == ds.labels);
  REQUIRE(back.train_mask == ds.train_mask);
  REQUIRE(back.valid_mask == ds.valid_mask);
  REQUIRE(back.test_mask == ds.test_mask);
  REQUIRE(dataset_fingerprint(back) == dataset_fingerprint(ds));
}

TEST_CASE("edge homophily counts matching labels", "[data]") {
  Dataset ds;
  ds.graph = build_graph(3, std::vector<Edge>{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  ds.labels = {0, 0, 1};
  REQUIRE(edge_homophily(ds) == Catch::Approx(1.0 / 3.0).margin(1e-15));

  ds.labels = {2, 2, 2};
  REQUIRE(edge_homophily(ds) == 1.0);

  Dataset empty;
  empty.graph = build_graph(3, std::vector<Edge>{});
  empty.labels = {0, 0, 0};
  REQUIRE_THROWS_AS(edge_homophily(empty), Error);
  REQUIRE_FALSE(dataset_stats(empty).homophily.has_value());
}

TEST_CASE("sbm generator honors probabilities and determinism", "[data]") {
  // No cross-class edges: homophily is exactly one.
  {
    const Dataset ds = generate_sbm(120, 3, 0.15, 0.0, 4, 1.0, 5);
    REQUIRE(edge_homophily(ds) == 1.0);
  }
  // Equal probabilities: homophily near the sum of squared class shares.
  {
    const Dataset ds = generate_sbm(2000, 2, 0.01, 0.01, 4, 1.0, 6);
    REQUIRE(edge_homophily(ds) == Catch::Approx(0.5).margin(0.05));
  }
  // Same seed reproduces the dataset bit for bit.
  {
    const Dataset a = generate_sbm(300, 4, 0.1, 0.02, 6, 1.5, 7);
    const Dataset b = generate_sbm(300, 4, 0.1, 0.02, 6, 1.5, 7);
    REQUIRE(dataset_fingerprint(a) == dataset_fingerprint(b));
    REQUIRE(a.features == b.features);
  }
  // Assortative sampling raises homophily over the uniform case.
  {
    const Dataset mixed = generate_sbm(1200, 2, 0.02, 0.02, 4, 1.0, 8);
    const Dataset sorted = generate_sbm(1200, 2, 0.02, 0.004, 4, 1.0, 8);
    REQUIRE(edge_homophily(sorted) > edge_homophily(mixed));
  }
  REQUIRE_THROWS_AS(generate_sbm(100, 2, 0.1, 0.2, 4, 1.0, 1), Error);
  REQUIRE_THROWS_AS(generate_sbm(100, 2, 1.5, 0.2, 4, 1.0, 1), Error);
}

TEST_CASE("sbm split is 10/20/70 per class by position", "[data]") {
  const Dataset ds = generate_sbm(200, 2, 0.05, 0.01, 4, 1.0, 11);
  auto count = [&](const std::vector<bool>& mask, int label) {
    int c = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i] && ds.labels[i] == label) ++c;
    return c;
  };
  for (int label = 0; label < 2; ++label) {
    REQUIRE(count(ds.train_mask, label) == 10);
    REQUIRE(count(ds.valid_mask, label) == 20);
    REQUIRE(count(ds.test_mask, label) == 70);
  }
}

TEST_CASE("fingerprint reacts to any content change", "[data]") {
  Dataset ds = generate_sbm(50, 2, 0.2, 0.05, 3, 1.0, 13);
  const std::uint64_t base = dataset_fingerprint(ds);
  Dataset tweaked = ds;
  tweaked.features(0, 0) += 1e-12;
  REQUIRE(dataset_fingerprint(tweaked) != base);
  Dataset relabeled = ds;
  relabeled.labels[0] ^= 1;
  REQUIRE(dataset_fingerprint(relabeled) != base);
}

TEST_CASE("row normalization scales to unit 1-norm", "[data]") {
  Matrix x(2, 3);
  x(0, 0) = 2.0;
  x(0, 1) = -1.0;
  x(0, 2) = 1.0;
  const Matrix y = row_normalized(x);
  REQUIRE(y(0, 0) == 0.5);
  REQUIRE(y(0, 1) == -0.25);
  REQUIRE(y(1, 0) == 0.0);  // all-zero row untouched
}
