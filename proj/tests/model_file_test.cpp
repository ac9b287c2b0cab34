#include <gtest/gtest.h>

#include <string>

#include "eeqt/model_file.hpp"
#include "support/generators.hpp"

namespace eeqt {
namespace {

using testing::Rng;

const std::string kModels = EEQT_MODELS_DIR;

std::string minimal_model(const std::string& couplings, const std::string& version = "1") {
  return R"({"schema_version": ")" + version + R"(", "quantum_dim": 1,
    "classical_labels": ["a", "b"],
    "hamiltonians": [[[[0, 0]]], [[[1, 0]]]],
    "couplings": )" + couplings + R"(,
    "initial_state": {"amplitudes": [[1, 0]], "alpha": 1}})";
}

TEST(ModelFile, LoadsYesNoCounter) {
  const auto loaded = load_model(kModels + "/yes_no_counter.json");
  EXPECT_EQ(loaded.model.classical_size(), 2u);
  EXPECT_EQ(loaded.model.quantum_dim(), 2u);
  EXPECT_EQ(loaded.model.event_channel_count(), 2u);
  EXPECT_EQ(loaded.model.active_channels().size(), 2u);
  EXPECT_EQ(loaded.initial.alpha, 0u);
  EXPECT_EQ(loaded.file.name, std::optional<std::string>("yes_no_counter"));
}

TEST(ModelFile, LoadsThreeDetector) {
  const auto loaded = load_model(kModels + "/three_detector.json");
  EXPECT_EQ(loaded.model.classical_size(), 3u);
  EXPECT_EQ(loaded.model.event_channel_count(), 6u);
  EXPECT_EQ(loaded.model.active_channels().size(), 4u);
}

TEST(ModelFile, CanonicalFormRoundTripsByteForByte) {
  for (const char* name : {"yes_no_counter.json", "three_detector.json"}) {
    const auto f = parse_model_file(read_text_file(kModels + "/" + name));
    const std::string once = write_model_file(f);
    EXPECT_EQ(parse_model_file(once), f);
    EXPECT_EQ(write_model_file(parse_model_file(once)), once);
  }
}

TEST(ModelFile, RandomModelsRoundTrip) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const std::size_t m = 1 + trial % 4;
    const auto model = testing::random_model(rng, n, m);
    const PureHybridState init{testing::random_state(rng, n), m - 1, 0.0};
    const ModelFile f = to_model_file(model, init);
    const std::string text = write_model_file(f);
    const auto back = build_model(parse_model_file(text));
    EXPECT_EQ(back.model.hamiltonians(), model.hamiltonians());
    EXPECT_EQ(back.model.couplings(), model.couplings());
    EXPECT_EQ(back.initial, init);
    EXPECT_EQ(write_model_file(back.file), text);
  }
}

TEST(ModelFile, RejectsDiagonalCoupling) {
  const auto text = minimal_model(R"([{"alpha": 1, "beta": 1, "matrix": [[[0.5, 0]]]}])");
  try {
    parse_model_file(text);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("diagonal coupling must vanish"), std::string::npos);
  }
}

TEST(ModelFile, AcceptsZeroDiagonalEntry) {
  const auto text = minimal_model(R"([{"alpha": 1, "beta": 1, "matrix": [[[0, 0]]]}])");
  EXPECT_NO_THROW(build_model(parse_model_file(text)));
}

TEST(ModelFile, RejectsVersionMismatch) {
  try {
    parse_model_file(minimal_model("[]", "2"));
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("schema_version"), std::string::npos);
  }
}

TEST(ModelFile, RejectsMalformedJson) {
  EXPECT_THROW(parse_model_file("{\"schema_version\": \"1\",\n \"quantum_dim\": }"), InvalidInput);
  EXPECT_THROW(parse_model_file("[1, 2]"), InvalidInput);
}

TEST(ModelFile, ReportsFieldPaths) {
  const auto text = minimal_model(R"([{"alpha": 2, "beta": 1, "matrix": [[[1, 0], [0, 0]]]}])");
  try {
    parse_model_file(text);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("couplings[0].matrix"), std::string::npos) << e.what();
  }
}

TEST(ModelFile, RejectsDuplicatesAndOutOfRange) {
  EXPECT_THROW(parse_model_file(minimal_model(
                   R"([{"alpha": 2, "beta": 1, "matrix": [[[1, 0]]]},
                       {"alpha": 2, "beta": 1, "matrix": [[[1, 0]]]}])")),
               InvalidInput);
  EXPECT_THROW(parse_model_file(minimal_model(R"([{"alpha": 3, "beta": 1, "matrix": [[[1, 0]]]}])")),
               InvalidInput);
}

TEST(ModelFile, RejectsNonHermitianAndUnnormalized) {
  const std::string bad_h = R"({"schema_version": "1", "quantum_dim": 2,
    "classical_labels": ["a"],
    "hamiltonians": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]],
    "couplings": [],
    "initial_state": {"amplitudes": [[1, 0], [0, 0]], "alpha": 1}})";
  EXPECT_THROW(build_model(parse_model_file(bad_h)), InvalidInput);
  const std::string bad_psi = R"({"schema_version": "1", "quantum_dim": 1,
    "classical_labels": ["a"], "hamiltonians": [[[[0, 0]]]], "couplings": [],
    "initial_state": {"amplitudes": [[2, 0]], "alpha": 1}})";
  EXPECT_THROW(build_model(parse_model_file(bad_psi)), InvalidInput);
}

TEST(ModelFile, MissingFileNamesThePath) {
  try {
    load_model("/nonexistent/model.json");
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/model.json"), std::string::npos);
  }
}

}  // namespace
}  // namespace eeqt
