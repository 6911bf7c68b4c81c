#include <fstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "semsteer/dataset.hpp"
#include "semsteer/errors.hpp"
#include "support.hpp"

using namespace semsteer;
using testsupport::fixture;
namespace fs = std::filesystem;

TEST(BBox, HalfOpenGeometry) {
  const BBox b{2, 3, 5, 7};
  EXPECT_EQ(b.width(), 3);
  EXPECT_EQ(b.height(), 4);
  EXPECT_TRUE(b.contains(2, 3));
  EXPECT_TRUE(b.contains(4, 6));
  EXPECT_FALSE(b.contains(5, 6));
  EXPECT_FALSE(b.contains(4, 7));
  EXPECT_TRUE(b.intersects({4, 6, 9, 9}));
  EXPECT_FALSE(b.intersects({5, 3, 9, 7}));  // shares only an edge
}

TEST(Dataset, LoadsSmallFixture) {
  const Dataset d = load_dataset(fixture("dataset_small.json"));
  ASSERT_EQ(d.scenarios.size(), 2u);
  EXPECT_EQ(d.sample_count(), 4u);
  const Scenario* sc = d.find("kitchen_knife");
  ASSERT_NE(sc, nullptr);
  EXPECT_EQ(sc->safe_sample.id, "kitchen_knife/safe");
  EXPECT_EQ(sc->unsafe_sample.context, Context::Unsafe);
  EXPECT_EQ(sc->unsafe_sample.hazard_object()->name, "hazard");
  EXPECT_EQ(sc->safe_sample.hazard_object(), nullptr);
  EXPECT_TRUE(fs::exists(sc->safe_sample.image_path));
  const RgbImage img = load_image(sc->unsafe_sample);
  EXPECT_EQ(img.width(), 96);
  EXPECT_EQ(img.height(), 72);
}

TEST(Dataset, RoundTripIsIdentical) {
  for (const char* name : {"dataset_small.json", "dataset_e2e.json"}) {
    const Dataset a = load_dataset(fixture(name));
    const auto dir = testsupport::temp_dir("roundtrip");
    fs::create_directory_symlink(fixture("images"), dir / "images");
    write_dataset(a, dir / "copy.json");
    const Dataset b = load_dataset(dir / "copy.json");
    EXPECT_EQ(a, b) << name;
    fs::remove_all(dir);
  }
}

TEST(Dataset, CorruptFixturesReportFieldPaths) {
  std::ifstream in(fixture("corrupt_expected.json"));
  const auto expected = nlohmann::json::parse(in);
  ASSERT_GE(expected.size(), 10u);
  for (const auto& [name, list] : expected.items()) {
    std::set<std::pair<std::string, std::string>> want;
    for (const auto& e : list) want.insert({e[0].get<std::string>(), e[1].get<std::string>()});
    std::set<std::pair<std::string, std::string>> got;
    try {
      load_dataset(fixture("corrupt/" + name + ".json"));
      ADD_FAILURE() << name << ": loaded without error";
    } catch (const DatasetValidationError& e) {
      for (const auto& v : e.report()) got.insert({v.scenario_id, v.field});
    }
    EXPECT_EQ(got, want) << name;
  }
}

TEST(Dataset, ValidateScenarioFlagsPairedDesign) {
  Dataset d = load_dataset(fixture("dataset_small.json"));
  Scenario sc = d.scenarios[0];
  EXPECT_TRUE(validate_scenario(sc).empty());
  sc.safe_sample.instruction = "something else";
  const auto report = validate_scenario(sc);
  ASSERT_FALSE(report.empty());
  EXPECT_EQ(report[0].field, "safe.instruction");
}

TEST(Dataset, MissingImageThrows) {
  const auto dir = testsupport::temp_dir("missing");
  std::ifstream in(fixture("dataset_small.json"));
  auto j = nlohmann::json::parse(in);
  j["scenarios"][0]["safe"]["image"] = "nowhere.png";
  std::ofstream(dir / "d.json") << j.dump();
  EXPECT_THROW(load_dataset(dir / "d.json"), MissingImageError);
  fs::remove_all(dir);
}

TEST(Dataset, ParseErrorCarriesLine) {
  const auto dir = testsupport::temp_dir("parse");
  std::ofstream(dir / "d.json") << "{\n  \"name\": \"x\",\n  \"scenarios\": [\n  oops\n]}";
  try {
    load_dataset(dir / "d.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("d.json:4:"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

TEST(Dataset, ContextAndRoleStrings) {
  EXPECT_EQ(parse_context("safe"), Context::Safe);
  EXPECT_EQ(to_string(Context::Unsafe), "unsafe");
  EXPECT_EQ(parse_role("background"), ObjectRole::Background);
  EXPECT_THROW(parse_role("villain"), ArgumentError);
}
