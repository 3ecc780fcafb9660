#include <doctest.h>

#include "streammark/fixtures.hpp"
#include "streammark/models.hpp"

using namespace streammark;

TEST_SUITE("models") {

TEST_CASE("tree artifacts survive a serialization round trip") {
  auto dir = std::filesystem::temp_directory_path() / "streammark_model_rt";
  ModelFixture fx = write_fixture_models(dir, "CITY");
  ModelArtifact a = ModelArtifact::load_file(fx.dtc_v1.string());
  CHECK(a.kind == ModelKind::decision_tree);
  CHECK(a.version == 1);
  DecisionTreeModel tree = a.to_tree();
  std::string again = ModelArtifact::tree_json(tree);
  DecisionTreeModel tree2 = ModelArtifact::parse(again).to_tree();
  // Same classification behavior on the fixture probe.
  CHECK(tree.classify(fx.probe).label == tree2.classify(fx.probe).label);
}

TEST_CASE("linear artifacts survive a serialization round trip") {
  LinearModel m;
  m.version = 3;
  m.intercept = 1.5;
  m.features = {"x", "y"};
  m.coefficients = {2.0, -0.5};
  LinearModel back = ModelArtifact::parse(ModelArtifact::linear_json(m)).to_linear();
  CHECK(back.version == 3);
  CHECK(back.intercept == doctest::Approx(1.5));
  CHECK(back.features == m.features);
  CHECK(back.coefficients == m.coefficients);
}

TEST_CASE("artifacts without an integer version are rejected") {
  CHECK_THROWS_AS(
      ModelArtifact::parse(R"({"kind":"decision_tree","tree":{"leaf":"a"}})"),
      ModelError);
  CHECK_THROWS_AS(ModelArtifact::parse(R"({"kind":"mystery","version":1})"),
                  ModelError);
  CHECK_THROWS_AS(ModelArtifact::parse("not json at all"), ModelError);
}

TEST_CASE("coefficient vector length must match the feature list") {
  CHECK_THROWS_AS(ModelArtifact::parse(
                      R"({"kind":"linear_regression","version":1,
                          "intercept":0,"features":["a","b"],
                          "coefficients":[1.0]})"),
                  ModelError);
}

TEST_CASE("tree splits must reference schema attributes when a schema is given") {
  const std::string doc = R"({"kind":"decision_tree","version":1,
      "tree":{"attribute":"bogus","threshold":1,
              "left":{"leaf":"a"},"right":{"leaf":"b"}}})";
  std::vector<std::string> schema = {"temperature", "humidity"};
  CHECK_THROWS_AS(ModelArtifact::parse(doc, &schema), ModelError);
  std::vector<std::string> ok = {"bogus"};
  CHECK_NOTHROW(ModelArtifact::parse(doc, &ok));
}

TEST_CASE("malformed tree nodes are rejected") {
  CHECK_THROWS_AS(ModelArtifact::parse(
                      R"({"kind":"decision_tree","version":1,
                          "tree":{"attribute":"a","threshold":1,
                                  "left":{"leaf":"x"}}})"),
                  ModelError);
}

TEST_CASE("default branch direction parses from the document") {
  const std::string doc = R"({"kind":"decision_tree","version":1,
      "tree":{"attribute":"v","threshold":5,"default":"right",
              "left":{"leaf":"L"},"right":{"leaf":"R"}}})";
  DecisionTreeModel m = ModelArtifact::parse(doc).to_tree();
  Message empty;
  auto outcome = m.classify(empty);
  CHECK(outcome.label == "R");
  CHECK(outcome.used_default_branch);
}

}  // TEST_SUITE
