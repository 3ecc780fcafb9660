#include "streammark/models.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace streammark {

using nlohmann::json;

DecisionTreeModel::Outcome DecisionTreeModel::classify(const Message& m) const {
  Outcome out;
  const TreeNode* node = root.get();
  while (node && !node->is_leaf) {
    auto v = m.get_numeric(node->attribute);
    bool go_left;
    if (!v) {
      out.used_default_branch = true;
      go_left = node->default_left;
    } else {
      go_left = *v < node->threshold;  // equality goes right
    }
    node = go_left ? node->left.get() : node->right.get();
  }
  if (node) out.label = node->label;
  return out;
}

std::vector<std::string> DecisionTreeModel::attributes() const {
  std::set<std::string> attrs;
  std::vector<const TreeNode*> stack{root.get()};
  while (!stack.empty()) {
    const TreeNode* n = stack.back();
    stack.pop_back();
    if (!n || n->is_leaf) continue;
    attrs.insert(n->attribute);
    stack.push_back(n->left.get());
    stack.push_back(n->right.get());
  }
  return {attrs.begin(), attrs.end()};
}

std::optional<double> LinearModel::predict(const Message& m) const {
  double y = intercept;
  for (size_t j = 0; j < features.size(); ++j) {
    auto x = m.get_numeric(features[j]);
    if (!x) return std::nullopt;
    y += coefficients[j] * *x;
  }
  return y;
}

namespace {

std::unique_ptr<TreeNode> parse_node(const json& j) {
  auto node = std::make_unique<TreeNode>();
  if (j.contains("leaf")) {
    node->is_leaf = true;
    node->label = j.at("leaf").get<std::string>();
    return node;
  }
  if (!j.contains("attribute") || !j.contains("threshold") ||
      !j.contains("left") || !j.contains("right"))
    throw ModelError("tree node requires attribute/threshold/left/right or leaf");
  node->attribute = j.at("attribute").get<std::string>();
  node->threshold = j.at("threshold").get<double>();
  node->default_left = j.value("default", "left") == std::string("left");
  node->left = parse_node(j.at("left"));
  node->right = parse_node(j.at("right"));
  return node;
}

json node_json(const TreeNode& n) {
  json j;
  if (n.is_leaf) {
    j["leaf"] = n.label;
    return j;
  }
  j["attribute"] = n.attribute;
  j["threshold"] = n.threshold;
  j["default"] = n.default_left ? "left" : "right";
  j["left"] = node_json(*n.left);
  j["right"] = node_json(*n.right);
  return j;
}

}  // namespace

ModelArtifact ModelArtifact::parse(
    const std::string& json_text,
    const std::vector<std::string>* schema_attributes) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ModelError(std::string("model document is not valid JSON: ") + e.what());
  }
  ModelArtifact a;
  const std::string kind = j.value("kind", "");
  if (kind == "decision_tree")
    a.kind = ModelKind::decision_tree;
  else if (kind == "linear_regression")
    a.kind = ModelKind::linear_regression;
  else
    throw ModelError("model kind must be decision_tree or linear_regression");
  if (!j.contains("version") || !j.at("version").is_number_integer())
    throw ModelError("model requires an integer version");
  a.version = j.at("version").get<int>();
  a.payload_json = json_text;

  // Structural validation up front so a bad artifact fails at load.
  if (a.kind == ModelKind::decision_tree) {
    DecisionTreeModel tree = a.to_tree();
    if (schema_attributes) {
      std::set<std::string> allowed(schema_attributes->begin(),
                                    schema_attributes->end());
      for (const auto& attr : tree.attributes())
        if (!allowed.count(attr))
          throw ModelError("tree references attribute absent from schema: " + attr);
    }
  } else {
    LinearModel lin = a.to_linear();
    if (schema_attributes) {
      std::set<std::string> allowed(schema_attributes->begin(),
                                    schema_attributes->end());
      for (const auto& f : lin.features)
        if (!allowed.count(f))
          throw ModelError("regression references feature absent from schema: " + f);
    }
  }
  return a;
}

ModelArtifact ModelArtifact::load_file(
    const std::string& path, const std::vector<std::string>* schema_attributes) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open model file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), schema_attributes);
}

DecisionTreeModel ModelArtifact::to_tree() const {
  if (kind != ModelKind::decision_tree)
    throw ModelError("artifact is not a decision tree");
  json j = json::parse(payload_json);
  if (!j.contains("tree")) throw ModelError("decision_tree requires a tree");
  DecisionTreeModel m;
  m.version = version;
  m.root = parse_node(j.at("tree"));
  return m;
}

LinearModel ModelArtifact::to_linear() const {
  if (kind != ModelKind::linear_regression)
    throw ModelError("artifact is not a linear regression");
  json j = json::parse(payload_json);
  LinearModel m;
  m.version = version;
  m.intercept = j.value("intercept", 0.0);
  if (!j.contains("features") || !j.contains("coefficients"))
    throw ModelError("linear_regression requires features and coefficients");
  m.features = j.at("features").get<std::vector<std::string>>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  if (m.features.size() != m.coefficients.size())
    throw ModelError("coefficient vector length must match the feature list");
  return m;
}

std::string ModelArtifact::tree_json(const DecisionTreeModel& m) {
  json j;
  j["kind"] = "decision_tree";
  j["version"] = m.version;
  j["tree"] = node_json(*m.root);
  return j.dump(2);
}

std::string ModelArtifact::linear_json(const LinearModel& m) {
  json j;
  j["kind"] = "linear_regression";
  j["version"] = m.version;
  j["intercept"] = m.intercept;
  j["features"] = m.features;
  j["coefficients"] = m.coefficients;
  return j.dump(2);
}

}  // namespace streammark
