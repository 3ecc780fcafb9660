#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streammark/message.hpp"

namespace streammark {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary split tree over numeric attributes. Convention: value < threshold
// goes left, equality and above go right; a missing attribute follows the
// node's default branch.
struct TreeNode {
  // leaf
  std::string label;
  bool is_leaf = false;
  // split
  std::string attribute;
  double threshold = 0;
  bool default_left = true;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
};

struct DecisionTreeModel {
  int version = 1;
  std::unique_ptr<TreeNode> root;

  struct Outcome {
    std::string label;
    bool used_default_branch = false;
  };
  Outcome classify(const Message& m) const;

  // Attributes referenced by splits.
  std::vector<std::string> attributes() const;
};

struct LinearModel {
  int version = 1;
  double intercept = 0;
  std::vector<std::string> features;
  std::vector<double> coefficients;

  // y = intercept + sum_j coef_j * x_j; nullopt when a feature is missing.
  std::optional<double> predict(const Message& m) const;
};

enum class ModelKind { decision_tree, linear_regression };

// Versioned, schema-validated model document. Parse errors throw ModelError
// with the offending key. When `schema_attributes` is given, every referenced
// attribute must appear in it.
struct ModelArtifact {
  ModelKind kind = ModelKind::decision_tree;
  int version = 1;
  std::string payload_json;  // the full document

  static ModelArtifact parse(
      const std::string& json_text,
      const std::vector<std::string>* schema_attributes = nullptr);
  static ModelArtifact load_file(
      const std::string& path,
      const std::vector<std::string>* schema_attributes = nullptr);

  DecisionTreeModel to_tree() const;
  LinearModel to_linear() const;

  static std::string tree_json(const DecisionTreeModel& m);
  static std::string linear_json(const LinearModel& m);
};

}  // namespace streammark
