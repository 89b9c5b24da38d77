#include "canguard/error.hpp"
#include "canguard/models.hpp"

namespace canguard {
namespace {

using nlohmann::json;

json layer_to_json(const DenseLayer& l) {
  return {{"weights", matrix_to_json(l.weights)}, {"bias", vector_to_json(l.bias)}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer l{matrix_from_json(j.at("weights")), vector_from_json(j.at("bias"))};
  if (l.weights.rows() != l.bias.size()) throw FormatError("dense layer: bias size mismatch");
  return l;
}

json tree_to_json(const TreeModel& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"distribution", n.distribution}});
  return nodes;
}

TreeModel tree_from_json(const json& j, std::size_t classes, Eigen::Index features) {
  TreeModel t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.distribution = n.at("distribution").get<std::vector<double>>();
    t.nodes.push_back(std::move(node));
  }
  if (t.nodes.empty()) throw FormatError("tree has no nodes");
  const auto count = static_cast<int>(t.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    if (n.distribution.size() != classes) throw FormatError("tree node distribution size mismatch");
    if (n.feature < 0) continue;
    // Children are always created after their parent, which rules out cycles.
    if (n.feature >= features || n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= count ||
        n.right >= count)
      throw FormatError("tree node " + std::to_string(i) + " has invalid links");
  }
  return t;
}

json params_to_json(const ModelParams& params) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogRegModel>) {
          return {{"weights", matrix_to_json(m.weights)}, {"bias", vector_to_json(m.bias)}};
        } else if constexpr (std::is_same_v<M, TreeModel>) {
          return {{"nodes", tree_to_json(m)}};
        } else if constexpr (std::is_same_v<M, ForestModel>) {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return {{"trees", trees}};
        } else if constexpr (std::is_same_v<M, KnnModel>) {
          return {{"k", m.k}, {"x", matrix_to_json(m.x)}, {"y", m.y}};
        } else if constexpr (std::is_same_v<M, SvmModel>) {
          json machines = json::array();
          for (const auto& s : m.machines)
            machines.push_back(
                {{"support", matrix_to_json(s.support)}, {"coef", vector_to_json(s.coef)}, {"bias", s.bias}});
          return {{"gamma", m.gamma}, {"machines", machines}};
        } else if constexpr (std::is_same_v<M, MlpModel>) {
          json layers = json::array();
          for (const auto& l : m.layers) layers.push_back(layer_to_json(l));
          return {{"layers", layers}};
        } else {
          return {{"filters", matrix_to_json(m.filters)},
                  {"filter_bias", vector_to_json(m.filter_bias)},
                  {"head", layer_to_json(m.head)}};
        }
      },
      params);
}

ModelParams params_from_json(Family family, const json& p, std::size_t classes, Eigen::Index features) {
  const auto nclasses = static_cast<Eigen::Index>(classes);
  switch (family) {
    case Family::kLogReg: {
      LogRegModel m{matrix_from_json(p.at("weights")), vector_from_json(p.at("bias"))};
      if (m.weights.rows() != nclasses || m.weights.cols() != features || m.bias.size() != nclasses)
        throw FormatError("LOGREG parameter shape mismatch");
      return m;
    }
    case Family::kTree:
      return tree_from_json(p.at("nodes"), classes, features);
    case Family::kForest: {
      ForestModel m;
      for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t, classes, features));
      if (m.trees.empty()) throw FormatError("forest has no trees");
      return m;
    }
    case Family::kKnn: {
      KnnModel m{p.at("k").get<int>(), matrix_from_json(p.at("x")), p.at("y").get<std::vector<int>>()};
      if (m.k < 1 || m.x.cols() != features || static_cast<std::size_t>(m.x.rows()) != m.y.size())
        throw FormatError("KNN parameter shape mismatch");
      for (int c : m.y)
        if (c < 0 || c >= nclasses) throw FormatError("KNN label index out of range");
      return m;
    }
    case Family::kSvmRbf: {
      SvmModel m;
      m.gamma = p.at("gamma").get<double>();
      for (const auto& s : p.at("machines")) {
        BinarySvm b{matrix_from_json(s.at("support")), vector_from_json(s.at("coef")), s.at("bias").get<double>()};
        if (b.support.rows() != b.coef.size() || (b.support.rows() > 0 && b.support.cols() != features))
          throw FormatError("SVM machine shape mismatch");
        if (b.support.rows() == 0) b.support.resize(0, features);
        m.machines.push_back(std::move(b));
      }
      if (m.machines.size() != classes) throw FormatError("SVM machine count mismatch");
      return m;
    }
    case Family::kMlp: {
      MlpModel m;
      for (const auto& l : p.at("layers")) m.layers.push_back(layer_from_json(l));
      if (m.layers.empty() || m.layers.front().weights.cols() != features ||
          m.layers.back().weights.rows() != nclasses)
        throw FormatError("MLP layer shape mismatch");
      for (std::size_t l = 1; l < m.layers.size(); ++l)
        if (m.layers[l].weights.cols() != m.layers[l - 1].weights.rows()) throw FormatError("MLP layer chain mismatch");
      return m;
    }
    case Family::kCnn1d: {
      CnnModel m{matrix_from_json(p.at("filters")), vector_from_json(p.at("filter_bias")), layer_from_json(p.at("head"))};
      if (m.filters.rows() != m.filter_bias.size() || m.head.weights.cols() != m.filters.rows() ||
          m.head.weights.rows() != nclasses || m.filters.cols() > features)
        throw FormatError("CNN1D parameter shape mismatch");
      return m;
    }
  }
  throw FormatError("unknown family");
}

}  // namespace

nlohmann::json serialize_model(const FittedModel& model) {
  return {{"schema_version", kModelSchemaVersion},
          {"family", to_string(model.family())},
          {"classes", model.classes()},
          {"input_dim", model.input_dim()},
          {"train_seconds", model.train_seconds},
          {"params", params_to_json(model.params())}};
}

FittedModel deserialize_model(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw FormatError("model document is not a JSON object");
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) throw FormatError("unsupported model schema_version " + std::to_string(version));
    const auto family_name = doc.at("family").get<std::string>();
    const auto family = parse_family(family_name);
    if (!family) throw FormatError("unknown model family '" + family_name + "'");
    auto classes = doc.at("classes").get<ClassVector>();
    const auto input_dim = doc.at("input_dim").get<Eigen::Index>();
    if (input_dim < 1) throw FormatError("model input_dim must be >= 1");
    ModelParams params = params_from_json(*family, doc.at("params"), classes.size(), input_dim);
    FittedModel model(std::move(classes), input_dim, std::move(params));
    model.train_seconds = doc.value("train_seconds", 0.0);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model document: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("model document: ") + e.what());
  }
}

}  // namespace canguard
