#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "conicsvm/core.hpp"

namespace conicsvm {

namespace detail {

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vector_from_json(const nlohmann::json& a) {
  Vector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline nlohmann::json kernel_to_json(const Kernel& k) {
  nlohmann::json j;
  switch (k.kind) {
    case Kernel::Kind::Linear: j["kind"] = "linear"; break;
    case Kernel::Kind::Gaussian:
      j["kind"] = "gaussian";
      j["bandwidth"] = k.bandwidth;
      break;
    case Kernel::Kind::Polynomial:
      j["kind"] = "polynomial";
      j["degree"] = k.degree;
      j["offset"] = k.offset;
      break;
  }
  return j;
}

inline Kernel kernel_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") return Kernel::linear();
  if (kind == "gaussian") return Kernel::gaussian(j.at("bandwidth").get<double>());
  if (kind == "polynomial")
    return Kernel::polynomial(j.at("degree").get<int>(), j.at("offset").get<double>());
  throw std::invalid_argument("unknown kernel kind: " + kind);
}

}  // namespace detail

struct ModelFile {
  TrainedClassifier classifier;
  // kernel mode keeps its training set so the model file is self-contained
  std::optional<LabeledDataset> training_data;
  std::string hyperparameter_description;
  bool intercept_embedded = false;
};

inline void write_model(const std::string& path, const ModelFile& model) {
  nlohmann::json j;
  j["format"] = "conicsvm-model";
  j["version"] = 1;
  const auto& c = model.classifier;
  j["objective_value"] = c.objective_value;
  j["solver_status"] = to_string(c.solver_status);
  j["hyperparameters"] = model.hyperparameter_description;
  if (c.z_values) j["z_values"] = detail::vector_to_json(*c.z_values);
  if (c.is_linear()) {
    j["mode"] = "linear";
    j["weights"] = detail::vector_to_json(*c.weights);
  } else {
    j["mode"] = "kernel";
    j["dual_coefficients"] = detail::vector_to_json(*c.dual_coefficients);
    j["kernel"] = detail::kernel_to_json(*c.kernel);
    if (!model.training_data)
      throw std::invalid_argument("kernel models require the training data");
    nlohmann::json feats = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.training_data->n(); ++i)
      feats.push_back(detail::vector_to_json(model.training_data->point(i).transpose()));
    j["training_features"] = feats;
    j["training_labels"] = detail::vector_to_json(model.training_data->labels());
  }
  j["intercept_embedded"] =
      model.training_data ? model.training_data->intercept_embedded() : model.intercept_embedded;

  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open model output file: " + path);
  out << j.dump(2) << "\n";
}

inline ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "conicsvm-model")
    throw std::invalid_argument("not a conicsvm model file: " + path);

  ModelFile model;
  const double objective = j.at("objective_value").get<double>();
  const SolverStatus status = solver_status_from_string(j.at("solver_status").get<std::string>());
  std::optional<Vector> z;
  if (j.contains("z_values")) z = detail::vector_from_json(j["z_values"]);
  model.hyperparameter_description = j.value("hyperparameters", "");
  model.intercept_embedded = j.value("intercept_embedded", false);

  if (j.at("mode").get<std::string>() == "linear") {
    model.classifier = TrainedClassifier::linear(detail::vector_from_json(j.at("weights")),
                                                 objective, status, z);
  } else {
    model.classifier =
        TrainedClassifier::dual(detail::vector_from_json(j.at("dual_coefficients")),
                                detail::kernel_from_json(j.at("kernel")), objective, status, z);
    const auto& feats = j.at("training_features");
    const auto labels = detail::vector_from_json(j.at("training_labels"));
    Matrix X(feats.size(), feats[0].size());
    for (size_t i = 0; i < feats.size(); ++i)
      X.row(static_cast<Eigen::Index>(i)) = detail::vector_from_json(feats[i]).transpose();
    model.training_data =
        LabeledDataset(std::move(X), labels, j.value("intercept_embedded", false));
  }
  return model;
}

}  // namespace conicsvm
