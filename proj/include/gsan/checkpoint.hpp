#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "gsan/config.hpp"
#include "gsan/train.hpp"

namespace gsan {

/// Checkpoint container (format version 1): JSON with the full config echo,
/// the dataset fingerprint and every parameter matrix under its stable name.
/// Values survive a save/load round trip bit-exactly.
struct Checkpoint {
  int version = 1;
  TrainConfig config;
  std::uint64_t dataset_fingerprint = 0;
  ModelParams params;
};

namespace detail {

inline nlohmann::json tensor_to_json(const TensorPtr& t) {
  nlohmann::json j;
  j["rows"] = t->value.rows();
  j["cols"] = t->value.cols();
  j["values"] = t->value.data();
  return j;
}

inline TensorPtr tensor_from_json(const nlohmann::json& j) {
  auto t = std::make_shared<Tensor>();
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  Matrix m(rows, cols);
  const auto& values = j.at("values");
  if (values.size() != rows * cols)
    throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor has " +
                                              std::to_string(values.size()) + " values for " +
                                              std::to_string(rows) + "x" + std::to_string(cols));
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = values[i].get<double>();
  t->value = std::move(m);
  t->requires_grad = true;
  return t;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                            const TrainConfig& config, std::uint64_t dataset_fp) {
  nlohmann::json j;
  j["format"] = "gsan-checkpoint";
  j["version"] = 1;
  j["dataset_fingerprint"] = fingerprint_hex(dataset_fp);
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : config_items(config)) cfg[key] = value;
  j["config"] = cfg;
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, tensor] : params.named())
    tensors[name] = detail::tensor_to_json(tensor);
  j["tensors"] = tensors;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(1) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "gsan-checkpoint")
    throw Error(ErrorCode::ParseError, path.string() + ": not a gsan checkpoint");
  Checkpoint cp;
  cp.version = j.value("version", 0);
  if (cp.version != 1)
    throw Error(ErrorCode::ParseError,
                path.string() + ": unsupported checkpoint version " + std::to_string(cp.version));
  cp.dataset_fingerprint = std::stoull(j.at("dataset_fingerprint").get<std::string>(), nullptr, 16);
  for (const auto& [key, value] : j.at("config").items())
    apply_config_entry(cp.config, key, value.get<std::string>(), path.string());
  cp.params.type = cp.config.model;
  const auto& tensors = j.at("tensors");
  auto fetch = [&](const std::string& name) -> TensorPtr {
    if (!tensors.contains(name))
      throw Error(ErrorCode::ParseError, path.string() + ": missing tensor '" + name + "'");
    return detail::tensor_from_json(tensors.at(name));
  };
  if (cp.config.model == ModelType::Gsan) {
    for (int h = 0; h < cp.config.gsan.heads; ++h) {
      HeadParams head;
      head.theta = fetch("head" + std::to_string(h) + ".theta");
      head.attn = fetch("head" + std::to_string(h) + ".attn");
      cp.params.gsan.heads.push_back(std::move(head));
    }
    cp.params.gsan.residual_weight = fetch("residual_weight");
    cp.params.gsan.output_weight = fetch("output_weight");
    if (cp.config.gsan.use_bias) {
      cp.params.gsan.residual_bias = fetch("residual_bias");
      cp.params.gsan.output_bias = fetch("output_bias");
    }
  } else {
    cp.params.gcn.theta1 = fetch("theta1");
    cp.params.gcn.theta2 = fetch("theta2");
  }
  return cp;
}

}  // namespace gsan
