#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gsan/data.hpp"
#include "gsan/train.hpp"

namespace gsan {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string paths_to_string(const std::vector<ScatteringPath>& paths) {
  if (paths.empty()) return "none";
  std::string out;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    if (p) out += ';';
    for (std::size_t i = 0; i < paths[p].orders.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(paths[p].orders[i]);
    }
  }
  return out;
}

inline std::vector<ScatteringPath> paths_from_string(const std::string& text,
                                                     const std::string& where) {
  std::vector<ScatteringPath> paths;
  if (text.empty() || text == "none") return paths;
  for (std::string_view part : split(text, ';')) {
    ScatteringPath path;
    for (std::string_view num : split(part, ',')) {
      const long k = parse_int(trim(num), where, 0);
      if (k < 0) throw Error(ErrorCode::ParseError, where + ": negative wavelet order");
      path.orders.push_back(static_cast<int>(k));
    }
    if (path.orders.empty())
      throw Error(ErrorCode::ParseError, where + ": empty scattering path");
    paths.push_back(std::move(path));
  }
  return paths;
}

inline bool bool_from_string(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorCode::ParseError, where + ": expected true/false, got '" + text + "'");
}

}  // namespace detail

/// Canonical key/value view of a training configuration; the same schema is
/// used by config files, manifests and checkpoints.
inline std::vector<std::pair<std::string, std::string>> config_items(const TrainConfig& c) {
  using detail::format_double;
  return {
      {"model", model_type_name(c.model)},
      {"heads", std::to_string(c.gsan.heads)},
      {"head_dim", std::to_string(c.gsan.head_dim)},
      {"gcn_channels", std::to_string(c.gsan.c_gcn)},
      {"paths", detail::paths_to_string(c.gsan.paths)},
      {"q", format_double(c.gsan.q)},
      {"leaky_slope", format_double(c.gsan.leaky_slope)},
      {"residual_alpha", format_double(c.gsan.residual_alpha)},
      {"mid_dim", std::to_string(c.gsan.mid_dim)},
      {"use_bias", c.gsan.use_bias ? "true" : "false"},
      {"dropout", format_double(c.gsan.dropout)},
      {"hidden_dim", std::to_string(c.gcn_hidden_dim)},
      {"learning_rate", format_double(c.learning_rate)},
      {"weight_decay", format_double(c.weight_decay)},
      {"adam_beta1", format_double(c.adam_beta1)},
      {"adam_beta2", format_double(c.adam_beta2)},
      {"adam_eps", format_double(c.adam_eps)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"patience", std::to_string(c.patience)},
      {"seed", std::to_string(c.seed)},
      {"row_normalize", c.row_normalize ? "true" : "false"},
  };
}

inline void apply_config_entry(TrainConfig& c, const std::string& key, const std::string& value,
                               const std::string& where) {
  using detail::bool_from_string;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "model") {
    if (value == "gsan")
      c.model = ModelType::Gsan;
    else if (value == "gcn")
      c.model = ModelType::Gcn;
    else
      throw Error(ErrorCode::ParseError, where + ": model must be gsan or gcn");
  } else if (key == "heads") {
    c.gsan.heads = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "head_dim") {
    c.gsan.head_dim = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "gcn_channels") {
    c.gsan.c_gcn = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "paths") {
    c.gsan.paths = detail::paths_from_string(value, where);
  } else if (key == "q") {
    c.gsan.q = parse_double(value, where, 0);
  } else if (key == "leaky_slope") {
    c.gsan.leaky_slope = parse_double(value, where, 0);
  } else if (key == "residual_alpha") {
    c.gsan.residual_alpha = parse_double(value, where, 0);
  } else if (key == "mid_dim") {
    c.gsan.mid_dim = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "use_bias") {
    c.gsan.use_bias = bool_from_string(value, where);
  } else if (key == "dropout") {
    c.gsan.dropout = parse_double(value, where, 0);
  } else if (key == "hidden_dim") {
    c.gcn_hidden_dim = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "learning_rate") {
    c.learning_rate = parse_double(value, where, 0);
  } else if (key == "weight_decay") {
    c.weight_decay = parse_double(value, where, 0);
  } else if (key == "adam_beta1") {
    c.adam_beta1 = parse_double(value, where, 0);
  } else if (key == "adam_beta2") {
    c.adam_beta2 = parse_double(value, where, 0);
  } else if (key == "adam_eps") {
    c.adam_eps = parse_double(value, where, 0);
  } else if (key == "max_epochs") {
    c.max_epochs = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "patience") {
    c.patience = static_cast<int>(parse_int(value, where, 0));
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_int(value, where, 0));
  } else if (key == "row_normalize") {
    c.row_normalize = bool_from_string(value, where);
  } else {
    throw Error(ErrorCode::ParseError, where + ": unknown config key '" + key + "'");
  }
}

/// Config files are plain "key = value" lines; '#' starts a comment. Every
/// key has a default, so an empty file is a valid configuration.
inline TrainConfig parse_config_file(const std::filesystem::path& path,
                                     TrainConfig base = TrainConfig{}) {
  const std::string text = detail::read_file(path);
  std::size_t lineno = 0;
  for (std::string_view raw : detail::lines_of(text)) {
    ++lineno;
    std::string_view line = raw.substr(0, raw.find('#'));
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = detail::trim(std::string_view(trimmed).substr(eq + 1));
    apply_config_entry(base, key, value,
                       path.string() + ":" + std::to_string(lineno));
  }
  return base;
}

/// Grid files list candidate values (comma-separated) for the three searched
/// axes: heads, residual_alpha, head_dim. A missing axis falls back to the
/// base configuration's single value.
inline GridSpec parse_grid_file(const std::filesystem::path& path, const TrainConfig& base) {
  GridSpec grid;
  grid.heads = {base.gsan.heads};
  grid.residual_alphas = {base.gsan.residual_alpha};
  grid.head_dims = {base.gsan.head_dim};
  const std::string text = detail::read_file(path);
  std::size_t lineno = 0;
  for (std::string_view raw : detail::lines_of(text)) {
    ++lineno;
    std::string_view line = raw.substr(0, raw.find('#'));
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, where + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = detail::trim(std::string_view(trimmed).substr(eq + 1));
    auto values = detail::split(value, ',');
    if (key == "heads") {
      grid.heads.clear();
      for (auto v : values)
        grid.heads.push_back(static_cast<int>(detail::parse_int(detail::trim(v), where, 0)));
    } else if (key == "residual_alpha") {
      grid.residual_alphas.clear();
      for (auto v : values)
        grid.residual_alphas.push_back(detail::parse_double(detail::trim(v), where, 0));
    } else if (key == "head_dim") {
      grid.head_dims.clear();
      for (auto v : values)
        grid.head_dims.push_back(static_cast<int>(detail::parse_int(detail::trim(v), where, 0)));
    } else {
      throw Error(ErrorCode::ParseError,
                  where + ": grid files accept heads, residual_alpha, head_dim");
    }
    if (grid.heads.empty() || grid.residual_alphas.empty() || grid.head_dims.empty())
      throw Error(ErrorCode::EmptyGrid, where + ": empty candidate list");
  }
  return grid;
}

}  // namespace gsan
