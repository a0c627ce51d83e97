// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat run configuration: one "key = value" per line, '#' starts a comment.

#include "hodgefem/adaptivity.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <string>
#include <string_view>

namespace hodgefem {

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct RunConfig {
  std::string problem = "square-k2";
  Algorithm algorithm = Algorithm::amfem2;
  MarkingParams params;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "hodgefem-out";
  bool emit_svg = true;
  bool timing = false;  // wall time in the seconds column; off keeps reports bit-identical

  void validate() const {
    const auto names = problem_names();
    if (std::find(names.begin(), names.end(), problem) == names.end()) throw ConfigError("unknown problem: " + problem);
    try {
      params.validate();
    } catch (const InputError &e) {
      throw ConfigError(e.what());
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  return out;
}

inline bool parse_flag(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("bad flag for " + std::string(key) + ": '" + std::string(value) + "'");
}

}  // namespace detail

inline RunConfig parse_config(std::istream &is) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string_view key = detail::trim(s.substr(0, eq));
    const std::string_view value = detail::trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.emplace(key).second) throw ConfigError("duplicate key: " + std::string(key));

    if (key == "problem") cfg.problem = value;
    else if (key == "algorithm") {
      try {
        cfg.algorithm = parse_algorithm(std::string(value));
      } catch (const InputError &e) {
        throw ConfigError(e.what());
      }
    } else if (key == "theta") cfg.params.theta = detail::parse_number<double>(key, value);
    else if (key == "theta_sigma") cfg.params.theta_sigma = detail::parse_number<double>(key, value);
    else if (key == "theta_p") cfg.params.theta_p = detail::parse_number<double>(key, value);
    else if (key == "theta_du") cfg.params.theta_du = detail::parse_number<double>(key, value);
    else if (key == "tol") cfg.params.tol = detail::parse_number<double>(key, value);
    else if (key == "max_steps") cfg.params.max_steps = detail::parse_number<int>(key, value);
    else if (key == "ndof_cap") cfg.params.ndof_cap = detail::parse_number<long>(key, value);
    else if (key == "seed") cfg.seed = detail::parse_number<std::uint64_t>(key, value);
    else if (key == "output_dir") cfg.output_dir = std::string(value);
    else if (key == "emit_svg") cfg.emit_svg = detail::parse_flag(key, value);
    else if (key == "timing") cfg.timing = detail::parse_flag(key, value);
    else throw ConfigError("unknown key: " + std::string(key));
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(is);
}

}  // namespace hodgefem
