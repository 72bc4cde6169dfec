/**
 * @file config.hpp
 * @brief INI run configurations.
 *
 * Grammar: `[section]` headers followed by `key = value` lines; `;` or `#`
 * start comments. `[experiment] preset = name` selects the defaults, every
 * other key overrides one field. Vectors are written as three
 * space-separated numbers. Unknown sections or keys are rejected.
 */
#pragma once

#include "ldgplate/presets.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <variant>

namespace ldgplate {

namespace detail {

using FieldRef = std::variant<std::string *, double *, int *, bool *, Vec3 *>;

struct ConfigField {
  const char *section;
  const char *key;
  FieldRef ref;
};

inline std::vector<ConfigField> config_fields(ExperimentConfig &c) {
  return {
      {"experiment", "preset", &c.preset},
      {"domain", "kind", &c.domain},
      {"domain", "x_min", &c.x_min},
      {"domain", "x_max", &c.x_max},
      {"domain", "y_min", &c.y_min},
      {"domain", "y_max", &c.y_max},
      {"domain", "nx", &c.nx},
      {"domain", "ny", &c.ny},
      {"domain", "radius", &c.radius},
      {"domain", "cells", &c.cells},
      {"domain", "dirichlet", &c.dirichlet},
      {"metric", "name", &c.metric},
      {"metric", "alpha", &c.metric_alpha},
      {"metric", "K", &c.metric_K},
      {"metric", "boundary_data", &c.boundary_data},
      {"material", "lambda", &c.lambda},
      {"material", "mu", &c.mu},
      {"material", "gamma0", &c.gamma0},
      {"material", "gamma1", &c.gamma1},
      {"material", "force", &c.force},
      {"init", "kind", &c.init},
      {"init", "fhat", &c.fhat},
      {"init", "gamma0_hat", &c.gamma0_hat},
      {"init", "gamma1_hat", &c.gamma1_hat},
      {"init", "perturbation", &c.perturbation},
      {"init", "seed", &c.seed},
      {"preprocess", "enabled", &c.preprocess},
      {"preprocess", "tau", &c.pp_tau},
      {"preprocess", "eps0", &c.pp_eps0},
      {"preprocess", "tol", &c.pp_tol},
      {"preprocess", "max_steps", &c.pp_max_steps},
      {"preprocess", "monitor", &c.pp_monitor},
      {"flow", "tau", &c.tau},
      {"flow", "tol", &c.tol},
      {"flow", "max_steps", &c.max_steps},
      {"flow", "cg_tol", &c.cg_tol},
      {"flow", "preconditioner", &c.preconditioner},
      {"flow", "refresh_after", &c.refresh_after},
      {"output", "dir", &c.output_dir},
      {"output", "deterministic", &c.deterministic},
  };
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string to_text(const FieldRef &r) {
  return std::visit(
      [](auto *p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) return *p;
        else if constexpr (std::is_same_v<T, double>) return format_double(*p);
        else if constexpr (std::is_same_v<T, int>) return std::to_string(*p);
        else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
        else return format_double(p->x()) + " " + format_double(p->y()) + " " + format_double(p->z());
      },
      r);
}

inline void from_text(const FieldRef &r, const std::string &text, const std::string &where) {
  auto fail = [&]() { throw Error(ErrorKind::config, where + ": cannot parse value '" + text + "'"); };
  std::visit(
      [&](auto *p) {
        using T = std::remove_pointer_t<decltype(p)>;
        std::istringstream is(text);
        if constexpr (std::is_same_v<T, std::string>) {
          *p = text;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1" || text == "yes") *p = true;
          else if (text == "false" || text == "0" || text == "no") *p = false;
          else fail();
        } else if constexpr (std::is_same_v<T, Vec3>) {
          Vec3 v;
          if (!(is >> v.x() >> v.y() >> v.z())) fail();
          std::string rest;
          if (is >> rest) fail();
          *p = v;
        } else {
          T v;
          if (!(is >> v)) fail();
          std::string rest;
          if (is >> rest) fail();
          *p = v;
        }
      },
      r);
}

} // namespace detail

/// Applies `section.key = value` to a config.
inline void set_config_value(ExperimentConfig &c, const std::string &section, const std::string &key,
                             const std::string &value) {
  for (auto &f : detail::config_fields(c))
    if (section == f.section && key == f.key) {
      detail::from_text(f.ref, value, section + "." + key);
      return;
    }
  throw Error(ErrorKind::config, "unknown config key '" + section + "." + key + "'");
}

/// Parses "section.key=value".
inline void apply_override(ExperimentConfig &c, const std::string &assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw Error(ErrorKind::config, "override must look like section.key=value, got '" + assignment + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  set_config_value(c, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
                   trim(assignment.substr(eq + 1)));
}

inline ExperimentConfig parse_config(std::istream &is, const std::string &source = "config") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error &e) {
    throw Error(ErrorKind::config, source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig c;
  if (auto p = tree.get_optional<std::string>("experiment.preset")) {
    if (*p != "custom") c = preset(*p);
  }
  for (const auto &[section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw Error(ErrorKind::config, source + ": key '" + section + "' outside any section");
    for (const auto &[key, value] : body) {
      if (section == "experiment" && key == "preset") continue;
      try {
        set_config_value(c, section, key, value.data());
      } catch (const Error &e) {
        throw Error(ErrorKind::config, source + ": " + e.what());
      }
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io, "cannot open config " + path);
  return parse_config(is, path);
}

/// Fully resolved config in the same grammar; parse_config(write_config(c)) == c.
inline std::string write_config(const ExperimentConfig &c) {
  ExperimentConfig copy = c;
  std::ostringstream os;
  std::string current;
  for (const auto &f : detail::config_fields(copy)) {
    if (current != f.section) {
      if (!current.empty()) os << '\n';
      current = f.section;
      os << '[' << current << "]\n";
    }
    os << f.key << " = " << detail::to_text(f.ref) << '\n';
  }
  return os.str();
}

} // namespace ldgplate
