#include "tsig_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tsig::cli {

namespace {

using nlohmann::json;

std::string at(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string at(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

const json& require(const json& obj, const std::string& key, const std::string& base) {
  if (!obj.contains(key)) throw ConfigError(at(base, key), "missing required field '" + key + "'");
  return obj.at(key);
}

double as_double(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ConfigError(ptr, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(ptr, "expected a finite number");
  return d;
}

int as_int(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw ConfigError(ptr, "expected an integer");
  return v.get<int>();
}

const json& as_array(const json& v, const std::string& ptr) {
  if (!v.is_array()) throw ConfigError(ptr, "expected an array");
  return v;
}

cplx as_complex(const json& v, const std::string& ptr) {
  if (v.is_number()) return {as_double(v, ptr), 0.0};
  if (v.is_array() && v.size() == 2) return {as_double(v[0], at(ptr, 0)), as_double(v[1], at(ptr, 1))};
  throw ConfigError(ptr, "expected a real number or a [re, im] pair");
}

FlatMetric parse_metric(const json& manifold, int n) {
  const std::string ptr = "/manifold/metric";
  if (!manifold.contains("metric")) return FlatMetric::identity(n);
  const json& m = as_array(manifold.at("metric"), ptr);
  if (m.size() != static_cast<std::size_t>(n * n)) {
    throw ConfigError(ptr, "metric must hold dim^2 = " + std::to_string(n * n) + " entries in row-major order");
  }
  RMat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = as_double(m[static_cast<std::size_t>(i * n + j)], at(ptr, static_cast<std::size_t>(i * n + j)));
  try {
    return FlatMetric(g);
  } catch (const Error& e) {
    throw ConfigError(ptr, std::string("metric is not symmetric positive definite: ") + e.what());
  }
}

FlatBundle parse_bundle(const json& doc, int n) {
  if (!doc.contains("bundle")) return FlatBundle::trivial(n, 1);
  const std::string base = "/bundle";
  const json& b = doc.at("bundle");
  if (!b.is_object()) throw ConfigError(base, "expected an object");
  int rank = 1;
  if (b.contains("rank")) {
    rank = as_int(b.at("rank"), at(base, "rank"));
    if (rank < 1) throw ConfigError(at(base, "rank"), "rank must be positive");
  }
  if (b.contains("holonomy") && b.contains("holonomy_matrices")) {
    throw ConfigError(base, "give either holonomy angles or holonomy_matrices, not both");
  }
  if (b.contains("holonomy")) {
    const std::string ptr = at(base, "holonomy");
    const json& h = as_array(b.at("holonomy"), ptr);
    if (h.size() != static_cast<std::size_t>(rank)) throw ConfigError(ptr, "expected one row of angles per channel");
    RMat theta(rank, n);
    for (int a = 0; a < rank; ++a) {
      const std::string rp = at(ptr, static_cast<std::size_t>(a));
      const json& row = as_array(h[static_cast<std::size_t>(a)], rp);
      if (row.size() != static_cast<std::size_t>(n)) throw ConfigError(rp, "expected dim angles");
      for (int j = 0; j < n; ++j) {
        const std::string ep = at(rp, static_cast<std::size_t>(j));
        const double v = as_double(row[static_cast<std::size_t>(j)], ep);
        if (v < 0.0 || v >= 1.0) throw ConfigError(ep, "holonomy angles lie in [0, 1)");
        theta(a, j) = v;
      }
    }
    return FlatBundle(theta);
  }
  if (b.contains("holonomy_matrices")) {
    const std::string ptr = at(base, "holonomy_matrices");
    const json& h = as_array(b.at("holonomy_matrices"), ptr);
    if (h.size() != static_cast<std::size_t>(n)) throw ConfigError(ptr, "expected one unitary per generator");
    std::vector<CMat> mats;
    for (int g = 0; g < n; ++g) {
      const std::string gp = at(ptr, static_cast<std::size_t>(g));
      const json& m = as_array(h[static_cast<std::size_t>(g)], gp);
      if (m.size() != static_cast<std::size_t>(rank)) throw ConfigError(gp, "expected rank rows");
      CMat u(rank, rank);
      for (int r = 0; r < rank; ++r) {
        const std::string rp = at(gp, static_cast<std::size_t>(r));
        const json& row = as_array(m[static_cast<std::size_t>(r)], rp);
        if (row.size() != static_cast<std::size_t>(rank)) throw ConfigError(rp, "expected rank entries");
        for (int c = 0; c < rank; ++c) u(r, c) = as_complex(row[static_cast<std::size_t>(c)], at(rp, static_cast<std::size_t>(c)));
      }
      mats.push_back(u);
    }
    try {
      return FlatBundle::from_holonomy_matrices(mats);
    } catch (const Error& e) {
      throw ConfigError(ptr, e.what());
    }
  }
  return FlatBundle::trivial(n, rank);
}

}  // namespace

FluxForm parse_flux(const json& flux, int n, const std::string& base) {
  FluxForm out(n);
  if (!flux.is_object()) throw ConfigError(base, "expected an object");
  if (!flux.contains("components")) return out;
  const std::string cp = at(base, "components");
  const json& comps = as_array(flux.at("components"), cp);
  int radius = -1;
  if (flux.contains("radius")) radius = as_int(flux.at("radius"), at(base, "radius"));
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const std::string p = at(cp, c);
    const json& comp = comps[c];
    if (!comp.is_object()) throw ConfigError(p, "expected an object");
    const int degree = as_int(require(comp, "degree", p), at(p, "degree"));
    if (degree == 1) {
      throw ConfigError(at(p, "degree"),
                        "degree-1 flux is a change of flat connection; absorb it into the bundle holonomy");
    }
    if (degree < 3 || degree % 2 == 0 || degree > n) {
      throw ConfigError(at(p, "degree"), "flux degrees must be odd, at least 3 and at most dim");
    }
    const std::string tp = at(p, "terms");
    const json& terms = as_array(require(comp, "terms", p), tp);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string ep = at(tp, t);
      const json& term = terms[t];
      if (!term.is_object()) throw ConfigError(ep, "expected an object");
      const json& mi = as_array(require(term, "multi_index", ep), at(ep, "multi_index"));
      std::vector<int> axes;
      for (std::size_t i = 0; i < mi.size(); ++i) axes.push_back(as_int(mi[i], at(at(ep, "multi_index"), i)));
      if (static_cast<int>(axes.size()) != degree) {
        throw ConfigError(at(ep, "multi_index"), "multi_index length differs from the component degree");
      }
      MultiIndex index;
      try {
        index = MultiIndex::from_axes(axes, n);
      } catch (const Error& e) {
        throw ConfigError(at(ep, "multi_index"), e.what());
      }
      std::vector<int> mode(static_cast<std::size_t>(n), 0);
      if (term.contains("mode")) {
        const json& m = as_array(term.at("mode"), at(ep, "mode"));
        if (m.size() != static_cast<std::size_t>(n)) throw ConfigError(at(ep, "mode"), "mode needs dim entries");
        for (std::size_t j = 0; j < m.size(); ++j) mode[j] = as_int(m[j], at(at(ep, "mode"), j));
        if (radius >= 0 && sup_norm(mode) > radius) {
          throw ConfigError(at(ep, "mode"), "mode outside the declared flux radius");
        }
      }
      const double re = term.contains("re") ? as_double(term.at("re"), at(ep, "re")) : 0.0;
      const double im = term.contains("im") ? as_double(term.at("im"), at(ep, "im")) : 0.0;
      out.add_term(mode, index, {re, im});
    }
  }
  double scale = 1.0;
  for (const auto& [key, c] : out.terms()) scale = std::max(scale, std::abs(c));
  if (out.closedness_defect() > 1e-12 * scale) throw ConfigError(base, "flux is not closed");
  return out;
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  const json& manifold = require(doc, "manifold", "");
  if (!manifold.is_object()) throw ConfigError("/manifold", "expected an object");
  const int n = as_int(require(manifold, "dim", "/manifold"), "/manifold/dim");
  if (n < 1 || n > 8) throw ConfigError("/manifold/dim", "dim must lie in 1..8");
  RunConfig cfg{parse_metric(manifold, n), parse_bundle(doc, n), FluxForm(n)};
  if (doc.contains("flux")) cfg.flux = parse_flux(doc.at("flux"), n, "/flux");
  if (doc.contains("truncation")) {
    cfg.truncation = as_int(doc.at("truncation"), "/truncation");
    if (cfg.truncation < 0) throw ConfigError("/truncation", "truncation must be non-negative");
  }
  if (doc.contains("parameters")) {
    if (!doc.at("parameters").is_object()) throw ConfigError("/parameters", "expected an object");
    cfg.parameters = doc.at("parameters");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

double param_double(const RunConfig& cfg, const std::string& key, double fallback) {
  return cfg.parameters.contains(key) ? as_double(cfg.parameters.at(key), "/parameters/" + key) : fallback;
}

int param_int(const RunConfig& cfg, const std::string& key, int fallback) {
  return cfg.parameters.contains(key) ? as_int(cfg.parameters.at(key), "/parameters/" + key) : fallback;
}

bool param_bool(const RunConfig& cfg, const std::string& key, bool fallback) {
  if (!cfg.parameters.contains(key)) return fallback;
  const json& v = cfg.parameters.at(key);
  if (!v.is_boolean()) throw ConfigError("/parameters/" + key, "expected a boolean");
  return v.get<bool>();
}

std::string param_string(const RunConfig& cfg, const std::string& key, const std::string& fallback) {
  if (!cfg.parameters.contains(key)) return fallback;
  const json& v = cfg.parameters.at(key);
  if (!v.is_string()) throw ConfigError("/parameters/" + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> param_doubles(const RunConfig& cfg, const std::string& key, const std::vector<double>& fallback) {
  if (!cfg.parameters.contains(key)) return fallback;
  const std::string ptr = "/parameters/" + key;
  const json& v = as_array(cfg.parameters.at(key), ptr);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], at(ptr, i)));
  return out;
}

cplx param_complex(const RunConfig& cfg, const std::string& key, cplx fallback) {
  return cfg.parameters.contains(key) ? as_complex(cfg.parameters.at(key), "/parameters/" + key) : fallback;
}

}  // namespace tsig::cli
