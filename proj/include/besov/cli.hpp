#pragma once

// Batch front end: configuration parsing, command pipelines and report
// documents. Report bodies are a pure function of the configuration and the
// toolkit version; the generation time lives only in the header.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "besov/carleson.hpp"
#include "besov/classes.hpp"
#include "besov/geometry.hpp"
#include "besov/kernels.hpp"
#include "besov/sampling.hpp"
#include "besov/serialize.hpp"
#include "besov/weights.hpp"

namespace besov {

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds{"geom-check", "weight-certify", "besov-norm", "carleson-test",
                                             "full-suite"};
  return cmds;
}

inline bool is_known_command(const std::string& c) {
  const auto& k = known_commands();
  return std::find(k.begin(), k.end(), c) != k.end();
}

enum class OutputFormat { Json, Csv };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  throw InputError("format must be 'json' or 'csv', got '" + s + "'");
}

struct RunConfig {
  std::string command;
  std::size_t n = 1;
  double p = 2.0;
  double s = 0.5;
  std::optional<int> k;
  Json weight_spec = Json{{"family", "constant"}, {"c", 1.0}};
  Weight weight = Weight::constant();
  std::string preset;
  std::string measure_path;
  std::uint64_t seed = 0;
  std::uint64_t samples = kDefaultSamples;
  FamilySpec family;
  bool family_given = false;
  std::vector<TestFunction> functions;
  Json functions_spec = Json::array();
  std::size_t clusters = 4;
  std::string out_path;
  OutputFormat format = OutputFormat::Json;
  /// The document as parsed, echoed into reports.
  Json raw = Json::object();

  SamplerConfig sampler() const { return {seed, samples, 0.0}; }
};

namespace cli_detail {

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') ++line, col = 1;
    else ++col;
  }
  return {line, col};
}

inline Json parse_document(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // e.byte is one past the offending character.
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    const auto pos = what.find("parse error");
    throw InputError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": " + (pos == std::string::npos ? what : what.substr(pos)));
  }
}

}  // namespace cli_detail

/// Validates every parameter against the preconditions of the command's
/// pipeline. Relative measure paths resolve against `base_dir`.
inline RunConfig parse_config(const std::string& text, const std::string& base_dir = "") {
  using namespace json_detail;
  const Json doc = cli_detail::parse_document(text);
  check_keys(doc,
             {"command", "n", "p", "s", "k", "weight", "preset", "measure", "seed", "samples", "family", "functions",
              "clusters", "out", "format"},
             "config");
  RunConfig cfg;
  cfg.raw = doc;
  if (doc.contains("command")) {
    cfg.command = string(doc["command"], "config.command");
    if (!is_known_command(cfg.command)) throw InputError("config.command: unknown command '" + cfg.command + "'");
  }

  if (doc.contains("preset")) {
    cfg.preset = string(doc["preset"], "config.preset");
    if (cfg.preset != remark_n1_preset().name) throw InputError("config.preset: unknown preset '" + cfg.preset + "'");
    const Preset pr = remark_n1_preset();
    cfg.n = pr.n;
    cfg.p = pr.p;
    cfg.s = pr.s;
    cfg.weight = pr.weight;
    cfg.weight_spec = to_json(pr.weight);
  }
  bool n_given = false;
  if (doc.contains("n")) {
    const std::uint64_t n = count(doc["n"], "config.n");
    if (n < 1 || n + 1 > kMaxDim) throw InputError("n must lie in [1, " + std::to_string(kMaxDim - 1) + "]");
    cfg.n = n;
    n_given = true;
  }
  cfg.p = number_or(doc, "p", cfg.p, "config");
  require_p(cfg.p);
  cfg.s = number_or(doc, "s", cfg.s, "config");
  if (!(cfg.s > 0.0) || !std::isfinite(cfg.s)) throw InputError("s > 0 required");
  if (doc.contains("k")) {
    if (!doc["k"].is_number_integer()) throw InputError("config.k: expected an integer");
    cfg.k = doc["k"].get<int>();
  }
  if (cfg.k && !(*cfg.k > cfg.s)) throw InputError("k > s required (k = " + std::to_string(*cfg.k) + ")");
  if (doc.contains("weight")) {
    cfg.weight_spec = doc["weight"];
    cfg.weight = weight_from_json(doc["weight"], "config.weight");
  }
  cfg.seed = count_or(doc, "seed", 0, "config");
  cfg.samples = count_or(doc, "samples", kDefaultSamples, "config");
  if (cfg.samples < 1) throw InputError("samples >= 1 required");

  if (doc.contains("measure")) {
    std::filesystem::path mp(string(doc["measure"], "config.measure"));
    if (mp.is_relative() && !base_dir.empty()) mp = std::filesystem::path(base_dir) / mp;
    cfg.measure_path = mp.lexically_normal().string();
  }
  if (doc.contains("clusters")) {
    cfg.clusters = count(doc["clusters"], "config.clusters");
    if (cfg.clusters < 1) throw InputError("clusters >= 1 required");
  }

  cfg.family.n = cfg.n;
  if (doc.contains("family")) {
    cfg.family = family_from_json(doc["family"], cfg.family, "config.family");
    cfg.family_given = true;
  }
  cfg.family.n = cfg.n;
  try {
    cfg.family.validate();
  } catch (const ConfigError& e) {
    throw InputError(std::string("config.family: ") + e.what());
  }

  if (doc.contains("functions")) {
    const Json& fs = doc["functions"];
    if (!fs.is_array()) throw InputError("config.functions: expected an array");
    cfg.functions_spec = fs;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string where = "config.functions[" + std::to_string(i) + "]";
      cfg.functions.push_back(test_function_from_json(fs[i], where));
      const std::size_t d = test_function_dim(cfg.functions.back(), 0);
      if (d != 0 && d != cfg.n) {
        if (n_given) throw InputError(where + ": dimension " + std::to_string(d) + " does not match n");
        throw InputError(where + ": dimension " + std::to_string(d) + " needs an explicit matching n");
      }
      if (!is_holomorphic(cfg.functions.back())) throw InputError(where + ": Besov norms need holomorphic functions");
    }
  }

  if (doc.contains("out")) cfg.out_path = string(doc["out"], "config.out");
  if (doc.contains("format")) cfg.format = parse_format(string(doc["format"], "config.format"));

  if (cfg.weight.is_lifted()) throw InputError("config.weight: lifted weights live on S^{n+1} and cannot drive ball pipelines");
  return cfg;
}

inline RunConfig read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

inline Json effective_config(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["n"] = c.n;
  j["p"] = c.p;
  j["s"] = c.s;
  if (c.k) j["k"] = *c.k;
  j["weight"] = to_json(c.weight);
  if (!c.preset.empty()) j["preset"] = c.preset;
  if (!c.measure_path.empty()) j["measure"] = c.measure_path;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["family"] = to_json(c.family);
  j["functions"] = c.functions_spec;
  j["clusters"] = c.clusters;
  j["format"] = c.format == OutputFormat::Json ? "json" : "csv";
  return j;
}

// ---- pipelines ----

namespace cli_detail {

inline Point uniform_ball_point(std::size_t n, CounterRng& rng, double max_radius = 1.0) {
  const Point dir = sample_sphere(n, rng);
  const double r = max_radius * std::pow(rng.uniform(), 1.0 / (2.0 * static_cast<double>(n)));
  return r * dir;
}

/// Smallest λ with y ∈ P(z, λR), from the frame coordinates of y.
inline double polydisk_gauge(const Polydisk& P, const Point& y) {
  const Point xi = P.frame.to_frame(y);
  const double h = defect(P.center);
  const double d = std::abs(cplx(P.center.norm(), 0.0) - xi[0]);
  const double x = (-std::sqrt(h) + std::sqrt(h + 4.0 * d)) / 2.0;
  double lambda = x * x / P.radius;
  for (std::size_t i = 1; i < xi.dim(); ++i) lambda = std::max(lambda, std::norm(xi[i]) / P.radius);
  return lambda;
}

}  // namespace cli_detail

struct SandwichConstants {
  /// Smallest dyadic C with every sampled point of P(z, R/C) ∩ B inside U(z, R).
  double inner = 0.0;
  /// Smallest λ with every sampled point of U(z, R) inside P(z, λR).
  double outer = 0.0;
};

inline SandwichConstants sandwich_constants(const Point& z, double R, std::uint64_t samples, std::uint64_t seed) {
  SandwichConstants out;
  const RegionSampler us(PseudoBall::make(z, R));
  const Polydisk P = Polydisk::make(z, R);
  for (std::uint64_t i = 0; i < samples; ++i) {
    CounterRng rng(seed, hash_name("sandwich-outer"), i);
    const BallSample b = us.draw(rng);
    if (b.weight > 0.0) out.outer = std::max(out.outer, cli_detail::polydisk_gauge(P, b.point));
  }
  for (double C = 1.0; C <= 4096.0; C *= 2.0) {
    const Polydisk Q = Polydisk::make(z, R / C);
    bool inside = true;
    for (std::uint64_t i = 0; i < samples && inside; ++i) {
      CounterRng rng(seed, hash_name("sandwich-inner"), i);
      const Point y = sample_polydisk(Q, rng);
      if (y.norm_sq() < 1.0 && !(rho(z, y) < R)) inside = false;
    }
    if (inside) {
      out.inner = C;
      return out;
    }
  }
  out.inner = HUGE_VAL;
  return out;
}

inline Json run_geom_check(const RunConfig& c) {
  const std::size_t n = c.n;
  const std::uint64_t pairs = std::min<std::uint64_t>(c.samples, 20000);
  const std::uint64_t seed = derive_seed(c.seed, hash_name("geom-check"), n);
  double inv = 0.0, jac = 0.0, sym = 0.0, fac_lo = HUGE_VAL, fac_hi = 0.0;
  for (std::uint64_t i = 0; i < pairs; ++i) {
    CounterRng rng(seed, 1, i);
    const Point a = cli_detail::uniform_ball_point(n, rng, 0.999);
    const Point z = cli_detail::uniform_ball_point(n, rng);
    const Point back = mobius(a, mobius(a, z));
    inv = std::max(inv, std::sqrt(dist_sq(back, z)));
    jac = std::max(jac, std::abs(mobius_jacobian(a, mobius(a, z)) * mobius_jacobian(a, z) - 1.0));
    sym = std::max(sym, std::abs(rho(a, z) - rho(z, a)));
    const double f = std::abs(1.0 - inner(a, z)) * mobius(a, z).norm_sq();
    if (f > 0.0) {
      const double q = rho(a, z) / f;
      fac_lo = std::min(fac_lo, q);
      fac_hi = std::max(fac_hi, q);
    }
  }
  Json j;
  j["pairs"] = pairs;
  j["mobius_involution_max_residual"] = exact_json(inv);
  j["jacobian_product_max_residual"] = exact_json(jac);
  j["rho_symmetry_max_residual"] = exact_json(sym);
  j["rho_factorization_ratio"] = {{"min", exact_json(fac_lo)}, {"max", exact_json(fac_hi)}};
  j["identities_hold"] = inv < 1e-9 && jac < 1e-8 && sym == 0.0;

  const SamplerConfig cfg = c.sampler();
  Json origin = Json::array();
  for (double R : {0.25, 0.5}) {
    const Region U = PseudoBall::make(Point(n), R);
    const Estimate v = mc_integrate(U, [](const Point&) { return 1.0; },
                                    cfg.with_seed(derive_seed(c.seed, hash_name("origin-volume"), std::bit_cast<std::uint64_t>(R))));
    const double exact = pseudo_ball_volume_at_origin(n, R);
    origin.push_back({{"radius", R},
                      {"estimate", to_json(v)},
                      {"exact", exact_json(exact)},
                      {"within_3_stderr", std::abs(v.value - exact) <= 3.0 * v.std_error + 1e-15}});
  }
  j["origin_volume"] = origin;

  Json grid = Json::array();
  double vr_lo = HUGE_VAL, vr_hi = 0.0, c_max = 0.0;
  const std::uint64_t per = std::max<std::uint64_t>(1, c.samples / 10);
  for (double r : {0.0, 0.5, 0.9, 0.99, 0.999}) {
    for (int k : {2, 4, 6, 8}) {
      const double R = std::ldexp(1.0, -k);
      const Point z = Point::axis(n, r);
      const std::uint64_t sd = derive_seed(c.seed, hash_point(z), static_cast<std::uint64_t>(k));
      const Estimate v = mc_integrate(PseudoBall::make(z, R), [](const Point&) { return 1.0; }, cfg.with_seed(sd));
      const double ratio = v.value / pseudo_ball_volume_model(z, R);
      vr_lo = std::min(vr_lo, ratio);
      vr_hi = std::max(vr_hi, ratio);
      const SandwichConstants sc = sandwich_constants(z, R, per, sd);
      c_max = std::max({c_max, sc.inner, sc.outer});
      grid.push_back({{"center_modulus", r},
                      {"radius", R},
                      {"volume", to_json(v)},
                      {"volume_over_model", derived_json(ratio)},
                      {"inner_constant", derived_json(sc.inner)},
                      {"outer_constant", derived_json(sc.outer)}});
    }
  }
  j["volume_grid"] = grid;
  j["volume_over_model_band"] = {{"min", derived_json(vr_lo)}, {"max", derived_json(vr_hi)}};
  j["sandwich_constant"] = derived_json(c_max);
  return j;
}

inline Json run_weight_certify(const RunConfig& c) {
  const ClassReport r = class_certify(c.weight, c.p, c.family, c.sampler());
  return to_json(r);
}

inline Json run_besov_norm(const RunConfig& c) {
  std::vector<TestFunction> fs = c.functions;
  if (fs.empty()) {
    fs.push_back(ConstantFn{1.0});
    MultiIndex m(c.n, 0);
    m[0] = 1;
    fs.push_back(HoloPolynomial::monomial(c.n, m));
  }
  const int k = c.k ? *c.k : default_besov_k(c.s);
  Json out = Json::array();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const SamplerConfig cfg = c.sampler().with_seed(derive_seed(c.seed, hash_name("besov-norm"), i));
    out.push_back({{"function", to_json(fs[i])}, {"norm", to_json(besov_norm(fs[i], c.s, c.p, k, c.weight, cfg, c.n))}});
  }
  return {{"k", k}, {"k_defaulted", !c.k.has_value()}, {"norms", out}};
}

inline DiscreteMeasure load_measure(const RunConfig& c) {
  if (c.measure_path.empty()) return DiscreteMeasure::boundary_circle(c.n, 3);
  DiscreteMeasure mu = read_measure_csv(c.measure_path);
  if (mu.dim() != c.n)
    throw InputError("measure dimension " + std::to_string(mu.dim()) + " does not match n = " + std::to_string(c.n));
  return mu;
}

inline Json run_carleson(const RunConfig& c, const DiscreteMeasure& mu) {
  ConsistencyOptions opt = light_consistency_options(c.n);
  if (c.family_given) opt.weight_family = c.family;
  opt.clusters = c.clusters;
  opt.waive_tau_restriction = !c.preset.empty() && remark_n1_preset().waive_tau_restriction;
  const EmbeddingReport r = consistency_report(mu, c.weight, c.s, c.p, c.sampler(), opt);
  Json j = to_json(r);
  j["measure"] = {{"source", c.measure_path.empty() ? std::string("default boundary circle, 8 atoms") : c.measure_path},
                  {"atoms", mu.size()},
                  {"total_mass", exact_json(mu.total_mass())}};
  if (!c.preset.empty()) j["preset"] = c.preset;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Runs the configured pipeline. Input problems (unreadable measure files,
/// mismatched dimensions) throw InputError before any sampling starts.
inline Json execute(const RunConfig& c) {
  if (!is_known_command(c.command)) throw InputError("unknown command '" + c.command + "'");
  std::optional<DiscreteMeasure> mu;
  if (c.command == "carleson-test" || c.command == "full-suite") mu = load_measure(c);

  Json body;
  body["version"] = kToolkitVersion;
  body["command"] = c.command;
  body["config"] = c.raw;
  body["effective_config"] = effective_config(c);
  body["verdict_vocabulary"] = {to_string(Verdict::Supported), to_string(Verdict::RefutedAtScale),
                                to_string(Verdict::Inconclusive)};
  auto section = [&](const char* name, auto&& fn) {
    try {
      body["results"][name] = fn();
    } catch (const DegenerateRegionError& e) {
      body["results"][name] = {{"error", e.what()}};
    }
  };
  if (c.command == "geom-check" || c.command == "full-suite") section("geom_check", [&] { return run_geom_check(c); });
  if (c.command == "weight-certify" || c.command == "full-suite")
    section("weight_certify", [&] { return run_weight_certify(c); });
  if (c.command == "besov-norm" || c.command == "full-suite") section("besov_norm", [&] { return run_besov_norm(c); });
  if (mu) section("carleson_test", [&] { return run_carleson(c, *mu); });

  Json doc;
  doc["header"] = {{"generated_at", utc_timestamp()}, {"version", kToolkitVersion}};
  doc["body"] = body;
  return doc;
}

inline std::string render_report(const Json& doc, OutputFormat format) {
  return format == OutputFormat::Json ? doc.dump(2) + "\n" : to_csv(doc);
}

inline void write_report(const std::string& text, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write output file: " + path);
  f << text;
  if (!f) throw InputError("failed writing output file: " + path);
}

}  // namespace besov
