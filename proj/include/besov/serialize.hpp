#pragma once

// JSON grammar for weights, regions, test functions and reports.

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <string>

#include "besov/carleson.hpp"
#include "besov/classes.hpp"
#include "besov/geometry.hpp"
#include "besov/kernels.hpp"
#include "besov/weights.hpp"

namespace besov {

using Json = nlohmann::ordered_json;

namespace json_detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InputError(where + ": unknown key '" + it.key() + "'");
  }
}

inline const Json& need(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  return j.get<double>();
}

inline double number(const Json& j, const char* key, const std::string& where) {
  return number(need(j, key, where), where + "." + key);
}

inline double number_or(const Json& j, const char* key, double dflt, const std::string& where) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : dflt;
}

inline std::uint64_t count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    throw InputError(where + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::uint64_t count_or(const Json& j, const char* key, std::uint64_t dflt, const std::string& where) {
  return j.contains(key) ? count(j.at(key), where + "." + key) : dflt;
}

inline std::string string(const Json& j, const std::string& where) {
  if (!j.is_string()) throw InputError(where + ": expected a string");
  return j.get<std::string>();
}

inline bool boolean(const Json& j, const std::string& where) {
  if (!j.is_boolean()) throw InputError(where + ": expected true or false");
  return j.get<bool>();
}

inline std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

/// Non-finite doubles become strings so that no value is silently nulled.
inline Json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

}  // namespace json_detail

// ---- complex numbers and points: a coordinate is a number or [re, im] ----

inline Json to_json(cplx c) {
  if (c.imag() == 0.0) return json_detail::num(c.real());
  return Json::array({json_detail::num(c.real()), json_detail::num(c.imag())});
}

inline cplx complex_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2)
    return {json_detail::number(j[0], where + "[0]"), json_detail::number(j[1], where + "[1]")};
  throw InputError(where + ": expected a number or [re, im]");
}

inline Json to_json(const Point& z) {
  Json a = Json::array();
  for (std::size_t i = 0; i < z.dim(); ++i) a.push_back(to_json(z[i]));
  return a;
}

inline Point point_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a nonempty array of coordinates");
  if (j.size() > kMaxDim) throw InputError(where + ": dimension exceeds " + std::to_string(kMaxDim));
  Point z(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) z[i] = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return z;
}

// ---- regions ----

inline Json to_json(const Region& r) {
  Json j;
  j["kind"] = region_kind(r);
  j[std::holds_alternative<Tent>(r) ? "zeta" : "center"] = to_json(region_anchor(r));
  j["radius"] = region_radius(r);
  return j;
}

inline Region region_from_json(const Json& j, const std::string& where) {
  using namespace json_detail;
  const std::string kind = string(need(j, "kind", where), where + ".kind");
  if (kind == "tent") {
    check_keys(j, {"kind", "zeta", "radius"}, where);
    return Tent::make(point_from_json(need(j, "zeta", where), where + ".zeta"), number(j, "radius", where));
  }
  check_keys(j, {"kind", "center", "radius"}, where);
  const Point c = point_from_json(need(j, "center", where), where + ".center");
  const double R = number(j, "radius", where);
  if (kind == "pseudo_ball") return PseudoBall::make(c, R);
  if (kind == "polydisk") return Polydisk::make(c, R);
  if (kind == "boundary_cap") return BoundaryCap::make(c, R);
  throw InputError(where + ".kind: unknown region kind '" + kind + "'");
}

// ---- weights ----

inline Json to_json(const BoundaryWeight& b) {
  Json j;
  if (b.kind == BoundaryWeight::Kind::Constant) {
    j["kind"] = "constant";
    j["value"] = b.value;
  } else {
    j["kind"] = "power_distance";
    j["center"] = to_json(Point::from_span(b.center));
    j["beta"] = b.beta;
  }
  return j;
}

inline BoundaryWeight boundary_weight_from_json(const Json& j, const std::string& where) {
  using namespace json_detail;
  const std::string kind = string(need(j, "kind", where), where + ".kind");
  BoundaryWeight b;
  if (kind == "constant") {
    check_keys(j, {"kind", "value"}, where);
    b.value = number_or(j, "value", 1.0, where);
    if (!(b.value > 0.0)) throw InputError(where + ".value: boundary weight must be positive");
    return b;
  }
  if (kind == "power_distance") {
    check_keys(j, {"kind", "center", "beta"}, where);
    b.kind = BoundaryWeight::Kind::PowerDistance;
    const SpherePoint c(point_from_json(need(j, "center", where), where + ".center"));
    b.center.assign(c.point().coords().begin(), c.point().coords().end());
    b.beta = number(j, "beta", where);
    return b;
  }
  throw InputError(where + ".kind: unknown boundary weight kind '" + kind + "'");
}

inline Json to_json(const Weight& w) {
  Json j;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, detail::ConstantNode>) {
          j["family"] = "constant";
          j["c"] = n.c;
        } else if constexpr (std::is_same_v<T, detail::PowerNode>) {
          j["family"] = "power";
          j["alpha"] = n.alpha;
        } else if constexpr (std::is_same_v<T, detail::PhiNode>) {
          j["family"] = "phi";
          j["breaks"] = n.phi.breaks;
          j["alphas"] = n.phi.alphas;
          j["increasing"] = n.phi.increasing;
        } else if constexpr (std::is_same_v<T, detail::InducedNode>) {
          j["family"] = "induced";
          j["boundary"] = to_json(n.boundary);
          j["aperture"] = n.aperture;
          j["inner_samples"] = n.inner_samples;
          j["inner_seed"] = n.inner_seed;
        } else if constexpr (std::is_same_v<T, detail::LiftedNode>) {
          j["family"] = "lifted";
          j["base"] = to_json(*n.base);
        } else if constexpr (std::is_same_v<T, detail::RegularizedNode>) {
          j["family"] = "regularized";
          j["eps"] = n.eps;
          j["base"] = to_json(*n.base);
          j["inner_samples"] = n.inner_samples;
          j["inner_seed"] = n.inner_seed;
        } else if constexpr (std::is_same_v<T, detail::ProductNode>) {
          j["family"] = "product";
          j["factors"] = Json::array({to_json(*n.a), to_json(*n.b)});
        } else {
          j["family"] = "pow";
          j["base"] = to_json(*n.base);
          j["q"] = n.q;
        }
      },
      w.node());
  return j;
}

inline Weight weight_from_json(const Json& j, const std::string& where = "weight") {
  using namespace json_detail;
  const std::string fam = string(need(j, "family", where), where + ".family");
  if (fam == "constant") {
    check_keys(j, {"family", "c"}, where);
    return Weight::constant(number_or(j, "c", 1.0, where));
  }
  if (fam == "power") {
    check_keys(j, {"family", "alpha"}, where);
    return Weight::power(number(j, "alpha", where));
  }
  if (fam == "phi") {
    check_keys(j, {"family", "breaks", "alphas", "increasing"}, where);
    PhiSpec spec;
    spec.breaks = j.contains("breaks") ? numbers(j["breaks"], where + ".breaks") : std::vector<double>{0.0};
    spec.alphas = numbers(need(j, "alphas", where), where + ".alphas");
    if (j.contains("increasing")) spec.increasing = boolean(j["increasing"], where + ".increasing");
    else spec.increasing = spec.alphas.front() >= 0.0;
    return Weight::phi(spec);
  }
  if (fam == "induced") {
    check_keys(j, {"family", "boundary", "aperture", "inner_samples", "inner_seed"}, where);
    return Weight::induced(boundary_weight_from_json(need(j, "boundary", where), where + ".boundary"),
                           number(j, "aperture", where), count_or(j, "inner_samples", kDefaultInnerSamples, where),
                           count_or(j, "inner_seed", 0, where));
  }
  if (fam == "lifted") {
    check_keys(j, {"family", "base"}, where);
    return Weight::lifted(weight_from_json(need(j, "base", where), where + ".base"));
  }
  if (fam == "regularized") {
    check_keys(j, {"family", "base", "eps", "inner_samples", "inner_seed"}, where);
    return Weight::regularized(weight_from_json(need(j, "base", where), where + ".base"), number(j, "eps", where),
                               count_or(j, "inner_samples", kDefaultInnerSamples, where),
                               count_or(j, "inner_seed", 0, where));
  }
  if (fam == "product") {
    check_keys(j, {"family", "factors"}, where);
    const Json& f = need(j, "factors", where);
    if (!f.is_array() || f.size() < 2) throw InputError(where + ".factors: expected at least two weights");
    Weight w = weight_from_json(f[0], where + ".factors[0]");
    for (std::size_t i = 1; i < f.size(); ++i)
      w = Weight::product(w, weight_from_json(f[i], where + ".factors[" + std::to_string(i) + "]"));
    return w;
  }
  if (fam == "pow") {
    check_keys(j, {"family", "base", "q"}, where);
    return Weight::pow(weight_from_json(need(j, "base", where), where + ".base"), number(j, "q", where));
  }
  throw InputError(where + ".family: unknown weight family '" + fam + "'");
}

// ---- test functions ----

inline Json to_json(const TestFunction& f) {
  Json j;
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, HoloPolynomial>) {
          j["kind"] = "polynomial";
          j["n"] = g.dim();
          Json terms = Json::array();
          for (const auto& [m, c] : g.terms()) terms.push_back({{"index", m}, {"coef", to_json(c)}});
          j["terms"] = terms;
        } else if constexpr (std::is_same_v<T, KernelFn>) {
          j["kind"] = "kernel";
          j["pole"] = to_json(g.pole);
          j["b"] = g.b;
          j["a"] = g.a;
        } else if constexpr (std::is_same_v<T, IndicatorFn>) {
          j["kind"] = "indicator";
          j["region"] = to_json(g.region);
        } else {
          j["kind"] = "constant";
          j["c"] = to_json(g.c);
        }
      },
      f);
  return j;
}

inline TestFunction test_function_from_json(const Json& j, const std::string& where = "function") {
  using namespace json_detail;
  const std::string kind = string(need(j, "kind", where), where + ".kind");
  if (kind == "constant") {
    check_keys(j, {"kind", "c"}, where);
    return ConstantFn{j.contains("c") ? complex_from_json(j["c"], where + ".c") : cplx(1.0)};
  }
  if (kind == "polynomial") {
    check_keys(j, {"kind", "n", "terms"}, where);
    const std::uint64_t n = count(need(j, "n", where), where + ".n");
    if (n < 1 || n >= kMaxDim) throw InputError(where + ".n: dimension out of range");
    HoloPolynomial poly(n);
    const Json& terms = need(j, "terms", where);
    if (!terms.is_array()) throw InputError(where + ".terms: expected an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string w = where + ".terms[" + std::to_string(i) + "]";
      check_keys(terms[i], {"index", "coef"}, w);
      const Json& idx = need(terms[i], "index", w);
      if (!idx.is_array()) throw InputError(w + ".index: expected an array of integers");
      MultiIndex m;
      for (std::size_t k = 0; k < idx.size(); ++k)
        m.push_back(static_cast<int>(count(idx[k], w + ".index[" + std::to_string(k) + "]")));
      poly.add_term(m, terms[i].contains("coef") ? complex_from_json(terms[i]["coef"], w + ".coef") : cplx(1.0));
    }
    return poly;
  }
  if (kind == "kernel") {
    check_keys(j, {"kind", "pole", "b", "a"}, where);
    return KernelFn::make(point_from_json(need(j, "pole", where), where + ".pole"), number(j, "b", where),
                          number_or(j, "a", 0.0, where));
  }
  if (kind == "indicator") {
    check_keys(j, {"kind", "region"}, where);
    return IndicatorFn{region_from_json(need(j, "region", where), where + ".region")};
  }
  throw InputError(where + ".kind: unknown test function kind '" + kind + "'");
}

// ---- family specs ----

inline Json to_json(const FamilySpec& f) {
  return {{"shells", f.shells},
          {"directions", f.directions},
          {"k_min", f.k_min},
          {"k_max", f.k_max},
          {"random_regions", f.random_regions},
          {"cutoff_levels", f.cutoff_levels},
          {"tau_base", f.tau_base},
          {"tau_steps", f.tau_steps},
          {"tau_depth", f.tau_depth},
          {"divergence_threshold", f.divergence_threshold},
          {"stability_threshold", f.stability_threshold}};
}

/// Overrides the fields present in `j`; `n` is supplied by the caller.
inline FamilySpec family_from_json(const Json& j, FamilySpec base, const std::string& where = "family") {
  using namespace json_detail;
  check_keys(j,
             {"shells", "directions", "k_min", "k_max", "random_regions", "cutoff_levels", "tau_base", "tau_steps",
              "tau_depth", "divergence_threshold", "stability_threshold"},
             where);
  auto integer = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw InputError(where + "." + key + ": expected an integer");
    out = j[key].get<int>();
  };
  if (j.contains("shells")) base.shells = numbers(j["shells"], where + ".shells");
  if (j.contains("directions")) base.directions = count(j["directions"], where + ".directions");
  integer("k_min", base.k_min);
  integer("k_max", base.k_max);
  if (j.contains("random_regions")) base.random_regions = count(j["random_regions"], where + ".random_regions");
  if (j.contains("cutoff_levels")) {
    base.cutoff_levels.clear();
    for (double c : numbers(j["cutoff_levels"], where + ".cutoff_levels")) {
      if (c != std::floor(c) || c < 1) throw InputError(where + ".cutoff_levels: expected positive integers");
      base.cutoff_levels.push_back(static_cast<int>(c));
    }
  }
  integer("tau_base", base.tau_base);
  integer("tau_steps", base.tau_steps);
  integer("tau_depth", base.tau_depth);
  base.divergence_threshold = number_or(j, "divergence_threshold", base.divergence_threshold, where);
  base.stability_threshold = number_or(j, "stability_threshold", base.stability_threshold, where);
  return base;
}

// ---- estimates and reports ----

inline Json to_json(const Estimate& e) {
  Json j{{"value", json_detail::num(e.value)},
         {"stderr", json_detail::num(e.std_error)},
         {"samples", e.samples},
         {"seed", e.seed},
         {"exact", e.exact}};
  if (e.acceptance < 1.0) j["acceptance"] = e.acceptance;
  if (!e.flags.empty()) j["flags"] = e.flags;
  return j;
}

inline Json to_json(const ComplexEstimate& e) {
  Json j{{"value", Json::array({json_detail::num(e.value.real()), json_detail::num(e.value.imag())})},
         {"stderr", json_detail::num(e.std_error)},
         {"samples", e.samples},
         {"seed", e.seed},
         {"exact", false}};
  if (e.acceptance < 1.0) j["acceptance"] = e.acceptance;
  if (!e.flags.empty()) j["flags"] = e.flags;
  return j;
}

/// A quantity computed exactly from exact inputs.
inline Json exact_json(double x) { return to_json(Estimate::exact_value(x)); }

/// A quantity derived from estimates (fit slopes, ratios of maxima) without a
/// propagated error.
inline Json derived_json(double x) {
  return {{"value", json_detail::num(x)}, {"stderr", nullptr}, {"exact", false}, {"derived", true}};
}

inline std::string membership_label(Verdict v, const char* cls) {
  switch (v) {
    case Verdict::Supported: return std::string("consistent with ") + cls;
    case Verdict::RefutedAtScale: return std::string("not ") + cls;
    default: return std::string("undetermined");
  }
}

inline Json to_json(const ClassReport& r, bool with_regions = true) {
  Json j;
  j["p"] = r.p;
  j["n"] = r.n;
  j["ap_verdict"] = to_string(r.ap_verdict);
  j["ap_membership"] = membership_label(r.ap_verdict, "A_p");
  j["bp_verdict"] = to_string(r.bp_verdict);
  j["bp_membership"] = membership_label(r.bp_verdict, "B_p");
  j["ap_sup"] = to_json(r.ap_sup);
  j["bp_sup"] = to_json(r.bp_sup);
  j["ap_grid_max"] = derived_json(r.ap_grid_max);
  j["ap_random_max"] = derived_json(r.ap_random_max);
  j["bp_grid_max"] = derived_json(r.bp_grid_max);
  j["bp_random_max"] = derived_json(r.bp_random_max);
  j["ap_radius_ratio"] = derived_json(r.ap_radius_ratio);
  j["bp_radius_ratio"] = derived_json(r.bp_radius_ratio);
  j["divergence_growth"] = derived_json(r.divergence_growth);
  j["tau_fit"] = derived_json(r.tau_fit);
  j["tau_fit_min"] = derived_json(r.tau_lo);
  j["tau_fit_max"] = derived_json(r.tau_hi);
  j["tau_all_balls_fit"] = derived_json(r.tau_all_balls_fit);
  j["flags"] = {{"tau_at_least_n_plus_1", r.tau_at_least_n_plus_1},
                {"tau_within_bp_bound", r.tau_within_bp_bound},
                {"tau_bound_applicable", r.tau_bound_applicable}};
  Json trace = Json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"radius", t.radius}, {"cutoff", t.cutoff}, {"bracket", to_json(t.bracket)}});
  j["bracket_trace"] = trace;
  if (with_regions) {
    Json regions = Json::array();
    for (const auto& g : r.regions)
      regions.push_back({{"kind", g.kind},
                         {"center", to_json(g.center)},
                         {"radius", g.radius},
                         {"touches_boundary", g.touches},
                         {"random", g.random},
                         {"bracket", to_json(g.bracket)}});
    j["regions"] = regions;
  }
  return j;
}

inline Json to_json(const EmbedResult& r) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["lower_bound"] = to_json(r.lower_bound);
  j["argmax"] = r.argmax;
  Json terms = Json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"function", t.label},
                     {"ratio", to_json(t.ratio)},
                     {"numerator", exact_json(t.numerator)},
                     {"denominator", to_json(t.denominator)}});
  j["terms"] = terms;
  return j;
}

inline Json to_json(const EmbeddingReport& r) {
  Json j;
  j["n"] = r.n;
  j["s"] = r.s;
  j["p"] = r.p;
  j["atoms"] = r.atoms;
  j["total_mass"] = exact_json(r.total_mass);
  j["tent_exponent"] = r.tent_exponent;
  j["tent_exponent_source"] = r.tent_exponent_source;
  j["tent_constant"] = exact_json(r.tent.value);
  j["tent_argmax"] = {{"center", to_json(r.tent.center)}, {"radius", r.tent.radius}};
  j["kernel_iii_lowerbound"] = to_json(r.kernel_iii.lower_bound);
  j["kernel_ii_lowerbound"] = to_json(r.kernel_ii.lower_bound);
  j["besov_i_lowerbound"] = to_json(r.besov_i.lower_bound);
  j["consistency_band"] = {{"kernel_iii_over_kernel_ii", to_json(r.ratio_iii_ii)},
                           {"kernel_iii_over_besov_i", to_json(r.ratio_iii_i)}};
  j["necessity"] = {{"tent_constant_root", exact_json(r.necessity.lhs)},
                    {"factor", derived_json(r.necessity.factor)},
                    {"kernel_iii", derived_json(r.necessity.kernel_iii)},
                    {"holds", r.necessity.holds}};
  j["hypotheses"] = {{"bp_verdict", to_string(r.weight_class.bp_verdict)},
                     {"bp_membership", membership_label(r.weight_class.bp_verdict, "B_p")},
                     {"tau_fit", derived_json(r.weight_class.tau_fit)},
                     {"tau", derived_json(r.tau)},
                     {"d_tau_plus_1_fit", r.weight_class.tau_at_least_n_plus_1},
                     {"tau_minus_sp", derived_json(r.tau - r.s * r.p)},
                     {"range_0_le_tau_minus_sp_lt_1", r.range_theorem_41},
                     {"range_tau_lt_1_plus_sp", r.range_theorem_d},
                     {"range_statements_disagree", r.range_statements_disagree},
                     {"tau_restriction_waived", r.tau_restriction_waived},
                     {"bp_supported", r.bp_supported}};
  j["mode_domination"] = r.mode_domination;
  j["claims"] = "lower bounds only";
  j["modes"] = {{"iii", to_json(r.kernel_iii)}, {"ii", to_json(r.kernel_ii)}, {"i", to_json(r.besov_i)}};
  j["weight_class"] = to_json(r.weight_class, false);
  return j;
}

/// Flattens scalar fields of nested objects into "a.b.c,value" rows; arrays
/// are skipped (they belong to the structured format).
inline void flatten_scalars(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_scalars(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    return;
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else if (!j.is_null()) {
    out.emplace_back(prefix, j.dump());
  }
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string to_csv(const Json& doc) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten_scalars(doc, "", rows);
  std::string out = "field,value\n";
  for (const auto& [k, v] : rows) out += csv_quote(k) + "," + csv_quote(v) + "\n";
  return out;
}

}  // namespace besov
