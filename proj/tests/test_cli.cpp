#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "besov/cli.hpp"

using namespace besov;

namespace {

const std::string kData = BESOV_DATA_DIR;
const std::string kTool = BESOV_TOOL_PATH;

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("besov_test_" + name);
  std::ofstream(p) << content;
  return p;
}

int tool_status(const std::string& args) {
  const std::string cmd = kTool + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(ParseConfig, Defaults) {
  const RunConfig c = parse_config(R"({"command": "geom-check"})");
  EXPECT_EQ(c.command, "geom-check");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.samples, 100000u);
  EXPECT_EQ(c.n, 1u);
  EXPECT_EQ(c.format, OutputFormat::Json);
}

TEST(ParseConfig, PreconditionErrors) {
  EXPECT_NE(error_of(R"({"p": 1})").find("p > 1 required"), std::string::npos);
  EXPECT_NE(error_of(R"({"command": "besov-norm", "s": 1.5, "k": 1})").find("k > s"), std::string::npos);
  EXPECT_NE(error_of(R"({"s": 0})").find("s > 0 required"), std::string::npos);
  EXPECT_NE(error_of(R"({"command": "frobnicate"})").find("unknown command"), std::string::npos);
  EXPECT_NE(error_of(R"({"samples": 0})").find("samples"), std::string::npos);
  EXPECT_NE(error_of(R"({"n": 9})").find("n must lie"), std::string::npos);
}

TEST(ParseConfig, UnknownKeysRejected) {
  EXPECT_NE(error_of(R"({"seeed": 3})").find("seeed"), std::string::npos);
  EXPECT_NE(error_of(R"({"weight": {"family": "power", "alpha": 1, "beta": 2}})").find("beta"), std::string::npos);
  EXPECT_NE(error_of(R"({"family": {"k_min": 2, "kmax": 3}})").find("kmax"), std::string::npos);
}

TEST(ParseConfig, MalformedDocumentReportsPosition) {
  const std::string e = error_of("{\n  \"n\": 2,\n  \"p\": ,\n}");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
  EXPECT_NE(e.find("column"), std::string::npos) << e;
}

TEST(ParseConfig, PresetThenOverrides) {
  const RunConfig a = parse_config(R"({"preset": "remark-4.3-n1"})");
  EXPECT_EQ(a.s, 0.5);
  EXPECT_EQ(a.weight.family(), WeightFamily::Phi);
  const RunConfig b = parse_config(R"({"preset": "remark-4.3-n1", "s": 0.3})");
  EXPECT_EQ(b.s, 0.3);
  EXPECT_NE(error_of(R"({"preset": "nope"})").find("unknown preset"), std::string::npos);
}

TEST(ParseConfig, RejectsLiftedWeights) {
  EXPECT_NE(error_of(R"({"weight": {"family": "lifted", "base": {"family": "constant", "c": 1}}})").find("lifted"),
            std::string::npos);
}

TEST(ParseConfig, MeasurePathResolvesAgainstConfigDir) {
  const RunConfig c = read_config(kData + "/carleson_remark_n1.json");
  EXPECT_EQ(std::filesystem::path(c.measure_path), std::filesystem::path(kData) / "circle8.csv");
  EXPECT_THROW(read_config(kData + "/missing.json"), InputError);
}

TEST(WeightJson, RoundTripEvaluatesIdentically) {
  const std::vector<std::string> specs{
      R"({"family": "constant", "c": 2.5})",
      R"({"family": "power", "alpha": -0.5})",
      R"({"family": "phi", "breaks": [0, 0.2], "alphas": [0.5, 1], "increasing": true})",
      R"({"family": "induced", "boundary": {"kind": "power_distance", "center": [1, 0], "beta": 0.5}, "aperture": 1.5, "inner_samples": 64, "inner_seed": 3})",
      R"({"family": "regularized", "base": {"family": "power", "alpha": 0.5}, "eps": 0.1, "inner_samples": 32})",
      R"({"family": "product", "factors": [{"family": "power", "alpha": 0.5}, {"family": "constant", "c": 3}]})",
      R"({"family": "pow", "base": {"family": "power", "alpha": 0.5}, "q": -2})"};
  const Point z{cplx(0.4, 0.3), cplx(-0.2, 0.1)};
  for (const auto& s : specs) {
    const Weight w = weight_from_json(Json::parse(s));
    const Weight back = weight_from_json(to_json(w));
    EXPECT_EQ(w(z), back(z)) << s;
    EXPECT_EQ(to_json(w).dump(), to_json(back).dump()) << s;
  }
  EXPECT_THROW(weight_from_json(Json::parse(R"({"family": "exotic"})")), InputError);
  EXPECT_THROW(weight_from_json(Json::parse(R"({"family": "power"})")), InputError);
}

TEST(FunctionJson, RoundTrip) {
  const std::vector<std::string> specs{
      R"({"kind": "polynomial", "n": 2, "terms": [{"index": [1, 0], "coef": [0.5, 1]}, {"index": [0, 2], "coef": 2}]})",
      R"({"kind": "kernel", "pole": [0.5, [0, 0.2]], "b": 2, "a": 0.5})",
      R"({"kind": "constant", "c": 1})"};
  const Point z{cplx(0.1, 0.3), cplx(0.2, -0.4)};
  for (const auto& s : specs) {
    const TestFunction f = test_function_from_json(Json::parse(s));
    const TestFunction back = test_function_from_json(to_json(f));
    EXPECT_EQ(eval_test(f, z), eval_test(back, z)) << s;
  }
}

TEST(Execute, DeterministicBodies) {
  RunConfig c = parse_config(R"({"command": "full-suite", "n": 1, "samples": 500, "seed": 11,
      "family": {"shells": [0, 0.9], "directions": 1, "k_min": 2, "k_max": 4, "random_regions": 1}})");
  const Json a = execute(c);
  const Json b = execute(c);
  EXPECT_EQ(a["body"].dump(), b["body"].dump());
  EXPECT_TRUE(a["header"].contains("generated_at"));
  EXPECT_FALSE(a["body"].contains("generated_at"));
  c.seed = 12;
  EXPECT_NE(execute(c)["body"]["results"].dump(), a["body"]["results"].dump());
}

TEST(Execute, EstimatesCarryProvenance) {
  const RunConfig c = parse_config(R"({"command": "besov-norm", "samples": 2000})");
  const Json body = execute(c)["body"];
  const Json& norm = body["results"]["besov_norm"]["norms"][0]["norm"];
  for (const char* k : {"value", "stderr", "samples", "seed", "exact"}) EXPECT_TRUE(norm.contains(k)) << k;
  EXPECT_EQ(body["results"]["besov_norm"]["k"], 1);
  EXPECT_EQ(body["verdict_vocabulary"].size(), 3u);
  EXPECT_EQ(body["results"].dump().find("proved"), std::string::npos);
}

TEST(Execute, CarlesonPresetOnBundledMeasure) {
  RunConfig c = read_config(kData + "/carleson_remark_n1.json");
  c.command = "carleson-test";
  c.samples = 4000;
  const Json r = execute(c)["body"]["results"]["carleson_test"];
  for (const char* k : {"kernel_iii_lowerbound", "kernel_ii_lowerbound", "besov_i_lowerbound", "tent_constant",
                        "hypotheses", "necessity", "consistency_band"})
    EXPECT_TRUE(r.contains(k)) << k;
  EXPECT_EQ(r["atoms"], 8);
  EXPECT_EQ(r["preset"], "remark-4.3-n1");
  EXPECT_TRUE(r["hypotheses"].contains("bp_membership"));
  EXPECT_TRUE(r["hypotheses"].contains("d_tau_plus_1_fit"));
  EXPECT_TRUE(r["hypotheses"]["tau_restriction_waived"].get<bool>());
  EXPECT_GT(r["kernel_iii_lowerbound"]["value"].get<double>(), 0.0);
  EXPECT_EQ(r["claims"], "lower bounds only");
}

TEST(Execute, DivergentPowerWeightIsNotBp) {
  RunConfig c = read_config(kData + "/weight_power_divergent.json");
  c.command = "weight-certify";
  const Json r = execute(c)["body"]["results"]["weight_certify"];
  EXPECT_EQ(r["bp_membership"], "not B_p");
  EXPECT_EQ(r["bp_verdict"], "refuted-at-scale");
  // The bracket on the largest tent grows as the cutoff is refined.
  const Json& trace = r["bracket_trace"];
  ASSERT_GE(trace.size(), 3u);
  const double first = trace[0]["bracket"]["value"].get<double>();
  const double last = trace[2]["bracket"]["value"].get<double>();
  EXPECT_GT(last, 1.5 * first);
}

TEST(Execute, MeasureDimensionMismatch) {
  RunConfig c = parse_config(R"({"command": "carleson-test", "n": 2})");
  c.measure_path = kData + "/circle8.csv";
  EXPECT_THROW(execute(c), InputError);
}

TEST(Render, CsvFlattensScalarsOnly) {
  const RunConfig c = parse_config(R"({"command": "besov-norm", "samples": 500})");
  const std::string csv = render_report(execute(c), OutputFormat::Csv);
  EXPECT_EQ(csv.rfind("field,value\n", 0), 0u);
  EXPECT_NE(csv.find("body.command,besov-norm"), std::string::npos);
  EXPECT_NE(csv.find("body.results.besov_norm.k,1"), std::string::npos);
  EXPECT_EQ(csv.find("norms"), std::string::npos);
  EXPECT_EQ(csv_quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_quote("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(Tool, ExitCodes) {
  const auto ok = temp_file("ok.json", R"({"command": "besov-norm", "samples": 200})");
  const auto bad = temp_file("bad.json", R"({"command": "besov-norm", "p": 1})");
  const auto out = std::filesystem::temp_directory_path() / "besov_test_out.csv";
  EXPECT_EQ(tool_status("besov-norm --config " + ok.string()), 0);
  EXPECT_EQ(tool_status("besov-norm --config " + ok.string() + " --format csv --out " + out.string()), 0);
  std::ifstream in(out);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "field,value");
  EXPECT_EQ(tool_status("besov-norm --config " + bad.string()), 2);
  EXPECT_EQ(tool_status("geom-check --config " + ok.string()), 2);
  EXPECT_EQ(tool_status("frobnicate --config " + ok.string()), 2);
  EXPECT_EQ(tool_status("besov-norm --config /nonexistent.json"), 2);
  EXPECT_EQ(tool_status("besov-norm"), 2);
}

TEST(Tool, SeedOverrideIsDeterministic) {
  const auto cfgp = temp_file("det.json", R"({"command": "besov-norm", "samples": 300})");
  const auto o1 = std::filesystem::temp_directory_path() / "besov_test_det1.json";
  const auto o2 = std::filesystem::temp_directory_path() / "besov_test_det2.json";
  ASSERT_EQ(tool_status("besov-norm --config " + cfgp.string() + " --seed 5 --out " + o1.string()), 0);
  ASSERT_EQ(tool_status("besov-norm --config " + cfgp.string() + " --seed 5 --out " + o2.string()), 0);
  const Json a = Json::parse(std::ifstream(o1)), b = Json::parse(std::ifstream(o2));
  EXPECT_EQ(a["body"].dump(), b["body"].dump());
  EXPECT_EQ(a["body"]["effective_config"]["seed"], 5);
}
