#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "reflow/experiment.hpp"
#include "reflow/export.hpp"

using namespace reflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config(const std::string& kind) {
  return {
      {"experiment", kind},
      {"domain", {{"kind", "half_space"}, {"dim", 2}}},
      {"coefficients", {{"preset", "bm"}}},
      {"grid", {{"t_end", 1.0}, {"n_steps", 200}}},
      {"initial_points", {{"kind", "lattice"}, {"lower", {-0.5, 0.0}}, {"upper", {0.5, 0.5}}, {"spacing", 0.25}}},
      {"seed", 7},
  };
}

ErrorCode parse_error(const json& doc) {
  try {
    (void)parse_config(doc);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("config was accepted");
  return ErrorCode::InvalidArgument;
}

fs::path tmp(const std::string& name) {
  const auto p = fs::path(REFLOW_TEST_TMP) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("number format round-trips") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-1.0 / 3.0) == "-0.33333333333333331");
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 7.0, 1e-17, 123456.789}) CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("valid configs parse") {
  for (const auto* kind : {"flow", "derivative", "transport", "coalesce", "hausdorff"}) {
    const auto c = parse_config(base_config(kind));
    CHECK(to_string(c.kind) == kind);
    CHECK(c.seed == 7);
    CHECK(c.output_dir == "reflow_out");
  }
  auto disk = base_config("flow");
  disk["domain"] = {{"kind", "unit_disk"}};
  CHECK(parse_config(disk).domain.kind() == DomainKind::UnitDisk);

  auto inline_cfg = base_config("flow");
  inline_cfg["coefficients"] = {
      {"inline",
       {{"drift", {json::array(), {{{"exponents", {0, 1}}, {"value", -1.0}}}}},
        {"diffusion", {{{{{"exponents", {0, 0}}, {"value", 1.0}}}, json::array()}}}}}};
  const auto c = parse_config(inline_cfg);
  CHECK(c.coefficients.m() == 1);
  const std::vector<double> x{0.3, 2.0};
  CHECK(c.coefficients.component(0, 1)(x) == -2.0);
}

TEST_CASE("strict parsing") {
  auto unknown = base_config("flow");
  unknown["sed"] = 1;
  CHECK(parse_error(unknown) == ErrorCode::InvalidConfig);

  auto nested = base_config("flow");
  nested["grid"]["dt"] = 0.1;
  CHECK(parse_error(nested) == ErrorCode::InvalidConfig);

  auto kind = base_config("simulate");
  CHECK(parse_error(kind) == ErrorCode::InvalidConfig);

  auto preset = base_config("flow");
  preset["coefficients"] = {{"preset", "nope"}};
  CHECK(parse_error(preset) == ErrorCode::InvalidConfig);

  auto extra_preset_key = base_config("flow");
  extra_preset_key["coefficients"] = {{"preset", "bm"}, {"m", 2}};
  CHECK(parse_error(extra_preset_key) == ErrorCode::InvalidConfig);

  auto steps = base_config("flow");
  steps["grid"]["n_steps"] = 0;
  CHECK(parse_error(steps) == ErrorCode::InvalidConfig);

  auto t_end = base_config("flow");
  t_end["grid"]["t_end"] = -1.0;
  CHECK(parse_error(t_end) == ErrorCode::InvalidConfig);

  auto missing = base_config("flow");
  missing.erase("seed");
  CHECK(parse_error(missing) == ErrorCode::InvalidConfig);

  auto neg_seed = base_config("flow");
  neg_seed["seed"] = -3;
  CHECK(parse_error(neg_seed) == ErrorCode::InvalidConfig);

  auto tol = base_config("coalesce");
  tol["params"] = {{"merge_tol", 0.0}};
  CHECK(parse_error(tol) == ErrorCode::InvalidConfig);

  auto eps = base_config("hausdorff");
  eps["params"] = {{"epsilons", {0.01, 0.02}}};
  CHECK(parse_error(eps) == ErrorCode::InvalidConfig);

  auto t_index = base_config("transport");
  t_index["params"] = {{"t_index", 201}};
  CHECK(parse_error(t_index) == ErrorCode::InvalidConfig);

  auto unrecorded = base_config("transport");
  unrecorded["params"] = {{"t_index", 3}, {"record_stride", 10}};
  CHECK(parse_error(unrecorded) == ErrorCode::InvalidConfig);

  auto dim = base_config("flow");
  dim["initial_points"] = {{"kind", "list"}, {"points", {{0.0, 1.0, 2.0}}}};
  CHECK(parse_error(dim) == ErrorCode::InvalidConfig);

  auto oracle = base_config("oracle1d");
  CHECK(parse_error(oracle) == ErrorCode::InvalidConfig);

  auto linear = base_config("flow");
  linear["coefficients"] = {{"preset", "linear-drift"}, {"drift_matrix", {{1.0, 0.0}}}};
  CHECK(parse_error(linear) == ErrorCode::InvalidConfig);

  CHECK_THROWS_AS(parse_config_text("{not json"), Error);
}

TEST_CASE("presets listing") {
  const auto listing = presets_listing();
  std::vector<std::string> names;
  for (const auto& p : listing["presets"]) names.push_back(p["name"].get<std::string>());
  CHECK(names == std::vector<std::string>{"frozen", "bm", "linear-drift", "example2"});
}

TEST_CASE("point generators") {
  auto lattice = base_config("flow");
  const auto pts = generate_points(parse_config(lattice));
  CHECK(pts.size() == 15);

  auto uniform = base_config("flow");
  uniform["initial_points"] = {{"kind", "uniform"}, {"lower", {-1.0, -1.0}}, {"upper", {1.0, 1.0}}, {"count", 50}};
  const auto u1 = generate_points(parse_config(uniform));
  const auto u2 = generate_points(parse_config(uniform));
  CHECK(u1.size() == 50);
  CHECK(u1.coords() == u2.coords());
  for (std::size_t j = 0; j < u1.size(); ++j) CHECK(u1[j][1] >= 0.0);
  uniform["seed"] = 8;
  CHECK(generate_points(parse_config(uniform)).coords() != u1.coords());
}

TEST_CASE("oracle1d experiment is exact") {
  json cfg = {
      {"experiment", "oracle1d"},
      {"domain", {{"kind", "half_space"}, {"dim", 1}}},
      {"coefficients", {{"preset", "bm"}}},
      {"grid", {{"t_end", 1.0}, {"n_steps", 10000}}},
      {"initial_points", {{"kind", "list"}, {"points", {{0.0}, {0.1}, {1.0}, {5.0}}}}},
      {"seed", 7},
  };
  const auto manifest = run_experiment(parse_config(cfg), {.output_dir = tmp("oracle1d").string()});
  // Zero up to floating-point associativity.
  CHECK(manifest["summary"]["max_abs_error"].get<double>() <= 1e-12);
}

TEST_CASE("frozen flow experiment repeats the initial points") {
  auto cfg = base_config("flow");
  cfg["coefficients"] = {{"preset", "frozen"}, {"m", 2}};
  cfg["grid"]["n_steps"] = 10;
  const auto dir = tmp("frozen");
  const auto manifest = run_experiment(parse_config(cfg), {.output_dir = dir.string()});
  const auto pts = generate_points(parse_config(cfg));
  std::istringstream traj(slurp(dir / "trajectories.csv"));
  std::string line;
  std::getline(traj, line);
  CHECK(line == "particle,step,t,x_1,x_2,xi,reflected");
  std::size_t rows = 0;
  while (std::getline(traj, line)) {
    std::istringstream row(line);
    std::string particle, step, t, x1, x2;
    std::getline(row, particle, ',');
    std::getline(row, step, ',');
    std::getline(row, t, ',');
    std::getline(row, x1, ',');
    std::getline(row, x2, ',');
    const auto j = std::stoul(particle);
    CHECK(std::stod(x1) == pts[j][0]);
    CHECK(std::stod(x2) == pts[j][1]);
    ++rows;
  }
  CHECK(rows == pts.size() * 11);
  CHECK(manifest["files"].size() == 2);
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("manifests are reproducible and thread independent") {
  for (const auto* kind : {"flow", "derivative", "transport", "coalesce", "hausdorff"}) {
    const auto cfg = parse_config(base_config(kind));
    const auto a = run_experiment(cfg, {.output_dir = tmp("rep_a").string(), .threads = 1});
    const auto b = run_experiment(cfg, {.output_dir = tmp("rep_b").string(), .threads = 4});
    CHECK(a == b);
    for (const auto& f : a["files"]) {
      const auto name = f["name"].get<std::string>();
      const auto content = slurp(fs::path(REFLOW_TEST_TMP) / "rep_a" / name);
      CHECK(sha256_hex(content) == f["sha256"].get<std::string>());
      CHECK(content == slurp(fs::path(REFLOW_TEST_TMP) / "rep_b" / name));
    }
    CHECK(slurp(fs::path(REFLOW_TEST_TMP) / "rep_a" / "manifest.json") ==
          slurp(fs::path(REFLOW_TEST_TMP) / "rep_b" / "manifest.json"));
  }
}

TEST_CASE("seed override and output directory stay out of the digests") {
  auto doc = base_config("flow");
  doc["output_dir"] = "ignored";
  const auto cfg = parse_config(doc);
  const auto a = run_experiment(cfg, {.output_dir = tmp("ovr_a").string(), .seed = 99});
  auto doc99 = base_config("flow");
  doc99["seed"] = 99;
  const auto b = run_experiment(parse_config(doc99), {.output_dir = tmp("ovr_b").string()});
  CHECK(a == b);
  CHECK(a["seed"] == 99);
  CHECK_FALSE(a["config"].contains("output_dir"));
}

TEST_CASE("experiment summaries") {
  const auto t = run_experiment(parse_config(base_config("transport")), {.output_dir = tmp("summ_t").string()});
  CHECK(t["summary"]["mass_identity"] == true);
  CHECK(t["summary"]["singular_mass_monotone"] == true);
  const auto d = run_experiment(parse_config(base_config("derivative")), {.output_dir = tmp("summ_d").string()});
  CHECK(d["summary"]["jumps"] == d["summary"]["jumps_with_zero_normal_row"]);
  const auto h = run_experiment(parse_config(base_config("hausdorff")), {.output_dir = tmp("summ_h").string()});
  CHECK(h["summary"]["boxcount"].size() == 3);
}

TEST_CASE("runtime domain violation") {
  auto doc = base_config("flow");
  doc["initial_points"] = {{"kind", "list"}, {"points", {{0.0, -1.0}}}};
  const auto cfg = parse_config(doc);
  try {
    (void)run_experiment(cfg, {.output_dir = tmp("violation").string()});
    FAIL("expected a domain violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainViolation);
  }
}
