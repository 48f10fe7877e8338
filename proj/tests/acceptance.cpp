// Acceptance gate: runs each criterion at its stated scale and tolerance and
// prints one PASS/FAIL line per criterion. Exit status is 0 iff all pass.
//
//   acceptance [--threads N] [--only K]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reflow/coefficients.hpp"
#include "reflow/derivative.hpp"
#include "reflow/experiment.hpp"
#include "reflow/flow.hpp"
#include "reflow/skorokhod.hpp"
#include "reflow/transport.hpp"

using namespace reflow;
using Vec = std::vector<double>;

namespace {

std::size_t g_threads = 1;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FlowOptions opts(std::size_t stride = 1) { return {.threads = g_threads, .record_stride = stride}; }

// First grid index with |w(t_i)| >= level, if any.
std::optional<std::size_t> first_exceedance(const NoiseRealization& noise, double level) {
  const auto w0 = noise.path(0), w1 = noise.path(1);
  for (std::size_t i = 0; i < w0.size(); ++i) {
    if (std::hypot(w0[i], w1[i]) >= level) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Outcome exact_oracle_1d() {
  const auto bm = presets::brownian(1).compile();
  const TimeGrid grid(1.0, 10000);
  const Vec starts{0.0, 0.1, 1.0, 5.0};
  double worst = 0.0;
  std::size_t bad_runs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto noise = make_noise(seed, 1, grid);
    const auto flow = simulate_flow(DomainSpec::half_space(1), bm, PointCloud(1, starts), noise, opts());
    const auto w = noise.path(0);
    bool ok = true;
    for (std::size_t j = 0; j < starts.size(); ++j) {
      const auto exact = skorokhod_map_1d(starts[j], w);
      for (std::size_t i = 0; i <= grid.n_steps(); ++i) {
        const double e = std::max(std::abs(flow.position(i, j)[0] - exact.phi[i]),
                                  std::abs(flow.local_time(i, j) - exact.xi[i]));
        worst = std::max(worst, e);
        ok = ok && e <= 1e-12;
      }
    }
    bad_runs += ok ? 0 : 1;
  }
  return {bad_runs == 0, fmt("max |scheme - map| = %.3g over 100 seeds x 4 starts, %zu failing runs", worst, bad_runs)};
}

Outcome ordering_and_absorption_1d() {
  const auto bm = presets::brownian(1).compile();
  const TimeGrid grid(1.0, 10000);
  const Vec starts{0.0, 0.25, 0.5, 1.0};
  std::size_t bad_runs = 0, absorbed_checks = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto flow = simulate_flow(DomainSpec::half_space(1), bm, PointCloud(1, starts), make_noise(seed, 1, grid), opts());
    bool ok = true;
    for (std::size_t a = 0; a < starts.size(); ++a) {
      for (std::size_t b = a + 1; b < starts.size(); ++b) {
        const std::size_t ta = flow.tau(a).value_or(grid.n_steps() + 1);
        const std::size_t tb = flow.tau(b).value_or(grid.n_steps() + 1);
        const std::size_t before = std::min(std::max(ta, tb), grid.n_steps() + 1);
        for (std::size_t i = 0; i < before; ++i) ok = ok && flow.position(i, a)[0] < flow.position(i, b)[0];
      }
      if (const auto tau = flow.tau(a)) {
        for (std::size_t i = *tau; i <= grid.n_steps(); ++i) {
          ok = ok && flow.position(i, a)[0] == flow.position(i, 0)[0];
          ++absorbed_checks;
        }
      }
    }
    bad_runs += ok ? 0 : 1;
  }
  return {bad_runs == 0, fmt("%zu/100 runs violate ordering or absorption (%zu absorbed indices checked)", bad_runs,
                             absorbed_checks)};
}

Outcome derivative_vs_finite_differences() {
  const Vec a{-0.5, 0.2, 0.1, -0.3};
  const auto field = presets::linear_drift(2, a).compile();
  const auto dom = DomainSpec::half_space(2);
  const TimeGrid grid(1.0, 10000);
  const Vec x{0.0, 4.0};
  const double h_coarse = 1e-3, h_fine = 1e-4;
  std::size_t fine_ok = 0, shrinks = 0, reflected_runs = 0;
  double worst_fine = 0.0, worst_coarse = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto noise = make_noise(seed, 2, grid);
    PointCloud starts(2);
    starts.push_back(x);
    for (double h : {h_coarse, h_fine}) {
      for (std::size_t j = 0; j < 2; ++j) {
        for (double sign : {1.0, -1.0}) {
          Vec p = x;
          p[j] += sign * h;
          starts.push_back(p);
        }
      }
    }
    const auto flow = simulate_flow(dom, field, starts, noise, opts());
    bool any_hit = false;
    for (std::size_t j = 0; j < starts.size(); ++j) any_hit = any_hit || flow.tau(j).has_value();
    reflected_runs += any_hit ? 1 : 0;

    const Matrix d = derivative_flow(flow, field, 0).matrices.back();
    const double e_coarse = (finite_difference_jacobian(dom, field, x, noise, h_coarse) - d).cwiseAbs().maxCoeff();
    const double e_fine = (finite_difference_jacobian(dom, field, x, noise, h_fine) - d).cwiseAbs().maxCoeff();
    worst_coarse = std::max(worst_coarse, e_coarse);
    worst_fine = std::max(worst_fine, e_fine);
    fine_ok += e_fine <= 1e-3 ? 1 : 0;
    shrinks += e_fine < e_coarse ? 1 : 0;
  }
  const bool pass = reflected_runs == 0 && fine_ok == 20 && shrinks == 20;
  return {pass, fmt("max err h=1e-3: %.3g, h=1e-4: %.3g; <=1e-3 in %zu/20, shrinks in %zu/20; runs with a reflected "
                    "start: %zu",
                    worst_coarse, worst_fine, fine_ok, shrinks, reflected_runs)};
}

Outcome kill_semantics() {
  const auto bm = presets::brownian(2).compile();
  const TimeGrid grid(1.0, 1000);
  PointCloud starts(2);
  for (double x : {-0.5, 0.0, 0.5}) {
    for (double y : {0.02, 0.1, 0.3, 0.8}) starts.push_back(Vec{x, y});
  }
  std::size_t bad_runs = 0, kills = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto flow = simulate_flow(DomainSpec::half_space(2), bm, starts, make_noise(seed, 2, grid), opts());
    bool ok = true;
    for (std::size_t j = 0; j < starts.size(); ++j) {
      const auto track = derivative_flow(flow, bm, j);
      for (std::size_t i = 1; i <= grid.n_steps(); ++i) {
        if (!flow.reflected(i, j)) continue;
        ++kills;
        ok = ok && std::binary_search(track.jump_times.begin(), track.jump_times.end(), i);
        ok = ok && track.matrices[i](1, 0) == 0.0 && track.matrices[i](1, 1) == 0.0;
      }
      if (const auto tau = flow.tau(j)) {
        for (std::size_t i = std::max<std::size_t>(*tau, 1); i <= grid.n_steps(); ++i) {
          ok = ok && numerical_rank(track.matrices[i]) <= 1;
        }
      }
    }
    bad_runs += ok ? 0 : 1;
  }
  return {bad_runs == 0, fmt("%zu/100 runs violate the kill (%zu reflection indices checked)", bad_runs, kills)};
}

Outcome disk_collapse() {
  const auto bm = presets::brownian(2).compile();
  const TimeGrid grid(16.0, 16000);
  const double margin = 2.0 + 3.0 * std::sqrt(grid.dt());
  PointCloud lattice(2);
  for (int i = 0; i < 50; ++i) {
    for (int k = 0; k < 50; ++k) {
      const Vec p{-1.0 + (i + 0.5) * 0.04, -1.0 + (k + 0.5) * 0.04};
      if (std::hypot(p[0], p[1]) < 1.0) lattice.push_back(p);
    }
  }
  const auto mu = ParticleMeasure::uniform(lattice);
  std::size_t pairs = 0, dominated = 0, ac_empty_runs = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto noise = make_noise(seed, 2, grid);
    const auto flow = simulate_flow(DomainSpec::unit_disk(), bm, lattice, noise, opts(500));
    const auto sigma = first_exceedance(noise, margin);
    pairs += lattice.size();
    if (!sigma) continue;
    for (std::size_t j = 0; j < lattice.size(); ++j) {
      const auto tau = flow.tau(j);
      dominated += tau && *tau <= *sigma ? 1 : 0;
    }
    bool empty = true;
    for (std::size_t step : flow.recorded_steps()) {
      if (step <= *sigma) continue;
      empty = empty && pushforward_decompose(mu, flow, step).ac_part.empty();
    }
    const bool has_later = flow.recorded_steps().back() > *sigma;
    ac_empty_runs += empty && has_later ? 1 : 0;
  }
  const double rate = static_cast<double>(dominated) / static_cast<double>(pairs);
  return {rate >= 0.99 && ac_empty_runs == 50,
          fmt("%zu lattice points; tau <= sigma in %.4f%% of pairs; ac part empty past sigma in %zu/50 runs",
              lattice.size(), 100.0 * rate, ac_empty_runs)};
}

Outcome transport_partition() {
  const auto bm = presets::brownian(2).compile();
  const TimeGrid grid(1.0, 1000);
  PointCloud half(2), disk(2);
  for (double x = -1.0; x <= 1.0 + 1e-12; x += 0.05) {
    for (double y = 0.0; y <= 1.0 + 1e-12; y += 0.05) half.push_back(Vec{x, y});
  }
  for (double x = -0.975; x < 1.0; x += 0.05) {
    for (double y = -0.975; y < 1.0; y += 0.05) {
      if (std::hypot(x, y) <= 1.0) disk.push_back(Vec{x, y});
    }
  }
  std::size_t runs = 0, good = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& [dom, pts] : {std::pair{DomainSpec::half_space(2), &half}, {DomainSpec::unit_disk(), &disk}}) {
      const CounterStream weights_stream(seed, 1000);
      Vec weights;
      for (std::size_t j = 0; j < pts->size(); ++j) weights.push_back(weights_stream.uniform(j) * 3.0);
      const ParticleMeasure mu(*pts, weights);
      const auto flow = simulate_flow(dom, bm, *pts, make_noise(seed, 2, grid), opts(10));
      bool ok = true;
      double previous = 0.0;
      for (std::size_t step : flow.recorded_steps()) {
        const auto dec = pushforward_decompose(mu, flow, step);
        ok = ok && mass_identity_holds(mu, dec);
        const double s = dec.singular_part.total_mass();
        ok = ok && s >= previous;
        previous = s;
      }
      ++runs;
      good += ok ? 1 : 0;
    }
  }
  return {good == runs, fmt("%zu/%zu runs conserve mass exactly with nondecreasing singular mass", good, runs)};
}

Outcome hausdorff_proxy() {
  const auto bm = presets::brownian(2).compile();
  const TimeGrid grid(1.0, 1000);
  const Vec eps{0.04, 0.02, 0.01};
  PointCloud starts(2);
  for (int k = 0; k <= 3200; ++k) starts.push_back(Vec{-4.0 + 0.0025 * k, 0.0});
  for (int i = 0; i <= 160; ++i) {
    for (int k = 1; k <= 40; ++k) starts.push_back(Vec{-4.0 + 0.05 * i, 0.05 * k});
  }
  std::size_t good = 0;
  double worst_ratio = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto flow = simulate_flow(DomainSpec::half_space(2), bm, starts, make_noise(seed, 2, grid), opts(1000));
    const auto labels = classify_image(flow, grid.n_steps());
    PointCloud boundary(2);
    for (std::size_t j = 0; j < labels.labels.size(); ++j) {
      if (labels.labels[j] == ImageLabel::Boundary) boundary.push_back(labels.points[j]);
    }
    const auto counts = hausdorff_boxcount(boundary, eps, 2.0);
    double lo = counts[0].estimate, hi = lo;
    for (const auto& c : counts) {
      lo = std::min(lo, c.estimate);
      hi = std::max(hi, c.estimate);
    }
    const bool ok = lo > 0.0 && hi <= 2.0 * lo;
    if (lo > 0.0) worst_ratio = std::max(worst_ratio, hi / lo);
    good += ok ? 1 : 0;
  }
  return {good >= 45, fmt("estimates within factor 2 in %zu/50 seeds (worst nonempty ratio %.3f)", good, worst_ratio)};
}

Outcome rank_checks() {
  const Matrix p = halfspace_tangent_projection(2);
  const auto id = rank_condition_check(Matrix::Identity(2, 2), p, p);
  const auto ex2 = presets::example2().compile();
  const CounterStream s(2024, 7);
  std::size_t independent = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Vec x{4.0 * s.uniform(4 * k) - 2.0, 2.0 * s.uniform(4 * k + 1)};
    const double angle = 2.0 * 3.141592653589793 * s.uniform(4 * k + 2);
    const Vec y{std::cos(angle), std::sin(angle)};
    independent += example2_independence_check(ex2, x, y) ? 1 : 0;
  }
  return {id.satisfied && id.rank == 1 && independent == 100,
          fmt("identity: rank %zu (%s); example2 independent at %zu/100 random points", id.rank,
              id.satisfied ? "satisfied" : "not satisfied", independent)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root(REFLOW_TEST_TMP);
  fs::remove_all(root);
  auto config = [](const std::string& kind, const nlohmann::json& domain, const nlohmann::json& coeffs) {
    return nlohmann::json{
        {"experiment", kind},
        {"domain", domain},
        {"coefficients", coeffs},
        {"grid", {{"t_end", 1.0}, {"n_steps", 500}}},
        {"initial_points", {{"kind", "uniform"}, {"lower", {-1.0, -1.0}}, {"upper", {1.0, 1.0}}, {"count", 300}}},
        {"seed", 42},
    };
  };
  const nlohmann::json half = {{"kind", "half_space"}, {"dim", 2}}, disk = {{"kind", "unit_disk"}};
  const nlohmann::json bm = {{"preset", "bm"}};
  const nlohmann::json lin = {{"preset", "linear-drift"}, {"drift_matrix", {{-0.5, 0.2}, {0.1, -0.3}}}};
  std::vector<nlohmann::json> configs{config("flow", half, bm),      config("flow", disk, bm),
                                      config("derivative", half, lin), config("transport", disk, bm),
                                      config("coalesce", half, bm),    config("hausdorff", half, bm)};
  configs[2]["params"] = {{"particles", {0, 1, 2}}};
  configs.push_back({{"experiment", "oracle1d"},
                     {"domain", {{"kind", "half_space"}, {"dim", 1}}},
                     {"coefficients", bm},
                     {"grid", {{"t_end", 1.0}, {"n_steps", 10000}}},
                     {"initial_points", {{"kind", "list"}, {"points", {{0.0}, {0.1}, {1.0}, {5.0}}}}},
                     {"seed", 7}});

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  std::size_t identical = 0, total = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto cfg = parse_config(configs[c]);
    std::vector<std::string> manifests;
    int run = 0;
    for (std::size_t threads : {1u, 4u, 1u, 4u}) {
      const auto dir = root / (std::to_string(c) + "_" + std::to_string(run++));
      (void)run_experiment(cfg, {.output_dir = dir.string(), .threads = threads});
      manifests.push_back(slurp(dir / "manifest.json"));
    }
    ++total;
    identical += std::all_of(manifests.begin(), manifests.end(), [&](const auto& m) { return m == manifests[0]; });
  }
  return {identical == total,
          fmt("%zu/%zu experiment configs give byte-identical manifests over 2 runs x threads {1,4}", identical, total)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--threads" && i + 1 < argc) {
      g_threads = std::max(1, std::atoi(argv[++i]));
    } else if (arg == "--only" && i + 1 < argc) {
      only.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--threads N] [--only K]...\n");
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "exact 1D oracle", exact_oracle_1d},
      {2, "1D ordering and absorption", ordering_and_absorption_1d},
      {3, "derivative flow vs finite differences", derivative_vs_finite_differences},
      {4, "kill semantics", kill_semantics},
      {5, "disk collapse", disk_collapse},
      {6, "transport partition", transport_partition},
      {7, "box-count proxy", hausdorff_proxy},
      {8, "rank and independence checks", rank_checks},
      {9, "determinism", determinism},
  };

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  [%d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    ++ran;
    failed += o.pass ? 0 : 1;
  }
  std::printf("acceptance: %d/%d passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
