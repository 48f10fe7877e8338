#include "reflow/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "reflow/derivative.hpp"
#include "reflow/export.hpp"
#include "reflow/flow.hpp"
#include "reflow/skorokhod.hpp"

namespace reflow {

using nlohmann::json;

namespace {

// Stream key for initial-point sampling; noise streams use keys 0..m-1.
constexpr std::uint64_t kInitialPointsKey = 0x8000000000000000ULL;

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::InvalidConfig, msg); }

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) bad("unknown field '" + key + "' in " + where);
  }
}

const json& need(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) bad("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) bad(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(what + " must be finite");
  return x;
}

double as_positive(const json& v, const std::string& what) {
  const double x = as_number(v, what);
  if (!(x > 0.0)) bad(what + " must be positive");
  return x;
}

std::uint64_t as_count(const json& v, const std::string& what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad(what + " must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<double> as_vector(const json& v, std::size_t len, const std::string& what) {
  if (!v.is_array() || v.size() != len) bad(what + " must be an array of " + std::to_string(len) + " numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_number(x, what));
  return out;
}

/// Row-major flattening of a rows x cols nested array.
std::vector<double> as_matrix(const json& v, std::size_t rows, std::size_t cols, const std::string& what) {
  if (!v.is_array() || v.size() != rows) bad(what + " must have " + std::to_string(rows) + " rows");
  std::vector<double> out;
  for (const auto& row : v) {
    const auto r = as_vector(row, cols, what + " row");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

ExperimentKind parse_kind(const json& v) {
  if (!v.is_string()) bad("experiment must be a string");
  const auto s = v.get<std::string>();
  if (s == "flow") return ExperimentKind::Flow;
  if (s == "derivative") return ExperimentKind::Derivative;
  if (s == "transport") return ExperimentKind::Transport;
  if (s == "coalesce") return ExperimentKind::Coalesce;
  if (s == "hausdorff") return ExperimentKind::Hausdorff;
  if (s == "oracle1d") return ExperimentKind::Oracle1d;
  bad("unknown experiment '" + s + "'");
}

DomainSpec parse_domain(const json& v) {
  check_keys(v, {"kind", "dim"}, "domain");
  const auto& kind = need(v, "kind", "domain");
  if (kind == "half_space") {
    const auto dim = as_count(need(v, "dim", "domain"), "domain.dim");
    if (dim == 0) bad("domain.dim must be positive");
    return DomainSpec::half_space(dim);
  }
  if (kind == "unit_disk") {
    if (v.contains("dim") && v["dim"] != 2) bad("unit_disk has dim 2");
    return DomainSpec::unit_disk();
  }
  bad("domain.kind must be 'half_space' or 'unit_disk'");
}

Polynomial parse_polynomial(const json& v, std::size_t d, const std::string& where) {
  if (!v.is_array()) bad(where + " must be a list of terms");
  std::vector<Monomial> terms;
  for (const auto& t : v) {
    check_keys(t, {"exponents", "value"}, where + " term");
    const auto& e = need(t, "exponents", where + " term");
    if (!e.is_array() || e.size() != d) bad(where + " exponents must have " + std::to_string(d) + " entries");
    Monomial m;
    for (const auto& x : e) {
      const auto ex = as_count(x, where + " exponent");
      if (ex > 64) bad(where + " exponent too large");
      m.exponents.push_back(static_cast<unsigned>(ex));
    }
    m.value = as_number(need(t, "value", where + " term"), where + " value");
    terms.push_back(std::move(m));
  }
  return Polynomial(d, std::move(terms));
}

std::vector<Polynomial> parse_column(const json& v, std::size_t d, const std::string& where) {
  if (!v.is_array() || v.size() != d) bad(where + " must list one polynomial per coordinate");
  std::vector<Polynomial> col;
  for (std::size_t i = 0; i < d; ++i) col.push_back(parse_polynomial(v[i], d, where + "[" + std::to_string(i) + "]"));
  return col;
}

}  // namespace

PolynomialField parse_coefficients(const json& v, std::size_t d) {
  check_keys(v, {"preset", "m", "drift_matrix", "diffusion_matrix", "inline"}, "coefficients");
  if (d == 0) bad("coefficient dimension must be positive");
  const bool has_preset = v.contains("preset");
  if (has_preset == v.contains("inline")) bad("coefficients need exactly one of 'preset' or 'inline'");

  if (v.contains("inline")) {
    if (v.size() != 1) bad("inline coefficients take no other fields");
    const auto& in = v["inline"];
    check_keys(in, {"drift", "diffusion"}, "coefficients.inline");
    std::vector<std::vector<Polynomial>> cols{parse_column(need(in, "drift", "coefficients.inline"), d, "drift")};
    const auto& diff = need(in, "diffusion", "coefficients.inline");
    if (!diff.is_array() || diff.empty()) bad("inline diffusion must be a nonempty list of columns");
    for (std::size_t k = 0; k < diff.size(); ++k) {
      cols.push_back(parse_column(diff[k], d, "diffusion[" + std::to_string(k) + "]"));
    }
    return PolynomialField(d, std::move(cols));
  }

  const auto& name_v = v["preset"];
  if (!name_v.is_string()) bad("coefficients.preset must be a string");
  const auto name = name_v.get<std::string>();
  auto only = [&](std::initializer_list<std::string_view> keys) { check_keys(v, keys, "coefficients (" + name + ")"); };

  if (name == "frozen") {
    only({"preset", "m"});
    const std::size_t m = v.contains("m") ? as_count(v["m"], "coefficients.m") : 1;
    if (m == 0) bad("coefficients.m must be positive");
    return presets::frozen(d, m);
  }
  if (name == "bm") {
    only({"preset"});
    return presets::brownian(d);
  }
  if (name == "linear-drift") {
    only({"preset", "drift_matrix", "diffusion_matrix"});
    const auto a = as_matrix(need(v, "drift_matrix", "coefficients"), d, d, "drift_matrix");
    if (!v.contains("diffusion_matrix")) return presets::linear_drift(d, a);
    const auto& s = v["diffusion_matrix"];
    if (!s.is_array() || s.size() != d || !s[0].is_array() || s[0].empty()) bad("diffusion_matrix must be d x m");
    const std::size_t m = s[0].size();
    return presets::linear_drift(d, a, as_matrix(s, d, m, "diffusion_matrix"), m);
  }
  if (name == "example2") {
    only({"preset"});
    if (d != 2) bad("example2 preset needs a 2-dimensional domain");
    return presets::example2();
  }
  bad("unknown coefficient preset '" + name + "'");
}

namespace {

PointGenerator parse_points(const json& v, const DomainSpec& domain) {
  const std::size_t d = domain.dim();
  if (!v.is_object()) bad("initial_points must be an object");
  const auto& kind = need(v, "kind", "initial_points");
  if (kind == "list") {
    check_keys(v, {"kind", "points"}, "initial_points");
    const auto& pts = need(v, "points", "initial_points");
    if (!pts.is_array() || pts.empty()) bad("initial_points.points must be a nonempty list");
    ExplicitPoints out;
    for (const auto& p : pts) out.points.push_back(as_vector(p, d, "initial point"));
    return out;
  }
  auto read_box = [&](std::vector<double>& lower, std::vector<double>& upper) {
    lower = as_vector(need(v, "lower", "initial_points"), d, "initial_points.lower");
    upper = as_vector(need(v, "upper", "initial_points"), d, "initial_points.upper");
    for (std::size_t i = 0; i < d; ++i) {
      if (!(upper[i] >= lower[i])) bad("initial_points box has upper < lower");
    }
  };
  if (kind == "lattice") {
    check_keys(v, {"kind", "lower", "upper", "spacing"}, "initial_points");
    LatticePoints out;
    read_box(out.lower, out.upper);
    out.spacing = as_positive(need(v, "spacing", "initial_points"), "initial_points.spacing");
    double count = 1.0;
    for (std::size_t i = 0; i < d; ++i) count *= std::floor((out.upper[i] - out.lower[i]) / out.spacing) + 1.0;
    if (count > 5e7) bad("lattice has too many points");
    return out;
  }
  if (kind == "uniform") {
    check_keys(v, {"kind", "lower", "upper", "count"}, "initial_points");
    UniformPoints out;
    read_box(out.lower, out.upper);
    out.count = as_count(need(v, "count", "initial_points"), "initial_points.count");
    if (out.count == 0) bad("initial_points.count must be positive");
    return out;
  }
  bad("initial_points.kind must be 'list', 'lattice' or 'uniform'");
}

ExperimentParams parse_params(const json& v, ExperimentKind kind, const DomainSpec& domain, const TimeGrid& grid) {
  ExperimentParams p;
  if (v.is_null()) return p;
  check_keys(v, {"merge_tol", "epsilons", "bins", "bump_h", "radius", "t_index", "record_stride", "particles", "box"},
             "params");
  if (v.contains("merge_tol")) p.merge_tol = as_positive(v["merge_tol"], "params.merge_tol");
  if (v.contains("epsilons")) {
    const auto& e = v["epsilons"];
    if (!e.is_array() || e.empty()) bad("params.epsilons must be a nonempty list");
    p.epsilons.clear();
    for (const auto& x : e) p.epsilons.push_back(as_positive(x, "params.epsilons"));
    for (std::size_t i = 1; i < p.epsilons.size(); ++i) {
      if (!(p.epsilons[i] < p.epsilons[i - 1])) bad("params.epsilons must be strictly decreasing");
    }
  }
  if (v.contains("bins")) {
    p.bins = as_count(v["bins"], "params.bins");
    if (p.bins == 0) bad("params.bins must be >= 1");
  }
  if (v.contains("bump_h")) p.bump_h = as_positive(v["bump_h"], "params.bump_h");
  if (v.contains("radius")) p.radius = as_positive(v["radius"], "params.radius");
  if (v.contains("record_stride")) {
    p.record_stride = as_count(v["record_stride"], "params.record_stride");
    if (p.record_stride == 0) bad("params.record_stride must be >= 1");
  }
  if (v.contains("t_index")) {
    const auto t = as_count(v["t_index"], "params.t_index");
    if (t > grid.n_steps()) bad("params.t_index beyond the grid");
    if (kind != ExperimentKind::Derivative && t % p.record_stride != 0 && t != grid.n_steps()) {
      bad("params.t_index is not a recorded step for this record_stride");
    }
    p.t_index = t;
  }
  if (v.contains("particles")) {
    const auto& ps = v["particles"];
    if (!ps.is_array()) bad("params.particles must be a list");
    for (const auto& x : ps) p.particles.push_back(as_count(x, "params.particles"));
  }
  if (v.contains("box")) {
    const auto& b = v["box"];
    check_keys(b, {"lower", "upper"}, "params.box");
    Box box{as_vector(need(b, "lower", "params.box"), domain.dim(), "params.box.lower"),
            as_vector(need(b, "upper", "params.box"), domain.dim(), "params.box.upper")};
    for (std::size_t i = 0; i < domain.dim(); ++i) {
      if (!(box.upper[i] > box.lower[i])) bad("params.box is degenerate");
    }
    p.box = std::move(box);
  }
  return p;
}

// ---------------------------------------------------------------------------

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  json summary = json::object();

  void add(std::string name, const std::ostringstream& os) { files.emplace_back(std::move(name), os.str()); }
};

FlowOptions flow_options(const RunOptions& o, std::size_t stride) {
  return {.threads = std::max<std::size_t>(1, o.threads), .record_stride = stride};
}

std::size_t target_step(const ExperimentConfig& c) { return c.params.t_index.value_or(c.grid.n_steps()); }

void run_flow(const ExperimentConfig& c, const CoefficientField& coeffs, const PointCloud& pts,
              const NoiseRealization& noise, const RunOptions& o, Artifacts& out) {
  const auto flow = simulate_flow(c.domain, coeffs, pts, noise, flow_options(o, c.params.record_stride));
  std::ostringstream traj, hits;
  write_trajectories_csv(traj, flow);
  write_hitting_times_csv(hits, flow);
  out.add("trajectories.csv", traj);
  out.add("hitting_times.csv", hits);
  std::size_t hit = 0;
  for (std::size_t j = 0; j < flow.num_particles(); ++j) hit += flow.tau(j) ? 1 : 0;
  out.summary["particles"] = flow.num_particles();
  out.summary["hit_particles"] = hit;
}

void run_oracle1d(const ExperimentConfig& c, const CoefficientField& coeffs, const PointCloud& pts,
                  const NoiseRealization& noise, const RunOptions& o, Artifacts& out) {
  const auto flow = simulate_flow(c.domain, coeffs, pts, noise, flow_options(o, 1));
  const auto w = noise.path(0);
  std::ostringstream csv;
  csv << "particle,x0,max_abs_error_phi,max_abs_error_xi\n";
  double worst = 0.0;
  for (std::size_t j = 0; j < flow.num_particles(); ++j) {
    const auto exact = skorokhod_map_1d(pts[j][0], w);
    double err_phi = 0.0, err_xi = 0.0;
    for (std::size_t i = 0; i <= flow.n_steps(); ++i) {
      err_phi = std::max(err_phi, std::abs(flow.position(i, j)[0] - exact.phi[i]));
      err_xi = std::max(err_xi, std::abs(flow.local_time(i, j) - exact.xi[i]));
    }
    worst = std::max({worst, err_phi, err_xi});
    csv << j << ',' << format_number(pts[j][0]) << ',' << format_number(err_phi) << ',' << format_number(err_xi) << '\n';
  }
  out.add("oracle1d.csv", csv);
  out.summary["particles"] = flow.num_particles();
  out.summary["max_abs_error"] = worst;
}

void run_derivative(const ExperimentConfig& c, const CoefficientField& coeffs, const PointCloud& pts,
                    const NoiseRealization& noise, const RunOptions& o, Artifacts& out) {
  const auto flow = simulate_flow(c.domain, coeffs, pts, noise, flow_options(o, 1));
  std::vector<std::size_t> particles = c.params.particles;
  if (particles.empty()) {
    for (std::size_t j = 0; j < flow.num_particles(); ++j) particles.push_back(j);
  }
  for (std::size_t j : particles) {
    if (j >= flow.num_particles()) fail(ErrorCode::InvalidConfig, "params.particles index " + std::to_string(j) + " out of range");
  }

  std::vector<DerivativeTrack> tracks;
  for (std::size_t j : particles) tracks.push_back(derivative_flow(flow, coeffs, j));

  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i <= flow.n_steps(); i += c.params.record_stride) steps.push_back(i);
  if (steps.back() != flow.n_steps()) steps.push_back(flow.n_steps());

  std::ostringstream mats, jumps, check;
  write_derivative_csv(mats, tracks, steps);
  write_jump_times_csv(jumps, tracks);

  // Final Jacobian against central differences, for particles whose bumped
  // starts stay interior.
  check << "particle,final_rank,fd_max_abs_diff\n";
  const std::size_t last = flow.n_steps();
  double fd_worst_unreflected = 0.0;
  std::size_t jumps_total = 0, killed_rows_ok = 0;
  for (const auto& t : tracks) {
    jumps_total += t.jump_times.size();
    for (std::size_t s : t.jump_times) {
      const bool zero_row = c.domain.kind() != DomainKind::HalfSpace ||
                            t.matrices[s].row(t.matrices[s].rows() - 1).isZero(0.0);
      killed_rows_ok += zero_row ? 1 : 0;
    }
    check << t.particle << ',' << numerical_rank(t.matrices[last]) << ',';
    try {
      const auto fd = finite_difference_jacobian(c.domain, coeffs, pts[t.particle], noise, c.params.bump_h);
      const double diff = (fd - t.matrices[last]).cwiseAbs().maxCoeff();
      check << format_number(diff) << '\n';
      if (t.jump_times.empty()) fd_worst_unreflected = std::max(fd_worst_unreflected, diff);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DomainViolation) throw;
      check << "skipped\n";
    }
  }
  out.add("derivative.csv", mats);
  out.add("jump_times.csv", jumps);
  out.add("jacobian_check.csv", check);
  out.summary["particles"] = tracks.size();
  out.summary["jumps"] = jumps_total;
  out.summary["jumps_with_zero_normal_row"] = killed_rows_ok;
  out.summary["fd_max_abs_diff_unreflected"] = fd_worst_unreflected;
}

void run_transport(const ExperimentConfig& c, const CoefficientField& coeffs, const PointCloud& pts,
                   const NoiseRealization& noise, const RunOptions& o, Artifacts& out) {
  const auto flow = simulate_flow(c.domain, coeffs, pts, noise, flow_options(o, c.params.record_stride));
  const auto mu = ParticleMeasure::uniform(pts);
  const std::size_t step = target_step(c);

  std::ostringstream masses;
  masses << "step,ac_mass,singular_mass\n";
  bool identity = true, monotone = true;
  double previous_singular = 0.0;
  for (std::size_t s : flow.recorded_steps()) {
    const auto dec = pushforward_decompose(mu, flow, s);
    identity = identity && mass_identity_holds(mu, dec);
    const double sing = dec.singular_part.total_mass();
    monotone = monotone && sing >= previous_singular;
    previous_singular = sing;
    masses << s << ',' << format_number(dec.ac_part.total_mass()) << ',' << format_number(sing) << '\n';
  }

  const auto dec = pushforward_decompose(mu, flow, step);
  std::ostringstream decomposition, density;
  write_decomposition_csv(decomposition, dec);

  Box box;
  if (c.params.box) {
    box = *c.params.box;
  } else {
    const auto image = flow.image(step);
    box.lower.assign(flow.dim(), std::numeric_limits<double>::infinity());
    box.upper.assign(flow.dim(), -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < image.size(); ++j) {
      for (std::size_t i = 0; i < flow.dim(); ++i) {
        box.lower[i] = std::min(box.lower[i], image[j][i]);
        box.upper[i] = std::max(box.upper[i], image[j][i]);
      }
    }
    for (std::size_t i = 0; i < flow.dim(); ++i) {
      if (!(box.upper[i] > box.lower[i])) {
        box.lower[i] -= 0.5;
        box.upper[i] += 0.5;
      }
    }
  }
  const auto grid = density_histogram(dec.ac_part, box, c.params.bins);
  write_density_csv(density, grid);

  out.add("masses.csv", masses);
  out.add("decomposition.csv", decomposition);
  out.add("density.csv", density);
  out.summary["step"] = step;
  out.summary["ac_mass"] = dec.ac_part.total_mass();
  out.summary["singular_mass"] = dec.singular_part.total_mass();
  out.summary["mass_identity"] = identity;
  out.summary["singular_mass_monotone"] = monotone;
  out.summary["density_out_of_box_mass"] = grid.out_of_box_mass;
}

void run_coalesce(const ExperimentConfig& c, const CoefficientField& coeffs, const PointCloud& pts,
                  const NoiseRealization& noise, const RunOptions& o, Artifacts& out) {
  const auto flow = simulate_flow(c.domain, coeffs, pts, noise, flow_options(o, c.params.record_stride));
  const double tol = c.params.merge_tol.value_or(default_merge_tol(c.grid));
  const auto report = coalescence_report(flow, tol);
  std::ostringstream csv, hits;
  write_coalescence_csv(csv, report);
  write_hitting_times_csv(hits, flow);
  out.add("coalescence.csv", csv);
  out.add("hitting_times.csv", hits);
  std::size_t persistent = 0, before_hit = 0;
  for (const auto& p : report.pairs) {
    persistent += p.persistent ? 1 : 0;
    const auto ta = flow.tau(p.first), tb = flow.tau(p.second);
    const bool after_both = ta && tb && p.merge_step >= std::max(*ta, *tb);
    before_hit += after_both ? 0 : 1;
  }
  out.summary["merge_tol"] = tol;
  out.summary["pairs"] = report.pairs.size();
  out.summary["persistent_pairs"] = persistent;
  out.summary["pairs_merged_before_both_hit"] = before_hit;
}

void run_hausdorff(const ExperimentConfig& c, const CoefficientField& coeffs, const PointCloud& pts,
                   const NoiseRealization& noise, const RunOptions& o, Artifacts& out) {
  const auto flow = simulate_flow(c.domain, coeffs, pts, noise, flow_options(o, c.params.record_stride));
  const std::size_t step = target_step(c);
  const auto labels = classify_image(flow, step);
  PointCloud boundary(flow.dim());
  std::ostringstream image, boxes;
  image << "particle,label";
  for (std::size_t i = 1; i <= flow.dim(); ++i) image << ",x_" << i;
  image << '\n';
  for (std::size_t j = 0; j < labels.labels.size(); ++j) {
    const bool on_boundary = labels.labels[j] == ImageLabel::Boundary;
    if (on_boundary) boundary.push_back(labels.points[j]);
    image << j << ',' << (on_boundary ? "boundary" : "interior");
    for (double v : labels.points[j]) image << ',' << format_number(v);
    image << '\n';
  }
  const auto counts = hausdorff_boxcount(boundary, c.params.epsilons, c.params.radius);
  write_boxcount_csv(boxes, counts);
  out.add("image_labels.csv", image);
  out.add("boxcount.csv", boxes);
  out.summary["step"] = step;
  out.summary["boundary_points"] = boundary.size();
  json estimates = json::array();
  for (const auto& bc : counts) estimates.push_back({{"epsilon", bc.epsilon}, {"count", bc.count}, {"estimate", bc.estimate}});
  out.summary["boxcount"] = estimates;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) fail(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Flow: return "flow";
    case ExperimentKind::Derivative: return "derivative";
    case ExperimentKind::Transport: return "transport";
    case ExperimentKind::Coalesce: return "coalesce";
    case ExperimentKind::Hausdorff: return "hausdorff";
    case ExperimentKind::Oracle1d: return "oracle1d";
  }
  return "unknown";
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, {"experiment", "domain", "coefficients", "grid", "initial_points", "seed", "output_dir", "params"},
             "config");
  const auto kind = parse_kind(need(doc, "experiment", "config"));
  try {
    const auto domain = parse_domain(need(doc, "domain", "config"));
    auto coefficients = parse_coefficients(need(doc, "coefficients", "config"), domain.dim());

    const auto& g = need(doc, "grid", "config");
    check_keys(g, {"t_end", "n_steps"}, "grid");
    const auto n_steps = as_count(need(g, "n_steps", "grid"), "grid.n_steps");
    if (n_steps == 0) bad("grid.n_steps must be positive");
    const TimeGrid grid(as_positive(need(g, "t_end", "grid"), "grid.t_end"), n_steps);

    auto points = parse_points(need(doc, "initial_points", "config"), domain);
    const auto seed = as_count(need(doc, "seed", "config"), "seed");
    std::string out_dir = "reflow_out";
    if (doc.contains("output_dir")) {
      if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty()) {
        bad("output_dir must be a nonempty string");
      }
      out_dir = doc["output_dir"].get<std::string>();
    }
    auto params = parse_params(doc.contains("params") ? doc["params"] : json(), kind, domain, grid);

    if (kind == ExperimentKind::Oracle1d) {
      if (domain.kind() != DomainKind::HalfSpace || domain.dim() != 1) bad("oracle1d needs a half_space of dim 1");
      const auto& co = doc["coefficients"];
      if (!co.contains("preset") || co["preset"] != "bm") bad("oracle1d needs the bm preset");
    }
    return ExperimentConfig{kind, domain, std::move(coefficients), grid, std::move(points), seed, std::move(out_dir),
                            std::move(params), doc};
  } catch (const Error& e) {
    // Constructors of the domain types report InvalidArgument; in a config
    // they are configuration errors.
    if (e.code() == ErrorCode::InvalidArgument) bad(e.what());
    throw;
  }
}

ExperimentConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

PointCloud generate_points(const ExperimentConfig& config) {
  const std::size_t d = config.domain.dim();
  PointCloud out(d);
  std::visit(
      [&](const auto& gen) {
        using T = std::decay_t<decltype(gen)>;
        if constexpr (std::is_same_v<T, ExplicitPoints>) {
          for (const auto& p : gen.points) out.push_back(p);
        } else if constexpr (std::is_same_v<T, LatticePoints>) {
          std::vector<std::size_t> counts(d);
          std::size_t total = 1;
          for (std::size_t i = 0; i < d; ++i) {
            // Small slack so an upper corner that is a whole number of
            // spacings away is included despite rounding.
            counts[i] = static_cast<std::size_t>(std::floor((gen.upper[i] - gen.lower[i]) / gen.spacing + 1e-9)) + 1;
            total *= counts[i];
          }
          std::vector<double> p(d);
          for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            for (std::size_t i = d; i-- > 0;) {
              p[i] = gen.lower[i] + static_cast<double>(rem % counts[i]) * gen.spacing;
              rem /= counts[i];
            }
            if (config.domain.contains(p)) out.push_back(p);
          }
          if (out.empty()) fail(ErrorCode::InvalidConfig, "lattice has no points inside the domain");
        } else {
          const CounterStream stream(config.seed, kInitialPointsKey);
          std::vector<double> p(d);
          std::uint64_t word = 0;
          const std::uint64_t max_words = static_cast<std::uint64_t>(gen.count) * d * 1000;
          while (out.size() < gen.count) {
            if (word >= max_words) fail(ErrorCode::InvalidConfig, "uniform box barely intersects the domain");
            for (std::size_t i = 0; i < d; ++i) {
              p[i] = gen.lower[i] + (gen.upper[i] - gen.lower[i]) * (1.0 - stream.uniform(word++));
            }
            if (config.domain.contains(p)) out.push_back(p);
          }
        }
      },
      config.initial_points);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::Io, "SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

json presets_listing() {
  json list = json::array();
  for (const auto& p : presets::list()) list.push_back({{"name", p.name}, {"summary", p.summary}});
  return {{"presets", list}};
}

json run_experiment(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig config = config_in;
  if (options.seed) config.seed = *options.seed;
  const auto dir = std::filesystem::path(options.output_dir.value_or(config.output_dir));

  const auto coeffs = config.coefficients.compile();
  const auto points = generate_points(config);
  const auto noise = make_noise(config.seed, coeffs.m(), config.grid);

  Artifacts artifacts;
  switch (config.kind) {
    case ExperimentKind::Flow: run_flow(config, coeffs, points, noise, options, artifacts); break;
    case ExperimentKind::Oracle1d: run_oracle1d(config, coeffs, points, noise, options, artifacts); break;
    case ExperimentKind::Derivative: run_derivative(config, coeffs, points, noise, options, artifacts); break;
    case ExperimentKind::Transport: run_transport(config, coeffs, points, noise, options, artifacts); break;
    case ExperimentKind::Coalesce: run_coalesce(config, coeffs, points, noise, options, artifacts); break;
    case ExperimentKind::Hausdorff: run_hausdorff(config, coeffs, points, noise, options, artifacts); break;
  }

  json echo = config.source;
  echo.erase("output_dir");
  echo["seed"] = config.seed;

  json files = json::array();
  for (const auto& [name, content] : artifacts.files) {
    files.push_back({{"name", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }
  json manifest = {
      {"format", "reflow-manifest/1"},
      {"experiment", std::string(to_string(config.kind))},
      {"seed", config.seed},
      {"config", echo},
      {"summary", artifacts.summary},
      {"files", files},
  };

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : artifacts.files) write_file(dir / name, content);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace reflow
