#include "reflow/reflow.h"

#include <cstring>
#include <new>
#include <string>

#include "reflow/coefficients.hpp"
#include "reflow/derivative.hpp"
#include "reflow/experiment.hpp"
#include "reflow/flow.hpp"
#include "reflow/skorokhod.hpp"
#include "reflow/transport.hpp"

struct reflow_noise {
  reflow::NoiseRealization value;
};

struct reflow_coeffs {
  reflow::PolynomialField field;
  reflow::CoefficientField compiled;
};

struct reflow_flow {
  reflow::FlowResult value;
};

struct reflow_derivative {
  reflow::DerivativeTrack value;
};

namespace {

thread_local std::string last_error;

reflow_status to_status(reflow::ErrorCode code) {
  switch (code) {
    case reflow::ErrorCode::InvalidArgument: return REFLOW_ERR_INVALID_ARGUMENT;
    case reflow::ErrorCode::OutOfRange: return REFLOW_ERR_OUT_OF_RANGE;
    case reflow::ErrorCode::DomainViolation: return REFLOW_ERR_DOMAIN;
    case reflow::ErrorCode::InvalidConfig: return REFLOW_ERR_CONFIG;
    case reflow::ErrorCode::Io: return REFLOW_ERR_IO;
  }
  return REFLOW_ERR_INTERNAL;
}

template <typename Fn>
reflow_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    last_error.clear();
    return REFLOW_OK;
  } catch (const reflow::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return REFLOW_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) reflow::fail(reflow::ErrorCode::InvalidArgument, what);
}

reflow::DomainSpec to_domain(reflow_domain d) {
  switch (d.kind) {
    case REFLOW_HALF_SPACE: return reflow::DomainSpec::half_space(d.dim);
    case REFLOW_UNIT_DISK: return reflow::DomainSpec::unit_disk();
  }
  reflow::fail(reflow::ErrorCode::InvalidArgument, "unknown domain kind");
}

reflow::Matrix read_matrix(const double* data, size_t dim) {
  require(data != nullptr, "matrix pointer is null");
  const auto d = static_cast<Eigen::Index>(dim);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data, d, d);
}

void write_matrix(const reflow::Matrix& m, double* out) {
  require(out != nullptr, "output pointer is null");
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, m.rows(), m.cols()) = m;
}

char* duplicate(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

reflow_coeffs* make_coeffs(reflow::PolynomialField field) {
  auto compiled = field.compile();
  return new reflow_coeffs{std::move(field), std::move(compiled)};
}

}  // namespace

extern "C" {

const char* reflow_version(void) { return "1.0.0"; }

const char* reflow_last_error(void) { return last_error.c_str(); }

void reflow_string_free(char* s) { delete[] s; }

reflow_status reflow_domain_contains(reflow_domain domain, const double* x, size_t dim, int* inside) {
  return guarded([&] {
    require(x != nullptr && inside != nullptr, "null pointer");
    *inside = to_domain(domain).contains({x, dim}) ? 1 : 0;
  });
}

reflow_status reflow_noise_create(uint64_t seed, size_t m, double t_end, size_t n_steps, reflow_noise** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new reflow_noise{reflow::make_noise(seed, m, reflow::TimeGrid(t_end, n_steps))};
  });
}

void reflow_noise_destroy(reflow_noise* noise) { delete noise; }

reflow_status reflow_noise_increments(const reflow_noise* noise, size_t k, double* out, size_t len) {
  return guarded([&] {
    require(noise != nullptr && out != nullptr, "null pointer");
    const auto inc = noise->value.increments(k);
    require(len >= inc.size(), "output buffer too small");
    std::copy(inc.begin(), inc.end(), out);
  });
}

reflow_status reflow_coeffs_preset(const char* name, size_t dim, const char* params_json, reflow_coeffs** out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "null pointer");
    nlohmann::json block = nlohmann::json::object();
    if (params_json != nullptr) {
      try {
        block = nlohmann::json::parse(params_json);
      } catch (const nlohmann::json::exception& e) {
        reflow::fail(reflow::ErrorCode::InvalidArgument, std::string("preset parameters are not valid JSON: ") + e.what());
      }
      require(block.is_object(), "preset parameters must be a JSON object");
    }
    block["preset"] = name;
    *out = make_coeffs(reflow::parse_coefficients(block, dim));
  });
}

reflow_status reflow_coeffs_inline(size_t dim, const char* json, reflow_coeffs** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "null pointer");
    nlohmann::json block;
    try {
      block = {{"inline", nlohmann::json::parse(json)}};
    } catch (const nlohmann::json::exception& e) {
      reflow::fail(reflow::ErrorCode::InvalidArgument, std::string("inline coefficients are not valid JSON: ") + e.what());
    }
    *out = make_coeffs(reflow::parse_coefficients(block, dim));
  });
}

void reflow_coeffs_destroy(reflow_coeffs* coeffs) { delete coeffs; }

size_t reflow_coeffs_m(const reflow_coeffs* coeffs) { return coeffs ? coeffs->compiled.m() : 0; }

reflow_status reflow_skorokhod_map_1d(double x0, const double* w, size_t n, double* phi, double* xi) {
  return guarded([&] {
    require(w != nullptr && phi != nullptr && xi != nullptr, "null pointer");
    const auto path = reflow::skorokhod_map_1d(x0, {w, n});
    std::copy(path.phi.begin(), path.phi.end(), phi);
    std::copy(path.xi.begin(), path.xi.end(), xi);
  });
}

reflow_status reflow_reflect_step(reflow_domain domain, const double* z, size_t dim, double* position,
                                  double* xi_increment, int* reflected) {
  return guarded([&] {
    require(z != nullptr && position != nullptr && xi_increment != nullptr && reflected != nullptr, "null pointer");
    const auto step = reflow::reflect_step(to_domain(domain), {z, dim});
    std::copy(step.position.begin(), step.position.end(), position);
    *xi_increment = step.xi_increment;
    *reflected = step.reflected ? 1 : 0;
  });
}

reflow_status reflow_flow_simulate(reflow_domain domain, const reflow_coeffs* coeffs, const double* points,
                                   size_t n_points, const reflow_noise* noise, const reflow_flow_options* options,
                                   reflow_flow** out) {
  return guarded([&] {
    require(coeffs != nullptr && noise != nullptr && out != nullptr, "null pointer");
    require(points != nullptr || n_points == 0, "null points");
    const auto dom = to_domain(domain);
    reflow::PointCloud cloud(dom.dim(), std::vector<double>(points, points + n_points * dom.dim()));
    reflow::FlowOptions opts;
    if (options != nullptr) {
      opts.threads = options->threads == 0 ? 1 : options->threads;
      opts.record_stride = options->record_stride == 0 ? 1 : options->record_stride;
    }
    *out = new reflow_flow{reflow::simulate_flow(dom, coeffs->compiled, cloud, noise->value, opts)};
  });
}

void reflow_flow_destroy(reflow_flow* flow) { delete flow; }
size_t reflow_flow_num_particles(const reflow_flow* flow) { return flow ? flow->value.num_particles() : 0; }
size_t reflow_flow_num_steps(const reflow_flow* flow) { return flow ? flow->value.n_steps() : 0; }
size_t reflow_flow_dim(const reflow_flow* flow) { return flow ? flow->value.dim() : 0; }

reflow_status reflow_flow_position(const reflow_flow* flow, size_t step, size_t particle, double* out) {
  return guarded([&] {
    require(flow != nullptr && out != nullptr, "null pointer");
    const auto p = flow->value.position(step, particle);
    std::copy(p.begin(), p.end(), out);
  });
}

reflow_status reflow_flow_local_time(const reflow_flow* flow, size_t step, size_t particle, double* out) {
  return guarded([&] {
    require(flow != nullptr && out != nullptr, "null pointer");
    *out = flow->value.local_time(step, particle);
  });
}

reflow_status reflow_flow_reflected(const reflow_flow* flow, size_t step, size_t particle, int* out) {
  return guarded([&] {
    require(flow != nullptr && out != nullptr, "null pointer");
    *out = flow->value.reflected(step, particle) ? 1 : 0;
  });
}

reflow_status reflow_flow_hitting_times(const reflow_flow* flow, int64_t* taus, size_t len) {
  return guarded([&] {
    require(flow != nullptr && taus != nullptr, "null pointer");
    require(len >= flow->value.num_particles(), "output buffer too small");
    for (const auto& h : reflow::first_hitting_times(flow->value)) {
      taus[h.particle] = h.tau ? static_cast<int64_t>(*h.tau) : REFLOW_NEVER;
    }
  });
}

reflow_status reflow_flow_classify(const reflow_flow* flow, size_t step, int* labels, size_t len) {
  return guarded([&] {
    require(flow != nullptr && labels != nullptr, "null pointer");
    require(len >= flow->value.num_particles(), "output buffer too small");
    const auto c = reflow::classify_image(flow->value, step);
    for (size_t j = 0; j < c.labels.size(); ++j) labels[j] = c.labels[j] == reflow::ImageLabel::Boundary ? 1 : 0;
  });
}

reflow_status reflow_flow_coalescence(const reflow_flow* flow, double merge_tol, reflow_merge_pair* pairs,
                                      size_t capacity, size_t* count) {
  return guarded([&] {
    require(flow != nullptr && count != nullptr, "null pointer");
    require(pairs != nullptr || capacity == 0, "null pair buffer");
    const auto report = reflow::coalescence_report(flow->value, merge_tol);
    *count = report.pairs.size();
    for (size_t i = 0; i < std::min(capacity, report.pairs.size()); ++i) {
      const auto& p = report.pairs[i];
      pairs[i] = {p.first, p.second, p.merge_step, p.persistent ? 1 : 0};
    }
  });
}

reflow_status reflow_derivative_compute(const reflow_flow* flow, const reflow_coeffs* coeffs, size_t particle,
                                        reflow_derivative** out) {
  return guarded([&] {
    require(flow != nullptr && coeffs != nullptr && out != nullptr, "null pointer");
    *out = new reflow_derivative{reflow::derivative_flow(flow->value, coeffs->compiled, particle)};
  });
}

void reflow_derivative_destroy(reflow_derivative* track) { delete track; }

reflow_status reflow_derivative_matrix(const reflow_derivative* track, size_t step, double* out) {
  return guarded([&] {
    require(track != nullptr, "null pointer");
    if (step >= track->value.matrices.size()) reflow::fail(reflow::ErrorCode::OutOfRange, "step beyond the track");
    write_matrix(track->value.matrices[step], out);
  });
}

reflow_status reflow_derivative_jump_times(const reflow_derivative* track, size_t* steps, size_t capacity,
                                           size_t* count) {
  return guarded([&] {
    require(track != nullptr && count != nullptr, "null pointer");
    require(steps != nullptr || capacity == 0, "null step buffer");
    const auto& jumps = track->value.jump_times;
    *count = jumps.size();
    std::copy_n(jumps.begin(), std::min(capacity, jumps.size()), steps);
  });
}

reflow_status reflow_linear_flow_u(const reflow_flow* flow, const reflow_coeffs* coeffs, size_t particle,
                                   size_t s_step, size_t t_step, double* out) {
  return guarded([&] {
    require(flow != nullptr && coeffs != nullptr, "null pointer");
    write_matrix(reflow::linear_flow_U(flow->value, coeffs->compiled, particle, s_step, t_step), out);
  });
}

reflow_status reflow_fd_jacobian(reflow_domain domain, const reflow_coeffs* coeffs, const double* x, size_t dim,
                                 const reflow_noise* noise, double h, double* out) {
  return guarded([&] {
    require(coeffs != nullptr && x != nullptr && noise != nullptr, "null pointer");
    write_matrix(reflow::finite_difference_jacobian(to_domain(domain), coeffs->compiled, {x, dim}, noise->value, h), out);
  });
}

reflow_status reflow_excursions(const reflow_flow* flow, size_t particle, reflow_interval* intervals, size_t capacity,
                                size_t* count) {
  return guarded([&] {
    require(flow != nullptr && count != nullptr, "null pointer");
    require(intervals != nullptr || capacity == 0, "null interval buffer");
    const auto ex = reflow::excursions(flow->value, particle);
    *count = ex.intervals.size();
    for (size_t i = 0; i < std::min(capacity, ex.intervals.size()); ++i) {
      intervals[i] = {ex.intervals[i].begin, ex.intervals[i].end};
    }
  });
}

reflow_status reflow_rank_condition(const double* u, const double* left, const double* right, size_t dim, double tol,
                                    size_t* rank, int* satisfied) {
  return guarded([&] {
    require(rank != nullptr && satisfied != nullptr, "null pointer");
    require(dim > 0, "dimension must be positive");
    const auto r = reflow::rank_condition_check(read_matrix(u, dim), read_matrix(left, dim), read_matrix(right, dim), tol);
    *rank = r.rank;
    *satisfied = r.satisfied ? 1 : 0;
  });
}

reflow_status reflow_corollary_minor(const double* u, size_t dim, double tol, double* det_minor, int* nondegenerate) {
  return guarded([&] {
    require(det_minor != nullptr && nondegenerate != nullptr, "null pointer");
    require(dim > 0, "dimension must be positive");
    const auto r = reflow::corollary_minor_check(read_matrix(u, dim), tol);
    *det_minor = r.det_minor;
    *nondegenerate = r.nondegenerate ? 1 : 0;
  });
}

reflow_status reflow_example2_check(const reflow_coeffs* coeffs, const double* x, const double* y, double tol,
                                    int* independent) {
  return guarded([&] {
    require(coeffs != nullptr && x != nullptr && y != nullptr && independent != nullptr, "null pointer");
    *independent = reflow::example2_independence_check(coeffs->compiled, {x, 2}, {y, 2}, tol) ? 1 : 0;
  });
}

reflow_status reflow_pushforward_decompose(const reflow_flow* flow, const double* weights, size_t len, size_t step,
                                           int* parts, double* ac_mass, double* singular_mass) {
  return guarded([&] {
    require(flow != nullptr && weights != nullptr && ac_mass != nullptr && singular_mass != nullptr, "null pointer");
    const reflow::ParticleMeasure mu(flow->value.initial_points(), std::vector<double>(weights, weights + len));
    const auto dec = reflow::pushforward_decompose(mu, flow->value, step);
    if (parts != nullptr) {
      for (size_t j : dec.ac_indices) parts[j] = 0;
      for (size_t j : dec.singular_indices) parts[j] = 1;
    }
    *ac_mass = dec.ac_part.total_mass();
    *singular_mass = dec.singular_part.total_mass();
  });
}

reflow_status reflow_density_histogram(const double* points, const double* weights, size_t n, size_t dim,
                                       const double* lower, const double* upper, size_t bins, double* cells,
                                       double* out_of_box_mass) {
  return guarded([&] {
    require(lower != nullptr && upper != nullptr && cells != nullptr, "null pointer");
    require((points != nullptr && weights != nullptr) || n == 0, "null points");
    require(dim > 0, "dimension must be positive");
    reflow::ParticleMeasure part;
    if (n > 0) {
      part = reflow::ParticleMeasure(reflow::PointCloud(dim, std::vector<double>(points, points + n * dim)),
                                     std::vector<double>(weights, weights + n));
    }
    const auto grid = reflow::density_histogram(
        part, {std::vector<double>(lower, lower + dim), std::vector<double>(upper, upper + dim)}, bins);
    std::copy(grid.values.begin(), grid.values.end(), cells);
    if (out_of_box_mass != nullptr) *out_of_box_mass = grid.out_of_box_mass;
  });
}

reflow_status reflow_singular_support_distance(const double* singular, size_t n_singular, const double* cloud,
                                               size_t n_cloud, size_t dim, double* distance) {
  return guarded([&] {
    require(distance != nullptr, "null pointer");
    require(dim > 0, "dimension must be positive");
    require(singular != nullptr || n_singular == 0, "null singular points");
    require(cloud != nullptr || n_cloud == 0, "null cloud");
    const reflow::PointCloud s(dim, n_singular ? std::vector<double>(singular, singular + n_singular * dim)
                                               : std::vector<double>{});
    const reflow::PointCloud c(dim, n_cloud ? std::vector<double>(cloud, cloud + n_cloud * dim) : std::vector<double>{});
    *distance = reflow::singular_support_distance(s, c);
  });
}

reflow_status reflow_hausdorff_boxcount(const double* points, size_t n, size_t dim, const double* epsilons,
                                        size_t n_eps, double radius, size_t* counts, double* estimates) {
  return guarded([&] {
    require(epsilons != nullptr && counts != nullptr && estimates != nullptr, "null pointer");
    require(points != nullptr || n == 0, "null points");
    require(dim > 0, "dimension must be positive");
    const reflow::PointCloud cloud(dim, n ? std::vector<double>(points, points + n * dim) : std::vector<double>{});
    const auto result = reflow::hausdorff_boxcount(cloud, {epsilons, n_eps}, radius);
    for (size_t i = 0; i < result.size(); ++i) {
      counts[i] = result[i].count;
      estimates[i] = result[i].estimate;
    }
  });
}

reflow_status reflow_run_experiment(const char* config_json, const reflow_run_options* options, char** manifest_json) {
  return guarded([&] {
    require(config_json != nullptr && manifest_json != nullptr, "null pointer");
    const auto config = reflow::parse_config_text(config_json);
    reflow::RunOptions run;
    if (options != nullptr) {
      if (options->output_dir != nullptr) run.output_dir = options->output_dir;
      if (options->has_seed != 0) run.seed = options->seed;
      run.threads = options->threads == 0 ? 1 : options->threads;
    }
    const auto manifest = reflow::run_experiment(config, run);
    *manifest_json = duplicate(manifest.dump(2));
  });
}

reflow_status reflow_validate_config(const char* config_json) {
  return guarded([&] {
    require(config_json != nullptr, "null pointer");
    (void)reflow::parse_config_text(config_json);
  });
}

reflow_status reflow_presets(char** listing_json) {
  return guarded([&] {
    require(listing_json != nullptr, "null pointer");
    *listing_json = duplicate(reflow::presets_listing().dump(2));
  });
}

}  // extern "C"
