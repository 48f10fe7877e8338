#include "reflow/export.hpp"

#include <cstdio>

namespace reflow {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void coordinate_header(std::ostream& os, const char* prefix, std::size_t d) {
  for (std::size_t c = 1; c <= d; ++c) os << ',' << prefix << c;
}

}  // namespace

void write_trajectories_csv(std::ostream& os, const FlowResult& flow) {
  os << "particle,step,t";
  coordinate_header(os, "x_", flow.dim());
  os << ",xi,reflected\n";
  for (std::size_t j = 0; j < flow.num_particles(); ++j) {
    for (std::size_t step : flow.recorded_steps()) {
      os << j << ',' << step << ',' << format_number(flow.grid().time(step));
      for (double v : flow.position(step, j)) os << ',' << format_number(v);
      os << ',' << format_number(flow.local_time(step, j)) << ',' << (flow.reflected(step, j) ? 1 : 0) << '\n';
    }
  }
}

void write_hitting_times_csv(std::ostream& os, const FlowResult& flow) {
  os << "particle,tau_index,tau_time_or_NEVER\n";
  for (const auto& h : first_hitting_times(flow)) {
    os << h.particle << ',';
    if (h.tau) {
      os << *h.tau << ',' << format_number(flow.grid().time(*h.tau)) << '\n';
    } else {
      os << "-1,NEVER\n";
    }
  }
}

void write_derivative_csv(std::ostream& os, const std::vector<DerivativeTrack>& tracks,
                          const std::vector<std::size_t>& steps) {
  os << "particle,step,row,col,value\n";
  for (const auto& track : tracks) {
    for (std::size_t step : steps) {
      const Matrix& m = track.matrices.at(step);
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          os << track.particle << ',' << step << ',' << r << ',' << c << ',' << format_number(m(r, c)) << '\n';
        }
      }
    }
  }
}

void write_jump_times_csv(std::ostream& os, const std::vector<DerivativeTrack>& tracks) {
  os << "particle,step\n";
  for (const auto& track : tracks) {
    for (std::size_t step : track.jump_times) os << track.particle << ',' << step << '\n';
  }
}

void write_decomposition_csv(std::ostream& os, const TransportDecomposition& dec) {
  const std::size_t d = !dec.ac_part.empty() ? dec.ac_part.points().dim() : dec.singular_part.points().dim();
  os << "particle,weight,part";
  coordinate_header(os, "x_", d);
  os << '\n';
  // Rows in particle order regardless of part.
  std::size_t a = 0, s = 0;
  while (a < dec.ac_indices.size() || s < dec.singular_indices.size()) {
    const bool take_ac = s >= dec.singular_indices.size() ||
                         (a < dec.ac_indices.size() && dec.ac_indices[a] < dec.singular_indices[s]);
    const auto& part = take_ac ? dec.ac_part : dec.singular_part;
    const std::size_t local = take_ac ? a++ : s++;
    const std::size_t particle = take_ac ? dec.ac_indices[local] : dec.singular_indices[local];
    os << particle << ',' << format_number(part.weights()[local]) << ',' << (take_ac ? "ac" : "singular");
    for (double v : part.points()[local]) os << ',' << format_number(v);
    os << '\n';
  }
}

void write_boxcount_csv(std::ostream& os, const std::vector<BoxCount>& counts) {
  os << "epsilon,count,estimate\n";
  for (const auto& c : counts) os << format_number(c.epsilon) << ',' << c.count << ',' << format_number(c.estimate) << '\n';
}

void write_coalescence_csv(std::ostream& os, const CoalescenceReport& report) {
  os << "first,second,merge_step,persistent\n";
  for (const auto& p : report.pairs) {
    os << p.first << ',' << p.second << ',' << p.merge_step << ',' << (p.persistent ? 1 : 0) << '\n';
  }
}

void write_density_csv(std::ostream& os, const DensityGrid& grid) {
  const std::size_t d = grid.box.lower.size();
  os << (d > 0 ? "i_1" : "");
  for (std::size_t c = 2; c <= d; ++c) os << ",i_" << c;
  coordinate_header(os, "center_", d);
  os << ",density\n";
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t flat = 0; flat < grid.values.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t c = d; c-- > 0;) {
      idx[c] = rem % grid.bins;
      rem /= grid.bins;
    }
    for (std::size_t c = 0; c < d; ++c) os << (c ? "," : "") << idx[c];
    for (std::size_t c = 0; c < d; ++c) {
      const double w = (grid.box.upper[c] - grid.box.lower[c]) / static_cast<double>(grid.bins);
      os << ',' << format_number(grid.box.lower[c] + (static_cast<double>(idx[c]) + 0.5) * w);
    }
    os << ',' << format_number(grid.values[flat]) << '\n';
  }
}

}  // namespace reflow
