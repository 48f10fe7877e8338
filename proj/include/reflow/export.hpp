#pragma once

// CSV writers for every artifact the engine emits. Numbers are printed with
// 17 significant digits so binary64 values round-trip exactly.

#include <ostream>
#include <string>
#include <vector>

#include "reflow/derivative.hpp"
#include "reflow/flow.hpp"
#include "reflow/transport.hpp"

namespace reflow {

std::string format_number(double v);

/// particle,step,t,x_1..x_d,xi,reflected over the recorded steps.
void write_trajectories_csv(std::ostream& os, const FlowResult& flow);
/// particle,tau_index,tau_time_or_NEVER; tau_index is -1 for NEVER.
void write_hitting_times_csv(std::ostream& os, const FlowResult& flow);
/// particle,step,row,col,value for the given steps of each track.
void write_derivative_csv(std::ostream& os, const std::vector<DerivativeTrack>& tracks,
                          const std::vector<std::size_t>& steps);
/// particle,step
void write_jump_times_csv(std::ostream& os, const std::vector<DerivativeTrack>& tracks);
/// particle,weight,part,x_1..x_d
void write_decomposition_csv(std::ostream& os, const TransportDecomposition& dec);
/// epsilon,count,estimate
void write_boxcount_csv(std::ostream& os, const std::vector<BoxCount>& counts);
/// first,second,merge_step,persistent
void write_coalescence_csv(std::ostream& os, const CoalescenceReport& report);
/// i_1..i_d,center_1..center_d,density
void write_density_csv(std::ostream& os, const DensityGrid& grid);

}  // namespace reflow
