#include "isac/experiment.hpp"

#include <charconv>
#include <ostream>

namespace isac {

namespace {

// Shortest round-trip form, so reruns compare bitwise.
std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_preamble(std::ostream& os, const ExperimentSpec& spec) {
  os << "# config:";
  for (const auto& [k, v] : describe(spec)) os << " " << k << "=" << v << ";";
  os << "\n";
}

}  // namespace

void write_csv(std::ostream& os, const ExperimentSpec& spec, const SweepTable& table) {
  write_preamble(os, spec);
  os << table.grid_name
     << ",scheme,mean_sum_rate,stderr_sum_rate,mean_comm_rate,mean_sense_mi,mean_radiated_power_mw\n";
  for (const auto& r : table.rows) {
    os << num(r.grid_value) << "," << to_string(r.scheme) << "," << num(r.mean_objective) << ","
       << num(r.stderr_objective) << "," << num(r.mean_comm_rate) << "," << num(r.mean_sense_mi)
       << "," << num(r.mean_radiated_power_mw) << "\n";
  }
}

void write_csv(std::ostream& os, const ExperimentSpec& spec, const ConvergenceTable& table) {
  write_preamble(os, spec);
  os << "iteration,snr_db,mean_objective\n";
  for (const auto& r : table.rows)
    os << r.iteration << "," << num(r.snr_db) << "," << num(r.mean_objective) << "\n";
}

void write_csv(std::ostream& os, const ExperimentSpec& spec, const BeamPatternTable& table) {
  write_preamble(os, spec);
  os << "angle_deg,proposed_linear_db,proposed_nonlinear_db,mrt_linear_db,mrt_nonlinear_db,"
        "proposed_fd_linear_db,proposed_fd_nonlinear_db\n";
  for (const auto& r : table.rows) {
    os << num(r.angle_deg) << "," << num(r.proposed_linear_db) << ","
       << num(r.proposed_nonlinear_db) << "," << num(r.mrt_linear_db) << ","
       << num(r.mrt_nonlinear_db) << "," << num(r.proposed_fd_linear_db) << ","
       << num(r.proposed_fd_nonlinear_db) << "\n";
  }
}

}  // namespace isac
