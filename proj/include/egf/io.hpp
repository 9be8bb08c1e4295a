#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "egf/diagnostics.hpp"
#include "egf/ibm.hpp"
#include "egf/pde.hpp"
#include "json.hpp"

namespace egf {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// %.17g
std::string format_real(double v);
// Snapshot file tag: "20" for 20.0, "0.5" for 0.5.
std::string time_tag(double t);

// Every writer returns the path it wrote and throws IoError on failure.
std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text);

std::string timeseries_csv(const std::vector<Trajectory>& trajs);
std::string histogram_csv(const Histogram& h);
nlohmann::ordered_json events_json(const std::vector<Trajectory>& trajs);

std::string pde_timeseries_csv(const DensityTrajectory& traj);
std::string pde_density_csv(const Grid& grid, const std::vector<double>& u);
nlohmann::ordered_json pde_meta_json(const DensityTrajectory& traj);

std::string ensemble_summary_csv(const EnsembleSummary& s);
nlohmann::ordered_json comparison_json(const ComparisonReport& r);

// Readers for the files above (used by `compare`).
std::vector<Trajectory> read_timeseries_csv(const std::filesystem::path& path);
Histogram read_histogram_csv(const std::filesystem::path& path);
DensityTrajectory read_pde_outputs(const std::filesystem::path& dir);

}  // namespace egf
