#ifndef FWPERF_CSVIO_HPP
#define FWPERF_CSVIO_HPP

#include <string>
#include <vector>

#include "fwperf/detector.hpp"
#include "fwperf/sim.hpp"
#include "fwperf/time_grid.hpp"
#include "fwperf/ttfuse.hpp"

namespace fwperf {

// Every file starts with its schema as a header row. Rows are minute
// records; absent rows mean missing data.

void write_detector_csv(const std::string& path, const std::vector<DetectorSample>& samples,
                        const TimeGrid& grid);
std::vector<DetectorSample> read_detector_csv(const std::string& path, const TimeGrid& grid);

void write_vendor_csv(const std::string& path, const std::vector<LinkTravelTime>& records,
                      const TimeGrid& grid);
std::vector<LinkTravelTime> read_vendor_csv(const std::string& path, const TimeGrid& grid);

// Fine-grid ground truth, one row per (minute, position).
struct TruthFrame {
    std::vector<double> positions_mi;                // fine cell centers
    std::vector<std::vector<double>> flow_vph;       // [cell][minute]
    std::vector<std::vector<double>> speed_mph;
    std::vector<std::vector<double>> density_vpm;

    int n_cells() const { return static_cast<int>(positions_mi.size()); }
    int n_minutes() const {
        return positions_mi.empty() ? 0 : static_cast<int>(flow_vph.front().size());
    }
    int cell_nearest(double pos_mi) const;
};

void write_truth_csv(const std::string& path, const GroundTruth& gt);
TruthFrame read_truth_csv(const std::string& path, const TimeGrid& grid);

}  // namespace fwperf

#endif
