#include "fwperf/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fwperf/timeutil.hpp"
#include "fwperf/units.hpp"

namespace fwperf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::ifstream open_reader(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header) ||
        (header.back() == '\r' ? header.substr(0, header.size() - 1) : header) !=
            expected_header)
        throw std::runtime_error("unexpected header in " + path + " (want '" +
                                 expected_header + "')");
    return in;
}

std::ofstream open_writer(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

void write_detector_csv(const std::string& path, const std::vector<DetectorSample>& samples,
                        const TimeGrid& grid) {
    auto out = open_writer(path);
    out << "timestamp,vds_id,lane,count,occupancy\n";
    char buf[160];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.6f,%.8f\n",
                      format_iso8601(grid.interval_start_s(s.interval)).c_str(),
                      s.vds_id.c_str(), s.lane, s.count, s.occupancy);
        out << buf;
    }
}

std::vector<DetectorSample> read_detector_csv(const std::string& path, const TimeGrid& grid) {
    auto in = open_reader(path, "timestamp,vds_id,lane,count,occupancy");
    std::vector<DetectorSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 5) throw std::runtime_error("bad detector row in " + path);
        DetectorSample s;
        s.interval = grid.interval_of(parse_iso8601(f[0]));
        if (s.interval < 0) continue;  // outside the analysis window
        s.vds_id = f[1];
        s.lane = std::stoi(f[2]);
        s.count = std::stod(f[3]);
        s.occupancy = std::stod(f[4]);
        if (s.count < 0.0) throw std::runtime_error("negative count in " + path);
        if (s.occupancy < 0.0 || s.occupancy > 1.0)
            throw std::runtime_error("occupancy out of [0,1] in " + path);
        out.push_back(std::move(s));
    }
    return out;
}

void write_vendor_csv(const std::string& path, const std::vector<LinkTravelTime>& records,
                      const TimeGrid& grid) {
    auto out = open_writer(path);
    out << "timestamp,link_id,travel_time_seconds,probe_count\n";
    char buf[128];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.3f,%d\n",
                      format_iso8601(grid.interval_start_s(r.interval)).c_str(),
                      r.link_id.c_str(), r.travel_time_s, r.probe_count);
        out << buf;
    }
}

std::vector<LinkTravelTime> read_vendor_csv(const std::string& path, const TimeGrid& grid) {
    auto in = open_reader(path, "timestamp,link_id,travel_time_seconds,probe_count");
    std::vector<LinkTravelTime> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4) throw std::runtime_error("bad vendor row in " + path);
        LinkTravelTime r;
        r.interval = grid.interval_of(parse_iso8601(f[0]));
        if (r.interval < 0) continue;
        r.link_id = f[1];
        r.travel_time_s = std::stod(f[2]);
        r.probe_count = std::stoi(f[3]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_truth_csv(const std::string& path, const GroundTruth& gt) {
    auto out = open_writer(path);
    out << "timestamp,position_mi,flow,speed,density\n";
    TimeGrid grid = gt.minute_grid();
    char buf[160];
    for (int m = 0; m < gt.n_minutes(); ++m) {
        std::string ts = format_iso8601(grid.interval_start_s(m));
        for (int c = 0; c < gt.n_cells(); ++c) {
            std::snprintf(buf, sizeof(buf), "%s,%.4f,%.6f,%.6f,%.6f\n", ts.c_str(),
                          gt.cell_center_mi[c], gt.flow_vph[c][m], gt.speed_mph[c][m],
                          gt.density_vpm[c][m]);
            out << buf;
        }
    }
}

int TruthFrame::cell_nearest(double pos_mi) const {
    int best = 0;
    double best_d = std::abs(positions_mi.empty() ? 0.0 : positions_mi[0] - pos_mi);
    for (std::size_t c = 1; c < positions_mi.size(); ++c) {
        double d = std::abs(positions_mi[c] - pos_mi);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

TruthFrame read_truth_csv(const std::string& path, const TimeGrid& grid) {
    auto in = open_reader(path, "timestamp,position_mi,flow,speed,density");
    TruthFrame tf;
    std::string line;
    struct Row {
        int minute;
        double pos, flow, speed, density;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 5) throw std::runtime_error("bad truth row in " + path);
        Row r;
        r.minute = grid.interval_of(parse_iso8601(f[0]));
        if (r.minute < 0) continue;
        r.pos = std::stod(f[1]);
        r.flow = std::stod(f[2]);
        r.speed = std::stod(f[3]);
        r.density = std::stod(f[4]);
        rows.push_back(r);
    }
    if (rows.empty()) throw std::runtime_error("no usable rows in " + path);

    for (const auto& r : rows) {
        if (tf.positions_mi.empty() || r.pos > tf.positions_mi.back() + 1e-12) {
            if (!tf.positions_mi.empty() && r.minute != rows.front().minute) break;
            tf.positions_mi.push_back(r.pos);
        } else {
            break;  // positions repeat once the next minute starts
        }
    }
    const int nc = tf.n_cells();
    tf.flow_vph.assign(nc, std::vector<double>(grid.n_intervals, 0.0));
    tf.speed_mph.assign(nc, std::vector<double>(grid.n_intervals, 0.0));
    tf.density_vpm.assign(nc, std::vector<double>(grid.n_intervals, 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int c = static_cast<int>(i % nc);
        const auto& r = rows[i];
        if (std::abs(tf.positions_mi[c] - r.pos) > 1e-9)
            throw std::runtime_error("ragged position grid in " + path);
        tf.flow_vph[c][r.minute] = r.flow;
        tf.speed_mph[c][r.minute] = r.speed;
        tf.density_vpm[c][r.minute] = r.density;
    }
    return tf;
}

}  // namespace fwperf
