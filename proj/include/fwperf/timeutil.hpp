#ifndef FWPERF_TIMEUTIL_HPP
#define FWPERF_TIMEUTIL_HPP

#include <cstdint>
#include <string>

namespace fwperf {

// Epoch seconds, UTC. Timestamps in all CSV files are ISO-8601
// ("YYYY-MM-DDTHH:MM:SS", optional trailing 'Z').
int64_t parse_iso8601(const std::string& s);
std::string format_iso8601(int64_t epoch_s);

}  // namespace fwperf

#endif
