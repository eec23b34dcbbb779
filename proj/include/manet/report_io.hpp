#pragma once

#include <ostream>
#include <string>

#include "json.hpp"
#include "manet/simcore.hpp"

namespace manet {

// Space-separated key=value list of every SimConfig field, used as the first line of CSV outputs.
std::string params_line(const SimConfig& cfg);

nlohmann::ordered_json config_to_json(const SimConfig& cfg);
nlohmann::ordered_json report_to_json(const SimConfig& cfg, const MetricsReport& rep);

// "# params ..." line followed by src,delivered,delay_sum,flow_slots,throughput,mean_delay rows.
void write_flows_csv(std::ostream& out, const SimConfig& cfg, const MetricsReport& rep);
// Per-step schedule usage and service time moments.
void write_steps_csv(std::ostream& out, const SimConfig& cfg, const MetricsReport& rep);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace manet
