#include "manet/report_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "manet/format.hpp"

namespace manet {

std::string params_line(const SimConfig& cfg)
{
    std::ostringstream s;
    s << "n=" << cfg.n << " delta=" << fmt(cfg.delta) << " Z0=" << fmt(cfg.Z0) << " lambda=" << fmt(cfg.lambda)
      << " slots=" << cfg.slots << " warmup=" << cfg.effective_warmup() << " seed=" << cfg.seed
      << " guard=" << fmt(cfg.guard) << " area_constant=" << fmt(cfg.area_constant) << " phases=" << cfg.phases
      << " c_far=" << fmt(cfg.c_far) << " queue_cap=" << cfg.queue_cap
      << " verify_protocol=" << (cfg.verify_protocol ? 1 : 0) << " trace_interval=" << cfg.trace_interval
      << " range_ratio_max=" << fmt(cfg.range_ratio_max) << " max_step=" << cfg.max_step
      << " shape_resolution=" << cfg.shape_resolution;
    return s.str();
}

nlohmann::ordered_json config_to_json(const SimConfig& cfg)
{
    nlohmann::ordered_json j;
    j["n"] = cfg.n;
    j["delta"] = cfg.delta;
    j["Z0"] = cfg.Z0;
    j["lambda"] = cfg.lambda;
    j["slots"] = cfg.slots;
    j["warmup"] = cfg.effective_warmup();
    j["seed"] = cfg.seed;
    j["guard"] = cfg.guard;
    j["area_constant"] = cfg.area_constant;
    j["phases"] = cfg.phases;
    j["c_far"] = cfg.c_far;
    j["queue_cap"] = cfg.queue_cap;
    j["verify_protocol"] = cfg.verify_protocol;
    j["trace_interval"] = cfg.trace_interval;
    j["range_ratio_max"] = cfg.range_ratio_max;
    j["max_step"] = cfg.max_step;
    j["shape_resolution"] = cfg.shape_resolution;
    return j;
}

nlohmann::ordered_json report_to_json(const SimConfig& cfg, const MetricsReport& rep)
{
    nlohmann::ordered_json j;
    j["params"] = config_to_json(cfg);
    j["throughput"] = rep.throughput();
    if (auto d = rep.mean_delay())
        j["mean_delay"] = *d;
    else
        j["mean_delay"] = nullptr;
    j["injected"] = rep.injected;
    j["delivered"] = rep.delivered_total;
    j["delivered_in_window"] = rep.total_delivered();
    j["in_flight_end"] = rep.in_flight_end;
    j["transmissions"] = rep.transmissions;
    j["protocol_checked"] = rep.protocol_checked;
    j["hop_mismatches"] = rep.hop_mismatches;
    j["max_initial_step"] = rep.max_initial_step;
    j["max_step_bound"] = rep.max_step_bound;
    j["i_max"] = rep.i_max_formula;
    j["unstable"] = rep.unstable;
    j["instability"] = rep.instability;
    auto& steps = j["steps"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.step_slots.size(); ++i) {
        nlohmann::ordered_json s;
        s["step"] = i;
        s["slots"] = rep.step_slots[i];
        s["transmissions"] = i < rep.step_transmissions.size() ? rep.step_transmissions[i] : 0;
        if (i < rep.service.size()) {
            s["service_count"] = rep.service[i].total;
            s["service_mean"] = rep.service[i].mean();
            s["service_variance"] = rep.service[i].variance();
        }
        steps.push_back(s);
    }
    auto& hops = j["hop_histogram"] = nlohmann::ordered_json::object();
    for (auto [k, c] : rep.hop_histogram) hops[std::to_string(k)] = c;
    auto& init = j["initial_step_histogram"] = nlohmann::ordered_json::object();
    for (auto [k, c] : rep.initial_step_histogram) init[std::to_string(k)] = c;
    auto& rings = j["rings"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.rings)
        rings.push_back({{"step", r.step},
                         {"samples", r.samples},
                         {"mean_count", r.mean_count},
                         {"min_count", r.min_count},
                         {"empty_fraction", r.empty_fraction}});
    return j;
}

void write_flows_csv(std::ostream& out, const SimConfig& cfg, const MetricsReport& rep)
{
    out << "# params " << params_line(cfg) << "\n";
    out << "src,delivered,delay_sum,flow_slots,throughput,mean_delay\n";
    for (std::size_t k = 0; k < rep.delivered.size(); ++k) {
        double thr = rep.flow_slots[k] > 0 ? static_cast<double>(rep.delivered[k]) / rep.flow_slots[k] : 0.0;
        out << k << ',' << rep.delivered[k] << ',' << rep.delay_sum[k] << ',' << rep.flow_slots[k] << ','
            << fmt(thr) << ',';
        if (rep.delivered[k] > 0) out << fmt(static_cast<double>(rep.delay_sum[k]) / rep.delivered[k]);
        out << '\n';
    }
}

void write_steps_csv(std::ostream& out, const SimConfig& cfg, const MetricsReport& rep)
{
    out << "# params " << params_line(cfg) << "\n";
    out << "step,slots,transmissions,service_count,service_mean,service_variance\n";
    for (std::size_t i = 0; i < rep.step_slots.size(); ++i) {
        const Histogram* h = i < rep.service.size() ? &rep.service[i] : nullptr;
        out << i << ',' << rep.step_slots[i] << ','
            << (i < rep.step_transmissions.size() ? rep.step_transmissions[i] : 0) << ',' << (h ? h->total : 0)
            << ',' << fmt(h ? h->mean() : 0.0) << ',' << fmt(h ? h->variance() : 0.0) << '\n';
    }
}

void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace manet
