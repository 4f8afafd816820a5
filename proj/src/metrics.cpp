#include "rmcnoc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace rmcnoc {

EnergyCounts EnergyCounts::operator-(const EnergyCounts& o) const {
    return {buffer_writes - o.buffer_writes, buffer_reads - o.buffer_reads,
            channel_stage_traversals - o.channel_stage_traversals, router_traversals - o.router_traversals,
            reversals - o.reversals};
}

EnergyCounts energy_counts(const MeshNetwork& net) {
    const NetworkCounters& c = net.counters();
    const std::uint64_t stored = net.stored_channel_flits();
    EnergyCounts e;
    e.buffer_writes = c.router_buffer_writes + stored;
    e.buffer_reads = c.router_buffer_reads + stored;
    e.channel_stage_traversals = c.channel_traversals * static_cast<std::uint64_t>(net.params().buffers_per_subchannel);
    e.router_traversals = c.router_traversals;
    e.reversals = net.completed_reversals();
    return e;
}

EnergyBreakdown compute_energy(const EnergyCounts& n, const EnergyModel& m) {
    EnergyBreakdown b;
    b.buffer_write = static_cast<double>(n.buffer_writes) * m.buffer_write;
    b.buffer_read = static_cast<double>(n.buffer_reads) * m.buffer_read;
    b.channel = static_cast<double>(n.channel_stage_traversals) * m.channel_stage_traverse;
    b.router = static_cast<double>(n.router_traversals) * m.router_traverse;
    b.reversal = static_cast<double>(n.reversals) * m.reversal_event;
    b.total = b.buffer_write + b.buffer_read + b.channel + b.router + b.reversal;
    return b;
}

int count_distinct(std::span<const int> configs) {
    std::vector<int> v(configs.begin(), configs.end());
    std::sort(v.begin(), v.end());
    return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

std::vector<int> adjacent_configs(const MeshNetwork& net, int node) {
    std::vector<int> out;
    for (Port p : kLinkPorts) {
        const PortLink pl = net.port_link(node, p);
        if (!pl.valid()) continue;
        out.push_back(net.channel(pl.channel).allocation()[opposite(pl.outgoing)]);
    }
    return out;
}

bool is_interior(const MeshNetwork& net, int node) {
    for (Port p : kLinkPorts)
        if (!net.port_link(node, p).valid()) return false;
    return true;
}

void ConfigHistogram::add(int distinct) {
    if (distinct < 1) return;
    ++counts_[static_cast<std::size_t>(std::min(distinct, 3) - 1)];
}

std::array<double, 3> ConfigHistogram::fractions() const {
    const auto n = static_cast<double>(samples());
    if (n == 0.0) return {0.0, 0.0, 0.0};
    return {counts_[0] / n, counts_[1] / n, counts_[2] / n};
}

MetricsCollector::MetricsCollector(std::uint64_t warmup, int window) : warmup_(warmup), window_(window) {
    if (window_ < 1) throw std::invalid_argument("histogram window must be positive");
}

void MetricsCollector::on_cycle(const MeshNetwork& net) {
    const std::uint64_t cycle = net.cycle();
    if (cycle + 1 == warmup_) at_warmup_ = energy_counts(net);
    if (cycle < warmup_) return;
    ++measured_cycles_;
    for (const Ejection& e : net.ejections()) {
        ++ejected_flits_;
        if (e.flit.creation_cycle < warmup_) continue;
        const double lat = static_cast<double>(e.cycle - e.flit.creation_cycle + 1);
        ++flits_;
        flit_latency_sum_ += lat;
        if (closes_packet(e.flit.kind)) {
            ++packets_;
            packet_latency_sum_ += lat;
        }
    }
    for (std::uint8_t f : net.falsefull_flags()) falsefulls_ += f;

    if ((cycle + 1) % static_cast<std::uint64_t>(window_) == 0) {
        for (int n = 0; n < net.shape().nodes(); ++n) {
            const std::vector<int> cfg = adjacent_configs(net, n);
            if (cfg.empty()) continue;
            const int d = count_distinct(cfg);
            hist_all_.add(d);
            if (is_interior(net, n)) hist_interior_.add(d);
        }
    }
}

std::optional<double> MetricsCollector::avg_packet_latency() const {
    if (packets_ == 0) return std::nullopt;
    return packet_latency_sum_ / static_cast<double>(packets_);
}

std::optional<double> MetricsCollector::avg_flit_latency() const {
    if (flits_ == 0) return std::nullopt;
    return flit_latency_sum_ / static_cast<double>(flits_);
}

EnergyCounts MetricsCollector::energy_since_warmup(const MeshNetwork& net) const {
    return energy_counts(net) - at_warmup_;
}

std::uint64_t MetricsCollector::reversals_since_warmup(const MeshNetwork& net) const {
    return net.completed_reversals() - at_warmup_.reversals;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad integer '" + s + "'");
    return v;
}

std::optional<double> to_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return to_double(s);
}

}  // namespace

std::vector<std::string> csv_header() {
    return {"policy",         "workload",         "injection_rate",   "packet_length",   "buffers",
            "mesh_width",     "mesh_height",      "seed",             "cycles",          "warmup",
            "packets",        "avg_packet_latency", "avg_flit_latency", "throughput",    "falsefull_rate",
            "hist_all_1",     "hist_all_2",       "hist_all_3",       "hist_interior_1", "hist_interior_2",
            "hist_interior_3", "energy_total",    "energy_buffer_write", "energy_buffer_read", "energy_channel",
            "energy_router",  "energy_reversal",  "reversals",        "reward_mean",     "reward_std",
            "offered_flits",  "ejected_flits"};
}

std::string to_csv_row(const MetricsRecord& r) {
    const std::vector<std::string> cells = {r.policy,
                                            r.workload,
                                            fmt(r.injection_rate),
                                            std::to_string(r.packet_length),
                                            r.buffers,
                                            std::to_string(r.mesh_width),
                                            std::to_string(r.mesh_height),
                                            std::to_string(r.seed),
                                            std::to_string(r.cycles),
                                            std::to_string(r.warmup),
                                            std::to_string(r.packets),
                                            fmt(r.avg_packet_latency),
                                            fmt(r.avg_flit_latency),
                                            fmt(r.throughput),
                                            fmt(r.falsefull_rate),
                                            fmt(r.hist_all[0]),
                                            fmt(r.hist_all[1]),
                                            fmt(r.hist_all[2]),
                                            fmt(r.hist_interior[0]),
                                            fmt(r.hist_interior[1]),
                                            fmt(r.hist_interior[2]),
                                            fmt(r.energy.total),
                                            fmt(r.energy.buffer_write),
                                            fmt(r.energy.buffer_read),
                                            fmt(r.energy.channel),
                                            fmt(r.energy.router),
                                            fmt(r.energy.reversal),
                                            std::to_string(r.reversals),
                                            fmt(r.reward_mean),
                                            fmt(r.reward_std),
                                            std::to_string(r.offered_flits),
                                            std::to_string(r.ejected_flits)};
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out;
}

std::string to_csv(std::span<const MetricsRecord> records) {
    std::string out;
    const auto header = csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const MetricsRecord& r : records) out += to_csv_row(r) + '\n';
    return out;
}

std::vector<MetricsRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty metrics file");
    const auto header = csv_header();
    if (split(line) != header) throw std::invalid_argument("metrics header does not match this version");
    std::vector<MetricsRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto c = split(line);
        if (c.size() != header.size())
            throw std::invalid_argument("metrics line " + std::to_string(line_no) + " has " +
                                        std::to_string(c.size()) + " fields, expected " +
                                        std::to_string(header.size()));
        try {
            MetricsRecord r;
            std::size_t k = 0;
            r.policy = c[k++];
            r.workload = c[k++];
            r.injection_rate = to_double(c[k++]);
            r.packet_length = static_cast<int>(to_u64(c[k++]));
            r.buffers = c[k++];
            r.mesh_width = static_cast<int>(to_u64(c[k++]));
            r.mesh_height = static_cast<int>(to_u64(c[k++]));
            r.seed = to_u64(c[k++]);
            r.cycles = to_u64(c[k++]);
            r.warmup = to_u64(c[k++]);
            r.packets = to_u64(c[k++]);
            r.avg_packet_latency = to_opt(c[k++]);
            r.avg_flit_latency = to_opt(c[k++]);
            r.throughput = to_double(c[k++]);
            r.falsefull_rate = to_double(c[k++]);
            for (double& h : r.hist_all) h = to_double(c[k++]);
            for (double& h : r.hist_interior) h = to_double(c[k++]);
            r.energy.total = to_double(c[k++]);
            r.energy.buffer_write = to_double(c[k++]);
            r.energy.buffer_read = to_double(c[k++]);
            r.energy.channel = to_double(c[k++]);
            r.energy.router = to_double(c[k++]);
            r.energy.reversal = to_double(c[k++]);
            r.reversals = to_u64(c[k++]);
            r.reward_mean = to_opt(c[k++]);
            r.reward_std = to_opt(c[k++]);
            r.offered_flits = to_u64(c[k++]);
            r.ejected_flits = to_u64(c[k++]);
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::invalid_argument("metrics line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace rmcnoc
