#include "rmcnoc/workload.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rmcnoc {

std::string to_string(WorkloadKind k) {
    switch (k) {
    case WorkloadKind::UniformRandom: return "uniform_random";
    case WorkloadKind::Transpose: return "transpose";
    case WorkloadKind::Hotspot: return "hotspot";
    case WorkloadKind::MultiApp: return "multi_app";
    case WorkloadKind::Trace: return "trace";
    }
    return "unknown";
}

WorkloadKind parse_workload_kind(const std::string& s) {
    if (s == "uniform_random" || s == "uniform") return WorkloadKind::UniformRandom;
    if (s == "transpose") return WorkloadKind::Transpose;
    if (s == "hotspot") return WorkloadKind::Hotspot;
    if (s == "multi_app") return WorkloadKind::MultiApp;
    if (s == "trace") return WorkloadKind::Trace;
    throw std::invalid_argument("unknown workload kind '" + s + "'");
}

void validate(const WorkloadSpec& spec, const MeshShape& shape) {
    if (spec.injection_rate < 0.0 || spec.injection_rate > 1.0)
        throw std::invalid_argument("injection_rate must lie in [0, 1]");
    if (spec.packet_length < 1) throw std::invalid_argument("packet_length must be at least 1");
    if (shape.nodes() < 2 && spec.injection_rate > 0.0 && spec.kind != WorkloadKind::Trace)
        throw std::invalid_argument("synthetic traffic needs at least two nodes");
    switch (spec.kind) {
    case WorkloadKind::Transpose:
        if (shape.width != shape.height) throw std::invalid_argument("transpose traffic needs a square mesh");
        break;
    case WorkloadKind::Hotspot:
        if (spec.hotspot.weight < 0.0 || spec.hotspot.weight > 1.0)
            throw std::invalid_argument("hotspot weight must lie in [0, 1]");
        for (int n : spec.hotspot.nodes)
            if (n < 0 || n >= shape.nodes()) throw std::invalid_argument("hotspot node outside the mesh");
        break;
    case WorkloadKind::MultiApp: {
        if (spec.phases.empty()) throw std::invalid_argument("multi_app workload needs at least one phase");
        for (const PhaseSpec& ph : spec.phases) {
            if (ph.duration < 1) throw std::invalid_argument("phase duration must be at least 1");
            std::vector<int> cover(static_cast<std::size_t>(shape.nodes()), 0);
            for (const RegionProfile& rp : ph.regions) {
                if (rp.region.x0 < 0 || rp.region.y0 < 0 || rp.region.x1 > shape.width ||
                    rp.region.y1 > shape.height || rp.region.size() <= 0)
                    throw std::invalid_argument("region outside the mesh");
                if (rp.injection_rate < 0.0 || rp.locality < 0.0 || rp.memory_fraction < 0.0 ||
                    rp.partner_fraction < 0.0 ||
                    rp.locality + rp.memory_fraction + rp.partner_fraction > 1.0 + 1e-12 ||
                    (rp.partner_fraction > 0.0 && rp.partner.size() == 0))
                    throw std::invalid_argument("invalid region profile probabilities");
                if (rp.burst_period < 0 || rp.duty <= 0.0 || rp.duty > 1.0)
                    throw std::invalid_argument("invalid burst duty cycle");
                for (int y = rp.region.y0; y < rp.region.y1; ++y)
                    for (int x = rp.region.x0; x < rp.region.x1; ++x) ++cover[static_cast<std::size_t>(shape.node_id({x, y}))];
            }
            if (std::any_of(cover.begin(), cover.end(), [](int c) { return c != 1; }))
                throw std::invalid_argument("phase regions must partition the mesh");
        }
        break;
    }
    case WorkloadKind::Trace:
        if (spec.trace_path.empty()) throw std::invalid_argument("trace workload needs a trace path");
        break;
    case WorkloadKind::UniformRandom: break;
    }
}

// ---------------------------------------------------------------- trace

TraceReader::TraceReader(std::istream& in, int node_count) : in_(in), nodes_(node_count) {}

std::optional<TraceRecord> TraceReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first)) continue;

        long long cycle = 0, src = 0, dst = 0, length = 0;
        std::istringstream head(first);
        if (!(head >> cycle) || !(fields >> src >> dst >> length))
            throw TraceError(line_, "expected 'cycle src dst length'");
        std::string extra;
        if (fields >> extra) throw TraceError(line_, "unexpected trailing field '" + extra + "'");
        if (cycle < 0) throw TraceError(line_, "negative cycle");
        if (src < 0 || src >= nodes_) throw TraceError(line_, "source node " + std::to_string(src) + " out of range");
        if (dst < 0 || dst >= nodes_)
            throw TraceError(line_, "destination node " + std::to_string(dst) + " out of range");
        if (length < 1) throw TraceError(line_, "packet length must be at least 1");
        if (static_cast<std::uint64_t>(cycle) < last_cycle_) throw TraceError(line_, "cycle goes backward");
        last_cycle_ = static_cast<std::uint64_t>(cycle);
        return TraceRecord{static_cast<std::uint64_t>(cycle), static_cast<int>(src), static_cast<int>(dst),
                           static_cast<int>(length)};
    }
    return std::nullopt;
}

std::vector<TraceRecord> parse_trace(const std::string& path, int node_count) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
    TraceReader reader(in, node_count);
    std::vector<TraceRecord> out;
    while (auto r = reader.next()) out.push_back(*r);
    return out;
}

// ---------------------------------------------------------------- generator

TrafficGenerator::TrafficGenerator(WorkloadSpec spec, MeshShape shape)
    : spec_(std::move(spec)), shape_(shape), rng_(spec_.seed) {
    validate(spec_, shape_);
    if (spec_.kind == WorkloadKind::MultiApp) {
        for (const PhaseSpec& ph : spec_.phases) {
            schedule_length_ += ph.duration;
            std::vector<int> lookup(static_cast<std::size_t>(shape_.nodes()), 0);
            for (std::size_t r = 0; r < ph.regions.size(); ++r) {
                const Region& reg = ph.regions[r].region;
                for (int y = reg.y0; y < reg.y1; ++y)
                    for (int x = reg.x0; x < reg.x1; ++x)
                        lookup[static_cast<std::size_t>(shape_.node_id({x, y}))] = static_cast<int>(r);
            }
            node_profile_.push_back(std::move(lookup));
        }
    }
    if (spec_.kind == WorkloadKind::Trace) {
        trace_file_ = std::make_unique<std::ifstream>(spec_.trace_path);
        if (!*trace_file_) throw std::runtime_error("cannot open trace file '" + spec_.trace_path + "'");
        trace_ = std::make_unique<TraceReader>(*trace_file_, shape_.nodes());
        pending_ = trace_->next();
    }
}

double TrafficGenerator::uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

int TrafficGenerator::uniform_other(int src) {
    const int n = shape_.nodes();
    int d = static_cast<int>(rng_() % static_cast<std::uint64_t>(n - 1));
    return d >= src ? d + 1 : d;
}

int TrafficGenerator::pick_in_region(const Region& r, int src) {
    const int size = r.size();
    if (size <= 1) return uniform_other(src);
    const Coord s = shape_.coord(src);
    const int self = r.contains(s) ? (s.y - r.y0) * (r.x1 - r.x0) + (s.x - r.x0) : -1;
    int k = static_cast<int>(rng_() % static_cast<std::uint64_t>(self >= 0 ? size - 1 : size));
    if (self >= 0 && k >= self) ++k;
    const int w = r.x1 - r.x0;
    return shape_.node_id({r.x0 + k % w, r.y0 + k / w});
}

int TrafficGenerator::pick_outside_region(const Region& r, int src) {
    const int outside = shape_.nodes() - r.size();
    if (outside <= 0) return uniform_other(src);
    int k = static_cast<int>(rng_() % static_cast<std::uint64_t>(outside));
    for (int n = 0; n < shape_.nodes(); ++n) {
        if (r.contains(shape_.coord(n))) continue;
        if (k-- == 0) return n;
    }
    return uniform_other(src);
}

void TrafficGenerator::emit(std::uint64_t cycle, int src, int dst, int length, std::vector<Packet>& out) {
    out.push_back(Packet{next_packet_id_++, shape_.coord(src), shape_.coord(dst), length, cycle});
    ++offered_packets_;
    offered_flits_ += static_cast<std::uint64_t>(length);
}

std::size_t TrafficGenerator::phase_index(std::uint64_t cycle) const {
    if (spec_.phases.empty()) return 0;
    std::uint64_t t = cycle % schedule_length_;
    for (std::size_t i = 0; i < spec_.phases.size(); ++i) {
        if (t < spec_.phases[i].duration) return i;
        t -= spec_.phases[i].duration;
    }
    return spec_.phases.size() - 1;
}

void TrafficGenerator::generate(std::uint64_t cycle, std::vector<Packet>& out) {
    const int len = spec_.packet_length;
    switch (spec_.kind) {
    case WorkloadKind::MultiApp: generate_multi_app(cycle, out); return;
    case WorkloadKind::Trace: generate_trace(cycle, out); return;
    default: break;
    }
    if (spec_.injection_rate <= 0.0) return;
    const double p = spec_.injection_rate / len;
    for (int src = 0; src < shape_.nodes(); ++src) {
        if (uniform01() >= p) continue;
        int dst = 0;
        if (spec_.kind == WorkloadKind::UniformRandom) {
            dst = uniform_other(src);
        } else if (spec_.kind == WorkloadKind::Transpose) {
            const Coord s = shape_.coord(src);
            if (s.x == s.y) continue;
            dst = shape_.node_id({s.y, s.x});
        } else {
            const auto& hs = spec_.hotspot.nodes;
            if (!hs.empty() && uniform01() < spec_.hotspot.weight) {
                dst = hs[static_cast<std::size_t>(rng_() % hs.size())];
                if (dst == src) dst = uniform_other(src);
            } else {
                dst = uniform_other(src);
            }
        }
        emit(cycle, src, dst, len, out);
    }
}

void TrafficGenerator::generate_multi_app(std::uint64_t cycle, std::vector<Packet>& out) {
    const std::size_t ph = phase_index(cycle);
    const PhaseSpec& phase = spec_.phases[ph];
    const int len = spec_.packet_length;
    for (int src = 0; src < shape_.nodes(); ++src) {
        const auto r = static_cast<std::size_t>(node_profile_[ph][static_cast<std::size_t>(src)]);
        const RegionProfile& prof = phase.regions[r];
        if (prof.injection_rate <= 0.0) continue;
        double p = prof.injection_rate / len;
        if (prof.burst_period > 0) {
            // Regions are staggered so their bursts do not line up.
            const std::uint64_t offset = r * 97u;
            const auto on_cycles = static_cast<std::uint64_t>(std::lround(prof.duty * prof.burst_period));
            const bool on = (cycle + offset) % static_cast<std::uint64_t>(prof.burst_period) < on_cycles;
            p = on ? p / prof.duty : 0.0;
        }
        if (uniform01() >= std::min(p, 1.0)) continue;
        const double u = uniform01();
        int dst = 0;
        if (u < prof.memory_fraction && prof.memory_node >= 0 && prof.memory_node != src)
            dst = prof.memory_node;
        else if (u < prof.memory_fraction + prof.locality)
            dst = pick_in_region(prof.region, src);
        else if (u < prof.memory_fraction + prof.locality + prof.partner_fraction)
            dst = pick_in_region(prof.partner, src);
        else
            dst = pick_outside_region(prof.region, src);
        emit(cycle, src, dst, len, out);
    }
}

void TrafficGenerator::generate_trace(std::uint64_t cycle, std::vector<Packet>& out) {
    while (pending_ && pending_->cycle <= cycle) {
        emit(cycle, pending_->src, pending_->dst, pending_->length, out);
        pending_ = trace_->next();
    }
}

// ---------------------------------------------------------------- presets

namespace {

enum class Partner { None, Horizontal, Vertical, Diagonal };

struct Behaviour {
    double rate;
    double locality;
    double memory_fraction;
    int burst_period;
    double duty;
    Partner partner = Partner::None;
    double partner_fraction = 0.0;
};

struct App {
    const char* name;
    std::vector<Behaviour> phases;
};

constexpr Behaviour kIdle{0.01, 0.5, 0.0, 0, 1.0};
constexpr Behaviour kCompute{0.05, 0.8, 0.05, 0, 1.0};
constexpr Behaviour kLocal{0.20, 0.9, 0.0, 0, 1.0};
constexpr Behaviour kGlobal{0.12, 0.0, 0.0, 0, 1.0};
constexpr Behaviour kMemory{0.15, 0.4, 0.2, 200, 0.5};
constexpr Behaviour kProduceH{0.20, 0.3, 0.0, 0, 1.0, Partner::Horizontal, 0.5};
constexpr Behaviour kProduceV{0.20, 0.3, 0.0, 0, 1.0, Partner::Vertical, 0.5};
constexpr Behaviour kBurstD{0.20, 0.3, 0.0, 400, 0.5, Partner::Diagonal, 0.5};

const std::vector<App>& app_library() {
    static const std::vector<App> apps = {
        {"stream", {kProduceH, kProduceH, kCompute, kProduceV}},
        {"compute", {kCompute, kCompute, kCompute, kCompute}},
        {"pipeline", {kLocal, kLocal, kLocal, kLocal}},
        {"alltoall", {kGlobal, kGlobal, kGlobal, kGlobal}},
        {"phased", {kCompute, kMemory, kCompute, kMemory}},
        {"bursty", {kBurstD, kBurstD, kIdle, kBurstD}},
        {"scatter", {kProduceV, kIdle, kProduceV, kProduceH}},
        {"mixed", {kLocal, kGlobal, kMemory, kProduceH}},
        {"idle", {kIdle, kIdle, kCompute, kIdle}},
        {"exchange", {kGlobal, kBurstD, kProduceV, kProduceH}},
    };
    return apps;
}

struct PresetDef {
    const char* name;
    std::vector<int> apps;  // indices into the library, one per region
};

const std::vector<PresetDef>& preset_defs() {
    static const std::vector<PresetDef> defs = {
        {"w1", {0, 1, 2, 3, 4, 5, 6, 7}}, {"w2", {0, 1, 2, 3, 4, 5, 9, 7}},
        {"w3", {0, 1, 2, 3, 4, 9, 6, 7}}, {"w4", {0, 1, 2, 3, 5, 9, 6, 7}},
        {"w5", {0, 1, 3, 4, 8, 5, 9, 6}}, {"w6", {1, 2, 3, 4, 5, 9, 6, 7}},
        {"w7", {1, 2, 3, 4, 8, 5, 6, 7}}, {"w8", {1, 2, 3, 4, 8, 5, 9, 7}},
    };
    return defs;
}

std::vector<Region> region_grid(const MeshShape& shape) {
    const int cols = std::min(2, shape.width);
    const int rows = std::min(4, shape.height);
    std::vector<Region> out;
    for (int j = 0; j < rows; ++j)
        for (int i = 0; i < cols; ++i)
            out.push_back({i * shape.width / cols, j * shape.height / rows, (i + 1) * shape.width / cols,
                           (j + 1) * shape.height / rows});
    return out;
}

std::vector<int> memory_controllers(const MeshShape& shape) {
    const int w = shape.width, h = shape.height;
    return {shape.node_id({std::max(0, w / 2 - 1), 0}), shape.node_id({w / 2, h - 1}),
            shape.node_id({0, h / 2}), shape.node_id({w - 1, std::max(0, h / 2 - 1)})};
}

int nearest_controller(const Region& r, const MeshShape& shape, const std::vector<int>& mcs) {
    // Twice the region centre, to stay in integers.
    const int cx = r.x0 + r.x1 - 1, cy = r.y0 + r.y1 - 1;
    int best = mcs.front(), best_d = 1 << 30;
    for (int mc : mcs) {
        const Coord c = shape.coord(mc);
        const int d = std::abs(2 * c.x - cx) + std::abs(2 * c.y - cy);
        if (d < best_d) {
            best_d = d;
            best = mc;
        }
    }
    return best;
}

// Regions are numbered row-major, see region_grid.
std::size_t partner_region(std::size_t r, Partner kind, const MeshShape& shape) {
    const auto cols = static_cast<std::size_t>(std::min(2, shape.width));
    const auto rows = static_cast<std::size_t>(std::min(4, shape.height));
    const std::size_t col = r % cols, row = r / cols;
    const std::size_t other_col = cols - 1 - col;
    const std::size_t other_row = (row + rows / 2) % rows;
    switch (kind) {
        case Partner::Horizontal:
            return row * cols + other_col;
        case Partner::Vertical:
            return other_row * cols + col;
        case Partner::Diagonal:
            return other_row * cols + other_col;
        case Partner::None:
            break;
    }
    return r;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const PresetDef& d : preset_defs()) out.emplace_back(d.name);
    return out;
}

std::vector<std::string> training_presets() { return {"w1", "w2", "w3", "w4", "w5"}; }
std::vector<std::string> heldout_presets() { return {"w6", "w7", "w8"}; }

WorkloadSpec make_preset(const std::string& name, const MeshShape& shape, double mean_rate, std::uint64_t seed) {
    const auto& defs = preset_defs();
    auto it = std::find_if(defs.begin(), defs.end(), [&](const PresetDef& d) { return name == d.name; });
    if (it == defs.end()) throw std::invalid_argument("unknown workload preset '" + name + "'");

    const std::vector<Region> regions = region_grid(shape);
    const std::vector<int> mcs = memory_controllers(shape);
    const auto& apps = app_library();
    constexpr std::uint64_t kPhaseCycles = 5000;
    constexpr std::size_t kPhases = 4;

    // Shuffle the region assignment with a preset-specific (not run-specific) stream.
    std::vector<int> assignment = it->apps;
    std::mt19937_64 shuffle_rng(0x5eedULL + static_cast<std::uint64_t>(it - defs.begin()));
    std::shuffle(assignment.begin(), assignment.end(), shuffle_rng);

    WorkloadSpec spec;
    spec.kind = WorkloadKind::MultiApp;
    spec.packet_length = 4;
    spec.preset = name;
    spec.seed = seed;
    double rate_sum = 0.0;
    double node_phases = 0.0;
    for (std::size_t p = 0; p < kPhases; ++p) {
        PhaseSpec ph;
        ph.duration = kPhaseCycles;
        for (std::size_t r = 0; r < regions.size(); ++r) {
            const App& app = apps[static_cast<std::size_t>(assignment[r % assignment.size()])];
            const Behaviour& b = app.phases[p % app.phases.size()];
            RegionProfile prof;
            prof.region = regions[r];
            prof.injection_rate = b.rate;
            prof.locality = b.locality;
            prof.memory_fraction = b.memory_fraction;
            prof.burst_period = b.burst_period;
            prof.duty = b.duty;
            prof.memory_node = nearest_controller(regions[r], shape, mcs);
            if (b.partner != Partner::None) {
                prof.partner_fraction = b.partner_fraction;
                prof.partner = regions[partner_region(r, b.partner, shape)];
            }
            rate_sum += b.rate * regions[r].size();
            node_phases += regions[r].size();
            ph.regions.push_back(prof);
        }
        spec.phases.push_back(std::move(ph));
    }
    const double base_mean = rate_sum / node_phases;
    const double scale = base_mean > 0.0 ? mean_rate / base_mean : 0.0;
    for (PhaseSpec& ph : spec.phases)
        for (RegionProfile& prof : ph.regions) prof.injection_rate = std::min(1.0, prof.injection_rate * scale);
    spec.injection_rate = mean_rate;
    return spec;
}

}  // namespace rmcnoc
