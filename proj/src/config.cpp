#include "rmcnoc/config.hpp"

#include <algorithm>
#include <initializer_list>
#include <regex>

#include <json.hpp>

#include "rmcnoc/weights.hpp"

namespace rmcnoc {

using nlohmann::json;

std::string BufferConfig::key() const {
    return std::to_string(subchannels) + "S_" + std::to_string(buffers_per_subchannel) + "CB_" +
           std::to_string(router_buffers) + "RB";
}

BufferConfig parse_buffer_key(const std::string& key) {
    static const std::regex re(R"((\d+)S_(\d+)CB_(\d+)RB)");
    std::smatch m;
    if (!std::regex_match(key, m, re)) throw ConfigError("buffer key '" + key + "' is not of the form <S>S_<CB>CB_<R>RB");
    BufferConfig b{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
    if (b.subchannels < 2 || b.buffers_per_subchannel < 1 || b.router_buffers < 1)
        throw ConfigError("buffer key '" + key + "' has a zero count");
    return b;
}

BufferConfig buffers_for_total(int subchannels, int per_port_total) {
    const int half = subchannels / 2;
    if (subchannels < 2 || half < 1) throw ConfigError("at least two subchannels are required");
    const int cb = (per_port_total - 2) / half;
    if (cb < 1) throw ConfigError("per-port total " + std::to_string(per_port_total) + " too small for S=" +
                                  std::to_string(subchannels));
    return {subchannels, cb, per_port_total - half * cb};
}

ExperimentConfig::ExperimentConfig() {
    workload.kind = WorkloadKind::UniformRandom;
    workload.injection_rate = 0.1;
}

void ExperimentConfig::set_buffers(const BufferConfig& b) {
    subchannels = b.subchannels;
    buffers_per_subchannel = b.buffers_per_subchannel;
    router_buffers = b.router_buffers;
}

NetworkParams ExperimentConfig::network_params() const {
    NetworkParams p;
    p.shape = shape();
    p.router_buffers = router_buffers;
    p.subchannels = subchannels;
    p.buffers_per_subchannel = buffers_per_subchannel;
    p.reversal_latency = reversal_latency;
    return p;
}

std::string ExperimentConfig::workload_label() const {
    if (!workload.preset.empty()) return workload.preset;
    return to_string(workload.kind);
}

int ExperimentConfig::policy_epoch() const {
    switch (policy) {
        case PolicyKind::Qore:
            return qore_epoch;
        case PolicyKind::Cure:
            return cure_epoch;
        case PolicyKind::Race:
            return race_epoch;
        default:
            return 0;
    }
}

void ExperimentConfig::validate() const {
    if (mesh_width < 1 || mesh_height < 1) throw ConfigError("mesh dimensions must be at least 1");
    if (router_buffers < 1 || buffers_per_subchannel < 1) throw ConfigError("buffer counts must be at least 1");
    if (subchannels < 2) throw ConfigError("at least two subchannels are required");
    if (reversal_latency < 0) throw ConfigError("reversal latency cannot be negative");
    if (race_epoch < 1 || qore_epoch < 1 || cure_epoch < 1) throw ConfigError("epoch lengths must be at least 1");
    if (total_cycles < 1) throw ConfigError("total_cycles must be at least 1");
    if (warmup_cycles >= total_cycles) throw ConfigError("warmup_cycles must be smaller than total_cycles");
    if (workload.injection_rate < 0.0 || workload.injection_rate > 1.0)
        throw ConfigError("injection_rate must lie in [0, 1]");
    if (workload.packet_length < 1) throw ConfigError("packet_length must be at least 1");
    if (workload.kind == WorkloadKind::MultiApp && workload.preset.empty() && workload.phases.empty())
        throw ConfigError("multi_app workloads need a preset name or explicit phases");
    if (workload.kind == WorkloadKind::Trace && workload.trace_path.empty())
        throw ConfigError("trace workloads need trace_path");
    if (training.episodes < 1 || training.episode_cycles < 1) throw ConfigError("training budget must be positive");
    for (double e : {energy.buffer_write, energy.buffer_read, energy.channel_stage_traverse, energy.router_traverse,
                     energy.reversal_event})
        if (e < 0.0) throw ConfigError("energy constants cannot be negative");
}

WorkloadSpec resolve_workload(const WorkloadSpec& spec, const MeshShape& shape, std::uint64_t run_seed) {
    WorkloadSpec out = spec;
    if (spec.kind == WorkloadKind::MultiApp && spec.phases.empty()) {
        out = make_preset(spec.preset, shape, spec.injection_rate, run_seed);
        out.packet_length = spec.packet_length;
    }
    if (out.kind == WorkloadKind::Hotspot && out.hotspot.nodes.empty()) {
        const int cx = shape.width / 2, cy = shape.height / 2;
        for (int y = std::max(0, cy - 1); y <= cy && y < shape.height; ++y)
            for (int x = std::max(0, cx - 1); x <= cx && x < shape.width; ++x) out.hotspot.nodes.push_back(shape.node_id({x, y}));
        if (out.hotspot.weight == 0.0) out.hotspot.weight = 0.2;
    }
    out.seed = agent_seed(run_seed, "workload:" + (spec.preset.empty() ? to_string(spec.kind) : spec.preset));
    validate(out, shape);
    return out;
}

// ---------------------------------------------------------------- JSON

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json region_json(const Region& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

Region region_from(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ConfigError("regions are [x0, y0, x1, y1]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json workload_json(const WorkloadSpec& w) {
    json j;
    j["kind"] = to_string(w.kind);
    j["injection_rate"] = w.injection_rate;
    j["packet_length"] = w.packet_length;
    if (!w.preset.empty()) j["preset"] = w.preset;
    if (!w.trace_path.empty()) j["trace_path"] = w.trace_path;
    if (!w.hotspot.nodes.empty()) j["hotspot"] = {{"nodes", w.hotspot.nodes}, {"weight", w.hotspot.weight}};
    if (!w.phases.empty() && w.preset.empty()) {
        json phases = json::array();
        for (const PhaseSpec& ph : w.phases) {
            json regions = json::array();
            for (const RegionProfile& rp : ph.regions) {
                json r;
                r["region"] = region_json(rp.region);
                r["injection_rate"] = rp.injection_rate;
                r["locality"] = rp.locality;
                r["memory_fraction"] = rp.memory_fraction;
                r["memory_node"] = rp.memory_node;
                r["burst_period"] = rp.burst_period;
                r["duty"] = rp.duty;
                r["partner_fraction"] = rp.partner_fraction;
                r["partner"] = region_json(rp.partner);
                regions.push_back(std::move(r));
            }
            phases.push_back({{"duration", ph.duration}, {"regions", std::move(regions)}});
        }
        j["phases"] = std::move(phases);
    }
    return j;
}

WorkloadSpec workload_from(const json& j) {
    check_keys(j, {"kind", "injection_rate", "packet_length", "preset", "trace_path", "hotspot", "phases"}, "workload");
    WorkloadSpec w;
    if (j.contains("kind")) w.kind = parse_workload_kind(j.at("kind").get<std::string>());
    read(j, "injection_rate", w.injection_rate);
    read(j, "packet_length", w.packet_length);
    read(j, "preset", w.preset);
    read(j, "trace_path", w.trace_path);
    if (!w.preset.empty() && !j.contains("kind")) w.kind = WorkloadKind::MultiApp;
    if (j.contains("hotspot")) {
        const json& h = j.at("hotspot");
        check_keys(h, {"nodes", "weight"}, "workload.hotspot");
        read(h, "nodes", w.hotspot.nodes);
        read(h, "weight", w.hotspot.weight);
    }
    if (j.contains("phases")) {
        for (const json& ph : j.at("phases")) {
            check_keys(ph, {"duration", "regions"}, "workload.phases[]");
            PhaseSpec spec;
            read(ph, "duration", spec.duration);
            for (const json& r : ph.at("regions")) {
                check_keys(r,
                           {"region", "injection_rate", "locality", "memory_fraction", "memory_node", "burst_period",
                            "duty", "partner_fraction", "partner"},
                           "workload.phases[].regions[]");
                RegionProfile rp;
                rp.region = region_from(r.at("region"));
                read(r, "injection_rate", rp.injection_rate);
                read(r, "locality", rp.locality);
                read(r, "memory_fraction", rp.memory_fraction);
                read(r, "memory_node", rp.memory_node);
                read(r, "burst_period", rp.burst_period);
                read(r, "duty", rp.duty);
                read(r, "partner_fraction", rp.partner_fraction);
                if (r.contains("partner")) rp.partner = region_from(r.at("partner"));
                spec.regions.push_back(rp);
            }
            w.phases.push_back(std::move(spec));
        }
    }
    return w;
}

json agent_json(const AgentConfig& a) {
    return {{"alpha", a.alpha},
            {"gamma", a.gamma},
            {"epsilon_start", a.epsilon_start},
            {"epsilon_end", a.epsilon_end},
            {"epsilon_decay_fraction", a.epsilon_decay_fraction},
            {"replay_capacity", a.replay_capacity},
            {"batch_size", a.batch_size},
            {"target_sync", a.target_sync},
            {"use_replay", a.use_replay},
            {"use_target", a.use_target},
            {"reward_scale", a.reward_scale},
            {"with_bias", a.with_bias}};
}

AgentConfig agent_from(const json& j) {
    check_keys(j,
               {"alpha", "gamma", "epsilon_start", "epsilon_end", "epsilon_decay_fraction", "replay_capacity",
                "batch_size", "target_sync", "use_replay", "use_target", "reward_scale", "with_bias"},
               "agent");
    AgentConfig a;
    read(j, "alpha", a.alpha);
    read(j, "gamma", a.gamma);
    read(j, "epsilon_start", a.epsilon_start);
    read(j, "epsilon_end", a.epsilon_end);
    read(j, "epsilon_decay_fraction", a.epsilon_decay_fraction);
    read(j, "replay_capacity", a.replay_capacity);
    read(j, "batch_size", a.batch_size);
    read(j, "target_sync", a.target_sync);
    read(j, "use_replay", a.use_replay);
    read(j, "use_target", a.use_target);
    read(j, "reward_scale", a.reward_scale);
    read(j, "with_bias", a.with_bias);
    return a;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["mesh"] = {{"width", c.mesh_width}, {"height", c.mesh_height}};
    j["buffers"] = {{"router_buffers", c.router_buffers},
                    {"subchannels", c.subchannels},
                    {"buffers_per_subchannel", c.buffers_per_subchannel},
                    {"reversal_latency", c.reversal_latency}};
    j["policy"] = to_string(c.policy);
    j["epochs"] = {{"race", c.race_epoch}, {"qore", c.qore_epoch}, {"cure", c.cure_epoch}};
    j["qore_threshold"] = c.qore_threshold;
    j["reward_epsilon"] = c.reward_epsilon;
    j["race_credit_scale"] = to_string(c.race_credit_scale);
    j["total_cycles"] = c.total_cycles;
    j["warmup_cycles"] = c.warmup_cycles;
    j["workload"] = workload_json(c.workload);
    j["agent"] = agent_json(c.agent);
    j["training"] = {{"workloads", c.training.workloads},
                     {"episodes", c.training.episodes},
                     {"episode_cycles", c.training.episode_cycles},
                     {"convergence_window", c.training.convergence_window},
                     {"convergence_tolerance", c.training.convergence_tolerance}};
    j["energy"] = {{"buffer_write", c.energy.buffer_write},
                   {"buffer_read", c.energy.buffer_read},
                   {"channel_stage_traverse", c.energy.channel_stage_traverse},
                   {"router_traverse", c.energy.router_traverse},
                   {"reversal_event", c.energy.reversal_event}};
    j["seed"] = c.seed;
    j["parallel_agents"] = c.parallel_agents;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    try {
        check_keys(j,
                   {"mesh", "buffers", "policy", "epochs", "qore_threshold", "reward_epsilon", "race_credit_scale", "total_cycles",
                    "warmup_cycles", "workload", "agent", "training", "energy", "seed", "parallel_agents"},
                   "config");
        if (j.contains("mesh")) {
            const json& m = j.at("mesh");
            check_keys(m, {"width", "height"}, "mesh");
            read(m, "width", c.mesh_width);
            read(m, "height", c.mesh_height);
        }
        if (j.contains("buffers")) {
            const json& b = j.at("buffers");
            check_keys(b, {"router_buffers", "subchannels", "buffers_per_subchannel", "reversal_latency", "key"},
                       "buffers");
            if (b.contains("key")) c.set_buffers(parse_buffer_key(b.at("key").get<std::string>()));
            read(b, "router_buffers", c.router_buffers);
            read(b, "subchannels", c.subchannels);
            read(b, "buffers_per_subchannel", c.buffers_per_subchannel);
            read(b, "reversal_latency", c.reversal_latency);
        }
        if (j.contains("policy")) c.policy = parse_policy_kind(j.at("policy").get<std::string>());
        if (j.contains("epochs")) {
            const json& e = j.at("epochs");
            check_keys(e, {"race", "qore", "cure"}, "epochs");
            read(e, "race", c.race_epoch);
            read(e, "qore", c.qore_epoch);
            read(e, "cure", c.cure_epoch);
        }
        read(j, "qore_threshold", c.qore_threshold);
        read(j, "reward_epsilon", c.reward_epsilon);
        if (j.contains("race_credit_scale"))
            c.race_credit_scale = parse_credit_scale(j.at("race_credit_scale").get<std::string>());
        read(j, "total_cycles", c.total_cycles);
        read(j, "warmup_cycles", c.warmup_cycles);
        if (j.contains("workload")) c.workload = workload_from(j.at("workload"));
        if (j.contains("agent")) c.agent = agent_from(j.at("agent"));
        if (j.contains("training")) {
            const json& t = j.at("training");
            check_keys(t, {"workloads", "episodes", "episode_cycles", "convergence_window", "convergence_tolerance"},
                       "training");
            read(t, "workloads", c.training.workloads);
            read(t, "episodes", c.training.episodes);
            read(t, "episode_cycles", c.training.episode_cycles);
            read(t, "convergence_window", c.training.convergence_window);
            read(t, "convergence_tolerance", c.training.convergence_tolerance);
        }
        if (j.contains("energy")) {
            const json& e = j.at("energy");
            check_keys(e, {"buffer_write", "buffer_read", "channel_stage_traverse", "router_traverse", "reversal_event"},
                       "energy");
            read(e, "buffer_write", c.energy.buffer_write);
            read(e, "buffer_read", c.energy.buffer_read);
            read(e, "channel_stage_traverse", c.energy.channel_stage_traverse);
            read(e, "router_traverse", c.energy.router_traverse);
            read(e, "reversal_event", c.energy.reversal_event);
        }
        read(j, "seed", c.seed);
        read(j, "parallel_agents", c.parallel_agents);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_file(path)); }

}  // namespace rmcnoc
