#include "rmcnoc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "rmcnoc/policy.hpp"
#include "rmcnoc/workload.hpp"

namespace rmcnoc {

using nlohmann::json;

namespace {

std::vector<int> sizes_for(PolicyKind k, int subchannels) {
    return k == PolicyKind::Race ? RacePolicy::layer_sizes(subchannels) : CurePolicy::layer_sizes(subchannels);
}

std::vector<std::string> keys_for(PolicyKind k, const MeshNetwork& net) {
    return k == PolicyKind::Race ? RacePolicy::agent_keys(net) : CurePolicy::agent_keys(net);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

/// A training workload name is either a preset or a synthetic pattern kind.
WorkloadSpec training_workload(const std::string& name, const WorkloadSpec& base) {
    WorkloadSpec w = base;
    const auto presets = preset_names();
    if (std::find(presets.begin(), presets.end(), name) != presets.end()) {
        w = WorkloadSpec{};
        w.kind = WorkloadKind::MultiApp;
        w.preset = name;
        w.injection_rate = base.injection_rate;
        w.packet_length = base.packet_length;
        return w;
    }
    w.kind = parse_workload_kind(name);
    w.preset.clear();
    w.phases.clear();
    return w;
}

}  // namespace

// ---------------------------------------------------------------- evaluation

MetricsRecord run_eval(const ExperimentConfig& cfg, const WeightSet* weights) {
    cfg.validate();
    NetworkParams params = cfg.network_params();
    if (cfg.policy == PolicyKind::Oracle) params = oracle_configure(params);

    MeshNetwork net(params);
    TrafficGenerator gen(resolve_workload(cfg.workload, cfg.shape(), cfg.seed), cfg.shape());
    net.set_injection_source(&gen);
    MetricsCollector metrics(cfg.warmup_cycles, 50);
    net.add_observer(&metrics);

    const Execution exec = cfg.parallel_agents ? Execution::Parallel : Execution::Serial;
    std::unique_ptr<QorePolicy> qore;
    std::unique_ptr<AgentPool> pool;
    std::unique_ptr<RacePolicy> race;
    std::unique_ptr<CurePolicy> cure;
    const RewardLog* rewards = nullptr;

    if (cfg.policy == PolicyKind::Qore) {
        qore = std::make_unique<QorePolicy>(cfg.qore_epoch, cfg.qore_threshold);
        net.set_controller(qore.get());
    } else if (is_learned(cfg.policy)) {
        const std::string name = to_string(cfg.policy);
        if (weights == nullptr) throw WeightFormatError(name + " evaluation needs trained weights");
        const auto sizes = sizes_for(cfg.policy, cfg.subchannels);
        check_weights(*weights, name, cfg.mesh_width, cfg.mesh_height, cfg.subchannels, sizes);
        if (cfg.policy == PolicyKind::Cure && !weights->workload.empty() && weights->workload != cfg.workload_label())
            throw WeightFormatError("cure weights were trained for '" + weights->workload + "', not '" +
                                    cfg.workload_label() + "'");
        pool = std::make_unique<AgentPool>(keys_for(cfg.policy, net), sizes, cfg.agent);
        load_into_pool(*weights, *pool);
        if (cfg.policy == PolicyKind::Race) {
            if (weights->credit_scale != to_string(cfg.race_credit_scale))
                throw WeightFormatError("race weights were trained with credit scale '" + weights->credit_scale +
                                        "', not '" + to_string(cfg.race_credit_scale) + "'");
            race = std::make_unique<RacePolicy>(*pool, cfg.race_epoch, cfg.reward_epsilon, exec);
            race->set_credit_scale(cfg.race_credit_scale);
            net.set_controller(race.get());
            rewards = &race->rewards();
        } else {
            cure = std::make_unique<CurePolicy>(*pool, cfg.cure_epoch, cfg.reward_epsilon, exec);
            net.set_controller(cure.get());
            rewards = &cure->rewards();
        }
    }

    net.run(cfg.warmup_cycles);
    const std::uint64_t offered_at_warmup = gen.offered_flits();
    net.run(cfg.total_cycles - cfg.warmup_cycles);

    MetricsRecord r;
    r.policy = to_string(cfg.policy);
    r.workload = cfg.workload_label();
    r.injection_rate = cfg.workload.injection_rate;
    r.packet_length = cfg.workload.packet_length;
    r.buffers = cfg.buffers().key();
    r.mesh_width = cfg.mesh_width;
    r.mesh_height = cfg.mesh_height;
    r.seed = cfg.seed;
    r.cycles = cfg.total_cycles;
    r.warmup = cfg.warmup_cycles;
    r.packets = metrics.packets();
    r.avg_packet_latency = metrics.avg_packet_latency();
    r.avg_flit_latency = metrics.avg_flit_latency();
    const auto measured = static_cast<double>(metrics.measured_cycles());
    const auto nodes = static_cast<double>(cfg.shape().nodes());
    r.throughput = measured > 0 ? static_cast<double>(metrics.ejected_flits()) / (nodes * measured) : 0.0;
    r.falsefull_rate = measured > 0 ? static_cast<double>(metrics.falsefulls()) / measured : 0.0;
    r.hist_all = metrics.histogram_all().fractions();
    r.hist_interior = metrics.histogram_interior().fractions();
    r.energy = compute_energy(metrics.energy_since_warmup(net), cfg.energy);
    r.reversals = metrics.reversals_since_warmup(net);
    if (rewards != nullptr && !rewards->epoch_mean.empty()) {
        const auto [m, s] = mean_std(rewards->epoch_mean);
        r.reward_mean = m;
        r.reward_std = s;
    }
    r.offered_flits = gen.offered_flits() - offered_at_warmup;
    r.ejected_flits = metrics.ejected_flits();
    return r;
}

// ---------------------------------------------------------------- training

TrainingReport run_training(const ExperimentConfig& cfg, const EpisodeCallback& on_episode) {
    cfg.validate();
    if (!is_learned(cfg.policy)) throw ConfigError("only race and cure policies are trained");
    const bool is_race = cfg.policy == PolicyKind::Race;
    const Execution exec = cfg.parallel_agents ? Execution::Parallel : Execution::Serial;

    std::vector<WorkloadSpec> workloads;
    if (!cfg.training.workloads.empty()) {
        for (const std::string& name : cfg.training.workloads)
            workloads.push_back(training_workload(name, cfg.workload));
    } else if (is_race) {
        for (const std::string& name : training_presets()) workloads.push_back(training_workload(name, cfg.workload));
    } else {
        workloads.push_back(cfg.workload);
    }

    const NetworkParams params = cfg.network_params();
    AgentConfig agent_cfg = cfg.agent;
    agent_cfg.seed = cfg.seed;
    const auto sizes = sizes_for(cfg.policy, cfg.subchannels);
    std::vector<std::string> keys;
    {
        const MeshNetwork probe(params);
        keys = keys_for(cfg.policy, probe);
    }
    AgentPool pool(keys, sizes, agent_cfg);

    const int epoch = cfg.policy_epoch();
    RacePolicy race(pool, epoch, cfg.reward_epsilon, exec);
    CurePolicy cure(pool, epoch, cfg.reward_epsilon, exec);
    EpochController* controller = is_race ? static_cast<EpochController*>(&race) : &cure;
    RewardLog& log = is_race ? race.rewards() : cure.rewards();
    race.set_training(true);
    race.set_credit_scale(cfg.race_credit_scale);
    cure.set_training(true);

    const std::uint64_t epochs_per_episode = std::max<std::uint64_t>(1, cfg.training.episode_cycles / epoch);
    const double budget = static_cast<double>(epochs_per_episode) * cfg.training.episodes;
    ConvergenceTracker tracker(cfg.training.convergence_window, cfg.training.convergence_tolerance);

    TrainingReport report;
    std::uint64_t epochs_done = 0;
    double epsilon = agent_cfg.epsilon_start;
    for (int e = 0; e < cfg.training.episodes; ++e) {
        const WorkloadSpec& base = workloads[static_cast<std::size_t>(e) % workloads.size()];
        const std::uint64_t episode_seed = mix_seed(cfg.seed + static_cast<std::uint64_t>(e));
        MeshNetwork net(params);
        TrafficGenerator gen(resolve_workload(base, cfg.shape(), episode_seed), cfg.shape());
        net.set_injection_source(&gen);
        net.set_controller(controller);
        race.reset_episode();
        cure.reset_episode();
        log.clear();

        try {
            for (std::uint64_t k = 0; k < epochs_per_episode; ++k) {
                epsilon = epsilon_at(agent_cfg, static_cast<double>(epochs_done) / budget);
                race.set_epsilon(epsilon);
                cure.set_epsilon(epsilon);
                net.run(static_cast<std::uint64_t>(epoch));
                ++epochs_done;
            }
        } catch (const TrainingError& err) {
            throw TrainingError("training diverged in episode " + std::to_string(e) + ": " + err.what());
        }

        for (double m : log.epoch_mean) tracker.record(m);
        EpisodeSummary s;
        s.episode = e;
        s.workload = base.preset.empty() ? to_string(base.kind) : base.preset;
        s.epsilon_end = epsilon;
        s.mean_reward = mean_std(log.epoch_mean).first;
        s.falsefulls = net.counters().falsefull_cycles;
        report.episodes.push_back(s);
        if (on_episode) on_episode(s);
        ++report.episodes_run;

        const bool decayed = static_cast<double>(epochs_done) / budget >= agent_cfg.epsilon_decay_fraction;
        if (decayed && tracker.converged()) {
            report.converged = true;
            break;
        }
    }

    report.epochs = tracker.epochs();
    for (std::size_t back = 0; back < 3; ++back)
        if (auto m = tracker.window_mean(back)) report.final_windows.push_back(*m);
    report.weights = weights_from_pool(pool, to_string(cfg.policy), cfg.mesh_width, cfg.mesh_height, cfg.subchannels);
    if (!is_race) report.weights.workload = cfg.workload_label();
    if (is_race) report.weights.credit_scale = to_string(cfg.race_credit_scale);
    return report;
}

// ---------------------------------------------------------------- batches and sweeps

std::vector<MetricsRecord> run_batch(std::span<const RunRequest> requests, Execution exec) {
    std::vector<MetricsRecord> out(requests.size());
    if (exec == Execution::Parallel) {
        std::vector<std::exception_ptr> errors(requests.size());
        const auto n = static_cast<std::ptrdiff_t>(requests.size());
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            try {
                out[k] = run_eval(requests[k].config, requests[k].weights);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (std::size_t i = 0; i < requests.size(); ++i) out[i] = run_eval(requests[i].config, requests[i].weights);
    }
    return out;
}

std::vector<ExperimentConfig> sweep_configs(const SweepPlan& plan) {
    std::vector<ExperimentConfig> out;
    for (int s : plan.subchannels) {
        const BufferConfig b = buffers_for_total(s, plan.per_port_total);
        for (PolicyKind p : plan.policies) {
            for (std::uint64_t seed : plan.seeds) {
                ExperimentConfig c = plan.base;
                c.set_buffers(b);
                c.policy = p;
                c.seed = seed;
                c.validate();
                out.push_back(c);
            }
        }
    }
    return out;
}

const WeightSet* find_weights(std::span<const WeightSet> sets, const ExperimentConfig& cfg) {
    const std::string name = to_string(cfg.policy);
    for (const WeightSet& w : sets) {
        if (w.policy != name || w.mesh_width != cfg.mesh_width || w.mesh_height != cfg.mesh_height ||
            w.subchannels != cfg.subchannels)
            continue;
        if (!w.workload.empty() && w.workload != cfg.workload_label()) continue;
        return &w;
    }
    return nullptr;
}

// ---------------------------------------------------------------- reports

namespace {

using PairKey = std::tuple<std::string, std::string, int, std::string, int, int, std::uint64_t>;

PairKey pair_key(const MetricsRecord& r) {
    char rate[40];
    std::snprintf(rate, sizeof rate, "%.17g", r.injection_rate);
    return {r.workload, rate, r.packet_length, r.buffers, r.mesh_width, r.mesh_height, r.seed};
}

std::optional<double> ratio(std::optional<double> a, std::optional<double> b) {
    if (!a || !b || *b == 0.0) return std::nullopt;
    return *a / *b;
}

std::string fmt(std::optional<double> v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

}  // namespace

std::vector<NormalizedRow> normalize(std::span<const MetricsRecord> records) {
    std::map<PairKey, const MetricsRecord*> fixed;
    for (const MetricsRecord& r : records)
        if (r.policy == "fixed") fixed.emplace(pair_key(r), &r);

    std::vector<NormalizedRow> out;
    for (const MetricsRecord& r : records) {
        const auto it = fixed.find(pair_key(r));
        if (it == fixed.end())
            throw ReportError("no fixed baseline for " + r.policy + " on " + r.workload + " (" + r.buffers +
                              ", seed " + std::to_string(r.seed) + ")");
        const MetricsRecord& f = *it->second;
        NormalizedRow n;
        n.policy = r.policy;
        n.workload = r.workload;
        n.injection_rate = r.injection_rate;
        n.packet_length = r.packet_length;
        n.buffers = r.buffers;
        n.mesh_width = r.mesh_width;
        n.mesh_height = r.mesh_height;
        n.seed = r.seed;
        n.latency = ratio(r.avg_packet_latency, f.avg_packet_latency);
        n.energy = ratio(r.energy.total, f.energy.total);
        n.falsefull_rate = ratio(r.falsefull_rate, f.falsefull_rate);
        out.push_back(n);
    }
    return out;
}

std::string normalized_csv(std::span<const NormalizedRow> rows) {
    std::ostringstream o;
    o << "policy,workload,injection_rate,packet_length,buffers,mesh_width,mesh_height,seed,"
         "latency_vs_fixed,energy_vs_fixed,falsefull_vs_fixed\n";
    for (const NormalizedRow& n : rows)
        o << n.policy << ',' << n.workload << ',' << fmt(n.injection_rate) << ',' << n.packet_length << ','
          << n.buffers << ',' << n.mesh_width << ',' << n.mesh_height << ',' << n.seed << ',' << fmt(n.latency)
          << ',' << fmt(n.energy) << ',' << fmt(n.falsefull_rate) << '\n';
    return o.str();
}

std::string summary_text(std::span<const MetricsRecord> records) {
    const std::vector<NormalizedRow> rows = normalize(records);
    struct Acc {
        std::vector<double> lat, energy;
        std::vector<double> ff;
        std::vector<double> raw_lat;
        std::array<double, 3> hist{};
        int n = 0;
    };
    std::map<std::pair<std::string, std::string>, Acc> by;
    for (std::size_t i = 0; i < records.size(); ++i) {
        Acc& a = by[{records[i].buffers, records[i].policy}];
        if (rows[i].latency) a.lat.push_back(*rows[i].latency);
        if (rows[i].energy) a.energy.push_back(*rows[i].energy);
        if (records[i].avg_packet_latency) a.raw_lat.push_back(*records[i].avg_packet_latency);
        a.ff.push_back(records[i].falsefull_rate);
        for (int k = 0; k < 3; ++k) a.hist[static_cast<std::size_t>(k)] += records[i].hist_interior[static_cast<std::size_t>(k)];
        ++a.n;
    }

    std::ostringstream o;
    char line[256];
    o << "runs: " << records.size() << "\n";
    o << "latency and energy are normalized to the fixed run with the same workload, load, buffers, mesh and seed\n";
    o << "unique-configuration histogram: interior routers, sampled every 50 cycles\n\n";
    std::snprintf(line, sizeof line, "%-12s %-8s %5s %10s %10s %10s %12s %8s %8s %8s\n", "buffers", "policy", "runs",
                  "latency", "norm_lat", "norm_energy", "falsefull/cyc", "1cfg", "2cfg", "3+cfg");
    o << line;
    for (const auto& [key, a] : by) {
        const double n = a.n;
        std::snprintf(line, sizeof line, "%-12s %-8s %5d %10.3f %10.4f %10.4f %12.4f %8.4f %8.4f %8.4f\n",
                      key.first.c_str(), key.second.c_str(), a.n, mean_std(a.raw_lat).first, mean_std(a.lat).first,
                      mean_std(a.energy).first, mean_std(a.ff).first, a.hist[0] / n, a.hist[1] / n, a.hist[2] / n);
        o << line;
    }

    o << "\nrace reduction against each policy (mean over matched runs):\n";
    for (const auto& [key, a] : by) {
        if (key.second != "race") continue;
        for (const auto& [other_key, b] : by) {
            if (other_key.first != key.first || other_key.second == "race") continue;
            const double rl = mean_std(a.lat).first, ol = mean_std(b.lat).first;
            const double re = mean_std(a.energy).first, oe = mean_std(b.energy).first;
            if (ol <= 0.0 || oe <= 0.0) continue;
            std::snprintf(line, sizeof line, "  %-12s vs %-8s latency %6.1f%%  energy %6.1f%%\n", key.first.c_str(),
                          other_key.second.c_str(), 100.0 * (1.0 - rl / ol), 100.0 * (1.0 - re / oe));
            o << line;
        }
    }
    return o.str();
}

void emit_report(std::span<const MetricsRecord> records, const std::filesystem::path& dir) {
    const std::string summary = summary_text(records);
    const std::string normalized = normalized_csv(normalize(records));
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "metrics.csv", to_csv(records));
    write_file_atomic(dir / "normalized.csv", normalized);
    write_file_atomic(dir / "summary.txt", summary);
}

std::string run_metadata(const ExperimentConfig& cfg, const TrainingReport* training) {
    json j;
    j["version"] = kVersion;
    j["compiler"] = __VERSION__;
    j["weight_format"] = {{"name", kWeightFormat}, {"version", kWeightVersion}};
    j["config"] = json::parse(config_to_json(cfg));
    if (training != nullptr) {
        json eps = json::array();
        for (const EpisodeSummary& e : training->episodes)
            eps.push_back({{"episode", e.episode},
                           {"workload", e.workload},
                           {"epsilon", e.epsilon_end},
                           {"mean_reward", e.mean_reward},
                           {"falsefulls", e.falsefulls}});
        j["training"] = {{"converged", training->converged},
                         {"episodes_run", training->episodes_run},
                         {"episode_budget", cfg.training.episodes},
                         {"epochs", training->epochs},
                         {"convergence_window", cfg.training.convergence_window},
                         {"convergence_tolerance", cfg.training.convergence_tolerance},
                         {"final_window_means", training->final_windows},
                         {"episodes", eps}};
    }
    return j.dump(2) + "\n";
}

}  // namespace rmcnoc
