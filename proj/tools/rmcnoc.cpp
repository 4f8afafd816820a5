#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmcnoc/config.hpp"
#include "rmcnoc/experiment.hpp"
#include "rmcnoc/metrics.hpp"
#include "rmcnoc/weights.hpp"

namespace fs = std::filesystem;
using namespace rmcnoc;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string policy;
    std::optional<std::uint64_t> cycles;
    std::optional<std::uint64_t> warmup;
    std::string workload;
    std::optional<double> rate;
    std::string buffers;
    std::string out = "out";
    bool parallel = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "run seed");
    app->add_option("--policy", o.policy, "fixed, oracle, qore, cure or race");
    app->add_option("--cycles", o.cycles, "total simulated cycles");
    app->add_option("--warmup", o.warmup, "warmup cycles excluded from metrics");
    app->add_option("--workload", o.workload, "preset name (w1..w8) or pattern kind");
    app->add_option("--rate", o.rate, "offered load in flits/node/cycle");
    app->add_option("--buffers", o.buffers, "buffer organisation such as 4S_4CB_2RB");
    app->add_option("--out", o.out, "output directory");
    app->add_flag("--parallel", o.parallel, "use OpenMP threads");
}

ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.policy.empty()) c.policy = parse_policy_kind(o.policy);
    if (o.cycles) c.total_cycles = *o.cycles;
    if (o.warmup) c.warmup_cycles = *o.warmup;
    if (!o.workload.empty()) {
        const auto presets = preset_names();
        if (std::find(presets.begin(), presets.end(), o.workload) != presets.end()) {
            c.workload.kind = WorkloadKind::MultiApp;
            c.workload.preset = o.workload;
            c.workload.phases.clear();
        } else {
            c.workload.kind = parse_workload_kind(o.workload);
            c.workload.preset.clear();
        }
    }
    if (o.rate) c.workload.injection_rate = *o.rate;
    if (!o.buffers.empty()) c.set_buffers(parse_buffer_key(o.buffers));
    if (o.parallel) c.parallel_agents = true;
    c.validate();
    return c;
}

int cmd_train(const CommonOptions& o, std::optional<int> episodes, std::optional<std::uint64_t> episode_cycles) {
    ExperimentConfig c = resolve(o);
    if (!is_learned(c.policy)) c.policy = PolicyKind::Race;
    if (episodes) c.training.episodes = *episodes;
    if (episode_cycles) c.training.episode_cycles = *episode_cycles;
    c.validate();
    const TrainingReport rep = run_training(c, [](const EpisodeSummary& s) {
        std::printf("episode %4d  %-14s  eps %.3f  reward %.5f  falsefulls %llu\n", s.episode, s.workload.c_str(),
                    s.epsilon_end, s.mean_reward, static_cast<unsigned long long>(s.falsefulls));
        std::fflush(stdout);
    });
    fs::create_directories(o.out);
    save_weights(fs::path(o.out) / "weights.json", rep.weights);
    write_file_atomic(fs::path(o.out) / "metadata.json", run_metadata(c, &rep));
    std::printf("%s after %d episodes; weights written to %s\n", rep.converged ? "converged" : "budget reached",
                rep.episodes_run, (fs::path(o.out) / "weights.json").c_str());
    return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& weights_path) {
    const ExperimentConfig c = resolve(o);
    std::optional<WeightSet> w;
    if (!weights_path.empty()) w = load_weights(weights_path);
    const MetricsRecord r = run_eval(c, w ? &*w : nullptr);
    fs::create_directories(o.out);
    const std::vector<MetricsRecord> rs{r};
    write_file_atomic(fs::path(o.out) / "metrics.csv", to_csv(rs));
    write_file_atomic(fs::path(o.out) / "metadata.json", run_metadata(c));
    std::printf("policy %s  workload %s  latency %s  falsefull/cycle %.4f  energy %.1f\n", r.policy.c_str(),
                r.workload.c_str(),
                r.avg_packet_latency ? std::to_string(*r.avg_packet_latency).c_str() : "absent", r.falsefull_rate,
                r.energy.total);
    return 0;
}

int cmd_sweep(const CommonOptions& o, const std::vector<std::string>& policies, const std::vector<std::uint64_t>& seeds,
              const std::vector<int>& subchannels, int total, const std::vector<std::string>& weight_files,
              bool train_missing) {
    SweepPlan plan;
    plan.base = resolve(o);
    plan.policies.clear();
    for (const auto& p : policies) plan.policies.push_back(parse_policy_kind(p));
    if (!seeds.empty()) plan.seeds = seeds;
    if (!subchannels.empty()) plan.subchannels = subchannels;
    plan.per_port_total = total;

    std::vector<WeightSet> sets;
    for (const auto& f : weight_files) sets.push_back(load_weights(f));
    const std::vector<ExperimentConfig> configs = sweep_configs(plan);
    if (train_missing) {
        for (const ExperimentConfig& c : configs) {
            if (!is_learned(c.policy) || find_weights(sets, c) != nullptr) continue;
            std::printf("training %s for %s\n", to_string(c.policy).c_str(), c.buffers().key().c_str());
            std::fflush(stdout);
            sets.push_back(run_training(c).weights);
        }
    }
    sets.shrink_to_fit();
    std::vector<RunRequest> reqs;
    for (const ExperimentConfig& c : configs) {
        const WeightSet* w = is_learned(c.policy) ? find_weights(sets, c) : nullptr;
        if (is_learned(c.policy) && w == nullptr)
            throw WeightFormatError("no weights for " + to_string(c.policy) + " with " + c.buffers().key() +
                                    " (pass --weights or --train-missing)");
        reqs.push_back({c, w});
    }
    const auto records = run_batch(reqs, o.parallel ? Execution::Parallel : Execution::Serial);
    fs::create_directories(o.out);
    write_file_atomic(fs::path(o.out) / "metadata.json", run_metadata(plan.base));
    if (std::find(plan.policies.begin(), plan.policies.end(), PolicyKind::Fixed) != plan.policies.end()) {
        emit_report(records, o.out);
        std::cout << summary_text(records);
    } else {
        write_file_atomic(fs::path(o.out) / "metrics.csv", to_csv(records));
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<MetricsRecord> all;
    for (const auto& f : inputs) {
        auto rs = parse_csv(read_file(f));
        all.insert(all.end(), rs.begin(), rs.end());
    }
    emit_report(all, out);
    std::cout << summary_text(all);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mesh NoC simulator with reversible multi-function channel buffers"};
    app.require_subcommand(1);

    CommonOptions train_o, eval_o, sweep_o;
    std::optional<int> episodes;
    std::optional<std::uint64_t> episode_cycles;
    auto* train = app.add_subcommand("train", "train RACE or CURE agents and write weights.json");
    add_common(train, train_o);
    train->add_option("--episodes", episodes, "episode budget");
    train->add_option("--episode-cycles", episode_cycles, "cycles per episode");

    std::string eval_weights;
    auto* eval = app.add_subcommand("eval", "simulate one configuration and write metrics.csv");
    add_common(eval, eval_o);
    eval->add_option("--weights", eval_weights, "weights file for race or cure")->check(CLI::ExistingFile);

    std::vector<std::string> sweep_policies{"fixed", "race"};
    std::vector<std::uint64_t> sweep_seeds;
    std::vector<int> sweep_s;
    int sweep_total = 11;
    std::vector<std::string> sweep_weights;
    bool train_missing = false;
    auto* sweep = app.add_subcommand("sweep", "run subchannel counts x policies x seeds at a fixed per-port total");
    add_common(sweep, sweep_o);
    sweep->add_option("--policies", sweep_policies, "policies to run")->delimiter(',');
    sweep->add_option("--seeds", sweep_seeds, "seeds")->delimiter(',');
    sweep->add_option("--subchannels", sweep_s, "subchannel counts")->delimiter(',');
    sweep->add_option("--per-port-total", sweep_total, "router plus channel buffers behind one port");
    sweep->add_option("--weights", sweep_weights, "weights files, matched by policy and S")->check(CLI::ExistingFile);
    sweep->add_flag("--train-missing", train_missing, "train learned policies that have no weights file");

    std::vector<std::string> report_in;
    std::string report_out = "report";
    auto* report = app.add_subcommand("report", "normalize metrics files against fixed and summarize");
    report->add_option("inputs", report_in, "metrics.csv files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*train) return cmd_train(train_o, episodes, episode_cycles);
        if (*eval) return cmd_eval(eval_o, eval_weights);
        if (*sweep)
            return cmd_sweep(sweep_o, sweep_policies, sweep_seeds, sweep_s, sweep_total, sweep_weights, train_missing);
        if (*report) return cmd_report(report_in, report_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
