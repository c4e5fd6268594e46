#include "moedrive/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moedrive/errors.hpp"
#include "moedrive/eval.hpp"
#include "moedrive/report.hpp"

namespace moedrive {

namespace fs = std::filesystem;

namespace {

// removes declared outputs unless the command completed
class OutputGuard {
public:
    std::string track(const std::string& p) {
        paths_.push_back(p);
        return p;
    }
    void commit() { committed_ = true; }
    ~OutputGuard() {
        if (committed_) return;
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    }

private:
    std::vector<std::string> paths_;
    bool committed_ = false;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

std::vector<std::string> ability_header() {
    return {"scenario", "value"};
}

std::string kind_label(int k) { return scenario_name(ScenarioKind(k)); }

std::string expert_label(int e) {
    return e == 0 ? std::string("global") : std::string(scenario_name(ScenarioKind(e - 1)));
}

std::vector<std::string> util_header() {
    std::vector<std::string> h{"expert", "overall"};
    for (int k = 0; k < kNumScenarios; ++k) h.push_back(kind_label(k));
    return h;
}

std::vector<std::vector<std::string>> util_rows(const UtilizationTable& u) {
    std::vector<std::vector<std::string>> rows;
    for (int e = 0; e < dims::kNumExperts; ++e) {
        std::vector<std::string> row{expert_label(e)};
        for (int c = 0; c < 1 + kNumScenarios; ++c) row.push_back(fmt_num(u[e][c]));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_eval_report(const std::string& dir, const std::string& mhash, const EvalResult& ev,
                       const OpenLoopStats* ol, bool trace, OutputGuard& guard) {
    fs::create_directories(dir);
    guard.track((fs::path(dir) / "metrics.csv").string());
    write_csv((fs::path(dir) / "metrics.csv").string(), mhash,
              {"success_rate", "driving_score", "ability_mean", "episodes"},
              {{fmt_num(ev.metrics.success_rate), fmt_num(ev.metrics.driving_score),
                fmt_num(ev.metrics.ability_mean), fmt_num(ev.metrics.episodes)}});

    std::vector<std::vector<std::string>> ability;
    for (int k = 0; k < kNumScenarios; ++k)
        ability.push_back({kind_label(k), fmt_num(ev.metrics.ability[k])});
    guard.track((fs::path(dir) / "ability.csv").string());
    write_csv((fs::path(dir) / "ability.csv").string(), mhash, ability_header(), ability);

    std::vector<std::vector<std::string>> eps;
    for (std::size_t i = 0; i < ev.episodes.size(); ++i) {
        const EpisodeStats& e = ev.episodes[i];
        eps.push_back({fmt_num(double(i)), kind_label(int(e.kind)), std::to_string(e.seed),
                       fmt_num(e.success), fmt_num(e.collision), fmt_num(e.timeout),
                       fmt_num(e.violations), fmt_num(e.completion), fmt_num(e.score)});
    }
    guard.track((fs::path(dir) / "episodes.csv").string());
    write_csv((fs::path(dir) / "episodes.csv").string(), mhash,
              {"episode", "scenario", "seed", "success", "collision", "timeout", "violations",
               "completion", "score"},
              eps);

    guard.track((fs::path(dir) / "expert_utilization.csv").string());
    write_csv((fs::path(dir) / "expert_utilization.csv").string(), mhash, util_header(),
              util_rows(ev.utilization));

    if (ol) {
        std::vector<std::vector<std::string>> acc;
        acc.push_back({"overall", fmt_num(ol->router_acc_overall)});
        for (int k = 0; k < kNumScenarios; ++k)
            acc.push_back({kind_label(k), fmt_num(ol->router_acc[k])});
        guard.track((fs::path(dir) / "router_accuracy.csv").string());
        write_csv((fs::path(dir) / "router_accuracy.csv").string(), mhash, ability_header(), acc);

        guard.track((fs::path(dir) / "expert_utilization_val.csv").string());
        write_csv((fs::path(dir) / "expert_utilization_val.csv").string(), mhash, util_header(),
                  util_rows(ol->utilization));

        guard.track((fs::path(dir) / "open_loop.csv").string());
        write_csv((fs::path(dir) / "open_loop.csv").string(), mhash,
                  {"speed_mae", "waypoint_l1", "samples"},
                  {{fmt_num(ol->speed_mae), fmt_num(ol->waypoint_l1), fmt_num(ol->samples)}});
    }

    if (trace) {
        std::vector<std::vector<std::string>> rows;
        for (const TraceRow& r : ev.trace) {
            std::vector<std::string> row{fmt_num(r.episode), kind_label(int(r.true_kind)),
                                         fmt_num(r.t)};
            for (double p : r.probs) row.push_back(fmt_num(p));
            row.push_back(fmt_num(r.uncertainty));
            row.push_back(expert_label(r.selected));
            rows.push_back(std::move(row));
        }
        guard.track((fs::path(dir) / "trace.csv").string());
        write_csv((fs::path(dir) / "trace.csv").string(), mhash,
                  {"episode", "scenario", "t", "p_merging", "p_overtaking", "p_emergency_brake",
                   "p_give_way", "p_traffic_sign", "uncertainty", "selected"},
                  rows);
    }
}

} // namespace

TrainConfig parse_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hashpos = line.find('#');
        if (hashpos != std::string::npos) line = line.substr(0, hashpos);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "lr") cfg.lr = std::stod(value);
            else if (key == "weight_decay") cfg.weight_decay = std::stod(value);
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "lr_decay_factor") cfg.lr_decay_factor = std::stod(value);
            else if (key == "lr_decay_epoch") cfg.lr_decay_epoch = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "tau") cfg.tau = std::stod(value);
            else if (key == "variant") cfg.variant = variant_from_name(value);
            else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value for " + key);
        } catch (const std::out_of_range&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    cfg.validate();
    return cfg;
}

std::string canonical_config(const TrainConfig& cfg) {
    std::ostringstream ss;
    ss << "batch_size=" << cfg.batch_size << "\nepochs=" << cfg.epochs << "\nlr=" << fmt_num(cfg.lr)
       << "\nlr_decay_epoch=" << cfg.effective_decay_epoch()
       << "\nlr_decay_factor=" << fmt_num(cfg.lr_decay_factor) << "\nseed=" << cfg.seed
       << "\ntau=" << fmt_num(cfg.tau) << "\nvariant=" << variant_name(cfg.variant)
       << "\nweight_decay=" << fmt_num(cfg.weight_decay) << "\n";
    return ss.str();
}

int cmd_gen_data(const GenDataArgs& args) {
    if (args.out.empty()) throw ConfigError("gen-data: --out is required");
    std::vector<int> clips;
    if (args.clips_per_kind.size() == 1)
        clips.assign(kNumScenarios, args.clips_per_kind[0]);
    else if (args.clips_per_kind.size() == std::size_t(kNumScenarios))
        clips = args.clips_per_kind;
    else
        throw ConfigError("gen-data: --clips-per-scenario wants 1 or 5 comma-separated counts");
    for (int c : clips)
        if (c <= 0) throw ConfigError("gen-data: clip counts must be positive");

    RunManifest rm;
    rm.command = "gen-data";
    rm.started_at = iso8601_now();
    rm.seed = args.seed;
    std::ostringstream cfg;
    cfg << "clips=";
    for (std::size_t i = 0; i < clips.size(); ++i) cfg << (i ? "," : "") << clips[i];
    cfg << "\nseed=" << args.seed << "\nt_max=" << fmt_num(args.t_max) << "\n";
    rm.config_hash = hash_bytes(cfg.str());

    OutputGuard guard;
    guard.track(args.out);
    Dataset ds = generate_dataset(clips, args.seed, args.t_max);
    write_dataset(ds, args.out);
    rm.dataset_hash = dataset_manifest_hash(args.out);
    rm.finished_at = iso8601_now();
    write_run_manifest(rm, (fs::path(args.out) / "run_manifest.json").string());
    guard.commit();

    int train_clips = 0, val_clips = 0;
    for (const auto& info : ds.info) (info.val ? val_clips : train_clips) += 1;
    std::printf("gen-data: wrote %zu clips (%d train / %d val) to %s\n", ds.clips.size(),
                train_clips, val_clips, args.out.c_str());
    return kExitOk;
}

int cmd_train(const TrainArgs& args) {
    TrainConfig cfg = parse_train_config(args.config_path);
    Dataset ds = load_dataset(args.data_dir);
    std::string dataset_hash = dataset_manifest_hash(args.data_dir);

    RunManifest rm;
    rm.command = "train";
    rm.started_at = iso8601_now();
    rm.seed = cfg.seed;
    rm.config_hash = hash_bytes(canonical_config(cfg));
    rm.dataset_hash = dataset_hash;

    OutputGuard guard;
    fs::create_directories(args.out_dir);
    TrainResult result = train(cfg, ds);

    CheckpointMeta meta;
    meta.variant = variant_name(cfg.variant);
    meta.tau = cfg.tau;
    meta.seed = cfg.seed;
    meta.dataset_manifest_hash = dataset_hash;
    meta.w_traj = cfg.weights.traj;
    meta.w_feat = cfg.weights.feature;
    meta.w_value = cfg.weights.value;
    meta.w_global = cfg.weights.global_group;
    meta.w_adaptive = cfg.weights.adaptive_group;
    meta.w_scenario = cfg.weights.scenario;
    meta.w_speed = cfg.weights.speed;
    std::string ckpt_path = guard.track((fs::path(args.out_dir) / "checkpoint.json").string());
    save_checkpoint(result.model, meta, ckpt_path);
    rm.checkpoint_hash = hash_file(ckpt_path);

    std::string log_path = guard.track((fs::path(args.out_dir) / "train_log.jsonl").string());
    {
        std::ofstream log(log_path);
        for (const EpochStats& e : result.log) {
            log << "{\"epoch\":" << e.epoch << ",\"lr\":" << fmt_num(e.lr)
                << ",\"total\":" << fmt_num(e.mean.total)
                << ",\"traj_global\":" << fmt_num(e.mean.traj_global)
                << ",\"feat_global\":" << fmt_num(e.mean.feat_global)
                << ",\"value_global\":" << fmt_num(e.mean.value_global)
                << ",\"traj_adaptive\":" << fmt_num(e.mean.traj_adaptive)
                << ",\"feat_adaptive\":" << fmt_num(e.mean.feat_adaptive)
                << ",\"value_adaptive\":" << fmt_num(e.mean.value_adaptive)
                << ",\"scenario\":" << fmt_num(e.mean.scenario)
                << ",\"speed\":" << fmt_num(e.mean.speed)
                << ",\"aux_balance\":" << fmt_num(e.aux_balance) << ",\"samples\":" << e.samples
                << "}\n";
        }
    }
    rm.finished_at = iso8601_now();
    write_run_manifest(rm, (fs::path(args.out_dir) / "run_manifest.json").string());
    guard.commit();
    std::printf("train: %s variant, %d epochs, final loss %.4f -> %s\n",
                variant_name(cfg.variant), cfg.epochs,
                result.log.empty() ? 0.0 : result.log.back().mean.total, ckpt_path.c_str());
    return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
    CheckpointMeta meta;
    Model model = load_checkpoint(args.checkpoint, &meta);
    Variant variant = variant_from_name(meta.variant);
    double tau = args.tau >= 0 ? args.tau : meta.tau;
    if (tau < 0 || tau > 1) throw ConfigError("eval: tau outside [0,1]");

    RunManifest rm;
    rm.command = "eval";
    rm.started_at = iso8601_now();
    rm.seed = args.seed;
    std::ostringstream cfg;
    cfg << "episodes=" << args.episodes_per_kind << "\nseed=" << args.seed
        << "\ntau=" << fmt_num(tau) << "\ntrace=" << int(args.trace) << "\n";
    rm.config_hash = hash_bytes(cfg.str());
    rm.checkpoint_hash = hash_file(args.checkpoint);

    OpenLoopStats ol;
    bool have_ol = false;
    if (!args.data_dir.empty()) {
        std::string dhash = dataset_manifest_hash(args.data_dir);
        if (!meta.dataset_manifest_hash.empty() && dhash != meta.dataset_manifest_hash)
            throw DataError("eval: dataset manifest hash mismatch (checkpoint trained on " +
                            meta.dataset_manifest_hash + ", got " + dhash + ")");
        rm.dataset_hash = dhash;
        Dataset ds = load_dataset(args.data_dir);
        ol = open_loop_analysis(model, ds, true, variant, tau);
        have_ol = true;
    }

    EvalResult ev = evaluate_closed_loop(model, variant, tau, args.episodes_per_kind, args.seed);

    OutputGuard guard;
    write_eval_report(args.report_dir, rm.hash(), ev, have_ol ? &ol : nullptr, args.trace, guard);
    rm.finished_at = iso8601_now();
    write_run_manifest(rm, (fs::path(args.report_dir) / "run_manifest.json").string());
    guard.commit();
    std::printf("eval: %s tau=%.2f  success=%.1f%% score=%.1f ability_mean=%.1f (%d episodes)\n",
                variant_name(variant), tau, ev.metrics.success_rate, ev.metrics.driving_score,
                ev.metrics.ability_mean, ev.metrics.episodes);
    return kExitOk;
}

int cmd_sweep_tau(const SweepArgs& args) {
    CheckpointMeta meta;
    Model model = load_checkpoint(args.checkpoint, &meta);
    Variant variant = variant_from_name(meta.variant);
    if (variant != Variant::Geminus)
        throw ModelError("sweep-tau: checkpoint variant must be geminus (threshold routing)");
    if (args.data_dir.empty()) throw ConfigError("sweep-tau: --data is required");
    if (!(args.step > 0)) throw ConfigError("sweep-tau: step must be positive");

    std::string dhash = dataset_manifest_hash(args.data_dir);
    if (!meta.dataset_manifest_hash.empty() && dhash != meta.dataset_manifest_hash)
        throw DataError("sweep-tau: dataset manifest hash mismatch");
    Dataset ds = load_dataset(args.data_dir);

    RunManifest rm;
    rm.command = "sweep-tau";
    rm.started_at = iso8601_now();
    rm.seed = args.seed;
    std::ostringstream cfg;
    cfg << "from=" << fmt_num(args.from) << "\nto=" << fmt_num(args.to)
        << "\nstep=" << fmt_num(args.step) << "\nepisodes=" << args.episodes_per_kind
        << "\nseed=" << args.seed << "\n";
    rm.config_hash = hash_bytes(cfg.str());
    rm.checkpoint_hash = hash_file(args.checkpoint);
    rm.dataset_hash = dhash;
    std::string mhash = rm.hash();

    // per-sample uncertainties on the validation split, shared by all rows
    OpenLoopStats ol = open_loop_analysis(model, ds, true, variant, meta.tau);

    std::vector<double> taus;
    for (double tau = args.from; tau <= args.to + 1e-9; tau += args.step)
        taus.push_back(std::min(tau, 1.0));

    std::vector<std::vector<std::string>> rows;
    std::vector<double> scores, success, util_val_series;
    for (double tau : taus) {
        EvalResult ev =
            evaluate_closed_loop(model, variant, tau, args.episodes_per_kind, args.seed);
        int at_or_above = 0;
        for (double u : ol.uncertainties) at_or_above += (u >= tau) ? 1 : 0;
        double util_val =
            ol.uncertainties.empty() ? 0.0 : 100.0 * at_or_above / double(ol.uncertainties.size());
        double util_closed = ev.utilization[0][0];
        rows.push_back({fmt_num(tau), fmt_num(ev.metrics.driving_score),
                        fmt_num(ev.metrics.success_rate), fmt_num(ev.metrics.ability_mean),
                        fmt_num(util_val), fmt_num(util_closed)});
        scores.push_back(ev.metrics.driving_score);
        success.push_back(ev.metrics.success_rate);
        util_val_series.push_back(util_val);
    }

    OutputGuard guard;
    fs::create_directories(args.out_dir);
    std::string csv = guard.track((fs::path(args.out_dir) / "sweep.csv").string());
    write_csv(csv, mhash,
              {"tau", "driving_score", "success_rate", "ability_mean", "global_util_val_pct",
               "global_util_closed_pct"},
              rows);
    std::string svg = guard.track((fs::path(args.out_dir) / "sweep.svg").string());
    write_line_svg(svg, mhash, "Driving score vs uncertainty threshold", "tau", taus,
                   {{"driving_score", scores}, {"success_rate", success}});
    rm.finished_at = iso8601_now();
    write_run_manifest(rm, (fs::path(args.out_dir) / "run_manifest.json").string());
    guard.commit();
    std::printf("sweep-tau: %zu rows -> %s\n", taus.size(), csv.c_str());
    return kExitOk;
}

int cmd_ablate(const AblateArgs& args) {
    Dataset ds = load_dataset(args.data_dir);
    std::string dhash = dataset_manifest_hash(args.data_dir);
    if (args.seeds.empty()) throw ConfigError("ablate: need at least one seed");

    RunManifest rm;
    rm.command = "ablate";
    rm.started_at = iso8601_now();
    rm.seed = args.seeds[0];
    std::ostringstream cfg;
    cfg << "epochs=" << args.epochs << "\nbatch=" << args.batch_size
        << "\nepisodes=" << args.episodes_per_kind << "\ntau=" << fmt_num(args.tau) << "\nseeds=";
    for (std::size_t i = 0; i < args.seeds.size(); ++i) cfg << (i ? "," : "") << args.seeds[i];
    cfg << "\neval_seed=" << args.eval_seed << "\n";
    rm.config_hash = hash_bytes(cfg.str());
    rm.dataset_hash = dhash;
    std::string mhash = rm.hash();

    const Variant variants[] = {Variant::Geminus, Variant::ScenarioMoe, Variant::VanillaMoe,
                                Variant::SingleExpert};
    std::vector<std::vector<std::string>> seed_rows;
    std::vector<std::vector<std::string>> mean_rows;
    for (Variant v : variants) {
        double ds_sum = 0, sr_sum = 0, ab_sum = 0;
        for (uint64_t seed : args.seeds) {
            TrainConfig cfg2;
            cfg2.epochs = args.epochs;
            cfg2.batch_size = args.batch_size;
            cfg2.seed = seed;
            cfg2.tau = args.tau;
            cfg2.variant = v;
            TrainResult tr = train(cfg2, ds);
            EvalResult ev = evaluate_closed_loop(tr.model, v, args.tau, args.episodes_per_kind,
                                                 args.eval_seed);
            seed_rows.push_back({variant_name(v), std::to_string(seed),
                                 fmt_num(ev.metrics.driving_score),
                                 fmt_num(ev.metrics.success_rate),
                                 fmt_num(ev.metrics.ability_mean)});
            ds_sum += ev.metrics.driving_score;
            sr_sum += ev.metrics.success_rate;
            ab_sum += ev.metrics.ability_mean;
            std::printf("ablate: %-13s seed=%llu score=%.1f success=%.1f\n", variant_name(v),
                        (unsigned long long)seed, ev.metrics.driving_score,
                        ev.metrics.success_rate);
        }
        double n = double(args.seeds.size());
        mean_rows.push_back({variant_name(v), fmt_num(ds_sum / n), fmt_num(sr_sum / n),
                             fmt_num(ab_sum / n)});
    }

    OutputGuard guard;
    fs::create_directories(args.out_dir);
    std::string mean_csv = guard.track((fs::path(args.out_dir) / "ablation.csv").string());
    write_csv(mean_csv, mhash, {"variant", "driving_score", "success_rate", "ability_mean"},
              mean_rows);
    std::string seeds_csv = guard.track((fs::path(args.out_dir) / "ablation_seeds.csv").string());
    write_csv(seeds_csv, mhash,
              {"variant", "seed", "driving_score", "success_rate", "ability_mean"}, seed_rows);
    rm.finished_at = iso8601_now();
    write_run_manifest(rm, (fs::path(args.out_dir) / "run_manifest.json").string());
    guard.commit();
    std::printf("ablate: wrote %s\n", mean_csv.c_str());
    return kExitOk;
}

} // namespace moedrive
