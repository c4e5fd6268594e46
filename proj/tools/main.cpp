#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moedrive/commands.hpp"
#include "moedrive/errors.hpp"

using namespace moedrive;

namespace {

std::vector<int> parse_counts(const std::string& s) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(std::stoi(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<uint64_t> parse_seeds(const std::string& s) {
    std::vector<uint64_t> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"moedrive: mixture-of-experts driving stack on a synthetic 2D simulator"};
    app.require_subcommand(1);

    GenDataArgs gen;
    std::string gen_clips = "50";
    auto* cmd_gen = app.add_subcommand("gen-data", "generate an oracle demonstration dataset");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();
    cmd_gen->add_option("--clips-per-scenario", gen_clips,
                        "clips per scenario kind (one count or 5 comma-separated)");
    cmd_gen->add_option("--seed", gen.seed, "master seed");
    cmd_gen->add_option("--t-max", gen.t_max, "episode time limit (s)");

    TrainArgs tr;
    auto* cmd_tr = app.add_subcommand("train", "train a model from a config file");
    cmd_tr->add_option("--config", tr.config_path, "key=value config file")->required();
    cmd_tr->add_option("--data", tr.data_dir, "dataset directory")->required();
    cmd_tr->add_option("--out", tr.out_dir, "output directory")->required();

    EvalArgs ev;
    auto* cmd_ev = app.add_subcommand("eval", "closed-loop evaluation of a checkpoint");
    cmd_ev->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->required();
    cmd_ev->add_option("--report", ev.report_dir, "report output directory")->required();
    cmd_ev->add_option("--data", ev.data_dir,
                       "dataset directory (adds open-loop validation analysis)");
    cmd_ev->add_option("--episodes-per-scenario", ev.episodes_per_kind, "episodes per kind");
    cmd_ev->add_option("--tau", ev.tau, "override uncertainty threshold");
    cmd_ev->add_option("--seed", ev.seed, "evaluation seed");
    cmd_ev->add_flag("--trace", ev.trace, "write per-step routing trace");

    SweepArgs sw;
    auto* cmd_sw = app.add_subcommand("sweep-tau", "closed-loop sweep of the uncertainty threshold");
    cmd_sw->add_option("--checkpoint", sw.checkpoint, "checkpoint path")->required();
    cmd_sw->add_option("--data", sw.data_dir, "dataset directory")->required();
    cmd_sw->add_option("--out", sw.out_dir, "output directory")->required();
    cmd_sw->add_option("--from", sw.from, "first tau");
    cmd_sw->add_option("--to", sw.to, "last tau");
    cmd_sw->add_option("--step", sw.step, "tau step");
    cmd_sw->add_option("--episodes-per-scenario", sw.episodes_per_kind, "episodes per kind");
    cmd_sw->add_option("--seed", sw.seed, "evaluation seed");

    AblateArgs ab;
    std::string ab_seeds = "1,2,3,4,5";
    auto* cmd_ab = app.add_subcommand("ablate", "train + evaluate all four variants");
    cmd_ab->add_option("--data", ab.data_dir, "dataset directory")->required();
    cmd_ab->add_option("--out", ab.out_dir, "output directory")->required();
    cmd_ab->add_option("--seeds", ab_seeds, "comma-separated training seeds");
    cmd_ab->add_option("--epochs", ab.epochs, "epochs per run");
    cmd_ab->add_option("--batch-size", ab.batch_size, "batch size");
    cmd_ab->add_option("--episodes-per-scenario", ab.episodes_per_kind, "episodes per kind");
    cmd_ab->add_option("--tau", ab.tau, "uncertainty threshold for the geminus arm");
    cmd_ab->add_option("--eval-seed", ab.eval_seed, "evaluation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (cmd_gen->parsed()) {
            gen.clips_per_kind = parse_counts(gen_clips);
            return cmd_gen_data(gen);
        }
        if (cmd_tr->parsed()) return cmd_train(tr);
        if (cmd_ev->parsed()) return cmd_eval(ev);
        if (cmd_sw->parsed()) return cmd_sweep_tau(sw);
        if (cmd_ab->parsed()) {
            ab.seeds = parse_seeds(ab_seeds);
            return cmd_ablate(ab);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitDataError;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return kExitModelError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInternalError;
    }
    return kExitConfigError;
}
