// Command-line front end for the cap-opening imitation pipeline:
// data generation, autoencoder and policy training, closed-loop evaluation
// and the analysis exports, all reproducible from one config file.

#include <cstdlib>
#include <utility>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "aelstm/checkpoint.hpp"
#include "aelstm/errors.hpp"
#include "aelstm/pipeline.hpp"

namespace fs = std::filesystem;
using namespace aelstm;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t jobs = 0;
    bool paper_scale = false;
};

RunConfig resolve_config(const GlobalOpts& g) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = RunConfig::load(g.config_path);
    if (g.paper_scale) cfg.apply_paper_scale();
    if (g.seed_set) {
        cfg.seed = g.seed;
        cfg.eval_seeds = {g.seed, g.seed + 1, g.seed + 2};
    }
    if (g.jobs) cfg.jobs = g.jobs;
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    else if (const char* root = std::getenv("AELSTM_OUT_ROOT"))
        cfg.out_dir = std::string(root) + "/" + fs::path(cfg.out_dir).filename().string();
    cfg.validate();
    return cfg;
}

std::vector<RawEpisode> load_episodes(const RunPaths& paths) {
    std::vector<RawEpisode> out;
    for (std::size_t i = 0;; ++i) {
        const std::string path = paths.episode_file(i);
        if (!fs::exists(path)) break;
        out.push_back(read_episode(path));
    }
    if (out.empty())
        throw DependencyError("no episodes under '" + paths.data_dir() + "'; run generate first");
    return out;
}

int cmd_generate(const RunConfig& cfg) {
    RunPaths paths(cfg.out_dir);
    paths.make_all_dirs();
    cfg.save(paths.config_file());
    Manifest manifest(paths.manifest_file(), cfg.hash());
    manifest.add(paths.config_file(), "config");

    const auto scenarios = dataset_scenarios(cfg);
    std::cout << "generating " << scenarios.size() << " expert episodes\n";
    const auto episodes = generate_dataset(cfg.env, scenarios);
    write_scenario_csv(paths.scenarios_file(), scenarios, cfg.hash());
    manifest.add(paths.scenarios_file(), "scenario_list");
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        write_episode(paths.episode_file(i), episodes[i]);
        manifest.add(paths.episode_file(i), "episode");
    }
    std::cout << "wrote " << episodes.size() << " episodes under " << paths.data_dir() << "\n";
    return 0;
}

int cmd_train_ae(const RunConfig& cfg, const std::string& which, std::uint64_t seed) {
    RunPaths paths(cfg.out_dir);
    paths.make_all_dirs();
    Manifest manifest(paths.manifest_file(), cfg.hash());
    const PreparedData data = prepare_data(cfg, load_episodes(paths));
    data.stats.save(paths.scaler_file(), cfg.hash());
    manifest.add(paths.scaler_file(), "scaler");

    SeedModels models = train_autoencoders(cfg, data, seed);
    if (which == "whole" || which == "both") {
        save_checkpoint(paths.ae_ckpt("whole", seed),
                        std::as_const(models).ae_whole.all_params(), cfg.hash(),
                        &models.whole_report.optimizer);
        manifest.add(paths.ae_ckpt("whole", seed), "checkpoint");
        std::cout << "train-ae whole: best validation MSE " << models.whole_report.best_val_mse
                  << " at epoch " << models.whole_report.best_epoch << "\n";
    }
    if (which == "thumb" || which == "both") {
        save_checkpoint(paths.ae_ckpt("thumb", seed),
                        std::as_const(models).ae_thumb.all_params(), cfg.hash(),
                        &models.thumb_report.optimizer);
        manifest.add(paths.ae_ckpt("thumb", seed), "checkpoint");
        std::cout << "train-ae thumb: best validation MSE " << models.thumb_report.best_val_mse
                  << " at epoch " << models.thumb_report.best_epoch << "\n";
    }
    return 0;
}

int cmd_train_policy(const RunConfig& cfg, std::string model_id, bool attention, bool constraint,
                     double gamma_flag, bool gamma_sweep, std::uint64_t seed) {
    RunPaths paths(cfg.out_dir);
    paths.make_all_dirs();
    Manifest manifest(paths.manifest_file(), cfg.hash());
    const PreparedData data = prepare_data(cfg, load_episodes(paths));
    const SeedModels models = load_autoencoders(cfg, paths, seed);

    ModelVariant variant;
    if (!model_id.empty()) {
        variant = variant_by_id(model_id);
    } else {
        variant.attention = attention;
        variant.constraint = constraint;
        for (const ModelVariant& v : ablation_variants())
            if (v.attention == variant.attention && v.constraint == variant.constraint)
                variant.id = v.id;
    }

    std::vector<double> gammas;
    if (gamma_sweep) gammas = {0.0, 0.01, 0.1, 1.0};
    else gammas = {gamma_flag >= 0 ? gamma_flag : cfg.gamma};

    for (double g : gammas) {
        RunConfig run_cfg = cfg;
        run_cfg.gamma = g;
        PolicyModel model;
        const PolicyTrainReport report =
            train_policy_variant(run_cfg, data, models, variant, seed, model);
        std::string tag = variant.id;
        if (gamma_sweep) tag += "_gamma" + std::to_string(g);
        save_policy_with_state(paths, cfg, model, report.optimizer, tag, seed, &manifest);
        std::cout << "train-policy " << tag << " (attention=" << (variant.attention ? "on" : "off")
                  << ", constraint=" << (variant.constraint ? "on" : "off") << ", gamma=" << g
                  << "): best validation loss " << report.best_val << " at epoch "
                  << report.best_epoch << "\n";
    }
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& model_id, std::uint64_t seed,
                 bool write_traces) {
    RunPaths paths(cfg.out_dir);
    paths.make_all_dirs();
    Manifest manifest(paths.manifest_file(), cfg.hash());
    TrainedStack stack = load_stack(cfg, paths, model_id, seed);
    EvalRun run = evaluate_stack(cfg, stack, model_id, seed, write_traces);

    std::vector<TrialRow> rows;
    if (fs::exists(paths.results_file())) rows = read_results_csv(paths.results_file());
    rows.insert(rows.end(), run.rows.begin(), run.rows.end());
    write_results_csv(paths.results_file(), rows, cfg.hash());
    manifest.add(paths.results_file(), "results");

    if (write_traces && !run.hidden_traces.empty()) {
        const std::string tdir = paths.traces_dir(model_id, seed);
        fs::create_directories(tdir);
        for (std::size_t i = 0; i < run.rows.size(); ++i) {
            TrialTraces tr;
            tr.attention = run.attention_traces[i];
            tr.hidden = run.hidden_traces[i];
            tr.phases = run.phase_traces[i];
            const std::string base = tdir + "/" + run.rows[i].scenario_id;
            if (!tr.attention.empty())
                write_attention_trace(base + "_attention.csv", tr, cfg.hash());
            write_hidden_trace(base + "_hidden.csv", tr, cfg.hash());
        }
        manifest.add(tdir, "trace_dir");
    }

    std::size_t complete = 0, partial = 0;
    for (const TrialRow& r : run.rows) {
        if (r.result == TrialResult::CompleteSuccess) ++complete;
        if (r.result != TrialResult::Failure) ++partial;
    }
    std::cout << "evaluate " << model_id << " seed " << seed << ": " << complete << "/"
              << run.rows.size() << " complete, " << partial << "/" << run.rows.size()
              << " partial\n";
    return 0;
}

int cmd_analyze(const RunConfig& cfg, const std::string& kind, const std::string& in_path,
                const std::string& out_path, bool per_trial, bool plot) {
    if (kind == "table") {
        const auto rows = read_results_csv(in_path);
        const AblationTable table = build_table(rows, {"I", "II", "III", "IV"});
        write_table_csv(out_path, table, cfg.hash());
        std::cout << "wrote " << out_path << "\n";
        return 0;
    }

    // pca / attention consume a trace directory
    if (!fs::is_directory(in_path))
        throw DependencyError("trace directory '" + in_path + "' does not exist");
    std::vector<Matrix> hidden, attention;
    std::vector<std::vector<SubTask>> phases_h, phases_a;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(in_path)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        const std::string name = p.filename().string();
        if (name.size() > 11 && name.rfind("_hidden.csv") == name.size() - 11) {
            LoadedTrace t = read_hidden_trace(p.string());
            hidden.push_back(std::move(t.hidden));
            phases_h.push_back(std::move(t.phases));
        } else if (name.size() > 14 && name.rfind("_attention.csv") == name.size() - 14) {
            LoadedTrace t = read_attention_trace(p.string());
            // stored order is (joint, torque, whole, thumb); back to layout order
            Matrix a(t.attention.rows(), 4);
            for (std::size_t r = 0; r < a.rows(); ++r) {
                a(r, static_cast<std::size_t>(Modality::Joints)) = t.attention(r, 0);
                a(r, static_cast<std::size_t>(Modality::Torques)) = t.attention(r, 1);
                a(r, static_cast<std::size_t>(Modality::TactileWhole)) = t.attention(r, 2);
                a(r, static_cast<std::size_t>(Modality::TactileThumb)) = t.attention(r, 3);
            }
            attention.push_back(std::move(a));
            phases_a.push_back(std::move(t.phases));
        }
    }

    if (kind == "pca") {
        if (hidden.empty()) throw DependencyError("no *_hidden.csv traces in '" + in_path + "'");
        if (per_trial) {
            for (std::size_t i = 0; i < hidden.size(); ++i) {
                const PCAModel model = pca_fit({hidden[i]});
                const Matrix proj = model.project(hidden[i], 2);
                const std::string stem = out_path + ".trial" + std::to_string(i);
                write_pca_csv(stem + ".csv", proj, phases_h[i], model, cfg.hash());
                if (plot) write_scatter_svg(stem + ".svg", proj, phases_h[i], "hidden state PCA");
            }
        } else {
            const PCAModel model = pca_fit(hidden);
            std::size_t total = 0;
            for (const Matrix& h : hidden) total += h.rows();
            Matrix points(total, 2);
            std::vector<SubTask> labels;
            std::size_t r = 0;
            for (std::size_t i = 0; i < hidden.size(); ++i) {
                const Matrix proj = model.project(hidden[i], 2);
                for (std::size_t t = 0; t < proj.rows(); ++t, ++r) {
                    points(r, 0) = proj(t, 0);
                    points(r, 1) = proj(t, 1);
                    labels.push_back(phases_h[i][t]);
                }
            }
            write_pca_csv(out_path, points, labels, model, cfg.hash());
            if (plot) write_scatter_svg(out_path + ".svg", points, labels, "hidden state PCA");
        }
        std::cout << "wrote " << out_path << "\n";
        return 0;
    }
    if (kind == "attention") {
        if (attention.empty())
            throw DependencyError("no *_attention.csv traces in '" + in_path + "'");
        const AttentionSummary summary = attention_summary(attention, phases_a);
        write_attention_summary_csv(out_path, summary, cfg.hash());
        if (plot)
            write_attention_svg(out_path + ".svg", attention[0], phases_a[0],
                                "attention weights, first trial");
        std::cout << "wrote " << out_path << "\n";
        return 0;
    }
    throw ConfigError("analyze: unknown kind '" + kind + "'");
}

int cmd_reproduce_all(const RunConfig& cfg) {
    const ReproduceSummary summary = reproduce_all(cfg, true, &std::cout);
    std::cout << "\nmodel  complete  partial  (pooled over " << summary.seeds.size()
              << " seeds)\n";
    for (std::size_t vi = 0; vi < ablation_variants().size(); ++vi)
        std::cout << ablation_variants()[vi].id << "\t" << summary.mean_complete(vi) << "\t"
                  << summary.mean_partial(vi) << "\n";
    std::cout << "artifacts under " << cfg.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cap-opening imitation pipeline (autoencoder + attention + LSTM)"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "run configuration JSON file");
    app.add_option("--out", g.out_dir, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", g.seed, "base seed (overrides config)");
    app.add_option("--jobs", g.jobs, "worker threads for training/evaluation");
    app.add_flag("--paper-scale", g.paper_scale, "use full-scale dimensions and epoch limits");

    auto* generate = app.add_subcommand("generate", "record expert demonstration episodes");

    auto* train_ae = app.add_subcommand("train-ae", "train a tactile autoencoder");
    std::string ae_which = "both";
    std::uint64_t stage_seed = 1;
    train_ae->add_option("--which", ae_which, "whole | thumb | both")
        ->check(CLI::IsMember({"whole", "thumb", "both"}));
    train_ae->add_option("--train-seed", stage_seed, "training seed (default 1)");

    auto* train_policy = app.add_subcommand("train-policy", "train the LSTM policy");
    std::string model_id;
    std::string attention_flag = "on", constraint_flag = "on";
    double gamma_flag = -1.0;
    bool gamma_sweep = false;
    train_policy->add_option("--model", model_id, "ablation id I|II|III|IV")
        ->check(CLI::IsMember({"I", "II", "III", "IV"}));
    train_policy->add_option("--attention", attention_flag, "on|off")
        ->check(CLI::IsMember({"on", "off"}));
    train_policy->add_option("--constraint", constraint_flag, "on|off")
        ->check(CLI::IsMember({"on", "off"}));
    train_policy->add_option("--gamma", gamma_flag, "constraint strength override");
    train_policy->add_flag("--gamma-sweep", gamma_sweep,
                           "train one model per gamma in {0, 0.01, 0.1, 1}");
    train_policy->add_option("--train-seed", stage_seed, "training seed (default 1)");

    auto* evaluate = app.add_subcommand("evaluate", "run the closed-loop trial matrix");
    std::string eval_model = "I";
    bool eval_traces = false;
    evaluate->add_option("--model", eval_model, "ablation id I|II|III|IV")
        ->check(CLI::IsMember({"I", "II", "III", "IV"}));
    evaluate->add_option("--train-seed", stage_seed, "seed of the checkpoints to load");
    evaluate->add_flag("--traces", eval_traces, "export per-trial attention/hidden traces");

    auto* analyze = app.add_subcommand("analyze", "post-hoc analysis of traces/results");
    std::string analyze_kind, analyze_in, analyze_out;
    bool per_trial = false, plot = false;
    analyze->add_option("kind", analyze_kind, "pca | attention | table")->required();
    analyze
        ->add_option("--in", analyze_in, "trace directory (pca/attention) or results csv (table)")
        ->required();
    analyze->add_option("--out", analyze_out, "output csv path")->required();
    analyze->add_flag("--per-trial", per_trial, "fit PCA per trial instead of pooled");
    analyze->add_flag("--plot", plot, "also write simple SVG figures");

    auto* reproduce = app.add_subcommand(
        "reproduce-all", "full protocol: generate, train all models, evaluate, analyze");

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;

    try {
        const RunConfig cfg = resolve_config(g);
        if (*generate) return cmd_generate(cfg);
        if (*train_ae) return cmd_train_ae(cfg, ae_which, stage_seed);
        if (*train_policy)
            return cmd_train_policy(cfg, model_id, attention_flag == "on",
                                    constraint_flag == "on", gamma_flag, gamma_sweep, stage_seed);
        if (*evaluate) return cmd_evaluate(cfg, eval_model, stage_seed, eval_traces);
        if (*analyze)
            return cmd_analyze(cfg, analyze_kind, analyze_in, analyze_out, per_trial, plot);
        if (*reproduce) return cmd_reproduce_all(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
