#include "aelstm/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "aelstm/checkpoint.hpp"
#include "aelstm/errors.hpp"

namespace aelstm {

namespace fs = std::filesystem;

const std::array<ModelVariant, 4>& ablation_variants() {
    static const std::array<ModelVariant, 4> v = {{
        {"I", true, true},
        {"II", false, true},
        {"III", true, false},
        {"IV", false, false},
    }};
    return v;
}

const ModelVariant& variant_by_id(const std::string& id) {
    for (const ModelVariant& v : ablation_variants())
        if (v.id == id) return v;
    throw ConfigError("unknown model variant '" + id + "' (expected I, II, III or IV)");
}

std::string RunPaths::episode_file(std::size_t idx) const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "ep_%03zu.txt", idx);
    return data_dir() + "/" + buf;
}

std::string RunPaths::ae_ckpt(const std::string& which, std::uint64_t seed) const {
    return models_dir() + "/ae_" + which + "_seed" + std::to_string(seed) + ".ckpt";
}

std::string RunPaths::policy_ckpt(const std::string& model, std::uint64_t seed) const {
    return models_dir() + "/policy_" + model + "_seed" + std::to_string(seed) + ".ckpt";
}

std::string RunPaths::curve_file(const std::string& name) const {
    return models_dir() + "/" + name + "_curve.csv";
}

std::string RunPaths::traces_dir(const std::string& model, std::uint64_t seed) const {
    return eval_dir() + "/traces/" + model + "_seed" + std::to_string(seed);
}

void RunPaths::make_all_dirs() const {
    fs::create_directories(data_dir());
    fs::create_directories(models_dir());
    fs::create_directories(eval_dir());
    fs::create_directories(analysis_dir());
}

Manifest::Manifest(std::string path, std::uint64_t config_hash)
    : path_(std::move(path)), hash_(config_hash) {}

void Manifest::add(const std::string& file_path, const std::string& kind) const {
    std::ofstream os(path_, std::ios::app);
    if (!os) throw IoError("manifest: cannot open '" + path_ + "'");
    nlohmann::json row;
    row["path"] = file_path;
    row["kind"] = kind;
    char hex[20];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash_));
    row["config_hash"] = hex;
    std::error_code ec;
    const auto size = fs::file_size(file_path, ec);
    row["bytes"] = ec ? 0 : static_cast<std::uint64_t>(size);
    // content version of the artifact itself, so outputs are tamper-evident
    if (!ec && fs::is_regular_file(file_path)) {
        std::ifstream is(file_path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes)));
        row["content_hash"] = hex;
    }
    os << row.dump() << "\n";
}

std::vector<Scenario> dataset_scenarios(const RunConfig& cfg) {
    return training_scenarios(cfg.seed);
}

std::vector<RawEpisode> generate_raw_dataset(const RunConfig& cfg) {
    return generate_dataset(cfg.env, dataset_scenarios(cfg));
}

PreparedData prepare_data(const RunConfig& cfg, const std::vector<RawEpisode>& raw) {
    if (raw.empty()) throw ConfigError("prepare_data: no episodes");
    std::vector<RawEpisode> work;
    work.reserve(raw.size());
    for (const RawEpisode& ep : raw)
        work.push_back(clip_tactile(resample(ep, cfg.model_rate_hz), cfg.clip_bound));

    PreparedData out;
    out.stats = fit_scaler(work, cfg.env.whole_grouping(), cfg.env.thumb_grouping(),
                           cfg.clip_bound);
    out.all.reserve(work.size());
    for (const RawEpisode& ep : work)
        out.all.push_back(make_targets(apply_scaler(ep, out.stats), cfg.horizon));

    // deterministic split: every k-th episode goes to validation
    const auto k = static_cast<std::size_t>(std::lround(1.0 / cfg.val_fraction));
    for (std::size_t i = 0; i < out.all.size(); ++i) {
        if ((i + 1) % k == 0) out.val_idx.push_back(i);
        else out.train_idx.push_back(i);
    }
    if (out.val_idx.empty()) {  // tiny datasets still need one validation episode
        out.val_idx.push_back(out.all.size() - 1);
        out.train_idx.pop_back();
    }
    for (std::size_t i : out.train_idx) out.train_set.push_back(out.all[i]);
    for (std::size_t i : out.val_idx) out.val_set.push_back(out.all[i]);
    return out;
}

namespace {

Matrix stack_tactile_frames(const std::vector<ProcessedEpisode>& eps, bool thumb) {
    std::size_t rows = 0, cols = 0;
    for (const auto& ep : eps) {
        rows += ep.steps();
        cols = thumb ? ep.thumb_dim : ep.whole_dim;
    }
    Matrix out(rows, cols);
    std::size_t r = 0;
    for (const auto& ep : eps) {
        const std::size_t off = thumb ? ep.thumb_offset() : ep.whole_offset();
        for (std::size_t t = 0; t < ep.steps(); ++t, ++r)
            std::copy(ep.inputs.row_ptr(t) + off, ep.inputs.row_ptr(t) + off + cols,
                      out.row_ptr(r));
    }
    return out;
}

}  // namespace

SeedModels train_autoencoders(const RunConfig& cfg, const PreparedData& data,
                              std::uint64_t seed) {
    SeedModels out;
    const Matrix train_whole = stack_tactile_frames(data.train_set, false);
    const Matrix val_whole = stack_tactile_frames(data.val_set, false);
    const Matrix train_thumb = stack_tactile_frames(data.train_set, true);
    const Matrix val_thumb = stack_tactile_frames(data.val_set, true);

    AETrainOptions opts;
    opts.epochs = cfg.ae_epochs;
    opts.learning_rate = cfg.ae_learning_rate;
    opts.noise_sigma = cfg.ae_noise_sigma;
    opts.noise_per_epoch = cfg.noise_per_epoch;
    opts.algo = cfg.opt_algo();

    {
        AEConfig ae_cfg{train_whole.cols(), cfg.ae_whole_hidden, cfg.latent_dim};
        Rng rng(Rng::mix(seed, 0xAE01ULL));
        out.ae_whole.init(ae_cfg, rng);
        opts.seed = Rng::mix(seed, 0xAE02ULL);
        out.whole_report = train_ae(out.ae_whole, train_whole, val_whole, opts);
    }
    {
        AEConfig ae_cfg{train_thumb.cols(), cfg.ae_thumb_hidden, cfg.latent_dim};
        Rng rng(Rng::mix(seed, 0xAE03ULL));
        out.ae_thumb.init(ae_cfg, rng);
        opts.seed = Rng::mix(seed, 0xAE04ULL);
        out.thumb_report = train_ae(out.ae_thumb, train_thumb, val_thumb, opts);
    }
    return out;
}

PolicyModel init_policy_model(const RunConfig& cfg, const ModelVariant& variant,
                              std::uint64_t seed) {
    PolicyModel model;
    Rng rng(Rng::mix(seed, fnv1a64("policy_" + variant.id)));
    model.init(cfg.latent_dim, cfg.env.joints, cfg.lstm_hidden, cfg.attention_hidden,
               variant.attention, rng);
    return model;
}

PolicyTrainReport train_policy_variant(const RunConfig& cfg, const PreparedData& data,
                                       const SeedModels& models, const ModelVariant& variant,
                                       std::uint64_t seed, PolicyModel& out_model) {
    out_model = init_policy_model(cfg, variant, seed);
    PolicyTrainOptions opts;
    opts.epochs = cfg.policy_epochs;
    opts.learning_rate = cfg.policy_learning_rate;
    opts.gamma = variant.constraint ? cfg.gamma : 0.0;
    opts.channel_weights =
        policy_channel_weights(out_model.layout, cfg.strong_joints, cfg.strong_weight);
    opts.noise_sigmas = cfg.noise_sigmas;
    opts.noise_per_epoch = cfg.noise_per_epoch;
    opts.seed = Rng::mix(seed, fnv1a64("train_" + variant.id));
    opts.jobs = cfg.jobs;
    opts.algo = cfg.opt_algo();
    return train_policy(out_model, data.train_set, data.val_set, models.ae_whole,
                        models.ae_thumb, opts);
}

double validation_loop_gap(PolicyModel& model, const PreparedData& data,
                           const AEParams& ae_whole, const AEParams& ae_thumb) {
    std::vector<Matrix> traces;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> switches;
    for (const auto& ep : data.val_set) {
        PolicySequence seq = assemble_sequence(ep, ae_whole, ae_thumb, model.layout);
        if (seq.switches.pairs.empty()) continue;
        traces.push_back(teacher_forced_hidden_trace(model, seq));
        switches.push_back(seq.switches.pairs);
    }
    return loop_gap(traces, switches);
}

EvalRun evaluate_stack(const RunConfig& cfg, TrainedStack& stack, const std::string& model_id,
                       std::uint64_t seed, bool keep_traces) {
    std::vector<Scenario> scenarios = evaluation_scenarios(true, seed);
    {
        auto untrained = evaluation_scenarios(false, seed);
        scenarios.insert(scenarios.end(), untrained.begin(), untrained.end());
    }

    EvalRun run;
    run.rows.resize(scenarios.size());
    run.attention_traces.resize(scenarios.size());
    run.hidden_traces.resize(scenarios.size());
    run.phase_traces.resize(scenarios.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> simplex_bad{0};
    std::vector<double> max_h(std::max<std::size_t>(1, cfg.jobs), 0.0);

    auto work = [&](std::size_t worker) {
        CapOpeningEnv env(cfg.env);
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= scenarios.size()) break;
            const Scenario& sc = scenarios[i];
            RolloutResult res = rollout(env, sc, stack, cfg.judge);

            for (std::size_t t = 0; t < res.traces.attention.rows(); ++t) {
                double s = 0.0;
                bool ok = true;
                for (std::size_t k = 0; k < 4; ++k) {
                    const double a = res.traces.attention(t, k);
                    if (a < 0.0) ok = false;
                    s += a;
                }
                if (!ok || std::abs(s - 1.0) > 1e-9) simplex_bad.fetch_add(1);
            }
            for (std::size_t t = 0; t < res.traces.hidden.rows(); ++t)
                for (std::size_t c = 0; c < res.traces.hidden.cols(); ++c)
                    max_h[worker] =
                        std::max(max_h[worker], std::abs(res.traces.hidden(t, c)));

            TrialRow row;
            row.model_id = model_id;
            row.seed = seed;
            row.scenario_id = sc.id;
            row.trained_set = sc.object.trained;
            row.result = res.outcome.result;
            row.steps_used = res.outcome.steps_used;
            row.open_step = res.outcome.open_step;
            row.stop_step = res.outcome.stop_step;
            run.rows[i] = row;
            if (keep_traces) {
                run.attention_traces[i] = std::move(res.traces.attention);
                run.hidden_traces[i] = std::move(res.traces.hidden);
                run.phase_traces[i] = std::move(res.traces.phases);
            }
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    run.simplex_violations = simplex_bad.load();
    for (double v : max_h) run.max_hidden_abs = std::max(run.max_hidden_abs, v);
    if (!keep_traces) {
        run.attention_traces.clear();
        run.hidden_traces.clear();
        run.phase_traces.clear();
    }
    return run;
}

TrainedStack make_stack(const RunConfig& cfg, const PreparedData& data, const SeedModels& models,
                        PolicyModel policy) {
    TrainedStack stack;
    stack.scaler = data.stats;
    stack.ae_whole = models.ae_whole;
    stack.ae_thumb = models.ae_thumb;
    stack.policy = std::move(policy);
    stack.config_hash = cfg.hash();
    return stack;
}

void save_seed_models(const RunPaths& paths, const RunConfig& cfg, const SeedModels& models,
                      std::uint64_t seed, const Manifest* manifest) {
    const std::uint64_t h = cfg.hash();
    save_checkpoint(paths.ae_ckpt("whole", seed), models.ae_whole.all_params(), h,
                    &models.whole_report.optimizer);
    save_checkpoint(paths.ae_ckpt("thumb", seed), models.ae_thumb.all_params(), h,
                    &models.thumb_report.optimizer);
    if (manifest) {
        manifest->add(paths.ae_ckpt("whole", seed), "checkpoint");
        manifest->add(paths.ae_ckpt("thumb", seed), "checkpoint");
    }
}

namespace {

void check_hash(const LoadedCheckpoint& ckpt, const RunConfig& cfg, const std::string& path) {
    if (ckpt.config_hash != cfg.hash())
        std::fprintf(stderr,
                     "warning: checkpoint '%s' was produced under a different config\n",
                     path.c_str());
}

}  // namespace

SeedModels load_autoencoders(const RunConfig& cfg, const RunPaths& paths, std::uint64_t seed) {
    SeedModels out;
    for (const auto& [which, target] :
         {std::pair<std::string, AEParams*>{"whole", &out.ae_whole},
          std::pair<std::string, AEParams*>{"thumb", &out.ae_thumb}}) {
        const std::string path = paths.ae_ckpt(which, seed);
        if (!fs::exists(path))
            throw DependencyError("missing autoencoder checkpoint '" + path +
                                  "'; run train-ae --which " + which + " first");
        AEConfig ae_cfg{which == "whole" ? cfg.env.whole_dim() : cfg.env.thumb_dim(),
                        which == "whole" ? cfg.ae_whole_hidden : cfg.ae_thumb_hidden,
                        cfg.latent_dim};
        Rng rng(0);
        target->init(ae_cfg, rng);
        const LoadedCheckpoint ckpt = load_checkpoint(path);
        check_hash(ckpt, cfg, path);
        auto params = target->all_params();
        restore_params(ckpt, params);
    }
    return out;
}

void save_policy(const RunPaths& paths, const RunConfig& cfg, PolicyModel& model,
                 const std::string& model_id, std::uint64_t seed, const Manifest* manifest) {
    std::vector<const ParamGroup*> groups;
    for (ParamGroup* g : model.all_params()) groups.push_back(g);
    save_checkpoint(paths.policy_ckpt(model_id, seed), groups, cfg.hash());
    if (manifest) manifest->add(paths.policy_ckpt(model_id, seed), "checkpoint");
}

void save_policy_with_state(const RunPaths& paths, const RunConfig& cfg, PolicyModel& model,
                            const OptimizerState& opt, const std::string& model_id,
                            std::uint64_t seed, const Manifest* manifest) {
    std::vector<const ParamGroup*> groups;
    for (ParamGroup* g : model.all_params()) groups.push_back(g);
    save_checkpoint(paths.policy_ckpt(model_id, seed), groups, cfg.hash(), &opt);
    if (manifest) manifest->add(paths.policy_ckpt(model_id, seed), "checkpoint");
}

PolicyModel load_policy(const RunConfig& cfg, const RunPaths& paths, const std::string& model_id,
                        std::uint64_t seed) {
    const std::string path = paths.policy_ckpt(model_id, seed);
    if (!fs::exists(path))
        throw DependencyError("missing policy checkpoint '" + path +
                              "'; run train-policy --model " + model_id + " first");
    PolicyModel model = init_policy_model(cfg, variant_by_id(model_id), seed);
    const LoadedCheckpoint ckpt = load_checkpoint(path);
    check_hash(ckpt, cfg, path);
    auto params = model.all_params();
    restore_params(ckpt, params);
    return model;
}

TrainedStack load_stack(const RunConfig& cfg, const RunPaths& paths, const std::string& model_id,
                        std::uint64_t seed) {
    if (!fs::exists(paths.scaler_file()))
        throw DependencyError("missing scaler '" + paths.scaler_file() +
                              "'; run train-ae first");
    TrainedStack stack;
    stack.scaler = NormalizationStats::load(paths.scaler_file());
    SeedModels models = load_autoencoders(cfg, paths, seed);
    stack.ae_whole = std::move(models.ae_whole);
    stack.ae_thumb = std::move(models.ae_thumb);
    stack.policy = load_policy(cfg, paths, model_id, seed);
    stack.config_hash = cfg.hash();
    return stack;
}

double ReproduceSummary::mean_complete(std::size_t variant_idx) const {
    double acc = 0.0;
    for (const SeedOutcome& s : seeds) acc += s.pooled_complete[variant_idx];
    return seeds.empty() ? 0.0 : acc / static_cast<double>(seeds.size());
}

double ReproduceSummary::mean_partial(std::size_t variant_idx) const {
    double acc = 0.0;
    for (const SeedOutcome& s : seeds) acc += s.pooled_partial[variant_idx];
    return seeds.empty() ? 0.0 : acc / static_cast<double>(seeds.size());
}

namespace {

void write_curve_csv(const std::string& path, const std::vector<double>& train,
                     const std::vector<double>& val, std::uint64_t hash) {
    std::ofstream os(path);
    if (!os) throw IoError("curve: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << hash << std::dec << "\n";
    os << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < train.size(); ++e)
        os << e << ',' << train[e] << ',' << (e < val.size() ? val[e] : 0.0) << "\n";
}

}  // namespace

ReproduceSummary reproduce_all(const RunConfig& cfg, bool write_artifacts, std::ostream* log) {
    const std::uint64_t hash = cfg.hash();
    RunPaths paths(cfg.out_dir);
    std::optional<Manifest> manifest;
    if (write_artifacts) {
        paths.make_all_dirs();
        cfg.save(paths.config_file());
        manifest.emplace(paths.manifest_file(), hash);
        manifest->add(paths.config_file(), "config");
    }
    auto note = [&](const std::string& msg) {
        if (log) (*log) << msg << std::endl;
    };

    note("generating dataset (" + std::to_string(dataset_scenarios(cfg).size()) + " episodes)");
    const std::vector<RawEpisode> raw = generate_raw_dataset(cfg);
    if (write_artifacts) {
        write_scenario_csv(paths.scenarios_file(), dataset_scenarios(cfg), hash);
        manifest->add(paths.scenarios_file(), "scenario_list");
        for (std::size_t i = 0; i < raw.size(); ++i) {
            write_episode(paths.episode_file(i), raw[i]);
            manifest->add(paths.episode_file(i), "episode");
        }
    }

    PreparedData data = prepare_data(cfg, raw);
    if (write_artifacts) {
        data.stats.save(paths.scaler_file(), hash);
        manifest->add(paths.scaler_file(), "scaler");
    }

    ReproduceSummary summary;
    for (const std::uint64_t seed : cfg.eval_seeds) {
        note("seed " + std::to_string(seed) + ": training autoencoders");
        SeedModels models = train_autoencoders(cfg, data, seed);
        if (write_artifacts) {
            save_seed_models(paths, cfg, models, seed, &*manifest);
            write_curve_csv(paths.curve_file("ae_whole_seed" + std::to_string(seed)),
                            models.whole_report.train_curve, models.whole_report.val_curve, hash);
            write_curve_csv(paths.curve_file("ae_thumb_seed" + std::to_string(seed)),
                            models.thumb_report.train_curve, models.thumb_report.val_curve, hash);
        }

        SeedOutcome outcome;
        outcome.seed = seed;
        for (std::size_t vi = 0; vi < ablation_variants().size(); ++vi) {
            const ModelVariant& variant = ablation_variants()[vi];
            note("seed " + std::to_string(seed) + ": training model " + variant.id);
            PolicyModel model;
            const PolicyTrainReport report =
                train_policy_variant(cfg, data, models, variant, seed, model);
            if (write_artifacts) {
                save_policy_with_state(paths, cfg, model, report.optimizer, variant.id, seed,
                                       &*manifest);
                write_curve_csv(
                    paths.curve_file("policy_" + variant.id + "_seed" + std::to_string(seed)),
                    report.train_curve, report.val_curve, hash);
            }

            if (variant.id == "I")
                outcome.loop_gap_constrained =
                    validation_loop_gap(model, data, models.ae_whole, models.ae_thumb);
            if (variant.id == "III")
                outcome.loop_gap_unconstrained =
                    validation_loop_gap(model, data, models.ae_whole, models.ae_thumb);

            TrainedStack stack = make_stack(cfg, data, models, std::move(model));
            const bool keep = variant.id == "I";
            note("seed " + std::to_string(seed) + ": evaluating model " + variant.id);
            EvalRun eval = evaluate_stack(cfg, stack, variant.id, seed, keep);
            summary.simplex_violations += eval.simplex_violations;
            summary.max_hidden_abs = std::max(summary.max_hidden_abs, eval.max_hidden_abs);

            std::size_t complete = 0, partial = 0;
            for (const TrialRow& r : eval.rows) {
                if (r.result == TrialResult::CompleteSuccess) ++complete;
                if (r.result != TrialResult::Failure) ++partial;
            }
            outcome.pooled_complete[vi] =
                static_cast<double>(complete) / static_cast<double>(eval.rows.size());
            outcome.pooled_partial[vi] =
                static_cast<double>(partial) / static_cast<double>(eval.rows.size());
            summary.all_rows.insert(summary.all_rows.end(), eval.rows.begin(), eval.rows.end());

            if (keep) {
                outcome.thumb_attn_after_tryopen = mean_attention_after_tryopen(
                    eval.attention_traces, eval.phase_traces,
                    static_cast<std::size_t>(Modality::TactileThumb), cfg.judge.grace_steps);
                outcome.thumb_attn_overall = mean_attention_overall(
                    eval.attention_traces, static_cast<std::size_t>(Modality::TactileThumb));
                outcome.joint_attn_sliding = mean_attention_in_phase(
                    eval.attention_traces, eval.phase_traces,
                    static_cast<std::size_t>(Modality::Joints),
                    {SubTask::SlideLeft, SubTask::SlideRight});
                outcome.joint_attn_overall = mean_attention_overall(
                    eval.attention_traces, static_cast<std::size_t>(Modality::Joints));

                const PCAModel pca = pca_fit(eval.hidden_traces);
                std::size_t total_rows = 0;
                for (const Matrix& h : eval.hidden_traces) total_rows += h.rows();
                Matrix all_points(total_rows, 2);
                std::vector<SubTask> all_labels;
                all_labels.reserve(total_rows);
                std::size_t r = 0;
                for (std::size_t ti = 0; ti < eval.hidden_traces.size(); ++ti) {
                    const Matrix proj = pca.project(eval.hidden_traces[ti], 2);
                    for (std::size_t t = 0; t < proj.rows(); ++t, ++r) {
                        all_points(r, 0) = proj(t, 0);
                        all_points(r, 1) = proj(t, 1);
                        all_labels.push_back(eval.phase_traces[ti][t]);
                    }
                }
                outcome.knn_accuracy = knn_label_accuracy(all_points, all_labels, 5);

                if (write_artifacts) {
                    const std::string tdir = paths.traces_dir(variant.id, seed);
                    fs::create_directories(tdir);
                    for (std::size_t ti = 0; ti < eval.rows.size(); ++ti) {
                        TrialTraces tr;
                        tr.attention = eval.attention_traces[ti];
                        tr.hidden = eval.hidden_traces[ti];
                        tr.phases = eval.phase_traces[ti];
                        const std::string base = tdir + "/" + eval.rows[ti].scenario_id;
                        write_attention_trace(base + "_attention.csv", tr, hash);
                        write_hidden_trace(base + "_hidden.csv", tr, hash);
                    }
                    manifest->add(tdir, "trace_dir");

                    const std::string stem =
                        paths.analysis_dir() + "/pca_I_seed" + std::to_string(seed);
                    write_pca_csv(stem + ".csv", all_points, all_labels, pca, hash);
                    write_scatter_svg(stem + ".svg", all_points, all_labels,
                                      "LSTM hidden state PCA, model I seed " +
                                          std::to_string(seed));
                    manifest->add(stem + ".csv", "pca");
                    if (!eval.attention_traces.empty() && !eval.attention_traces[0].empty()) {
                        const std::string astem = paths.analysis_dir() + "/attention_I_seed" +
                                                  std::to_string(seed);
                        write_attention_svg(astem + ".svg", eval.attention_traces[0],
                                            eval.phase_traces[0],
                                            "attention weights, first trial");
                        const AttentionSummary asum =
                            attention_summary(eval.attention_traces, eval.phase_traces);
                        write_attention_summary_csv(astem + "_summary.csv", asum, hash);
                        manifest->add(astem + "_summary.csv", "attention_summary");
                    }
                }
            }
        }
        summary.seeds.push_back(outcome);
    }

    summary.table = build_table(summary.all_rows, {"I", "II", "III", "IV"});
    if (write_artifacts) {
        write_results_csv(paths.results_file(), summary.all_rows, hash);
        manifest->add(paths.results_file(), "results");
        write_table_csv(paths.analysis_dir() + "/table.csv", summary.table, hash);
        manifest->add(paths.analysis_dir() + "/table.csv", "ablation_table");
    }
    return summary;
}

}  // namespace aelstm
