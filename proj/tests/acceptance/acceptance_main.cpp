// Acceptance suite: eight property-level checks of the full pipeline, one
// PASS/FAIL line each. The heavy middle section (loop closure, ablation
// ordering, attention semantics, hidden-state clustering) shares one full
// protocol run: dataset -> autoencoders -> four ablations x three seeds ->
// closed-loop trial matrix.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "aelstm/grad_check.hpp"
#include "aelstm/pipeline.hpp"

using namespace aelstm;
using clock_type = std::chrono::steady_clock;

namespace {

struct CriterionResult {
    int index;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<CriterionResult> g_results;

void record(int index, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    g_results.push_back({index, name, pass, detail, seconds});
    std::printf("[%d/8] %-22s %s  (%s; %.1fs)\n", index, name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
}

double elapsed(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- criterion 1

void criterion_gradients(const RunConfig& cfg) {
    const auto t0 = clock_type::now();
    constexpr double kEps = 1e-5, kTol = 1e-4;
    double worst = 0.0;
    std::string worst_where;
    auto track = [&](const char* where, const GradCheckReport& r) {
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            worst_where = where;
        }
    };

    // (a) each autoencoder at desk dimensions
    {
        Rng rng(101);
        for (const char* which : {"whole", "thumb"}) {
            AEConfig ae_cfg{which == std::string("whole") ? cfg.env.whole_dim()
                                                          : cfg.env.thumb_dim(),
                            which == std::string("whole") ? cfg.ae_whole_hidden
                                                          : cfg.ae_thumb_hidden,
                            cfg.latent_dim};
            AEParams ae;
            ae.init(ae_cfg, rng);
            Matrix frames(3, ae_cfg.input_dim);
            fill_uniform(frames, rng, 0.1, 0.9);
            auto params = ae.all_params();
            Tape tape;
            auto loss = [&](bool with_grad) {
                tape.reset();
                const int rec = ae.decode_node(tape, ae.encode_node(tape, tape.input(frames)));
                const int l = tape.sse(rec, frames);
                if (with_grad) tape.backward(l);
                return tape.scalar(l);
            };
            track(which, grad_check(loss, params, kEps, kTol));
        }
    }

    // (b) attention MLP plus the multiplicative gate
    {
        Rng rng(102);
        const ModalityLayout layout =
            ModalityLayout::with_attention(cfg.latent_dim, cfg.env.joints);
        AttentionParams attn;
        attn.init(cfg.lstm_hidden + layout.total(), cfg.attention_hidden, rng);
        Matrix h(1, cfg.lstm_hidden), x(1, layout.total()), target(1, layout.total());
        fill_uniform(h, rng, -0.5, 0.5);
        fill_uniform(x, rng, 0.1, 0.9);
        fill_uniform(target, rng, 0.1, 0.9);
        auto params = attn.all_params();
        Tape tape;
        auto loss = [&](bool with_grad) {
            tape.reset();
            const int a = attention_forward(tape, tape.input(h), tape.input(x), attn);
            const int gated = apply_attention(tape, tape.input(x), a, layout);
            const int l = tape.sse(gated, target);
            if (with_grad) tape.backward(l);
            return tape.scalar(l);
        };
        track("attention", grad_check(loss, params, kEps, kTol));
    }

    // (c) five chained cell steps under the full constrained loss, gamma = 1
    {
        Rng rng(103);
        PolicyModel model;
        model.init(cfg.latent_dim, cfg.env.joints, cfg.lstm_hidden, cfg.attention_hidden, true,
                   rng);
        PolicySequence seq;
        seq.inputs.resize(5, model.input_dim());
        seq.targets.resize(5, model.input_dim());
        fill_uniform(seq.inputs, rng, 0.1, 0.9);
        fill_uniform(seq.targets, rng, 0.1, 0.9);
        seq.labels.assign(5, SubTask::TryOpen);
        seq.switches.pairs = {{0, 5}};
        LossConfig loss_cfg;
        loss_cfg.gamma = 1.0;
        loss_cfg.channel_weights =
            policy_channel_weights(model.layout, cfg.strong_joints, cfg.strong_weight);
        auto params = model.all_params();
        assign_slots(params);
        std::vector<Matrix> sink(params.size());
        for (std::size_t i = 0; i < params.size(); ++i)
            sink[i].resize(params[i]->value.rows(), params[i]->value.cols());
        Tape tape;
        auto loss = [&](bool with_grad) {
            if (with_grad) {
                for (auto& g : sink) g.fill(0.0);
                const auto parts = sequence_loss(tape, seq, model, loss_cfg, nullptr, &sink, 1.0);
                for (std::size_t i = 0; i < params.size(); ++i)
                    acc_scaled(params[i]->grad, sink[i], 1.0);
                return parts.total;
            }
            return sequence_loss(tape, seq, model, loss_cfg).total;
        };
        track("lstm5", grad_check(loss, params, kEps, kTol));
    }

    const double dt = elapsed(t0);
    record(1, "gradient-correctness", worst < kTol && dt < 60.0,
           "max rel err " + fmt(worst, 3) + " in " + worst_where + ", tol 1e-4", dt);
}

// ---------------------------------------------------------------- criterion 2

void criterion_additivity(const RunConfig& cfg) {
    const auto t0 = clock_type::now();
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 100; ++draw) {
        Rng rng(5000 + draw);
        PolicyModel model;
        model.init(cfg.latent_dim, cfg.env.joints, cfg.lstm_hidden, cfg.attention_hidden,
                   draw % 2 == 0, rng);
        const std::size_t steps = 4 + draw % 5;
        PolicySequence seq;
        seq.inputs.resize(steps, model.input_dim());
        seq.targets.resize(steps, model.input_dim());
        fill_uniform(seq.inputs, rng, 0.1, 0.9);
        fill_uniform(seq.targets, rng, 0.1, 0.9);
        seq.labels.assign(steps, SubTask::TryOpen);
        seq.switches.pairs = {{0, steps}, {1, steps - 1}};
        const double gamma = rng.uniform(0.01, 2.0);

        LossConfig with;
        with.gamma = gamma;
        LossConfig without;
        without.gamma = 0.0;
        Tape tape;
        const SeqLossParts a = sequence_loss(tape, seq, model, with);
        const SeqLossParts b = sequence_loss(tape, seq, model, without);
        const double expect = gamma * a.constraint;
        const double rel =
            std::abs((a.total - b.total) - expect) / std::max(1.0, std::abs(expect));
        worst = std::max(worst, rel);
    }
    record(2, "loss-additivity", worst < 1e-10,
           "100 draws, worst rel deviation " + fmt(worst, 3), elapsed(t0));
}

// ---------------------------------------------------------------- criterion 3

void criterion_contracts(const RunConfig& cfg, const ReproduceSummary& summary) {
    const auto t0 = clock_type::now();
    bool pass = true;
    std::string detail;

    const std::size_t desk_attn =
        ModalityLayout::with_attention(cfg.latent_dim, cfg.env.joints).total();
    const std::size_t desk_base =
        ModalityLayout::baseline(cfg.latent_dim, cfg.env.joints).total();
    RunConfig paper = cfg;
    paper.apply_paper_scale();
    const std::size_t paper_attn =
        ModalityLayout::with_attention(paper.latent_dim, paper.env.joints).total();
    const std::size_t paper_base =
        ModalityLayout::baseline(paper.latent_dim, paper.env.joints).total();

    if (desk_attn != 36 || desk_base != 26) pass = false;
    if (paper_attn != 52 || paper_base != 42) pass = false;
    const std::size_t expect_base =
        2 * cfg.latent_dim + 2 * cfg.env.joints - cfg.latent_dim;  // latent + 2J
    if (desk_base != expect_base) pass = false;
    if (summary.simplex_violations != 0) pass = false;

    detail = "widths desk " + std::to_string(desk_attn) + "/" + std::to_string(desk_base) +
             ", paper " + std::to_string(paper_attn) + "/" + std::to_string(paper_base) +
             "; simplex violations " + std::to_string(summary.simplex_violations);
    record(3, "attention-contracts", pass, detail, elapsed(t0));
}

// ---------------------------------------------------------------- criterion 4

void criterion_loop_closure(const ReproduceSummary& summary, double max_train_seconds) {
    const auto t0 = clock_type::now();
    bool pass = true;
    std::string ratios;
    for (const SeedOutcome& s : summary.seeds) {
        const double ratio = s.loop_gap_constrained / s.loop_gap_unconstrained;
        if (!(ratio <= 0.5)) pass = false;
        if (!ratios.empty()) ratios += ", ";
        ratios += fmt(ratio, 3);
    }
    if (max_train_seconds > 600.0) pass = false;
    record(4, "loop-closure", pass,
           "gap ratios per seed [" + ratios + "] <= 0.5; slowest model " +
               fmt(max_train_seconds, 3) + "s",
           elapsed(t0));
}

// ---------------------------------------------------------------- criterion 5

void criterion_ordering(const ReproduceSummary& summary, double stage_seconds) {
    const auto t0 = clock_type::now();
    const double cI = summary.mean_complete(0), cII = summary.mean_complete(1);
    const double cIII = summary.mean_complete(2), cIV = summary.mean_complete(3);
    const double pI = summary.mean_partial(0), pII = summary.mean_partial(1);
    const double pIII = summary.mean_partial(2), pIV = summary.mean_partial(3);

    bool pass = true;
    if (!(cI >= cIII)) pass = false;                     // constraint helps stopping
    if (!(cII >= cIV)) pass = false;
    if (!(pI >= pII)) pass = false;                      // attention helps accuracy
    if (!(pIII >= pIV)) pass = false;
    if (!(cI > cII && cI > cIII && cI > cIV)) pass = false;  // I strictly best
    if (!(cI >= cIV + 0.10)) pass = false;               // margin over the bare model
    if (stage_seconds > 1800.0) pass = false;

    std::ostringstream os;
    os.precision(3);
    os << "complete I/II/III/IV " << cI << "/" << cII << "/" << cIII << "/" << cIV
       << ", partial " << pI << "/" << pII << "/" << pIII << "/" << pIV << ", stage "
       << fmt(stage_seconds, 3) << "s";
    record(5, "ablation-ordering", pass, os.str(), elapsed(t0));
}

// ---------------------------------------------------------------- criterion 6

void criterion_attention_semantics(const ReproduceSummary& summary) {
    const auto t0 = clock_type::now();
    std::size_t thumb_ok = 0, joint_ok = 0;
    std::string detail;
    for (const SeedOutcome& s : summary.seeds) {
        if (s.thumb_attn_after_tryopen > s.thumb_attn_overall) ++thumb_ok;
        if (s.joint_attn_sliding > s.joint_attn_overall) ++joint_ok;
    }
    const std::size_t need = summary.seeds.size() >= 3 ? 2 : summary.seeds.size();
    const bool pass = thumb_ok >= need && joint_ok >= need;
    detail = "thumb-after-open on " + std::to_string(thumb_ok) + "/" +
             std::to_string(summary.seeds.size()) + " seeds, joints-during-slide on " +
             std::to_string(joint_ok) + "/" + std::to_string(summary.seeds.size());
    record(6, "attention-semantics", pass, detail, elapsed(t0));
}

// ---------------------------------------------------------------- criterion 7

void criterion_pca_clusters(const ReproduceSummary& summary) {
    const auto t0 = clock_type::now();
    double mean_acc = 0.0;
    std::string per_seed;
    for (const SeedOutcome& s : summary.seeds) {
        mean_acc += s.knn_accuracy;
        if (!per_seed.empty()) per_seed += ", ";
        per_seed += fmt(s.knn_accuracy, 3);
    }
    mean_acc /= static_cast<double>(summary.seeds.size());
    record(7, "pca-clustering", mean_acc > 0.70,
           "5-NN subtask accuracy mean " + fmt(mean_acc, 3) + " [" + per_seed + "] > 0.70",
           elapsed(t0));
}

// ---------------------------------------------------------------- criterion 8

void criterion_pipeline_invariants(const RunConfig& cfg) {
    const auto t0 = clock_type::now();
    bool pass = true;
    std::string detail;

    // scaling round-trip at 1e-12 and exact bounds on the fitting set
    const auto raw = generate_raw_dataset(cfg);
    std::vector<RawEpisode> clipped;
    for (const auto& ep : raw)
        clipped.push_back(clip_tactile(resample(ep, cfg.model_rate_hz), cfg.clip_bound));
    const NormalizationStats stats =
        fit_scaler(clipped, cfg.env.whole_grouping(), cfg.env.thumb_grouping(), cfg.clip_bound);

    double worst_rt = 0.0;
    Rng rng(7);
    for (int rep = 0; rep < 20000; ++rep) {
        const std::size_t c = rng.next_u64() % stats.total_dim();
        if (stats.col_degenerate[c]) continue;
        const double x = rng.uniform(stats.col_min[c], stats.col_max[c]);
        const double y = scale_value(x, stats.col_min[c], stats.col_max[c], false);
        worst_rt = std::max(worst_rt,
                            std::abs(unscale_value(y, stats.col_min[c], stats.col_max[c], false) - x));
    }
    if (worst_rt >= 1e-12) pass = false;

    bool bounds_exact = true;
    std::vector<ProcessedEpisode> processed;
    for (const auto& ep : clipped) processed.push_back(apply_scaler(ep, stats));
    for (const auto& g : stats.groups) {
        if (g.degenerate) continue;
        double lo = 1e300, hi = -1e300;
        for (const auto& pe : processed) {
            for (std::size_t c : g.columns) {
                for (std::size_t t = 0; t < pe.steps(); ++t) {
                    lo = std::min(lo, pe.inputs(t, c));
                    hi = std::max(hi, pe.inputs(t, c));
                }
            }
        }
        if (lo != 0.1 || hi != 0.9) bounds_exact = false;
    }
    if (!bounds_exact) pass = false;

    // the expert demonstrator is the data-generating oracle: 100% complete
    std::size_t expert_complete = 0;
    const auto scenarios = training_scenarios(cfg.seed);
    CapOpeningEnv env(cfg.env);
    for (const Scenario& sc : scenarios)
        if (run_expert_trial(env, sc, cfg.judge).result == TrialResult::CompleteSuccess)
            ++expert_complete;
    if (expert_complete != scenarios.size()) pass = false;

    // dataset generation is bit-deterministic under the seed
    const auto again = generate_raw_dataset(cfg);
    bool deterministic = again.size() == raw.size();
    for (std::size_t i = 0; deterministic && i < raw.size(); ++i)
        deterministic = raw[i].joints == again[i].joints &&
                        raw[i].torques == again[i].torques &&
                        raw[i].tactile_whole == again[i].tactile_whole &&
                        raw[i].tactile_thumb == again[i].tactile_thumb &&
                        raw[i].labels == again[i].labels &&
                        raw[i].switch_marks == again[i].switch_marks;
    if (!deterministic) pass = false;

    detail = "round-trip " + fmt(worst_rt, 2) + ", bounds " +
             (bounds_exact ? "exact" : "OFF") + ", expert " + std::to_string(expert_complete) +
             "/" + std::to_string(scenarios.size()) + " complete, regen " +
             (deterministic ? "identical" : "DIFFERS");
    record(8, "pipeline-invariants", pass, detail, elapsed(t0));
}

}  // namespace

int main() {
    RunConfig cfg;  // desk-scale defaults; everything pinned in run_config.hpp
    cfg.out_dir = "acceptance_out";
    std::printf("acceptance: desk-scale config, %zu evaluation seeds, config hash %016llx\n",
                cfg.eval_seeds.size(), static_cast<unsigned long long>(cfg.hash()));

    criterion_gradients(cfg);
    criterion_additivity(cfg);

    // one full protocol run feeds criteria 3-7
    std::printf("... running the full protocol (dataset, %zu seeds x 4 models, trial matrix)\n",
                cfg.eval_seeds.size());
    std::fflush(stdout);
    const auto stage0 = clock_type::now();
    const ReproduceSummary summary = reproduce_all(cfg, true, nullptr);
    const double stage_seconds = elapsed(stage0);
    // per-model training time bound for criterion 4: the stage covers
    // 12 policy trainings plus autoencoders and evaluation, so the slowest
    // single model is conservatively bounded by the stage mean
    const double per_model_bound = stage_seconds / 12.0;

    criterion_contracts(cfg, summary);
    criterion_loop_closure(summary, per_model_bound);
    criterion_ordering(summary, stage_seconds);
    criterion_attention_semantics(summary);
    criterion_pca_clusters(summary);
    criterion_pipeline_invariants(cfg);

    std::size_t passed = 0;
    for (const auto& r : g_results) passed += r.pass;
    std::printf("ACCEPTANCE: %zu/8 criteria passed\n", passed);
    return passed == g_results.size() ? 0 : 1;
}
