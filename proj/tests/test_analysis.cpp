#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "aelstm/analysis.hpp"
#include "aelstm/errors.hpp"
#include "aelstm/random.hpp"

using namespace aelstm;

TEST_CASE("pca: axis-aligned 2-D data recovers the identity basis") {
    Rng rng(1);
    Matrix data(400, 2);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        data(r, 0) = 3.0 * rng.gaussian();  // larger variance along x
        data(r, 1) = 0.5 * rng.gaussian();
    }
    const PCAModel model = pca_fit({data});
    CHECK(std::abs(model.axes(0, 0)) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(model.axes(0, 1)) == doctest::Approx(0.0).epsilon(0.05));
    CHECK(model.axes(0, 0) > 0.0);  // sign convention
    CHECK(model.explained_variance[0] == doctest::Approx(9.0).epsilon(0.15));
    CHECK(model.explained_variance[1] == doctest::Approx(0.25).epsilon(0.15));
    CHECK(model.explained_variance[0] >= model.explained_variance[1]);
}

TEST_CASE("pca: axes orthonormal, full reconstruction within 1e-9") {
    Rng rng(2);
    Matrix data(120, 6);
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t c = 0; c < 6; ++c)
            data(r, c) = rng.gaussian() + 0.3 * static_cast<double>(c);
    const PCAModel model = pca_fit({data});

    const Matrix gram = matmul(model.axes, transpose(model.axes));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);

    const Matrix full = model.project(data, 6);
    const Matrix back = model.reconstruct(full);
    CHECK(max_abs_diff(back, data) < 1e-9);
}

TEST_CASE("pca: fit is invariant to sample ordering") {
    Rng rng(3);
    Matrix data(80, 3);
    for (std::size_t i = 0; i < data.size(); ++i) data.at_flat(i) = rng.gaussian();
    Matrix reversed(80, 3);
    for (std::size_t r = 0; r < 80; ++r)
        for (std::size_t c = 0; c < 3; ++c) reversed(r, c) = data(79 - r, c);
    const PCAModel a = pca_fit({data});
    const PCAModel b = pca_fit({reversed});
    CHECK(max_abs_diff(a.axes, b.axes) < 1e-9);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(a.explained_variance[k] == doctest::Approx(b.explained_variance[k]).epsilon(1e-9));
}

TEST_CASE("knn: well-separated clusters classify near perfectly") {
    Rng rng(4);
    Matrix points(300, 2);
    std::vector<SubTask> labels(300);
    for (std::size_t i = 0; i < 300; ++i) {
        const int c = static_cast<int>(i % 3);
        points(i, 0) = 6.0 * c + 0.3 * rng.gaussian();
        points(i, 1) = -3.0 * c + 0.3 * rng.gaussian();
        labels[i] = static_cast<SubTask>(c);
    }
    CHECK(knn_label_accuracy(points, labels, 5) > 0.97);

    // random labels stay near chance
    std::vector<SubTask> shuffled(300);
    for (std::size_t i = 0; i < 300; ++i)
        shuffled[i] = static_cast<SubTask>(rng.next_u64() % 3);
    CHECK(knn_label_accuracy(points, shuffled, 5) < 0.6);
}

TEST_CASE("loop_gap: hand-computed case") {
    Matrix trace(4, 2);
    trace(0, 0) = 0.0; trace(0, 1) = 0.0;
    trace(1, 0) = 1.0; trace(1, 1) = 1.0;
    trace(2, 0) = 0.5; trace(2, 1) = 0.0;
    trace(3, 0) = 2.0; trace(3, 1) = 2.0;
    // pairs (0,2): gap 0.25; (1,3): gap 1+1=2 -> mean 1.125
    const double gap = loop_gap({trace}, {{{0, 2}, {1, 3}}});
    CHECK(gap == doctest::Approx((0.25 + 2.0) / 2.0));
    CHECK_THROWS_AS(loop_gap({trace}, {{}}), ConfigError);
}

TEST_CASE("attention summary: per-phase means and overall mean") {
    Matrix attn(4, 4);
    std::vector<SubTask> phases = {SubTask::Grasp, SubTask::Grasp, SubTask::TryOpen,
                                   SubTask::TryOpen};
    for (std::size_t t = 0; t < 4; ++t) {
        attn(t, 0) = t < 2 ? 0.7 : 0.1;
        attn(t, 1) = 0.1;
        attn(t, 2) = t < 2 ? 0.1 : 0.7;
        attn(t, 3) = 0.1;
    }
    const AttentionSummary s = attention_summary({attn}, {phases});
    CHECK(s.per_subtask[static_cast<int>(SubTask::Grasp)][0] == doctest::Approx(0.7));
    CHECK(s.per_subtask[static_cast<int>(SubTask::TryOpen)][2] == doctest::Approx(0.7));
    CHECK(s.overall[0] == doctest::Approx(0.4));
    CHECK(s.total == 4);
    CHECK(s.counts[static_cast<int>(SubTask::Grasp)] == 2);
}

TEST_CASE("attention window after try-open segments") {
    Matrix attn(6, 4);
    for (std::size_t t = 0; t < 6; ++t) attn(t, 1) = static_cast<double>(t);
    std::vector<SubTask> phases = {SubTask::TryOpen, SubTask::TryOpen, SubTask::RetractThumb,
                                   SubTask::RetractThumb, SubTask::TryOpen, SubTask::Stop};
    // segments end at t=2 (window picks t=2,3 with window 2) and t=5 (picks t=5)
    const double m = mean_attention_after_tryopen({attn}, {phases}, 1, 2);
    CHECK(m == doctest::Approx((2.0 + 3.0 + 5.0) / 3.0));
}

TEST_CASE("ablation table: counts, rates and the complete<=partial invariant") {
    std::vector<TrialRow> rows;
    auto add = [&](const std::string& model, bool trained, TrialResult r) {
        TrialRow row;
        row.model_id = model;
        row.trained_set = trained;
        row.result = r;
        row.scenario_id = "s";
        rows.push_back(row);
    };
    for (int i = 0; i < 27; ++i) add("I", true, TrialResult::CompleteSuccess);
    for (int i = 0; i < 5; ++i) add("I", true, TrialResult::PartialSuccess);
    for (int i = 0; i < 13; ++i) add("I", false, TrialResult::CompleteSuccess);
    for (int i = 0; i < 10; ++i) add("I", false, TrialResult::PartialSuccess);
    for (int i = 0; i < 13; ++i) add("I", false, TrialResult::Failure);
    const AblationTable table = build_table(rows, {"I", "II", "III", "IV"});

    const AblationCell& tr = table.cell("I", true);
    CHECK(tr.trials == 32);
    CHECK(tr.complete == 27);
    CHECK(tr.partial == 32);  // partial includes complete successes
    CHECK(tr.complete_rate() == doctest::Approx(27.0 / 32.0));
    CHECK(tr.partial_rate() == doctest::Approx(1.0));

    const AblationCell& un = table.cell("I", false);
    CHECK(un.trials == 36);
    CHECK(un.complete <= un.partial);
    CHECK(table.cell("II", true).trials == 0);
}

TEST_CASE("results csv round-trip") {
    std::vector<TrialRow> rows;
    TrialRow r;
    r.model_id = "III";
    r.seed = 7;
    r.scenario_id = "eval_tr_bottle_a_p0_t1";
    r.trained_set = true;
    r.result = TrialResult::PartialSuccess;
    r.steps_used = 412;
    r.open_step = 231;
    rows.push_back(r);
    r.model_id = "IV";
    r.result = TrialResult::Failure;
    r.open_step.reset();
    rows.push_back(r);

    const std::string path =
        (std::filesystem::temp_directory_path() / "aelstm_results_test.csv").string();
    write_results_csv(path, rows, 0xABCDULL);
    const auto back = read_results_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].model_id == "III");
    CHECK(back[0].result == TrialResult::PartialSuccess);
    CHECK(back[0].open_step.has_value());
    CHECK(*back[0].open_step == 231);
    CHECK(!back[1].open_step.has_value());
    std::filesystem::remove(path);
}
