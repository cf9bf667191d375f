#include "aelstm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "aelstm/errors.hpp"

namespace aelstm {

Matrix PCAModel::project(const Matrix& data, std::size_t components) const {
    if (data.cols() != mean.cols())
        throw DimensionError("pca project: data is " + data.shape_str() + ", model dim " +
                             std::to_string(mean.cols()));
    components = std::min(components, axes.rows());
    Matrix out(data.rows(), components);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t k = 0; k < components; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < data.cols(); ++j)
                acc += (data(r, j) - mean(0, j)) * axes(k, j);
            out(r, k) = acc;
        }
    }
    return out;
}

Matrix PCAModel::reconstruct(const Matrix& projected) const {
    if (projected.cols() != axes.rows())
        throw DimensionError("pca reconstruct: need all components");
    Matrix out(projected.rows(), mean.cols());
    for (std::size_t r = 0; r < projected.rows(); ++r) {
        for (std::size_t j = 0; j < mean.cols(); ++j) {
            double acc = mean(0, j);
            for (std::size_t k = 0; k < axes.rows(); ++k)
                acc += projected(r, k) * axes(k, j);
            out(r, j) = acc;
        }
    }
    return out;
}

PCAModel pca_fit(const std::vector<Matrix>& traces) {
    std::size_t total = 0, dim = 0;
    for (const Matrix& t : traces) {
        if (t.rows() == 0) continue;
        if (dim == 0) dim = t.cols();
        else if (t.cols() != dim) throw DimensionError("pca_fit: trace widths differ");
        total += t.rows();
    }
    if (total < 2) throw ConfigError("pca_fit: need at least two samples");

    PCAModel model;
    model.mean.resize(1, dim);
    for (const Matrix& t : traces)
        for (std::size_t r = 0; r < t.rows(); ++r)
            for (std::size_t j = 0; j < dim; ++j) model.mean(0, j) += t(r, j);
    for (std::size_t j = 0; j < dim; ++j) model.mean(0, j) /= static_cast<double>(total);

    Matrix cov(dim, dim);
    std::vector<double> centered(dim);
    for (const Matrix& t : traces) {
        for (std::size_t r = 0; r < t.rows(); ++r) {
            for (std::size_t j = 0; j < dim; ++j) centered[j] = t(r, j) - model.mean(0, j);
            for (std::size_t a = 0; a < dim; ++a) {
                const double ca = centered[a];
                double* row = cov.row_ptr(a);
                for (std::size_t b = a; b < dim; ++b) row[b] += ca * centered[b];
            }
        }
    }
    const double denom = static_cast<double>(total - 1);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = a; b < dim; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }

    SymEigen eig = sym_eigen(cov);
    model.axes = std::move(eig.axes);
    model.explained_variance = std::move(eig.values);
    for (double& v : model.explained_variance) v = std::max(v, 0.0);

    // deterministic sign: first nonzero coefficient positive
    for (std::size_t r = 0; r < model.axes.rows(); ++r) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = model.axes(r, j);
            if (std::abs(v) > 1e-12) {
                if (v < 0)
                    for (std::size_t jj = 0; jj < dim; ++jj) model.axes(r, jj) = -model.axes(r, jj);
                break;
            }
        }
    }
    return model;
}

double knn_label_accuracy(const Matrix& points, const std::vector<SubTask>& labels,
                          std::size_t k, std::size_t max_points) {
    if (points.rows() != labels.size())
        throw DimensionError("knn: points and labels differ in length");
    if (points.rows() < k + 1) throw ConfigError("knn: not enough points");

    std::vector<std::size_t> keep;
    const std::size_t n_all = points.rows();
    const std::size_t stride = n_all > max_points ? (n_all + max_points - 1) / max_points : 1;
    for (std::size_t i = 0; i < n_all; i += stride) keep.push_back(i);
    const std::size_t n = keep.size();

    std::size_t correct = 0;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < points.cols(); ++c) {
                const double diff = points(keep[i], c) - points(keep[j], c);
                d += diff * diff;
            }
            dist[j] = {d, j};
        }
        dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
        std::array<std::size_t, kSubTaskCount> votes{};
        for (std::size_t v = 0; v < k; ++v)
            ++votes[static_cast<std::size_t>(labels[keep[dist[v].second]])];
        std::size_t best = 0;
        for (std::size_t c = 1; c < votes.size(); ++c)
            if (votes[c] > votes[best]) best = c;
        if (static_cast<SubTask>(best) == labels[keep[i]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

double loop_gap(const std::vector<Matrix>& traces,
                const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& switches) {
    if (traces.size() != switches.size())
        throw DimensionError("loop_gap: traces and switch lists differ in length");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const Matrix& h = traces[i];
        for (const auto& [s, e] : switches[i]) {
            if (e >= h.rows())
                throw DimensionError("loop_gap: switch pair beyond trace length");
            double gap = 0.0;
            for (std::size_t c = 0; c < h.cols(); ++c) {
                const double d = h(e, c) - h(s, c);
                gap += d * d;
            }
            acc += gap;
            ++count;
        }
    }
    if (count == 0) throw ConfigError("loop_gap: no switch pairs");
    return acc / static_cast<double>(count);
}

AttentionSummary attention_summary(const std::vector<Matrix>& attention_traces,
                                   const std::vector<std::vector<SubTask>>& phase_traces) {
    if (attention_traces.size() != phase_traces.size())
        throw DimensionError("attention_summary: trace lists differ in length");
    AttentionSummary s;
    for (std::size_t i = 0; i < attention_traces.size(); ++i) {
        const Matrix& a = attention_traces[i];
        const auto& phases = phase_traces[i];
        if (a.rows() != phases.size())
            throw DimensionError("attention_summary: attention/phase length mismatch");
        for (std::size_t t = 0; t < a.rows(); ++t) {
            const auto p = static_cast<std::size_t>(phases[t]);
            for (std::size_t k = 0; k < 4; ++k) {
                s.per_subtask[p][k] += a(t, k);
                s.overall[k] += a(t, k);
            }
            ++s.counts[p];
            ++s.total;
        }
    }
    for (std::size_t p = 0; p < kSubTaskCount; ++p)
        if (s.counts[p])
            for (std::size_t k = 0; k < 4; ++k)
                s.per_subtask[p][k] /= static_cast<double>(s.counts[p]);
    if (s.total)
        for (std::size_t k = 0; k < 4; ++k) s.overall[k] /= static_cast<double>(s.total);
    return s;
}

double mean_attention_after_tryopen(const std::vector<Matrix>& attention_traces,
                                    const std::vector<std::vector<SubTask>>& phase_traces,
                                    std::size_t modality_index, std::size_t window) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < attention_traces.size(); ++i) {
        const Matrix& a = attention_traces[i];
        const auto& phases = phase_traces[i];
        for (std::size_t t = 1; t < phases.size(); ++t) {
            if (phases[t - 1] == SubTask::TryOpen && phases[t] != SubTask::TryOpen) {
                for (std::size_t w = 0; w < window && t + w < a.rows(); ++w) {
                    acc += a(t + w, modality_index);
                    ++count;
                }
            }
        }
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

double mean_attention_in_phase(const std::vector<Matrix>& attention_traces,
                               const std::vector<std::vector<SubTask>>& phase_traces,
                               std::size_t modality_index,
                               const std::vector<SubTask>& phases) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < attention_traces.size(); ++i) {
        const Matrix& a = attention_traces[i];
        for (std::size_t t = 0; t < a.rows(); ++t) {
            if (std::find(phases.begin(), phases.end(), phase_traces[i][t]) != phases.end()) {
                acc += a(t, modality_index);
                ++count;
            }
        }
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

double mean_attention_overall(const std::vector<Matrix>& attention_traces,
                              std::size_t modality_index) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const Matrix& a : attention_traces) {
        for (std::size_t t = 0; t < a.rows(); ++t) {
            acc += a(t, modality_index);
            ++count;
        }
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

AblationCell& AblationTable::cell(const std::string& model, bool trained_set) {
    for (std::size_t i = 0; i < model_ids.size(); ++i)
        if (model_ids[i] == model) return cells[i][trained_set ? 0 : 1];
    model_ids.push_back(model);
    cells.emplace_back();
    return cells.back()[trained_set ? 0 : 1];
}

const AblationCell& AblationTable::cell(const std::string& model, bool trained_set) const {
    for (std::size_t i = 0; i < model_ids.size(); ++i)
        if (model_ids[i] == model) return cells[i][trained_set ? 0 : 1];
    throw IoError("ablation table: unknown model '" + model + "'");
}

void AblationTable::add_outcome(const std::string& model, bool trained_set, TrialResult result) {
    AblationCell& c = cell(model, trained_set);
    ++c.trials;
    if (result == TrialResult::CompleteSuccess) {
        ++c.complete;
        ++c.partial;
    } else if (result == TrialResult::PartialSuccess) {
        ++c.partial;
    }
}

AblationTable build_table(const std::vector<TrialRow>& rows,
                          const std::vector<std::string>& model_order) {
    AblationTable table;
    for (const std::string& id : model_order) {
        table.model_ids.push_back(id);
        table.cells.emplace_back();
    }
    for (const TrialRow& r : rows) table.add_outcome(r.model_id, r.trained_set, r.result);
    return table;
}

void write_results_csv(const std::string& path, const std::vector<TrialRow>& rows,
                       std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("results: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec << "\n";
    os << "model_id,seed,scenario_id,trained_set,result,steps_used,open_step,stop_step\n";
    for (const TrialRow& r : rows) {
        os << r.model_id << ',' << r.seed << ',' << r.scenario_id << ','
           << (r.trained_set ? 1 : 0) << ',' << trial_result_name(r.result) << ','
           << r.steps_used << ',';
        if (r.open_step) os << *r.open_step;
        os << ',';
        if (r.stop_step) os << *r.stop_step;
        os << "\n";
    }
}

std::vector<TrialRow> read_results_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DependencyError("results: missing file '" + path + "'; run evaluate first");
    std::vector<TrialRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("model_id", 0) == 0) continue;
        std::vector<std::string> f;
        std::string tok;
        std::istringstream ss(line);
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        while (f.size() < 8) f.emplace_back();
        TrialRow r;
        r.model_id = f[0];
        r.seed = std::stoull(f[1]);
        r.scenario_id = f[2];
        r.trained_set = f[3] == "1";
        r.result = trial_result_from_name(f[4]);
        r.steps_used = std::stoul(f[5]);
        if (!f[6].empty()) r.open_step = std::stoul(f[6]);
        if (!f[7].empty()) r.stop_step = std::stoul(f[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_table_csv(const std::string& path, const AblationTable& table,
                     std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("table: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec << "\n";
    os << "model,trained_complete_rate,trained_complete,trained_partial_rate,trained_partial,"
          "trained_trials,untrained_complete_rate,untrained_complete,untrained_partial_rate,"
          "untrained_partial,untrained_trials\n";
    for (std::size_t i = 0; i < table.model_ids.size(); ++i) {
        const auto& tr = table.cells[i][0];
        const auto& un = table.cells[i][1];
        os << table.model_ids[i] << ',' << tr.complete_rate() << ',' << tr.complete << ','
           << tr.partial_rate() << ',' << tr.partial << ',' << tr.trials << ','
           << un.complete_rate() << ',' << un.complete << ',' << un.partial_rate() << ','
           << un.partial << ',' << un.trials << "\n";
    }
}

void write_attention_summary_csv(const std::string& path, const AttentionSummary& summary,
                                 std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("attention summary: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec << "\n";
    os << "subtask,count,A_whole_tactile,A_thumb_tactile,A_joint,A_torque\n";
    for (int p = 0; p < kSubTaskCount; ++p) {
        const auto& row = summary.per_subtask[p];
        os << subtask_name(static_cast<SubTask>(p)) << ',' << summary.counts[p] << ',' << row[0]
           << ',' << row[1] << ',' << row[2] << ',' << row[3] << "\n";
    }
    os << "overall," << summary.total << ',' << summary.overall[0] << ',' << summary.overall[1]
       << ',' << summary.overall[2] << ',' << summary.overall[3] << "\n";
}

void write_pca_csv(const std::string& path, const Matrix& projected,
                   const std::vector<SubTask>& labels, const PCAModel& model,
                   std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("pca: cannot open '" + path + "'");
    os << "# config_hash=" << std::hex << config_hash << std::dec;
    os << " explained_variance=";
    for (std::size_t i = 0; i < std::min<std::size_t>(4, model.explained_variance.size()); ++i) {
        if (i) os << ';';
        os << model.explained_variance[i];
    }
    os << "\n";
    os << "t,pc1,pc2,subtask_label\n";
    for (std::size_t t = 0; t < projected.rows(); ++t) {
        os << t << ',' << projected(t, 0) << ',' << (projected.cols() > 1 ? projected(t, 1) : 0.0)
           << ',' << subtask_name(labels[t]) << "\n";
    }
}

namespace {

const char* phase_color(SubTask p) {
    switch (p) {
        case SubTask::Grasp: return "#888888";
        case SubTask::TryOpen: return "#2ca02c";
        case SubTask::RetractThumb: return "#9467bd";
        case SubTask::SlideLeft: return "#1f77b4";
        case SubTask::SlideRight: return "#17becf";
        case SubTask::Stop: return "#d62728";
    }
    return "#000000";
}

}  // namespace

void write_scatter_svg(const std::string& path, const Matrix& points2d,
                       const std::vector<SubTask>& labels, const std::string& title) {
    std::ofstream os(path);
    if (!os) throw IoError("svg: cannot open '" + path + "'");
    const double w = 640, h = 480, margin = 40;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (std::size_t i = 0; i < points2d.rows(); ++i) {
        xmin = std::min(xmin, points2d(i, 0));
        xmax = std::max(xmax, points2d(i, 0));
        ymin = std::min(ymin, points2d(i, 1));
        ymax = std::max(ymax, points2d(i, 1));
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin); };
    auto sy = [&](double y) { return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin); };
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
       << "</text>\n";
    for (std::size_t i = 0; i + 1 < points2d.rows(); ++i)
        os << "<line x1='" << sx(points2d(i, 0)) << "' y1='" << sy(points2d(i, 1)) << "' x2='"
           << sx(points2d(i + 1, 0)) << "' y2='" << sy(points2d(i + 1, 1))
           << "' stroke='#cccccc' stroke-width='0.5'/>\n";
    for (std::size_t i = 0; i < points2d.rows(); ++i)
        os << "<circle cx='" << sx(points2d(i, 0)) << "' cy='" << sy(points2d(i, 1))
           << "' r='2.5' fill='" << phase_color(labels[i]) << "'/>\n";
    os << "</svg>\n";
}

void write_attention_svg(const std::string& path, const Matrix& attention,
                         const std::vector<SubTask>& phases, const std::string& title) {
    std::ofstream os(path);
    if (!os) throw IoError("svg: cannot open '" + path + "'");
    const double w = 800, h = 400, margin = 40;
    const std::size_t n = attention.rows();
    auto sx = [&](double t) {
        return margin + t / std::max<double>(1.0, double(n - 1)) * (w - 2 * margin);
    };
    auto sy = [&](double v) { return h - margin - v * (h - 2 * margin); };
    const char* colors[4] = {"#2ca02c", "#d62728", "#1f77b4", "#ff7f0e"};
    const char* names[4] = {"whole", "thumb", "joint", "torque"};
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
       << "</text>\n";
    for (std::size_t t = 0; t + 1 < n; ++t)
        if (phases[t] != phases[t + 1])
            os << "<line x1='" << sx(double(t)) << "' y1='" << sy(0) << "' x2='" << sx(double(t))
               << "' y2='" << sy(1) << "' stroke='#eeeeee'/>\n";
    for (std::size_t k = 0; k < 4 && k < attention.cols(); ++k) {
        os << "<polyline fill='none' stroke='" << colors[k] << "' stroke-width='1.2' points='";
        for (std::size_t t = 0; t < n; ++t) os << sx(double(t)) << ',' << sy(attention(t, k)) << ' ';
        os << "'/>\n";
        os << "<text x='" << w - margin + 2 << "' y='" << 40 + 16 * k << "' font-size='11' fill='"
           << colors[k] << "'>" << names[k] << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace aelstm
