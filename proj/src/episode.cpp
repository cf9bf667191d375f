#include "aelstm/episode.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "aelstm/errors.hpp"

namespace aelstm {

namespace {
const char* kNames[kSubTaskCount] = {"grasp",      "try_open",    "retract_thumb",
                                     "slide_left", "slide_right", "stop"};
}

const char* subtask_name(SubTask t) { return kNames[static_cast<int>(t)]; }

SubTask subtask_from_name(const std::string& name) {
    for (int i = 0; i < kSubTaskCount; ++i)
        if (name == kNames[i]) return static_cast<SubTask>(i);
    throw IoError("unknown subtask label '" + name + "'");
}

void RawEpisode::validate() const {
    const std::size_t t = joints.rows();
    if (torques.rows() != t || tactile_whole.rows() != t || tactile_thumb.rows() != t ||
        labels.size() != t)
        throw DimensionError("episode: modality streams have differing lengths");
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t m : switch_marks) {
        if (!first && m <= prev) throw DimensionError("episode: switch marks not strictly increasing");
        if (m >= t) throw DimensionError("episode: switch mark past end of episode");
        prev = m;
        first = false;
    }
    if (sample_rate_hz <= 0.0) throw ConfigError("episode: sample rate must be positive");
}

void write_episode(const std::string& path, const RawEpisode& ep) {
    ep.validate();
    std::ofstream os(path);
    if (!os) throw IoError("episode: cannot open '" + path + "' for writing");

    os << "aelstm-episode v1 rate=" << ep.sample_rate_hz << " joints=" << ep.joints.cols()
       << " torques=" << ep.torques.cols() << " tactile_whole=" << ep.tactile_whole.cols()
       << " tactile_thumb=" << ep.tactile_thumb.cols() << " steps=" << ep.steps()
       << " switches=";
    for (std::size_t i = 0; i < ep.switch_marks.size(); ++i) {
        if (i) os << ',';
        os << ep.switch_marks[i];
    }
    os << '\n';

    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        os << buf;
    };
    for (std::size_t t = 0; t < ep.steps(); ++t) {
        os << t << ' ' << subtask_name(ep.labels[t]);
        for (std::size_t j = 0; j < ep.joints.cols(); ++j) put(ep.joints(t, j));
        for (std::size_t j = 0; j < ep.torques.cols(); ++j) put(ep.torques(t, j));
        for (std::size_t j = 0; j < ep.tactile_whole.cols(); ++j) put(ep.tactile_whole(t, j));
        for (std::size_t j = 0; j < ep.tactile_thumb.cols(); ++j) put(ep.tactile_thumb(t, j));
        os << '\n';
    }
    if (!os) throw IoError("episode: write failed for '" + path + "'");
}

RawEpisode read_episode(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("episode: cannot open '" + path + "'");

    std::string header;
    if (!std::getline(is, header)) throw IoError("episode: empty file '" + path + "'");
    std::istringstream hs(header);
    std::string tag, ver;
    hs >> tag >> ver;
    if (tag != "aelstm-episode" || ver != "v1")
        throw IoError("episode: '" + path + "' has an unrecognized header");

    RawEpisode ep;
    std::size_t nj = 0, nt = 0, nw = 0, nth = 0, steps = 0;
    std::string field;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw IoError("episode: malformed header field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string val = field.substr(eq + 1);
        if (key == "rate") ep.sample_rate_hz = std::stod(val);
        else if (key == "joints") nj = std::stoul(val);
        else if (key == "torques") nt = std::stoul(val);
        else if (key == "tactile_whole") nw = std::stoul(val);
        else if (key == "tactile_thumb") nth = std::stoul(val);
        else if (key == "steps") steps = std::stoul(val);
        else if (key == "switches") {
            std::istringstream ms(val);
            std::string tok;
            while (std::getline(ms, tok, ','))
                if (!tok.empty()) ep.switch_marks.push_back(std::stoul(tok));
        } else {
            throw IoError("episode: unknown header key '" + key + "'");
        }
    }
    if (nj == 0 || steps == 0) throw IoError("episode: header missing dimensions in '" + path + "'");

    ep.joints.resize(steps, nj);
    ep.torques.resize(steps, nt);
    ep.tactile_whole.resize(steps, nw);
    ep.tactile_thumb.resize(steps, nth);
    ep.labels.resize(steps);

    std::string line;
    for (std::size_t t = 0; t < steps; ++t) {
        if (!std::getline(is, line))
            throw IoError("episode: '" + path + "' truncated at step " + std::to_string(t));
        std::istringstream ls(line);
        std::size_t idx;
        std::string label;
        ls >> idx >> label;
        if (idx != t) throw IoError("episode: step index mismatch in '" + path + "'");
        ep.labels[t] = subtask_from_name(label);
        auto read_row = [&](Matrix& m) {
            for (std::size_t j = 0; j < m.cols(); ++j)
                if (!(ls >> m(t, j)))
                    throw IoError("episode: short record at step " + std::to_string(t));
        };
        read_row(ep.joints);
        read_row(ep.torques);
        read_row(ep.tactile_whole);
        read_row(ep.tactile_thumb);
    }
    ep.validate();
    return ep;
}

}  // namespace aelstm
