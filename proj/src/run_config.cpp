#include "aelstm/run_config.hpp"

#include <fstream>

#include <json.hpp>

#include "aelstm/errors.hpp"

namespace aelstm {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

OptAlgo RunConfig::opt_algo() const {
    if (optimizer == "adam") return OptAlgo::Adam;
    if (optimizer == "sgd") return OptAlgo::Sgd;
    throw ConfigError("config: unknown optimizer '" + optimizer + "'");
}

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["jobs"] = jobs;
    j["paper_scale"] = paper_scale;
    j["env"] = {{"joints", env.joints},
                {"taxels_per_patch", env.taxels_per_patch},
                {"thumb_taxels", env.thumb_taxels},
                {"axes", env.axes},
                {"substeps", env.substeps},
                {"raw_rate_hz", env.raw_rate_hz},
                {"control_rate_hz", env.control_rate_hz},
                {"rate_limit", env.rate_limit},
                {"sensor_noise", env.sensor_noise},
                {"reach", env.reach},
                {"grip_closed", env.grip_closed},
                {"grip_hold", env.grip_hold},
                {"press_threshold", env.press_threshold},
                {"twist_required", env.twist_required},
                {"open_cap_resist", env.open_cap_resist},
                {"cap_rest_contact", env.cap_rest_contact},
                {"contact_spike", env.contact_spike},
                {"gain_drift", env.gain_drift},
                {"drift_rho", env.drift_rho}};
    j["preprocess"] = {{"raw_rate_hz", raw_rate_hz},
                       {"model_rate_hz", model_rate_hz},
                       {"clip_bound", clip_bound},
                       {"noise_sigmas", noise_sigmas},
                       {"noise_per_epoch", noise_per_epoch},
                       {"horizon", horizon}};
    j["autoencoder"] = {{"latent_dim", latent_dim},
                        {"whole_hidden", ae_whole_hidden},
                        {"thumb_hidden", ae_thumb_hidden},
                        {"epochs", ae_epochs},
                        {"learning_rate", ae_learning_rate},
                        {"noise_sigma", ae_noise_sigma}};
    j["policy"] = {{"lstm_hidden", lstm_hidden},
                   {"attention_hidden", attention_hidden},
                   {"epochs", policy_epochs},
                   {"learning_rate", policy_learning_rate},
                   {"gamma", gamma},
                   {"strong_joints", strong_joints},
                   {"strong_weight", strong_weight},
                   {"optimizer", optimizer},
                   {"val_fraction", val_fraction}};
    j["evaluation"] = {{"max_steps", judge.max_steps},
                       {"grace_steps", judge.grace_steps},
                       {"hold_steps", judge.hold_steps},
                       {"freeze_eps", judge.freeze_eps},
                       {"seeds", eval_seeds}};
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    auto get = [](const json& obj, const char* key, auto& out) {
        if (obj.contains(key)) out = obj.at(key).get<std::remove_reference_t<decltype(out)>>();
    };
    get(j, "seed", c.seed);
    get(j, "out_dir", c.out_dir);
    get(j, "jobs", c.jobs);
    get(j, "paper_scale", c.paper_scale);
    if (j.contains("env")) {
        const json& e = j["env"];
        get(e, "joints", c.env.joints);
        get(e, "taxels_per_patch", c.env.taxels_per_patch);
        get(e, "thumb_taxels", c.env.thumb_taxels);
        get(e, "axes", c.env.axes);
        get(e, "substeps", c.env.substeps);
        get(e, "raw_rate_hz", c.env.raw_rate_hz);
        get(e, "control_rate_hz", c.env.control_rate_hz);
        get(e, "rate_limit", c.env.rate_limit);
        get(e, "sensor_noise", c.env.sensor_noise);
        get(e, "reach", c.env.reach);
        get(e, "grip_closed", c.env.grip_closed);
        get(e, "grip_hold", c.env.grip_hold);
        get(e, "press_threshold", c.env.press_threshold);
        get(e, "twist_required", c.env.twist_required);
        get(e, "open_cap_resist", c.env.open_cap_resist);
        get(e, "cap_rest_contact", c.env.cap_rest_contact);
        get(e, "contact_spike", c.env.contact_spike);
        get(e, "gain_drift", c.env.gain_drift);
        get(e, "drift_rho", c.env.drift_rho);
    }
    if (j.contains("preprocess")) {
        const json& p = j["preprocess"];
        get(p, "raw_rate_hz", c.raw_rate_hz);
        get(p, "model_rate_hz", c.model_rate_hz);
        get(p, "clip_bound", c.clip_bound);
        get(p, "noise_sigmas", c.noise_sigmas);
        get(p, "noise_per_epoch", c.noise_per_epoch);
        get(p, "horizon", c.horizon);
    }
    if (j.contains("autoencoder")) {
        const json& a = j["autoencoder"];
        get(a, "latent_dim", c.latent_dim);
        get(a, "whole_hidden", c.ae_whole_hidden);
        get(a, "thumb_hidden", c.ae_thumb_hidden);
        get(a, "epochs", c.ae_epochs);
        get(a, "learning_rate", c.ae_learning_rate);
        get(a, "noise_sigma", c.ae_noise_sigma);
    }
    if (j.contains("policy")) {
        const json& p = j["policy"];
        get(p, "lstm_hidden", c.lstm_hidden);
        get(p, "attention_hidden", c.attention_hidden);
        get(p, "epochs", c.policy_epochs);
        get(p, "learning_rate", c.policy_learning_rate);
        get(p, "gamma", c.gamma);
        get(p, "strong_joints", c.strong_joints);
        get(p, "strong_weight", c.strong_weight);
        get(p, "optimizer", c.optimizer);
        get(p, "val_fraction", c.val_fraction);
    }
    if (j.contains("evaluation")) {
        const json& e = j["evaluation"];
        get(e, "max_steps", c.judge.max_steps);
        get(e, "grace_steps", c.judge.grace_steps);
        get(e, "hold_steps", c.judge.hold_steps);
        get(e, "freeze_eps", c.judge.freeze_eps);
        get(e, "seeds", c.eval_seeds);
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DependencyError("config: cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

void RunConfig::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("config: cannot open '" + path + "' for writing");
    os << to_json() << '\n';
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json()); }

void RunConfig::apply_paper_scale() {
    paper_scale = true;
    env.joints = 16;
    env.taxels_per_patch = 184;  // 368 tri-axial sensors across both patches
    env.thumb_taxels = 92;
    ae_whole_hidden = {512, 128};
    ae_thumb_hidden = {128, 64};
    ae_epochs = 50000;
    policy_epochs = 50000;
}

void RunConfig::validate() const {
    if (model_rate_hz <= 0 || raw_rate_hz <= 0)
        throw ConfigError("config: sample rates must be positive");
    if (clip_bound <= 0) throw ConfigError("config: clip bound must be positive");
    if (gamma < 0) throw ConfigError("config: gamma must be non-negative");
    if (val_fraction <= 0.0 || val_fraction >= 1.0)
        throw ConfigError("config: val_fraction must lie in (0, 1)");
    if (eval_seeds.empty()) throw ConfigError("config: at least one evaluation seed required");
    for (std::size_t sj : strong_joints)
        if (sj >= env.joints) throw ConfigError("config: strong joint index out of range");
    opt_algo();
}

}  // namespace aelstm
