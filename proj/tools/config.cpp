#include "config.hpp"

#include "mixkin/errors.hpp"
#include "mixkin/grids.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixkin::cli {

namespace {

using nlohmann::json;

const char* limiter_name(Limiter l) { return l == Limiter::MC ? "mc" : "none"; }

const char* b_form_name(AngularForm f) { return f == AngularForm::AbsCos ? "abs_cos" : "half_cos"; }

bool is_number_array(const json& v) {
    if (!v.is_array()) return false;
    for (const auto& x : v)
        if (!x.is_number() && !is_number_array(x)) return false;
    return true;
}

// Input keys must exist in the canonical tree with a compatible type.
void check_against(const json& in, const json& canon, const std::string& path) {
    for (auto it = in.begin(); it != in.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!canon.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
        const json& c = canon[it.key()];
        const json& v = it.value();
        bool ok = false;
        if (c.is_object()) {
            if (!v.is_object()) throw ConfigError("config: '" + key + "' must be an object");
            check_against(v, c, key);
            continue;
        }
        if (c.is_number_integer() || c.is_number_unsigned())
            ok = v.is_number_integer() || v.is_number_unsigned();
        else if (c.is_number())
            ok = v.is_number();
        else if (c.is_boolean())
            ok = v.is_boolean();
        else if (c.is_string())
            ok = v.is_string();
        else if (c.is_array())
            ok = is_number_array(v);
        else if (c.is_null())
            ok = v.is_null() || v.is_number();
        if (!ok) throw ConfigError("config: '" + key + "' has the wrong type");
    }
}

void missing_leaves(const json& in, const json& canon, const std::string& path, std::vector<std::string>& out) {
    for (auto it = canon.begin(); it != canon.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        const bool present = in.is_object() && in.contains(it.key());
        if (it.value().is_object())
            missing_leaves(present ? in[it.key()] : json::object(), it.value(), key, out);
        else if (!present)
            out.push_back(key);
    }
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

void RunConfig::validate() const {
    species.validate();
    VelocityGrid(R, N);
    SpatialGrid(Lx, M, d);
    lebedev_like_rule(angular_order);
    if (!(cutoff_m > 0.0 && cutoff_m < 1.0)) throw ConfigError("config: cutoff.m must lie in (0, 1)");
    for (double m : kernel_ms)
        if (!(m > 0.0 && m < 1.0)) throw ConfigError("config: kernels.ms entries must lie in (0, 1)");
    if (!(frame_l >= 0.0)) throw ConfigError("config: frame.l must be >= 0");
    if (kernel_samples < 100) throw ConfigError("config: kernels.samples must be >= 100");
    if (collide_states < 1) throw ConfigError("config: collide.states must be >= 1");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    if (!(study.t_end >= 0.0)) throw ConfigError("config: study.t_end must be >= 0");
    if (!(study.cfl > 0.0 && study.cfl <= 1.0)) throw ConfigError("config: study.cfl must lie in (0, 1]");
    if (study.sampled_cells < 1) throw ConfigError("config: study.sampled_cells must be >= 1");
    VelocityGrid(study.hilbert_R, study.hilbert_N);
    VelocityGrid(study.taylor_R, study.taylor_N);
    if (output.empty()) throw ConfigError("config: output must be non-empty");
}

json RunConfig::to_json() const {
    const auto& s = species;
    return {{"species",
             {{"m_A", s.m[0]},
              {"m_B", s.m[1]},
              {"gamma", s.gamma},
              {"C_phi", {{s.C_phi[0][0], s.C_phi[0][1]}, {s.C_phi[1][0], s.C_phi[1][1]}}},
              {"C_b", s.C_b},
              {"b_form", b_form_name(s.b_form)}}},
            {"velocity", {{"R", R}, {"N", N}}},
            {"spatial", {{"d", d}, {"Lx", Lx}, {"M", M}}},
            {"angular_order", angular_order},
            {"cutoff", {{"m", cutoff_m}}},
            {"frame", {{"l", frame_l}, {"q_tilde", q_tilde ? json(*q_tilde) : json(nullptr)}}},
            {"study",
             {{"deltas", study.deltas},
              {"eps", study.eps},
              {"residual_eps", study.residual_eps},
              {"sweep_deltas", study.sweep_deltas},
              {"sweep_eps", study.sweep_eps},
              {"residual_delta", study.residual_delta},
              {"t_end", study.t_end},
              {"cfl", study.cfl},
              {"limiter", limiter_name(study.limiter)},
              {"sampled_cells", study.sampled_cells},
              {"hilbert_N", study.hilbert_N},
              {"hilbert_R", study.hilbert_R},
              {"taylor_N", study.taylor_N},
              {"taylor_R", study.taylor_R}}},
            {"kernels", {{"samples", kernel_samples}, {"ms", kernel_ms}}},
            {"collide", {{"states", collide_states}}},
            {"spectrum", {{"export_operator", export_operator}}},
            {"seed", seed},
            {"threads", threads},
            {"record_timings", record_timings},
            {"output", output}};
}

RunConfig parse_config(const std::string& text) {
    json in;
    try {
        in = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        throw ConfigError("config: parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what());
    }
    if (!in.is_object()) throw ConfigError("config: top level must be an object");
    const json canon = RunConfig{}.to_json();
    check_against(in, canon, "");

    json merged = canon;
    merged.merge_patch(in);
    // merge_patch drops keys set to null; q_tilde null means "default".
    if (!merged["frame"].contains("q_tilde")) merged["frame"]["q_tilde"] = nullptr;

    RunConfig c;
    try {
        const auto& sp = merged["species"];
        c.species.m = {sp["m_A"].get<double>(), sp["m_B"].get<double>()};
        c.species.gamma = sp["gamma"].get<double>();
        const auto& cp = sp["C_phi"];
        if (cp.size() != 2 || cp[0].size() != 2 || cp[1].size() != 2)
            throw ConfigError("config: 'species.C_phi' must be a 2x2 array");
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) c.species.C_phi[a][b] = cp[a][b].get<double>();
        c.species.C_b = sp["C_b"].get<double>();
        const auto bf = sp["b_form"].get<std::string>();
        if (bf == "abs_cos")
            c.species.b_form = AngularForm::AbsCos;
        else if (bf == "half_cos")
            c.species.b_form = AngularForm::HalfCos;
        else
            throw ConfigError("config: 'species.b_form' must be abs_cos or half_cos");
        c.R = merged["velocity"]["R"].get<double>();
        c.N = merged["velocity"]["N"].get<int>();
        c.d = merged["spatial"]["d"].get<int>();
        c.Lx = merged["spatial"]["Lx"].get<double>();
        c.M = merged["spatial"]["M"].get<int>();
        c.angular_order = merged["angular_order"].get<int>();
        c.cutoff_m = merged["cutoff"]["m"].get<double>();
        c.frame_l = merged["frame"]["l"].get<double>();
        if (!merged["frame"]["q_tilde"].is_null()) c.q_tilde = merged["frame"]["q_tilde"].get<double>();
        const auto& st = merged["study"];
        c.study.deltas = st["deltas"].get<std::vector<double>>();
        c.study.eps = st["eps"].get<std::vector<double>>();
        c.study.residual_eps = st["residual_eps"].get<std::vector<double>>();
        c.study.sweep_deltas = st["sweep_deltas"].get<std::vector<double>>();
        c.study.sweep_eps = st["sweep_eps"].get<double>();
        c.study.residual_delta = st["residual_delta"].get<double>();
        c.study.t_end = st["t_end"].get<double>();
        c.study.cfl = st["cfl"].get<double>();
        const auto lim = st["limiter"].get<std::string>();
        if (lim == "mc")
            c.study.limiter = Limiter::MC;
        else if (lim == "none")
            c.study.limiter = Limiter::None;
        else
            throw ConfigError("config: 'study.limiter' must be mc or none");
        c.study.sampled_cells = st["sampled_cells"].get<int>();
        c.study.hilbert_N = st["hilbert_N"].get<int>();
        c.study.hilbert_R = st["hilbert_R"].get<double>();
        c.study.taylor_N = st["taylor_N"].get<int>();
        c.study.taylor_R = st["taylor_R"].get<double>();
        c.kernel_samples = merged["kernels"]["samples"].get<int>();
        c.kernel_ms = merged["kernels"]["ms"].get<std::vector<double>>();
        c.collide_states = merged["collide"]["states"].get<int>();
        c.export_operator = merged["spectrum"]["export_operator"].get<bool>();
        c.seed = merged["seed"].get<std::uint64_t>();
        c.threads = merged["threads"].get<int>();
        c.record_timings = merged["record_timings"].get<bool>();
        c.output = merged["output"].get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    missing_leaves(in, canon, "", c.defaults_applied);
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw NumericalError("sha256: digest failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

} // namespace mixkin::cli
