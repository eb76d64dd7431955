#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rmtl/trainer.hpp"

namespace rmtl {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Plain key=value run configuration. Lines starting with '#' and blank lines
/// are skipped; later assignments win. The resolved snapshot serializes keys
/// sorted, so two runs with the same effective config emit identical files.
class KvConfig {
  public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ValidationError("config: missing key " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_double(key, it->second);
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_size(key, it->second);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return static_cast<std::uint64_t>(parse_size(key, it->second));
    }

    std::vector<std::size_t> get_sizes(const std::string& key,
                                       std::vector<std::size_t> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::size_t> out;
        std::istringstream is(it->second);
        std::string tok;
        while (std::getline(is, tok, ',')) out.push_back(parse_size(key, detail::trim(tok)));
        if (out.empty()) throw ParseError("config: empty size list for " + key);
        return out;
    }

    static KvConfig from_text(const std::string& text, const std::string& origin = "<text>") {
        KvConfig cfg;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ParseError("config: " + origin + ":" + std::to_string(lineno) +
                                 ": expected key=value, got '" + t + "'");
            const std::string key = detail::trim(t.substr(0, eq));
            if (key.empty())
                throw ParseError("config: " + origin + ":" + std::to_string(lineno) +
                                 ": empty key");
            cfg.set(key, detail::trim(t.substr(eq + 1)));
        }
        return cfg;
    }

    static KvConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("config: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str(), path);
    }

    /// Each token must be key=value; applied on top of file values.
    void apply_overrides(const std::vector<std::string>& tokens) {
        for (const auto& tok : tokens) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0)
                throw ParseError("config: override '" + tok + "' is not key=value");
            set(detail::trim(tok.substr(0, eq)), detail::trim(tok.substr(eq + 1)));
        }
    }

    std::string to_text() const {
        std::ostringstream out;
        for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("config: cannot write " + path);
        out << to_text();
        if (!out) throw IoError("config: write failed for " + path);
    }

  private:
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ParseError("config: key " + key + ": '" + v + "' is not a number");
        }
    }

    static std::size_t parse_size(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size() || x < 0) throw std::invalid_argument(v);
            return static_cast<std::size_t>(x);
        } catch (const std::exception&) {
            throw ParseError("config: key " + key + ": '" + v +
                             "' is not a nonnegative integer");
        }
    }

    std::map<std::string, std::string> values_;
};

inline Hyperparams hyperparams_from(const KvConfig& cfg) {
    Hyperparams hp;
    hp.lambda = cfg.get_double("lambda", hp.lambda);
    hp.beta = cfg.get_double("beta", hp.beta);
    hp.gamma = cfg.get_double("gamma", hp.gamma);
    hp.decay_rate = cfg.get_double("decay_rate", hp.decay_rate);
    hp.omega0 = cfg.get_double("omega0", hp.omega0);
    hp.actor_lr = cfg.get_double("actor_lr", hp.actor_lr);
    hp.critic_lr = cfg.get_double("critic_lr", hp.critic_lr);
    hp.epsilon = cfg.get_double("epsilon", hp.epsilon);
    hp.batch_size = cfg.get_size("batch_size", hp.batch_size);
    hp.epochs = cfg.get_size("epochs", hp.epochs);
    hp.max_critic_epochs = cfg.get_size("max_critic_epochs", hp.max_critic_epochs);
    hp.pretrain_epochs = cfg.get_size("pretrain_epochs", hp.pretrain_epochs);
    hp.pretrain_patience = cfg.get_size("pretrain_patience", hp.pretrain_patience);
    hp.td_error_mode = cfg.get("td_error_mode", hp.td_error_mode);
    hp.divergence_limit = cfg.get_double("divergence_limit", hp.divergence_limit);
    hp.seed = cfg.get_u64("seed", hp.seed);
    hp.validate();
    return hp;
}

inline ReprDims repr_dims_from(const KvConfig& cfg, std::size_t schema_embed_dim) {
    ReprDims d;
    d.embed_dim = cfg.get_size("embed_dim", schema_embed_dim);
    d.proj_dim = cfg.get_size("repr_proj_dim", d.proj_dim);
    d.bottom = cfg.get_sizes("repr_bottom", d.bottom);
    d.dropout = cfg.get_double("dropout", d.dropout);
    return d;
}

inline ActorDims actor_dims_from(const KvConfig& cfg, const ReprDims& rd) {
    ActorDims d;
    d.state_dim = rd.state_dim();
    d.expert_hidden = cfg.get_sizes("expert_hidden", d.expert_hidden);
    d.expert_out = cfg.get_size("expert_out", d.expert_out);
    d.tower_hidden = cfg.get_sizes("tower_hidden", d.tower_hidden);
    d.expert_count = cfg.get_size("expert_count", d.expert_count);
    d.ple_task1 = cfg.get_size("ple_task1", d.ple_task1);
    d.ple_task2 = cfg.get_size("ple_task2", d.ple_task2);
    d.ple_shared = cfg.get_size("ple_shared", d.ple_shared);
    d.dropout = cfg.get_double("dropout", d.dropout);
    return d;
}

inline CriticDims critic_dims_from(const KvConfig& cfg, std::size_t schema_embed_dim) {
    CriticDims d;
    d.embed_dim = cfg.get_size("embed_dim", schema_embed_dim);
    d.proj_dim = cfg.get_size("critic_proj_dim", d.proj_dim);
    d.feature = cfg.get_sizes("critic_feature", d.feature);
    d.head_hidden = cfg.get_sizes("critic_head_hidden", d.head_hidden);
    return d;
}

inline SplitRatios split_ratios_from(const KvConfig& cfg) {
    SplitRatios r;
    r.train = cfg.get_double("split_train", r.train);
    r.val = cfg.get_double("split_val", r.val);
    r.test = cfg.get_double("split_test", r.test);
    return r;
}

}  // namespace rmtl
