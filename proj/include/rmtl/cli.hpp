#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmtl/config.hpp"
#include "rmtl/gini.hpp"
#include "rmtl/report.hpp"
#include "rmtl/synthetic.hpp"

namespace rmtl {

namespace cli {

namespace fs = std::filesystem;

// one distinct exit code per error family, so scripts can branch on failures
inline constexpr int kExitUsage = 2;
inline constexpr int kExitParse = 3;
inline constexpr int kExitValidation = 4;
inline constexpr int kExitShape = 5;
inline constexpr int kExitNumeric = 6;
inline constexpr int kExitIndex = 7;
inline constexpr int kExitState = 8;
inline constexpr int kExitIo = 9;
inline constexpr int kExitOther = 1;

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = detail::trim(tok);
        if (tok.empty()) throw ParseError("seeds: empty entry in '" + s + "'");
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError("seeds: '" + tok + "' is not an integer");
        }
    }
    if (seeds.empty()) throw ValidationError("seeds: list is empty");
    return seeds;
}

inline void save_num_stats(const NumStats& st, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_num_stats: cannot open " + path);
    auto join = [](const Vector& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv_double(v[i]);
        return s;
    };
    out << "mean=" << join(st.mean) << "\n";
    out << "stddev=" << join(st.stddev) << "\n";
    if (!out) throw IoError("save_num_stats: write failed for " + path);
}

inline NumStats load_num_stats(const std::string& path) {
    KvConfig kv = KvConfig::from_file(path);
    auto parse = [&](const std::string& key) {
        Vector v;
        std::istringstream is(kv.require(key));
        std::string tok;
        while (std::getline(is, tok, ',')) v.push_back(csv_parse_double(detail::trim(tok), 0));
        return v;
    };
    NumStats st;
    st.mean = parse("mean");
    st.stddev = parse("stddev");
    if (st.mean.size() != st.stddev.size())
        throw ParseError("load_num_stats: mean/stddev lengths differ in " + path);
    return st;
}

/// Config assembled from file + --set overrides + the flags of one run.
inline KvConfig resolve_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
    KvConfig cfg = config_path.empty() ? KvConfig{} : KvConfig::from_file(config_path);
    cfg.apply_overrides(overrides);
    return cfg;
}

struct RunPaths {
    fs::path dir;

    std::string actor() const { return (dir / "actor.ckpt").string(); }
    std::string critic() const { return (dir / "critic.ckpt").string(); }
    std::string log() const { return (dir / "training_log.csv").string(); }
    std::string metrics() const { return (dir / "metrics.csv").string(); }
    std::string config() const { return (dir / "resolved_config.txt").string(); }
};

inline RunPaths seed_dir(const std::string& out_dir, std::uint64_t seed) {
    RunPaths p{fs::path(out_dir) / ("seed-" + std::to_string(seed))};
    fs::create_directories(p.dir);
    return p;
}

struct GenDataArgs {
    std::string out_dir;
    std::uint64_t seed = 1;
    SyntheticSpec spec;
};

inline void cmd_gen_data(const GenDataArgs& a) {
    a.spec.validate();
    SessionDataset ds = gen_synthetic(a.spec, a.seed);
    fs::create_directories(a.out_dir);
    const fs::path out(a.out_dir);
    save_sessions(ds, (out / "sessions.csv").string());
    save_schema(ds.schema, (out / "schema.txt").string());
    std::cout << "gen-data: " << ds.session_count() << " sessions, " << ds.row_count()
              << " rows -> " << a.out_dir << "\n";
}

struct PrepArgs {
    std::string data_csv, schema_path, out_dir, config_path;
    std::vector<std::string> overrides;
};

inline void cmd_prep(const PrepArgs& a) {
    KvConfig cfg = resolve_config(a.config_path, a.overrides);
    const FeatureSchema schema = load_schema(a.schema_path);
    SessionDataset ds = load_sessions(a.data_csv, schema);
    DatasetSplit split = split_by_time(ds, split_ratios_from(cfg));
    const NumStats stats = compute_num_stats(split.train);
    const auto gini_click = gini_rank_features(split.train, "y_click");
    const auto gini_conv = gini_rank_features(split.train, "y_convert");

    fs::create_directories(a.out_dir);
    const fs::path out(a.out_dir);
    save_sessions(split.train, (out / "train.csv").string());
    save_sessions(split.val, (out / "val.csv").string());
    save_sessions(split.test, (out / "test.csv").string());
    save_num_stats(stats, (out / "num_stats.txt").string());
    {
        std::ofstream g((out / "gini.csv").string());
        if (!g) throw IoError("prep: cannot write gini.csv");
        g << "label,feature,score\n";
        for (const auto& s : gini_click) g << "y_click," << s.feature << "," << csv_double(s.score) << "\n";
        for (const auto& s : gini_conv) g << "y_convert," << s.feature << "," << csv_double(s.score) << "\n";
    }
    cfg.set("command", "prep");
    cfg.save((out / "resolved_config.txt").string());
    std::cout << "prep: train/val/test sessions " << split.train.session_count() << "/"
              << split.val.session_count() << "/" << split.test.session_count() << " -> "
              << a.out_dir << "\n";
}

struct FitArgs {
    std::string train_csv, val_csv, test_csv, schema_path, out_dir, config_path;
    std::string variant = "ple";
    std::string mode = "rmtl";
    std::string pretrain_dir;  // per-seed actor checkpoints to start from
    std::string critic_path;   // warm-start critic (transfer)
    std::vector<std::string> overrides;
    std::string seeds_str = "1";

    std::vector<std::uint64_t> seeds() const { return parse_seed_list(seeds_str); }
};

struct LoadedSplits {
    FeatureSchema schema;
    SessionDataset train, val, test;  // test may be empty
};

inline LoadedSplits load_splits(const FitArgs& a) {
    LoadedSplits d;
    d.schema = load_schema(a.schema_path);
    d.train = load_sessions(a.train_csv, d.schema);
    d.val = load_sessions(a.val_csv, d.schema);
    if (!a.test_csv.empty()) d.test = load_sessions(a.test_csv, d.schema);
    return d;
}

/// Starting actor for one seed: the matching pretrained checkpoint when a
/// pretrain directory is given, otherwise a fresh seeded model. Returns the
/// standardization stats that must be applied to every split.
inline LoadedModel initial_actor(const FitArgs& a, const KvConfig& cfg,
                                 const LoadedSplits& raw, std::uint64_t seed) {
    if (!a.pretrain_dir.empty()) {
        const std::string path =
            (fs::path(a.pretrain_dir) / ("seed-" + std::to_string(seed)) / "actor.ckpt")
                .string();
        LoadedModel lm = load_full_model(path);
        if (!(lm.model.schema == raw.schema))
            throw ShapeError("pretrained actor schema does not match dataset schema: " + path);
        if (to_string(lm.model.actor.variant) != a.variant)
            throw ValidationError("pretrained actor is " +
                                  std::string(to_string(lm.model.actor.variant)) +
                                  ", requested " + a.variant);
        return lm;
    }
    const ReprDims rd = repr_dims_from(cfg, raw.schema.embed_dim);
    const ActorDims ad = actor_dims_from(cfg, rd);
    SeededRng root(seed);
    SeededRng init = root.stream(kStreamModelInit);
    return {make_model(variant_from_string(a.variant), raw.schema, rd, ad, init),
            compute_num_stats(raw.train)};
}

inline KvConfig fit_config(const FitArgs& a, const char* command, std::uint64_t seed) {
    KvConfig cfg = resolve_config(a.config_path, a.overrides);
    cfg.set("command", command);
    cfg.set("variant", a.variant);
    cfg.set("mode", a.mode);
    cfg.set("seed", std::to_string(seed));
    return cfg;
}

inline void cmd_pretrain(const FitArgs& a) {
    const LoadedSplits raw = load_splits(a);
    for (const auto seed : a.seeds()) {
        KvConfig cfg = fit_config(a, "pretrain", seed);
        Hyperparams hp = hyperparams_from(cfg);
        hp.seed = seed;

        LoadedSplits d = raw;
        const NumStats stats = compute_num_stats(d.train);
        standardize_nums(d.train, stats);
        standardize_nums(d.val, stats);

        const ReprDims rd = repr_dims_from(cfg, d.schema.embed_dim);
        const ActorDims ad = actor_dims_from(cfg, rd);
        SeededRng root(seed);
        SeededRng init = root.stream(kStreamModelInit);
        FullModel model = make_model(variant_from_string(a.variant), d.schema, rd, ad, init);

        PretrainResult pr = pretrain_actor(std::move(model), d.train.sessions, d.val.sessions,
                                           hp);
        const RunPaths paths = seed_dir(a.out_dir, seed);
        save_model(pr.model, stats, paths.actor());
        write_training_log_csv(paths.log(), pr.log);
        std::vector<MetricRow> rows{
            {a.variant, "pretrain", seed, "val", evaluate_sessions(pr.model, d.val.sessions)}};
        if (!d.test.sessions.empty()) {
            SessionDataset test = d.test;
            standardize_nums(test, stats);
            rows.push_back(
                {a.variant, "pretrain", seed, "test", evaluate_sessions(pr.model, test.sessions)});
        }
        write_metrics_csv(paths.metrics(), rows);
        cfg.save(paths.config());
        std::cout << "pretrain: " << a.variant << " seed " << seed << " best val auc "
                  << detail::fixed6(pr.best_val_auc) << " (epoch " << pr.best_epoch << ") -> "
                  << paths.dir.string() << "\n";
    }
}

/// Shared by train/ablate/transfer: one RL run for one seed, writing the
/// standard per-run files into `paths`.
inline std::vector<MetricRow> fit_one(const FitArgs& a, const std::string& mode_label,
                                      TrainMode mode, std::uint64_t seed,
                                      const LoadedSplits& raw, const CriticParams* warm_critic,
                                      const RunPaths& paths, KvConfig cfg) {
    Hyperparams hp = hyperparams_from(cfg);
    hp.seed = seed;

    LoadedModel start = initial_actor(a, cfg, raw, seed);
    LoadedSplits d = raw;
    standardize_nums(d.train, start.stats);
    standardize_nums(d.val, start.stats);
    if (!d.test.sessions.empty()) standardize_nums(d.test, start.stats);

    const CriticDims cd = critic_dims_from(cfg, d.schema.embed_dim);
    TrainResult tr = train_model(std::move(start.model), d.train.sessions, d.val.sessions,
                                 mode, hp, cd, warm_critic);

    save_model(tr.model, start.stats, paths.actor());
    if (tr.has_critic)
        save_critic(tr.critic, d.schema, cd, start.stats, paths.critic(), a.variant);
    write_training_log_csv(paths.log(), tr.log);
    std::vector<MetricRow> rows{
        {a.variant, mode_label, seed, "val", evaluate_sessions(tr.model, d.val.sessions)}};
    if (!d.test.sessions.empty())
        rows.push_back(
            {a.variant, mode_label, seed, "test", evaluate_sessions(tr.model, d.test.sessions)});
    write_metrics_csv(paths.metrics(), rows);
    cfg.save(paths.config());
    return rows;
}

inline void cmd_train(const FitArgs& a) {
    const LoadedSplits raw = load_splits(a);
    const TrainMode mode = train_mode_from_string(a.mode);
    CriticParams warm;
    bool has_warm = false;
    if (!a.critic_path.empty()) {
        LoadedCritic lc = load_critic(a.critic_path);
        if (!(lc.schema == raw.schema))
            throw ShapeError("train: critic schema does not match dataset schema: " +
                             a.critic_path);
        warm = std::move(lc.critic);
        has_warm = true;
    }
    for (const auto seed : a.seeds()) {
        const RunPaths paths = seed_dir(a.out_dir, seed);
        const auto rows = fit_one(a, a.mode, mode, seed, raw, has_warm ? &warm : nullptr,
                                  paths, fit_config(a, "train", seed));
        std::cout << "train: " << a.variant << "/" << a.mode << " seed " << seed
                  << " val auc_ctr " << detail::fixed6(rows[0].m.auc_ctr) << " auc_ctcvr "
                  << detail::fixed6(rows[0].m.auc_ctcvr) << " -> " << paths.dir.string() << "\n";
    }
}

struct AblateArgs {
    FitArgs fit;
    std::vector<std::string> modes{"rmtl", "cw", "wl", "nlc", "decay"};
};

inline void cmd_ablate(const AblateArgs& a) {
    const LoadedSplits raw = load_splits(a.fit);
    std::vector<TrainMode> modes;
    for (const auto& m : a.modes) modes.push_back(train_mode_from_string(m));

    std::vector<MetricRow> all;
    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        FitArgs fa = a.fit;
        fa.mode = a.modes[mi];
        for (const auto seed : a.fit.seeds()) {
            RunPaths paths{fs::path(a.fit.out_dir) / a.modes[mi] /
                           ("seed-" + std::to_string(seed))};
            fs::create_directories(paths.dir);
            const auto rows = fit_one(fa, a.modes[mi], modes[mi], seed, raw, nullptr, paths,
                                      fit_config(fa, "ablate", seed));
            all.insert(all.end(), rows.begin(), rows.end());
        }
    }
    write_metrics_csv((fs::path(a.fit.out_dir) / "metrics.csv").string(), all);
    const std::string table = summary_table(all);
    {
        std::ofstream out((fs::path(a.fit.out_dir) / "ablation.txt").string());
        if (!out) throw IoError("ablate: cannot write ablation.txt");
        out << table;
    }
    std::cout << table;
}

inline void cmd_transfer(const FitArgs& a) {
    if (a.critic_path.empty()) throw ValidationError("transfer: --critic is required");
    const LoadedSplits raw = load_splits(a);
    LoadedCritic lc = load_critic(a.critic_path);
    if (!(lc.schema == raw.schema))
        throw ShapeError("transfer: critic schema does not match dataset schema: " +
                         a.critic_path);
    const TrainMode mode = train_mode_from_string(a.mode);
    if (!mode_uses_critic(mode))
        throw ValidationError("transfer: mode '" + a.mode + "' never consults a critic");
    const std::string label =
        a.mode + "+critic:" + (lc.trained_with.empty() ? "unknown" : lc.trained_with);
    for (const auto seed : a.seeds()) {
        const RunPaths paths = seed_dir(a.out_dir, seed);
        KvConfig cfg = fit_config(a, "transfer", seed);
        cfg.set("critic_source", lc.trained_with.empty() ? "unknown" : lc.trained_with);
        const auto rows = fit_one(a, label, mode, seed, raw, &lc.critic, paths, cfg);
        std::cout << "transfer: " << a.variant << " <- critic(" << lc.trained_with
                  << ") seed " << seed << " val auc_ctr " << detail::fixed6(rows[0].m.auc_ctr)
                  << " auc_ctcvr " << detail::fixed6(rows[0].m.auc_ctcvr) << " -> "
                  << paths.dir.string() << "\n";
    }
}

struct EvalArgs {
    std::string actor_path, data_csv, out_csv;
    std::string split_label = "val";
    std::string mode_label = "eval";
    std::uint64_t seed = 0;
};

inline void cmd_eval(const EvalArgs& a) {
    LoadedModel lm = load_full_model(a.actor_path);
    SessionDataset data = load_sessions(a.data_csv, lm.model.schema);
    if (!lm.stats.empty()) standardize_nums(data, lm.stats);
    const SplitMetrics m = evaluate_sessions(lm.model, data.sessions);
    const std::string variant = to_string(lm.model.actor.variant);
    const fs::path parent = fs::path(a.out_csv).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_metrics_csv(a.out_csv, {{variant, a.mode_label, a.seed, a.split_label, m}});
    std::cout << "eval: " << variant << " " << a.split_label << " auc_ctr "
              << detail::fixed6(m.auc_ctr) << " auc_ctcvr " << detail::fixed6(m.auc_ctcvr)
              << " logloss_ctr " << detail::fixed6(m.logloss_ctr) << " logloss_ctcvr "
              << detail::fixed6(m.logloss_ctcvr) << "\n";
}

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out_dir;
    std::string compare;  // "mode_a,mode_b"
    std::string model;    // required with --compare
    std::string split = "val";
};

inline void cmd_report(const ReportArgs& a) {
    if (a.inputs.empty()) throw ValidationError("report: no input metric files");
    std::vector<MetricRow> rows;
    for (const auto& path : a.inputs) {
        const auto part = read_metrics_csv(path);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    fs::create_directories(a.out_dir);
    const fs::path out(a.out_dir);
    write_metrics_csv((out / "merged_metrics.csv").string(), rows);
    const std::string table = summary_table(rows);
    {
        std::ofstream f((out / "summary.txt").string());
        if (!f) throw IoError("report: cannot write summary.txt");
        f << table;
    }
    std::cout << table;
    if (!a.compare.empty()) {
        const auto comma = a.compare.find(',');
        if (comma == std::string::npos)
            throw ValidationError("report: --compare wants mode_a,mode_b");
        if (a.model.empty()) throw ValidationError("report: --compare needs --model");
        const std::string ma = a.compare.substr(0, comma);
        const std::string mb = a.compare.substr(comma + 1);
        const auto cmp = compare_modes(rows, a.model, ma, mb, a.split);
        const std::string text = comparison_table(cmp, ma, mb);
        std::ofstream f((out / "ttests.txt").string());
        if (!f) throw IoError("report: cannot write ttests.txt");
        f << text;
        std::cout << text;
    }
}

inline void add_fit_flags(CLI::App* cmd, FitArgs& a, bool with_mode) {
    cmd->add_option("--train", a.train_csv, "training split csv")->required();
    cmd->add_option("--val", a.val_csv, "validation split csv")->required();
    cmd->add_option("--test", a.test_csv, "optional test split csv");
    cmd->add_option("--schema", a.schema_path, "schema sidecar file")->required();
    cmd->add_option("--out", a.out_dir, "output directory")->required();
    cmd->add_option("--variant", a.variant,
                    "backbone: single_task|shared_bottom|esmm|mmoe|ple");
    cmd->add_option("--config", a.config_path, "key=value config file");
    cmd->add_option("--set", a.overrides, "override config entries, key=value");
    cmd->add_option("--seeds", a.seeds_str, "comma-separated seed list");
    if (with_mode)
        cmd->add_option("--mode", a.mode, "training mode: rmtl|cw|wl|nlc|decay|dple");
    cmd->add_option("--pretrain", a.pretrain_dir,
                    "directory of per-seed pretrained actors (seed-N/actor.ckpt)");
}

inline int dispatch_error(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
}

inline int run_command(int argc, const char* const* argv) {
    CLI::App app{"multi-task CTR/CTCVR training with an actor-critic loop"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* cgen = app.add_subcommand("gen-data", "emit a synthetic session dataset");
    cgen->add_option("--out", gen.out_dir, "output directory")->required();
    cgen->add_option("--seed", gen.seed, "generator seed");
    cgen->add_option("--sessions", gen.spec.sessions, "session count");
    cgen->add_option("--users", gen.spec.users, "user vocabulary size");
    cgen->add_option("--items", gen.spec.items, "item vocabulary size");
    cgen->add_option("--min-len", gen.spec.min_len, "shortest session");
    cgen->add_option("--max-len", gen.spec.max_len, "longest session");
    cgen->add_option("--channels", gen.spec.channels, "channel vocabulary size");
    cgen->add_option("--embed-dim", gen.spec.schema_embed_dim, "schema embedding width");
    cgen->add_option("--bias-click", gen.spec.bias_click, "click logit bias");
    cgen->add_option("--bias-conv", gen.spec.bias_conv, "conversion logit bias");

    PrepArgs prep;
    auto* cprep = app.add_subcommand("prep", "validate, split by time, rank features");
    cprep->add_option("--data", prep.data_csv, "session csv")->required();
    cprep->add_option("--schema", prep.schema_path, "schema sidecar file")->required();
    cprep->add_option("--out", prep.out_dir, "output directory")->required();
    cprep->add_option("--config", prep.config_path, "key=value config file");
    cprep->add_option("--set", prep.overrides, "override config entries, key=value");

    FitArgs pre;
    auto* cpre = app.add_subcommand("pretrain", "supervised warm start per backbone");
    add_fit_flags(cpre, pre, false);

    FitArgs train;
    auto* ctrain = app.add_subcommand("train", "actor-critic training");
    add_fit_flags(ctrain, train, true);
    ctrain->add_option("--critic", train.critic_path, "warm-start critic checkpoint");

    AblateArgs ablate;
    auto* cablate = app.add_subcommand("ablate", "weight-schedule sweep, one table");
    add_fit_flags(cablate, ablate.fit, false);
    std::string ablate_modes = "rmtl,cw,wl,nlc,decay";
    cablate->add_option("--modes", ablate_modes, "comma-separated mode list");

    FitArgs transfer;
    auto* ctransfer = app.add_subcommand("transfer",
                                         "retrain a backbone with a critic from another");
    add_fit_flags(ctransfer, transfer, true);
    ctransfer->add_option("--critic", transfer.critic_path, "source critic checkpoint")
        ->required();

    EvalArgs eval;
    auto* ceval = app.add_subcommand("eval", "metric report from a checkpoint");
    ceval->add_option("--actor", eval.actor_path, "actor checkpoint")->required();
    ceval->add_option("--data", eval.data_csv, "session csv to score")->required();
    ceval->add_option("--out", eval.out_csv, "metrics csv to write")->required();
    ceval->add_option("--split-label", eval.split_label, "split column value");
    ceval->add_option("--mode-label", eval.mode_label, "mode column value");
    ceval->add_option("--seed", eval.seed, "seed column value");

    ReportArgs report;
    auto* creport = app.add_subcommand("report", "aggregate per-seed metric csvs");
    creport->add_option("inputs", report.inputs, "metrics.csv files")->required();
    creport->add_option("--out", report.out_dir, "output directory")->required();
    creport->add_option("--compare", report.compare, "paired t-test: mode_a,mode_b");
    creport->add_option("--model", report.model, "model slice for --compare");
    creport->add_option("--split", report.split, "split slice for --compare");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (cgen->parsed()) cmd_gen_data(gen);
        if (cprep->parsed()) cmd_prep(prep);
        if (cpre->parsed()) cmd_pretrain(pre);
        if (ctrain->parsed()) cmd_train(train);
        if (cablate->parsed()) {
            ablate.modes.clear();
            std::istringstream is(ablate_modes);
            std::string tok;
            while (std::getline(is, tok, ','))
                if (!detail::trim(tok).empty()) ablate.modes.push_back(detail::trim(tok));
            if (ablate.modes.empty()) throw ValidationError("ablate: empty --modes");
            cmd_ablate(ablate);
        }
        if (ctransfer->parsed()) cmd_transfer(transfer);
        if (ceval->parsed()) cmd_eval(eval);
        if (creport->parsed()) cmd_report(report);
        return 0;
    } catch (const ParseError& e) {
        return dispatch_error(e, kExitParse);
    } catch (const ValidationError& e) {
        return dispatch_error(e, kExitValidation);
    } catch (const ShapeError& e) {
        return dispatch_error(e, kExitShape);
    } catch (const NumericError& e) {
        return dispatch_error(e, kExitNumeric);
    } catch (const IndexError& e) {
        return dispatch_error(e, kExitIndex);
    } catch (const StateError& e) {
        return dispatch_error(e, kExitState);
    } catch (const IoError& e) {
        return dispatch_error(e, kExitIo);
    } catch (const std::exception& e) {
        return dispatch_error(e, kExitOther);
    }
}

}  // namespace cli

}  // namespace rmtl
