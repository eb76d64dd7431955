#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rmtl/dataset.hpp"
#include "rmtl/metrics.hpp"
#include "rmtl/trainer.hpp"

namespace rmtl {

/// Shortest decimal form that parses back to the same double, so reruns with
/// identical numbers emit byte-identical files.
inline std::string csv_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw NumericError("csv_double: formatting failed");
    return std::string(buf, ptr);
}

inline double csv_parse_double(const std::string& s, std::size_t lineno) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double x = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw ParseError("metrics csv: line " + std::to_string(lineno) + ": bad number '" +
                         s + "'");
    }
}

/// One evaluated (model, mode, seed, split) cell of an experiment grid.
struct MetricRow {
    std::string model;
    std::string mode;
    std::uint64_t seed = 0;
    std::string split;
    SplitMetrics m;
};

inline constexpr const char* kMetricsHeader =
    "model,mode,seed,split,auc_ctr,auc_ctcvr,logloss_ctr,logloss_ctcvr,"
    "s_logloss_ctr,s_logloss_ctcvr";

inline void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_metrics_csv: cannot open " + path);
    out << kMetricsHeader << "\n";
    for (const auto& r : rows)
        out << r.model << "," << r.mode << "," << r.seed << "," << r.split << ","
            << csv_double(r.m.auc_ctr) << "," << csv_double(r.m.auc_ctcvr) << ","
            << csv_double(r.m.logloss_ctr) << "," << csv_double(r.m.logloss_ctcvr) << ","
            << csv_double(r.m.s_logloss_ctr) << "," << csv_double(r.m.s_logloss_ctcvr) << "\n";
    if (!out) throw IoError("write_metrics_csv: write failed for " + path);
}

inline std::vector<MetricRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_metrics_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("read_metrics_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader)
        throw ParseError("read_metrics_csv: unexpected header in " + path);
    std::vector<MetricRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 10)
            throw ParseError("read_metrics_csv: line " + std::to_string(lineno) +
                             ": expected 10 fields, got " + std::to_string(f.size()));
        MetricRow r;
        r.model = f[0];
        r.mode = f[1];
        r.seed = static_cast<std::uint64_t>(std::stoull(f[2]));
        r.split = f[3];
        r.m.auc_ctr = csv_parse_double(f[4], lineno);
        r.m.auc_ctcvr = csv_parse_double(f[5], lineno);
        r.m.logloss_ctr = csv_parse_double(f[6], lineno);
        r.m.logloss_ctcvr = csv_parse_double(f[7], lineno);
        r.m.s_logloss_ctr = csv_parse_double(f[8], lineno);
        r.m.s_logloss_ctcvr = csv_parse_double(f[9], lineno);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline constexpr const char* kTrainingLogHeader =
    "epoch,train_loss,policy_objective,delta_mean,delta_abs_mean,critic_batches,"
    "policy_batches,weighted_batches,mean_weight,val_auc_ctr,val_auc_ctcvr,"
    "val_logloss_ctr,val_logloss_ctcvr,val_s_logloss_ctr,val_s_logloss_ctcvr";

inline void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("write_training_log_csv: cannot open " + path);
    out << kTrainingLogHeader << "\n";
    for (const auto& e : log)
        out << e.epoch << "," << csv_double(e.train_loss) << ","
            << csv_double(e.policy_objective_mean) << "," << csv_double(e.delta_mean) << ","
            << csv_double(e.delta_abs_mean) << "," << e.critic_batches << ","
            << e.policy_batches << "," << e.weighted_batches << ","
            << csv_double(e.mean_weight) << "," << csv_double(e.val.auc_ctr) << ","
            << csv_double(e.val.auc_ctcvr) << "," << csv_double(e.val.logloss_ctr) << ","
            << csv_double(e.val.logloss_ctcvr) << "," << csv_double(e.val.s_logloss_ctr) << ","
            << csv_double(e.val.s_logloss_ctcvr) << "\n";
    if (!out) throw IoError("write_training_log_csv: write failed for " + path);
}

namespace detail {

struct MetricAgg {
    SplitMetrics sum;
    std::size_t n = 0;

    void add(const SplitMetrics& m) {
        sum.auc_ctr += m.auc_ctr;
        sum.auc_ctcvr += m.auc_ctcvr;
        sum.logloss_ctr += m.logloss_ctr;
        sum.logloss_ctcvr += m.logloss_ctcvr;
        sum.s_logloss_ctr += m.s_logloss_ctr;
        sum.s_logloss_ctcvr += m.s_logloss_ctcvr;
        ++n;
    }

    SplitMetrics mean() const {
        SplitMetrics m = sum;
        const double d = static_cast<double>(n);
        m.auc_ctr /= d;
        m.auc_ctcvr /= d;
        m.logloss_ctr /= d;
        m.logloss_ctcvr /= d;
        m.s_logloss_ctr /= d;
        m.s_logloss_ctcvr /= d;
        return m;
    }
};

inline std::string fixed6(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

}  // namespace detail

/// Aligned text table of seed-averaged metrics, one row per
/// (model, mode, split) group, rows in first-appearance order.
inline std::string summary_table(const std::vector<MetricRow>& rows) {
    std::vector<std::string> keys;
    std::map<std::string, detail::MetricAgg> agg;
    std::map<std::string, MetricRow> sample;
    for (const auto& r : rows) {
        const std::string key = r.model + "\t" + r.mode + "\t" + r.split;
        if (!agg.count(key)) {
            keys.push_back(key);
            sample[key] = r;
        }
        agg[key].add(r.m);
    }
    if (keys.empty()) throw ValidationError("summary_table: no rows");

    std::vector<std::vector<std::string>> cells;
    cells.push_back({"model", "mode", "split", "seeds", "auc_ctr", "auc_ctcvr", "logloss_ctr",
                     "logloss_ctcvr", "s_logloss_ctr", "s_logloss_ctcvr"});
    for (const auto& key : keys) {
        const auto& s = sample[key];
        const SplitMetrics m = agg[key].mean();
        cells.push_back({s.model, s.mode, s.split, std::to_string(agg[key].n),
                         detail::fixed6(m.auc_ctr), detail::fixed6(m.auc_ctcvr),
                         detail::fixed6(m.logloss_ctr), detail::fixed6(m.logloss_ctcvr),
                         detail::fixed6(m.s_logloss_ctr), detail::fixed6(m.s_logloss_ctcvr)});
    }
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << row[c] << std::string(width[c] - row[c].size(), ' ');
        }
        out << "\n";
    }
    return out.str();
}

struct PairedComparison {
    std::string metric;
    double mean_a = 0.0;
    double mean_b = 0.0;
    TTestResult test;
};

/// Seed-paired t-tests of mode `a` against mode `b` on one (model, split)
/// slice, one comparison per metric column.
inline std::vector<PairedComparison> compare_modes(const std::vector<MetricRow>& rows,
                                                   const std::string& model,
                                                   const std::string& mode_a,
                                                   const std::string& mode_b,
                                                   const std::string& split) {
    std::map<std::uint64_t, const MetricRow*> by_seed_a, by_seed_b;
    for (const auto& r : rows) {
        if (r.model != model || r.split != split) continue;
        if (r.mode == mode_a) by_seed_a[r.seed] = &r;
        if (r.mode == mode_b) by_seed_b[r.seed] = &r;
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& [seed, _] : by_seed_a)
        if (by_seed_b.count(seed)) seeds.push_back(seed);
    if (seeds.size() < 2)
        throw ValidationError("compare_modes: need >= 2 shared seeds for " + mode_a + " vs " +
                              mode_b + ", have " + std::to_string(seeds.size()));

    const std::vector<std::pair<std::string, double SplitMetrics::*>> cols{
        {"auc_ctr", &SplitMetrics::auc_ctr},
        {"auc_ctcvr", &SplitMetrics::auc_ctcvr},
        {"logloss_ctr", &SplitMetrics::logloss_ctr},
        {"logloss_ctcvr", &SplitMetrics::logloss_ctcvr},
        {"s_logloss_ctr", &SplitMetrics::s_logloss_ctr},
        {"s_logloss_ctcvr", &SplitMetrics::s_logloss_ctcvr},
    };
    std::vector<PairedComparison> out;
    for (const auto& [name, member] : cols) {
        Vector a, b;
        for (const auto seed : seeds) {
            a.push_back(by_seed_a[seed]->m.*member);
            b.push_back(by_seed_b[seed]->m.*member);
        }
        PairedComparison c;
        c.metric = name;
        for (double v : a) c.mean_a += v;
        for (double v : b) c.mean_b += v;
        c.mean_a /= static_cast<double>(a.size());
        c.mean_b /= static_cast<double>(b.size());
        c.test = paired_t_test(a, b);
        out.push_back(std::move(c));
    }
    return out;
}

inline std::string comparison_table(const std::vector<PairedComparison>& cmp,
                                    const std::string& label_a, const std::string& label_b) {
    std::ostringstream out;
    out << "metric          " << label_a << " vs " << label_b << "\n";
    for (const auto& c : cmp) {
        std::ostringstream line;
        line << std::left << std::setw(16) << c.metric << std::fixed << std::setprecision(6)
             << c.mean_a << "  " << c.mean_b << "  diff " << std::showpos << c.test.mean_diff
             << std::noshowpos << "  t " << detail::fixed6(c.test.t) << "  p "
             << detail::fixed6(c.test.p);
        out << line.str() << "\n";
    }
    return out.str();
}

}  // namespace rmtl
