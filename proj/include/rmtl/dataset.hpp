#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rmtl/errors.hpp"
#include "rmtl/matrix.hpp"
#include "rmtl/schema.hpp"

namespace rmtl {

struct InteractionRow {
    std::string session_id;
    std::int64_t timestamp = 0;
    std::uint64_t user_id = 0;
    std::uint64_t item_id = 0;
    std::vector<std::uint64_t> cats;
    std::vector<double> nums;
    int y_click = 0;
    int y_convert = 0;
};

struct Session {
    std::string id;
    std::vector<InteractionRow> rows;

    std::int64_t first_ts() const { return rows.empty() ? 0 : rows.front().timestamp; }
    std::size_t length() const { return rows.size(); }
};

struct SessionDataset {
    FeatureSchema schema;
    std::vector<Session> sessions;

    std::size_t session_count() const { return sessions.size(); }
    std::size_t row_count() const {
        std::size_t n = 0;
        for (const auto& s : sessions) n += s.rows.size();
        return n;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::uint64_t parse_id(const std::string& s, std::size_t lineno, const char* what) {
    try {
        std::size_t pos = 0;
        if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
        const std::uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    }
}

inline double parse_num(const std::string& s, std::size_t lineno, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    }
}

inline std::int64_t parse_i64(const std::string& s, std::size_t lineno, const char* what) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace detail

/// Validate labels, id ranges, and per-session timestamp ordering; group rows
/// into sessions preserving first-appearance order.
inline SessionDataset assemble_sessions(const FeatureSchema& schema,
                                        std::vector<InteractionRow> rows) {
    schema.validate();
    SessionDataset ds;
    ds.schema = schema;
    std::map<std::string, std::size_t> index;
    std::vector<std::string> offenders;
    for (auto& row : rows) {
        if (row.y_click != 0 && row.y_click != 1)
            throw ValidationError("session " + row.session_id + ": y_click must be 0 or 1");
        if (row.y_convert != 0 && row.y_convert != 1)
            throw ValidationError("session " + row.session_id + ": y_convert must be 0 or 1");
        if (row.y_convert == 1 && row.y_click == 0)
            offenders.push_back(row.session_id + "@" + std::to_string(row.timestamp));
        if (row.user_id >= schema.user_vocab)
            throw ValidationError("session " + row.session_id + ": user_id " +
                                  std::to_string(row.user_id) + " outside vocab");
        if (row.item_id >= schema.item_vocab)
            throw ValidationError("session " + row.session_id + ": item_id " +
                                  std::to_string(row.item_id) + " outside vocab");
        if (row.cats.size() != schema.cat_fields.size() ||
            row.nums.size() != schema.num_fields.size())
            throw ValidationError("session " + row.session_id + ": field count mismatch");
        for (std::size_t i = 0; i < row.cats.size(); ++i)
            if (row.cats[i] >= schema.cat_fields[i].vocab)
                throw ValidationError("session " + row.session_id + ": " +
                                      schema.cat_fields[i].name + " value outside vocab");
        auto [it, fresh] = index.emplace(row.session_id, ds.sessions.size());
        if (fresh) ds.sessions.push_back({row.session_id, {}});
        ds.sessions[it->second].rows.push_back(std::move(row));
    }
    if (!offenders.empty()) {
        std::string msg = "y_convert=1 with y_click=0 at:";
        for (const auto& o : offenders) msg += " " + o;
        throw ValidationError(msg);
    }
    for (auto& s : ds.sessions) {
        std::stable_sort(s.rows.begin(), s.rows.end(),
                         [](const InteractionRow& a, const InteractionRow& b) {
                             return a.timestamp < b.timestamp;
                         });
        for (std::size_t i = 0; i + 1 < s.rows.size(); ++i)
            if (s.rows[i].timestamp == s.rows[i + 1].timestamp)
                throw ValidationError("session " + s.id + ": duplicate timestamp " +
                                      std::to_string(s.rows[i].timestamp));
    }
    return ds;
}

inline SessionDataset load_sessions(const std::string& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("load_sessions: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_sessions: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto expected = schema.header();
    const auto header = detail::split_csv_line(line);
    if (header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw ParseError("load_sessions: header mismatch, expected '" + want + "'");
    }
    std::vector<InteractionRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != expected.size())
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(expected.size()) + " fields, got " +
                             std::to_string(fields.size()));
        InteractionRow row;
        std::size_t c = 0;
        row.session_id = fields[c++];
        row.timestamp = detail::parse_i64(fields[c++], lineno, "timestamp");
        row.user_id = detail::parse_id(fields[c++], lineno, "user_id");
        row.item_id = detail::parse_id(fields[c++], lineno, "item_id");
        for (std::size_t i = 0; i < schema.cat_fields.size(); ++i)
            row.cats.push_back(
                detail::parse_id(fields[c++], lineno, schema.cat_fields[i].name.c_str()));
        for (std::size_t i = 0; i < schema.num_fields.size(); ++i)
            row.nums.push_back(
                detail::parse_num(fields[c++], lineno, schema.num_fields[i].c_str()));
        const std::uint64_t click = detail::parse_id(fields[c++], lineno, "y_click");
        const std::uint64_t convert = detail::parse_id(fields[c++], lineno, "y_convert");
        if (click > 1 || convert > 1)
            throw ValidationError("line " + std::to_string(lineno) + ": labels must be 0 or 1");
        row.y_click = static_cast<int>(click);
        row.y_convert = static_cast<int>(convert);
        rows.push_back(std::move(row));
    }
    return assemble_sessions(schema, std::move(rows));
}

inline void save_sessions(const SessionDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_sessions: cannot open " + path + " for writing");
    const auto header = ds.schema.header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    out.precision(17);
    for (const auto& s : ds.sessions) {
        for (const auto& r : s.rows) {
            out << r.session_id << "," << r.timestamp << "," << r.user_id << "," << r.item_id;
            for (auto v : r.cats) out << "," << v;
            for (auto v : r.nums) out << "," << v;
            out << "," << r.y_click << "," << r.y_convert << "\n";
        }
    }
    if (!out) throw IoError("save_sessions: write failed for " + path);
}

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct DatasetSplit {
    SessionDataset train;
    SessionDataset val;
    SessionDataset test;
};

/// Session-atomic time split: sessions ordered by first timestamp, then cut by
/// cumulative-floor counts. No session straddles a boundary.
inline DatasetSplit split_by_time(const SessionDataset& ds, SplitRatios ratios = {}) {
    if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0)
        throw ValidationError("split_by_time: ratios must be positive");
    const double total = ratios.train + ratios.val + ratios.test;
    const std::size_t m = ds.sessions.size();
    if (m < 3) throw ValidationError("split_by_time: need at least 3 sessions, have " +
                                     std::to_string(m));
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds.sessions[a].first_ts() < ds.sessions[b].first_ts();
    });
    const auto md = static_cast<double>(m);
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(md * ratios.train / total));
    const std::size_t n_trainval =
        static_cast<std::size_t>(std::floor(md * (ratios.train + ratios.val) / total));
    if (n_train == 0 || n_trainval <= n_train || n_trainval >= m)
        throw ValidationError("split_by_time: a split part would be empty");
    DatasetSplit out;
    out.train.schema = out.val.schema = out.test.schema = ds.schema;
    for (std::size_t i = 0; i < m; ++i) {
        const Session& s = ds.sessions[order[i]];
        if (i < n_train)
            out.train.sessions.push_back(s);
        else if (i < n_trainval)
            out.val.sessions.push_back(s);
        else
            out.test.sessions.push_back(s);
    }
    return out;
}

/// Per-field mean and standard deviation of the numerical features,
/// computed on the training split only.
struct NumStats {
    Vector mean;
    Vector stddev;

    bool empty() const { return mean.empty(); }
};

inline NumStats compute_num_stats(const SessionDataset& train) {
    const std::size_t nf = train.schema.num_fields.size();
    NumStats st;
    st.mean.assign(nf, 0.0);
    st.stddev.assign(nf, 1.0);
    if (nf == 0) return st;
    std::size_t n = 0;
    for (const auto& s : train.sessions)
        for (const auto& r : s.rows) {
            ++n;
            for (std::size_t i = 0; i < nf; ++i) st.mean[i] += r.nums[i];
        }
    if (n == 0) throw ValidationError("compute_num_stats: empty training split");
    for (auto& v : st.mean) v /= static_cast<double>(n);
    Vector var(nf, 0.0);
    for (const auto& s : train.sessions)
        for (const auto& r : s.rows)
            for (std::size_t i = 0; i < nf; ++i) {
                const double d = r.nums[i] - st.mean[i];
                var[i] += d * d;
            }
    for (std::size_t i = 0; i < nf; ++i) {
        const double sd = std::sqrt(var[i] / static_cast<double>(n));
        st.stddev[i] = sd > 1e-12 ? sd : 1.0;  // constant feature maps to 0
    }
    return st;
}

inline void standardize_nums(SessionDataset& ds, const NumStats& st) {
    if (st.mean.size() != ds.schema.num_fields.size())
        throw ValidationError("standardize_nums: stats do not match schema");
    for (auto& s : ds.sessions)
        for (auto& r : s.rows)
            for (std::size_t i = 0; i < r.nums.size(); ++i)
                r.nums[i] = (r.nums[i] - st.mean[i]) / st.stddev[i];
}

/// (y_click, y_convert) from a watched-duration fraction.
inline std::pair<int, int> binarize_play_duration(double fraction) {
    if (fraction < 0.0 || !std::isfinite(fraction))
        throw ValidationError("binarize_play_duration: fraction must be >= 0");
    const int click = fraction > 0.3 ? 1 : 0;
    const int convert = fraction > 0.7 ? 1 : 0;
    return {click, convert};
}

}  // namespace rmtl
