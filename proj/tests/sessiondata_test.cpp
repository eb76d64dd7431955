#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rmtl/dataset.hpp"
#include "rmtl/gini.hpp"
#include "rmtl/schema.hpp"
#include "rmtl/synthetic.hpp"

using namespace rmtl;

namespace {

FeatureSchema tiny_schema() {
    FeatureSchema s;
    s.user_vocab = 10;
    s.item_vocab = 20;
    s.cat_fields = {{"channel", 4}};
    s.num_fields = {"price"};
    s.embed_dim = 8;
    return s;
}

InteractionRow make_row(const std::string& sid, std::int64_t ts, std::uint64_t u,
                        std::uint64_t i, std::uint64_t ch, double price, int yc, int yv) {
    InteractionRow r;
    r.session_id = sid;
    r.timestamp = ts;
    r.user_id = u;
    r.item_id = i;
    r.cats = {ch};
    r.nums = {price};
    r.y_click = yc;
    r.y_convert = yv;
    return r;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

SessionDataset sessions_of_lengths(const std::vector<std::size_t>& lengths) {
    FeatureSchema s;
    s.user_vocab = 5;
    s.item_vocab = 5;
    std::vector<InteractionRow> rows;
    std::int64_t ts = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i)
        for (std::size_t t = 0; t < lengths[i]; ++t)
            rows.push_back(make_row("s" + std::to_string(i), ts++, 0, 0, 0, 0.0, 0, 0));
    for (auto& r : rows) {
        r.cats.clear();
        r.nums.clear();
    }
    return assemble_sessions(s, rows);
}

}  // namespace

TEST(Schema, ParseAndSerializeRoundTrip) {
    const std::string text =
        "user_vocab=10\nitem_vocab=20\nembed_dim=8\ncat_field=channel:4\nnum_field=price\n";
    std::istringstream in(text);
    FeatureSchema s = parse_schema(in);
    EXPECT_EQ(s.user_vocab, 10u);
    EXPECT_EQ(s.item_vocab, 20u);
    EXPECT_EQ(s.embed_dim, 8u);
    ASSERT_EQ(s.cat_fields.size(), 1u);
    EXPECT_EQ(s.cat_fields[0].name, "channel");
    EXPECT_EQ(s.cat_fields[0].vocab, 4u);
    ASSERT_EQ(s.num_fields.size(), 1u);
    EXPECT_EQ(schema_to_text(s), text);
    std::istringstream again(schema_to_text(s));
    EXPECT_TRUE(parse_schema(again) == s);
}

TEST(Schema, CommentsAndBlanksIgnored) {
    std::istringstream in("# header\nuser_vocab=3\n\n  item_vocab=4  # inline\n");
    FeatureSchema s = parse_schema(in);
    EXPECT_EQ(s.user_vocab, 3u);
    EXPECT_EQ(s.item_vocab, 4u);
}

TEST(Schema, RejectsDuplicateAndMissingFields) {
    std::istringstream dup("user_vocab=3\nitem_vocab=4\nnum_field=x\nnum_field=x\n");
    EXPECT_THROW(parse_schema(dup), ValidationError);
    std::istringstream missing("item_vocab=4\n");
    EXPECT_THROW(parse_schema(missing), ParseError);
    std::istringstream badkey("user_vocab=3\nitem_vocab=4\nwat=1\n");
    EXPECT_THROW(parse_schema(badkey), ParseError);
}

TEST(LoadSessions, HeaderOnlyGivesEmptyDataset) {
    const auto path = write_temp(
        "rmtl_empty.csv",
        "session_id,timestamp,user_id,item_id,channel,price,y_click,y_convert\n");
    SessionDataset ds = load_sessions(path, tiny_schema());
    EXPECT_EQ(ds.session_count(), 0u);
    EXPECT_EQ(ds.row_count(), 0u);
    std::remove(path.c_str());
}

TEST(LoadSessions, GroupsAndOrdersRows) {
    const auto path = write_temp(
        "rmtl_three.csv",
        "session_id,timestamp,user_id,item_id,channel,price,y_click,y_convert\n"
        "a,200,1,2,0,1.5,1,0\n"
        "b,50,2,3,1,2.0,0,0\n"
        "a,100,1,4,2,0.5,1,1\n");
    SessionDataset ds = load_sessions(path, tiny_schema());
    EXPECT_EQ(ds.session_count(), 2u);
    EXPECT_EQ(ds.row_count(), 3u);
    ASSERT_EQ(ds.sessions[0].rows.size(), 2u);
    EXPECT_EQ(ds.sessions[0].id, "a");
    EXPECT_EQ(ds.sessions[0].rows[0].timestamp, 100);
    EXPECT_EQ(ds.sessions[0].rows[1].timestamp, 200);
    EXPECT_EQ(ds.sessions[0].rows[0].item_id, 4u);
    std::remove(path.c_str());
}

TEST(LoadSessions, ConvertWithoutClickRejected) {
    const auto path = write_temp(
        "rmtl_badlabel.csv",
        "session_id,timestamp,user_id,item_id,channel,price,y_click,y_convert\n"
        "a,1,1,2,0,1.0,0,1\n");
    EXPECT_THROW(load_sessions(path, tiny_schema()), ValidationError);
    std::remove(path.c_str());
}

TEST(LoadSessions, MalformedRowReportsLineNumber) {
    const auto path = write_temp(
        "rmtl_badrow.csv",
        "session_id,timestamp,user_id,item_id,channel,price,y_click,y_convert\n"
        "a,1,1,2,0,1.0,1,0\n"
        "a,2,1,zzz,0,1.0,1,0\n");
    try {
        load_sessions(path, tiny_schema());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    std::remove(path.c_str());
}

TEST(LoadSessions, HeaderMismatchRejected) {
    const auto path = write_temp("rmtl_badhdr.csv", "session_id,timestamp\na,1\n");
    EXPECT_THROW(load_sessions(path, tiny_schema()), ParseError);
    std::remove(path.c_str());
}

TEST(LoadSessions, OutOfVocabRejected) {
    const auto path = write_temp(
        "rmtl_oov.csv",
        "session_id,timestamp,user_id,item_id,channel,price,y_click,y_convert\n"
        "a,1,99,2,0,1.0,1,0\n");
    EXPECT_THROW(load_sessions(path, tiny_schema()), ValidationError);
    std::remove(path.c_str());
}

TEST(LoadSessions, DuplicateTimestampInSessionRejected) {
    std::vector<InteractionRow> rows{make_row("a", 5, 1, 1, 0, 0.0, 0, 0),
                                     make_row("a", 5, 1, 2, 0, 0.0, 0, 0)};
    EXPECT_THROW(assemble_sessions(tiny_schema(), rows), ValidationError);
}

TEST(SaveSessions, RoundTripsExactly) {
    SeededRng unused(0);
    SyntheticSpec spec;
    spec.users = 20;
    spec.items = 30;
    spec.sessions = 25;
    SessionDataset ds = gen_synthetic(spec, 7);
    const std::string path = std::filesystem::temp_directory_path() / "rmtl_roundtrip.csv";
    save_sessions(ds, path);
    SessionDataset back = load_sessions(path, ds.schema);
    ASSERT_EQ(back.session_count(), ds.session_count());
    ASSERT_EQ(back.row_count(), ds.row_count());
    for (std::size_t i = 0; i < ds.sessions.size(); ++i) {
        ASSERT_EQ(back.sessions[i].id, ds.sessions[i].id);
        for (std::size_t t = 0; t < ds.sessions[i].rows.size(); ++t) {
            const auto& a = ds.sessions[i].rows[t];
            const auto& b = back.sessions[i].rows[t];
            EXPECT_EQ(a.timestamp, b.timestamp);
            EXPECT_EQ(a.user_id, b.user_id);
            EXPECT_EQ(a.item_id, b.item_id);
            EXPECT_EQ(a.cats, b.cats);
            EXPECT_EQ(a.y_click, b.y_click);
            EXPECT_EQ(a.y_convert, b.y_convert);
            ASSERT_EQ(a.nums.size(), b.nums.size());
            for (std::size_t j = 0; j < a.nums.size(); ++j)
                EXPECT_DOUBLE_EQ(a.nums[j], b.nums[j]);
        }
    }
    std::remove(path.c_str());
}

TEST(Split, TenSessionsGive622) {
    SessionDataset ds = sessions_of_lengths(std::vector<std::size_t>(10, 2));
    DatasetSplit sp = split_by_time(ds);
    EXPECT_EQ(sp.train.session_count(), 6u);
    EXPECT_EQ(sp.val.session_count(), 2u);
    EXPECT_EQ(sp.test.session_count(), 2u);
}

TEST(Split, SevenSessionsGive412ByCumulativeFloor) {
    SessionDataset ds = sessions_of_lengths(std::vector<std::size_t>(7, 1));
    DatasetSplit sp = split_by_time(ds);
    EXPECT_EQ(sp.train.session_count(), 4u);
    EXPECT_EQ(sp.val.session_count(), 1u);
    EXPECT_EQ(sp.test.session_count(), 2u);
}

TEST(Split, TooFewSessionsRejected) {
    SessionDataset one = sessions_of_lengths({3});
    EXPECT_THROW(split_by_time(one), ValidationError);
    SessionDataset two = sessions_of_lengths({3, 3});
    EXPECT_THROW(split_by_time(two), ValidationError);
}

TEST(Split, NonPositiveRatioRejected) {
    SessionDataset ds = sessions_of_lengths(std::vector<std::size_t>(10, 1));
    EXPECT_THROW(split_by_time(ds, {0.8, 0.2, 0.0}), ValidationError);
}

TEST(Split, EveryRowExactlyOnceAndTimeOrdered) {
    SyntheticSpec spec;
    spec.users = 30;
    spec.items = 40;
    spec.sessions = 37;
    SessionDataset ds = gen_synthetic(spec, 11);
    DatasetSplit sp = split_by_time(ds);
    EXPECT_EQ(sp.train.session_count() + sp.val.session_count() + sp.test.session_count(),
              ds.session_count());
    EXPECT_EQ(sp.train.row_count() + sp.val.row_count() + sp.test.row_count(),
              ds.row_count());
    std::set<std::string> seen;
    for (const auto* part : {&sp.train, &sp.val, &sp.test})
        for (const auto& s : part->sessions) EXPECT_TRUE(seen.insert(s.id).second);
    EXPECT_EQ(seen.size(), ds.session_count());
    auto max_first = [](const SessionDataset& d) {
        std::int64_t m = INT64_MIN;
        for (const auto& s : d.sessions) m = std::max(m, s.first_ts());
        return m;
    };
    auto min_first = [](const SessionDataset& d) {
        std::int64_t m = INT64_MAX;
        for (const auto& s : d.sessions) m = std::min(m, s.first_ts());
        return m;
    };
    EXPECT_LE(max_first(sp.train), min_first(sp.val));
    EXPECT_LE(max_first(sp.val), min_first(sp.test));
}

TEST(NumStats, TrainOnlyStandardization) {
    SyntheticSpec spec;
    spec.users = 20;
    spec.items = 30;
    spec.sessions = 40;
    SessionDataset ds = gen_synthetic(spec, 3);
    DatasetSplit sp = split_by_time(ds);
    NumStats st = compute_num_stats(sp.train);
    SessionDataset train = sp.train;
    standardize_nums(train, st);
    const std::size_t nf = train.schema.num_fields.size();
    Vector mean(nf, 0.0), sq(nf, 0.0);
    std::size_t n = 0;
    for (const auto& s : train.sessions)
        for (const auto& r : s.rows) {
            ++n;
            for (std::size_t i = 0; i < nf; ++i) {
                mean[i] += r.nums[i];
                sq[i] += r.nums[i] * r.nums[i];
            }
        }
    for (std::size_t i = 0; i < nf; ++i) {
        mean[i] /= n;
        EXPECT_NEAR(mean[i], 0.0, 1e-9);
        EXPECT_NEAR(sq[i] / n - mean[i] * mean[i], 1.0, 1e-9);
    }
    // test split standardized with train stats is NOT zero-mean in general
    SessionDataset test = sp.test;
    standardize_nums(test, st);
    double tmean = 0.0;
    std::size_t tn = 0;
    for (const auto& s : test.sessions)
        for (const auto& r : s.rows) {
            tmean += r.nums[0];
            ++tn;
        }
    EXPECT_GT(std::fabs(tmean / tn), 1e-12);
}

TEST(NumStats, ConstantFeatureMapsToZero) {
    FeatureSchema s;
    s.user_vocab = 2;
    s.item_vocab = 2;
    s.num_fields = {"c"};
    std::vector<InteractionRow> rows;
    for (int i = 0; i < 4; ++i) {
        InteractionRow r = make_row("s" + std::to_string(i), i, 0, 0, 0, 0.0, 0, 0);
        r.cats.clear();
        r.nums = {7.5};
        rows.push_back(r);
    }
    SessionDataset ds = assemble_sessions(s, rows);
    NumStats st = compute_num_stats(ds);
    EXPECT_DOUBLE_EQ(st.stddev[0], 1.0);
    standardize_nums(ds, st);
    for (const auto& sess : ds.sessions)
        for (const auto& r : sess.rows) EXPECT_DOUBLE_EQ(r.nums[0], 0.0);
}

TEST(Gini, ParentImpurityOfBalancedLabels) {
    EXPECT_DOUBLE_EQ(gini_impurity(2, 2), 0.5);
    EXPECT_DOUBLE_EQ(gini_impurity(4, 0), 0.0);
    EXPECT_DOUBLE_EQ(gini_impurity(0, 0), 0.0);
}

TEST(Gini, PerfectSeparatorScoresHalf) {
    FeatureSchema s;
    s.user_vocab = 2;
    s.item_vocab = 4;
    std::vector<InteractionRow> rows;
    for (int i = 0; i < 4; ++i) {
        InteractionRow r = make_row("s" + std::to_string(i), i, i < 2 ? 1 : 0, 0, 0, 0, i < 2, 0);
        r.cats.clear();
        r.nums.clear();
        rows.push_back(r);
    }
    SessionDataset ds = assemble_sessions(s, rows);
    auto ranked = gini_rank_features(ds, "y_click");
    EXPECT_EQ(ranked.front().feature, "user_id");
    EXPECT_DOUBLE_EQ(ranked.front().score, 0.5);
}

TEST(Gini, HandComputedThreeOneSplit) {
    // labels 1,1,0,0; feature a,a,a,b -> 0.5 - (3/4)(4/9) - (1/4)*0 = 1/6
    FeatureSchema s;
    s.user_vocab = 2;
    s.item_vocab = 2;
    s.cat_fields = {{"f", 2}};
    std::vector<InteractionRow> rows;
    const int labels[4] = {1, 1, 0, 0};
    const std::uint64_t feat[4] = {0, 0, 0, 1};
    for (int i = 0; i < 4; ++i) {
        InteractionRow r = make_row("s" + std::to_string(i), i, 0, 0, feat[i], 0, labels[i], 0);
        r.nums.clear();
        rows.push_back(r);
    }
    SessionDataset ds = assemble_sessions(s, rows);
    auto ranked = gini_rank_features(ds, "y_click");
    double f_score = -1;
    for (const auto& g : ranked)
        if (g.feature == "f") f_score = g.score;
    EXPECT_NEAR(f_score, 1.0 / 6.0, 1e-15);
}

TEST(Gini, ConstantLabelGivesAllZeroScores) {
    SessionDataset ds = sessions_of_lengths({2, 2});
    auto ranked = gini_rank_features(ds, "y_click");
    for (const auto& g : ranked) EXPECT_DOUBLE_EQ(g.score, 0.0);
}

TEST(Gini, ScoresInHalfRangeAndRelabelInvariant) {
    SyntheticSpec spec;
    spec.users = 15;
    spec.items = 25;
    spec.sessions = 50;
    SessionDataset ds = gen_synthetic(spec, 19);
    auto ranked = gini_rank_features(ds, "y_click");
    for (const auto& g : ranked) {
        EXPECT_GE(g.score, -1e-15);
        EXPECT_LE(g.score, 0.5 + 1e-15);
    }
    // permute channel value names; scores must not move
    SessionDataset relabeled = ds;
    for (auto& s : relabeled.sessions)
        for (auto& r : s.rows) r.cats[0] = (r.cats[0] + 1) % spec.channels;
    auto ranked2 = gini_rank_features(relabeled, "y_click");
    ASSERT_EQ(ranked.size(), ranked2.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        EXPECT_EQ(ranked[i].feature, ranked2[i].feature);
        EXPECT_NEAR(ranked[i].score, ranked2[i].score, 1e-12);
    }
}

TEST(Binarize, ThresholdsFromWatchFraction) {
    EXPECT_EQ(binarize_play_duration(0.2), (std::pair<int, int>{0, 0}));
    EXPECT_EQ(binarize_play_duration(0.5), (std::pair<int, int>{1, 0}));
    EXPECT_EQ(binarize_play_duration(0.9), (std::pair<int, int>{1, 1}));
    EXPECT_EQ(binarize_play_duration(0.3), (std::pair<int, int>{0, 0}));
    EXPECT_EQ(binarize_play_duration(0.7), (std::pair<int, int>{1, 0}));
    EXPECT_THROW(binarize_play_duration(-0.1), ValidationError);
}

TEST(Synthetic, DeterministicForFixedSeed) {
    SyntheticSpec spec;
    spec.users = 25;
    spec.items = 30;
    spec.sessions = 20;
    SessionDataset a = gen_synthetic(spec, 42);
    SessionDataset b = gen_synthetic(spec, 42);
    ASSERT_EQ(a.row_count(), b.row_count());
    for (std::size_t i = 0; i < a.sessions.size(); ++i)
        for (std::size_t t = 0; t < a.sessions[i].rows.size(); ++t) {
            const auto& ra = a.sessions[i].rows[t];
            const auto& rb = b.sessions[i].rows[t];
            EXPECT_EQ(ra.item_id, rb.item_id);
            EXPECT_EQ(ra.y_click, rb.y_click);
            EXPECT_EQ(ra.y_convert, rb.y_convert);
            EXPECT_EQ(ra.nums[0], rb.nums[0]);
        }
    SessionDataset c = gen_synthetic(spec, 43);
    bool any_diff = c.row_count() != a.row_count();
    for (std::size_t i = 0; !any_diff && i < std::min(a.sessions.size(), c.sessions.size()); ++i)
        if (a.sessions[i].rows.size() != c.sessions[i].rows.size() ||
            a.sessions[i].rows[0].item_id != c.sessions[i].rows[0].item_id)
            any_diff = true;
    EXPECT_TRUE(any_diff);
}

TEST(Synthetic, NoConvertWithoutClick) {
    SyntheticSpec spec;
    spec.sessions = 500;
    SessionDataset ds = gen_synthetic(spec, 5);
    for (const auto& s : ds.sessions)
        for (const auto& r : s.rows)
            if (r.y_convert == 1) {
                EXPECT_EQ(r.y_click, 1);
            }
}

TEST(Synthetic, EmpiricalRatesMatchAnalyticMeans) {
    SyntheticSpec spec;
    spec.users = 2000;
    spec.items = 5000;
    spec.sessions = 20000;
    SessionDataset ds = gen_synthetic(spec, 123);
    ASSERT_GE(ds.row_count(), 100000u);

    const double n = static_cast<double>(ds.row_count());
    double clicks = 0, converts = 0;
    for (const auto& s : ds.sessions)
        for (const auto& r : s.rows) {
            clicks += r.y_click;
            converts += r.y_convert;
        }
    const double ctr_hat = clicks / n;
    const double ctcvr_hat = converts / n;

    // cluster-robust standard errors: sessions are the independent units
    double var_click = 0, var_conv = 0;
    for (const auto& s : ds.sessions) {
        double cs = 0, vs = 0;
        for (const auto& r : s.rows) {
            cs += r.y_click - ctr_hat;
            vs += r.y_convert - ctcvr_hat;
        }
        var_click += cs * cs;
        var_conv += vs * vs;
    }
    const double se_click = std::sqrt(var_click) / n;
    const double se_conv = std::sqrt(var_conv) / n;
    EXPECT_NEAR(ctr_hat, spec.analytic_click_mean(), 3.0 * se_click);
    EXPECT_NEAR(ctcvr_hat, spec.analytic_ctcvr_mean(), 3.0 * se_conv);
}
