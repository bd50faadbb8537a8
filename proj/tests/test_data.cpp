#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "dlstm/data.hpp"

using namespace dlstm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("parse_series reads valid rows in order") {
    const auto path = write_temp("dlstm_ok.csv",
                                 "date,load,temperature,day_type\n"
                                 "2020-01-01,1000.5,4.2,0\n"
                                 "2020-01-02,980.0,3.9,0\n"
                                 "2020-01-03,900.0,5.0,1\n");
    const auto records = parse_series(path);
    REQUIRE(records.size() == 3);
    CHECK(records[0].load == doctest::Approx(1000.5));
    CHECK(records[2].day_type == 1);
}

TEST_CASE("parse_series error paths") {
    SUBCASE("negative load names the line") {
        const auto path = write_temp("dlstm_neg.csv",
                                     "date,load,temperature,day_type\n"
                                     "2020-01-01,1000,4,0\n"
                                     "2020-01-02,-5,4,0\n");
        CHECK_THROWS_WITH_AS(parse_series(path), doctest::Contains("line 3"), std::runtime_error);
    }
    SUBCASE("missing date reported as a gap") {
        const auto path = write_temp("dlstm_gap.csv",
                                     "date,load,temperature,day_type\n"
                                     "2020-01-01,1000,4,0\n"
                                     "2020-01-03,990,4,0\n");
        CHECK_THROWS_WITH_AS(parse_series(path), doctest::Contains("2020-01-02"),
                             std::runtime_error);
    }
    SUBCASE("out-of-order dates rejected") {
        const auto path = write_temp("dlstm_ooo.csv",
                                     "date,load,temperature,day_type\n"
                                     "2020-01-02,1000,4,0\n"
                                     "2020-01-01,990,4,0\n");
        CHECK_THROWS(parse_series(path));
    }
    SUBCASE("unknown day_type rejected") {
        const auto path = write_temp("dlstm_dt.csv",
                                     "date,load,temperature,day_type\n"
                                     "2020-01-01,1000,4,7\n");
        CHECK_THROWS(parse_series(path));
    }
    SUBCASE("malformed row rejected") {
        const auto path = write_temp("dlstm_bad.csv",
                                     "date,load,temperature,day_type\n"
                                     "2020-01-01,1000\n");
        CHECK_THROWS(parse_series(path));
    }
}

TEST_CASE("normalizer maps fit range to [0, 1] and inverts exactly") {
    std::vector<DailyRecord> records(4);
    const double loads[] = {800.0, 1000.0, 1200.0, 900.0};
    const double temps[] = {0.0, 10.0, 20.0, 5.0};
    for (int i = 0; i < 4; ++i) {
        records[i].load = loads[i];
        records[i].temperature = temps[i];
    }
    const auto n = fit_normalizer(records);
    CHECK(normalize(n, 800.0, Feature::Load) == 0.0);
    CHECK(normalize(n, 1200.0, Feature::Load) == 1.0);
    CHECK(normalize(n, 1400.0, Feature::Load) > 1.0);  // no clamping

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-40.0, 40.0);
    for (int i = 0; i < 17; ++i) {
        const double v = dist(rng);
        CHECK(denormalize(n, normalize(n, v, Feature::Temperature), Feature::Temperature) ==
              doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("normalizer rejects constant features") {
    std::vector<DailyRecord> records(3);
    for (auto& r : records) {
        r.load = 100.0;
        r.temperature = 5.0;
    }
    CHECK_THROWS(fit_normalizer(records));
}

TEST_CASE("build_samples sliding window") {
    const auto records = gen_synthetic(100, 1);
    const auto n = fit_normalizer(records);
    const auto samples = build_samples(records, n);
    CHECK(samples.size() == 92);

    for (const auto& s : samples) {
        CHECK(s.steps.size() == 9);
        CHECK(s.steps[0].size() == 3);
        CHECK(s.readout_context.size() == 2);
    }

    // step 1 of the first sample is the earliest record
    CHECK(samples[0].steps[0][0] ==
          doctest::Approx(normalize(n, records[0].load, Feature::Load)));
    // day d-2 appears as both step 7 and step 8
    CHECK(samples[0].steps[6] == samples[0].steps[7]);
    // target aligns with day 8
    CHECK(samples[0].target == doctest::Approx(normalize(n, records[8].load, Feature::Load)));

    SUBCASE("exactly 9 records give one sample") {
        const std::vector<DailyRecord> nine(records.begin(), records.begin() + 9);
        CHECK(build_samples(nine, n).size() == 1);
    }
    SUBCASE("too little history rejected") {
        const std::vector<DailyRecord> eight(records.begin(), records.begin() + 8);
        CHECK_THROWS(build_samples(eight, n));
    }
    SUBCASE("dropping the first record drops exactly the first sample") {
        const std::vector<DailyRecord> tail(records.begin() + 1, records.end());
        const auto shifted = build_samples(tail, n);
        REQUIRE(shifted.size() == samples.size() - 1);
        for (std::size_t i = 0; i < shifted.size(); ++i) {
            CHECK(shifted[i].target == samples[i + 1].target);
            CHECK(shifted[i].steps == samples[i + 1].steps);
        }
    }
}

TEST_CASE("shard_dataset partitions the samples") {
    const auto records = gen_synthetic(50, 2);
    const auto n = fit_normalizer(records);
    auto samples = build_samples(records, n);

    SUBCASE("contiguous sizes: 8 over 4") {
        samples.resize(8);
        const auto shards = shard_dataset(samples, 4);
        for (const auto& s : shards) CHECK(s.samples.size() == 2);
    }
    SUBCASE("contiguous sizes: 9 over 4, remainder to earliest agents") {
        samples.resize(9);
        const auto shards = shard_dataset(samples, 4);
        CHECK(shards[0].samples.size() == 3);
        CHECK(shards[1].samples.size() == 2);
        CHECK(shards[2].samples.size() == 2);
        CHECK(shards[3].samples.size() == 2);
    }
    SUBCASE("round robin: 6 over 2") {
        samples.resize(6);
        const auto shards = shard_dataset(samples, 2, ShardStrategy::RoundRobin);
        REQUIRE(shards[0].samples.size() == 3);
        CHECK(shards[0].samples[0].target == samples[0].target);
        CHECK(shards[0].samples[1].target == samples[2].target);
        CHECK(shards[0].samples[2].target == samples[4].target);
    }
    SUBCASE("shards form a disjoint, order-preserving cover") {
        const auto shards = shard_dataset(samples, 5);
        std::size_t total = 0, pos = 0;
        for (const auto& s : shards) {
            for (const auto& sample : s.samples) {
                CHECK(sample.target == samples[pos].target);
                ++pos;
            }
            total += s.samples.size();
        }
        CHECK(total == samples.size());
    }
    SUBCASE("fewer samples than agents rejected") {
        samples.resize(2);
        CHECK_THROWS(shard_dataset(samples, 3));
    }
}

TEST_CASE("gen_synthetic") {
    SUBCASE("deterministic per seed") {
        const auto a = gen_synthetic(60, 9);
        const auto b = gen_synthetic(60, 9);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].load == b[i].load);
            CHECK(a[i].temperature == b[i].temperature);
        }
    }
    SUBCASE("all loads positive") {
        for (const auto& r : gen_synthetic(365, 3)) CHECK(r.load > 0.0);
    }
    SUBCASE("day types follow the weekly cycle from Monday") {
        const auto records = gen_synthetic(30, 1);
        CHECK(records[0].day_type == 0);  // Monday
        CHECK(records[5].day_type == 1);  // Saturday
        CHECK(records[6].day_type == 2);  // Sunday
        CHECK(records[7].day_type == 0);
    }
    SUBCASE("too few days rejected") { CHECK_THROWS(gen_synthetic(20, 1)); }
    SUBCASE("weekly autocorrelation beats lag 3") {
        const auto records = gen_synthetic(730, 7);
        std::vector<double> loads;
        for (const auto& r : records) loads.push_back(r.load);
        const double mean =
            std::accumulate(loads.begin(), loads.end(), 0.0) / double(loads.size());
        auto autocorr = [&](std::size_t lag) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i + lag < loads.size(); ++i) {
                num += (loads[i] - mean) * (loads[i + lag] - mean);
            }
            for (double v : loads) den += (v - mean) * (v - mean);
            return num / den;
        };
        CHECK(autocorr(7) > autocorr(3));
    }
}

TEST_CASE("write_series_csv round-trips through parse_series") {
    const auto records = gen_synthetic(40, 4);
    const auto path = (std::filesystem::temp_directory_path() / "dlstm_rt.csv").string();
    write_series_csv(path, records);
    const auto parsed = parse_series(path);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(parsed[i].load == doctest::Approx(records[i].load).epsilon(1e-9));
        CHECK(parsed[i].day_type == records[i].day_type);
        CHECK(parsed[i].date == records[i].date);
    }
}
