#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlstm/lstm.hpp"

namespace dlstm {

// day_type: 0 = workday, 1 = Saturday, 2 = Sunday/holiday.
struct DailyRecord {
    std::chrono::year_month_day date;
    double load = 0.0;
    double temperature = 0.0;
    int day_type = 0;
};

enum class Feature { Load, Temperature };

// Min-max scaling fitted on the training range only.
struct Normalizer {
    double load_min = 0.0, load_max = 0.0;
    double temp_min = 0.0, temp_max = 0.0;
};

struct Shard {
    std::vector<SequenceSample> samples;
    std::string provenance;
};

enum class ShardStrategy { Contiguous, RoundRobin };

// CSV with header `date,load,temperature,day_type`, ISO-8601 dates,
// chronological with no gaps.
std::vector<DailyRecord> parse_series(const std::string& path);

void write_series_csv(const std::string& path, std::span<const DailyRecord> records);

Normalizer fit_normalizer(std::span<const DailyRecord> records);
double normalize(const Normalizer& n, double value, Feature f);
double denormalize(const Normalizer& n, double value, Feature f);

// Sliding-window samples: T = 9 daily steps (the 7 days d-8..d-2, then d-2
// and d-1 again), context = forecast day's temperature and day type,
// target = the forecast day's load. Yields |records| - 8 samples.
std::vector<SequenceSample> build_samples(std::span<const DailyRecord> records,
                                          const Normalizer& n);

std::vector<Shard> shard_dataset(std::span<const SequenceSample> samples, std::size_t n_agents,
                                 ShardStrategy strategy = ShardStrategy::Contiguous);

// Seasonal + weekly synthetic load series, deterministic per seed.
// Day 0 is Monday 2018-01-01.
std::vector<DailyRecord> gen_synthetic(std::size_t days, std::uint64_t seed);

}  // namespace dlstm
