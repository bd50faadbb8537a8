#include "dlstm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dlstm {

namespace {

std::chrono::year_month_day parse_iso_date(const std::string& text, std::size_t line_no) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    std::istringstream in(text);
    in >> y >> dash1 >> m >> dash2 >> d;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (in.fail() || dash1 != '-' || dash2 != '-' || !ymd.ok()) {
        throw std::runtime_error("parse_series: invalid date '" + text + "' at line " +
                                 std::to_string(line_no));
    }
    return ymd;
}

std::string iso_date(const std::chrono::year_month_day& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(d.year()), unsigned(d.month()),
                  unsigned(d.day()));
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

std::vector<DailyRecord> parse_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_series: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse_series: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,load,temperature,day_type") {
        throw std::runtime_error("parse_series: unexpected header '" + line + "'");
    }

    std::vector<DailyRecord> records;
    std::vector<std::string> gaps;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw std::runtime_error("parse_series: malformed row at line " +
                                     std::to_string(line_no));
        }
        DailyRecord r;
        r.date = parse_iso_date(fields[0], line_no);
        try {
            r.load = std::stod(fields[1]);
            r.temperature = std::stod(fields[2]);
            r.day_type = std::stoi(fields[3]);
        } catch (const std::exception&) {
            throw std::runtime_error("parse_series: malformed numeric field at line " +
                                     std::to_string(line_no));
        }
        if (!(r.load > 0.0) || !std::isfinite(r.load)) {
            throw std::runtime_error("parse_series: non-positive load at line " +
                                     std::to_string(line_no));
        }
        if (!std::isfinite(r.temperature)) {
            throw std::runtime_error("parse_series: non-finite temperature at line " +
                                     std::to_string(line_no));
        }
        if (r.day_type < 0 || r.day_type > 2) {
            throw std::runtime_error("parse_series: unknown day_type at line " +
                                     std::to_string(line_no));
        }
        if (!records.empty()) {
            const auto prev = std::chrono::sys_days(records.back().date);
            const auto cur = std::chrono::sys_days(r.date);
            if (cur <= prev) {
                throw std::runtime_error("parse_series: out-of-order date at line " +
                                         std::to_string(line_no));
            }
            for (auto d = prev + std::chrono::days{1}; d < cur; d += std::chrono::days{1}) {
                gaps.push_back(iso_date(std::chrono::year_month_day(d)));
            }
        }
        records.push_back(r);
    }
    if (!gaps.empty()) {
        std::string msg = "parse_series: missing dates:";
        for (const auto& g : gaps) msg += " " + g;
        throw std::runtime_error(msg);
    }
    return records;
}

void write_series_csv(const std::string& path, std::span<const DailyRecord> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_series_csv: cannot open '" + path + "'");
    out << "date,load,temperature,day_type\n";
    char buf[96];
    for (const DailyRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%d\n", iso_date(r.date).c_str(), r.load,
                      r.temperature, r.day_type);
        out << buf;
    }
    if (!out) throw std::runtime_error("write_series_csv: write failed for '" + path + "'");
}

Normalizer fit_normalizer(std::span<const DailyRecord> records) {
    if (records.size() < 2) throw std::invalid_argument("fit_normalizer: need >= 2 records");
    Normalizer n;
    n.load_min = n.load_max = records[0].load;
    n.temp_min = n.temp_max = records[0].temperature;
    for (const DailyRecord& r : records) {
        n.load_min = std::min(n.load_min, r.load);
        n.load_max = std::max(n.load_max, r.load);
        n.temp_min = std::min(n.temp_min, r.temperature);
        n.temp_max = std::max(n.temp_max, r.temperature);
    }
    if (n.load_max <= n.load_min) throw std::invalid_argument("fit_normalizer: constant load feature");
    if (n.temp_max <= n.temp_min) {
        throw std::invalid_argument("fit_normalizer: constant temperature feature");
    }
    return n;
}

double normalize(const Normalizer& n, double value, Feature f) {
    if (f == Feature::Load) return (value - n.load_min) / (n.load_max - n.load_min);
    return (value - n.temp_min) / (n.temp_max - n.temp_min);
}

double denormalize(const Normalizer& n, double value, Feature f) {
    if (f == Feature::Load) return n.load_min + value * (n.load_max - n.load_min);
    return n.temp_min + value * (n.temp_max - n.temp_min);
}

std::vector<SequenceSample> build_samples(std::span<const DailyRecord> records,
                                          const Normalizer& n) {
    if (records.size() < 9) throw std::invalid_argument("build_samples: need >= 9 records");
    std::vector<SequenceSample> samples;
    samples.reserve(records.size() - 8);

    auto step_of = [&](std::size_t idx) {
        const DailyRecord& r = records[idx];
        return std::vector<double>{normalize(n, r.load, Feature::Load),
                                   normalize(n, r.temperature, Feature::Temperature),
                                   static_cast<double>(r.day_type) / 2.0};
    };

    for (std::size_t d = 8; d < records.size(); ++d) {
        SequenceSample s;
        s.steps.reserve(9);
        for (std::size_t k = d - 8; k <= d - 2; ++k) s.steps.push_back(step_of(k));  // last week
        s.steps.push_back(step_of(d - 2));  // two days ago
        s.steps.push_back(step_of(d - 1));  // previous day
        s.readout_context = {normalize(n, records[d].temperature, Feature::Temperature),
                             static_cast<double>(records[d].day_type) / 2.0};
        s.target = normalize(n, records[d].load, Feature::Load);
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Shard> shard_dataset(std::span<const SequenceSample> samples, std::size_t n_agents,
                                 ShardStrategy strategy) {
    if (n_agents == 0) throw std::invalid_argument("shard_dataset: n_agents must be >= 1");
    if (samples.size() < n_agents) {
        throw std::invalid_argument("shard_dataset: fewer samples than agents");
    }
    std::vector<Shard> shards(n_agents);
    if (strategy == ShardStrategy::Contiguous) {
        const std::size_t base = samples.size() / n_agents;
        const std::size_t extra = samples.size() % n_agents;
        std::size_t pos = 0;
        for (std::size_t a = 0; a < n_agents; ++a) {
            const std::size_t len = base + (a < extra ? 1 : 0);
            shards[a].samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(pos),
                                     samples.begin() + static_cast<std::ptrdiff_t>(pos + len));
            shards[a].provenance = "contiguous[" + std::to_string(pos) + "," +
                                   std::to_string(pos + len) + ")";
            pos += len;
        }
    } else {
        for (std::size_t k = 0; k < samples.size(); ++k) {
            shards[k % n_agents].samples.push_back(samples[k]);
        }
        for (std::size_t a = 0; a < n_agents; ++a) {
            shards[a].provenance = "round_robin[" + std::to_string(a) + " mod " +
                                   std::to_string(n_agents) + "]";
        }
    }
    return shards;
}

std::vector<DailyRecord> gen_synthetic(std::size_t days, std::uint64_t seed) {
    if (days < 30) throw std::invalid_argument("gen_synthetic: days must be >= 30");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> temp_noise(0.0, 2.0);
    std::normal_distribution<double> load_noise(0.0, 20.0);

    const auto start = std::chrono::sys_days(std::chrono::year{2018} / 1 / 1);  // a Monday
    std::vector<DailyRecord> records;
    records.reserve(days);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t d = 0; d < days; ++d) {
        DailyRecord r;
        r.date = std::chrono::year_month_day(start + std::chrono::days{static_cast<int>(d)});
        const int weekday = static_cast<int>(d % 7);  // 0 = Monday
        r.day_type = weekday == 5 ? 1 : (weekday == 6 ? 2 : 0);
        const double weekly = weekday == 5 ? 0.3 : (weekday == 6 ? 0.0 : 1.0);

        const double dd = static_cast<double>(d);
        r.temperature = 15.0 + 10.0 * std::sin(two_pi * (dd - 30.0) / 365.0) + temp_noise(rng);
        double load = 1000.0 + 200.0 * std::sin(two_pi * dd / 365.0) + 150.0 * weekly -
                      8.0 * (r.temperature - 15.0) + load_noise(rng);
        r.load = std::max(load, 1.0);
        records.push_back(r);
    }
    return records;
}

}  // namespace dlstm
