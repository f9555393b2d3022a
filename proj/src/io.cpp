// SPDX-License-Identifier: Apache-2.0
#include "jsdm/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

namespace jsdm {

double RunningStats::stderr_of_mean() const
{
    if (n < 2)
        return std::numeric_limits<double>::quiet_NaN();
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
}

void parallel_for(int count, const std::function<void(int)>& body)
{
    if (count <= 0)
        return;
    const int workers = std::min<int>(count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers == 1) {
        for (int i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back(run);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::string summary_csv(const ResultTable& table)
{
    std::string out = "point,metric,mean,stderr,trials,excluded\n";
    char buf[512];
    for (const auto& r : table.rows) {
        char se[64];
        if (std::isnan(r.stderr_value))
            std::snprintf(se, sizeof se, "NA");
        else
            std::snprintf(se, sizeof se, "%.10g", r.stderr_value);
        std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%s,%ld,%ld\n", r.point.c_str(), r.metric.c_str(), r.mean, se,
                      r.trials, r.excluded);
        out += buf;
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& hash, const std::string& body)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write '" + path.string() + "'");
    os << "# config_hash=" << hash << "\n" << body;
}

} // namespace

std::string write_results(const ExperimentConfig& cfg, const ResultTable& table, const std::string& out_dir)
{
    namespace fs = std::filesystem;
    const std::string hash = cfg.hash_hex();
    const fs::path dir = fs::path(out_dir) / (cfg.experiment() + "-" + hash);
    fs::create_directories(dir);

    for (const auto& [name, body] : table.files)
        write_file(dir / name, hash, body);
    write_file(dir / "summary.csv", hash, summary_csv(table));

    std::ofstream meta(dir / "metadata.txt", std::ios::binary);
    const std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta << "config_hash = " << hash << "\n";
    meta << "experiment = " << cfg.experiment() << "\n";
    meta << "seed = " << cfg.seed() << "\n";
    meta << "trials = " << cfg.trials() << "\n";
    meta << "finished_utc = " << stamp << "\n";
    char rt[64];
    std::snprintf(rt, sizeof rt, "%.3f", table.runtime_seconds);
    meta << "runtime_seconds = " << rt << "\n";
    for (const auto& key : cfg.defaulted())
        meta << "default " << key << " = " << cfg.get(key) << "\n";
    for (const auto& note : table.notes)
        meta << "note " << note << "\n";
    meta << "\n[config]\n" << cfg.normalized();
    return dir.string();
}

} // namespace jsdm
