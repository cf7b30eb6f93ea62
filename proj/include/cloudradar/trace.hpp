#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace cloudradar {

struct TraceRow {
    int outer = 0;
    int inner = 0;              // 0 for the row closing an outer iteration
    std::string block;          // "init", "waveform", "quant", "power", "outer"
    double objective = 0.0;     // negative Bhattacharyya distance (nats), or SSUM running estimate
    double max_slack = 0.0;     // largest constraint value (power in linear units, rate in the scenario unit); <= 0 when feasible
    double elapsed_s = 0.0;
};

struct OptTrace {
    std::vector<TraceRow> rows;
    std::string termination;
    std::vector<std::uint64_t> channel_seeds;  // long-term designs: one seed per sampled draw, in order

    /// True when the objective never rises by more than slack between
    /// consecutive rows.
    bool nonincreasing(double slack) const;
    double max_violation() const;
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

/// (before - after) / |before|, guarded against a zero denominator.
double relative_drop(double before, double after);

}  // namespace cloudradar
