#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace talkie::diffusion {

enum class ScheduleKind { cosine, linear };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

// Forward-process cumulative products. alphas_bar has N+1 entries with
// alphas_bar[0] == 1, strictly decreasing, and a tail below 0.05.
struct NoiseSchedule {
    int64_t steps = 0;  // N
    ScheduleKind kind = ScheduleKind::cosine;
    double beta_start = -1.0, beta_end = -1.0;  // linear only
    std::vector<double> alphas_bar;             // N+1

    void validate() const;
    double alpha_bar(int64_t n) const { return alphas_bar[static_cast<size_t>(n)]; }
};

// Linear endpoints default to 1e-4 * (500/N) .. 0.02 * (500/N) so the tail
// signal level stays comparable across step counts.
NoiseSchedule make_schedule(int64_t n, ScheduleKind kind, double beta_start = -1.0,
                            double beta_end = -1.0);

// Xn = sqrt(alphas_bar[n]) * X0 + sqrt(1 - alphas_bar[n]) * noise.
std::vector<float> q_sample(const std::vector<float>& x0, int64_t n,
                            const std::vector<float>& noise, const NoiseSchedule& schedule);

}  // namespace talkie::diffusion
