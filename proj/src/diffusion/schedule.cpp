#include "diffusion/schedule.h"

#include <cmath>

#include "core/error.h"

namespace talkie::diffusion {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "cosine") return ScheduleKind::cosine;
    if (s == "linear") return ScheduleKind::linear;
    fail_usage("unknown schedule kind: " + s + " (want cosine or linear)");
}

std::string to_string(ScheduleKind k) { return k == ScheduleKind::cosine ? "cosine" : "linear"; }

void NoiseSchedule::validate() const {
    require_usage(steps >= 1, "schedule: N must be >= 1");
    require_usage(static_cast<int64_t>(alphas_bar.size()) == steps + 1,
                  "schedule: alphas_bar must have N+1 entries");
    require_usage(alphas_bar[0] == 1.0, "schedule: alphas_bar[0] must be 1");
    for (int64_t i = 1; i <= steps; ++i) {
        require_usage(alphas_bar[i] > 0.0 && alphas_bar[i] <= 1.0,
                      "schedule: alphas_bar out of (0,1]");
        require_usage(alphas_bar[i] < alphas_bar[i - 1], "schedule: alphas_bar not strictly decreasing");
    }
    require_usage(alphas_bar[steps] < 0.05, "schedule: terminal alpha_bar must be below 0.05");
}

NoiseSchedule make_schedule(int64_t n, ScheduleKind kind, double beta_start, double beta_end) {
    require_usage(n >= 1, "make_schedule: N must be >= 1");
    NoiseSchedule s;
    s.steps = n;
    s.kind = kind;
    s.alphas_bar.resize(static_cast<size_t>(n) + 1);
    s.alphas_bar[0] = 1.0;
    if (kind == ScheduleKind::cosine) {
        const double eps = 0.008;
        auto f = [&](double t) {
            const double a = (t / static_cast<double>(n) + eps) / (1.0 + eps) * M_PI / 2.0;
            return std::cos(a) * std::cos(a);
        };
        const double f0 = f(0.0);
        double prev = 1.0;
        for (int64_t i = 1; i <= n; ++i) {
            double v = f(static_cast<double>(i)) / f0;
            v = std::max(v, 1e-6);
            if (v >= prev) v = prev * (1.0 - 1e-9);  // keep strictly decreasing after the floor
            s.alphas_bar[i] = v;
            prev = v;
        }
    } else {
        const double scale = 500.0 / static_cast<double>(n);
        if (beta_start < 0) beta_start = 1e-4 * scale;
        if (beta_end < 0) beta_end = std::min(0.35, 0.02 * scale);
        s.beta_start = beta_start;
        s.beta_end = beta_end;
        double prod = 1.0;
        for (int64_t i = 1; i <= n; ++i) {
            const double beta =
                n == 1 ? beta_end
                       : beta_start + (beta_end - beta_start) * static_cast<double>(i - 1) /
                             static_cast<double>(n - 1);
            require_usage(beta > 0.0 && beta < 1.0, "make_schedule: beta out of range");
            prod *= 1.0 - beta;
            s.alphas_bar[i] = prod;
        }
    }
    s.validate();
    return s;
}

std::vector<float> q_sample(const std::vector<float>& x0, int64_t n,
                            const std::vector<float>& noise, const NoiseSchedule& schedule) {
    require_usage(n >= 0 && n <= schedule.steps, "q_sample: n out of range");
    require_usage(x0.size() == noise.size(), "q_sample: X0/noise shape mismatch");
    const double ab = schedule.alpha_bar(n);
    const float sa = static_cast<float>(std::sqrt(ab));
    const float sn = static_cast<float>(std::sqrt(1.0 - ab));
    std::vector<float> out(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sn * noise[i];
    return out;
}

}  // namespace talkie::diffusion
