#pragma once

#include <deque>
#include <vector>

#include "pip/tensor.hpp"

namespace pip {

// Output-variance early stopping. The detector watches the stream of
// restored images and tracks a scalar variance statistic: EMV keeps an
// exponential moving mean/variance of the image sequence, WMV the variance
// over a sliding window. The stopping point is the iteration of the first
// variance minimum that stays unbeaten for `patience` consecutive checks;
// checks happen every `stride` observed iterations.
class VarianceStopDetector {
   public:
    static VarianceStopDetector emv(float decay, int patience, int stride);
    static VarianceStopDetector wmv(int window, int patience, int stride);

    // Feed the restored image for `iteration`. Returns true when this call
    // established a new variance minimum (callers snapshot outputs then).
    bool observe(int iteration, const std::vector<float>& image);

    bool triggered() const { return triggered_; }
    // Iteration of the running variance minimum; -1 before any check.
    int stop_iteration() const { return best_iteration_; }
    // Iteration at which the minimum was confirmed; -1 if not (yet).
    int decided_at() const { return decided_at_; }
    double current_variance() const { return last_variance_; }

   private:
    enum class Kind { Emv, Wmv };
    explicit VarianceStopDetector(Kind k) : kind_(k) {}

    bool check_variance(int iteration, double variance);

    Kind kind_;
    float decay_ = 0.99f;
    int window_ = 50;
    int patience_ = 100;
    int stride_ = 5;

    int seen_ = 0;
    std::vector<double> ema_mean_;
    double ema_var_ = 0.0;
    bool ema_init_ = false;
    std::deque<std::vector<float>> ring_;
    std::vector<double> win_sum_, win_sq_;

    double best_variance_ = 0.0;
    int best_iteration_ = -1;
    int checks_since_best_ = 0;
    bool has_best_ = false;
    bool triggered_ = false;
    int decided_at_ = -1;
    double last_variance_ = 0.0;
};

// Offline forms used in tests and post-hoc analysis: feed a whole output
// stream, get the chosen stop iteration (end of stream finalizes an
// unconfirmed minimum). Iterations are numbered 1..outputs.size().
int stop_emv(const std::vector<Tensor>& outputs, float decay, int patience, int stride = 5);
int stop_wmv(const std::vector<Tensor>& outputs, int window, int patience, int stride = 5);

}  // namespace pip
