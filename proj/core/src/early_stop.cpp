#include "pip/early_stop.hpp"

namespace pip {

VarianceStopDetector VarianceStopDetector::emv(float decay, int patience, int stride) {
    check<ConfigError>(decay > 0.0f && decay < 1.0f, "emv decay must be in (0,1)");
    check<ConfigError>(patience >= 1 && stride >= 1, "emv patience/stride must be >= 1");
    VarianceStopDetector d(Kind::Emv);
    d.decay_ = decay;
    d.patience_ = patience;
    d.stride_ = stride;
    return d;
}

VarianceStopDetector VarianceStopDetector::wmv(int window, int patience, int stride) {
    check<ConfigError>(window >= 2, "wmv window must be >= 2");
    check<ConfigError>(patience >= 1 && stride >= 1, "wmv patience/stride must be >= 1");
    VarianceStopDetector d(Kind::Wmv);
    d.window_ = window;
    d.patience_ = patience;
    d.stride_ = stride;
    return d;
}

bool VarianceStopDetector::observe(int iteration, const std::vector<float>& image) {
    if (triggered_) return false;
    ++seen_;
    if ((seen_ - 1) % stride_ != 0) return false;

    if (kind_ == Kind::Emv) {
        if (!ema_init_) {
            ema_mean_.assign(image.begin(), image.end());
            ema_var_ = 0.0;
            ema_init_ = true;
            return false;  // variance undefined from a single sample
        }
        const double a = 1.0 - static_cast<double>(decay_);
        double dev = 0.0;
        for (size_t i = 0; i < image.size(); ++i) {
            const double x = image[i];
            const double d0 = x - ema_mean_[i];
            ema_mean_[i] += a * d0;
            dev += d0 * d0;
        }
        dev /= static_cast<double>(image.size());
        ema_var_ = (1.0 - a) * ema_var_ + a * dev;
        return check_variance(iteration, ema_var_);
    }

    // WMV: running per-pixel sum and squared sum over the window.
    if (win_sum_.empty()) {
        win_sum_.assign(image.size(), 0.0);
        win_sq_.assign(image.size(), 0.0);
    }
    ring_.emplace_back(image);
    for (size_t i = 0; i < image.size(); ++i) {
        win_sum_[i] += image[i];
        win_sq_[i] += static_cast<double>(image[i]) * image[i];
    }
    if (static_cast<int>(ring_.size()) > window_) {
        const std::vector<float>& old = ring_.front();
        for (size_t i = 0; i < old.size(); ++i) {
            win_sum_[i] -= old[i];
            win_sq_[i] -= static_cast<double>(old[i]) * old[i];
        }
        ring_.pop_front();
    }
    if (static_cast<int>(ring_.size()) < window_) return false;
    const double inv_w = 1.0 / static_cast<double>(window_);
    double var = 0.0;
    for (size_t i = 0; i < win_sum_.size(); ++i) {
        const double mean = win_sum_[i] * inv_w;
        var += std::max(0.0, win_sq_[i] * inv_w - mean * mean);
    }
    var /= static_cast<double>(win_sum_.size());
    return check_variance(iteration, var);
}

bool VarianceStopDetector::check_variance(int iteration, double variance) {
    last_variance_ = variance;
    if (!has_best_ || variance < best_variance_) {
        has_best_ = true;
        best_variance_ = variance;
        best_iteration_ = iteration;
        checks_since_best_ = 0;
        return true;
    }
    if (++checks_since_best_ >= patience_) {
        triggered_ = true;
        decided_at_ = iteration;
    }
    return false;
}

namespace {

int run_offline(VarianceStopDetector d, const std::vector<Tensor>& outputs) {
    for (size_t i = 0; i < outputs.size(); ++i) {
        d.observe(static_cast<int>(i) + 1, outputs[i].data());
        if (d.triggered()) break;
    }
    return d.stop_iteration() >= 0 ? d.stop_iteration() : static_cast<int>(outputs.size());
}

}  // namespace

int stop_emv(const std::vector<Tensor>& outputs, float decay, int patience, int stride) {
    return run_offline(VarianceStopDetector::emv(decay, patience, stride), outputs);
}

int stop_wmv(const std::vector<Tensor>& outputs, int window, int patience, int stride) {
    return run_offline(VarianceStopDetector::wmv(window, patience, stride), outputs);
}

}  // namespace pip
