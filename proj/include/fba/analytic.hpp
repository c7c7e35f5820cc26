#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fba/numeric.hpp"

namespace fba {

struct AnalyticSample {
    double t = 0.0;           // timestamp, seconds
    double envelope = 0.0;    // |analytic|
    double arg_wrapped = 0.0; // four-quadrant argument in (-pi, pi]
};

// Envelope and wrapped argument of the aligned (delayed-real, imag) pair.
inline AnalyticSample make_analytic(double real_delayed, double imag, double t = 0.0) {
    AnalyticSample s;
    s.t = t;
    s.envelope = std::hypot(real_delayed, imag);
    double a = std::atan2(imag, real_delayed);
    if (a <= -kPi) a = kPi; // atan2 may return -pi; keep the (-pi, pi] contract
    s.arg_wrapped = a;
    return s;
}

// A wrap leaving the observation window. `direction` is +1 for the normal
// backward wrap (argument fell through -pi), -1 for the anomalous forward
// one. `correct_sign` tells the consumer which sign to apply to the
// accumulator correction terms M_lambda.
struct WrapClearEvent {
    std::size_t detected_at = 0; // global sample index of the wrap
    int direction = +1;
    double correct_sign = 1.0;
};

// Streaming phase-unwrap bookkeeping over a sliding window of length L.
// Stores wrapped values; unwrapping is virtual through the wrap count W, so
// the representation stays bounded. Wrap-clear events fire exactly L pushes
// after the corresponding detection, before the new sample is recorded.
class UnwrapState {
  public:
    explicit UnwrapState(std::size_t window_len)
        : window_(window_len), wrapped_(window_len, 0.0) {
        if (window_len < 2) throw std::invalid_argument("UnwrapState: window must be >= 2");
    }

    struct PushResult {
        double unwrapped = 0.0;
        bool wrap_detected = false;
        int wrap_direction = 0;           // +1 backward (normal), -1 forward (anomalous)
        // Value the departing sample carries out of a full window: its
        // wrapped value plus its own wrap's bump. All other bumps have been
        // stripped by earlier wrap-clear corrections. Feed this as the
        // accumulator's outgoing term, then apply the cleared correction.
        bool outgoing_valid = false;
        double outgoing = 0.0;
        std::optional<WrapClearEvent> cleared;
    };

    PushResult push(double wrapped) {
        PushResult res;
        if (count_ >= window_) {
            res.outgoing_valid = true;
            res.outgoing = wrapped_[count_ % window_];
        }
        // Clear first: a wrap recorded L pushes ago exits the window now, so
        // the incoming sample is unwrapped against the decremented count.
        if (!wraps_.empty() && count_ >= window_ && wraps_.front().index + window_ == count_) {
            const auto& w = wraps_.front();
            WrapClearEvent ev;
            ev.detected_at = w.index;
            ev.direction = w.direction;
            ev.correct_sign = static_cast<double>(w.direction);
            wrap_count_ -= w.direction;
            cleared_total_ += w.direction;
            wraps_.pop_front();
            res.cleared = ev;
            res.outgoing += kTwoPi * static_cast<double>(w.direction);
        }
        if (count_ > 0) {
            double diff = wrapped - prev_wrapped_;
            if (diff <= -kPi) {
                wrap_count_ += 1;
                wraps_.push_back({count_, +1});
                res.wrap_detected = true;
                res.wrap_direction = +1;
            } else if (diff >= kPi) {
                // Negative-frequency wrap; handled symmetrically, flagged.
                wrap_count_ -= 1;
                wraps_.push_back({count_, -1});
                res.wrap_detected = true;
                res.wrap_direction = -1;
                ++anomalous_wraps_;
            }
        }
        prev_wrapped_ = wrapped;
        wrapped_[count_ % window_] = wrapped;
        ++count_;
        res.unwrapped = wrapped + kTwoPi * static_cast<double>(wrap_count_);
        return res;
    }

    long wrap_count() const { return wrap_count_; }
    std::size_t pushes() const { return count_; }
    std::size_t window() const { return window_; }
    std::size_t anomalous_wraps() const { return anomalous_wraps_; }
    // Cumulative cleared wraps; value + 2*pi*cleared_total() is continuous
    // across the whole stream, which cross-report comparisons rely on.
    long cleared_total() const { return cleared_total_; }
    bool full() const { return count_ >= window_; }

    // Consistently unwrapped window, oldest first: wrapped value plus 2*pi
    // times the number of still-recorded wraps at or before each position.
    // Matches what the recursive accumulators represent after corrections.
    void materialize(std::vector<double>& out) const {
        if (!full()) throw std::runtime_error("UnwrapState: window not yet full");
        out.resize(window_);
        std::size_t start = count_ - window_;
        std::size_t wi = 0;
        long bumps = 0;
        for (std::size_t l = 0; l < window_; ++l) {
            std::size_t global = start + l;
            while (wi < wraps_.size() && wraps_[wi].index <= global) {
                bumps += wraps_[wi].direction;
                ++wi;
            }
            out[l] = wrapped_[global % window_] + kTwoPi * static_cast<double>(bumps);
        }
    }

  private:
    struct WrapMark {
        std::size_t index;
        int direction;
    };
    std::size_t window_;
    std::vector<double> wrapped_;
    std::deque<WrapMark> wraps_;
    long wrap_count_ = 0;
    long cleared_total_ = 0;
    std::size_t anomalous_wraps_ = 0;
    std::size_t count_ = 0;
    double prev_wrapped_ = 0.0;
};

} // namespace fba
