#pragma once

// Sliding message passing: a per-spike streaming demodulator.
//
// The receiver keeps one running LLR for the symbol currently being
// demodulated. Spikes inside that symbol add L_s*q. The first spike at or
// after the symbol's right boundary contributes the backward message of the
// straddling interval, finalises the decision, and seeds the next symbol's
// LLR with the forward message of the same interval, conditioned on the hard
// decision just made.

#include "tedemod/model.hpp"
#include "tedemod/op_counter.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace tedemod {

struct SmpConfig {
    TemParams tem;
    FrameConfig frame;
    ChannelParams chan;

    void validate() const;
};

struct DecisionEvent {
    std::size_t index = 0;  // 0-based symbol index
    int value = 1;
    double decision_time = 0.0;
    double latency = 0.0;   // decision_time - (index + 1) * Ts
    bool flushed = false;   // decided at end of stream, not by a boundary spike
};

struct SmpState {
    std::size_t i = 0;  // symbol being demodulated
    double lambda = 0.0;
    std::optional<int> prev_decision;
    std::size_t k = 0;  // spikes consumed
    double last_t = 0.0;
    std::vector<int> decisions;
    std::vector<double> delays;
    std::vector<bool> flushed;
};

class SmpDemodulator {
public:
    // Throws validation_error for an invalid configuration (e.g. b <= c).
    explicit SmpDemodulator(const SmpConfig& cfg, OpCounter* counter = nullptr);

    // Consume one spike at time t (seconds). Spikes after the stream is
    // complete are counted and ignored.
    std::optional<DecisionEvent> on_spike(double t);

    // Decide any symbols still pending at end of stream: the current one
    // from its accumulated LLR, any later ones with no evidence as +1.
    std::vector<DecisionEvent> flush();

    const SmpState& state() const noexcept { return state_; }
    const SmpConfig& config() const noexcept { return cfg_; }
    bool complete() const noexcept { return state_.i >= cfg_.frame.m; }
    // sigma2 == 0: only the sign of the raw intrinsic sum is tracked.
    bool hard_decision() const noexcept { return hard_; }

private:
    DecisionEvent decide(double t, bool flushed);

    SmpConfig cfg_;
    OpCounter* counter_;
    double Ls_;
    bool hard_;
    SmpState state_;
};

// Forward message into symbol i from the interval [t_prev, t_cur] that
// straddles its left boundary i*Ts, conditioned on a_{i-1} = prev_decision.
double forward_info(double q, double t_prev, double t_cur, std::size_t i, int prev_decision,
                    const SmpConfig& cfg);

// Backward message into symbol i from the interval straddling (i+1)*Ts,
// marginalising a_{i+1} under equal priors. For the last symbol the
// neighbour past the frame has zero amplitude.
double backward_info(double q, double t_prev, double t_cur, std::size_t i, const SmpConfig& cfg);

} // namespace tedemod
