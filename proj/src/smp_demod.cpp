#include "tedemod/smp_demod.hpp"

#include "tedemod/errors.hpp"
#include "tedemod/format.hpp"
#include "tedemod/mp_demod.hpp"

#include <cmath>
#include <string>

namespace tedemod {

void SmpConfig::validate() const
{
    frame.validate();
    tem.validate(frame);
    if (!(chan.sigma2 >= 0.0) || !std::isfinite(chan.sigma2))
        throw validation_error("smp: sigma2 must be finite and non-negative");
}

namespace {

struct Straddle {
    double g_left;   // overlap with the earlier symbol, scaled by 1/sqrt(Ts)
    double g_right;  // overlap with the later symbol
    double T;
};

Straddle split_at(double t_prev, double t_cur, double boundary, double Ts)
{
    const double h = 1.0 / std::sqrt(Ts);
    return {(boundary - t_prev) * h, (t_cur - boundary) * h, t_cur - t_prev};
}

} // namespace

double forward_info(double q, double t_prev, double t_cur, std::size_t i, int prev_decision,
                    const SmpConfig& cfg)
{
    const double boundary = symbol_start(i, cfg.frame.Ts);
    if (i == 0 || !(t_prev < boundary && boundary <= t_cur) || t_cur - t_prev > cfg.frame.Ts)
        throw validation_error("forward_info: interval [" + format_double(t_prev) + ", " +
                               format_double(t_cur) + "] does not straddle the start of symbol " +
                               std::to_string(i));
    if (prev_decision != 1 && prev_decision != -1)
        throw validation_error("forward_info: previous decision must be +1 or -1");
    const auto s = split_at(t_prev, t_cur, boundary, cfg.frame.Ts);
    const double Es = cfg.frame.Es;
    const double sigma2 = cfg.chan.sigma2;
    return straddle_loglik(q, s.T, s.g_right, s.g_left, 1, prev_decision, Es, sigma2) -
           straddle_loglik(q, s.T, s.g_right, s.g_left, -1, prev_decision, Es, sigma2);
}

double backward_info(double q, double t_prev, double t_cur, std::size_t i, const SmpConfig& cfg)
{
    const double Ts = cfg.frame.Ts;
    const double boundary = symbol_start(i + 1, Ts);
    const bool last = i + 1 == cfg.frame.m;
    if (i >= cfg.frame.m || !(t_prev < t_cur && t_prev <= boundary && boundary <= t_cur) ||
        (!last && t_cur >= symbol_start(i + 2, Ts)))
        throw validation_error("backward_info: interval [" + format_double(t_prev) + ", " +
                               format_double(t_cur) + "] does not straddle the end of symbol " +
                               std::to_string(i));
    const auto s = split_at(t_prev, t_cur, boundary, Ts);
    const double Es = cfg.frame.Es;
    const double sigma2 = cfg.chan.sigma2;
    auto l = [&](int a, int b) { return straddle_loglik(q, s.T, s.g_left, s.g_right, a, b, Es, sigma2); };
    if (last) {
        const auto v = [&](int a) { return straddle_loglik(q, s.T, s.g_left, 0.0, a, 0, Es, sigma2); };
        return v(1) - v(-1);
    }
    return log_sum_exp(l(1, 1), l(1, -1)) - log_sum_exp(l(-1, 1), l(-1, -1));
}

SmpDemodulator::SmpDemodulator(const SmpConfig& cfg, OpCounter* counter)
    : cfg_(cfg), counter_(counter)
{
    cfg_.validate();
    hard_ = cfg_.chan.is_noiseless();
    Ls_ = hard_ ? 1.0 : channel_reliability(cfg_.frame.Es, cfg_.frame.Ts, cfg_.chan.sigma2);
    state_.decisions.reserve(cfg_.frame.m);
    state_.delays.reserve(cfg_.frame.m);
}

DecisionEvent SmpDemodulator::decide(double t, bool flushed)
{
    DecisionEvent ev;
    ev.index = state_.i;
    ev.value = hard_sign(state_.lambda);
    ev.decision_time = t;
    ev.latency = t - symbol_start(state_.i + 1, cfg_.frame.Ts);
    ev.flushed = flushed;
    state_.decisions.push_back(ev.value);
    state_.delays.push_back(ev.latency);
    state_.flushed.push_back(flushed);
    state_.prev_decision = ev.value;
    ++state_.i;
    state_.lambda = 0.0;
    return ev;
}

std::optional<DecisionEvent> SmpDemodulator::on_spike(double t)
{
    if (!(t > state_.last_t) || !std::isfinite(t))
        throw stream_order_error("smp: spike at " + format_double(t) + " s is not after the previous one at " +
                                 format_double(state_.last_t) + " s");
    const double t_prev = state_.last_t;
    state_.last_t = t;
    ++state_.k;
    if (complete()) return std::nullopt;

    const double q = cfg_.tem.threshold() - cfg_.tem.b * (t - t_prev);
    const double boundary = symbol_start(state_.i + 1, cfg_.frame.Ts);
    if (t < boundary) {
        state_.lambda += Ls_ * q;
        tally(counter_, 4);
        return std::nullopt;
    }

    if (!hard_) state_.lambda += backward_info(q, t_prev, t, state_.i, cfg_);
    auto ev = decide(t, false);
    if (!complete() && !hard_)
        state_.lambda = forward_info(q, t_prev, t, state_.i, ev.value, cfg_);
    // q, two likelihood pairs, two log-sum-exps and the slide.
    tally(counter_, 40);
    return ev;
}

std::vector<DecisionEvent> SmpDemodulator::flush()
{
    std::vector<DecisionEvent> out;
    while (!complete()) out.push_back(decide(state_.last_t, true));
    return out;
}

} // namespace tedemod
