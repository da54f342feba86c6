#include "tedemod/model.hpp"

#include "tedemod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tedemod {

void FrameConfig::validate() const
{
    if (m < 1) throw validation_error("frame: m must be at least 1");
    if (!(Ts > 0.0) || !std::isfinite(Ts)) throw validation_error("frame: Ts must be positive");
    if (!(Es >= 0.0) || !std::isfinite(Es)) throw validation_error("frame: Es must be non-negative");
}

double FrameConfig::amplitude() const
{
    return std::sqrt(Es / Ts);
}

ModulationFrame::ModulationFrame(FrameConfig config, std::vector<int> symbols)
    : config_(config), symbols_(std::move(symbols))
{
    config_.validate();
    if (symbols_.size() != config_.m)
        throw validation_error("frame: expected " + std::to_string(config_.m) + " symbols, got " +
                               std::to_string(symbols_.size()));
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (symbols_[i] != 1 && symbols_[i] != -1)
            throw validation_error("frame: symbol " + std::to_string(i) + " is not +1 or -1");
}

ModulationFrame ModulationFrame::random(const FrameConfig& config, std::mt19937_64& rng)
{
    std::vector<int> symbols(config.m);
    // One raw draw per symbol; the top bit is the sign.
    for (auto& a : symbols) a = (rng() >> 63) ? 1 : -1;
    return ModulationFrame(config, std::move(symbols));
}

TemParams TemParams::for_frame(const FrameConfig& frame, double C, double delta, double b)
{
    TemParams tem{C, delta, b, frame.amplitude()};
    tem.validate(frame);
    return tem;
}

void TemParams::validate(const FrameConfig& frame) const
{
    if (!(C > 0.0)) throw validation_error("tem: C must be positive");
    if (!(delta > 0.0)) throw validation_error("tem: delta must be positive");
    if (!(b > 0.0)) throw validation_error("tem: b must be positive");
    if (!(c >= 0.0)) throw validation_error("tem: c must be non-negative");
    if (!(b > c)) throw validation_error("tem: bias b must exceed the amplitude bound c");
    const double amp = frame.amplitude();
    if (c < amp * (1.0 - 1e-12))
        throw validation_error("tem: amplitude bound c is below the signal amplitude sqrt(Es/Ts)");
    if (max_interval() > frame.Ts)
        throw validation_error("tem: C*delta/(b-c) exceeds Ts; a symbol could go unsampled");
}

ChannelParams ChannelParams::from_es_n0(double Es, double es_n0_db)
{
    return ChannelParams{sigma2_from_es_n0(Es, es_n0_db), es_n0_db};
}

ChannelParams ChannelParams::noiseless()
{
    return ChannelParams{0.0, std::numeric_limits<double>::infinity()};
}

double PulseShape::height() const
{
    return 1.0 / std::sqrt(Ts);
}

std::size_t symbol_index(double t, double Ts)
{
    if (!(t >= 0.0)) throw validation_error("symbol_index: negative time");
    auto i = static_cast<std::size_t>(std::floor(t / Ts));
    // floor(t/Ts) can be off by one next to a boundary.
    while (i > 0 && symbol_start(i, Ts) > t) --i;
    while (symbol_start(i + 1, Ts) <= t) ++i;
    return i;
}

double waveform_value(const ModulationFrame& frame, double t)
{
    if (!(t >= 0.0)) throw validation_error("waveform_value: t must be non-negative");
    const auto& cfg = frame.config();
    const std::size_t i = symbol_index(t, cfg.Ts);
    if (i >= cfg.m) return 0.0;
    return cfg.amplitude() * frame.symbol(i);
}

double waveform_integral(const ModulationFrame& frame, double t_a, double t_b)
{
    if (!(t_a >= 0.0) || t_a > t_b) throw validation_error("waveform_integral: need 0 <= t_a <= t_b");
    const auto& cfg = frame.config();
    double sum = 0.0;
    for (std::size_t i = symbol_index(t_a, cfg.Ts); i < cfg.m && symbol_start(i, cfg.Ts) < t_b; ++i) {
        const double lo = std::max(t_a, symbol_start(i, cfg.Ts));
        const double hi = std::min(t_b, symbol_start(i + 1, cfg.Ts));
        if (hi > lo) sum += frame.symbol(i) * (hi - lo);
    }
    return cfg.amplitude() * sum;
}

double pulse_overlap(std::size_t i, double t_a, double t_b, const PulseShape& shape)
{
    if (t_a > t_b) throw validation_error("pulse_overlap: t_a > t_b");
    const double lo = std::max(t_a, symbol_start(i, shape.Ts));
    const double hi = std::min(t_b, symbol_start(i + 1, shape.Ts));
    if (hi <= lo) return 0.0;
    return (hi - lo) * shape.height();
}

double theoretical_bpsk_ber(double es_n0_db)
{
    if (std::isnan(es_n0_db)) throw validation_error("theoretical_bpsk_ber: NaN");
    if (es_n0_db == std::numeric_limits<double>::infinity()) return 0.0;
    const double ratio = std::pow(10.0, es_n0_db / 10.0);
    // Q(x) = erfc(x/sqrt2)/2 with x = sqrt(2 ratio).
    return 0.5 * std::erfc(std::sqrt(ratio));
}

double sigma2_from_es_n0(double Es, double es_n0_db)
{
    if (!(Es > 0.0)) throw validation_error("sigma2_from_es_n0: Es must be positive");
    if (!std::isfinite(es_n0_db)) throw validation_error("sigma2_from_es_n0: Es/N0 must be finite");
    return Es / (2.0 * std::pow(10.0, es_n0_db / 10.0));
}

} // namespace tedemod
