#pragma once

// Signal model shared by the encoder and every demodulator.
//
// Symbols are indexed from 0. Symbol i occupies the half-open interval
// [i*Ts, (i+1)*Ts); an instant exactly on a boundary belongs to the later
// symbol. Beyond m*Ts the transmitted waveform is zero and only the bias
// drives the integrator.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tedemod {

struct FrameConfig {
    std::size_t m = 100;  // symbols per frame
    double Ts = 1e-3;     // symbol duration, seconds
    double Es = 0.01;     // energy per symbol

    void validate() const;

    double duration() const noexcept { return static_cast<double>(m) * Ts; }
    // |u(t)| inside the frame for the unit-energy rectangular pulse.
    double amplitude() const;
};

class ModulationFrame {
public:
    ModulationFrame(FrameConfig config, std::vector<int> symbols);

    // Equiprobable +-1 symbols drawn from `rng`.
    static ModulationFrame random(const FrameConfig& config, std::mt19937_64& rng);

    const FrameConfig& config() const noexcept { return config_; }
    std::span<const int> symbols() const noexcept { return symbols_; }
    int symbol(std::size_t i) const { return symbols_.at(i); }

private:
    FrameConfig config_;
    std::vector<int> symbols_;
};

// Integrate-and-fire parameters. A spike is emitted whenever the integral of
// u(t) + b since the previous spike reaches C*delta.
struct TemParams {
    double C = 1.0;
    double delta = 0.4;
    double b = 3000.0;
    double c = 0.0;  // bound on |u(t)|

    // Default TEM with c set to the frame's amplitude.
    static TemParams for_frame(const FrameConfig& frame, double C = 1.0, double delta = 0.4,
                               double b = 3000.0);

    // Checks b > c >= amplitude and that every spike interval fits in Ts.
    void validate(const FrameConfig& frame) const;

    double threshold() const noexcept { return C * delta; }
    double min_interval() const noexcept { return C * delta / (b + c); }
    // Upper bound on noiseless spike intervals, and on SMP decision latency.
    double max_interval() const noexcept { return C * delta / (b - c); }
};

struct ChannelParams {
    double sigma2 = 0.0;
    // +infinity for the noiseless channel.
    double es_n0_db = 0.0;

    static ChannelParams from_es_n0(double Es, double es_n0_db);
    static ChannelParams noiseless();

    bool is_noiseless() const noexcept { return sigma2 == 0.0; }
};

// Unit-energy rectangular pulse on [0, Ts].
struct PulseShape {
    double Ts = 1e-3;

    double height() const;
};

// Left edge of symbol i; every boundary comparison goes through here so
// that all modules agree bit-for-bit on where boundaries are.
inline double symbol_start(std::size_t i, double Ts) noexcept
{
    return static_cast<double>(i) * Ts;
}

// Index of the symbol interval containing t >= 0 (may be >= m).
std::size_t symbol_index(double t, double Ts);

double waveform_value(const ModulationFrame& frame, double t);

// Integral of u(t) over [t_a, t_b], segment by segment.
double waveform_integral(const ModulationFrame& frame, double t_a, double t_b);

// Integral of the pulse of symbol i over [t_a, t_b].
double pulse_overlap(std::size_t i, double t_a, double t_b, const PulseShape& shape);

// Q(sqrt(2 Es/N0)); 0 for +infinity.
double theoretical_bpsk_ber(double es_n0_db);

// N0/2 with N0 = Es / 10^(dB/10).
double sigma2_from_es_n0(double Es, double es_n0_db);

inline int hard_sign(double x) noexcept { return x < 0.0 ? -1 : 1; }

} // namespace tedemod
