#pragma once

// Integrate-and-fire time encoding of a BPSK frame.
//
// The integrator starts from reset at t = 0 and accumulates u(t) + n(t) + b.
// Each time the accumulated value reaches C*delta a spike is recorded and the
// integrator resets. Encoding stops at the first spike at or after m*Ts so
// that every symbol, the last one included, is closed by a spike.

#include "tedemod/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tedemod {

class SpikeTrain {
public:
    SpikeTrain() = default;
    // Times must be strictly increasing and positive (the origin t_0 = 0 is implicit).
    explicit SpikeTrain(std::vector<double> times);

    std::span<const double> times() const noexcept { return times_; }
    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }

    // t_k for k in [0, size]; t(0) is the origin.
    double t(std::size_t k) const { return k == 0 ? 0.0 : times_.at(k - 1); }
    // T_k = t_k - t_{k-1} for the k-th spike, 1-based.
    double interval(std::size_t k) const { return t(k) - t(k - 1); }

private:
    std::vector<double> times_;
};

// q_k = C*delta - b*T_k, one entry per spike.
struct Measurements {
    std::vector<double> q;
    std::vector<double> T;

    std::size_t size() const noexcept { return q.size(); }
};

struct EncoderConfig {
    int oversample = 64;        // grid steps per C*delta/(b+c)
    double horizon_guard = 10;  // extra time past m*Ts, in units of C*delta/(b-c)

    void validate() const;
};

SpikeTrain encode_exact(const ModulationFrame& frame, const TemParams& tem);

// White noise is realised as independent N(0, sigma2*dt) increments on a
// uniform grid; steps are split at symbol boundaries so the drift is
// constant within every sub-step, and crossings are located by linear
// interpolation of the integrator inside the crossing sub-step.
SpikeTrain encode_stochastic(const ModulationFrame& frame, const TemParams& tem,
                             const ChannelParams& chan, const EncoderConfig& cfg,
                             std::uint64_t rng_seed);

Measurements measurements_from_spikes(const SpikeTrain& train, const TemParams& tem);

// Spike file: a header line "# C=<v> delta=<v> b=<v> Ts=<v> m=<v>" followed
// by one spike time per line.
struct SpikeFile {
    TemParams tem;  // c is not stored; readers derive it from the frame
    double Ts = 0.0;
    std::size_t m = 0;
    SpikeTrain train;
};

void write_spike_file(std::ostream& out, const SpikeFile& file);
void write_spike_file(const std::string& path, const SpikeFile& file);
SpikeFile read_spike_file(std::istream& in);
SpikeFile read_spike_file(const std::string& path);

} // namespace tedemod
