#pragma once

// Monte Carlo BER sweeps, round-trip checks, latency and complexity
// benchmarks, and results serialisation.

#include "tedemod/encoder.hpp"
#include "tedemod/model.hpp"
#include "tedemod/pinv_demod.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tedemod {

enum class Demod { smp, mp, pinv_batch, pinv_symbol };

const char* demod_name(Demod d) noexcept;
Demod parse_demod(std::string_view name);
std::vector<Demod> parse_demod_list(std::string_view list);

struct SweepConfig {
    std::vector<double> es_n0_grid;  // dB; +inf is the noiseless channel
    std::size_t frames = 1000;
    std::vector<Demod> demods{Demod::smp, Demod::mp, Demod::pinv_batch, Demod::pinv_symbol};
    // Sweep counts for MP; 0 stands for m-1 (full convergence).
    std::vector<std::size_t> mp_iters{1};
    std::uint64_t master_seed = 1;
    FrameConfig frame;
    TemParams tem{1.0, 0.4, 3000.0, 0.0};
    bool tem_c_auto = true;  // c = sqrt(Es/Ts)
    EncoderConfig encoder;
    unsigned workers = 1;
    // Per-spike SMP wall-clock timing. Off by default because it makes the
    // output nondeterministic.
    bool timing = false;

    SweepConfig();

    TemParams resolved_tem() const;
    std::size_t resolved_iters(std::size_t iters) const;
    void validate() const;
};

struct BerRecord {
    double es_n0_db = 0.0;
    std::string demod;
    std::size_t iterations = 0;
    std::uint64_t symbols = 0;
    std::uint64_t errors = 0;
    double ber = 0.0;
    double mean_latency_s = 0.0;
    double max_latency_s = 0.0;
    double mean_spike_compute_s = 0.0;
    std::uint64_t seed = 0;
    // Not serialised: frames dropped because a symbol had no spike support.
    std::uint64_t skipped_frames = 0;

    friend bool operator==(const BerRecord&, const BerRecord&) = default;
};

// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;
// Seed of frame `frame` at grid point `point`:
//   mix64(mix64(mix64(master) ^ point) ^ frame)
std::uint64_t frame_seed(std::uint64_t master, std::uint64_t point, std::uint64_t frame) noexcept;

std::vector<BerRecord> run_ber_sweep(const SweepConfig& cfg);

struct RoundtripReport {
    std::uint64_t seed = 0;
    std::size_t m = 0;
    std::size_t spikes = 0;
    double q_identity_max_err = 0.0;  // max |int u dt - (C delta - b T_k)|
    double g_residual_max = 0.0;      // max |q_k - sqrt(Es)(G A)_k|
    // Per demodulator, the symbol indices it got wrong.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> mismatches;

    bool passed() const;
};

// Noiseless encode of a random frame, then every demodulator. LLR-based
// demodulators use the reliability of a nominal 10 dB channel.
RoundtripReport run_roundtrip(std::uint64_t seed, const SweepConfig& cfg);

struct LatencyReport {
    double bound = 0.0;  // C delta / (b - c)
    std::uint64_t decisions = 0;
    double max_latency = 0.0;
    double mean_latency = 0.0;
    double min_latency = 0.0;
    std::uint64_t violations = 0;
    std::uint64_t flushed = 0;
    std::vector<std::uint64_t> histogram;  // 20 equal bins over [0, bound], last bin catches overflow
    // Informational noisy run (only when a finite Es/N0 is requested).
    bool has_noisy = false;
    double noisy_es_n0_db = 0.0;
    double noisy_max_latency = 0.0;
    std::uint64_t noisy_violations = 0;
    std::uint64_t noisy_decisions = 0;
};

// Uses cfg.frames frames; the noisy pass runs at the first finite grid point.
LatencyReport run_latency_bench(const SweepConfig& cfg);

struct ComplexitySeries {
    std::string demod;
    std::vector<std::uint64_t> tallies;
    std::vector<std::size_t> spikes;
    double slope = 0.0;  // least-squares slope of log(tally) vs log(m)
};

struct ComplexityReport {
    std::vector<std::size_t> m_list;
    std::vector<ComplexitySeries> series;

    const ComplexitySeries& find(std::string_view demod) const;
};

ComplexityReport run_complexity_bench(const std::vector<std::size_t>& m_list, const SweepConfig& cfg);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

enum class ResultFormat { csv, json };

ResultFormat parse_format(std::string_view name);

void write_results(std::ostream& out, const std::vector<BerRecord>& records, ResultFormat format);
std::vector<BerRecord> read_results(std::istream& in, ResultFormat format);
void io_results(const std::vector<BerRecord>& records, const std::string& path, ResultFormat format);

// Flat "key = value" configuration with section prefixes, e.g. "tem.b = 3000".
void apply_config(std::istream& in, SweepConfig& cfg);
void apply_config_file(const std::string& path, SweepConfig& cfg);

// "a:step:b" (inclusive), a comma list, or a single value; "inf" allowed.
std::vector<double> parse_grid(std::string_view text);

// Comma list of MP sweep counts; "full" maps to 0 (m-1).
std::vector<std::size_t> parse_iters(std::string_view text);

} // namespace tedemod
