#include "tedemod/encoder.hpp"

#include "tedemod/errors.hpp"
#include "tedemod/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace tedemod {

SpikeTrain::SpikeTrain(std::vector<double> times) : times_(std::move(times))
{
    double prev = 0.0;
    for (std::size_t k = 0; k < times_.size(); ++k) {
        if (!std::isfinite(times_[k]) || !(times_[k] > prev))
            throw validation_error("spike train: time " + std::to_string(k + 1) +
                                   " is not strictly after its predecessor");
        prev = times_[k];
    }
}

void EncoderConfig::validate() const
{
    if (oversample < 4) throw validation_error("encoder: oversample must be at least 4");
    if (!(horizon_guard > 0.0)) throw validation_error("encoder: horizon_guard must be positive");
}

namespace {

// Drift u + b over symbol segment `seg` (segments >= m are past the frame).
double segment_slope(const ModulationFrame& frame, const TemParams& tem, std::size_t seg)
{
    const auto& cfg = frame.config();
    const double u = seg < cfg.m ? cfg.amplitude() * frame.symbol(seg) : 0.0;
    return u + tem.b;
}

double segment_end(const FrameConfig& cfg, std::size_t seg)
{
    return seg < cfg.m ? symbol_start(seg + 1, cfg.Ts) : std::numeric_limits<double>::infinity();
}

void check_inputs(const ModulationFrame& frame, const TemParams& tem)
{
    tem.validate(frame.config());
}

} // namespace

SpikeTrain encode_exact(const ModulationFrame& frame, const TemParams& tem)
{
    check_inputs(frame, tem);
    const auto& cfg = frame.config();
    const double threshold = tem.threshold();
    const double frame_end = cfg.duration();

    std::vector<double> spikes;
    spikes.reserve(static_cast<std::size_t>(frame_end / tem.min_interval()) + 2);

    double t = 0.0;
    double y = 0.0;
    std::size_t seg = 0;
    for (;;) {
        const double slope = segment_slope(frame, tem, seg);
        const double end = segment_end(cfg, seg);
        const double needed = std::max(threshold - y, 0.0);
        const double t_cross = t + needed / slope;
        if (t_cross <= end) {
            spikes.push_back(t_cross);
            y = 0.0;
            t = t_cross;
            if (t_cross >= frame_end) break;
        } else {
            y += slope * (end - t);
            t = end;
            ++seg;
        }
    }
    return SpikeTrain(std::move(spikes));
}

SpikeTrain encode_stochastic(const ModulationFrame& frame, const TemParams& tem,
                             const ChannelParams& chan, const EncoderConfig& cfg,
                             std::uint64_t rng_seed)
{
    check_inputs(frame, tem);
    cfg.validate();
    if (!(chan.sigma2 >= 0.0) || !std::isfinite(chan.sigma2))
        throw validation_error("encoder: sigma2 must be finite and non-negative");

    const auto& fc = frame.config();
    const double threshold = tem.threshold();
    const double frame_end = fc.duration();
    const double horizon = frame_end + cfg.horizon_guard * tem.max_interval();
    const double dt = tem.min_interval() / cfg.oversample;
    const double sigma = std::sqrt(chan.sigma2);
    const double sigma_sqrt_dt = sigma * std::sqrt(dt);

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> spikes;
    spikes.reserve(static_cast<std::size_t>(frame_end / tem.min_interval()) + 2);

    double y = 0.0;
    std::size_t seg = 0;
    double seg_end = segment_end(fc, 0);
    double slope = segment_slope(frame, tem, 0);

    for (std::uint64_t n = 0;; ++n) {
        const double t0 = static_cast<double>(n) * dt;
        const double t1 = static_cast<double>(n + 1) * dt;
        if (t0 > horizon)
            throw encoding_stall_error("encoder: no spike at or after the frame end within " +
                                       format_double(horizon) + " s; noise too large for bias b");

        double a = t0;
        while (a < t1) {
            while (seg_end <= a) {
                ++seg;
                seg_end = segment_end(fc, seg);
                slope = segment_slope(frame, tem, seg);
            }
            const double bnd = std::min(t1, seg_end);
            const double len = bnd - a;
            double inc = slope * len;
            if (sigma > 0.0)
                inc += (bnd == t1 && a == t0 ? sigma_sqrt_dt : sigma * std::sqrt(len)) * normal(rng);

            // The integrator is linear inside the sub-step; under heavy noise
            // it may cross more than once.
            double f0 = 0.0;
            while (y + inc * (1.0 - f0) >= threshold) {
                const double f = f0 + (threshold - y) / inc;
                double ts = a + f * len;
                if (!spikes.empty() && ts <= spikes.back())
                    ts = std::nextafter(spikes.back(), std::numeric_limits<double>::infinity());
                spikes.push_back(ts);
                if (ts >= frame_end) return SpikeTrain(std::move(spikes));
                y = 0.0;
                f0 = f;
            }
            y += inc * (1.0 - f0);
            a = bnd;
        }
    }
}

Measurements measurements_from_spikes(const SpikeTrain& train, const TemParams& tem)
{
    Measurements out;
    out.q.reserve(train.size());
    out.T.reserve(train.size());
    for (std::size_t k = 1; k <= train.size(); ++k) {
        const double T = train.interval(k);
        out.T.push_back(T);
        out.q.push_back(tem.threshold() - tem.b * T);
    }
    return out;
}

void write_spike_file(std::ostream& out, const SpikeFile& file)
{
    out << "# C=" << format_double(file.tem.C) << " delta=" << format_double(file.tem.delta)
        << " b=" << format_double(file.tem.b) << " Ts=" << format_double(file.Ts)
        << " m=" << file.m << '\n';
    for (double t : file.train.times()) out << format_double(t) << '\n';
    if (!out) throw io_error("spike file: write failed");
}

void write_spike_file(const std::string& path, const SpikeFile& file)
{
    std::ofstream out(path);
    if (!out) throw io_error("spike file: cannot open " + path + " for writing");
    write_spike_file(out, file);
}

namespace {

double parse_number(std::string_view text, std::size_t line)
{
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw parse_error(line, "not a number: '" + std::string(text) + "'");
    return v;
}

std::string_view header_field(std::istringstream& in, const char* key, std::size_t line, std::string& token)
{
    if (!(in >> token)) throw parse_error(line, std::string("header is missing ") + key);
    const std::string prefix = std::string(key) + "=";
    if (token.rfind(prefix, 0) != 0)
        throw parse_error(line, "expected '" + prefix + "...' in header, found '" + token + "'");
    return std::string_view(token).substr(prefix.size());
}

} // namespace

SpikeFile read_spike_file(std::istream& in)
{
    SpikeFile file;
    std::string line;
    if (!std::getline(in, line)) throw parse_error(1, "empty spike file");
    if (line.rfind("# ", 0) != 0) throw parse_error(1, "header must start with '# '");

    std::istringstream header(line.substr(2));
    std::string token;
    file.tem.C = parse_number(header_field(header, "C", 1, token), 1);
    file.tem.delta = parse_number(header_field(header, "delta", 1, token), 1);
    file.tem.b = parse_number(header_field(header, "b", 1, token), 1);
    file.Ts = parse_number(header_field(header, "Ts", 1, token), 1);
    const double m = parse_number(header_field(header, "m", 1, token), 1);
    if (!(m >= 1.0) || m != std::floor(m)) throw parse_error(1, "m must be a positive integer");
    file.m = static_cast<std::size_t>(m);
    if (header >> token) throw parse_error(1, "unexpected header field '" + token + "'");

    std::vector<double> times;
    std::size_t lineno = 1;
    double prev = 0.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const double t = parse_number(line, lineno);
        if (!std::isfinite(t) || !(t > prev))
            throw parse_error(lineno, "spike time " + line + " is not strictly increasing");
        times.push_back(t);
        prev = t;
    }
    file.train = SpikeTrain(std::move(times));
    return file;
}

SpikeFile read_spike_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("spike file: cannot open " + path);
    return read_spike_file(in);
}

} // namespace tedemod
