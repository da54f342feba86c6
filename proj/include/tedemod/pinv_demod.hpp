#pragma once

// Pseudo-inverse baselines: sign of the least-squares solution of
// sqrt(Es) G A ~= q, over the whole frame (batch) or per symbol using only the
// rows that touch that symbol alone (symbol-wise).

#include "tedemod/encoder.hpp"
#include "tedemod/mp_demod.hpp"
#include "tedemod/op_counter.hpp"
#include "tedemod/sampling_matrix.hpp"

#include <cstdint>
#include <vector>

namespace tedemod {

struct LeastSquaresReport {
    std::vector<int> decisions;
    std::vector<double> solution;  // least-squares estimate of A
    double residual_norm = 0.0;    // ||q - sqrt(Es) G A_ls||
    std::uint64_t op_count = 0;
    double wall_time_s = 0.0;
};

// Streaming Givens QR over the two-wide band; never forms G^T G or an
// inverse. Throws rank_error naming the first column with no support.
LeastSquaresReport demod_batch_pinv(const Measurements& meas, const SamplingMatrix& G, double Es);

struct SymbolwiseResult {
    std::vector<int> decisions;
    std::vector<std::size_t> uncovered;  // symbols with empty Q_i, decided +1
};

SymbolwiseResult demod_symbolwise_pinv(const Measurements& meas, const SamplingMatrix& G,
                                       const FactorGraphIndex& graph, double Es,
                                       OpCounter* counter = nullptr);

// Dense reference path: explicit N x m matrix, normal equations and
// Cholesky. Costs O(N m^2 + m^3); used as a test oracle and as the subject
// of the dense pseudo-inverse complexity measurement.
LeastSquaresReport solve_dense_least_squares(const Measurements& meas, const SamplingMatrix& G,
                                             double Es, OpCounter* counter = nullptr);

enum class OpMode { smp, mp, pinv_batch, pinv_symbol, pinv_dense };

const char* op_mode_name(OpMode mode) noexcept;

struct OpTally {
    std::size_t m = 0;
    std::size_t spikes = 0;
    std::uint64_t mac = 0;
};

// Encodes a random noiseless frame of `frame.m` symbols and demodulates it
// with `mode`, counting multiply-accumulates. Demodulators run with the
// channel reliability of `chan` (noise is not injected).
OpTally count_ops(OpMode mode, const FrameConfig& frame, const TemParams& tem,
                  const ChannelParams& chan, std::uint64_t seed);

} // namespace tedemod
