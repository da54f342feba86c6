#pragma once

// Band-compressed sampling matrix G, with [G]_{k,i} the overlap of spike
// interval k with the pulse of symbol i. Each row touches one column or two
// adjacent ones.

#include "tedemod/encoder.hpp"
#include "tedemod/model.hpp"
#include "tedemod/op_counter.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace tedemod {

struct BandRow {
    std::size_t first_col = 0;
    std::size_t nnz = 1;  // 1 or 2
    std::array<double, 2> values{};  // columns first_col, first_col + 1
    double t_begin = 0.0;
    double t_end = 0.0;

    double interval() const noexcept { return t_end - t_begin; }
    double at(std::size_t col) const noexcept
    {
        if (col == first_col) return values[0];
        if (nnz == 2 && col == first_col + 1) return values[1];
        return 0.0;
    }
};

class SamplingMatrix {
public:
    // Rows must be ordered in time, columns < cols, and nonzeros adjacent.
    SamplingMatrix(std::size_t cols, double Ts, std::vector<BandRow> rows);

    std::size_t rows() const noexcept { return rows_.size(); }
    std::size_t cols() const noexcept { return cols_; }
    double Ts() const noexcept { return Ts_; }

    const BandRow& row(std::size_t k) const { return rows_.at(k); }
    std::span<const BandRow> band() const noexcept { return rows_; }
    double at(std::size_t k, std::size_t col) const { return rows_.at(k).at(col); }

    // True for the row whose interval runs past the frame end; its post-frame
    // part multiplies a zero-amplitude virtual symbol.
    bool is_tail_row(std::size_t k) const;

private:
    std::size_t cols_;
    double Ts_;
    std::vector<BandRow> rows_;
};

// Rows cover the spikes up to and including the first one at or after m*Ts;
// later spikes carry no symbol information and are not represented.
SamplingMatrix build_g(const SpikeTrain& train, const FrameConfig& frame);

// sqrt(Es) * G * A using only the stored band.
std::vector<double> apply_g(const SamplingMatrix& G, std::span<const int> A, double Es,
                            OpCounter* counter = nullptr);

// Test and cross-check helpers.
std::vector<std::vector<double>> to_dense(const SamplingMatrix& G);
void write_dense_csv(std::ostream& out, const SamplingMatrix& G);

} // namespace tedemod
