#include "tedemod/sampling_matrix.hpp"

#include "tedemod/errors.hpp"
#include "tedemod/format.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace tedemod {

SamplingMatrix::SamplingMatrix(std::size_t cols, double Ts, std::vector<BandRow> rows)
    : cols_(cols), Ts_(Ts), rows_(std::move(rows))
{
    if (cols_ == 0) throw validation_error("sampling matrix: no columns");
    if (!(Ts_ > 0.0)) throw validation_error("sampling matrix: Ts must be positive");
    double prev_end = 0.0;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        const auto& r = rows_[k];
        const std::string where = "sampling matrix: row " + std::to_string(k);
        if (r.nnz != 1 && r.nnz != 2) throw validation_error(where + " must have 1 or 2 nonzeros");
        if (r.first_col + r.nnz > cols_) throw validation_error(where + " exceeds the column count");
        if (r.values[0] < 0.0 || r.values[1] < 0.0) throw validation_error(where + " has a negative entry");
        if (!(r.t_end > r.t_begin) || r.t_begin < prev_end)
            throw validation_error(where + " interval is not ordered in time");
        prev_end = r.t_end;
    }
}

bool SamplingMatrix::is_tail_row(std::size_t k) const
{
    const auto& r = rows_.at(k);
    const double frame_end = symbol_start(cols_, Ts_);
    return r.t_end > frame_end && r.t_begin < frame_end;
}

SamplingMatrix build_g(const SpikeTrain& train, const FrameConfig& frame)
{
    frame.validate();
    const PulseShape shape{frame.Ts};
    const double frame_end = frame.duration();
    const double floor_value = 1e-15 / std::sqrt(frame.Ts);

    std::vector<BandRow> rows;
    rows.reserve(train.size());
    for (std::size_t k = 1; k <= train.size(); ++k) {
        const double ta = train.t(k - 1);
        const double tb = train.t(k);
        if (tb - ta > frame.Ts)
            throw band_width_error("build_g: spike interval " + std::to_string(k) + " (" +
                                   format_double(tb - ta) + " s) exceeds Ts");

        BandRow row;
        row.t_begin = ta;
        row.t_end = tb;
        std::size_t col = symbol_index(ta, frame.Ts);
        double v0 = col < frame.m ? pulse_overlap(col, ta, tb, shape) : 0.0;
        double v1 = col + 1 < frame.m ? pulse_overlap(col + 1, ta, tb, shape) : 0.0;
        if (v0 < floor_value) v0 = 0.0;
        if (v1 < floor_value) v1 = 0.0;
        if (v0 == 0.0 && v1 > 0.0) {
            ++col;
            v0 = v1;
            v1 = 0.0;
        }
        if (v0 == 0.0) break;  // interval lies entirely past the frame
        row.first_col = col;
        row.values = {v0, v1};
        row.nnz = v1 > 0.0 ? 2 : 1;
        rows.push_back(row);
        if (tb >= frame_end) break;
    }
    return SamplingMatrix(frame.m, frame.Ts, std::move(rows));
}

std::vector<double> apply_g(const SamplingMatrix& G, std::span<const int> A, double Es,
                            OpCounter* counter)
{
    if (A.size() != G.cols())
        throw validation_error("apply_g: symbol vector has " + std::to_string(A.size()) +
                               " entries, matrix has " + std::to_string(G.cols()) + " columns");
    const double scale = std::sqrt(Es);
    std::vector<double> out;
    out.reserve(G.rows());
    for (const auto& r : G.band()) {
        double acc = r.values[0] * A[r.first_col];
        if (r.nnz == 2) acc += r.values[1] * A[r.first_col + 1];
        out.push_back(scale * acc);
        tally(counter, r.nnz + 1);
    }
    return out;
}

std::vector<std::vector<double>> to_dense(const SamplingMatrix& G)
{
    std::vector<std::vector<double>> dense(G.rows(), std::vector<double>(G.cols(), 0.0));
    for (std::size_t k = 0; k < G.rows(); ++k) {
        const auto& r = G.row(k);
        dense[k][r.first_col] = r.values[0];
        if (r.nnz == 2) dense[k][r.first_col + 1] = r.values[1];
    }
    return dense;
}

void write_dense_csv(std::ostream& out, const SamplingMatrix& G)
{
    for (const auto& row : to_dense(G)) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

} // namespace tedemod
