#include "tdipdft/ipdft.hpp"

namespace tdipdft {

namespace {

// Normalized bins re-indexed from bin 0; earlier bins are zero-filled so the
// templated routines can index by absolute bin number.
std::vector<cplx> absolute_bins(const SpectrumSlice& slice)
{
    if (slice.first_bin < 0) throw std::out_of_range("spectrum slice: negative first bin");
    std::vector<cplx> out(static_cast<std::size_t>(slice.last_bin() + 1));
    const double inv = 1.0 / slice.normalization;
    for (std::size_t i = 0; i < slice.bins.size(); ++i) {
        out[static_cast<std::size_t>(slice.first_bin) + i] = slice.bins[i] * inv;
    }
    return out;
}

} // namespace

int find_peak(const SpectrumSlice& slice, int k_lo, int k_hi)
{
    if (k_lo < slice.first_bin) throw std::out_of_range("find_peak: range starts below stored bins");
    const auto bins = absolute_bins(slice);
    return find_peak<double>(bins, k_lo, k_hi);
}

ToneEstimate interpolate(const SpectrumSlice& slice, int k_m, double delta_f)
{
    if (k_m - 1 < slice.first_bin || k_m + 1 > slice.last_bin()) {
        throw InsufficientNeighbors("interpolate: peak bin " + std::to_string(k_m) + " at slice edge");
    }
    const auto bins = absolute_bins(slice);
    return interpolate<double>(bins, k_m, delta_f);
}

std::vector<cplx> reconstruct_image(const ToneEstimate& est, ImageSign sign, cplx gain, int k_lo, int k_hi,
                                    const WindowConfig& cfg)
{
    return reconstruct_image<double>(est.frequency, sign, gain, k_lo, k_hi, cfg);
}

} // namespace tdipdft
