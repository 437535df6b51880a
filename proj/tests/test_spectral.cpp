#include "oracle.hpp"
#include "tdipdft/spectral.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace tdipdft;
using oracle::cplx;

namespace {

constexpr double kFs = 50e3;
constexpr std::size_t kN = 3000;

std::vector<double> last_window(const std::vector<double>& x, std::size_t end, std::size_t len)
{
    return {x.begin() + static_cast<std::ptrdiff_t>(end + 1 - len), x.begin() + static_cast<std::ptrdiff_t>(end + 1)};
}

std::vector<double> random_signal(std::size_t len, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(len);
    for (auto& v : x) v = u(rng);
    return x;
}

double rel_err(cplx got, cplx want, double scale) { return std::abs(got - want) / scale; }

} // namespace

TEST(WindowConfig, DefaultGeometry)
{
    const auto cfg = WindowConfig::make();
    EXPECT_EQ(cfg.samples, 3000u);
    EXPECT_EQ(cfg.bins, 8u);
    EXPECT_NEAR(cfg.resolution(), 50.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(cfg.resolution() * static_cast<double>(cfg.samples), cfg.sample_rate);
}

TEST(WindowConfig, RejectsBadGeometry)
{
    EXPECT_THROW(WindowConfig::make(50e3, 50.0, 3.0, 7), ConfigError);
    EXPECT_THROW(WindowConfig::make(50e3, 47.0, 3.0, 8), ConfigError);
    EXPECT_THROW(WindowConfig::make(-1.0, 50.0, 3.0, 8), ConfigError);
}

TEST(DirichletKernel, LimitAtZeroIsN)
{
    const cplx v = dirichlet_kernel<double>(0.0, kN);
    EXPECT_NEAR(v.real(), 3000.0, 1e-9);
    EXPECT_NEAR(v.imag(), 0.0, 1e-9);
}

TEST(DirichletKernel, VanishesAtNonzeroIntegers)
{
    EXPECT_LT(std::abs(dirichlet_kernel<double>(3.0, kN)), 1e-9);
    EXPECT_LT(std::abs(dirichlet_kernel<double>(-2.0, kN)), 1e-9);
}

TEST(DirichletKernel, MatchesDirectSummation)
{
    for (double x : {0.5, -0.5, 1.25, 2.7, -3.3, 15.5}) {
        const cplx got = dirichlet_kernel<double>(x, 16);
        const cplx want = oracle::dft(std::vector<double>(16, 1.0), x);
        EXPECT_LT(std::abs(got - want), 1e-12) << "offset " << x;
    }
}

TEST(DirichletKernel, PeriodicLimitKeepsSign)
{
    // u = N: sin(pi u)/sin(pi u / N) -> N (-1)^{N-1}; N even gives -N, phase e^{-j pi (N-1)} = -1
    const cplx v = dirichlet_kernel<double>(16.0, 16);
    const cplx want = oracle::dft(std::vector<double>(16, 1.0), 16.0L);
    EXPECT_LT(std::abs(v - want), 1e-9);
    const cplx near = dirichlet_kernel<double>(16.0 + 1e-9, 16);
    EXPECT_LT(std::abs(near - want), 1e-6);
}

TEST(HannKernel, AtZeroIsHalfN)
{
    const cplx v = hann_kernel<double>(0.0, kN);
    EXPECT_NEAR(v.real(), 1500.0, 1e-9);
    EXPECT_NEAR(v.imag(), 0.0, 1e-9);
}

TEST(HannKernel, NullsAtIntegersFromTwo)
{
    for (double x : {2.0, 3.0, 5.0, -2.0, -4.0}) EXPECT_LT(std::abs(hann_kernel<double>(x, kN)), 1e-9) << x;
    EXPECT_NEAR(std::abs(hann_kernel<double>(1.0, kN)), 750.0, 1e-9);
}

TEST(HannKernel, MatchesDirectWindowedSummation)
{
    const std::vector<double> ones(kN, 1.0);
    for (double x : {0.37, -0.37, 1.5, 2.63, -5.85, 6.2}) {
        const cplx got = hann_kernel<double>(x, kN);
        const cplx want = oracle::dft(ones, x, true);
        EXPECT_LT(std::abs(got - want), 1e-9 * 1500.0) << "offset " << x;
    }
}

TEST(Msdft, ZeroInputGivesZeroBins)
{
    ModulatedSlidingDft sdft(kN, -1, 8);
    for (std::size_t i = 0; i < 2 * kN; ++i) sdft.push(0.0);
    for (const auto& b : sdft.rectangular().bins) EXPECT_EQ(std::abs(b), 0.0);
}

TEST(Msdft, CoherentCosineLandsOnOneBin)
{
    const double f = 3.0 * kFs / static_cast<double>(kN);
    const auto x = oracle::cosine(1.0, f, 0.0, kFs, 0, kN + 777);
    ModulatedSlidingDft sdft(kN, -1, 8);
    for (double v : x) sdft.push(v);
    const auto s = sdft.rectangular();
    for (int k = -1; k <= 8; ++k) {
        const double mag = std::abs(s.at(k));
        if (k == 3) EXPECT_NEAR(mag, 1500.0, 1e-9 * kN);
        else EXPECT_LE(mag, 1e-9 * kN) << "bin " << k;
    }
}

TEST(Msdft, RandomWindowMatchesDirectDft)
{
    const auto x = random_signal(kN + 1234, 7);
    ModulatedSlidingDft sdft(kN, -1, 8);
    for (double v : x) sdft.push(v);
    const auto win = last_window(x, x.size() - 1, kN);
    const auto s = sdft.rectangular();
    for (int k = -1; k <= 8; ++k) {
        const cplx want = oracle::dft(win, static_cast<long double>(k));
        EXPECT_LT(rel_err(s.at(k), want, std::abs(want)), 1e-10) << "bin " << k;
    }
}

TEST(Msdft, BinMinusOneEqualsBinNMinusOne)
{
    const auto x = random_signal(kN + 50, 11);
    ModulatedSlidingDft sdft(kN, -1, 8);
    for (double v : x) sdft.push(v);
    const cplx want = oracle::dft(last_window(x, x.size() - 1, kN), static_cast<long double>(kN - 1));
    EXPECT_LT(std::abs(sdft.rectangular().at(-1) - want), 1e-10 * std::abs(want));
}

// Stability over a long run: 10^5 pushes, checked against direct DFTs along the way.
TEST(MsdftProperty, StaysEqualToDirectDftOver1e5Pushes)
{
    const std::size_t total = 100000;
    const auto x = random_signal(total, 2024);
    ModulatedSlidingDft sdft(kN, -1, 8);
    double worst = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        sdft.push(x[i]);
        if (i + 1 < kN || (i % 9973 != 0 && i + 1 != total)) continue;
        const auto win = last_window(x, i, kN);
        const auto s = sdft.rectangular();
        for (int k = -1; k <= 8; ++k) {
            const cplx want = oracle::dft(win, static_cast<long double>(k));
            worst = std::max(worst, rel_err(s.at(k), want, std::abs(want)));
        }
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(WindowInFreq, ZeroStaysZero)
{
    SpectrumSlice rect;
    rect.bins.assign(10, cplx{});
    rect.first_bin = -1;
    rect.normalization = 3000.0;
    const auto w = window_in_freq(rect);
    EXPECT_EQ(w.first_bin, 0);
    EXPECT_EQ(w.bins.size(), 8u);
    EXPECT_TRUE(w.windowed);
    EXPECT_DOUBLE_EQ(w.normalization, 1500.0);
    for (const auto& b : w.bins) EXPECT_EQ(std::abs(b), 0.0);
}

TEST(WindowInFreq, CoherentToneSpreadsQuarterHalfQuarter)
{
    const double f = 3.0 * kFs / static_cast<double>(kN);
    const auto x = oracle::cosine(1.0, f, 0.4, kFs, 0, kN);
    ModulatedSlidingDft sdft(kN, -1, 8);
    for (double v : x) sdft.push(v);
    const auto w = window_in_freq(sdft.rectangular());
    const double n = static_cast<double>(kN);
    EXPECT_NEAR(std::abs(w.at(2)), 0.25 * n / 2.0, 1e-8);
    EXPECT_NEAR(std::abs(w.at(3)), 0.5 * n / 2.0, 1e-8);
    EXPECT_NEAR(std::abs(w.at(4)), 0.25 * n / 2.0, 1e-8);
}

TEST(WindowInFreqProperty, EqualsTimeDomainHann)
{
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto x = random_signal(kN + 100 * seed, seed);
        ModulatedSlidingDft sdft(kN, -1, 8);
        for (double v : x) sdft.push(v);
        const auto w = window_in_freq(sdft.rectangular());
        const auto win = last_window(x, x.size() - 1, kN);
        for (int k = 0; k < 8; ++k) {
            const cplx want = oracle::dft(win, static_cast<long double>(k), true);
            EXPECT_LT(rel_err(w.at(k), want, std::abs(want)), 1e-9) << "seed " << seed << " bin " << k;
        }
    }
}

TEST(DelayCapacity, FortyFiveHertzAtFiftyKilohertz) { EXPECT_EQ(delay_capacity(50e3, 45.0), 278u); }

TEST(SpectralStream, DelayedLookupMatchesDelayedSignalDft)
{
    const auto cfg = WindowConfig::make();
    SpectralStream stream(cfg);
    const auto x = oracle::cosine(1.0, 50.0, 0.0, kFs, 0, kN + 600);
    for (double v : x) stream.push(v);
    const auto now = stream.normalized_windowed(0);
    const auto delayed = stream.normalized_windowed(250);
    const std::size_t end = x.size() - 1;
    const auto want_now = oracle::hann_bins(last_window(x, end, kN), 8);
    // cos delayed by a quarter period is sin over the same window
    const auto sine = oracle::cosine(1.0, 50.0, -std::numbers::pi / 2, kFs, static_cast<long long>(end + 1 - kN), kN);
    const auto want_delayed = oracle::hann_bins(sine, 8);
    EXPECT_LT(oracle::max_abs_diff(now, want_now), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(delayed, want_delayed), 1e-10);
    EXPECT_EQ(stream.windowed(250).window_end_sample, static_cast<std::int64_t>(end) - 250);
}

TEST(SpectralStream, DelayZeroIsCurrentSlice)
{
    SpectralStream stream(WindowConfig::make());
    const auto x = random_signal(kN + 10, 3);
    for (double v : x) stream.push(v);
    const auto a = stream.windowed(0);
    const auto b = window_in_freq(stream.rectangular());
    for (int k = 0; k < 8; ++k) EXPECT_EQ(a.at(k), b.at(k));
}

TEST(SpectralStream, RejectsDelayBeyondHistory)
{
    SpectralStream stream(WindowConfig::make());
    const auto x = random_signal(kN + 400, 5);
    for (double v : x) stream.push(v);
    EXPECT_TRUE(stream.ready());
    EXPECT_THROW(stream.windowed(stream.capacity() + 1), InsufficientHistory);

    SpectralStream young(WindowConfig::make());
    for (std::size_t i = 0; i < kN + 10; ++i) young.push(x[i]);
    EXPECT_FALSE(young.ready());
    EXPECT_NO_THROW(young.windowed(10));
    EXPECT_THROW(young.windowed(11), InsufficientHistory);
}

TEST(SpectralStream, SkippedSamplesBreakHistory)
{
    SpectralStream full(WindowConfig::make());
    SpectralStream sparse(WindowConfig::make());
    const auto x = random_signal(kN + 1000, 4);
    const std::size_t record_from = x.size() - full.capacity() - 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        full.push(x[i]);
        sparse.push(x[i], i >= record_from);
        if (i == record_from) EXPECT_FALSE(sparse.ready());
    }
    EXPECT_TRUE(sparse.ready());
    for (std::size_t d : {0u, 100u, 278u}) {
        for (int k = 0; k < 8; ++k) EXPECT_EQ(full.windowed(d).at(k), sparse.windowed(d).at(k));
    }
    sparse.push(0.0, false);
    EXPECT_FALSE(sparse.ready());
    EXPECT_THROW(sparse.windowed(0), InsufficientHistory);
}

TEST(SpectralStreamProperty, LookupIsExactAcrossAdvances)
{
    SpectralStream stream(WindowConfig::make());
    const auto x = random_signal(kN + 2000, 9);
    std::size_t i = 0;
    for (; i < kN + 500; ++i) stream.push(x[i]);
    for (std::size_t d : {1u, 17u, 250u, 278u}) {
        const auto before = stream.windowed(0);
        for (std::size_t j = 0; j < d; ++j) stream.push(x[i++]);
        const auto after = stream.windowed(d);
        EXPECT_EQ(before.window_end_sample, after.window_end_sample);
        for (int k = 0; k < 8; ++k) EXPECT_EQ(before.at(k), after.at(k));
    }
}

TEST(ComplexSpectrum, Linearity)
{
    SpectralStream stream(WindowConfig::make());
    for (double v : random_signal(kN + 300, 4)) stream.push(v);
    const auto now = stream.windowed(0);
    auto zero = now;
    for (auto& b : zero.bins) b = 0.0;
    const auto same = complex_spectrum(now, zero);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(same.at(k), now.at(k));
    const auto doubled = complex_spectrum(now, now);
    for (int k = 0; k < 8; ++k) EXPECT_LT(std::abs(doubled.at(k) - cplx(1.0, 1.0) * now.at(k)), 1e-12 * std::abs(now.at(k)));
}

TEST(ComplexSpectrum, RejectsMismatchedSlices)
{
    SpectralStream stream(WindowConfig::make());
    for (double v : random_signal(kN + 10, 4)) stream.push(v);
    auto a = stream.windowed(0);
    auto b = a;
    b.bins.pop_back();
    EXPECT_THROW(complex_spectrum(a, b), ConfigError);
}

TEST(ComplexSpectrum, QuarterDelayCancelsNegativeImage)
{
    SpectralStream stream(WindowConfig::make());
    const auto x = oracle::cosine(1.0, 50.0, 0.3, kFs, 0, kN + 300);
    for (double v : x) stream.push(v);
    const auto c = complex_spectrum(stream.windowed(0), stream.windowed(250));

    // full-length oracle on x(n) + j x(n - 250) over the same window
    const std::size_t end = x.size() - 1;
    std::vector<cplx> z(kN);
    for (std::size_t n = 0; n < kN; ++n) z[n] = cplx(x[end + 1 - kN + n], x[end + 1 - kN + n - 250]);
    const double pos = std::abs(oracle::dft(z, 3.0L, true));
    const double neg = std::abs(oracle::dft(z, static_cast<long double>(kN - 3), true));
    EXPECT_LE(neg, 1e-9 * pos);
    EXPECT_LT(std::abs(c.at(3) - oracle::dft(z, 3.0L, true)), 1e-9 * pos);
}

TEST(SpectrumCsv, WritesNormalizedRows)
{
    SpectrumSlice s;
    s.bins = {cplx(3.0, 4.0), cplx(0.0, -2.0)};
    s.first_bin = 2;
    s.normalization = 2.0;
    std::ostringstream os;
    write_spectrum_csv(os, s);
    EXPECT_EQ(os.str(), "k,re,im,abs\n2,1.5,2,2.5\n3,0,-1,1\n");
}
