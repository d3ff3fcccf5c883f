#include "vibtrack/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "vibtrack/error.hpp"
#include "vibtrack/series.hpp"

namespace vibtrack::dsp {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

// Savitzky-Golay --------------------------------------------------------------

std::vector<double> savgol_coefficients(int window, int order) {
    if (window < 3 || window % 2 == 0) {
        throw InvalidArgument("Savitzky-Golay window must be odd and >= 3, got " + std::to_string(window));
    }
    if (order < 0 || order >= window) {
        throw InvalidArgument("Savitzky-Golay order must be in [0, window), got " + std::to_string(order));
    }
    // Discrete orthogonal (Gram) polynomials on the symmetric grid -m..m, built
    // with the three-term recurrence. The central smoothing weight for sample i
    // is sum_k P_k(0) P_k(i) / |P_k|^2.
    const int half = window / 2;
    const std::size_t n = static_cast<std::size_t>(window);
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(static_cast<int>(i) - half);

    std::vector<double> prev(n, 0.0);
    std::vector<double> cur(n, 1.0);
    double prev_norm = 1.0;
    std::vector<double> weights(n, 0.0);
    for (int k = 0; k <= order; ++k) {
        double norm = 0.0;
        double x_moment = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            norm += cur[i] * cur[i];
            x_moment += grid[i] * cur[i] * cur[i];
        }
        const double at_center = cur[static_cast<std::size_t>(half)];
        for (std::size_t i = 0; i < n; ++i) weights[i] += at_center * cur[i] / norm;

        const double alpha = x_moment / norm;
        const double beta = k == 0 ? 0.0 : norm / prev_norm;
        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = (grid[i] - alpha) * cur[i] - beta * prev[i];
        prev = std::move(cur);
        cur = std::move(next);
        prev_norm = norm;
    }
    return weights;
}

Signal savgol_filter(const Signal& signal, int window, int order) {
    const auto weights = savgol_coefficients(window, order);
    const std::size_t n = signal.samples.size();
    if (n < static_cast<std::size_t>(window)) {
        throw InvalidArgument("signal of length " + std::to_string(n) + " is shorter than the Savitzky-Golay window " +
                              std::to_string(window));
    }
    const int half = window / 2;
    auto mirrored = [&](long i) {
        if (i < 0) i = -i;
        const long last = static_cast<long>(n) - 1;
        if (i > last) i = 2 * last - i;
        return signal.samples[static_cast<std::size_t>(i)];
    };
    Signal out{std::vector<double>(n), signal.fs};
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
            acc += weights[static_cast<std::size_t>(k + half)] * mirrored(static_cast<long>(j) + k);
        }
        out.samples[j] = acc;
    }
    return out;
}

// Butterworth -----------------------------------------------------------------

namespace {

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double hz, double fs) { return 2.0 * fs * std::tan(pi * hz / fs); }

// Normalized analog prototype poles in the left half plane, ordered so that
// conjugates sit at k and n-1-k.
std::vector<cplx> prototype_poles(int order) {
    std::vector<cplx> poles;
    for (int k = 0; k < order; ++k) {
        const double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
        poles.push_back(std::polar(1.0, theta));
    }
    return poles;
}

SecondOrderSection section_from_poles(cplx z1, cplx z2, double b0, double b1, double b2) {
    SecondOrderSection s;
    s.b0 = b0;
    s.b1 = b1;
    s.b2 = b2;
    s.a1 = -(z1 + z2).real();
    s.a2 = (z1 * z2).real();
    return s;
}

cplx section_response(const SecondOrderSection& s, cplx z) {
    const cplx zi = 1.0 / z;
    return (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
}

void scale_numerator(SecondOrderSection& s, double g) {
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
}

}  // namespace

std::complex<double> IIRFilter::response(double hz) const {
    const cplx z = std::polar(1.0, 2.0 * pi * hz / fs);
    cplx h = 1.0;
    for (const auto& s : sections) h *= section_response(s, z);
    return h;
}

std::vector<std::complex<double>> IIRFilter::poles() const {
    std::vector<cplx> out;
    for (const auto& s : sections) {
        if (s.a2 == 0.0) {
            out.emplace_back(-s.a1, 0.0);
            continue;
        }
        const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        out.push_back((-s.a1 + disc) / 2.0);
        out.push_back((-s.a1 - disc) / 2.0);
    }
    return out;
}

IIRFilter butterworth_design(int order, double cutoff_hz, double fs, FilterKind kind,
                             std::optional<double> cutoff_high) {
    if (order < 1) throw InvalidArgument("Butterworth order must be >= 1");
    if (!(fs > 0.0)) throw InvalidArgument("sample rate must be positive");
    const double nyquist = fs / 2.0;
    if (!(cutoff_hz > 0.0 && cutoff_hz < nyquist)) {
        throw InvalidArgument("cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, fs/2)");
    }
    IIRFilter filter;
    filter.order = order;
    filter.kind = kind;
    filter.fs = fs;
    filter.low_hz = cutoff_hz;
    const auto proto = prototype_poles(order);

    if (kind == FilterKind::lowpass) {
        const double wc = prewarp(cutoff_hz, fs);
        for (int k = 0; k < order / 2; ++k) {
            const cplx z = bilinear(wc * proto[static_cast<std::size_t>(k)], fs);
            auto s = section_from_poles(z, std::conj(z), 1.0, 2.0, 1.0);
            scale_numerator(s, (1.0 + s.a1 + s.a2) / 4.0);
            filter.sections.push_back(s);
        }
        if (order % 2 == 1) {
            const double z = bilinear(cplx(-wc, 0.0), fs).real();
            SecondOrderSection s{1.0, 1.0, 0.0, -z, 0.0};
            scale_numerator(s, (1.0 - z) / 2.0);
            filter.sections.push_back(s);
        }
        return filter;
    }

    if (!cutoff_high) throw InvalidArgument("bandpass design needs an upper band edge");
    const double high = *cutoff_high;
    if (!(high > cutoff_hz && high < nyquist)) {
        throw InvalidArgument("bandpass edges must satisfy 0 < low < high < fs/2");
    }
    filter.high_hz = high;
    const double w1 = prewarp(cutoff_hz, fs);
    const double w2 = prewarp(high, fs);
    const double w0_sq = w1 * w2;
    const double bw = w2 - w1;

    auto transform = [&](cplx p) {
        const cplx pb = p * bw;
        const cplx root = std::sqrt(pb * pb - 4.0 * w0_sq);
        return std::pair{(pb + root) / 2.0, (pb - root) / 2.0};
    };
    for (int k = 0; k < order / 2; ++k) {
        const auto [s1, s2] = transform(proto[static_cast<std::size_t>(k)]);
        for (cplx s : {s1, s2}) {
            const cplx z = bilinear(s, fs);
            filter.sections.push_back(section_from_poles(z, std::conj(z), 1.0, 0.0, -1.0));
        }
    }
    if (order % 2 == 1) {
        const auto [s1, s2] = transform(cplx(-1.0, 0.0));
        filter.sections.push_back(section_from_poles(bilinear(s1, fs), bilinear(s2, fs), 1.0, 0.0, -1.0));
    }
    // Unit gain at the digital image of the geometric center frequency.
    const double center = 2.0 * std::atan(std::sqrt(w0_sq) / (2.0 * fs));
    const cplx zc = std::polar(1.0, center);
    for (auto& s : filter.sections) scale_numerator(s, 1.0 / std::abs(section_response(s, zc)));
    return filter;
}

std::vector<double> sosfilt(const IIRFilter& filter, std::span<const double> x, std::span<const double> initial_state) {
    const std::size_t ns = filter.sections.size();
    if (!initial_state.empty() && initial_state.size() != 2 * ns) {
        throw InvalidArgument("initial state must hold two values per section");
    }
    std::vector<double> state(2 * ns, 0.0);
    if (!initial_state.empty()) std::copy(initial_state.begin(), initial_state.end(), state.begin());
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t k = 0; k < ns; ++k) {
        const auto& s = filter.sections[k];
        double z1 = state[2 * k];
        double z2 = state[2 * k + 1];
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> sosfilt_steady_state(const IIRFilter& filter) {
    std::vector<double> state;
    double level = 1.0;
    for (const auto& s : filter.sections) {
        const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double out = gain * level;
        const double z2 = s.b2 * level - s.a2 * out;
        const double z1 = out - s.b0 * level;
        state.push_back(z1);
        state.push_back(z2);
        level = out;
    }
    return state;
}

std::size_t filtfilt_padding(const IIRFilter& filter) { return 3 * (2 * static_cast<std::size_t>(filter.order)); }

Signal filtfilt(const Signal& signal, const IIRFilter& filter) {
    const std::size_t n = signal.samples.size();
    const std::size_t pad = filtfilt_padding(filter);
    if (n <= pad) {
        throw InvalidArgument("signal of length " + std::to_string(n) + " is too short for zero-phase filtering (needs > " +
                              std::to_string(pad) + " samples)");
    }
    const auto& x = signal.samples;
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * x.front() - x[k]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * x.back() - x[n - 1 - k]);

    const auto zi = sosfilt_steady_state(filter);
    auto scaled = [&](double v) {
        std::vector<double> s(zi);
        for (double& e : s) e *= v;
        return s;
    };
    auto forward = sosfilt(filter, ext, scaled(ext.front()));
    std::reverse(forward.begin(), forward.end());
    auto backward = sosfilt(filter, forward, scaled(forward.front()));
    std::reverse(backward.begin(), backward.end());
    return {std::vector<double>(backward.begin() + static_cast<std::ptrdiff_t>(pad),
                                backward.begin() + static_cast<std::ptrdiff_t>(pad + n)),
            signal.fs};
}

// FFT -------------------------------------------------------------------------

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> samples) {
    const std::size_t n = samples.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw InvalidArgument("FFT length must be a power of two, got " + std::to_string(n));
    }
    std::vector<cplx> a(samples.begin(), samples.end());
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        std::vector<cplx> twiddle(half);
        for (std::size_t k = 0; k < half; ++k) {
            twiddle[k] = std::polar(1.0, -2.0 * pi * static_cast<double>(k) / static_cast<double>(len));
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * twiddle[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
    return a;
}

std::vector<std::complex<double>> fft(std::span<const double> samples) {
    std::vector<cplx> c(samples.begin(), samples.end());
    return fft(std::span<const cplx>(c));
}

Spectrum spectrum(const Signal& signal, std::optional<std::size_t> n_fft) {
    const std::size_t n = signal.samples.size();
    if (n < 8) throw InvalidArgument("spectrum needs at least 8 samples, got " + std::to_string(n));
    if (!(signal.fs > 0.0)) throw InvalidArgument("sample rate must be positive");
    const std::size_t size = n_fft ? *n_fft : next_power_of_two(4 * n);
    if (size < n) throw InvalidArgument("n_fft is shorter than the signal");

    const double mean = std::accumulate(signal.samples.begin(), signal.samples.end(), 0.0) / static_cast<double>(n);
    std::vector<double> buffer(size, 0.0);
    double window_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n));
        window_sum += w;
        buffer[i] = (signal.samples[i] - mean) * w;
    }
    const auto bins = fft(std::span<const double>(buffer));
    Spectrum spec;
    spec.resolution = signal.fs / static_cast<double>(size);
    const std::size_t half = size / 2;
    spec.freqs.resize(half + 1);
    spec.magnitudes.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        spec.freqs[k] = static_cast<double>(k) * spec.resolution;
        spec.magnitudes[k] = 2.0 * std::abs(bins[k]) / window_sum;
    }
    return spec;
}

std::vector<SegmentSpectrum> segmented_spectrum(const Signal& signal, std::size_t segment_length, double overlap,
                                                std::optional<std::size_t> n_fft) {
    if (segment_length < 8) throw InvalidArgument("segment length must be at least 8 samples");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("segment overlap must be in [0, 1)");
    if (signal.samples.size() < segment_length) throw InvalidArgument("signal shorter than one segment");
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(segment_length * (1.0 - overlap))));
    std::vector<SegmentSpectrum> out;
    for (std::size_t start = 0; start + segment_length <= signal.samples.size(); start += hop) {
        Signal seg{std::vector<double>(signal.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                       signal.samples.begin() + static_cast<std::ptrdiff_t>(start + segment_length)),
                   signal.fs};
        out.push_back({static_cast<double>(start) / signal.fs, spectrum(seg, n_fft)});
    }
    return out;
}

std::vector<Peak> find_peaks(const Spectrum& spec, const PeakOptions& options) {
    if (options.n_peaks < 1) throw InvalidArgument("n_peaks must be >= 1");
    const auto& m = spec.magnitudes;
    if (m.size() < 3) return {};
    const double global_max = *std::max_element(m.begin(), m.end());
    if (!(global_max > options.min_magnitude)) return {};
    const double floor = options.min_prominence * global_max;

    std::vector<std::size_t> candidates;
    for (std::size_t k = 1; k + 1 < m.size(); ++k) {
        if (m[k] > m[k - 1] && m[k] >= m[k + 1] && m[k] >= floor) candidates.push_back(k);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return m[a] > m[b]; });

    constexpr double tiny = 1e-300;
    std::vector<Peak> peaks;
    for (std::size_t k : candidates) {
        if (peaks.size() == options.n_peaks) break;
        const double alpha = std::log(std::max(m[k - 1], tiny));
        const double beta = std::log(std::max(m[k], tiny));
        const double gamma = std::log(std::max(m[k + 1], tiny));
        const double denom = alpha - 2.0 * beta + gamma;
        double delta = denom != 0.0 ? 0.5 * (alpha - gamma) / denom : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        Peak p;
        p.frequency = (static_cast<double>(k) + delta) * spec.resolution;
        p.magnitude = std::exp(beta - 0.25 * (alpha - gamma) * delta);
        p.prominence = m[k] / global_max;
        const bool separated = std::all_of(peaks.begin(), peaks.end(), [&](const Peak& q) {
            return std::abs(q.frequency - p.frequency) >= options.min_separation_hz;
        });
        if (separated) peaks.push_back(p);
    }
    return peaks;
}

namespace {
std::string general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}
}  // namespace

void write_spectrum_csv(std::ostream& out, const Spectrum& spec) {
    out << "freq_hz,magnitude\n";
    for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
        out << format_fixed(spec.freqs[k]) << ',' << general(spec.magnitudes[k]) << '\n';
    }
}

void write_peaks_csv(std::ostream& out, const std::vector<Peak>& peaks) {
    out << "freq_hz,magnitude,prominence\n";
    for (const auto& p : peaks) {
        out << format_fixed(p.frequency) << ',' << general(p.magnitude) << ',' << format_fixed(p.prominence) << '\n';
    }
}

}  // namespace vibtrack::dsp
