#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vibtrack::dsp {

/// Uniformly sampled real signal.
struct Signal {
    std::vector<double> samples;
    double fs = 1.0;
};

/// One-sided magnitude spectrum; freqs[k] = k * resolution.
struct Spectrum {
    std::vector<double> freqs;
    std::vector<double> magnitudes;
    double resolution = 0.0;
};

struct SecondOrderSection {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

enum class FilterKind { lowpass, bandpass };

/// Cascade of biquads with its design metadata.
struct IIRFilter {
    std::vector<SecondOrderSection> sections;
    int order = 0;
    FilterKind kind = FilterKind::lowpass;
    double low_hz = 0.0;   ///< lowpass cutoff, or lower band edge
    double high_hz = 0.0;  ///< upper band edge (bandpass only)
    double fs = 0.0;

    /// Complex frequency response at `hz`.
    std::complex<double> response(double hz) const;
    /// Poles of every section (two per section; first-order sections report one).
    std::vector<std::complex<double>> poles() const;
};

struct Peak {
    double frequency = 0.0;
    double magnitude = 0.0;
    /// Bin magnitude relative to the spectrum's largest bin, in (0, 1].
    double prominence = 0.0;
};

// Savitzky-Golay ---------------------------------------------------------

/// Central-point smoothing weights of a least-squares polynomial fit.
std::vector<double> savgol_coefficients(int window, int order);

/// Smooths with savgol_coefficients; the ends are mirror-padded by half a window.
Signal savgol_filter(const Signal& signal, int window, int order);

// Butterworth ------------------------------------------------------------

/// Digital Butterworth filter via bilinear transform with prewarping.
/// For bandpass, `cutoff_high` must be given and `order` is the prototype order.
IIRFilter butterworth_design(int order, double cutoff_hz, double fs, FilterKind kind,
                             std::optional<double> cutoff_high = std::nullopt);

/// Single causal pass through the cascade (transposed direct form II).
/// `initial_state` holds two values per section, or is empty for a zero state.
std::vector<double> sosfilt(const IIRFilter& filter, std::span<const double> x,
                            std::span<const double> initial_state = {});

/// Per-section state giving a steady-state response to a unit step.
std::vector<double> sosfilt_steady_state(const IIRFilter& filter);

/// Number of reflected samples filtfilt adds at each end.
std::size_t filtfilt_padding(const IIRFilter& filter);

/// Zero-phase forward-backward filtering with odd reflection padding.
Signal filtfilt(const Signal& signal, const IIRFilter& filter);

// Spectra ----------------------------------------------------------------

/// Unnormalized radix-2 forward DFT. Length must be a power of two.
std::vector<std::complex<double>> fft(std::span<const double> samples);
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> samples);

std::size_t next_power_of_two(std::size_t n);

/// Mean-removed, Hann-windowed, zero-padded amplitude spectrum. With no n_fft the
/// padding is the next power of two at least 4x the signal length.
Spectrum spectrum(const Signal& signal, std::optional<std::size_t> n_fft = std::nullopt);

/// A spectrum computed over one segment of a longer record.
struct SegmentSpectrum {
    double start_time = 0.0;
    Spectrum spectrum;
};

/// Short-time spectra over segments of `segment_length` samples, advancing by
/// segment_length * (1 - overlap).
std::vector<SegmentSpectrum> segmented_spectrum(const Signal& signal, std::size_t segment_length,
                                                double overlap, std::optional<std::size_t> n_fft = std::nullopt);

struct PeakOptions {
    std::size_t n_peaks = 3;
    double min_separation_hz = 0.5;
    double min_prominence = 0.1;
    /// Spectra whose maximum is below this are treated as flat (no peaks).
    double min_magnitude = 1e-9;
};

/// Strongest local maxima with parabolic (log-magnitude) sub-bin refinement,
/// greedily chosen by magnitude with a minimum mutual separation.
std::vector<Peak> find_peaks(const Spectrum& spec, const PeakOptions& options);

void write_spectrum_csv(std::ostream& out, const Spectrum& spec);
void write_peaks_csv(std::ostream& out, const std::vector<Peak>& peaks);

}  // namespace vibtrack::dsp
