#pragma once

// Linear-phase FIR low-pass design and decimating filtering. Only fully
// overlapped ("valid") outputs are produced, so output k is centred on input
// sample k*D + (taps-1)/2.

#include <cstddef>
#include <span>
#include <vector>

namespace cvdelay::dsp {

// Blackman-windowed sinc with unit DC gain and an odd tap count. cutoff is
// the -6 dB point; the transition band is centred on it.
std::vector<double> design_lowpass(double sample_rate, double cutoff, double transition_width);

double magnitude_response(std::span<const double> taps, double sample_rate, double f);

std::size_t valid_output_count(std::size_t input_size, std::size_t taps, std::size_t decimation);

// Polyphase evaluation with the SIMD dot kernel; the reference path.
std::vector<double> fir_decimate_direct(std::span<const double> x, std::span<const double> taps,
                                        std::size_t decimation);
// Overlap-save FFT convolution; same result to rounding.
std::vector<double> fir_decimate_fft(std::span<const double> x, std::span<const double> taps,
                                     std::size_t decimation);
// Picks whichever path is cheaper.
std::vector<double> fir_decimate(std::span<const double> x, std::span<const double> taps,
                                 std::size_t decimation);

}  // namespace cvdelay::dsp

namespace cvdelay::dsp {

// Baseband low-pass used by downmix: transition width cutoff/10.
std::vector<double> downmix_lowpass(double sample_rate, double cutoff);
// Detector anti-alias low-pass with its stop edge at Nyquist.
std::vector<double> antialias_lowpass(double sample_rate, double cutoff);

}  // namespace cvdelay::dsp
