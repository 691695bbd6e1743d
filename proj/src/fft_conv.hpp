#pragma once

namespace edenet::fftconv {

// Deterministic, shape-only choice between the im2col GEMM path and the FFT
// path. Every conv2d call with the same shapes takes the same path, so
// results are bit-stable across calls and runs.
bool prefer_fft(int c_out, int c_in, int K, int h_pad, int w_pad, int h_out, int w_out,
                int stride);

// out[o][y][x] = sum_{c,u,v} padded_input[c][y+u][x+v] * kernels[o][c][u][v]
// with zero padding of `padding` on each side; valid extents h_out x w_out.
// Matches the direct correlation up to f64 rounding (~1e-13 relative).
void correlate(const double* input, int c_in, int h, int w, const double* kernels, int c_out,
               int K, int padding, double* out);

// Same-padded small-kernel convs (K == 2*padding + 1) over many input
// channels: per-tap GEMM accumulation straight off the input, no patch
// matrix. Checked before the FFT heuristic.
bool prefer_small_direct(int c_out, int c_in, int K, int padding, int h_out, int w_out,
                         int stride);
void correlate_small(const double* input, int c_in, int h, int w, const double* kernels,
                     int c_out, int K, int padding, double* out);

}  // namespace edenet::fftconv
