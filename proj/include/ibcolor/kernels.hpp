#pragma once

// Inner-loop kernels of the IB solver, each available in two variants:
// a plain serial reference and an OpenMP version parallelized over output
// rows. Both variants traverse every reduction in the same order, so their
// results are bit-identical for any thread count; the tests assert exact
// equality and the bench target times them against each other.

#include <cstdint>
#include <vector>

#include "ibcolor/matrix.hpp"

namespace ibcolor::kernels {

enum class Backend { serial, openmp };

// openmp when compiled with OpenMP support, serial otherwise.
Backend default_backend();
bool openmp_compiled();
int max_threads();

struct DecoderData {
  Matrix rows;                     // K x N, row w = m_hat_w(y)
  std::vector<std::uint8_t> live;  // live[w] = word marginal q(w) > 0
  Vec word_marginal;               // length K
};

// Word marginal q(w) = sum_m p(m) q(w|m). Cheap; single implementation.
Vec word_marginal(const Vec& prior, const Matrix& encoder);

// Bayesian decoder rows m_hat_w(y) = sum_m q(m|w) m_m(y). Words with zero
// marginal get an all-zero row and live[w] = 0.
DecoderData decoder(const Vec& prior, const Matrix& encoder, const Matrix& space, Backend b);

// Elementwise log of the decoder rows. Zero entries map to a large negative
// sentinel (not -inf) so downstream products with zero-mass coordinates stay
// 0 * finite instead of 0 * inf. Dead rows are left at the sentinel.
inline constexpr double kLogZeroSentinel = -1.0e30;
Matrix log_rows(const Matrix& rows, const std::vector<std::uint8_t>& live, Backend b);

// Divergence table in nats: d[m][w] = sum_y m_m(y) ln(m_m(y) / m_hat_w(y)),
// expanded as negH[m] - dot(space row m, log decoder row w) with
// negH[m] = sum_y m_m(y) ln m_m(y). Dead words get the sentinel-driven huge
// value, which the update turns into probability zero.
Matrix divergence_nats(const Matrix& space, const Vec& neg_entropy_nats, const Matrix& log_decoder,
                       const std::vector<std::uint8_t>& live, Backend b);

// Fixed-point update q'(w|m) = q(w) exp(-beta d[m][w]) / Z_m, computed in log
// space with a per-row max shift so rows renormalize even when every
// candidate underflows. Dead words stay at zero.
Matrix encoder_update(const Vec& log_marginal, const Matrix& divergence_nats, double beta,
                      const std::vector<std::uint8_t>& live, Backend b);

// I(M;W) in bits from prior, encoder rows and the word marginal.
double complexity_bits(const Vec& prior, const Matrix& encoder, const Vec& word_marginal, Backend b);

// I(Y;W) in bits via the decoder: sum_w q(w) D[m_hat_w || p0] where p0 is the
// environment marginal. log_env holds ln p0 with the same zero sentinel.
double accuracy_bits(const Vec& word_marginal, const Matrix& decoder_rows, const Matrix& log_decoder,
                     const Vec& log_env, const std::vector<std::uint8_t>& live, Backend b);

// Per-row negative entropy in nats: out[m] = sum_y row[y] ln row[y].
Vec row_neg_entropy_nats(const Matrix& rows, Backend b);

namespace detail {
// Output rows per cache block in the two streaming kernels.
inline constexpr std::size_t kRowBlock = 8;

DecoderData decoder_serial(const Vec&, const Matrix&, const Matrix&);
DecoderData decoder_omp(const Vec&, const Matrix&, const Matrix&);
Matrix log_rows_serial(const Matrix&, const std::vector<std::uint8_t>&);
Matrix log_rows_omp(const Matrix&, const std::vector<std::uint8_t>&);
Matrix divergence_serial(const Matrix&, const Vec&, const Matrix&, const std::vector<std::uint8_t>&);
Matrix divergence_omp(const Matrix&, const Vec&, const Matrix&, const std::vector<std::uint8_t>&);
Matrix update_serial(const Vec&, const Matrix&, double, const std::vector<std::uint8_t>&);
Matrix update_omp(const Vec&, const Matrix&, double, const std::vector<std::uint8_t>&);
double complexity_serial(const Vec&, const Matrix&, const Vec&);
double complexity_omp(const Vec&, const Matrix&, const Vec&);
double accuracy_serial(const Vec&, const Matrix&, const Matrix&, const Vec&, const std::vector<std::uint8_t>&);
double accuracy_omp(const Vec&, const Matrix&, const Matrix&, const Vec&, const std::vector<std::uint8_t>&);
Vec row_neg_entropy_serial(const Matrix&);
Vec row_neg_entropy_omp(const Matrix&);
}  // namespace detail

}  // namespace ibcolor::kernels
