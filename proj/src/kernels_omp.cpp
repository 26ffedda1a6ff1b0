// OpenMP variants. Work is split across output rows; every row is produced
// by the same per-row body as the serial reference and reductions combine
// per-row partials in fixed index order, so results match the serial path
// bit for bit regardless of thread count.

#include <algorithm>
#include <cstdint>

#include "ibcolor/info.hpp"
#include "ibcolor/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ibcolor::kernels {

Backend default_backend() {
#ifdef _OPENMP
  return Backend::openmp;
#else
  return Backend::serial;
#endif
}

bool openmp_compiled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace detail {

// Row and block bodies shared with the serial TU.
void decoder_block(std::size_t w0, std::size_t w1, const Vec& prior, const Matrix& encoder,
                   const Matrix& space, const Vec& marginal, Matrix& out,
                   std::vector<std::uint8_t>& live);
void log_row(std::size_t r, const Matrix& rows, const std::vector<std::uint8_t>& live, Matrix& out);
void divergence_block(std::size_t m0, std::size_t m1, const Matrix& space, const Vec& neg_entropy,
                      const Matrix& log_decoder, const std::vector<std::uint8_t>& live,
                      Matrix& out);
void update_row(std::size_t m, const Vec& log_marginal, const Matrix& div, double beta,
                const std::vector<std::uint8_t>& live, Matrix& out);
double complexity_row(std::size_t m, const Matrix& encoder, const Vec& marginal);
double accuracy_row(std::size_t w, const Matrix& decoder_rows, const Matrix& log_decoder,
                    const Vec& log_env);
double neg_entropy_row(std::size_t r, const Matrix& rows);

DecoderData decoder_omp(const Vec& prior, const Matrix& encoder, const Matrix& space) {
  DecoderData out;
  out.word_marginal = word_marginal(prior, encoder);
  out.rows = Matrix(encoder.cols(), space.cols());
  out.live.assign(encoder.cols(), 0);
  const std::int64_t n_w = static_cast<std::int64_t>(encoder.cols());
  const std::int64_t block = static_cast<std::int64_t>(kRowBlock);
  const std::int64_t n_blocks = (n_w + block - 1) / block;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    std::size_t w0 = static_cast<std::size_t>(b * block);
    decoder_block(w0, std::min(w0 + kRowBlock, encoder.cols()), prior, encoder, space,
                  out.word_marginal, out.rows, out.live);
  }
  return out;
}

Matrix log_rows_omp(const Matrix& rows, const std::vector<std::uint8_t>& live) {
  Matrix out(rows.rows(), rows.cols());
  const std::int64_t n = static_cast<std::int64_t>(rows.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t r = 0; r < n; ++r) {
    log_row(static_cast<std::size_t>(r), rows, live, out);
  }
  return out;
}

Matrix divergence_omp(const Matrix& space, const Vec& neg_entropy, const Matrix& log_decoder,
                      const std::vector<std::uint8_t>& live) {
  Matrix out(space.rows(), log_decoder.rows());
  const std::int64_t block = static_cast<std::int64_t>(kRowBlock);
  const std::int64_t n_blocks =
      (static_cast<std::int64_t>(space.rows()) + block - 1) / block;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    std::size_t m0 = static_cast<std::size_t>(b * block);
    divergence_block(m0, std::min(m0 + kRowBlock, space.rows()), space, neg_entropy, log_decoder,
                     live, out);
  }
  return out;
}

Matrix update_omp(const Vec& log_marginal, const Matrix& div, double beta,
                  const std::vector<std::uint8_t>& live) {
  Matrix out(div.rows(), div.cols());
  const std::int64_t n = static_cast<std::int64_t>(div.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t m = 0; m < n; ++m) {
    update_row(static_cast<std::size_t>(m), log_marginal, div, beta, live, out);
  }
  return out;
}

double complexity_omp(const Vec& prior, const Matrix& encoder, const Vec& marginal) {
  const std::int64_t n = static_cast<std::int64_t>(encoder.rows());
  Vec partial(encoder.rows(), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t m = 0; m < n; ++m) {
    if (prior[m] > 0.0) {
      partial[m] = complexity_row(static_cast<std::size_t>(m), encoder, marginal);
    }
  }
  double s = 0.0;
  for (std::size_t m = 0; m < encoder.rows(); ++m) {
    if (prior[m] > 0.0) s += prior[m] * partial[m];
  }
  return s / kLn2;
}

double accuracy_omp(const Vec& marginal, const Matrix& decoder_rows, const Matrix& log_decoder,
                    const Vec& log_env, const std::vector<std::uint8_t>& live) {
  const std::int64_t n = static_cast<std::int64_t>(decoder_rows.rows());
  Vec partial(decoder_rows.rows(), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t w = 0; w < n; ++w) {
    if (live[w] && marginal[w] > 0.0) {
      partial[w] = accuracy_row(static_cast<std::size_t>(w), decoder_rows, log_decoder, log_env);
    }
  }
  double s = 0.0;
  for (std::size_t w = 0; w < decoder_rows.rows(); ++w) {
    if (live[w] && marginal[w] > 0.0) s += marginal[w] * partial[w];
  }
  double bits = s / kLn2;
  return bits < 0.0 ? 0.0 : bits;
}

Vec row_neg_entropy_omp(const Matrix& rows) {
  Vec out(rows.rows());
  const std::int64_t n = static_cast<std::int64_t>(rows.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t r = 0; r < n; ++r) {
    out[r] = neg_entropy_row(static_cast<std::size_t>(r), rows);
  }
  return out;
}

}  // namespace detail

}  // namespace ibcolor::kernels
