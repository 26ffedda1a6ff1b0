// Serial reference implementations. These are the ground truth the OpenMP
// variants are tested against; keep them simple and keep the reduction order
// identical to kernels_omp.cpp.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ibcolor/info.hpp"
#include "ibcolor/kernels.hpp"

namespace ibcolor::kernels {

Vec word_marginal(const Vec& prior, const Matrix& encoder) {
  if (prior.size() != encoder.rows()) {
    throw std::invalid_argument("word_marginal: prior size does not match encoder rows");
  }
  Vec q(encoder.cols(), 0.0);
  for (std::size_t m = 0; m < encoder.rows(); ++m) {
    if (prior[m] == 0.0) continue;
    axpy(q.data(), prior[m], encoder.row(m).data(), encoder.cols());
  }
  return q;
}

namespace detail {

// Shared per-row and per-block bodies; both backends call these so the
// arithmetic is the same code. The hot kernels work on blocks of output rows
// to keep the streamed operand (the meaning matrix or the log-decoder) in
// cache; every output element still accumulates in ascending index order, so
// blocking does not change a single bit.

void decoder_block(std::size_t w0, std::size_t w1, const Vec& prior, const Matrix& encoder,
                   const Matrix& space, const Vec& marginal, Matrix& out,
                   std::vector<std::uint8_t>& live) {
  const std::size_t n_m = encoder.rows();
  const std::size_t n_y = space.cols();
  for (std::size_t w = w0; w < w1; ++w) {
    live[w] = marginal[w] > 0.0 ? 1 : 0;
  }
  for (std::size_t m = 0; m < n_m; ++m) {
    const double* srow = space.row(m).data();
    for (std::size_t w = w0; w < w1; ++w) {
      if (!live[w]) continue;
      double u = prior[m] * encoder(m, w);
      if (u == 0.0) continue;
      // Normalizing the posterior weight before mixing keeps the identity
      // channel exact: u / marginal == 1.0 when only one meaning contributes.
      axpy(out.row(w).data(), u / marginal[w], srow, n_y);
    }
  }
}

void log_row(std::size_t r, const Matrix& rows, const std::vector<std::uint8_t>& live, Matrix& out) {
  const std::size_t n = rows.cols();
  double* dst = out.row(r).data();
  if (!live[r]) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = kLogZeroSentinel;
    return;
  }
  const double* src = rows.row(r).data();
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = src[i] > 0.0 ? std::log(src[i]) : kLogZeroSentinel;
  }
}

void divergence_block(std::size_t m0, std::size_t m1, const Matrix& space, const Vec& neg_entropy,
                      const Matrix& log_decoder, const std::vector<std::uint8_t>& live,
                      Matrix& out) {
  const std::size_t n_w = log_decoder.rows();
  const std::size_t n_y = space.cols();
  for (std::size_t w = 0; w < n_w; ++w) {
    if (!live[w]) {
      for (std::size_t m = m0; m < m1; ++m) {
        out(m, w) = std::numeric_limits<double>::infinity();
      }
      continue;
    }
    const double* lrow = log_decoder.row(w).data();
    for (std::size_t m = m0; m < m1; ++m) {
      double cross = dot4(space.row(m).data(), lrow, n_y);
      double d = neg_entropy[m] - cross;
      out(m, w) = d < 0.0 ? 0.0 : d;
    }
  }
}

void update_row(std::size_t m, const Vec& log_marginal, const Matrix& div, double beta,
                const std::vector<std::uint8_t>& live, Matrix& out) {
  const std::size_t n_w = div.cols();
  const double* drow = div.row(m).data();
  double* qrow = out.row(m).data();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < n_w; ++w) {
    double logit = live[w] ? log_marginal[w] - beta * drow[w]
                           : -std::numeric_limits<double>::infinity();
    qrow[w] = logit;
    if (logit > max_logit) max_logit = logit;
  }
  double total = 0.0;
  for (std::size_t w = 0; w < n_w; ++w) {
    // The 1e-300 floor keeps live words from underflowing to an exact zero
    // they could never return from (the update is multiplicative in q(w));
    // it is far below every reported tolerance.
    double e = live[w] ? std::exp(qrow[w] - max_logit) + 1e-300 : 0.0;
    qrow[w] = e;
    total += e;
  }
  for (std::size_t w = 0; w < n_w; ++w) qrow[w] /= total;
}

double complexity_row(std::size_t m, const Matrix& encoder, const Vec& marginal) {
  const double* row = encoder.row(m).data();
  double s = 0.0;
  for (std::size_t w = 0; w < encoder.cols(); ++w) {
    if (row[w] > 0.0) s += row[w] * std::log(row[w] / marginal[w]);
  }
  return s;
}

double accuracy_row(std::size_t w, const Matrix& decoder_rows, const Matrix& log_decoder,
                    const Vec& log_env) {
  const double* d = decoder_rows.row(w).data();
  const double* ld = log_decoder.row(w).data();
  double s = 0.0;
  for (std::size_t y = 0; y < decoder_rows.cols(); ++y) {
    s += d[y] * (ld[y] - log_env[y]);
  }
  return s;
}

double neg_entropy_row(std::size_t r, const Matrix& rows) {
  double s = 0.0;
  for (double x : rows.row(r)) {
    if (x > 0.0) s += x * std::log(x);
  }
  return s;
}

DecoderData decoder_serial(const Vec& prior, const Matrix& encoder, const Matrix& space) {
  DecoderData out;
  out.word_marginal = word_marginal(prior, encoder);
  out.rows = Matrix(encoder.cols(), space.cols());
  out.live.assign(encoder.cols(), 0);
  const std::size_t n_w = encoder.cols();
  for (std::size_t w0 = 0; w0 < n_w; w0 += kRowBlock) {
    decoder_block(w0, std::min(w0 + kRowBlock, n_w), prior, encoder, space, out.word_marginal,
                  out.rows, out.live);
  }
  return out;
}

Matrix log_rows_serial(const Matrix& rows, const std::vector<std::uint8_t>& live) {
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r) log_row(r, rows, live, out);
  return out;
}

Matrix divergence_serial(const Matrix& space, const Vec& neg_entropy, const Matrix& log_decoder,
                         const std::vector<std::uint8_t>& live) {
  Matrix out(space.rows(), log_decoder.rows());
  const std::size_t n_m = space.rows();
  for (std::size_t m0 = 0; m0 < n_m; m0 += kRowBlock) {
    divergence_block(m0, std::min(m0 + kRowBlock, n_m), space, neg_entropy, log_decoder, live,
                     out);
  }
  return out;
}

Matrix update_serial(const Vec& log_marginal, const Matrix& div, double beta,
                     const std::vector<std::uint8_t>& live) {
  Matrix out(div.rows(), div.cols());
  for (std::size_t m = 0; m < div.rows(); ++m) {
    update_row(m, log_marginal, div, beta, live, out);
  }
  return out;
}

double complexity_serial(const Vec& prior, const Matrix& encoder, const Vec& marginal) {
  double s = 0.0;
  for (std::size_t m = 0; m < encoder.rows(); ++m) {
    if (prior[m] > 0.0) s += prior[m] * complexity_row(m, encoder, marginal);
  }
  return s / kLn2;
}

double accuracy_serial(const Vec& marginal, const Matrix& decoder_rows, const Matrix& log_decoder,
                       const Vec& log_env, const std::vector<std::uint8_t>& live) {
  double s = 0.0;
  for (std::size_t w = 0; w < decoder_rows.rows(); ++w) {
    if (live[w] && marginal[w] > 0.0) {
      s += marginal[w] * accuracy_row(w, decoder_rows, log_decoder, log_env);
    }
  }
  double bits = s / kLn2;
  return bits < 0.0 ? 0.0 : bits;
}

Vec row_neg_entropy_serial(const Matrix& rows) {
  Vec out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = neg_entropy_row(r, rows);
  return out;
}

}  // namespace detail

namespace {

// Spawning a parallel region costs more than small problems do; below this
// much work the serial path runs regardless of the requested backend. The
// two paths are bit-identical, so the cutover is invisible in results.
constexpr std::size_t kParallelWorkThreshold = 1 << 16;

inline bool go_parallel(Backend b, std::size_t work) {
  return b == Backend::openmp && work >= kParallelWorkThreshold;
}

}  // namespace

DecoderData decoder(const Vec& prior, const Matrix& encoder, const Matrix& space, Backend b) {
  if (encoder.rows() != space.rows()) {
    throw std::invalid_argument("decoder: encoder rows do not match meaning count");
  }
  return go_parallel(b, encoder.rows() * encoder.cols() * space.cols())
             ? detail::decoder_omp(prior, encoder, space)
             : detail::decoder_serial(prior, encoder, space);
}

Matrix log_rows(const Matrix& rows, const std::vector<std::uint8_t>& live, Backend b) {
  return go_parallel(b, rows.rows() * rows.cols()) ? detail::log_rows_omp(rows, live)
                                                   : detail::log_rows_serial(rows, live);
}

Matrix divergence_nats(const Matrix& space, const Vec& neg_entropy, const Matrix& log_decoder,
                       const std::vector<std::uint8_t>& live, Backend b) {
  return go_parallel(b, space.rows() * log_decoder.rows() * space.cols())
             ? detail::divergence_omp(space, neg_entropy, log_decoder, live)
             : detail::divergence_serial(space, neg_entropy, log_decoder, live);
}

Matrix encoder_update(const Vec& log_marginal, const Matrix& div, double beta,
                      const std::vector<std::uint8_t>& live, Backend b) {
  return go_parallel(b, div.rows() * div.cols()) ? detail::update_omp(log_marginal, div, beta, live)
                                                 : detail::update_serial(log_marginal, div, beta, live);
}

double complexity_bits(const Vec& prior, const Matrix& encoder, const Vec& marginal, Backend b) {
  return go_parallel(b, encoder.rows() * encoder.cols())
             ? detail::complexity_omp(prior, encoder, marginal)
             : detail::complexity_serial(prior, encoder, marginal);
}

double accuracy_bits(const Vec& marginal, const Matrix& decoder_rows, const Matrix& log_decoder,
                     const Vec& log_env, const std::vector<std::uint8_t>& live, Backend b) {
  return go_parallel(b, decoder_rows.rows() * decoder_rows.cols())
             ? detail::accuracy_omp(marginal, decoder_rows, log_decoder, log_env, live)
             : detail::accuracy_serial(marginal, decoder_rows, log_decoder, log_env, live);
}

Vec row_neg_entropy_nats(const Matrix& rows, Backend b) {
  return go_parallel(b, rows.rows() * rows.cols()) ? detail::row_neg_entropy_omp(rows)
                                                   : detail::row_neg_entropy_serial(rows);
}

}  // namespace ibcolor::kernels
