#include "sforge/mlp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>

#include "sforge/error.hpp"

#if defined(__AVX512F__) && !defined(SFORGE_FORCE_SCALAR)
#include <immintrin.h>
#define SFORGE_AVX512 1
// glibc's 8-lane vector tanh.  Lane results depend only on that lane's
// input, so padding partial vectors keeps every tanh evaluation consistent
// across call sites and batch shapes.
extern "C" __m512d _ZGVeN8v_tanh(__m512d);
#endif

// Numeric contract for this file: every dot product accumulates in a single
// chain over the ascending reduction index, with fused multiply-adds.  The
// vectorized kernels keep batch elements in lanes (never splitting one
// reduction across lanes), so tiled, saxpy, and scalar paths all produce
// identical bits and shape-based dispatch can never change results.  tanh
// always goes through the same 8-lane kernel for the same reason.

namespace sforge {

namespace {

// ---------------------------------------------------------------- activations

void act_forward(Activation act, double* x, int n) {
  if (act == Activation::Tanh) {
#ifdef SFORGE_AVX512
    int i = 0;
    for (; i + 8 <= n; i += 8)
      _mm512_storeu_pd(x + i, _ZGVeN8v_tanh(_mm512_loadu_pd(x + i)));
    if (i < n) {
      double buf[8] = {0};
      std::memcpy(buf, x + i, sizeof(double) * (n - i));
      const __m512d r = _ZGVeN8v_tanh(_mm512_loadu_pd(buf));
      _mm512_storeu_pd(buf, r);
      std::memcpy(x + i, buf, sizeof(double) * (n - i));
    }
#else
#pragma omp simd
    for (int i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
#endif
  } else {
#pragma omp simd
    for (int i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
}

// Derivative expressed through the activated value a = act(z).
inline double act_deriv(Activation act, double a) {
  return act == Activation::Tanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
}

// ---------------------------------------------------------------- affine fwd

// c[o] = b[o] + sum_k a[k] * W[k*O+o]
void row_affine(const double* a, int K, const double* W, const double* bias, int O,
                double* c) {
  if (O == 1) {
    double s = bias[0];
    for (int k = 0; k < K; ++k) s = std::fma(a[k], W[k], s);
    c[0] = s;
    return;
  }
  std::memcpy(c, bias, sizeof(double) * O);
  for (int k = 0; k < K; ++k) {
    const double ak = a[k];
    const double* wr = W + (size_t)k * O;
#pragma omp simd
    for (int o = 0; o < O; ++o) c[o] = std::fma(ak, wr[o], c[o]);
  }
}

#ifdef SFORGE_AVX512
// Eight rows of A against a 16-wide column block of W, entirely in registers.
void tile8x16(const double* A, int K, const double* W, const double* bias, int O,
              double* C) {
  for (int jb = 0; jb < O; jb += 16) {
    __m512d acc[8][2];
    const __m512d b0 = _mm512_loadu_pd(bias + jb);
    const __m512d b1 = _mm512_loadu_pd(bias + jb + 8);
    for (int i = 0; i < 8; ++i) {
      acc[i][0] = b0;
      acc[i][1] = b1;
    }
    const double* wp = W + jb;
    for (int k = 0; k < K; ++k, wp += O) {
      const __m512d w0 = _mm512_loadu_pd(wp);
      const __m512d w1 = _mm512_loadu_pd(wp + 8);
      for (int i = 0; i < 8; ++i) {
        const __m512d a = _mm512_set1_pd(A[(size_t)i * K + k]);
        acc[i][0] = _mm512_fmadd_pd(a, w0, acc[i][0]);
        acc[i][1] = _mm512_fmadd_pd(a, w1, acc[i][1]);
      }
    }
    for (int i = 0; i < 8; ++i) {
      _mm512_storeu_pd(C + (size_t)i * O + jb, acc[i][0]);
      _mm512_storeu_pd(C + (size_t)i * O + jb + 8, acc[i][1]);
    }
  }
}
#endif

// C = A (n x K) * W (K x O, input-major) + bias, row-major C.
void affine(const double* A, int n, int K, const double* W, const double* bias, int O,
            double* C) {
  int i = 0;
#ifdef SFORGE_AVX512
  if (O % 16 == 0) {
    for (; i + 8 <= n; i += 8) tile8x16(A + (size_t)i * K, K, W, bias, O, C + (size_t)i * O);
  }
#endif
  for (; i < n; ++i) row_affine(A + (size_t)i * K, K, W, bias, O, C + (size_t)i * O);
}

// ---------------------------------------------------------------- bwd input

// dA[i][k] = sum_o W[k*O+o] * dC[i*O+o]
void row_bwd_input(const double* dC, const double* W, int K, int O, double* dA) {
  for (int k = 0; k < K; ++k) {
    const double* wr = W + (size_t)k * O;
    double s = 0.0;
    for (int o = 0; o < O; ++o) s = std::fma(wr[o], dC[o], s);
    dA[k] = s;
  }
}

#ifdef SFORGE_AVX512
// One group of 8 batch rows; dCT is the o-major transpose (O x 8) of those
// rows.  Four weight rows per pass keeps the dCT load shared.
void bwd_input8(const double* dCT, const double* W, int K, int O, double* dAT) {
  int k = 0;
  for (; k + 4 <= K; k += 4) {
    const double* w0 = W + (size_t)(k + 0) * O;
    const double* w1 = W + (size_t)(k + 1) * O;
    const double* w2 = W + (size_t)(k + 2) * O;
    const double* w3 = W + (size_t)(k + 3) * O;
    __m512d a0 = _mm512_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
    for (int o = 0; o < O; ++o) {
      const __m512d d = _mm512_loadu_pd(dCT + (size_t)o * 8);
      a0 = _mm512_fmadd_pd(_mm512_set1_pd(w0[o]), d, a0);
      a1 = _mm512_fmadd_pd(_mm512_set1_pd(w1[o]), d, a1);
      a2 = _mm512_fmadd_pd(_mm512_set1_pd(w2[o]), d, a2);
      a3 = _mm512_fmadd_pd(_mm512_set1_pd(w3[o]), d, a3);
    }
    _mm512_storeu_pd(dAT + (size_t)(k + 0) * 8, a0);
    _mm512_storeu_pd(dAT + (size_t)(k + 1) * 8, a1);
    _mm512_storeu_pd(dAT + (size_t)(k + 2) * 8, a2);
    _mm512_storeu_pd(dAT + (size_t)(k + 3) * 8, a3);
  }
  for (; k < K; ++k) {
    const double* wr = W + (size_t)k * O;
    __m512d a = _mm512_setzero_pd();
    for (int o = 0; o < O; ++o)
      a = _mm512_fmadd_pd(_mm512_set1_pd(wr[o]), _mm512_loadu_pd(dCT + (size_t)o * 8), a);
    _mm512_storeu_pd(dAT + (size_t)k * 8, a);
  }
}
#endif

void transpose_to_groups8(const double* M, int cols, int i0, double* T) {
  // T[c][j] = M[i0+j][c] for j in [0, 8)
  for (int c = 0; c < cols; ++c)
    for (int j = 0; j < 8; ++j) T[(size_t)c * 8 + j] = M[(size_t)(i0 + j) * cols + c];
}

void transpose_from_groups8(const double* T, int cols, int i0, int n_total, double* M) {
  (void)n_total;
  for (int c = 0; c < cols; ++c)
    for (int j = 0; j < 8; ++j) M[(size_t)(i0 + j) * cols + c] = T[(size_t)c * 8 + j];
}

// dA (n x K) = dC (n x O) through W (K x O input-major).
void bwd_input(const double* dC, int n, const double* W, int K, int O, double* dA,
               double* scratchT) {
  int i = 0;
#ifdef SFORGE_AVX512
  double* dCT = scratchT;            // O x 8
  double* dAT = scratchT + (size_t)O * 8;  // K x 8
  for (; i + 8 <= n; i += 8) {
    transpose_to_groups8(dC, O, i, dCT);
    bwd_input8(dCT, W, K, O, dAT);
    transpose_from_groups8(dAT, K, i, n, dA);
  }
#else
  (void)scratchT;
#endif
  for (; i < n; ++i) row_bwd_input(dC + (size_t)i * O, W, K, O, dA + (size_t)i * K);
}

size_t bwd_scratch_doubles(int K, int O) { return (size_t)(K + O) * 8; }

// ------------------------------------------------------------- fused update

// 1/(sqrt(v) + eps) without a divide or sqrt: rsqrt and rcp seeds refined by
// Newton steps to full double precision (relative error ~1e-15, inside the
// fast path's documented tolerance against the reference optimizer).
#ifdef SFORGE_AVX512
inline __m512d inv_sqrt_eps(__m512d v, __m512d eps) {
  const __m512d half = _mm512_set1_pd(0.5), three = _mm512_set1_pd(3.0);
  const __m512d two = _mm512_set1_pd(2.0);
  // Tiny bias keeps rsqrt(0) finite; irrelevant at any real second moment.
  const __m512d vb = _mm512_add_pd(v, _mm512_set1_pd(1e-300));
  __m512d r = _mm512_rsqrt14_pd(vb);
  r = _mm512_mul_pd(_mm512_mul_pd(half, r),
                    _mm512_fnmadd_pd(_mm512_mul_pd(vb, r), r, three));
  r = _mm512_mul_pd(_mm512_mul_pd(half, r),
                    _mm512_fnmadd_pd(_mm512_mul_pd(vb, r), r, three));
  const __m512d x = _mm512_add_pd(_mm512_mul_pd(vb, r), eps);  // sqrt(v) + eps
  __m512d q = _mm512_rcp14_pd(x);
  q = _mm512_mul_pd(q, _mm512_fnmadd_pd(x, q, two));
  q = _mm512_mul_pd(q, _mm512_fnmadd_pd(x, q, two));
  return q;
}

// Single pass over one hidden-layer weight matrix, batch of 8:
//   dAT[k][:]  = sum_o W_old[k][o] * dCT[o][:]   (input gradient)
//   g[o]       = sum_b Act[b][k] * dC[b][o]      (weight gradient row)
//   row k of W updated by AdamW immediately after its last use.
// Fusing the three keeps each weight row hot in L1 and touches W/m/v once.
void fused_hidden_update(const double* Act, const double* dC, const double* dCT,
                         double* W, double* mw, double* vw, double* dAT, int K, int O,
                         double alpha, double vscale, double decay, double b1, double b2,
                         double epsv) {
  const __m512d vb1 = _mm512_set1_pd(b1), vb2 = _mm512_set1_pd(b2);
  const __m512d vomb1 = _mm512_set1_pd(1.0 - b1), vomb2 = _mm512_set1_pd(1.0 - b2);
  const __m512d valpha = _mm512_set1_pd(alpha), vvs = _mm512_set1_pd(vscale);
  const __m512d vdecay = _mm512_set1_pd(decay), veps = _mm512_set1_pd(epsv);
  // Rows in groups of four (H is a multiple of 16): first the input-gradient
  // pass against pre-update weights with four independent accumulator chains
  // (one per row, each still a single ascending-o chain, so results match the
  // row-at-a-time kernel bit for bit while hiding FMA latency), then the
  // weight-gradient + AdamW pass over the same, now cache-hot, rows.
  for (int k4 = 0; k4 < K; k4 += 4) {
    const double* w0 = W + (size_t)(k4 + 0) * O;
    const double* w1 = W + (size_t)(k4 + 1) * O;
    const double* w2 = W + (size_t)(k4 + 2) * O;
    const double* w3 = W + (size_t)(k4 + 3) * O;
    __m512d acc0 = _mm512_setzero_pd(), acc1 = acc0, acc2 = acc0, acc3 = acc0;
    for (int o = 0; o < O; ++o) {
      const __m512d d = _mm512_loadu_pd(dCT + (size_t)o * 8);
      acc0 = _mm512_fmadd_pd(_mm512_set1_pd(w0[o]), d, acc0);
      acc1 = _mm512_fmadd_pd(_mm512_set1_pd(w1[o]), d, acc1);
      acc2 = _mm512_fmadd_pd(_mm512_set1_pd(w2[o]), d, acc2);
      acc3 = _mm512_fmadd_pd(_mm512_set1_pd(w3[o]), d, acc3);
    }
    _mm512_storeu_pd(dAT + (size_t)(k4 + 0) * 8, acc0);
    _mm512_storeu_pd(dAT + (size_t)(k4 + 1) * 8, acc1);
    _mm512_storeu_pd(dAT + (size_t)(k4 + 2) * 8, acc2);
    _mm512_storeu_pd(dAT + (size_t)(k4 + 3) * 8, acc3);

    for (int k = k4; k < k4 + 4; ++k) {
      double* wrow = W + (size_t)k * O;
      double* mrow = mw + (size_t)k * O;
      double* vrow = vw + (size_t)k * O;
      const __m512d a0 = _mm512_set1_pd(Act[k]);
      const __m512d a1 = _mm512_set1_pd(Act[(size_t)1 * K + k]);
      const __m512d a2 = _mm512_set1_pd(Act[(size_t)2 * K + k]);
      const __m512d a3 = _mm512_set1_pd(Act[(size_t)3 * K + k]);
      const __m512d a4 = _mm512_set1_pd(Act[(size_t)4 * K + k]);
      const __m512d a5 = _mm512_set1_pd(Act[(size_t)5 * K + k]);
      const __m512d a6 = _mm512_set1_pd(Act[(size_t)6 * K + k]);
      const __m512d a7 = _mm512_set1_pd(Act[(size_t)7 * K + k]);
      for (int o = 0; o < O; o += 8) {
        const __m512d w = _mm512_loadu_pd(wrow + o);
        // weight-gradient chunk, batch index ascending
        __m512d g = _mm512_mul_pd(a0, _mm512_loadu_pd(dC + o));
        g = _mm512_fmadd_pd(a1, _mm512_loadu_pd(dC + (size_t)1 * O + o), g);
        g = _mm512_fmadd_pd(a2, _mm512_loadu_pd(dC + (size_t)2 * O + o), g);
        g = _mm512_fmadd_pd(a3, _mm512_loadu_pd(dC + (size_t)3 * O + o), g);
        g = _mm512_fmadd_pd(a4, _mm512_loadu_pd(dC + (size_t)4 * O + o), g);
        g = _mm512_fmadd_pd(a5, _mm512_loadu_pd(dC + (size_t)5 * O + o), g);
        g = _mm512_fmadd_pd(a6, _mm512_loadu_pd(dC + (size_t)6 * O + o), g);
        g = _mm512_fmadd_pd(a7, _mm512_loadu_pd(dC + (size_t)7 * O + o), g);
        // AdamW on the chunk
        const __m512d mo = _mm512_loadu_pd(mrow + o);
        const __m512d vo = _mm512_loadu_pd(vrow + o);
        const __m512d mn = _mm512_fmadd_pd(vb1, mo, _mm512_mul_pd(vomb1, g));
        const __m512d vn = _mm512_fmadd_pd(vb2, vo, _mm512_mul_pd(vomb2, _mm512_mul_pd(g, g)));
        _mm512_storeu_pd(mrow + o, mn);
        _mm512_storeu_pd(vrow + o, vn);
        const __m512d q = inv_sqrt_eps(_mm512_mul_pd(vn, vvs), veps);
        const __m512d upd = _mm512_mul_pd(_mm512_mul_pd(valpha, mn), q);
        _mm512_storeu_pd(wrow + o, _mm512_fmsub_pd(vdecay, w, upd));
      }
    }
  }
}
#endif

// Literal AdamW recurrence for one flat tensor (reference semantics).
void adamw_tensor(double* th, const double* g, double* m, double* v, size_t n, double lr,
                  double wd, double b1, double b2, double eps, double bc1, double bc2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * (g[i] * g[i]);
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    const double t = th[i];
    th[i] = t - lr * (mhat / (std::sqrt(vhat) + eps)) - lr * wd * t;
  }
}

void check_model(const Model& m) {
  if (m.dims.size() < 2 || m.weights.size() != m.dims.size() - 1 ||
      m.biases.size() != m.dims.size() - 1)
    throw ConfigError("malformed model");
}

}  // namespace

// ----------------------------------------------------------------- public ops

Model init_model_dims(std::vector<int> dims, const TrainConfig& cfg, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("model needs at least one layer");
  for (int d : dims)
    if (d < 1) throw ConfigError("layer sizes must be positive");
  Model m;
  m.dims = std::move(dims);
  m.act = cfg.act;
  const size_t L = m.dims.size() - 1;
  m.weights.resize(L);
  m.biases.resize(L);
  for (size_t l = 0; l < L; ++l) {
    const int K = m.dims[l], O = m.dims[l + 1];
    const double sigma =
        cfg.init_mode == InitMode::Scaled ? 1.0 / std::sqrt(double(K)) : cfg.init_sigma;
    m.weights[l].resize((size_t)K * O);
    for (double& w : m.weights[l]) w = sigma * rng.normal();
    m.biases[l].assign(O, 0.0);
  }
  return m;
}

Model init_model(int d_in, const TrainConfig& cfg, Rng& rng) {
  if (d_in < 1) throw ConfigError("input dimension must be positive");
  return init_model_dims({d_in, 512, 512, 512, 1}, cfg, rng);
}

void forward_batch(const Model& m, const double* X, int n, double* out) {
  check_model(m);
  const size_t L = m.dims.size() - 1;
  int width = 0;
  for (size_t l = 1; l < m.dims.size(); ++l) width = std::max(width, m.dims[l]);
  Vec cur(X, X + (size_t)n * m.dims[0]);
  Vec nxt((size_t)n * width);
  for (size_t l = 0; l < L; ++l) {
    const int K = m.dims[l], O = m.dims[l + 1];
    affine(cur.data(), n, K, m.weights[l].data(), m.biases[l].data(), O, nxt.data());
    if (l + 1 < L) act_forward(m.act, nxt.data(), n * O);
    cur.assign(nxt.begin(), nxt.begin() + (size_t)n * O);
  }
  std::memcpy(out, cur.data(), sizeof(double) * n * m.dims.back());
}

double forward(const Model& m, const Vec& z) {
  if (static_cast<int>(z.size()) != m.dims[0])
    throw ConfigError("forward: input dimension mismatch");
  if (m.dims.back() != 1) throw ConfigError("model output is not scalar");
  double y = 0.0;
  forward_batch(m, z.data(), 1, &y);
  return y;
}

std::pair<double, double> huber(double pred, double target, double delta) {
  if (delta <= 0.0) throw ConfigError("huber delta must be positive");
  const double e = pred - target;
  const double a = std::fabs(e);
  if (a <= delta) return {0.5 * e * e, e};
  return {delta * (a - 0.5 * delta), e > 0.0 ? delta : -delta};
}

double grad_params(const Model& m, const std::vector<Vec>& inputs, const Vec& targets,
                   double huber_delta, Grads& out) {
  check_model(m);
  if (inputs.empty() || inputs.size() != targets.size())
    throw ConfigError("grad_params: empty or mismatched batch");
  if (m.dims.back() != 1) throw ConfigError("model output is not scalar");
  const int B = static_cast<int>(inputs.size());
  const size_t L = m.dims.size() - 1;

  // Forward, keeping activations per layer.
  std::vector<Vec> A(L + 1);
  A[0].resize((size_t)B * m.dims[0]);
  for (int b = 0; b < B; ++b) {
    if (static_cast<int>(inputs[b].size()) != m.dims[0])
      throw ConfigError("grad_params: input dimension mismatch");
    std::memcpy(A[0].data() + (size_t)b * m.dims[0], inputs[b].data(),
                sizeof(double) * m.dims[0]);
  }
  for (size_t l = 0; l < L; ++l) {
    const int K = m.dims[l], O = m.dims[l + 1];
    A[l + 1].resize((size_t)B * O);
    affine(A[l].data(), B, K, m.weights[l].data(), m.biases[l].data(), O, A[l + 1].data());
    if (l + 1 < L) act_forward(m.act, A[l + 1].data(), B * O);
  }

  out.weights.resize(L);
  out.biases.resize(L);
  for (size_t l = 0; l < L; ++l) {
    out.weights[l].assign(m.weights[l].size(), 0.0);
    out.biases[l].assign(m.biases[l].size(), 0.0);
  }

  double loss = 0.0;
  Vec dC((size_t)B * 1);
  for (int b = 0; b < B; ++b) {
    auto [lb, gb] = huber(A[L][b], targets[b], huber_delta);
    loss += lb / B;
    dC[b] = gb / B;
  }

  Vec dA;
  Vec scratch;
  for (size_t l = L; l-- > 0;) {
    const int K = m.dims[l], O = m.dims[l + 1];
    // Bias and weight gradients at this layer.
    for (int b = 0; b < B; ++b) {
      const double* dc = dC.data() + (size_t)b * O;
      const double* ar = A[l].data() + (size_t)b * K;
      for (int o = 0; o < O; ++o) out.biases[l][o] += dc[o];
      for (int k = 0; k < K; ++k) {
        const double ak = ar[k];
        double* gr = out.weights[l].data() + (size_t)k * O;
#pragma omp simd
        for (int o = 0; o < O; ++o) gr[o] = std::fma(ak, dc[o], gr[o]);
      }
    }
    if (l == 0) break;
    // Delta for the layer below: through W then the activation derivative.
    dA.resize((size_t)B * K);
    scratch.resize(bwd_scratch_doubles(K, O));
    bwd_input(dC.data(), B, m.weights[l].data(), K, O, dA.data(), scratch.data());
    for (size_t i = 0; i < dA.size(); ++i) dA[i] *= act_deriv(m.act, A[l][i]);
    dC = dA;
  }
  return loss;
}

void grad_input_batch(const Model& m, const double* X, int n, double* fvals, double* gz) {
  check_model(m);
  if (m.dims.back() != 1) throw ConfigError("model output is not scalar");
  const size_t L = m.dims.size() - 1;
  std::vector<Vec> A(L + 1);
  A[0].assign(X, X + (size_t)n * m.dims[0]);
  for (size_t l = 0; l < L; ++l) {
    const int K = m.dims[l], O = m.dims[l + 1];
    A[l + 1].resize((size_t)n * O);
    affine(A[l].data(), n, K, m.weights[l].data(), m.biases[l].data(), O, A[l + 1].data());
    if (l + 1 < L) act_forward(m.act, A[l + 1].data(), n * O);
  }
  if (fvals) std::memcpy(fvals, A[L].data(), sizeof(double) * n);

  Vec dC(A[L].size(), 1.0);  // d f / d f
  Vec dA, scratch;
  for (size_t l = L; l-- > 0;) {
    const int K = m.dims[l], O = m.dims[l + 1];
    dA.resize((size_t)n * K);
    scratch.resize(bwd_scratch_doubles(K, O));
    bwd_input(dC.data(), n, m.weights[l].data(), K, O, dA.data(), scratch.data());
    if (l > 0)
      for (size_t i = 0; i < dA.size(); ++i) dA[i] *= act_deriv(m.act, A[l][i]);
    dC = dA;
  }
  std::memcpy(gz, dC.data(), sizeof(double) * n * m.dims[0]);
}

Vec grad_input(const Model& m, const Vec& z) {
  if (static_cast<int>(z.size()) != m.dims[0])
    throw ConfigError("grad_input: input dimension mismatch");
  Vec g(m.dims[0]);
  grad_input_batch(m, z.data(), 1, nullptr, g.data());
  return g;
}

AdamWState make_adamw_state(const Model& m) {
  check_model(m);
  AdamWState st;
  const size_t L = m.weights.size();
  st.m_w.resize(L);
  st.v_w.resize(L);
  st.m_b.resize(L);
  st.v_b.resize(L);
  for (size_t l = 0; l < L; ++l) {
    st.m_w[l].assign(m.weights[l].size(), 0.0);
    st.v_w[l].assign(m.weights[l].size(), 0.0);
    st.m_b[l].assign(m.biases[l].size(), 0.0);
    st.v_b[l].assign(m.biases[l].size(), 0.0);
  }
  return st;
}

void adamw_step(Model& m, const Grads& g, AdamWState& st, const TrainConfig& cfg) {
  check_model(m);
  if (g.weights.size() != m.weights.size() || g.biases.size() != m.biases.size())
    throw ConfigError("adamw_step: gradient shape mismatch");
  st.step += 1;
  st.beta1_pow *= cfg.adam_beta1;
  st.beta2_pow *= cfg.adam_beta2;
  const double bc1 = 1.0 - st.beta1_pow;
  const double bc2 = 1.0 - st.beta2_pow;
  for (size_t l = 0; l < m.weights.size(); ++l) {
    adamw_tensor(m.weights[l].data(), g.weights[l].data(), st.m_w[l].data(),
                 st.v_w[l].data(), m.weights[l].size(), cfg.lr, cfg.weight_decay,
                 cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
    adamw_tensor(m.biases[l].data(), g.biases[l].data(), st.m_b[l].data(),
                 st.v_b[l].data(), m.biases[l].size(), cfg.lr, cfg.weight_decay,
                 cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
  }
}

// ------------------------------------------------------------------ training

namespace {

// Resolve the target transform: a model that already carries one (warm
// checkpoint) keeps it; otherwise cfg.standardize fits one to this dataset.
Vec resolve_targets(Model& m, const Dataset& data, const TrainConfig& cfg) {
  if (!m.reward_std && cfg.standardize) {
    double mu = 0.0;
    for (int i = 0; i < data.n; ++i) mu += data.y[i];
    mu /= data.n;
    double var = 0.0;
    for (int i = 0; i < data.n; ++i) var += (data.y[i] - mu) * (data.y[i] - mu);
    double sd = std::sqrt(var / data.n);
    if (sd < 1e-12) sd = 1.0;
    m.reward_std = RewardStd{mu, sd};
  }
  Vec t = data.y;
  if (m.reward_std)
    for (double& v : t) v = (v - m.reward_std->mean) / m.reward_std->std;
  return t;
}

void check_dataset(const Model& m, const Dataset& data, const TrainConfig& cfg) {
  if (data.n <= 0) throw ConfigError("training data is empty");
  if (data.d != m.dims[0]) throw ConfigError("training data dimension mismatch");
  if (cfg.batch < 1 || cfg.iters < 0) throw ConfigError("bad train config");
}

void fit_reference(Model& m, const Dataset& data, const Vec& targets,
                   const TrainConfig& cfg, Rng& rng) {
  AdamWState st = make_adamw_state(m);
  std::vector<Vec> bx(cfg.batch, Vec(data.d));
  Vec by(cfg.batch);
  Grads g;
  for (int it = 0; it < cfg.iters; ++it) {
    for (int j = 0; j < cfg.batch; ++j) {
      const int idx = std::min(data.n - 1, int(rng.uniform() * data.n));
      std::memcpy(bx[j].data(), data.X.data() + (size_t)idx * data.d,
                  sizeof(double) * data.d);
      by[j] = targets[idx];
    }
    grad_params(m, bx, by, cfg.huber_delta, g);
    adamw_step(m, g, st, cfg);
  }
}

#ifdef SFORGE_AVX512
bool fast_path_eligible(const Model& m, const TrainConfig& cfg) {
  if (cfg.batch != 8) return false;
  if (m.dims.size() != 5 || m.dims.back() != 1) return false;
  const int H = m.dims[1];
  if (m.dims[2] != H || m.dims[3] != H) return false;
  return H % 16 == 0 && H <= 512;
}

// Batch-of-8 training step specialized for the [d, H, H, H, 1] shape.
struct FastTrainer {
  int d, H;
  Vec A0, A1, A2, A3;        // activations, batch-major
  Vec y, dy;                 // outputs and their loss gradients
  Vec dZ, dZT, dZT2, dAT;    // deltas (batch-major / transposed)
  AdamWState st;

  FastTrainer(const Model& m)
      : d(m.dims[0]),
        H(m.dims[1]),
        A0((size_t)8 * d),
        A1((size_t)8 * H),
        A2((size_t)8 * H),
        A3((size_t)8 * H),
        y(8),
        dy(8),
        dZ((size_t)8 * H),
        dZT((size_t)H * 8),
        dZT2((size_t)H * 8),
        dAT((size_t)H * 8),
        st() {}

  void step(Model& m, const Dataset& data, const Vec& targets, const TrainConfig& cfg,
            Rng& rng) {
    for (int j = 0; j < 8; ++j) {
      const int idx = std::min(data.n - 1, int(rng.uniform() * data.n));
      std::memcpy(A0.data() + (size_t)j * d, data.X.data() + (size_t)idx * d,
                  sizeof(double) * d);
      y[j] = targets[idx];  // reuse y as target scratch until overwritten
    }
    Vec& tgt = y;

    affine(A0.data(), 8, d, m.weights[0].data(), m.biases[0].data(), H, A1.data());
    act_forward(m.act, A1.data(), 8 * H);
    affine(A1.data(), 8, H, m.weights[1].data(), m.biases[1].data(), H, A2.data());
    act_forward(m.act, A2.data(), 8 * H);
    affine(A2.data(), 8, H, m.weights[2].data(), m.biases[2].data(), H, A3.data());
    act_forward(m.act, A3.data(), 8 * H);
    double out[8];
    affine(A3.data(), 8, H, m.weights[3].data(), m.biases[3].data(), 1, out);
    for (int b = 0; b < 8; ++b) dy[b] = huber(out[b], tgt[b], cfg.huber_delta).second / 8.0;

    st.step += 1;
    st.beta1_pow *= cfg.adam_beta1;
    st.beta2_pow *= cfg.adam_beta2;
    const double bc1 = 1.0 - st.beta1_pow, bc2 = 1.0 - st.beta2_pow;
    const double alpha = cfg.lr / bc1, vscale = 1.0 / bc2;
    const double decay = 1.0 - cfg.lr * cfg.weight_decay;

    // Output layer: gradient and delta use pre-update weights.
    double gW4[512];  // H <= 512 by construction of the eligible shapes
    double gb4 = 0.0;
    for (int b = 0; b < 8; ++b) gb4 += dy[b];
    for (int k = 0; k < H; ++k) {
      double s = 0.0;
      for (int b = 0; b < 8; ++b) s = std::fma(A3[(size_t)b * H + k], dy[b], s);
      gW4[k] = s;
    }
    for (int b = 0; b < 8; ++b) {
      const double db = dy[b];
      double* dzr = dZ.data() + (size_t)b * H;
      const double* a3r = A3.data() + (size_t)b * H;
      const double* w4 = m.weights[3].data();
#pragma omp simd
      for (int k = 0; k < H; ++k) dzr[k] = db * w4[k] * act_deriv(m.act, a3r[k]);
    }
    adamw_tensor(m.weights[3].data(), gW4, st.m_w[3].data(), st.v_w[3].data(), H, cfg.lr,
                 cfg.weight_decay, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
    adamw_tensor(m.biases[3].data(), &gb4, st.m_b[3].data(), st.v_b[3].data(), 1, cfg.lr,
                 cfg.weight_decay, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);

    // Hidden layers 3 and 2: fused input-grad + weight-grad + AdamW.
    for (int layer = 2; layer >= 1; --layer) {
      update_bias(m.biases[layer], st.m_b[layer], st.v_b[layer], dZ, cfg, bc1, bc2);
      transpose_to_groups8(dZ.data(), H, 0, dZT.data());
      fused_hidden_update(layer == 2 ? A2.data() : A1.data(), dZ.data(), dZT.data(),
                          m.weights[layer].data(), st.m_w[layer].data(),
                          st.v_w[layer].data(), dAT.data(), H, H, alpha, vscale, decay,
                          cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
      // Next delta: through the activation below this layer.
      const double* Abelow = layer == 2 ? A2.data() : A1.data();
      for (int k = 0; k < H; ++k) {
        const double* src = dAT.data() + (size_t)k * 8;
        double* dst = dZT2.data() + (size_t)k * 8;
        for (int b = 0; b < 8; ++b)
          dst[b] = src[b] * act_deriv(m.act, Abelow[(size_t)b * H + k]);
      }
      transpose_from_groups8(dZT2.data(), H, 0, 8, dZ.data());
    }

    // Input layer.
    update_bias(m.biases[0], st.m_b[0], st.v_b[0], dZ, cfg, bc1, bc2);
    for (int k = 0; k < d; ++k) {
      double grow[512];
      std::memset(grow, 0, sizeof(double) * H);
      for (int b = 0; b < 8; ++b) {
        const double ak = A0[(size_t)b * d + k];
        const double* dzr = dZ.data() + (size_t)b * H;
#pragma omp simd
        for (int o = 0; o < H; ++o) grow[o] = std::fma(ak, dzr[o], grow[o]);
      }
      adamw_tensor(m.weights[0].data() + (size_t)k * H, grow,
                   st.m_w[0].data() + (size_t)k * H, st.v_w[0].data() + (size_t)k * H, H,
                   cfg.lr, cfg.weight_decay, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                   bc1, bc2);
    }
  }

  void update_bias(Vec& bias, Vec& mb, Vec& vb, const Vec& dZrows, const TrainConfig& cfg,
                   double bc1, double bc2) {
    double gb[512];
    for (int o = 0; o < H; ++o) {
      double s = 0.0;
      for (int b = 0; b < 8; ++b) s += dZrows[(size_t)b * H + o];
      gb[o] = s;
    }
    adamw_tensor(bias.data(), gb, mb.data(), vb.data(), H, cfg.lr, cfg.weight_decay,
                 cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
  }
};
#endif  // SFORGE_AVX512

}  // namespace

void fit_adamw(Model& m, const Dataset& data, const TrainConfig& cfg, Rng& rng) {
  check_model(m);
  check_dataset(m, data, cfg);
  const Vec targets = resolve_targets(m, data, cfg);
#ifdef SFORGE_AVX512
  if (fast_path_eligible(m, cfg)) {
    FastTrainer tr(m);
    tr.st = make_adamw_state(m);
    for (int it = 0; it < cfg.iters; ++it) tr.step(m, data, targets, cfg, rng);
    return;
  }
#endif
  fit_reference(m, data, targets, cfg, rng);
}

double mean_huber_loss(const Model& m, const Dataset& data, double delta) {
  check_model(m);
  if (data.n <= 0) throw ConfigError("empty dataset");
  Vec preds(data.n);
  forward_batch(m, data.X.data(), data.n, preds.data());
  double mu = m.reward_std ? m.reward_std->mean : 0.0;
  double sd = m.reward_std ? m.reward_std->std : 1.0;
  double loss = 0.0;
  for (int i = 0; i < data.n; ++i)
    loss += huber(preds[i], (data.y[i] - mu) / sd, delta).first;
  return loss / data.n;
}

double predict_reward(const Model& m, const Vec& z) {
  const double f = forward(m, z);
  if (m.reward_std) return f * m.reward_std->std + m.reward_std->mean;
  return f;
}

}  // namespace sforge
