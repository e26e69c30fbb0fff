#include "alliance/stats.hpp"

#include <cmath>
#include <limits>

#include "alliance/errors.hpp"

namespace alliance {
namespace stats {

RatingMatrix::RatingMatrix(size_t n_targets, size_t n_raters)
    : n_(n_targets), k_(n_raters), values_(n_targets * n_raters, 0.0) {}

double& RatingMatrix::at(size_t target, size_t rater) {
  return values_[target * k_ + rater];
}

double RatingMatrix::at(size_t target, size_t rater) const {
  return values_[target * k_ + rater];
}

std::string icc_band(double icc) {
  if (icc > 0.9) return "excellent";
  if (icc > 0.75) return "good";
  if (icc > 0.5) return "moderate";
  return "poor";
}

IccResult icc(const RatingMatrix& m, IccForm form) {
  const size_t n = m.n_targets(), k = m.n_raters();
  if (n < 2 || k < 2)
    throw DomainError("icc: matrix too small (need n >= 2 targets, k >= 2 raters)");
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j)
      if (!std::isfinite(m.at(i, j))) throw DomainError("icc: non-finite cell");

  double grand = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j) grand += m.at(i, j);
  grand /= static_cast<double>(n * k);

  std::vector<double> row_mean(n, 0), col_mean(k, 0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < k; ++j) row_mean[i] += m.at(i, j);
    row_mean[i] /= static_cast<double>(k);
  }
  for (size_t j = 0; j < k; ++j) {
    for (size_t i = 0; i < n; ++i) col_mean[j] += m.at(i, j);
    col_mean[j] /= static_cast<double>(n);
  }

  double ss_rows = 0, ss_cols = 0, ss_err = 0;
  for (size_t i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  ss_rows *= static_cast<double>(k);
  for (size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_cols *= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < k; ++j) {
      const double resid = m.at(i, j) - row_mean[i] - col_mean[j] + grand;
      ss_err += resid * resid;
    }
  }

  IccResult result;
  result.form = form;
  result.n = n;
  result.k = k;
  result.ms_rows = ss_rows / static_cast<double>(n - 1);
  result.ms_cols = ss_cols / static_cast<double>(k - 1);
  result.ms_error = ss_err / static_cast<double>((n - 1) * (k - 1));

  if (result.ms_rows == 0 && result.ms_cols == 0 && result.ms_error == 0)
    throw DegenerateMatrix("icc: all cells identical");
  if (result.ms_rows == 0)
    throw DegenerateMatrix("icc: no between-target variance");

  const double msr = result.ms_rows, msc = result.ms_cols, mse = result.ms_error;
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  if (form == IccForm::AbsoluteAgreementMeanOfK) {
    result.icc = (msr - mse) / (msr + (msc - mse) / dn);
  } else {
    result.icc = (msr - mse) / (msr + (dk - 1.0) * mse + dk * (msc - mse) / dn);
  }
  return result;
}

// Continued fraction for the incomplete beta (Lentz's method).
static double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw DomainError("incomplete beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw DomainError("t-distribution df must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  // P(|T| >= |t|) = I_x(df/2, 1/2)
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) throw DomainError("sample_sd: need at least 2 values");
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw LengthMismatch("pearson: input lengths differ (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  const size_t n = x.size();
  if (n < 3) throw DomainError("pearson: need at least 3 observations");

  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw ZeroVariance("pearson: constant input");

  PearsonResult result;
  result.n = n;
  result.r = sxy / std::sqrt(sxx * syy);
  // Guard against rounding outside [-1, 1].
  if (result.r > 1.0) result.r = 1.0;
  if (result.r < -1.0) result.r = -1.0;

  const double df = static_cast<double>(n - 2);
  if (std::fabs(result.r) >= 1.0) {
    result.p_two_sided = 0.0;
  } else {
    const double t = result.r * std::sqrt(df / (1.0 - result.r * result.r));
    result.p_two_sided = student_t_two_sided_p(t, df);
  }
  return result;
}

static WelchResult t_test_impl(const std::vector<double>& a,
                               const std::vector<double>& b, bool pooled) {
  if (a.size() < 2 || b.size() < 2)
    throw DomainError("t-test: each sample needs at least 2 values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  double va = 0, vb = 0;
  for (double x : a) va += (x - ma) * (x - ma);
  for (double x : b) vb += (x - mb) * (x - mb);
  va /= (na - 1.0);
  vb /= (nb - 1.0);
  if (va == 0 && vb == 0) {
    throw ZeroVariance(ma == mb ? "t-test: both samples constant and equal"
                                : "t-test: both samples have zero variance");
  }

  WelchResult result;
  if (pooled) {
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    result.t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    result.df = na + nb - 2.0;
  } else {
    const double se2 = va / na + vb / nb;
    result.t = (ma - mb) / std::sqrt(se2);
    result.df = se2 * se2 /
                (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  }
  result.p_two_sided = student_t_two_sided_p(result.t, result.df);
  return result;
}

WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  return t_test_impl(a, b, /*pooled=*/false);
}

WelchResult student_t(const std::vector<double>& a, const std::vector<double>& b) {
  return t_test_impl(a, b, /*pooled=*/true);
}

std::string significance_stars(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw DomainError("p-value outside [0,1]: " + std::to_string(p));
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

}  // namespace stats
}  // namespace alliance
