#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace alliance {
namespace stats {

// Complete n x k grid of real-valued scores: n targets rated by k raters
// (or k repeated runs of the same rater).
class RatingMatrix {
 public:
  RatingMatrix(size_t n_targets, size_t n_raters);

  double& at(size_t target, size_t rater);
  double at(size_t target, size_t rater) const;
  size_t n_targets() const { return n_; }
  size_t n_raters() const { return k_; }

 private:
  size_t n_, k_;
  std::vector<double> values_;
};

enum class IccForm {
  AbsoluteAgreementSingle,  // ICC(A,1): absolute agreement, single measurement
  AbsoluteAgreementMeanOfK  // ICC(A,k): absolute agreement, mean of k measurements
};

struct IccResult {
  double icc = 0;
  IccForm form = IccForm::AbsoluteAgreementMeanOfK;
  double ms_rows = 0, ms_cols = 0, ms_error = 0;
  size_t n = 0, k = 0;
};

// Reliability band per the conventional 0.5 / 0.75 / 0.9 cut-points
// (lower-exclusive): poor, moderate, good, excellent.
std::string icc_band(double icc);

// Intraclass correlation from a two-way ANOVA decomposition. The
// absolute-agreement point estimate is identical under random and mixed
// column effects, so one estimator serves both inter-rater and
// run-consistency uses. Throws DegenerateMatrix when no between-target
// variance exists (e.g. all cells equal).
IccResult icc(const RatingMatrix& m, IccForm form);

struct PearsonResult {
  double r = 0;
  double p_two_sided = 1;
  size_t n = 0;
};

// Pearson correlation with a two-sided p-value from the exact t reference
// distribution (regularized incomplete beta). Requires n >= 3 and nonzero
// variance in both inputs.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

struct WelchResult {
  double t = 0;
  double df = 0;
  double p_two_sided = 1;
};

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom; sample variances use n-1 denominators.
WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

// Student's pooled-variance variant, selectable by flag where group spreads
// are believed equal.
WelchResult student_t(const std::vector<double>& a, const std::vector<double>& b);

// Significance labels: *** p < 0.001, ** p < 0.01, * p < 0.05, else "ns".
// Boundary values take the weaker label.
std::string significance_stars(double p);

// Regularized incomplete beta I_x(a, b); exposed for its own tests.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of a t statistic with (possibly fractional) df.
double student_t_two_sided_p(double t, double df);

double mean(const std::vector<double>& v);
// Sample standard deviation (n-1 denominator); requires n >= 2.
double sample_sd(const std::vector<double>& v);

}  // namespace stats
}  // namespace alliance
