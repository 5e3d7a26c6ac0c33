#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ipdmeta {

// Dense design matrix with labeled columns, row-major storage.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::vector<std::string> labels, std::size_t n_rows);

  // Assemble from per-column vectors (all of equal length).
  static DesignMatrix from_columns(std::vector<std::string> labels,
                                   const std::vector<std::vector<double>>& columns);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  double& at(std::size_t r, std::size_t c) { return values_[r * labels_.size() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * labels_.size() + c]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<std::string> labels_;
  std::size_t n_rows_ = 0;
  std::vector<double> values_;
};

// Ordinary least-squares fit: labeled coefficients, coefficient
// covariance sigma2 * (X'X)^-1, residual variance and degrees of freedom.
struct FitResult {
  std::vector<std::string> labels;
  std::vector<double> coefficients;
  std::vector<double> vcov;  // p x p, row-major
  double sigma2 = 0.0;
  std::int64_t dof = 0;
  std::size_t n_rows = 0;

  std::size_t index_of(const std::string& label) const;
  bool has(const std::string& label) const;
  double coefficient(const std::string& label) const;
  double se(const std::string& label) const;
};

// Least squares via column-pivoted Householder QR; the covariance comes
// from the R factor, never from explicitly inverted normal equations.
// A pivot smaller than 1e-10 times the largest pivot raises NumericError
// naming the dependent column; n_rows <= n_cols raises NumericError.
FitResult fit_least_squares(const DesignMatrix& design, std::span<const double> y);

enum class Reference { normal, student_t };

struct WaldSummary {
  double estimate = 0.0;
  double se = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Two-sided Wald test and 95% CI for one labeled coefficient. student_t
// uses the fit's residual dof. Zero standard error raises NumericError.
WaldSummary wald(const FitResult& fit, const std::string& label, Reference reference);

// Wald summary from a bare (estimate, se) pair with normal reference;
// used for pooled effects.
WaldSummary wald_from_estimate(double estimate, double se);

}  // namespace ipdmeta
