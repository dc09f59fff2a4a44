#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace musinger::experiment {

/// Regularized incomplete beta I_x(a, b) by continued fraction (modified
/// Lentz). Errc::DomainError for a, b <= 0 or x outside [0, 1].
double regularized_incomplete_beta(double x, double a, double b);

/// Upper tail P(F > f) of the F(df1, df2) distribution,
/// I_{df2/(df2 + df1 f)}(df2/2, df1/2). Errc::DomainError for df < 1 or f < 0.
double f_upper_tail(double f, double df1, double df2);

struct AnovaResult {
  std::string effect;
  double F = 0.0;
  int df_between = 0;
  int df_error = 0;
  double p = 1.0;
  double alpha = 0.05;
  double ss_effect = 0.0;
  double ss_error = 0.0;

  bool significant() const noexcept { return p < alpha; }
};

/// Sums of squares of a between-groups decomposition.
struct OneWayDecomposition {
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ss_total = 0.0;
};

OneWayDecomposition one_way_sums(std::span<const std::vector<double>> groups);

/// Classic between-groups one-way ANOVA: F = MS_between / MS_within with
/// df (k - 1, N - k). Requires >= 2 groups with >= 2 scores each. When both
/// mean squares vanish, F = 0 and p = 1.
AnovaResult anova_one_way(std::span<const std::vector<double>> groups, double alpha = 0.05);

/// One-way repeated-measures ANOVA on a subjects x levels table
/// (scores[subject][level]): error term is the subject x level interaction,
/// df (k - 1, (k - 1)(n - 1)).
AnovaResult anova_within_one_way(std::span<const std::vector<double>> scores, double alpha = 0.05);

/// Balanced subject x A x B table, scores[subject][a][b].
using Table3 = std::vector<std::vector<std::vector<double>>>;

struct TwoFactorResult {
  AnovaResult factor_a;
  AnovaResult factor_b;
  AnovaResult interaction;
  /// Human-readable statement of the error terms and df used.
  std::string df_convention;
};

/// Two-way repeated-measures ANOVA (both factors within subjects). Each
/// effect is tested against its own subject interaction:
///   A: MS_A / MS_AxS, df (a-1, (a-1)(n-1))
///   B: MS_B / MS_BxS, df (b-1, (b-1)(n-1))
///   AxB: MS_AB / MS_ABxS, df ((a-1)(b-1), (a-1)(b-1)(n-1))
/// Errc::MissingCells lists absent cells when the table is ragged or holds NaN.
TwoFactorResult anova_two_factor(const Table3& scores, std::string name_a = "A", std::string name_b = "B",
                                 double alpha = 0.05);

/// Factorial two-way ANOVA that treats each subject's cell score as an
/// independent observation (subjects not modelled). Every effect is tested
/// against the pooled within-cell error, df (., ab(n - 1)).
TwoFactorResult anova_two_factor_between(const Table3& scores, std::string name_a = "A",
                                         std::string name_b = "B", double alpha = 0.05);

}  // namespace musinger::experiment
