#include "musinger/experiment/stats.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "musinger/core/error.hpp"

namespace musinger::experiment {

namespace {

// Continued fraction for I_x(a, b), evaluated with the modified Lentz method.
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  return h;
}

AnovaResult make_result(std::string effect, double ss_effect, int df_effect, double ss_error, int df_error,
                        double scale, double alpha) {
  AnovaResult r;
  r.effect = std::move(effect);
  r.df_between = df_effect;
  r.df_error = df_error;
  r.alpha = alpha;
  r.ss_effect = ss_effect;
  r.ss_error = ss_error;
  // Sums below this, relative to the raw sum of squares, are rounding residue
  // of an exactly zero quantity.
  const double eps = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
  const bool effect_zero = ss_effect <= eps;
  const bool error_zero = ss_error <= eps;
  if (effect_zero) {
    r.F = 0.0;
    r.p = 1.0;
  } else if (error_zero) {
    r.F = std::numeric_limits<double>::infinity();
    r.p = 0.0;
  } else {
    r.F = (ss_effect / df_effect) / (ss_error / df_error);
    r.p = f_upper_tail(r.F, df_effect, df_error);
  }
  return r;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Throws MissingCells for ragged or NaN cells; returns (a, b) level counts.
std::pair<std::size_t, std::size_t> check_table3(const Table3& scores, const std::string& name_a,
                                                 const std::string& name_b) {
  const std::size_t n = scores.size();
  if (n == 0) throw Error(Errc::EmptyData, "no subjects");
  std::size_t na = 0, nb = 0;
  for (const auto& s : scores) {
    na = std::max(na, s.size());
    for (const auto& row : s) nb = std::max(nb, row.size());
  }
  std::vector<std::string> missing;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        const bool present = i < scores[s].size() && j < scores[s][i].size() && !std::isnan(scores[s][i][j]);
        if (!present)
          missing.push_back("(subject " + std::to_string(s) + ", " + name_a + " " + std::to_string(i) + ", " +
                            name_b + " " + std::to_string(j) + ")");
      }
  if (!missing.empty()) {
    std::string msg = "incomplete table, missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(Errc::MissingCells, msg);
  }
  if (n < 2 || na < 2 || nb < 2)
    throw Error(Errc::InvalidInput, "two-factor ANOVA needs >= 2 subjects and >= 2 levels per factor");
  return {na, nb};
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(Errc::DomainError, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::DomainError, "incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast only on one side of the mean; use symmetry.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double f_upper_tail(double f, double df1, double df2) {
  if (!(df1 >= 1.0) || !(df2 >= 1.0)) throw Error(Errc::DomainError, "F distribution needs df >= 1");
  if (std::isnan(f) || f < 0.0) throw Error(Errc::DomainError, "F statistic must be >= 0");
  if (f == 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const double x = df2 / (df2 + df1 * f);
  return regularized_incomplete_beta(x, df2 / 2.0, df1 / 2.0);
}

OneWayDecomposition one_way_sums(std::span<const std::vector<double>> groups) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (double x : g) total += x;
    n += g.size();
  }
  if (n == 0) throw Error(Errc::EmptyData, "no scores");
  const double grand = total / static_cast<double>(n);
  OneWayDecomposition out;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    const double m = mean_of(g);
    out.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) {
      out.ss_within += (x - m) * (x - m);
      out.ss_total += (x - grand) * (x - grand);
    }
  }
  return out;
}

AnovaResult anova_one_way(std::span<const std::vector<double>> groups, double alpha) {
  if (groups.size() < 2) throw Error(Errc::InvalidInput, "one-way ANOVA needs at least 2 groups");
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(Errc::InvalidInput, "every group needs at least 2 scores");
    n += g.size();
  }
  const auto k = static_cast<int>(groups.size());
  const auto sums = one_way_sums(groups);
  double raw = 0.0;
  for (const auto& g : groups)
    for (double x : g) raw += x * x;
  return make_result("between-groups", sums.ss_between, k - 1, sums.ss_within, static_cast<int>(n) - k, raw,
                     alpha);
}

AnovaResult anova_within_one_way(std::span<const std::vector<double>> scores, double alpha) {
  const std::size_t n = scores.size();
  if (n < 2) throw Error(Errc::InvalidInput, "repeated-measures ANOVA needs at least 2 subjects");
  const std::size_t k = scores.front().size();
  if (k < 2) throw Error(Errc::InvalidInput, "repeated-measures ANOVA needs at least 2 levels");
  std::vector<std::string> missing;
  for (std::size_t s = 0; s < n; ++s)
    if (scores[s].size() != k) missing.push_back("subject " + std::to_string(s));
  if (!missing.empty()) {
    std::string msg = "incomplete subject x level table:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(Errc::MissingCells, msg);
  }

  double grand = 0.0;
  std::vector<double> subj(n, 0.0), level(k, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < k; ++j) {
      subj[s] += scores[s][j] / static_cast<double>(k);
      level[j] += scores[s][j] / static_cast<double>(n);
      grand += scores[s][j];
    }
  grand /= static_cast<double>(n * k);
  double ss_total = 0.0, ss_subj = 0.0, ss_level = 0.0, raw = 0.0;
  for (const auto& row : scores)
    for (double x : row) raw += x * x;
  for (std::size_t s = 0; s < n; ++s) ss_subj += static_cast<double>(k) * (subj[s] - grand) * (subj[s] - grand);
  for (std::size_t j = 0; j < k; ++j) ss_level += static_cast<double>(n) * (level[j] - grand) * (level[j] - grand);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < k; ++j) ss_total += (scores[s][j] - grand) * (scores[s][j] - grand);
  const double ss_error = std::max(0.0, ss_total - ss_subj - ss_level);
  const int dfa = static_cast<int>(k) - 1;
  return make_result("within-subjects", ss_level, dfa, ss_error, dfa * (static_cast<int>(n) - 1), raw, alpha);
}

TwoFactorResult anova_two_factor(const Table3& scores, std::string name_a, std::string name_b, double alpha) {
  const std::size_t n = scores.size();
  const auto [na, nb] = check_table3(scores, name_a, name_b);

  const double dn = static_cast<double>(n), da = static_cast<double>(na), db = static_cast<double>(nb);
  double grand = 0.0;
  std::vector<double> m_s(n, 0.0), m_a(na, 0.0), m_b(nb, 0.0);
  std::vector<std::vector<double>> m_sa(n, std::vector<double>(na, 0.0)), m_sb(n, std::vector<double>(nb, 0.0)),
      m_ab(na, std::vector<double>(nb, 0.0));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        const double x = scores[s][i][j];
        grand += x;
        m_s[s] += x / (da * db);
        m_a[i] += x / (dn * db);
        m_b[j] += x / (dn * da);
        m_sa[s][i] += x / db;
        m_sb[s][j] += x / da;
        m_ab[i][j] += x / dn;
      }
  grand /= dn * da * db;

  auto sq = [grand](double m) { return (m - grand) * (m - grand); };
  double ss_total = 0.0, ss_s = 0.0, ss_a = 0.0, ss_b = 0.0, cells_sa = 0.0, cells_sb = 0.0, cells_ab = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    ss_s += da * db * sq(m_s[s]);
    for (std::size_t i = 0; i < na; ++i) {
      cells_sa += db * sq(m_sa[s][i]);
      for (std::size_t j = 0; j < nb; ++j) ss_total += sq(scores[s][i][j]);
    }
    for (std::size_t j = 0; j < nb; ++j) cells_sb += da * sq(m_sb[s][j]);
  }
  for (std::size_t i = 0; i < na; ++i) {
    ss_a += dn * db * sq(m_a[i]);
    for (std::size_t j = 0; j < nb; ++j) cells_ab += dn * sq(m_ab[i][j]);
  }
  for (std::size_t j = 0; j < nb; ++j) ss_b += dn * da * sq(m_b[j]);

  const double raw = ss_total + dn * da * db * grand * grand;
  const double ss_as = std::max(0.0, cells_sa - ss_s - ss_a);
  const double ss_bs = std::max(0.0, cells_sb - ss_s - ss_b);
  const double ss_ab = std::max(0.0, cells_ab - ss_a - ss_b);
  const double ss_abs = std::max(0.0, ss_total - ss_s - ss_a - ss_b - ss_as - ss_bs - ss_ab);

  const int dfs = static_cast<int>(n) - 1;
  const int dfa = static_cast<int>(na) - 1;
  const int dfb = static_cast<int>(nb) - 1;

  TwoFactorResult out;
  out.factor_a = make_result(name_a, ss_a, dfa, ss_as, dfa * dfs, raw, alpha);
  out.factor_b = make_result(name_b, ss_b, dfb, ss_bs, dfb * dfs, raw, alpha);
  out.interaction = make_result(name_a + " x " + name_b, ss_ab, dfa * dfb, ss_abs, dfa * dfb * dfs, raw, alpha);
  std::ostringstream conv;
  conv << "two-way repeated measures, both factors within subjects; each effect tested against its "
          "subject interaction: "
       << name_a << " df (" << dfa << ", " << dfa * dfs << "), " << name_b << " df (" << dfb << ", " << dfb * dfs
       << "), " << name_a << " x " << name_b << " df (" << dfa * dfb << ", " << dfa * dfb * dfs << ")";
  out.df_convention = conv.str();
  return out;
}

TwoFactorResult anova_two_factor_between(const Table3& scores, std::string name_a, std::string name_b,
                                         double alpha) {
  const std::size_t n = scores.size();
  const auto [na, nb] = check_table3(scores, name_a, name_b);
  const double dn = static_cast<double>(n), da = static_cast<double>(na), db = static_cast<double>(nb);
  double grand = 0.0;
  std::vector<double> m_a(na, 0.0), m_b(nb, 0.0);
  std::vector<std::vector<double>> m_ab(na, std::vector<double>(nb, 0.0));
  for (const auto& s : scores)
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        const double x = s[i][j];
        grand += x / (dn * da * db);
        m_a[i] += x / (dn * db);
        m_b[j] += x / (dn * da);
        m_ab[i][j] += x / dn;
      }
  double ss_a = 0.0, ss_b = 0.0, ss_ab = 0.0, ss_err = 0.0, ss_total = 0.0;
  for (std::size_t i = 0; i < na; ++i) ss_a += dn * db * (m_a[i] - grand) * (m_a[i] - grand);
  for (std::size_t j = 0; j < nb; ++j) ss_b += dn * da * (m_b[j] - grand) * (m_b[j] - grand);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      const double e = m_ab[i][j] - m_a[i] - m_b[j] + grand;
      ss_ab += dn * e * e;
    }
  for (const auto& s : scores)
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        ss_err += (s[i][j] - m_ab[i][j]) * (s[i][j] - m_ab[i][j]);
        ss_total += (s[i][j] - grand) * (s[i][j] - grand);
      }
  const int dfa = static_cast<int>(na) - 1;
  const int dfb = static_cast<int>(nb) - 1;
  const int dfe = static_cast<int>(na * nb * (n - 1));
  const double raw = ss_total + dn * da * db * grand * grand;
  TwoFactorResult out;
  out.factor_a = make_result(name_a, ss_a, dfa, ss_err, dfe, raw, alpha);
  out.factor_b = make_result(name_b, ss_b, dfb, ss_err, dfe, raw, alpha);
  out.interaction = make_result(name_a + " x " + name_b, ss_ab, dfa * dfb, ss_err, dfe, raw, alpha);
  std::ostringstream conv;
  conv << "factorial two-way, subjects' cell scores as independent observations; every effect tested against "
          "the within-cell error with df "
       << dfe;
  out.df_convention = conv.str();
  return out;
}

}  // namespace musinger::experiment
