#include "qrshape/zonal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "qrshape/error.hpp"

namespace qrshape {

namespace {

constexpr double kAlpha = 2.0;  // Jack parameter of the zonal polynomials

void append_partitions(int remaining, int max_part, int max_length, std::vector<int>& prefix,
                       std::vector<Partition>& out) {
  if (remaining == 0) {
    out.push_back({prefix});
    return;
  }
  if (static_cast<int>(prefix.size()) == max_length) return;
  for (int p = std::min(remaining, max_part); p >= 1; --p) {
    prefix.push_back(p);
    append_partitions(remaining - p, p, max_length, prefix, out);
    prefix.pop_back();
  }
}

// Hook lengths of cell (i, j), 1-based, for the Jack parameter kAlpha.
double upper_hook(const Partition& k, const Partition& kc, int i, int j) {
  return kc.parts[j - 1] - i + kAlpha * (k.parts[i - 1] - j + 1);
}
double lower_hook(const Partition& k, const Partition& kc, int i, int j) {
  return kc.parts[j - 1] - i + 1 + kAlpha * (k.parts[i - 1] - j);
}

int conj_at(const Partition& kc, int j) {
  return j - 1 < static_cast<int>(kc.parts.size()) ? kc.parts[j - 1] : 0;
}

// log of the J-normalised branching coefficient beta_{kappa mu}.
double log_branching(const Partition& kappa, const Partition& mu) {
  const Partition kc = kappa.conjugate();
  const Partition mc = mu.conjugate();
  double acc = 0.0;
  for (int i = 1; i <= kappa.length(); ++i)
    for (int j = 1; j <= kappa.parts[i - 1]; ++j) {
      const bool same = kc.parts[j - 1] == conj_at(mc, j);
      acc += std::log(same ? upper_hook(kappa, kc, i, j) : lower_hook(kappa, kc, i, j));
    }
  for (int i = 1; i <= mu.length(); ++i)
    for (int j = 1; j <= mu.parts[i - 1]; ++j) {
      const bool same = kc.parts[j - 1] == mc.parts[j - 1];
      acc -= std::log(same ? upper_hook(mu, mc, i, j) : lower_hook(mu, mc, i, j));
    }
  return acc;
}

double log_lower_product(const Partition& k) {
  const Partition kc = k.conjugate();
  double acc = 0.0;
  for (int i = 1; i <= k.length(); ++i)
    for (int j = 1; j <= k.parts[i - 1]; ++j) acc += std::log(lower_hook(k, kc, i, j));
  return acc;
}

double log_upper_product(const Partition& k) {
  const Partition kc = k.conjugate();
  double acc = 0.0;
  for (int i = 1; i <= k.length(); ++i)
    for (int j = 1; j <= k.parts[i - 1]; ++j) acc += std::log(upper_hook(k, kc, i, j));
  return acc;
}

// log of C_kappa / P_kappa (P monic).
double log_zonal_scale(const Partition& k) {
  const int t = k.weight();
  return t * std::log(kAlpha) + std::lgamma(t + 1.0) - log_upper_product(k);
}

// All mu with kappa/mu a horizontal strip: kappa_{i+1} <= mu_i <= kappa_i.
void horizontal_strips(const Partition& kappa, std::size_t i, std::vector<int>& cur,
                       std::vector<Partition>& out) {
  if (i == kappa.parts.size()) {
    Partition mu;
    for (int v : cur)
      if (v > 0) mu.parts.push_back(v);
    out.push_back(std::move(mu));
    return;
  }
  const int lo = i + 1 < kappa.parts.size() ? kappa.parts[i + 1] : 0;
  for (int v = kappa.parts[i]; v >= lo; --v) {
    cur.push_back(v);
    horizontal_strips(kappa, i + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<Partition> horizontal_strips(const Partition& kappa) {
  std::vector<Partition> out;
  std::vector<int> cur;
  horizontal_strips(kappa, 0, cur, out);
  return out;
}

// ---------------------------------------------------------------------------
// Reference evaluation (J normalisation, memoised per call).

class JackReference {
 public:
  explicit JackReference(std::span<const double> x) : x_(x.begin(), x.end()) {}

  double J(const Partition& kappa, int vars) {
    if (kappa.length() > vars) return 0.0;
    if (vars == 0) return kappa.length() == 0 ? 1.0 : 0.0;
    const auto key = std::make_pair(kappa.parts, vars);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double s = 0.0;
    const int t = kappa.weight();
    for (const Partition& mu : horizontal_strips(kappa)) {
      if (mu.length() > vars - 1) continue;
      const double inner = J(mu, vars - 1);
      if (inner == 0.0) continue;
      s += inner * std::pow(x_[vars - 1], t - mu.weight()) * std::exp(log_branching(kappa, mu));
    }
    memo_.emplace(key, s);
    return s;
  }

 private:
  std::vector<double> x_;
  std::map<std::pair<std::vector<int>, int>, double> memo_;
};

// ---------------------------------------------------------------------------
// Cached evaluation plan for the factored weight degree(t) / (a)_kappa.

struct Strip {
  int degree;
  int index;
  int length;
  double psi;  // branching coefficient for monic P
};

struct DegreeData {
  std::vector<Partition> parts;
  std::vector<double> scaled_weight;  // sign * exp(log(gamma/(a)_kappa) - shift)
  double shift = 0.0;
  std::vector<double> one_row;                // vars == 2: coefficients of P_(t)(x1, x2)
  std::vector<std::vector<Strip>> strips;     // vars >= 3
};

class SeriesPlan {
 public:
  SeriesPlan(int vars, std::optional<double> a, int capacity)
      : vars_(vars), a_(a), degrees_(capacity + 1) {}

  int vars() const { return vars_; }
  int capacity() const { return static_cast<int>(degrees_.size()) - 1; }

  const DegreeData& degree(int t) {
    if (t >= built_.load(std::memory_order_acquire)) {
      std::lock_guard lock(mutex_);
      while (built_.load(std::memory_order_relaxed) <= t) {
        build(built_.load(std::memory_order_relaxed));
        built_.fetch_add(1, std::memory_order_release);
      }
    }
    return degrees_[t];
  }

 private:
  void build(int t) {
    DegreeData& d = degrees_[t];
    d.parts = partitions_of(t, std::max(vars_, 0));
    if (vars_ == 0 && t > 0) d.parts.clear();
    std::vector<double> lw(d.parts.size());
    std::vector<int> sg(d.parts.size(), 1);
    for (std::size_t i = 0; i < d.parts.size(); ++i) {
      lw[i] = log_zonal_scale(d.parts[i]);
      if (a_) {
        const LogReal p = log_gen_pochhammer(*a_, d.parts[i]);
        if (p.is_zero()) throw DomainError("zonal series: (a)_kappa vanishes");
        lw[i] -= p.log_abs;
        sg[i] = p.sign;
      }
    }
    d.shift = lw.empty() ? 0.0 : *std::max_element(lw.begin(), lw.end());
    d.scaled_weight.resize(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) d.scaled_weight[i] = sg[i] * std::exp(lw[i] - d.shift);

    if (vars_ == 2) {
      // P_(t)(x1, x2) = t!/(1/2)_t sum_j g_j g_{t-j} x1^{t-j} x2^j, g_k = (1/2)_k / k!.
      const double lh = std::lgamma(0.5);
      auto log_g = [&](int k) { return std::lgamma(k + 0.5) - lh - std::lgamma(k + 1.0); };
      const double lead = std::lgamma(t + 1.0) - (std::lgamma(t + 0.5) - lh);
      d.one_row.resize(t + 1);
      for (int j = 0; j <= t; ++j) d.one_row[j] = std::exp(lead + log_g(j) + log_g(t - j));
    } else if (vars_ >= 3) {
      d.strips.resize(d.parts.size());
      for (std::size_t i = 0; i < d.parts.size(); ++i) {
        const Partition& kappa = d.parts[i];
        index_.emplace(kappa.parts, std::make_pair(t, static_cast<int>(i)));
        const double lc_kappa = log_lower_product(kappa);
        for (const Partition& mu : horizontal_strips(kappa)) {
          if (mu.length() > vars_ - 1) continue;
          const auto [deg, idx] = index_.at(mu.parts);
          const double lpsi = log_branching(kappa, mu) + log_lower_product(mu) - lc_kappa;
          d.strips[i].push_back({deg, idx, mu.length(), std::exp(lpsi)});
        }
      }
    }
  }

  int vars_;
  std::optional<double> a_;
  std::vector<DegreeData> degrees_;
  std::map<std::vector<int>, std::pair<int, int>> index_;
  std::atomic<int> built_{0};
  std::mutex mutex_;
};

std::shared_ptr<SeriesPlan> plan_for(int vars, std::optional<double> a, int max_degree) {
  static std::mutex mutex;
  static std::map<std::tuple<int, bool, double>, std::shared_ptr<SeriesPlan>> cache;
  const auto key = std::make_tuple(vars, a.has_value(), a.value_or(0.0));
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot || slot->capacity() < max_degree) {
    // Plans only grow; a larger replacement leaves earlier holders intact.
    slot = std::make_shared<SeriesPlan>(vars, a, std::max(max_degree, 120));
  }
  return slot;
}

// Per-call evaluation of sum_{kappa |- t} w_kappa P_kappa(x) over increasing t.
class DegreeEvaluator {
 public:
  DegreeEvaluator(SeriesPlan& plan, std::span<const double> x) : plan_(plan), x_(x.begin(), x.end()) {}

  // Returns sum_kappa sign * exp(lw_kappa - shift_t) * P_kappa(x); shift via `shift`.
  double operator()(int t, double& shift) {
    const DegreeData& d = plan_.degree(t);
    shift = d.shift;
    const int vars = plan_.vars();
    if (d.parts.empty()) return 0.0;
    if (vars == 0) return d.scaled_weight[0];
    if (vars == 1) return d.scaled_weight[0] * std::pow(x_[0], t);
    if (vars == 2) return two_variable(t, d);
    return general(t, d);
  }

 private:
  double two_variable(int t, const DegreeData& d) {
    const double x1 = x_[0], x2 = x_[1];
    // P_(t)(x1, x2) by Horner in x2/x1 would divide by x1; use explicit powers.
    double p = 0.0, pw1 = 1.0;
    std::vector<double> pow2(t + 1);
    pow2[0] = 1.0;
    for (int j = 1; j <= t; ++j) pow2[j] = pow2[j - 1] * x2;
    for (int j = t; j >= 0; --j) {
      p += d.one_row[j] * pw1 * pow2[j];
      pw1 *= x1;
    }
    one_row_values_.push_back(p);
    const double e2 = x1 * x2;
    double acc = 0.0, pe = 1.0;
    for (std::size_t k2 = 0; k2 < d.parts.size(); ++k2) {
      acc += d.scaled_weight[k2] * pe * one_row_values_[t - 2 * k2];
      pe *= e2;
    }
    return acc;
  }

  double general(int t, const DegreeData& d) {
    const int vars = plan_.vars();
    values_.emplace_back(d.parts.size() * vars, 0.0);
    auto& cur = values_.back();
    double acc = 0.0;
    for (std::size_t i = 0; i < d.parts.size(); ++i) {
      const int len = d.parts[i].length();
      if (len <= 1) cur[i * vars] = std::pow(x_[0], t);
      for (int j = 2; j <= vars; ++j) {
        if (len > j) continue;
        double s = 0.0;
        for (const Strip& st : d.strips[i]) {
          if (st.length > j - 1) continue;
          const double inner = values_[st.degree][st.index * vars + (j - 2)];
          if (inner != 0.0) s += inner * std::pow(x_[j - 1], t - st.degree) * st.psi;
        }
        cur[i * vars + (j - 1)] = s;
      }
      acc += d.scaled_weight[i] * cur[i * vars + (vars - 1)];
    }
    return acc;
  }

  SeriesPlan& plan_;
  std::vector<double> x_;
  std::vector<double> one_row_values_;
  std::vector<std::vector<double>> values_;
};

struct Truncation {
  const SeriesControl& ctrl;
  SeriesResult result;
  int small_run = 0;

  // Adds one degree; returns true when the stopping rule fires.
  bool add(int t, LogReal term) {
    result.value += term;
    result.degrees_used = t;
    const bool small =
        term.is_zero() ||
        (!result.value.is_zero() && term.log_abs - result.value.log_abs <= std::log(ctrl.rel_tol));
    result.last_term_ratio =
        term.is_zero() ? 0.0
        : result.value.is_zero() ? std::numeric_limits<double>::infinity()
                                 : std::exp(term.log_abs - result.value.log_abs);
    small_run = (t > 0 && small) ? small_run + 1 : 0;
    if (small_run >= 2) result.converged = true;
    return result.converged;
  }
};

void check_control(const SeriesControl& ctrl) {
  if (ctrl.max_degree < 0) throw DomainError("series control: max_degree must be >= 0");
  if (!(ctrl.rel_tol > 0.0)) throw DomainError("series control: rel_tol must be positive");
}

}  // namespace

int Partition::weight() const { return std::accumulate(parts.begin(), parts.end(), 0); }

Partition Partition::conjugate() const {
  Partition c;
  if (parts.empty()) return c;
  c.parts.resize(parts.front());
  for (int j = 0; j < parts.front(); ++j)
    c.parts[j] = static_cast<int>(std::count_if(parts.begin(), parts.end(), [j](int p) { return p > j; }));
  return c;
}

std::vector<Partition> partitions_of(int t) { return partitions_of(t, std::max(t, 0)); }

std::vector<Partition> partitions_of(int t, int max_length) {
  if (t < 0) throw DomainError("partitions_of: negative weight");
  std::vector<Partition> out;
  std::vector<int> prefix;
  append_partitions(t, t, max_length, prefix, out);
  return out;
}

double gen_pochhammer(double a, const Partition& kappa) {
  double v = 1.0;
  for (int j = 0; j < kappa.length(); ++j) {
    const double base = a - 0.5 * j;
    for (int i = 0; i < kappa.parts[j]; ++i) v *= base + i;
  }
  return v;
}

LogReal log_gen_pochhammer(double a, const Partition& kappa) {
  LogReal v = LogReal::from_log(0.0);
  for (int j = 0; j < kappa.length(); ++j) {
    const double base = a - 0.5 * j;
    const int len = kappa.parts[j];
    if (base > 0.0) {
      v *= LogReal::from_log(std::lgamma(base + len) - std::lgamma(base));
    } else {
      for (int i = 0; i < len; ++i) v *= LogReal::from_value(base + i);
    }
  }
  return v;
}

double multivariate_gamma(int s, double a) {
  if (s < 1) throw DomainError("multivariate_gamma: order must be >= 1");
  double v = std::pow(std::numbers::pi, s * (s - 1) / 4.0);
  for (int j = 1; j <= s; ++j) {
    const double arg = a - (j - 1) / 2.0;
    if (arg <= 0.0 && arg == std::floor(arg)) throw DomainError("multivariate_gamma: pole");
    v *= std::tgamma(arg);
  }
  return v;
}

double log_multivariate_gamma(int s, double a) {
  if (s < 1) throw DomainError("multivariate_gamma: order must be >= 1");
  double v = s * (s - 1) / 4.0 * std::log(std::numbers::pi);
  for (int j = 1; j <= s; ++j) {
    const double arg = a - (j - 1) / 2.0;
    if (arg <= 0.0 && arg == std::floor(arg)) throw DomainError("multivariate_gamma: pole");
    v += std::lgamma(arg);
  }
  return v;
}

double zonal_polynomial(const Partition& kappa, std::span<const double> eigs) {
  if (eigs.empty()) throw DimensionError("zonal_polynomial: empty eigenvalue list");
  if (kappa.length() > static_cast<int>(eigs.size())) return 0.0;
  const int t = kappa.weight();
  const double log_norm = t * std::log(kAlpha) + std::lgamma(t + 1.0) - log_upper_product(kappa) -
                          log_lower_product(kappa);
  JackReference ref(eigs);
  return std::exp(log_norm) * ref.J(kappa, static_cast<int>(eigs.size()));
}

std::vector<double> significant_eigenvalues(const Matrix& A) {
  if (A.rows() != A.cols()) throw DimensionError("series argument must be square");
  if (A.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double big = ev.cwiseAbs().maxCoeff();
  std::vector<double> out;
  for (int i = static_cast<int>(ev.size()) - 1; i >= 0; --i)
    if (std::fabs(ev(i)) > 1e-13 * big) out.push_back(ev(i));
  return out;
}

SeriesResult weighted_zonal_series(std::span<const double> eigs, const SeriesTermWeight& weight,
                                   const SeriesControl& ctrl) {
  check_control(ctrl);
  std::vector<double> x;
  double scale = 0.0;
  for (double v : eigs) scale = std::max(scale, std::fabs(v));
  for (double v : eigs)
    if (std::fabs(v) > 1e-13 * scale) x.push_back(v / scale);
  const double log_scale = scale > 0.0 ? std::log(scale) : 0.0;

  auto plan = plan_for(static_cast<int>(x.size()), weight.pochhammer_a, ctrl.max_degree);
  DegreeEvaluator eval(*plan, x);
  Truncation trunc{ctrl, {}};
  for (int t = 0; t <= ctrl.max_degree; ++t) {
    double shift = 0.0;
    const double z = eval(t, shift);
    const LogReal term = LogReal::from_value(z) * LogReal::from_log(shift + t * log_scale) *
                         weight.degree_factor(t);
    if (trunc.add(t, term)) break;
  }
  return trunc.result;
}

SeriesResult weighted_zonal_series(const Matrix& A, const SeriesTermWeight& weight,
                                   const SeriesControl& ctrl) {
  const auto eig = significant_eigenvalues(A);
  return weighted_zonal_series(std::span<const double>(eig), weight, ctrl);
}

SeriesResult weighted_zonal_series_reference(std::span<const double> eigs,
                                             const GeneralTermWeight& weight,
                                             const SeriesControl& ctrl) {
  check_control(ctrl);
  Truncation trunc{ctrl, {}};
  std::vector<double> x(eigs.begin(), eigs.end());
  if (x.empty()) x.push_back(0.0);
  for (int t = 0; t <= ctrl.max_degree; ++t) {
    LogReal term;
    for (const Partition& kappa : partitions_of(t, static_cast<int>(x.size())))
      term += LogReal::from_value(zonal_polynomial(kappa, x)) * weight(t, kappa);
    if (trunc.add(t, term)) break;
  }
  return trunc.result;
}

}  // namespace qrshape
