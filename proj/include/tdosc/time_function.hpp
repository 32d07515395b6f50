#pragma once

// Scalar functions of time used as oscillator coefficients (frequency-squared
// and coupling curves), plus the chain specification that bundles them.
// Instances are immutable after construction and safe to share across threads.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace tdosc {

using json = nlohmann::ordered_json;

class TimeFunction;

namespace detail {

struct Constant {
  double c = 0.0;
  bool operator==(const Constant&) const = default;
};

struct Harmonic {
  double a = 0.0;      // offset
  double b = 0.0;      // amplitude
  double omega = 0.0;  // angular frequency
  double phi = 0.0;    // phase
  bool operator==(const Harmonic&) const = default;
};

struct Polynomial {
  std::vector<double> coeffs;  // c0 + c1 t + c2 t^2 + ...
  bool operator==(const Polynomial&) const = default;
};

// Cubic spline interpolant with not-a-knot end conditions. Four points on a
// cubic polynomial reproduce that polynomial exactly; evaluation outside the
// tabulated range is a domain error, never extrapolation.
struct Tabulated {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> second_derivs;  // spline curvature at the nodes

  bool operator==(const Tabulated& o) const {
    return times == o.times && values == o.values;
  }
};

struct Sum {
  std::vector<TimeFunction> terms;
  bool operator==(const Sum&) const;
};

struct Product {
  std::vector<TimeFunction> terms;
  bool operator==(const Product&) const;
};

using FnVariant = std::variant<Constant, Harmonic, Polynomial, Tabulated, Sum, Product>;

}  // namespace detail

class TimeFunction {
 public:
  TimeFunction() : fn_(detail::Constant{0.0}) {}

  static TimeFunction constant(double c) { return TimeFunction(detail::Constant{c}); }

  // a + b*cos(omega*t + phi)
  static TimeFunction harmonic(double a, double b, double omega, double phi) {
    return TimeFunction(detail::Harmonic{a, b, omega, phi});
  }

  static TimeFunction polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) throw std::invalid_argument("polynomial: empty coefficient list");
    return TimeFunction(detail::Polynomial{std::move(coeffs)});
  }

  static TimeFunction tabulated(std::vector<double> times, std::vector<double> values) {
    detail::Tabulated tab{std::move(times), std::move(values), {}};
    if (tab.times.size() != tab.values.size())
      throw std::invalid_argument("tabulated: times/values size mismatch");
    if (tab.times.size() < 2)
      throw std::invalid_argument("tabulated: need at least two samples");
    for (std::size_t i = 0; i + 1 < tab.times.size(); ++i)
      if (!(tab.times[i] < tab.times[i + 1]))
        throw std::invalid_argument("tabulated: times must be strictly increasing");
    for (double v : tab.times)
      if (!std::isfinite(v)) throw std::invalid_argument("tabulated: non-finite time");
    for (double v : tab.values)
      if (!std::isfinite(v)) throw std::invalid_argument("tabulated: non-finite value");
    tab.second_derivs = spline_second_derivs(tab.times, tab.values);
    return TimeFunction(std::move(tab));
  }

  static TimeFunction sum(std::vector<TimeFunction> terms) {
    if (terms.empty()) throw std::invalid_argument("sum: empty term list");
    return TimeFunction(detail::Sum{std::move(terms)});
  }

  static TimeFunction product(std::vector<TimeFunction> terms) {
    if (terms.empty()) throw std::invalid_argument("product: empty term list");
    return TimeFunction(detail::Product{std::move(terms)});
  }

  double operator()(double t) const { return eval(t); }

  double eval(double t) const {
    return std::visit([t](const auto& f) { return eval_node(f, t); }, fn_);
  }

  // Re-checks structural validity (sizes, monotone tables, finite parameters).
  void validate() const {
    std::visit([](const auto& f) { validate_node(f); }, fn_);
  }

  bool operator==(const TimeFunction& o) const { return fn_ == o.fn_; }

  json to_json() const {
    return std::visit([](const auto& f) { return node_to_json(f); }, fn_);
  }

  static TimeFunction from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
      throw std::invalid_argument("time function: expected object with 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return constant(j.at("c").get<double>());
    if (kind == "harmonic")
      return harmonic(j.at("a").get<double>(), j.at("b").get<double>(),
                      j.at("omega").get<double>(), j.at("phi").get<double>());
    if (kind == "polynomial")
      return polynomial(j.at("coeffs").get<std::vector<double>>());
    if (kind == "tabulated")
      return tabulated(j.at("times").get<std::vector<double>>(),
                       j.at("values").get<std::vector<double>>());
    if (kind == "sum" || kind == "product") {
      std::vector<TimeFunction> terms;
      for (const auto& term : j.at("terms")) terms.push_back(from_json(term));
      return kind == "sum" ? sum(std::move(terms)) : product(std::move(terms));
    }
    throw std::invalid_argument("time function: unknown kind '" + kind + "'");
  }

 private:
  explicit TimeFunction(detail::FnVariant fn) : fn_(std::move(fn)) {}

  static double eval_node(const detail::Constant& f, double) { return f.c; }

  static double eval_node(const detail::Harmonic& f, double t) {
    return f.a + f.b * std::cos(f.omega * t + f.phi);
  }

  static double eval_node(const detail::Polynomial& f, double t) {
    double acc = 0.0;
    for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  static double eval_node(const detail::Tabulated& f, double t) {
    const auto& x = f.times;
    if (t < x.front() || t > x.back())
      throw std::domain_error("tabulated: evaluation at t=" + std::to_string(t) +
                              " outside [" + std::to_string(x.front()) + ", " +
                              std::to_string(x.back()) + "]");
    std::size_t hi = std::upper_bound(x.begin(), x.end(), t) - x.begin();
    if (hi == x.size()) --hi;
    if (hi == 0) ++hi;
    const std::size_t lo = hi - 1;
    const double h = x[hi] - x[lo];
    const double A = (x[hi] - t) / h, B = (t - x[lo]) / h;
    const double Mlo = f.second_derivs[lo], Mhi = f.second_derivs[hi];
    return A * f.values[lo] + B * f.values[hi] +
           ((A * A * A - A) * Mlo + (B * B * B - B) * Mhi) * h * h / 6.0;
  }

  static double eval_node(const detail::Sum& f, double t) {
    double acc = 0.0;
    for (const auto& g : f.terms) acc += g.eval(t);
    return acc;
  }

  static double eval_node(const detail::Product& f, double t) {
    double acc = 1.0;
    for (const auto& g : f.terms) acc *= g.eval(t);
    return acc;
  }

  static void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite parameter");
  }

  static void validate_node(const detail::Constant& f) { require_finite(f.c, "constant"); }
  static void validate_node(const detail::Harmonic& f) {
    require_finite(f.a, "harmonic");
    require_finite(f.b, "harmonic");
    require_finite(f.omega, "harmonic");
    require_finite(f.phi, "harmonic");
  }
  static void validate_node(const detail::Polynomial& f) {
    if (f.coeffs.empty()) throw std::invalid_argument("polynomial: empty coefficient list");
    for (double c : f.coeffs) require_finite(c, "polynomial");
  }
  static void validate_node(const detail::Tabulated& f) {
    if (f.times.size() != f.values.size() || f.times.size() < 2 ||
        f.second_derivs.size() != f.times.size())
      throw std::invalid_argument("tabulated: inconsistent table");
    for (std::size_t i = 0; i + 1 < f.times.size(); ++i)
      if (!(f.times[i] < f.times[i + 1]))
        throw std::invalid_argument("tabulated: times must be strictly increasing");
  }
  static void validate_node(const detail::Sum& f) {
    if (f.terms.empty()) throw std::invalid_argument("sum: empty term list");
    for (const auto& g : f.terms) g.validate();
  }
  static void validate_node(const detail::Product& f) {
    if (f.terms.empty()) throw std::invalid_argument("product: empty term list");
    for (const auto& g : f.terms) g.validate();
  }

  static json node_to_json(const detail::Constant& f) {
    return json{{"kind", "constant"}, {"c", f.c}};
  }
  static json node_to_json(const detail::Harmonic& f) {
    return json{{"kind", "harmonic"}, {"a", f.a}, {"b", f.b}, {"omega", f.omega}, {"phi", f.phi}};
  }
  static json node_to_json(const detail::Polynomial& f) {
    return json{{"kind", "polynomial"}, {"coeffs", f.coeffs}};
  }
  static json node_to_json(const detail::Tabulated& f) {
    return json{{"kind", "tabulated"}, {"times", f.times}, {"values", f.values}};
  }
  static json node_to_json(const detail::Sum& f) {
    json terms = json::array();
    for (const auto& g : f.terms) terms.push_back(g.to_json());
    return json{{"kind", "sum"}, {"terms", std::move(terms)}};
  }
  static json node_to_json(const detail::Product& f) {
    json terms = json::array();
    for (const auto& g : f.terms) terms.push_back(g.to_json());
    return json{{"kind", "product"}, {"terms", std::move(terms)}};
  }

  // Not-a-knot end conditions: the first two and last two cubic pieces share
  // their third derivative, so a table of four points drawn from one cubic
  // reproduces that cubic exactly.
  static std::vector<double> spline_second_derivs(const std::vector<double>& x,
                                                  const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> m(n, 0.0);
    if (n == 2) return m;  // linear
    if (n == 3) {
      const double h0 = x[1] - x[0], h1 = x[2] - x[1];
      const double curv = 2.0 * ((y[2] - y[1]) / h1 - (y[1] - y[0]) / h0) / (h0 + h1);
      m.assign(3, curv);  // single parabola through three points
      return m;
    }
    // Unknowns m[1..n-2]; m[0] and m[n-1] are eliminated through the
    // not-a-knot relations  m0 = (1+r) m1 - r m2,  r = h0/h1  (mirrored at the
    // right end), leaving a tridiagonal system solved by the Thomas algorithm.
    const std::size_t k = n - 2;
    std::vector<double> sub(k, 0.0), diag(k, 0.0), sup(k, 0.0), rhs(k, 0.0);
    auto h = [&](std::size_t i) { return x[i + 1] - x[i]; };
    auto d = [&](std::size_t i) {
      return (y[i + 1] - y[i]) / h(i) - (y[i] - y[i - 1]) / h(i - 1);
    };
    for (std::size_t i = 1; i <= n - 2; ++i) {
      const std::size_t j = i - 1;  // row index in the reduced system
      sub[j] = h(i - 1) / 6.0;
      diag[j] = (h(i - 1) + h(i)) / 3.0;
      sup[j] = h(i) / 6.0;
      rhs[j] = d(i);
    }
    {  // fold m0 into row for i=1
      const double r = h(0) / h(1);
      diag[0] += sub[0] * (1.0 + r);
      sup[0] -= sub[0] * r;
      sub[0] = 0.0;
    }
    {  // fold m[n-1] into row for i=n-2
      const double s = h(n - 2) / h(n - 3);
      diag[k - 1] += sup[k - 1] * (1.0 + s);
      sub[k - 1] -= sup[k - 1] * s;
      sup[k - 1] = 0.0;
    }
    for (std::size_t j = 1; j < k; ++j) {
      if (diag[j - 1] == 0.0) throw std::runtime_error("tabulated: degenerate spline system");
      const double w = sub[j] / diag[j - 1];
      diag[j] -= w * sup[j - 1];
      rhs[j] -= w * rhs[j - 1];
    }
    if (diag[k - 1] == 0.0) throw std::runtime_error("tabulated: degenerate spline system");
    m[n - 2] = rhs[k - 1] / diag[k - 1];
    for (std::size_t j = k - 1; j-- > 0;)
      m[j + 1] = (rhs[j] - sup[j] * m[j + 2]) / diag[j];
    {
      const double r = h(0) / h(1);
      m[0] = (1.0 + r) * m[1] - r * m[2];
      const double s = h(n - 2) / h(n - 3);
      m[n - 1] = (1.0 + s) * m[n - 2] - s * m[n - 3];
    }
    return m;
  }

  detail::FnVariant fn_;
};

namespace detail {
inline bool Sum::operator==(const Sum& o) const { return terms == o.terms; }
inline bool Product::operator==(const Product& o) const { return terms == o.terms; }
}  // namespace detail

// Nearest-neighbour chain of oscillators: omega_sq[i] is the squared
// frequency curve of oscillator i, eta[i] couples oscillators i and i+1.
struct ChainSpec {
  std::size_t n = 0;
  std::vector<TimeFunction> omega_sq;
  std::vector<TimeFunction> eta;

  void validate() const {
    if (n < 1) throw std::invalid_argument("chain: need at least one oscillator");
    if (omega_sq.size() != n)
      throw std::invalid_argument("chain: omega_sq must have one entry per oscillator");
    if (eta.size() + 1 != n && !(n == 1 && eta.empty()))
      throw std::invalid_argument("chain: eta must have n-1 entries");
    for (const auto& f : omega_sq) f.validate();
    for (const auto& f : eta) f.validate();
  }

  bool operator==(const ChainSpec& o) const {
    return n == o.n && omega_sq == o.omega_sq && eta == o.eta;
  }

  json to_json() const {
    json jw = json::array(), je = json::array();
    for (const auto& f : omega_sq) jw.push_back(f.to_json());
    for (const auto& f : eta) je.push_back(f.to_json());
    return json{{"n", n}, {"omega_sq", std::move(jw)}, {"eta", std::move(je)}};
  }

  static ChainSpec from_json(const json& j) {
    ChainSpec spec;
    spec.n = j.at("n").get<std::size_t>();
    for (const auto& f : j.at("omega_sq")) spec.omega_sq.push_back(TimeFunction::from_json(f));
    if (j.contains("eta"))
      for (const auto& f : j.at("eta")) spec.eta.push_back(TimeFunction::from_json(f));
    spec.validate();
    return spec;
  }
};

}  // namespace tdosc
