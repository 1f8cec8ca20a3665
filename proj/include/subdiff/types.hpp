#pragma once

// Core data types shared by the solvers: grids, problem description, boundary
// excitation, and the sampled boundary trace with its CSV serialization.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace subdiff {

// Uniform spatial grid on [0,1] with m subintervals and m+1 nodes.
struct SpaceGrid {
  int m = 0;

  explicit SpaceGrid(int m_) : m(m_) {
    if (m < 2) throw std::invalid_argument("SpaceGrid: m must be >= 2");
  }
  double h() const { return 1.0 / m; }
  double node(int i) const { return static_cast<double>(i) / m; }
  int n_nodes() const { return m + 1; }

  std::vector<double> nodes() const {
    std::vector<double> x(m + 1);
    for (int i = 0; i <= m; ++i) x[i] = node(i);
    return x;
  }

  // Nodal samples of a scalar function.
  std::vector<double> sample(const std::function<double(double)>& f) const {
    std::vector<double> v(m + 1);
    for (int i = 0; i <= m; ++i) v[i] = f(node(i));
    return v;
  }

  // Composite trapezoid integral of nodal values.
  double trapezoid(const std::vector<double>& v) const {
    double s = 0.5 * (v.front() + v.back());
    for (int i = 1; i < m; ++i) s += v[i];
    return s * h();
  }

  double inner(const std::vector<double>& u, const std::vector<double>& v) const {
    double s = 0.5 * (u.front() * v.front() + u.back() * v.back());
    for (int i = 1; i < m; ++i) s += u[i] * v[i];
    return s * h();
  }

  double l2_norm(const std::vector<double>& v) const { return std::sqrt(inner(v, v)); }
};

// Uniform time grid on [0, T] with n_steps steps.
struct TimeGrid {
  int n_steps = 0;
  double dt = 0.0;

  TimeGrid(double t_final, int n) : n_steps(n), dt(t_final / n) {
    if (n < 2 || !(t_final > 0.0)) throw std::invalid_argument("TimeGrid: need n >= 2, T > 0");
  }
  double t(int j) const { return dt * j; }
  double t_final() const { return dt * n_steps; }
};

// Boundary excitation g(t) applied as a Neumann flux at x = 0.
struct Excitation {
  enum class Kind { zero, step, tabulated };
  Kind kind = Kind::zero;
  double t_on = 0.0;       // step onset (unit amplitude)
  std::vector<double> times, values;  // tabulated samples

  static Excitation none() { return {}; }
  static Excitation step_at(double t_on) {
    Excitation g;
    g.kind = Kind::step;
    g.t_on = t_on;
    return g;
  }
  static Excitation tabulated_from(std::vector<double> ts, std::vector<double> vs) {
    if (ts.size() != vs.size() || ts.size() < 2)
      throw std::invalid_argument("Excitation: tabulated needs matching arrays, length >= 2");
    Excitation g;
    g.kind = Kind::tabulated;
    g.times = std::move(ts);
    g.values = std::move(vs);
    return g;
  }

  // Average of g over (t0, t1]; this is the consistent backward-Euler load
  // (a step switching on inside the interval loads only its covered part).
  double interval_average(double t0, double t1) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::step: {
        if (t1 <= t_on) return 0.0;
        return std::min(1.0, (t1 - t_on) / (t1 - t0));
      }
      case Kind::tabulated: return 0.5 * ((*this)(t0) + (*this)(t1));
    }
    return 0.0;
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::step: return t >= t_on ? 1.0 : 0.0;
      case Kind::tabulated: {
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        auto it = std::lower_bound(times.begin(), times.end(), t);
        size_t k = it - times.begin();
        double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
        return (1.0 - w) * values[k - 1] + w * values[k];
      }
    }
    return 0.0;
  }
};

// Full description of the direct problem on (0,1) x (0,T).
struct ProblemSetup {
  std::vector<double> a;   // nodal diffusion coefficient, > 0
  std::vector<double> q;   // nodal potential, >= 0
  std::vector<double> u0;  // nodal initial data
  std::vector<double> f;   // nodal source (time-independent)
  double alpha = 0.5;      // fractional order in (0,1)
  double t_final = 1.0;    // T
  double t_split = 0.5;    // T1 (excitation onset / data split)
  Excitation g;

  void validate(const SpaceGrid& grid) const {
    const size_t n = static_cast<size_t>(grid.n_nodes());
    if (a.size() != n || q.size() != n || u0.size() != n || f.size() != n)
      throw std::invalid_argument("ProblemSetup: nodal array size mismatch with grid");
    for (double ai : a)
      if (!(ai > 0.0)) throw std::invalid_argument("ProblemSetup: a must be positive");
    // The benchmark potentials are nonnegative, but unprojected CG iterates
    // may dip below zero; the solvers only need q bounded below.
    for (double qi : q)
      if (!(qi > -1e6)) throw std::invalid_argument("ProblemSetup: q must be bounded below");
    if (!(alpha > 0.0) || !(alpha < 1.0))
      throw std::invalid_argument("ProblemSetup: alpha must lie in (0,1)");
    if (!(t_final > 0.0) || t_split < 0.0 || t_split >= t_final)
      throw std::invalid_argument("ProblemSetup: need 0 <= T1 < T");
  }
};

// Uniformly sampled boundary observation h(t_j) = u(0, t_j).
struct Trace {
  std::vector<double> times;
  std::vector<double> values;

  void check() const {
    if (times.size() != values.size() || times.size() < 2)
      throw std::invalid_argument("Trace: times/values mismatch or too short");
    for (size_t j = 1; j < times.size(); ++j)
      if (!(times[j] > times[j - 1]))
        throw std::invalid_argument("Trace: times must be strictly increasing");
  }
};

inline void write_trace_csv(const Trace& tr, std::ostream& os) {
  os << "t,h\n";
  char buf[64];
  for (size_t j = 0; j < tr.times.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", tr.times[j], tr.values[j]);
    os << buf;
  }
}

inline void write_trace_csv(const Trace& tr, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_trace_csv(tr, os);
}

inline Trace read_trace_csv(std::istream& is) {
  Trace tr;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double t, h;
    if (std::sscanf(line.c_str(), "%lg,%lg", &t, &h) != 2)
      throw std::runtime_error("trace CSV: malformed line: " + line);
    tr.times.push_back(t);
    tr.values.push_back(h);
  }
  tr.check();
  return tr;
}

inline Trace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_trace_csv(is);
}

}  // namespace subdiff
