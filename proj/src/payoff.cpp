#include "gexp/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gexp {
namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::optional<double> add_bounds(std::optional<double> a, std::optional<double> b) {
  if (a && b) return *a + *b;
  return std::nullopt;
}

PayoffKind merged_kind(bool x, bool q, bool path) {
  if (path) return PayoffKind::PathFunctional;
  if (q) return PayoffKind::QuadVar;
  (void)x;
  return PayoffKind::TerminalState;
}

double require_qv(const PathState& s) {
  if (!s.qv) throw PreconditionError("payoff needs the quadratic variation, state has none");
  return *s.qv;
}

}  // namespace

Payoff Payoff::terminal(StateFn f, std::optional<double> lipschitz, std::string description) {
  Payoff p;
  p.kind_ = PayoffKind::TerminalState;
  p.reads_x_ = true;
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.eval_ = std::make_shared<const PathFn>([f = std::move(f)](const PathState& s) { return f(s.x); });
  return p;
}

Payoff Payoff::quad_var(StateFn g, std::optional<double> lipschitz, std::string description) {
  Payoff p;
  p.kind_ = PayoffKind::QuadVar;
  p.needs_qv_ = true;
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.eval_ = std::make_shared<const PathFn>(
      [g = std::move(g)](const PathState& s) { return g(require_qv(s)); });
  return p;
}

Payoff Payoff::state(std::function<double(double, double)> f, std::optional<double> lipschitz,
                     std::string description) {
  Payoff p;
  p.kind_ = PayoffKind::QuadVar;
  p.reads_x_ = true;
  p.needs_qv_ = true;
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.eval_ = std::make_shared<const PathFn>(
      [f = std::move(f)](const PathState& s) { return f(s.x, require_qv(s)); });
  return p;
}

Payoff Payoff::cylinder(std::vector<double> times, CylinderFn phi,
                        std::optional<double> lipschitz, std::string description) {
  if (times.empty() || times.size() > 3)
    throw PreconditionError("cylinder payoff takes between 1 and 3 time points");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0)
      throw PreconditionError("cylinder time points must be finite and nonnegative");
    if (i > 0 && !(times[i - 1] < times[i]))
      throw PreconditionError("cylinder time points must be strictly increasing");
  }
  Payoff p;
  p.kind_ = PayoffKind::Cylinder;
  p.reads_x_ = true;
  p.needs_path_ = true;
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.times_ = times;
  p.cyl_ = std::make_shared<const CylinderFn>(std::move(phi));
  p.eval_ = std::make_shared<const PathFn>(
      [times = std::move(times), cyl = p.cyl_](const PathState& s) {
        if (s.positions.empty() || !(s.dt > 0.0))
          throw PreconditionError("cylinder payoff needs the position history");
        double coords[3];
        for (std::size_t j = 0; j < times.size(); ++j) {
          const double r = times[j] / s.dt;
          const double k = std::round(r);
          if (std::abs(r - k) > 1e-9 || k >= static_cast<double>(s.positions.size()))
            throw PreconditionError("cylinder time point is off the path lattice");
          coords[j] = s.positions[static_cast<std::size_t>(k)];
        }
        return (*cyl)(std::span<const double>(coords, times.size()));
      });
  return p;
}

Payoff Payoff::path(PathFn h, std::optional<double> lipschitz, std::string description) {
  Payoff p;
  p.kind_ = PayoffKind::PathFunctional;
  p.reads_x_ = true;
  p.needs_path_ = true;
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.eval_ = std::make_shared<const PathFn>(
      [h = std::move(h)](const PathState& s) {
        if (s.positions.empty()) throw PreconditionError("path functional needs the position history");
        return h(s);
      });
  return p;
}

Payoff Payoff::constant(double c) {
  Payoff p;
  p.kind_ = PayoffKind::TerminalState;
  p.lipschitz_ = 0.0;
  p.description_ = "const:" + num(c);
  p.eval_ = std::make_shared<const PathFn>([c](const PathState&) { return c; });
  return p;
}

Payoff Payoff::call(double k) {
  return terminal([k](double x) { return x > k ? x - k : 0.0; }, 1.0, "call:" + num(k));
}

Payoff Payoff::put(double k) {
  return terminal([k](double x) { return k > x ? k - x : 0.0; }, 1.0, "put:" + num(k));
}

Payoff Payoff::square() {
  return terminal([](double x) { return x * x; }, std::nullopt, "square");
}

Payoff Payoff::identity() {
  return terminal([](double x) { return x; }, 1.0, "identity");
}

Payoff Payoff::abs() {
  return terminal([](double x) { return std::abs(x); }, 1.0, "abs");
}

Payoff Payoff::square_clamped(double cap) {
  if (!(cap > 0.0) || !std::isfinite(cap)) throw PreconditionError("square_clamped cap must be positive");
  return terminal([cap](double x) { return std::min(x * x, cap); }, 2.0 * std::sqrt(cap),
                  "square_clamped:" + num(cap));
}

Payoff Payoff::digital_ge(double level) {
  return terminal([level](double x) { return x >= level ? 1.0 : 0.0; }, std::nullopt,
                  "digital_ge:" + num(level));
}

Payoff Payoff::qv_band(double lo, double hi) {
  if (!(lo < hi)) throw PreconditionError("qv_band needs lo < hi");
  return quad_var([lo, hi](double q) { return lo < q && q < hi ? 1.0 : 0.0; }, std::nullopt,
                  "qv_band:" + num(lo) + "," + num(hi));
}

Payoff Payoff::qv_identity() {
  return quad_var([](double q) { return q; }, 1.0, "qv_identity");
}

double Payoff::operator()(const PathState& state) const { return (*eval_)(state); }

double Payoff::eval_cylinder(std::span<const double> coords) const {
  if (!cyl_) throw PreconditionError("payoff '" + description_ + "' is not a cylinder function");
  if (coords.size() != times_.size())
    throw PreconditionError("cylinder payoff got the wrong number of coordinates");
  return (*cyl_)(coords);
}

Payoff Payoff::combine(const Payoff& a, const Payoff& b, std::function<double(double, double)> op,
                       std::optional<double> lipschitz, std::string description) {
  Payoff p;
  p.reads_x_ = a.reads_x_ || b.reads_x_;
  p.needs_qv_ = a.needs_qv_ || b.needs_qv_;
  p.needs_path_ = a.needs_path_ || b.needs_path_;
  p.kind_ = merged_kind(p.reads_x_, p.needs_qv_, p.needs_path_);
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.eval_ = std::make_shared<const PathFn>(
      [ea = a.eval_, eb = b.eval_, op = std::move(op)](const PathState& s) {
        return op((*ea)(s), (*eb)(s));
      });
  return p;
}

Payoff Payoff::map(const Payoff& a, std::function<double(double)> op,
                   std::optional<double> lipschitz, std::string description) {
  Payoff p = a;
  p.lipschitz_ = lipschitz;
  p.description_ = std::move(description);
  p.eval_ = std::make_shared<const PathFn>(
      [ea = a.eval_, op](const PathState& s) { return op((*ea)(s)); });
  if (a.cyl_) {
    p.cyl_ = std::make_shared<const CylinderFn>(
        [ca = a.cyl_, op](std::span<const double> c) { return op((*ca)(c)); });
  }
  return p;
}

Payoff operator+(const Payoff& a, const Payoff& b) {
  return Payoff::combine(a, b, std::plus<>{}, add_bounds(a.lipschitz_, b.lipschitz_),
                         "(" + a.description_ + ")+(" + b.description_ + ")");
}

Payoff operator-(const Payoff& a, const Payoff& b) {
  return Payoff::combine(a, b, std::minus<>{}, add_bounds(a.lipschitz_, b.lipschitz_),
                         "(" + a.description_ + ")-(" + b.description_ + ")");
}

Payoff operator-(const Payoff& a) {
  return Payoff::map(a, std::negate<>{}, a.lipschitz_, "neg:" + a.description_);
}

Payoff operator*(double s, const Payoff& a) {
  std::optional<double> l;
  if (a.lipschitz_) l = std::abs(s) * *a.lipschitz_;
  return Payoff::map(a, [s](double v) { return s * v; }, l, num(s) + "*(" + a.description_ + ")");
}

Payoff operator*(const Payoff& a, const Payoff& b) {
  return Payoff::combine(a, b, std::multiplies<>{}, std::nullopt,
                         "(" + a.description_ + ")*(" + b.description_ + ")");
}

Payoff operator+(const Payoff& a, double c) {
  return Payoff::map(a, [c](double v) { return v + c; }, a.lipschitz_,
                     "(" + a.description_ + ")+" + num(c));
}

Payoff pmax(const Payoff& a, const Payoff& b) {
  std::optional<double> l;
  if (a.lipschitz_ && b.lipschitz_) l = std::max(*a.lipschitz_, *b.lipschitz_);
  return Payoff::combine(a, b, [](double u, double v) { return u > v ? u : v; }, l,
                         "max(" + a.description_ + "," + b.description_ + ")");
}

Payoff pmin(const Payoff& a, const Payoff& b) {
  std::optional<double> l;
  if (a.lipschitz_ && b.lipschitz_) l = std::max(*a.lipschitz_, *b.lipschitz_);
  return Payoff::combine(a, b, [](double u, double v) { return u < v ? u : v; }, l,
                         "min(" + a.description_ + "," + b.description_ + ")");
}

Payoff pabs(const Payoff& a) {
  return Payoff::map(a, [](double v) { return std::abs(v); }, a.lipschitz_,
                     "abs(" + a.description_ + ")");
}

Payoff positive_part(const Payoff& a) {
  return Payoff::map(a, [](double v) { return v > 0.0 ? v : 0.0; }, a.lipschitz_,
                     "pos(" + a.description_ + ")");
}

}  // namespace gexp
