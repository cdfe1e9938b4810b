#include "gexp/sets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "gexp/error.hpp"

namespace gexp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_parts(const std::vector<Interval>& parts, bool open) {
  if (parts.empty()) throw PreconditionError("interval set must be nonempty");
  for (const auto& p : parts) {
    if (std::isnan(p.lo) || std::isnan(p.hi))
      throw PreconditionError("interval end point is NaN");
    if (open ? !(p.lo < p.hi) : !(p.lo <= p.hi))
      throw PreconditionError("interval has lo > hi (or is empty)");
  }
}

std::string fmt_end(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw PreconditionError("bad number in interval: '" + std::string(s) + "'");
  return v;
}

struct RawInterval {
  char open_bracket;
  char close_bracket;
  Interval iv;
};

std::vector<RawInterval> parse_union(std::string_view text) {
  std::vector<RawInterval> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ' || text[pos] == 'u' || text[pos] == 'U') {
      ++pos;
      continue;
    }
    char ob = text[pos];
    if (ob != '[' && ob != '(') throw PreconditionError("expected '[' or '(' in interval set");
    auto close = text.find_first_of("])", pos);
    if (close == std::string_view::npos) throw PreconditionError("unterminated interval");
    auto body = text.substr(pos + 1, close - pos - 1);
    auto comma = body.find(',');
    if (comma == std::string_view::npos) throw PreconditionError("interval needs 'lo,hi'");
    out.push_back({ob, text[close],
                   {parse_number(body.substr(0, comma)), parse_number(body.substr(comma + 1))}});
    pos = close + 1;
  }
  if (out.empty()) throw PreconditionError("empty interval set");
  return out;
}

}  // namespace

ClosedSet::ClosedSet(std::vector<Interval> parts) : parts_(std::move(parts)) {
  check_parts(parts_, false);
}

bool ClosedSet::contains(double x) const {
  return std::any_of(parts_.begin(), parts_.end(),
                     [x](const Interval& p) { return p.lo <= x && x <= p.hi; });
}

double ClosedSet::distance(double x) const {
  double best = kInf;
  for (const auto& p : parts_) {
    double d = 0.0;
    if (x < p.lo) d = p.lo - x;
    else if (x > p.hi) d = x - p.hi;
    best = std::min(best, d);
  }
  return best;
}

std::string ClosedSet::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) s += "u";
    s += (std::isinf(parts_[i].lo) ? "(" : "[") + fmt_end(parts_[i].lo) + "," +
         fmt_end(parts_[i].hi) + (std::isinf(parts_[i].hi) ? ")" : "]");
  }
  return s;
}

OpenSet::OpenSet(std::vector<Interval> parts) {
  check_parts(parts, true);
  // Merge strictly overlapping pieces; touching pieces keep their shared end
  // point in the complement.
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& p : parts) {
    if (!parts_.empty() && p.lo < parts_.back().hi) {
      parts_.back().hi = std::max(parts_.back().hi, p.hi);
    } else {
      parts_.push_back(p);
    }
  }
}

bool OpenSet::contains(double x) const {
  return std::any_of(parts_.begin(), parts_.end(),
                     [x](const Interval& p) { return p.lo < x && x < p.hi; });
}

double OpenSet::distance_to_complement(double x) const {
  for (const auto& p : parts_) {
    if (p.lo < x && x < p.hi) return std::min(x - p.lo, p.hi - x);
  }
  return 0.0;
}

std::string OpenSet::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) s += "u";
    s += "(" + fmt_end(parts_[i].lo) + "," + fmt_end(parts_[i].hi) + ")";
  }
  return s;
}

ClosedSet parse_closed_set(std::string_view text) {
  std::vector<Interval> parts;
  for (const auto& r : parse_union(text)) {
    bool lo_ok = r.open_bracket == '[' || std::isinf(r.iv.lo);
    bool hi_ok = r.close_bracket == ']' || std::isinf(r.iv.hi);
    if (!lo_ok || !hi_ok)
      throw PreconditionError("closed set needs '[' and ']' at finite end points");
    parts.push_back(r.iv);
  }
  return ClosedSet(std::move(parts));
}

OpenSet parse_open_set(std::string_view text) {
  std::vector<Interval> parts;
  for (const auto& r : parse_union(text)) {
    if (r.open_bracket != '(' || r.close_bracket != ')')
      throw PreconditionError("open set needs '(' and ')'");
    parts.push_back(r.iv);
  }
  return OpenSet(std::move(parts));
}

}  // namespace gexp
