#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gexp {

struct Interval {
  double lo;
  double hi;
};

/// Finite union of closed intervals [lo, hi]; end points may be infinite.
class ClosedSet {
 public:
  explicit ClosedSet(std::vector<Interval> parts);

  bool empty() const { return parts_.empty(); }
  bool contains(double x) const;
  /// inf over y in the set of |x - y|.
  double distance(double x) const;
  const std::vector<Interval>& parts() const { return parts_; }
  std::string to_string() const;

 private:
  std::vector<Interval> parts_;
};

/// Finite union of open intervals (lo, hi); end points may be infinite.
class OpenSet {
 public:
  explicit OpenSet(std::vector<Interval> parts);

  bool empty() const { return parts_.empty(); }
  bool contains(double x) const;
  /// Distance from x to the complement; zero outside the set.
  double distance_to_complement(double x) const;
  const std::vector<Interval>& parts() const { return parts_; }
  std::string to_string() const;

 private:
  std::vector<Interval> parts_;
};

/// Parses "[a,b]", "[0,inf)" style unions joined by 'u', e.g. "[-2,-1]u[1,2]".
/// Bracket shapes are checked against the requested kind: closed sets take
/// '[' ']' (with ')' or '(' allowed only next to an infinite end), open sets
/// take '(' ')'.
ClosedSet parse_closed_set(std::string_view text);
OpenSet parse_open_set(std::string_view text);

}  // namespace gexp
