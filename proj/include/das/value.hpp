#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "das/errors.hpp"

namespace das {

using Vec = std::vector<double>;

// A variable's value: either a symbolic token (bool as 0/1, object id, digit,
// class index) or a fixed-dimension real vector (activations).
class Value {
 public:
  Value() : v_(std::int64_t{0}) {}
  Value(std::int64_t s) : v_(s) {}  // NOLINT: implicit by design
  Value(Vec v) : v_(std::move(v)) {}
  static Value sym(std::int64_t s) { return Value(s); }
  static Value vec(Vec v) { return Value(std::move(v)); }

  bool is_sym() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_vec() const { return !is_sym(); }

  std::int64_t sym() const {
    if (!is_sym()) fail(Errc::DomainError, "expected symbolic value");
    return std::get<std::int64_t>(v_);
  }
  const Vec& vec() const {
    if (!is_vec()) fail(Errc::DomainError, "expected vector value");
    return std::get<Vec>(v_);
  }

  std::size_t dim() const { return is_sym() ? 1 : vec().size(); }

  // Exact equality for symbols; absolute tolerance for vectors (0 = bitwise).
  bool equals(const Value& o, double tol = 0.0) const {
    if (is_sym() != o.is_sym()) return false;
    if (is_sym()) return sym() == o.sym();
    const Vec& a = vec();
    const Vec& b = o.vec();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(std::abs(a[i] - b[i]) <= tol)) return false;
    return true;
  }
  bool operator==(const Value& o) const { return equals(o, 0.0); }

  std::string str() const {
    if (is_sym()) return std::to_string(sym());
    std::string s = "[";
    for (std::size_t i = 0; i < vec().size(); ++i) {
      if (i) s += ",";
      s += std::to_string(vec()[i]);
    }
    return s + "]";
  }

 private:
  std::variant<std::int64_t, Vec> v_;
};

}  // namespace das
