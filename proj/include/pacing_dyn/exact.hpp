// Copyright 2026 The pacing-dyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exact arithmetic for the adversary problem. Learner bids are polynomials in
// the learning rate with rational coefficients; with eta = 1/sqrt(T) every
// quantity therefore lies in the field Q(sqrt(T)). QuadraticNumber represents
// a + c * sqrt(d) with rational a, c and a fixed positive radicand d.

#ifndef PACING_DYN_EXACT_HPP_
#define PACING_DYN_EXACT_HPP_

#include <cstdint>

#include <gmpxx.h>

namespace pacing_dyn::exact {

class QuadraticNumber {
 public:
  QuadraticNumber() = default;
  QuadraticNumber(mpq_class rational)  // NOLINT: implicit lift from Q
      : a_(std::move(rational)) {}
  QuadraticNumber(mpq_class a, mpq_class c, std::int64_t radicand);

  const mpq_class& rational_part() const { return a_; }
  const mpq_class& surd_part() const { return c_; }
  std::int64_t radicand() const { return d_; }

  // -1, 0 or +1.
  int sign() const;
  double to_double() const;

  QuadraticNumber& operator+=(const QuadraticNumber& o);
  QuadraticNumber& operator-=(const QuadraticNumber& o);
  QuadraticNumber& operator*=(const QuadraticNumber& o);

  friend QuadraticNumber operator+(QuadraticNumber l, const QuadraticNumber& r) {
    return l += r;
  }
  friend QuadraticNumber operator-(QuadraticNumber l, const QuadraticNumber& r) {
    return l -= r;
  }
  friend QuadraticNumber operator*(QuadraticNumber l, const QuadraticNumber& r) {
    return l *= r;
  }
  friend bool operator<=(const QuadraticNumber& l, const QuadraticNumber& r) {
    return (r - l).sign() >= 0;
  }
  friend bool operator==(const QuadraticNumber& l, const QuadraticNumber& r) {
    return (l - r).sign() == 0;
  }

 private:
  void unify(const QuadraticNumber& o);

  mpq_class a_ = 0;
  mpq_class c_ = 0;
  std::int64_t d_ = 1;
};

// Simplest rational (first continued-fraction convergent) within 1e-15
// relative distance of x; falls back to the exact binary value of x.
mpq_class rationalize(double x);

// Exact learning rate: 1/sqrt(T) is recognized and kept symbolic, anything
// else is rationalized.
QuadraticNumber exact_learning_rate(double eta, std::int64_t horizon);

}  // namespace pacing_dyn::exact

#endif  // PACING_DYN_EXACT_HPP_
