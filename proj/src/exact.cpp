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

#include "pacing_dyn/exact.hpp"

#include <cmath>

#include "pacing_dyn/errors.hpp"

namespace pacing_dyn::exact {
namespace {

int sgn(const mpq_class& q) { return ::sgn(q); }

std::int64_t isqrt(std::int64_t v) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

}  // namespace

QuadraticNumber::QuadraticNumber(mpq_class a, mpq_class c,
                                 std::int64_t radicand)
    : a_(std::move(a)), c_(std::move(c)), d_(radicand) {
  if (radicand <= 0) throw InvalidInput("radicand must be positive");
  a_.canonicalize();
  c_.canonicalize();
}

void QuadraticNumber::unify(const QuadraticNumber& o) {
  if (o.c_ == 0 || o.d_ == d_) return;
  if (c_ == 0) {
    d_ = o.d_;
    return;
  }
  throw InvalidInput("mixed radicands in exact arithmetic");
}

int QuadraticNumber::sign() const {
  const int sa = sgn(a_);
  const int sc = sgn(c_);
  if (sc == 0) return sa;
  if (sa == 0 || sa == sc) return sc;
  // Opposite signs: compare a^2 with c^2 d.
  const mpq_class lhs = a_ * a_;
  const mpq_class rhs = c_ * c_ * d_;
  const int cmp = ::cmp(lhs, rhs);
  if (cmp == 0) return 0;
  return cmp > 0 ? sa : sc;
}

double QuadraticNumber::to_double() const {
  return a_.get_d() + c_.get_d() * std::sqrt(static_cast<double>(d_));
}

QuadraticNumber& QuadraticNumber::operator+=(const QuadraticNumber& o) {
  unify(o);
  a_ += o.a_;
  c_ += o.c_;
  return *this;
}

QuadraticNumber& QuadraticNumber::operator-=(const QuadraticNumber& o) {
  unify(o);
  a_ -= o.a_;
  c_ -= o.c_;
  return *this;
}

QuadraticNumber& QuadraticNumber::operator*=(const QuadraticNumber& o) {
  unify(o);
  const mpq_class a = a_ * o.a_ + c_ * o.c_ * d_;
  const mpq_class c = a_ * o.c_ + c_ * o.a_;
  a_ = a;
  c_ = c;
  return *this;
}

mpq_class rationalize(double x) {
  if (!std::isfinite(x)) throw InvalidInput("cannot rationalize non-finite");
  const mpq_class exact(x);
  const mpq_class tol =
      mpq_class(std::max(1.0, std::abs(x))) * mpq_class(mpz_class(1), mpz_class("1000000000000000"));

  // Continued-fraction convergents of the exact binary value.
  mpz_class num = exact.get_num();
  mpz_class den = exact.get_den();
  // Convergent recurrence seeded with h_{-1}/k_{-1} = 1/0, h_{-2}/k_{-2} = 0/1.
  mpz_class h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  while (den != 0) {
    mpz_class a;
    mpz_fdiv_q(a.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    const mpz_class h = a * h1 + h2;
    const mpz_class k = a * k1 + k2;
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = k;
    const mpq_class approx(h, k);
    if (abs(approx - exact) <= tol) return mpq_class(h, k);
    const mpz_class r = num - a * den;
    num = den;
    den = r;
  }
  return exact;
}

QuadraticNumber exact_learning_rate(double eta, std::int64_t horizon) {
  if (horizon > 0) {
    const double inv_root = 1.0 / std::sqrt(static_cast<double>(horizon));
    if (std::abs(eta - inv_root) <= 1e-12 * inv_root) {
      const std::int64_t root = isqrt(horizon);
      if (root * root == horizon) return QuadraticNumber(mpq_class(1, root));
      return QuadraticNumber(0, mpq_class(1, horizon), horizon);
    }
  }
  return QuadraticNumber(rationalize(eta));
}

}  // namespace pacing_dyn::exact
