//! Certified interval arithmetic with outward rounding.
//!
//! Every real-valued constant in the pipeline travels as a pair of
//! floating endpoints guaranteed to enclose the exact value. Basic
//! operations rely on IEEE correct rounding plus a one-ulp outward nudge;
//! transcendentals are evaluated through exact-rational series with
//! explicit remainder bounds, so no step depends on libm accuracy.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::error::Error;

/// Floating scalar usable as an interval endpoint.
pub trait IntervalScalar: Float + FromPrimitive + ToPrimitive + fmt::Display + Send + Sync + 'static {
    fn next_up_(self) -> Self;
    fn next_down_(self) -> Self;
    /// Exact value of this float as a rational; `None` for non-finite.
    fn to_big_rational(self) -> Option<BigRational>;
    /// Nearest-ish conversion; soundness is restored by outward nudging.
    fn approx_from_rational(r: &BigRational) -> Self;
}

impl IntervalScalar for f64 {
    fn next_up_(self) -> Self {
        self.next_up()
    }
    fn next_down_(self) -> Self {
        self.next_down()
    }
    fn to_big_rational(self) -> Option<BigRational> {
        BigRational::from_float(self)
    }
    fn approx_from_rational(r: &BigRational) -> Self {
        rational_to_f64_approx(r)
    }
}

impl IntervalScalar for f32 {
    fn next_up_(self) -> Self {
        self.next_up()
    }
    fn next_down_(self) -> Self {
        self.next_down()
    }
    fn to_big_rational(self) -> Option<BigRational> {
        BigRational::from_float(self)
    }
    fn approx_from_rational(r: &BigRational) -> Self {
        rational_to_f64_approx(r) as f32
    }
}

fn rational_to_f64_approx(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    // numerator/denominator individually overflow f64; scale by bit length
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = (nb.max(db) - 900).max(0);
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// Closed interval `[lo, hi]` enclosing an exact real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T: IntervalScalar> {
    pub lo: T,
    pub hi: T,
}

impl<T: IntervalScalar> Interval<T> {
    pub fn point(x: T) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: T, hi: T) -> Self {
        // NaN endpoints must not trip the assert; they are caught later
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        {
            debug_assert!(!(lo > hi), "inverted interval");
        }
        Interval { lo, hi }
    }

    pub fn zero() -> Self {
        Self::point(T::zero())
    }

    pub fn one() -> Self {
        Self::point(T::one())
    }

    pub fn width(&self) -> T {
        (self.hi - self.lo).next_up_()
    }

    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::from_u8(2).unwrap()
    }

    pub fn contains_scalar(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_rational(&self, r: &BigRational) -> bool {
        let lo_ok = match self.lo.to_big_rational() {
            Some(q) => q <= *r,
            None => self.lo == T::neg_infinity(),
        };
        let hi_ok = match self.hi.to_big_rational() {
            Some(q) => q >= *r,
            None => self.hi == T::infinity(),
        };
        lo_ok && hi_ok
    }

    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Tightest representable enclosure of an exact rational.
    pub fn from_rational(r: &BigRational) -> Self {
        let approx = T::approx_from_rational(r);
        if !approx.is_finite() {
            return if approx > T::zero() {
                Interval::new(T::max_value(), T::infinity())
            } else {
                Interval::new(T::neg_infinity(), T::min_value())
            };
        }
        let le = |x: T| match x.to_big_rational() {
            Some(q) => q <= *r,
            None => x == T::neg_infinity(),
        };
        let ge = |x: T| match x.to_big_rational() {
            Some(q) => q >= *r,
            None => x == T::infinity(),
        };
        let mut lo = approx;
        while !le(lo) {
            lo = lo.next_down_();
        }
        while le(lo.next_up_()) {
            lo = lo.next_up_();
        }
        let mut hi = approx;
        while !ge(hi) {
            hi = hi.next_up_();
        }
        while ge(hi.next_down_()) {
            hi = hi.next_down_();
        }
        Interval { lo, hi }
    }

    pub fn from_rational_pair(lo: &BigRational, hi: &BigRational) -> Self {
        Interval {
            lo: Self::from_rational(lo).lo,
            hi: Self::from_rational(hi).hi,
        }
    }

    pub fn neg(&self) -> Self {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Interval {
            lo: (self.lo + other.lo).next_down_(),
            hi: (self.hi + other.hi).next_up_(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cands = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let mut lo = cands[0];
        let mut hi = cands[0];
        for &c in &cands[1..] {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        Interval {
            lo: lo.next_down_(),
            hi: hi.next_up_(),
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        if other.lo <= T::zero() && other.hi >= T::zero() {
            return Interval::new(T::neg_infinity(), T::infinity());
        }
        let cands = [
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        ];
        let mut lo = cands[0];
        let mut hi = cands[0];
        for &c in &cands[1..] {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        Interval {
            lo: lo.next_down_(),
            hi: hi.next_up_(),
        }
    }

    pub fn scale(&self, x: T) -> Self {
        self.mul(&Interval::point(x))
    }

    /// Integer power by repeated interval multiplication.
    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Interval::one();
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Square root; relies on IEEE-correct rounding of `sqrt`.
    pub fn sqrt(&self) -> Self {
        let lo = if self.lo <= T::zero() {
            T::zero()
        } else {
            self.lo.sqrt().next_down_().max(T::zero())
        };
        Interval {
            lo,
            hi: self.hi.max(T::zero()).sqrt().next_up_(),
        }
    }

    /// Natural log via the exact-rational series; requires `lo > 0`.
    pub fn ln(&self) -> Result<Self, Error> {
        if self.lo <= T::zero() {
            return Err(Error::InvalidInput(
                "ln: interval must be strictly positive".into(),
            ));
        }
        let rlo = self
            .lo
            .to_big_rational()
            .ok_or_else(|| Error::InvalidInput("ln: non-finite endpoint".into()))?;
        let rhi = self
            .hi
            .to_big_rational()
            .ok_or_else(|| Error::InvalidInput("ln: non-finite endpoint".into()))?;
        let (a, _) = ln_rational(&rlo)?;
        let (_, b) = ln_rational(&rhi)?;
        Ok(Self::from_rational_pair(&a, &b))
    }

    /// Exponential via the exact-rational series.
    pub fn exp(&self) -> Result<Self, Error> {
        let rlo = self
            .lo
            .to_big_rational()
            .ok_or_else(|| Error::InvalidInput("exp: non-finite endpoint".into()))?;
        let rhi = self
            .hi
            .to_big_rational()
            .ok_or_else(|| Error::InvalidInput("exp: non-finite endpoint".into()))?;
        let (a, _) = exp_rational(&rlo)?;
        let (_, b) = exp_rational(&rhi)?;
        Ok(Self::from_rational_pair(&a, &b))
    }

    /// Enclosure of pi, exact to one ulp of the scalar type.
    pub fn pi() -> Self {
        static PI_ENCL: Lazy<(BigRational, BigRational)> = Lazy::new(|| {
            let lo = BigRational::from_float(std::f64::consts::PI.next_down()).unwrap();
            let hi = BigRational::from_float(std::f64::consts::PI.next_up()).unwrap();
            (lo, hi)
        });
        Self::from_rational_pair(&PI_ENCL.0, &PI_ENCL.1)
    }

    /// Enclosure of log 2.
    pub fn ln2() -> Self {
        let (lo, hi) = ln2_rational();
        Self::from_rational_pair(&lo, &hi)
    }
}

impl<T: IntervalScalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

fn big(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// 2*atanh(t) as a one-sided rational enclosure; requires |t| <= 1/3.
fn two_atanh_enclosure(t: &BigRational, terms: usize) -> (BigRational, BigRational) {
    let t2 = t * t;
    let mut power = t.clone();
    let mut sum = BigRational::zero();
    for i in 0..terms {
        sum += &power / big(2 * i as i64 + 1);
        power *= &t2;
    }
    // remainder of the atanh series: geometric tail bound, same sign as t
    let denom = (BigRational::one() - &t2) * big(2 * terms as i64 + 1);
    let bound = power.abs() / denom;
    let two = big(2);
    if t.is_negative() {
        ((&sum - &bound) * &two, &sum * &two)
    } else {
        (&sum * &two, (&sum + &bound) * &two)
    }
}

/// Rational enclosure of log 2 = 2 atanh(1/3), cached.
pub fn ln2_rational() -> (BigRational, BigRational) {
    static LN2: Lazy<(BigRational, BigRational)> = Lazy::new(|| {
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        two_atanh_enclosure(&third, 45)
    });
    LN2.clone()
}

/// Rational enclosure of ln(r) for r > 0, via range reduction into
/// [3/4, 3/2) and the atanh series.
pub fn ln_rational(r: &BigRational) -> Result<(BigRational, BigRational), Error> {
    if !r.is_positive() {
        return Err(Error::InvalidInput("ln of non-positive value".into()));
    }
    let lower = BigRational::new(BigInt::from(3), BigInt::from(4));
    let upper = BigRational::new(BigInt::from(3), BigInt::from(2));
    let two = big(2);
    let mut s = r.clone();
    let mut k: i64 = 0;
    while s >= upper {
        s /= &two;
        k += 1;
    }
    while s < lower {
        s *= &two;
        k -= 1;
    }
    let t = (&s - BigRational::one()) / (&s + BigRational::one());
    let (mut lo, mut hi) = two_atanh_enclosure(&t, 30);
    let (l2lo, l2hi) = ln2_rational();
    let kq = big(k);
    if k >= 0 {
        lo += &kq * &l2lo;
        hi += &kq * &l2hi;
    } else {
        lo += &kq * &l2hi;
        hi += &kq * &l2lo;
    }
    Ok((lo, hi))
}

/// exp on a small rational argument |q| <= 1/2: partial sum plus a
/// two-sided tail bound.
fn exp_small(q: &BigRational, terms: usize) -> (BigRational, BigRational) {
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for i in 1..terms {
        term = term * q / big(i as i64);
        sum += &term;
    }
    let next = (term * q / big(terms as i64)).abs();
    let bound = &next * big(2); // |q| <= 1/2 so the tail is under twice its head
    (&sum - &bound, &sum + &bound)
}

/// Rational enclosure of exp(r); rejects |r| so large that 2^k overflows
/// sensible use (|r| > 2000).
pub fn exp_rational(r: &BigRational) -> Result<(BigRational, BigRational), Error> {
    let approx = rational_to_f64_approx(r);
    if approx.abs() > 2000.0 {
        return Err(Error::InvalidInput(format!(
            "exp: argument {approx} out of supported range"
        )));
    }
    let k = (approx / std::f64::consts::LN_2).round() as i64;
    let (l2lo, l2hi) = ln2_rational();
    let kq = big(k);
    // q = r - k ln2 lands in roughly [-0.4, 0.4]; evaluate both endpoints
    let (q_lo, q_hi) = if k >= 0 {
        (r - &kq * &l2hi, r - &kq * &l2lo)
    } else {
        (r - &kq * &l2lo, r - &kq * &l2hi)
    };
    let (lo, _) = exp_small(&q_lo, 26);
    let (_, hi) = exp_small(&q_hi, 26);
    let scale = if k >= 0 {
        BigRational::from(BigInt::one() << k as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
    };
    Ok(((lo * &scale).max(BigRational::zero()), hi * scale))
}

fn scalar<T: IntervalScalar>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// cos(2 pi theta / (2 pi)) Taylor kernel for |theta| <= pi/4 plus slack;
/// alternating series, remainder bounded by the first omitted term.
fn cos_kernel<T: IntervalScalar>(theta: &Interval<T>) -> Interval<T> {
    let t2 = theta.mul(theta);
    let mut term = Interval::one();
    let mut sum = Interval::one();
    let mut negative = true;
    for k in 1u32..=9 {
        term = term
            .mul(&t2)
            .div(&Interval::point(scalar::<T>(((2 * k - 1) * (2 * k)) as f64)));
        sum = if negative { sum.sub(&term) } else { sum.add(&term) };
        negative = !negative;
    }
    let rem = term
        .mul(&t2)
        .div(&Interval::point(scalar::<T>(19.0 * 20.0)))
        .hi;
    sum.add(&Interval::new(-rem, rem))
}

fn sin_kernel<T: IntervalScalar>(theta: &Interval<T>) -> Interval<T> {
    let t2 = theta.mul(theta);
    let mut term = *theta;
    let mut sum = *theta;
    let mut negative = true;
    for k in 1u32..=9 {
        term = term
            .mul(&t2)
            .div(&Interval::point(scalar::<T>(((2 * k) * (2 * k + 1)) as f64)));
        sum = if negative { sum.sub(&term) } else { sum.add(&term) };
        negative = !negative;
    }
    let rem = term
        .mul(&t2)
        .div(&Interval::point(scalar::<T>(20.0 * 21.0)))
        .hi
        .abs();
    sum.add(&Interval::new(-rem, rem))
}

/// cos(2 pi x) of a tightly enclosed point with x in [0, 1/4] plus slack.
fn point_cos2pi_quadrant<T: IntervalScalar>(x: Interval<T>) -> Interval<T> {
    let eighth = scalar::<T>(0.125);
    let quarter = Interval::point(scalar::<T>(0.25));
    let two_pi = Interval::<T>::pi().scale(scalar::<T>(2.0));
    if x.lo > eighth {
        sin_kernel(&two_pi.mul(&quarter.sub(&x)))
    } else {
        cos_kernel(&two_pi.mul(&x))
    }
}

/// Certified cos(2 pi t) at a single scalar t in [0, 2); the folds run in
/// interval arithmetic so rounding only widens the result.
fn point_cos2pi<T: IntervalScalar>(t: T) -> Interval<T> {
    let one_i = Interval::<T>::one();
    let half = scalar::<T>(0.5);
    let quarter = scalar::<T>(0.25);
    let mut x = Interval::point(t);
    if x.lo >= T::one() {
        x = x.sub(&one_i);
    }
    if x.lo > half {
        x = one_i.sub(&x); // cos2pi(1 - t) = cos2pi(t)
    }
    if x.lo > quarter {
        // cos2pi(t) = -cos2pi(1/2 - t)
        return point_cos2pi_quadrant(Interval::point(half).sub(&x)).neg();
    }
    point_cos2pi_quadrant(x)
}

fn clamp_unit<T: IntervalScalar>(iv: Interval<T>) -> Interval<T> {
    Interval {
        lo: iv.lo.max(-T::one()),
        hi: iv.hi.min(T::one()),
    }
}

/// Enclosure of {cos(2 pi x) : x in the interval}. Returns [-1, 1] once
/// the interval spans a full period (or is too large to reduce exactly).
pub fn cos2pi_range<T: IntervalScalar>(x: &Interval<T>) -> Interval<T> {
    let full = Interval::new(-T::one(), T::one());
    if !(x.lo.is_finite() && x.hi.is_finite()) {
        return full;
    }
    let limit = scalar::<T>(2f64.powi(45));
    if x.lo.abs() > limit || x.hi.abs() > limit || x.hi - x.lo >= T::one() {
        return full;
    }
    // shift by floor(lo) in interval arithmetic so rounding only widens
    let shifted = x.sub(&Interval::point(x.lo.floor()));
    let (a, b) = (shifted.lo, shifted.hi);
    if b >= scalar::<T>(2.0) {
        return full;
    }
    let half = scalar::<T>(0.5);
    let has_max = a <= T::zero() || b >= T::one();
    let has_min = (a <= half && b >= half) || b >= T::one() + half;
    let mut r = point_cos2pi(a).hull(&point_cos2pi(b));
    if has_max {
        r.hi = T::one();
    }
    if has_min {
        r.lo = -T::one();
    }
    clamp_unit(r)
}

/// Enclosure of {sin(2 pi x)}: sin(2 pi x) = cos(2 pi (x - 1/4)).
pub fn sin2pi_range<T: IntervalScalar>(x: &Interval<T>) -> Interval<T> {
    cos2pi_range(&x.sub(&Interval::point(scalar::<T>(0.25))))
}

/// Parse a plain decimal string ("3.02858417", "-0.5", "109/154") into an
/// exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad rational: {s}")))?;
        let den: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad rational: {s}")))?;
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        return Ok(BigRational::new(num, den));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    let negative = int_part.starts_with('-');
    let digits: String = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidInput(format!("bad decimal: {s}")));
    }
    let mut num: BigInt = digits
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad decimal: {s}")))?;
    if negative {
        num = -num;
    }
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(num, den))
}

/// Decimal string for a lower bound: truncated toward minus infinity, so
/// the printed value is itself a valid bound.
pub fn decimal_down(x: f64, digits: u32) -> String {
    directed_decimal(x, digits, false)
}

/// Decimal string rounded toward plus infinity.
pub fn decimal_up(x: f64, digits: u32) -> String {
    directed_decimal(x, digits, true)
}

fn directed_decimal(x: f64, digits: u32, up: bool) -> String {
    let r = match BigRational::from_float(x) {
        Some(r) => r,
        None => return format!("{x}"),
    };
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = r * BigRational::from(scale.clone());
    let q = if up { scaled.ceil() } else { scaled.floor() };
    let q = q.to_integer();
    let neg = q.sign() == Sign::Minus;
    let mag = q.magnitude().to_string();
    let mag = if mag.len() <= digits as usize {
        format!("{}{}", "0".repeat(digits as usize + 1 - mag.len()), mag)
    } else {
        mag
    };
    let (int_part, frac_part) = mag.split_at(mag.len() - digits as usize);
    format!("{}{int_part}.{frac_part}", if neg { "-" } else { "" })
}
