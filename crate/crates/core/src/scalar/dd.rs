//! Double-double arithmetic: an unevaluated sum of two `f64`s giving ~106
//! bits of mantissa.
//!
//! Addition, subtraction, multiplication, division, and square root carry
//! full double-double precision (Dekker/Knuth error-free transformations,
//! products through `mul_add`). Transcendentals are evaluated at `f64`
//! accuracy and lifted with a first-order correction in the low word; that
//! is deliberate: the type exists so that *algebraic combinations* of field
//! values stay exact through large cancellations, not to deliver 30-digit
//! special functions.

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

/// Extended-precision scalar stored as `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        DoubleDouble { hi: s, lo: e }
    }

    fn floor_impl(self) -> Self {
        let f = self.hi.floor();
        if f == self.hi {
            Self::renorm(f, self.lo.floor())
        } else {
            DoubleDouble { hi: f, lo: 0.0 }
        }
    }

    fn ceil_impl(self) -> Self {
        let c = self.hi.ceil();
        if c == self.hi {
            Self::renorm(c, self.lo.ceil())
        } else {
            DoubleDouble { hi: c, lo: 0.0 }
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        Self::from_f64(v)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value(), f)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        // Valid on normalized values: the low word only breaks ties.
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Self::renorm(s1, s2 + t2)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        Self::renorm(p1, p2 + self.hi * rhs.lo + self.lo * rhs.hi)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        if !q1.is_finite() {
            return DoubleDouble { hi: q1, lo: 0.0 };
        }
        let r = self - rhs * DoubleDouble::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * DoubleDouble::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from_f64(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        // Truncated remainder, matching f64's `%`.
        let n = (self / rhs).trunc();
        self - n * rhs
    }
}

macro_rules! impl_assign {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for DoubleDouble {
            #[inline]
            fn $method(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}

impl_assign!(AddAssign, add_assign, +);
impl_assign!(SubAssign, sub_assign, -);
impl_assign!(MulAssign, mul_assign, *);
impl_assign!(DivAssign, div_assign, /);
impl_assign!(RemAssign, rem_assign, %);

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble { hi: 0.0, lo: 0.0 }
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble { hi: 1.0, lo: 0.0 }
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::from_f64)
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        self.value().to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.value().to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.value())
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        f64::from_i64(n).map(Self::from_f64)
    }
    fn from_u64(n: u64) -> Option<Self> {
        f64::from_u64(n).map(Self::from_f64)
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::from_f64(n))
    }
}

impl NumCast for DoubleDouble {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(Self::from_f64)
    }
}

impl Float for DoubleDouble {
    fn nan() -> Self {
        Self::from_f64(f64::NAN)
    }
    fn infinity() -> Self {
        Self::from_f64(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Self::from_f64(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Self::from_f64(-0.0)
    }
    fn min_value() -> Self {
        Self::from_f64(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Self::from_f64(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        Self::from_f64(f64::MAX)
    }
    fn epsilon() -> Self {
        // 2^-104
        Self::from_f64(4.93038065763132e-32)
    }

    fn is_nan(self) -> bool {
        self.hi.is_nan() || self.lo.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }

    fn floor(self) -> Self {
        self.floor_impl()
    }
    fn ceil(self) -> Self {
        self.ceil_impl()
    }
    fn round(self) -> Self {
        (self + Self::from_f64(0.5)).floor_impl()
    }
    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor_impl()
        } else {
            self.ceil_impl()
        }
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Self::from_f64(self.hi.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Self::one() / self
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn powf(self, n: Self) -> Self {
        if self.is_zero() {
            return if n.is_zero() { Self::one() } else { Self::zero() };
        }
        (self.ln() * n).exp()
    }

    fn sqrt(self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        if self.hi < 0.0 {
            return Self::nan();
        }
        // One dd Newton step on the f64 seed.
        let y = Self::from_f64(self.hi.sqrt());
        y + (self - y * y) / (y + y)
    }

    fn exp(self) -> Self {
        // exp(hi + lo) = exp(hi) * (1 + lo + lo^2/2 + ...)
        let e = Self::from_f64(self.hi.exp());
        let half = Self::from_f64(0.5);
        let corr = Self::one() + Self::from_f64(self.lo) * (Self::one() + Self::from_f64(self.lo) * half);
        e * corr
    }
    fn exp2(self) -> Self {
        (self * Self::LN_2()).exp()
    }
    fn ln(self) -> Self {
        // ln(hi + lo) = ln(hi) + ln(1 + lo/hi) ~ ln(hi) + lo/hi
        Self::from_f64(self.hi.ln()) + Self::from_f64(self.lo / self.hi)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / Self::LN_2()
    }
    fn log10(self) -> Self {
        self.ln() / Self::LN_10()
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let y = Self::from_f64(self.value().cbrt());
        if y.is_zero() {
            return y;
        }
        // Newton: y -> y - (y^3 - x) / (3 y^2)
        let three = Self::from_f64(3.0);
        y - (y * y * y - self) / (three * y * y)
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }

    fn sin(self) -> Self {
        Self::from_f64(self.hi.sin()) + Self::from_f64(self.hi.cos()) * Self::from_f64(self.lo)
    }
    fn cos(self) -> Self {
        Self::from_f64(self.hi.cos()) - Self::from_f64(self.hi.sin()) * Self::from_f64(self.lo)
    }
    fn tan(self) -> Self {
        self.sin() / self.cos()
    }
    fn asin(self) -> Self {
        Self::from_f64(self.value().asin())
    }
    fn acos(self) -> Self {
        Self::from_f64(self.value().acos())
    }
    fn atan(self) -> Self {
        Self::from_f64(self.value().atan())
    }
    fn atan2(self, other: Self) -> Self {
        Self::from_f64(self.value().atan2(other.value()))
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        if self.abs().hi < 1e-3 {
            // Series keeps low-word accuracy near zero.
            let x = self;
            let half = Self::from_f64(0.5);
            let sixth = Self::from_f64(1.0 / 6.0);
            let t24 = Self::from_f64(1.0 / 24.0);
            x * (Self::one() + x * (half + x * (sixth + x * t24)))
        } else {
            self.exp() - Self::one()
        }
    }
    fn ln_1p(self) -> Self {
        (Self::one() + self).ln()
    }
    fn sinh(self) -> Self {
        Self::from_f64(self.value().sinh())
    }
    fn cosh(self) -> Self {
        Self::from_f64(self.value().cosh())
    }
    fn tanh(self) -> Self {
        Self::from_f64(self.value().tanh())
    }
    fn asinh(self) -> Self {
        Self::from_f64(self.value().asinh())
    }
    fn acosh(self) -> Self {
        Self::from_f64(self.value().acosh())
    }
    fn atanh(self) -> Self {
        Self::from_f64(self.value().atanh())
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }

    fn to_degrees(self) -> Self {
        self * Self::from_f64(180.0) / Self::PI()
    }
    fn to_radians(self) -> Self {
        self * Self::PI() / Self::from_f64(180.0)
    }
}

impl FloatConst for DoubleDouble {
    fn E() -> Self {
        DoubleDouble::new(std::f64::consts::E, 1.4456468917292502e-16)
    }
    fn PI() -> Self {
        DoubleDouble::new(std::f64::consts::PI, 1.2246467991473532e-16)
    }
    fn LN_2() -> Self {
        DoubleDouble::new(std::f64::consts::LN_2, 2.3190468138462996e-17)
    }
    fn LN_10() -> Self {
        DoubleDouble::new(std::f64::consts::LN_10, -2.1707562233822494e-16)
    }
    fn SQRT_2() -> Self {
        DoubleDouble::new(std::f64::consts::SQRT_2, -9.667293313452913e-17)
    }
    fn FRAC_1_PI() -> Self {
        Self::one() / Self::PI()
    }
    fn FRAC_1_SQRT_2() -> Self {
        Self::one() / Self::SQRT_2()
    }
    fn FRAC_2_PI() -> Self {
        Self::from_f64(2.0) / Self::PI()
    }
    fn FRAC_2_SQRT_PI() -> Self {
        Self::from_f64(2.0) / Self::PI().sqrt()
    }
    fn FRAC_PI_2() -> Self {
        DoubleDouble::new(std::f64::consts::PI / 2.0, 1.2246467991473532e-16 / 2.0)
    }
    fn FRAC_PI_3() -> Self {
        Self::PI() / Self::from_f64(3.0)
    }
    fn FRAC_PI_4() -> Self {
        DoubleDouble::new(std::f64::consts::PI / 4.0, 1.2246467991473532e-16 / 4.0)
    }
    fn FRAC_PI_6() -> Self {
        Self::PI() / Self::from_f64(6.0)
    }
    fn FRAC_PI_8() -> Self {
        DoubleDouble::new(std::f64::consts::PI / 8.0, 1.2246467991473532e-16 / 8.0)
    }
    fn LOG10_E() -> Self {
        Self::one() / Self::LN_10()
    }
    fn LOG2_E() -> Self {
        Self::one() / Self::LN_2()
    }
}
