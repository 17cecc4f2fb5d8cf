//! Rigorous enclosures of `ln` and `exp` at rational arguments.
//!
//! Values are fixed-point integers scaled by `2^FRAC_BITS`. Every routine
//! returns a pair `(lo, hi)` with `lo ≤ true value · 2^FRAC_BITS ≤ hi`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Working precision of the fixed-point representation.
pub const FRAC_BITS: u64 = 192;

/// Closed rational interval.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Bracket {
    #[serde(with = "crate::dyadic::rational_str")]
    pub lo: BigRational,
    #[serde(with = "crate::dyadic::rational_str")]
    pub hi: BigRational,
}

impl Bracket {
    pub fn exact(x: BigRational) -> Self {
        Bracket { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        ((&self.lo + &self.hi) / BigInt::from(2)).to_f64().unwrap_or(f64::NAN)
    }
}

/// Fixed-point enclosure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fx {
    pub lo: BigInt,
    pub hi: BigInt,
}

fn one() -> BigInt {
    BigInt::one() << FRAC_BITS
}

pub fn fx_floor(x: &BigRational) -> BigInt {
    (x.numer() << FRAC_BITS).div_floor(x.denom())
}

pub fn fx_ceil(x: &BigRational) -> BigInt {
    -((-(x.numer() << FRAC_BITS)).div_floor(x.denom()))
}

pub fn fx_to_rational(v: &BigInt) -> BigRational {
    BigRational::new(v.clone(), one())
}

impl Fx {
    pub fn exact_rational(x: &BigRational) -> Self {
        Fx {
            lo: fx_floor(x),
            hi: fx_ceil(x),
        }
    }

    pub fn to_bracket(&self) -> Bracket {
        Bracket {
            lo: fx_to_rational(&self.lo),
            hi: fx_to_rational(&self.hi),
        }
    }
}

fn mul_floor(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b).div_floor(&one())
}

fn mul_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-(a * b)).div_floor(&one()))
}

fn div_floor_int(a: &BigInt, n: u64) -> BigInt {
    a.div_floor(&BigInt::from(n))
}

fn div_ceil_int(a: &BigInt, n: u64) -> BigInt {
    -((-a).div_floor(&BigInt::from(n)))
}

/// Product of enclosures with non-negative lower ends.
pub fn mul_nonneg(a: &Fx, b: &Fx) -> Fx {
    debug_assert!(!a.lo.is_negative() && !b.lo.is_negative());
    Fx {
        lo: mul_floor(&a.lo, &b.lo),
        hi: mul_ceil(&a.hi, &b.hi),
    }
}

/// Enclosure of `x·q` for rational `q ≥ 0`.
pub fn scale_nonneg(a: &Fx, q: &BigRational) -> Fx {
    debug_assert!(!q.is_negative());
    Fx {
        lo: (&a.lo * q.numer()).div_floor(q.denom()),
        hi: -((-(&a.hi * q.numer())).div_floor(q.denom())),
    }
}

/// `atanh(t)` for `0 ≤ t_lo ≤ t_hi ≤ 1/2` (fixed point).
fn atanh_fx(t_lo: &BigInt, t_hi: &BigInt) -> Fx {
    let sq_lo = mul_floor(t_lo, t_lo);
    let sq_hi = mul_ceil(t_hi, t_hi);
    let mut lo = BigInt::zero();
    let mut p = t_lo.clone();
    let mut n = 1u64;
    while !p.is_zero() {
        lo += div_floor_int(&p, n);
        p = mul_floor(&p, &sq_lo);
        n += 2;
    }
    let mut hi = BigInt::zero();
    let mut p = t_hi.clone();
    let mut n = 1u64;
    let unit = BigInt::one();
    loop {
        hi += div_ceil_int(&p, n);
        if p <= unit {
            break;
        }
        p = mul_ceil(&p, &sq_hi);
        n += 2;
    }
    // Remaining terms are below p·t²/(1 − t²) ≤ p/3 ≤ one ulp; the term
    // bound itself is rounded up.
    hi += 2;
    Fx { lo, hi }
}

/// `ln 2 = 2·atanh(1/3)`.
pub fn ln2() -> &'static Fx {
    static LN2: OnceLock<Fx> = OnceLock::new();
    LN2.get_or_init(|| {
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        let a = atanh_fx(&fx_floor(&third), &fx_ceil(&third));
        Fx {
            lo: a.lo * 2,
            hi: a.hi * 2,
        }
    })
}

/// Euler's number from `Σ 1/n!`.
pub fn e() -> &'static Fx {
    static E: OnceLock<Fx> = OnceLock::new();
    E.get_or_init(|| {
        let mut lo = BigInt::zero();
        let mut term = one();
        let mut n = 1u64;
        while !term.is_zero() {
            lo += &term;
            term = div_floor_int(&term, n);
            n += 1;
        }
        let mut hi = BigInt::zero();
        let mut term = one();
        let mut n = 1u64;
        loop {
            hi += &term;
            if term <= BigInt::one() {
                break;
            }
            term = div_ceil_int(&term, n);
            n += 1;
        }
        // The tail after a term of one ulp is below two ulps.
        hi += 2;
        Fx { lo, hi }
    })
}

/// Lower or upper fixed-point bound on `ln x` for rational `x > 0`.
fn ln_point(x: &BigRational, upper: bool) -> BigInt {
    assert!(x.is_positive(), "ln of a non-positive number");
    let mut k = x.numer().bits() as i64 - x.denom().bits() as i64;
    let mut y = x * crate::dyadic::pow2(-k);
    if y < BigRational::one() {
        k -= 1;
        y *= BigInt::from(2);
    }
    // y ∈ [1, 2), t = (y − 1)/(y + 1) ∈ [0, 1/3).
    let t = (&y - BigInt::one()) / (&y + BigInt::one());
    let a = atanh_fx(&fx_floor(&t), &fx_ceil(&t));
    let l2 = ln2();
    let kb = BigInt::from(k);
    if upper {
        let l = if k >= 0 { &l2.hi } else { &l2.lo };
        a.hi * 2 + kb * l
    } else {
        let l = if k >= 0 { &l2.lo } else { &l2.hi };
        a.lo * 2 + kb * l
    }
}

/// Enclosure of `ln x` for `x` in a fixed-point interval with positive ends.
pub fn ln_fx(x: &Fx) -> Fx {
    Fx {
        lo: ln_point(&fx_to_rational(&x.lo), false),
        hi: ln_point(&fx_to_rational(&x.hi), true),
    }
}

pub fn ln_rational(x: &BigRational) -> Fx {
    Fx {
        lo: ln_point(x, false),
        hi: ln_point(x, true),
    }
}

/// Bound on `exp(x)` for a fixed-point `x`.
fn exp_point(x: &BigInt, upper: bool) -> BigInt {
    if x.is_negative() {
        // exp(x) = 1/exp(−x); rounding flips.
        let inv = exp_point(&-x, !upper);
        let num = BigInt::one() << (2 * FRAC_BITS);
        return if upper {
            -((-num).div_floor(&inv))
        } else {
            num.div_floor(&inv)
        };
    }
    // Halve until x ≤ 2^-10, evaluate the series, then square back.
    let s = (x.bits() as i64 - FRAC_BITS as i64 + 10).max(0) as u64;
    let r = if upper { -((-x) >> s) } else { x >> s };
    let mut sum = BigInt::zero();
    let mut term = one();
    let mut n = 1u64;
    loop {
        sum += &term;
        if upper {
            if term <= BigInt::one() {
                sum += 2;
                break;
            }
            term = div_ceil_int(&mul_ceil(&term, &r), n);
        } else {
            if term.is_zero() {
                break;
            }
            term = div_floor_int(&mul_floor(&term, &r), n);
        }
        n += 1;
    }
    for _ in 0..s {
        sum = if upper {
            mul_ceil(&sum, &sum)
        } else {
            mul_floor(&sum, &sum)
        };
    }
    sum
}

pub fn exp_fx(x: &Fx) -> Fx {
    Fx {
        lo: exp_point(&x.lo, false),
        hi: exp_point(&x.hi, true),
    }
}

/// `ln x` as a rational bracket.
pub fn ln_bracket(x: &BigRational) -> Bracket {
    ln_rational(x).to_bracket()
}

/// `exp x` as a rational bracket.
pub fn exp_bracket(x: &BigRational) -> Bracket {
    exp_fx(&Fx::exact_rational(x)).to_bracket()
}

/// `x^q` for `x > 0` and rational `q`; exact when `q` is an integer.
pub fn pow_rational(x: &BigRational, q: &BigRational) -> Bracket {
    if q.is_integer() {
        let n = q.to_integer();
        let v = num_traits::pow::Pow::pow(x, &n);
        return Bracket::exact(v);
    }
    let l = ln_rational(x);
    let scaled = if q.is_negative() {
        // q·[lo, hi] = −(|q|·[lo, hi]) with the ends swapped.
        let s = scale_nonneg(&l, &-q);
        Fx { lo: -s.hi, hi: -s.lo }
    } else {
        scale_nonneg(&l, q)
    };
    exp_fx(&scaled).to_bracket()
}

/// Enclosure of `x^q` for an enclosure `x` with positive ends and `q ≥ 0`.
pub fn pow_fx(x: &Fx, q: &BigRational) -> Fx {
    debug_assert!(!q.is_negative());
    if q.is_integer() {
        let n = q.to_integer();
        let mut acc = Fx { lo: one(), hi: one() };
        let mut k = BigInt::zero();
        while k < n {
            acc = mul_nonneg(&acc, x);
            k += 1;
        }
        return acc;
    }
    exp_fx(&scale_nonneg(&ln_fx(x), q))
}
