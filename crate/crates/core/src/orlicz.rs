//! Luxemburg averages `⟨f⟩_{R,φ}` of simple functions and the large/small
//! rectangle constants of the Orlicz extension.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::certified::{self, fx_ceil, fx_floor, Bracket, Fx, FRAC_BITS};
use crate::dyadic::{pow2, rational_str, DyadicInterval, DyadicRect};
use crate::measure::{OrliczGauge, SimpleFunction};
use crate::pointsets::PointSetP;

/// Bisection stops once `hi − lo ≤ 2^{-40}·lo`.
pub const RELATIVE_WIDTH_BITS: i64 = 40;

/// `(value, θ)` pairs: `f` takes `value` on a fraction `θ` of `R`.
pub type Distribution = Vec<(BigRational, BigRational)>;

/// Value distribution of `f` on `R`, merged by value and sorted.
pub fn distribution(f: &SimpleFunction, r: &DyadicRect) -> Distribution {
    let area = r.area().to_rational();
    let mut by_value: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    for (i, cap) in f.overlaps(r) {
        let v = f.value(i);
        if v.is_zero() {
            continue;
        }
        *by_value.entry(v.clone()).or_insert_with(BigRational::zero) += cap / &area;
    }
    by_value.into_iter().collect()
}

fn one_fx() -> BigInt {
    BigInt::one() << FRAC_BITS
}

/// Enclosure of `φ(x)` for rational `x ≥ 0`.
fn phi_fx(gauge: &OrliczGauge, x: &BigRational) -> Fx {
    if x.is_zero() {
        return Fx {
            lo: BigInt::zero(),
            hi: BigInt::zero(),
        };
    }
    match gauge {
        OrliczGauge::LogLog { alpha } => {
            let e = certified::e();
            let arg = Fx {
                lo: &e.lo + fx_floor(x),
                hi: &e.hi + fx_ceil(x),
            };
            let l = certified::ln_fx(&arg);
            let la = certified::pow_fx(&l, alpha);
            certified::scale_nonneg(&la, x)
        }
        OrliczGauge::Power { p } => {
            if p.is_integer() {
                let v = num_traits::pow::Pow::pow(x, &p.to_integer());
                Fx::exact_rational(&v)
            } else {
                let l = certified::ln_rational(x);
                certified::exp_fx(&certified::scale_nonneg(&l, p))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    /// `∫φ(f/λ) > 1`, so `λ` is below the average.
    Below,
    /// `∫φ(f/λ) ≤ 1`.
    Above,
    Undecided,
}

fn decide(gauge: &OrliczGauge, dist: &[(BigRational, BigRational)], lambda: &BigRational) -> Side {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for (v, theta) in dist {
        let phi = phi_fx(gauge, &(v / lambda));
        let t = certified::scale_nonneg(&phi, theta);
        lo += t.lo;
        hi += t.hi;
    }
    let one = one_fx();
    if lo > one {
        Side::Below
    } else if hi <= one {
        Side::Above
    } else {
        Side::Undecided
    }
}

fn narrow_enough(lo: &BigRational, hi: &BigRational) -> bool {
    (hi - lo) <= lo * pow2(-RELATIVE_WIDTH_BITS)
}

/// Exact `x^{1/n}` when it is rational.
fn exact_root(x: &BigRational, n: u32) -> Option<BigRational> {
    let rn = x.numer().nth_root(n);
    let rd = x.denom().nth_root(n);
    (num_traits::pow(rn.clone(), n as usize) == *x.numer() && num_traits::pow(rd.clone(), n as usize) == *x.denom())
        .then(|| BigRational::new(rn, rd))
}

/// `⟨f⟩_{R,φ}` from the value distribution.
pub fn luxemburg(gauge: &OrliczGauge, dist: &[(BigRational, BigRational)]) -> Bracket {
    let dist: Vec<_> = dist
        .iter()
        .filter(|(v, t)| v.is_positive() && t.is_positive())
        .cloned()
        .collect();
    if dist.is_empty() {
        return Bracket::exact(BigRational::zero());
    }
    let avg: BigRational = dist.iter().map(|(v, t)| v * t).sum();
    if gauge.is_linear() {
        return Bracket::exact(avg);
    }
    if let OrliczGauge::Power { p } = gauge {
        if p.is_integer() {
            return power_root(&dist, p.to_integer().to_u32().expect("small exponent"), avg);
        }
    }
    // φ(x) ≥ x and, for powers, Jensen over a sub-probability give
    // ∫φ(f/λ) > 1 for every λ < avg.
    let mut lo = avg.clone();
    let mut hi = &avg * BigInt::from(2);
    loop {
        match decide(gauge, &dist, &hi) {
            Side::Above => break,
            Side::Below => {
                lo = hi.clone();
                hi *= BigInt::from(2);
            }
            Side::Undecided => hi *= BigInt::from(2),
        }
    }
    while !narrow_enough(&lo, &hi) {
        let mid = (&lo + &hi) / BigInt::from(2);
        match decide(gauge, &dist, &mid) {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Undecided => break,
        }
    }
    Bracket { lo, hi }
}

/// `(Σ θ v^n)^{1/n}`, exact when the root is rational.
fn power_root(dist: &[(BigRational, BigRational)], n: u32, avg: BigRational) -> Bracket {
    let x: BigRational = dist
        .iter()
        .map(|(v, t)| num_traits::pow(v.clone(), n as usize) * t)
        .sum();
    if let Some(r) = exact_root(&x, n) {
        return Bracket::exact(r);
    }
    let below = |l: &BigRational| num_traits::pow(l.clone(), n as usize) < x;
    let mut lo = avg;
    let mut hi = &lo * BigInt::from(2);
    while below(&hi) {
        lo = hi.clone();
        hi *= BigInt::from(2);
    }
    while !narrow_enough(&lo, &hi) {
        let mid = (&lo + &hi) / BigInt::from(2);
        if below(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Bracket { lo, hi }
}

/// `⟨f⟩_{R,φ}`; zero when `f` vanishes on `R`.
pub fn orlicz_average(f: &SimpleFunction, r: &DyadicRect, gauge: &OrliczGauge) -> Bracket {
    luxemburg(gauge, &distribution(f, r))
}

/// Memoizes Luxemburg averages by value distribution.
pub struct OrliczCache {
    gauge: OrliczGauge,
    map: Mutex<HashMap<Distribution, Bracket>>,
}

impl OrliczCache {
    pub fn new(gauge: OrliczGauge) -> Self {
        OrliczCache {
            gauge,
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn gauge(&self) -> &OrliczGauge {
        &self.gauge
    }

    pub fn average(&self, f: &SimpleFunction, r: &DyadicRect) -> Bracket {
        let dist = distribution(f, r);
        if let Some(b) = self.map.lock().expect("cache lock").get(&dist) {
            return b.clone();
        }
        let b = luxemburg(&self.gauge, &dist);
        self.map.lock().expect("cache lock").insert(dist, b.clone());
        b
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `x^α` enclosure for `x ≥ 1` given as an enclosure, with `0^0 = 1` handled by the caller.
fn pow_alpha(x: &Fx, alpha: &BigRational) -> Fx {
    certified::pow_fx(x, alpha)
}

fn divide(num: &Bracket, den: &Fx) -> Bracket {
    let den = den.to_bracket();
    Bracket {
        lo: &num.lo / &den.hi,
        hi: &num.hi / &den.lo,
    }
}

/// Worst ratio found in a pool, with the rectangle attaining the upper end.
#[derive(Clone, Debug, Serialize)]
pub struct MeasuredConstant {
    #[serde(with = "rational_str")]
    pub lo: BigRational,
    #[serde(with = "rational_str")]
    pub hi: BigRational,
    pub argmax: Option<DyadicRect>,
    pub pool_size: usize,
}

impl MeasuredConstant {
    fn empty() -> Self {
        MeasuredConstant {
            lo: BigRational::zero(),
            hi: BigRational::zero(),
            argmax: None,
            pool_size: 0,
        }
    }

    fn absorb(&mut self, r: &DyadicRect, b: &Bracket) {
        self.pool_size += 1;
        if b.lo > self.lo {
            self.lo = b.lo.clone();
        }
        if b.hi > self.hi {
            self.hi = b.hi.clone();
            self.argmax = Some(r.clone());
        }
    }

    fn merge(mut self, other: MeasuredConstant) -> Self {
        self.pool_size += other.pool_size;
        if other.lo > self.lo {
            self.lo = other.lo;
        }
        if other.hi > self.hi {
            self.hi = other.hi;
            self.argmax = other.argmax;
        }
        self
    }
}

/// Constants of the two Orlicz average bounds at one `(m, α)`.
#[derive(Clone, Debug, Serialize)]
pub struct OrliczConstants {
    pub m: u32,
    #[serde(with = "rational_str")]
    pub alpha: BigRational,
    /// `⟨f⟩_{R,φ}·|R| / (|R̄|·max(m^α, ln^α(|R|/|R̄|)))` over `|R̄| ≥ 2^{-2m-1}`.
    pub large: MeasuredConstant,
    /// `⟨f⟩_{R̄,φ}·2^{2m}|R̄| / m^α` over `2^{-2m-4} ≤ |R̄| < 2^{-2m-1}`.
    pub small: MeasuredConstant,
    pub distinct_distributions: usize,
}

/// All unit dyadic rectangles with level sum in `range`.
pub fn unit_rect_pool(levels: std::ops::RangeInclusive<u32>) -> Vec<DyadicRect> {
    let mut out = Vec::new();
    for s in levels {
        for a in 0..=s {
            let b = s - a;
            for i in 0..(1u64 << a) {
                for j in 0..(1u64 << b) {
                    out.push(DyadicRect::xy(
                        DyadicInterval::new(a as i32, i).expect("level"),
                        DyadicInterval::new(b as i32, j).expect("level"),
                    ));
                }
            }
        }
    }
    out
}

/// Rectangles sticking out of the unit square: one or both sides replaced by
/// `[0, 2^a)` for `a = 1..=max_dilation`.
pub fn ambient_pool(base: &[DyadicRect], max_dilation: u32) -> Vec<DyadicRect> {
    let mut out = Vec::new();
    for r in base {
        for axis in 0..2 {
            if r.side(axis).level() != 0 {
                continue;
            }
            for a in 1..=max_dilation {
                let wide = DyadicInterval::ambient(-(a as i32), 0).expect("ambient");
                out.push(r.with_side(axis, wide));
            }
        }
    }
    for a in 1..=max_dilation {
        for b in 1..=max_dilation {
            out.push(DyadicRect::xy(
                DyadicInterval::ambient(-(a as i32), 0).expect("ambient"),
                DyadicInterval::ambient(-(b as i32), 0).expect("ambient"),
            ));
        }
    }
    out
}

/// Measures both Orlicz average constants for `f` built from `𝒫` at `m ≥ 1`.
pub fn orlicz_constants(p: &PointSetP, f: &SimpleFunction, alpha: &BigRational) -> OrliczConstants {
    let m = p.m();
    assert!(m >= 1, "m^α needs m ≥ 1");
    let gauge = OrliczGauge::LogLog { alpha: alpha.clone() };
    let cache = OrliczCache::new(gauge);
    let m_alpha = pow_alpha(&Fx::exact_rational(&BigRational::from_integer(m.into())), alpha);

    let large_base = unit_rect_pool(0..=2 * m + 1);
    let mut large_pool = ambient_pool(&large_base, 2 * m + 2);
    large_pool.extend(large_base);
    let large = large_pool
        .par_iter()
        .map(|r| {
            let clipped = r.clip_to_unit().expect("pool meets the unit square");
            let ratio = clipped.area().to_rational() / r.area().to_rational();
            // ln(|R|/|R̄|) = e·ln 2 with |R|/|R̄| = 2^e.
            let e = r.area().exponent() - clipped.area().exponent();
            let log_term = if e == 0 {
                if alpha.is_zero() {
                    Fx::exact_rational(&BigRational::one())
                } else {
                    Fx {
                        lo: BigInt::zero(),
                        hi: BigInt::zero(),
                    }
                }
            } else {
                let l2 = certified::ln2();
                let ln = Fx {
                    lo: &l2.lo * e,
                    hi: &l2.hi * e,
                };
                pow_alpha(&ln, alpha)
            };
            let mx = Fx {
                lo: (&m_alpha.lo).max(&log_term.lo).clone(),
                hi: (&m_alpha.hi).max(&log_term.hi).clone(),
            };
            let den = certified::scale_nonneg(&mx, &ratio);
            let avg = cache.average(f, r);
            let mut c = MeasuredConstant::empty();
            c.absorb(r, &divide(&avg, &den));
            c
        })
        .reduce(MeasuredConstant::empty, MeasuredConstant::merge);

    let small_pool = unit_rect_pool(2 * m + 2..=2 * m + 4);
    let small = small_pool
        .par_iter()
        .map(|r| {
            let scale = r.area().to_rational() * pow2(2 * m as i64);
            let den = Fx {
                lo: m_alpha.lo.clone(),
                hi: m_alpha.hi.clone(),
            };
            let avg = cache.average(f, r);
            let num = Bracket {
                lo: &avg.lo * &scale,
                hi: &avg.hi * &scale,
            };
            let mut c = MeasuredConstant::empty();
            c.absorb(r, &divide(&num, &den));
            c
        })
        .reduce(MeasuredConstant::empty, MeasuredConstant::merge);

    OrliczConstants {
        m,
        alpha: alpha.clone(),
        large,
        small,
        distinct_distributions: cache.len(),
    }
}

/// `Σ_R ⟨f⟩_{R,φ}⟨ν⟩_R|R|` as a bracket.
pub fn form_phi<'a>(
    rects: impl IntoIterator<Item = &'a DyadicRect>,
    f: &SimpleFunction,
    nu: &crate::measure::AtomicMeasure,
    gauge: &OrliczGauge,
) -> Bracket {
    use crate::measure::RectMass;
    let cache = OrliczCache::new(gauge.clone());
    let mut lo = BigRational::zero();
    let mut hi = BigRational::zero();
    for r in rects {
        // ⟨ν⟩_R|R| = ν(R).
        let mass = nu.mass(r);
        if mass.is_zero() {
            continue;
        }
        let avg = cache.average(f, r);
        lo += &avg.lo * &mass;
        hi += &avg.hi * &mass;
    }
    Bracket { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicInterval;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn half_indicator() -> SimpleFunction {
        let piece = DyadicRect::xy(DyadicInterval::new(1, 0).unwrap(), DyadicInterval::UNIT);
        SimpleFunction::new(2, vec![(piece, r(1, 1))]).unwrap()
    }

    #[test]
    fn power_one_is_plain_average() {
        let f = half_indicator();
        let b = orlicz_average(&f, &DyadicRect::unit_cube(2), &OrliczGauge::power(r(1, 1)).unwrap());
        assert_eq!(b, Bracket::exact(r(1, 2)));
    }

    #[test]
    fn power_two_of_half_indicator() {
        let f = half_indicator();
        let b = orlicz_average(&f, &DyadicRect::unit_cube(2), &OrliczGauge::power(r(2, 1)).unwrap());
        let want = std::f64::consts::FRAC_1_SQRT_2;
        assert!(b.lo.to_f64().unwrap() <= want && want <= b.hi.to_f64().unwrap());
        assert!(narrow_enough(&b.lo, &b.hi));
    }

    #[test]
    fn constant_function_any_power() {
        let f = SimpleFunction::new(2, vec![(DyadicRect::unit_cube(2), r(3, 1))]).unwrap();
        for p in [r(2, 1), r(3, 1)] {
            let b = orlicz_average(&f, &DyadicRect::unit_cube(2), &OrliczGauge::power(p).unwrap());
            assert_eq!(b, Bracket::exact(r(3, 1)));
        }
        let b = orlicz_average(&f, &DyadicRect::unit_cube(2), &OrliczGauge::power(r(3, 2)).unwrap());
        assert!(b.contains(&r(3, 1)));
    }

    #[test]
    fn zero_on_rect_gives_zero() {
        let f = half_indicator();
        let right = DyadicRect::xy(DyadicInterval::new(1, 1).unwrap(), DyadicInterval::UNIT);
        let b = orlicz_average(&f, &right, &OrliczGauge::loglog(r(1, 4)).unwrap());
        assert_eq!(b, Bracket::exact(BigRational::zero()));
    }

    #[test]
    fn loglog_brackets_and_exceeds_average() {
        let f = half_indicator();
        let b = orlicz_average(&f, &DyadicRect::unit_cube(2), &OrliczGauge::loglog(r(1, 4)).unwrap());
        assert!(b.lo >= r(1, 2) && b.lo < b.hi && narrow_enough(&b.lo, &b.hi));
        // λ solves (1/2)(1/λ)ln^{1/4}(e + 1/λ) = 1.
        let g = |l: f64| 0.5 / l * (std::f64::consts::E + 1.0 / l).ln().powf(0.25) - 1.0;
        let (mut lo, mut hi) = (0.5f64, 2.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((b.midpoint_f64() - lo).abs() < 1e-12);
    }

    #[test]
    fn constants_at_small_m_are_finite() {
        let p = crate::pointsets::construct_p(2).unwrap();
        let f = crate::measure::build_f_simple(&p);
        let c = orlicz_constants(&p, &f, &r(1, 4));
        assert!(c.large.pool_size > 0 && c.small.pool_size > 0);
        assert!(c.large.hi.is_positive() && c.small.hi.is_positive());
        assert!(c.large.lo <= c.large.hi);
    }
}
