//! Exact evaluation of the dyadic strong maximal function.
//!
//! For an atomic measure on `[0,1)^d` and a point `z` sharing no coordinate
//! with any atom, the supremum over dyadic rectangles containing `z` is
//! attained among the rectangles with side levels `0 ≤ i_t ≤ L_t`, where
//! `L_t` is the longest common binary prefix of `z_t` with any atom's `t`-th
//! coordinate: a finer side on axis `t` holds no atoms, and coarser-than-unit
//! sides only add empty area.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{pow2, rational_str, DyadicInterval, DyadicPoint, DyadicRect};
use crate::error::{Error, Result};
use crate::geometry::{maximal_boxes, union_volume};
use crate::measure::{AtomicMeasure, RectMass, SimpleFunction};

/// A maximal-function value; infinite when the point shares a coordinate
/// with an atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaxValue {
    Finite(BigRational),
    Infinite,
}

impl MaxValue {
    pub fn finite(self) -> Result<BigRational> {
        match self {
            MaxValue::Finite(v) => Ok(v),
            MaxValue::Infinite => Err(Error::AtomCoincidence),
        }
    }
}

impl std::fmt::Display for MaxValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxValue::Finite(v) => write!(f, "{}", crate::dyadic::format_rational(v)),
            MaxValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Non-negative integers used as scaled masses.
trait Mass: Clone + Send + Sync {
    fn nil() -> Self;
    fn add(&mut self, other: &Self);
    /// `self·2^{sa}` against `other·2^{sb}`.
    fn cmp_scaled(&self, sa: u32, other: &Self, sb: u32) -> Ordering;
    fn into_biguint(self) -> BigUint;
}

impl Mass for u128 {
    fn nil() -> Self {
        0
    }
    fn add(&mut self, other: &Self) {
        *self += other;
    }
    fn cmp_scaled(&self, sa: u32, other: &Self, sb: u32) -> Ordering {
        if *self == 0 || *other == 0 {
            return self.cmp(other);
        }
        if sa >= sb {
            let d = sa - sb;
            if d >= self.leading_zeros() {
                Ordering::Greater
            } else {
                (self << d).cmp(other)
            }
        } else {
            other.cmp_scaled(sb, self, sa).reverse()
        }
    }
    fn into_biguint(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Mass for BigUint {
    fn nil() -> Self {
        Zero::zero()
    }
    fn add(&mut self, other: &Self) {
        *self += other;
    }
    fn cmp_scaled(&self, sa: u32, other: &Self, sb: u32) -> Ordering {
        let m = sa.min(sb);
        (self << (sa - m) as usize).cmp(&(other << (sb - m) as usize))
    }
    fn into_biguint(self) -> BigUint {
        self
    }
}

/// Best `(mass, level sum)` over the level grid, maximizing `mass·2^{level}`.
/// `cpl[a*d + t]` is the common prefix length of atom `a` with the point on
/// axis `t`.
fn best_rectangle<W: Mass>(cpl: &[u32], d: usize, weights: &[W], limits: &[u32]) -> (W, u32) {
    let mut best = (W::nil(), 0u32);
    let active: Vec<usize> = (0..weights.len()).collect();
    descend(cpl, d, weights, limits, 0, &active, 0, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn descend<W: Mass>(
    cpl: &[u32],
    d: usize,
    weights: &[W],
    limits: &[u32],
    axis: usize,
    active: &[usize],
    level: u32,
    best: &mut (W, u32),
) {
    let limit = limits[axis] as usize;
    if axis + 1 == d {
        let mut hist = vec![W::nil(); limit + 1];
        for &a in active {
            hist[cpl[a * d + axis] as usize].add(&weights[a]);
        }
        let mut acc = W::nil();
        for i in (0..=limit).rev() {
            acc.add(&hist[i]);
            if acc.cmp_scaled(level + i as u32, &best.0, best.1) == Ordering::Greater {
                *best = (acc.clone(), level + i as u32);
            }
        }
        return;
    }
    // Bucket the active atoms by prefix length so each level sees only the
    // atoms still inside.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); limit + 1];
    for &a in active {
        buckets[cpl[a * d + axis] as usize].push(a);
    }
    let mut inside: Vec<usize> = Vec::with_capacity(active.len());
    let mut per_level: Vec<Vec<usize>> = vec![Vec::new(); limit + 1];
    for i in (0..=limit).rev() {
        inside.extend_from_slice(&buckets[i]);
        per_level[i] = inside.clone();
    }
    for (i, set) in per_level.iter().enumerate() {
        if !set.is_empty() {
            descend(cpl, d, weights, limits, axis + 1, set, level + i as u32, best);
        }
    }
}

/// Scaled integer weights `w·D` with the common denominator `D`.
#[derive(Clone, Debug)]
enum ScaledWeights {
    Small(Vec<u128>),
    Big(Vec<BigUint>),
}

fn scale_weights(weights: &[BigRational]) -> (ScaledWeights, BigInt) {
    let den = weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let nums: Vec<BigUint> = weights
        .iter()
        .map(|w| (w.numer() * (&den / w.denom())).to_biguint().expect("positive weight"))
        .collect();
    let total: BigUint = nums.iter().sum();
    if total.bits() < 64 {
        (
            ScaledWeights::Small(nums.iter().map(|n| n.to_u128().expect("fits")).collect()),
            den,
        )
    } else {
        (ScaledWeights::Big(nums), den)
    }
}

/// Reusable evaluator of `M_S μ` at many points.
pub struct MaximalEvaluator<'a> {
    mu: &'a AtomicMeasure,
    weights: ScaledWeights,
    den: BigInt,
}

impl<'a> MaximalEvaluator<'a> {
    pub fn new(mu: &'a AtomicMeasure) -> Self {
        let (weights, den) = scale_weights(mu.weights());
        MaximalEvaluator { mu, weights, den }
    }

    pub fn eval(&self, z: &DyadicPoint) -> Result<MaxValue> {
        let d = self.mu.dim();
        if z.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: z.dim(),
            });
        }
        let atoms = self.mu.atoms();
        let mut cpl = Vec::with_capacity(atoms.len() * d);
        let mut limits = vec![0u32; d];
        for a in atoms {
            for (t, limit) in limits.iter_mut().enumerate() {
                let Some(c) = z.coord(t).common_prefix_len(a.coord(t)) else {
                    return Ok(MaxValue::Infinite);
                };
                *limit = (*limit).max(c);
                cpl.push(c);
            }
        }
        let (mass, level) = match &self.weights {
            ScaledWeights::Small(w) => {
                let (m, l) = best_rectangle(&cpl, d, w, &limits);
                (m.into_biguint(), l)
            }
            ScaledWeights::Big(w) => best_rectangle(&cpl, d, w, &limits),
        };
        let value = BigRational::new(BigInt::from(mass), self.den.clone()) * pow2(level as i64);
        Ok(MaxValue::Finite(value))
    }
}

/// `M_S μ(z) = sup_{R ∋ z} μ(R)/|R|` over dyadic rectangles.
pub fn ms_eval(mu: &AtomicMeasure, z: &DyadicPoint) -> Result<MaxValue> {
    MaximalEvaluator::new(mu).eval(z)
}

/// `⟨M_S μ, ν⟩ = Σ_z ν({z}) M_S μ(z)`.
pub fn pairing_ms(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<BigRational> {
    Ok(pairing_terms(mu, nu)?
        .into_iter()
        .zip(nu.weights())
        .map(|(v, w)| v * w)
        .sum())
}

/// `M_S μ` at every atom of `ν`, in atom order.
pub fn pairing_terms(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<Vec<BigRational>> {
    let ev = MaximalEvaluator::new(mu);
    nu.atoms().par_iter().map(|z| ev.eval(z)?.finite()).collect()
}

/// `M_S(f dx)(z)` for a simple function.
pub fn ms_eval_simple(f: &SimpleFunction, z: &DyadicPoint) -> Result<MaxValue> {
    let d = f.dim();
    if z.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: z.dim(),
        });
    }
    let n = f.len();
    if n == 0 {
        return Ok(MaxValue::Finite(BigRational::zero()));
    }
    // Per piece and axis: the piece level and the finest level at which the
    // interval around z still meets the piece (None: z inside, all levels).
    let mut piece_level = vec![0u32; n * d];
    let mut reach: Vec<Option<u32>> = vec![None; n * d];
    let mut limits = vec![0u32; d];
    let mut top = vec![0u32; d];
    for (i, (r, _)) in f.pieces().enumerate() {
        for t in 0..d {
            let s = r.side(t);
            let l = s.level() as u32;
            piece_level[i * d + t] = l;
            top[t] = top[t].max(l);
            if s.contains_coord(z.coord(t)) {
                limits[t] = limits[t].max(l);
            } else {
                let zi = DyadicInterval::containing(z.coord(t), l)?;
                let c = zi.common_ancestor(s).level() as u32;
                reach[i * d + t] = Some(c);
                limits[t] = limits[t].max(c);
            }
        }
    }
    let values: Vec<BigRational> = f.pieces().map(|(_, v)| v.clone()).collect();
    let (scaled, den) = scale_weights_nonneg(&values);
    let shift: u32 = top.iter().sum();
    let mut best: Option<(BigUint, u32)> = None;
    let mut levels = vec![0u32; d];
    let active: Vec<usize> = (0..n).filter(|&i| !scaled[i].is_zero()).collect();
    simple_descend(
        &piece_level,
        &reach,
        &scaled,
        &limits,
        &top,
        d,
        0,
        &active,
        &mut levels,
        &mut best,
    );
    let (mass, _) = best.unwrap_or((BigUint::zero(), 0));
    // mass = Σ n_P 2^{Σ_t top_t - (l_t - i_t)^+}, value = mass / (D·2^{Σ top}).
    let value = BigRational::new(BigInt::from(mass), den) * pow2(-(shift as i64));
    Ok(MaxValue::Finite(value))
}

fn scale_weights_nonneg(values: &[BigRational]) -> (Vec<BigUint>, BigInt) {
    let den = values.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let nums = values
        .iter()
        .map(|w| {
            (w.numer() * (&den / w.denom()))
                .to_biguint()
                .expect("non-negative value")
        })
        .collect();
    (nums, den)
}

#[allow(clippy::too_many_arguments)]
fn simple_descend(
    piece_level: &[u32],
    reach: &[Option<u32>],
    scaled: &[BigUint],
    limits: &[u32],
    top: &[u32],
    d: usize,
    axis: usize,
    active: &[usize],
    levels: &mut Vec<u32>,
    best: &mut Option<(BigUint, u32)>,
) {
    if axis == d {
        let mut total = BigUint::zero();
        for &i in active {
            let mut e = 0u32;
            for t in 0..d {
                e += top[t] - piece_level[i * d + t].saturating_sub(levels[t]);
            }
            total += &scaled[i] << e as usize;
        }
        if best.as_ref().map_or(true, |(b, _)| total > *b) {
            *best = Some((total, 0));
        }
        return;
    }
    for i in 0..=limits[axis] {
        let next: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&p| reach[p * d + axis].map_or(true, |c| i <= c))
            .collect();
        if next.is_empty() {
            break;
        }
        levels[axis] = i;
        simple_descend(
            piece_level,
            reach,
            scaled,
            limits,
            top,
            d,
            axis + 1,
            &next,
            levels,
            best,
        );
    }
}

/// A region given as a union of dyadic boxes, with its exact area.
#[derive(Clone, Debug, Serialize)]
pub struct LevelSet {
    pub rects: Vec<DyadicRect>,
    #[serde(with = "rational_str")]
    pub area: BigRational,
}

/// `{M_S μ > λ}` restricted to rectangles inside the unit cube with side
/// levels at most `resolution`, as its maximal rectangles.
pub fn stairs_level_set(mu: &AtomicMeasure, lambda: &BigRational, resolution: u32) -> Result<LevelSet> {
    let d = mu.dim();
    let mut found = Vec::new();
    let mut levels = vec![0u32; d];
    for a in mu.atoms() {
        loop {
            let r = DyadicRect::containing(a, &levels)?;
            if &mu.average(&r) > lambda {
                found.push(r);
            }
            // Next level vector in the box [0, resolution]^d.
            let mut t = 0;
            while t < d && levels[t] == resolution {
                levels[t] = 0;
                t += 1;
            }
            if t == d {
                break;
            }
            levels[t] += 1;
        }
    }
    let rects = maximal_boxes(found);
    let area = union_volume(&rects)?;
    Ok(LevelSet { rects, area })
}

/// Ambient interval `[2^{a-1}, 2^a)` for `a ≥ 1`, `[0,1)` for `a = 0`.
fn shell(a: u32) -> DyadicInterval {
    if a == 0 {
        DyadicInterval::UNIT
    } else {
        DyadicInterval::ambient(-(a as i32 - 1), 1).expect("moderate dilation")
    }
}

/// `{M_S 1_{[0,1)^2} > λ}` in the plane: on `A_a × A_b` (dyadic shells of
/// `[0,∞)`) the function equals `2^{-a-b}`.
pub fn indicator_level_set(lambda: &BigRational) -> Result<LevelSet> {
    if lambda <= &BigRational::zero() {
        return Err(Error::Precondition("λ must be positive".into()));
    }
    // Largest t with 2^{-t} > λ.
    let mut t: i64 = -1;
    while pow2(-(t + 1)) > *lambda {
        t += 1;
        if t > 60 {
            return Err(Error::PrecisionExceeded { level: t });
        }
    }
    let mut rects = Vec::new();
    let mut area = BigRational::zero();
    for a in 0..=t.max(-1) {
        for b in 0..=(t - a) {
            let r = DyadicRect::xy(shell(a as u32), shell(b as u32));
            area += r.area().to_rational();
            rects.push(r);
        }
    }
    Ok(LevelSet { rects, area })
}

/// `Ω_j = {M_S 1_{[0,1)^2} ≥ 2^{-j}}`.
pub fn omega(j: u32) -> Result<LevelSet> {
    indicator_level_set(&pow2(-(j as i64) - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{dist_h_sq, Coord};

    fn c(s: &str) -> Coord {
        s.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn dirac_at_origin() {
        let delta0 = AtomicMeasure::dirac(DyadicPoint::xy(Coord::ZERO, Coord::ZERO));
        let z = DyadicPoint::xy(c("3/8"), c("3/8"));
        assert_eq!(ms_eval(&delta0, &z).unwrap(), MaxValue::Finite(q(4, 1)));
        let z = DyadicPoint::xy(c("5/16"), c("1/1024"));
        let d = dist_h_sq(&z, &DyadicPoint::xy(Coord::ZERO, Coord::ZERO)).unwrap();
        assert_eq!(ms_eval(&delta0, &z).unwrap(), MaxValue::Finite(pow2(-d.exponent())));
        assert_eq!(
            ms_eval(&delta0, &DyadicPoint::xy(Coord::ZERO, c("1/2"))).unwrap(),
            MaxValue::Infinite
        );
    }

    #[test]
    fn opposite_quadrants() {
        let mu = AtomicMeasure::dirac(DyadicPoint::xy(c("1/4"), c("1/4")));
        let nu = AtomicMeasure::dirac(DyadicPoint::xy(c("3/4"), c("3/4")));
        assert_eq!(pairing_ms(&mu, &nu).unwrap(), q(1, 1));
    }

    #[test]
    fn constant_function_average() {
        let f = SimpleFunction::new(2, vec![(DyadicRect::unit_cube(2), q(1, 1))]).unwrap();
        let z = DyadicPoint::xy(c("3/8"), c("5/8"));
        assert_eq!(ms_eval_simple(&f, &z).unwrap(), MaxValue::Finite(q(1, 1)));
    }

    #[test]
    fn omega_areas() {
        assert_eq!(omega(0).unwrap().area, q(1, 1));
        assert_eq!(omega(1).unwrap().area, q(3, 1));
        assert_eq!(omega(2).unwrap().area, q(8, 1));
    }

    #[test]
    fn stairs_of_dirac() {
        // {M_S δ_0 > 2^{2m}} at m = 1: rectangles [0,2^-a)×[0,2^-b) with
        // a+b = 3, i.e. four stairs of area 1/8 each.
        let delta0 = AtomicMeasure::dirac(DyadicPoint::xy(Coord::ZERO, Coord::ZERO));
        let set = stairs_level_set(&delta0, &q(4, 1), 6).unwrap();
        assert_eq!(set.rects.len(), 4);
        // Union of the stairs: 1/8 + 3·(1/16) = 5/16.
        assert_eq!(set.area, q(5, 16));
    }
}
