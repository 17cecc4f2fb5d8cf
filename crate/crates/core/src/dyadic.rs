//! Exact dyadic coordinates, intervals and rectangles.
//!
//! Coordinates in the unit universe `[0,1)` are stored as fixed-point
//! numerators over `2^PRECISION`, so every dyadic rational with denominator up
//! to `2^PRECISION` is represented exactly. Intervals are `(level, index)`
//! pairs denoting `[index·2^-level, (index+1)·2^-level)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Number of binary digits carried by a [`Coord`].
pub const PRECISION: u32 = 62;

/// Finest supported level on either side of zero.
pub const MAX_LEVEL: i32 = PRECISION as i32;

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

/// `2^exponent`, an exact power of two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogDyadic(pub i64);

impl LogDyadic {
    pub const ONE: LogDyadic = LogDyadic(0);

    pub fn exponent(self) -> i64 {
        self.0
    }

    pub fn to_rational(self) -> BigRational {
        pow2(self.0)
    }

    pub fn to_f64(self) -> f64 {
        (self.0 as f64).exp2()
    }
}

// Exponents add under multiplication.
impl Mul for LogDyadic {
    type Output = LogDyadic;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogDyadic) -> LogDyadic {
        LogDyadic(self.0 + rhs.0)
    }
}

impl Div for LogDyadic {
    type Output = LogDyadic;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogDyadic) -> LogDyadic {
        LogDyadic(self.0 - rhs.0)
    }
}

impl fmt::Display for LogDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}", self.0)
    }
}

impl FromStr for LogDyadic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let e = s
            .trim()
            .strip_prefix("2^")
            .ok_or_else(|| Error::Parse(format!("expected 2^e, got {s:?}")))?;
        e.parse()
            .map(LogDyadic)
            .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))
    }
}

string_serde!(LogDyadic);

/// `2^e` as an exact rational.
pub fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// A dyadic rational in `[0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coord(u64);

impl Coord {
    pub const ZERO: Coord = Coord(0);

    /// `num / 2^exp`.
    pub fn new(mut num: u64, mut exp: u32) -> Result<Self> {
        while exp > PRECISION && num % 2 == 0 {
            num /= 2;
            exp -= 1;
        }
        if exp > PRECISION {
            return Err(Error::PrecisionExceeded { level: exp as i64 });
        }
        if num >> exp != 0 {
            return Err(Error::OutOfUniverse(format!("{num}/2^{exp}")));
        }
        Ok(Coord(num << (PRECISION - exp)))
    }

    pub fn from_raw(raw: u64) -> Result<Self> {
        if raw >> PRECISION != 0 {
            return Err(Error::OutOfUniverse(format!("raw coordinate {raw}")));
        }
        Ok(Coord(raw))
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    /// Reduced `(num, exp)` with value `num / 2^exp`.
    pub fn ratio(self) -> (u64, u32) {
        if self.0 == 0 {
            return (0, 0);
        }
        let tz = self.0.trailing_zeros();
        (self.0 >> tz, PRECISION - tz)
    }

    pub fn to_rational(self) -> BigRational {
        let (n, e) = self.ratio();
        BigRational::new(BigInt::from(n), BigInt::one() << e)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u64 << PRECISION) as f64
    }

    /// Index of the level-`level` dyadic interval containing this coordinate.
    pub fn prefix(self, level: u32) -> u64 {
        debug_assert!(level <= PRECISION);
        if level == 0 {
            0
        } else {
            self.0 >> (PRECISION - level)
        }
    }

    /// Length of the longest common binary prefix, `None` for equal values.
    pub fn common_prefix_len(self, other: Coord) -> Option<u32> {
        let x = self.0 ^ other.0;
        if x == 0 {
            None
        } else {
            Some(x.leading_zeros() - (64 - PRECISION))
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, e) = self.ratio();
        if n == 0 {
            write!(f, "0")
        } else {
            write!(f, "{n}/2^{e}")
        }
    }
}

impl FromStr for Coord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad dyadic coordinate {s:?}"));
        let Some((num, den)) = s.split_once('/') else {
            let n: u64 = s.parse().map_err(|_| bad())?;
            return Coord::new(n, 0);
        };
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den = den.trim();
        let exp = if let Some(e) = den.strip_prefix("2^") {
            e.parse::<u32>().map_err(|_| bad())?
        } else {
            let d: u64 = den.parse().map_err(|_| bad())?;
            if d == 0 || !d.is_power_of_two() {
                return Err(bad());
            }
            d.trailing_zeros()
        };
        Coord::new(num, exp)
    }
}

string_serde!(Coord);

/// `[index·2^-level, (index+1)·2^-level)`.
///
/// Unit-universe intervals have `0 <= level <= MAX_LEVEL` and lie in `[0,1)`.
/// Ambient intervals may have negative levels (lengths above one).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    level: i32,
    index: u64,
}

impl Ord for DyadicInterval {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.level, self.index).cmp(&(other.level, other.index))
    }
}

impl PartialOrd for DyadicInterval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn shr(v: u64, by: i64) -> u64 {
    if by >= 64 {
        0
    } else {
        v >> by
    }
}

impl DyadicInterval {
    pub const UNIT: DyadicInterval = DyadicInterval { level: 0, index: 0 };

    /// An interval inside `[0,1)`.
    pub fn new(level: i32, index: u64) -> Result<Self> {
        if !(0..=MAX_LEVEL).contains(&level) {
            return Err(Error::OutOfUniverse(format!("level {level}")));
        }
        if shr(index, level as i64) != 0 {
            return Err(Error::OutOfUniverse(format!("{level}:{index}")));
        }
        Ok(DyadicInterval { level, index })
    }

    /// An interval of `[0,∞)`, possibly longer than one.
    pub fn ambient(level: i32, index: u64) -> Result<Self> {
        if !(-MAX_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(Error::PrecisionExceeded { level: level as i64 });
        }
        Ok(DyadicInterval { level, index })
    }

    /// The level-`level` interval containing `x`.
    pub fn containing(x: Coord, level: u32) -> Result<Self> {
        if level > PRECISION {
            return Err(Error::PrecisionExceeded { level: level as i64 });
        }
        Ok(DyadicInterval {
            level: level as i32,
            index: x.prefix(level),
        })
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_unit(&self) -> bool {
        self.level >= 0 && shr(self.index, self.level as i64) == 0
    }

    pub fn len(&self) -> LogDyadic {
        LogDyadic(-(self.level as i64))
    }

    pub fn lo(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.index)) * pow2(-(self.level as i64))
    }

    pub fn hi(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.index) + 1) * pow2(-(self.level as i64))
    }

    pub fn contains_coord(&self, x: Coord) -> bool {
        if self.level <= 0 {
            self.index == 0
        } else {
            x.prefix(self.level as u32) == self.index
        }
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.level >= self.level && shr(other.index, (other.level - self.level) as i64) == self.index
    }

    pub fn intersects(&self, other: &DyadicInterval) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// Ancestor at the coarser `level` (ambient levels allowed).
    pub fn ancestor_at(&self, level: i32) -> Result<Self> {
        if level > self.level {
            return Err(Error::Precondition(format!(
                "ancestor level {level} is finer than {}",
                self.level
            )));
        }
        if level < -MAX_LEVEL {
            return Err(Error::PrecisionExceeded { level: level as i64 });
        }
        Ok(DyadicInterval {
            level,
            index: shr(self.index, (self.level - level) as i64),
        })
    }

    /// Parent inside the unit universe.
    pub fn parent(&self) -> Result<Self> {
        if self.level <= 0 {
            return Err(Error::UniverseExceeded);
        }
        self.ancestor_at(self.level - 1)
    }

    /// Parent in `[0,∞)`.
    pub fn parent_ambient(&self) -> Result<Self> {
        self.ancestor_at(self.level - 1)
    }

    pub fn children(&self) -> Result<[Self; 2]> {
        if self.level >= MAX_LEVEL {
            return Err(Error::PrecisionExceeded {
                level: self.level as i64 + 1,
            });
        }
        let level = self.level + 1;
        Ok([
            DyadicInterval {
                level,
                index: self.index << 1,
            },
            DyadicInterval {
                level,
                index: (self.index << 1) | 1,
            },
        ])
    }

    pub fn sibling(&self) -> Result<Self> {
        if self.is_unit() && self.level == 0 {
            return Err(Error::UniverseExceeded);
        }
        Ok(DyadicInterval {
            level: self.level,
            index: self.index ^ 1,
        })
    }

    /// `I_(k)`: the generation-`k` descendant `J` of `self` with `x ∉ J` and
    /// `x ∈ parent(J)`.
    pub fn offspring(&self, x: Coord, k: u32) -> Result<Self> {
        if !self.contains_coord(x) {
            return Err(Error::PointNotInInterval);
        }
        if k == 0 {
            return Err(Error::Precondition("offspring generation must be at least 1".into()));
        }
        let level = self.level as i64 + k as i64;
        if level > MAX_LEVEL as i64 || level <= 0 {
            return Err(Error::PrecisionExceeded { level });
        }
        let level = level as u32;
        Ok(DyadicInterval {
            level: level as i32,
            index: x.prefix(level) ^ 1,
        })
    }

    /// Smallest dyadic interval containing both.
    pub fn common_ancestor(&self, other: &DyadicInterval) -> DyadicInterval {
        let level = self.level.min(other.level);
        let a = shr(self.index, (self.level - level) as i64);
        let b = shr(other.index, (other.level - level) as i64);
        let diff = a ^ b;
        if diff == 0 {
            return DyadicInterval { level, index: a };
        }
        let bits = 64 - diff.leading_zeros();
        DyadicInterval {
            level: level - bits as i32,
            index: a >> bits,
        }
    }

    /// Center of the interval, when it lies in the unit universe.
    pub fn center(&self) -> Result<Coord> {
        if !self.is_unit() {
            return Err(Error::UniverseExceeded);
        }
        if self.level >= MAX_LEVEL {
            return Err(Error::PrecisionExceeded {
                level: self.level as i64 + 1,
            });
        }
        Coord::new((self.index << 1) | 1, self.level as u32 + 1)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad interval {s:?}, expected level:index"));
        let (l, i) = s.trim().split_once(':').ok_or_else(bad)?;
        let level: i32 = l.trim().parse().map_err(|_| bad())?;
        let index: u64 = i.trim().parse().map_err(|_| bad())?;
        DyadicInterval::ambient(level, index)
    }
}

string_serde!(DyadicInterval);

/// `δ(x,y)`: length of the smallest dyadic interval containing both points.
pub fn delta(x: Coord, y: Coord) -> Result<LogDyadic> {
    let c = x.common_prefix_len(y).ok_or(Error::EqualPoints)?;
    Ok(LogDyadic(-(c as i64)))
}

/// `δ(x,K)`: length of the smallest dyadic interval containing `x` and `K`.
pub fn delta_to_interval(x: Coord, k: &DyadicInterval) -> LogDyadic {
    if k.contains_coord(x) {
        return k.len();
    }
    if k.level <= 0 {
        // x ∈ [0,1) and K is a long interval not containing it.
        let home = DyadicInterval {
            level: k.level,
            index: 0,
        };
        return home.common_ancestor(k).len();
    }
    let xi = DyadicInterval {
        level: k.level,
        index: x.prefix(k.level as u32),
    };
    xi.common_ancestor(k).len()
}

/// A point of `[0,1)^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DyadicPoint {
    coords: SmallVec<[Coord; 3]>,
}

impl DyadicPoint {
    pub fn new(coords: impl IntoIterator<Item = Coord>) -> Self {
        DyadicPoint {
            coords: coords.into_iter().collect(),
        }
    }

    pub fn xy(x: Coord, y: Coord) -> Self {
        DyadicPoint::new([x, y])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> Coord {
        self.coords[axis]
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for DyadicPoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = s.split(',').map(str::parse).collect::<Result<SmallVec<_>>>()?;
        Ok(DyadicPoint { coords })
    }
}

/// A product of dyadic intervals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicRect {
    sides: SmallVec<[DyadicInterval; 3]>,
}

impl DyadicRect {
    pub fn new(sides: impl IntoIterator<Item = DyadicInterval>) -> Self {
        let sides: SmallVec<_> = sides.into_iter().collect();
        assert!(!sides.is_empty(), "a rectangle needs at least one side");
        DyadicRect { sides }
    }

    pub fn xy(x: DyadicInterval, y: DyadicInterval) -> Self {
        DyadicRect::new([x, y])
    }

    pub fn unit_cube(dim: usize) -> Self {
        DyadicRect::new(std::iter::repeat(DyadicInterval::UNIT).take(dim))
    }

    /// The rectangle with side levels `levels` containing `p`.
    pub fn containing(p: &DyadicPoint, levels: &[u32]) -> Result<Self> {
        check_dims(p.dim(), levels.len())?;
        let sides = p
            .coords()
            .iter()
            .zip(levels)
            .map(|(&c, &l)| DyadicInterval::containing(c, l))
            .collect::<Result<SmallVec<_>>>()?;
        Ok(DyadicRect { sides })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[DyadicInterval] {
        &self.sides
    }

    pub fn side(&self, axis: usize) -> &DyadicInterval {
        &self.sides[axis]
    }

    pub fn with_side(&self, axis: usize, side: DyadicInterval) -> Self {
        let mut r = self.clone();
        r.sides[axis] = side;
        r
    }

    pub fn level_sum(&self) -> i64 {
        self.sides.iter().map(|s| s.level as i64).sum()
    }

    pub fn area(&self) -> LogDyadic {
        LogDyadic(-self.level_sum())
    }

    pub fn is_unit(&self) -> bool {
        self.sides.iter().all(DyadicInterval::is_unit)
    }

    pub fn contains_point(&self, p: &DyadicPoint) -> bool {
        self.dim() == p.dim() && self.sides.iter().zip(p.coords()).all(|(s, &c)| s.contains_coord(c))
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &DyadicRect) -> bool {
        self.dim() == other.dim() && self.sides.iter().zip(&other.sides).all(|(a, b)| a.contains(b))
    }

    pub fn intersects(&self, other: &DyadicRect) -> bool {
        self.dim() == other.dim() && self.sides.iter().zip(&other.sides).all(|(a, b)| a.intersects(b))
    }

    pub fn intersection(&self, other: &DyadicRect) -> Option<DyadicRect> {
        if !self.intersects(other) {
            return None;
        }
        let sides = self
            .sides
            .iter()
            .zip(&other.sides)
            .map(|(a, b)| if a.level >= b.level { *a } else { *b })
            .collect();
        Some(DyadicRect { sides })
    }

    /// Intersection with `[0,1)^d`.
    pub fn clip_to_unit(&self) -> Option<DyadicRect> {
        let mut sides = SmallVec::new();
        for s in &self.sides {
            if s.is_unit() {
                sides.push(*s);
            } else if s.level <= 0 && s.index == 0 {
                sides.push(DyadicInterval::UNIT);
            } else {
                return None;
            }
        }
        Some(DyadicRect { sides })
    }

    /// Projection dropping the last axis.
    pub fn drop_last(&self) -> Option<DyadicRect> {
        if self.dim() < 2 {
            return None;
        }
        Some(DyadicRect {
            sides: self.sides[..self.dim() - 1].iter().copied().collect(),
        })
    }
}

impl fmt::Display for DyadicRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for DyadicRect {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let sides = s.split(['x', '×']).map(str::parse).collect::<Result<SmallVec<_>>>()?;
        if sides.is_empty() {
            return Err(Error::Parse(format!("empty rectangle {s:?}")));
        }
        Ok(DyadicRect { sides })
    }
}

string_serde!(DyadicRect);

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Squared hyperbolic quasi-distance: the area of the smallest dyadic
/// rectangle containing both points.
pub fn dist_h_sq(p: &DyadicPoint, q: &DyadicPoint) -> Result<LogDyadic> {
    check_dims(p.dim(), q.dim())?;
    let mut e = 0i64;
    for (axis, (&a, &b)) in p.coords().iter().zip(q.coords()).enumerate() {
        let c = a.common_prefix_len(b).ok_or(Error::SharedCoordinate { axis })?;
        e -= c as i64;
    }
    Ok(LogDyadic(e))
}

/// Smallest dyadic rectangle containing both points.
pub fn min_enclosing_rect(p: &DyadicPoint, q: &DyadicPoint) -> Result<DyadicRect> {
    check_dims(p.dim(), q.dim())?;
    if p == q {
        return Err(Error::EqualPoints);
    }
    let sides = p
        .coords()
        .iter()
        .zip(q.coords())
        .map(|(&a, &b)| {
            let level = a.common_prefix_len(b).unwrap_or(PRECISION);
            DyadicInterval::containing(a, level)
        })
        .collect::<Result<SmallVec<_>>>()?;
    Ok(DyadicRect { sides })
}

/// Area of the smallest dyadic rectangle containing two rectangles whose
/// projections are pairwise disjoint.
pub fn dist_h_sq_rects(r1: &DyadicRect, r2: &DyadicRect) -> Result<LogDyadic> {
    check_dims(r1.dim(), r2.dim())?;
    let mut e = 0i64;
    for (axis, (a, b)) in r1.sides().iter().zip(r2.sides()).enumerate() {
        if a.intersects(b) {
            return Err(Error::OverlappingProjections { axis });
        }
        e += a.common_ancestor(b).len().0;
    }
    Ok(LogDyadic(e))
}

/// `Dil_j(R)` for a planar rectangle: the rectangle containing `p` whose
/// width is `2^j` times and height `2^-j` times that of `R`.
pub fn dil(r: &DyadicRect, p: &DyadicPoint, j: i32) -> Result<DyadicRect> {
    check_dims(2, r.dim())?;
    if !r.contains_point(p) {
        return Err(Error::PointNotInRect);
    }
    let lx = r.side(0).level() - j;
    let ly = r.side(1).level() + j;
    if !(0..=MAX_LEVEL).contains(&lx) || !(0..=MAX_LEVEL).contains(&ly) {
        return Err(Error::UniverseExceeded);
    }
    DyadicRect::containing(p, &[lx as u32, ly as u32])
}

fn check_crossing(r1: &DyadicRect, r2: &DyadicRect) -> Result<()> {
    check_dims(2, r1.dim())?;
    check_dims(2, r2.dim())?;
    if !r1.intersects(r2) || r1.contains(r2) || r2.contains(r1) {
        return Err(Error::NestedOrDisjoint);
    }
    Ok(())
}

/// Whether `r2` intersects `r1` vertically: `π1(r2) ⊊ π1(r1)`.
pub fn intersects_vertically(r1: &DyadicRect, r2: &DyadicRect) -> Result<bool> {
    check_crossing(r1, r2)?;
    Ok(r1.side(0).contains(r2.side(0)) && r1.side(0) != r2.side(0))
}

/// Whether `r2` intersects `r1` horizontally: `π2(r2) ⊊ π2(r1)`.
pub fn intersects_horizontally(r1: &DyadicRect, r2: &DyadicRect) -> Result<bool> {
    check_crossing(r1, r2)?;
    Ok(r1.side(1).contains(r2.side(1)) && r1.side(1) != r2.side(1))
}

/// Exact rational from a `p/q` or integer string.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = BigRational::new(int_part.abs() * &den + f, den);
        return Ok(if neg { -mag } else { mag });
    }
    let v: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(v))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter for exact rationals written as `"p/q"` strings.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Coord {
        s.parse().unwrap()
    }

    fn iv(l: i32, i: u64) -> DyadicInterval {
        DyadicInterval::ambient(l, i).unwrap()
    }

    fn pt(x: &str, y: &str) -> DyadicPoint {
        DyadicPoint::xy(c(x), c(y))
    }

    /// Reference: the smallest dyadic interval containing `a` and `b`, found
    /// by scanning levels from fine to coarse with rational arithmetic.
    fn oracle_delta(a: &BigRational, b: &BigRational) -> BigRational {
        for level in (0..=40i64).rev() {
            let scale = pow2(level);
            if (a * &scale).floor() == (b * &scale).floor() {
                return pow2(-level);
            }
        }
        BigRational::one()
    }

    #[test]
    fn coordinate_round_trip() {
        let x = c("3/2^3");
        assert_eq!(x.ratio(), (3, 3));
        assert_eq!(x.to_string(), "3/2^3");
        assert_eq!(c("6/16"), x);
        assert_eq!(c("0").to_string(), "0");
        assert!(matches!("1/1".parse::<Coord>(), Err(Error::OutOfUniverse(_))));
        assert!("1/3".parse::<Coord>().is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(c("0"), c("3/8")).unwrap(), LogDyadic(-1));
        assert_eq!(delta(c("1/4"), c("3/4")).unwrap(), LogDyadic(0));
        // 5/16 and 3/8 both lie in [1/4,1/2) but in different halves of it.
        assert_eq!(delta(c("5/16"), c("3/8")).unwrap(), LogDyadic(-2));
        assert_eq!(delta(c("1/2"), c("1/2")), Err(Error::EqualPoints));
        for (a, b) in [("5/16", "3/8"), ("1/4", "3/8"), ("0", "1/1024"), ("7/8", "15/16")] {
            let want = oracle_delta(&c(a).to_rational(), &c(b).to_rational());
            assert_eq!(delta(c(a), c(b)).unwrap().to_rational(), want, "{a} {b}");
        }
    }

    #[test]
    fn delta_to_interval_examples() {
        assert_eq!(delta_to_interval(c("0"), &iv(1, 1)), LogDyadic(0));
        assert_eq!(delta_to_interval(c("0"), &iv(2, 1)), LogDyadic(-1));
        assert_eq!(delta_to_interval(c("3/8"), &iv(2, 0)), LogDyadic(-1));
        // Oracle: minimize delta over the level-10 points of K.
        for (x, l, i) in [("3/8", 2, 0u64), ("0", 3, 5), ("5/16", 4, 4), ("1/2", 1, 0)] {
            let k = iv(l, i);
            let want = (0..1u64 << 10)
                .map(|n| Coord::new(n, 10).unwrap())
                .filter(|&y| k.contains_coord(y) && y != c(x))
                .map(|y| delta(c(x), y).unwrap())
                .min()
                .unwrap();
            if !k.contains_coord(c(x)) {
                assert_eq!(delta_to_interval(c(x), &k), want);
            }
        }
    }

    #[test]
    fn offspring_examples() {
        let unit = DyadicInterval::UNIT;
        assert_eq!(unit.offspring(c("1/4"), 1).unwrap(), iv(1, 1));
        // The generation-2 descendant avoiding 1/4 whose parent holds it is
        // [0,1/4); [0,1/8) would be generation 3.
        assert_eq!(unit.offspring(c("1/4"), 2).unwrap(), iv(2, 0));
        assert_eq!(iv(1, 0).offspring(c("0"), 3).unwrap(), iv(4, 1));
        assert_eq!(iv(1, 0).offspring(c("3/4"), 1), Err(Error::PointNotInInterval));
    }

    #[test]
    fn offspring_matches_definition() {
        // Brute force: among the generation-k descendants J, exactly one has
        // x ∉ J and x ∈ parent(J).
        for level in 0..4 {
            for index in 0..(1u64 << level) {
                let i = iv(level, index);
                for num in 0..64u64 {
                    let x = Coord::new(num, 6).unwrap();
                    if !i.contains_coord(x) {
                        continue;
                    }
                    for k in 1..=3u32 {
                        let l = level + k as i32;
                        let found: Vec<_> = (0..(1u64 << l))
                            .map(|j| iv(l, j))
                            .filter(|j| i.contains(j) && !j.contains_coord(x) && j.parent().unwrap().contains_coord(x))
                            .collect();
                        assert_eq!(found, vec![i.offspring(x, k).unwrap()]);
                    }
                }
            }
        }
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist_h_sq(&pt("1/4", "1/4"), &pt("3/4", "3/4")).unwrap(), LogDyadic(0));
        assert_eq!(dist_h_sq(&pt("0", "0"), &pt("3/8", "3/8")).unwrap(), LogDyadic(-2));
        assert_eq!(
            dist_h_sq(&pt("1/8", "1/2"), &pt("3/16", "9/16")).unwrap(),
            LogDyadic(-6)
        );
        assert_eq!(
            dist_h_sq(&pt("1/4", "1/4"), &pt("1/4", "3/4")),
            Err(Error::SharedCoordinate { axis: 0 })
        );
        let half = DyadicRect::xy(iv(1, 0), iv(1, 0));
        let upper = DyadicRect::xy(iv(1, 1), iv(1, 1));
        assert_eq!(dist_h_sq_rects(&half, &upper).unwrap(), LogDyadic(0));
        let a = DyadicRect::xy(iv(2, 0), iv(2, 0));
        let b = DyadicRect::xy(iv(2, 1), iv(2, 1));
        assert_eq!(dist_h_sq_rects(&a, &b).unwrap(), LogDyadic(-2));
        // [0,1/8)×[1/2,5/8) and [1/4,3/8)×[3/4,7/8) first share [0,1/2)×[1/2,1).
        let r1 = DyadicRect::xy(iv(3, 0), iv(3, 4));
        let r2 = DyadicRect::xy(iv(3, 2), iv(3, 6));
        assert_eq!(dist_h_sq_rects(&r1, &r2).unwrap(), LogDyadic(-2));
        let r3 = DyadicRect::xy(iv(2, 0), iv(3, 5));
        assert_eq!(
            dist_h_sq_rects(&r1, &r3),
            Err(Error::OverlappingProjections { axis: 0 })
        );
    }

    #[test]
    fn enclosing_rect_example() {
        let r = min_enclosing_rect(&pt("5/16", "1/8"), &pt("3/8", "1/4")).unwrap();
        assert_eq!(r, DyadicRect::xy(iv(2, 1), iv(1, 0)));
        let r = min_enclosing_rect(&pt("0", "0"), &pt("3/8", "3/8")).unwrap();
        assert_eq!(r, DyadicRect::xy(iv(1, 0), iv(1, 0)));
        let r = min_enclosing_rect(&pt("1/4", "1/4"), &pt("3/4", "3/4")).unwrap();
        assert_eq!(r, DyadicRect::unit_cube(2));
    }

    #[test]
    fn dil_examples() {
        let r = DyadicRect::xy(iv(1, 0), iv(1, 0));
        let origin = pt("0", "0");
        assert_eq!(dil(&r, &origin, 1).unwrap(), DyadicRect::xy(iv(0, 0), iv(2, 0)));
        assert_eq!(dil(&r, &origin, -1).unwrap(), DyadicRect::xy(iv(2, 0), iv(0, 0)));
        let r = DyadicRect::xy(iv(2, 2), iv(2, 1));
        assert_eq!(
            dil(&r, &pt("5/8", "3/8"), 1).unwrap(),
            DyadicRect::xy(iv(1, 1), iv(3, 3))
        );
        assert_eq!(dil(&r, &pt("5/8", "3/8"), 3), Err(Error::UniverseExceeded));
    }

    #[test]
    fn crossing_examples() {
        let r1 = DyadicRect::xy(iv(1, 0), iv(0, 0));
        let r2 = DyadicRect::xy(iv(0, 0), iv(2, 0));
        assert!(intersects_horizontally(&r1, &r2).unwrap());
        assert!(!intersects_vertically(&r1, &r2).unwrap());
        let r1 = DyadicRect::xy(iv(2, 0), iv(0, 0));
        let r2 = DyadicRect::xy(iv(0, 0), iv(2, 2));
        assert!(intersects_horizontally(&r1, &r2).unwrap());
        assert_eq!(
            intersects_vertically(&r1, &DyadicRect::xy(iv(3, 0), iv(3, 0))),
            Err(Error::NestedOrDisjoint)
        );
    }

    #[test]
    fn ancestors() {
        assert_eq!(iv(2, 1).parent().unwrap(), iv(1, 0));
        assert_eq!(iv(3, 3).ancestor_at(1).unwrap(), iv(1, 0));
        assert_eq!(iv(3, 0).ancestor_at(0).unwrap(), iv(0, 0));
    }

    #[test]
    fn parent_at_top_errors() {
        assert_eq!(DyadicInterval::UNIT.parent(), Err(Error::UniverseExceeded));
        assert_eq!(DyadicInterval::UNIT.parent_ambient().unwrap(), iv(-1, 0));
    }

    #[test]
    fn text_round_trips() {
        let r = DyadicRect::xy(iv(3, 5), iv(-2, 0));
        assert_eq!(r.to_string().parse::<DyadicRect>().unwrap(), r);
        let p = pt("3/8", "0");
        assert_eq!(p.to_string().parse::<DyadicPoint>().unwrap(), p);
        assert_eq!(parse_rational("0.49").unwrap(), BigRational::new(49.into(), 100.into()));
        assert_eq!(parse_rational("-1/4").unwrap(), BigRational::new((-1).into(), 4.into()));
    }
}
