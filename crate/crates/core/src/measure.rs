//! Atomic measures and simple functions with exact rational weights.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::{rational_str, DyadicPoint, DyadicRect};
use crate::error::{Error, Result};
use crate::index::PointIndex;
use crate::pointsets::{PointSetP, ZSet};

/// Anything that assigns an exact mass to dyadic rectangles.
pub trait RectMass: Sync {
    fn dim(&self) -> usize;
    fn mass(&self, r: &DyadicRect) -> BigRational;

    /// `mass(R)/|R|`.
    fn average(&self, r: &DyadicRect) -> BigRational {
        self.mass(r) / r.area().to_rational()
    }
}

/// A finite positive combination of point masses.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<DyadicPoint>,
    weights: Vec<BigRational>,
    uniform: Option<BigRational>,
    index: Option<PointIndex>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<(DyadicPoint, BigRational)>) -> Result<Self> {
        let mut points = Vec::with_capacity(atoms.len());
        let mut weights = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if !w.is_positive() {
                return Err(Error::InvalidWeight(format!("atom {p} has weight {w}")));
            }
            points.push(p);
            weights.push(w);
        }
        Ok(Self::assemble(dim, points, weights, None))
    }

    /// Weight `1/n` on each of `n` points.
    pub fn uniform(dim: usize, points: Vec<DyadicPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidWeight("uniform measure on an empty set".into()));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(points.len()));
        let weights = vec![w.clone(); points.len()];
        Ok(Self::assemble(dim, points, weights, Some(w)))
    }

    pub fn dirac(p: DyadicPoint) -> Self {
        let dim = p.dim();
        Self::assemble(dim, vec![p], vec![BigRational::one()], Some(BigRational::one()))
    }

    fn assemble(dim: usize, atoms: Vec<DyadicPoint>, weights: Vec<BigRational>, uniform: Option<BigRational>) -> Self {
        let index = (dim == 2).then(|| PointIndex::new(atoms.iter().map(|p| (p.coord(0), p.coord(1)))));
        AtomicMeasure {
            dim,
            atoms,
            weights,
            uniform,
            index,
        }
    }

    pub fn atoms(&self) -> &[DyadicPoint] {
        &self.atoms
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The common weight when every atom carries the same mass.
    pub fn uniform_weight(&self) -> Option<&BigRational> {
        self.uniform.as_ref()
    }

    pub fn total_mass(&self) -> BigRational {
        self.weights.iter().sum()
    }

    /// Indices of the atoms lying in `r`.
    pub fn atoms_in(&self, r: &DyadicRect) -> Vec<usize> {
        match &self.index {
            Some(ix) => ix.query(r).into_iter().map(|i| i as usize).collect(),
            None => (0..self.atoms.len())
                .filter(|&i| r.contains_point(&self.atoms[i]))
                .collect(),
        }
    }

    pub fn count_in(&self, r: &DyadicRect) -> usize {
        match &self.index {
            Some(ix) => ix.count(r),
            None => self.atoms.iter().filter(|p| r.contains_point(p)).count(),
        }
    }

    /// The same atoms with one more atom added.
    pub fn with_atom(&self, p: DyadicPoint, w: BigRational) -> Result<Self> {
        let mut atoms: Vec<_> = self.atoms.iter().cloned().zip(self.weights.iter().cloned()).collect();
        atoms.push((p, w));
        AtomicMeasure::new(self.dim, atoms)
    }
}

impl RectMass for AtomicMeasure {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mass(&self, r: &DyadicRect) -> BigRational {
        if r.dim() != self.dim {
            return BigRational::zero();
        }
        if let Some(w) = &self.uniform {
            return w * BigInt::from(self.count_in(r));
        }
        self.atoms_in(r).into_iter().map(|i| &self.weights[i]).sum()
    }
}

/// `μ_𝒫`, the uniform probability measure on the points of `𝒫`.
pub fn build_mu(p: &PointSetP) -> AtomicMeasure {
    AtomicMeasure::uniform(2, p.points().to_vec()).expect("point sets are never empty")
}

/// `ν_𝒵`, the uniform probability measure on the witnesses.
pub fn build_nu(z: &ZSet) -> Result<AtomicMeasure> {
    AtomicMeasure::uniform(2, z.points().cloned().collect())
}

/// A finite non-negative combination of indicators of disjoint dyadic
/// rectangles inside the unit cube.
#[derive(Clone, Debug)]
pub struct SimpleFunction {
    dim: usize,
    pieces: Vec<DyadicRect>,
    values: Vec<BigRational>,
    /// Pieces grouped by shape, with an index over the piece centers for
    /// planar functions.
    groups: Vec<ShapeGroup>,
}

#[derive(Clone, Debug)]
struct ShapeGroup {
    levels: Vec<i32>,
    members: Vec<usize>,
    centers: Option<PointIndex>,
}

impl SimpleFunction {
    pub fn new(dim: usize, pieces: Vec<(DyadicRect, BigRational)>) -> Result<Self> {
        let mut rects = Vec::with_capacity(pieces.len());
        let mut values = Vec::with_capacity(pieces.len());
        for (r, v) in pieces {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.dim(),
                });
            }
            if !r.is_unit() {
                return Err(Error::OutOfUniverse(format!("piece {r}")));
            }
            if v.is_negative() {
                return Err(Error::InvalidWeight(format!("piece {r} has value {v}")));
            }
            rects.push(r);
            values.push(v);
        }
        let mut by_shape: BTreeMap<Vec<i32>, Vec<usize>> = BTreeMap::new();
        for (i, r) in rects.iter().enumerate() {
            by_shape
                .entry(r.sides().iter().map(|s| s.level()).collect())
                .or_default()
                .push(i);
        }
        // Disjointness: pieces of one shape are disjoint iff distinct; pieces
        // of different shapes are checked pairwise.
        let shapes: Vec<_> = by_shape.iter().collect();
        for (a, (_, ma)) in shapes.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            if !ma.iter().all(|&i| seen.insert(&rects[i])) {
                return Err(Error::OverlappingPieces);
            }
            for (_, mb) in &shapes[a + 1..] {
                for &i in ma.iter() {
                    for &j in mb.iter() {
                        if rects[i].intersects(&rects[j]) {
                            return Err(Error::OverlappingPieces);
                        }
                    }
                }
            }
        }
        let groups = by_shape
            .into_iter()
            .map(|(levels, members)| {
                let centers = (dim == 2).then(|| {
                    PointIndex::new(members.iter().map(|&i| {
                        let r = &rects[i];
                        (
                            r.side(0).center().expect("unit piece"),
                            r.side(1).center().expect("unit piece"),
                        )
                    }))
                });
                ShapeGroup {
                    levels,
                    members,
                    centers,
                }
            })
            .collect();
        Ok(SimpleFunction {
            dim,
            pieces: rects,
            values,
            groups,
        })
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&DyadicRect, &BigRational)> {
        self.pieces.iter().zip(&self.values)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn integral(&self) -> BigRational {
        self.pieces().map(|(r, v)| v * r.area().to_rational()).sum()
    }

    /// `(piece index, |piece ∩ r|)` for every piece meeting `r`.
    pub fn overlaps(&self, r: &DyadicRect) -> Vec<(usize, BigRational)> {
        let mut out = Vec::new();
        if r.dim() != self.dim {
            return out;
        }
        for g in &self.groups {
            match &g.centers {
                Some(centers) => {
                    // A piece meets r iff its center lies in r widened to the
                    // piece's level on every axis where r is finer.
                    let Some(clipped) = r.clip_to_unit() else {
                        continue;
                    };
                    let widened = DyadicRect::new(clipped.sides().iter().zip(&g.levels).map(|(s, &l)| {
                        if s.level() > l {
                            s.ancestor_at(l).expect("coarser level")
                        } else {
                            *s
                        }
                    }));
                    for local in centers.query(&widened) {
                        let i = g.members[local as usize];
                        let cap = self.pieces[i].intersection(r).expect("piece meets r");
                        out.push((i, cap.area().to_rational()));
                    }
                }
                None => {
                    for &i in &g.members {
                        if let Some(cap) = self.pieces[i].intersection(r) {
                            out.push((i, cap.area().to_rational()));
                        }
                    }
                }
            }
        }
        out.sort_by_key(|(i, _)| *i);
        out
    }

    pub fn value(&self, i: usize) -> &BigRational {
        &self.values[i]
    }

    pub fn piece(&self, i: usize) -> &DyadicRect {
        &self.pieces[i]
    }
}

impl RectMass for SimpleFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mass(&self, r: &DyadicRect) -> BigRational {
        self.overlaps(r).into_iter().map(|(i, a)| &self.values[i] * a).sum()
    }
}

/// `f = (1/#𝒫) Σ 1_{Q_p}/|Q_p|` over the construction squares.
pub fn build_f_simple(p: &PointSetP) -> SimpleFunction {
    let value = BigRational::from_integer(BigInt::one() << (2 * p.m() + 1));
    SimpleFunction::new(2, p.squares().iter().map(|q| (q.clone(), value.clone())).collect())
        .expect("construction squares are disjoint")
}

/// Non-negative gauge for Luxemburg averages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrliczGauge {
    /// `φ(x) = x·[ln(e+x)]^α`.
    LogLog { alpha: BigRational },
    /// `φ(x) = x^p`.
    Power { p: BigRational },
}

impl OrliczGauge {
    pub fn loglog(alpha: BigRational) -> Result<Self> {
        if alpha.is_negative() {
            return Err(Error::Parse(format!("loglog exponent {alpha} is negative")));
        }
        Ok(OrliczGauge::LogLog { alpha })
    }

    pub fn power(p: BigRational) -> Result<Self> {
        if p < BigRational::one() {
            return Err(Error::Parse(format!("power exponent {p} is below 1")));
        }
        Ok(OrliczGauge::Power { p })
    }

    /// The gauge equal to the identity, where averages are plain averages.
    pub fn is_linear(&self) -> bool {
        match self {
            OrliczGauge::LogLog { alpha } => alpha.is_zero(),
            OrliczGauge::Power { p } => p.is_one(),
        }
    }
}

impl std::fmt::Display for OrliczGauge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrliczGauge::LogLog { alpha } => write!(f, "loglog:{}", crate::dyadic::format_rational(alpha)),
            OrliczGauge::Power { p } => write!(f, "power:{}", crate::dyadic::format_rational(p)),
        }
    }
}

impl std::str::FromStr for OrliczGauge {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected loglog:<alpha> or power:<p>, got {s:?}")))?;
        let v = crate::dyadic::parse_rational(arg)?;
        match kind.trim() {
            "loglog" => OrliczGauge::loglog(v),
            "power" => OrliczGauge::power(v),
            other => Err(Error::Parse(format!("unknown gauge {other:?}"))),
        }
    }
}

impl Serialize for OrliczGauge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OrliczGauge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// JSON form of an atomic measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub dim: usize,
    pub atoms: Vec<AtomEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomEntry {
    pub point: DyadicPoint,
    #[serde(with = "rational_str")]
    pub weight: BigRational,
}

impl MeasureFile {
    pub fn from_measure(mu: &AtomicMeasure) -> Self {
        MeasureFile {
            dim: mu.dim,
            atoms: mu
                .atoms
                .iter()
                .zip(&mu.weights)
                .map(|(p, w)| AtomEntry {
                    point: p.clone(),
                    weight: w.clone(),
                })
                .collect(),
        }
    }

    pub fn into_measure(self) -> Result<AtomicMeasure> {
        AtomicMeasure::new(self.dim, self.atoms.into_iter().map(|a| (a.point, a.weight)).collect())
    }
}

/// JSON form of a simple function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionFile {
    pub dim: usize,
    pub pieces: Vec<PieceEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PieceEntry {
    pub rect: DyadicRect,
    #[serde(with = "rational_str")]
    pub value: BigRational,
}

impl FunctionFile {
    pub fn from_function(f: &SimpleFunction) -> Self {
        FunctionFile {
            dim: f.dim,
            pieces: f
                .pieces()
                .map(|(r, v)| PieceEntry {
                    rect: r.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
    }

    pub fn into_function(self) -> Result<SimpleFunction> {
        SimpleFunction::new(self.dim, self.pieces.into_iter().map(|p| (p.rect, p.value)).collect())
    }
}
