//! The separated point set `𝒫`, its standard rectangles, and the witness set
//! `𝒵` built from gaps inside offspring rectangles.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{dist_h_sq, dist_h_sq_rects, Coord, DyadicInterval, DyadicPoint, DyadicRect, LogDyadic};
use crate::error::{Error, Result};
use crate::index::PointIndex;

/// Largest point count `construct_p` builds without an explicit cap.
pub const DEFAULT_POINT_CAP: u128 = 1 << 21;

/// `2^{2m+1}` squares of side `2^{-2m-1}` with pairwise squared hyperbolic
/// distance at least `2^{-2m}`, and their centers.
#[derive(Clone, Debug)]
pub struct PointSetP {
    m: u32,
    squares: Vec<DyadicRect>,
    points: Vec<DyadicPoint>,
    index: PointIndex,
}

impl PointSetP {
    /// Wraps an explicit list of squares; points are their centers. Used for
    /// deserialization and for corrupted inputs in negative tests.
    pub fn from_squares(m: u32, squares: Vec<DyadicRect>) -> Result<Self> {
        let points = squares
            .iter()
            .map(|q| {
                if q.dim() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: q.dim(),
                    });
                }
                Ok(DyadicPoint::xy(q.side(0).center()?, q.side(1).center()?))
            })
            .collect::<Result<Vec<_>>>()?;
        let index = PointIndex::new(points.iter().map(|p| (p.coord(0), p.coord(1))));
        Ok(PointSetP {
            m,
            squares,
            points,
            index,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn squares(&self) -> &[DyadicRect] {
        &self.squares
    }

    pub fn points(&self) -> &[DyadicPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self) -> &PointIndex {
        &self.index
    }

    /// Level sum of a standard rectangle, `2m+2`.
    pub fn standard_level(&self) -> u32 {
        2 * self.m + 2
    }
}

pub fn construct_p(m: u32) -> Result<PointSetP> {
    construct_p_capped(m, DEFAULT_POINT_CAP)
}

pub fn construct_p_capped(m: u32, cap: u128) -> Result<PointSetP> {
    if 2 * m + 2 > 60 {
        return Err(Error::ResourceCap {
            requested: u128::MAX,
            cap,
        });
    }
    let requested = 1u128 << (2 * m + 1);
    if requested > cap {
        return Err(Error::ResourceCap { requested, cap });
    }
    // Square indices (x, y) at level 2j+1 for the current generation j.
    let mut cells: Vec<(u64, u64)> = vec![(0, 0), (1, 1)];
    for j in 1..=m {
        cells = refine(&cells, 2 * j - 1)?;
    }
    cells.sort_unstable();
    let level = (2 * m + 1) as i32;
    let squares = cells
        .into_iter()
        .map(|(x, y)| {
            Ok(DyadicRect::xy(
                DyadicInterval::new(level, x)?,
                DyadicInterval::new(level, y)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    PointSetP::from_squares(m, squares)
}

/// One induction step: copies of the previous family (level `prev_level`)
/// go into the four quadrants, then each copy square picks one child.
fn refine(prev: &[(u64, u64)], prev_level: u32) -> Result<Vec<(u64, u64)>> {
    let half = 1u64 << prev_level;
    let side = 2 * half;
    // Chosen child per column / row among the diagonal quadrants.
    let mut col_child = vec![u64::MAX; side as usize];
    let mut row_child = vec![u64::MAX; side as usize];
    let mut out = Vec::with_capacity(4 * prev.len());
    let diagonal = prev
        .iter()
        .map(|&(a, b)| (a, half + b))
        .chain(prev.iter().map(|&(a, b)| (half + a, b)));
    for (x, y) in diagonal {
        let child = (2 * x, 2 * y);
        col_child[x as usize] = child.0;
        row_child[y as usize] = child.1;
        out.push(child);
    }
    let anti = prev
        .iter()
        .map(|&(a, b)| (a, b))
        .chain(prev.iter().map(|&(a, b)| (half + a, half + b)));
    for (x, y) in anti {
        let cx = col_child[x as usize];
        let cy = row_child[y as usize];
        if cx == u64::MAX || cy == u64::MAX {
            return Err(Error::InvariantViolation(format!(
                "square ({x},{y}) at level {} lacks a column or row partner",
                prev_level + 1
            )));
        }
        // The partners' children cover one column and one row of this
        // square's children; take the child avoiding both.
        out.push((cx ^ 1, cy ^ 1));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub pairs_checked: u64,
    /// Exact minimum over pairs; `None` when some pair has overlapping
    /// projections (distance zero).
    pub min_dist_sq: Option<LogDyadic>,
    pub threshold: LogDyadic,
    pub violating_pairs: Vec<(usize, usize)>,
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.violating_pairs.is_empty()
    }
}

/// Exhaustive pairwise check of `dist_h_sq_rects ≥ 2^{-2m}`.
pub fn verify_separation(p: &PointSetP) -> SeparationReport {
    separation_of(p.squares(), LogDyadic(-2 * p.m() as i64))
}

/// Row minimum (outer `None`: no pairs, inner `None`: distance zero) and the
/// violating pairs of that row.
type RowScan = (Option<Option<LogDyadic>>, Vec<(usize, usize)>);

pub fn separation_of(squares: &[DyadicRect], threshold: LogDyadic) -> SeparationReport {
    let n = squares.len();
    let per_row: Vec<RowScan> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut min: Option<Option<LogDyadic>> = None;
            let mut bad = Vec::new();
            for j in i + 1..n {
                let d = dist_h_sq_rects(&squares[i], &squares[j]).ok();
                min = Some(match (min, d) {
                    (None, d) => d,
                    (Some(None), _) | (Some(_), None) => None,
                    (Some(Some(a)), Some(b)) => Some(a.min(b)),
                });
                if d.map_or(true, |d| d < threshold) {
                    bad.push((i, j));
                }
            }
            (min, bad)
        })
        .collect();
    let mut min_dist_sq: Option<Option<LogDyadic>> = None;
    let mut violating_pairs = Vec::new();
    for (m, bad) in per_row {
        if let Some(m) = m {
            min_dist_sq = Some(match (min_dist_sq, m) {
                (None, d) => d,
                (Some(None), _) | (Some(_), None) => None,
                (Some(Some(a)), Some(b)) => Some(a.min(b)),
            });
        }
        violating_pairs.extend(bad);
    }
    SeparationReport {
        pairs_checked: (n as u64) * (n.saturating_sub(1) as u64) / 2,
        // A single square has no pairs; report the vacuous bound 1.
        min_dist_sq: min_dist_sq.unwrap_or(Some(LogDyadic::ONE)),
        threshold,
        violating_pairs,
    }
}

pub fn count_in_rect(p: &PointSetP, r: &DyadicRect) -> usize {
    p.index.count(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct PigeonholeReport {
    pub rects_checked: u64,
    pub failures: Vec<DyadicRect>,
}

/// Every dyadic rectangle of area `2^{-2m-1}` holds exactly one point.
pub fn verify_pigeonhole(p: &PointSetP) -> PigeonholeReport {
    let total = 2 * p.m() + 1;
    let mut failures = Vec::new();
    let mut rects_checked = 0u64;
    for a in 0..=total {
        let b = total - a;
        for ix in 0..(1u64 << a) {
            for iy in 0..(1u64 << b) {
                let r = DyadicRect::xy(
                    DyadicInterval::new(a as i32, ix).expect("level within range"),
                    DyadicInterval::new(b as i32, iy).expect("level within range"),
                );
                rects_checked += 1;
                if p.index.count(&r) != 1 {
                    failures.push(r);
                }
            }
        }
    }
    PigeonholeReport {
        rects_checked,
        failures,
    }
}

/// A dyadic rectangle of area `2^{-2m-2}` and the single point of `𝒫` in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StandardRectangle {
    pub rect: DyadicRect,
    pub anchor: usize,
}

/// All standard rectangles, grouped by anchor, widest first within a group.
pub fn enumerate_standard_rectangles(p: &PointSetP) -> Vec<StandardRectangle> {
    let total = p.standard_level();
    let mut out = Vec::with_capacity(p.len() * (total as usize + 1));
    for (anchor, q) in p.points().iter().enumerate() {
        for a in 0..=total {
            let rect = DyadicRect::containing(q, &[a, total - a]).expect("levels within precision");
            out.push(StandardRectangle { rect, anchor });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Vertical,
    Horizontal,
}

impl Direction {
    /// (axis of the offspring interval, the other axis)
    fn axes(self) -> (usize, usize) {
        match self {
            Direction::Vertical => (0, 1),
            Direction::Horizontal => (1, 0),
        }
    }
}

/// Maximal (by inclusion of the crossing-side projection) standard
/// rectangles with a different anchor that cross `r` in `direction` inside the
/// generation-`ell` offspring of the crossing side. Ordered widest first.
pub fn maximal_foreign_rectangles(
    p: &PointSetP,
    r: &StandardRectangle,
    ell: u32,
    direction: Direction,
) -> Result<Vec<DyadicRect>> {
    let (a, b) = direction.axes();
    let anchor = &p.points()[r.anchor];
    let target = r.rect.side(a).offspring(anchor.coord(a), ell)?;
    let other = *r.rect.side(b);
    let total = p.standard_level() as i32;
    let mut found: Vec<DyadicRect> = Vec::new();
    for hb in (0..other.level()).rev() {
        let w_level = total - hb;
        if w_level < target.level() {
            continue;
        }
        let h = other.ancestor_at(hb)?;
        let query = if a == 0 {
            DyadicRect::xy(target, h)
        } else {
            DyadicRect::xy(h, target)
        };
        for id in p.index.query(&query) {
            let q = &p.points()[id as usize];
            let w = DyadicInterval::containing(q.coord(a), w_level as u32)?;
            found.push(if a == 0 {
                DyadicRect::xy(w, h)
            } else {
                DyadicRect::xy(h, w)
            });
        }
    }
    found.sort_by_key(|t| (t.side(a).level(), t.side(a).index()));
    found.dedup();
    let mut kept: Vec<DyadicRect> = Vec::new();
    for t in found {
        if !kept.iter().any(|k| k.side(a).contains(t.side(a))) {
            kept.push(t);
        }
    }
    Ok(kept)
}

/// Leftmost maximal dyadic subinterval of `k` meeting none of `blocked`.
pub fn leftmost_free(k: DyadicInterval, blocked: &[DyadicInterval]) -> Option<DyadicInterval> {
    if blocked.iter().all(|b| !b.intersects(&k)) {
        return Some(k);
    }
    if blocked.iter().any(|b| b.contains(&k)) {
        return None;
    }
    let [left, right] = k.children().ok()?;
    leftmost_free(left, blocked).or_else(|| leftmost_free(right, blocked))
}

/// `R* = E × F ⊆ I_(ℓ) × J_(k)` avoiding every foreign standard rectangle.
pub fn construct_r_star(p: &PointSetP, r: &StandardRectangle, k: u32, ell: u32) -> Result<DyadicRect> {
    if k == 0 || ell == 0 {
        return Err(Error::Precondition("k and ell must be at least 1".into()));
    }
    let anchor = &p.points()[r.anchor];
    let i_off = r.rect.side(0).offspring(anchor.coord(0), ell)?;
    let j_off = r.rect.side(1).offspring(anchor.coord(1), k)?;
    let vertical: Vec<_> = maximal_foreign_rectangles(p, r, ell, Direction::Vertical)?
        .iter()
        .map(|t| *t.side(0))
        .collect();
    let horizontal: Vec<_> = maximal_foreign_rectangles(p, r, k, Direction::Horizontal)?
        .iter()
        .map(|t| *t.side(1))
        .collect();
    let e = leftmost_free(i_off, &vertical)
        .ok_or_else(|| Error::NoGapFound(format!("x-offspring {i_off} of {}", r.rect)))?;
    let f = leftmost_free(j_off, &horizontal)
        .ok_or_else(|| Error::NoGapFound(format!("y-offspring {j_off} of {}", r.rect)))?;
    Ok(DyadicRect::xy(e, f))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZWitness {
    /// Index into the standard rectangle list.
    pub source: usize,
    pub rect: DyadicRect,
    pub anchor: usize,
    pub r_star: DyadicRect,
    pub z: DyadicPoint,
    pub t_rect: DyadicRect,
}

#[derive(Clone, Debug)]
pub struct ZSet {
    m: u32,
    k: u32,
    ell: u32,
    witnesses: Vec<ZWitness>,
    index: PointIndex,
}

impl ZSet {
    pub fn from_witnesses(m: u32, k: u32, ell: u32, witnesses: Vec<ZWitness>) -> Self {
        let index = PointIndex::new(witnesses.iter().map(|w| (w.z.coord(0), w.z.coord(1))));
        ZSet {
            m,
            k,
            ell,
            witnesses,
            index,
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn witnesses(&self) -> &[ZWitness] {
        &self.witnesses
    }

    pub fn points(&self) -> impl Iterator<Item = &DyadicPoint> {
        self.witnesses.iter().map(|w| &w.z)
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn index(&self) -> &PointIndex {
        &self.index
    }

    /// `2^{-2m-k-ℓ}`, the squared distance from each witness to its anchor.
    pub fn anchor_distance(&self) -> LogDyadic {
        LogDyadic(-((2 * self.m + self.k + self.ell) as i64))
    }
}

/// JSON form of `𝒫`: the squares in text encoding; points are their centers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSetFile {
    pub m: u32,
    pub squares: Vec<DyadicRect>,
}

impl PointSetFile {
    pub fn from_set(p: &PointSetP) -> Self {
        PointSetFile {
            m: p.m(),
            squares: p.squares().to_vec(),
        }
    }

    pub fn into_set(self) -> Result<PointSetP> {
        PointSetP::from_squares(self.m, self.squares)
    }
}

/// JSON form of `𝒵` together with the `𝒫` it was built from; witness
/// anchors index into `p.squares`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZSetFile {
    pub m: u32,
    pub k: u32,
    pub ell: u32,
    pub p: PointSetFile,
    pub witnesses: Vec<ZWitness>,
}

impl ZSetFile {
    pub fn from_sets(p: &PointSetP, z: &ZSet) -> Self {
        ZSetFile {
            m: z.m(),
            k: z.k(),
            ell: z.ell(),
            p: PointSetFile::from_set(p),
            witnesses: z.witnesses().to_vec(),
        }
    }

    pub fn into_sets(self) -> Result<(PointSetP, ZSet)> {
        let p = self.p.into_set()?;
        if p.m() != self.m {
            return Err(Error::Parse(format!(
                "point set has m = {}, witnesses m = {}",
                p.m(),
                self.m
            )));
        }
        if let Some(w) = self.witnesses.iter().find(|w| w.anchor >= p.len()) {
            return Err(Error::Parse(format!("anchor {} out of range", w.anchor)));
        }
        Ok((p, ZSet::from_witnesses(self.m, self.k, self.ell, self.witnesses)))
    }
}

pub fn construct_z(p: &PointSetP, k: u32) -> Result<ZSet> {
    construct_z_with_ell(p, k, 1)
}

pub fn construct_z_with_ell(p: &PointSetP, k: u32, ell: u32) -> Result<ZSet> {
    if k == 0 || ell == 0 {
        return Err(Error::Precondition("k and ell must be at least 1".into()));
    }
    if p.m() < k.max(ell) + 2 {
        return Err(Error::Precondition(format!(
            "m = {} must be at least max(k, ell) + 2 = {}",
            p.m(),
            k.max(ell) + 2
        )));
    }
    let standard = enumerate_standard_rectangles(p);
    let stars: Vec<DyadicRect> = standard
        .par_iter()
        .map(|r| construct_r_star(p, r, k, ell))
        .collect::<Result<_>>()?;
    let mut xs: HashSet<Coord> = p.points().iter().map(|q| q.coord(0)).collect();
    let mut ys: HashSet<Coord> = p.points().iter().map(|q| q.coord(1)).collect();
    let mut witnesses = Vec::with_capacity(standard.len());
    for (source, (r, star)) in standard.iter().zip(stars).enumerate() {
        let mut region = star.clone();
        let z = loop {
            let z = DyadicPoint::xy(region.side(0).center()?, region.side(1).center()?);
            if !xs.contains(&z.coord(0)) && !ys.contains(&z.coord(1)) {
                break z;
            }
            let [cx, _] = region.side(0).children().map_err(|_| collision(&star))?;
            let [cy, _] = region.side(1).children().map_err(|_| collision(&star))?;
            region = DyadicRect::xy(cx, cy);
        };
        xs.insert(z.coord(0));
        ys.insert(z.coord(1));
        let anchor = &p.points()[r.anchor];
        let i_off = r.rect.side(0).offspring(anchor.coord(0), ell)?;
        let j_off = r.rect.side(1).offspring(anchor.coord(1), k)?;
        let t_rect = DyadicRect::xy(i_off.parent()?, j_off.parent()?);
        witnesses.push(ZWitness {
            source,
            rect: r.rect.clone(),
            anchor: r.anchor,
            r_star: star,
            z,
            t_rect,
        });
    }
    // The gap argument promises that no foreign standard rectangle reaches z;
    // check it rather than trust it.
    let total = p.standard_level();
    witnesses.par_iter().try_for_each(|w| {
        for a in 0..=total {
            let shape = DyadicRect::containing(&w.z, &[a, total - a])?;
            if p.index.query(&shape).iter().any(|&id| id as usize != w.anchor) {
                return Err(Error::InvariantViolation(format!(
                    "witness {} lies in a foreign standard rectangle {shape}",
                    w.z
                )));
            }
        }
        Ok(())
    })?;
    Ok(ZSet::from_witnesses(p.m(), k, ell, witnesses))
}

fn collision(star: &DyadicRect) -> Error {
    Error::CoordinateCollision(format!("ran out of precision inside {star}"))
}

#[derive(Clone, Debug, Serialize)]
pub struct ZReport {
    pub m: u32,
    pub k: u32,
    pub ell: u32,
    pub count: usize,
    pub expected_count: u128,
    /// `|𝒵| / (m·2^{2m})`.
    #[serde(with = "crate::dyadic::rational_str")]
    pub z1_constant: BigRational,
    /// Witnesses whose set of `𝒫` points at squared distance below
    /// `2^{-2m-1}` is not exactly their anchor.
    pub z2_violations: Vec<usize>,
    /// Witnesses whose anchor distance differs from `2^{-2m-k-ℓ}`.
    pub z3_violations: Vec<usize>,
    /// max over standard rectangles of `#(R ∩ 𝒵)/k`.
    #[serde(with = "crate::dyadic::rational_str")]
    pub z4_constant: BigRational,
    /// max over dyadic `R` with `|R| ≥ 2^{-2m-1}` of `#(R∩𝒵)/(2^{2m}·m·k·|R|)`.
    #[serde(with = "crate::dyadic::rational_str")]
    pub z5_constant: BigRational,
    pub duplicate_points: usize,
    pub shared_coordinates: usize,
}

impl ZReport {
    pub fn exact_properties_hold(&self) -> bool {
        self.count as u128 == self.expected_count
            && self.z2_violations.is_empty()
            && self.z3_violations.is_empty()
            && self.duplicate_points == 0
            && self.shared_coordinates == 0
    }
}

fn ratio(n: u128, d: u128) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn verify_z_properties(p: &PointSetP, z: &ZSet) -> ZReport {
    let m = p.m();
    let k = z.k();
    let near = LogDyadic(-(2 * m as i64 + 1));
    let sharp = z.anchor_distance();
    let checks: Vec<(bool, bool)> = z
        .witnesses()
        .par_iter()
        .map(|w| {
            let mut close = Vec::new();
            for (i, q) in p.points().iter().enumerate() {
                // A shared coordinate means distance zero.
                let d = dist_h_sq(q, &w.z).ok();
                if d.map_or(true, |d| d < near) {
                    close.push(i);
                }
            }
            let z2_ok = close == [w.anchor];
            let z3_ok = dist_h_sq(&p.points()[w.anchor], &w.z).ok() == Some(sharp);
            (z2_ok, z3_ok)
        })
        .collect();
    let z2_violations = checks
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.0)
        .map(|(i, _)| i)
        .collect();
    let z3_violations = checks
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.1)
        .map(|(i, _)| i)
        .collect();

    let total = p.standard_level();
    let z4_max = enumerate_standard_rectangles(p)
        .par_iter()
        .map(|r| z.index.count(&r.rect))
        .max()
        .unwrap_or(0);
    let z4_constant = ratio(z4_max as u128, k as u128);

    // Every dyadic rectangle of area at least 2^{-2m-1}: level sum ≤ 2m+1.
    let mut shapes = Vec::new();
    for s in 0..total {
        for a in 0..=s {
            shapes.push((a, s - a));
        }
    }
    let z5_best = shapes
        .par_iter()
        .map(|&(a, b)| {
            let mut best: Option<(usize, u32)> = None;
            for ix in 0..(1u64 << a) {
                for iy in 0..(1u64 << b) {
                    let r = DyadicRect::xy(
                        DyadicInterval::new(a as i32, ix).expect("level in range"),
                        DyadicInterval::new(b as i32, iy).expect("level in range"),
                    );
                    let c = z.index.count(&r);
                    // Compare c·2^{a+b} across shapes.
                    let better = match best {
                        None => true,
                        Some((bc, bs)) => (c as u128) << (a + b) > (bc as u128) << bs,
                    };
                    if better {
                        best = Some((c, a + b));
                    }
                }
            }
            best
        })
        .flatten()
        .max_by(|x, y| ((x.0 as u128) << x.1).cmp(&((y.0 as u128) << y.1)))
        .unwrap_or((0, 0));
    // #/(2^{2m} m k 2^{-s}) = # 2^s / (2^{2m} m k)
    let z5_constant = ratio(
        (z5_best.0 as u128) << z5_best.1,
        (1u128 << (2 * m)) * m.max(1) as u128 * k as u128,
    );

    let mut seen = HashSet::new();
    let duplicate_points = z.points().filter(|q| !seen.insert((*q).clone())).count();
    let mut xs = HashSet::new();
    let mut ys = HashSet::new();
    let mut shared_coordinates = 0;
    for q in p.points().iter().chain(z.points()) {
        if !xs.insert(q.coord(0)) || !ys.insert(q.coord(1)) {
            shared_coordinates += 1;
        }
    }
    ZReport {
        m,
        k,
        ell: z.ell(),
        count: z.len(),
        expected_count: (2 * m as u128 + 3) << (2 * m + 1),
        z1_constant: ratio(z.len() as u128, (m.max(1) as u128) << (2 * m)),
        z2_violations,
        z3_violations,
        z4_constant,
        z5_constant,
        duplicate_points,
        shared_coordinates,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrzReport {
    /// `(r, t)` witness pairs with `r ≠ t` and `z_t ∈ T_r`.
    pub violations: Vec<(usize, usize)>,
    /// Witnesses with `z ∉ T_R`.
    pub self_misses: Vec<usize>,
    /// Witnesses whose `T_R` does not hold exactly one point of `𝒫`.
    pub p_count_failures: Vec<usize>,
}

impl TrzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.self_misses.is_empty() && self.p_count_failures.is_empty()
    }
}

/// Foreign witnesses in `T_R`, whether `z_R ∈ T_R`, whether `T_R` holds one point.
type TrzScan = (Vec<(usize, usize)>, bool, bool);

/// `z_T ∉ T_R` for every pair of distinct witnesses, `z_R ∈ T_R`, and each
/// `T_R` holds exactly one point of `𝒫`.
pub fn verify_trz(p: &PointSetP, z: &ZSet) -> TrzReport {
    let per: Vec<TrzScan> = z
        .witnesses()
        .par_iter()
        .enumerate()
        .map(|(r, w)| {
            let others: Vec<(usize, usize)> = z
                .index
                .query(&w.t_rect)
                .into_iter()
                .map(|t| t as usize)
                .filter(|&t| t != r)
                .map(|t| (r, t))
                .collect();
            (others, w.t_rect.contains_point(&w.z), p.index.count(&w.t_rect) == 1)
        })
        .collect();
    let mut report = TrzReport {
        violations: Vec::new(),
        self_misses: Vec::new(),
        p_count_failures: Vec::new(),
    };
    for (r, (mut v, self_ok, p_ok)) in per.into_iter().enumerate() {
        v.sort_unstable();
        report.violations.extend(v);
        if !self_ok {
            report.self_misses.push(r);
        }
        if !p_ok {
            report.p_count_failures.push(r);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(l: i32, i: u64) -> DyadicInterval {
        DyadicInterval::new(l, i).unwrap()
    }

    #[test]
    fn base_case() {
        let p = construct_p(0).unwrap();
        assert_eq!(
            p.squares(),
            &[DyadicRect::xy(iv(1, 0), iv(1, 0)), DyadicRect::xy(iv(1, 1), iv(1, 1))]
        );
        let rep = verify_separation(&p);
        assert_eq!(rep.min_dist_sq, Some(LogDyadic(0)));
        assert!(rep.passed());
    }

    #[test]
    fn small_generations_are_separated() {
        for m in 1..=3 {
            let p = construct_p(m).unwrap();
            assert_eq!(p.len(), 1 << (2 * m + 1));
            let rep = verify_separation(&p);
            assert!(rep.passed(), "m={m}");
            assert_eq!(rep.min_dist_sq, Some(LogDyadic(-2 * m as i64)), "m={m}");
        }
    }

    #[test]
    fn corrupted_square_is_caught() {
        let p = construct_p(2).unwrap();
        let mut squares = p.squares().to_vec();
        // Move square 0 into the row of square 1.
        squares[0] = squares[0].with_side(1, *squares[1].side(1));
        let rep = separation_of(&squares, LogDyadic(-4));
        assert!(!rep.passed());
        assert_eq!(rep.min_dist_sq, None);
    }

    #[test]
    fn resource_cap() {
        assert!(matches!(construct_p_capped(5, 1 << 10), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn counts() {
        let p = construct_p(2).unwrap();
        assert_eq!(count_in_rect(&p, &DyadicRect::unit_cube(2)), 32);
        assert!(verify_pigeonhole(&p).failures.is_empty());
    }

    #[test]
    fn standard_rectangle_counts() {
        let p = construct_p(1).unwrap();
        let all = enumerate_standard_rectangles(&p);
        assert_eq!(all.len(), 8 * 5);
        assert_eq!(enumerate_standard_rectangles(&construct_p(0).unwrap()).len(), 6);
        for r in &all {
            assert_eq!(r.rect.area(), LogDyadic(-4));
            assert_eq!(p.index().query(&r.rect), vec![r.anchor as u32]);
        }
    }

    #[test]
    fn leftmost_gap() {
        let k = iv(1, 0);
        assert_eq!(leftmost_free(k, &[]), Some(k));
        assert_eq!(leftmost_free(k, &[iv(2, 0)]), Some(iv(2, 1)));
        assert_eq!(leftmost_free(k, &[iv(3, 1), iv(2, 1)]), Some(iv(3, 0)));
        assert_eq!(leftmost_free(k, &[iv(0, 0)]), None);
    }

    #[test]
    fn z_precondition() {
        let p = construct_p(3).unwrap();
        assert!(matches!(construct_z(&p, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn z_small_instance() {
        let p = construct_p(3).unwrap();
        let z = construct_z(&p, 1).unwrap();
        let rep = verify_z_properties(&p, &z);
        assert!(rep.exact_properties_hold(), "{rep:?}");
        assert!(verify_trz(&p, &z).passed());
    }
}
