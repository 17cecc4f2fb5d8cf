//! Exhaustive checks of the structural facts behind the `R*` construction.
//!
//! Every check enumerates standard rectangles directly and never calls the
//! fast routines in [`crate::pointsets`] except where it compares against them.

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{DyadicInterval, DyadicRect};
use crate::error::Result;
use crate::pointsets::{
    construct_r_star, enumerate_standard_rectangles, maximal_foreign_rectangles, Direction, PointSetP,
    StandardRectangle,
};

/// Number of instances examined and a description of each failure.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LemmaReport {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(name: &str, parts: Vec<(usize, Vec<String>)>) -> Self {
        let mut out = LemmaReport {
            name: name.into(),
            ..Default::default()
        };
        for (c, v) in parts {
            out.checked += c;
            out.violations.extend(v);
        }
        out
    }
}

/// Swaps axes so the vertical argument also covers the horizontal case.
fn oriented(r: &DyadicRect, dir: Direction) -> (DyadicInterval, DyadicInterval) {
    match dir {
        Direction::Vertical => (*r.side(0), *r.side(1)),
        Direction::Horizontal => (*r.side(1), *r.side(0)),
    }
}

fn assemble(a: DyadicInterval, b: DyadicInterval, dir: Direction) -> DyadicRect {
    match dir {
        Direction::Vertical => DyadicRect::xy(a, b),
        Direction::Horizontal => DyadicRect::xy(b, a),
    }
}

fn axis(dir: Direction) -> usize {
    match dir {
        Direction::Vertical => 0,
        Direction::Horizontal => 1,
    }
}

const DIRECTIONS: [Direction; 2] = [Direction::Vertical, Direction::Horizontal];

/// For every standard `R = I × J` and `1 ≤ ℓ ≤ l_J − 1`: `I_(ℓ) × J^{(ℓ+1)}`
/// holds exactly one point of `𝒫`, and it lies outside `J^{(ℓ)}`.
/// Both orientations are checked.
pub fn check_localize(p: &PointSetP) -> Result<LemmaReport> {
    let standard = enumerate_standard_rectangles(p);
    let parts = standard
        .par_iter()
        .map(|r| -> Result<(usize, Vec<String>)> {
            let mut checked = 0;
            let mut bad = Vec::new();
            let anchor = &p.points()[r.anchor];
            for dir in DIRECTIONS {
                let (i, j) = oriented(&r.rect, dir);
                let x = anchor.coord(axis(dir));
                for ell in 1..j.level() as u32 {
                    checked += 1;
                    let off = i.offspring(x, ell)?;
                    let up = j.ancestor_at(j.level() - ell as i32 - 1)?;
                    let near = j.ancestor_at(j.level() - ell as i32)?;
                    let hits = p.index().query(&assemble(off, up, dir));
                    if hits.len() != 1 {
                        bad.push(format!("{} ({dir:?}, ell={ell}): {} points", r.rect, hits.len()));
                        continue;
                    }
                    let q = &p.points()[hits[0] as usize];
                    if hits[0] as usize == r.anchor || near.contains_coord(q.coord(1 - axis(dir))) {
                        bad.push(format!("{} ({dir:?}, ell={ell}): point {q} in the inner band", r.rect));
                    }
                }
            }
            Ok((checked, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport::merge("localize", parts))
}

/// Standard rectangles `T = W × H` (oriented) crossing `R` with `W ⊆ target`
/// and `H ⊋ J`, found by enumerating every standard rectangle of every point
/// in the column over `target`.
fn crossing_in(
    p: &PointSetP,
    standard_of: &[Vec<DyadicRect>],
    r: &StandardRectangle,
    target: DyadicInterval,
    dir: Direction,
) -> Vec<DyadicRect> {
    let (_, j) = oriented(&r.rect, dir);
    let column = assemble(target, DyadicInterval::UNIT, dir);
    let mut out = Vec::new();
    for id in p.index().query(&column) {
        if id as usize == r.anchor {
            continue;
        }
        for t in &standard_of[id as usize] {
            let (w, h) = oriented(t, dir);
            if target.contains(&w) && h.contains(&j) && h != j {
                out.push(t.clone());
            }
        }
    }
    out
}

fn standard_by_anchor(p: &PointSetP) -> Vec<Vec<DyadicRect>> {
    let mut by = vec![Vec::new(); p.len()];
    for s in enumerate_standard_rectangles(p) {
        by[s.anchor].push(s.rect);
    }
    by
}

/// For `2^{ℓ+1}|J| ≤ 1`: exactly one foreign standard `T = W × H` crosses
/// `R` with `W ⊆ I_(ℓ)` and `|W| = |I_(ℓ)|/2`, none is wider, and
/// `H = J^{(ℓ+1)}`.
pub fn check_find_maximal(p: &PointSetP) -> Result<LemmaReport> {
    let standard = enumerate_standard_rectangles(p);
    let by_anchor = standard_by_anchor(p);
    let parts = standard
        .par_iter()
        .map(|r| -> Result<(usize, Vec<String>)> {
            let mut checked = 0;
            let mut bad = Vec::new();
            let anchor = &p.points()[r.anchor];
            for dir in DIRECTIONS {
                let (i, j) = oriented(&r.rect, dir);
                for ell in 1..j.level() as u32 {
                    checked += 1;
                    let off = i.offspring(anchor.coord(axis(dir)), ell)?;
                    let found = crossing_in(p, &by_anchor, r, off, dir);
                    let half: Vec<_> = found
                        .iter()
                        .filter(|t| oriented(t, dir).0.level() == off.level() + 1)
                        .collect();
                    let wider = found.iter().any(|t| oriented(t, dir).0.level() <= off.level());
                    let up = j.ancestor_at(j.level() - ell as i32 - 1)?;
                    if half.len() != 1 || wider || oriented(half[0], dir).1 != up {
                        bad.push(format!(
                            "{} ({dir:?}, ell={ell}): {} half-width crossings, wider={wider}",
                            r.rect,
                            half.len()
                        ));
                    }
                }
            }
            Ok((checked, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport::merge("find-maximal", parts))
}

/// Maximal elements (by inclusion of `W`) of the crossing family, widest first.
fn maximal_widths(found: Vec<DyadicRect>, dir: Direction) -> Vec<DyadicRect> {
    let mut found = found;
    found.sort_by_key(|t| {
        let w = oriented(t, dir).0;
        (w.level(), w.index())
    });
    found.dedup();
    let mut kept: Vec<DyadicRect> = Vec::new();
    for t in found {
        let w = oriented(&t, dir).0;
        if !kept.iter().any(|k| oriented(k, dir).0.contains(&w)) {
            kept.push(t);
        }
    }
    kept
}

/// The maximal crossing widths halve: `a_i = 2^{-i}|I_(ℓ)|`. Exhaustively the
/// list has exactly `l_J − ℓ` entries for `1 ≤ ℓ ≤ l_J − 1` (the height of
/// the `i`-th one is `2^{ℓ+i}|J|`, which must fit in the unit square), so the
/// halving is checked over the whole list; it covers `1 ≤ i ≤ m − ℓ`
/// whenever `l_J ≥ m`. The fast routine is compared against the same list.
pub fn check_exponential_decay(p: &PointSetP) -> Result<LemmaReport> {
    let standard = enumerate_standard_rectangles(p);
    let by_anchor = standard_by_anchor(p);
    let parts = standard
        .par_iter()
        .map(|r| -> Result<(usize, Vec<String>)> {
            let mut checked = 0;
            let mut bad = Vec::new();
            let anchor = &p.points()[r.anchor];
            for dir in DIRECTIONS {
                let (i, j) = oriented(&r.rect, dir);
                for ell in 1..=j.level().max(1) as u32 {
                    checked += 1;
                    let off = i.offspring(anchor.coord(axis(dir)), ell)?;
                    let list = maximal_widths(crossing_in(p, &by_anchor, r, off, dir), dir);
                    let want_len = (j.level() - ell as i32).max(0) as usize;
                    if list.len() != want_len {
                        bad.push(format!(
                            "{} ({dir:?}, ell={ell}): {} maximal, expected {want_len}",
                            r.rect,
                            list.len()
                        ));
                    }
                    for (n, t) in list.iter().enumerate() {
                        let w = oriented(t, dir).0;
                        if w.level() != off.level() + n as i32 + 1 {
                            bad.push(format!(
                                "{} ({dir:?}, ell={ell}): a_{} = 2^-{}",
                                r.rect,
                                n + 1,
                                w.level()
                            ));
                        }
                    }
                    let fast = maximal_foreign_rectangles(p, r, ell, dir)?;
                    if fast != list {
                        bad.push(format!("{} ({dir:?}, ell={ell}): fast routine disagrees", r.rect));
                    }
                }
            }
            Ok((checked, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport::merge("exponential-decay", parts))
}

/// Rasterizes `I_(ℓ) × J_(k)` at the resolution of `R*`, paints every
/// foreign standard rectangle (no index, no maximality pruning) and checks
/// that `R*` lands on an unpainted cell.
pub fn check_r_star_admissible(p: &PointSetP, k: u32, ell: u32) -> Result<LemmaReport> {
    let standard = enumerate_standard_rectangles(p);
    let parts = standard
        .par_iter()
        .map(|r| -> Result<(usize, Vec<String>)> {
            let anchor = &p.points()[r.anchor];
            let star = construct_r_star(p, r, k, ell)?;
            let region = DyadicRect::xy(
                r.rect.side(0).offspring(anchor.coord(0), ell)?,
                r.rect.side(1).offspring(anchor.coord(1), k)?,
            );
            if !region.contains(&star) {
                return Ok((1, vec![format!("{}: R* = {star} leaves {region}", r.rect)]));
            }
            // Grid of cells at the levels of R*, relative to the region.
            let dx = (star.side(0).level() - region.side(0).level()) as u32;
            let dy = (star.side(1).level() - region.side(1).level()) as u32;
            let (nx, ny) = (1usize << dx, 1usize << dy);
            let mut painted = vec![false; nx * ny];
            for t in &standard {
                if t.anchor == r.anchor {
                    continue;
                }
                let Some(cap) = t.rect.intersection(&region) else {
                    continue;
                };
                let range = |axis: usize, d: u32| {
                    let s = cap.side(axis);
                    let base = region.side(axis);
                    let rel = s.level() - base.level();
                    let first = if (rel as u32) <= d {
                        (s.index() - (base.index() << rel)) << (d - rel as u32)
                    } else {
                        (s.index() >> (rel as u32 - d)) - (base.index() << d)
                    };
                    let len = if (rel as u32) <= d { 1u64 << (d - rel as u32) } else { 1 };
                    (first as usize, len as usize)
                };
                let (x0, lx) = range(0, dx);
                let (y0, ly) = range(1, dy);
                for x in x0..x0 + lx {
                    for y in y0..y0 + ly {
                        painted[x * ny + y] = true;
                    }
                }
            }
            let cx = (star.side(0).index() - (region.side(0).index() << dx)) as usize;
            let cy = (star.side(1).index() - (region.side(1).index() << dy)) as usize;
            if painted[cx * ny + cy] {
                return Ok((
                    1,
                    vec![format!("{}: R* = {star} meets a foreign standard rectangle", r.rect)],
                ));
            }
            Ok((1, Vec::new()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport::merge("r-star-admissible", parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsets::construct_p;

    #[test]
    fn lemmas_hold_at_m3() {
        let p = construct_p(3).unwrap();
        for rep in [
            check_localize(&p).unwrap(),
            check_find_maximal(&p).unwrap(),
            check_exponential_decay(&p).unwrap(),
        ] {
            assert!(rep.checked > 0);
            assert!(
                rep.passed(),
                "{}: {:?}",
                rep.name,
                &rep.violations[..rep.violations.len().min(5)]
            );
        }
        let rep = check_r_star_admissible(&p, 1, 1).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
    }
}
