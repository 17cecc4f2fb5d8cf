//! Arrangements of axis-parallel dyadic boxes on a compressed grid.
//!
//! Every box endpoint is scaled to an integer by the finest level on its axis,
//! the distinct endpoints cut each axis into elementary segments, and a face is
//! a maximal set of elementary cells covered by exactly the same boxes.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::dyadic::{pow2, DyadicRect};
use crate::error::{Error, Result};

/// Exact volume accumulator: a machine word plus a big spill-over.
#[derive(Clone, Debug, Default)]
struct VolumeAcc {
    small: u128,
    big: BigUint,
}

impl VolumeAcc {
    fn add_small(&mut self, v: u128) {
        match self.small.checked_add(v) {
            Some(s) => self.small = s,
            None => {
                self.big += BigUint::from(self.small);
                self.small = v;
            }
        }
    }

    fn add_big(&mut self, v: BigUint) {
        self.big += v;
    }

    fn total(self) -> BigUint {
        self.big + BigUint::from(self.small)
    }
}

#[derive(Clone, Debug)]
pub struct Arrangement {
    dim: usize,
    boxes: Vec<DyadicRect>,
    /// Per axis: the finest level, so endpoints are integers in units of
    /// `2^{-scale}`.
    scales: Vec<i32>,
    breaks: Vec<Vec<u128>>,
    /// Per box, per axis: elementary segment range `[lo, hi)`.
    ranges: Vec<Vec<(usize, usize)>>,
}

/// Cells covered by the same set of boxes.
#[derive(Clone, Debug)]
pub struct Face {
    /// Indices of the covering boxes, ascending.
    pub members: Vec<u32>,
    /// Volume in units of `2^{-Σ scales}`.
    pub scaled_volume: BigUint,
    /// Flat cell ids, present when requested.
    pub cells: Vec<u64>,
}

fn endpoint(index: u128, level: i32, scale: i32) -> Result<u128> {
    let shift = (scale - level) as u32;
    if index != 0 && (shift >= 128 || index.leading_zeros() < shift) {
        return Err(Error::PrecisionExceeded { level: scale as i64 });
    }
    Ok(if index == 0 { 0 } else { index << shift })
}

impl Arrangement {
    pub fn new(boxes: &[DyadicRect]) -> Result<Self> {
        let dim = boxes.first().map_or(0, DyadicRect::dim);
        if let Some(b) = boxes.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.dim(),
            });
        }
        let scales: Vec<i32> = (0..dim)
            .map(|t| boxes.iter().map(|b| b.side(t).level()).max().unwrap_or(0))
            .collect();
        let mut raw: Vec<Vec<(u128, u128)>> = vec![Vec::with_capacity(boxes.len()); dim];
        let mut breaks: Vec<Vec<u128>> = vec![Vec::with_capacity(2 * boxes.len()); dim];
        for b in boxes {
            for t in 0..dim {
                let s = b.side(t);
                let lo = endpoint(s.index() as u128, s.level(), scales[t])?;
                let hi = endpoint(s.index() as u128 + 1, s.level(), scales[t])?;
                raw[t].push((lo, hi));
                breaks[t].push(lo);
                breaks[t].push(hi);
            }
        }
        for br in &mut breaks {
            br.sort_unstable();
            br.dedup();
        }
        let ranges = (0..boxes.len())
            .map(|i| {
                (0..dim)
                    .map(|t| {
                        let (lo, hi) = raw[t][i];
                        let a = breaks[t].binary_search(&lo).expect("endpoint present");
                        let b = breaks[t].binary_search(&hi).expect("endpoint present");
                        (a, b)
                    })
                    .collect()
            })
            .collect();
        Ok(Arrangement {
            dim,
            boxes: boxes.to_vec(),
            scales,
            breaks,
            ranges,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[DyadicRect] {
        &self.boxes
    }

    /// Number of elementary segments per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.breaks.iter().map(|b| b.len().saturating_sub(1)).collect()
    }

    pub fn scale_exponent(&self) -> i64 {
        self.scales.iter().map(|&s| s as i64).sum()
    }

    /// Converts a scaled volume to an exact rational.
    pub fn to_volume(&self, scaled: &BigUint) -> BigRational {
        BigRational::from_integer(BigInt::from(scaled.clone())) * pow2(-self.scale_exponent())
    }

    /// Scaled volume of box `i`.
    pub fn scaled_box_volume(&self, i: usize) -> BigUint {
        let mut v = BigUint::one();
        for t in 0..self.dim {
            let (a, b) = self.ranges[i][t];
            v *= BigUint::from(self.breaks[t][b] - self.breaks[t][a]);
        }
        v
    }

    /// Flat id → per-axis segment indices.
    pub fn cell_coords(&self, mut id: u64) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; self.dim];
        for t in (0..self.dim).rev() {
            out[t] = (id % shape[t] as u64) as usize;
            id /= shape[t] as u64;
        }
        out
    }

    /// Per-axis `[lo, hi)` of a cell as exact rationals.
    pub fn cell_bounds(&self, id: u64) -> Vec<(BigRational, BigRational)> {
        self.cell_coords(id)
            .into_iter()
            .enumerate()
            .map(|(t, e)| {
                let unit = pow2(-(self.scales[t] as i64));
                let lo = BigRational::from_integer(BigInt::from(self.breaks[t][e])) * &unit;
                let hi = BigRational::from_integer(BigInt::from(self.breaks[t][e + 1])) * &unit;
                (lo, hi)
            })
            .collect()
    }

    fn cell_volume(&self, coords: &[usize], acc: &mut VolumeAcc) {
        let mut small: Option<u128> = Some(1);
        for (t, &e) in coords.iter().enumerate() {
            let len = self.breaks[t][e + 1] - self.breaks[t][e];
            small = small.and_then(|s| s.checked_mul(len));
        }
        match small {
            Some(v) => acc.add_small(v),
            None => {
                let mut v = BigUint::one();
                for (t, &e) in coords.iter().enumerate() {
                    v *= BigUint::from(self.breaks[t][e + 1] - self.breaks[t][e]);
                }
                acc.add_big(v);
            }
        }
    }

    /// All faces covered by at least one box.
    pub fn faces(&self, keep_cells: bool) -> Vec<Face> {
        let n = self.boxes.len();
        if n == 0 {
            return Vec::new();
        }
        let words = n.div_ceil(64);
        let shape = self.shape();
        // Per axis, per segment: bitset of boxes covering it.
        let cover: Vec<Vec<Vec<u64>>> = (0..self.dim)
            .map(|t| {
                let mut c = vec![vec![0u64; words]; shape[t]];
                for (i, r) in self.ranges.iter().enumerate() {
                    let (a, b) = r[t];
                    for seg in &mut c[a..b] {
                        seg[i / 64] |= 1 << (i % 64);
                    }
                }
                c
            })
            .collect();
        let mut lookup: HashMap<Box<[u64]>, usize> = HashMap::new();
        let mut faces: Vec<(Box<[u64]>, VolumeAcc, Vec<u64>)> = Vec::new();
        let mut coords = vec![0usize; self.dim];
        let mut mask = vec![0u64; words];
        let total: u64 = shape.iter().map(|&s| s as u64).product();
        for id in 0..total {
            let mut rest = id;
            for t in (0..self.dim).rev() {
                coords[t] = (rest % shape[t] as u64) as usize;
                rest /= shape[t] as u64;
            }
            mask.copy_from_slice(&cover[0][coords[0]]);
            for t in 1..self.dim {
                for (m, c) in mask.iter_mut().zip(&cover[t][coords[t]]) {
                    *m &= c;
                }
            }
            if mask.iter().all(|&w| w == 0) {
                continue;
            }
            let f = match lookup.get(&mask[..]) {
                Some(&f) => f,
                None => {
                    let key: Box<[u64]> = mask.clone().into_boxed_slice();
                    lookup.insert(key.clone(), faces.len());
                    faces.push((key, VolumeAcc::default(), Vec::new()));
                    faces.len() - 1
                }
            };
            self.cell_volume(&coords, &mut faces[f].1);
            if keep_cells {
                faces[f].2.push(id);
            }
        }
        faces
            .into_iter()
            .map(|(mask, acc, cells)| {
                let members = (0..n as u32)
                    .filter(|&i| mask[i as usize / 64] >> (i % 64) & 1 == 1)
                    .collect();
                Face {
                    members,
                    scaled_volume: acc.total(),
                    cells,
                }
            })
            .collect()
    }

    /// Scaled volume of the union of all boxes.
    pub fn scaled_union_volume(&self) -> BigUint {
        self.faces(false).into_iter().map(|f| f.scaled_volume).sum()
    }

    pub fn union_volume(&self) -> BigRational {
        let v = self.scaled_union_volume();
        self.to_volume(&v)
    }
}

/// Exact volume of a union of dyadic boxes.
pub fn union_volume(boxes: &[DyadicRect]) -> Result<BigRational> {
    if boxes.is_empty() {
        return Ok(BigRational::zero());
    }
    Ok(Arrangement::new(boxes)?.union_volume())
}

/// Keeps only boxes not contained in another box of the list.
pub fn maximal_boxes(mut boxes: Vec<DyadicRect>) -> Vec<DyadicRect> {
    boxes.sort_by_key(|b| (b.level_sum(), b.clone()));
    boxes.dedup();
    let mut kept: Vec<DyadicRect> = Vec::new();
    for b in boxes {
        if !kept.iter().any(|k| k.contains(&b)) {
            kept.push(b);
        }
    }
    kept.sort();
    kept
}

/// Connected components of the intersection graph.
pub fn intersection_components(boxes: &[DyadicRect]) -> Vec<Vec<usize>> {
    let n = boxes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if boxes[i].intersects(&boxes[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

pub fn biguint_to_u128(v: &BigUint) -> Option<u128> {
    v.to_u128()
}
