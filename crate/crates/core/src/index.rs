//! Planar point index answering dyadic rectangle queries.

use std::collections::HashMap;

use crate::dyadic::{Coord, DyadicRect, PRECISION};

/// Buckets points by the prefix of their x-coordinate at every level up to a
/// cutoff; each bucket is sorted by y so a dyadic rectangle query is two
/// binary searches plus the output.
#[derive(Clone, Debug, Default)]
pub struct PointIndex {
    points: Vec<(Coord, Coord)>,
    levels: Vec<HashMap<u64, Vec<(u64, u32)>>>,
}

impl PointIndex {
    pub fn new(points: impl IntoIterator<Item = (Coord, Coord)>) -> Self {
        let points: Vec<_> = points.into_iter().collect();
        let n = points.len().max(1);
        let depth = (usize::BITS - n.leading_zeros() + 4).min(PRECISION);
        let mut levels = Vec::with_capacity(depth as usize + 1);
        for level in 0..=depth {
            let mut buckets: HashMap<u64, Vec<(u64, u32)>> = HashMap::new();
            for (id, (x, y)) in points.iter().enumerate() {
                buckets.entry(x.prefix(level)).or_default().push((y.raw(), id as u32));
            }
            for b in buckets.values_mut() {
                b.sort_unstable();
            }
            levels.push(buckets);
        }
        PointIndex { points, levels }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: u32) -> (Coord, Coord) {
        self.points[id as usize]
    }

    /// Calls `f` with the id of every point in `rect` (clipped to the unit
    /// square).
    pub fn for_each_in(&self, rect: &DyadicRect, mut f: impl FnMut(u32)) {
        debug_assert_eq!(rect.dim(), 2);
        let Some(rect) = rect.clip_to_unit() else {
            return;
        };
        let (ix, iy) = (rect.side(0), rect.side(1));
        let lx = ix.level() as u32;
        let used = lx.min(self.levels.len() as u32 - 1);
        let key = ix.index() >> (lx - used);
        let Some(bucket) = self.levels[used as usize].get(&key) else {
            return;
        };
        let ly = iy.level() as u32;
        let lo = iy.index() << (PRECISION - ly);
        let hi = (iy.index() + 1) << (PRECISION - ly);
        let start = bucket.partition_point(|&(y, _)| y < lo);
        let end = bucket.partition_point(|&(y, _)| y < hi);
        for &(_, id) in &bucket[start..end] {
            if used == lx || ix.contains_coord(self.points[id as usize].0) {
                f(id);
            }
        }
    }

    pub fn query(&self, rect: &DyadicRect) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_in(rect, |id| out.push(id));
        out
    }

    pub fn count(&self, rect: &DyadicRect) -> usize {
        let mut n = 0;
        self.for_each_in(rect, |_| n += 1);
        n
    }
}
