//! Tensor Haar functions and the bi-parameter martingale transform pairing.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::dyadic::{pow2, DyadicPoint, DyadicRect};
use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::pointsets::ZSet;

/// `sign · (√2)^{sqrt2_exp}`; the exponent is the level sum, so a product of
/// two evaluations on the same rectangle is rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaarValue {
    pub sign: i8,
    pub sqrt2_exp: i64,
}

impl HaarValue {
    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Exact product of two values.
    pub fn times(&self, other: &HaarValue) -> BigRational {
        if self.sign == 0 || other.sign == 0 {
            return BigRational::zero();
        }
        let e = self.sqrt2_exp + other.sqrt2_exp;
        assert!(e % 2 == 0, "product of Haar values on different parities");
        pow2(e / 2) * BigInt::from(self.sign * other.sign)
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * (self.sqrt2_exp as f64 / 2.0).exp2()
    }
}

/// `±1` on the left/right child along every axis, zero outside.
fn haar_sign(r: &DyadicRect, p: &DyadicPoint) -> i8 {
    if !r.contains_point(p) {
        return 0;
    }
    let mut s = 1i8;
    for (side, &x) in r.sides().iter().zip(p.coords()) {
        let left = side.children().expect("level below precision")[0];
        if !left.contains_coord(x) {
            s = -s;
        }
    }
    s
}

/// `h_R(p) = Π_t |I_t|^{-1/2}(1_{left child} − 1_{right child})(p_t)`.
pub fn haar_eval(r: &DyadicRect, p: &DyadicPoint) -> HaarValue {
    HaarValue {
        sign: haar_sign(r, p),
        sqrt2_exp: r.level_sum(),
    }
}

/// Finitely supported signs on dyadic rectangles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HaarSymbol {
    entries: BTreeMap<DyadicRect, i8>,
}

impl HaarSymbol {
    pub fn new() -> Self {
        HaarSymbol::default()
    }

    pub fn insert(&mut self, r: DyadicRect, sign: i8) -> Result<()> {
        if !(-1..=1).contains(&sign) {
            return Err(Error::InvalidWeight(format!("symbol value {sign} on {r}")));
        }
        if !r.is_unit() {
            return Err(Error::OutOfUniverse(format!("symbol support {r}")));
        }
        if sign == 0 {
            self.entries.remove(&r);
        } else {
            self.entries.insert(r, sign);
        }
        Ok(())
    }

    pub fn get(&self, r: &DyadicRect) -> i8 {
        self.entries.get(r).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicRect, i8)> {
        self.entries.iter().map(|(r, &s)| (r, s))
    }
}

/// `σ` supported on `{T_R}` with `σ_T h_T(p_R) h_T(z_R) = +|T|^{-1}`.
pub fn build_sigma(points: &[DyadicPoint], z: &ZSet) -> Result<HaarSymbol> {
    let mut sigma = HaarSymbol::new();
    for w in z.witnesses() {
        let s = haar_sign(&w.t_rect, &points[w.anchor]) * haar_sign(&w.t_rect, &w.z);
        if s == 0 {
            return Err(Error::InvariantViolation(format!(
                "T_R = {} misses its anchor or witness",
                w.t_rect
            )));
        }
        if sigma.entries.insert(w.t_rect.clone(), s).is_some() {
            return Err(Error::InvariantViolation(format!("T_R = {} repeats", w.t_rect)));
        }
    }
    Ok(sigma)
}

/// `Σ_p μ({p}) sign_T(p)` over the atoms in `T`.
fn signed_mass(mu: &AtomicMeasure, t: &DyadicRect) -> BigRational {
    mu.atoms_in(t)
        .into_iter()
        .map(|i| &mu.weights()[i] * BigInt::from(haar_sign(t, &mu.atoms()[i])))
        .sum()
}

/// `⟨T_σ μ, ν⟩ = Σ_T σ_T ⟨μ, h_T⟩⟨ν, h_T⟩`.
pub fn martingale_pairing(sigma: &HaarSymbol, mu: &AtomicMeasure, nu: &AtomicMeasure) -> BigRational {
    let terms: Vec<(&DyadicRect, i8)> = sigma.iter().collect();
    let parts: Vec<BigRational> = terms
        .par_iter()
        .map(|(t, s)| {
            let a = signed_mass(mu, t);
            if a.is_zero() {
                return BigRational::zero();
            }
            let b = signed_mass(nu, t);
            // h_T(x)h_T(y) = sign·|T|^{-1}
            a * b * pow2(t.level_sum()) * BigInt::from(*s)
        })
        .collect();
    parts.into_iter().sum()
}
