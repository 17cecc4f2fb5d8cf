//! Independent 256-bit Luxemburg norm by bisection.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dyadic_sparse::certified::Bracket;
use dyadic_sparse::OrliczGauge;

use super::rational;

pub const P: usize = 256;
pub const RM: RoundingMode = RoundingMode::ToEven;

/// Slack when comparing the certified bracket with the reference.
pub const REL_SLACK_BITS: i32 = 180;

pub struct Reference {
    cc: Consts,
}

impl Reference {
    pub fn new() -> Self {
        Reference {
            cc: Consts::new().expect("constants cache"),
        }
    }

    pub fn big(&mut self, q: &BigRational) -> BigFloat {
        let n = BigFloat::parse(&q.numer().to_string(), Radix::Dec, P, RM, &mut self.cc);
        let d = BigFloat::parse(&q.denom().to_string(), Radix::Dec, P, RM, &mut self.cc);
        n.div(&d, P, RM)
    }

    fn phi(&mut self, gauge: &OrliczGauge, x: &BigFloat) -> BigFloat {
        match gauge {
            OrliczGauge::LogLog { alpha } => {
                let a = self.big(alpha);
                let e = self.cc.e(P, RM);
                let l = e.add(x, P, RM).ln(P, RM, &mut self.cc);
                x.mul(&l.pow(&a, P, RM, &mut self.cc), P, RM)
            }
            // `pow` can spin on exactly representable results, so integer
            // exponents go through `powi` and the rest through exp∘ln.
            OrliczGauge::Power { p } if p.is_integer() => x.powi(p.to_integer().try_into().unwrap(), P, RM),
            OrliczGauge::Power { p } => {
                let p = self.big(p);
                x.ln(P, RM, &mut self.cc).mul(&p, P, RM).exp(P, RM, &mut self.cc)
            }
        }
    }

    fn mass(&mut self, gauge: &OrliczGauge, dist: &[(BigFloat, BigFloat)], lambda: &BigFloat) -> BigFloat {
        let mut total = BigFloat::from_word(0, P);
        for (v, t) in dist {
            let x = v.div(lambda, P, RM);
            total = total.add(&t.mul(&self.phi(gauge, &x), P, RM), P, RM);
        }
        total
    }

    /// Solves `Σ t·φ(v/λ) = 1` for λ.
    pub fn luxemburg(&mut self, gauge: &OrliczGauge, dist: &[(BigRational, BigRational)]) -> BigFloat {
        let dist: Vec<_> = dist.iter().map(|(v, t)| (self.big(v), self.big(t))).collect();
        let one = BigFloat::from_word(1, P);
        let two = BigFloat::from_word(2, P);
        let mut lo = BigFloat::min_positive_normal(P);
        let mut hi = one.clone();
        while self.mass(gauge, &dist, &hi).cmp(&one).is_some_and(|c| c > 0) {
            lo = hi.clone();
            hi = hi.mul(&two, P, RM);
        }
        for _ in 0..P + 64 {
            let mid = lo.add(&hi, P, RM).div(&two, P, RM);
            if self.mass(gauge, &dist, &mid).cmp(&one).is_some_and(|c| c > 0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

pub fn random_dist(rng: &mut ChaCha8Rng) -> Vec<(BigRational, BigRational)> {
    let n = rng.gen_range(1..=5);
    let mut left = 64i64;
    let mut out = Vec::new();
    for _ in 0..n {
        if left == 0 {
            break;
        }
        let t = rng.gen_range(1..=left);
        left -= t;
        out.push((
            rational(rng.gen_range(1..=4000), rng.gen_range(1..=40)),
            rational(t, 64),
        ));
    }
    out
}

pub fn gauges() -> Vec<OrliczGauge> {
    vec![
        OrliczGauge::loglog(rational(0, 1)).unwrap(),
        OrliczGauge::loglog(rational(1, 4)).unwrap(),
        OrliczGauge::loglog(rational(49, 100)).unwrap(),
        OrliczGauge::loglog(rational(1, 1)).unwrap(),
        OrliczGauge::power(rational(3, 2)).unwrap(),
        OrliczGauge::power(rational(2, 1)).unwrap(),
        OrliczGauge::power(rational(3, 1)).unwrap(),
    ]
}

/// `bracket` widened by `2^-REL_SLACK_BITS` contains `r`.
pub fn encloses(reference: &mut Reference, bracket: &Bracket, r: &BigFloat) -> bool {
    let one = BigFloat::from_word(1, P);
    let slack = one.div(&BigFloat::from_word(2, P).powi(REL_SLACK_BITS as usize, P, RM), P, RM);
    let lo = reference.big(&bracket.lo).mul(&one.sub(&slack, P, RM), P, RM);
    let hi = reference.big(&bracket.hi).mul(&one.add(&slack, P, RM), P, RM);
    lo.cmp(r).is_some_and(|c| c <= 0) && r.cmp(&hi).is_some_and(|c| c <= 0)
}
