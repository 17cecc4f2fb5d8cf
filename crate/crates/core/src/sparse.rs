//! Sparse and Carleson collections of dyadic rectangles: exact sparsity
//! decisions by max-flow over arrangement faces, Carleson constants, sparse
//! forms and the greedy adversary.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{pow2, rational_str, DyadicInterval, DyadicRect};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::geometry::{intersection_components, union_volume, Arrangement};
use crate::maximal::omega;
use crate::measure::{AtomicMeasure, RectMass};

/// A finite set of dyadic rectangles with non-negative weights `α_R`
/// (1 unless given).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RectCollection {
    rects: Vec<DyadicRect>,
    weights: Vec<BigRational>,
}

impl RectCollection {
    pub fn new(rects: impl IntoIterator<Item = DyadicRect>) -> Self {
        Self::weighted(rects.into_iter().map(|r| (r, BigRational::one()))).expect("unit weights are valid")
    }

    /// Repeated rectangles add their weights.
    pub fn weighted(items: impl IntoIterator<Item = (DyadicRect, BigRational)>) -> Result<Self> {
        let mut map: BTreeMap<DyadicRect, BigRational> = BTreeMap::new();
        let mut dim = None;
        for (r, w) in items {
            if w.is_negative() {
                return Err(Error::InvalidWeight(format!("{r} has weight {w}")));
            }
            match dim {
                None => dim = Some(r.dim()),
                Some(d) if d != r.dim() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: r.dim(),
                    })
                }
                _ => {}
            }
            *map.entry(r).or_insert_with(BigRational::zero) += w;
        }
        let (rects, weights) = map.into_iter().unzip();
        Ok(RectCollection { rects, weights })
    }

    pub fn rects(&self) -> &[DyadicRect] {
        &self.rects
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &BigRational {
        &self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rects.first().map_or(0, DyadicRect::dim)
    }

    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(One::is_one)
    }

    fn subset(&self, idx: &[usize]) -> RectCollection {
        RectCollection {
            rects: idx.iter().map(|&i| self.rects[i].clone()).collect(),
            weights: idx.iter().map(|&i| self.weights[i].clone()).collect(),
        }
    }

    /// `Σ α_R |R|`.
    pub fn weighted_area(&self) -> BigRational {
        self.rects
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r.area().to_rational())
            .sum()
    }
}

/// JSON form: rectangles in text encoding, weights as `"p/q"` strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollectionFile {
    pub rects: Vec<DyadicRect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<String>>,
}

impl CollectionFile {
    pub fn from_collection(c: &RectCollection) -> Self {
        let weights = (!c.is_unweighted()).then(|| c.weights.iter().map(crate::dyadic::format_rational).collect());
        CollectionFile {
            rects: c.rects.clone(),
            weights,
        }
    }

    pub fn into_collection(self) -> Result<RectCollection> {
        match self.weights {
            None => Ok(RectCollection::new(self.rects)),
            Some(ws) => {
                if ws.len() != self.rects.len() {
                    return Err(Error::Parse(format!(
                        "{} rects but {} weights",
                        self.rects.len(),
                        ws.len()
                    )));
                }
                let ws = ws
                    .iter()
                    .map(|w| crate::dyadic::parse_rational(w))
                    .collect::<Result<Vec<_>>>()?;
                RectCollection::weighted(self.rects.into_iter().zip(ws))
            }
        }
    }
}

/// A face of the arrangement: the points covered by exactly `members`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateFace {
    pub members: Vec<usize>,
    #[serde(with = "rational_str")]
    pub area: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub face: usize,
    #[serde(with = "rational_str")]
    pub fraction: BigRational,
}

/// `E(R)` = the assigned fractions of faces inside `R`; pairwise disjoint
/// because no face is handed out more than once in total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SparsityCertificate {
    #[serde(with = "rational_str")]
    pub eta: BigRational,
    pub faces: Vec<CertificateFace>,
    /// Per rectangle, in collection order.
    pub assignment: Vec<Vec<Assignment>>,
}

/// A subfamily with `η·Σ α_R|R| > |∪𝒢|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HallViolation {
    #[serde(with = "rational_str")]
    pub eta: BigRational,
    pub family: Vec<usize>,
    #[serde(with = "rational_str")]
    pub weighted_area: BigRational,
    #[serde(with = "rational_str")]
    pub union_area: BigRational,
}

impl HallViolation {
    /// `|∪𝒢| / Σ α_R|R|`, the sparsity this family allows.
    pub fn ratio(&self) -> BigRational {
        &self.union_area / &self.weighted_area
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SparsityOutcome {
    Certified(SparsityCertificate),
    Violated(HallViolation),
}

impl SparsityOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, SparsityOutcome::Certified(_))
    }
}

fn to_u128(v: &BigInt) -> Result<u128> {
    v.to_u128().ok_or(Error::PrecisionExceeded { level: v.bits() as i64 })
}

fn checked_mul(a: u128, b: u128) -> Result<u128> {
    a.checked_mul(b).ok_or(Error::PrecisionExceeded { level: 128 })
}

enum ComponentOutcome {
    Certified(Vec<CertificateFace>, Vec<Vec<Assignment>>),
    Violated(Vec<usize>),
}

/// Flow decision on one intersection component (indices local to `c`).
fn solve_component(c: &RectCollection, eta: &BigRational) -> Result<ComponentOutcome> {
    let n = c.len();
    let arr = Arrangement::new(c.rects())?;
    let faces = arr.faces(false);
    let den = c.weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let p = to_u128(eta.numer())?;
    let q = to_u128(eta.denom())?;
    let den = to_u128(&den)?;
    let s = 0;
    let t = n + faces.len() + 1;
    let mut g = FlowNetwork::new(t + 1);
    let mut total = 0u128;
    let mut source_caps = Vec::with_capacity(n);
    for i in 0..n {
        let w = to_u128(&(c.weights[i].numer() * (BigInt::from(den) / c.weights[i].denom())))?;
        let vol = to_u128(&BigInt::from(arr.scaled_box_volume(i)))?;
        let cap = checked_mul(checked_mul(p, w)?, vol)?;
        total = total.checked_add(cap).ok_or(Error::PrecisionExceeded { level: 128 })?;
        source_caps.push(cap);
        g.add_edge(s, 1 + i, cap);
    }
    let infinite = total.checked_add(1).ok_or(Error::PrecisionExceeded { level: 128 })?;
    let mut face_caps = Vec::with_capacity(faces.len());
    let mut member_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (f, face) in faces.iter().enumerate() {
        let vol = to_u128(&BigInt::from(face.scaled_volume.clone()))?;
        let cap = checked_mul(checked_mul(q, den)?, vol)?;
        face_caps.push(cap);
        g.add_edge(1 + n + f, t, cap);
        for &i in &face.members {
            let e = g.add_edge(1 + i as usize, 1 + n + f, infinite);
            member_edges[i as usize].push((f, e));
        }
    }
    let flow = g.max_flow(s, t);
    if flow == total {
        let cert_faces = faces
            .iter()
            .map(|f| CertificateFace {
                members: f.members.iter().map(|&i| i as usize).collect(),
                area: arr.to_volume(&f.scaled_volume),
            })
            .collect();
        let assignment = member_edges
            .iter()
            .map(|edges| {
                edges
                    .iter()
                    .filter_map(|&(f, e)| {
                        let fl = g.flow(e);
                        (fl > 0).then(|| Assignment {
                            face: f,
                            fraction: BigRational::new(BigInt::from(fl), BigInt::from(face_caps[f])),
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(ComponentOutcome::Certified(cert_faces, assignment))
    } else {
        let side = g.source_side(s);
        let family: Vec<usize> = (0..n).filter(|&i| side[1 + i] && source_caps[i] > 0).collect();
        Ok(ComponentOutcome::Violated(family))
    }
}

/// Decides whether `S` is `η`-sparse (with `|E(R)| ≥ η α_R |R|`).
pub fn check_sparse(s: &RectCollection, eta: &BigRational) -> Result<SparsityOutcome> {
    if eta.is_negative() {
        return Err(Error::Precondition(format!("eta = {eta} is negative")));
    }
    let mut faces = Vec::new();
    let mut assignment = vec![Vec::new(); s.len()];
    if eta.is_zero() {
        return Ok(SparsityOutcome::Certified(SparsityCertificate {
            eta: eta.clone(),
            faces,
            assignment,
        }));
    }
    for comp in intersection_components(s.rects()) {
        let sub = s.subset(&comp);
        match solve_component(&sub, eta)? {
            ComponentOutcome::Certified(cf, asg) => {
                let offset = faces.len();
                faces.extend(cf.into_iter().map(|mut f| {
                    f.members = f.members.iter().map(|&i| comp[i]).collect();
                    f
                }));
                for (local, list) in asg.into_iter().enumerate() {
                    assignment[comp[local]] = list
                        .into_iter()
                        .map(|a| Assignment {
                            face: a.face + offset,
                            fraction: a.fraction,
                        })
                        .collect();
                }
            }
            ComponentOutcome::Violated(local) => {
                let family: Vec<usize> = local.iter().map(|&i| comp[i]).collect();
                let fam = s.subset(&family);
                let v = HallViolation {
                    eta: eta.clone(),
                    family,
                    weighted_area: fam.weighted_area(),
                    union_area: union_volume(fam.rects())?,
                };
                verify_violation(s, &v)?;
                return Ok(SparsityOutcome::Violated(v));
            }
        }
    }
    let cert = SparsityCertificate {
        eta: eta.clone(),
        faces,
        assignment,
    };
    verify_certificate(s, &cert)?;
    Ok(SparsityOutcome::Certified(cert))
}

/// Re-checks a certificate against a freshly built arrangement of `S`.
pub fn verify_certificate(s: &RectCollection, cert: &SparsityCertificate) -> Result<()> {
    let bad = |msg: String| Err(Error::InvariantViolation(msg));
    if cert.assignment.len() != s.len() {
        return bad(format!(
            "{} assignment lists for {} rectangles",
            cert.assignment.len(),
            s.len()
        ));
    }
    let mut actual: HashMap<Vec<usize>, BigRational> = HashMap::new();
    if !s.is_empty() {
        let arr = Arrangement::new(s.rects())?;
        for f in arr.faces(false) {
            actual.insert(
                f.members.iter().map(|&i| i as usize).collect(),
                arr.to_volume(&f.scaled_volume),
            );
        }
    }
    for (k, f) in cert.faces.iter().enumerate() {
        if actual.get(&f.members) != Some(&f.area) {
            return bad(format!(
                "face {k} with members {:?} is not a face of area {}",
                f.members, f.area
            ));
        }
    }
    let mut used = vec![BigRational::zero(); cert.faces.len()];
    for (i, list) in cert.assignment.iter().enumerate() {
        let mut got = BigRational::zero();
        for a in list {
            let Some(face) = cert.faces.get(a.face) else {
                return bad(format!("rectangle {i} uses unknown face {}", a.face));
            };
            if a.fraction.is_negative() || a.fraction > BigRational::one() {
                return bad(format!("fraction {} out of range", a.fraction));
            }
            if face.members.binary_search(&i).is_err() {
                return bad(format!("face {} is not inside rectangle {i}", a.face));
            }
            used[a.face] += &a.fraction;
            got += &a.fraction * &face.area;
        }
        let need = &cert.eta * s.weight(i) * s.rects()[i].area().to_rational();
        if got < need {
            return bad(format!("rectangle {i} receives {got} < {need}"));
        }
    }
    if let Some(k) = used.iter().position(|u| u > &BigRational::one()) {
        return bad(format!("face {k} is handed out {} times", used[k]));
    }
    Ok(())
}

/// Re-checks a Hall violation by direct area computation.
pub fn verify_violation(s: &RectCollection, v: &HallViolation) -> Result<()> {
    let fam = s.subset(&v.family);
    let union = union_volume(fam.rects())?;
    if union != v.union_area || fam.weighted_area() != v.weighted_area {
        return Err(Error::InvariantViolation("violation areas do not match".into()));
    }
    if &v.eta * &v.weighted_area <= union {
        return Err(Error::InvariantViolation(format!(
            "family {:?} does not violate eta = {}",
            v.family, v.eta
        )));
    }
    Ok(())
}

/// Exact maximal sparsity `η*` and Carleson constant `Λ = 1/η*`.
#[derive(Clone, Debug, Serialize)]
pub struct CarlesonReport {
    #[serde(with = "rational_str")]
    pub eta_star: BigRational,
    #[serde(with = "rational_str")]
    pub lambda_lo: BigRational,
    #[serde(with = "rational_str")]
    pub lambda_hi: BigRational,
    /// Members whose union `Ω` attains `Λ`.
    pub witness: Vec<usize>,
    #[serde(with = "rational_str")]
    pub witness_area: BigRational,
    pub iterations: usize,
}

impl CarlesonReport {
    pub fn lambda(&self) -> &BigRational {
        &self.lambda_lo
    }
}

/// Dinkelbach iteration on the parametric cut: each infeasible `η` yields a
/// family with a strictly smaller ratio `|∪𝒢|/Σα|R|`, and the first feasible
/// value is `η*` exactly.
pub fn max_sparsity(s: &RectCollection) -> Result<CarlesonReport> {
    let positive: Vec<usize> = (0..s.len()).filter(|&i| s.weight(i).is_positive()).collect();
    let Some(&first) = positive.iter().max_by(|&&a, &&b| s.weight(a).cmp(s.weight(b))) else {
        return Err(Error::Precondition(
            "collection has no positively weighted member".into(),
        ));
    };
    let mut eta = s.weight(first).recip();
    let mut witness = vec![first];
    let mut iterations = 0;
    loop {
        iterations += 1;
        match check_sparse(s, &eta)? {
            SparsityOutcome::Certified(_) => break,
            SparsityOutcome::Violated(v) => {
                let next = v.ratio();
                if next >= eta {
                    return Err(Error::InvariantViolation("parametric cut did not decrease eta".into()));
                }
                eta = next;
                witness = v.family;
            }
        }
    }
    let lambda = eta.recip();
    let witness_area = union_volume(&s.subset(&witness).rects)?;
    Ok(CarlesonReport {
        eta_star: eta,
        lambda_lo: lambda.clone(),
        lambda_hi: lambda,
        witness,
        witness_area,
        iterations,
    })
}

/// `Σ_{R ⊆ ∪Ω} α_R|R|` against `|∪Ω|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CarlesonSum {
    #[serde(with = "rational_str")]
    pub sum: BigRational,
    #[serde(with = "rational_str")]
    pub area: BigRational,
    #[serde(with = "rational_str")]
    pub ratio: BigRational,
}

/// Whether `r` is covered by the union of `omega`.
pub fn covered_by(r: &DyadicRect, omega: &[DyadicRect]) -> Result<bool> {
    let caps: Vec<DyadicRect> = omega.iter().filter_map(|o| o.intersection(r)).collect();
    if caps.iter().any(|c| c == r) {
        return Ok(true);
    }
    Ok(!caps.is_empty() && union_volume(&caps)? == r.area().to_rational())
}

pub fn carleson_sum(s: &RectCollection, omega: &[DyadicRect]) -> Result<CarlesonSum> {
    let area = union_volume(omega)?;
    if area.is_zero() {
        return Err(Error::Precondition("empty open set".into()));
    }
    let mut sum = BigRational::zero();
    for (r, w) in s.rects().iter().zip(s.weights()) {
        if covered_by(r, omega)? {
            sum += w * r.area().to_rational();
        }
    }
    let ratio = &sum / &area;
    Ok(CarlesonSum { sum, area, ratio })
}

/// Largest Carleson ratio over the unions of all non-empty subfamilies,
/// with the maximizing subfamily. Exponential; `N ≤ 20`.
pub fn brute_force_carleson(s: &RectCollection) -> Result<(BigRational, Vec<usize>)> {
    let n = s.len();
    if n == 0 || n > 20 {
        return Err(Error::ResourceCap {
            requested: n as u128,
            cap: 20,
        });
    }
    let arr = Arrangement::new(s.rects())?;
    let faces: Vec<(u32, u128)> = arr
        .faces(false)
        .into_iter()
        .map(|f| {
            let vol = to_u128(&BigInt::from(f.scaled_volume))?;
            Ok((f.members.iter().fold(0u32, |m, &i| m | 1 << i), vol))
        })
        .collect::<Result<_>>()?;
    let masses: Vec<BigRational> = (0..n)
        .map(|i| s.weight(i) * s.rects()[i].area().to_rational())
        .collect();
    let best = (1u32..1 << n)
        .into_par_iter()
        .map(|sub| {
            let area: u128 = faces.iter().filter(|(m, _)| m & sub != 0).map(|(_, v)| v).sum();
            // R ⊆ ∪𝒢 iff every face of R meets 𝒢.
            let mut sum = BigRational::zero();
            for (i, mass) in masses.iter().enumerate() {
                if faces.iter().all(|(m, _)| m >> i & 1 == 0 || m & sub != 0) {
                    sum += mass;
                }
            }
            (sum / arr.to_volume(&area.into()), sub)
        })
        .reduce(
            || (BigRational::zero(), 0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let members = (0..n).filter(|&i| best.1 >> i & 1 == 1).collect();
    Ok((best.0, members))
}

/// `Σ_R α_R μ(R)ν(R)/|R|`.
pub fn form_11(s: &RectCollection, mu: &impl RectMass, nu: &impl RectMass) -> BigRational {
    s.rects()
        .par_iter()
        .zip(s.weights())
        .map(|(r, w)| {
            let a = mu.mass(r);
            if a.is_zero() {
                return BigRational::zero();
            }
            w * a * nu.mass(r) / r.area().to_rational()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// One eccentricity class `S_j`.
#[derive(Clone, Debug, Serialize)]
pub struct EccentricityClass {
    pub j: u32,
    pub rects: Vec<DyadicRect>,
    /// Every member lies in `Ω_j`.
    pub inside_omega: bool,
}

/// `S_j = {R : |R̄| = 2^{-j}|R|}` with `R̄ = R ∩ [0,1)^2`.
pub fn split_by_eccentricity(s: &RectCollection) -> Result<Vec<EccentricityClass>> {
    let mut classes: BTreeMap<u32, Vec<DyadicRect>> = BTreeMap::new();
    for r in s.rects() {
        let clipped = r
            .clip_to_unit()
            .ok_or_else(|| Error::Precondition(format!("{r} misses the unit square")))?;
        let j = (r.area().exponent() - clipped.area().exponent()) as u32;
        classes.entry(j).or_default().push(r.clone());
    }
    classes
        .into_iter()
        .map(|(j, rects)| {
            let om = omega(j)?.rects;
            let inside_omega = rects
                .iter()
                .map(|r| covered_by(r, &om))
                .collect::<Result<Vec<_>>>()?
                .iter()
                .all(|&b| b);
            Ok(EccentricityClass { j, rects, inside_omega })
        })
        .collect()
}

/// `K = k(1 + 2^{2k}/m)`.
pub fn upper_bound_factor(m: u32, k: u32) -> BigRational {
    BigRational::from_integer(k.into()) * (BigRational::one() + pow2(2 * k as i64) / BigInt::from(m))
}

/// Measured constant in `⟨μ⟩_R⟨ν⟩_R ≤ C·K·(|R̄|/|R|)^2`.
#[derive(Clone, Debug, Serialize)]
pub struct ProductAveragesReport {
    pub m: u32,
    pub k: u32,
    #[serde(with = "rational_str")]
    pub constant: BigRational,
    pub argmax: Option<DyadicRect>,
    pub pool_size: usize,
    pub nonzero: usize,
}

/// Every unit rectangle with level sum at most `max_level_sum`, plus every
/// one of them with side `[0,1)` dilated to `[0,2^a)`, `a ≤ max_dilation`.
pub fn default_product_pool(max_level_sum: u32, max_dilation: u32) -> Vec<DyadicRect> {
    let base = crate::orlicz::unit_rect_pool(0..=max_level_sum);
    let mut out = crate::orlicz::ambient_pool(&base, max_dilation);
    out.extend(base);
    out
}

pub fn product_averages_check(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    m: u32,
    k: u32,
    pool: &[DyadicRect],
) -> ProductAveragesReport {
    let factor = upper_bound_factor(m, k);
    // ⟨μ⟩_R⟨ν⟩_R(|R|/|R̄|)^2 = μ(R̄)ν(R̄)/|R̄|^2.
    let best = pool
        .par_iter()
        .filter_map(|r| {
            let clipped = r.clip_to_unit()?;
            let a = mu.mass(&clipped);
            if a.is_zero() {
                return None;
            }
            let b = nu.mass(&clipped);
            if b.is_zero() {
                return None;
            }
            Some((a * b * pow2(2 * clipped.level_sum()), r.clone()))
        })
        .fold(
            || (BigRational::zero(), None::<DyadicRect>, 0usize),
            |acc, (v, r)| {
                if v > acc.0 {
                    (v, Some(r), acc.2 + 1)
                } else {
                    (acc.0, acc.1, acc.2 + 1)
                }
            },
        )
        .reduce(
            || (BigRational::zero(), None, 0),
            |a, b| {
                let n = a.2 + b.2;
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1 && b.1.is_some()) {
                    (b.0, b.1, n)
                } else {
                    (a.0, a.1, n)
                }
            },
        );
    ProductAveragesReport {
        m,
        k,
        constant: best.0 / factor,
        argmax: best.1,
        pool_size: pool.len(),
        nonzero: best.2,
    }
}

/// Candidate rectangles for the greedy adversary: unit rectangles with level
/// sum at most `max_level_sum` charged by both measures. Ordered by
/// `⟨μ⟩_R⟨ν⟩_R` (form gained per unit of area an `η`-sparse family must
/// reserve), then by the form term `μ(R)ν(R)/|R|`. The returned score is the
/// form term.
pub fn candidate_pool(mu: &AtomicMeasure, nu: &AtomicMeasure, max_level_sum: u32) -> Vec<(DyadicRect, BigRational)> {
    let shapes: Vec<(u32, u32)> = (0..=max_level_sum)
        .flat_map(|s| (0..=s).map(move |a| (a, s - a)))
        .collect();
    let mut pool: Vec<(DyadicRect, BigRational, BigRational)> = shapes
        .par_iter()
        .flat_map_iter(|&(a, b)| {
            let rects: HashSet<DyadicRect> = mu
                .atoms()
                .iter()
                .filter_map(|p| DyadicRect::containing(p, &[a, b]).ok())
                .collect();
            let mut out: Vec<(DyadicRect, BigRational, BigRational)> = rects
                .into_iter()
                .filter_map(|r| {
                    let y = nu.mass(&r);
                    if y.is_zero() {
                        return None;
                    }
                    let term = mu.mass(&r) * y * pow2(r.level_sum());
                    let density = &term * pow2(r.level_sum());
                    Some((r, density, term))
                })
                .collect();
            out.sort_by(|x, y| x.0.cmp(&y.0));
            out.into_iter()
        })
        .collect();
    pool.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| y.2.cmp(&x.2)).then_with(|| x.0.cmp(&y.0)));
    pool.into_iter().map(|(r, _, term)| (r, term)).collect()
}

/// Outcome of the greedy search: a lower bound on the best `η`-sparse form.
#[derive(Clone, Debug, Serialize)]
pub struct GreedyResult {
    #[serde(with = "rational_str")]
    pub eta: BigRational,
    pub collection: Vec<DyadicRect>,
    #[serde(with = "rational_str")]
    pub form: BigRational,
    pub pool_size: usize,
    pub examined: usize,
    pub fast_accepts: usize,
    pub flow_checks: usize,
    #[serde(skip)]
    pub certificate: SparsityCertificate,
}

/// Adds pool rectangles in order while the collection stays `η`-sparse.
/// A candidate whose part outside the current union already has area
/// `η|R|` is accepted directly; otherwise the flow decides on its
/// intersection component.
pub fn greedy_max_form(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    eta: &BigRational,
    pool: &[(DyadicRect, BigRational)],
    budget: usize,
) -> Result<GreedyResult> {
    if !eta.is_positive() || eta > &BigRational::one() {
        return Err(Error::Precondition(format!("eta = {eta} must lie in (0, 1]")));
    }
    let mut chosen: Vec<DyadicRect> = Vec::new();
    let (mut examined, mut fast_accepts, mut flow_checks) = (0, 0, 0);
    for (r, _) in pool.iter().take(budget) {
        examined += 1;
        let area = r.area().to_rational();
        let caps: Vec<DyadicRect> = chosen.iter().filter_map(|c| c.intersection(r)).collect();
        let covered = if caps.is_empty() {
            BigRational::zero()
        } else {
            union_volume(&caps)?
        };
        if &area - covered >= eta * &area {
            chosen.push(r.clone());
            fast_accepts += 1;
            continue;
        }
        // Component of r in the intersection graph of chosen ∪ {r}.
        let mut comp: Vec<DyadicRect> = vec![r.clone()];
        let mut taken = vec![false; chosen.len()];
        let mut frontier = vec![r.clone()];
        while let Some(x) = frontier.pop() {
            for (i, c) in chosen.iter().enumerate() {
                if !taken[i] && c.intersects(&x) {
                    taken[i] = true;
                    comp.push(c.clone());
                    frontier.push(c.clone());
                }
            }
        }
        flow_checks += 1;
        if check_sparse(&RectCollection::new(comp), eta)?.is_certified() {
            chosen.push(r.clone());
        }
    }
    let collection = RectCollection::new(chosen);
    let certificate = match check_sparse(&collection, eta)? {
        SparsityOutcome::Certified(c) => c,
        SparsityOutcome::Violated(_) => {
            return Err(Error::InvariantViolation("greedy collection lost sparsity".into()));
        }
    };
    let form = form_11(&collection, mu, nu);
    Ok(GreedyResult {
        eta: eta.clone(),
        collection: collection.rects().to_vec(),
        form,
        pool_size: pool.len(),
        examined,
        fast_accepts,
        flow_checks,
        certificate,
    })
}

/// `|J ∩ [0,1)|` for an interval of the ambient line.
fn unit_overlap(j: &DyadicInterval) -> BigRational {
    if j.is_unit() {
        j.len().to_rational()
    } else if j.level() <= 0 && j.index() == 0 {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

/// `β_R = Σ_J α_{R×J}|J|(|J ∩ [0,1)|/|J|)^2` over the last axis.
pub fn tensor_project(alpha3: &RectCollection) -> Result<RectCollection> {
    let mut beta: BTreeMap<DyadicRect, BigRational> = BTreeMap::new();
    for (r, w) in alpha3.rects().iter().zip(alpha3.weights()) {
        let base = r.drop_last().ok_or_else(|| Error::DimensionMismatch {
            expected: 2,
            found: r.dim(),
        })?;
        let j = r.side(r.dim() - 1);
        let len = j.len().to_rational();
        let frac = unit_overlap(j) / &len;
        let term = w * &len * &frac * &frac;
        if !term.is_zero() {
            *beta.entry(base).or_insert_with(BigRational::zero) += term;
        }
    }
    RectCollection::weighted(beta)
}
