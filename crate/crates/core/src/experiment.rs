//! End-to-end runs: build `𝒫`, `𝒵` and the measures, run every check, and
//! collect exact values into a report.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{format_rational, rational_str, DyadicRect};
use crate::error::{Error, Result};
use crate::haar::{build_sigma, martingale_pairing};
use crate::maximal::{omega, pairing_terms};
use crate::measure::{build_f_simple, build_mu, build_nu, OrliczGauge};
use crate::orlicz::{form_phi, orlicz_constants, OrliczConstants};
use crate::pointsets::{
    construct_p, construct_z_with_ell, verify_pigeonhole, verify_separation, verify_trz, verify_z_properties,
};
use crate::sparse::{
    candidate_pool, carleson_sum, default_product_pool, greedy_max_form, product_averages_check, upper_bound_factor,
    CarlesonSum, RectCollection,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_ell() -> u32 {
    1
}

fn default_eta() -> BigRational {
    BigRational::new(1.into(), 4.into())
}

fn default_phi() -> OrliczGauge {
    OrliczGauge::LogLog {
        alpha: BigRational::new(1.into(), 4.into()),
    }
}

fn default_budget() -> usize {
    3000
}

/// Parameters of one run. Nothing is random: the same config always gives
/// the same report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: u32,
    pub k: u32,
    #[serde(default = "default_ell")]
    pub ell: u32,
    #[serde(default = "default_eta", with = "rational_str")]
    pub eta: BigRational,
    #[serde(default = "default_phi")]
    pub phi: OrliczGauge,
    /// Candidates the greedy adversary examines.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl ExperimentConfig {
    pub fn new(m: u32, k: u32) -> Self {
        ExperimentConfig {
            m,
            k,
            ell: default_ell(),
            eta: default_eta(),
            phi: default_phi(),
            budget: default_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell < 1 {
            return Err(Error::Config("ell must be at least 1".into()));
        }
        if self.m < self.k.max(self.ell) + 2 {
            return Err(Error::Config(format!(
                "need m >= max(k, ell) + 2, got m = {}, k = {}, ell = {}",
                self.m, self.k, self.ell
            )));
        }
        if !(self.eta > BigRational::zero() && self.eta <= BigRational::one()) {
            return Err(Error::Config(format!(
                "eta = {} must lie in (0, 1]",
                format_rational(&self.eta)
            )));
        }
        Ok(())
    }
}

/// One line of a report. `passed` is `None` for measured quantities that
/// have no fixed threshold.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub name: String,
    pub relation: String,
    pub value: String,
    /// Display only.
    pub approx: f64,
    pub passed: Option<bool>,
}

fn approx(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Check {
    fn exact(id: &str, name: &str, relation: String, value: &BigRational, passed: bool) -> Self {
        Check {
            id: id.into(),
            name: name.into(),
            relation,
            value: format_rational(value),
            approx: approx(value),
            passed: Some(passed),
        }
    }

    fn count(id: &str, name: &str, violations: usize) -> Self {
        let v = BigRational::from_integer(violations.into());
        Check::exact(id, name, "violations = 0".into(), &v, violations == 0)
    }

    fn measured(id: &str, name: &str, value: &BigRational) -> Self {
        Check {
            id: id.into(),
            name: name.into(),
            relation: "measured".into(),
            value: format_rational(value),
            approx: approx(value),
            passed: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedySummary {
    #[serde(with = "rational_str")]
    pub eta: BigRational,
    pub size: usize,
    pub pool_size: usize,
    pub examined: usize,
    pub collection: Vec<DyadicRect>,
    /// A lower bound for the best form over all `η`-sparse collections.
    #[serde(with = "rational_str")]
    pub form_11: BigRational,
    #[serde(with = "rational_str")]
    pub form_phi_lo: BigRational,
    #[serde(with = "rational_str")]
    pub form_phi_hi: BigRational,
    /// Restricted Carleson ratios against `[0,1)^2` and `Ω_j`, `j = 1..4`.
    pub restricted_carleson: Vec<(String, CarlesonSum)>,
}

/// `pairing / (Λ · form)` with `Λ = 1/η`: grows as the two sides separate.
#[derive(Clone, Debug, Serialize)]
pub struct Headline {
    #[serde(with = "rational_str")]
    pub pairing: BigRational,
    #[serde(with = "rational_str")]
    pub lambda: BigRational,
    #[serde(with = "rational_str")]
    pub form: BigRational,
    #[serde(with = "rational_str")]
    pub ratio: BigRational,
    pub approx: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub greedy: GreedySummary,
    pub orlicz: Option<OrliczConstants>,
    pub headline: Headline,
    pub passed: bool,
}

impl Report {
    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn pow2(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << e)
}

pub fn run_pipeline(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let (m, k) = (config.m, config.k);
    let named = |what: &'static str| {
        move |e: Error| Error::Check {
            check: what.into(),
            source: Box::new(e),
        }
    };
    let two_k = pow2(k);
    let mut checks = Vec::new();

    let p = construct_p(m).map_err(named("construct-p"))?;
    let sep = verify_separation(&p);
    checks.push(Check::count(
        "p1",
        "point count 2^(2m+1)",
        (p.len() as u128).abs_diff(1u128 << (2 * m + 1)) as usize,
    ));
    checks.push(Check::count(
        "p2",
        "pairwise squared distance >= 2^-2m",
        sep.violating_pairs.len(),
    ));
    checks.push(Check::count(
        "pigeonhole",
        "one point per rectangle of area 2^(-2m-1)",
        verify_pigeonhole(&p).failures.len(),
    ));

    let z = construct_z_with_ell(&p, k, config.ell).map_err(named("construct-z"))?;
    let zr = verify_z_properties(&p, &z);
    checks.push(Check::count(
        "z1",
        "witness count (2m+3)2^(2m+1)",
        (zr.count as u128).abs_diff(zr.expected_count) as usize,
    ));
    checks.push(Check::count(
        "z2",
        "witness sees only its own point",
        zr.z2_violations.len(),
    ));
    checks.push(Check::count(
        "z3",
        "anchor distance 2^(-2m-k-ell)",
        zr.z3_violations.len(),
    ));
    checks.push(Check::count(
        "z-distinct",
        "no shared coordinates",
        zr.duplicate_points + zr.shared_coordinates,
    ));
    checks.push(Check::measured("z4", "max #(R∩Z)/k over standard R", &zr.z4_constant));
    checks.push(Check::measured("z5", "max #(R∩Z)/(2^2m m k |R|)", &zr.z5_constant));
    let trz = verify_trz(&p, &z);
    checks.push(Check::count(
        "trz",
        "z_T outside T_R for distinct witnesses",
        trz.violations.len() + trz.self_misses.len() + trz.p_count_failures.len(),
    ));

    let mu = build_mu(&p);
    let nu = build_nu(&z).map_err(named("build-nu"))?;
    let terms = pairing_terms(&mu, &nu).map_err(named("pairing"))?;
    let pairing: BigRational = terms.iter().zip(nu.weights()).map(|(v, w)| v * w).sum();
    checks.push(Check::exact(
        "lower-bound",
        "pairing of M_S mu with nu",
        format!(">= {two_k}"),
        &pairing,
        pairing >= two_k,
    ));
    let low = terms.iter().filter(|v| **v < two_k).count();
    checks.push(Check::count(
        "lower-bound-pointwise",
        "M_S mu(z) >= 2^k at every witness",
        low,
    ));

    let sigma = build_sigma(p.points(), &z).map_err(named("build-sigma"))?;
    let mart = martingale_pairing(&sigma, &mu, &nu);
    checks.push(Check::exact(
        "martingale",
        "martingale transform pairing",
        format!("= {two_k}"),
        &mart,
        mart == two_k,
    ));

    let pool = default_product_pool(2 * m + 4, 2 * m + 2);
    let prod = product_averages_check(&mu, &nu, m, k, &pool);
    checks.push(Check::measured(
        "product-averages",
        "max <mu><nu>(|R|/|R̄|)^2 / k(1+2^2k/m)",
        &prod.constant,
    ));

    let cands = candidate_pool(&mu, &nu, 2 * m + k + config.ell + 1);
    let greedy = greedy_max_form(&mu, &nu, &config.eta, &cands, config.budget).map_err(named("greedy"))?;
    let lambda = config.eta.recip();
    let factor = upper_bound_factor(m, k);
    let form_constant = &greedy.form / (&lambda * &factor);
    checks.push(Check::measured(
        "form-bound",
        "form_11 / (Λ k(1+2^2k/m)) for the greedy collection",
        &form_constant,
    ));

    let f = build_f_simple(&p);
    let phi = form_phi(&greedy.collection, &f, &nu, &config.phi);
    let collection = RectCollection::new(greedy.collection.clone());
    let mut restricted = Vec::new();
    if !collection.is_empty() {
        restricted.push((
            "unit".to_string(),
            carleson_sum(&collection, &[DyadicRect::unit_cube(2)])?,
        ));
        for j in 1..=4 {
            restricted.push((format!("omega_{j}"), carleson_sum(&collection, &omega(j)?.rects)?));
        }
    }
    let orlicz = match &config.phi {
        OrliczGauge::LogLog { alpha } => Some(orlicz_constants(&p, &f, alpha)),
        OrliczGauge::Power { .. } => None,
    };

    let ratio = if greedy.form.is_zero() {
        BigRational::zero()
    } else {
        &pairing / (&lambda * &greedy.form)
    };
    let headline = Headline {
        pairing: pairing.clone(),
        lambda,
        form: greedy.form.clone(),
        approx: approx(&ratio),
        ratio,
    };
    let passed = checks.iter().all(|c| c.passed != Some(false));
    Ok(Report {
        version: VERSION.into(),
        config: config.clone(),
        checks,
        greedy: GreedySummary {
            eta: greedy.eta.clone(),
            size: greedy.collection.len(),
            pool_size: greedy.pool_size,
            examined: greedy.examined,
            collection: greedy.collection,
            form_11: greedy.form,
            form_phi_lo: phi.lo,
            form_phi_hi: phi.hi,
            restricted_carleson: restricted,
        },
        orlicz,
        headline,
        passed,
    })
}

/// One row of a sweep table. A failed row keeps its config and the error.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub m: u32,
    pub k: u32,
    pub ell: u32,
    pub eta: String,
    pub passed: bool,
    pub error: Option<String>,
    pub z4: Option<String>,
    pub z5: Option<String>,
    pub product_averages: Option<String>,
    pub pairing: Option<String>,
    pub martingale: Option<String>,
    pub form_11: Option<String>,
    pub form_bound: Option<String>,
    pub headline: Option<String>,
    pub headline_approx: Option<f64>,
}

impl SweepRow {
    fn from_result(config: &ExperimentConfig, result: Result<Report>) -> Self {
        let mut row = SweepRow {
            m: config.m,
            k: config.k,
            ell: config.ell,
            eta: format_rational(&config.eta),
            passed: false,
            error: None,
            z4: None,
            z5: None,
            product_averages: None,
            pairing: None,
            martingale: None,
            form_11: None,
            form_bound: None,
            headline: None,
            headline_approx: None,
        };
        match result {
            Err(e) => row.error = Some(e.to_string()),
            Ok(rep) => {
                let get = |id: &str| rep.check(id).map(|c| c.value.clone());
                row.passed = rep.passed;
                row.z4 = get("z4");
                row.z5 = get("z5");
                row.product_averages = get("product-averages");
                row.pairing = get("lower-bound");
                row.martingale = get("martingale");
                row.form_11 = Some(format_rational(&rep.greedy.form_11));
                row.form_bound = get("form-bound");
                row.headline = Some(format_rational(&rep.headline.ratio));
                row.headline_approx = Some(rep.headline.approx);
            }
        }
        row
    }
}

/// Runs every config in parallel; rows come back in input order.
pub fn sweep(configs: &[ExperimentConfig]) -> Vec<SweepRow> {
    configs
        .par_iter()
        .map(|c| SweepRow::from_result(c, run_pipeline(c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_m_before_work() {
        let err = run_pipeline(&ExperimentConfig::new(2, 1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn empty_sweep() {
        assert!(sweep(&[]).is_empty());
    }

    #[test]
    fn config_defaults_from_json() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"m": 4, "k": 1}"#).unwrap();
        assert_eq!(c, ExperimentConfig::new(4, 1));
        let c: ExperimentConfig = serde_json::from_str(r#"{"m": 4, "k": 1, "eta": "1/8", "phi": "power:2"}"#).unwrap();
        assert_eq!(c.eta, BigRational::new(1.into(), 8.into()));
    }

    #[test]
    fn pipeline_m3() {
        let rep = run_pipeline(&ExperimentConfig::new(3, 1)).unwrap();
        assert!(rep.passed, "{:#?}", rep.checks);
        assert_eq!(rep.check("martingale").unwrap().value, "2");
    }
}
