//! Command-line front end: constructions, verification, sparse forms and
//! end-to-end experiment reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use dyadic_sparse::dyadic::{format_rational, parse_rational};
use dyadic_sparse::experiment::{run_pipeline, sweep, ExperimentConfig, VERSION};
use dyadic_sparse::haar::{build_sigma, martingale_pairing};
use dyadic_sparse::lemmas;
use dyadic_sparse::maximal::{indicator_level_set, ms_eval, omega, pairing_ms, stairs_level_set, LevelSet, MaxValue};
use dyadic_sparse::measure::{build_f_simple, build_mu, build_nu, FunctionFile, MeasureFile, SimpleFunction};
use dyadic_sparse::orlicz::{form_phi, orlicz_average, orlicz_constants};
use dyadic_sparse::pointsets::{
    construct_p, construct_p_capped, construct_z_with_ell, verify_pigeonhole, verify_separation, verify_trz,
    verify_z_properties, PointSetFile, ZSetFile, DEFAULT_POINT_CAP,
};
use dyadic_sparse::sparse::{
    candidate_pool, check_sparse, form_11, greedy_max_form, max_sparsity, tensor_project, CollectionFile,
    RectCollection,
};
use dyadic_sparse::{AtomicMeasure, DyadicPoint, DyadicRect, OrliczGauge, PointSetP, ZSet};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] dyadic_sparse::Error),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(
    name = "dyadic-sparse",
    version,
    about = "Dyadic point sets, maximal function pairings and sparse forms"
)]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the separated point set.
    ConstructP {
        #[arg(long)]
        m: u32,
        /// Largest number of points to build.
        #[arg(long, default_value_t = DEFAULT_POINT_CAP)]
        cap: u128,
    },
    /// Build the witness set from a freshly constructed point set.
    ConstructZ {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        ell: u32,
    },
    /// Exhaustive property checks on a point set or witness set file.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated: p1,p2,pigeonhole,z1,z2,z3,z4,z5,trz,lemmas.
        /// Defaults to every property the input supports.
        #[arg(long, value_delimiter = ',')]
        properties: Vec<String>,
    },
    /// Strong maximal function of a measure at given points.
    MsEval {
        #[arg(long)]
        measure: PathBuf,
        /// Points as "x,y" with coordinates like 3/8 or 0.375.
        #[arg(long = "point", required = true)]
        points: Vec<String>,
    },
    /// Pairing of M_S mu against nu.
    Pairing {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
    },
    /// Martingale transform pairing with the sign symbol built from the witnesses.
    HaarPairing {
        #[arg(long, value_enum, default_value = "from-z")]
        sigma: SigmaSource,
        /// Witness set file; built from --m/--k/--ell when absent.
        #[arg(long)]
        z: Option<PathBuf>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 1)]
        ell: u32,
    },
    /// Orlicz averages of a simple function, or the measured average constants.
    Orlicz {
        #[arg(long, default_value = "loglog:1/4")]
        phi: OrliczGauge,
        /// Simple function file; defaults to the normalized indicator of the point set squares.
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long)]
        m: Option<u32>,
        /// Rectangles to average over; without any, measure the constants.
        #[arg(long = "rect")]
        rects: Vec<String>,
    },
    /// Decide eta-sparsity of a collection with a certificate or a violating family.
    CheckSparse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = rational)]
        eta: BigRational,
    },
    /// Exact best sparsity and Carleson constant of a collection.
    MaxSparsity {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate a sparse form over a collection.
    Form {
        #[arg(long, value_enum)]
        kind: FormKind,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long, default_value = "loglog:1/4")]
        phi: OrliczGauge,
    },
    /// Greedy search for a large eta-sparse form on the construction measures (a lower bound).
    Greedy {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        ell: u32,
        #[arg(long, value_parser = rational, default_value = "1/4")]
        eta: BigRational,
        #[arg(long, default_value_t = 3000)]
        budget: usize,
    },
    /// Project a weighted 3-d collection to 2-d coefficients.
    TensorProject {
        #[arg(long)]
        input: PathBuf,
    },
    /// Full run for one configuration.
    Pipeline(PipelineArgs),
    /// Pipeline over a grid or a list of configurations.
    Sweep {
        /// JSON array of configurations.
        #[arg(long, conflicts_with_all = ["m", "k"])]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        m: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        k: Vec<u32>,
        #[arg(long, value_parser = rational, default_value = "1/4")]
        eta: BigRational,
        #[arg(long, default_value_t = 3000)]
        budget: usize,
    },
    /// Level sets of M_S: the stairs of a measure, or Omega_j of the unit square.
    Stairs {
        #[arg(long, conflicts_with = "omega")]
        measure: Option<PathBuf>,
        #[arg(long, value_parser = rational)]
        lambda: Option<BigRational>,
        #[arg(long, default_value_t = 8)]
        resolution: u32,
        #[arg(long)]
        omega: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaSource {
    FromZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormKind {
    #[value(name = "11")]
    Eleven,
    Phi,
}

#[derive(clap::Args, Debug)]
struct PipelineArgs {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long, value_parser = rational)]
    eta: Option<BigRational>,
    #[arg(long)]
    phi: Option<OrliczGauge>,
    #[arg(long)]
    budget: Option<usize>,
}

fn rational(s: &str) -> std::result::Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// A command's result: JSON always, a table when the data is tabular.
struct Output {
    json: Value,
    table: Option<Table>,
    passed: bool,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Output {
    fn new(json: impl Serialize, passed: bool) -> Result<Self> {
        let json = serde_json::to_value(json).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Output {
            json,
            table: None,
            passed,
        })
    }

    fn with_table(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.table = Some(Table { header, rows });
        self
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })
}

fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    Ok(read_json::<MeasureFile>(path)?.into_measure()?)
}

fn read_collection(path: &Path) -> Result<RectCollection> {
    Ok(read_json::<CollectionFile>(path)?.into_collection()?)
}

fn read_function(path: &Path) -> Result<SimpleFunction> {
    Ok(read_json::<FunctionFile>(path)?.into_function()?)
}

fn rat(r: &BigRational) -> String {
    format_rational(r)
}

fn flt(r: &BigRational) -> String {
    r.to_f64().map(|x| x.to_string()).unwrap_or_default()
}

fn level_set_table(set: &LevelSet) -> Vec<Vec<String>> {
    set.rects
        .iter()
        .map(|r| vec![r.to_string(), rat(&r.area().to_rational())])
        .collect()
}

fn build_sets(m: u32, k: u32, ell: u32) -> Result<(PointSetP, ZSet)> {
    let p = construct_p(m)?;
    let z = construct_z_with_ell(&p, k, ell)?;
    Ok((p, z))
}

fn verify(input: &Path, properties: &[String]) -> Result<Output> {
    let text = fs::read_to_string(input).map_err(|source| CliError::Read {
        path: input.into(),
        source,
    })?;
    let raw: Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: input.into(),
        source,
    })?;
    let (p, z) = if raw.get("witnesses").is_some() {
        let file: ZSetFile = serde_json::from_value(raw).map_err(|source| CliError::Json {
            path: input.into(),
            source,
        })?;
        let (p, z) = file.into_sets()?;
        (p, Some(z))
    } else {
        let file: PointSetFile = serde_json::from_value(raw).map_err(|source| CliError::Json {
            path: input.into(),
            source,
        })?;
        (file.into_set()?, None)
    };
    let wanted: Vec<String> = if properties.is_empty() {
        let mut all = vec!["p1", "p2", "pigeonhole"];
        if z.is_some() {
            all.extend(["z1", "z2", "z3", "z4", "z5", "trz"]);
        }
        all.into_iter().map(String::from).collect()
    } else {
        properties.iter().map(|s| s.trim().to_lowercase()).collect()
    };

    let mut results = serde_json::Map::new();
    let mut rows = Vec::new();
    let mut passed = true;
    let mut record = |id: &str, value: String, ok: Option<bool>, detail: Value| {
        if ok == Some(false) {
            passed = false;
        }
        let status = match ok {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "measured",
        };
        rows.push(vec![id.to_string(), value.clone(), status.to_string()]);
        results.insert(id.into(), json!({ "value": value, "status": status, "detail": detail }));
    };
    let z_report = z.as_ref().map(|z| verify_z_properties(&p, z));
    for prop in &wanted {
        match prop.as_str() {
            "p1" => {
                let want = 1u128 << (2 * p.m() + 1);
                record(
                    "p1",
                    p.len().to_string(),
                    Some(p.len() as u128 == want),
                    json!({ "expected": want.to_string() }),
                );
            }
            "p2" => {
                let rep = verify_separation(&p);
                let min = rep.min_dist_sq.map(|d| d.to_string()).unwrap_or_else(|| "0".into());
                record("p2", min, Some(rep.passed()), json!(rep));
            }
            "pigeonhole" => {
                let rep = verify_pigeonhole(&p);
                record(
                    "pigeonhole",
                    rep.failures.len().to_string(),
                    Some(rep.failures.is_empty()),
                    json!(rep),
                );
            }
            "z1" | "z2" | "z3" | "z4" | "z5" => {
                let rep = z_report
                    .as_ref()
                    .ok_or_else(|| CliError::Usage(format!("{prop} needs a witness set input")))?;
                let (value, ok) = match prop.as_str() {
                    "z1" => (rep.count.to_string(), Some(rep.count as u128 == rep.expected_count)),
                    "z2" => (rep.z2_violations.len().to_string(), Some(rep.z2_violations.is_empty())),
                    "z3" => (rep.z3_violations.len().to_string(), Some(rep.z3_violations.is_empty())),
                    "z4" => (rat(&rep.z4_constant), None),
                    _ => (rat(&rep.z5_constant), None),
                };
                record(prop, value, ok, json!(rep));
            }
            "trz" => {
                let z = z
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("trz needs a witness set input".into()))?;
                let rep = verify_trz(&p, z);
                record("trz", rep.violations.len().to_string(), Some(rep.passed()), json!(rep));
            }
            "lemmas" => {
                let mut reps = vec![
                    lemmas::check_localize(&p)?,
                    lemmas::check_find_maximal(&p)?,
                    lemmas::check_exponential_decay(&p)?,
                ];
                if let Some(z) = &z {
                    reps.push(lemmas::check_r_star_admissible(&p, z.k(), z.ell())?);
                }
                for rep in reps {
                    let id = format!("lemma-{}", rep.name);
                    record(&id, rep.violations.len().to_string(), Some(rep.passed()), json!(rep));
                }
            }
            other => return Err(CliError::Usage(format!("unknown property {other:?}"))),
        }
    }
    let out = json!({ "version": VERSION, "input": input, "m": p.m(), "passed": passed, "properties": results });
    Ok(Output::new(out, passed)?.with_table(vec!["property", "value", "status"], rows))
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::ConstructP { m, cap } => {
            let p = construct_p_capped(*m, *cap)?;
            let rows = p
                .squares()
                .iter()
                .zip(p.points())
                .map(|(q, c)| vec![q.to_string(), c.coord(0).to_string(), c.coord(1).to_string()])
                .collect();
            Ok(Output::new(PointSetFile::from_set(&p), true)?.with_table(vec!["square", "x", "y"], rows))
        }
        Command::ConstructZ { m, k, ell } => {
            let (p, z) = build_sets(*m, *k, *ell)?;
            let rows = z
                .witnesses()
                .iter()
                .map(|w| {
                    vec![
                        w.source.to_string(),
                        w.rect.to_string(),
                        w.anchor.to_string(),
                        w.r_star.to_string(),
                        w.z.coord(0).to_string(),
                        w.z.coord(1).to_string(),
                        w.t_rect.to_string(),
                    ]
                })
                .collect();
            Ok(Output::new(ZSetFile::from_sets(&p, &z), true)?
                .with_table(vec!["source", "rect", "anchor", "r_star", "x", "y", "t_rect"], rows))
        }
        Command::Verify { input, properties } => verify(input, properties),
        Command::MsEval { measure, points } => {
            let mu = read_measure(measure)?;
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for text in points {
                let z: DyadicPoint = text.parse()?;
                let v = ms_eval(&mu, &z)?;
                let shown = match &v {
                    MaxValue::Finite(x) => rat(x),
                    MaxValue::Infinite => "inf".into(),
                };
                rows.push(vec![z.to_string(), shown.clone()]);
                values.push(json!({ "point": z.to_string(), "value": shown }));
            }
            Ok(Output::new(json!({ "values": values }), true)?.with_table(vec!["point", "value"], rows))
        }
        Command::Pairing { mu, nu } => {
            let v = pairing_ms(&read_measure(mu)?, &read_measure(nu)?)?;
            let rows = vec![vec![rat(&v), flt(&v)]];
            Ok(Output::new(json!({ "pairing": rat(&v), "approx": v.to_f64() }), true)?
                .with_table(vec!["pairing", "approx"], rows))
        }
        Command::HaarPairing {
            sigma: SigmaSource::FromZ,
            z,
            m,
            k,
            ell,
        } => {
            let (p, z) = match (z, m, k) {
                (Some(path), _, _) => read_json::<ZSetFile>(path)?.into_sets()?,
                (None, Some(m), Some(k)) => build_sets(*m, *k, *ell)?,
                _ => return Err(CliError::Usage("give --z FILE or both --m and --k".into())),
            };
            let sigma = build_sigma(p.points(), &z)?;
            let v = martingale_pairing(&sigma, &build_mu(&p), &build_nu(&z)?);
            let expected = BigRational::from_integer((1u64 << z.k()).into());
            let passed = v == expected;
            let rows = vec![vec![rat(&v), rat(&expected), passed.to_string()]];
            Ok(Output::new(
                json!({ "m": z.m(), "k": z.k(), "symbol_size": sigma.len(), "pairing": rat(&v), "expected": rat(&expected), "passed": passed }),
                passed,
            )?
            .with_table(vec!["pairing", "expected", "passed"], rows))
        }
        Command::Orlicz {
            phi,
            function,
            m,
            rects,
        } => {
            let (f, p) = match (function, m) {
                (Some(path), _) => (read_function(path)?, None),
                (None, Some(m)) => {
                    let p = construct_p(*m)?;
                    (build_f_simple(&p), Some(p))
                }
                _ => return Err(CliError::Usage("give --function FILE or --m".into())),
            };
            if !rects.is_empty() {
                let mut rows = Vec::new();
                let mut values = Vec::new();
                for text in rects {
                    let r: DyadicRect = text.parse()?;
                    let b = orlicz_average(&f, &r, phi);
                    rows.push(vec![
                        r.to_string(),
                        rat(&b.lo),
                        rat(&b.hi),
                        b.midpoint_f64().to_string(),
                    ]);
                    values.push(json!({ "rect": r.to_string(), "bracket": b }));
                }
                return Ok(Output::new(json!({ "phi": phi, "averages": values }), true)?
                    .with_table(vec!["rect", "lo", "hi", "approx"], rows));
            }
            let (Some(p), OrliczGauge::LogLog { alpha }) = (p, phi) else {
                return Err(CliError::Usage("measured constants need --m and a loglog gauge".into()));
            };
            let c = orlicz_constants(&p, &f, alpha);
            let rows = vec![
                vec![
                    "large".into(),
                    rat(&c.large.lo),
                    rat(&c.large.hi),
                    c.large.pool_size.to_string(),
                ],
                vec![
                    "small".into(),
                    rat(&c.small.lo),
                    rat(&c.small.hi),
                    c.small.pool_size.to_string(),
                ],
            ];
            Ok(
                Output::new(json!({ "version": VERSION, "phi": phi, "constants": c }), true)?
                    .with_table(vec!["bound", "lo", "hi", "pool"], rows),
            )
        }
        Command::CheckSparse { input, eta } => {
            let s = read_collection(input)?;
            let outcome = check_sparse(&s, eta)?;
            let passed = outcome.is_certified();
            Ok(Output::new(
                json!({ "version": VERSION, "eta": rat(eta), "result": outcome }),
                passed,
            )?)
        }
        Command::MaxSparsity { input } => {
            let rep = max_sparsity(&read_collection(input)?)?;
            let rows = vec![vec![
                rat(&rep.eta_star),
                rat(rep.lambda()),
                rep.witness.len().to_string(),
            ]];
            Ok(Output::new(json!({ "version": VERSION, "report": rep }), true)?
                .with_table(vec!["eta_star", "lambda", "witness_size"], rows))
        }
        Command::Form {
            kind,
            input,
            mu,
            nu,
            function,
            phi,
        } => {
            let s = read_collection(input)?;
            let nu = read_measure(nu)?;
            match kind {
                FormKind::Eleven => {
                    let mu = mu
                        .as_ref()
                        .ok_or_else(|| CliError::Usage("--kind 11 needs --mu".into()))?;
                    let v = form_11(&s, &read_measure(mu)?, &nu);
                    Ok(
                        Output::new(json!({ "kind": "11", "form": rat(&v), "approx": v.to_f64() }), true)?
                            .with_table(vec!["form", "approx"], vec![vec![rat(&v), flt(&v)]]),
                    )
                }
                FormKind::Phi => {
                    let f = function
                        .as_ref()
                        .ok_or_else(|| CliError::Usage("--kind phi needs --function".into()))?;
                    if !s.is_unweighted() {
                        return Err(CliError::Usage("--kind phi takes an unweighted collection".into()));
                    }
                    let b = form_phi(s.rects(), &read_function(f)?, &nu, phi);
                    let rows = vec![vec![rat(&b.lo), rat(&b.hi), b.midpoint_f64().to_string()]];
                    Ok(Output::new(json!({ "kind": "phi", "phi": phi, "form": b }), true)?
                        .with_table(vec!["lo", "hi", "approx"], rows))
                }
            }
        }
        Command::Greedy { m, k, ell, eta, budget } => {
            let (p, z) = build_sets(*m, *k, *ell)?;
            let (mu, nu) = (build_mu(&p), build_nu(&z)?);
            let pool = candidate_pool(&mu, &nu, 2 * m + k + ell + 1);
            let g = greedy_max_form(&mu, &nu, eta, &pool, *budget)?;
            let rows = g.collection.iter().map(|r| vec![r.to_string()]).collect();
            Ok(Output::new(
                json!({ "version": VERSION, "m": m, "k": k, "ell": ell, "lower_bound": true, "greedy": g }),
                true,
            )?
            .with_table(vec!["rect"], rows))
        }
        Command::TensorProject { input } => {
            let beta = tensor_project(&read_collection(input)?)?;
            let rows = beta
                .rects()
                .iter()
                .zip(beta.weights())
                .map(|(r, w)| vec![r.to_string(), rat(w)])
                .collect();
            Ok(Output::new(CollectionFile::from_collection(&beta), true)?.with_table(vec!["rect", "weight"], rows))
        }
        Command::Pipeline(args) => {
            let config = pipeline_config(args)?;
            let rep = run_pipeline(&config)?;
            let rows = rep
                .checks
                .iter()
                .map(|c| {
                    let status = match c.passed {
                        Some(true) => "pass",
                        Some(false) => "fail",
                        None => "measured",
                    };
                    vec![
                        c.id.clone(),
                        c.relation.clone(),
                        c.value.clone(),
                        c.approx.to_string(),
                        status.into(),
                    ]
                })
                .collect();
            let passed = rep.passed;
            Ok(Output::new(rep, passed)?.with_table(vec!["check", "relation", "value", "approx", "status"], rows))
        }
        Command::Sweep {
            config,
            m,
            k,
            eta,
            budget,
        } => {
            let configs: Vec<ExperimentConfig> = match config {
                Some(path) => read_json(path)?,
                None => m
                    .iter()
                    .flat_map(|&m| {
                        k.iter().map(move |&k| ExperimentConfig {
                            eta: eta.clone(),
                            budget: *budget,
                            ..ExperimentConfig::new(m, k)
                        })
                    })
                    .collect(),
            };
            let rows = sweep(&configs);
            let passed = rows.iter().all(|r| r.passed);
            let table = rows
                .iter()
                .map(|r| {
                    let o = |v: &Option<String>| v.clone().unwrap_or_default();
                    vec![
                        r.m.to_string(),
                        r.k.to_string(),
                        r.ell.to_string(),
                        r.eta.clone(),
                        r.passed.to_string(),
                        o(&r.error),
                        o(&r.z4),
                        o(&r.z5),
                        o(&r.product_averages),
                        o(&r.pairing),
                        o(&r.martingale),
                        o(&r.form_11),
                        o(&r.form_bound),
                        o(&r.headline),
                    ]
                })
                .collect();
            let header = vec![
                "m",
                "k",
                "ell",
                "eta",
                "passed",
                "error",
                "z4",
                "z5",
                "product_averages",
                "pairing",
                "martingale",
                "form_11",
                "form_bound",
                "headline",
            ];
            Ok(Output::new(json!({ "version": VERSION, "rows": rows }), passed)?.with_table(header, table))
        }
        Command::Stairs {
            measure,
            lambda,
            resolution,
            omega: j,
        } => {
            let set = match (measure, j) {
                (_, Some(j)) => omega(*j)?,
                (Some(path), None) => {
                    let lambda = lambda
                        .clone()
                        .ok_or_else(|| CliError::Usage("--measure needs --lambda".into()))?;
                    stairs_level_set(&read_measure(path)?, &lambda, *resolution)?
                }
                (None, None) => {
                    let lambda = lambda
                        .clone()
                        .unwrap_or_else(|| BigRational::one() / BigRational::from_integer(2.into()));
                    indicator_level_set(&lambda)?
                }
            };
            let rows = level_set_table(&set);
            Ok(Output::new(&set, true)?.with_table(vec!["rect", "area"], rows))
        }
    }
}

fn pipeline_config(args: &PipelineArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.config, args.m, args.k) {
        (Some(path), _, _) => read_json::<ExperimentConfig>(path)?,
        (None, Some(m), Some(k)) => ExperimentConfig::new(m, k),
        _ => return Err(CliError::Usage("give --config FILE or both --m and --k".into())),
    };
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(ell) = args.ell {
        config.ell = ell;
    }
    if let Some(eta) = &args.eta {
        config.eta = eta.clone();
    }
    if let Some(phi) = &args.phi {
        config.phi = phi.clone();
    }
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    Ok(config)
}

impl CliError {
    fn is_broken_pipe(&self) -> bool {
        let io = match self {
            CliError::Io(e) => Some(e),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<()> {
    let mut sink: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match cli.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &out.json).map_err(|e| {
                if e.is_io() {
                    CliError::Io(e.into())
                } else {
                    CliError::Usage(e.to_string())
                }
            })?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let table = out
                .table
                .as_ref()
                .ok_or_else(|| CliError::Usage("this command has no tabular output; use --format json".into()))?;
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|out| emit(&cli, &out).map(|_| out.passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        // The reader went away (`| head`); nothing left to report.
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
