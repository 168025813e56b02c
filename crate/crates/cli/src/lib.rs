//! Batch front end: a [`RunConfig`] names one subcommand with its parameters
//! and limits, and [`run`] dispatches it, writing JSON (or a CSV/TSV
//! projection) to the given sink.

use std::fmt;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use clap::{Subcommand, ValueEnum};
use lacuna::arith::{next_admissible_prime, radical, s_search, ArithError};
use lacuna::classify::{
    density, interpolate_range, odd_roots, run_shard, ClassifyError, PipelineConfig, PipelineReport, ShardResult,
    Status,
};
use lacuna::hecke::{elimination_test, hecke_apply, HeckeContext, HeckeError};
use lacuna::modular_meta::{CharacterSpec, EtaTriple, MetaError};
use lacuna::partitions::{count_cores, han_sum, no_sum, EnumerationBudget, PartitionError};
use lacuna::qseries::{euler_product, euler_product_direct, expand_f, f_coefficients, jacobi_cube, triple_r};
use lacuna::QSeries;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{message}")]
    Resource { message: String, partial: Option<Value> },
    #[error("{0}")]
    Verification(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Precondition(_) | CliError::Io(_) => EXIT_PRECONDITION,
            CliError::Resource { .. } => EXIT_RESOURCE,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Precondition(_) => "precondition",
            CliError::Resource { .. } => "resource_limit",
            CliError::Verification(_) => "verification",
            CliError::Io(_) => "io",
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        json!({ "error": self.kind(), "message": self.to_string() })
    }
}

impl From<MetaError> for CliError {
    fn from(e: MetaError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<ArithError> for CliError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::FactorizationBudgetExceeded { .. } => CliError::Resource { message: e.to_string(), partial: None },
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<HeckeError> for CliError {
    fn from(e: HeckeError) -> Self {
        match e {
            HeckeError::Arith(a) => a.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::ResourceLimit(_) => CliError::Resource { message: e.to_string(), partial: None },
            ClassifyError::DegreeOverflow { .. } | ClassifyError::ZeroPolynomial => CliError::Verification(e.to_string()),
            ClassifyError::Arith(a) => a.into(),
            ClassifyError::Hecke(h) => h.into(),
            ClassifyError::PreconditionFail(_) => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match &e {
            PartitionError::ResourceLimit { generating_function_value, .. } => CliError::Resource {
                message: e.to_string(),
                partial: generating_function_value
                    .as_ref()
                    .map(|v| json!({ "generating_function": v.to_string(), "enumeration": null })),
            },
            PartitionError::InvalidParts(_) => CliError::Precondition(e.to_string()),
        }
    }
}

/// Inclusive integer range written `lo..hi`, or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad range {s:?}: {e}"));
        match s.split_once("..") {
            Some((lo, hi)) => Ok(Span { lo: parse(lo)?, hi: parse(hi.trim_start_matches('='))? }),
            None => {
                let v = parse(s)?;
                Ok(Span { lo: v, hi: v })
            }
        }
    }
}

impl TryFrom<String> for Span {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Span> for String {
    fn from(s: Span) -> String {
        s.to_string()
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// Pentagonal sum against the Euler product.
    Euler,
    /// Cube of the Euler product against Jacobi's sum.
    Jacobi,
    /// Nekrasov-Okounkov hook sum at integer `b`.
    NekrasovOkounkov,
    /// Han's hook sum against its product side.
    Han,
    /// `T_x T_y = T_xy` on random series for random coprime `x, y`.
    Hecke,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// q-expansion of F_{a,b,c}
    Expand {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        c: u64,
        /// Truncation: exponents below this bound are computed.
        #[arg(long, default_value_t = 1000)]
        trunc: i64,
        /// Emit the normalized series Σ A(m) q^m instead.
        #[arg(long)]
        normalized: bool,
    },
    /// Weight, level, character and cusp data of F_{a,b,c}
    Meta {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        c: u64,
    },
    /// Fraction of nonzero coefficients below each decade bound
    Density {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        c: u64,
        #[arg(long, default_value_t = 100_000)]
        x: u64,
        #[arg(long, default_value_t = 3)]
        decades: u32,
    },
    /// Number of a-cores of size m, by enumeration and generating function
    Cores {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        m: u32,
    },
    /// Check an identity exactly up to a truncation
    Verify {
        #[arg(long, value_enum)]
        identity: Identity,
        #[arg(long, default_value_t = 1000)]
        terms: i64,
        /// Parameters for the hook-sum identities.
        #[arg(long)]
        a: Option<u64>,
        #[arg(long)]
        b: Option<i64>,
        #[arg(long)]
        c: Option<u64>,
    },
    /// Smallest s ≡ 23 (mod 24) with (-p/s) = -1 for each prime p of a'
    SSearch {
        #[arg(long)]
        a_prime: u64,
        #[arg(long, default_value_t = 10_000_000)]
        limit: u64,
    },
    /// A_{a,b,c}(m0) at an admissible prime p
    HeckeTest {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        c: u64,
        /// Defaults to the smallest admissible prime.
        #[arg(long)]
        p: Option<u64>,
    },
    /// The polynomials b ↦ A_{a,b,c}(m) and their odd positive roots
    Interpolate {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        c: u64,
        /// Index or inclusive range `lo..hi`.
        #[arg(long)]
        m: Span,
    },
    /// The classification pipeline over a box of (a, c)
    Classify {
        #[arg(long)]
        a: Span,
        #[arg(long)]
        c: Span,
        #[arg(long, default_value_t = 99)]
        b_max: u64,
        #[arg(long, default_value_t = 100_000)]
        s_limit: u64,
        #[arg(long, default_value_t = 3)]
        hecke_rounds: u32,
        /// Checkpoint listing completed (a, c) shards; shard results live in
        /// the cache directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Longest normalized expansion any command may request.
    pub max_terms: u64,
    /// Most partitions a brute-force sum may visit.
    pub partition_budget: u64,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_terms: 200_000, partition_budget: EnumerationBudget::default().max_partitions, jobs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub limits: Limits,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig { command, format: Format::Json, cache_dir: None, seed: 0, limits: Limits::default() }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let l = &self.limits;
        if l.max_terms == 0 || l.partition_budget == 0 || l.jobs == Some(0) {
            return Err(CliError::Usage("budgets must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        Ok(fs::write(path, self.to_json() + "\n")?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn budget(&self) -> EnumerationBudget {
        EnumerationBudget { max_partitions: self.limits.partition_budget }
    }
}

/// A command result: the canonical JSON document and its tabular projection.
struct Output {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Output {
    fn write(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json).map_err(io::Error::from)?;
                writeln!(out)?;
            }
            Format::Csv | Format::Tsv => {
                let delimiter = if format == Format::Csv { b',' } else { b'\t' };
                let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(&mut *out);
                w.write_record(&self.header).map_err(io::Error::from)?;
                for row in &self.rows {
                    w.write_record(row).map_err(io::Error::from)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// Runs `config`, writing the result to `out`. Returns the process exit
/// code; errors are reported on `err` as one JSON object.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = config.validate().and_then(|()| match config.limits.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| dispatch(config)),
        None => dispatch(config),
    });
    let (output, error) = match result {
        Ok(output) => (Some(output), None),
        Err(CliError::Resource { message, partial: Some(json) }) => {
            (Some(Output { json, header: vec![], rows: vec![] }), Some(CliError::Resource { message, partial: None }))
        }
        Err(e) => (None, Some(e)),
    };
    let mut code = EXIT_OK;
    if let Some(output) = output {
        // partial results are always written in the canonical form
        let format = if error.is_some() { Format::Json } else { config.format };
        match output.write(format, out) {
            Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => return EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "{}", e.to_json());
                return e.exit_code();
            }
            Ok(()) => {}
        }
    }
    if let Some(e) = error {
        let _ = writeln!(err, "{}", e.to_json());
        code = e.exit_code();
    }
    code
}

fn dispatch(config: &RunConfig) -> Result<Output, CliError> {
    match &config.command {
        Command::Expand { a, b, c, trunc, normalized } => expand(config, *a, *b, *c, *trunc, *normalized),
        Command::Meta { a, b, c } => meta(*a, *b, *c),
        Command::Density { a, b, c, x, decades } => {
            let points = density(*a, *b, *c, *x, *decades, config.limits.max_terms)?;
            let rows = points
                .iter()
                .map(|p| vec![p.bound.to_string(), p.nonzero.to_string(), p.fraction.to_string()])
                .collect();
            Ok(Output {
                json: json!({ "a": a, "b": b, "c": c, "x": x, "decades": decades, "points": points }),
                header: vec!["bound", "nonzero", "fraction"],
                rows,
            })
        }
        Command::Cores { a, m } => {
            if *a == 0 {
                return Err(CliError::Precondition("a must be positive".into()));
            }
            let count = count_cores(*a, *m, config.budget())?.to_string();
            Ok(Output {
                json: json!({ "a": a, "m": m, "count": count }),
                header: vec!["a", "m", "count"],
                rows: vec![vec![a.to_string(), m.to_string(), count]],
            })
        }
        Command::Verify { identity, terms, a, b, c } => verify(config, *identity, *terms, *a, *b, *c),
        Command::SSearch { a_prime, limit } => {
            let r = s_search(*a_prime, *limit)?;
            let cert = r.certificate.iter().map(|(p, v)| format!("{p}:{v}")).collect::<Vec<_>>().join(";");
            let s = r.s.map_or(String::new(), |s| s.to_string());
            let out = Output {
                json: serde_json::to_value(&r).expect("serializable"),
                header: vec!["a_prime", "s", "certificate"],
                rows: vec![vec![a_prime.to_string(), s, cert]],
            };
            if r.s.is_none() {
                return Err(CliError::Resource { message: format!("no s up to {limit}"), partial: Some(out.json) });
            }
            Ok(out)
        }
        Command::HeckeTest { a, b, c, p } => {
            EtaTriple::new(*a, *b, *c)?;
            let p = match p {
                Some(p) => *p,
                None => next_admissible_prime(radical(576 * a * c)?, 0)?,
            };
            let o = elimination_test(*a, *b, *c, p)?;
            let witness = o.witness.to_string();
            Ok(Output {
                json: json!({ "a": a, "b": b, "c": c, "p": p, "m0": o.m0, "witness": witness, "eliminated": o.eliminated }),
                header: vec!["a", "b", "c", "p", "m0", "witness", "eliminated"],
                rows: vec![vec![
                    a.to_string(),
                    b.to_string(),
                    c.to_string(),
                    p.to_string(),
                    o.m0.to_string(),
                    witness,
                    o.eliminated.to_string(),
                ]],
            })
        }
        Command::Interpolate { a, c, m } => interpolate(config, *a, *c, *m),
        Command::Classify { a, c, b_max, s_limit, hecke_rounds, resume } => {
            let pc = PipelineConfig {
                a_min: a.lo,
                a_max: a.hi,
                c_min: c.lo,
                c_max: c.hi,
                b_max: *b_max,
                s_limit: *s_limit,
                hecke_rounds: *hecke_rounds,
                max_terms: config.limits.max_terms,
            };
            classify(config, pc, resume.as_deref())
        }
    }
}

fn check_terms(config: &RunConfig, terms: i64) -> Result<(), CliError> {
    if terms > config.limits.max_terms as i64 {
        return Err(CliError::Resource {
            message: format!("{terms} terms requested, limit is {}", config.limits.max_terms),
            partial: None,
        });
    }
    Ok(())
}

fn series_rows(f: &QSeries) -> Vec<Vec<String>> {
    f.terms().map(|(e, c)| vec![e.to_string(), c.to_string()]).collect()
}

/// Reads a series from the cache, or computes and stores it.
fn cached_series(config: &RunConfig, key: &str, compute: impl FnOnce() -> QSeries) -> Result<QSeries, CliError> {
    let Some(dir) = &config.cache_dir else {
        return Ok(compute());
    };
    let path = dir.join(format!("{key}.series"));
    if let Ok(file) = fs::File::open(&path) {
        if let Ok(series) = QSeries::read_cache(BufReader::new(file)) {
            return Ok(series);
        }
    }
    let series = compute();
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{key}.series.tmp"));
    series.write_cache(io::BufWriter::new(fs::File::create(&tmp)?))?;
    fs::rename(&tmp, &path)?;
    Ok(series)
}

fn expand(config: &RunConfig, a: u64, b: u64, c: u64, trunc: i64, normalized: bool) -> Result<Output, CliError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(CliError::Precondition("a, b, c must be positive".into()));
    }
    let r = triple_r(a, b, c);
    let series = if normalized {
        check_terms(config, trunc)?;
        cached_series(config, &format!("qseries_f_coefficients_a{a}_b{b}_c{c}_T{trunc}"), || {
            f_coefficients(a, b, c, trunc)
        })?
    } else {
        check_terms(config, (trunc - r).max(0) / 24 + 1)?;
        cached_series(config, &format!("qseries_expand_f_a{a}_b{b}_c{c}_T{trunc}"), || expand_f(a, b, c, trunc))?
    };
    let terms: Vec<Value> = series.terms().map(|(e, c)| json!({ "exponent": e, "coefficient": c.to_string() })).collect();
    Ok(Output {
        json: json!({ "a": a, "b": b, "c": c, "r": r, "trunc": trunc, "normalized": normalized, "terms": terms }),
        header: vec!["exponent", "coefficient"],
        rows: series_rows(&series),
    })
}

fn meta(a: u64, b: u64, c: u64) -> Result<Output, CliError> {
    let t = EtaTriple::new(a, b, c)?;
    let data = t.eta_quotient().check_weakly_holomorphic()?;
    let character = t.character();
    let orders: Vec<Value> = t
        .cusp_orders()
        .into_iter()
        .map(|(y, o)| json!({ "y": y, "order": o.to_string() }))
        .collect();
    let classification = t.classify_holomorphy().to_string();
    let row = vec![
        a.to_string(),
        b.to_string(),
        c.to_string(),
        t.r().to_string(),
        data.weight.to_string(),
        t.level().to_string(),
        t.optimal_level().to_string(),
        character.numerator.to_string(),
        classification.clone(),
    ];
    Ok(Output {
        json: json!({
            "a": a,
            "b": b,
            "c": c,
            "r": t.r(),
            "weight": data.weight.to_string(),
            "level": t.level(),
            "optimal_level": t.optimal_level(),
            "character_D": character.numerator,
            "character_modulus": character.modulus,
            "classification": classification,
            "cusp_orders": orders,
        }),
        header: vec!["a", "b", "c", "r", "weight", "level", "optimal_level", "character_D", "classification"],
        rows: vec![row],
    })
}

fn first_difference<C: lacuna::qseries::Coeff>(f: &QSeries<C>, g: &QSeries<C>) -> Option<i64> {
    let t = f.trunc().min(g.trunc());
    let lo = f.valuation().into_iter().chain(g.valuation()).min().unwrap_or(0);
    (lo..t).find(|&e| f.get(e) != g.get(e))
}

fn verify(
    config: &RunConfig,
    identity: Identity,
    terms: i64,
    a: Option<u64>,
    b: Option<i64>,
    c: Option<u64>,
) -> Result<Output, CliError> {
    check_terms(config, terms)?;
    let need = |v: Option<u64>, name: &str| v.ok_or_else(|| CliError::Usage(format!("--{name} is required")));
    let mismatch: Option<String> = match identity {
        Identity::Euler => first_difference(&euler_product(terms, 1), &euler_product_direct(terms, 1)).map(|e| e.to_string()),
        Identity::Jacobi => {
            let f = euler_product(terms, 1);
            let cube = &(&f * &f) * &f;
            first_difference(&cube, &jacobi_cube(terms)).map(|e| e.to_string())
        }
        Identity::NekrasovOkounkov => {
            let b = b.ok_or_else(|| CliError::Usage("--b is required".into()))?;
            let lhs = no_sum(&BigRational::from_integer(b.into()), terms, config.budget())?;
            let rhs = euler_product(terms, 1).pow(b - 1).expect("unit constant term").to_rational();
            first_difference(&lhs, &rhs).map(|e| e.to_string())
        }
        Identity::Han => {
            let (a, c) = (need(a, "a")?, need(c, "c")?);
            let b = b.ok_or_else(|| CliError::Usage("--b is required".into()))?;
            if a == 0 || c == 0 || b < 1 {
                return Err(CliError::Precondition("a, c must be positive and b >= 1".into()));
            }
            let lhs = han_sum(a, &BigRational::from_integer(b.into()), c, terms, config.budget())?;
            let rhs = f_coefficients(a, b as u64, c, terms).to_rational();
            first_difference(&lhs, &rhs).map(|e| e.to_string())
        }
        Identity::Hecke => verify_hecke(config.seed, terms)?,
    };
    let status = if mismatch.is_none() { "ok" } else { "mismatch" };
    let json = json!({ "identity": identity, "terms": terms, "status": status, "first_mismatch": mismatch });
    if let Some(at) = mismatch {
        return Err(CliError::Verification(format!("{identity:?} fails at {at}")));
    }
    Ok(Output {
        json,
        header: vec!["identity", "terms", "status"],
        rows: vec![vec![format!("{identity:?}").to_lowercase(), terms.to_string(), status.into()]],
    })
}

/// Ten random coprime pairs `x, y <= 50`, each checked on a random series
/// long enough for `T_xy`.
fn verify_hecke(seed: u64, terms: i64) -> Result<Option<String>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = HeckeContext::new(Rational64::from_integer(2), CharacterSpec { numerator: 12, modulus: 576 }, 576)?;
    let mut done = 0;
    while done < 10 {
        let (x, y) = (rng.gen_range(1..=50u64), rng.gen_range(1..=50u64));
        if lacuna::arith::gcd(x, y) != 1 || (x * y) as i64 > terms {
            continue;
        }
        done += 1;
        let f = QSeries::from_terms((0..terms).map(|e| (e, BigInt::from(rng.gen_range(-99i64..=99)))), terms);
        let lhs = hecke_apply(&hecke_apply(&f, y, &ctx)?, x, &ctx)?;
        let rhs = hecke_apply(&f, x * y, &ctx)?;
        if let Some(e) = first_difference(&lhs, &rhs) {
            return Ok(Some(format!("T_{x} T_{y}, exponent {e}")));
        }
    }
    Ok(None)
}

fn interpolate(config: &RunConfig, a: u64, c: u64, m: Span) -> Result<Output, CliError> {
    check_terms(config, m.hi as i64 + 1)?;
    let polys = interpolate_range(a, c, m.lo, m.hi)?;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for p in &polys {
        let roots = odd_roots(p)?;
        let coeffs: Vec<String> = p.coeffs.iter().map(ToString::to_string).collect();
        rows.push(vec![
            p.m.to_string(),
            p.degree_bound.to_string(),
            coeffs.join(";"),
            roots.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
        ]);
        entries.push(json!({ "m": p.m, "degree_bound": p.degree_bound, "coeffs": coeffs, "odd_roots": roots }));
    }
    Ok(Output {
        json: json!({ "a": a, "c": c, "polynomials": entries }),
        header: vec!["m", "degree_bound", "coeffs", "odd_roots"],
        rows,
    })
}

fn shard_key(a: u64, c: u64, pc: &PipelineConfig) -> String {
    format!("classify_a{a}_c{c}_b{}_s{}_h{}_t{}", pc.b_max, pc.s_limit, pc.hecke_rounds, pc.max_terms)
}

fn read_checkpoint(path: &Path) -> Result<Vec<String>, CliError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad checkpoint: {e}"))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn classify(config: &RunConfig, pc: PipelineConfig, resume: Option<&Path>) -> Result<Output, CliError> {
    if resume.is_some() && config.cache_dir.is_none() {
        return Err(CliError::Usage("--resume needs --cache-dir for shard results".into()));
    }
    let shards = pc.shards();
    let done: Vec<String> = match resume {
        Some(path) => read_checkpoint(path)?,
        None => Vec::new(),
    };
    let checkpoint = Mutex::new(done.clone());
    let results: Result<Vec<ShardResult>, CliError> = shards
        .par_iter()
        .map(|&(a, c)| {
            let key = shard_key(a, c, &pc);
            let stored = config.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")));
            if let (true, Some(path)) = (done.contains(&key), &stored) {
                let text = fs::read_to_string(path)?;
                return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad shard {key}: {e}")));
            }
            let result = run_shard(a, c, &pc)?;
            if let Some(path) = &stored {
                fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
                write_atomic(path, &serde_json::to_string(&result).expect("serializable"))?;
                if let Some(cp) = resume {
                    if result.complete() {
                        let mut list = checkpoint.lock().expect("checkpoint lock");
                        list.push(key);
                        write_atomic(cp, &serde_json::to_string(&*list).expect("serializable"))?;
                    }
                }
            }
            Ok(result)
        })
        .collect();
    let report = PipelineReport::from_shards(pc, results?);
    let survivors: Vec<[u64; 3]> = report.survivors().into_iter().map(|(a, b, c)| [a, b, c]).collect();
    let rows = report
        .reports
        .iter()
        .map(|r| {
            let (status, p, m0, witness) = match &r.status {
                Status::NotCuspidal => ("not_cuspidal", String::new(), String::new(), String::new()),
                Status::Survivor => ("survivor", String::new(), String::new(), String::new()),
                Status::Eliminated { p, m0, witness } => ("eliminated", p.to_string(), m0.to_string(), witness.to_string()),
            };
            vec![
                r.a.to_string(),
                r.b.to_string(),
                r.c.to_string(),
                status.into(),
                p,
                m0,
                witness,
                r.primes_tried.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
            ]
        })
        .collect();
    let mut json = serde_json::to_value(&report).expect("serializable");
    json["survivors"] = json!(survivors);
    if !report.complete {
        return Err(CliError::Resource { message: "some shards are incomplete".into(), partial: Some(json) });
    }
    Ok(Output {
        json,
        header: vec!["a", "b", "c", "status", "p", "m0", "witness", "primes_tried"],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(config: &RunConfig) -> (i32, Value) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(config, &mut out, &mut err);
        let text = if out.is_empty() { err } else { out };
        (code, serde_json::from_slice(&text).unwrap())
    }

    #[test]
    fn spans() {
        assert_eq!("4..6".parse::<Span>().unwrap(), Span { lo: 4, hi: 6 });
        assert_eq!("4..=6".parse::<Span>().unwrap(), Span { lo: 4, hi: 6 });
        assert_eq!("7".parse::<Span>().unwrap(), Span { lo: 7, hi: 7 });
        assert!("x..3".parse::<Span>().is_err());
        assert_eq!(Span { lo: 2, hi: 12 }.to_string(), "2..12");
    }

    #[test]
    fn config_round_trip() {
        let mut config = RunConfig::new(Command::Classify {
            a: Span { lo: 4, hi: 6 },
            c: Span { lo: 2, hi: 12 },
            b_max: 99,
            s_limit: 1000,
            hecke_rounds: 3,
            resume: Some("cp.json".into()),
        });
        config.format = Format::Tsv;
        config.cache_dir = Some("/tmp/x".into());
        config.seed = u64::MAX;
        config.limits.jobs = Some(3);
        assert_eq!(RunConfig::from_json(&config.to_json()).unwrap(), config);
        let verify = RunConfig::new(Command::Verify { identity: Identity::Han, terms: 10, a: Some(2), b: Some(-3), c: None });
        assert_eq!(RunConfig::from_json(&verify.to_json()).unwrap(), verify);
    }

    #[test]
    fn zero_budget_is_usage_error() {
        let mut config = RunConfig::new(Command::Meta { a: 4, b: 5, c: 3 });
        config.limits.max_terms = 0;
        let (code, v) = run_json(&config);
        assert_eq!(code, EXIT_USAGE);
        assert_eq!(v["error"], "usage");
    }

    #[test]
    fn meta_record() {
        let (code, v) = run_json(&RunConfig::new(Command::Meta { a: 4, b: 5, c: 3 }));
        assert_eq!(code, EXIT_OK);
        assert_eq!(v["optimal_level"], 2304);
        assert_eq!(v["level"], 6912);
        assert_eq!(v["weight"], "2");
        assert_eq!(v["character_D"], 12);
        assert_eq!(v["classification"], "cuspidal");
    }

    #[test]
    fn precondition_exit() {
        let (code, v) = run_json(&RunConfig::new(Command::Meta { a: 4, b: 6, c: 3 }));
        assert_eq!(code, EXIT_PRECONDITION);
        assert_eq!(v["error"], "precondition");
    }

    #[test]
    fn resource_exit_with_partial_cores() {
        let mut config = RunConfig::new(Command::Cores { a: 4, m: 40 });
        config.limits.partition_budget = 100;
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(&config, &mut out, &mut err), EXIT_RESOURCE);
        let partial: Value = serde_json::from_slice(&out).unwrap();
        assert!(partial["generating_function"].is_string());
    }

    #[test]
    fn csv_projection() {
        let mut config = RunConfig::new(Command::Expand { a: 4, b: 5, c: 3, trunc: 100, normalized: false });
        config.format = Format::Csv;
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(&config, &mut out, &mut err), EXIT_OK);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("exponent,coefficient\n27,1\n"), "{text}");
    }
}
