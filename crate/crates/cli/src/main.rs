//! `repvar`: Alexander data, twisted cohomology, metabelian `SL(3)`
//! representations and their deformations, as schema-versioned JSON reports.
//!
//! Exit codes: 0 all checks pass, 1 input or hypothesis refusal, 2 numerical
//! failure, 3 a computed class or obstruction contradicts the theory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use repvar::alexander::{self, polynomial_roots, sort_roots, torsion_report, Root};
use repvar::deform::{
    self, boundary_report, deform_certificate, module_tables, replay_certificate, DeformCertificate,
    FIT_TOL,
};
use repvar::error::ErrorClass;
use repvar::knotio::{catalog_lookup, parse_knot_input, wirtinger_presentation};
use repvar::linalg::{cr, C64};
use repvar::metabel::{
    self, build_metabelian_sl3, cup_suite, normalize_to_sl3, principal_power,
    verify_representation, Rep, DOUBLE_DIGITS,
};
use repvar::{Error, PDCode, Presentation, Result};

const SCHEMA: u32 = 1;
/// Relator residual a constructed or converged representation must meet.
const TOL_RELATOR: f64 = 1e-10;
const TOL_DET: f64 = 1e-12;
/// Singular-value threshold behind every rank decision.
const TOL_RANK: f64 = 1e-8;
/// Replayed residuals may exceed the recorded ones by this factor.
const REPLAY_FACTOR: f64 = 10.0;
const REPLAY_FLOOR: f64 = 1e-12;
const TRACE_REPLAY_TOL: f64 = 1e-9;
const DEFAULT_T_GRID: [f64; 3] = [0.0025, 0.005, 0.01];

#[derive(Parser, Debug)]
#[command(name = "repvar", version, about = "Deformations of metabelian SL(3,C) knot group representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug, Clone)]
struct Options {
    /// Index into the distinct roots of Δ sorted by (multiplicity desc, argument asc).
    #[arg(long, global = true, default_value_t = 0)]
    alpha_root: usize,
    /// Sample parameters for the numeric deformation.
    #[arg(long = "t", global = true, value_delimiter = ',', num_args = 1..)]
    t: Vec<f64>,
    /// Highest order of the formal deformation.
    #[arg(long, global = true, default_value_t = 4)]
    order: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Significant decimal digits (1..=16, hardware double).
    #[arg(long, global = true, env = "REPVAR_PRECISION", default_value_t = DOUBLE_DIGITS)]
    precision: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Alexander polynomial, its roots and the torsion gate for each root.
    Analyze { knot: String },
    /// Cohomology dimension tables and the cup-product suite at the chosen root.
    Cohomology { knot: String },
    /// The reducible metabelian representation ρ̃ at the chosen root.
    Construct { knot: String },
    /// Formal and numeric deformation of ρ̃ with classification.
    Deform { knot: String },
    /// Replay a stored construct or deform report.
    Verify { file: PathBuf },
}

/// Resolved configuration recorded in every report.
#[derive(Debug, Clone, serde::Serialize)]
struct RunConfig {
    knot: String,
    precision: u32,
    tol_rank: f64,
    tol_relator: f64,
    order: usize,
    t_grid: Vec<f64>,
    output: Option<PathBuf>,
}

impl RunConfig {
    fn new(knot: &str, o: &Options) -> Result<Self> {
        alexander::tolerance_for_digits(o.precision)?;
        if o.order == 0 {
            return Err(Error::Refused("formal order must be at least 1".into()));
        }
        let t_grid = if o.t.is_empty() {
            DEFAULT_T_GRID.to_vec()
        } else {
            o.t.clone()
        };
        if let Some(t) = t_grid.iter().find(|t| !t.is_finite() || **t == 0.0) {
            return Err(Error::Refused(format!("sample parameter t = {t} must be finite and nonzero")));
        }
        Ok(Self {
            knot: knot.to_string(),
            precision: o.precision,
            tol_rank: TOL_RANK,
            tol_relator: TOL_RELATOR,
            order: o.order,
            t_grid,
            output: o.output.clone(),
        })
    }
}

/// A check that did not pass, with the exit class it maps to.
struct Failure {
    class: ErrorClass,
    message: String,
}

impl Failure {
    fn numerical(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Numerical,
            message: message.into(),
        }
    }

    fn inconsistent(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Inconsistency,
            message: message.into(),
        }
    }
}

struct Outcome {
    report: Value,
    failures: Vec<Failure>,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Refusal => 1,
        ErrorClass::Numerical => 2,
        ErrorClass::Inconsistency => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&out.report, cli.opts.output.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(e.class()));
            }
            for f in &out.failures {
                eprintln!("check failed: {}", f.message);
            }
            // the most severe class wins
            out.failures
                .iter()
                .map(|f| exit_code(f.class))
                .max()
                .map_or(ExitCode::SUCCESS, ExitCode::from)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}

fn emit(report: &Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze { knot } => analyze(&RunConfig::new(knot, &cli.opts)?),
        Command::Cohomology { knot } => cohomology(&RunConfig::new(knot, &cli.opts)?, cli.opts.alpha_root),
        Command::Construct { knot } => construct(&RunConfig::new(knot, &cli.opts)?, cli.opts.alpha_root),
        Command::Deform { knot } => deform(&RunConfig::new(knot, &cli.opts)?, cli.opts.alpha_root),
        Command::Verify { file } => verify(file),
    }
}

/// A catalog name, a file holding `PD[...]`/`BR[...]`, or inline text.
fn load_knot(knot: &str) -> Result<PDCode> {
    match catalog_lookup(knot) {
        Ok(pd) => Ok(pd),
        Err(Error::UnknownKnot(name)) => {
            let path = Path::new(knot);
            if path.is_file() {
                parse_knot_input(&fs::read_to_string(path)?)
            } else if knot.contains('[') {
                parse_knot_input(knot)
            } else {
                Err(Error::UnknownKnot(name))
            }
        }
        Err(e) => Err(e),
    }
}

fn pd_text(pd: &PDCode) -> String {
    let body: Vec<String> = pd
        .crossings
        .iter()
        .map(|[a, b, c, d]| format!("({a},{b},{c},{d})"))
        .collect();
    format!("PD[{}]", body.join(","))
}

/// Complex numbers are `[re, im]` throughout, matching the serialized reps.
fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

struct Setup {
    pd: PDCode,
    p: Presentation,
    delta: alexander::LaurentPoly,
    roots: Vec<Root>,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let pd = load_knot(&cfg.knot)?;
    let p = wirtinger_presentation(&pd)?;
    let delta = alexander::alexander_polynomial(&p)?;
    let mut roots = polynomial_roots(&delta, cfg.precision)?;
    sort_roots(&mut roots);
    Ok(Setup { pd, p, delta, roots })
}

fn select_root(s: &Setup, index: usize) -> Result<C64> {
    s.roots
        .get(index)
        .map(|r| r.value)
        .ok_or_else(|| {
            Error::Refused(format!(
                "alpha root index {index} out of range ({} distinct roots)",
                s.roots.len()
            ))
        })
}

fn header(command: &str, cfg: &RunConfig, s: &Setup) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m.insert("knot".into(), json!(cfg.knot));
    m.insert("pd".into(), json!(pd_text(&s.pd)));
    m.insert("config".into(), json!(cfg));
    m
}

/// `ρ̃` at a root, gated on a multiple root with cyclic torsion.
fn rho_tilde(s: &Setup, alpha: C64, precision: u32) -> Result<Rep> {
    let mut rt = normalize_to_sl3(&build_metabelian_sl3(&s.p, alpha)?);
    rt.precision = precision;
    Ok(rt)
}

fn analyze(cfg: &RunConfig) -> Result<Outcome> {
    let s = setup(cfg)?;
    let mut report = header("analyze", cfg, &s);
    report.insert("crossings".into(), json!(s.pd.crossings.len()));
    report.insert("generators".into(), json!(s.p.num_generators));
    report.insert(
        "alexander".into(),
        json!({
            "display": s.delta.to_string(),
            "coefficients": s.delta.int_coeffs(),
            "trace_obstruction_holds": deform::trace_obstruction_holds(&s.delta),
        }),
    );
    let roots: Vec<Value> = s
        .roots
        .iter()
        .enumerate()
        .map(|(index, root)| {
            let mut entry = json!({
                "index": index,
                "alpha": complex(root.value),
                "multiplicity": root.multiplicity,
            });
            match torsion_report(&s.p, root.value) {
                Ok(t) => {
                    entry["torsion"] = json!({
                        "r": t.r,
                        "dim_h1": t.dim_h1,
                        "cyclic": t.cyclic,
                        "factor": t.factor,
                    });
                    entry["sl3_gate"] = if t.r >= 2 && t.cyclic {
                        json!("pass")
                    } else {
                        json!(format!(
                            "refused: need r >= 2 and cyclic torsion, got r = {}, dim H1(C_alpha) = {}",
                            t.r, t.dim_h1
                        ))
                    };
                }
                Err(e) => entry["sl3_gate"] = json!(format!("refused: {e}")),
            }
            entry
        })
        .collect();
    report.insert("roots".into(), json!(roots));
    let mut failures = Vec::new();
    if !deform::trace_obstruction_holds(&s.delta) {
        failures.push(Failure::inconsistent("Δ(−2) vanishes"));
    }
    Ok(Outcome {
        report: Value::Object(report),
        failures,
    })
}

fn cohomology(cfg: &RunConfig, index: usize) -> Result<Outcome> {
    let s = setup(cfg)?;
    let alpha = select_root(&s, index)?;
    let rt = rho_tilde(&s, alpha, cfg.precision)?;
    let mut rows: Vec<(String, repvar::cohomology::CohomologyTable)> = module_tables(&s.p, &rt)?
        .into_iter()
        .map(|t| (t.module, t.table))
        .collect();
    let boundary = boundary_report(&s.p, &rt)?;
    rows.push(("boundary".into(), boundary.table));
    let cups = cup_suite(&s.p, alpha)?;

    let mut failures = Vec::new();
    for (name, t) in &rows {
        if t.euler_characteristic() != 0 {
            failures.push(Failure::inconsistent(format!(
                "{name}: h0 - h1 + h2 = {}",
                t.euler_characteristic()
            )));
        }
    }
    if !cups.expected_pattern() {
        failures.push(Failure::inconsistent(format!("cup classes off pattern: {cups:?}")));
    }

    let mut report = header("cohomology", cfg, &s);
    report.insert("alpha_root".into(), json!(index));
    report.insert("alpha".into(), complex(alpha));
    report.insert(
        "tables".into(),
        json!(rows
            .iter()
            .map(|(name, t)| json!({
                "module": name,
                "h0": t.h0, "h1": t.h1, "h2": t.h2, "z1": t.z1, "b1": t.b1,
            }))
            .collect::<Vec<_>>()),
    );
    report.insert(
        "boundary".into(),
        json!({
            "common_centralizer_dim": boundary.table.h0,
            "z1": boundary.table.z1,
            "meridian_centralizer_dim": boundary.meridian_centralizer_dim,
            "meridian_centralizer_abelian": boundary.meridian_centralizer_abelian,
        }),
    );
    report.insert("cup_products".into(), json!(cups));
    Ok(Outcome {
        report: Value::Object(report),
        failures,
    })
}

fn rep_failures(check: &metabel::RepCheck, what: &str) -> Vec<Failure> {
    let mut f = Vec::new();
    if check.relator > TOL_RELATOR {
        f.push(Failure::numerical(format!("{what}: relator residual {:.3e}", check.relator)));
    }
    if check.det > TOL_DET {
        f.push(Failure::numerical(format!("{what}: det residual {:.3e}", check.det)));
    }
    if let Some(b) = check.boundary.filter(|b| *b > TOL_RELATOR) {
        f.push(Failure::numerical(format!("{what}: boundary commutator {b:.3e}")));
    }
    f
}

/// `tr ρ̃(μ) = α^{−1/3}(α + 2)`.
fn expected_trace(alpha: C64) -> C64 {
    principal_power(alpha, -1.0 / 3.0) * (alpha + cr(2.0))
}

fn construct(cfg: &RunConfig, index: usize) -> Result<Outcome> {
    let s = setup(cfg)?;
    let alpha = select_root(&s, index)?;
    let rt = rho_tilde(&s, alpha, cfg.precision)?;
    let check = verify_representation(&s.p, &rt)?;
    let trace = rt.trace(&s.p.meridian_word())?;
    let expected = expected_trace(alpha);
    let mut failures = rep_failures(&check, "rho_tilde");
    if (trace - expected).norm() > TOL_RELATOR {
        failures.push(Failure::inconsistent(format!(
            "tr rho_tilde(mu) = {trace}, expected {expected}"
        )));
    }
    let mut report = header("construct", cfg, &s);
    report.insert("alpha_root".into(), json!(index));
    report.insert("alpha".into(), complex(alpha));
    report.insert("rho_tilde".into(), serde_json::to_value(&rt)?);
    report.insert("check".into(), json!(check));
    report.insert("meridian_trace".into(), complex(trace));
    report.insert("expected_trace".into(), complex(expected));
    Ok(Outcome {
        report: Value::Object(report),
        failures,
    })
}

fn deform(cfg: &RunConfig, index: usize) -> Result<Outcome> {
    let s = setup(cfg)?;
    if !deform::trace_obstruction_holds(&s.delta) {
        return Err(Error::Inconsistent("Δ(−2) vanishes".into()));
    }
    let alpha = select_root(&s, index)?;
    let rt = rho_tilde(&s, alpha, cfg.precision)?;
    let cert = deform_certificate(&cfg.knot, &s.p, &rt, cfg.order, &cfg.t_grid)?;
    let mut failures = Vec::new();
    for (k, r) in cert.obstruction_residuals.iter().enumerate() {
        if *r > FIT_TOL {
            failures.push(Failure::inconsistent(format!(
                "order {} obstruction residual {r:.3e}",
                k + 1
            )));
        }
    }
    for smp in &cert.samples {
        // no radius is known for small t, so an unstable sample is numerical
        if smp.residual > TOL_RELATOR {
            failures.push(Failure::numerical(format!("t = {}: residual {:.3e}", smp.t, smp.residual)));
        }
        if !smp.stable || !smp.nonmetabelian {
            failures.push(Failure::numerical(format!(
                "t = {}: algebra_dim {}, centralizer_dim {}, |tr| {:.3e}",
                smp.t,
                smp.algebra_dim,
                smp.centralizer_dim,
                smp.trace_mu.norm()
            )));
        }
    }
    let mut report = header("deform", cfg, &s);
    report.insert("alpha_root".into(), json!(index));
    if let Value::Object(body) = serde_json::to_value(&cert)? {
        report.extend(body);
    }
    Ok(Outcome {
        report: Value::Object(report),
        failures,
    })
}

#[derive(Default)]
struct ReplayLog {
    checks: Vec<Value>,
    failures: Vec<Failure>,
}

impl ReplayLog {
    fn residual(&mut self, name: String, recorded: f64, replayed: f64) {
        let ok = replayed <= REPLAY_FACTOR * recorded + REPLAY_FLOOR;
        if !ok {
            self.failures.push(Failure::numerical(format!(
                "{name}: replayed {replayed:.3e} vs recorded {recorded:.3e}"
            )));
        }
        self.checks
            .push(json!({ "name": name, "recorded": recorded, "replayed": replayed, "ok": ok }));
    }
}

fn verify(file: &Path) -> Result<Outcome> {
    let stored: Value = serde_json::from_str(&fs::read_to_string(file)?)?;
    let schema = stored.get("schema").and_then(Value::as_u64);
    if schema != Some(SCHEMA as u64) {
        return Err(Error::Refused(format!("unsupported report schema {schema:?}")));
    }
    let pd = stored
        .get("pd")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Refused("report lacks a pd field".into()))?;
    let p = wirtinger_presentation(&parse_knot_input(pd)?)?;
    let command = stored.get("command").and_then(Value::as_str).unwrap_or_default();

    let mut log = ReplayLog::default();

    match command {
        "construct" => {
            let rt: Rep = serde_json::from_value(stored["rho_tilde"].clone())?;
            let recorded: metabel::RepCheck = serde_json::from_value(stored["check"].clone())?;
            let now = verify_representation(&p, &rt)?;
            log.residual("relator".into(), recorded.relator, now.relator);
            log.residual("det".into(), recorded.det, now.det);
            if let (Some(a), Some(b)) = (recorded.boundary, now.boundary) {
                log.residual("boundary".into(), a, b);
            }
        }
        "deform" => {
            let cert: DeformCertificate = serde_json::from_value(stored.clone())?;
            let replay = replay_certificate(&p, &cert)?;
            if replay.obstruction_residuals.len() != cert.obstruction_residuals.len() {
                log.failures.push(Failure::inconsistent("obstruction order count differs"));
            }
            for (k, (a, b)) in cert
                .obstruction_residuals
                .iter()
                .zip(&replay.obstruction_residuals)
                .enumerate()
            {
                log.residual(format!("obstruction order {}", k + 1), *a, *b);
            }
            for ((smp, cl), res) in cert.samples.iter().zip(&replay.samples).zip(&replay.sample_residuals) {
                log.residual(format!("sample t = {}", smp.t), smp.residual, *res);
                let same = cl.algebra_dim == smp.algebra_dim
                    && cl.irreducible == smp.irreducible
                    && cl.centralizer_dim == smp.centralizer_dim
                    && cl.stable == smp.stable
                    && cl.nonmetabelian == smp.nonmetabelian
                    && (cl.meridian_trace - smp.trace_mu).norm() <= TRACE_REPLAY_TOL;
                if !same {
                    log.failures.push(Failure::inconsistent(format!(
                        "sample t = {}: classification differs on replay",
                        smp.t
                    )));
                }
                log.checks.push(json!({ "name": format!("classification t = {}", smp.t), "ok": same }));
            }
        }
        other => {
            return Err(Error::Refused(format!("cannot verify a `{other}` report")));
        }
    }
    let report = json!({
        "schema": SCHEMA,
        "command": "verify",
        "file": file,
        "verified": command,
        "checks": log.checks,
        "ok": log.failures.is_empty(),
    });
    Ok(Outcome {
        report,
        failures: log.failures,
    })
}
