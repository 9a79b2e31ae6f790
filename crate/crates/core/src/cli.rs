//! Command-line front end: `analyze`, `verify` and `protocol`, each producing
//! a JSON report.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::advance::{
    enumerate_advance_shareable, outcome_of, shortened_dim, AdvanceProtocol, OutcomeChoice,
};
use crate::error::{Error, Result};
use crate::limits::{saturating_pow, Budget};
use crate::lincode::{build_c1, build_c2, SchemeParams};
use crate::qstate::{digits_of, StateVector};
use crate::ramp::{classify, AccessVerifier, Encoder, SecretState, FACTORIZATION_TOL};
use crate::share_set::ShareSet;
use crate::stab::{
    build_stabilizer, calibrate_logicals, check_stabilizes, codespace_dimension,
    find_logical_operators,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SKIPPED: i32 = 3;

/// State comparisons in verdicts.
const STATE_TOL: f64 = 1e-9;
/// Smallest distance a correlated set must show in the access table.
const SEPARATION: f64 = 1e-2;
/// Largest number of Bell branches swept exhaustively by `protocol`.
const EXHAUSTIVE_BRANCHES: usize = 4096;
/// Branches sampled when the sweep would be larger.
const SAMPLED_BRANCHES: usize = 256;

#[derive(Parser, Debug)]
#[command(
    name = "rampqss",
    version,
    about = "Ramp quantum secret sharing analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Codes, stabilizer, access classes and advance-shareable sets.
    Analyze(CommonArgs),
    /// Stabilizer checks and state-level access verification.
    Verify(SetArgs),
    /// Simulates advance sharing of a set, sweeping Bell outcomes.
    Protocol(SetArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Share dimension, a prime above n = 2k - L.
    #[arg(long)]
    p: u32,
    /// Reconstruction threshold.
    #[arg(long)]
    k: usize,
    /// Secret size in qudits.
    #[arg(long = "L")]
    l: usize,
    /// Evaluation points, comma separated; defaults to 1..n.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest dense joint state to simulate, in amplitudes.
    #[arg(long, value_parser = parse_amplitudes)]
    budget: Option<u128>,
    /// Writes the amplitudes of a representative state to this file.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    /// Writes the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SetArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Share set, e.g. `1,3`; empty means the empty set.
    #[arg(long)]
    set: Option<String>,
}

fn parse_amplitudes(s: &str) -> std::result::Result<u128, String> {
    if let Ok(v) = s.parse::<u128>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 && v < 1e30 => Ok(v as u128),
        _ => Err(format!("not a positive amplitude count: {s}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Analyze,
    Verify,
    Protocol,
}

/// Everything one run depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: SchemeParams,
    pub seed: u64,
    pub set: Option<ShareSet>,
    pub budget: Budget,
    pub dump_state: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: CommandKind, params: SchemeParams) -> Self {
        RunConfig {
            command,
            params,
            seed: 0,
            set: None,
            budget: Budget::default(),
            dump_state: None,
            out: None,
        }
    }

    fn from_args(command: CommandKind, c: CommonArgs, set: Option<String>) -> Result<Self> {
        let params = SchemeParams::new(c.p, c.k, c.l, c.alphas)?;
        let set = set.map(|s| ShareSet::parse(&s, params.n)).transpose()?;
        let mut budget = Budget::default();
        if let Some(b) = c.budget {
            budget.max_amplitudes = b;
        }
        Ok(RunConfig {
            command,
            params,
            seed: c.seed,
            set,
            budget,
            dump_state: c.dump_state,
            out: c.out,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail { reason: String },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub verdict: Verdict,
    pub elapsed_us: u64,
    pub body: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: CommandKind,
    pub params: SchemeParams,
    pub seed: u64,
    pub budget: Budget,
    pub sections: Vec<Section>,
}

impl ReportDocument {
    fn new(cfg: &RunConfig) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo {
                name: TOOL_NAME.into(),
                version: TOOL_VERSION.into(),
            },
            command: cfg.command,
            params: cfg.params.clone(),
            seed: cfg.seed,
            budget: cfg.budget,
            sections: Vec::new(),
        }
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// 1 on any failure, otherwise 3 on any skip, otherwise 0.
    pub fn exit_code(&self) -> i32 {
        let verdicts = || self.sections.iter().map(|s| &s.verdict);
        if verdicts().any(|v| matches!(v, Verdict::Fail { .. })) {
            EXIT_FAIL
        } else if verdicts().any(|v| matches!(v, Verdict::Skipped { .. })) {
            EXIT_SKIPPED
        } else {
            EXIT_PASS
        }
    }

    /// The report with every timing field zeroed.
    pub fn without_timing(&self) -> ReportDocument {
        let mut r = self.clone();
        for s in &mut r.sections {
            s.elapsed_us = 0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Runs `f` as a section; budget errors become skips, others failures.
    fn timed(&mut self, name: &str, f: impl FnOnce() -> Result<(Verdict, Value)>) {
        let start = Instant::now();
        let (verdict, body) = match f() {
            Ok(v) => v,
            Err(e @ Error::Resource { .. }) => (
                Verdict::Skipped {
                    reason: e.to_string(),
                },
                Value::Null,
            ),
            Err(e) => (
                Verdict::Fail {
                    reason: e.to_string(),
                },
                Value::Null,
            ),
        };
        self.sections.push(Section {
            name: name.into(),
            verdict,
            elapsed_us: start.elapsed().as_micros() as u64,
            body,
        });
    }
}

fn check(ok: bool, reason: impl FnOnce() -> String) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail { reason: reason() }
    }
}

fn words(ws: &[crate::qstate::PauliWord]) -> Vec<String> {
    ws.iter().map(ToString::to_string).collect()
}

pub fn cmd_analyze(cfg: &RunConfig) -> ReportDocument {
    let params = &cfg.params;
    let budget = &cfg.budget;
    let mut report = ReportDocument::new(cfg);
    let n = params.n;
    let c1 = build_c1(params);
    let c2 = build_c2(params);

    report.timed("codes", || {
        let d_small = params.k - params.l + 1;
        let d_large = n - params.k + params.l + 1;
        let mut rows = Vec::new();
        let mut bad = Vec::new();
        for (name, code, expected) in [
            ("C1", c1.clone(), d_small),
            ("C2", c2.clone(), d_large),
            ("C1_dual", c1.dual(), d_large),
            ("C2_dual", c2.dual(), d_small),
        ] {
            let d = if code.dim() == 0 {
                None
            } else {
                Some(code.min_distance(budget.max_codewords)?)
            };
            if d.is_some_and(|d| d != expected) {
                bad.push(format!(
                    "{name} has d = {}, expected {expected}",
                    d.unwrap()
                ));
            }
            rows.push(json!({
                "code": name,
                "dim": code.dim(),
                "generator": code.generator().to_rows(),
                "min_distance": d,
                "expected": if code.dim() == 0 { None } else { Some(expected) },
            }));
        }
        if n > budget.max_subset_universe {
            return Err(Error::Resource {
                what: "share subset enumeration".into(),
                needed: 1u128 << n,
                limit: 1u128 << budget.max_subset_universe,
            });
        }
        let mut identity_failures = 0usize;
        for j in ShareSet::all_subsets(n) {
            for c in [c1.dual(), c2.clone()] {
                if c.shorten(&j)?.dim() + c.dual().puncture(&j)?.dim() != n - j.len() {
                    identity_failures += 1;
                }
            }
        }
        if identity_failures > 0 {
            bad.push(format!(
                "{identity_failures} shortening/puncturing identity failures"
            ));
        }
        let ok = bad.is_empty();
        Ok((
            check(ok, || bad.join("; ")),
            json!({
                "codes": rows,
                "c2_in_c1": c2.is_subcode_of(&c1),
                "identity_failures": identity_failures,
            }),
        ))
    });

    report.timed("stabilizer", || {
        let g = build_stabilizer(params);
        let gens = g.generators();
        let commuting = gens.iter().enumerate().all(|(i, a)| {
            gens[i + 1..]
                .iter()
                .all(|b| a.commutes_with(b).unwrap_or(false))
        });
        let count_ok = gens.len() == n - params.l;
        let dim_ok = g.symplectic_code().dim() == 2 * (params.k - params.l);
        Ok((
            check(commuting && count_ok && dim_ok, || {
                format!(
                    "commuting = {commuting}, {} generators for n \u{2212} L = {}, dim C = {}",
                    gens.len(),
                    n - params.l,
                    g.symplectic_code().dim()
                )
            }),
            json!({
                "generators": words(gens),
                "dim_c": g.symplectic_code().dim(),
            }),
        ))
    });

    let advance = enumerate_advance_shareable(params, budget);
    report.timed("subsets", || {
        let r = advance.clone()?;
        let rows: Vec<Value> = r
            .records
            .iter()
            .map(|rec| {
                json!({
                    "set": rec.set.to_string(),
                    "size": rec.set.len(),
                    "access_class": rec.access_class,
                    "dim_c_j": rec.dim_c_j,
                    "required": rec.required,
                    "advance_shareable": rec.criterion_met,
                })
            })
            .collect();
        let show = |v: &[ShareSet]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        Ok((
            Verdict::Pass,
            json!({
                "rows": rows,
                "advance_shareable": show(&r.shareable_sets()),
                "maximal": show(&r.maximal),
            }),
        ))
    });
    report.timed("threshold_characterization", || {
        let r = advance.clone()?;
        Ok((
            check(r.threshold_disagreements == 0, || {
                format!(
                    "{} sets disagree with |J| \u{2264} k \u{2212} L",
                    r.threshold_disagreements
                )
            }),
            json!({ "sets": r.records.len(), "disagreements": r.threshold_disagreements }),
        ))
    });
    report.timed("forbidden_equivalence", || {
        let r = advance.clone()?;
        Ok((
            check(r.forbidden_disagreements == 0, || {
                format!(
                    "{} sets disagree with the forbidden class",
                    r.forbidden_disagreements
                )
            }),
            json!({ "sets": r.records.len(), "disagreements": r.forbidden_disagreements }),
        ))
    });
    report
}

pub fn cmd_verify(cfg: &RunConfig) -> ReportDocument {
    let params = &cfg.params;
    let budget = &cfg.budget;
    let p = params.p;
    let mut report = ReportDocument::new(cfg);
    let g = build_stabilizer(params);
    let encoder = Encoder::new(params);

    report.timed("stabilizer_forward", || {
        let total = saturating_pow(p.get(), params.l + params.n);
        if total > budget.max_codespace_dim {
            return Err(Error::Resource {
                what: "encoding every basis secret".into(),
                needed: total,
                limit: budget.max_codespace_dim,
            });
        }
        let mut worst = 0.0f64;
        for si in 0..p.as_usize().pow(params.l as u32) {
            let e = encoder.encode_basis(&digits_of(p, params.l, si))?;
            worst = worst.max(check_stabilizes(&g, &e)?);
        }
        Ok((
            check(worst <= STATE_TOL, || format!("max deviation {worst:e}")),
            json!({ "generators": words(g.generators()), "max_deviation": worst }),
        ))
    });

    report.timed("stabilizer_reverse", || {
        let dim = codespace_dimension(&g, budget)?;
        let expected = saturating_pow(p.get(), params.l);
        Ok((
            check(dim == expected, || {
                format!("fixed space has dimension {dim}, expected {expected}")
            }),
            json!({ "codespace_dimension": dim, "expected": expected }),
        ))
    });

    report.timed("logical_operators", || {
        let ops = find_logical_operators(&g, params, &ShareSet::empty(params.n), budget)?;
        let cal = calibrate_logicals(&g, &ops, &encoder, budget)?;
        Ok((
            check(cal.calibrated && cal.is_canonically_paired(&g), || {
                "calibrated operators are not canonically paired".into()
            }),
            json!({ "logical_x": words(&cal.logical_x), "logical_z": words(&cal.logical_z) }),
        ))
    });

    report.timed("access_structure", || {
        let mut verifier = AccessVerifier::new(params, budget)?;
        let sets = match &cfg.set {
            Some(s) => vec![s.clone()],
            None => {
                if params.n > budget.max_subset_universe {
                    return Err(Error::Resource {
                        what: "share subset enumeration".into(),
                        needed: 1u128 << params.n,
                        limit: 1u128 << budget.max_subset_universe,
                    });
                }
                ShareSet::all_subsets(params.n)
            }
        };
        let mut rows = Vec::new();
        let mut mismatches = Vec::new();
        let mut max_factorizing = 0.0f64;
        let mut min_correlated = f64::INFINITY;
        for j in sets {
            let v = verifier.verify(&j)?;
            let expected = classify(&j, params);
            if v.class() != expected {
                mismatches.push(j.to_string());
            }
            for (d, factorizes) in [
                (v.distance, v.is_forbidden),
                (v.complement_distance, v.is_qualified),
            ] {
                if factorizes {
                    max_factorizing = max_factorizing.max(d.upper);
                } else {
                    min_correlated = min_correlated.min(d.lower);
                }
            }
            rows.push(json!({
                "set": j.to_string(),
                "class": v.class(),
                "expected": expected,
                "is_forbidden": v.is_forbidden,
                "is_qualified": v.is_qualified,
                "distance": v.distance,
                "complement_distance": v.complement_distance,
            }));
        }
        let separated = max_factorizing <= FACTORIZATION_TOL
            && (min_correlated.is_infinite() || min_correlated >= SEPARATION);
        let min_correlated = min_correlated.is_finite().then_some(min_correlated);
        Ok((
            check(mismatches.is_empty() && separated, || {
                if mismatches.is_empty() {
                    format!(
                        "distances not separated: factorizing up to {max_factorizing:e}, correlated from {min_correlated:?}"
                    )
                } else {
                    format!("classes differ from the threshold rule on {}", mismatches.join(" "))
                }
            }),
            json!({
                "rows": rows,
                "max_factorizing_distance": max_factorizing,
                "min_correlated_distance": min_correlated,
            }),
        ))
    });
    report
}

/// Fails with a usage error when the set cannot be shared in advance.
pub fn cmd_protocol(cfg: &RunConfig) -> Result<(ReportDocument, Option<StateVector>)> {
    let params = &cfg.params;
    let j = cfg.set.clone().unwrap_or_else(|| ShareSet::empty(params.n));
    let code = build_stabilizer(params).symplectic_code().clone();
    crate::advance::require_advance_shareable(&code, &j)?;

    let mut report = ReportDocument::new(cfg);
    let dim_c_j = shortened_dim(&code, &j)?;
    report.timed("criterion", || {
        Ok((
            Verdict::Pass,
            json!({
                "set": j.to_string(),
                "dim_c": code.dim(),
                "dim_c_j": dim_c_j,
                "required": code.dim() as i64 - 2 * j.len() as i64,
                "access_class": classify(&j, params),
            }),
        ))
    });

    let mut first_state = None;
    report.timed("protocol", || {
        let proto = AdvanceProtocol::prepare(params, &j, &cfg.budget)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let secret = SecretState::random(params, &mut rng);
        let p = params.p;
        let total = p.as_usize().pow(2 * params.l as u32);
        let exhaustive = total <= EXHAUSTIVE_BRANCHES;
        let branches: Vec<usize> = if exhaustive {
            (0..total).collect()
        } else {
            (0..SAMPLED_BRANCHES).map(|_| rng.random_range(0..total)).collect()
        };
        let expected_probability = (total as f64).recip();
        let mut min_fidelity = f64::INFINITY;
        let mut max_deviation = 0.0f64;
        let mut max_probability_error = 0.0f64;
        let mut max_predistributed = 0.0f64;
        let mut touches = false;
        let mut example = None;
        for &idx in &branches {
            let choice = OutcomeChoice::Forced(outcome_of(p, params.l, idx));
            let (t, state) = proto.run_with_state(&secret, &choice)?;
            min_fidelity = min_fidelity.min(t.fidelity);
            max_deviation = max_deviation.max(t.max_deviation);
            max_probability_error =
                max_probability_error.max((t.probability - expected_probability).abs());
            max_predistributed = max_predistributed.max(t.predistributed_distance);
            touches |= t.touches_advance_set;
            if example.is_none() {
                example = Some(t);
                first_state = Some(state);
            }
        }
        let ok = min_fidelity >= 1.0 - STATE_TOL
            && max_deviation <= STATE_TOL
            && max_probability_error <= STATE_TOL
            && max_predistributed <= STATE_TOL
            && !touches;
        let map = proto.correction_map();
        Ok((
            check(ok, || {
                format!(
                    "min fidelity {min_fidelity}, max deviation {max_deviation:e}, probability error {max_probability_error:e}, predistributed distance {max_predistributed:e}, corrections touch the set: {touches}"
                )
            }),
            json!({
                "secret": "seeded random superposition",
                "branches": branches.len(),
                "exhaustive": exhaustive,
                "min_fidelity": min_fidelity,
                "max_deviation": max_deviation,
                "expected_probability": expected_probability,
                "max_probability_error": max_probability_error,
                "max_predistributed_distance": max_predistributed,
                "corrections_touch_set": touches,
                "correction_map": { "x": map.x, "z": map.z },
                "logical_x": words(&proto.logicals().logical_x),
                "logical_z": words(&proto.logicals().logical_z),
                "example": example,
            }),
        ))
    });
    Ok((report, first_state))
}

/// The report for `cfg`, plus the state `--dump-state` should write.
pub fn execute(cfg: &RunConfig) -> Result<(ReportDocument, Option<StateVector>)> {
    let zero_encoding = || {
        Encoder::new(&cfg.params)
            .encode_basis(&vec![0; cfg.params.l])
            .ok()
    };
    match cfg.command {
        CommandKind::Analyze => Ok((cmd_analyze(cfg), zero_encoding())),
        CommandKind::Verify => Ok((cmd_verify(cfg), zero_encoding())),
        CommandKind::Protocol => cmd_protocol(cfg),
    }
}

fn write_outputs(
    cfg: &RunConfig,
    report: &ReportDocument,
    state: Option<&StateVector>,
) -> io::Result<()> {
    if let Some(path) = &cfg.dump_state {
        let mut w = BufWriter::new(File::create(path)?);
        if let Some(s) = state {
            s.write_dump(&mut w)?;
        }
        w.flush()?;
    }
    let text = report.to_json();
    match &cfg.out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{text}")
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match cli.command {
        Command::Analyze(c) => RunConfig::from_args(CommandKind::Analyze, c, None),
        Command::Verify(s) => RunConfig::from_args(CommandKind::Verify, s.common, s.set),
        Command::Protocol(s) => RunConfig::from_args(CommandKind::Protocol, s.common, s.set),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let (report, state) = match execute(&cfg) {
        Ok(r) => r,
        Err(e @ Error::NotAdvanceShareable { .. }) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    if let Err(e) = write_outputs(&cfg, &report, state.as_ref()) {
        eprintln!("error: {e}");
        return EXIT_FAIL;
    }
    report.exit_code()
}
