//! Argument model and command implementations for the `mdsforge` binary.
//!
//! [`run`] executes one parsed command line and returns the JSON report; the
//! binary only handles thread setup, output and the exit status.

pub mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdsforge::characters::CharSpec;
use mdsforge::exact::{rf_equal, Z1, Z2, Z3};
use mdsforge::lfuncs::{self, classify_central, CentralClass, LConfig, LError};
use mdsforge::mds::{DivIndex, Mds, MdsError, PhiOptions, Rep, ZConfig, TRIVIAL};
use mdsforge::moment::{self, BumpKind, MomentError, SearchOutcome, SmoothWeight};
use mdsforge::newforms::{self, EtaTag, Newform, NewformError, DEFAULT_TABLE_LEN};
use mdsforge::weyl_cg::{self, CgError, CgFunction, CorrectionPolyTable, FeKind, WeylWord};
use mdsforge::Exec;
use num_complex::Complex64;
use report::{cplx, div_index, num, Check, Report, SCHEMA};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const THREADS_ENV: &str = "MDSFORGE_THREADS";

const TWIST_MINIMAL: &str = "the form is assumed twist-minimal";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid form selector {0:?}: not a built-in tag or readable coefficient file")]
    Form(String),
    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Newform(#[from] NewformError),
    #[error(transparent)]
    Cg(#[from] CgError),
    #[error(transparent)]
    L(#[from] LError),
    #[error(transparent)]
    Mds(#[from] MdsError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Parser, Debug, Clone)]
#[command(name = "mdsforge", version, about = "Double Dirichlet series of quadratic twists: verification suites and computations")]
pub struct Cli {
    /// Built-in tag (level11w2, level9w4) or path to a coefficient CSV.
    #[arg(long, global = true, default_value = "level11w2")]
    pub form: String,
    /// Coefficients to expand for a built-in form; commands pick a default.
    #[arg(long, global = true)]
    pub table_len: Option<usize>,
    /// Worker threads (overrides MDSFORGE_THREADS); 1 runs sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cutoffs: Cutoffs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Cutoffs {
    #[arg(long, global = true)]
    pub raw_cutoff: Option<f64>,
    #[arg(long, global = true)]
    pub d_max: Option<u64>,
    #[arg(long, global = true)]
    pub n_max: Option<u64>,
    #[arg(long, global = true)]
    pub euler_pmax: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub afe_balance: Option<f64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Exact and numeric verification suites.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Evaluate the double Dirichlet series.
    Eval {
        #[command(subcommand)]
        what: EvalTarget,
    },
    /// Scattering matrices.
    Scatter {
        #[command(subcommand)]
        which: ScatterKind,
    },
    /// Vector functional equation under gamma_1, for every a1c1 in Div(N).
    CheckFe {
        /// `s,w`
        #[arg(long, default_value = "0.8,2.5", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 1e-3)]
        max_residual: f64,
    },
    /// Twisted L-value `L(s, f x chi_{d0})`.
    Lvalue {
        #[arg(long, allow_hyphen_values = true)]
        d0: i64,
        #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
        s: String,
    },
    /// Smoothed first moment of central values against its main term.
    Moment {
        #[arg(long = "X", visible_alias = "x")]
        x: f64,
        #[arg(long, value_enum, default_value = "standard")]
        weight: WeightArg,
        #[arg(long, default_value_t = 0.5)]
        max_deviation: f64,
        /// Dump `d0,central,root_number` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Least odd squarefree d0 with nonvanishing central twist.
    SearchTwist {
        #[arg(long, default_value_t = 100)]
        max_d: u64,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum Suite {
    /// Weyl invariance, group relations, uniqueness.
    Weyl,
    /// Coefficient facts and formal functional equations of the correction polynomials.
    Cg,
    /// Numeric functional equations of P_d and Q~_n.
    Corr {
        #[arg(long, default_value_t = 1e-10)]
        max_residual: f64,
    },
    /// Exact residue identity and the numeric residue at w = 1.
    Residue {
        #[arg(long, default_value = "2", allow_hyphen_values = true)]
        s: String,
        #[arg(long, default_value_t = 1e-2)]
        max_relative: f64,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum EvalTarget {
    Z {
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value = "raw")]
        rep: Rep,
        /// `a,c`
        #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
        a2c2: String,
        #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
        a1c1: String,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum ScatterKind {
    /// Phi(s) for fixed a1c1, rows and columns indexed by a2c2.
    Phi {
        #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
        a1c1: String,
    },
    /// Psi(w) for fixed a2c2, rows and columns indexed by a1c1.
    Psi {
        #[arg(long, default_value = "0.3", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
        a2c2: String,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightArg {
    Standard,
    Skewed,
}

/// `x`, `x+yi`, `x-yi` or `yi`.
pub fn parse_complex(input: &str) -> Result<Complex64, CliError> {
    let err = || CliError::Parse { what: "complex number", input: input.to_string() };
    let t: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse().map(|x| Complex64::new(x, 0.0)).map_err(|_| err());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64, CliError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse().map_err(|_| err()),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse().map_err(|_| err())?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_pair(input: &str) -> Result<(Complex64, Complex64), CliError> {
    match input.split_once(',') {
        Some((a, b)) => Ok((parse_complex(a)?, parse_complex(b)?)),
        None => Err(CliError::Parse { what: "point s,w", input: input.to_string() }),
    }
}

pub fn parse_div(input: &str) -> Result<DivIndex, CliError> {
    let err = || CliError::Parse { what: "character index a,c", input: input.to_string() };
    let (a, c) = input.split_once(',').ok_or_else(err)?;
    Ok((a.trim().parse().map_err(|_| err())?, c.trim().parse().map_err(|_| err())?))
}

/// Thread count from the flag, else the environment; 0 lets the pool decide.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    match (flag, env) {
        (Some(n), _) => Ok(n),
        (None, Some(v)) => v.trim().parse().map_err(|_| CliError::Parse { what: THREADS_ENV, input: v.to_string() }),
        (None, None) => Ok(0),
    }
}

pub fn exec_for(threads: usize) -> Exec {
    if threads == 1 {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

struct Ctx {
    form: Newform,
    selector: String,
    zcfg: ZConfig,
    lcfg: LConfig,
    threads: usize,
}

impl Ctx {
    fn mds(&self) -> Result<Mds, CliError> {
        Ok(Mds::new(self.form.clone())?)
    }

    fn form_json(&self) -> Value {
        json!({
            "selector": self.selector,
            "source": self.form.source(),
            "level": self.form.level(),
            "weight": self.form.weight(),
            "table_len": self.form.len(),
            "root_number": self.form.root_number(),
        })
    }

    fn config_json(&self) -> Value {
        let z = &self.zcfg;
        json!({
            "raw_cutoff": num(z.raw_cutoff),
            "d_max": z.d_max,
            "n_max": z.n_max,
            "euler_pmax": z.euler_pmax,
            "tol": num(z.tol),
            "afe_balance": num(z.afe_balance),
            "l_balance": num(self.lcfg.balance),
            "l_check_balance": num(self.lcfg.check_balance),
            "exec": z.exec.name(),
            "threads": self.threads,
        })
    }
}

fn load_form(selector: &str, len: usize) -> Result<Newform, CliError> {
    let mut f = match selector.parse::<EtaTag>() {
        Ok(tag) => newforms::eta_form(tag, len),
        Err(_) => {
            let p = Path::new(selector);
            if !p.is_file() {
                return Err(CliError::Form(selector.to_string()));
            }
            newforms::load_coefficients(p)?
        }
    };
    lfuncs::attach_root_number(&mut f)?;
    Ok(f)
}

fn level_of(selector: &str) -> Option<u64> {
    selector.parse::<EtaTag>().ok().map(|t| newforms::eta_form(t, 2).level())
}

struct Outcome {
    inputs: Value,
    results: Value,
    checks: Vec<Check>,
    assumptions: Vec<String>,
}

/// Executes one command and assembles its report.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let start = Instant::now();
    let threads = resolve_threads(cli.threads, std::env::var(THREADS_ENV).ok().as_deref())?;
    let exec = exec_for(threads);
    let cmd = &cli.command;

    let default_len = match cmd {
        Command::Moment { x, .. } => match level_of(&cli.form) {
            Some(level) => moment::required_table_len(level, *x, 1.0).max(DEFAULT_TABLE_LEN),
            None => DEFAULT_TABLE_LEN,
        },
        // the reflected side of the gamma_1 check runs at a wider balance
        Command::CheckFe { .. } => 400_000,
        _ => DEFAULT_TABLE_LEN,
    };
    let (d_default, n_default) = match cmd {
        Command::CheckFe { .. } => (300, 10_000),
        Command::Verify { suite: Suite::Residue { .. } } => (10_000, 300),
        _ => (10_000, 10_000),
    };
    let base = ZConfig::default();
    let c = &cli.cutoffs;
    let zcfg = ZConfig {
        raw_cutoff: c.raw_cutoff.unwrap_or(base.raw_cutoff),
        d_max: c.d_max.unwrap_or(d_default),
        n_max: c.n_max.unwrap_or(n_default),
        euler_pmax: c.euler_pmax.unwrap_or(base.euler_pmax),
        tol: c.tol.unwrap_or(base.tol),
        afe_balance: c.afe_balance.unwrap_or(base.afe_balance),
        exec,
    };
    // written so that NaN is rejected too
    let valid = zcfg.tol > 0.0 && zcfg.afe_balance > 0.0 && zcfg.raw_cutoff >= 1.0;
    if !valid {
        return Err(CliError::Config("tolerances and balances must be positive, raw cutoff at least 1".into()));
    }
    let lcfg = LConfig { tol: zcfg.tol, ..LConfig::default() };
    let form = load_form(&cli.form, cli.table_len.unwrap_or(default_len))?;
    let ctx = Ctx { form, selector: cli.form.clone(), zcfg, lcfg, threads };

    let (name, out) = match cmd {
        Command::Verify { suite: Suite::Weyl } => ("verify weyl", verify_weyl()?),
        Command::Verify { suite: Suite::Cg } => ("verify cg", verify_cg()?),
        Command::Verify { suite: Suite::Corr { max_residual } } => ("verify corr", verify_corr(&ctx, *max_residual)?),
        Command::Verify { suite: Suite::Residue { s, max_relative } } => {
            ("verify residue", verify_residue(&ctx, parse_complex(s)?, *max_relative)?)
        }
        Command::Eval { what: EvalTarget::Z { s, w, rep, a2c2, a1c1 } } => {
            ("eval z", eval_z(&ctx, parse_complex(s)?, parse_complex(w)?, *rep, parse_div(a2c2)?, parse_div(a1c1)?)?)
        }
        Command::Scatter { which: ScatterKind::Phi { point, a1c1 } } => {
            ("scatter phi", scatter_phi(&ctx, parse_complex(point)?, parse_div(a1c1)?)?)
        }
        Command::Scatter { which: ScatterKind::Psi { point, a2c2 } } => {
            ("scatter psi", scatter_psi(&ctx, parse_complex(point)?, parse_div(a2c2)?)?)
        }
        Command::CheckFe { point, max_residual } => {
            let (s, w) = parse_pair(point)?;
            ("check-fe", check_fe(&ctx, s, w, *max_residual)?)
        }
        Command::Lvalue { d0, s } => ("lvalue", lvalue(&ctx, *d0, parse_complex(s)?)?),
        Command::Moment { x, weight, max_deviation, csv } => {
            ("moment", moment_cmd(&ctx, *x, *weight, *max_deviation, csv.as_deref())?)
        }
        Command::SearchTwist { max_d } => ("search-twist", search_twist(&ctx, *max_d)?),
    };
    let pass = out.checks.iter().all(|c| c.pass);
    Ok(Report {
        schema: SCHEMA,
        command: name.to_string(),
        form: ctx.form_json(),
        inputs: out.inputs,
        config: ctx.config_json(),
        results: out.results,
        checks: out.checks,
        assumptions: out.assumptions,
        pass,
        wall_time_s: num(start.elapsed().as_secs_f64()),
    })
}

fn invariance_checks() -> Result<Vec<Check>, CliError> {
    let g = weyl_cg::g_a3();
    (1..=3u8)
        .map(|i| {
            let h = weyl_cg::act(&g, &WeylWord::new(&[i])?)?;
            Ok(Check::flag(format!("g invariant under s{i}"), rf_equal(&h, &g)))
        })
        .collect()
}

fn verify_weyl() -> Result<Outcome, CliError> {
    let mut checks = invariance_checks()?;
    let rel = weyl_cg::verify_group_relations(6);
    for r in &rel.relations {
        checks.push(Check::flag(format!("(s{} s{})^{} = 1", r.i, r.j, r.order), r.identity));
    }
    checks.push(Check::flag("24 distinct coordinate maps", rel.distinct_maps == 24));
    let u = weyl_cg::check_uniqueness()?;
    checks.push(Check::flag("constant term 1", u.constant_term_one));
    for (i, ok) in u.independent.iter().enumerate() {
        checks.push(Check::flag(format!("(1 - z{}) g free of z{} on adjacent hyperplanes", i + 1, i + 1), *ok));
    }
    let results = json!({
        "relations": rel.relations.iter().map(|r| json!({ "i": r.i, "j": r.j, "order": r.order, "identity": r.identity })).collect::<Vec<_>>(),
        "distinct_maps": rel.distinct_maps,
        "max_word_length": rel.max_len,
    });
    Ok(Outcome { inputs: json!({}), results, checks, assumptions: vec![] })
}

fn verify_cg() -> Result<Outcome, CliError> {
    let mut checks = invariance_checks()?;
    let cg = CgFunction::default();
    let d = cg.degree();
    let (mut even_u, mut min0, mut min1, mut odd_odd, mut n) = (true, true, true, true, 0usize);
    for k1 in 0..=d {
        for k2 in 0..=d - k1 {
            for j in 0..=d - k1 - k2 {
                let a = cg.coefficient(k1, k2, j)?;
                n += 1;
                even_u &= a.is_even();
                let m = (k1 + k2).min(j);
                if m == 0 {
                    min0 &= a.degree() == Some(0) && a.coeff(0) == mdsforge::exact::rat(1);
                } else if m == 1 {
                    min1 &= a.is_zero();
                }
                if (k1 + k2) % 2 == 1 && j % 2 == 1 {
                    odd_odd &= a.is_zero();
                }
            }
        }
    }
    checks.push(Check::flag("coefficients even in u", even_u));
    checks.push(Check::flag("min(k1+k2, j) = 0 gives 1", min0));
    checks.push(Check::flag("min(k1+k2, j) = 1 vanishes", min1));
    checks.push(Check::flag("k1+k2 and j both odd vanishes", odd_odd));

    let tab = CorrectionPolyTable::default();
    let swap = weyl_cg::swap12();
    let (mut p_fe, mut p_sym, mut p_deg) = (true, true, true);
    for j in 0..=tab.jmax {
        let p = tab.p(j)?;
        p_fe &= weyl_cg::check_formal_fe(&tab, FeKind::P, (j, 0))?;
        p_sym &= p.substitute(&swap) == *p;
        let bound = (j - weyl_cg::parity(j)) as i32;
        p_deg &= p.max_degree(Z1).unwrap_or(0) <= bound && p.max_degree(Z2).unwrap_or(0) <= bound;
    }
    let (mut q_fe, mut q_deg) = (true, true);
    for (&(k1, k2), q) in &tab.q {
        q_fe &= weyl_cg::check_formal_fe(&tab, FeKind::Q, (k1, k2))?;
        let k = k1 + k2;
        q_deg &= q.max_degree(Z3).unwrap_or(0) <= (k - weyl_cg::parity(k)) as i32;
    }
    checks.push(Check::flag(format!("P_j functional equations, j <= {}", tab.jmax), p_fe));
    checks.push(Check::flag("P_j symmetric in z1, z2", p_sym));
    checks.push(Check::flag("P_j degree bounds", p_deg));
    checks.push(Check::flag(format!("Q_k functional equations, |k| <= {}", tab.kmax), q_fe));
    checks.push(Check::flag("Q_k degree bounds", q_deg));
    let mut recombined = true;
    for k1 in 0..=4 {
        for k2 in 0..=4 - k1 {
            for j in 0..=8 - k1 - k2 {
                recombined &= weyl_cg::coefficient_consistent(&cg, &tab, k1, k2, j)?;
            }
        }
    }
    checks.push(Check::flag("P and Q recombine to the series coefficients", recombined));
    let results = json!({
        "series_degree": d,
        "coefficients_checked": n,
        "p_count": tab.p.len(),
        "q_count": tab.q.len(),
        "p_terms": tab.p.iter().map(|p| p.len()).collect::<Vec<_>>(),
    });
    Ok(Outcome { inputs: json!({}), results, checks, assumptions: vec![] })
}

/// `p^2, q^2, p^2 q^2` for the two smallest odd primes `p < q` prime to the level.
pub fn corr_indices(level: u64) -> [u64; 3] {
    let ps: Vec<u64> = mdsforge::characters::primes_up_to(100).into_iter().filter(|&p| p > 2 && level % p != 0).take(2).collect();
    let (p, q) = (ps[0] * ps[0], ps[1] * ps[1]);
    [p, q, p * q]
}

fn verify_corr(ctx: &Ctx, max_residual: f64) -> Result<Outcome, CliError> {
    let m = ctx.mds()?;
    let grid = [
        Complex64::new(0.3, 0.0),
        Complex64::new(0.8, 0.0),
        Complex64::new(0.5, 1.5),
        Complex64::new(0.1, -0.7),
        Complex64::new(2.0, 0.4),
    ];
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / a.norm().max(b.norm()).max(1.0);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for n in corr_indices(m.level()) {
        let n1 = mdsforge::characters::square_split(n).1 as f64;
        let (mut p_res, mut q_res) = (0.0f64, 0.0f64);
        for &ac in m.div() {
            for &z in &grid {
                let lhs = m.p_d(n, z, ac)?;
                let rhs = Complex64::new(n1, 0.0).powc(2.0 - 4.0 * z) * m.p_d(n, 1.0 - z, ac)?;
                p_res = p_res.max(rel(lhs, rhs));
                let lhs = m.q_tilde(n, z, ac)?;
                let rhs = Complex64::new(n1, 0.0).powc(1.0 - 2.0 * z) * m.q_tilde(n, 1.0 - z, ac)?;
                q_res = q_res.max(rel(lhs, rhs));
            }
        }
        checks.push(Check::below(format!("P_{n} functional equation"), p_res, max_residual));
        checks.push(Check::below(format!("Q~_{n} functional equation"), q_res, max_residual));
        rows.push(json!({ "index": n, "p_residual": num(p_res), "q_residual": num(q_res) }));
    }
    let inputs = json!({ "max_residual": num(max_residual), "grid": grid.iter().map(|&z| cplx(z)).collect::<Vec<_>>() });
    Ok(Outcome { inputs, results: json!({ "indices": rows }), checks, assumptions: vec![TWIST_MINIMAL.into()] })
}

fn verify_residue(ctx: &Ctx, s: Complex64, max_relative: f64) -> Result<Outcome, CliError> {
    let mut checks = vec![
        Check::flag("local residue identity", weyl_cg::residue_factor_check(false)),
        Check::flag("perturbed residue identity rejected", !weyl_cg::residue_factor_check(true)),
    ];
    let m = ctx.mds()?;
    let r = m.residue_check(s, &[2, 3, 4], TRIVIAL, &ctx.zcfg)?;
    checks.push(Check::below("numeric residue relative error", r.relative_error, max_relative));
    let results = json!({
        "samples": r.samples.iter().map(|&(d, v)| json!({ "delta": num(d), "scaled_value": cplx(v) })).collect::<Vec<_>>(),
        "extrapolated": cplx(r.extrapolated),
        "target": cplx(r.target),
        "relative_error": num(r.relative_error),
    });
    let inputs = json!({ "s": cplx(s), "max_relative": num(max_relative) });
    Ok(Outcome { inputs, results, checks, assumptions: vec![TWIST_MINIMAL.into()] })
}

fn eval_z(ctx: &Ctx, s: Complex64, w: Complex64, rep: Rep, a2c2: DivIndex, a1c1: DivIndex) -> Result<Outcome, CliError> {
    let z = ctx.mds()?.z(rep, s, w, a2c2, a1c1, &ctx.zcfg)?;
    let finite = z.value.re.is_finite() && z.value.im.is_finite();
    let results = json!({
        "value": cplx(z.value),
        "error": num(z.error),
        "terms": z.terms,
        "cutoff": num(z.cutoff),
        "flagged": z.flagged,
    });
    let inputs = json!({ "s": cplx(s), "w": cplx(w), "rep": rep.to_string(), "a2c2": div_index(a2c2), "a1c1": div_index(a1c1) });
    Ok(Outcome { inputs, results, checks: vec![Check::flag("value finite", finite)], assumptions: vec![TWIST_MINIMAL.into()] })
}

fn matrix_json(rows: &[Vec<Complex64>]) -> Value {
    Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(|&z| cplx(z)).collect())).collect())
}

fn scatter_phi(ctx: &Ctx, s: Complex64, a1c1: DivIndex) -> Result<Outcome, CliError> {
    let m = ctx.mds()?;
    let phi = m.phi_matrix(s, a1c1, PhiOptions::default())?;
    let oracle = m.phi_oracle(s, a1c1)?;
    let diff = phi.iter().flatten().zip(oracle.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut checks = vec![Check::below("closed form against class-sum oracle", diff, 1e-10)];
    if (s - 0.5).norm() < 1e-15 && a1c1 == TRIVIAL {
        let i = m.div().iter().position(|&x| x == TRIVIAL).expect("trivial index present");
        let square = m.form().is_square_level();
        let want = if square { m.root_number() as f64 } else { 0.0 };
        checks.push(Check::below("trivial entry at s = 1/2", (phi[i][i] - want).norm(), 1e-8));
    }
    let results = json!({
        "index": m.div().iter().map(|&ac| div_index(ac)).collect::<Vec<_>>(),
        "matrix": matrix_json(&phi),
        "oracle_difference": num(diff),
    });
    let inputs = json!({ "s": cplx(s), "a1c1": div_index(a1c1) });
    Ok(Outcome { inputs, results, checks, assumptions: vec![TWIST_MINIMAL.into()] })
}

fn scatter_psi(ctx: &Ctx, w: Complex64, a2c2: DivIndex) -> Result<Outcome, CliError> {
    let m = ctx.mds()?;
    let div = m.div();
    let mut rows = Vec::with_capacity(div.len());
    for &a in div {
        rows.push(div.iter().map(|&b| m.psi_entry(w, a2c2, a, b)).collect::<Result<Vec<_>, _>>()?);
    }
    let finite = rows.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite());
    let results = json!({
        "index": div.iter().map(|&ac| div_index(ac)).collect::<Vec<_>>(),
        "matrix": matrix_json(&rows),
    });
    let inputs = json!({ "w": cplx(w), "a2c2": div_index(a2c2) });
    Ok(Outcome { inputs, results, checks: vec![Check::flag("entries finite", finite)], assumptions: vec![TWIST_MINIMAL.into()] })
}

fn check_fe(ctx: &Ctx, s: Complex64, w: Complex64, max_residual: f64) -> Result<Outcome, CliError> {
    let m = ctx.mds()?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &ac in m.div() {
        let r = m.check_fe_gamma1(s, w, ac, &ctx.zcfg, PhiOptions::default())?;
        checks.push(Check::below(format!("gamma_1 residual at a1c1 = ({}, {})", ac.0, ac.1), r.residual, max_residual));
        rows.push(json!({
            "a1c1": div_index(ac),
            "residual": num(r.residual),
            "error_bound": num(r.error_bound),
            "lhs": r.lhs.iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
            "rhs": r.rhs.iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
        }));
    }
    let inputs = json!({ "s": cplx(s), "w": cplx(w), "max_residual": num(max_residual) });
    Ok(Outcome { inputs, results: json!({ "entries": rows }), checks, assumptions: vec![TWIST_MINIMAL.into()] })
}

fn class_name(c: CentralClass) -> &'static str {
    match c {
        CentralClass::Nonzero => "nonzero",
        CentralClass::StructuralZero => "structural_zero",
        CentralClass::Indeterminate => "indeterminate",
    }
}

fn lvalue(ctx: &Ctx, d0: i64, s: Complex64) -> Result<Outcome, CliError> {
    let spec = CharSpec::quadratic(d0).map_err(LError::from)?;
    let l = lfuncs::L_twisted(s, &ctx.form, &spec, &ctx.lcfg)?;
    let central = (s - 0.5).norm() < 1e-15;
    let results = json!({
        "value": cplx(l.value),
        "est_error": num(l.est_error),
        "root_number": l.root_number,
        "conductor": l.conductor,
        "terms": l.terms,
        "flagged": l.flagged,
        "central_class": central.then(|| class_name(classify_central(l.value.re, l.root_number))),
    });
    let checks = vec![Check::below("error estimate", l.est_error, ctx.lcfg.tol)];
    Ok(Outcome { inputs: json!({ "d0": d0, "s": cplx(s) }), results, checks, assumptions: vec![] })
}

fn moment_cmd(ctx: &Ctx, x: f64, weight: WeightArg, max_dev: f64, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let kind = match weight {
        WeightArg::Standard => BumpKind::Standard,
        WeightArg::Skewed => BumpKind::Skewed,
    };
    let w = SmoothWeight::new(kind);
    let r = moment::moment_report(&ctx.mds()?, x, &w, ctx.zcfg.exec)?;
    if let Some(path) = csv {
        let mut text = String::from("d0,central,root_number\n");
        for t in &r.twists {
            text.push_str(&format!("{},{:.15e},{}\n", t.d0, t.central, t.root_number));
        }
        std::fs::write(path, text)?;
    }
    let forced = r.twists.iter().filter(|t| t.root_number == -1).count();
    let results = json!({
        "moment": num(r.moment),
        "main_term": num(r.main_term),
        "deviation": num(r.deviation),
        "terms": r.terms,
        "distinct_d0": r.twists.len(),
        "sign_forced_zeros": forced,
        "weight_mellin_half": num(w.mellin_half()),
        "sym2_l1": num(moment::sym2_value(&ctx.form)?),
    });
    let inputs = json!({ "X": num(x), "weight": r.weight_fn, "max_deviation": num(max_dev), "csv": csv.map(|p| p.display().to_string()) });
    let checks = vec![Check::below("relative deviation from main term", r.deviation, max_dev)];
    let assumptions = vec![TWIST_MINIMAL.into(), moment::D0_CONVENTION.to_string()];
    Ok(Outcome { inputs, results, checks, assumptions })
}

fn search_twist(ctx: &Ctx, max_d: u64) -> Result<Outcome, CliError> {
    let f = &ctx.form;
    let s = moment::least_twist(f, max_d)?;
    let (least, outcome) = match s.outcome {
        SearchOutcome::Found(d) => (Some(d), "found"),
        SearchOutcome::RootNumberObstruction => (None, "root_number_obstruction"),
        SearchOutcome::NoneFound => (None, "none_found"),
        SearchOutcome::Inconclusive => (None, "inconclusive"),
    };
    let explained = s.skipped.iter().all(|t| t.root_number == -1 && t.central.abs() < lfuncs::ZERO_THRESHOLD);
    let eps = f.root_number().unwrap_or(0);
    // d0 = 1 is the form itself, so its status is fixed by eps(pi_f)
    let consistent = match s.outcome {
        SearchOutcome::Found(1) => eps == 1,
        SearchOutcome::Found(_) => eps == -1 || !s.skipped.is_empty(),
        SearchOutcome::RootNumberObstruction => eps == -1 && f.is_square_level(),
        _ => true,
    };
    let checks = vec![
        Check::flag("search resolved", matches!(s.outcome, SearchOutcome::Found(_) | SearchOutcome::RootNumberObstruction)),
        Check::flag("every skipped candidate has root number -1", explained),
        Check::flag("consistent with eps(pi_f)", consistent),
    ];
    let tv = |t: &moment::TwistValue| {
        json!({ "d0": t.d0, "central": num(t.central), "root_number": t.root_number,
                "reason": if t.root_number == -1 { "root number -1 forces a central zero" } else { "below the nonvanishing threshold" } })
    };
    let results = json!({
        "least_d0": least,
        "outcome": outcome,
        "skipped": s.skipped.iter().map(tv).collect::<Vec<_>>(),
        "indeterminate": s.indeterminate.iter().map(tv).collect::<Vec<_>>(),
        "root_number": eps,
        "candidates_searched": moment::twist_candidates(f.level(), max_d).len(),
    });
    let assumptions = vec![TWIST_MINIMAL.into(), s.convention.to_string()];
    Ok(Outcome { inputs: json!({ "max_d": max_d }), results, checks, assumptions })
}
