mod report;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use openasep::askey_wilson::{aw_marginal, generating_function_aw, generating_function_exact};
use openasep::asep::{
    gillespie_run, sample_stationary, stationary_exact, AsepRates, BoundaryParams, BurninOptions, Configuration,
    HeightPath, Horizon, SampleMethod, TasepSampler,
};
use openasep::coupling::{sandwich_audit, AuditOptions};
use openasep::laplace::{eta_laplace, identity_suite, limit_laplace, psi, LaplaceQuery, PSI_TOL};
use openasep::limit::{sample_eta, LimitParams, TimeGrid};
use openasep::quad::Quad;
use openasep::rng;
use openasep::stats::{mean_se, MeanSe};
use openasep::verify::{convergence_experiment, ExperimentConfig};
use rand::Rng as _;
use report::Output;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Open ASEP stationary measures near the triple point and their limits.
#[derive(Debug, Parser)]
#[command(name = "openasep", version = report::BUILD_ID)]
struct Cli {
    /// JSON file with the subcommand's parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance override for the pass/fail decision.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gillespie trajectory as CSV.
    Simulate(SimulateArgs),
    /// Exact stationary law, or site densities from stationary samples.
    Stationary(StationaryArgs),
    /// Height paths of stationary samples as CSV.
    Height(StationaryArgs),
    /// Sandwich audit of the three-species coupling.
    CouplingAudit(AuditArgs),
    /// Askey–Wilson generating function against the exact stationary law.
    AwCheck(AwArgs),
    /// Paths of the limit process eta as CSV.
    LimitSample(LimitSampleArgs),
    /// Limit Laplace transform by two routes, or the full identity suite.
    VerifyLaplace(VerifyArgs),
    /// Finite-n Laplace transforms and distances against the limit.
    Converge,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

impl RateArgs {
    fn rates(&self) -> Result<AsepRates> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("--{name} is required"));
        Ok(AsepRates::new(
            need(self.alpha, "alpha")?,
            need(self.beta, "beta")?,
            self.gamma.unwrap_or(0.0),
            self.delta.unwrap_or(0.0),
            self.q.unwrap_or(0.0),
            self.n.ok_or_else(|| anyhow!("--n is required"))?,
        )?)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    rates: RateArgs,
    /// Time horizon.
    #[arg(long)]
    time: Option<f64>,
    /// Event horizon (default 1000 when no time is given).
    #[arg(long)]
    events: Option<u64>,
    /// Initial configuration as a 0/1 string (default empty).
    #[arg(long)]
    start: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct StationaryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    rates: RateArgs,
    /// exact, burnin or matrix.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    rates: RateArgs,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AwArgs {
    #[arg(long = "A")]
    #[serde(rename = "A")]
    a: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    #[serde(rename = "B")]
    b: Option<f64>,
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
    #[arg(long = "D", allow_hyphen_values = true)]
    #[serde(rename = "D")]
    d: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Largest number of sites.
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
}

/// A real number or `inf`, kept as a string in JSON when infinite.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Ext(#[serde(with = "openasep::limit::extreal")] f64);

impl std::str::FromStr for Ext {
    type Err = std::num::ParseFloatError;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.parse().map(Ext)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LimitArgs {
    /// First boundary parameter; `inf` allowed.
    #[arg(long = "a", allow_hyphen_values = true)]
    a: Option<Ext>,
    /// Second boundary parameter; `inf` allowed.
    #[arg(long = "c", allow_hyphen_values = true)]
    c: Option<Ext>,
}

impl LimitArgs {
    fn params(&self) -> Result<LimitParams> {
        let a = self.a.ok_or_else(|| anyhow!("--a is required"))?.0;
        let c = self.c.ok_or_else(|| anyhow!("--c is required"))?.0;
        Ok(LimitParams::new(a, c)?)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LimitSampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    limit: LimitArgs,
    /// Comma-separated times in (0, 1].
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    times: Vec<f64>,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct VerifyArgs {
    /// Run the whole identity suite.
    #[arg(long)]
    #[serde(default)]
    all: bool,
    #[command(flatten)]
    #[serde(flatten)]
    limit: LimitArgs,
    /// Comma-separated query times ending at 1.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    x: Vec<f64>,
    /// Comma-separated coefficients, one per time.
    #[arg(long = "coef", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    coef: Vec<f64>,
}

/// Overlays the flags on the config file and returns the merged parameters
/// with their JSON echo.
fn merge<T: Serialize + DeserializeOwned>(config: &Option<PathBuf>, flags: &T) -> Result<(T, Value)> {
    let mut base = match config {
        Some(p) => {
            let s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Value>(&s).with_context(|| format!("parsing {}", p.display()))?
        }
        None => json!({}),
    };
    let over = serde_json::to_value(flags)?;
    if let (Value::Object(b), Value::Object(o)) = (&mut base, over) {
        for (k, v) in o {
            let empty = v.is_null() || v == json!([]) || v == json!(false);
            if !empty {
                b.insert(k, v);
            }
        }
    } else {
        bail!("config must be a JSON object");
    }
    let merged: T = serde_json::from_value(base.clone()).context("invalid parameters")?;
    let echo = serde_json::to_value(&merged)?;
    Ok((merged, echo))
}

fn parse_config(s: &str, n: usize) -> Result<Configuration> {
    let v: Result<Vec<bool>> = s
        .chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(anyhow!("configuration must be a 0/1 string, got {s:?}")),
        })
        .collect();
    let v = v?;
    if v.len() != n {
        bail!("configuration has {} sites, expected {n}", v.len());
    }
    Ok(Configuration(v))
}

fn show(c: &Configuration) -> String {
    c.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn draw(r: &AsepRates, method: &str, count: usize, seed: u64) -> Result<Vec<Configuration>> {
    Ok(match method {
        "exact" => sample_stationary(r, SampleMethod::Exact, count, seed)?,
        "burnin" => {
            let opts = BurninOptions { replicas: 64, ..Default::default() };
            sample_stationary(r, SampleMethod::Burnin(opts), count, seed)?
        }
        "matrix" => {
            let s = TasepSampler::new(r)?;
            let mut g = rng::stream(seed, 0);
            (0..count).map(|_| s.sample(&mut g)).collect()
        }
        other => bail!("unknown method {other:?}; use exact, burnin or matrix"),
    })
}

fn run(cli: Cli) -> Result<bool> {
    let start = Instant::now();
    let out = Output { out: cli.out.clone() };
    let seed = cli.seed.unwrap_or(0);
    let quad = Quad::new(1e-12, 1e-12);
    match &cli.command {
        Command::Simulate(a) => {
            let (a, _) = merge(&cli.config, a)?;
            let r = a.rates.rates()?;
            let start_cfg = match &a.start {
                Some(s) => parse_config(s, r.n)?,
                None => Configuration::empty(r.n),
            };
            let horizon = match (a.time, a.events) {
                (Some(t), None) => Horizon::Time(t),
                (None, e) => Horizon::Events(e.unwrap_or(1000)),
                (Some(_), Some(_)) => bail!("give either --time or --events"),
            };
            let mut s = String::from("time,configuration\n");
            for (t, c) in gillespie_run(&r, start_cfg, horizon, seed) {
                s += &format!("{t},{}\n", show(&c));
            }
            out.text(&s)?;
            Ok(true)
        }
        Command::Stationary(a) => {
            let (a, input) = merge(&cli.config, a)?;
            let r = a.rates.rates()?;
            let method = a.method.as_deref().unwrap_or("exact");
            let result = match a.samples {
                None if method == "exact" => {
                    let mu = stationary_exact(&r)?;
                    let dens: Vec<f64> = (1..=r.n).map(|j| mu.site_density(j)).collect();
                    json!({"n": r.n, "residual": mu.residual, "site_density": dens, "probs": mu.probs})
                }
                None => bail!("--samples is required with method {method}"),
                Some(k) => {
                    let cs = draw(&r, method, k, seed)?;
                    let dens: Vec<MeanSe> = (0..r.n)
                        .map(|j| mean_se(&cs.iter().map(|c| f64::from(u8::from(c.site(j)))).collect::<Vec<_>>()))
                        .collect();
                    json!({"n": r.n, "samples": k, "site_density": dens})
                }
            };
            out.report("stationary", input, &result, true, start.elapsed().as_secs_f64())?;
            Ok(true)
        }
        Command::Height(a) => {
            let (a, _) = merge(&cli.config, a)?;
            let r = a.rates.rates()?;
            let method = a.method.as_deref().unwrap_or(if r.n <= 12 { "exact" } else { "burnin" });
            let cs = draw(&r, method, a.samples.unwrap_or(100), seed)?;
            let mut s = String::from("sample,j,x,h\n");
            for (i, c) in cs.iter().enumerate() {
                for (j, h) in HeightPath::of(c).0.iter().enumerate() {
                    s += &format!("{i},{j},{},{h}\n", j as f64 / r.n as f64);
                }
            }
            out.text(&s)?;
            Ok(true)
        }
        Command::CouplingAudit(a) => {
            let (a, input) = merge(&cli.config, a)?;
            let r = a.rates.rates()?;
            let rep = sandwich_audit(&r, AuditOptions::new(a.epochs.unwrap_or(10_000)), seed)?;
            let band = cli.tol.unwrap_or(3.0);
            let pass = rep.sandwich_violations == 0 && rep.pointwise_violations == 0 && rep.max_z() < band;
            let result = json!({"report": rep, "max_z": rep.max_z(), "z_band": band});
            out.report("coupling-audit", input, &result, pass, start.elapsed().as_secs_f64())?;
            Ok(pass)
        }
        Command::AwCheck(a) => {
            let (a, input) = merge(&cli.config, a)?;
            let p = BoundaryParams::new(
                a.a.ok_or_else(|| anyhow!("--A is required"))?,
                a.b.unwrap_or(0.0),
                a.c.ok_or_else(|| anyhow!("--C is required"))?,
                a.d.unwrap_or(0.0),
            )?;
            let q = a.q.unwrap_or(0.0);
            let tol = cli.tol.unwrap_or(1e-4);
            let mass = aw_marginal(1.0, &p, q)?.mass(&quad)?;
            let mut g = rng::stream(seed, 0);
            let mut rows = Vec::new();
            let max_n = a.max_n.unwrap_or(4);
            for i in 0..a.instances.unwrap_or(20) {
                let n = 1 + i % max_n;
                let mut times: Vec<f64> = (0..n).map(|_| g.random_range(0.5..1.5)).collect();
                times.sort_by(f64::total_cmp);
                let aw = generating_function_aw(&p, q, &times, &quad)?;
                let r = openasep::asep::rates_from_boundary(&p, q, n)?;
                let ex = generating_function_exact(&stationary_exact(&r)?, &times)?;
                rows.push(json!({"times": times, "aw": aw, "exact": ex, "gap": (aw - ex).abs()}));
            }
            let worst = rows.iter().map(|r| r["gap"].as_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            let pass = worst < tol && (mass - 1.0).abs() < tol;
            let result = json!({"marginal_mass": mass, "rows": rows, "max_gap": worst, "tol": tol});
            out.report("aw-check", input, &result, pass, start.elapsed().as_secs_f64())?;
            Ok(pass)
        }
        Command::LimitSample(a) => {
            let (a, _) = merge(&cli.config, a)?;
            let p = a.limit.params()?;
            let times = if a.times.is_empty() { vec![0.25, 0.5, 0.75, 1.0] } else { a.times.clone() };
            let paths = sample_eta(&p, &TimeGrid::new(times.clone())?, a.count.unwrap_or(1000), seed)?;
            let mut s = String::from("path");
            for t in &times {
                s += &format!(",{t}");
            }
            s.push('\n');
            for i in 0..a.count.unwrap_or(1000) {
                s += &i.to_string();
                for v in paths.path(i) {
                    s += &format!(",{v}");
                }
                s.push('\n');
            }
            out.text(&s)?;
            Ok(true)
        }
        Command::VerifyLaplace(a) => {
            let (a, input) = merge(&cli.config, a)?;
            if a.all {
                let reps = identity_suite(seed, &quad);
                let pass = reps.iter().all(|r| r.pass);
                for r in reps.iter().filter(|r| !r.pass) {
                    log::error!("{} failed: gap {:e} > {:e}", r.name, r.gap, r.tol);
                }
                let failed = reps.iter().filter(|r| !r.pass).count();
                let result = json!({"checks": reps.len(), "failed": failed, "reports": reps});
                out.report("verify-laplace", input, &result, pass, start.elapsed().as_secs_f64())?;
                return Ok(pass);
            }
            let p = a.limit.params()?;
            if a.x.is_empty() {
                bail!("give --x and --coef, or --all");
            }
            let q = LaplaceQuery::new(a.x.clone(), a.coef.clone())?;
            let (lhs, rhs) = (psi(&p, &q, &quad)?, eta_laplace(&p, &q, &quad)?);
            let tol = cli.tol.unwrap_or(PSI_TOL);
            let gap = (lhs - rhs).abs();
            let result = json!({
                "psi": lhs,
                "eta_laplace": rhs,
                "gap": gap,
                "tol": tol,
                "limit_laplace": limit_laplace(&p, &q, &quad)?,
            });
            out.report("verify-laplace", input, &result, gap < tol, start.elapsed().as_secs_f64())?;
            Ok(gap < tol)
        }
        Command::Converge => {
            let path = cli.config.as_ref().ok_or_else(|| anyhow!("converge needs --config"))?;
            let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg = ExperimentConfig::from_json(&s)?;
            if let Some(sd) = cli.seed {
                cfg.seed = sd;
            }
            if let Some(t) = cli.tol {
                cfg.ks_threshold = t;
            }
            let rep = convergence_experiment(&cfg, &quad)?;
            let input = serde_json::to_value(&cfg)?;
            out.report("converge", input, &rep, rep.pass(), start.elapsed().as_secs_f64())?;
            Ok(rep.pass())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
