//! Command-line front end. Profiles and fields come from a small text
//! config; every command writes CSV files into the output directory.
//!
//! Config grammar (one `key = value` per line or comma-separated on the
//! section line, `#` starts a comment):
//!
//! ```text
//! R = 0.1
//! [segment] a = 0.1, b = 0.6, coeffs = [1.1]
//! [segment] a = 0.6, b = 1.0, coeffs = [1.0]
//! [mode] k = 2, re = [1, -1], im = [0]
//! [trace] r0 = [0.5, 0.7], theta0 = 0, segments = 3
//! ```
//!
//! Mode coefficients are polynomials in r. An attenuation file holds one
//! line `lambda = [l0, l1, ...]`, again polynomial coefficients in r.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::funk::{funk_even_recover, funk_forward, great_circle_average, SphericalField};
use crate::geodesics::{broken_ray, find_periodic_radii, BrokenRaySpec, GeodesicSpec, DEFAULT_PERIODIC_TOL, DEFAULT_Q_MAX};
use crate::grid::linspace;
use crate::transforms::{
    pbrt_forward_with, read_sinograms_csv, sinograms, write_sinograms_csv, xray_invert_modes, AttenuationProfile,
    FourierField, DEFAULT_TIPS,
};
use crate::wave_speed::{Segment, WaveSpeed};

const FIELD_GRID: usize = 2001;
const TRACE_SAMPLES: usize = 401;
const HERGLOTZ_GRID: usize = 1000;
const DEFAULT_K_MAX: i32 = 16;

#[derive(Debug, Parser)]
#[command(name = "raytomo", version, about = "Geodesic ray transforms on spherically symmetric manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Wave-speed config file
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Largest |k| kept (Funk demo: largest degree)
    #[arg(long, global = true)]
    pub kmax: Option<i32>,
    /// Tip grid size (check: Herglotz sample count)
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Periodicity tolerance on the opening angle
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest denominator q in periodicity searches
    #[arg(long, global = true)]
    pub qmax: Option<u32>,
    /// Attenuation file
    #[arg(long, global = true)]
    pub attenuation: Option<PathBuf>,
    /// Sinogram CSV to invert
    #[arg(long, global = true)]
    pub sinogram: Option<PathBuf>,
    /// Tip angle for pbrt
    #[arg(long, global = true)]
    pub theta0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Herglotz check of the profile
    Check,
    /// Trace the (broken) rays of the [trace] section
    Trace,
    /// Mode sinograms of the configured field
    Sinogram,
    /// Reconstruct the field from a sinogram
    Invert,
    /// Periodic broken ray transform at every periodic radius
    Pbrt,
    /// List periodic radii
    Periodic,
    /// Funk transform demonstration on S²
    FunkDemo,
}

/// Radial polynomial coefficients of one angular mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub k: i32,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub r0: Vec<f64>,
    pub theta0: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub wave: WaveSpeed,
    pub modes: Vec<ModeSpec>,
    pub trace: Option<TraceSpec>,
}

/// Failure classes with their exit codes: 1 numerical, 2 configuration.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidProfile(m) | Error::InvalidInput(m) => CliError::Config(m),
            other => CliError::Numerical(other),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_value_list(s: &str) -> Result<Vec<f64>, CliError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| config_err(format!("expected a list [..], found {s:?}")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| config_err(format!("bad number {v:?}"))))
        .collect()
}

fn parse_scalar(s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| config_err(format!("bad number {s:?}")))
}

/// Splits `a = 1, b = [1, 2]` into key/value pairs, keeping lists intact.
fn split_pairs(body: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for ch in body.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            _ => {}
        }
        if ch == ',' && depth == 0 {
            items.push(std::mem::take(&mut current));
        } else {
            current.push(ch);
        }
    }
    if depth != 0 {
        return Err(config_err(format!("unbalanced brackets in {body:?}")));
    }
    items.push(current);
    items
        .into_iter()
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| config_err(format!("expected key = value, found {:?}", item.trim())))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

#[derive(Default)]
struct Section {
    name: String,
    pairs: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Result<String, CliError> {
        self.pairs
            .remove(key)
            .ok_or_else(|| config_err(format!("[{}] is missing `{key}`", self.name)))
    }

    fn finish(&self) -> Result<(), CliError> {
        match self.pairs.keys().next() {
            Some(k) => Err(config_err(format!("unknown key `{k}` in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

/// Parses the config text. Profile validation (ordering, coverage,
/// positivity) is left to [`WaveSpeed::new`].
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut top = Section { name: "top level".into(), ..Default::default() };
    let mut sections: Vec<Section> = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let body = if let Some(rest) = line.strip_prefix('[') {
            let (name, rest) = rest
                .split_once(']')
                .ok_or_else(|| config_err(format!("unterminated section header {line:?}")))?;
            sections.push(Section { name: name.trim().to_string(), ..Default::default() });
            rest
        } else {
            line
        };
        let target = sections.last_mut().unwrap_or(&mut top);
        for (k, v) in split_pairs(body)? {
            if target.pairs.insert(k.clone(), v).is_some() {
                return Err(config_err(format!("duplicate key `{k}` in [{}]", target.name)));
            }
        }
    }
    let inner = parse_scalar(&top.take("R")?)?;
    top.finish()?;

    let mut segments = Vec::new();
    let mut modes = Vec::new();
    let mut trace = None;
    for mut s in sections {
        match s.name.as_str() {
            "segment" => {
                let a = parse_scalar(&s.take("a")?)?;
                let b = parse_scalar(&s.take("b")?)?;
                let coeffs = parse_value_list(&s.take("coeffs")?)?;
                s.finish()?;
                segments.push(Segment::new(a, b, &coeffs)?);
            }
            "mode" => {
                let k_raw = s.take("k")?;
                let k = k_raw.parse::<i32>().map_err(|_| config_err(format!("bad mode {k_raw:?}")))?;
                let re = s.pairs.remove("re").map_or(Ok(Vec::new()), |v| parse_value_list(&v))?;
                let im = s.pairs.remove("im").map_or(Ok(Vec::new()), |v| parse_value_list(&v))?;
                s.finish()?;
                if modes.iter().any(|m: &ModeSpec| m.k == k) {
                    return Err(config_err(format!("mode {k} given twice")));
                }
                modes.push(ModeSpec { k, re, im });
            }
            "trace" => {
                if trace.is_some() {
                    return Err(config_err("only one [trace] section is allowed"));
                }
                let r0 = parse_value_list(&s.take("r0")?)?;
                let theta0 = s.pairs.remove("theta0").map_or(Ok(0.0), |v| parse_scalar(&v))?;
                let segments = match s.pairs.remove("segments") {
                    Some(v) => v.parse::<usize>().map_err(|_| config_err(format!("bad segment count {v:?}")))?,
                    None => 1,
                };
                s.finish()?;
                trace = Some(TraceSpec { r0, theta0, segments });
            }
            other => return Err(config_err(format!("unknown section [{other}]"))),
        }
    }
    let wave = WaveSpeed::new(inner, segments)?;
    Ok(RunConfig { wave, modes, trace })
}

/// Polynomial coefficients from an attenuation file (`lambda = [..]`).
pub fn parse_attenuation(text: &str) -> Result<Vec<f64>, CliError> {
    let mut found = None;
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        for (k, v) in split_pairs(line)? {
            if k != "lambda" {
                return Err(config_err(format!("unknown attenuation key `{k}`")));
            }
            if found.replace(parse_value_list(&v)?).is_some() {
                return Err(config_err("`lambda` given twice"));
            }
        }
    }
    found.ok_or_else(|| config_err("attenuation file has no `lambda` line"))
}

fn poly(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

/// The configured field, sampled on a fine uniform grid.
pub fn field_from_modes(inner: f64, modes: &[ModeSpec], k_max: i32) -> Result<FourierField, CliError> {
    let grid = linspace(inner, 1.0, FIELD_GRID);
    let kept: Vec<&ModeSpec> = modes.iter().filter(|m| m.k.abs() <= k_max).collect();
    if kept.is_empty() {
        return Err(config_err(format!("no [mode] sections with |k| ≤ {k_max}")));
    }
    let mut map = BTreeMap::new();
    for m in kept {
        let vals = grid.iter().map(|&r| Complex64::new(poly(&m.re, r), poly(&m.im, r))).collect();
        map.insert(m.k, crate::grid::GridFunction::new(grid.clone(), vals)?);
    }
    Ok(FourierField::new(inner, map)?)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))
}

struct Context {
    cli: Cli,
    hash: String,
    config: Option<RunConfig>,
    attenuation: Option<AttenuationProfile>,
}

impl Context {
    fn config(&self) -> Result<&RunConfig, CliError> {
        self.config.as_ref().ok_or_else(|| config_err("this command needs --profile"))
    }

    /// Creates `name` in the output directory with the config-hash comment line.
    fn create(&self, name: &str) -> Result<fs::File, CliError> {
        let path = self.cli.out.join(name);
        let mut f = fs::File::create(&path).map_err(|e| config_err(format!("cannot create {}: {e}", path.display())))?;
        writeln!(f, "# config-hash: {}", self.hash).map_err(|e| config_err(e.to_string()))?;
        Ok(f)
    }

    fn write_rows(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let f = self.create(name)?;
        let mut wtr = csv::Writer::from_writer(f);
        let io = |e: csv::Error| config_err(e.to_string());
        wtr.write_record(header).map_err(io)?;
        for row in rows {
            wtr.write_record(row).map_err(io)?;
        }
        wtr.flush().map_err(|e| config_err(e.to_string()))
    }
}

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

fn cmd_check(ctx: &Context) -> Result<i32, CliError> {
    let rep = ctx.config()?.wave.check_herglotz(ctx.cli.grid.unwrap_or(HERGLOTZ_GRID));
    println!(
        "herglotz: {} (min margin {:e}, {} jump violations){}",
        if rep.pass { "pass" } else { "FAIL" },
        rep.min_herglotz_margin,
        rep.jump_violations.len(),
        if rep.notes.is_empty() { String::new() } else { format!("; {}", rep.notes) }
    );
    let violations = rep
        .jump_violations
        .iter()
        .map(|(a, d)| format!("{a}:{d}"))
        .collect::<Vec<_>>()
        .join(";");
    ctx.write_rows(
        "herglotz.csv",
        &["pass", "min_margin", "jump_violations", "notes"],
        &[vec![rep.pass.to_string(), num(rep.min_herglotz_margin), violations, rep.notes.clone()]],
    )?;
    Ok(if rep.pass { 0 } else { 1 })
}

fn cmd_trace(ctx: &Context) -> Result<i32, CliError> {
    let cfg = ctx.config()?;
    let spec = cfg.trace.as_ref().ok_or_else(|| config_err("trace needs a [trace] section"))?;
    if spec.segments == 0 {
        return Err(config_err("segments must be at least 1"));
    }
    for (i, &r0) in spec.r0.iter().enumerate() {
        let path = GeodesicSpec::new(&cfg.wave, r0, spec.theta0, 1)
            .and_then(|base| BrokenRaySpec::new(base, spec.segments))
            .and_then(|b| broken_ray(&cfg.wave, &b, TRACE_SAMPLES));
        match path {
            Ok(p) => {
                let f = ctx.create(&format!("trace_{i}.csv"))?;
                p.write_csv(f)?;
            }
            Err(e @ (Error::JumpTangency { .. } | Error::OutOfDomain { .. })) => {
                eprintln!("warning: skipping r0 = {r0}: {e}");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(0)
}

fn cmd_sinogram(ctx: &Context) -> Result<i32, CliError> {
    let cfg = ctx.config()?;
    let field = field_from_modes(cfg.wave.inner_radius(), &cfg.modes, ctx.cli.kmax.unwrap_or(DEFAULT_K_MAX))?;
    let n = ctx.cli.grid.unwrap_or(DEFAULT_TIPS);
    let sinos = sinograms(&cfg.wave, &field, n, ctx.attenuation.as_ref())?;
    write_sinograms_csv(&sinos, ctx.create("sinogram.csv")?)?;
    Ok(0)
}

fn cmd_invert(ctx: &Context) -> Result<i32, CliError> {
    let cfg = ctx.config()?;
    let path = ctx.cli.sinogram.as_ref().ok_or_else(|| config_err("invert needs --sinogram"))?;
    let text = read_text(path)?;
    let mut sinos = read_sinograms_csv(&cfg.wave, text.as_bytes())?;
    if let Some(k_max) = ctx.cli.kmax {
        sinos.retain(|k, _| k.abs() <= k_max);
    }
    let field = xray_invert_modes(&cfg.wave, &sinos, ctx.attenuation.as_ref())?;
    field.write_csv(ctx.create("field.csv")?)?;
    Ok(0)
}

fn cmd_periodic(ctx: &Context) -> Result<i32, CliError> {
    let cfg = ctx.config()?;
    let radii = find_periodic_radii(&cfg.wave, ctx.cli.qmax.unwrap_or(DEFAULT_Q_MAX))?;
    let rows: Vec<Vec<String>> = radii.iter().map(|p| vec![num(p.r), p.p.to_string(), p.q.to_string()]).collect();
    ctx.write_rows("periodic.csv", &["r", "p", "q"], &rows)?;
    Ok(0)
}

fn cmd_pbrt(ctx: &Context) -> Result<i32, CliError> {
    let cfg = ctx.config()?;
    let field = field_from_modes(cfg.wave.inner_radius(), &cfg.modes, ctx.cli.kmax.unwrap_or(DEFAULT_K_MAX))?;
    let q_max = ctx.cli.qmax.unwrap_or(DEFAULT_Q_MAX);
    let tol = ctx.cli.tol.unwrap_or(DEFAULT_PERIODIC_TOL);
    let theta0 = ctx.cli.theta0.or(cfg.trace.as_ref().map(|t| t.theta0)).unwrap_or(0.0);
    let mut rows = Vec::new();
    for p in find_periodic_radii(&cfg.wave, q_max)? {
        let v = pbrt_forward_with(&cfg.wave, &field, p.r, theta0, q_max, tol)?;
        rows.push(vec![num(p.r), p.p.to_string(), p.q.to_string(), num(v.re), num(v.im)]);
    }
    ctx.write_rows("pbrt.csv", &["r", "p", "m", "re", "im"], &rows)?;
    Ok(0)
}

/// Deterministic mixed-parity field: f_{l,m} = (l + 1)^{-1} (1 + i m / (l + 1))
/// made real by the conjugate symmetry.
fn demo_field(l_max: usize) -> SphericalField {
    let mut f = SphericalField::zeros(l_max);
    for l in 0..=l_max {
        let scale = 1.0 / (l + 1) as f64;
        f.set(l, 0, Complex64::new(scale, 0.0)).expect("degree within bound");
        for m in 1..=l as i64 {
            let v = Complex64::new(scale, scale * m as f64 / (l + 1) as f64);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            f.set(l, m, v).expect("degree within bound");
            f.set(l, -m, sign * v.conj()).expect("degree within bound");
        }
    }
    f
}

fn cmd_funk_demo(ctx: &Context) -> Result<i32, CliError> {
    let l_max = ctx.cli.kmax.unwrap_or(6);
    if !(0..=64).contains(&l_max) {
        return Err(config_err(format!("funk-demo degree must lie in [0, 64], got {l_max}")));
    }
    let field = demo_field(l_max as usize);
    let transformed = funk_forward(&field)?;
    let recovered = funk_even_recover(&transformed)?;
    let even_err = recovered.sub(&field.even_part()).norm() / field.even_part().norm();
    let odd_image = funk_forward(&field.odd_part())?.norm() / field.odd_part().norm().max(f64::MIN_POSITIVE);
    let pole = great_circle_average(&field, &Vector3::z())?;
    println!("funk-demo: degree {l_max}");
    println!("  odd part maps to relative norm {odd_image:.3e}");
    println!("  even part recovered with relative error {even_err:.3e}");
    println!("  equator average {:.12}", pole.re);
    field.write_csv(ctx.create("funk_field.csv")?)?;
    transformed.write_csv(ctx.create("funk_transform.csv")?)?;
    recovered.write_csv(ctx.create("funk_even.csv")?)?;
    Ok(0)
}

fn hash_inputs(cli: &Cli, texts: &[&str]) -> String {
    let mut h = Sha256::new();
    for t in texts {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    h.update(format!("{:?}", cli.command).as_bytes());
    for v in [
        cli.kmax.map(|v| v.to_string()),
        cli.grid.map(|v| v.to_string()),
        cli.tol.map(|v| v.to_string()),
        cli.qmax.map(|v| v.to_string()),
        cli.theta0.map(|v| v.to_string()),
    ] {
        h.update(v.unwrap_or_default().as_bytes());
        h.update([0u8]);
    }
    format!("{:x}", h.finalize())
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let profile_text = cli.profile.as_deref().map(read_text).transpose()?;
    let atten_text = cli.attenuation.as_deref().map(read_text).transpose()?;
    let sino_text = cli.sinogram.as_deref().map(read_text).transpose()?;
    let texts: Vec<&str> = [&profile_text, &atten_text, &sino_text].iter().filter_map(|t| t.as_deref()).collect();
    let hash = hash_inputs(&cli, &texts);
    let config = profile_text.as_deref().map(parse_config).transpose()?;
    let attenuation = match (&atten_text, &config) {
        (Some(t), Some(cfg)) => {
            let coeffs = parse_attenuation(t)?;
            let grid = linspace(cfg.wave.inner_radius(), 1.0, FIELD_GRID);
            Some(AttenuationProfile::from_fn(grid, |r| poly(&coeffs, r))?)
        }
        (Some(_), None) => return Err(config_err("--attenuation needs --profile")),
        _ => None,
    };
    fs::create_dir_all(&cli.out).map_err(|e| config_err(format!("cannot create {}: {e}", cli.out.display())))?;
    let ctx = Context { cli, hash, config, attenuation };
    match ctx.cli.command {
        Command::Check => cmd_check(&ctx),
        Command::Trace => cmd_trace(&ctx),
        Command::Sinogram => cmd_sinogram(&ctx),
        Command::Invert => cmd_invert(&ctx),
        Command::Pbrt => cmd_pbrt(&ctx),
        Command::Periodic => cmd_periodic(&ctx),
        Command::FunkDemo => cmd_funk_demo(&ctx),
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code:
/// 0 success, 1 numerical failure or failed check, 2 configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
