//! Command-line front end: `multiplier`, `profile`, `certify` and
//! `field-norms`, each writing CSV or JSON artifacts.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::field::ZonalField;
use crate::io::{csv_header, sci};
use crate::multipliers::MultiplierKind;
use crate::precision::PrecisionContext;
use crate::squarefn::{square_norm_with, degree_profiles, SquareProfile};
use crate::verify::{equivalence_sweep, random_field, SweepThresholds};
use config::{Format, Overrides, RunConfig, OUT_DIR_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFY_FAILED: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "zonal-sobolev", version, about = "Zonal multipliers and square functions on spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate multipliers over degrees and cap radii
    Multiplier {
        #[command(flatten)]
        run: Overrides,
        /// cap_average, taylor_remainder, mixed, identity, poisson, isomorphism_t
        #[arg(long, value_delimiter = ',', default_value = "cap_average")]
        descriptor: Vec<String>,
        /// Taylor order for taylor_remainder and mixed
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Poisson parameter
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        /// Order of the isomorphism T_k
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Degree profiles of the square functions, with log-log plot data
    Profile {
        #[command(flatten)]
        run: Overrides,
    },
    /// Profile sweep and norm-equivalence constants; exit 1 if any cell fails
    Certify {
        #[command(flatten)]
        run: Overrides,
    },
    /// Sobolev and square-function norms of one field
    FieldNorms {
        #[command(flatten)]
        run: Overrides,
        /// Field file (JSON {d, L, coeffs} or CSV ell,coeff); random if absent
        #[arg(long)]
        field: Option<PathBuf>,
        /// Decay exponent of the random field
        #[arg(long, default_value_t = 1.1)]
        beta: f64,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match dispatch(cli.command, env_out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CERTIFY_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn dispatch(cmd: Command, env_out: Option<PathBuf>) -> Result<bool> {
    match cmd {
        Command::Multiplier { run, descriptor, n, r, k } => {
            let cfg = RunConfig::resolve(&run, env_out)?;
            let kinds = descriptor
                .iter()
                .map(|name| descriptor_kind(name, n, r, k))
                .collect::<Result<Vec<_>>>()?;
            cmd_multiplier(&cfg, &kinds)?;
            Ok(true)
        }
        Command::Profile { run } => {
            let cfg = RunConfig::resolve(&run, env_out)?;
            cmd_profile(&cfg)?;
            Ok(true)
        }
        Command::Certify { run } => {
            let cfg = RunConfig::resolve(&run, env_out)?;
            cmd_certify(&cfg)
        }
        Command::FieldNorms { run, field, beta } => {
            let cfg = RunConfig::resolve(&run, env_out)?;
            cmd_field_norms(&cfg, field.as_deref(), beta)?;
            Ok(true)
        }
    }
}

/// Multiplier family for a descriptor name; t is filled in per radius.
#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    CapAverage,
    TaylorRemainder(usize),
    Mixed(usize),
    Identity,
    Poisson(f64),
    IsomorphismT(usize),
}

impl Descriptor {
    fn name(&self) -> &'static str {
        match self {
            Self::CapAverage => "cap_average",
            Self::TaylorRemainder(_) => "taylor_remainder",
            Self::Mixed(_) => "mixed",
            Self::Identity => "identity",
            Self::Poisson(_) => "poisson",
            Self::IsomorphismT(_) => "isomorphism_t",
        }
    }

    fn kind(&self, t: f64) -> MultiplierKind {
        match *self {
            Self::CapAverage => MultiplierKind::CapAverage { t },
            Self::TaylorRemainder(n) => MultiplierKind::TaylorRemainder { t, n },
            Self::Mixed(n) => MultiplierKind::Mixed { t, n },
            Self::Identity => MultiplierKind::Identity,
            Self::Poisson(r) => MultiplierKind::Poisson { r },
            Self::IsomorphismT(k) => MultiplierKind::IsomorphismT { k },
        }
    }
}

pub fn descriptor_kind(name: &str, n: usize, r: f64, k: usize) -> Result<Descriptor> {
    Ok(match name.trim() {
        "cap_average" | "m" => Descriptor::CapAverage,
        "taylor_remainder" | "taylor" | "M" => Descriptor::TaylorRemainder(n),
        "mixed" | "N" => {
            if n == 0 {
                return Err(Error::Config("mixed multipliers need --n ≥ 1".into()));
            }
            Descriptor::Mixed(n)
        }
        "identity" => Descriptor::Identity,
        "poisson" => {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("Poisson parameter {r} outside (0, 1)")));
            }
            Descriptor::Poisson(r)
        }
        "isomorphism_t" | "isomorphism" | "T" => Descriptor::IsomorphismT(k),
        other => return Err(Error::Config(format!("unknown descriptor '{other}'"))),
    })
}

fn context(cfg: &RunConfig) -> Result<PrecisionContext> {
    PrecisionContext::with_precision(cfg.precision_bits).map_err(|e| Error::Config(e.to_string()))
}

fn header(cfg: &RunConfig, artifact: &str) -> Vec<(&'static str, String)> {
    vec![
        ("artifact", artifact.to_string()),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("config_hash", cfg.hash()),
        ("precision_bits", cfg.precision_bits.to_string()),
        ("d", cfg.d.to_string()),
    ]
}

fn meta_json(cfg: &RunConfig, artifact: &str) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for (k, v) in header(cfg, artifact) {
        m.insert(k.to_string(), serde_json::Value::String(v));
    }
    serde_json::Value::Object(m)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "p")
}

fn extension(cfg: &RunConfig) -> &'static str {
    match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

/// One (ell, t, value) table per descriptor.
pub fn cmd_multiplier(cfg: &RunConfig, descriptors: &[Descriptor]) -> Result<Vec<PathBuf>> {
    let ctx = context(cfg)?;
    let ells = cfg.degrees()?;
    let radii = cfg.t_grid.radii()?;
    let mut written = Vec::new();
    for desc in descriptors {
        let mut rows = Vec::with_capacity(ells.len() * radii.len());
        for &t in &radii {
            let kind = desc.kind(t);
            for &ell in &ells {
                let v = kind.at_degree(&ctx, cfg.d, ell).map_err(|e| e.at_degree(ell))?;
                rows.push((ell, t, v));
            }
        }
        let artifact = format!("multiplier/{}", desc.name());
        let body = match cfg.format {
            Format::Csv => {
                let mut out = csv_header(&header(cfg, &artifact));
                out.push_str("ell,t,value\n");
                for (ell, t, v) in &rows {
                    let _ = writeln!(out, "{ell},{},{}", sci(*t), sci(*v));
                }
                out
            }
            Format::Json => {
                let rows: Vec<_> = rows
                    .iter()
                    .map(|(ell, t, v)| serde_json::json!({"ell": ell, "t": t, "value": v}))
                    .collect();
                let doc = serde_json::json!({"meta": meta_json(cfg, &artifact), "descriptor": desc.name(), "d": cfg.d, "rows": rows});
                serde_json::to_string_pretty(&doc)? + "\n"
            }
        };
        let name = format!("multiplier_{}.{}", desc.name(), extension(cfg));
        written.push(write_file(&cfg.output_dir, &name, &body)?);
    }
    Ok(written)
}

/// Profile table and log-log plot data for every α.
pub fn cmd_profile(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ctx = context(cfg)?;
    let ells = cfg.degrees()?;
    let mut written = Vec::new();
    for &alpha in &cfg.alpha {
        let prof = SquareProfile::compute(&ctx, cfg.d, alpha, &ells)?;
        let stem = format!("profile_d{}_alpha{}", cfg.d, alpha_tag(alpha));
        let artifact = format!("profile/{:?}/alpha={alpha}", prof.kind);
        let h = csv_header(&header(cfg, &artifact));
        let body = match cfg.format {
            Format::Csv => prof.to_csv(&h),
            Format::Json => {
                let doc = serde_json::json!({"meta": meta_json(cfg, &artifact), "profile": prof});
                serde_json::to_string_pretty(&doc)? + "\n"
            }
        };
        written.push(write_file(&cfg.output_dir, &format!("{stem}.{}", extension(cfg)), &body)?);
        written.push(write_file(&cfg.output_dir, &format!("{stem}_loglog.dat"), &prof.plot_data(&h))?);
    }
    Ok(written)
}

/// Runs the sweep and writes its report; `Ok(false)` if a cell fails.
pub fn cmd_certify(cfg: &RunConfig) -> Result<bool> {
    let ctx = context(cfg)?;
    let ells = cfg.degrees()?;
    if ells.is_empty() {
        return Err(Error::Config("certification needs at least one degree".into()));
    }
    let report = equivalence_sweep(&ctx, cfg.d, &cfg.alpha, &ells, cfg.seed, &SweepThresholds::default())?;
    match cfg.format {
        Format::Csv => {
            let h = csv_header(&header(cfg, "certify/summary"));
            write_file(&cfg.output_dir, &format!("certify_d{}_summary.csv", cfg.d), &report.summary_csv(&h))?;
            let h = csv_header(&header(cfg, "certify/profiles"));
            write_file(&cfg.output_dir, &format!("certify_d{}_profiles.csv", cfg.d), &report.profiles_csv(&h))?;
        }
        Format::Json => {
            let doc = serde_json::json!({"meta": meta_json(cfg, "certify"), "report": report});
            write_file(&cfg.output_dir, &format!("certify_d{}.json", cfg.d), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        }
    }
    for c in &report.cells {
        eprintln!(
            "alpha={} spread={:.3} slope={:.4} c2/c1={:.3} {}{}",
            c.alpha,
            c.spread,
            c.slope,
            c.c2 / c.c1,
            if c.pass { "pass" } else { "FAIL" },
            c.failure.as_ref().map(|f| format!(" ({f})")).unwrap_or_default()
        );
    }
    Ok(report.passed())
}

/// Norms of a field read from disk or drawn with the configured seed.
pub fn cmd_field_norms(cfg: &RunConfig, field: Option<&Path>, beta: f64) -> Result<PathBuf> {
    let ctx = context(cfg)?;
    let f = match field {
        Some(path) => load_field(path, cfg.d)?,
        None => random_field(cfg.d, cfg.band_limit, beta, cfg.seed, 0)?,
    };
    let mut rows = Vec::new();
    for &alpha in &cfg.alpha {
        let prof = degree_profiles(&ctx, f.d, alpha, f.band_limit())?;
        let sq = square_norm_with(&f, &prof)?;
        let hom = f.homogeneous_sobolev_norm(alpha)?;
        rows.push((alpha, f.sobolev_norm(alpha)?, hom, sq));
    }
    let artifact = "field-norms";
    let body = match cfg.format {
        Format::Csv => {
            let mut out = csv_header(&header(cfg, artifact));
            let _ = writeln!(out, "# l2_norm: {}", sci(f.l2_norm()));
            out.push_str("alpha,sobolev,homogeneous,square,ratio\n");
            for (a, s, h, q) in &rows {
                let _ = writeln!(out, "{},{},{},{},{}", sci(*a), sci(*s), sci(*h), sci(*q), sci(q / h));
            }
            out
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(a, s, h, q)| serde_json::json!({"alpha": a, "sobolev": s, "homogeneous": h, "square": q, "ratio": q / h}))
                .collect();
            let doc = serde_json::json!({"meta": meta_json(cfg, artifact), "l2_norm": f.l2_norm(), "field": f.to_json(), "rows": rows});
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    write_file(&cfg.output_dir, &format!("field_norms_d{}.{}", f.d, extension(cfg)), &body)
}

fn load_field(path: &Path, d: usize) -> Result<ZonalField> {
    let text = std::fs::read_to_string(path)?;
    let f = if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ZonalField::from_json(&v)?
    } else {
        ZonalField::from_csv(d, &text)?
    };
    if f.d != d {
        return Err(Error::Config(format!("field has d = {} but the run uses d = {d}", f.d)));
    }
    Ok(f)
}
