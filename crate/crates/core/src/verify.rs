//! Verification helpers: the closed-form d = 3 multiplier, seeded random
//! fields, the profile/norm sweep and window diagnostics.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capgeom::check_radius;
use crate::error::{domain, Result};
use crate::field::ZonalField;
use crate::precision::PrecisionContext;
use crate::specfun::{check_dim, legendre_asymptotic, legendre_value, Degree};
use crate::squarefn::{degree_profiles, profile_vanishes, square_norm_with, ProfileKind, SquareProfile};

/// m_{ℓ,t} on S² from the Legendre antiderivative:
/// (P_{ℓ-1}(x) - P_{ℓ+1}(x)) / ((2ℓ+1)(1-x)), x = cos t.
pub fn oracle_multiplier_d3(_ctx: &PrecisionContext, ell: usize, t: f64) -> Result<f64> {
    check_radius(t)?;
    if ell == 0 {
        return Ok(1.0);
    }
    let x = t.cos();
    let one_minus_x = 2.0 * (0.5 * t).sin().powi(2);
    let diff = legendre_value(3, ell - 1, x) - legendre_value(3, ell + 1, x);
    Ok(diff / ((2 * ell + 1) as f64 * one_minus_x))
}

/// Decay exponents of the random field families.
pub const DECAY_LAWS: [f64; 5] = [0.6, 1.1, 1.6, 2.1, 3.1];

/// a_ℓ = ξ_ℓ (1+ℓ)^{-β} with ξ_ℓ uniform on [-1, 1]; the stream is fixed by
/// (seed, stream).
pub fn random_field(d: usize, band_limit: usize, beta: f64, seed: u64, stream: u64) -> Result<ZonalField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let coeffs = (0..=band_limit)
        .map(|ell| rng.gen_range(-1.0..=1.0) * (1.0 + ell as f64).powf(-beta))
        .collect();
    ZonalField::new(d, coeffs)
}

/// `per_law` fields for each decay law, deterministic in `seed`.
pub fn field_family(d: usize, band_limit: usize, per_law: usize, seed: u64) -> Result<Vec<ZonalField>> {
    let mut out = Vec::with_capacity(per_law * DECAY_LAWS.len());
    for (li, &beta) in DECAY_LAWS.iter().enumerate() {
        for i in 0..per_law {
            out.push(random_field(d, band_limit, beta, seed, (li * 1000 + i) as u64)?);
        }
    }
    Ok(out)
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        let dx = x.ln() - mx;
        sxy += dx * (y.ln() - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Pass/fail thresholds for the profile sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepThresholds {
    pub max_spread: f64,
    pub slope_tol: f64,
    pub slope_window: (usize, usize),
    pub max_constant_ratio: f64,
    pub fields_per_law: usize,
}

impl Default for SweepThresholds {
    fn default() -> Self {
        Self {
            max_spread: 50.0,
            slope_tol: 0.15,
            slope_window: (8, 128),
            max_constant_ratio: 100.0,
            fields_per_law: 20,
        }
    }
}

/// Results for one smoothness index.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub n: usize,
    pub kind: ProfileKind,
    /// Profile on the requested degrees.
    pub profile: SquareProfile,
    /// Requested degrees where the profile vanishes identically; they are
    /// listed here and left out of the spread.
    pub vanishing: Vec<usize>,
    /// max/min of profile(ℓ)/ℓ^{2α} over the remaining degrees.
    pub spread: f64,
    pub slope: f64,
    /// Range of ‖S_α f‖ / ‖f‖_{Ḣ^α} over the random field family.
    pub c1: f64,
    pub c2: f64,
    pub pass: bool,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub d: usize,
    pub seed: u64,
    pub thresholds: SweepThresholds,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    pub fn summary_csv(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str("alpha,n,kind,spread,slope,c1,c2,vanishing,status\n");
        for c in &self.cells {
            let vanishing = c.vanishing.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ");
            let _ = writeln!(
                out,
                "{},{},{:?},{},{},{},{},{},{}",
                crate::io::sci(c.alpha),
                c.n,
                c.kind,
                crate::io::sci(c.spread),
                crate::io::sci(c.slope),
                crate::io::sci(c.c1),
                crate::io::sci(c.c2),
                vanishing,
                if c.pass { "pass" } else { "fail" }
            );
        }
        out
    }

    pub fn profiles_csv(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str("alpha,ell,value,ratio\n");
        for c in &self.cells {
            for e in &c.profile.entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    crate::io::sci(c.alpha),
                    e.ell,
                    crate::io::sci(e.value),
                    crate::io::sci(e.ratio)
                );
            }
        }
        out
    }
}

/// Profile behaviour and norm constants for each α on the given degrees.
/// A failing cell is recorded and the sweep continues.
pub fn equivalence_sweep(
    ctx: &PrecisionContext,
    d: usize,
    alphas: &[f64],
    ells: &[usize],
    seed: u64,
    thresholds: &SweepThresholds,
) -> Result<SweepReport> {
    check_dim(d)?;
    if ells.is_empty() || ells.contains(&0) {
        return Err(domain("sweep degrees must be nonempty and positive"));
    }
    let band = *ells.iter().max().expect("nonempty");
    let fields = field_family(d, band, thresholds.fields_per_law, seed)?;
    let cells = alphas
        .par_iter()
        .map(|&alpha| sweep_cell(ctx, d, alpha, ells, &fields, thresholds))
        .collect();
    Ok(SweepReport { d, seed, thresholds: thresholds.clone(), cells })
}

fn sweep_cell(
    ctx: &PrecisionContext,
    d: usize,
    alpha: f64,
    ells: &[usize],
    fields: &[ZonalField],
    th: &SweepThresholds,
) -> SweepCell {
    let (n, kind) = crate::squarefn::classify_alpha(alpha).unwrap_or((0, ProfileKind::Remainder));
    let mut cell = SweepCell {
        alpha,
        n,
        kind,
        profile: SquareProfile { d, alpha, n, kind, entries: Vec::new() },
        vanishing: Vec::new(),
        spread: f64::NAN,
        slope: f64::NAN,
        c1: f64::NAN,
        c2: f64::NAN,
        pass: false,
        failure: None,
    };
    if let Err(e) = fill_cell(ctx, d, ells, fields, th, &mut cell) {
        cell.pass = false;
        cell.failure = Some(e.to_string());
    }
    cell
}

fn fill_cell(
    ctx: &PrecisionContext,
    d: usize,
    ells: &[usize],
    fields: &[ZonalField],
    th: &SweepThresholds,
    cell: &mut SweepCell,
) -> Result<()> {
    let band = *ells.iter().max().expect("nonempty");
    let full = degree_profiles(ctx, d, cell.alpha, band)?;
    cell.profile.entries = full
        .entries
        .iter()
        .filter(|e| ells.contains(&e.ell))
        .copied()
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut slope_pts = Vec::new();
    for e in &cell.profile.entries {
        if profile_vanishes(e.ell, cell.alpha)? {
            cell.vanishing.push(e.ell);
            continue;
        }
        lo = lo.min(e.ratio);
        hi = hi.max(e.ratio);
        if (th.slope_window.0..=th.slope_window.1).contains(&e.ell) {
            slope_pts.push((e.ell as f64, e.value));
        }
    }
    cell.spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    cell.slope = if slope_pts.len() >= 2 { log_log_slope(&slope_pts) } else { f64::NAN };

    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for f in fields {
        let h = f.homogeneous_sobolev_norm(cell.alpha)?;
        if h == 0.0 {
            continue;
        }
        let r = square_norm_with(f, &full)? / h;
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    cell.c1 = c1;
    cell.c2 = c2;

    let mut problems = Vec::new();
    if !(cell.spread <= th.max_spread) {
        problems.push(format!("spread {:.3} > {}", cell.spread, th.max_spread));
    }
    if !((cell.slope - 2.0 * cell.alpha).abs() <= th.slope_tol) {
        problems.push(format!("slope {:.4} not within {} of {}", cell.slope, th.slope_tol, 2.0 * cell.alpha));
    }
    if !(c2 / c1 <= th.max_constant_ratio) {
        problems.push(format!("c2/c1 = {:.3} > {}", c2 / c1, th.max_constant_ratio));
    }
    cell.pass = problems.is_empty();
    if !cell.pass {
        cell.failure = Some(problems.join("; "));
    }
    Ok(())
}

/// Where the lower-bound argument needs the cap radius to lie.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub d: usize,
    pub ell: usize,
    pub n: usize,
    /// P^{(n+1)}(1) / (2 P^{(n+2)}(1)), from the derivative formula.
    pub k: f64,
    /// (n + (d+1)/2) / ((ℓ+n+d+1)(ℓ-n-1)), the printed closed form.
    pub k_closed_form: f64,
    /// arccos(1 - k)
    pub a: f64,
    /// arccos(1 - P'(1)/(b P''(1)))
    pub c: f64,
    pub ell_a: f64,
    pub ell_c: f64,
}

pub fn lower_bound_window(d: usize, ell: usize, n: usize) -> Result<WindowDiagnostics> {
    lower_bound_window_with(d, ell, n, 2.0)
}

pub fn lower_bound_window_with(d: usize, ell: usize, n: usize, b: f64) -> Result<WindowDiagnostics> {
    check_dim(d)?;
    if ell < n + 2 {
        return Err(domain(format!("window needs ℓ ≥ n + 2, got ℓ = {ell}, n = {n}")));
    }
    if !(b > 1.0) {
        return Err(domain("the curvature factor b must exceed 1"));
    }
    let (df, lf, nf) = (d as f64, ell as f64, n as f64);
    let k = (nf + (df + 1.0) / 2.0) / ((lf - nf - 1.0) * (lf + nf + df - 1.0));
    let k_closed_form = (nf + (df + 1.0) / 2.0) / ((lf + nf + df + 1.0) * (lf - nf - 1.0));
    let a = (1.0 - k).clamp(-1.0, 1.0).acos();
    let ratio = (df + 1.0) / (b * (lf - 1.0) * (lf + df - 1.0));
    let c = (1.0 - ratio).clamp(-1.0, 1.0).acos();
    Ok(WindowDiagnostics { d, ell, n, k, k_closed_form, a, c, ell_a: lf * a, ell_c: lf * c })
}

/// max over θ ∈ [2/ℓ, π/4] of |P_{ℓ,d}(cos θ) - main term| ℓ^{d/2}, and the
/// same residual weighted by (ℓ sin θ)^{d/2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResidual {
    pub d: usize,
    pub ell: usize,
    pub scaled_by_degree: f64,
    pub scaled_by_angle: f64,
}

pub fn asymptotic_residual(d: usize, ell: usize, samples: usize) -> Result<AsymptoticResidual> {
    let deg = Degree::new(d, ell)?;
    let lo = 2.0 / ell as f64;
    let hi = std::f64::consts::FRAC_PI_4;
    if lo >= hi {
        return Err(domain("degree too small for the window [2/ℓ, π/4]"));
    }
    let half = d as f64 / 2.0;
    let mut by_degree = 0.0f64;
    let mut by_angle = 0.0f64;
    for i in 0..samples.max(2) {
        let theta = lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64;
        let main = legendre_asymptotic(deg, theta)?.value;
        let r = (legendre_value(d, ell, theta.cos()) - main).abs();
        by_degree = by_degree.max(r * (ell as f64).powf(half));
        by_angle = by_angle.max(r * (ell as f64 * theta.sin()).powf(half));
    }
    Ok(AsymptoticResidual { d, ell, scaled_by_degree: by_degree, scaled_by_angle: by_angle })
}
