//! The disk Radon transform `ĥ_r(x) = ∫_{D(x̃, r)} h ∘ p`, the spectral kernel
//! `q_r(s) = 4√2 ∫_0^r cos(su) (cosh r - cosh u)^{1/2} du`, and the checks built on them.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyp::{cosh_distance, try_disk_quadrature, GeodesicCircle, HalfPlanePoint};
use crate::quad::GaussLegendre;
use crate::surface::{bump_mass, bump_profile, enumerate_group_ball, InvariantScalar, HYPERBOLIC_AREA};

pub const MEAN_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spectral {
    /// Real `s`, eigenvalue `¼ + s²`.
    Real,
    /// `s = iα`, eigenvalue `¼ - α²`.
    Imaginary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub r: f64,
    pub kind: Spectral,
    /// `s` for real parameters, `α = |s|` for imaginary ones.
    pub parameter: f64,
    pub value: f64,
}

/// `∫_0^r weight(u) (cosh r - cosh u)^{1/2} du` after `u = r - w²`, composite
/// Gauss–Legendre in `w` with panels scaled to the oscillation and the length.
fn kernel_integral(r: f64, frequency: f64, weight: impl Fn(f64) -> f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let top = r.sqrt();
    let panels = 2 + (2.0 * (frequency * r / PI + r)).ceil() as usize;
    let rule = GaussLegendre::new(24);
    rule.integrate_composite(0.0, top, panels, |w| {
        let w2 = w * w;
        // cosh r - cosh(r - w²), without cancellation.
        let gap = 2.0 * (r - 0.5 * w2).sinh() * (0.5 * w2).sinh();
        2.0 * w * weight(r - w2) * gap.max(0.0).sqrt()
    })
}

pub fn q_kernel_real(r: f64, s: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite() && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel needs finite r ≥ 0 and s, got r = {r}, s = {s}")));
    }
    Ok(4.0 * SQRT_2 * kernel_integral(r, s.abs(), |u| (s * u).cos()))
}

pub fn q_kernel_imag(r: f64, alpha: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel needs finite r ≥ 0, got {r}")));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "imaginary spectral parameter must lie in [0, 1/2], got {alpha}"
        )));
    }
    Ok(4.0 * SQRT_2 * kernel_integral(r, 0.0, |u| (alpha * u).cosh()))
}

pub fn kernel_sample(r: f64, kind: Spectral, parameter: f64) -> Result<KernelSample> {
    let value = match kind {
        Spectral::Real => q_kernel_real(r, parameter)?,
        Spectral::Imaginary => q_kernel_imag(r, parameter)?,
    };
    Ok(KernelSample {
        r,
        kind,
        parameter,
        value,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenPart {
    /// `√y cos(s ln y)`
    Real,
    /// `√y sin(s ln y)`
    Imaginary,
}

/// `Re` or `Im` of `y^{1/2 + is}`, an eigenfunction of the Laplacian with eigenvalue `¼ + s²`.
pub fn eigenfunction(s: f64, part: EigenPart, p: HalfPlanePoint) -> f64 {
    let phase = s * p.y.ln();
    p.y.sqrt()
        * match part {
            EigenPart::Real => phase.cos(),
            EigenPart::Imaginary => phase.sin(),
        }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValueCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl MeanValueCheck {
    /// `|residual| < tol · (|rhs| + 1)`.
    pub fn passes(&self, tol: f64) -> bool {
        self.residual.abs() < tol * (self.rhs.abs() + 1.0)
    }
}

/// Disk integral of an explicit eigenfunction against `q_r(s)` times its center value.
pub fn eigenfunction_mean_value_check(s: f64, part: EigenPart, center: HalfPlanePoint, r: f64) -> Result<MeanValueCheck> {
    let circle = GeodesicCircle::new(center, r)?;
    let order = 48 + (8.0 * (r + s.abs() * r)).ceil() as usize;
    let lhs = try_disk_quadrature(&circle, |p| Ok(eigenfunction(s, part, p)), order)?;
    let rhs = q_kernel_real(r, s)? * eigenfunction(s, part, center);
    Ok(MeanValueCheck {
        lhs,
        rhs,
        residual: lhs - rhs,
    })
}

fn require_zero_mean(h: &InvariantScalar) -> Result<()> {
    let mean = h.mean();
    if mean.abs() > MEAN_TOLERANCE {
        return Err(Error::NonZeroMean { mean });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadonMethod {
    /// Quadrature of `h ∘ p` over the disk.
    Direct,
    /// Sum of exact per-translate bump integrals.
    GroupSum,
}

pub const DEFAULT_RADON_ORDER: usize = 96;

/// `ĥ_r(x)` by disk quadrature around the lift `x`, reducing each node to the domain.
pub fn disk_radon(h: &InvariantScalar, x: HalfPlanePoint, r: f64, order: usize) -> Result<f64> {
    require_zero_mean(h)?;
    if h.is_constant() {
        return Ok(0.0);
    }
    let circle = GeodesicCircle::new(x, r)?;
    try_disk_quadrature(&circle, |p| h.value(p), order)
}

/// `ĥ_r(x)` as `constant · area(D_r)` plus, for every bump translate meeting the
/// disk, the integral of the bump over its intersection with the disk.
pub fn disk_radon_group_sum(h: &InvariantScalar, x: HalfPlanePoint, r: f64) -> Result<f64> {
    require_zero_mean(h)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if h.is_constant() {
        return Ok(0.0);
    }
    let group = h.group();
    let area = 4.0 * PI * (0.5 * r).sinh().powi(2);
    let mut total = h.constant_term() * area;
    let dx = crate::hyp::hyp_distance(x, HalfPlanePoint::I);
    for b in h.bumps() {
        let reach = r + b.support_radius;
        let dc = crate::hyp::hyp_distance(b.center, HalfPlanePoint::I);
        let ball = enumerate_group_ball(group, reach + dx + dc + 1e-9)?;
        let cosh_reach = reach.cosh();
        let parts: Vec<f64> = ball
            .elements
            .par_iter()
            .filter_map(|e| {
                let c = cosh_distance(x, e.isometry.apply(b.center));
                (c < cosh_reach).then(|| b.amplitude * bump_disk_overlap(c.acosh(), r, b.support_radius))
            })
            .collect();
        total += parts.iter().sum::<f64>();
    }
    Ok(total)
}

/// `∫ P(ρ) dμ` over the part of the bump around a center at distance `d` from the
/// disk center lying inside the disk of radius `r`.
fn bump_disk_overlap(d: f64, r: f64, support: f64) -> f64 {
    let mut cuts = vec![0.0, support];
    for c in [(r - d).abs(), r + d] {
        if c > 0.0 && c < support {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let (cosh_d, sinh_d, cosh_r) = (d.cosh(), d.sinh(), r.cosh());
    let angle = |rho: f64| -> f64 {
        if sinh_d == 0.0 || rho == 0.0 {
            return if rho.max(d) <= r { 2.0 * PI } else { 0.0 };
        }
        let k = (cosh_d * rho.cosh() - cosh_r) / (sinh_d * rho.sinh());
        2.0 * k.clamp(-1.0, 1.0).acos()
    };
    let rule = GaussLegendre::new(48);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        // ρ = a + (b - a) t²(3 - 2t) absorbs the square-root edges of the arc length.
        total += rule.integrate(0.0, 1.0, |t| {
            let rho = a + (b - a) * t * t * (3.0 - 2.0 * t);
            let jac = (b - a) * 6.0 * t * (1.0 - t);
            bump_profile(rho, support) * angle(rho) * rho.sinh() * jac
        });
    }
    total
}

pub fn radon(h: &InvariantScalar, x: HalfPlanePoint, r: f64, method: RadonMethod) -> Result<f64> {
    match method {
        RadonMethod::Direct => disk_radon(h, x, r, DEFAULT_RADON_ORDER),
        RadonMethod::GroupSum => disk_radon_group_sum(h, x, r),
    }
}

/// The zero-mean scalar `Σ bumps - (Σ amplitude · mass) / 4π`.
pub fn zero_mean_constant(h: &InvariantScalar) -> f64 {
    -h.bumps().iter().map(|b| b.amplitude * bump_mass(b.support_radius)).sum::<f64>() / HYPERBOLIC_AREA
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub r: f64,
    pub q: f64,
    /// `4√2 cosh(r)^{1/2} / (s(1 + s²))`.
    pub bound: f64,
}

/// `q_{r_n}(s)` at `r_n = π(2n + ½)/s` against the growth lower bound, `n = 1..=n_max`.
/// Fails naming the first `n` that violates the bound or monotonicity.
pub fn growth_check(s: f64, n_max: usize) -> Result<Vec<GrowthRow>> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("growth check needs s > 0, got {s}")));
    }
    let mut rows: Vec<GrowthRow> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let r = PI * (2.0 * n as f64 + 0.5) / s;
        let row = GrowthRow {
            n,
            r,
            q: q_kernel_real(r, s)?,
            bound: 4.0 * SQRT_2 * r.cosh().sqrt() / (s * (1.0 + s * s)),
        };
        if !(row.q >= row.bound) {
            return Err(Error::CheckFailed {
                check: "growth bound",
                details: format!("n = {n}: q = {} below bound {}", row.q, row.bound),
            });
        }
        if let Some(prev) = rows.last() {
            if !(row.q > prev.q) {
                return Err(Error::CheckFailed {
                    check: "growth monotonicity",
                    details: format!("n = {n}: q = {} not above {}", row.q, prev.q),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonProbeReport {
    pub method: RadonMethod,
    pub centers: Vec<HalfPlanePoint>,
    pub radii: Vec<f64>,
    /// `values[i][j] = ĥ_{radii[j]}(centers[i])`.
    pub values: Vec<Vec<f64>>,
    /// Largest value over all centers and radii up to `radii[j]`.
    pub running_max: Vec<f64>,
}

pub fn boundedness_probe(
    h: &InvariantScalar,
    radii: &[f64],
    centers: &[HalfPlanePoint],
    method: RadonMethod,
) -> Result<RadonProbeReport> {
    require_zero_mean(h)?;
    let values = centers
        .iter()
        .map(|&x| radii.iter().map(|&r| radon(h, x, r, method)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut running_max = Vec::with_capacity(radii.len());
    let mut best = f64::NEG_INFINITY;
    for j in 0..radii.len() {
        for row in &values {
            best = best.max(row[j]);
        }
        running_max.push(best);
    }
    Ok(RadonProbeReport {
        method,
        centers: centers.to_vec(),
        radii: radii.to_vec(),
        values,
        running_max,
    })
}
