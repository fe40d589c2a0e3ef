//! Two-sided estimates of the Mañé critical value `c(g, σ)`: lower bounds from the
//! action of geodesic circles, upper bounds from bounded primitives of `σ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    conformality_coefficient, helicity_formula, s_h_value, total_flux, ConformalMetric, MagneticField, CHI,
};
use crate::hyp::{
    polar_point, try_circle_sums, Covector, GeodesicCircle, HalfPlanePoint, Orientation,
};
use crate::quad::GaussLegendre;
use crate::surface::{enumerate_group_ball, Bump, InvariantScalar};

/// A closed polyline with node times. Segments are straight in the chart and
/// traversed at constant chart speed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveSample {
    nodes: Vec<HalfPlanePoint>,
    times: Vec<f64>,
}

impl CurveSample {
    pub fn new(nodes: Vec<HalfPlanePoint>, times: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 || nodes.len() != times.len() {
            return Err(Error::InvalidArgument(format!(
                "curve needs at least 3 nodes with one time each, got {} nodes and {} times",
                nodes.len(),
                times.len()
            )));
        }
        if nodes.first() != nodes.last() {
            return Err(Error::InvalidArgument("curve is not closed: first node differs from last".into()));
        }
        for (index, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::DegenerateCurve { index });
            }
        }
        Ok(Self { nodes, times })
    }

    /// The circle `c` with `nodes` segments, timed so that every segment is crossed
    /// at average `g`-speed `speed`.
    pub fn circle(g: &ConformalMetric, c: &GeodesicCircle, speed: f64, nodes: usize) -> Result<Self> {
        if !(speed > 0.0) || nodes < 3 {
            return Err(Error::InvalidArgument(format!(
                "circle sample needs positive speed and at least 3 nodes, got {speed} and {nodes}"
            )));
        }
        let mut points: Vec<HalfPlanePoint> = (0..nodes)
            .map(|j| polar_point(c.center, c.radius, 2.0 * PI * j as f64 / nodes as f64))
            .collect();
        points.push(points[0]);
        let mut times = Vec::with_capacity(nodes + 1);
        times.push(0.0);
        let mut t = 0.0;
        for w in points.windows(2) {
            t += segment_length(g, w[0], w[1])? / speed;
            times.push(t);
        }
        Self::new(points, times)
    }

    pub fn nodes(&self) -> &[HalfPlanePoint] {
        &self.nodes
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }
}

const SEGMENT_NODES: usize = 4;

fn segment_points(a: HalfPlanePoint, b: HalfPlanePoint) -> impl Iterator<Item = (HalfPlanePoint, f64)> {
    GaussLegendre::new(SEGMENT_NODES)
        .mapped(0.0, 1.0)
        .collect::<Vec<_>>()
        .into_iter()
        .map(move |(s, w)| {
            (
                HalfPlanePoint {
                    x: a.x + s * (b.x - a.x),
                    y: a.y + s * (b.y - a.y),
                },
                w,
            )
        })
}

fn segment_length(g: &ConformalMetric, a: HalfPlanePoint, b: HalfPlanePoint) -> Result<f64> {
    let chord = (b.x - a.x).hypot(b.y - a.y);
    let mut total = 0.0;
    for (p, w) in segment_points(a, b) {
        total += w * g.u().value(p)?.exp() * chord / p.y;
    }
    Ok(total)
}

/// `θ = a y⁻¹dx + β₀`, a primitive of `σ` on the hyperbolic plane.
fn base_primitive(sigma: &MagneticField, p: HalfPlanePoint) -> Result<Covector> {
    Ok(Covector::new(sigma.a() / p.y, 0.0) + sigma.beta0().evaluate(p)?.covector)
}

/// `∫ (½|γ̇|²_g - θ(γ̇) + k) dt` along the polyline.
pub fn action_value(g: &ConformalMetric, sigma: &MagneticField, curve: &CurveSample, k: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, (w, t)) in curve.nodes.windows(2).zip(curve.times.windows(2)).enumerate() {
        let dt = t[1] - t[0];
        if !(dt > 0.0) {
            return Err(Error::DegenerateCurve { index: i });
        }
        let (vx, vy) = ((w[1].x - w[0].x) / dt, (w[1].y - w[0].y) / dt);
        let mut seg = 0.0;
        for (p, weight) in segment_points(w[0], w[1]) {
            let e2u = (2.0 * g.u().value(p)?).exp();
            let kinetic = 0.5 * e2u * (vx * vx + vy * vy) / (p.y * p.y);
            seg += weight * (kinetic + k - base_primitive(sigma, p)?.apply(vx, vy));
        }
        total += seg * dt;
    }
    Ok(total)
}

/// Circle nodes for the lower bound: `density` per unit `g₀`-length, at least 64.
fn circle_nodes(radius: f64, density: f64) -> usize {
    let m = ((density * 2.0 * PI * radius.sinh()).ceil() as usize).max(64);
    m + m % 2
}

/// `g`-length and the positively oriented line integral of `β₀` over a circle.
fn circle_length_and_beta(
    g: &ConformalMetric,
    sigma: &MagneticField,
    c: &GeodesicCircle,
    density: f64,
) -> Result<(f64, f64)> {
    let u = g.u();
    let beta = sigma.beta0();
    if u.is_constant() && beta.is_zero() {
        return Ok((u.constant_term().exp() * c.length(), 0.0));
    }
    let m = circle_nodes(c.radius, density);
    let [length, line] = try_circle_sums(c, m, |p, t| {
        let speed = t.norm() / p.y;
        let e = if u.is_constant() { u.constant_term().exp() } else { u.value(p)?.exp() };
        let b = if beta.is_zero() { 0.0 } else { beta.evaluate(p)?.covector.apply(t.re, t.im) };
        Ok([e * speed, b])
    })?;
    Ok((length, line))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleWitness {
    pub center: HalfPlanePoint,
    pub radius: f64,
    pub orientation: Orientation,
    /// Flux through the disk with the positive orientation.
    pub flux: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    /// None when every circle has zero flux.
    pub witness: Option<CircleWitness>,
}

/// `½ (max |flux(D_r)| / ℓ_g(C_r))²` over the grid; the absolute value takes the
/// better of the two orientations.
pub fn circle_lower_bound(
    g: &ConformalMetric,
    sigma: &MagneticField,
    r_grid: &[f64],
    centers: &[HalfPlanePoint],
    density: f64,
) -> Result<LowerBound> {
    if r_grid.is_empty() || centers.is_empty() {
        return Err(Error::InvalidArgument("circle lower bound needs nonempty radius and center grids".into()));
    }
    if !(density > 0.0) {
        return Err(Error::InvalidArgument(format!("circle node density must be positive, got {density}")));
    }
    let mut best = LowerBound {
        value: 0.0,
        witness: None,
    };
    let mut best_ratio = 0.0;
    for &center in centers {
        for &radius in r_grid {
            let c = GeodesicCircle::new(center, radius)?;
            let (length, line) = circle_length_and_beta(g, sigma, &c, density)?;
            let flux = sigma.a() * 2.0 * PI * (radius.cosh() - 1.0) + line;
            let ratio = flux.abs() / length;
            // Strict comparison keeps the first grid point on ties.
            if ratio > best_ratio {
                best_ratio = ratio;
                best.witness = Some(CircleWitness {
                    center,
                    radius,
                    orientation: if flux >= 0.0 { Orientation::Positive } else { Orientation::Negative },
                    flux,
                    length,
                });
            }
        }
    }
    best.value = 0.5 * best_ratio * best_ratio;
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveFamily {
    /// Amplitudes of the correction bump, relative to `|a| + Σ|β₀ amplitudes|`.
    pub amplitudes: Vec<f64>,
    /// Low-discrepancy points in the fundamental domain.
    pub samples: usize,
    /// Nearest nontrivial translates of the sample also visited.
    pub translates: usize,
}

impl Default for PrimitiveFamily {
    fn default() -> Self {
        Self {
            amplitudes: vec![-0.2, -0.1, 0.1, 0.2],
            samples: 2000,
            translates: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    /// Center and absolute amplitude of the best correction bump; None when `dφ = 0` won.
    pub correction: Option<Bump>,
    pub sample_points: usize,
}

fn family_centers(g: &ConformalMetric, sigma: &MagneticField) -> Vec<HalfPlanePoint> {
    let mut out = vec![HalfPlanePoint::I];
    for b in g.u().bumps().iter().chain(sigma.beta0().bumps()) {
        if !out.iter().any(|c| crate::hyp::hyp_distance(*c, b.center) < 1e-9) {
            out.push(b.center);
        }
    }
    out
}

/// Points of the fundamental domain sample and of its nearest translates.
fn upper_bound_points(g: &ConformalMetric, family: &PrimitiveFamily) -> Result<Vec<HalfPlanePoint>> {
    let group = g.group();
    let base = group.sample_domain(family.samples);
    let mut radius = 2.0 * group.inradius() + 0.1;
    let ball = loop {
        let ball = enumerate_group_ball(group, radius)?;
        if ball.len() > family.translates {
            break ball;
        }
        radius += 0.5;
    };
    let mut points = Vec::with_capacity(base.len() * (family.translates + 1));
    for e in ball.elements.iter().take(family.translates + 1) {
        points.extend(base.iter().map(|&p| e.isometry.apply(p)));
    }
    Ok(points)
}

/// `min over φ of max over samples of ½|a y⁻¹dx + β₀ + dφ|²_g`, with `φ` either zero
/// or one radial bump at a fixed center.
pub fn primitive_upper_bound(g: &ConformalMetric, sigma: &MagneticField, family: &PrimitiveFamily) -> Result<UpperBound> {
    let points = upper_bound_points(g, family)?;
    // Per point: ½ e^{-2u} y² and the Euclidean components of θ.
    let base: Vec<(f64, Covector)> = points
        .par_iter()
        .map(|&p| {
            let weight = 0.5 * (-2.0 * g.u().value(p)?).exp() * p.y * p.y;
            Ok((weight, base_primitive(sigma, p)?))
        })
        .collect::<Result<_>>()?;
    let sup = |theta: &dyn Fn(usize) -> Covector| {
        base.iter()
            .enumerate()
            .map(|(i, (w, _))| {
                let t = theta(i);
                w * (t.dx * t.dx + t.dy * t.dy)
            })
            .fold(0.0, f64::max)
    };
    let mut best = UpperBound {
        value: sup(&|i| base[i].1),
        correction: None,
        sample_points: points.len(),
    };
    let scale = sigma.a().abs() + sigma.beta0().bumps().iter().map(|b| b.amplitude.abs()).sum::<f64>();
    if scale == 0.0 || family.amplitudes.is_empty() {
        return Ok(best);
    }
    let group = g.group().clone();
    for center in family_centers(g, sigma) {
        let support = (0.9 * group.injectivity_radius(center)?).min(1.0);
        let unit = Bump {
            center,
            amplitude: 1.0,
            support_radius: support,
        };
        let phi = InvariantScalar::new(group.clone(), 0.0, vec![unit])?;
        let grad: Vec<Covector> = points
            .par_iter()
            .map(|&p| Ok(phi.evaluate(p)?.gradient))
            .collect::<Result<_>>()?;
        for &rel in &family.amplitudes {
            let amp = rel * scale;
            let value = sup(&|i| base[i].1 + grad[i] * amp);
            if value < best.value {
                best.value = value;
                best.correction = Some(Bump { amplitude: amp, ..unit });
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalBudget {
    pub r_grid: Vec<f64>,
    /// Circle centers; None uses the standard five points of the domain.
    pub centers: Option<Vec<HalfPlanePoint>>,
    /// Circle quadrature nodes per unit hyperbolic length.
    pub circle_density: f64,
    pub family: PrimitiveFamily,
    /// Allowed excess of the lower bound over the upper bound.
    pub tolerance: f64,
}

/// Radii `0.25 · 2^k` up to 8, then 10.
pub fn default_r_grid() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0]
}

/// The base point and four points at distance 0.75 from it.
pub fn default_centers() -> Vec<HalfPlanePoint> {
    let mut out = vec![HalfPlanePoint::I];
    out.extend((0..4).map(|k| polar_point(HalfPlanePoint::I, 0.75, PI / 8.0 + k as f64 * PI / 2.0)));
    out
}

impl Default for CriticalBudget {
    fn default() -> Self {
        Self {
            r_grid: default_r_grid(),
            centers: None,
            circle_density: 16.0,
            family: PrimitiveFamily::default(),
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub best_circle: Option<CircleWitness>,
    pub best_primitive: Option<Bump>,
    pub sample_points: usize,
}

pub fn estimate_critical_value(g: &ConformalMetric, sigma: &MagneticField, budget: &CriticalBudget) -> Result<CriticalEstimate> {
    let centers = budget.centers.clone().unwrap_or_else(default_centers);
    let lower = circle_lower_bound(g, sigma, &budget.r_grid, &centers, budget.circle_density)?;
    let upper = primitive_upper_bound(g, sigma, &budget.family)?;
    if lower.value > upper.value + budget.tolerance * upper.value.max(1.0) {
        return Err(Error::BoundInversion {
            lower: lower.value,
            upper: upper.value,
            tolerance: budget.tolerance,
        });
    }
    Ok(CriticalEstimate {
        lower: lower.value,
        upper: upper.value,
        tolerance: budget.tolerance,
        best_circle: lower.witness,
        best_primitive: upper.correction,
        sample_points: upper.sample_points,
    })
}

/// `s_c = 1/√(2c)` over the interval of `c`; an end is None when unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScInterval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl ScInterval {
    pub fn is_bounded(&self) -> bool {
        self.upper.is_some()
    }
}

pub fn s_c_value(est: &CriticalEstimate) -> ScInterval {
    let inv = |c: f64| (c > 0.0).then(|| 1.0 / (2.0 * c).sqrt());
    ScInterval {
        lower: inv(est.upper),
        upper: inv(est.lower),
    }
}

/// `[σ]² / (-4πχ A ρ_g²)`, the lower bound for `c` in terms of the conformality coefficient.
pub fn gk_bound(g: &ConformalMetric, sigma: &MagneticField, rho_g: f64) -> f64 {
    let flux = total_flux(sigma);
    flux * flux / (-4.0 * PI * CHI * g.area() * rho_g * rho_g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub estimate: CriticalEstimate,
    pub s_c: ScInterval,
    pub s_h: f64,
    pub rho_g: f64,
    pub area: f64,
    pub flux: f64,
    /// `s_h` minus the upper end of the `s_c` interval.
    pub gap: Option<f64>,
    pub gk_rhs: f64,
    /// `c_upper - gk_rhs`.
    pub gk_residual: f64,
    pub u_constant: bool,
    pub h0_zero: bool,
    pub tolerance: f64,
}

impl TheoremReport {
    /// Whether the whole `s_c` interval lies strictly below `s_h`.
    pub fn strict_gap(&self) -> bool {
        self.gap.is_some_and(|g| g > 0.0)
    }
}

/// Checks `s_c ≤ s_h` for a field with nonzero flux; a violation beyond `tolerance`
/// fails with the report as JSON.
pub fn theorem_gap_report(
    g: &ConformalMetric,
    sigma: &MagneticField,
    budget: &CriticalBudget,
    tolerance: f64,
) -> Result<TheoremReport> {
    require_s_h(g, sigma)?;
    let estimate = estimate_critical_value(g, sigma, budget)?;
    theorem_gap_from_estimate(g, sigma, estimate, tolerance)
}

fn require_s_h(g: &ConformalMetric, sigma: &MagneticField) -> Result<f64> {
    s_h_value(g, sigma).ok_or_else(|| Error::InvalidArgument("the gap report needs a field with nonzero total flux".into()))
}

/// [`theorem_gap_report`] for an estimate already computed for `(g, sigma)`.
pub fn theorem_gap_from_estimate(
    g: &ConformalMetric,
    sigma: &MagneticField,
    estimate: CriticalEstimate,
    tolerance: f64,
) -> Result<TheoremReport> {
    let s_h = require_s_h(g, sigma)?;
    let s_c = s_c_value(&estimate);
    let rho_g = conformality_coefficient(g)?;
    let gk_rhs = gk_bound(g, sigma, rho_g);
    let report = TheoremReport {
        s_c,
        s_h,
        rho_g,
        area: g.area(),
        flux: total_flux(sigma),
        gap: s_c.upper.map(|up| s_h - up),
        gk_rhs,
        gk_residual: estimate.upper - gk_rhs,
        u_constant: g.u().is_constant(),
        h0_zero: sigma.beta0().is_zero(),
        tolerance,
        estimate,
    };
    if !report.gap.is_some_and(|gap| gap >= -tolerance) {
        return Err(Error::CheckFailed {
            check: "s_c <= s_h",
            details: serde_json::to_string(&report).unwrap_or_default(),
        });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub estimate: CriticalEstimate,
    pub rho_g: f64,
    pub helicity: f64,
    pub area: f64,
    pub two_c_upper: f64,
    pub two_rho2_c_upper: f64,
    /// `1 - H / (2πA)`.
    pub rhs: f64,
    /// Width of the `c` interval scaled as the middle term.
    pub interval_width: f64,
    pub slack: f64,
}

/// Checks `2c ≥ 2ρ_g²c ≥ 1 - H/(2πA)` at the upper end of the `c` interval.
pub fn proposition_check(
    g: &ConformalMetric,
    sigma: &MagneticField,
    budget: &CriticalBudget,
    slack: f64,
) -> Result<PropositionReport> {
    let estimate = estimate_critical_value(g, sigma, budget)?;
    proposition_from_estimate(g, sigma, estimate, slack)
}

/// [`proposition_check`] for an estimate already computed for `(g, sigma)`.
pub fn proposition_from_estimate(
    g: &ConformalMetric,
    sigma: &MagneticField,
    estimate: CriticalEstimate,
    slack: f64,
) -> Result<PropositionReport> {
    let rho_g = conformality_coefficient(g)?;
    let helicity = helicity_formula(g, sigma);
    let r2 = rho_g * rho_g;
    let report = PropositionReport {
        two_c_upper: 2.0 * estimate.upper,
        two_rho2_c_upper: 2.0 * r2 * estimate.upper,
        rhs: 1.0 - helicity / (2.0 * PI * g.area()),
        interval_width: 2.0 * r2 * (estimate.upper - estimate.lower),
        rho_g,
        helicity,
        area: g.area(),
        slack,
        estimate,
    };
    let ordered = report.two_c_upper + slack >= report.two_rho2_c_upper;
    let bounded = report.two_rho2_c_upper + slack >= report.rhs;
    if !(ordered && bounded) {
        return Err(Error::CheckFailed {
            check: "proposition chain",
            details: serde_json::to_string(&report).unwrap_or_default(),
        });
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonBoundEntry {
    pub center: HalfPlanePoint,
    pub radius: f64,
    /// `∫_{C_r} β₀`, positively oriented.
    pub integral: f64,
    /// `2π √(2c) (1 - e^{-r})`.
    pub decaying_bound: f64,
    /// `integral / (2π √(2c))`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonBoundReport {
    pub sqrt_2c: f64,
    pub entries: Vec<RadonBoundEntry>,
    pub max_ratio: f64,
    pub within_bound: bool,
}

/// Line integrals of `β₀` over circles, compared with `2π √(2c)` where `√(2c) = |a|`
/// in the equality scenario. Requires the curvature −1 metric.
pub fn radon_bound_check(
    g: &ConformalMetric,
    sigma: &MagneticField,
    r_grid: &[f64],
    centers: &[HalfPlanePoint],
    density: f64,
    tolerance: f64,
) -> Result<RadonBoundReport> {
    if !(g.u().is_constant() && g.u().constant_term() == 0.0) {
        return Err(Error::InvalidArgument("the Radon bound check needs the curvature -1 metric".into()));
    }
    let sqrt_2c = sigma.a().abs();
    if sqrt_2c == 0.0 {
        return Err(Error::InvalidArgument("the Radon bound check needs a nonzero field coefficient".into()));
    }
    let mut entries = Vec::new();
    for &center in centers {
        for &radius in r_grid {
            let c = GeodesicCircle::new(center, radius)?;
            let (_, integral) = circle_length_and_beta(g, sigma, &c, density)?;
            entries.push(RadonBoundEntry {
                center,
                radius,
                integral,
                decaying_bound: 2.0 * PI * sqrt_2c * (1.0 - (-radius).exp()),
                ratio: integral / (2.0 * PI * sqrt_2c),
            });
        }
    }
    let max_ratio = entries.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(RadonBoundReport {
        sqrt_2c,
        within_bound: max_ratio <= 1.0 + tolerance,
        entries,
        max_ratio,
    })
}
