//! The magnetic flow `F_s = X + s f V` on the unit tangent bundle, integrated in the
//! universal cover with the unit tangent stored as its chart angle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ConformalMetric, MagneticField};
use crate::hyp::{hyp_distance, HalfPlanePoint, Isometry};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    /// Chart angle of the unit tangent, in `[0, 2π)`.
    pub theta: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && theta.is_finite()) || y < f64::MIN_POSITIVE {
            return Err(Error::StateOutOfRange(format!("({x}, {y}, {theta})")));
        }
        Ok(Self {
            x,
            y,
            theta: theta.rem_euclid(TAU),
        })
    }

    pub fn point(&self) -> HalfPlanePoint {
        HalfPlanePoint { x: self.x, y: self.y }
    }

    /// The state carried by an isometry, direction included.
    pub fn transformed(&self, m: &Isometry) -> Result<Self> {
        let p = m.apply(self.point());
        Self::new(p.x, p.y, m.push_direction(self.point(), self.theta))
    }

    /// Hyperbolic distance of the base points plus the wrapped angle difference.
    pub fn phase_distance(&self, other: &PhaseState) -> f64 {
        hyp_distance(self.point(), other.point()) + angle_gap(self.theta, other.theta)
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `(dx/dt, dy/dt, dθ/dt)` for the field `sσ`, in `g`-arclength time.
pub fn vector_field(g: &ConformalMetric, sigma: &MagneticField, s: f64, state: &PhaseState) -> Result<[f64; 3]> {
    rates(g, sigma, s, [state.x, state.y, state.theta])
}

fn rates(g: &ConformalMetric, sigma: &MagneticField, s: f64, z: [f64; 3]) -> Result<[f64; 3]> {
    let [x, y, theta] = z;
    if !(x.is_finite() && y.is_finite() && theta.is_finite()) || y < 1e-300 {
        return Err(Error::StateOutOfRange(format!("({x}, {y}, {theta})")));
    }
    let p = HalfPlanePoint { x, y };
    let u = g.u().evaluate(p)?;
    let f = (-2.0 * u.value).exp() * sigma.base_density(p)?;
    // w = u - ln y is the conformal exponent relative to the Euclidean chart.
    let speed = y * (-u.value).exp();
    let wx = u.gradient.dx;
    let wy = u.gradient.dy - 1.0 / y;
    let (sin, cos) = theta.sin_cos();
    Ok([speed * cos, speed * sin, speed * (wy * cos - wx * sin) + s * f])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Largest tolerated step-doubling error estimate per step.
    pub tolerance: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { tolerance: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub evaluations: usize,
    pub max_error_estimate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    /// Vector field at each sample, kept for Hermite interpolation.
    pub rates: Vec<[f64; 3]>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory has an initial sample")
    }

    /// Cubic Hermite interpolation on sample interval `k`, `t` in `[t_k, t_{k+1}]`.
    fn interpolate(&self, k: usize, t: f64) -> [f64; 3] {
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let a = &self.states[k];
        let b = &self.states[k + 1];
        let theta_b = a.theta + wrap_pi(b.theta - a.theta);
        let ends = [[a.x, b.x], [a.y, b.y], [a.theta, theta_b]];
        std::array::from_fn(|i| {
            h00 * ends[i][0] + h10 * h * self.rates[k][i] + h01 * ends[i][1] + h11 * h * self.rates[k + 1][i]
        })
    }
}

fn wrap_pi(d: f64) -> f64 {
    (d + PI).rem_euclid(TAU) - PI
}

fn rk4_step(g: &ConformalMetric, sigma: &MagneticField, s: f64, z: [f64; 3], k1: [f64; 3], h: f64) -> Result<[f64; 3]> {
    let add = |z: [f64; 3], k: [f64; 3], c: f64| std::array::from_fn::<f64, 3, _>(|i| z[i] + c * k[i]);
    let k2 = rates(g, sigma, s, add(z, k1, 0.5 * h))?;
    let k3 = rates(g, sigma, s, add(z, k2, 0.5 * h))?;
    let k4 = rates(g, sigma, s, add(z, k3, h))?;
    Ok(std::array::from_fn(|i| {
        z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

pub fn integrate(
    g: &ConformalMetric,
    sigma: &MagneticField,
    s: f64,
    start: PhaseState,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with(g, sigma, s, start, duration, dt, IntegratorOptions::default())
}

/// Classical RK4 with a uniform step `duration / ceil(duration / dt)`. Each step is
/// repeated as two half steps; the difference bounds the local error and aborts the
/// run when it exceeds the tolerance.
pub fn integrate_with(
    g: &ConformalMetric,
    sigma: &MagneticField,
    s: f64,
    start: PhaseState,
    duration: f64,
    dt: f64,
    options: IntegratorOptions,
) -> Result<Trajectory> {
    if !(duration > 0.0 && duration.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need positive duration and step, got T = {duration}, dt = {dt}"
        )));
    }
    let n = ((duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let mut z = [start.x, start.y, start.theta];
    let mut k1 = rates(g, sigma, s, z)?;
    let mut traj = Trajectory {
        step: h,
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        rates: Vec::with_capacity(n + 1),
        stats: IntegratorStats::default(),
    };
    traj.times.push(0.0);
    traj.states.push(start);
    traj.rates.push(k1);
    traj.stats.evaluations = 1;
    for step in 1..=n {
        let full = rk4_step(g, sigma, s, z, k1, h)?;
        let mid = rk4_step(g, sigma, s, z, k1, 0.5 * h)?;
        let kmid = rates(g, sigma, s, mid)?;
        let halves = rk4_step(g, sigma, s, mid, kmid, 0.5 * h)?;
        let p = HalfPlanePoint { x: full[0], y: full[1] };
        let q = HalfPlanePoint { x: halves[0], y: halves[1] };
        let estimate = (hyp_distance(p, q) + (full[2] - halves[2]).abs()) / 15.0;
        let time = step as f64 * h;
        if !(estimate <= options.tolerance) {
            return Err(Error::IntegratorBlowUp {
                time,
                estimate,
                tolerance: options.tolerance,
            });
        }
        z = full;
        k1 = rates(g, sigma, s, z)?;
        traj.stats.evaluations += 10;
        traj.stats.max_error_estimate = traj.stats.max_error_estimate.max(estimate);
        traj.times.push(time);
        traj.states.push(PhaseState::new(z[0], z[1], z[2])?);
        traj.rates.push(k1);
    }
    traj.stats.steps = n;
    Ok(traj)
}

/// Radius and period of the closed orbit with constant geodesic curvature `kappa` in
/// the curvature −1 plane.
pub fn circle_orbit_oracle(kappa: f64) -> Result<(f64, f64)> {
    if !(kappa > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "orbits of curvature {kappa} ≤ 1 do not close"
        )));
    }
    let radius = (1.0 / kappa).atanh();
    Ok((radius, TAU * radius.sinh()))
}

/// First return time to the starting state within `tol` in phase distance.
///
/// Returns are sought where the base point crosses, in the forward sense, the line
/// through the start orthogonal to the initial direction; crossing times are refined
/// on the Hermite interpolant.
pub fn detect_period(traj: &Trajectory, tol: f64) -> Option<f64> {
    let start = traj.states.first()?;
    let (sin, cos) = start.theta.sin_cos();
    let section = |z: [f64; 3]| (z[0] - start.x) * cos + (z[1] - start.y) * sin;
    let at = |k: usize| {
        let s = &traj.states[k];
        [s.x, s.y, s.theta]
    };
    for k in 1..traj.len().saturating_sub(1) {
        let (g0, g1) = (section(at(k)), section(at(k + 1)));
        if !(g0 < 0.0 && g1 >= 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (traj.times[k], traj.times[k + 1]);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if section(traj.interpolate(k, mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let z = traj.interpolate(k, t);
        let p = HalfPlanePoint { x: z[0], y: z[1].max(f64::MIN_POSITIVE) };
        let distance = hyp_distance(p, start.point()) + angle_gap(z[2], start.theta);
        if distance < tol {
            return Some(t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp::geodesic_point;
    use crate::surface::{build_genus2_group, Bump, InvariantOneForm, InvariantScalar, SurfaceGroup};
    use approx::assert_relative_eq;
    use std::sync::{Arc, OnceLock};

    fn group() -> Arc<SurfaceGroup> {
        static G: OnceLock<Arc<SurfaceGroup>> = OnceLock::new();
        G.get_or_init(|| Arc::new(build_genus2_group().unwrap())).clone()
    }

    fn hyperbolic(a: f64) -> (ConformalMetric, MagneticField) {
        (
            ConformalMetric::hyperbolic(group()),
            MagneticField::uniform(group(), a).unwrap(),
        )
    }

    #[test]
    fn vector_field_examples() {
        let (g, sigma) = hyperbolic(0.0);
        let v = vector_field(&g, &sigma, 1.0, &PhaseState::new(0.0, 1.0, PI / 2.0).unwrap()).unwrap();
        assert!(v[0].abs() < 1e-16);
        assert_eq!(v[1], 1.0);
        assert!(v[2].abs() < 1e-16);

        let (g, sigma) = hyperbolic(1.0);
        let v = vector_field(&g, &sigma, 1.0, &PhaseState::new(0.3, 2.0, 0.0).unwrap()).unwrap();
        assert_eq!(v, [2.0, 0.0, 0.0]);

        // Geodesic along the unit semicircle: the chart angle turns at rate -cos θ.
        let (g, sigma) = hyperbolic(0.0);
        for phi in [0.3f64, 1.0, 2.0] {
            let (x, y) = (phi.cos(), phi.sin());
            let theta = phi + PI / 2.0;
            let v = vector_field(&g, &sigma, 1.0, &PhaseState::new(x, y, theta).unwrap()).unwrap();
            assert_relative_eq!(v[2], -theta.cos(), epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_underflowing_state() {
        let (g, sigma) = hyperbolic(0.0);
        let bad = PhaseState { x: 0.0, y: 0.0, theta: 0.0 };
        assert!(matches!(vector_field(&g, &sigma, 1.0, &bad), Err(Error::StateOutOfRange(_))));
        assert!(PhaseState::new(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn vertical_geodesic() {
        let (g, sigma) = hyperbolic(0.0);
        let start = PhaseState::new(0.0, 1.0, PI / 2.0).unwrap();
        let traj = integrate(&g, &sigma, 1.0, start, 2.0, 1e-2).unwrap();
        let end = traj.last();
        assert!(end.x.abs() < 1e-12);
        assert!((end.y - 2f64.exp()).abs() < 1e-8);
        assert!((end.theta - PI / 2.0).abs() < 1e-12);
        assert_eq!(traj.len(), 201);
        assert_relative_eq!(traj.step, 1e-2, epsilon = 1e-15);
        assert!(traj.stats.max_error_estimate < 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        let (g, sigma) = hyperbolic(0.0);
        let start = PhaseState::new(0.0, 1.0, PI / 2.0).unwrap();
        let err = |dt: f64| (integrate(&g, &sigma, 1.0, start, 2.0, dt).unwrap().last().y - 2f64.exp()).abs();
        let (e1, e2, e3) = (err(1e-2), err(5e-3), err(2.5e-3));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn oracle_examples() {
        let (r, t) = circle_orbit_oracle(2.0).unwrap();
        assert_relative_eq!(r, 0.5 * 3f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(t, TAU / 3f64.sqrt(), epsilon = 1e-14);
        let (r, t) = circle_orbit_oracle(2f64.sqrt()).unwrap();
        assert_relative_eq!(r, 0.881373587019543, epsilon = 1e-14);
        assert_relative_eq!(t, TAU, epsilon = 1e-14);
        let (r, t) = circle_orbit_oracle(1e9).unwrap();
        assert!(r < 1e-8 && t < 1e-7);
        assert!(circle_orbit_oracle(1.0).is_err());
        assert!(circle_orbit_oracle(0.5).is_err());
    }

    #[test]
    fn circle_orbits_match_oracle() {
        for kappa in [1.5, 2.0, 3.0, 2f64.sqrt()] {
            let (g, sigma) = hyperbolic(kappa);
            let (radius, period) = circle_orbit_oracle(kappa).unwrap();
            let start = PhaseState::new(0.2, 1.3, 0.7).unwrap();
            // Positive curvature turns left, so the center lies along the left normal.
            let center = geodesic_point(start.point(), start.theta + PI / 2.0, radius);
            let traj = integrate(&g, &sigma, 1.0, start, 1.5 * period, 1e-2).unwrap();
            let worst = traj
                .states
                .iter()
                .map(|s| (hyp_distance(s.point(), center) - radius).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "kappa {kappa}: {worst}");
            let found = detect_period(&traj, 1e-4).unwrap();
            assert!((found - period).abs() < 1e-5, "kappa {kappa}: {found} vs {period}");
        }
    }

    #[test]
    fn geodesics_do_not_close() {
        let (g, sigma) = hyperbolic(0.0);
        let start = PhaseState::new(0.0, 1.0, 0.3).unwrap();
        let traj = integrate(&g, &sigma, 1.0, start, 10.0, 1e-2).unwrap();
        assert_eq!(detect_period(&traj, 1e-3), None);
    }

    #[test]
    fn blow_up_reports_time() {
        let (g, sigma) = hyperbolic(50.0);
        let start = PhaseState::new(0.0, 1.0, 0.0).unwrap();
        let err = integrate_with(&g, &sigma, 1.0, start, 1.0, 0.5, IntegratorOptions { tolerance: 1e-10 }).unwrap_err();
        match err {
            Error::IntegratorBlowUp { time, .. } => assert_eq!(time, 0.5),
            other => panic!("unexpected {other}"),
        }
        assert!(integrate(&g, &sigma, 1.0, start, -1.0, 0.1).is_err());
    }

    #[test]
    fn deck_equivariance() {
        let grp = group();
        let u = InvariantScalar::zero_mean(
            grp.clone(),
            vec![Bump { center: HalfPlanePoint::I, amplitude: 0.2, support_radius: 1.2 }],
        )
        .unwrap();
        let g = ConformalMetric::new(u).unwrap();
        let beta = InvariantOneForm::new(
            grp.clone(),
            vec![Bump { center: HalfPlanePoint { x: 0.3, y: 1.1 }, amplitude: 0.5, support_radius: 0.9 }],
        )
        .unwrap();
        let sigma = MagneticField::new(0.6, beta).unwrap();
        let start = PhaseState::new(0.1, 0.9, 1.0).unwrap();
        let base = integrate(&g, &sigma, 1.3, start, 4.0, 5e-3).unwrap();
        for k in [0, 3, 5] {
            let gamma = grp.side_pairings()[k].compose(&grp.side_pairings()[(k + 1) % 8]);
            let moved = integrate(&g, &sigma, 1.3, start.transformed(&gamma).unwrap(), 4.0, 5e-3).unwrap();
            for (a, b) in base.states.iter().zip(&moved.states).step_by(50) {
                let image = a.transformed(&gamma).unwrap();
                assert!(image.phase_distance(b) < 1e-7, "{image:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn unit_speed_by_construction() {
        let grp = group();
        let u = InvariantScalar::zero_mean(
            grp.clone(),
            vec![Bump { center: HalfPlanePoint::I, amplitude: 0.2, support_radius: 1.2 }],
        )
        .unwrap();
        let g = ConformalMetric::new(u).unwrap();
        let sigma = MagneticField::uniform(grp, 1.0).unwrap();
        let traj = integrate(&g, &sigma, 1.0, PhaseState::new(0.0, 1.0, 0.0).unwrap(), 1.0, 1e-2).unwrap();
        for (s, r) in traj.states.iter().zip(&traj.rates) {
            let w = g.u().value(s.point()).unwrap() - s.y.ln();
            let speed = w.exp() * (r[0] * r[0] + r[1] * r[1]).sqrt();
            assert_relative_eq!(speed, 1.0, epsilon = 1e-14);
        }
    }
}
