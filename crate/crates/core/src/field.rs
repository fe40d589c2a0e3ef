//! Conformal metrics `g = e^{2u} g₀` and magnetic 2-forms `σ = a μ₀ + dβ₀` on the
//! genus-2 surface, with helicity and the conformality coefficient.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::PhaseState;
use crate::hyp::{Covector, HalfPlanePoint};
use crate::surface::{DomainRule, InvariantOneForm, InvariantScalar, ScalarJet, SurfaceGroup};

pub const CHI: f64 = -2.0;
/// Fiber nodes for phase-space integrals. The integrands are trigonometric
/// polynomials of degree one in the fiber angle, so any even count is exact.
const FIBER_NODES: usize = 8;

#[derive(Clone, Debug)]
pub struct ConformalMetric {
    u: InvariantScalar,
    area: f64,
}

impl ConformalMetric {
    pub fn new(u: InvariantScalar) -> Result<Self> {
        let rule = u.group().standard_domain_rule();
        Self::with_rule(u, &rule)
    }

    /// Constant factors get the exact area `e^{2c} · 4π`; otherwise `rule` integrates `e^{2u}`.
    pub fn with_rule(u: InvariantScalar, rule: &DomainRule) -> Result<Self> {
        let area = if u.is_constant() {
            (2.0 * u.constant_term()).exp() * -2.0 * PI * CHI
        } else {
            rule.try_integrate(|p| Ok((2.0 * u.value(p)?).exp()))?
        };
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::InvalidArgument(format!("metric area {area} is not positive")));
        }
        Ok(Self { u, area })
    }

    /// The curvature −1 metric `g₀`.
    pub fn hyperbolic(group: Arc<SurfaceGroup>) -> Self {
        Self {
            u: InvariantScalar::constant(group, 0.0),
            area: -2.0 * PI * CHI,
        }
    }

    pub fn u(&self) -> &InvariantScalar {
        &self.u
    }

    pub fn group(&self) -> &Arc<SurfaceGroup> {
        self.u.group()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Gaussian curvature `e^{-2u}(-1 - Δ₀u)`.
    pub fn curvature(&self, p: HalfPlanePoint) -> Result<f64> {
        let j = self.u.evaluate(p)?;
        Ok((-2.0 * j.value).exp() * (-1.0 - j.laplacian))
    }

    /// `∫ K μ_g`, which must equal `2πχ`.
    pub fn total_curvature(&self) -> Result<f64> {
        self.group()
            .standard_domain_rule()
            .try_integrate(|p| Ok(-1.0 - self.u.evaluate(p)?.laplacian))
    }
}

#[derive(Clone, Debug)]
pub struct MagneticField {
    a: f64,
    beta0: InvariantOneForm,
}

impl MagneticField {
    pub fn new(a: f64, beta0: InvariantOneForm) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("field coefficient {a} is not finite")));
        }
        Ok(Self { a, beta0 })
    }

    /// `a μ₀` with no exact part.
    pub fn uniform(group: Arc<SurfaceGroup>, a: f64) -> Result<Self> {
        Self::new(a, InvariantOneForm::zero(group))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn beta0(&self) -> &InvariantOneForm {
        &self.beta0
    }

    /// `σ / μ₀ = a + h₀`.
    pub fn base_density(&self, p: HalfPlanePoint) -> Result<f64> {
        Ok(self.a + self.beta0.density(p)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParameters {
    pub s: f64,
}

impl FlowParameters {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("intensity s must be positive, got {s}")));
        }
        Ok(Self { s })
    }
}

/// Everything the flow and the helicity integrand need at one point.
#[derive(Clone, Copy, Debug)]
pub struct LocalField {
    pub u: ScalarJet,
    /// `σ = f μ_g`.
    pub f: f64,
    /// `β = β₀ - a ⋆du`, so that `σ = -a K μ_g + dβ`.
    pub beta: Covector,
}

pub fn local_field(g: &ConformalMetric, sigma: &MagneticField, p: HalfPlanePoint) -> Result<LocalField> {
    let u = g.u.evaluate(p)?;
    let b = sigma.beta0.evaluate(p)?;
    let a = sigma.a;
    // ⋆du = u_x dy - u_y dx
    let beta = b.covector + Covector::new(a * u.gradient.dy, -a * u.gradient.dx);
    Ok(LocalField {
        f: (-2.0 * u.value).exp() * (a + b.density),
        u,
        beta,
    })
}

/// Chart components of the `g`-unit vector at chart angle `theta`.
pub(crate) fn unit_vector(u: f64, y: f64, theta: f64) -> (f64, f64) {
    let speed = (-u).exp() * y;
    (speed * theta.cos(), speed * theta.sin())
}

pub fn metric_area(g: &ConformalMetric) -> f64 {
    g.area
}

/// `(1/A) ∫ ρ μ_g` with `ρ = λ e^{-u}`, `λ = √(A/4π)`.
pub fn conformality_coefficient(g: &ConformalMetric) -> Result<f64> {
    if g.u.is_constant() {
        return Ok(1.0);
    }
    let lambda = (g.area / (-2.0 * PI * CHI)).sqrt();
    let integral = g
        .group()
        .standard_domain_rule()
        .try_integrate(|p| Ok(g.u.value(p)?.exp()))?;
    Ok(lambda * integral / g.area)
}

/// `[σ] = -2πχ a`.
pub fn total_flux(sigma: &MagneticField) -> f64 {
    -2.0 * PI * CHI * sigma.a
}

pub fn helicity_formula(g: &ConformalMetric, sigma: &MagneticField) -> f64 {
    let flux = total_flux(sigma);
    2.0 * PI * g.area + flux * flux / CHI
}

/// `∫_{SM} τ` with `τ(x, v) = 1 - a f(x) - β_x(v)` against the Liouville volume.
pub fn helicity_integral(g: &ConformalMetric, sigma: &MagneticField) -> Result<f64> {
    helicity_integral_with(g, sigma, &g.group().standard_domain_rule())
}

pub fn helicity_integral_with(g: &ConformalMetric, sigma: &MagneticField, rule: &DomainRule) -> Result<f64> {
    let a = sigma.a;
    rule.try_integrate(|p| {
        let local = local_field(g, sigma, p)?;
        let weight = (2.0 * local.u.value).exp();
        let fiber: f64 = fiber_nodes()
            .map(|theta| {
                let v = unit_vector(local.u.value, p.y, theta);
                1.0 - a * local.f - local.beta.apply(v.0, v.1)
            })
            .sum();
        Ok(weight * fiber * 2.0 * PI / FIBER_NODES as f64)
    })
}

fn fiber_nodes() -> impl Iterator<Item = f64> {
    (0..FIBER_NODES).map(|j| 2.0 * PI * j as f64 / FIBER_NODES as f64)
}

/// Fiber integral of `β_x(v)` alone at one point, which vanishes by the `v ↦ -v` symmetry.
pub fn fiber_beta_integral(g: &ConformalMetric, sigma: &MagneticField, p: HalfPlanePoint) -> Result<f64> {
    let local = local_field(g, sigma, p)?;
    Ok(fiber_nodes()
        .map(|theta| {
            let v = unit_vector(local.u.value, p.y, theta);
            local.beta.apply(v.0, v.1)
        })
        .sum::<f64>()
        * 2.0
        * PI
        / FIBER_NODES as f64)
}

/// The unique positive `s` with zero helicity for `sσ`; none for exact `σ`.
pub fn s_h_value(g: &ConformalMetric, sigma: &MagneticField) -> Option<f64> {
    let flux = total_flux(sigma);
    (flux != 0.0).then(|| (-2.0 * PI * CHI * g.area).sqrt() / flux.abs())
}

/// `τ_s(F_s) = 1 - a s² f(x) - s β_x(v)` at a phase state.
pub fn contact_primitive_value(g: &ConformalMetric, sigma: &MagneticField, s: f64, state: &PhaseState) -> Result<f64> {
    let p = state.point();
    let local = local_field(g, sigma, p)?;
    let v = unit_vector(local.u.value, p.y, state.theta);
    Ok(1.0 - sigma.a * s * s * local.f - s * local.beta.apply(v.0, v.1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactRange {
    pub min: f64,
    pub max: f64,
}

impl ContactRange {
    /// A sign-definite primitive witnesses contact type.
    pub fn sign_definite(&self) -> bool {
        self.min > 0.0 || self.max < 0.0
    }
}

/// Extremes of `τ_s(F_s)` over `points` × `angles` equally spaced fiber angles.
pub fn contact_primitive_range(
    g: &ConformalMetric,
    sigma: &MagneticField,
    s: f64,
    points: &[HalfPlanePoint],
    angles: usize,
) -> Result<ContactRange> {
    let mut range = ContactRange {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for &p in points {
        for j in 0..angles.max(1) {
            let state = PhaseState::new(p.x, p.y, 2.0 * PI * j as f64 / angles.max(1) as f64)?;
            let v = contact_primitive_value(g, sigma, s, &state)?;
            range.min = range.min.min(v);
            range.max = range.max.max(v);
        }
    }
    Ok(range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp::polar_point;
    use crate::surface::{build_genus2_group, Bump};
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn group() -> Arc<SurfaceGroup> {
        static G: OnceLock<Arc<SurfaceGroup>> = OnceLock::new();
        G.get_or_init(|| Arc::new(build_genus2_group().unwrap())).clone()
    }

    fn bumped_metric(amplitude: f64) -> ConformalMetric {
        let u = InvariantScalar::zero_mean(
            group(),
            vec![Bump {
                center: HalfPlanePoint::I,
                amplitude,
                support_radius: 1.2,
            }],
        )
        .unwrap();
        ConformalMetric::new(u).unwrap()
    }

    fn beta_bump() -> InvariantOneForm {
        InvariantOneForm::new(
            group(),
            vec![Bump {
                center: polar_point(HalfPlanePoint::I, 0.7, 2.5),
                amplitude: 0.4,
                support_radius: 0.8,
            }],
        )
        .unwrap()
    }

    #[test]
    fn area_examples() {
        let g = group();
        assert_relative_eq!(metric_area(&ConformalMetric::hyperbolic(g.clone())), 4.0 * PI);
        let flat = ConformalMetric::new(InvariantScalar::constant(g.clone(), 0.0)).unwrap();
        assert_relative_eq!(flat.area(), 4.0 * PI, epsilon = 1e-10);
        let doubled = ConformalMetric::new(InvariantScalar::constant(g, 2f64.ln())).unwrap();
        assert_relative_eq!(doubled.area(), 16.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn bump_area_is_converged() {
        let u = InvariantScalar::new(
            group(),
            0.0,
            vec![Bump {
                center: polar_point(HalfPlanePoint::I, 0.5, 1.0),
                amplitude: 0.1,
                support_radius: 1.0,
            }],
        )
        .unwrap();
        let reference = ConformalMetric::with_rule(u.clone(), &group().domain_rule(320, 320)).unwrap();
        let g = ConformalMetric::new(u).unwrap();
        assert_relative_eq!(g.area(), reference.area(), max_relative = 1e-8);
    }

    #[test]
    fn gauss_bonnet() {
        for amp in [0.0, 0.1, 0.2] {
            let g = bumped_metric(amp);
            assert!((g.total_curvature().unwrap() - 2.0 * PI * CHI).abs() < 1e-5);
        }
        let g = bumped_metric(0.2);
        let p = polar_point(HalfPlanePoint::I, 0.3, 0.2);
        // Direct evaluation of K against the weight form of the same integral.
        let k = g.curvature(p).unwrap();
        let j = g.u().evaluate(p).unwrap();
        assert_relative_eq!(k * (2.0 * j.value).exp(), -1.0 - j.laplacian, max_relative = 1e-14);
    }

    #[test]
    fn conformality_examples() {
        let g = group();
        assert_eq!(conformality_coefficient(&ConformalMetric::hyperbolic(g.clone())).unwrap(), 1.0);
        let c = ConformalMetric::new(InvariantScalar::constant(g, 0.4)).unwrap();
        assert_relative_eq!(conformality_coefficient(&c).unwrap(), 1.0, epsilon = 1e-9);

        let m = bumped_metric(0.2);
        let rho = conformality_coefficient(&m).unwrap();
        assert!(rho < 1.0);
        // Cauchy–Schwarz by quadrature: (∫ρ μ_g / A)² ≤ ∫ρ² μ_g / A.
        let rule = m.group().standard_domain_rule();
        let lambda = (m.area() / (4.0 * PI)).sqrt();
        let second = rule
            .try_integrate(|p| Ok(lambda * lambda * (-2.0 * m.u().value(p)?).exp() * (2.0 * m.u().value(p)?).exp()))
            .unwrap()
            / m.area();
        assert!(rho * rho < second);
        assert_relative_eq!(second, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn flux_and_formula_examples() {
        let g = group();
        let h = ConformalMetric::hyperbolic(g.clone());
        let one = MagneticField::uniform(g.clone(), 1.0).unwrap();
        let half = MagneticField::uniform(g.clone(), 0.5).unwrap();
        let exact = MagneticField::new(0.0, beta_bump()).unwrap();
        assert_relative_eq!(total_flux(&one), 4.0 * PI);
        assert_relative_eq!(total_flux(&half), 2.0 * PI);
        assert_eq!(total_flux(&exact), 0.0);
        assert_eq!(total_flux(&MagneticField::new(1.0, beta_bump()).unwrap()), total_flux(&one));
        assert!(helicity_formula(&h, &one).abs() < 1e-12);
        assert_relative_eq!(helicity_formula(&h, &half), 6.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(helicity_formula(&h, &exact), 8.0 * PI * PI);
        let minus = MagneticField::uniform(g, -0.5).unwrap();
        assert_eq!(helicity_formula(&h, &minus), helicity_formula(&h, &half));
        assert_eq!(s_h_value(&h, &one), Some(1.0));
        assert_relative_eq!(s_h_value(&h, &half).unwrap(), 2.0, epsilon = 1e-14);
        assert_eq!(s_h_value(&h, &exact), None);
    }

    #[test]
    fn helicity_integral_examples() {
        let g = group();
        let h = ConformalMetric::hyperbolic(g.clone());
        let one = MagneticField::uniform(g.clone(), 1.0).unwrap();
        assert!(helicity_integral(&h, &one).unwrap().abs() < 1e-8);
        let half = MagneticField::uniform(g, 0.5).unwrap();
        assert_relative_eq!(helicity_integral(&h, &half).unwrap(), 6.0 * PI * PI, max_relative = 1e-6);
    }

    #[test]
    fn helicity_integral_matches_formula_on_grid() {
        let g = group();
        for amp in [0.0, 0.1, 0.2] {
            let metric = bumped_metric(amp);
            for a in [0.0, 0.5, 1.0] {
                for beta in [InvariantOneForm::zero(g.clone()), beta_bump()] {
                    let sigma = MagneticField::new(a, beta).unwrap();
                    let formula = helicity_formula(&metric, &sigma);
                    let integral = helicity_integral(&metric, &sigma).unwrap();
                    let ok = if formula.abs() < 1e-9 {
                        integral.abs() < 1e-6
                    } else {
                        ((integral - formula) / formula).abs() < 1e-5
                    };
                    assert!(ok, "amp {amp} a {a}: {integral} vs {formula}");
                }
            }
        }
    }

    #[test]
    fn fiber_beta_term_vanishes() {
        let metric = bumped_metric(0.2);
        let sigma = MagneticField::new(0.7, beta_bump()).unwrap();
        for k in 0..20 {
            let p = polar_point(HalfPlanePoint::I, 0.1 * k as f64, 0.5 * k as f64);
            assert!(fiber_beta_integral(&metric, &sigma, p).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn contact_primitive_examples() {
        let g = group();
        let h = ConformalMetric::hyperbolic(g.clone());
        let one = MagneticField::uniform(g.clone(), 1.0).unwrap();
        let state = PhaseState::new(0.3, 1.2, 0.4).unwrap();
        assert_relative_eq!(contact_primitive_value(&h, &one, 1e-9, &state).unwrap(), 1.0, epsilon = 1e-8);
        assert!(contact_primitive_value(&h, &one, 1.0, &state).unwrap().abs() < 1e-15);
        assert_relative_eq!(contact_primitive_value(&h, &one, 2.0, &state).unwrap(), -3.0);
        let range = contact_primitive_range(&h, &one, 2.0, &g.sample_domain(50), 8).unwrap();
        assert!(range.sign_definite());
        assert_relative_eq!(range.min, -3.0);
        assert_relative_eq!(range.max, -3.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FlowParameters::new(0.0).is_err());
        assert!(FlowParameters::new(-1.0).is_err());
        assert!(MagneticField::uniform(group(), f64::NAN).is_err());
    }
}
