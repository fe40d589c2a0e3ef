//! The acceptance battery behind `magflow verify`: ten criteria, each a closed-form
//! oracle or a property sweep, reported as one pass/fail line apiece.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::config::Tolerances;
use crate::crit::{
    circle_lower_bound, estimate_critical_value, primitive_upper_bound, proposition_from_estimate, s_c_value,
    theorem_gap_from_estimate, CriticalBudget,
};
use crate::error::{Error, Result};
use crate::field::{helicity_formula, helicity_integral, s_h_value, ConformalMetric, MagneticField};
use crate::flow::{circle_orbit_oracle, detect_period, integrate_with, IntegratorOptions, PhaseState};
use crate::hyp::{geodesic_point, hyp_distance, polar_point, HalfPlanePoint};
use crate::radon::{
    disk_radon, disk_radon_group_sum, eigenfunction_mean_value_check, growth_check, q_kernel_imag, EigenPart,
};
use crate::surface::{build_genus2_group, Bump, InvariantOneForm, InvariantScalar, SurfaceGroup, HYPERBOLIC_AREA};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "constant-curvature baseline"),
    (2, "helicity formula cross-check grid"),
    (3, "imaginary kernel closed form"),
    (4, "mean-value identity"),
    (5, "kernel growth"),
    (6, "flow oracles"),
    (7, "surface integrity"),
    (8, "critical intensity below helicity intensity"),
    (9, "proposition chain equality case"),
    (10, "Radon plumbing"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

/// Collects failed conditions and the measured values of a criterion.
struct Ledger {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Ledger {
    fn new() -> Self {
        Self {
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self) -> std::result::Result<String, String> {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(self.failures.join("; "))
        }
    }
}

type Checked = std::result::Result<String, String>;

/// Shared state for the criteria: the surface group is built once.
pub struct Battery {
    group: Arc<SurfaceGroup>,
    tol: Tolerances,
}

impl Battery {
    pub fn new(tol: Tolerances) -> Result<Self> {
        Ok(Self {
            group: Arc::new(build_genus2_group()?),
            tol,
        })
    }

    pub fn run(&self, id: u8) -> Outcome {
        let title = CRITERIA
            .iter()
            .find(|c| c.0 == id)
            .map(|c| c.1)
            .unwrap_or("unknown criterion");
        let result = match id {
            1 => self.baseline(),
            2 => self.helicity_grid(),
            3 => self.imaginary_kernel(),
            4 => self.mean_value(),
            5 => self.growth(),
            6 => self.flow(),
            7 => self.surface(),
            8 => self.theorem(),
            9 => self.proposition(),
            10 => self.radon(),
            _ => Err(format!("no criterion {id}")),
        };
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        Outcome { id, title, passed, detail }
    }

    pub fn run_all(&self) -> Vec<Outcome> {
        CRITERIA.iter().map(|c| self.run(c.0)).collect()
    }

    fn hyperbolic(&self) -> ConformalMetric {
        ConformalMetric::hyperbolic(self.group.clone())
    }

    fn uniform(&self, a: f64) -> Result<MagneticField> {
        MagneticField::uniform(self.group.clone(), a)
    }

    fn budget(&self) -> CriticalBudget {
        CriticalBudget {
            tolerance: self.tol.bound,
            ..CriticalBudget::default()
        }
    }

    /// Conformal factor with a single bump at the base point, support 1.5.
    fn bumped_metric(&self, amplitude: f64) -> Result<ConformalMetric> {
        let bump = Bump {
            center: HalfPlanePoint::I,
            amplitude,
            support_radius: 1.5,
        };
        ConformalMetric::new(InvariantScalar::new(self.group.clone(), 0.0, vec![bump])?)
    }

    fn zero_mean_metric(&self, amplitude: f64) -> Result<ConformalMetric> {
        let bump = Bump {
            center: HalfPlanePoint::I,
            amplitude,
            support_radius: 1.2,
        };
        ConformalMetric::new(InvariantScalar::zero_mean(self.group.clone(), vec![bump])?)
    }

    fn beta_bump(&self, amplitude: f64) -> Result<InvariantOneForm> {
        InvariantOneForm::new(
            self.group.clone(),
            vec![Bump {
                center: polar_point(HalfPlanePoint::I, 0.7, 2.5),
                amplitude,
                support_radius: 0.8,
            }],
        )
    }

    fn baseline(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let g = self.hyperbolic();
            let sigma = self.uniform(1.0)?;
            let mut l = Ledger::new();
            let formula = helicity_formula(&g, &sigma);
            l.check(formula.abs() < 1e-12, format!("formula {formula:.1e}"));
            let integral = helicity_integral(&g, &sigma)?;
            l.check(integral.abs() < self.tol.cross_check, format!("integral {integral:.1e}"));
            let s_h = s_h_value(&g, &sigma).unwrap_or(f64::NAN);
            l.check((s_h - 1.0).abs() < 1e-12, format!("s_h {s_h}"));
            let lower = circle_lower_bound(&g, &sigma, &[6.0], &[HalfPlanePoint::I], 16.0)?.value;
            l.check(lower >= 0.495, format!("circle bound at r = 6: {lower:.6}"));
            let upper = primitive_upper_bound(&g, &sigma, &self.budget().family)?.value;
            l.check((upper - 0.5).abs() < 1e-10, format!("primitive bound {upper}"));
            let est = estimate_critical_value(&g, &sigma, &self.budget())?;
            let s_c = s_c_value(&est);
            let inside = matches!((s_c.lower, s_c.upper), (Some(lo), Some(hi)) if lo >= 1.0 - 1e-12 && hi <= 1.006);
            let end = |v: Option<f64>| v.map_or("unbounded".to_string(), |v| format!("{v:.6}"));
            l.check(inside, format!("s_c in [{}, {}]", end(s_c.lower), end(s_c.upper)));
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn helicity_grid(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let mut worst: f64 = 0.0;
            for amp in [0.0, 0.1, 0.2] {
                let g = self.zero_mean_metric(amp)?;
                for a in [0.0, 0.5, 1.0] {
                    for beta in [InvariantOneForm::zero(self.group.clone()), self.beta_bump(0.4)?] {
                        let sigma = MagneticField::new(a, beta)?;
                        let formula = helicity_formula(&g, &sigma);
                        let integral = helicity_integral(&g, &sigma)?;
                        let (err, ok) = if formula.abs() < 1e-9 {
                            (integral.abs(), integral.abs() < self.tol.cross_check)
                        } else {
                            let rel = ((integral - formula) / formula).abs();
                            (rel, rel < self.tol.helicity_relative)
                        };
                        worst = worst.max(err);
                        if !ok {
                            l.check(false, format!("u amplitude {amp}, a {a}: integral {integral} vs {formula}"));
                        }
                    }
                }
            }
            l.check(true, format!("18 configurations, worst deviation {worst:.2e}"));
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn imaginary_kernel(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let mut worst: f64 = 0.0;
            for r in [0.5f64, 1.0, 2.0, 4.0] {
                let exact = TAU * (r.cosh() - 1.0);
                let rel = ((q_kernel_imag(r, 0.5)? - exact) / exact).abs();
                worst = worst.max(rel);
                if rel >= self.tol.quadrature {
                    l.check(false, format!("r {r}: relative error {rel:e}"));
                }
            }
            l.check(true, format!("worst relative error {worst:.2e}"));
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn mean_value(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let mut worst: f64 = 0.0;
            let mut count = 0;
            for s in [0.0, 1.0, 2.5] {
                for r in [0.5, 1.0, 2.0] {
                    for c in [HalfPlanePoint::I, HalfPlanePoint { x: 2.0, y: 0.5 }] {
                        for part in [EigenPart::Real, EigenPart::Imaginary] {
                            let check = eigenfunction_mean_value_check(s, part, c, r)?;
                            worst = worst.max(check.residual.abs() / (check.rhs.abs() + 1.0));
                            count += 1;
                            if !check.passes(self.tol.cross_check) {
                                l.check(false, format!("s {s}, r {r}, center {c:?}: residual {:e}", check.residual));
                            }
                        }
                    }
                }
            }
            l.check(true, format!("{count} cases, worst relative residual {worst:.2e}"));
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn growth(&self) -> Checked {
        let mut l = Ledger::new();
        for s in [0.5, 1.0, 3.0] {
            match growth_check(s, 5) {
                Ok(rows) => {
                    let margin = rows.iter().map(|r| r.q / r.bound).fold(f64::INFINITY, f64::min);
                    l.check(true, format!("s {s}: min q/bound {margin:.3}"));
                }
                Err(e) => l.check(false, format!("s {s}: {e}")),
            }
        }
        l.finish()
    }

    fn flow(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let g = self.hyperbolic();
            let options = IntegratorOptions::default();
            let start = PhaseState::new(0.2, 1.3, 0.7)?;
            for kappa in [2.0, 2f64.sqrt()] {
                let sigma = self.uniform(kappa)?;
                let (radius, period) = circle_orbit_oracle(kappa)?;
                let center = geodesic_point(start.point(), start.theta + PI / 2.0, radius);
                let traj = integrate_with(&g, &sigma, 1.0, start, 1.5 * period, 1e-2, options)?;
                let drift = traj
                    .states
                    .iter()
                    .map(|s| (hyp_distance(s.point(), center) - radius).abs())
                    .fold(0.0, f64::max);
                if kappa == 2.0 {
                    l.check((radius - 0.5 * 3f64.ln()).abs() < 1e-15, format!("radius {radius:.5}"));
                    l.check(drift < self.tol.cross_check, format!("radius drift {drift:.1e}"));
                }
                let found = detect_period(&traj, self.tol.period);
                match found {
                    Some(t) => l.check((t - period).abs() < 1e-5, format!("s f = {kappa:.4}: period {t:.6} vs {period:.6}")),
                    None => l.check(false, format!("s f = {kappa:.4}: no period detected")),
                }
            }
            let sigma = self.uniform(0.0)?;
            let up = PhaseState::new(0.0, 1.0, PI / 2.0)?;
            let end_error = |dt: f64| -> Result<f64> {
                let traj = integrate_with(&g, &sigma, 1.0, up, 2.0, dt, options)?;
                Ok((traj.last().y - 2f64.exp()).abs())
            };
            let (e1, e2, e3) = (end_error(1e-2)?, end_error(5e-3)?, end_error(2.5e-3)?);
            l.check(e1 < self.tol.geometry, format!("geodesic endpoint error {e1:.1e}"));
            for ratio in [e1 / e2, e2 / e3] {
                l.check((12.0..=20.0).contains(&ratio), format!("halving ratio {ratio:.2}"));
            }
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn surface(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let g = &self.group;
            let area = g.standard_domain_rule().integrate(|_| 1.0);
            l.check((area - HYPERBOLIC_AREA).abs() < 1e-6, format!("area - 4π = {:.1e}", area - HYPERBOLIC_AREA));
            let relator = g.relator_residual();
            l.check(relator < self.tol.geometry, format!("relator residual {relator:.1e}"));
            let mut rng = StdRng::seed_from_u64(0x6d61_6766);
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let p = polar_point(HalfPlanePoint::I, rng.gen_range(0.0..6.0), rng.gen_range(0.0..TAU));
                let red = g.reduce_point(p)?;
                if !g.contains(red.point) {
                    l.check(false, format!("{p:?} reduced outside the domain"));
                }
                worst = worst.max(hyp_distance(red.isometry.apply(red.point), p));
            }
            l.check(worst < self.tol.geometry, format!("reduction round trip {worst:.1e} over 100 points"));
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn theorem(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let hyperbolic = self.hyperbolic();
            let bumped = self.bumped_metric(0.2)?;
            let cases = [
                ("u = 0, a = 1", hyperbolic.clone(), self.uniform(1.0)?),
                ("u = 0, a = 1/2", hyperbolic.clone(), self.uniform(0.5)?),
                ("u = 0, a = 1, beta0", hyperbolic, MagneticField::new(1.0, self.beta_bump(0.4)?)?),
                ("u = bump(0.2), a = 1", bumped.clone(), self.uniform(1.0)?),
                ("u = bump(0.2), a = 0.8, beta0", bumped, MagneticField::new(0.8, self.beta_bump(0.3)?)?),
            ];
            for (i, (name, g, sigma)) in cases.iter().enumerate() {
                let est = estimate_critical_value(g, sigma, &self.budget())?;
                let report = match theorem_gap_from_estimate(g, sigma, est, self.tol.theorem) {
                    Ok(r) => r,
                    Err(e) => {
                        l.check(false, format!("{name}: {e}"));
                        continue;
                    }
                };
                let gap = report.gap.unwrap_or(f64::NEG_INFINITY);
                l.check(gap >= -self.tol.theorem, format!("{name}: s_h - s_c = {gap:.4}"));
                if i == 3 {
                    l.check(gap > 0.0, format!("strict gap {gap:.4}"));
                    l.check(
                        report.gk_residual >= -self.tol.cross_check,
                        format!("gk residual {:.4}", report.gk_residual),
                    );
                }
            }
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn proposition(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let g = self.hyperbolic();
            let sigma = self.uniform(0.5)?;
            let est = estimate_critical_value(&g, &sigma, &self.budget())?;
            let report = match proposition_from_estimate(&g, &sigma, est, self.tol.cross_check) {
                Ok(r) => r,
                Err(e) => return Ok(Err(e.to_string())),
            };
            let tol = self.tol.cross_check;
            l.check((report.two_rho2_c_upper - 0.25).abs() < tol, format!("2ρ²c = {}", report.two_rho2_c_upper));
            l.check((report.rhs - 0.25).abs() < tol, format!("1 - H/2πA = {}", report.rhs));
            Ok(l.finish())
        };
        flatten(inner())
    }

    fn radon(&self) -> Checked {
        let inner = || -> Result<Checked> {
            let mut l = Ledger::new();
            let g = &self.group;
            let h = InvariantScalar::zero_mean(
                g.clone(),
                vec![
                    Bump {
                        center: HalfPlanePoint::I,
                        amplitude: 1.0,
                        support_radius: 1.4,
                    },
                    Bump {
                        center: polar_point(HalfPlanePoint::I, 1.0, 0.4),
                        amplitude: -0.5,
                        support_radius: 1.2,
                    },
                ],
            )?;
            let x = HalfPlanePoint { x: -0.3, y: 0.9 };
            let y = g.side_pairings()[1].compose(&g.side_pairings()[6]).apply(x);
            let mut lift: f64 = 0.0;
            for r in [1.0, 2.0] {
                lift = lift.max((disk_radon(&h, x, r, 128)? - disk_radon(&h, y, r, 128)?).abs());
                lift = lift.max((disk_radon_group_sum(&h, x, r)? - disk_radon_group_sum(&h, y, r)?).abs());
            }
            l.check(lift < self.tol.geometry, format!("lift change {lift:.1e}"));
            let mut gap: f64 = 0.0;
            let z = HalfPlanePoint { x: 0.2, y: 1.1 };
            for r in [0.5, 1.5, 3.0] {
                gap = gap.max((disk_radon(&h, z, r, 128)? - disk_radon_group_sum(&h, z, r)?).abs());
            }
            l.check(gap < 1e-7, format!("direct vs group sum {gap:.1e}"));
            let biased = InvariantScalar::new(g.clone(), 0.0, h.bumps().to_vec())?;
            let rejected = matches!(disk_radon(&biased, x, 1.0, 32), Err(Error::NonZeroMean { .. }))
                && matches!(disk_radon_group_sum(&biased, x, 1.0), Err(Error::NonZeroMean { .. }));
            l.check(rejected, "nonzero mean rejected");
            let zero = InvariantScalar::constant(g.clone(), 0.0);
            let mut vanishes = true;
            for r in [0.5, 3.0, 6.0] {
                vanishes &= disk_radon(&zero, x, r, 32)? == 0.0 && disk_radon_group_sum(&zero, x, r)? == 0.0;
            }
            l.check(vanishes, "zero function transforms to zero");
            Ok(l.finish())
        };
        flatten(inner())
    }
}

fn flatten(r: Result<Checked>) -> Checked {
    r.unwrap_or_else(|e| Err(format!("error: {e}")))
}
