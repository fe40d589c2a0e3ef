//! The genus-2 surface `M = H²/Γ` built on the regular octagon with vertex angles π/4.
//!
//! Side `k` of the octagon has outward polar direction `ψ_k = kπ/4` about `i`, and
//! `side_pairings[k]` is the hyperbolic translation through `i` in direction `ψ_k`
//! by twice the inradius. It carries side `k + 4` onto side `k`, so the neighbour of
//! the base tile across side `k` is `side_pairings[k] · F`, and
//! `side_pairings[k + 4]` is its inverse.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyp::{cosh_distance, hyp_distance, polar_point, Covector, HalfPlanePoint, Isometry};
use crate::quad::GaussLegendre;

pub const SIDES: usize = 8;
pub const VERTEX_ANGLE: f64 = PI / 4.0;
pub const EULER_CHARACTERISTIC: f64 = -2.0;
/// `-2πχ`, the area of any curvature −1 metric on the genus-2 surface.
pub const HYPERBOLIC_AREA: f64 = 4.0 * PI;
/// Side indices whose pairings multiply to the identity.
pub const RELATOR: [usize; SIDES] = [0, 3, 6, 1, 4, 7, 2, 5];

pub const RELATOR_TOLERANCE: f64 = 1e-8;
pub const AREA_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_BALL_CAP: usize = 1_000_000;
/// Per-sector node counts of the standard octagon rule. Bump supports that cross
/// the sectors limit the tensor Gauss rule to algebraic convergence.
pub const DEFAULT_DOMAIN_ORDER: usize = 128;
const REDUCTION_CAP: usize = 10_000;

#[derive(Clone, Debug)]
pub struct SurfaceGroup {
    side_pairings: [Isometry; SIDES],
    side_directions: [f64; SIDES],
    neighbor_centers: [HalfPlanePoint; SIDES],
    vertices: [HalfPlanePoint; SIDES],
    inradius: f64,
    circumradius: f64,
    relator_residual: f64,
    area: f64,
}

/// Builds the regular-octagon Fuchsian group and checks the relator and the area.
pub fn build_genus2_group() -> Result<SurfaceGroup> {
    let n = SIDES as f64;
    // Regular n-gon with interior angle α: cosh(inradius) = cos(α/2)/sin(π/n),
    // cosh(circumradius) = cot(π/n) cot(α/2).
    let inradius = ((0.5 * VERTEX_ANGLE).cos() / (PI / n).sin()).acosh();
    let circumradius = (1.0 / (PI / n).tan() / (0.5 * VERTEX_ANGLE).tan()).acosh();

    let side_directions: [f64; SIDES] = std::array::from_fn(|k| k as f64 * PI / 4.0);
    let side_pairings: [Isometry; SIDES] =
        std::array::from_fn(|k| Isometry::translation_through_i(side_directions[k], 2.0 * inradius));
    let neighbor_centers = side_pairings.map(|s| s.apply(HalfPlanePoint::I));
    let vertices: [HalfPlanePoint; SIDES] = std::array::from_fn(|k| {
        polar_point(HalfPlanePoint::I, circumradius, side_directions[k] + PI / 8.0)
    });

    for k in 0..SIDES {
        let residual = side_pairings[k]
            .compose(&side_pairings[(k + SIDES / 2) % SIDES])
            .distance_to_identity();
        if residual > RELATOR_TOLERANCE {
            return Err(Error::Construction {
                what: "side-pairing inverse",
                residual,
            });
        }
    }
    let relator_residual = RELATOR
        .iter()
        .fold(Isometry::IDENTITY, |acc, &k| acc.compose(&side_pairings[k]))
        .distance_to_identity();
    if relator_residual > RELATOR_TOLERANCE {
        return Err(Error::Construction {
            what: "relator",
            residual: relator_residual,
        });
    }

    let mut group = SurfaceGroup {
        side_pairings,
        side_directions,
        neighbor_centers,
        vertices,
        inradius,
        circumradius,
        relator_residual,
        area: 0.0,
    };
    group.area = group.domain_rule(64, 64).integrate(|_| 1.0);
    let residual = (group.area - HYPERBOLIC_AREA).abs();
    if residual > AREA_TOLERANCE {
        return Err(Error::Construction {
            what: "octagon area",
            residual,
        });
    }
    Ok(group)
}

/// Result of mapping a point into the closed fundamental domain.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub point: HalfPlanePoint,
    /// Side indices `w` with `original = S_{w_1} ⋯ S_{w_n} · point`.
    pub word: Vec<u8>,
    /// The product `S_{w_1} ⋯ S_{w_n}`.
    pub isometry: Isometry,
}

impl SurfaceGroup {
    pub fn base_point(&self) -> HalfPlanePoint {
        HalfPlanePoint::I
    }

    pub fn side_pairings(&self) -> &[Isometry; SIDES] {
        &self.side_pairings
    }

    /// The four generators `S_0 .. S_3`; the remaining pairings are their inverses.
    pub fn generators(&self) -> &[Isometry] {
        &self.side_pairings[..SIDES / 2]
    }

    pub fn side_directions(&self) -> &[f64; SIDES] {
        &self.side_directions
    }

    pub fn vertices(&self) -> &[HalfPlanePoint; SIDES] {
        &self.vertices
    }

    pub fn relator_word(&self) -> [usize; SIDES] {
        RELATOR
    }

    pub fn relator_residual(&self) -> f64 {
        self.relator_residual
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius
    }

    /// Octagon area measured by the polygon quadrature at construction.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Whether `p` lies in the closed Dirichlet domain of the base point.
    pub fn contains(&self, p: HalfPlanePoint) -> bool {
        let own = cosh_distance(p, HalfPlanePoint::I);
        self.neighbor_centers
            .iter()
            .all(|&c| own <= cosh_distance(p, c) * (1.0 + 1e-12))
    }

    /// Greedy descent into the Dirichlet domain: repeatedly move to the neighbouring
    /// tile whose center is closest while that strictly shortens the distance to `i`.
    pub fn reduce_point(&self, p: HalfPlanePoint) -> Result<Reduction> {
        let mut q = p;
        let mut word = Vec::new();
        let mut isometry = Isometry::IDENTITY;
        for _ in 0..REDUCTION_CAP {
            let own = cosh_distance(q, HalfPlanePoint::I);
            let (best, best_cosh) = self
                .neighbor_centers
                .iter()
                .enumerate()
                .map(|(k, &c)| (k, cosh_distance(q, c)))
                .fold((usize::MAX, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            if !(best_cosh < own * (1.0 - 4.0 * f64::EPSILON)) {
                return Ok(Reduction {
                    point: q,
                    word,
                    isometry,
                });
            }
            // q is closer to S_best · i, so S_best⁻¹ q is closer to i.
            q = self.side_pairings[(best + SIDES / 2) % SIDES].apply(q);
            isometry = isometry.compose(&self.side_pairings[best]);
            word.push(best as u8);
        }
        Err(Error::ReductionStalled {
            iterations: REDUCTION_CAP,
        })
    }

    /// Quadrature rule on the octagon: in each of the eight sectors about `i`,
    /// Gauss–Legendre in the angle and in the radius out to the side.
    pub fn domain_rule(&self, angular: usize, radial: usize) -> DomainRule {
        let ga = GaussLegendre::new(angular);
        let gr = GaussLegendre::new(radial);
        let tanh_in = self.inradius.tanh();
        let mut nodes = Vec::with_capacity(SIDES * angular * radial);
        for &psi in &self.side_directions {
            for (phi, wphi) in ga.mapped(psi - PI / 8.0, psi + PI / 8.0) {
                let rho_max = (tanh_in / (phi - psi).cos()).atanh();
                for (rho, wrho) in gr.mapped(0.0, rho_max) {
                    nodes.push((polar_point(HalfPlanePoint::I, rho, phi), wphi * wrho * rho.sinh()));
                }
            }
        }
        DomainRule { nodes }
    }

    pub fn standard_domain_rule(&self) -> DomainRule {
        self.domain_rule(DEFAULT_DOMAIN_ORDER, DEFAULT_DOMAIN_ORDER)
    }

    /// Deterministic low-discrepancy sample of the closed domain: vertices, side
    /// midpoints, then `n` Halton points placed uniformly in area.
    pub fn sample_domain(&self, n: usize) -> Vec<HalfPlanePoint> {
        let mut out: Vec<HalfPlanePoint> = self.vertices.to_vec();
        out.extend(
            self.side_directions
                .iter()
                .map(|&psi| polar_point(HalfPlanePoint::I, self.inradius, psi)),
        );
        let tanh_in = self.inradius.tanh();
        for j in 1..=n {
            let phi = 2.0 * PI * halton(j, 2);
            let sector = ((phi + PI / 8.0) / (PI / 4.0)).floor() as usize % SIDES;
            let rho_max = (tanh_in / (phi - self.side_directions[sector]).cos()).atanh();
            let rho = (1.0 + halton(j, 3) * (rho_max.cosh() - 1.0)).acosh();
            out.push(polar_point(HalfPlanePoint::I, rho, phi));
        }
        out
    }

    /// Half the shortest nontrivial displacement at `c`.
    pub fn injectivity_radius(&self, c: HalfPlanePoint) -> Result<f64> {
        let d = hyp_distance(c, HalfPlanePoint::I);
        let ball = enumerate_group_ball(self, 2.0 * self.inradius + 4.0 * d + 1e-9)?;
        let shortest = ball
            .elements
            .iter()
            .skip(1)
            .map(|e| hyp_distance(c, e.isometry.apply(c)))
            .fold(f64::INFINITY, f64::min);
        Ok(0.5 * shortest)
    }
}

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Weighted nodes on the fundamental domain; weights are hyperbolic area.
#[derive(Clone, Debug)]
pub struct DomainRule {
    nodes: Vec<(HalfPlanePoint, f64)>,
}

impl DomainRule {
    pub fn nodes(&self) -> &[(HalfPlanePoint, f64)] {
        &self.nodes
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(HalfPlanePoint) -> f64 + Sync,
    {
        self.try_integrate(|p| Ok(f(p))).expect("infallible integrand")
    }

    /// Chunked parallel sum, reduced in a fixed order.
    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(HalfPlanePoint) -> Result<f64> + Sync,
    {
        let partial = self
            .nodes
            .par_chunks(1024)
            .map(|chunk| {
                let mut acc = 0.0;
                for &(p, w) in chunk {
                    let v = f(p)?;
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand { at: p, value: v });
                    }
                    acc += w * v;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(partial.iter().sum())
    }
}

#[derive(Clone, Debug)]
pub struct BallElement {
    pub isometry: Isometry,
    /// `d(i, γ i)`.
    pub displacement: f64,
}

#[derive(Clone, Debug)]
pub struct GroupBall {
    pub radius: f64,
    /// Sorted by displacement; the identity comes first.
    pub elements: Vec<BallElement>,
}

impl GroupBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub fn enumerate_group_ball(group: &SurfaceGroup, radius: f64) -> Result<GroupBall> {
    enumerate_group_ball_capped(group, radius, DEFAULT_BALL_CAP)
}

/// Breadth-first search over side-adjacent tiles. A tile is expanded only while its
/// center lies within `radius + circumradius` of `i`: every tile met by the geodesic
/// from `i` to `γ i` satisfies that bound, so no element of the ball is missed.
pub fn enumerate_group_ball_capped(group: &SurfaceGroup, radius: f64, cap: usize) -> Result<GroupBall> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "group ball radius must be nonnegative, got {radius}"
        )));
    }
    let expand_limit = (radius + group.circumradius + 1e-9).cosh();
    let keep_limit = (radius + 1e-12).cosh();
    let mut index = OrbitIndex::default();
    let mut visited = vec![Isometry::IDENTITY];
    index.insert(HalfPlanePoint::I, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let gamma = visited[i];
        for s in &group.side_pairings {
            let next = gamma.compose(s);
            let image = next.apply(HalfPlanePoint::I);
            let c = cosh_distance(image, HalfPlanePoint::I);
            if c > expand_limit || index.find(image).is_some() {
                continue;
            }
            if visited.len() >= cap {
                return Err(Error::BallCapExceeded { radius, cap });
            }
            index.insert(image, visited.len());
            queue.push_back(visited.len());
            visited.push(next);
        }
    }
    let mut elements: Vec<BallElement> = visited
        .into_iter()
        .filter_map(|isometry| {
            let image = isometry.apply(HalfPlanePoint::I);
            (cosh_distance(image, HalfPlanePoint::I) <= keep_limit).then(|| BallElement {
                isometry,
                displacement: hyp_distance(image, HalfPlanePoint::I),
            })
        })
        .collect();
    elements.sort_by(|a, b| {
        let pa = a.isometry.apply(HalfPlanePoint::I);
        let pb = b.isometry.apply(HalfPlanePoint::I);
        a.displacement
            .total_cmp(&b.displacement)
            .then(pa.x.total_cmp(&pb.x))
            .then(pa.y.total_cmp(&pb.y))
    });
    Ok(GroupBall { radius, elements })
}

/// Spatial hash of orbit points in hyperboloid coordinates, where distinct orbit
/// points are far apart.
#[derive(Default)]
struct OrbitIndex {
    cells: HashMap<[i64; 3], Vec<(usize, [f64; 3])>>,
}

impl OrbitIndex {
    fn coords(p: HalfPlanePoint) -> [f64; 3] {
        let r2 = p.x * p.x + p.y * p.y;
        [(r2 + 1.0) / (2.0 * p.y), p.x / p.y, (r2 - 1.0) / (2.0 * p.y)]
    }

    fn cell(c: &[f64; 3]) -> [i64; 3] {
        c.map(|v| v.floor() as i64)
    }

    fn insert(&mut self, p: HalfPlanePoint, id: usize) {
        let c = Self::coords(p);
        self.cells.entry(Self::cell(&c)).or_default().push((id, c));
    }

    fn find(&self, p: HalfPlanePoint) -> Option<usize> {
        let c = Self::coords(p);
        let tol = 1e-7 * c[0].max(1.0);
        let base = Self::cell(&c);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let key = [base[0] + dx, base[1] + dy, base[2] + dz];
                    if let Some(list) = self.cells.get(&key) {
                        for (id, other) in list {
                            if (0..3).all(|k| (other[k] - c[k]).abs() < tol) {
                                return Some(*id);
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// A compactly supported radial bump `amplitude · (1 - (ρ/R)²)⁴`, `ρ` the distance to
/// `center`, `R = support_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: HalfPlanePoint,
    pub amplitude: f64,
    pub support_radius: f64,
}

pub fn bump_profile(rho: f64, support: f64) -> f64 {
    if rho >= support {
        return 0.0;
    }
    let q = 1.0 - (rho / support).powi(2);
    q * q * q * q
}

/// `∫ (1 - (ρ/R)²)⁴ dμ₀` over the hyperbolic plane.
pub fn bump_mass(support: f64) -> f64 {
    // Polynomial times sinh: the Gauss rule is exact to rounding.
    2.0 * PI * GaussLegendre::new(40).integrate(0.0, support, |r| bump_profile(r, support) * r.sinh())
}

/// Distance data of `q` relative to a center, shared by both bump kinds.
struct RadialGeometry {
    rho: f64,
    /// `cosh ρ - 1`
    kappa: f64,
    /// `ρ / sinh ρ`
    rho_over_sinh: f64,
    /// Euclidean chart gradient of `cosh ρ`.
    grad_cosh: (f64, f64),
}

impl RadialGeometry {
    fn new(q: HalfPlanePoint, c: HalfPlanePoint) -> Self {
        let dx = q.x - c.x;
        let dy = q.y - c.y;
        let kappa = (dx * dx + dy * dy) / (2.0 * q.y * c.y);
        let rho = 2.0 * (0.5 * kappa).sqrt().asinh();
        let sinh = (kappa * (kappa + 2.0)).sqrt();
        let rho_over_sinh = if rho < 1e-4 { 1.0 - rho * rho / 6.0 } else { rho / sinh };
        let grad_cosh = (dx / (q.y * c.y), dy / (q.y * c.y) - kappa / q.y);
        Self {
            rho,
            kappa,
            rho_over_sinh,
            grad_cosh,
        }
    }

    fn rho_coth(&self) -> f64 {
        if self.rho < 1e-4 {
            1.0 + self.rho * self.rho / 3.0
        } else {
            self.rho * (1.0 + self.kappa) / (self.kappa * (self.kappa + 2.0)).sqrt()
        }
    }
}

/// Value, Euclidean chart gradient and hyperbolic Laplacian of a scalar at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub gradient: Covector,
    /// `y²(∂xx + ∂yy)`, the Laplace–Beltrami operator of the curvature −1 metric.
    pub laplacian: f64,
}

fn radial_bump_jet(q: HalfPlanePoint, b: &Bump) -> Option<ScalarJet> {
    let g = RadialGeometry::new(q, b.center);
    if g.rho >= b.support_radius {
        return None;
    }
    let r2 = b.support_radius * b.support_radius;
    let qq = 1.0 - g.rho * g.rho / r2;
    let q3 = qq * qq * qq;
    let k = -8.0 * b.amplitude / r2;
    let slope = k * q3 * g.rho_over_sinh;
    Some(ScalarJet {
        value: b.amplitude * q3 * qq,
        gradient: Covector::new(slope * g.grad_cosh.0, slope * g.grad_cosh.1),
        laplacian: k * (q3 - 6.0 * g.rho * g.rho * qq * qq / r2 + g.rho_coth() * q3),
    })
}

/// The rotational 1-form `amplitude · (cosh ρ - 1)(1 - (ρ/R)²)⁴ dφ` about the center,
/// with its density `dβ / μ₀`.
fn rotational_bump_jet(q: HalfPlanePoint, b: &Bump) -> Option<FormJet> {
    let g = RadialGeometry::new(q, b.center);
    if g.rho >= b.support_radius {
        return None;
    }
    let r2 = b.support_radius * b.support_radius;
    let qq = 1.0 - g.rho * g.rho / r2;
    let profile = qq * qq * qq * qq;
    let dprofile = -8.0 * g.rho * qq * qq * qq / r2;
    // (cosh ρ - 1) dφ = Im(i (z̄ - c̄) / (y (z - c̄)) dz).
    let z = q.to_complex();
    let cbar = b.center.to_complex().conj();
    let w = Complex64::i() * (z.conj() - cbar) / ((z - cbar) * q.y);
    let s = b.amplitude * profile;
    let tanh_half = (g.kappa * (g.kappa + 2.0)).sqrt() / (2.0 + g.kappa);
    Some(FormJet {
        covector: Covector::new(s * w.im, s * w.re),
        density: b.amplitude * (profile + tanh_half * dprofile),
    })
}

fn validate_bumps(group: &SurfaceGroup, bumps: &[Bump]) -> Result<()> {
    bumps.iter().try_for_each(|b| validate_bump(group, b))
}

/// Checks that a bump is finite, centered in the closed domain and supported inside
/// an embedded disk.
pub fn validate_bump(group: &SurfaceGroup, b: &Bump) -> Result<()> {
    if !(b.support_radius.is_finite() && b.support_radius > 0.0 && b.amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bump needs finite amplitude and positive support radius, got {b:?}"
        )));
    }
    HalfPlanePoint::new(b.center.x, b.center.y)?;
    if !group.contains(b.center) {
        return Err(Error::CenterOutsideDomain(b.center));
    }
    let injectivity = group.injectivity_radius(b.center)?;
    if b.support_radius >= injectivity {
        return Err(Error::SupportTooLarge {
            center: b.center,
            support: b.support_radius,
            injectivity,
        });
    }
    Ok(())
}

/// All translates `γ b` whose support can meet the closed fundamental domain.
fn translates_near_domain(group: &SurfaceGroup, bumps: &[Bump]) -> Result<Vec<Bump>> {
    let mut out = Vec::new();
    for b in bumps {
        let reach = group.circumradius + b.support_radius + 1e-9;
        let ball = enumerate_group_ball(group, reach + hyp_distance(b.center, HalfPlanePoint::I))?;
        for e in &ball.elements {
            let c = e.isometry.apply(b.center);
            if hyp_distance(c, HalfPlanePoint::I) < reach {
                out.push(Bump { center: c, ..*b });
            }
        }
    }
    Ok(out)
}

/// A Γ-invariant scalar: a constant plus the group-periodized sum of radial bumps.
#[derive(Clone, Debug)]
pub struct InvariantScalar {
    group: Arc<SurfaceGroup>,
    constant: f64,
    bumps: Vec<Bump>,
    translates: Vec<Bump>,
}

impl InvariantScalar {
    pub fn new(group: Arc<SurfaceGroup>, constant: f64, bumps: Vec<Bump>) -> Result<Self> {
        if !constant.is_finite() {
            return Err(Error::InvalidArgument(format!("scalar constant {constant} is not finite")));
        }
        validate_bumps(&group, &bumps)?;
        let translates = translates_near_domain(&group, &bumps)?;
        Ok(Self {
            group,
            constant,
            bumps,
            translates,
        })
    }

    pub fn constant(group: Arc<SurfaceGroup>, constant: f64) -> Self {
        Self {
            group,
            constant,
            bumps: Vec::new(),
            translates: Vec::new(),
        }
    }

    /// The bump sum shifted by a constant so that its surface average is zero.
    pub fn zero_mean(group: Arc<SurfaceGroup>, bumps: Vec<Bump>) -> Result<Self> {
        let total: f64 = bumps.iter().map(|b| b.amplitude * bump_mass(b.support_radius)).sum();
        Self::new(group, -total / HYPERBOLIC_AREA, bumps)
    }

    pub fn group(&self) -> &Arc<SurfaceGroup> {
        &self.group
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    /// Translated bumps meeting the fundamental domain.
    pub fn translates(&self) -> &[Bump] {
        &self.translates
    }

    pub fn is_constant(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    /// Average over the surface against the curvature −1 area.
    pub fn mean(&self) -> f64 {
        self.constant
            + self
                .bumps
                .iter()
                .map(|b| b.amplitude * bump_mass(b.support_radius))
                .sum::<f64>()
                / HYPERBOLIC_AREA
    }

    /// The same scalar with every amplitude and the constant multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let scale = |b: &Bump| Bump {
            amplitude: s * b.amplitude,
            ..*b
        };
        Self {
            group: self.group.clone(),
            constant: s * self.constant,
            bumps: self.bumps.iter().map(scale).collect(),
            translates: self.translates.iter().map(scale).collect(),
        }
    }

    pub fn evaluate(&self, p: HalfPlanePoint) -> Result<ScalarJet> {
        let mut jet = ScalarJet {
            value: self.constant,
            ..ScalarJet::default()
        };
        if self.translates.is_empty() {
            return Ok(jet);
        }
        let red = self.group.reduce_point(p)?;
        let mut grad = Covector::default();
        for b in &self.translates {
            if let Some(j) = radial_bump_jet(red.point, b) {
                jet.value += j.value;
                grad = grad + j.gradient;
                jet.laplacian += j.laplacian;
            }
        }
        jet.gradient = grad.pull_back(red.isometry.inverse().derivative(p));
        Ok(jet)
    }

    pub fn value(&self, p: HalfPlanePoint) -> Result<f64> {
        if self.translates.is_empty() {
            return Ok(self.constant);
        }
        let red = self.group.reduce_point(p)?;
        Ok(self.constant
            + self
                .translates
                .iter()
                .filter_map(|b| radial_bump_jet(red.point, b))
                .map(|j| j.value)
                .sum::<f64>())
    }
}

/// Value of a 1-form at a point together with its density `dβ / μ₀`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FormJet {
    pub covector: Covector,
    pub density: f64,
}

/// A Γ-invariant 1-form: the periodized sum of rotational bumps `A(ρ) dφ`.
#[derive(Clone, Debug)]
pub struct InvariantOneForm {
    group: Arc<SurfaceGroup>,
    bumps: Vec<Bump>,
    translates: Vec<Bump>,
}

impl InvariantOneForm {
    pub fn new(group: Arc<SurfaceGroup>, bumps: Vec<Bump>) -> Result<Self> {
        validate_bumps(&group, &bumps)?;
        let translates = translates_near_domain(&group, &bumps)?;
        Ok(Self {
            group,
            bumps,
            translates,
        })
    }

    pub fn zero(group: Arc<SurfaceGroup>) -> Self {
        Self {
            group,
            bumps: Vec::new(),
            translates: Vec::new(),
        }
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let scale = |b: &Bump| Bump {
            amplitude: s * b.amplitude,
            ..*b
        };
        Self {
            group: self.group.clone(),
            bumps: self.bumps.iter().map(scale).collect(),
            translates: self.translates.iter().map(scale).collect(),
        }
    }

    pub fn evaluate(&self, p: HalfPlanePoint) -> Result<FormJet> {
        if self.translates.is_empty() {
            return Ok(FormJet::default());
        }
        let red = self.group.reduce_point(p)?;
        let mut out = FormJet::default();
        for b in &self.translates {
            if let Some(j) = rotational_bump_jet(red.point, b) {
                out.covector = out.covector + j.covector;
                out.density += j.density;
            }
        }
        out.covector = out.covector.pull_back(red.isometry.inverse().derivative(p));
        Ok(out)
    }

    /// `β_p(v)` for a chart tangent vector `v`.
    pub fn value(&self, p: HalfPlanePoint, v: (f64, f64)) -> Result<f64> {
        Ok(self.evaluate(p)?.covector.apply(v.0, v.1))
    }

    pub fn density(&self, p: HalfPlanePoint) -> Result<f64> {
        Ok(self.evaluate(p)?.density)
    }
}
