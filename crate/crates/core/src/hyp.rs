//! Upper half-plane primitives: points, Möbius isometries, geodesic circles and
//! quadrature over geodesic disks and circles.
//!
//! Geodesic polar coordinates `(rho, phi)` about a center `c` are realized by the
//! isometry `z -> y_c z + x_c` that carries `i` to `c`, composed with the elliptic
//! rotation about `i`. The angle `phi = 0` is the point straight above the center
//! and `phi` increases counterclockwise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{periodic_trapezoid, GaussLegendre};

/// Tolerance on `|ad - bc - 1|`, relative to the squared entry scale.
pub const DET_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    pub x: f64,
    pub y: f64,
}

impl HalfPlanePoint {
    pub const I: HalfPlanePoint = HalfPlanePoint { x: 0.0, y: 1.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half-plane point needs finite x and y > 0, got ({x}, {y})"
            )));
        }
        Ok(Self { x, y })
    }

    pub(crate) fn from_complex(z: Complex64) -> Self {
        Self { x: z.re, y: z.im }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// `cosh` of the hyperbolic distance. Cheap and monotone, so used for comparisons.
pub fn cosh_distance(p: HalfPlanePoint, q: HalfPlanePoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    1.0 + (dx * dx + dy * dy) / (2.0 * p.y * q.y)
}

/// Hyperbolic distance in the upper half-plane.
///
/// Evaluated as `2 asinh(|p - q| / (2 sqrt(y_p y_q)))`, which is the cosh formula
/// rewritten through `cosh d - 1 = 2 sinh^2(d/2)` and stays accurate as `d -> 0`.
pub fn hyp_distance(p: HalfPlanePoint, q: HalfPlanePoint) -> f64 {
    let chord = (p.x - q.x).hypot(p.y - q.y);
    2.0 * (chord / (2.0 * (p.y * q.y).sqrt())).asinh()
}

/// A real unimodular matrix acting by `z -> (az + b) / (cz + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Self { a, b, c, d };
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs()).max(1.0);
        let residual = (m.determinant() - 1.0).abs();
        if !residual.is_finite() || residual > DET_TOLERANCE * scale * scale {
            return Err(Error::DegenerateIsometry { residual });
        }
        Ok(m)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Matrix product `self * other` (apply `other` first), renormalized to unit determinant.
    pub fn compose(&self, other: &Isometry) -> Self {
        let m = Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        };
        let s = m.determinant().sqrt();
        Self {
            a: m.a / s,
            b: m.b / s,
            c: m.c / s,
            d: m.d / s,
        }
    }

    pub fn apply(&self, p: HalfPlanePoint) -> HalfPlanePoint {
        HalfPlanePoint::from_complex(self.apply_complex(p.to_complex()))
    }

    pub(crate) fn apply_complex(&self, z: Complex64) -> Complex64 {
        let num = z * self.a + self.b;
        let den = z * self.c + self.d;
        let q = num / den;
        // Keep the imaginary part exact for the y > 0 invariant: Im = Im z / |cz + d|^2.
        Complex64::new(q.re, z.im / den.norm_sqr())
    }

    /// Complex derivative `1 / (cz + d)^2` of the Möbius map at `p`.
    pub fn derivative(&self, p: HalfPlanePoint) -> Complex64 {
        let den = p.to_complex() * self.c + self.d;
        (den * den).inv()
    }

    /// Chart angle of the pushed-forward direction `theta` at `p`.
    pub fn push_direction(&self, p: HalfPlanePoint, theta: f64) -> f64 {
        theta + self.derivative(p).arg()
    }

    /// Max-entry distance to `±I`.
    pub fn distance_to_identity(&self) -> f64 {
        let plus = (self.a - 1.0)
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max((self.d - 1.0).abs());
        let minus = (self.a + 1.0)
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max((self.d + 1.0).abs());
        plus.min(minus)
    }

    /// Elliptic rotation about `i` by `phi` (counterclockwise).
    pub fn rotation_about_i(phi: f64) -> Self {
        let (s, c) = (0.5 * phi).sin_cos();
        Self { a: c, b: s, c: -s, d: c }
    }

    /// Hyperbolic translation by `distance` along the geodesic through `i` leaving in
    /// polar direction `phi`.
    pub fn translation_through_i(phi: f64, distance: f64) -> Self {
        let r = Self::rotation_about_i(phi);
        let t = Self {
            a: (0.5 * distance).exp(),
            b: 0.0,
            c: 0.0,
            d: (-0.5 * distance).exp(),
        };
        r.compose(&t).compose(&r.inverse())
    }

    /// `z -> y_c z + x_c`, carrying `i` to `c` without rotating chart directions.
    pub fn carry_i_to(c: HalfPlanePoint) -> Self {
        let s = c.y.sqrt();
        Self {
            a: s,
            b: c.x / s,
            c: 0.0,
            d: 1.0 / s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCircle {
    pub center: HalfPlanePoint,
    pub radius: f64,
}

impl GeodesicCircle {
    pub fn new(center: HalfPlanePoint, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.radius.sinh()
    }

    pub fn area(&self) -> f64 {
        2.0 * PI * (self.radius.cosh() - 1.0)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    Ok(())
}

/// Length `2π sinh r` of a geodesic circle of radius `r`.
pub fn circle_length(r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(2.0 * PI * r.sinh())
}

/// Area `2π (cosh r - 1)` of a geodesic disk of radius `r`.
pub fn disk_area(r: f64) -> Result<f64> {
    check_radius(r)?;
    // 4π sinh²(r/2) avoids cancellation for small r.
    let s = (0.5 * r).sinh();
    Ok(4.0 * PI * s * s)
}

/// Point at geodesic polar coordinates `(rho, phi)` about `i`.
fn polar_about_i(rho: f64, phi: f64) -> Complex64 {
    Isometry::rotation_about_i(phi).apply_complex(Complex64::new(0.0, rho.exp()))
}

/// Point at geodesic polar coordinates `(rho, phi)` about `center`.
pub fn polar_point(center: HalfPlanePoint, rho: f64, phi: f64) -> HalfPlanePoint {
    let z = polar_about_i(rho, phi);
    HalfPlanePoint::from_complex(z * center.y + center.x)
}

/// Endpoint of the unit-speed geodesic from `p` with chart direction `theta` after `distance`.
pub fn geodesic_point(p: HalfPlanePoint, theta: f64, distance: f64) -> HalfPlanePoint {
    polar_point(p, distance, theta - 0.5 * PI)
}

/// Point reached after g₀-arclength `t` along the counterclockwise circle starting
/// straight above its center.
pub fn circle_point(c: &GeodesicCircle, t: f64) -> HalfPlanePoint {
    polar_point(c.center, c.radius, t / c.radius.sinh())
}

/// Point and `d/dphi` of the polar parametrization at `(rho, phi)` about `center`.
fn polar_point_with_tangent(center: HalfPlanePoint, rho: f64, phi: f64) -> (HalfPlanePoint, Complex64) {
    let zeta = polar_about_i(rho, phi);
    // Rotations about i are the flow of the Killing field (1 + ζ²)/2.
    let tangent = (zeta * zeta + 1.0) * (0.5 * center.y);
    (HalfPlanePoint::from_complex(zeta * center.y + center.x), tangent)
}

fn angular_nodes(order: usize, rho: f64) -> usize {
    let m = ((order as f64) * rho.sinh()).ceil() as usize;
    let m = m.max(order).max(4);
    m + (m % 2)
}

fn check_finite(at: HalfPlanePoint, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteIntegrand { at, value })
    }
}

/// Integral of `f` over the geodesic disk `c` against hyperbolic area.
///
/// Gauss–Legendre in the radius (`order` nodes) and a periodic trapezoid rule in
/// the angle whose node count grows with the ring circumference.
pub fn disk_quadrature<F>(c: &GeodesicCircle, f: F, order: usize) -> Result<f64>
where
    F: Fn(HalfPlanePoint) -> f64 + Sync,
{
    try_disk_quadrature(c, |p| Ok(f(p)), order)
}

/// Fallible-integrand variant of [`disk_quadrature`].
pub fn try_disk_quadrature<F>(c: &GeodesicCircle, f: F, order: usize) -> Result<f64>
where
    F: Fn(HalfPlanePoint) -> Result<f64> + Sync,
{
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be positive".into()));
    }
    let rule = GaussLegendre::new(order);
    let radial: Vec<(f64, f64)> = rule.mapped(0.0, c.radius).collect();
    let rings = radial
        .par_iter()
        .map(|&(rho, w)| {
            let m = angular_nodes(order, rho);
            let mut ring = 0.0;
            for (phi, wphi) in periodic_trapezoid(m) {
                let p = polar_point(c.center, rho, phi);
                ring += wphi * check_finite(p, f(p)?)?;
            }
            Ok(w * rho.sinh() * ring)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rings.iter().sum())
}

/// A 1-form `dx_coeff dx + dy_coeff dy` in half-plane chart coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    pub dx: f64,
    pub dy: f64,
}

impl Covector {
    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn apply(&self, vx: f64, vy: f64) -> f64 {
        self.dx * vx + self.dy * vy
    }

    /// Pull back through a holomorphic chart change with complex derivative `m`.
    pub(crate) fn pull_back(&self, m: Complex64) -> Self {
        let w = Complex64::new(self.dx, -self.dy) * m;
        Self { dx: w.re, dy: -w.im }
    }
}

impl std::ops::Add for Covector {
    type Output = Covector;
    fn add(self, rhs: Covector) -> Covector {
        Covector::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl std::ops::Mul<f64> for Covector {
    type Output = Covector;
    fn mul(self, s: f64) -> Covector {
        Covector::new(self.dx * s, self.dy * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Counterclockwise, the boundary orientation of the disk.
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// Line integral of a 1-form around the circle `c`.
pub fn circle_quadrature<F>(
    c: &GeodesicCircle,
    form: F,
    order: usize,
    orientation: Orientation,
) -> Result<f64>
where
    F: Fn(HalfPlanePoint) -> Covector + Sync,
{
    try_circle_quadrature(c, |p| Ok(form(p)), order, orientation)
}

pub fn try_circle_quadrature<F>(
    c: &GeodesicCircle,
    form: F,
    order: usize,
    orientation: Orientation,
) -> Result<f64>
where
    F: Fn(HalfPlanePoint) -> Result<Covector> + Sync,
{
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be positive".into()));
    }
    let m = angular_nodes(order, c.radius);
    let total = try_circle_sum(c, m, |p, tangent| {
        let value = form(p)?.apply(tangent.re, tangent.im);
        check_finite(p, value)
    })?;
    Ok(orientation.sign() * total)
}

/// Trapezoid sum over `m` equally spaced polar angles of `g(point, dz/dphi)`, times `2π/m`.
pub(crate) fn try_circle_sum<G>(c: &GeodesicCircle, m: usize, g: G) -> Result<f64>
where
    G: Fn(HalfPlanePoint, Complex64) -> Result<f64> + Sync,
{
    Ok(try_circle_sums(c, m, |p, t| Ok([g(p, t)?]))?[0])
}

/// Several trapezoid sums sharing the same nodes. Chunks run in parallel and are
/// summed in a fixed order.
pub(crate) fn try_circle_sums<const N: usize, G>(c: &GeodesicCircle, m: usize, g: G) -> Result<[f64; N]>
where
    G: Fn(HalfPlanePoint, Complex64) -> Result<[f64; N]> + Sync,
{
    const CHUNK: usize = 4096;
    let h = 2.0 * PI / m as f64;
    let chunks = m.div_ceil(CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut acc = [0.0; N];
            for j in (k * CHUNK)..((k + 1) * CHUNK).min(m) {
                let (p, tangent) = polar_point_with_tangent(c.center, c.radius, h * j as f64);
                for (a, v) in acc.iter_mut().zip(g(p, tangent)?) {
                    *a += v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<[f64; N]>>>()?;
    Ok(std::array::from_fn(|i| h * partial.iter().map(|p| p[i]).sum::<f64>()))
}
