//! Real orthonormal spherical harmonics on S^1 and S^2, band-limited
//! expansion and reconstruction of functions f(z, theta) on a surface of
//! revolution, and the associated Plancherel bookkeeping.
//!
//! Conventions:
//! - circle (n = 2): `{1/sqrt(2 pi), cos(k t)/sqrt(pi), sin(k t)/sqrt(pi)}`,
//!   members j = 1 (cos) and j = 2 (sin) for k >= 1;
//! - sphere (n = 3): real orthonormal harmonics indexed j = 1..2k+1 with
//!   m = j - 1 - k (m < 0 are the sine members).

use crate::quadrature::{gauss_legendre, simpson_uniform, trapezoid_weight};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Index of one basis element: degree `k`, member `j in [1, d(k)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HarmonicIndex {
    pub degree: usize,
    pub member: usize,
}

impl HarmonicIndex {
    pub fn new(degree: usize, member: usize) -> Self {
        HarmonicIndex { degree, member }
    }
}

/// Number of degree-k harmonics: 1 or 2 on the circle, 2k+1 on the sphere.
pub fn dimension(n: usize, k: usize) -> usize {
    match n {
        2 => {
            if k == 0 {
                1
            } else {
                2
            }
        }
        3 => 2 * k + 1,
        _ => 0,
    }
}

/// A point on S^{n-1}.
#[derive(Debug, Clone, Copy)]
pub enum AngularPoint {
    /// angle on the circle
    Circle(f64),
    /// polar (from the pole) and azimuthal angles on the 2-sphere
    Sphere { polar: f64, azimuth: f64 },
}

/// Evaluate the real orthonormal harmonic `Y_k^j` at a point.
pub fn sph_harmonic_eval(n: usize, idx: HarmonicIndex, point: &AngularPoint) -> Result<f64> {
    let k = idx.degree;
    let j = idx.member;
    if j == 0 || j > dimension(n, k) {
        return Err(Error::InvalidIndex(format!(
            "member {j} invalid for degree {k} on S^{}",
            n - 1
        )));
    }
    match (n, point) {
        (2, AngularPoint::Circle(theta)) => Ok(circle_harmonic(k, j, *theta)),
        (3, AngularPoint::Sphere { polar, azimuth }) => {
            let m = j as isize - 1 - k as isize;
            Ok(real_sphere_harmonic(k, m, *polar, *azimuth))
        }
        _ => Err(Error::InvalidIndex(format!(
            "point type does not match sphere parameter n={n}"
        ))),
    }
}

fn circle_harmonic(k: usize, j: usize, theta: f64) -> f64 {
    if k == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else if j == 1 {
        (k as f64 * theta).cos() / PI.sqrt()
    } else {
        (k as f64 * theta).sin() / PI.sqrt()
    }
}

/// Fully normalized associated Legendre values at cos(polar):
/// p[k][m] = sqrt((2k+1)/(4 pi) (k-m)!/(k+m)!) P_k^m(x) for 0 <= m <= k.
///
/// Standard stable recurrence on the normalized functions.
fn normalized_assoc_legendre(k_max: usize, x: f64) -> Vec<Vec<f64>> {
    let mut p = vec![Vec::new(); k_max + 1];
    for (k, row) in p.iter_mut().enumerate() {
        row.resize(k + 1, 0.0);
    }
    let somx2 = (1.0 - x * x).max(0.0).sqrt();
    p[0][0] = (1.0 / (4.0 * PI)).sqrt();
    if k_max == 0 {
        return p;
    }
    for m in 1..=k_max {
        let mf = m as f64;
        let diag = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * somx2 * p[m - 1][m - 1];
        p[m][m] = diag;
    }
    for m in 0..k_max {
        let mf = m as f64;
        p[m + 1][m] = (2.0 * mf + 3.0).sqrt() * x * p[m][m];
    }
    for m in 0..=k_max {
        for k in (m + 2)..=k_max {
            let kf = k as f64;
            let mf = m as f64;
            let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
            let b = (((kf - 1.0) * (kf - 1.0) - mf * mf)
                / (4.0 * (kf - 1.0) * (kf - 1.0) - 1.0))
                .sqrt();
            p[k][m] = a * (x * p[k - 1][m] - b * p[k - 2][m]);
        }
    }
    p
}

fn real_sphere_harmonic(k: usize, m: isize, polar: f64, azimuth: f64) -> f64 {
    let table = normalized_assoc_legendre(k, polar.cos());
    let ma = m.unsigned_abs();
    let base = table[k][ma];
    if m == 0 {
        base
    } else if m > 0 {
        std::f64::consts::SQRT_2 * base * (ma as f64 * azimuth).cos()
    } else {
        std::f64::consts::SQRT_2 * base * (ma as f64 * azimuth).sin()
    }
}

/// Uniform z-grid: `count` samples including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ZGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub count: usize,
}

impl ZGrid {
    pub fn new(z_min: f64, z_max: f64, count: usize) -> Result<Self> {
        if !(z_max > z_min) || count < 8 || !count.is_power_of_two() {
            return Err(Error::Config(format!(
                "z-grid needs z_max > z_min and a power-of-two count >= 8, got [{z_min}, {z_max}] x {count}"
            )));
        }
        Ok(ZGrid { z_min, z_max, count })
    }

    pub fn spacing(&self) -> f64 {
        (self.z_max - self.z_min) / (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.node(i))
    }
}

/// Angular quadrature exact for products of harmonics up to degree K_max.
#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    pub n: usize,
    pub points: Vec<AngularPoint>,
    pub weights: Vec<f64>,
}

impl AngularQuadrature {
    /// Trapezoid on the circle (exact for trig degree < node count) or a
    /// Gauss x trapezoid product rule on the sphere.
    pub fn for_degree(n: usize, k_max: usize) -> Result<Self> {
        match n {
            2 => {
                let count = (4 * k_max.max(1)).max(8);
                let w = 2.0 * PI / count as f64;
                let points = (0..count)
                    .map(|i| AngularPoint::Circle(2.0 * PI * i as f64 / count as f64))
                    .collect();
                Ok(AngularQuadrature {
                    n,
                    points,
                    weights: vec![w; count],
                })
            }
            3 => {
                let n_gl = k_max + 2;
                let n_phi = (2 * k_max + 2).max(8);
                let gl = gauss_legendre(n_gl);
                let wphi = 2.0 * PI / n_phi as f64;
                let mut points = Vec::with_capacity(n_gl * n_phi);
                let mut weights = Vec::with_capacity(n_gl * n_phi);
                for &(x, w) in &gl {
                    let polar = x.acos();
                    for i in 0..n_phi {
                        points.push(AngularPoint::Sphere {
                            polar,
                            azimuth: 2.0 * PI * i as f64 / n_phi as f64,
                        });
                        weights.push(w * wphi);
                    }
                }
                Ok(AngularQuadrature { n, points, weights })
            }
            _ => Err(Error::Config(format!("unsupported sphere parameter n={n}"))),
        }
    }
}

/// Band-limited coefficient field a_{k,j}(z) on a shared z-grid.
#[derive(Debug, Clone)]
pub struct SphericalCoefficientField {
    pub n: usize,
    pub k_max: usize,
    pub z_grid: ZGrid,
    pub entries: BTreeMap<HarmonicIndex, Vec<f64>>,
}

impl SphericalCoefficientField {
    pub fn zero(n: usize, k_max: usize, z_grid: ZGrid) -> Self {
        SphericalCoefficientField {
            n,
            k_max,
            z_grid,
            entries: BTreeMap::new(),
        }
    }

    pub fn indices(n: usize, k_max: usize) -> Vec<HarmonicIndex> {
        let mut out = Vec::new();
        for k in 0..=k_max {
            for j in 1..=dimension(n, k) {
                out.push(HarmonicIndex::new(k, j));
            }
        }
        out
    }

    pub fn set(&mut self, idx: HarmonicIndex, profile: Vec<f64>) -> Result<()> {
        if profile.len() != self.z_grid.count {
            return Err(Error::GridMismatch(format!(
                "profile length {} vs z-grid count {}",
                profile.len(),
                self.z_grid.count
            )));
        }
        if idx.degree > self.k_max || idx.member == 0 || idx.member > dimension(self.n, idx.degree)
        {
            return Err(Error::InvalidIndex(format!("{idx:?} out of band")));
        }
        self.entries.insert(idx, profile);
        Ok(())
    }

    pub fn profile(&self, idx: &HarmonicIndex) -> Option<&[f64]> {
        self.entries.get(idx).map(|v| v.as_slice())
    }

    /// sum over harmonics of |a_{k,j}(z_i)|^2
    pub fn square_sum_at(&self, i: usize) -> f64 {
        self.entries.values().map(|p| p[i] * p[i]).sum()
    }

    /// Columnar CSV rows: k, j, z_index, value.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for (idx, profile) in &self.entries {
            for (i, v) in profile.iter().enumerate() {
                rows.push(format!("{},{},{},{:.12e}", idx.degree, idx.member, i, v));
            }
        }
        rows
    }
}

/// Project sampled data onto the harmonic basis: a_{k,j}(z_i) =
/// integral of f(z_i, .) Y_k^j over the sphere, by the given quadrature.
pub fn expand(
    f: &dyn Fn(f64, &AngularPoint) -> f64,
    n: usize,
    k_max: usize,
    z_grid: &ZGrid,
    quad: &AngularQuadrature,
) -> Result<SphericalCoefficientField> {
    if quad.n != n {
        return Err(Error::Config("quadrature/sphere mismatch".into()));
    }
    let min_nodes = match n {
        2 => 2 * k_max + 1,
        _ => (k_max + 1) * (2 * k_max + 1),
    };
    if quad.points.len() < min_nodes {
        return Err(Error::Resolution(format!(
            "angular quadrature has {} nodes, need at least {min_nodes} for K_max={k_max}",
            quad.points.len()
        )));
    }
    let mut field = SphericalCoefficientField::zero(n, k_max, z_grid.clone());
    let indices = SphericalCoefficientField::indices(n, k_max);
    let mut basis = vec![vec![0.0; quad.points.len()]; indices.len()];
    for (bi, idx) in indices.iter().enumerate() {
        for (qi, pt) in quad.points.iter().enumerate() {
            basis[bi][qi] = sph_harmonic_eval(n, *idx, pt)?;
        }
    }
    let samples: Vec<Vec<f64>> = z_grid
        .nodes()
        .map(|z| quad.points.iter().map(|pt| f(z, pt)).collect())
        .collect();
    for (bi, idx) in indices.iter().enumerate() {
        let mut profile = vec![0.0; z_grid.count];
        for (zi, row) in samples.iter().enumerate() {
            let mut acc = 0.0;
            for (qi, &v) in row.iter().enumerate() {
                acc += quad.weights[qi] * v * basis[bi][qi];
            }
            profile[zi] = acc;
        }
        field.set(*idx, profile)?;
    }
    Ok(field)
}

/// Evaluate the field back at one (z-node, angular point).
pub fn reconstruct(
    field: &SphericalCoefficientField,
    z_index: usize,
    point: &AngularPoint,
) -> Result<f64> {
    let mut acc = 0.0;
    for (idx, profile) in &field.entries {
        acc += profile[z_index] * sph_harmonic_eval(field.n, *idx, point)?;
    }
    Ok(acc)
}

/// `int_Gamma |f|^2 = sum_{k,j} int |a_{k,j}(z)|^2 G_1(z) dz` by composite
/// Simpson on the shared z-grid.
pub fn plancherel_l2_on_gamma(
    field: &SphericalCoefficientField,
    g1: &[f64],
    z_grid: &ZGrid,
) -> Result<f64> {
    if g1.len() != z_grid.count || field.z_grid != *z_grid {
        return Err(Error::GridMismatch(
            "coefficient field and surface factors must share the z-grid".into(),
        ));
    }
    let h = z_grid.spacing();
    let mut total = 0.0;
    for profile in field.entries.values() {
        let integrand: Vec<f64> = profile.iter().zip(g1).map(|(a, g)| a * a * g).collect();
        total += simpson_uniform(&integrand, h);
    }
    Ok(total)
}

/// Trapezoid weight against the z-grid (1/2 at the ends).
pub fn z_weight(i: usize, grid: &ZGrid) -> f64 {
    trapezoid_weight(i, grid.count)
}
