//! Compact surfaces of revolution: measure factors, the extension
//! operator (Fourier transform of `f dGamma`), restriction/extension
//! quotients, dyadic-block diagnostics, and turning-point regime splits.
//!
//! A surface in R^{n+1} is the graph `(g(z) theta, z)` over a compact
//! z-interval. In cylindrical coordinates the transform of `f dGamma`
//! separates over spherical harmonics: each channel is
//!
//! `(2 pi)^{n/2} (-i)^k  rho^{-(n-2)/2} int G2(z) a_{k,j}(z)
//!      J_{k+(n-2)/2}(rho g(z)) e^{-i z zeta} dz`,
//!
//! with `G2 = g^{n/2} sqrt(1+g'^2)`. Channel values are stored without
//! the constant `(2 pi)^{n/2} (-i)^k`; norms reinstate the `(2 pi)^n`
//! modulus factor and phases never enter square sums.

use crate::bessel::j_nu;
use crate::grids::{mixed_norm_p2_sampled, DyadicGrid, MixedNorm};
use crate::quadrature::{integrate_panels, simpson_uniform};
use crate::spherical::{
    plancherel_l2_on_gamma, sph_harmonic_eval, AngularPoint, HarmonicIndex,
    SphericalCoefficientField, ZGrid,
};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Sampled profile g >= 0 with derivative on a uniform z-grid.
#[derive(Debug, Clone)]
pub struct ProfileFunction {
    pub z_grid: ZGrid,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    pub sup_a: f64,
    pub sup_b: f64,
}

impl ProfileFunction {
    pub fn from_closures(
        z_grid: ZGrid,
        g: impl Fn(f64) -> f64,
        g_prime: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let gs: Vec<f64> = z_grid.nodes().map(&g).collect();
        let gps: Vec<f64> = z_grid.nodes().map(&g_prime).collect();
        Self::from_samples(z_grid, gs, gps)
    }

    /// Derivative by central differences when no analytic form is at hand.
    pub fn from_samples_numeric_derivative(z_grid: ZGrid, g: Vec<f64>) -> Result<Self> {
        let h = z_grid.spacing();
        let n = g.len();
        if n != z_grid.count {
            return Err(Error::GridMismatch("profile samples vs z-grid".into()));
        }
        let mut gp = vec![0.0; n];
        for i in 0..n {
            gp[i] = if i == 0 {
                (g[1] - g[0]) / h
            } else if i + 1 == n {
                (g[n - 1] - g[n - 2]) / h
            } else {
                (g[i + 1] - g[i - 1]) / (2.0 * h)
            };
        }
        Self::from_samples(z_grid, g, gp)
    }

    pub fn from_samples(z_grid: ZGrid, g: Vec<f64>, g_prime: Vec<f64>) -> Result<Self> {
        if g.len() != z_grid.count || g_prime.len() != z_grid.count {
            return Err(Error::GridMismatch("profile samples vs z-grid".into()));
        }
        if let Some(bad) = g.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain(format!("profile must satisfy g >= 0, got {bad}")));
        }
        let sup_a = g.iter().cloned().fold(0.0, f64::max);
        let sup_b = g_prime.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !sup_b.is_finite() {
            return Err(Error::Domain("profile derivative must be bounded".into()));
        }
        Ok(ProfileFunction {
            z_grid,
            g,
            g_prime,
            sup_a,
            sup_b,
        })
    }

    /// g == 1 on [0, 1].
    pub fn cylinder(count: usize) -> Result<Self> {
        let grid = ZGrid::new(0.0, 1.0, count)?;
        Self::from_closures(grid, |_| 1.0, |_| 0.0)
    }

    /// g(z) = z on [1, 2].
    pub fn cone(count: usize) -> Result<Self> {
        let grid = ZGrid::new(1.0, 2.0, count)?;
        Self::from_closures(grid, |z| z, |_| 1.0)
    }

    /// g(z) = 1 + z(1-z) on [0, 1].
    pub fn bump(count: usize) -> Result<Self> {
        let grid = ZGrid::new(0.0, 1.0, count)?;
        Self::from_closures(grid, |z| 1.0 + z * (1.0 - z), |z| 1.0 - 2.0 * z)
    }

    /// Sphere with the poles cut off: g(z) = sqrt(1-z^2) on [-0.9, 0.9],
    /// keeping sup |g'| finite.
    pub fn truncated_sphere(count: usize) -> Result<Self> {
        let grid = ZGrid::new(-0.9, 0.9, count)?;
        Self::from_closures(
            grid,
            |z| (1.0 - z * z).sqrt(),
            |z| -z / (1.0 - z * z).sqrt(),
        )
    }
}

/// Profile together with the area factors `G1 = g^{n-1} sqrt(1+g'^2)` and
/// `G2 = g^{n/2} sqrt(1+g'^2)`.
#[derive(Debug, Clone)]
pub struct SurfaceOfRevolution {
    pub n: usize,
    pub profile: ProfileFunction,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

/// Compute the surface measure factors for the ambient sphere parameter n.
pub fn surface_measure_factors(profile: ProfileFunction, n: usize) -> Result<SurfaceOfRevolution> {
    if !(2..=3).contains(&n) {
        return Err(Error::Config(format!(
            "sphere parameter n must be 2 or 3, got {n}"
        )));
    }
    let nf = n as f64;
    let g1 = profile
        .g
        .iter()
        .zip(&profile.g_prime)
        .map(|(&g, &gp)| g.powf(nf - 1.0) * (1.0 + gp * gp).sqrt())
        .collect();
    let g2 = profile
        .g
        .iter()
        .zip(&profile.g_prime)
        .map(|(&g, &gp)| g.powf(0.5 * nf) * (1.0 + gp * gp).sqrt())
        .collect();
    Ok(SurfaceOfRevolution { n, profile, g1, g2 })
}

impl SurfaceOfRevolution {
    pub fn z_grid(&self) -> &ZGrid {
        &self.profile.z_grid
    }

    /// Bessel order attached to degree k: `k + (n-2)/2`.
    pub fn order(&self, k: usize) -> f64 {
        k as f64 + 0.5 * (self.n as f64 - 2.0)
    }
}

/// Transform samples of one coefficient field on a radial grid x DFT
/// zeta bins.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub n: usize,
    /// flattened (node, weight) pairs of the radial grid used
    pub rho_nodes: Vec<(f64, f64)>,
    /// zeta bin spacing 2 pi / (len * dz)
    pub zeta_delta: f64,
    /// padded DFT length; bins 0..len carry signed frequencies
    pub zeta_len: usize,
    /// per harmonic: values[rho_index][dft_index]
    pub harmonics: Vec<(HarmonicIndex, Vec<Vec<Complex64>>)>,
}

impl ExtensionField {
    /// Signed frequency of DFT bin l.
    pub fn zeta_at(&self, l: usize) -> f64 {
        let ls = if l < self.zeta_len / 2 {
            l as isize
        } else {
            l as isize - self.zeta_len as isize
        };
        ls as f64 * self.zeta_delta
    }

    /// `int int |f-hat|^2 dtheta dzeta` at one radial node, including the
    /// `(2 pi)^n` constant from the dropped channel factors.
    pub fn inner_l2_sq(&self, rho_index: usize) -> f64 {
        let mut acc = 0.0;
        for (_, rows) in &self.harmonics {
            for v in &rows[rho_index] {
                acc += v.norm_sqr();
            }
        }
        acc * self.zeta_delta * (2.0 * PI).powi(self.n as i32)
    }

    /// L^{q,2,2} norm of the extension over the radial grid it was
    /// computed on. The radial measure is `rho^{n-1} drho`, inherited from
    /// the R^n factor of the cylindrical coordinates on R^{n+1}.
    pub fn norm_q22(&self, grid: &DyadicGrid, q: f64) -> Result<MixedNorm> {
        let sq: Vec<f64> = (0..self.rho_nodes.len())
            .into_par_iter()
            .map(|i| self.inner_l2_sq(i))
            .collect();
        mixed_norm_p2_sampled(&sq, grid, q, self.n)
    }
}

/// Compute the extension transform on `grid x (padded zeta bins)`.
///
/// `pad_factor >= 1` zero-pads the z-signal to refine the zeta sampling;
/// the zeta Nyquist range is fixed by the z spacing.
pub fn extend(
    field: &SphericalCoefficientField,
    surface: &SurfaceOfRevolution,
    grid: &DyadicGrid,
    pad_factor: usize,
) -> Result<ExtensionField> {
    if field.z_grid != *surface.z_grid() {
        return Err(Error::GridMismatch("field and surface z-grids differ".into()));
    }
    if field.n != surface.n {
        return Err(Error::Config(
            "field and surface sphere parameters differ".into(),
        ));
    }
    if pad_factor == 0 {
        return Err(Error::Resolution(
            "pad_factor must be >= 1; zeta resolution beyond Nyquist".into(),
        ));
    }
    let zg = surface.z_grid();
    let nz = zg.count;
    let len = nz * pad_factor;
    let dz = zg.spacing();
    let zeta_delta = 2.0 * PI / (len as f64 * dz);
    let rho_nodes: Vec<(f64, f64)> = grid.nodes().collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);

    let np = 0.5 * (surface.n as f64 - 2.0);
    let mut harmonics = Vec::new();
    for (idx, profile) in &field.entries {
        let nu = surface.order(idx.degree);
        let rows: Vec<Vec<Complex64>> = rho_nodes
            .par_iter()
            .map(|&(rho, _)| {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for m in 0..nz {
                    let w = crate::spherical::z_weight(m, zg);
                    let val =
                        w * dz * surface.g2[m] * profile[m] * j_nu(nu, rho * surface.profile.g[m]);
                    buf[m] = Complex64::new(val, 0.0);
                }
                fft.process(&mut buf);
                let pref = rho.powf(-np);
                for (l, v) in buf.iter_mut().enumerate() {
                    let ls = if l < len / 2 {
                        l as isize
                    } else {
                        l as isize - len as isize
                    };
                    let zeta = ls as f64 * zeta_delta;
                    let phase = Complex64::new(0.0, -zg.z_min * zeta).exp();
                    *v *= pref * phase;
                }
                buf
            })
            .collect();
        harmonics.push((*idx, rows));
    }
    Ok(ExtensionField {
        n: surface.n,
        rho_nodes,
        zeta_delta,
        zeta_len: len,
        harmonics,
    })
}

/// Direct evaluation of one channel integral at arbitrary (rho, zeta) by
/// trapezoid on the shared z-grid with an explicit phase factor. Matches
/// the DFT path at bin frequencies; used by oracles and point probes.
pub fn extend_channel_at(
    field: &SphericalCoefficientField,
    surface: &SurfaceOfRevolution,
    idx: &HarmonicIndex,
    rho: f64,
    zeta: f64,
) -> Result<Complex64> {
    let profile = field
        .profile(idx)
        .ok_or_else(|| Error::InvalidIndex(format!("{idx:?} not present")))?;
    let zg = surface.z_grid();
    let dz = zg.spacing();
    let nu = surface.order(idx.degree);
    let np = 0.5 * (surface.n as f64 - 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, z) in zg.nodes().enumerate() {
        let w = crate::spherical::z_weight(m, zg);
        let val = w * dz * surface.g2[m] * profile[m] * j_nu(nu, rho * surface.profile.g[m]);
        acc += Complex64::new(0.0, -z * zeta).exp() * val;
    }
    Ok(acc * rho.powf(-np))
}

/// Full transform value at a cylindrical point, including the
/// `(2 pi)^{n/2} (-i)^k` channel constants.
pub fn extension_value_at(
    field: &SphericalCoefficientField,
    surface: &SurfaceOfRevolution,
    rho: f64,
    angle: &AngularPoint,
    zeta: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let c0 = (2.0 * PI).powf(0.5 * surface.n as f64);
    for idx in field.entries.keys() {
        let chan = extend_channel_at(field, surface, idx, rho, zeta)?;
        let y = sph_harmonic_eval(surface.n, *idx, angle)?;
        let minus_i_k = Complex64::new(0.0, -1.0).powu(idx.degree as u32);
        acc += chan * y * minus_i_k * c0;
    }
    Ok(acc)
}

/// Report for the extension/restriction quotient.
#[derive(Debug, Clone)]
pub struct QuotientReport {
    pub numerator: MixedNorm,
    pub denominator: f64,
    pub quotient: f64,
}

/// `|| (f dGamma)-hat ||_{q,2,2} / ||f||_{L^2(Gamma)}`.
pub fn extension_quotient(
    field: &SphericalCoefficientField,
    surface: &SurfaceOfRevolution,
    grid: &DyadicGrid,
    q: f64,
    pad_factor: usize,
) -> Result<QuotientReport> {
    if q <= 2.0 {
        return Err(Error::Domain(format!("need q > 2, got {q}")));
    }
    let l2 = plancherel_l2_on_gamma(field, &surface.g1, surface.z_grid())?;
    if l2 <= 0.0 {
        return Err(Error::Domain("zero field: quotient undefined".into()));
    }
    let ext = extend(field, surface, grid, pad_factor)?;
    let numerator = ext.norm_q22(grid, q)?;
    let quotient = numerator.value / l2.sqrt();
    Ok(QuotientReport {
        numerator,
        denominator: l2.sqrt(),
        quotient,
    })
}

/// Family of squared weights |b_j(z)|^2 with Bessel orders nu_j.
#[derive(Debug, Clone)]
pub struct BesselWeightedFamily {
    pub orders: Vec<f64>,
    /// |b_j|^2 sampled on the z-grid
    pub profiles_sq: Vec<Vec<f64>>,
}

impl BesselWeightedFamily {
    pub fn new(orders: Vec<f64>, profiles_sq: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        if orders.len() != profiles_sq.len() {
            return Err(Error::Config("orders vs profiles length mismatch".into()));
        }
        let floor = 0.5 * (n as f64 - 2.0);
        if let Some(bad) = orders.iter().find(|v| **v < floor) {
            return Err(Error::Domain(format!(
                "orders must satisfy nu >= (n-2)/2 = {floor}, got {bad}"
            )));
        }
        Ok(BesselWeightedFamily {
            orders,
            profiles_sq,
        })
    }

    /// Orders spread uniformly over [M/2, 4M] with unit indicator weights,
    /// the stress family for the dyadic block estimates.
    pub fn spread_for_block(m: u32, count: usize, z_count: usize, n: usize) -> Result<Self> {
        let mm = (1u64 << m) as f64;
        let lo = 0.5 * mm;
        let hi = 4.0 * mm;
        let orders: Vec<f64> = (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count.max(2) - 1) as f64)
            .collect();
        let profiles = vec![vec![1.0; z_count]; count];
        Self::new(orders, profiles, n)
    }

    /// `sum_j |b_j(z)|^2 J_{nu_j}(rho g(z))^2` integrated in z.
    fn square_kernel_integral(&self, surface: &SurfaceOfRevolution, rho: f64) -> f64 {
        let zg = surface.z_grid();
        let h = zg.spacing();
        let mut total = 0.0;
        for (nu, bsq) in self.orders.iter().zip(&self.profiles_sq) {
            let integrand: Vec<f64> = (0..zg.count)
                .map(|i| {
                    let j = j_nu(*nu, rho * surface.profile.g[i]);
                    bsq[i] * j * j
                })
                .collect();
            total += simpson_uniform(&integrand, h);
        }
        total
    }

    /// `sum_j int |b_j|^2 dz`.
    pub fn mass(&self, zg: &ZGrid) -> f64 {
        let h = zg.spacing();
        self.profiles_sq
            .iter()
            .map(|b| simpson_uniform(b, h))
            .sum()
    }
}

/// Diagnostics of the dyadic-block restriction estimate.
#[derive(Debug, Clone)]
pub struct RestrictionLemmaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// (dyadic exponent m, contribution of [2^m, 2^{m+1}) to lhs)
    pub blocks: Vec<(u32, f64)>,
    pub origin_contribution: f64,
    /// least-squares slope of log2(contribution) over the last blocks
    pub fitted_slope: Option<f64>,
    /// set when block contributions stop decaying
    pub divergent: bool,
}

/// Evaluate both sides of the weighted inequality
/// `int rho^{-q(n-2)/2+n-1} (sum_j int |b_j|^2 J_{nu_j}(rho g)^2 dz)^{q/2} drho
///  <= C (sum_j int |b_j|^2 dz)^{q/2}`
/// over the dyadic radial grid, block by block.
pub fn restriction_lemma_ratio(
    family: &BesselWeightedFamily,
    surface: &SurfaceOfRevolution,
    q: f64,
    grid: &DyadicGrid,
) -> Result<RestrictionLemmaReport> {
    if q <= 2.0 {
        return Err(Error::Domain(format!("need q > 2, got {q}")));
    }
    let n = surface.n as f64;
    let expo = -q * (n - 2.0) / 2.0 + n - 1.0;
    let rhs_base = family.mass(surface.z_grid());
    let rhs = rhs_base.powf(0.5 * q);

    let contribs: Vec<f64> = grid
        .blocks
        .par_iter()
        .map(|b| {
            b.nodes
                .iter()
                .map(|&(rho, w)| {
                    let s = family.square_kernel_integral(surface, rho);
                    w * rho.powf(expo) * s.max(0.0).powf(0.5 * q)
                })
                .sum()
        })
        .collect();

    let mut origin = 0.0;
    let mut blocks = Vec::new();
    for (b, c) in grid.blocks.iter().zip(&contribs) {
        match b.m {
            None => origin += c,
            Some(m) => blocks.push((m, *c)),
        }
    }
    let lhs: f64 = origin + blocks.iter().map(|(_, c)| c).sum::<f64>();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };

    let fitted_slope = fit_log2_slope(&blocks, blocks.len().saturating_sub(6), blocks.len());
    let divergent = match &blocks[..] {
        [.., (_, a), (_, b2), (_, c)] => {
            (*b2 > *a && *c > *b2) || fitted_slope.is_some_and(|s| s >= 0.0)
        }
        _ => false,
    };
    Ok(RestrictionLemmaReport {
        lhs,
        rhs,
        ratio,
        blocks,
        origin_contribution: origin,
        fitted_slope,
        divergent,
    })
}

/// Least-squares slope of log2(value) against m over blocks[lo..hi],
/// skipping empty blocks.
pub fn fit_log2_slope(blocks: &[(u32, f64)], lo: usize, hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = blocks[lo.min(blocks.len())..hi.min(blocks.len())]
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(m, v)| (*m as f64, v.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Block integral with plain weight rho:
/// `int_M^{2M} rho (sum_j int |b_j|^2 J^2 dz)^{q/2} drho`.
pub fn claim_block_integral(
    family: &BesselWeightedFamily,
    surface: &SurfaceOfRevolution,
    q: f64,
    m: u32,
) -> f64 {
    let lo = (1u64 << m) as f64;
    let hi = 2.0 * lo;
    // resolve the Bessel oscillation (frequency sup g in rho)
    let freq = surface.profile.sup_a.max(1e-9);
    let width = (PI / (6.0 * freq)).min((hi - lo) / 8.0);
    integrate_panels(lo, hi, width, 8, |rho| {
        let s = family.square_kernel_integral(surface, rho);
        rho * s.max(0.0).powf(0.5 * q)
    })
}

/// The dyadic block estimate with a constant frozen on a calibration block.
#[derive(Debug, Clone)]
pub struct DyadicClaim {
    pub q: f64,
    pub c: f64,
    pub m_calib: u32,
}

/// One checked block.
#[derive(Debug, Clone)]
pub struct ClaimCheck {
    pub m: u32,
    pub lhs_block: f64,
    pub bound: f64,
}

impl DyadicClaim {
    /// Freeze `C = lhs_block(M0) / (M0^{(4-q)/2} rhs)` on the calibration
    /// block.
    pub fn calibrate(
        family: &BesselWeightedFamily,
        surface: &SurfaceOfRevolution,
        q: f64,
        m_calib: u32,
    ) -> Result<Self> {
        if q <= 4.0 {
            return Err(Error::Domain(format!(
                "the block estimate needs q > 4, got {q}"
            )));
        }
        let lhs = claim_block_integral(family, surface, q, m_calib);
        let mm = (1u64 << m_calib) as f64;
        let rhs = family.mass(surface.z_grid()).powf(0.5 * q);
        if rhs <= 0.0 || lhs <= 0.0 {
            return Err(Error::Domain("degenerate calibration block".into()));
        }
        Ok(DyadicClaim {
            q,
            c: lhs / (mm.powf(0.5 * (4.0 - q)) * rhs),
            m_calib,
        })
    }

    /// Evaluate `lhs_block` and the frozen bound `C M^{(4-q)/2} rhs` on
    /// another block (possibly with its own family).
    pub fn check(
        &self,
        family: &BesselWeightedFamily,
        surface: &SurfaceOfRevolution,
        m: u32,
    ) -> ClaimCheck {
        let lhs = claim_block_integral(family, surface, self.q, m);
        let mm = (1u64 << m) as f64;
        let rhs = family.mass(surface.z_grid()).powf(0.5 * self.q);
        ClaimCheck {
            m,
            lhs_block: lhs,
            bound: self.c * mm.powf(0.5 * (4.0 - self.q)) * rhs,
        }
    }
}

/// Partition of a family at one (block, z) into the three Bessel ranges,
/// with turning-point windows and their weight sums.
#[derive(Debug, Clone)]
pub struct RegimePartition {
    /// order indices with nu < M g / 2
    pub low: Vec<usize>,
    /// order indices with M g / 2 <= nu < 4 M g
    pub central: Vec<usize>,
    /// order indices with nu >= 4 M g
    pub high: Vec<usize>,
    pub sum_low: f64,
    pub sum_central: f64,
    pub sum_high: f64,
    /// turning-point windows of width M^{1/3} g^{-2/3} starting at M/2
    pub windows: Vec<(f64, f64)>,
    /// A_beta = sum of |b_j(z)|^2 over nu_j in each window
    pub window_sums: Vec<f64>,
}

/// Split the family at dyadic block `M = 2^m` and z-grid index `z_index`.
///
/// Interval conventions are half open on the right, so a point exactly at
/// `4 M g` lands in the high range.
pub fn regime_split(
    family: &BesselWeightedFamily,
    surface: &SurfaceOfRevolution,
    m: u32,
    z_index: usize,
) -> Result<RegimePartition> {
    let zg = surface.z_grid();
    if z_index >= zg.count {
        return Err(Error::InvalidIndex(format!("z index {z_index} out of grid")));
    }
    let g = surface.profile.g[z_index];
    let mm = (1u64 << m) as f64;
    let c_low = 0.5 * mm * g;
    let c_high = 4.0 * mm * g;

    let mut part = RegimePartition {
        low: Vec::new(),
        central: Vec::new(),
        high: Vec::new(),
        sum_low: 0.0,
        sum_central: 0.0,
        sum_high: 0.0,
        windows: Vec::new(),
        window_sums: Vec::new(),
    };
    for (j, (&nu, bsq)) in family.orders.iter().zip(&family.profiles_sq).enumerate() {
        let w = bsq[z_index];
        if nu < c_low {
            part.low.push(j);
            part.sum_low += w;
        } else if nu < c_high {
            part.central.push(j);
            part.sum_central += w;
        } else {
            part.high.push(j);
            part.sum_high += w;
        }
    }

    // windows start at M/2 with width M^{1/3} g^{-2/3}; enough of them to
    // cover [M, 2M]
    if g > 0.0 {
        let width = mm.cbrt() * g.powf(-2.0 / 3.0);
        let alpha_max = ((2.0 * mm - 0.5 * mm) / width).ceil() as usize;
        for alpha in 0..=alpha_max {
            let lo = 0.5 * mm + alpha as f64 * width;
            let hi = lo + width;
            let sum = family
                .orders
                .iter()
                .zip(&family.profiles_sq)
                .filter(|(nu, _)| **nu >= lo && **nu < hi)
                .map(|(_, bsq)| bsq[z_index])
                .sum();
            part.windows.push((lo, hi));
            part.window_sums.push(sum);
        }
    }
    Ok(part)
}

/// Separable real test function `u(rho) Y_k^j(phi) v(zeta)` with Gaussian
/// radial and zenithal factors; its transform restricted to the surface
/// has a closed quadrature form used by the adjointness check.
#[derive(Debug, Clone)]
pub struct SeparableTestFunction {
    pub harmonic: HarmonicIndex,
    pub rho_center: f64,
    pub rho_sigma: f64,
    pub zeta_sigma: f64,
}

impl SeparableTestFunction {
    pub fn u(&self, rho: f64) -> f64 {
        let d = (rho - self.rho_center) / self.rho_sigma;
        (-0.5 * d * d).exp()
    }

    pub fn v(&self, zeta: f64) -> f64 {
        let d = zeta / self.zeta_sigma;
        (-0.5 * d * d).exp()
    }

    /// `v-hat(z) = sigma sqrt(2 pi) exp(-sigma^2 z^2 / 2)`.
    pub fn v_hat(&self, z: f64) -> f64 {
        self.zeta_sigma
            * (2.0 * PI).sqrt()
            * (-0.5 * self.zeta_sigma * self.zeta_sigma * z * z).exp()
    }

    /// `U(lambda) = int u(rho) J_nu(lambda rho) rho^{n/2} drho`.
    pub fn radial_transform(&self, nu: f64, lambda: f64, n: usize) -> f64 {
        let lo = (self.rho_center - 10.0 * self.rho_sigma).max(0.0);
        let hi = self.rho_center + 10.0 * self.rho_sigma;
        let width = (PI / (6.0 * lambda.max(0.5))).min((hi - lo) / 8.0);
        integrate_panels(lo, hi, width, 8, |rho| {
            self.u(rho) * j_nu(nu, lambda * rho) * rho.powf(0.5 * n as f64)
        })
    }
}

/// Both sides of the adjointness identity
/// `< (f dGamma)-hat, h > = int_Gamma f h-hat dGamma`
/// for a separable real test function h: the left side through the
/// extension machinery on its grid, the right side by independent
/// quadrature against the analytic transform of h. The common channel
/// constant `(2 pi)^{n/2} (-i)^k` is dropped from both sides.
pub fn duality_pairing(
    field: &SphericalCoefficientField,
    surface: &SurfaceOfRevolution,
    ext: &ExtensionField,
    h: &SeparableTestFunction,
) -> Result<(f64, f64)> {
    let idx = h.harmonic;
    let chan = ext
        .harmonics
        .iter()
        .find(|(i, _)| *i == idx)
        .ok_or_else(|| Error::InvalidIndex(format!("{idx:?} not in extension field")))?;
    let profile = field
        .profile(&idx)
        .ok_or_else(|| Error::InvalidIndex(format!("{idx:?} not in coefficient field")))?;
    let n = surface.n;
    let nf = n as f64;

    // machinery side: radial nodes x zeta bins
    let mut lhs = 0.0;
    for (ri, &(rho, w)) in ext.rho_nodes.iter().enumerate() {
        let mut zsum = Complex64::new(0.0, 0.0);
        for (l, v) in chan.1[ri].iter().enumerate() {
            zsum += v * h.v(ext.zeta_at(l));
        }
        lhs += w * rho.powf(nf - 1.0) * h.u(rho) * zsum.re * ext.zeta_delta;
    }

    // independent side: surface quadrature against the analytic transform
    // of h. The z-integral uses the same trapezoid measure the extension
    // does, so the identity is exact for the discrete surface measure and
    // the residual isolates the rho/zeta machinery.
    let zg = surface.z_grid();
    let dz = zg.spacing();
    let nu = surface.order(idx.degree);
    let rhs: f64 = (0..zg.count)
        .map(|i| {
            let z = zg.node(i);
            let w = crate::spherical::z_weight(i, zg);
            let lam = surface.profile.g[i];
            w * dz * surface.g2[i] * profile[i] * h.radial_transform(nu, lam, n) * h.v_hat(z)
        })
        .sum();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cylinder_surface(n: usize, count: usize) -> SurfaceOfRevolution {
        surface_measure_factors(ProfileFunction::cylinder(count).unwrap(), n).unwrap()
    }

    #[test]
    fn measure_factors_cylinder_cone_bump() {
        let s = cylinder_surface(2, 64);
        assert!(s.g1.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(s.g2.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let cone = surface_measure_factors(ProfileFunction::cone(64).unwrap(), 2).unwrap();
        for (i, z) in cone.z_grid().nodes().enumerate() {
            let want = z * 2.0f64.sqrt();
            assert!((cone.g1[i] - want).abs() < 1e-12);
            assert!((cone.g2[i] - want).abs() < 1e-12);
        }

        let bump = surface_measure_factors(ProfileFunction::bump(64).unwrap(), 2).unwrap();
        for (i, z) in bump.z_grid().nodes().enumerate() {
            let g = 1.0 + z * (1.0 - z);
            let gp = 1.0 - 2.0 * z;
            assert!((bump.g1[i] - g * (1.0 + gp * gp).sqrt()).abs() < 1e-12);
        }
        assert!((bump.profile.sup_a - 1.25).abs() < 1e-3);
        assert!((bump.profile.sup_b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factors_recomputable_from_profile() {
        let s =
            surface_measure_factors(ProfileFunction::truncated_sphere(128).unwrap(), 3).unwrap();
        for i in 0..s.z_grid().count {
            let g = s.profile.g[i];
            let gp = s.profile.g_prime[i];
            let g1 = g.powi(2) * (1.0 + gp * gp).sqrt();
            let g2 = g.powf(1.5) * (1.0 + gp * gp).sqrt();
            assert!((g1 - s.g1[i]).abs() <= 1e-14 * g1.max(1.0));
            assert!((g2 - s.g2[i]).abs() <= 1e-14 * g2.max(1.0));
        }
    }

    #[test]
    fn rejects_negative_profile() {
        let grid = ZGrid::new(0.0, 1.0, 16).unwrap();
        assert!(ProfileFunction::from_closures(grid, |z| 0.5 - z, |_| -1.0).is_err());
    }

    #[test]
    fn zero_field_extends_to_zero() {
        let s = cylinder_surface(2, 32);
        let field = SphericalCoefficientField::zero(2, 2, s.z_grid().clone());
        let grid = DyadicGrid::new(3, 8, s.profile.sup_a).unwrap();
        let ext = extend(&field, &s, &grid, 1).unwrap();
        assert!(ext.harmonics.is_empty());
        let norm = ext.norm_q22(&grid, 5.0).unwrap();
        assert_eq!(norm.value, 0.0);
    }

    #[test]
    fn cylinder_channel_factorizes_into_bessel_times_transform() {
        // g == 1: the z-integral is J_nu(rho) times the transform of G2 a
        let s = cylinder_surface(2, 64);
        let mut field = SphericalCoefficientField::zero(2, 3, s.z_grid().clone());
        let prof: Vec<f64> = s.z_grid().nodes().map(|z| 0.7 + (3.1 * z).sin()).collect();
        field.set(HarmonicIndex::new(2, 1), prof.clone()).unwrap();
        let grid = DyadicGrid::new(4, 8, 1.0).unwrap();
        let ext = extend(&field, &s, &grid, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let zg = s.z_grid();
        let dz = zg.spacing();
        for _ in 0..20 {
            let ri = rng.gen_range(0..ext.rho_nodes.len());
            let l = rng.gen_range(0..ext.zeta_len / 4);
            let rho = ext.rho_nodes[ri].0;
            let zeta = ext.zeta_at(l);
            let mut transform = Complex64::new(0.0, 0.0);
            for (mi, z) in zg.nodes().enumerate() {
                let w = crate::spherical::z_weight(mi, zg);
                transform += Complex64::new(0.0, -z * zeta).exp() * (w * dz * prof[mi]);
            }
            let wanted = transform * j_nu(2.0, rho);
            let got = ext.harmonics[0].1[ri][l];
            assert!(
                (got - wanted).norm() < 1e-12 * wanted.norm().max(1e-6),
                "rho={rho} zeta={zeta}"
            );
        }
    }

    #[test]
    fn extension_matches_brute_force_measure_transform() {
        // bump profile, constant-channel f, n = 2: dense 2-d quadrature of
        // the surface integral at random probe points. The machinery's
        // trapezoid-in-z bias grows like (zeta dz)^2, so probe low bins.
        let s = surface_measure_factors(ProfileFunction::bump(512).unwrap(), 2).unwrap();
        let mut field = SphericalCoefficientField::zero(2, 0, s.z_grid().clone());
        field
            .set(HarmonicIndex::new(0, 1), vec![1.0; s.z_grid().count])
            .unwrap();
        let grid = DyadicGrid::new(3, 8, s.profile.sup_a).unwrap();
        let ext = extend(&field, &s, &grid, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let ri = rng.gen_range(0..ext.rho_nodes.len());
            let l = rng.gen_range(0..4);
            let rho = ext.rho_nodes[ri].0;
            let zeta = ext.zeta_at(l);
            let phi = rng.gen_range(0.0..2.0 * PI);
            let machinery =
                extension_value_at(&field, &s, rho, &AngularPoint::Circle(phi), zeta).unwrap();
            let nt = 512;
            let mut oracle = Complex64::new(0.0, 0.0);
            let gl = crate::quadrature::gauss_legendre_on(0.0, 1.0, 200);
            for &(z, wz) in &gl {
                let g = 1.0 + z * (1.0 - z);
                let gp = 1.0 - 2.0 * z;
                let g1 = g * (1.0 + gp * gp).sqrt();
                let mut tsum = Complex64::new(0.0, 0.0);
                for ti in 0..nt {
                    let theta = 2.0 * PI * ti as f64 / nt as f64;
                    let phase = -(rho * g * (theta - phi).cos() + z * zeta);
                    tsum += Complex64::new(0.0, phase).exp();
                }
                oracle += tsum * (wz * g1 / (2.0 * PI).sqrt() * (2.0 * PI / nt as f64));
            }
            let scale = machinery.norm().max(oracle.norm()).max(1e-3);
            assert!(
                (machinery - oracle).norm() < 1e-4 * scale,
                "rho={rho} zeta={zeta} machinery={machinery} oracle={oracle}"
            );
        }
    }

    #[test]
    fn extension_zeta_parseval_is_exact() {
        // sum over bins of |X_l|^2 delta-zeta equals 2 pi dz sum |w h|^2
        let s = cylinder_surface(2, 128);
        let mut field = SphericalCoefficientField::zero(2, 0, s.z_grid().clone());
        let prof: Vec<f64> = s.z_grid().nodes().map(|z| (PI * z).sin()).collect();
        field.set(HarmonicIndex::new(0, 1), prof.clone()).unwrap();
        let grid = DyadicGrid::new(2, 4, 1.0).unwrap();
        let ext = extend(&field, &s, &grid, 4).unwrap();
        let zg = s.z_grid();
        let dz = zg.spacing();
        let ri = 3usize;
        let rho = ext.rho_nodes[ri].0;
        let got: f64 = ext.harmonics[0].1[ri].iter().map(|v| v.norm_sqr()).sum::<f64>()
            * ext.zeta_delta;
        let direct: f64 = (0..zg.count)
            .map(|m| {
                let w = crate::spherical::z_weight(m, zg);
                let h = w * dz * prof[m] * j_nu(0.0, rho);
                h * h
            })
            .sum::<f64>()
            * 2.0
            * PI
            / dz;
        assert!((got - direct).abs() < 1e-10 * direct, "{got} vs {direct}");
    }

    #[test]
    fn quotient_scale_invariant_and_stable() {
        let s = cylinder_surface(2, 128);
        let mut field = SphericalCoefficientField::zero(2, 0, s.z_grid().clone());
        let prof: Vec<f64> = s
            .z_grid()
            .nodes()
            .map(|z| (PI * z).sin().powi(2) + 0.2)
            .collect();
        field.set(HarmonicIndex::new(0, 1), prof.clone()).unwrap();
        let grid = DyadicGrid::new(7, 16, s.profile.sup_a).unwrap();
        let q1 = extension_quotient(&field, &s, &grid, 5.0, 1).unwrap();
        let mut scaled = SphericalCoefficientField::zero(2, 0, s.z_grid().clone());
        scaled
            .set(
                HarmonicIndex::new(0, 1),
                prof.iter().map(|v| 17.0 * v).collect(),
            )
            .unwrap();
        let q2 = extension_quotient(&scaled, &s, &grid, 5.0, 1).unwrap();
        assert!((q1.quotient - q2.quotient).abs() < 1e-10 * q1.quotient);
        let grid2 = DyadicGrid::new(8, 24, s.profile.sup_a).unwrap();
        let q3 = extension_quotient(&field, &s, &grid2, 5.0, 1).unwrap();
        assert!(
            (q1.quotient - q3.quotient).abs() < 0.02 * q1.quotient,
            "{} vs {}",
            q1.quotient,
            q3.quotient
        );
    }

    #[test]
    fn quotient_invariant_under_member_rotation() {
        // rotating the angular variable mixes the (cos, sin) members by an
        // orthogonal matrix; the quotient only sees sum_j |a_{k,j}|^2
        let s = cylinder_surface(2, 64);
        let k = 2usize;
        let prof_a: Vec<f64> = s.z_grid().nodes().map(|z| 1.0 + z).collect();
        let prof_b: Vec<f64> = s.z_grid().nodes().map(|z| (2.0 * z).cos()).collect();
        let mut field = SphericalCoefficientField::zero(2, k, s.z_grid().clone());
        field.set(HarmonicIndex::new(k, 1), prof_a.clone()).unwrap();
        field.set(HarmonicIndex::new(k, 2), prof_b.clone()).unwrap();
        let phi0 = 0.7f64;
        let (c, sn) = ((k as f64 * phi0).cos(), (k as f64 * phi0).sin());
        let rot_a: Vec<f64> = prof_a
            .iter()
            .zip(&prof_b)
            .map(|(a, b)| c * a + sn * b)
            .collect();
        let rot_b: Vec<f64> = prof_a
            .iter()
            .zip(&prof_b)
            .map(|(a, b)| -sn * a + c * b)
            .collect();
        let mut rotated = SphericalCoefficientField::zero(2, k, s.z_grid().clone());
        rotated.set(HarmonicIndex::new(k, 1), rot_a).unwrap();
        rotated.set(HarmonicIndex::new(k, 2), rot_b).unwrap();
        let grid = DyadicGrid::new(6, 16, 1.0).unwrap();
        let q1 = extension_quotient(&field, &s, &grid, 5.0, 1).unwrap();
        let q2 = extension_quotient(&rotated, &s, &grid, 5.0, 1).unwrap();
        assert!((q1.quotient - q2.quotient).abs() < 1e-9 * q1.quotient);
    }

    #[test]
    fn duality_pairing_matches_independent_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for profile in [
            ProfileFunction::cylinder(256).unwrap(),
            ProfileFunction::bump(256).unwrap(),
        ] {
            let s = surface_measure_factors(profile, 2).unwrap();
            let k_max = 3;
            let mut field = SphericalCoefficientField::zero(2, k_max, s.z_grid().clone());
            for idx in SphericalCoefficientField::indices(2, k_max) {
                let c0 = rng.gen_range(-1.0..1.0);
                let c1 = rng.gen_range(-1.0..1.0);
                let prof: Vec<f64> = s
                    .z_grid()
                    .nodes()
                    .map(|z| c0 + c1 * (2.0 * PI * z).cos())
                    .collect();
                field.set(idx, prof).unwrap();
            }
            let grid = DyadicGrid::new(5, 16, s.profile.sup_a).unwrap();
            let ext = extend(&field, &s, &grid, 8).unwrap();
            for _ in 0..5 {
                let k = rng.gen_range(0..=k_max);
                let j = rng.gen_range(1..=crate::spherical::dimension(2, k));
                let h = SeparableTestFunction {
                    harmonic: HarmonicIndex::new(k, j),
                    rho_center: rng.gen_range(1.5..4.0),
                    rho_sigma: rng.gen_range(0.4..0.8),
                    zeta_sigma: rng.gen_range(1.5..3.0),
                };
                let (lhs, rhs) = duality_pairing(&field, &s, &ext, &h).unwrap();
                let scale = lhs.abs().max(rhs.abs()).max(1e-3);
                assert!(
                    (lhs - rhs).abs() < 1e-6 * scale,
                    "k={k} j={j}: lhs={lhs} rhs={rhs}"
                );
            }
        }
    }

    #[test]
    fn lemma_ratio_trivial_and_cylinder() {
        let s = cylinder_surface(2, 64);
        let fam = BesselWeightedFamily::new(vec![3.0], vec![vec![0.0; 64]], 2).unwrap();
        let grid = DyadicGrid::new(6, 16, 1.0).unwrap();
        let rep = restriction_lemma_ratio(&fam, &s, 5.0, &grid).unwrap();
        assert_eq!(rep.ratio, 0.0);

        let fam = BesselWeightedFamily::new(vec![3.0], vec![vec![1.0; 64]], 2).unwrap();
        let rep1 =
            restriction_lemma_ratio(&fam, &s, 5.0, &DyadicGrid::new(11, 16, 1.0).unwrap()).unwrap();
        let rep2 =
            restriction_lemma_ratio(&fam, &s, 5.0, &DyadicGrid::new(12, 16, 1.0).unwrap()).unwrap();
        assert!(rep1.ratio.is_finite() && rep1.ratio > 0.0);
        assert!(
            (rep1.ratio - rep2.ratio).abs() < 0.01 * rep1.ratio,
            "{} vs {}",
            rep1.ratio,
            rep2.ratio
        );
        assert!(!rep1.divergent);
    }

    #[test]
    fn lemma_ratio_flags_subthreshold_exponent() {
        // q = 3.5 below the n = 2 threshold 4: contributions do not decay
        let s = cylinder_surface(2, 64);
        let fam = BesselWeightedFamily::new(vec![3.0], vec![vec![1.0; 64]], 2).unwrap();
        let rep =
            restriction_lemma_ratio(&fam, &s, 3.5, &DyadicGrid::new(9, 16, 1.0).unwrap()).unwrap();
        assert!(rep.divergent, "slope {:?}", rep.fitted_slope);
    }

    #[test]
    fn geometric_block_decay_near_expected_exponent() {
        // q = 5, n = 2 cylinder: slope of log2 block contributions close to
        // -q(n-1)/2 + n = -0.5
        let s = cylinder_surface(2, 64);
        let fam = BesselWeightedFamily::new(vec![3.0], vec![vec![1.0; 64]], 2).unwrap();
        let rep =
            restriction_lemma_ratio(&fam, &s, 5.0, &DyadicGrid::new(9, 16, 1.0).unwrap()).unwrap();
        let slope = fit_log2_slope(&rep.blocks, 3, 9).unwrap();
        assert!((slope - (-0.5)).abs() < 0.3, "slope {slope} vs expected -0.5");
    }

    #[test]
    fn claim_trivial_zero_family() {
        let s = cylinder_surface(2, 64);
        let fam = BesselWeightedFamily::new(vec![2.0], vec![vec![0.0; 64]], 2).unwrap();
        assert_eq!(claim_block_integral(&fam, &s, 5.0, 3), 0.0);
    }

    #[test]
    fn claim_uniform_over_blocks() {
        let s = cylinder_surface(2, 64);
        for &q in &[5.0f64, 6.0] {
            let fam0 = BesselWeightedFamily::spread_for_block(3, 24, 64, 2).unwrap();
            let claim = DyadicClaim::calibrate(&fam0, &s, q, 3).unwrap();
            for m in 4..=7 {
                let fam = BesselWeightedFamily::spread_for_block(m, 24, 64, 2).unwrap();
                let chk = claim.check(&fam, &s, m);
                assert!(
                    chk.lhs_block <= chk.bound,
                    "q={q} m={m}: lhs={} bound={}",
                    chk.lhs_block,
                    chk.bound
                );
                assert!(chk.lhs_block > 0.05 * chk.bound, "q={q} m={m}");
            }
        }
    }

    #[test]
    fn claim_scaled_band_is_flat_in_m() {
        let s = cylinder_surface(2, 64);
        let q = 5.0;
        let mut scaled = Vec::new();
        for m in 3..=7u32 {
            let fam = BesselWeightedFamily::spread_for_block(m, 24, 64, 2).unwrap();
            let lhs = claim_block_integral(&fam, &s, q, m);
            let mm = (1u64 << m) as f64;
            scaled.push(lhs / mm.powf(0.5 * (4.0 - q)));
        }
        let max = scaled.iter().cloned().fold(0.0f64, f64::max);
        let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "band {scaled:?}");
    }

    #[test]
    fn regime_split_examples() {
        let s = cylinder_surface(2, 64);
        let fam =
            BesselWeightedFamily::new(vec![1.0, 2.0, 3.0], vec![vec![1.0; 64]; 3], 2).unwrap();
        let part = regime_split(&fam, &s, 3, 10).unwrap(); // M = 8, Mg/2 = 4
        assert_eq!(part.low.len(), 3);
        assert!(part.central.is_empty() && part.high.is_empty());
        assert_eq!(part.sum_low, 3.0);

        // boundary: nu = 4 M g exactly lands high (half-open central range)
        let fam = BesselWeightedFamily::new(vec![32.0], vec![vec![1.0; 64]], 2).unwrap();
        let part = regime_split(&fam, &s, 3, 0).unwrap();
        assert_eq!(part.high.len(), 1);

        // windows cover [M, 2M]
        let fam = BesselWeightedFamily::new(vec![8.0], vec![vec![1.0; 64]], 2).unwrap();
        let part = regime_split(&fam, &s, 3, 0).unwrap();
        let lo = part.windows.first().unwrap().0;
        let hi = part.windows.last().unwrap().1;
        assert!(lo <= 8.0 && hi >= 16.0);
    }

    #[test]
    fn regime_split_counts_match_enumeration() {
        let s = cylinder_surface(2, 64);
        let m = 4u32; // M = 16
        let count = 40;
        let mm = 16.0f64;
        let orders: Vec<f64> = (0..count)
            .map(|i| 0.5 * mm + (4.0 * mm - 0.5 * mm) * i as f64 / (count - 1) as f64)
            .collect();
        let fam =
            BesselWeightedFamily::new(orders.clone(), vec![vec![1.0; 64]; count], 2).unwrap();
        let part = regime_split(&fam, &s, m, 5).unwrap();
        assert_eq!(part.low.len() + part.central.len() + part.high.len(), count);
        for (w, (lo, hi)) in part.window_sums.iter().zip(&part.windows) {
            let direct = orders.iter().filter(|nu| **nu >= *lo && **nu < *hi).count() as f64;
            assert_eq!(*w, direct);
        }
    }
}
