//! Dyadic radial quadrature grids and the mixed norms `L^p_rad L^2_ang`
//! on R^n and `L^{p,2,2}` on R^{n+1}.
//!
//! The radial half line is split as `[0,1) u U_m [2^m, 2^{m+1})`. Block
//! integrals use Gauss-Legendre panels whose node count follows the
//! oscillation frequency of the integrand, so that Bessel-type factors
//! stay resolved in every block; tails beyond the cutoff are estimated
//! from the last blocks' geometric ratio and reported, never silently
//! dropped.

use crate::quadrature::gauss_legendre_on;
use crate::{Error, Result};

/// One panel of the radial grid with its Gauss nodes.
#[derive(Debug, Clone)]
pub struct RadialBlock {
    pub lo: f64,
    pub hi: f64,
    /// dyadic exponent; None for the origin panel [0, 1)
    pub m: Option<u32>,
    pub nodes: Vec<(f64, f64)>,
}

/// Dyadic radial grid with an origin panel and blocks up to `2^{m_max}`.
#[derive(Debug, Clone)]
pub struct DyadicGrid {
    pub blocks: Vec<RadialBlock>,
    pub max_freq: f64,
    pub base_nodes: usize,
}

impl DyadicGrid {
    /// `m_max` dyadic blocks above the origin panel, cutoff `r_max = 2^{m_max}`.
    ///
    /// `max_freq` is the highest radial oscillation frequency expected of
    /// integrands on this grid (for Bessel factors `J_nu(r g)` this is
    /// `sup g`); node counts per block grow linearly with block width so
    /// that at least ~6 nodes cover each oscillation period.
    pub fn new(m_max: u32, base_nodes: usize, max_freq: f64) -> Result<Self> {
        if base_nodes < 4 {
            return Err(Error::Config("need at least 4 nodes per block".into()));
        }
        if !(max_freq.is_finite() && max_freq >= 0.0) {
            return Err(Error::Config("max_freq must be finite and >= 0".into()));
        }
        let mut blocks = Vec::new();
        let nodes_for = |lo: f64, hi: f64| -> usize {
            let width = hi - lo;
            let per_osc = width * max_freq / std::f64::consts::PI * 6.0;
            (per_osc.ceil() as usize).clamp(base_nodes, 4096)
        };
        let n0 = nodes_for(0.0, 1.0);
        blocks.push(RadialBlock {
            lo: 0.0,
            hi: 1.0,
            m: None,
            nodes: gauss_legendre_on(0.0, 1.0, n0),
        });
        for m in 0..m_max {
            let lo = (1u64 << m) as f64;
            let hi = (1u64 << (m + 1)) as f64;
            let n = nodes_for(lo, hi);
            blocks.push(RadialBlock {
                lo,
                hi,
                m: Some(m),
                nodes: gauss_legendre_on(lo, hi, n),
            });
        }
        Ok(DyadicGrid {
            blocks,
            max_freq,
            base_nodes,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.blocks.last().map(|b| b.hi).unwrap_or(0.0)
    }

    /// All (node, weight) pairs in radial order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.blocks.iter().flat_map(|b| b.nodes.iter().copied())
    }

    pub fn node_count(&self) -> usize {
        self.blocks.iter().map(|b| b.nodes.len()).sum()
    }
}

/// Result of a mixed-norm evaluation: the p-th power per block, the norm,
/// and a geometric tail estimate for the truncated part beyond `r_max`.
#[derive(Debug, Clone)]
pub struct MixedNorm {
    pub value: f64,
    /// per-block contributions to the p-th power of the norm
    pub block_powers: Vec<f64>,
    /// estimated truncation of the p-th power, from the last blocks' ratio
    pub tail_power_estimate: f64,
    /// set when the last blocks grow instead of decaying
    pub divergent_tail: bool,
    pub p: f64,
}

impl MixedNorm {
    pub(crate) fn from_block_powers(block_powers: Vec<f64>, p: f64) -> Self {
        let total: f64 = block_powers.iter().sum();
        let k = block_powers.len();
        let (tail, divergent) = if k >= 3 {
            let last = block_powers[k - 1];
            let prev = block_powers[k - 2];
            if last <= 0.0 {
                (0.0, false)
            } else if prev > 0.0 && last < prev {
                let q = last / prev;
                (last * q / (1.0 - q), false)
            } else {
                (last, true)
            }
        } else {
            (0.0, false)
        };
        MixedNorm {
            value: total.powf(1.0 / p),
            block_powers,
            tail_power_estimate: tail,
            divergent_tail: divergent,
            p,
        }
    }

    /// Relative contribution of the estimated tail to the norm value.
    pub fn tail_relative(&self) -> f64 {
        let total: f64 = self.block_powers.iter().sum();
        if total <= 0.0 {
            0.0
        } else {
            self.tail_power_estimate / total / self.p
        }
    }
}

/// `(int r^{n-1} S(r)^{p/2} dr)^{1/p}` where `S(r)` is the square sum over
/// harmonics at radius r.
pub fn mixed_norm_p2(
    square_sum: &(dyn Fn(f64) -> f64 + Sync),
    grid: &DyadicGrid,
    p: f64,
    n: usize,
) -> Result<MixedNorm> {
    if p < 1.0 {
        return Err(Error::Domain(format!("p must be >= 1, got {p}")));
    }
    if grid.blocks.is_empty() {
        return Err(Error::Config("empty radial grid".into()));
    }
    let nf = n as f64;
    let block_powers: Vec<f64> = grid
        .blocks
        .iter()
        .map(|b| {
            b.nodes
                .iter()
                .map(|&(r, w)| {
                    let s = square_sum(r);
                    debug_assert!(s >= -1e-12, "square sum must be nonnegative");
                    w * r.powf(nf - 1.0) * s.max(0.0).powf(0.5 * p)
                })
                .sum()
        })
        .collect();
    Ok(MixedNorm::from_block_powers(block_powers, p))
}

/// `L^{p,2,2}` norm: like [`mixed_norm_p2`] but the inner square sum is an
/// L^2 integral over (zenithal, angular) variables supplied by the caller.
pub fn mixed_norm_p22(
    inner_l2_squared: &(dyn Fn(f64) -> f64 + Sync),
    grid: &DyadicGrid,
    p: f64,
    n: usize,
) -> Result<MixedNorm> {
    mixed_norm_p2(inner_l2_squared, grid, p, n)
}

/// Mixed norm from square sums precomputed at the grid's own nodes, in
/// the order of [`DyadicGrid::nodes`].
pub fn mixed_norm_p2_sampled(
    square_sum_at_nodes: &[f64],
    grid: &DyadicGrid,
    p: f64,
    n: usize,
) -> Result<MixedNorm> {
    if p < 1.0 {
        return Err(Error::Domain(format!("p must be >= 1, got {p}")));
    }
    if square_sum_at_nodes.len() != grid.node_count() {
        return Err(Error::GridMismatch(format!(
            "{} samples for {} grid nodes",
            square_sum_at_nodes.len(),
            grid.node_count()
        )));
    }
    let nf = n as f64;
    let mut block_powers = Vec::with_capacity(grid.blocks.len());
    let mut i = 0;
    for b in &grid.blocks {
        let mut acc = 0.0;
        for &(r, w) in &b.nodes {
            acc += w * r.powf(nf - 1.0) * square_sum_at_nodes[i].max(0.0).powf(0.5 * p);
            i += 1;
        }
        block_powers.push(acc);
    }
    Ok(MixedNorm::from_block_powers(block_powers, p))
}

/// Threshold `2n/(n+1)`: restriction exponents satisfy `1 <= p < threshold`.
pub fn restriction_p_threshold(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 + 1.0)
}

/// Threshold `2n/(n-1)`: extension exponents satisfy `q > threshold`.
pub fn extension_q_threshold(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 1.0)
}

/// Exponent role in the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentRole {
    RestrictionP,
    ExtensionQ,
}

/// An L^p exponent tagged with its role and checked against the threshold.
#[derive(Debug, Clone, Copy)]
pub struct NormExponent {
    pub p: f64,
    pub role: ExponentRole,
}

impl NormExponent {
    pub fn restriction(p: f64, n: usize) -> Result<Self> {
        let hi = restriction_p_threshold(n);
        if !(1.0..hi).contains(&p) {
            return Err(Error::Domain(format!(
                "restriction exponent needs 1 <= p < {hi}, got {p}"
            )));
        }
        Ok(NormExponent {
            p,
            role: ExponentRole::RestrictionP,
        })
    }

    pub fn extension(q: f64, n: usize) -> Result<Self> {
        let lo = extension_q_threshold(n);
        if q <= lo {
            return Err(Error::Domain(format!(
                "extension exponent needs q > {lo}, got {q}"
            )));
        }
        Ok(NormExponent {
            p: q,
            role: ExponentRole::ExtensionQ,
        })
    }
}
