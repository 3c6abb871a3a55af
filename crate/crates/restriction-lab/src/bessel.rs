//! Bessel functions of the first kind for real order `nu >= 0`, their
//! derivatives, and the five-regime decay envelopes used by the dyadic
//! estimates.
//!
//! Evaluation strategy:
//! - ascending power series where it is cancellation-free
//!   (`x <= 9` or `x^2 <= 4(nu+1)`),
//! - Hankel large-argument asymptotics at a fractional base order plus
//!   stable upward recurrence for `x >= 30`, `nu <= x - 2 x^{1/3}`,
//! - normalized downward (Miller) recurrence elsewhere, with the sum
//!   identity `sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(x) = (x/2)^nu`
//!   evaluated in a wide-exponent accumulator so that large orders never
//!   overflow.
//!
//! All routines are pure; values below the f64 underflow threshold are
//! flushed to zero.

use crate::quadrature::ln_gamma;
use crate::{Error, Result};

/// Maximum supported order.
pub const MAX_ORDER: f64 = 1.0e4;

/// Real Bessel order `nu >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Domain(format!("order must be finite and >= 0, got {nu}")));
        }
        if nu > MAX_ORDER {
            return Err(Error::Range(format!("order {nu} above supported range {MAX_ORDER}")));
        }
        Ok(BesselOrder(nu))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Decay regimes of the envelope lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Oscillatory,
    Exponential,
    TurningPointAbove,
    TurningPointBelow,
    Origin,
    Unclassified,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Oscillatory => "oscillatory",
            Regime::Exponential => "exponential",
            Regime::TurningPointAbove => "turning-above",
            Regime::TurningPointBelow => "turning-below",
            Regime::Origin => "origin",
            Regime::Unclassified => "unclassified",
        }
    }
}

/// A regime classification together with the envelope value at that point.
#[derive(Debug, Clone, Copy)]
pub struct RegimeBound {
    pub regime: Regime,
    pub bound: f64,
}

/// `J_nu(x)` for `nu >= 0`, `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("argument must be finite and >= 0, got {x}")));
    }
    Ok(j_nu(order.get(), x))
}

/// `J'_nu(x)` via `J'_nu = (nu/x) J_nu - J_{nu+1}`, valid for all `nu >= 0`.
pub fn bessel_j_prime(order: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("argument must be finite and > 0, got {x}")));
    }
    let nu = order.get();
    if nu + 1.0 > MAX_ORDER {
        return Err(Error::Range(format!("order {nu}+1 above supported range")));
    }
    Ok(j_prime_nu(nu, x))
}

pub(crate) fn j_prime_nu(nu: f64, x: f64) -> f64 {
    (nu / x) * j_nu(nu, x) - j_nu(nu + 1.0, x)
}

/// Unchecked internal evaluator; callers guarantee `nu in [0, MAX_ORDER+1]`
/// and `x >= 0`.
pub(crate) fn j_nu(nu: f64, x: f64) -> f64 {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 9.0 || x * x <= 4.0 * (nu + 1.0) {
        return series_j(nu, x);
    }
    if x >= 30.0 && nu <= x - 2.0 * x.cbrt() {
        return upward_j(nu, x);
    }
    miller_j(nu, x)
}

/// Ascending series; safe only where the leading terms dominate.
fn series_j(nu: f64, x: f64) -> f64 {
    let ln_t0 = nu * (0.5 * x).ln() - ln_gamma(nu + 1.0);
    if ln_t0 < -745.0 {
        return 0.0;
    }
    let t0 = ln_t0.exp();
    let q = 0.25 * x * x;
    let mut term = t0;
    let mut sum = t0;
    let mut comp = 0.0;
    for m in 0..400 {
        let mf = m as f64;
        term *= -q / ((mf + 1.0) * (nu + mf + 1.0));
        // Neumaier step
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if term.abs() < 1e-18 * sum.abs().max(t0 * 1e-18) {
            break;
        }
    }
    sum + comp
}

/// Hankel large-argument expansion, adequate for `x >= 30`, `order <= 2`.
fn hankel_j(nu: f64, x: f64) -> f64 {
    debug_assert!(x >= 30.0 && nu <= 2.0);
    let mu = 4.0 * nu * nu;
    let chi = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    // a_j = prod_{i=1..j} (mu - (2i-1)^2) / (j! 8^j); P = sum (-1)^k a_{2k} x^{-2k},
    // Q = sum (-1)^k a_{2k+1} x^{-2k-1}
    let mut a = 1.0; // a_0
    let mut p = 1.0;
    let mut q = 0.0;
    let mut sign_p = 1.0;
    let mut sign_q = 1.0;
    for j in 1..=14usize {
        let i = (2 * j - 1) as f64;
        a *= (mu - i * i) / (j as f64 * 8.0);
        let contrib = a / x.powi(j as i32);
        if j % 2 == 1 {
            q += sign_q * contrib;
            sign_q = -sign_q;
        } else {
            sign_p = -sign_p;
            p += sign_p * contrib;
        }
        if contrib.abs() < 1e-18 {
            break;
        }
    }
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Seeds at the fractional part of the order, then stable upward recurrence
/// through the oscillatory zone.
fn upward_j(nu: f64, x: f64) -> f64 {
    let f = nu - nu.floor();
    if nu < 1.0 {
        return hankel_j(nu, x);
    }
    let mut jm = hankel_j(f, x);
    let mut jc = hankel_j(f + 1.0, x);
    if nu == f + 1.0 {
        return jc;
    }
    let mut mu = f + 1.0;
    while mu < nu - 0.5 {
        let jn = (2.0 * mu / x) * jc - jm;
        jm = jc;
        jc = jn;
        mu += 1.0;
    }
    jc
}

/// Wide-exponent scaled float: value = m * 2^(512 e), |m| kept in
/// [2^-256, 2^256) when normalized.
#[derive(Debug, Clone, Copy)]
struct Wide {
    m: f64,
    e: i64,
}

const WIDE_UP: f64 = 1.3407807929942597e154; // 2^512
const WIDE_DOWN: f64 = 7.458340731200207e-155; // 2^-512
const WIDE_HI: f64 = 1.157920892373162e77; // 2^256
const WIDE_LO: f64 = 8.636168555094445e-78; // 2^-256

impl Wide {
    fn zero() -> Self {
        Wide { m: 0.0, e: 0 }
    }

    fn normalize(&mut self) {
        if self.m == 0.0 || !self.m.is_finite() {
            return;
        }
        while self.m.abs() >= WIDE_HI {
            self.m *= WIDE_DOWN;
            self.e += 1;
        }
        while self.m.abs() < WIDE_LO {
            self.m *= WIDE_UP;
            self.e -= 1;
        }
    }

    fn from_ln(ln_abs: f64, sign: f64) -> Self {
        let unit = 512.0 * std::f64::consts::LN_2;
        let e = (ln_abs / unit).floor();
        let m = (ln_abs - e * unit).exp() * sign;
        let mut w = Wide { m, e: e as i64 };
        w.normalize();
        w
    }

    fn mul_f64(mut self, f: f64) -> Self {
        self.m *= f;
        self.normalize();
        self
    }

    fn add(&mut self, other: Wide) {
        if other.m == 0.0 {
            return;
        }
        if self.m == 0.0 {
            *self = other;
            return;
        }
        let d = self.e - other.e;
        if d >= 2 {
            return;
        } else if d <= -2 {
            *self = other;
            return;
        }
        match d {
            0 => self.m += other.m,
            1 => self.m += other.m * WIDE_DOWN,
            -1 => {
                self.m = self.m * WIDE_DOWN + other.m;
                self.e = other.e;
            }
            _ => unreachable!(),
        }
        self.normalize();
    }

    fn ln_abs(self) -> f64 {
        self.m.abs().ln() + self.e as f64 * 512.0 * std::f64::consts::LN_2
    }
}

/// Normalized downward recurrence.
fn miller_j(nu: f64, x: f64) -> f64 {
    // underflow short circuit deep in the monotone region
    if x < nu {
        let z = x / nu;
        let s = (1.0 - z * z).sqrt();
        let eta = ((1.0 + s) / z).ln() - s;
        if nu * eta > 760.0 {
            return 0.0;
        }
    }
    let delta = 40.0 + 14.0 * x.cbrt();
    let mut k_total = ((x - nu).max(0.0) + delta).ceil() as i64;
    if k_total % 2 == 1 {
        k_total += 1;
    }
    let half = (k_total / 2) as usize;

    // c_k = (nu + 2k) g_k with g_k = Gamma(nu+k) / (k! Gamma(nu+1)); c_0 = 1.
    // g is carried in the wide representation and stepped downward via
    // g_{k-1} = g_k * k / (nu + k - 1).
    let mut g = Wide::from_ln(
        ln_gamma(nu + half as f64) - ln_gamma(half as f64 + 1.0) - ln_gamma(nu + 1.0),
        1.0,
    );

    let mut jp = 0.0f64; // order nu + k_total + 1
    let mut jc = 1.0e-30f64; // order nu + k_total
    let mut sum = Wide::zero();
    let mut scale_events: i64 = 0;

    let mut i = k_total;
    loop {
        // accumulate at even offsets
        if i % 2 == 0 {
            let k = (i / 2) as usize;
            let c = if k == 0 {
                Wide { m: 1.0, e: 0 }
            } else {
                g.mul_f64(nu + i as f64)
            };
            let mut term = c.mul_f64(jc);
            term.e += scale_events;
            sum.add(term);
            // step g_{k} -> g_{k-1}; g is never consulted at k = 0, where
            // the coefficient is exactly 1
            if k >= 2 {
                g = g.mul_f64(k as f64 / (nu + k as f64 - 1.0));
            }
        }
        if i == 0 {
            break;
        }
        // descend one order: j_{mu-1} = (2 mu / x) j_mu - j_{mu+1}
        let mu = nu + i as f64;
        let jn = (2.0 * mu / x) * jc - jp;
        jp = jc;
        jc = jn;
        i -= 1;
        if jc.abs() > 1e260 {
            jc *= WIDE_DOWN;
            jp *= WIDE_DOWN;
            scale_events += 1;
        }
    }

    if sum.m == 0.0 || jc == 0.0 {
        return 0.0;
    }
    // J_nu = j_nu * (x/2)^nu / (Gamma(nu+1) * S)
    let ln_t = nu * (0.5 * x).ln() - ln_gamma(nu + 1.0);
    let jc_w = Wide {
        m: jc,
        e: scale_events,
    };
    let ln_val = ln_t + jc_w.ln_abs() - sum.ln_abs();
    if ln_val < -745.0 {
        return 0.0;
    }
    let sign = jc.signum() * sum.m.signum();
    sign * ln_val.exp()
}

/// Classify `(nu, r)` into the envelope regime and return the bound.
///
/// Priority when clauses overlap: oscillatory > exponential >
/// turning-above > turning-below > origin. For `nu < 1` only the origin
/// clause applies. Gaps return `Unclassified`, never an error.
pub fn decay_bound(order: BesselOrder, r: f64) -> RegimeBound {
    let nu = order.get();
    if nu >= 1.0 {
        if r >= 2.0 * nu {
            return RegimeBound {
                regime: Regime::Oscillatory,
                bound: 1.0 / r.sqrt(),
            };
        }
        if r <= 0.5 * nu {
            return RegimeBound {
                regime: Regime::Exponential,
                bound: 1.0 / nu,
            };
        }
        let nu_third = nu.cbrt();
        let rho = (r - nu).abs() / nu_third;
        if r >= nu && rho <= 1.5 * nu.powf(2.0 / 3.0) {
            return RegimeBound {
                regime: Regime::TurningPointAbove,
                bound: 1.0 / (rho.powf(0.25) * nu_third),
            };
        }
        if r < nu && (1.0..=1.5 * nu.powf(2.0 / 3.0)).contains(&rho) {
            return RegimeBound {
                regime: Regime::TurningPointBelow,
                bound: 1.0 / (rho * nu_third),
            };
        }
    }
    if r <= 1.0f64.min(nu) && r > 0.0 {
        return RegimeBound {
            regime: Regime::Origin,
            bound: r.powf(nu),
        };
    }
    RegimeBound {
        regime: Regime::Unclassified,
        bound: f64::INFINITY,
    }
}

/// One row of the envelope verification report.
#[derive(Debug, Clone)]
pub struct EnvelopeRow {
    pub regime: Regime,
    pub nu: f64,
    pub worst_r: f64,
    pub max_ratio: f64,
    pub samples: usize,
}

/// Result of sweeping `|J_nu(r)| / bound` over each regime window.
#[derive(Debug, Clone, Default)]
pub struct EnvelopeReport {
    pub rows: Vec<EnvelopeRow>,
}

impl EnvelopeReport {
    /// Per-regime maximum ratio across all orders in the report.
    pub fn max_ratio(&self, regime: Regime) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.regime == regime)
            .map(|r| r.max_ratio)
            .fold(0.0, f64::max)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{:.6e},{:.12e},{:.12e}",
                    r.regime.label(),
                    r.nu,
                    r.worst_r,
                    r.max_ratio
                )
            })
            .collect()
    }
}

/// Sweep the five envelope windows for each order in `nu_grid`.
///
/// Orders outside [1, 200] are skipped. `sample_density` is clamped to at
/// least 64 samples per window. Always produces a report; the acceptance
/// suite asserts the ratios.
pub fn verify_decay_envelope(nu_grid: &[f64], sample_density: usize) -> EnvelopeReport {
    let n = sample_density.max(64);
    let mut report = EnvelopeReport::default();
    for &nu in nu_grid {
        if !(1.0..=200.0).contains(&nu) {
            continue;
        }
        let order = BesselOrder(nu);
        let nu_third = nu.cbrt();
        let nu_23 = nu.powf(2.0 / 3.0);

        // oscillatory: r in [2nu, 2nu + 100]
        report.rows.push(sweep_window(
            Regime::Oscillatory,
            nu,
            (0..=n).map(|i| 2.0 * nu + 100.0 * i as f64 / n as f64),
            |r| j_nu(nu, r).abs() * r.sqrt(),
        ));
        // exponential: r in (0, nu/2]
        report.rows.push(sweep_window(
            Regime::Exponential,
            nu,
            (1..=n).map(|i| 0.5 * nu * i as f64 / n as f64),
            |r| j_nu(nu, r).abs() * nu,
        ));
        // turning above: rho in (0, 1.5 nu^{2/3}]
        report.rows.push(sweep_window(
            Regime::TurningPointAbove,
            nu,
            (1..=n).map(|i| {
                let rho = 1.5 * nu_23 * i as f64 / n as f64;
                nu + rho * nu_third
            }),
            |r| {
                let rho = (r - nu) / nu_third;
                j_nu(nu, r).abs() * rho.powf(0.25) * nu_third
            },
        ));
        // turning below: rho in [1, min(1.5 nu^{2/3}, rho with r > 0)]
        let rho_hi = (1.5 * nu_23).min((nu - 1e-9) / nu_third);
        if rho_hi >= 1.0 {
            report.rows.push(sweep_window(
                Regime::TurningPointBelow,
                nu,
                (0..=n).map(move |i| {
                    let rho = 1.0 + (rho_hi - 1.0) * i as f64 / n as f64;
                    nu - rho * nu_third
                }),
                |r| {
                    let rho = (nu - r) / nu_third;
                    j_nu(nu, r).abs() * rho * nu_third
                },
            ));
        }
        // origin: r in (0, min(1, nu)]
        let r_hi = 1.0f64.min(nu);
        report.rows.push(sweep_window(
            Regime::Origin,
            nu,
            (1..=n).map(move |i| r_hi * i as f64 / n as f64),
            |r| j_nu(nu, r).abs() / r.powf(nu),
        ));
        let _ = order;
    }
    report
}

fn sweep_window(
    regime: Regime,
    nu: f64,
    rs: impl Iterator<Item = f64>,
    ratio: impl Fn(f64) -> f64,
) -> EnvelopeRow {
    let mut max_ratio = 0.0;
    let mut worst_r = f64::NAN;
    let mut samples = 0;
    for r in rs {
        if r <= 0.0 {
            continue;
        }
        samples += 1;
        let q = ratio(r);
        if q > max_ratio {
            max_ratio = q;
            worst_r = r;
        }
    }
    EnvelopeRow {
        regime,
        nu,
        worst_r,
        max_ratio,
        samples,
    }
}
