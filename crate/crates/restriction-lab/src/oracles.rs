//! Independent reference implementations backing the verification suite.
//!
//! Everything here is deliberately decoupled from the production
//! evaluation paths: the Bessel oracle is a compensated ascending series
//! in double-double arithmetic, immune to the cancellation that limits a
//! plain f64 series near `x = 30`. It is slow and only trusted for
//! `x <= 30`.

/// Unevaluated double-double value `hi + lo`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let err = a.mul_add(b, -p);
    Dd { hi: p, lo: err }
}

impl Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let r = two_sum(s.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        let r = two_sum(p.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.add(other.mul(Dd::from(-q1)));
        let q2 = r.hi / other.hi;
        let r2 = r.add(other.mul(Dd::from(-q2)));
        let q3 = r2.hi / other.hi;
        let q = two_sum(q1, q2);
        Dd {
            hi: q.hi,
            lo: q.lo + q3,
        }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn abs_f64(self) -> f64 {
        self.to_f64().abs()
    }
}

/// Ascending-series oracle for `J_nu(x)`, trustworthy for `x <= 30`.
///
/// Terms are carried in double-double so that the large intermediate
/// terms (up to ~1e11 at `x = 30`) cancel without destroying the result.
/// The leading factor `(x/2)^nu / Gamma(nu+1)` enters as a common scale
/// at f64 accuracy, which does not participate in the cancellation.
pub fn bessel_series(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "oracle domain");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let ln_t0 = nu * (0.5 * x).ln() - crate::quadrature::ln_gamma(nu + 1.0);
    if ln_t0 < -745.0 {
        return 0.0;
    }
    let q = {
        let xx = two_prod(x, x);
        Dd {
            hi: 0.25 * xx.hi,
            lo: 0.25 * xx.lo,
        }
    };
    // run the series with unit leading term, scale at the end
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    let mut peak = 1.0f64;
    for m in 0..500u32 {
        let mf = m as f64;
        let denom = two_prod(mf + 1.0, 1.0)
            .mul(two_sum(nu, mf + 1.0));
        term = term.mul(q).div(denom).neg();
        sum = sum.add(term);
        peak = peak.max(term.abs_f64());
        if term.abs_f64() < 1e-35 * sum.abs_f64().max(1e-30) && term.abs_f64() < 1e-30 * peak {
            break;
        }
    }
    let scale = if nu == 0.0 {
        1.0
    } else if nu == 1.0 {
        0.5 * x
    } else {
        ln_t0.exp()
    };
    scale * sum.to_f64()
}

/// Closed form `J_{1/2}(x) = sqrt(2/(pi x)) sin x`.
pub fn bessel_half_order(x: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin()
}
