//! The smooth-density limit function `rho` and the semi-asymptotic exponent.
//!
//! `rho` is the continuous solution of `v rho'(v) = -rho(v - 1)` with
//! `rho = 1` on `[0, 1]`; the density of `M`-smooth integers up to `N`
//! approaches `rho(log N / log M)`. On `[1, 2]` it equals `1 - log u` in
//! closed form, and for large `u` it decays like `u^{-u}`.
//!
//! The solver works one unit interval at a time, but not through the textbook
//! recursion `rho(u) = rho(k) - int_k^u rho(t-1)/t dt`: that form subtracts
//! nearly equal quantities and loses roughly `log10(rho(k)/rho(k+1))` digits
//! per interval, turning the tail negative in double precision near `u = 15`.
//! Instead we integrate the equivalent identity
//!
//! ```text
//!     u * rho(u) = int_{u-1}^{u} rho(t) dt
//! ```
//!
//! (both sides have derivative `rho(u) - rho(u-1)`, and they agree at `u = 1`),
//! whose right side is a sum of positive terms. On each interval the unknown
//! appears under the integral, so the node values are obtained by fixed-point
//! sweeps; the contraction factor is at most `1/(k+1)`. Node derivatives are
//! exact from the defining equation, and evaluation between nodes is cubic
//! Hermite interpolation.

use std::sync::OnceLock;

use crate::error::{check_int, invalid, Error, Result};
use crate::numbertheory;

/// Nodes per unit interval. 256 panels put the interpolation error orders of
/// magnitude below the default tolerance of 1e-9.
const PANELS: usize = 256;

const MAX_U_MAX: f64 = 100.0;

/// Tabulated solution of the delay equation on `[0, u_max]`.
#[derive(Debug, Clone)]
pub struct DickmanTable {
    u_max: f64,
    tolerance: f64,
    /// `intervals[k - 1]` covers `[k, k + 1]`: node values and derivatives.
    intervals: Vec<Interval>,
}

#[derive(Debug, Clone)]
struct Interval {
    y: Vec<f64>,
    d: Vec<f64>,
}

impl DickmanTable {
    /// Solve up to `u_max` (at least 2, at most 100 so values stay
    /// representable) with the given accuracy target.
    pub fn new(u_max: f64, tolerance: f64) -> Result<Self> {
        if !u_max.is_finite() || !(2.0..=MAX_U_MAX).contains(&u_max) {
            return Err(invalid(format!("u_max must lie in [2, {MAX_U_MAX}], got {u_max}")));
        }
        if !tolerance.is_finite() || !(1e-11..=1e-3).contains(&tolerance) {
            return Err(invalid(format!("tolerance must lie in [1e-11, 1e-3], got {tolerance}")));
        }
        let last = u_max.ceil() as usize;
        let h = 1.0 / PANELS as f64;
        let mut intervals: Vec<Interval> = Vec::with_capacity(last);
        // Predecessor of [1, 2] is the constant 1 on [0, 1].
        let mut prev_y = vec![1.0; PANELS + 1];
        let mut prev_d = vec![0.0; PANELS + 1];
        for k in 1..=last {
            let kf = k as f64;
            // Suffix integrals of the predecessor: t[i] = int over [k-1+i*h, k].
            // Right-to-left so every addition is of positive panel masses.
            let mut t = vec![0.0; PANELS + 1];
            for i in (0..PANELS).rev() {
                t[i] = t[i + 1] + panel(h, prev_y[i], prev_y[i + 1], prev_d[i], prev_d[i + 1]);
            }
            let u: Vec<f64> = (0..=PANELS).map(|i| kf + i as f64 * h).collect();
            // Derivatives are exact: rho'(u_i) = -rho(u_i - 1) / u_i, and
            // u_i - 1 is node i of the predecessor.
            let d: Vec<f64> = (0..=PANELS).map(|i| -prev_y[i] / u[i]).collect();
            let mut y = vec![prev_y[PANELS]; PANELS + 1];
            for _ in 0..400 {
                let mut c = 0.0;
                let mut change: f64 = 0.0;
                for i in 0..PANELS {
                    c += panel(h, y[i], y[i + 1], d[i], d[i + 1]);
                    let v = (t[i + 1] + c) / u[i + 1];
                    change = change.max((v - y[i + 1]).abs() / v.abs().max(f64::MIN_POSITIVE));
                    y[i + 1] = v;
                }
                if change < 1e-15 {
                    break;
                }
            }
            intervals.push(Interval { y: y.clone(), d: d.clone() });
            prev_y = y;
            prev_d = d;
        }
        Ok(Self { u_max, tolerance, intervals })
    }

    /// The shared default table: `u_max = 50`, tolerance `1e-9`.
    pub fn standard() -> &'static DickmanTable {
        static STANDARD: OnceLock<DickmanTable> = OnceLock::new();
        STANDARD.get_or_init(|| DickmanTable::new(50.0, 1e-9).expect("default parameters are valid"))
    }

    #[must_use]
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    #[must_use]
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `rho(u)` for `0 <= u <= u_max`.
    pub fn rho(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(invalid(format!("rho argument must be finite and nonnegative, got {u}")));
        }
        if u > self.u_max {
            return Err(Error::OutOfRange { arg: u, max: self.u_max });
        }
        if u <= 1.0 {
            return Ok(1.0);
        }
        let (iv, i, s, _) = self.locate(u);
        let h = 1.0 / PANELS as f64;
        let (h00, h10, h01, h11) = hermite(s);
        Ok(h00 * iv.y[i] + h10 * h * iv.d[i] + h01 * iv.y[i + 1] + h11 * h * iv.d[i + 1])
    }

    /// `log rho(u)`, usable deep in the tail where `rho` itself underflows
    /// ordinary tolerances.
    pub fn log_rho(&self, u: f64) -> Result<f64> {
        Ok(self.rho(u)?.ln())
    }

    /// Derivative of the interpolant; equals `-rho(u-1)/u` exactly at nodes.
    pub fn derivative(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(invalid(format!("derivative argument must be nonnegative, got {u}")));
        }
        if u > self.u_max {
            return Err(Error::OutOfRange { arg: u, max: self.u_max });
        }
        if u < 1.0 {
            return Ok(0.0);
        }
        let (iv, i, s, _) = self.locate(u.max(1.0));
        let h = 1.0 / PANELS as f64;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        Ok((d00 * iv.y[i] + d01 * iv.y[i + 1]) / h + d10 * iv.d[i] + d11 * iv.d[i + 1])
    }

    /// Worst delay-equation residual `|u rho'(u) + rho(u-1)|` over all
    /// interpolation nodes in `[1, u_max]`.
    pub fn node_residual_max(&self) -> f64 {
        let h = 1.0 / PANELS as f64;
        let mut worst: f64 = 0.0;
        for (ki, iv) in self.intervals.iter().enumerate() {
            let k = (ki + 1) as f64;
            for i in 0..=PANELS {
                let u = k + i as f64 * h;
                if u > self.u_max {
                    break;
                }
                let back = self.rho(u - 1.0).expect("u - 1 within range");
                worst = worst.max((u * iv.d[i] + back).abs());
            }
        }
        worst
    }

    fn locate(&self, u: f64) -> (&Interval, usize, f64, f64) {
        let k = (u.floor() as usize).clamp(1, self.intervals.len());
        let iv = &self.intervals[k - 1];
        let t = (u - k as f64) * PANELS as f64;
        let i = (t.floor() as usize).min(PANELS - 1);
        (iv, i, t - i as f64, k as f64)
    }
}

fn hermite(s: f64) -> (f64, f64, f64, f64) {
    let oms = 1.0 - s;
    (
        (1.0 + 2.0 * s) * oms * oms,
        s * oms * oms,
        s * s * (3.0 - 2.0 * s),
        s * s * (s - 1.0),
    )
}

/// Trapezoid with endpoint-derivative correction; exact through cubics.
#[inline]
fn panel(h: f64, ya: f64, yb: f64, da: f64, db: f64) -> f64 {
    h / 2.0 * (ya + yb) + h * h / 12.0 * (da - db)
}

/// Smooth-density approximation `Psi(N, M) / N ~ rho(log N / log M)`.
pub fn psi_star_dickman(n: u64, m: u64, table: &DickmanTable) -> Result<f64> {
    check_int(n)?;
    if m < 2 || n < m {
        return Err(invalid(format!("density approximation requires N >= M >= 2, got N = {n}, M = {m}")));
    }
    let u = (n as f64).ln() / (m as f64).ln();
    table.rho(u)
}

/// The density exponent `alpha(x, y) = log(1 + y / log x) / log y`, with a
/// flag recording whether `(x, y)` lies in the zone `y > log x` where the
/// scaling law `Psi(a x, y) ~ a^alpha Psi(x, y)` is asserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha {
    pub value: f64,
    pub in_zone: bool,
}

pub fn semiasymptotic_alpha(x: f64, y: f64) -> Result<Alpha> {
    if !x.is_finite() || x <= std::f64::consts::E {
        return Err(invalid(format!("alpha requires x > e, got {x}")));
    }
    if !y.is_finite() || y <= 1.0 {
        return Err(invalid(format!("alpha requires y > 1, got {y}")));
    }
    let value = (1.0 + y / x.ln()).ln() / y.ln();
    Ok(Alpha { value, in_zone: y > x.ln() })
}

/// Empirical check of the scaling law on exact counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiAsymptoticCheck {
    /// `Psi(a x, y) / (a^alpha Psi(x, y))`; the law predicts `1 + O(1/ubar)`.
    pub ratio: f64,
    /// `1 / ubar = log y / min(log x, y)`, the error scale of the law.
    pub inv_ubar: f64,
    pub alpha: Alpha,
    pub psi_scaled: u64,
    pub psi_base: u64,
}

pub fn check_semiasymptotic(x: u64, a: u64, y: u64) -> Result<SemiAsymptoticCheck> {
    check_int(x)?;
    if x < 3 {
        return Err(invalid(format!("scaling check requires x >= 3, got {x}")));
    }
    if a == 0 {
        return Err(invalid("scale factor a must be at least 1"));
    }
    if y < 2 {
        return Err(invalid(format!("smooth threshold y must be at least 2, got {y}")));
    }
    let ax = x.checked_mul(a).ok_or(Error::Overflow(x))?;
    check_int(ax)?;
    let alpha = semiasymptotic_alpha(x as f64, y as f64)?;
    let psi_scaled = numbertheory::psi_count(ax, y)?;
    let psi_base = numbertheory::psi_count(x, y)?;
    let ratio = psi_scaled as f64 / ((a as f64).powf(alpha.value) * psi_base as f64);
    let xf = x as f64;
    let inv_ubar = (y as f64).ln() / xf.ln().min(y as f64);
    Ok(SemiAsymptoticCheck { ratio, inv_ubar, alpha, psi_scaled, psi_base })
}
