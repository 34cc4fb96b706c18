//! Closed-form growth estimates for the expected supremum.
//!
//! Everything here evaluates formulas: no sampling, no search. The central
//! quantity is `E sup_t |D(t)|` for the signed polynomial over a smooth or
//! prime-leading support, normalized by explicit powers of `N`, `tau`, and
//! their logarithms (natural throughout). Constants in front are collected
//! in [`ConstantPolicy`], and every evaluator answers with a [`BoundReport`]
//! that echoes the formula, the inputs it consumed, and the constants in
//! force, so a value can always be traced back to its curve.
//!
//! The three-case upper estimate and its companion lower estimate tell the
//! main story: the expected supremum sits near `N^{1/2-sigma} sqrt(tau)` with
//! logarithmic corrections that switch at `tau ~ sqrt(N)/log N` and
//! `tau ~ sqrt(N)`. The remaining evaluators cover the smooth-zone pair,
//! the exact `l1` envelope of the sieved support, the block, multiplicative
//! and coprime lower devices, and the optimizing cutoff for unit weights.

use serde::Serialize;

use crate::dickman::DickmanTable;
use crate::error::{check_int, invalid, Result};
use crate::numbertheory::{e_tau, PrimeTable};
use crate::polynomial::DirichletSpec;

/// Multiplicative constants left free by the asymptotic statements.
///
/// `c` scales every bound evaluator; `khintchine` is the sharp first-moment
/// constant `1/sqrt(2)` relating `E|sum eps_k x_k|` to the root of the
/// second moment, used by the block lower device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantPolicy {
    pub c: f64,
    pub khintchine: f64,
}

impl Default for ConstantPolicy {
    fn default() -> Self {
        Self { c: 1.0, khintchine: std::f64::consts::FRAC_1_SQRT_2 }
    }
}

/// Which growth regime a `(N, tau)` pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthCase {
    /// `tau >= sqrt(N)`: supremum grows like `N^{1/2-sigma} (tau / log N)^{1/2}`.
    LargeTau,
    /// `sqrt(N)/log N <= tau < sqrt(N)`: a `tau`-independent plateau
    /// `N^{3/4-sigma} / (log N)^{1/2}`.
    MediumTau,
    /// `tau < sqrt(N)/log N`: every frequency contributes fully,
    /// `N^{1/2-sigma} tau^{1/2}`.
    SmallTau,
}

impl std::fmt::Display for GrowthCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GrowthCase::LargeTau => "large-tau",
            GrowthCase::MediumTau => "medium-tau",
            GrowthCase::SmallTau => "small-tau",
        })
    }
}

/// Names the curve a [`BoundReport`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// Case-selected upper estimate in `(N, tau, sigma)`.
    GrowthUpper,
    /// Density-weighted lower estimate `N^{1/2-s} (tau/log tau)^{1/2} psi^{1/2}`.
    GrowthLower,
    /// Smooth-zone lower half, caller-supplied density.
    SmoothZoneLower,
    /// Smooth-zone upper half `N^{1/2-s} tau^{1/2} psi^{1/2}`.
    SmoothZoneUpper,
    /// Exact `sum n^{-sigma}` over the sieved support.
    L1Envelope,
    /// Khintchine first moment summed over half-turn blocks.
    BlockLower,
    /// Multiplicative-weight device over the upper half of the primes.
    MultiplicativeLower,
    /// Best coprime split device.
    CoprimeLower,
}

impl std::fmt::Display for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formula::GrowthUpper => "growth-upper",
            Formula::GrowthLower => "growth-lower",
            Formula::SmoothZoneLower => "smooth-zone-lower",
            Formula::SmoothZoneUpper => "smooth-zone-upper",
            Formula::L1Envelope => "l1-envelope",
            Formula::BlockLower => "block-lower",
            Formula::MultiplicativeLower => "multiplicative-lower",
            Formula::CoprimeLower => "coprime-lower",
        })
    }
}

/// One evaluated bound: which formula, what it was fed, what came out, and
/// the constants in force. Fields a formula has no use for stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub formula: Formula,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Real-valued so the regime seams can be probed exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub sigma: f64,
    /// Formula-specific input echoed back: the density for the lower
    /// curves, the Dickman argument for the smooth-zone upper.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<GrowthCase>,
    /// Smooth-zone curves: does `tau` clear `exp((log log N)^2)`?
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
    /// Multiplicative device: weights failed a coprime spot check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<bool>,
    /// Coprime device: no split into two nonempty parts exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    pub policy: ConstantPolicy,
}

impl BoundReport {
    fn bare(formula: Formula, value: f64, sigma: f64, policy: &ConstantPolicy) -> Self {
        Self {
            formula,
            value,
            n: None,
            tau: None,
            sigma,
            auxiliary: None,
            case: None,
            valid: None,
            warning: None,
            degenerate: None,
            policy: *policy,
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || !(0.0..0.5).contains(&sigma) {
        return Err(invalid(format!("sigma must lie in [0, 1/2), got {sigma}")));
    }
    Ok(())
}

fn check_n(n: u64) -> Result<f64> {
    check_int(n)?;
    if n < 2 {
        return Err(invalid(format!("N must be at least 2, got {n}")));
    }
    Ok(n as f64)
}

/// Classify `(N, tau)` into its growth regime.
pub fn growth_case(n: u64, tau: usize) -> Result<GrowthCase> {
    let nf = check_n(n)?;
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    let tf = tau as f64;
    let sq = nf.sqrt();
    Ok(if tf >= sq {
        GrowthCase::LargeTau
    } else if tf >= sq / nf.ln() {
        GrowthCase::MediumTau
    } else {
        GrowthCase::SmallTau
    })
}

/// The case formula itself, with a real-valued `tau` so seams can be
/// evaluated exactly. The three expressions agree at the regime boundaries
/// `tau = sqrt(N)` and `tau = sqrt(N)/log N`.
pub fn upper_main_at(case: GrowthCase, n: u64, tau: f64, sigma: f64, policy: &ConstantPolicy) -> Result<f64> {
    let nf = check_n(n)?;
    check_sigma(sigma)?;
    if !tau.is_finite() || tau <= 0.0 {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    let ln_n = nf.ln();
    let v = match case {
        GrowthCase::LargeTau => nf.powf(0.5 - sigma) * (tau / ln_n).sqrt(),
        GrowthCase::MediumTau => nf.powf(0.75 - sigma) / ln_n.sqrt(),
        GrowthCase::SmallTau => nf.powf(0.5 - sigma) * tau.sqrt(),
    };
    Ok(policy.c * v)
}

/// Upper estimate for `E sup |D|` over the support of integers up to `N`
/// whose prime factors lie among the first `tau` primes.
pub fn upper_main(n: u64, tau: usize, sigma: f64, policy: &ConstantPolicy) -> Result<BoundReport> {
    let case = growth_case(n, tau)?;
    let value = upper_main_at(case, n, tau as f64, sigma, policy)?;
    let mut r = BoundReport::bare(Formula::GrowthUpper, value, sigma, policy);
    r.n = Some(n);
    r.tau = Some(tau as f64);
    r.case = Some(case);
    Ok(r)
}

/// Lower estimate `c N^{1/2-sigma} (tau / log tau)^{1/2} (psi_star)^{1/2}`,
/// where `psi_star` is the smooth density of the support (exact count over
/// `N`, or its limit approximation). Needs `tau >= 2` so `log tau > 0`.
pub fn lower_main(n: u64, tau: usize, sigma: f64, psi_star: f64, policy: &ConstantPolicy) -> Result<BoundReport> {
    let nf = check_n(n)?;
    check_sigma(sigma)?;
    if tau < 2 {
        return Err(invalid(format!("lower estimate needs tau >= 2, got {tau}")));
    }
    check_psi(psi_star)?;
    let tf = tau as f64;
    let value = policy.c * nf.powf(0.5 - sigma) * (tf / tf.ln()).sqrt() * psi_star.sqrt();
    let mut r = BoundReport::bare(Formula::GrowthLower, value, sigma, policy);
    r.n = Some(n);
    r.tau = Some(tf);
    r.auxiliary = Some(psi_star);
    Ok(r)
}

fn check_psi(psi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(invalid(format!("a smooth density must lie in [0, 1], got {psi}")));
    }
    Ok(())
}

/// Threshold `exp((log log N)^2)` separating the asymptotic regime of the
/// smooth-zone estimates from small `tau`.
pub fn smooth_upper_threshold(n: u64) -> Result<f64> {
    let nf = check_n(n)?;
    if n < 3 {
        return Err(invalid("threshold needs N >= 3 so log log N is real"));
    }
    Ok(nf.ln().ln().powi(2).exp())
}

/// The smooth-zone estimate pair, with the densities supplied by the caller
/// (exact counts or Dickman values): the lower curve is
/// `c N^{1/2-sigma} (tau/log tau)^{1/2} psi_lower^{1/2}` and the upper is
/// `c N^{1/2-sigma} tau^{1/2} psi_upper^{1/2}`. Both reports carry the same
/// validity flag, true only when `tau` clears `exp((log log N)^2)`; below
/// that the formulas still evaluate but sit outside their asserted zone.
pub fn smooth_zone_bounds(
    n: u64,
    tau: usize,
    sigma: f64,
    psi_lower: f64,
    psi_upper: f64,
    policy: &ConstantPolicy,
) -> Result<(BoundReport, BoundReport)> {
    let nf = check_n(n)?;
    check_sigma(sigma)?;
    if n < 3 {
        return Err(invalid("smooth-zone estimates need N >= 3"));
    }
    if tau < 2 {
        return Err(invalid(format!("smooth-zone estimates need tau >= 2, got {tau}")));
    }
    check_psi(psi_lower)?;
    check_psi(psi_upper)?;
    let tf = tau as f64;
    let valid = tf > smooth_upper_threshold(n)?;
    let scale = policy.c * nf.powf(0.5 - sigma);
    let mut lower = BoundReport::bare(
        Formula::SmoothZoneLower,
        scale * (tf / tf.ln()).sqrt() * psi_lower.sqrt(),
        sigma,
        policy,
    );
    lower.n = Some(n);
    lower.tau = Some(tf);
    lower.auxiliary = Some(psi_lower);
    lower.valid = Some(valid);
    let mut upper = BoundReport::bare(
        Formula::SmoothZoneUpper,
        scale * tf.sqrt() * psi_upper.sqrt(),
        sigma,
        policy,
    );
    upper.n = Some(n);
    upper.tau = Some(tf);
    upper.auxiliary = Some(psi_upper);
    upper.valid = Some(valid);
    Ok((lower, upper))
}

/// Smooth-zone upper estimate with the density taken from the Dickman
/// function: `c N^{1/2-sigma} tau^{1/2} rho(u)^{1/2}` with
/// `u = log(N/p_tau^2)/log p_tau`, echoed in `auxiliary`. Requires
/// `p_tau^2 <= N/2` so the interior interval is nondegenerate.
pub fn upper_smooth(
    n: u64,
    tau: usize,
    sigma: f64,
    table: &PrimeTable,
    dickman: &DickmanTable,
    policy: &ConstantPolicy,
) -> Result<BoundReport> {
    let nf = check_n(n)?;
    check_sigma(sigma)?;
    if n < 3 {
        return Err(invalid("smooth upper estimate needs N >= 3"));
    }
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    let p_tau = table
        .prime(tau)
        .ok_or_else(|| invalid(format!("prime table holds {} primes, need {tau}", table.len())))?;
    let p2 = p_tau
        .checked_mul(p_tau)
        .filter(|&sq| sq <= n / 2)
        .ok_or_else(|| {
            invalid(format!(
                "tau = {tau} is too large: p_tau^2 = {p_tau}^2 must be at most N/2 = {}",
                n / 2
            ))
        })?;
    let u = (nf / p2 as f64).ln() / (p_tau as f64).ln();
    let rho = dickman.rho(u)?;
    let mut r = BoundReport::bare(
        Formula::SmoothZoneUpper,
        policy.c * nf.powf(0.5 - sigma) * (tau as f64).sqrt() * rho.sqrt(),
        sigma,
        policy,
    );
    r.n = Some(n);
    r.tau = Some(tau as f64);
    r.auxiliary = Some(u);
    r.valid = Some((tau as f64) > smooth_upper_threshold(n)?);
    Ok(r)
}

/// Ratio of the upper to the lower estimate once the bounded density and
/// `log`-comparison factors are absorbed into constants:
/// 1 in the large-`tau` regime, `N^{1/4}/sqrt(tau)` on the plateau
/// (at most `sqrt(log N)` there), and `sqrt(log tau)` for small `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRatio {
    pub ratio: f64,
    pub case: GrowthCase,
}

pub fn gap_ratio(n: u64, tau: usize) -> Result<GapRatio> {
    let nf = check_n(n)?;
    if tau < 2 {
        return Err(invalid(format!("gap ratio needs tau >= 2, got {tau}")));
    }
    let case = growth_case(n, tau)?;
    let tf = tau as f64;
    let ratio = match case {
        GrowthCase::LargeTau => 1.0,
        GrowthCase::MediumTau => nf.powf(0.25) / tf.sqrt(),
        GrowthCase::SmallTau => tf.ln().sqrt(),
    };
    Ok(GapRatio { ratio, case })
}

/// The exact envelope `L(N, tau) = sum_{n in E_tau} n^{-sigma}` over the
/// sieved `tau`-smooth support: no supremum of the signed polynomial with
/// unit coefficients can exceed it. At `sigma = 0` this is the member count
/// itself.
pub fn l1_bound(n: u64, tau: usize, sigma: f64, table: &PrimeTable) -> Result<BoundReport> {
    check_sigma(sigma)?;
    let set = e_tau(n, tau, table)?;
    let value = set.members().iter().map(|&m| (m as f64).powf(-sigma)).sum();
    let mut r = BoundReport::bare(Formula::L1Envelope, value, sigma, &ConstantPolicy::default());
    r.n = Some(n);
    r.tau = Some(tau as f64);
    Ok(r)
}

/// For unit weights (`d = 1`, `sigma = 0`) the cutoff that balances the
/// two regimes maximizing the gain over the trivial envelope:
/// `log tau = ((log N / 2) log log N)^{1/2}`. The same expression is the
/// natural log of the gain factor itself, i.e. the gain is
/// `exp((1/sqrt 2)(log N log log N)^{1/2})` up to lower order.
pub fn balanced_cutoff_log_tau(log_n: f64) -> Result<f64> {
    if !log_n.is_finite() || log_n <= 1.0 {
        return Err(invalid(format!("log N must exceed 1, got {log_n}")));
    }
    Ok((log_n / 2.0 * log_n.ln()).sqrt())
}

/// The optimizing cutoff itself, `tau = exp(((log N / 2) log log N)^{1/2})`,
/// for real `N >= 16` (so `log log N` is safely positive). Scales far past
/// any sievable range, which is the point: the cutoff is a shape statement.
pub fn rudin_shapiro_tau(n: f64) -> Result<f64> {
    if !n.is_finite() || n < 16.0 {
        return Err(invalid(format!("the optimizing cutoff needs N >= 16, got {n}")));
    }
    Ok(balanced_cutoff_log_tau(n.ln())?.exp())
}

/// Integer-`N` form of [`rudin_shapiro_tau`] keeping both the cutoff and
/// its log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalancedCutoff {
    pub log_tau: f64,
    pub tau: f64,
}

pub fn balanced_cutoff(n: u64) -> Result<BalancedCutoff> {
    let nf = check_n(n)?;
    if n < 16 {
        return Err(invalid(format!("balanced cutoff needs N >= 16, got {n}")));
    }
    let log_tau = balanced_cutoff_log_tau(nf.ln())?;
    Ok(BalancedCutoff { log_tau, tau: log_tau.exp() })
}

/// Expected-value lower device over the half-turn lattice: blocks indexed
/// by the leading prime ordinal each contribute an independent first
/// moment, so `E sup >= kappa sum_j (sum_{n in L_j} w_n^2)^{1/2}`. Terms
/// outside the block structure do not reach the restricted polynomial and
/// are dropped, mirroring the exact lattice supremum.
pub fn block_expected_lower(spec: &DirichletSpec, tau: usize, policy: &ConstantPolicy) -> Result<BoundReport> {
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    let half = tau / 2;
    let mut blocks: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for i in 0..spec.len() {
        let ev = spec.exponents(i);
        let &(lead, a) = ev.last().expect("support elements are at least 2");
        let in_blocks = lead > half
            && lead <= tau
            && a == 1
            && (ev.len() < 2 || ev[ev.len() - 2].0 <= half);
        if in_blocks {
            let w = spec.weights()[i];
            *blocks.entry(lead).or_insert(0.0) += w * w;
        }
    }
    let value = policy.khintchine * blocks.values().map(|&s| s.sqrt()).sum::<f64>();
    let mut r = BoundReport::bare(Formula::BlockLower, value, spec.sigma(), policy);
    r.n = Some(spec.max_support());
    r.tau = Some(tau as f64);
    Ok(r)
}

/// `c N^{-sigma} sum_j d(p_j) B(N/p_j)^{1/2}` over `mu/2 < j <= mu`,
/// `mu = pi(N)`, where `B(m) = sum_{2 <= k <= m} d(k)^2`. Each prime in the
/// upper half leads a block of multiples `p_j k`, and the block's second
/// moment is `d(p_j)^2 B(N/p_j)` when `d` is multiplicative. Weights that
/// visibly fail `d(ab) = d(a) d(b)` on coprime spot checks set the
/// `warning` flag; the value is still computed.
pub fn multiplicative_lower(
    n: u64,
    d: &dyn Fn(u64) -> f64,
    sigma: f64,
    table: &PrimeTable,
    policy: &ConstantPolicy,
) -> Result<BoundReport> {
    let nf = check_n(n)?;
    check_sigma(sigma)?;
    let mu = table.pi(n)?;
    if mu == 0 {
        return Err(invalid(format!("no primes up to {n}")));
    }
    let half = mu / 2;
    let first = table.prime(half + 1).expect("half + 1 <= mu");
    let max_m = n / first;
    let mut prefix = vec![0.0f64; max_m as usize + 1];
    for k in 2..=max_m {
        let dk = d(k);
        if !dk.is_finite() {
            return Err(invalid(format!("weight d({k}) is not finite")));
        }
        prefix[k as usize] = prefix[k as usize - 1] + dk * dk;
    }
    let mut sum = 0.0;
    for j in half + 1..=mu {
        let p = table.prime(j).expect("j <= mu");
        let dp = d(p);
        if !dp.is_finite() {
            return Err(invalid(format!("weight d({p}) is not finite")));
        }
        sum += dp * prefix[(n / p) as usize].sqrt();
    }

    let mut warning = (d(1) - 1.0).abs() > 1e-9;
    for &(a, b) in &[(2u64, 3u64), (2, 5), (3, 5), (2, 9), (4, 3), (3, 7), (4, 5), (8, 3)] {
        if a * b <= n {
            let lhs = d(a * b);
            let rhs = d(a) * d(b);
            if (lhs - rhs).abs() > 1e-9 * (1.0 + lhs.abs().max(rhs.abs())) {
                warning = true;
            }
        }
    }
    let mut r = BoundReport::bare(Formula::MultiplicativeLower, policy.c * nf.powf(-sigma) * sum, sigma, policy);
    r.n = Some(n);
    r.warning = Some(warning);
    Ok(r)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// For pairwise coprime `P_1, ..., P_m`:
/// `prod_k (1 + P_k^{-2 sigma})^{1/2}` times the best split
/// `max_G sum_{j in G} P_j^{-sigma} / prod_{k in G} (1 + P_k^{-2 sigma})^{1/2}`
/// over subsets `G` with both `G` and its complement nonempty. The subset
/// maximum is exact (bitmask enumeration), so the set size is capped at 30.
/// A single-element set admits no split; its report is 0 with the
/// `degenerate` flag set.
pub fn coprime_lower(moduli: &[u64], sigma: f64, policy: &ConstantPolicy) -> Result<BoundReport> {
    check_sigma(sigma)?;
    if moduli.is_empty() {
        return Err(invalid("need at least one modulus"));
    }
    if moduli.len() > 30 {
        return Err(invalid(format!(
            "subset enumeration is exact and capped at 30 moduli, got {}",
            moduli.len()
        )));
    }
    for &p in moduli {
        if p < 2 {
            return Err(invalid(format!("moduli must be at least 2, got {p}")));
        }
        check_int(p)?;
    }
    for i in 0..moduli.len() {
        for j in i + 1..moduli.len() {
            if gcd(moduli[i], moduli[j]) != 1 {
                return Err(invalid(format!(
                    "moduli must be pairwise coprime: gcd({}, {}) > 1",
                    moduli[i], moduli[j]
                )));
            }
        }
    }
    let m = moduli.len();
    let mut r = BoundReport::bare(Formula::CoprimeLower, 0.0, sigma, policy);
    if m == 1 {
        r.degenerate = Some(true);
        return Ok(r);
    }
    let damp: Vec<f64> = moduli.iter().map(|&p| (p as f64).powf(-sigma)).collect();
    let half_var: Vec<f64> = damp.iter().map(|&x| (1.0 + x * x).sqrt()).collect();
    let outer: f64 = half_var.iter().product();
    let mut best = 0.0f64;
    for mask in 1u32..(1 << m) - 1 {
        let mut num = 0.0;
        let mut den = 1.0;
        for k in 0..m {
            if mask >> k & 1 == 1 {
                num += damp[k];
                den *= half_var[k];
            }
        }
        best = best.max(num / den);
    }
    r.value = policy.c * outer * best;
    r.degenerate = Some(false);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numbertheory::{divisor_count, l_j, psi_count};
    use crate::polynomial::{exact_sup_z, DirichletSpec, SignAssignment};
    use approx::assert_relative_eq;

    fn policy() -> ConstantPolicy {
        ConstantPolicy::default()
    }

    #[test]
    fn policy_defaults() {
        let p = policy();
        assert_eq!(p.c, 1.0);
        assert_relative_eq!(p.khintchine, 1.0 / 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn upper_worked_value_and_sigma_scaling() {
        let r = upper_main(10_000, 200, 0.0, &policy()).unwrap();
        assert_eq!(r.case, Some(GrowthCase::LargeTau));
        assert_eq!(r.formula, Formula::GrowthUpper);
        assert_eq!((r.n, r.tau), (Some(10_000), Some(200.0)));
        assert_relative_eq!(r.value, 465.9906, epsilon = 1e-3);
        let damped = upper_main(10_000, 200, 0.25, &policy()).unwrap();
        assert_relative_eq!(damped.value, r.value / 10.0, max_relative = 1e-12);
        let loud = ConstantPolicy { c: 2.5, ..policy() };
        let scaled = upper_main(10_000, 200, 0.0, &loud).unwrap();
        assert_relative_eq!(scaled.value, 2.5 * r.value, max_relative = 1e-15);
        assert_eq!(scaled.policy, loud);
    }

    #[test]
    fn case_selection_brackets() {
        // N = 10^4: sqrt(N) = 100, sqrt(N)/log N ~ 10.86.
        assert_eq!(growth_case(10_000, 200).unwrap(), GrowthCase::LargeTau);
        assert_eq!(growth_case(10_000, 100).unwrap(), GrowthCase::LargeTau);
        assert_eq!(growth_case(10_000, 50).unwrap(), GrowthCase::MediumTau);
        assert_eq!(growth_case(10_000, 11).unwrap(), GrowthCase::MediumTau);
        assert_eq!(growth_case(10_000, 10).unwrap(), GrowthCase::SmallTau);
        assert_eq!(growth_case(10_000, 5).unwrap(), GrowthCase::SmallTau);
        assert!(growth_case(10_000, 0).is_err());
        assert!(growth_case(1, 5).is_err());
    }

    #[test]
    fn cases_agree_at_seams() {
        let p = policy();
        for &(n, sigma) in &[(10_000u64, 0.0), (1_000_000, 0.3), (997, 0.45)] {
            let nf = n as f64;
            let seam_high = nf.sqrt();
            let a = upper_main_at(GrowthCase::LargeTau, n, seam_high, sigma, &p).unwrap();
            let b = upper_main_at(GrowthCase::MediumTau, n, seam_high, sigma, &p).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
            let seam_low = nf.sqrt() / nf.ln();
            let c = upper_main_at(GrowthCase::SmallTau, n, seam_low, sigma, &p).unwrap();
            let d = upper_main_at(GrowthCase::MediumTau, n, seam_low, sigma, &p).unwrap();
            assert_relative_eq!(c, d, max_relative = 1e-12);
        }
    }

    #[test]
    fn plateau_is_tau_independent() {
        let a = upper_main(10_000, 20, 0.1, &policy()).unwrap();
        let b = upper_main(10_000, 80, 0.1, &policy()).unwrap();
        assert_eq!(a.case, Some(GrowthCase::MediumTau));
        assert_eq!(b.case, Some(GrowthCase::MediumTau));
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn lower_worked_value_and_validation() {
        let r = lower_main(10_000, 100, 0.0, 1.0, &policy()).unwrap();
        assert_relative_eq!(r.value, 100.0 * 10.0 / 100.0f64.ln().sqrt(), max_relative = 1e-12);
        assert_eq!(r.formula, Formula::GrowthLower);
        assert_eq!(r.auxiliary, Some(1.0));
        // Monotone in the density argument.
        let half = lower_main(10_000, 100, 0.0, 0.5, &policy()).unwrap();
        assert_relative_eq!(half.value, r.value * 0.5f64.sqrt(), max_relative = 1e-12);
        assert!(lower_main(10_000, 1, 0.0, 1.0, &policy()).is_err());
        assert!(lower_main(10_000, 100, 0.0, 1.5, &policy()).is_err());
        assert!(lower_main(10_000, 100, 0.0, -0.1, &policy()).is_err());
    }

    #[test]
    fn smooth_zone_pair_shapes() {
        let p = policy();
        let n = 10_000u64;
        // With psi_upper = 1 the upper curve is the case-free N^{1/2-s} tau^{1/2}.
        let (lo, hi) = smooth_zone_bounds(n, 50, 0.1, 0.25, 1.0, &p).unwrap();
        let nf = n as f64;
        assert_relative_eq!(hi.value, nf.powf(0.4) * 50.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            lo.value,
            nf.powf(0.4) * (50.0f64 / 50.0f64.ln()).sqrt() * 0.5,
            max_relative = 1e-12
        );
        assert_eq!(lo.formula, Formula::SmoothZoneLower);
        assert_eq!(hi.formula, Formula::SmoothZoneUpper);
        // tau = 50 sits far below exp((log log 10^4)^2) ~ 124.6.
        assert_eq!((lo.valid, hi.valid), (Some(false), Some(false)));
        let (lo, hi) = smooth_zone_bounds(n, 200, 0.1, 0.25, 1.0, &p).unwrap();
        assert_eq!((lo.valid, hi.valid), (Some(true), Some(true)));
        assert!(smooth_zone_bounds(n, 1, 0.1, 0.5, 0.5, &p).is_err());
        assert!(smooth_zone_bounds(n, 50, 0.1, 1.5, 0.5, &p).is_err());
        assert!(smooth_zone_bounds(n, 50, 0.1, 0.5, -0.1, &p).is_err());
    }

    #[test]
    fn smooth_upper_flag_is_false_for_all_admissible_tau_at_a_million() {
        let n = 1_000_000u64;
        let table = PrimeTable::sieve(n).unwrap();
        let dick = DickmanTable::standard();
        let thresh = smooth_upper_threshold(n).unwrap();
        assert_relative_eq!(thresh, 987.1, epsilon = 0.2);
        let mut admissible = 0;
        for tau in 1..400usize {
            match upper_smooth(n, tau, 0.0, &table, dick, &policy()) {
                Ok(r) => {
                    admissible += 1;
                    assert_eq!(r.valid, Some(false), "flag set at tau = {tau} below threshold {thresh}");
                    assert!(r.value > 0.0);
                }
                Err(_) => {
                    // Admissibility ends exactly where p_tau^2 crosses N/2.
                    assert!(table.prime(tau).unwrap().pow(2) > n / 2);
                }
            }
        }
        // p_126 = 701 is the last prime with p^2 <= 500000.
        assert_eq!(admissible, 126);
    }

    #[test]
    fn smooth_upper_density_argument() {
        let table = PrimeTable::sieve(1000).unwrap();
        let dick = DickmanTable::standard();
        let r = upper_smooth(1000, 3, 0.0, &table, dick, &policy()).unwrap();
        // p_3 = 5: u = log(1000/25)/log 5 = log(40)/log(5).
        let u = 40.0f64.ln() / 5.0f64.ln();
        assert_relative_eq!(r.auxiliary.unwrap(), u, max_relative = 1e-12);
        let rho = dick.rho(u).unwrap();
        assert_relative_eq!(
            r.value,
            1000.0f64.sqrt() * 3.0f64.sqrt() * rho.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn l1_envelope_counts_and_sums() {
        let table = PrimeTable::sieve(1000).unwrap();
        // At sigma = 0 the envelope is the member count itself.
        let r = l1_bound(100, 2, 0.0, &table).unwrap();
        assert_eq!(r.value, psi_count(100, 3).unwrap() as f64);
        assert_eq!(r.formula, Formula::L1Envelope);
        // Full interval: everything from 2 to N.
        let mu = table.pi(100).unwrap();
        let r = l1_bound(100, mu, 0.0, &table).unwrap();
        assert_eq!(r.value, 99.0);
        // Damped: check against a direct scan.
        let r = l1_bound(50, 3, 0.25, &table).unwrap();
        let want: f64 = crate::numbertheory::smooth_set(50, 5)
            .unwrap()
            .members()
            .iter()
            .map(|&m| (m as f64).powf(-0.25))
            .sum();
        assert_relative_eq!(r.value, want, max_relative = 1e-12);
        assert!(l1_bound(100, 0, 0.0, &table).is_err());
    }

    #[test]
    fn gap_ratio_per_case() {
        let g = gap_ratio(10_000, 200).unwrap();
        assert_eq!(g.case, GrowthCase::LargeTau);
        assert_eq!(g.ratio, 1.0);
        let g = gap_ratio(10_000, 50).unwrap();
        assert_eq!(g.case, GrowthCase::MediumTau);
        assert_relative_eq!(g.ratio, 10.0 / 50.0f64.sqrt(), max_relative = 1e-12);
        assert!(g.ratio <= 10_000.0f64.ln().sqrt());
        let g = gap_ratio(10_000, 5).unwrap();
        assert_eq!(g.case, GrowthCase::SmallTau);
        assert_relative_eq!(g.ratio, 5.0f64.ln().sqrt(), max_relative = 1e-12);
        assert!(gap_ratio(10_000, 1).is_err());
    }

    #[test]
    fn plateau_gap_never_exceeds_root_log() {
        for &n in &[1_000u64, 10_000, 100_000, 1_000_000] {
            let nf = n as f64;
            let lo = (nf.sqrt() / nf.ln()).ceil() as usize;
            let hi = nf.sqrt().floor() as usize;
            for tau in [lo, (lo + hi) / 2, hi] {
                let g = gap_ratio(n, tau).unwrap();
                if g.case == GrowthCase::MediumTau {
                    assert!(g.ratio <= nf.ln().sqrt() * (1.0 + 1e-12));
                    assert!(g.ratio >= 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn balanced_cutoff_values() {
        let lt = balanced_cutoff_log_tau(200.0).unwrap();
        assert_relative_eq!(lt, (100.0 * 200.0f64.ln()).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(lt, 23.018, epsilon = 1e-3);
        // The gain exponent (1/sqrt 2) sqrt(log N log log N) is the same number.
        assert_relative_eq!(
            lt,
            (200.0 * 200.0f64.ln()).sqrt() / 2.0f64.sqrt(),
            max_relative = 1e-12
        );
        let c = balanced_cutoff(1_000_000).unwrap();
        assert_relative_eq!(c.log_tau, balanced_cutoff_log_tau(1_000_000.0f64.ln()).unwrap());
        assert_relative_eq!(c.tau, c.log_tau.exp());
        assert!(balanced_cutoff(15).is_err());
        assert!(balanced_cutoff_log_tau(1.0).is_err());
    }

    #[test]
    fn optimizing_cutoff_matches_its_log_form() {
        // N = e^200: log tau = sqrt(100 log 200) ~ 23.018.
        let tau = rudin_shapiro_tau(200.0f64.exp()).unwrap();
        assert_relative_eq!(tau.ln(), 23.018, epsilon = 1e-3);
        // Monotone increasing in N.
        let mut prev = 0.0;
        for &n in &[16.0, 100.0, 1e4, 1e8, 1e16, 1e80] {
            let t = rudin_shapiro_tau(n).unwrap();
            assert!(t > prev);
            prev = t;
        }
        // Agreement with the integer-N convenience form.
        let c = balanced_cutoff(1_000_000).unwrap();
        assert_relative_eq!(rudin_shapiro_tau(1e6).unwrap(), c.tau, max_relative = 1e-12);
        assert!(rudin_shapiro_tau(15.0).is_err());
        assert!(rudin_shapiro_tau(f64::NAN).is_err());
    }

    #[test]
    fn block_lower_worked_example() {
        let table = PrimeTable::sieve(1000).unwrap();
        let n = 50u64;
        let tau = 4usize;
        let mut support: Vec<u64> = Vec::new();
        for j in 3..=4 {
            support.extend(l_j(n, tau, j, &table).unwrap());
        }
        let d = vec![1.0; support.len()];
        let spec = DirichletSpec::new(support, d, 0.0, &table).unwrap();
        let r = block_expected_lower(&spec, tau, &policy()).unwrap();
        // Unit-weight blocks of sizes 7 and 5: kappa (sqrt 7 + sqrt 5).
        assert_eq!(spec.len(), 12);
        assert_relative_eq!(
            r.value,
            (7.0f64.sqrt() + 5.0f64.sqrt()) / 2.0f64.sqrt(),
            max_relative = 1e-12
        );
        // Never exceeds the envelope, never falls under the pooled moment.
        assert!(r.value <= spec.l1_norm());
        let pooled: f64 = spec.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(r.value >= pooled / 2.0f64.sqrt() - 1e-12);
        // With tau = 9 the blocks sit at ordinals 5..9; nothing survives.
        assert_eq!(block_expected_lower(&spec, 9, &policy()).unwrap().value, 0.0);
    }

    #[test]
    fn block_lower_respects_weights() {
        let table = PrimeTable::sieve(100).unwrap();
        // tau = 2: single block j = 2 with elements 3 and 6.
        let spec = DirichletSpec::new(vec![3, 6], vec![2.0, 1.0], 0.0, &table).unwrap();
        let r = block_expected_lower(&spec, 2, &policy()).unwrap();
        assert_relative_eq!(r.value, (4.0f64 + 1.0).sqrt() / 2.0f64.sqrt(), max_relative = 1e-12);
        // Lattice supremum for any signs is |±2 ± 1| at worst 1, at best 3;
        // the first-moment device must sit between those extremes.
        let lo = exact_sup_z(&spec, &SignAssignment::new(vec![1, -1]).unwrap(), 2).unwrap();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
        let hi = exact_sup_z(&spec, &SignAssignment::new(vec![1, 1]).unwrap(), 2).unwrap();
        assert_relative_eq!(hi, 3.0, epsilon = 1e-12);
        assert!(r.value >= lo && r.value <= hi);
    }

    #[test]
    fn multiplicative_lower_single_block_case() {
        let table = PrimeTable::sieve(100).unwrap();
        // N = 30: pi = 10, upper half j in (5, 10], only p_6 = 13 has
        // floor(30/p) >= 2, so the sum is d(13) sqrt(d(2)^2).
        let unit = multiplicative_lower(30, &|_| 1.0, 0.0, &table, &policy()).unwrap();
        assert_relative_eq!(unit.value, 1.0, max_relative = 1e-12);
        assert_eq!(unit.warning, Some(false));
        assert_eq!(unit.formula, Formula::MultiplicativeLower);
        let div = multiplicative_lower(30, &|k| divisor_count(k).unwrap() as f64, 0.0, &table, &policy())
            .unwrap();
        assert_relative_eq!(div.value, 4.0, max_relative = 1e-12);
        assert_eq!(div.warning, Some(false));
    }

    #[test]
    fn multiplicative_lower_unit_weights_closed_form() {
        let table = PrimeTable::sieve(10_000).unwrap();
        let n = 5000u64;
        let got = multiplicative_lower(n, &|_| 1.0, 0.0, &table, &policy()).unwrap();
        // With d = 1, B(m) = m - 1.
        let mu = table.pi(n).unwrap();
        let mut want = 0.0;
        for j in mu / 2 + 1..=mu {
            let p = table.prime(j).unwrap();
            want += ((n / p - 1) as f64).sqrt();
        }
        assert_relative_eq!(got.value, want, max_relative = 1e-12);
    }

    #[test]
    fn multiplicative_lower_divisor_weights_track_n_over_log() {
        let dividx = |k: u64| divisor_count(k).unwrap() as f64;
        for &n in &[1_000u64, 10_000, 100_000] {
            let table = PrimeTable::sieve(n).unwrap();
            let r = multiplicative_lower(n, &dividx, 0.0, &table, &policy()).unwrap();
            let scale = n as f64 / (n as f64).ln();
            let ratio = r.value / scale;
            assert!(
                (0.1..=0.35).contains(&ratio),
                "N = {n}: value / (N / log N) = {ratio}"
            );
        }
    }

    #[test]
    fn multiplicative_warning_flags_non_multiplicative_weights() {
        let table = PrimeTable::sieve(1000).unwrap();
        let r = multiplicative_lower(500, &|k| (k as f64 + 1.0).ln(), 0.0, &table, &policy()).unwrap();
        assert_eq!(r.warning, Some(true));
        assert!(r.value.is_finite());
        // Completely multiplicative weights pass the spot check.
        let r = multiplicative_lower(500, &|k| k as f64, 0.0, &table, &policy()).unwrap();
        assert_eq!(r.warning, Some(false));
    }

    #[test]
    fn coprime_lower_closed_forms_at_sigma_zero() {
        let p = policy();
        // m = 1: no split exists.
        let r = coprime_lower(&[7], 0.0, &p).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.degenerate, Some(true));
        // m = 2: best split is a singleton: 2 * (1 / sqrt 2).
        let r = coprime_lower(&[3, 4], 0.0, &p).unwrap();
        assert_relative_eq!(r.value, 2.0f64.sqrt(), max_relative = 1e-12);
        // m = 3: best is |G| = 2: 2^{3/2} * (2/2) = 2^{3/2}.
        let r = coprime_lower(&[2, 3, 5], 0.0, &p).unwrap();
        assert_relative_eq!(r.value, 2.0f64.powf(1.5), max_relative = 1e-12);
        // m >= 4: best is |G| = 3: 2^{m/2} * 3 / 2^{3/2}.
        let r = coprime_lower(&[2, 3, 5, 7, 11], 0.0, &p).unwrap();
        assert_relative_eq!(r.value, 2.0f64.powf(2.5) * 3.0 / 2.0f64.powf(1.5), max_relative = 1e-12);
        assert_eq!(r.degenerate, Some(false));
    }

    #[test]
    fn coprime_lower_matches_direct_enumeration() {
        let p = policy();
        let moduli = [4u64, 9, 5, 7, 11];
        let sigma = 0.25;
        let got = coprime_lower(&moduli, sigma, &p).unwrap().value;
        let damp: Vec<f64> = moduli.iter().map(|&q| (q as f64).powf(-sigma)).collect();
        let outer: f64 = damp.iter().map(|&x| (1.0 + x * x).sqrt()).product();
        let mut best = 0.0f64;
        for mask in 1u32..31 {
            let mut num = 0.0;
            let mut den = 1.0;
            for (k, &x) in damp.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    num += x;
                    den *= (1.0 + x * x).sqrt();
                }
            }
            best = best.max(num / den);
        }
        assert_relative_eq!(got, outer * best, max_relative = 1e-12);
    }

    #[test]
    fn coprime_lower_validation() {
        let p = policy();
        assert!(coprime_lower(&[], 0.0, &p).is_err());
        assert!(coprime_lower(&[4, 6], 0.0, &p).is_err());
        assert!(coprime_lower(&[1, 3], 0.0, &p).is_err());
        let many: Vec<u64> = (0..31).map(|i| 2 * i + 3).collect();
        assert!(coprime_lower(&many, 0.0, &p).is_err());
    }
}
