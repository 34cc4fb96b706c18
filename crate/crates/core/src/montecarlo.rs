//! Monte Carlo estimation of expected suprema under random signs.
//!
//! Signs are Rademacher: independent, `+1` or `-1` with equal probability.
//! Rather than advancing a stateful generator, each sign is a pure function
//! of `(seed, replicate, term index)` through a SplitMix-style bit mixer, so
//! any draw can be reproduced in isolation and the sampled family does not
//! depend on evaluation order, thread count, or which other draws ran.
//!
//! Aggregation is deterministic too: per-draw results are collected in
//! replicate order and reduced by a fixed-shape pairwise tree, so a record
//! produced with the same inputs is bitwise identical however the work was
//! scheduled.
//!
//! Every draw also evaluates the exact half-turn lattice supremum, and the
//! record counts violations of the ordering that must hold up to rounding:
//! lattice value below the certified search bracket, bracket below the
//! `l1` envelope.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{lower_main, upper_main, ConstantPolicy};
use crate::error::{invalid, Result};
use crate::numbertheory::{l_j, psi_count, PrimeTable};
use crate::polynomial::{
    exact_sup_z, sup_line_grid, sup_torus, DirichletSpec, SignAssignment,
};

#[inline]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A reproducible stream of sign draws: replicate `r`, index `i` is the
/// same bit no matter how many draws run or in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignStream {
    seed: u64,
}

impl SignStream {
    #[must_use]
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    #[must_use]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The sign of term `index` in replicate `replicate`.
    #[must_use]
    pub fn sign(&self, replicate: u64, index: u64) -> i8 {
        let stream = mix(
            self.seed ^ 0x243f_6a88_85a3_08d3 ^ replicate.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let word = mix(
            stream ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03).wrapping_add(0x61c8_8646_80b5_83eb),
        );
        if word >> 63 == 0 {
            1
        } else {
            -1
        }
    }

    /// Signs for indices `offset .. offset + len`.
    #[must_use]
    pub fn slice(&self, replicate: u64, offset: u64, len: usize) -> Vec<i8> {
        (0..len as u64).map(|i| self.sign(replicate, offset + i)).collect()
    }
}

/// One replicate's sign assignment for a spec, tagged with where it came
/// from. Replicate `r` is identical whether or not any other replicate is
/// ever drawn.
#[must_use]
pub fn sample_signs(spec: &DirichletSpec, seed: u64, replicate: u64) -> SignAssignment {
    let stream = SignStream::new(seed);
    SignAssignment::new(stream.slice(replicate, 0, spec.len()))
        .expect("stream emits only +1/-1")
        .with_origin(seed, replicate)
}

/// Fixed-shape pairwise summation: deterministic and far more accurate than
/// a running sum when the terms number in the thousands.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

fn std_error(xs: &[f64], m: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64 / xs.len() as f64).sqrt()
}

/// How a single draw's supremum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact closed form over the half-turn lattice.
    ZExact,
    /// Certified grid-and-ascent search over the full torus.
    TorusGrid { budget: usize, refine_steps: usize },
    /// Sampled maximum along the line `t in [t_min, t_max]`; a plain lower
    /// estimate of the supremum.
    LineGrid { t_min: f64, t_max: f64, steps: usize },
}

impl Method {
    /// The tag naming the method in serialized records.
    #[must_use]
    pub fn label(&self) -> &'static str {
        match self {
            Method::ZExact => "z-exact",
            Method::TorusGrid { .. } => "torus-grid",
            Method::LineGrid { .. } => "line-grid",
        }
    }
}

/// Aggregated outcome of a Monte Carlo run. With the same inputs this
/// record is reproduced bit for bit at any thread count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub method: Method,
    /// Largest support element of the spec (0 for the zero polynomial).
    pub n: u64,
    /// The lattice cutoff used for the per-draw lower companion.
    pub tau: usize,
    pub sigma: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Mean over draws of the per-draw supremum estimate.
    pub estimate: f64,
    /// Sample standard deviation divided by `sqrt(replicates)`; 0 for a
    /// single draw.
    pub std_error: f64,
    /// Mean certificate width: for the torus method the proven slack above
    /// the found value, otherwise the distance left to the envelope.
    pub mean_gap: f64,
    /// Mean of the exact lattice supremum over the same draws.
    pub mean_lower_z: f64,
    /// The sign-independent envelope `sum |w_n|`.
    pub l1: f64,
    /// Draws where an ordering that must hold up to rounding failed:
    /// lattice above the certified bracket, or any value above the
    /// envelope. Expected to stay 0.
    pub sandwich_violations: u64,
}

struct Draw {
    value: f64,
    gap: f64,
    lower_z: f64,
    violated: bool,
}

/// Tolerance for the orderings checked per draw: rounding slack only.
#[inline]
fn above(a: f64, b: f64) -> bool {
    a > b * (1.0 + 1e-12) + 1e-12
}

fn run_draw(
    spec: &DirichletSpec,
    tau: usize,
    method: Method,
    signs: &SignAssignment,
    l1: f64,
) -> Result<Draw> {
    let lower_z = exact_sup_z(spec, signs, tau)?;
    let (value, gap) = match method {
        Method::ZExact => (lower_z, (l1 - lower_z).max(0.0)),
        Method::TorusGrid { budget, refine_steps } => {
            let r = sup_torus(spec, signs, budget, refine_steps)?;
            (r.value, r.gap)
        }
        Method::LineGrid { t_min, t_max, steps } => {
            let v = sup_line_grid(spec, signs, t_min, t_max, steps)?;
            (v, (l1 - v).max(0.0))
        }
    };
    let violated = above(value, l1) || above(lower_z, value + gap);
    Ok(Draw { value, gap, lower_z, violated })
}

/// Estimate `E sup |Q|` over Rademacher draws, with the exact lattice
/// supremum at cutoff `tau` as a per-draw companion. The lattice value is a
/// true lower estimate of the torus supremum when the spec's support is the
/// block union for `tau`; on wider supports the restricted polynomial drops
/// terms and the companion is reported but not comparable.
pub fn estimate_esup(
    spec: &DirichletSpec,
    tau: usize,
    method: Method,
    replicates: usize,
    seed: u64,
) -> Result<EstimateRecord> {
    if replicates == 0 {
        return Err(invalid("need at least one replicate"));
    }
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    match method {
        Method::TorusGrid { budget: 0, .. } => {
            return Err(invalid("evaluation budget must be at least 1"));
        }
        Method::LineGrid { t_min, t_max, steps } => {
            if !t_min.is_finite() || !t_max.is_finite() || t_min >= t_max {
                return Err(invalid(format!("need t_min < t_max, got [{t_min}, {t_max}]")));
            }
            if steps < 2 {
                return Err(invalid("need at least 2 line sample points"));
            }
        }
        _ => {}
    }
    let l1 = spec.l1_norm();
    let draws: Vec<Draw> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| run_draw(spec, tau, method, &sample_signs(spec, seed, r), l1))
        .collect::<Result<_>>()?;

    let values: Vec<f64> = draws.iter().map(|d| d.value).collect();
    let gaps: Vec<f64> = draws.iter().map(|d| d.gap).collect();
    let lows: Vec<f64> = draws.iter().map(|d| d.lower_z).collect();
    let estimate = mean(&values);
    Ok(EstimateRecord {
        method,
        n: spec.max_support(),
        tau,
        sigma: spec.sigma(),
        replicates,
        seed,
        estimate,
        std_error: std_error(&values, estimate),
        mean_gap: mean(&gaps),
        mean_lower_z: mean(&lows),
        l1,
        sandwich_violations: draws.iter().filter(|d| d.violated).count() as u64,
    })
}

/// Exact `E sup` over the lattice by exhausting every sign pattern; the
/// oracle the Monte Carlo must converge to. Capped at 20 terms.
pub fn exhaustive_mean_sup_z(spec: &DirichletSpec, tau: usize) -> Result<f64> {
    let k = spec.len();
    if k > 20 {
        return Err(invalid(format!("exhaustive mean enumerates 2^len patterns, len = {k} > 20")));
    }
    let total = 1u64 << k;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mask| {
            let signs = SignAssignment::new(
                (0..k).map(|i| if mask >> i & 1 == 0 { 1 } else { -1 }).collect(),
            )?;
            exact_sup_z(spec, &signs, tau)
        })
        .collect::<Result<_>>()?;
    Ok(mean(&values))
}

/// A finite Rademacher family on an abstract site set: sign `i` carries the
/// coefficient row `coeffs[i]`, and the value at site `s` is
/// `sum_i eps_i coeffs[i][s]`. The object of interest is
/// `sup_s |value at s|`. No rows means the zero family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherProcess {
    sites: usize,
    coeffs: Vec<Vec<f64>>,
}

impl RademacherProcess {
    pub fn new(sites: usize, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if sites == 0 {
            return Err(invalid("need at least one site"));
        }
        for (i, row) in coeffs.iter().enumerate() {
            if row.len() != sites {
                return Err(invalid(format!(
                    "coefficient row {i} has length {}, expected {sites}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("coefficient row {i} contains a non-finite value")));
            }
        }
        Ok(Self { sites, coeffs })
    }

    /// The identically zero family on `sites` sites.
    pub fn zero(sites: usize) -> Result<Self> {
        Self::new(sites, Vec::new())
    }

    #[must_use]
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Number of signs the family consumes.
    #[must_use]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `sup_s |sum_i signs[i] coeffs[i][s]|` for one sign pattern.
    pub fn sup(&self, signs: &[i8]) -> Result<f64> {
        if signs.len() != self.len() {
            return Err(invalid(format!(
                "got {} signs for a family of {}",
                signs.len(),
                self.len()
            )));
        }
        Ok(self.sup_with(signs, None))
    }

    fn sup_with(&self, signs: &[i8], added: Option<(&RademacherProcess, &[i8])>) -> f64 {
        let mut best = 0.0f64;
        for s in 0..self.sites {
            let mut v = 0.0;
            for (i, row) in self.coeffs.iter().enumerate() {
                v += f64::from(signs[i]) * row[s];
            }
            if let Some((other, osigns)) = added {
                for (i, row) in other.coeffs.iter().enumerate() {
                    v += f64::from(osigns[i]) * row[s];
                }
            }
            best = best.max(v.abs());
        }
        best
    }
}

/// Monte Carlo comparison of `E sup_s |X_s + Y_s|` against `E sup_s |X_s|`
/// for independent sign families `X` and `Y` on shared sites. Adding an
/// independent centered family cannot lower the expected supremum, so the
/// `with` mean should not sit significantly below the `without` mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperpositionReport {
    pub mean_with: f64,
    pub mean_without: f64,
    pub std_error_with: f64,
    pub std_error_without: f64,
    pub replicates: usize,
    /// Set when `mean_with < mean_without - 3 sqrt(se_w^2 + se_wo^2)`,
    /// which a correct sampler should essentially never produce.
    pub flagged: bool,
}

pub fn superposition_check(
    x: &RademacherProcess,
    y: &RademacherProcess,
    replicates: usize,
    seed: u64,
) -> Result<SuperpositionReport> {
    if x.sites() != y.sites() {
        return Err(invalid(format!(
            "families live on different site sets: {} vs {}",
            x.sites(),
            y.sites()
        )));
    }
    if replicates == 0 {
        return Err(invalid("need at least one replicate"));
    }
    let stream = SignStream::new(seed);
    let kx = x.len() as u64;
    let pairs: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let sx = stream.slice(r, 0, x.len());
            let sy = stream.slice(r, kx, y.len());
            let without = x.sup_with(&sx, None);
            let with = x.sup_with(&sx, Some((y, &sy)));
            (with, without)
        })
        .collect();
    let withs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let withouts: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mean_with = mean(&withs);
    let mean_without = mean(&withouts);
    let se_w = std_error(&withs, mean_with);
    let se_wo = std_error(&withouts, mean_without);
    Ok(SuperpositionReport {
        mean_with,
        mean_without,
        std_error_with: se_w,
        std_error_without: se_wo,
        replicates,
        flagged: mean_with < mean_without - 3.0 * se_w.hypot(se_wo),
    })
}

/// The same comparison with both expectations computed exactly by
/// enumerating every sign pattern. Capped at 20 signs total.
pub fn exhaustive_superposition(
    x: &RademacherProcess,
    y: &RademacherProcess,
) -> Result<(f64, f64)> {
    if x.sites() != y.sites() {
        return Err(invalid(format!(
            "families live on different site sets: {} vs {}",
            x.sites(),
            y.sites()
        )));
    }
    let kx = x.len();
    let k = kx + y.len();
    if k > 20 {
        return Err(invalid(format!("exhaustive check enumerates 2^signs patterns, signs = {k} > 20")));
    }
    let unpack = |mask: u64, lo: usize, len: usize| -> Vec<i8> {
        (0..len).map(|i| if mask >> (lo + i) & 1 == 0 { 1 } else { -1 }).collect()
    };
    let total = 1u64 << k;
    let mut sum_with = 0.0;
    for mask in 0..total {
        let sx = unpack(mask, 0, kx);
        let sy = unpack(mask, kx, y.len());
        sum_with += x.sup_with(&sx, Some((y, &sy)));
    }
    let total_x = 1u64 << kx;
    let mut sum_without = 0.0;
    for mask in 0..total_x {
        let sx = unpack(mask, 0, kx);
        sum_without += x.sup_with(&sx, None);
    }
    Ok((sum_with / total as f64, sum_without / total_x as f64))
}

/// How to pick the prime cutoff for a given `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TauRule {
    Explicit(usize),
    /// All primes up to `N`.
    PiN,
    /// `floor(sqrt N)` primes: the seam of the growth regimes.
    SqrtN,
    /// The balancing cutoff `log tau = ((log N / 2) log log N)^{1/2}`.
    Balanced,
}

impl TauRule {
    pub fn resolve(self, n: u64, table: &PrimeTable) -> Result<usize> {
        let tau = match self {
            TauRule::Explicit(k) => k,
            TauRule::PiN => table.pi(n)?,
            TauRule::SqrtN => (n as f64).sqrt().floor() as usize,
            TauRule::Balanced => crate::bounds::balanced_cutoff(n)?.tau.round() as usize,
        };
        if tau == 0 {
            return Err(invalid(format!("tau rule {self:?} yields 0 at N = {n}")));
        }
        Ok(tau)
    }
}

/// Unit-coefficient spec over the block union `{p_j m : tau/2 < j <= tau}`,
/// the support on which the lattice supremum is exact.
pub fn block_union_spec(n: u64, tau: usize, sigma: f64, table: &PrimeTable) -> Result<DirichletSpec> {
    let mut support: Vec<u64> = Vec::new();
    for j in tau / 2 + 1..=tau {
        support.extend(l_j(n, tau, j, table)?);
    }
    support.sort_unstable();
    let d = vec![1.0; support.len()];
    DirichletSpec::new(support, d, sigma, table)
}

/// One row of a growth-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: u64,
    pub tau: usize,
    pub support_size: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// `estimate / (N^{1-sigma} / log N)`, the predicted rate at the full
    /// cutoff; flat ratios across `N` mean the rate is right.
    pub ratio: f64,
    /// Case-selected upper estimate at `(N, tau, sigma)`, unit constant.
    pub upper: f64,
    /// Density-weighted lower estimate with the exact smooth density, unit
    /// constant; 0 when `tau < 2` leaves the formula undefined.
    pub lower: f64,
}

/// Sweep `N` over a grid, resolving `tau` by the rule, estimating the
/// supremum over the block union with the given method, and normalizing by
/// `N^{1-sigma} / log N`.
pub fn ratio_table(
    ns: &[u64],
    rule: TauRule,
    sigma: f64,
    method: Method,
    replicates: usize,
    seed: u64,
) -> Result<Vec<RatioRow>> {
    if ns.is_empty() {
        return Err(invalid("need at least one N"));
    }
    let policy = ConstantPolicy::default();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let table = PrimeTable::sieve(n)?;
        let tau = rule.resolve(n, &table)?;
        let spec = block_union_spec(n, tau, sigma, &table)?;
        let record = estimate_esup(&spec, tau, method, replicates, seed)?;
        let nf = n as f64;
        let scale = nf.powf(1.0 - sigma) / nf.ln();
        let upper = upper_main(n, tau, sigma, &policy)?.value;
        let lower = match table.prime(tau) {
            Some(p) if tau >= 2 => {
                let density = psi_count(n, p)? as f64 / nf;
                lower_main(n, tau, sigma, density, &policy)?.value
            }
            _ => 0.0,
        };
        rows.push(RatioRow {
            n,
            tau,
            support_size: spec.len(),
            estimate: record.estimate,
            std_error: record.std_error,
            ratio: record.estimate / scale,
            upper,
            lower,
        });
    }
    Ok(rows)
}
