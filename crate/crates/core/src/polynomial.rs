//! Signed Dirichlet polynomials, their torus form, and certified suprema.
//!
//! A polynomial here is `D(t) = sum_n eps_n w_n n^{-it}` with `w_n = d_n n^{-sigma}`
//! over a finite support of integers `n >= 2` and signs `eps_n = +/-1`. Writing
//! each `n` through its prime factorization turns `D` into a trigonometric
//! polynomial `Q(z) = sum_n eps_n w_n e(< a(n), z >)` on the torus `T^mu`,
//! where `a(n)` is the exponent vector of `n` and `e(x) = exp(2 pi i x)`.
//! The line is dense in the torus under `t -> (-t log p_j / 2 pi)_j`, so
//! `sup_t |D| = sup_z |Q|`; everything here works with the torus form and
//! keeps the line form for checks.
//!
//! Suprema come in three strengths:
//! * [`exact_sup_z`]: a closed form, exact to rounding, over the restricted
//!   lattice where low coordinates are 0 and high coordinates are half-turns;
//! * [`sup_torus`]: a grid-plus-ascent lower estimate with a certified `gap`
//!   such that `value <= sup |Q| <= value + gap`;
//! * [`sup_line_grid`]: a plain sampled maximum along the line, a lower
//!   bound with no certificate beyond the `l1` envelope.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{invalid, Result};
use crate::numbertheory::{factor_exponents, PrimeTable, SmoothSet};

/// `exp(2 pi i theta)`.
#[inline]
fn e(theta: f64) -> Complex64 {
    let a = TAU * theta;
    Complex64::new(a.cos(), a.sin())
}

/// Neumaier-compensated accumulator for complex sums; the correction keeps
/// cancellation between many near-opposite terms from polluting small totals.
#[derive(Debug, Clone, Copy, Default)]
struct CSum {
    re: f64,
    im: f64,
    cre: f64,
    cim: f64,
}

impl CSum {
    #[inline]
    fn add(&mut self, z: Complex64) {
        comp_add(&mut self.re, &mut self.cre, z.re);
        comp_add(&mut self.im, &mut self.cim, z.im);
    }

    #[inline]
    fn value(self) -> Complex64 {
        Complex64::new(self.re + self.cre, self.im + self.cim)
    }
}

#[inline]
fn comp_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// A weighted support with fixed `sigma`: everything about the polynomial
/// except the random signs.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec {
    support: Vec<u64>,
    d: Vec<f64>,
    w: Vec<f64>,
    sigma: f64,
    /// Sparse exponent vectors, ordinals ascending, aligned with `support`.
    exponents: Vec<Vec<(usize, u32)>>,
    dimension: usize,
}

impl DirichletSpec {
    /// Build from explicit frequencies and coefficients. The support is
    /// sorted; duplicates are rejected, as are frequencies below 2,
    /// non-finite coefficients, and `sigma` outside `[0, 1/2)`. An empty
    /// support is legal and describes the zero polynomial.
    pub fn new(support: Vec<u64>, d: Vec<f64>, sigma: f64, table: &PrimeTable) -> Result<Self> {
        if support.len() != d.len() {
            return Err(invalid(format!(
                "support has {} elements but {} coefficients were given",
                support.len(),
                d.len()
            )));
        }
        if !sigma.is_finite() || !(0.0..0.5).contains(&sigma) {
            return Err(invalid(format!("sigma must lie in [0, 1/2), got {sigma}")));
        }
        let mut pairs: Vec<(u64, f64)> = support.into_iter().zip(d).collect();
        pairs.sort_by_key(|&(n, _)| n);
        let mut spec = Self {
            support: Vec::with_capacity(pairs.len()),
            d: Vec::with_capacity(pairs.len()),
            w: Vec::with_capacity(pairs.len()),
            sigma,
            exponents: Vec::with_capacity(pairs.len()),
            dimension: 0,
        };
        let mut last = 0u64;
        for (n, dn) in pairs {
            if n < 2 {
                return Err(invalid(format!("frequency {n} is below 2")));
            }
            if n == last {
                return Err(invalid(format!("frequency {n} appears twice in the support")));
            }
            last = n;
            if !dn.is_finite() {
                return Err(invalid(format!("coefficient for n = {n} is not finite")));
            }
            let ev = factor_exponents(n, table)?;
            spec.dimension = spec.dimension.max(ev.largest_ordinal());
            spec.exponents.push(ev.exponents().to_vec());
            spec.support.push(n);
            spec.d.push(dn);
            spec.w.push(dn * (n as f64).powf(-sigma));
        }
        Ok(spec)
    }

    /// Unit coefficients over the members of a smooth set.
    pub fn from_smooth_set(set: &SmoothSet, sigma: f64, table: &PrimeTable) -> Result<Self> {
        let support = set.members().to_vec();
        let d = vec![1.0; support.len()];
        Self::new(support, d, sigma, table)
    }

    #[must_use]
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    /// The raw coefficients `d_n`.
    #[must_use]
    pub fn coefficients(&self) -> &[f64] {
        &self.d
    }

    /// The damped weights `w_n = d_n n^{-sigma}`.
    #[must_use]
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    #[must_use]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of torus coordinates: the largest prime ordinal appearing in
    /// any support element.
    #[must_use]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.support.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Largest frequency in the support, or 0 for the zero polynomial.
    #[must_use]
    pub fn max_support(&self) -> u64 {
        self.support.last().copied().unwrap_or(0)
    }

    /// Exponent vector of the i-th support element, ordinals ascending.
    #[must_use]
    pub fn exponents(&self, i: usize) -> &[(usize, u32)] {
        &self.exponents[i]
    }

    /// `sum_n |w_n|`: the trivial upper envelope for any supremum of `|Q|`.
    #[must_use]
    pub fn l1_norm(&self) -> f64 {
        self.w.iter().map(|w| w.abs()).sum()
    }

    /// Per-coordinate mass `G_j = sum_n a_j(n) |w_n|`, indexed `j - 1`.
    /// These weight both the Lipschitz certificate and grid allocation.
    #[must_use]
    pub fn coordinate_weights(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.dimension];
        for (ev, w) in self.exponents.iter().zip(&self.w) {
            for &(j, a) in ev {
                g[j - 1] += f64::from(a) * w.abs();
            }
        }
        g
    }
}

/// A choice of `eps_n = +/-1` aligned with a spec's support. When the signs
/// came out of the seeded sampler, `origin` records the `(seed, replicate)`
/// pair that produced them; hand-built assignments carry `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignAssignment {
    signs: Vec<i8>,
    origin: Option<(u64, u64)>,
}

impl SignAssignment {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(invalid(format!("signs must be +1 or -1, got {bad}")));
        }
        Ok(Self { signs, origin: None })
    }

    /// All `+1`.
    #[must_use]
    pub fn constant(len: usize) -> Self {
        Self { signs: vec![1; len], origin: None }
    }

    /// Tag the assignment with the `(seed, replicate)` pair it was drawn from.
    #[must_use]
    pub fn with_origin(mut self, seed: u64, replicate: u64) -> Self {
        self.origin = Some((seed, replicate));
        self
    }

    /// The `(seed, replicate)` provenance, if the signs were sampled.
    #[must_use]
    pub fn origin(&self) -> Option<(u64, u64)> {
        self.origin
    }

    #[must_use]
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    #[inline]
    #[must_use]
    pub fn get(&self, i: usize) -> f64 {
        f64::from(self.signs[i])
    }
}

fn check_compat(spec: &DirichletSpec, signs: &SignAssignment) -> Result<()> {
    if spec.len() != signs.len() {
        return Err(invalid(format!(
            "spec has {} terms but {} signs were given",
            spec.len(),
            signs.len()
        )));
    }
    Ok(())
}

/// A point of `T^mu`, coordinates reduced to `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("torus coordinates must be finite"));
        }
        Ok(Self {
            coords: coords.into_iter().map(|c| c.rem_euclid(1.0) % 1.0).collect(),
        })
    }

    #[must_use]
    pub fn zero(dimension: usize) -> Self {
        Self { coords: vec![0.0; dimension] }
    }

    #[must_use]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[must_use]
    pub fn dimension(&self) -> usize {
        self.coords.len()
    }
}

/// Distance on the circle `R / Z`.
#[inline]
fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// `D(t) = sum_n eps_n w_n n^{-it}` as a complex number.
pub fn eval_line(spec: &DirichletSpec, signs: &SignAssignment, t: f64) -> Result<Complex64> {
    check_compat(spec, signs)?;
    if !t.is_finite() {
        return Err(invalid("evaluation point t must be finite"));
    }
    let mut acc = CSum::default();
    for i in 0..spec.len() {
        let theta = -t * (spec.support[i] as f64).ln() / TAU;
        acc.add(signs.get(i) * spec.w[i] * e(theta));
    }
    Ok(acc.value())
}

/// The torus point the line parameter `t` maps to: `z_j = -t log p_j / 2 pi`
/// reduced mod 1. Composing with [`eval_torus`] reproduces [`eval_line`].
pub fn bohr_lift_point(table: &PrimeTable, dimension: usize, t: f64) -> Result<TorusPoint> {
    if !t.is_finite() {
        return Err(invalid("lift parameter t must be finite"));
    }
    let mut coords = Vec::with_capacity(dimension);
    for j in 1..=dimension {
        let p = table
            .prime(j)
            .ok_or_else(|| invalid(format!("prime table holds {} primes, need {dimension}", table.len())))?;
        coords.push((-t * (p as f64).ln() / TAU).rem_euclid(1.0));
    }
    TorusPoint::new(coords)
}

/// `Q(z) = sum_n eps_n w_n e(< a(n), z >)`.
pub fn eval_torus(spec: &DirichletSpec, signs: &SignAssignment, z: &TorusPoint) -> Result<Complex64> {
    check_compat(spec, signs)?;
    if z.dimension() != spec.dimension() {
        return Err(invalid(format!(
            "point has dimension {} but the spec needs {}",
            z.dimension(),
            spec.dimension()
        )));
    }
    Ok(eval_torus_unchecked(spec, signs, z.coords()))
}

fn eval_torus_unchecked(spec: &DirichletSpec, signs: &SignAssignment, z: &[f64]) -> Complex64 {
    let mut acc = CSum::default();
    for i in 0..spec.len() {
        let mut theta = 0.0;
        for &(j, a) in &spec.exponents[i] {
            theta += f64::from(a) * z[j - 1];
        }
        acc.add(signs.get(i) * spec.w[i] * e(theta));
    }
    acc.value()
}

/// A proven bound on `|Q(z1)| - |Q(z2)|` (indeed on `|Q(z1) - Q(z2)|`):
/// `2 pi sum_n |w_n| sum_j a_j(n) dist(z_j, z'_j)` with `dist` the circle
/// distance. Moving `z` by `delta_j` in coordinate `j` turns term `n` by at
/// most `a_j(n) delta_j`, and a unit vector turned by angle `2 pi x` moves
/// by at most `2 pi x`.
pub fn lipschitz_certificate(spec: &DirichletSpec, z1: &TorusPoint, z2: &TorusPoint) -> Result<f64> {
    if z1.dimension() != spec.dimension() || z2.dimension() != spec.dimension() {
        return Err(invalid("both points must match the spec dimension"));
    }
    let dist: Vec<f64> = z1
        .coords()
        .iter()
        .zip(z2.coords())
        .map(|(&a, &b)| circle_dist(a, b))
        .collect();
    let mut total = 0.0;
    for (ev, w) in spec.exponents.iter().zip(&spec.w) {
        let turn: f64 = ev.iter().map(|&(j, a)| f64::from(a) * dist[j - 1]).sum();
        total += w.abs() * turn;
    }
    Ok(TAU * total)
}

/// Outcome of a certified supremum search.
#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    /// Best value found; a true lower bound for `sup |Q|`.
    pub value: f64,
    /// Certified slack: `sup |Q| <= value + gap`.
    pub gap: f64,
    /// Where `value` is attained.
    pub argmax: TorusPoint,
}

/// Certified estimate of `sup_z |Q(z)|`.
///
/// The budget buys grid evaluations: coordinate `j` gets a dyadic resolution
/// `m_j`, grown greedily on whichever coordinate has the largest remaining
/// mass `G_j / m_j`, so the product grid has at most `budget` points. The
/// doubling order does not depend on the budget, so a larger budget always
/// refines the same nested lattice: at `refine_steps = 0` the value is
/// nondecreasing in the budget. With `refine_steps >= 1`, rounds of
/// per-coordinate ascent polish the best grid point and a couple of fixed
/// low-discrepancy starts `z_j = frac(i sqrt(p_j))` that sit between grid
/// lines; ascent can only raise `value` and never touches the certificate.
///
/// The certificate is the grid covering radius times the Lipschitz mass
/// (`pi sum_j G_j / m_j`), capped by the `l1` envelope, so
/// `value <= sup |Q| <= value + gap` always holds.
pub fn sup_torus(
    spec: &DirichletSpec,
    signs: &SignAssignment,
    budget: usize,
    refine_steps: usize,
) -> Result<SupResult> {
    check_compat(spec, signs)?;
    if budget == 0 {
        return Err(invalid("evaluation budget must be at least 1"));
    }
    let mu = spec.dimension();
    let g = spec.coordinate_weights();
    let l1 = spec.l1_norm();

    // Greedy dyadic allocation; ties go to the smallest ordinal so the
    // grid sequence is reproducible and nested as the budget grows.
    let mut m = vec![1usize; mu];
    let mut total = 1usize;
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..mu {
            if g[j] > 0.0 {
                let score = g[j] / m[j] as f64;
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, j));
                }
            }
        }
        let Some((_, j)) = best else { break };
        match total.checked_mul(2) {
            Some(doubled) if doubled <= budget => {
                m[j] *= 2;
                total = doubled;
            }
            _ => break,
        }
    }

    let decode = |idx: usize| -> Vec<f64> {
        let mut z = Vec::with_capacity(mu);
        let mut rest = idx;
        for &mj in &m {
            z.push((rest % mj) as f64 / mj as f64);
            rest /= mj;
        }
        z
    };
    let joined = |a: (f64, usize), b: (f64, usize)| -> (f64, usize) {
        // Larger value wins; equal values resolve to the smaller index so
        // the reduction is independent of work splitting.
        if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
            a
        } else {
            b
        }
    };
    let (grid_value, grid_idx) = (0..total)
        .into_par_iter()
        .map(|idx| (eval_torus_unchecked(spec, signs, &decode(idx)).norm(), idx))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), joined);
    let gap_lip: f64 = std::f64::consts::PI * (0..mu).map(|j| g[j] / m[j] as f64).sum::<f64>();

    let mut best_z = decode(grid_idx);
    let mut best_value = grid_value;

    if refine_steps > 0 && mu > 0 {
        // Ascend from the best grid point and from two fixed low-discrepancy
        // points that sit between grid lines; keep whichever climbs highest.
        let roots: Vec<f64> = first_primes(mu).iter().map(|&p| (p as f64).sqrt()).collect();
        let mut starts = vec![best_z.clone()];
        for i in 1..=2u32 {
            starts.push(roots.iter().map(|r| (f64::from(i) * r).fract()).collect());
        }
        for mut z in starts {
            let mut value = eval_torus_unchecked(spec, signs, &z).norm();
            for _ in 0..refine_steps {
                for (j, &gj) in g.iter().enumerate() {
                    if gj > 0.0 {
                        ascend_coordinate(spec, signs, &mut z, &mut value, j);
                    }
                }
            }
            if value > best_value {
                best_value = value;
                best_z = z;
            }
        }
    }

    let value = eval_torus_unchecked(spec, signs, &best_z).norm();
    let gap = gap_lip.min((l1 - value).max(0.0));
    Ok(SupResult {
        value,
        gap,
        argmax: TorusPoint::new(best_z)?,
    })
}

/// One-dimensional polish of coordinate `j` (0-based): split the polynomial
/// into the part static in `z_j` and the moving terms, scan the circle, and
/// tighten the best bracket by golden section. The update is accepted only
/// if it improves the value.
fn ascend_coordinate(
    spec: &DirichletSpec,
    signs: &SignAssignment,
    z: &mut [f64],
    value: &mut f64,
    j: usize,
) {
    let mut moving: Vec<(Complex64, f64)> = Vec::new();
    let mut static_part = CSum::default();
    for i in 0..spec.len() {
        let mut aj = 0.0;
        let mut theta = 0.0;
        for &(k, a) in &spec.exponents[i] {
            if k - 1 == j {
                aj = f64::from(a);
            } else {
                theta += f64::from(a) * z[k - 1];
            }
        }
        let coef = signs.get(i) * spec.w[i] * e(theta);
        if aj == 0.0 {
            static_part.add(coef);
        } else {
            moving.push((coef, aj));
        }
    }
    let fixed = static_part.value();
    let f = |x: f64| -> f64 {
        let mut acc = CSum::default();
        acc.add(fixed);
        for &(coef, aj) in &moving {
            acc.add(coef * e(aj * x));
        }
        acc.value().norm()
    };

    const SCAN: usize = 64;
    let mut bx = z[j];
    let mut bv = f(bx);
    for k in 0..SCAN {
        let x = k as f64 / SCAN as f64;
        let v = f(x);
        if v > bv {
            bv = v;
            bx = x;
        }
    }
    let (mut lo, mut hi) = (bx - 1.0 / SCAN as f64, bx + 1.0 / SCAN as f64);
    let ratio = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 > bv {
            bv = f1;
            bx = x1;
        }
        if f2 > bv {
            bv = f2;
            bx = x2;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    if bv > *value {
        *value = bv;
        z[j] = bx.rem_euclid(1.0) % 1.0;
    }
}

/// The first `count` primes, independent of any caller-supplied table.
fn first_primes(count: usize) -> Vec<u64> {
    let mut limit = 32u64.max(count as u64 * 16);
    loop {
        let table = PrimeTable::sieve(limit).expect("limit is valid");
        if table.len() >= count {
            return table.primes()[..count].to_vec();
        }
        limit *= 2;
    }
}

/// Exact supremum of `|Q|` over the lattice `Z` that zeroes coordinates up
/// to `tau/2` and allows half-turns above, for the polynomial restricted to
/// the block structure: terms kept are exactly those factoring as `p_j * m`
/// with `tau/2 < j <= tau`, `p_j` to the first power, and `m` smooth up to
/// the `floor(tau/2)`-th prime; terms outside this shape contribute nothing
/// to the restricted polynomial and are dropped. Grouping kept terms by
/// their leading ordinal `j`, every block picks up an independent `+/-1` on
/// the lattice, so the supremum is exactly the sum of absolute block sums.
pub fn exact_sup_z(spec: &DirichletSpec, signs: &SignAssignment, tau: usize) -> Result<f64> {
    check_compat(spec, signs)?;
    if tau == 0 {
        return Err(invalid("tau must be at least 1"));
    }
    let half = tau / 2;
    let mut blocks: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..spec.len() {
        let ev = &spec.exponents[i];
        let &(lead, a) = ev.last().expect("support elements are at least 2");
        let in_blocks = lead > half
            && lead <= tau
            && a == 1
            && (ev.len() < 2 || ev[ev.len() - 2].0 <= half);
        if in_blocks {
            *blocks.entry(lead).or_insert(0.0) += signs.get(i) * spec.w[i];
        }
    }
    Ok(blocks.values().map(|s| s.abs()).sum())
}

/// Sampled maximum of `|D(t)|` over `steps` equally spaced `t` in
/// `[t_min, t_max]`, endpoints included: a plain lower bound on the line
/// supremum. Doubling the resolution to `2 steps - 1` keeps the old grid as
/// a subset, so the value never drops along that ladder.
pub fn sup_line_grid(
    spec: &DirichletSpec,
    signs: &SignAssignment,
    t_min: f64,
    t_max: f64,
    steps: usize,
) -> Result<f64> {
    check_compat(spec, signs)?;
    if !t_min.is_finite() || !t_max.is_finite() || t_min >= t_max {
        return Err(invalid(format!(
            "need a finite window with t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if steps < 2 {
        return Err(invalid("need at least 2 sample points"));
    }
    let step = (t_max - t_min) / (steps - 1) as f64;
    Ok((0..steps)
        .into_par_iter()
        .map(|k| {
            let t = t_min + k as f64 * step;
            eval_line(spec, signs, t).expect("t is finite").norm()
        })
        .reduce(|| f64::NEG_INFINITY, f64::max))
}
