//! Primes, largest prime factors, smooth supports, and leading-prime blocks.
//!
//! Everything downstream indexes primes by 1-based ordinal: `p_1 = 2`,
//! `p_2 = 3`, and so on. A support is *M-smooth* when every member of it has
//! largest prime factor at most `M`; the convention `P+(1) = 1` makes 1 smooth
//! for every threshold, but smooth sets themselves always start at 2.

use std::collections::BTreeMap;

use crate::error::{check_int, invalid, Error, Result};

const SEGMENT: usize = 1 << 16;

/// Cutoff between the direct largest-prime-factor scan and product
/// generation when enumerating smooth sets. The scan allocates 4 bytes per
/// integer up to the limit; generation only touches actual members.
const DIRECT_SCAN_LIMIT: u64 = 1 << 22;

/// All primes up to a fixed limit, with ordinal lookups in both directions.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    /// Sieve all primes in `[2, limit]` segment by segment.
    pub fn sieve(limit: u64) -> Result<Self> {
        check_int(limit)?;
        if limit < 2 {
            return Err(invalid(format!("sieve limit must be at least 2, got {limit}")));
        }
        let root = limit.isqrt();
        let mut base = simple_sieve(root.max(2));
        let mut primes = Vec::new();
        primes.extend(base.iter().copied().filter(|&p| p <= limit));
        let mut low = root.max(2) + 1;
        let mut composite = vec![false; SEGMENT];
        while low <= limit {
            let high = limit.min(low + SEGMENT as u64 - 1);
            let len = (high - low + 1) as usize;
            composite[..len].fill(false);
            for &p in &base {
                if p * p > high {
                    break;
                }
                let mut m = low.div_ceil(p) * p;
                while m <= high {
                    composite[(m - low) as usize] = true;
                    m += p;
                }
            }
            for (i, &c) in composite.iter().take(len).enumerate() {
                if !c {
                    primes.push(low + i as u64);
                }
            }
            low = high + 1;
        }
        base.clear();
        Ok(Self { limit, primes })
    }

    /// Upper end of the sieved range.
    #[must_use]
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All primes in ascending order.
    #[must_use]
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes in the table, `pi(limit)`.
    #[must_use]
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// The `j`-th prime (1-based); `None` when `j` is 0 or past the table.
    #[must_use]
    pub fn prime(&self, j: usize) -> Option<u64> {
        if j == 0 {
            None
        } else {
            self.primes.get(j - 1).copied()
        }
    }

    /// Prime-counting function `pi(x)` for any `x` within the table range.
    pub fn pi(&self, x: u64) -> Result<usize> {
        if x > self.limit {
            return Err(Error::TableTooSmall { limit: self.limit, needed: x });
        }
        Ok(self.primes.partition_point(|&p| p <= x))
    }

    /// Ordinal `j` with `p_j = p`, or `None` when `p` is not a tabulated prime.
    #[must_use]
    pub fn ordinal(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|i| i + 1)
    }
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// Largest prime factor `P+(n)` by trial division, with `P+(1) = 1`.
pub fn largest_prime_factor(n: u64) -> Result<u64> {
    check_int(n)?;
    if n == 0 {
        return Err(invalid("largest prime factor requires n >= 1"));
    }
    if n == 1 {
        return Ok(1);
    }
    let mut m = n;
    let mut largest = 1;
    for p in [2u64, 3] {
        if m.is_multiple_of(p) {
            largest = p;
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
    }
    let mut p = 5;
    let mut step = 2; // alternate 5,7,11,13,... (6k +- 1)
    while p * p <= m {
        if m.is_multiple_of(p) {
            largest = p;
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += step;
        step = 6 - step;
    }
    if m > 1 {
        largest = m;
    }
    Ok(largest)
}

/// Sparse prime-exponent vector of an integer: pairs `(j, a_j)` with
/// `n = prod p_j^{a_j}`, ordered by ascending ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentVector {
    n: u64,
    exponents: Vec<(usize, u32)>,
}

impl ExponentVector {
    #[must_use]
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `(ordinal, exponent)` pairs, ascending in ordinal.
    #[must_use]
    pub fn exponents(&self) -> &[(usize, u32)] {
        &self.exponents
    }

    /// Ordinal of the largest prime factor; 0 for `n = 1`.
    #[must_use]
    pub fn largest_ordinal(&self) -> usize {
        self.exponents.last().map_or(0, |&(j, _)| j)
    }

    /// Total number of prime factors with multiplicity.
    #[must_use]
    pub fn big_omega(&self) -> u32 {
        self.exponents.iter().map(|&(_, a)| a).sum()
    }

    /// Multiply the factorization back out.
    #[must_use]
    pub fn recompose(&self, table: &PrimeTable) -> u64 {
        let mut v = 1u64;
        for &(j, a) in &self.exponents {
            let p = table.prime(j).expect("exponent ordinal within table");
            for _ in 0..a {
                v *= p;
            }
        }
        v
    }
}

/// Factor `n >= 1` over the table's primes.
pub fn factor_exponents(n: u64, table: &PrimeTable) -> Result<ExponentVector> {
    check_int(n)?;
    if n == 0 {
        return Err(invalid("factorization requires n >= 1"));
    }
    let mut m = n;
    let mut exponents = Vec::new();
    for (i, &p) in table.primes.iter().enumerate() {
        if p * p > m {
            break;
        }
        if m.is_multiple_of(p) {
            let mut a = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                a += 1;
            }
            exponents.push((i + 1, a));
        }
    }
    if m > 1 {
        match table.ordinal(m) {
            Some(j) => exponents.push((j, 1)),
            None => return Err(Error::TableTooSmall { limit: table.limit, needed: m }),
        }
    }
    Ok(ExponentVector { n, exponents })
}

/// The integers in `[2, N]` whose prime factors all lie at or below `M`,
/// together with their partition by leading prime.
#[derive(Debug, Clone)]
pub struct SmoothSet {
    n_limit: u64,
    m_limit: u64,
    members: Vec<u64>,
    /// Ordinal of the largest prime factor -> members with that leading prime.
    partition: BTreeMap<usize, Vec<u64>>,
}

impl SmoothSet {
    #[must_use]
    pub fn n_limit(&self) -> u64 {
        self.n_limit
    }

    #[must_use]
    pub fn m_limit(&self) -> u64 {
        self.m_limit
    }

    /// Members in ascending order.
    #[must_use]
    pub fn members(&self) -> &[u64] {
        &self.members
    }

    /// `Psi(N, M)`: the number of members.
    #[must_use]
    pub fn psi(&self) -> u64 {
        self.members.len() as u64
    }

    /// Members whose largest prime factor is the `j`-th prime, ascending.
    #[must_use]
    pub fn cell(&self, j: usize) -> &[u64] {
        self.partition.get(&j).map_or(&[], Vec::as_slice)
    }

    /// Nonempty partition cells as `(ordinal, members)`, ascending in ordinal.
    pub fn cells(&self) -> impl Iterator<Item = (usize, &[u64])> {
        self.partition.iter().map(|(&j, v)| (j, v.as_slice()))
    }
}

/// Enumerate the `M`-smooth integers in `[2, N]`.
pub fn smooth_set(n: u64, m: u64) -> Result<SmoothSet> {
    check_int(n)?;
    check_int(m)?;
    if n < 2 {
        return Err(invalid(format!("smooth set requires N >= 2, got {n}")));
    }
    if m < 2 {
        return Err(invalid(format!("smooth threshold must be at least 2, got {m}")));
    }
    let table = PrimeTable::sieve(m.min(n))?;
    let pairs = if n <= DIRECT_SCAN_LIMIT {
        members_by_scan(n, m, &table)
    } else {
        members_by_generation(n, m, &table)
    };
    Ok(assemble(n, m, pairs))
}

/// `Psi(N, M)` without materializing the set.
pub fn psi_count(n: u64, m: u64) -> Result<u64> {
    Ok(smooth_set(n, m)?.psi())
}

/// `E_tau`: the `p_tau`-smooth integers in `[2, N]`, partitioned by leading
/// prime. Ordinals in the partition refer to the supplied table.
pub fn e_tau(n: u64, tau: usize, table: &PrimeTable) -> Result<SmoothSet> {
    check_int(n)?;
    if n < 2 {
        return Err(invalid(format!("E_tau requires N >= 2, got {n}")));
    }
    let mu = table.pi(n)?;
    if tau == 0 || tau > mu {
        return Err(invalid(format!("tau must lie in [1, pi(N)] = [1, {mu}], got {tau}")));
    }
    let p_tau = table.prime(tau).expect("tau <= pi(N) <= table length");
    let pairs = if n <= DIRECT_SCAN_LIMIT {
        members_by_scan(n, p_tau, table)
    } else {
        members_by_generation(n, p_tau, table)
    };
    Ok(assemble(n, p_tau, pairs))
}

fn assemble(n: u64, m: u64, mut pairs: Vec<(u64, usize)>) -> SmoothSet {
    pairs.sort_unstable();
    let members = pairs.iter().map(|&(v, _)| v).collect();
    let mut partition: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (v, j) in pairs {
        partition.entry(j).or_default().push(v);
    }
    SmoothSet { n_limit: n, m_limit: m, members, partition }
}

/// Largest-prime-factor sieve over `[2, N]`; returns `(member, leading ordinal)`.
fn members_by_scan(n: u64, m: u64, table: &PrimeTable) -> Vec<(u64, usize)> {
    let size = n as usize + 1;
    let mut lpf = vec![0u32; size];
    for p in 2..size {
        if lpf[p] == 0 {
            let mut k = p;
            while k < size {
                lpf[k] = p as u32;
                k += p;
            }
        }
    }
    let mut out = Vec::new();
    for (v, &f) in lpf.iter().enumerate().skip(2) {
        let p = u64::from(f);
        if p <= m {
            let j = table.ordinal(p).expect("leading prime within table");
            out.push((v as u64, j));
        }
    }
    out
}

/// Depth-first products of admissible primes; touches members only.
fn members_by_generation(n: u64, m: u64, table: &PrimeTable) -> Vec<(u64, usize)> {
    let primes: Vec<u64> = table.primes.iter().copied().take_while(|&p| p <= m).collect();
    let mut out = Vec::new();
    extend_products(&primes, 0, 1, n, &mut out);
    out
}

fn extend_products(primes: &[u64], idx: usize, prod: u64, n: u64, out: &mut Vec<(u64, usize)>) {
    for i in idx..primes.len() {
        let p = primes[i];
        if prod > n / p {
            break;
        }
        // Each product is pushed exactly once, at the level of its largest
        // prime: deeper recursion only multiplies by strictly larger primes.
        let mut v = prod * p;
        loop {
            out.push((v, i + 1));
            extend_products(primes, i + 1, v, n, out);
            if v > n / p {
                break;
            }
            v *= p;
        }
    }
}

/// The leading-prime block `L_j` for `(N, tau)`: integers `p_j * r` with
/// `r <= N / p_j` and every prime factor of `r` at or below `p_{floor(tau/2)}`
/// (`r = 1` included). Defined for `floor(tau/2) < j <= tau`.
pub fn l_j(n: u64, tau: usize, j: usize, table: &PrimeTable) -> Result<Vec<u64>> {
    check_int(n)?;
    if n < 2 {
        return Err(invalid(format!("L_j requires N >= 2, got {n}")));
    }
    let mu = table.pi(n)?;
    if tau == 0 || tau > mu {
        return Err(invalid(format!("tau must lie in [1, pi(N)] = [1, {mu}], got {tau}")));
    }
    let half = tau / 2;
    if j <= half || j > tau {
        return Err(invalid(format!("block index must satisfy {half} < j <= {tau}, got {j}")));
    }
    let p_j = table.prime(j).expect("j <= tau <= pi(N)");
    let bound = n / p_j;
    let mut members = vec![p_j];
    if bound >= 2 && half >= 1 {
        let threshold = table.prime(half).expect("half < j <= table length");
        let pairs = if bound <= DIRECT_SCAN_LIMIT {
            members_by_scan(bound, threshold, table)
        } else {
            members_by_generation(bound, threshold, table)
        };
        members.extend(pairs.into_iter().map(|(r, _)| p_j * r));
    }
    members.sort_unstable();
    Ok(members)
}

/// Number of divisors `d(n)` for `n >= 1`.
pub fn divisor_count(n: u64) -> Result<u64> {
    check_int(n)?;
    if n == 0 {
        return Err(invalid("divisor count requires n >= 1"));
    }
    let mut m = n;
    let mut count = 1u64;
    let mut run = |p: u64, m: &mut u64| {
        if (*m).is_multiple_of(p) {
            let mut a = 0u64;
            while (*m).is_multiple_of(p) {
                *m /= p;
                a += 1;
            }
            count *= a + 1;
        }
    };
    run(2, &mut m);
    run(3, &mut m);
    let mut p = 5;
    let mut step = 2;
    while p * p <= m {
        run(p, &mut m);
        p += step;
        step = 6 - step;
    }
    if m > 1 {
        count *= 2;
    }
    Ok(count)
}
