//! Exact and simulated laws.
//!
//! * [`BetaLaw`]: the continuous Beta(α, β) target.
//! * [`urn_pmf`]: the beta-binomial law of the number of white draws `S_n`
//!   from a Pólya-Eggenberger urn.
//! * [`walk_pmf`]: the law of the last zero `L_{2n}` of a simple symmetric
//!   random walk of length `2n`.
//!
//! Discrete laws live on a finite integer interval and carry both linear and
//! log-space masses. The unit-interval position of index `k` is
//! `k * step / scale`: the urn uses `step = 1, scale = n`, the walk stores
//! `L_{2n} = 2k` at index `k` with `step = 2, scale = 2n`.

use std::io::{Read, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::special::{
    log_beta, log_beta_density, log_falling_factorial, log_rising_factorial,
    regularized_incomplete_beta, PositiveReal,
};
use crate::sum::{compensated_sum, log_sum_exp, CompensatedSum};

/// Raw masses whose sum is further than this from one are renormalized.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-10;

/// Monte Carlo draws handled by one seeded stream.
const SIM_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaLaw {
    pub alpha: PositiveReal,
    pub beta: PositiveReal,
}

impl BetaLaw {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            alpha: PositiveReal::new(alpha)?,
            beta: PositiveReal::new(beta)?,
        })
    }

    /// Beta(1/2, 1/2).
    pub fn arcsine() -> Self {
        Self::new(0.5, 0.5).expect("1/2 is positive")
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.alpha.get()
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.beta.get()
    }

    pub fn mean(&self) -> f64 {
        self.a() / (self.a() + self.b())
    }

    pub fn ln_beta(&self) -> f64 {
        log_beta(self.a(), self.b()).expect("shapes are positive")
    }

    /// Density; zero outside `[0, 1]`, `+inf` at an endpoint where the
    /// exponent is negative.
    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let (a, b) = (self.a(), self.b());
        if x == 0.0 || x == 1.0 {
            let exponent = if x == 0.0 { a - 1.0 } else { b - 1.0 };
            return if exponent < 0.0 {
                f64::INFINITY
            } else if exponent > 0.0 {
                0.0
            } else {
                // a == 1 at 0 (or b == 1 at 1): the other factor is 1.
                (-self.ln_beta()).exp()
            };
        }
        log_beta_density(x, a, b, self.ln_beta()).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            regularized_incomplete_beta(x, self.a(), self.b()).expect("x in (0, 1)")
        }
    }

    /// `E[Z^a (1 - Z)^b] = B(α + a, β + b) / B(α, β)`.
    pub fn mixed_moment(&self, a: u32, b: u32) -> f64 {
        if a == 0 && b == 0 {
            return 1.0;
        }
        let num = log_beta(self.a() + f64::from(a), self.b() + f64::from(b)).expect("positive");
        (num - self.ln_beta()).exp()
    }
}

pub fn beta_pdf(law: &BetaLaw, x: f64) -> f64 {
    law.pdf(x)
}

pub fn beta_cdf(law: &BetaLaw, x: f64) -> f64 {
    law.cdf(x)
}

pub fn beta_mixed_moment(law: &BetaLaw, a: u32, b: u32) -> f64 {
    law.mixed_moment(a, b)
}

/// Pólya-Eggenberger urn: `alpha` white and `beta` black balls, `m` balls
/// of the drawn colour added after each of `n` draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UrnParams {
    pub alpha: u32,
    pub beta: u32,
    pub m: u32,
    pub n: u32,
}

impl UrnParams {
    pub fn new(alpha: u32, beta: u32, m: u32, n: u32) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("m", m), ("n", n)] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
            }
        }
        Ok(Self { alpha, beta, m, n })
    }

    /// `α / m`.
    pub fn shape_a(&self) -> f64 {
        f64::from(self.alpha) / f64::from(self.m)
    }

    /// `β / m`.
    pub fn shape_b(&self) -> f64 {
        f64::from(self.beta) / f64::from(self.m)
    }

    /// The Beta(α/m, β/m) limit of `S_n / n`.
    pub fn limit_law(&self) -> BetaLaw {
        BetaLaw::new(self.shape_a(), self.shape_b()).expect("validated")
    }

    pub fn with_n(&self, n: u32) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.m, n)
    }
}

/// Simple symmetric random walk of length `2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkParams {
    pub n: u32,
}

impl WalkParams {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        Ok(Self { n })
    }
}

/// A probability mass function on the integer interval
/// `support_lo ..= support_lo + masses.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    support_lo: i64,
    scale: f64,
    step: f64,
    masses: Vec<f64>,
    log_masses: Vec<f64>,
    raw_mass_deviation: f64,
    renormalized: bool,
}

#[derive(Serialize, Deserialize)]
struct DiscreteLawJson {
    support_lo: i64,
    scale: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    step: f64,
    masses: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

struct MassRow {
    k: i64,
    mass: f64,
}

impl MassRow {
    fn parse(record: &csv::StringRecord) -> Result<Self> {
        let field = |i: usize| {
            record
                .get(i)
                .map(str::trim)
                .ok_or_else(|| Error::Serialization(format!("row has {} fields, need 2", record.len())))
        };
        let k = field(0)?
            .parse()
            .map_err(|e| Error::Serialization(format!("bad k: {e}")))?;
        let mass = field(1)?
            .parse()
            .map_err(|e| Error::Serialization(format!("bad mass: {e}")))?;
        Ok(Self { k, mass })
    }
}

fn check_geometry(scale: f64, step: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be > 0, got {step}")));
    }
    Ok(())
}

impl DiscreteLaw {
    /// Build from log-masses. The raw sum's deviation from one is recorded and
    /// the masses are renormalized only if it exceeds
    /// [`RENORMALIZE_THRESHOLD`].
    pub fn from_log_masses(support_lo: i64, scale: f64, step: f64, mut log_masses: Vec<f64>) -> Result<Self> {
        check_geometry(scale, step)?;
        if log_masses.is_empty() {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        if let Some(bad) = log_masses.iter().find(|l| l.is_nan() || **l == f64::INFINITY) {
            return Err(Error::InvalidParameter(format!("invalid log-mass {bad}")));
        }
        let mut masses: Vec<f64> = log_masses.iter().map(|l| l.exp()).collect();
        let raw_mass_deviation = compensated_sum(masses.iter().copied()) - 1.0;
        let renormalized = raw_mass_deviation.abs() > RENORMALIZE_THRESHOLD;
        if renormalized {
            let lse = log_sum_exp(&log_masses);
            for l in log_masses.iter_mut() {
                *l -= lse;
            }
            masses = log_masses.iter().map(|l| l.exp()).collect();
        }
        Ok(Self {
            support_lo,
            scale,
            step,
            masses,
            log_masses,
            raw_mass_deviation,
            renormalized,
        })
    }

    /// Build from linear masses, which must be nonnegative and sum to one
    /// within `1e-12`.
    pub fn from_masses(support_lo: i64, scale: f64, step: f64, masses: Vec<f64>) -> Result<Self> {
        check_geometry(scale, step)?;
        if masses.is_empty() {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        if let Some(bad) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidParameter(format!("invalid mass {bad}")));
        }
        let total = compensated_sum(masses.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("masses sum to {total}, not 1")));
        }
        let log_masses = masses.iter().map(|m| m.ln()).collect();
        Ok(Self {
            support_lo,
            scale,
            step,
            masses,
            log_masses,
            raw_mass_deviation: total - 1.0,
            renormalized: false,
        })
    }

    /// Empirical law from occurrence counts.
    pub fn from_counts(support_lo: i64, scale: f64, step: f64, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParameter("no observations".into()));
        }
        let masses = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::from_masses(support_lo, scale, step, masses)
    }

    pub fn support_lo(&self) -> i64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> i64 {
        self.support_lo + self.masses.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_masses
    }

    /// Raw sum of masses minus one, before any renormalization.
    pub fn raw_mass_deviation(&self) -> f64 {
        self.raw_mass_deviation
    }

    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    /// Support indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.support_lo..=self.support_hi()
    }

    /// Mass at index `k`, zero off the support.
    pub fn mass(&self, k: i64) -> f64 {
        if k < self.support_lo || k > self.support_hi() {
            0.0
        } else {
            self.masses[(k - self.support_lo) as usize]
        }
    }

    /// Unit-interval position of index `k`.
    pub fn position(&self, k: i64) -> f64 {
        k as f64 * self.step / self.scale
    }

    /// `E g(K)` over support indices, ascending compensated summation.
    pub fn expect_index<F: Fn(i64) -> f64>(&self, g: F) -> f64 {
        let mut acc = CompensatedSum::new();
        for (k, p) in self.indices().zip(&self.masses) {
            acc.add(p * g(k));
        }
        acc.total()
    }

    /// `E h(X)` where `X` is the scaled position.
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        self.expect_index(|k| h(self.position(k)))
    }

    /// `(position, cumulative mass)` pairs in ascending order.
    pub fn cumulative(&self) -> Vec<(f64, f64)> {
        let mut acc = CompensatedSum::new();
        self.indices()
            .zip(&self.masses)
            .map(|(k, p)| {
                acc.add(*p);
                (self.position(k), acc.total())
            })
            .collect()
    }

    /// Total-variation distance to a law on the same support.
    pub fn total_variation(&self, other: &DiscreteLaw) -> Result<f64> {
        self.require_same_support(other)?;
        Ok(0.5 * compensated_sum(self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs())))
    }

    pub(crate) fn require_same_support(&self, other: &DiscreteLaw) -> Result<()> {
        if self.support_lo != other.support_lo || self.len() != other.len() {
            return Err(Error::SupportMismatch {
                expected_lo: self.support_lo,
                expected_hi: self.support_hi(),
                got_lo: other.support_lo,
                got_hi: other.support_hi(),
            });
        }
        Ok(())
    }

    /// CSV with header `k,mass`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "mass"])?;
        // `Display` for f64 is shortest-round-trip; the csv serializer is not.
        for (k, mass) in self.indices().zip(self.masses.iter()) {
            w.write_record([k.to_string(), mass.to_string()])?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }

    /// Parse the `k,mass` CSV. Geometry is not part of the schema and must be
    /// supplied.
    pub fn read_csv<R: Read>(reader: R, scale: f64, step: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut lo = None;
        let mut masses = Vec::new();
        for record in rdr.records() {
            let row = MassRow::parse(&record?)?;
            let expected = lo.map_or(row.k, |l: i64| l + masses.len() as i64);
            if row.k != expected {
                return Err(Error::Serialization(format!(
                    "support must be contiguous: expected k = {expected}, got {}",
                    row.k
                )));
            }
            lo.get_or_insert(row.k);
            masses.push(row.mass);
        }
        let lo = lo.ok_or_else(|| Error::Serialization("no rows".into()))?;
        Self::from_masses(lo, scale, step, masses)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DiscreteLawJson {
            support_lo: self.support_lo,
            scale: self.scale,
            step: self.step,
            masses: self.masses.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: DiscreteLawJson = serde_json::from_str(s)?;
        Self::from_masses(j.support_lo, j.scale, j.step, j.masses)
    }
}

/// Exact law of `S_n` on `{0, ..., n}` with scale `n`.
///
/// `p_0 = (β/m)_n / (α/m + β/m)_n`, and successive masses follow from the
/// ratio `p_{k+1} / p_k = (n - k)(α/m + k) / ((k + 1)(β/m + n - k - 1))`,
/// accumulated in log space. Building from the ratio keeps neighbouring
/// masses consistent to a few ulps, which the characterizing-operator
/// residuals depend on.
pub fn urn_pmf(params: &UrnParams) -> DiscreteLaw {
    let n = params.n as usize;
    let (a, b) = (params.shape_a(), params.shape_b());
    let nf = f64::from(params.n);
    let l0 = log_rising_factorial(b, n as u64).expect("positive") - log_rising_factorial(a + b, n as u64).expect("positive");
    let mut logs = Vec::with_capacity(n + 1);
    let mut acc = CompensatedSum::new();
    acc.add(l0);
    logs.push(l0);
    for k in 0..n {
        let kf = k as f64;
        let ratio = ((nf - kf) * (a + kf)) / ((kf + 1.0) * (b + nf - kf - 1.0));
        acc.add(ratio.ln());
        logs.push(acc.total());
    }
    DiscreteLaw::from_log_masses(0, nf, 1.0, logs).expect("finite log-masses")
}

/// `E([S_n]_a [n - S_n]_b) = [n]_{a+b} (α/m)_a (β/m)_b / (α/m + β/m)_{a+b}`,
/// exactly zero when `a + b > n`.
pub fn urn_factorial_moment(params: &UrnParams, a: u32, b: u32) -> f64 {
    let falling = log_falling_factorial(f64::from(params.n), u64::from(a + b));
    if falling.is_zero() {
        return 0.0;
    }
    let (sa, sb) = (params.shape_a(), params.shape_b());
    let ln = falling.ln_abs + log_rising_factorial(sa, u64::from(a)).expect("positive")
        + log_rising_factorial(sb, u64::from(b)).expect("positive")
        - log_rising_factorial(sa + sb, u64::from(a + b)).expect("positive");
    ln.exp()
}

/// `ln u_{2j}` for `j = 0..=n`, where `u_{2j} = 2^{-2j} C(2j, j)`, via
/// `u_{2j} = u_{2j-2} (1 - 1/(2j))`.
fn log_return_probabilities(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = CompensatedSum::new();
    out.push(0.0);
    for j in 1..=n {
        acc.add((-0.5 / j as f64).ln_1p());
        out.push(acc.total());
    }
    out
}

/// Exact law of `L_{2n}`: `P(L_{2n} = 2k) = u_{2k} u_{2n-2k}`, stored at
/// index `k` with `step = 2`, `scale = 2n`.
pub fn walk_pmf(params: &WalkParams) -> DiscreteLaw {
    let n = params.n as usize;
    let lu = log_return_probabilities(n);
    let logs = (0..=n).map(|k| lu[k] + lu[n - k]).collect();
    DiscreteLaw::from_log_masses(0, 2.0 * f64::from(params.n), 2.0, logs).expect("finite log-masses")
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunk_sizes(draws: u64) -> Vec<(u64, u64)> {
    let chunks = draws.div_ceil(SIM_CHUNK);
    (0..chunks)
        .map(|c| (c, SIM_CHUNK.min(draws - c * SIM_CHUNK)))
        .collect()
}

fn merge_counts(parts: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    let mut counts = vec![0u64; len];
    for part in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    counts
}

fn run_urn<R: Rng>(params: &UrnParams, rng: &mut R) -> usize {
    let mut white = u64::from(params.alpha);
    let mut total = u64::from(params.alpha) + u64::from(params.beta);
    let m = u64::from(params.m);
    let mut whites_drawn = 0;
    for _ in 0..params.n {
        if rng.random_range(0..total) < white {
            white += m;
            whites_drawn += 1;
        }
        total += m;
    }
    whites_drawn
}

/// Empirical law of `S_n` from `draws` seeded urn runs. Output depends only
/// on `(params, draws, seed)`, not on the execution strategy.
pub fn simulate_urn(params: &UrnParams, draws: u64, seed: u64) -> Result<DiscreteLaw> {
    simulate_urn_with(params, draws, seed, Exec::default())
}

pub fn simulate_urn_with(params: &UrnParams, draws: u64, seed: u64, exec: Exec) -> Result<DiscreteLaw> {
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be >= 1".into()));
    }
    let len = params.n as usize + 1;
    let parts = exec.map(&chunk_sizes(draws), |&(chunk, size)| {
        let mut rng = chunk_rng(seed, chunk);
        let mut counts = vec![0u64; len];
        for _ in 0..size {
            counts[run_urn(params, &mut rng)] += 1;
        }
        counts
    });
    DiscreteLaw::from_counts(0, f64::from(params.n), 1.0, &merge_counts(parts, len))
}

// Last time in 0..=2n at which the walk sits at zero.
fn run_walk<R: RngCore>(n: u32, rng: &mut R) -> u32 {
    let mut position = 0i64;
    let mut last_zero = 0u32;
    let mut bits = 0u64;
    let mut remaining = 0u32;
    for t in 1..=2 * n {
        if remaining == 0 {
            bits = rng.next_u64();
            remaining = 64;
        }
        position += if bits & 1 == 1 { 1 } else { -1 };
        bits >>= 1;
        remaining -= 1;
        if position == 0 {
            last_zero = t;
        }
    }
    last_zero
}

/// Empirical law of `L_{2n}` (index `k` counts `L_{2n} = 2k`).
pub fn simulate_walk_l(params: &WalkParams, draws: u64, seed: u64) -> Result<DiscreteLaw> {
    simulate_walk_l_with(params, draws, seed, Exec::default())
}

pub fn simulate_walk_l_with(params: &WalkParams, draws: u64, seed: u64, exec: Exec) -> Result<DiscreteLaw> {
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be >= 1".into()));
    }
    let len = params.n as usize + 1;
    let parts = exec.map(&chunk_sizes(draws), |&(chunk, size)| {
        let mut rng = chunk_rng(seed, chunk);
        let mut counts = vec![0u64; len];
        for _ in 0..size {
            counts[(run_walk(params.n, &mut rng) / 2) as usize] += 1;
        }
        counts
    });
    DiscreteLaw::from_counts(0, 2.0 * f64::from(params.n), 2.0, &merge_counts(parts, len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn beta_pdf_examples() {
        let uniform = BetaLaw::new(1.0, 1.0).unwrap();
        assert!(close(uniform.pdf(0.3), 1.0, 1e-14));
        assert!(close(BetaLaw::arcsine().pdf(0.5), 2.0 / PI, 1e-14));
        assert_eq!(BetaLaw::new(2.0, 5.0).unwrap().pdf(-0.2), 0.0);
        assert_eq!(BetaLaw::arcsine().pdf(0.0), f64::INFINITY);
        assert_eq!(BetaLaw::new(2.0, 2.0).unwrap().pdf(1.0), 0.0);
        assert!(close(BetaLaw::new(1.0, 3.0).unwrap().pdf(0.0), 3.0, 1e-13));
    }

    #[test]
    fn beta_cdf_examples() {
        let uniform = BetaLaw::new(1.0, 1.0).unwrap();
        assert!(close(uniform.cdf(0.7), 0.7, 1e-15));
        assert!(close(BetaLaw::arcsine().cdf(0.25), 1.0 / 3.0, 1e-14));
        assert_eq!(BetaLaw::new(3.0, 2.0).unwrap().cdf(1.5), 1.0);
        assert_eq!(BetaLaw::new(3.0, 2.0).unwrap().cdf(-0.5), 0.0);
    }

    #[test]
    fn mixed_moment_examples() {
        assert_eq!(BetaLaw::new(2.3, 0.7).unwrap().mixed_moment(0, 0), 1.0);
        assert!(close(BetaLaw::arcsine().mixed_moment(2, 0), 3.0 / 8.0, 1e-14));
        assert!(close(BetaLaw::new(1.0, 1.0).unwrap().mixed_moment(1, 1), 1.0 / 6.0, 1e-14));
    }

    #[test]
    fn urn_params_reject_zero() {
        assert!(UrnParams::new(0, 1, 1, 1).is_err());
        assert!(UrnParams::new(1, 1, 0, 1).is_err());
        assert!(WalkParams::new(0).is_err());
    }

    #[test]
    fn urn_pmf_small_cases() {
        let law = urn_pmf(&UrnParams::new(1, 1, 1, 2).unwrap());
        for p in law.masses() {
            assert!(close(*p, 1.0 / 3.0, 1e-15));
        }
        let law = urn_pmf(&UrnParams::new(1, 1, 1, 1).unwrap());
        assert_eq!(law.len(), 2);
        assert!(close(law.mass(0), 0.5, 1e-15));
        // Two-step tree from 2 white, 1 black: P(BB) = 1/3 * 2/4,
        // P(WW) = 2/3 * 3/4.
        let law = urn_pmf(&UrnParams::new(2, 1, 1, 2).unwrap());
        assert!(close(law.mass(0), 1.0 / 6.0, 1e-15));
        assert!(close(law.mass(1), 1.0 / 3.0, 1e-15));
        assert!(close(law.mass(2), 1.0 / 2.0, 1e-15));
        assert_eq!(law.scale(), 2.0);
        assert!(!law.was_renormalized());
    }

    #[test]
    fn urn_pmf_large_n_is_normalized_without_help() {
        let law = urn_pmf(&UrnParams::new(3, 7, 2, 5000).unwrap());
        assert!(law.raw_mass_deviation().abs() < RENORMALIZE_THRESHOLD);
        assert!(law.masses().iter().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn factorial_moment_examples() {
        let p = UrnParams::new(1, 1, 1, 10).unwrap();
        assert_eq!(urn_factorial_moment(&p, 0, 0), 1.0);
        let brute = urn_pmf(&p).expect_index(|k| k as f64);
        assert!(close(urn_factorial_moment(&p, 1, 0), 5.0, 1e-13));
        assert!(close(brute, 5.0, 1e-13));
        let p3 = UrnParams::new(2, 3, 1, 3).unwrap();
        assert_eq!(urn_factorial_moment(&p3, 2, 2), 0.0);
    }

    #[test]
    fn walk_pmf_small_cases() {
        let law = walk_pmf(&WalkParams::new(1).unwrap());
        assert!(close(law.mass(0), 0.5, 1e-15) && close(law.mass(1), 0.5, 1e-15));
        let law = walk_pmf(&WalkParams::new(2).unwrap());
        let want = [3.0 / 8.0, 1.0 / 4.0, 3.0 / 8.0];
        for (k, w) in want.iter().enumerate() {
            assert!(close(law.mass(k as i64), *w, 1e-15));
        }
        assert_eq!(law.position(1), 0.5);
        let law = walk_pmf(&WalkParams::new(37).unwrap());
        for k in 0..=37 {
            assert_eq!(law.mass(k), law.mass(37 - k));
        }
    }

    #[test]
    fn simulate_urn_matches_exact_law() {
        let p = UrnParams::new(1, 1, 1, 2).unwrap();
        let sim = simulate_urn(&p, 1_000_000, 7).unwrap();
        assert!(sim.total_variation(&urn_pmf(&p)).unwrap() <= 0.005);
        let again = simulate_urn(&p, 1_000_000, 7).unwrap();
        assert_eq!(sim, again);
    }

    #[test]
    fn simulate_urn_single_draw() {
        let p = UrnParams::new(2, 5, 3, 1).unwrap();
        let draws = 200_000u64;
        let sim = simulate_urn(&p, draws, 11).unwrap();
        let q = 2.0 / 7.0;
        let sigma = (q * (1.0 - q) / draws as f64).sqrt();
        assert!((sim.mass(1) - q).abs() <= 3.0 * sigma);
    }

    #[test]
    fn simulation_is_strategy_independent() {
        let p = UrnParams::new(2, 3, 1, 6).unwrap();
        let draws = 3 * SIM_CHUNK + 17;
        let a = simulate_urn_with(&p, draws, 5, Exec::Sequential).unwrap();
        let b = simulate_urn_with(&p, draws, 5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let w = WalkParams::new(4).unwrap();
        let a = simulate_walk_l_with(&w, draws, 5, Exec::Sequential).unwrap();
        let b = simulate_walk_l_with(&w, draws, 5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulate_walk_matches_exact_law() {
        for n in [1u32, 2] {
            let w = WalkParams::new(n).unwrap();
            let draws = 400_000u64;
            let sim = simulate_walk_l(&w, draws, 3).unwrap();
            let exact = walk_pmf(&w);
            for k in exact.indices() {
                let p = exact.mass(k);
                let sigma = (p * (1.0 - p) / draws as f64).sqrt();
                assert!((sim.mass(k) - p).abs() <= 3.0 * sigma, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn zero_draws_rejected() {
        assert!(simulate_urn(&UrnParams::new(1, 1, 1, 1).unwrap(), 0, 0).is_err());
        assert!(simulate_walk_l(&WalkParams::new(1).unwrap(), 0, 0).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let law = walk_pmf(&WalkParams::new(6).unwrap());
        let mut buf = Vec::new();
        law.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,mass\n0,"));
        let back = DiscreteLaw::read_csv(&buf[..], law.scale(), law.step()).unwrap();
        assert_eq!(back.masses(), law.masses());
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(buf, again);

        let json = law.to_json().unwrap();
        assert!(json.contains("\"step\":2.0"));
        assert_eq!(DiscreteLaw::from_json(&json).unwrap().masses(), law.masses());
        let urn_json = urn_pmf(&UrnParams::new(1, 1, 1, 2).unwrap()).to_json().unwrap();
        assert!(!urn_json.contains("step"));
    }

    #[test]
    fn csv_rejects_gaps() {
        let text = "k,mass\n0,0.5\n2,0.5\n";
        assert!(DiscreteLaw::read_csv(text.as_bytes(), 2.0, 1.0).is_err());
    }

    #[test]
    fn from_masses_validates() {
        assert!(DiscreteLaw::from_masses(0, 1.0, 1.0, vec![0.5, 0.4]).is_err());
        assert!(DiscreteLaw::from_masses(0, 1.0, 1.0, vec![1.5, -0.5]).is_err());
        assert!(DiscreteLaw::from_masses(0, 0.0, 1.0, vec![1.0]).is_err());
        assert!(DiscreteLaw::from_masses(0, 1.0, 1.0, vec![]).is_err());
    }
}
