//! Discrete density-approach Stein operators.
//!
//! For a mass function `p` on a finite integer interval `[a, b]`,
//! `ψ(k) = (p(k+1) - p(k)) / p(k)` with `p(b+1) = 0`, and
//! `E[Δf(X-1) + ψ(X) f(X)] = 0` for every `f` with `f(a-1) = 0` exactly when
//! `X ~ p`. Multiplying the test function by a nonvanishing `c` gives the
//! equivalent operators `c(k-1) Δf(k-1) + (c(k)ψ(k) + c(k) - c(k-1)) f(k)`;
//! the urn and walk operators are two such choices.
//!
//! All expectations are summed in ascending `k` with compensation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::{urn_pmf, walk_pmf, DiscreteLaw, UrnParams, WalkParams};
use crate::error::{Error, Result};
use crate::sum::{log_sum_exp, CompensatedSum};

/// `ψ` evaluated on a support interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    support_lo: i64,
    values: Vec<f64>,
}

impl PsiTable {
    pub fn new(support_lo: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty psi table".into()));
        }
        Ok(Self { support_lo, values })
    }

    pub fn support_lo(&self) -> i64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> i64 {
        self.support_lo + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, k: i64) -> f64 {
        self.values[(k - self.support_lo) as usize]
    }
}

/// A test function tabulated on `[a - 1, b]` that vanishes at `a - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    support_lo: i64,
    // values[0] is f(a - 1).
    values: Vec<f64>,
}

impl TestFunction {
    /// `values[0]` is `f(support_lo - 1)` and must be zero.
    pub fn new(support_lo: i64, values: Vec<f64>) -> Result<Self> {
        match values.first() {
            None => Err(Error::InvalidParameter("empty test function".into())),
            Some(&v) if v != 0.0 => Err(Error::NotAdmissible {
                k: support_lo - 1,
                value: v,
            }),
            Some(_) => Ok(Self { support_lo, values }),
        }
    }

    /// Tabulate `f` on `[lo, hi]`; the value at `lo - 1` is set to zero.
    pub fn from_fn<F: Fn(i64) -> f64>(lo: i64, hi: i64, f: F) -> Self {
        let values = std::iter::once(0.0).chain((lo..=hi).map(f)).collect();
        Self {
            support_lo: lo,
            values,
        }
    }

    /// Tabulate `f` on the support of `law`.
    pub fn on_law<F: Fn(i64) -> f64>(law: &DiscreteLaw, f: F) -> Self {
        Self::from_fn(law.support_lo(), law.support_hi(), f)
    }

    /// The indicator `1{k = ell}`.
    pub fn indicator(lo: i64, hi: i64, ell: i64) -> Self {
        Self::from_fn(lo, hi, |k| if k == ell { 1.0 } else { 0.0 })
    }

    pub fn support_lo(&self) -> i64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> i64 {
        self.support_lo + self.values.len() as i64 - 2
    }

    /// `f(k)` for `k` in `[a - 1, b]`.
    pub fn at(&self, k: i64) -> f64 {
        self.values[(k - self.support_lo + 1) as usize]
    }

    /// Tabulated values on `[a - 1, b]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A multiplier `c` tabulated on `[a - 1, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CFunction {
    support_lo: i64,
    values: Vec<f64>,
}

impl CFunction {
    /// `values[0]` is `c(support_lo - 1)`.
    ///
    /// `c` must not vanish on `[a, b - 1]`. `c(a - 1)` may be anything
    /// since it only multiplies `Δf(a - 1) = f(a)`, and `c(b)` may be
    /// anything when `ψ(b) = -1`; [`c_transformed_expectation`] checks the
    /// latter against the `ψ` it is given.
    pub fn new(support_lo: i64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("c-function needs at least two values".into()));
        }
        let interior = &values[1..values.len() - 1];
        if let Some(i) = interior.iter().position(|c| *c == 0.0 || !c.is_finite()) {
            return Err(Error::ZeroCFunction {
                k: support_lo + i as i64,
            });
        }
        Ok(Self { support_lo, values })
    }

    pub fn from_fn<F: Fn(i64) -> f64>(lo: i64, hi: i64, c: F) -> Result<Self> {
        Self::new(lo, ((lo - 1)..=hi).map(c).collect())
    }

    pub fn constant(lo: i64, hi: i64, value: f64) -> Result<Self> {
        Self::from_fn(lo, hi, |_| value)
    }

    pub fn support_lo(&self) -> i64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> i64 {
        self.support_lo + self.values.len() as i64 - 2
    }

    pub fn at(&self, k: i64) -> f64 {
        self.values[(k - self.support_lo + 1) as usize]
    }
}

/// `ψ(k) = Δp(k) / p(k)` on the support, from log-mass differences.
pub fn psi_of(law: &DiscreteLaw) -> Result<PsiTable> {
    let logs = law.log_masses();
    if let Some(i) = law.masses().iter().position(|p| *p <= 0.0) {
        return Err(Error::ZeroMass {
            k: law.support_lo() + i as i64,
        });
    }
    let mut values: Vec<f64> = logs.windows(2).map(|w| (w[1] - w[0]).exp_m1()).collect();
    values.push(-1.0);
    PsiTable::new(law.support_lo(), values)
}

fn check_support(law: &DiscreteLaw, lo: i64, hi: i64) -> Result<()> {
    if lo != law.support_lo() || hi != law.support_hi() {
        return Err(Error::SupportMismatch {
            expected_lo: law.support_lo(),
            expected_hi: law.support_hi(),
            got_lo: lo,
            got_hi: hi,
        });
    }
    Ok(())
}

/// `E[Δf(X - 1) + ψ(X) f(X)]` with `X ~ law`.
///
/// Vanishes (to rounding) when `psi` was built from `law` itself.
pub fn density_operator_expectation(law: &DiscreteLaw, psi: &PsiTable, f: &TestFunction) -> Result<f64> {
    check_support(law, psi.support_lo(), psi.support_hi())?;
    check_support(law, f.support_lo(), f.support_hi())?;
    let mut acc = CompensatedSum::new();
    for (k, p) in law.indices().zip(law.masses()) {
        let fk = f.at(k);
        let df = fk - f.at(k - 1);
        acc.add(p * (df + psi.at(k) * fk));
    }
    Ok(acc.total())
}

/// `E[c(X-1) Δf(X-1) + (c(X)ψ(X) + c(X) - c(X-1)) f(X)]` with `X ~ law`.
///
/// With `c ≡ 1` every term is bit-identical to the corresponding term of
/// [`density_operator_expectation`].
pub fn c_transformed_expectation(
    law: &DiscreteLaw,
    psi: &PsiTable,
    c: &CFunction,
    f: &TestFunction,
) -> Result<f64> {
    check_support(law, psi.support_lo(), psi.support_hi())?;
    check_support(law, f.support_lo(), f.support_hi())?;
    check_support(law, c.support_lo(), c.support_hi())?;
    let hi = law.support_hi();
    if c.at(hi) == 0.0 && psi.at(hi) != -1.0 {
        return Err(Error::ZeroCFunction { k: hi });
    }
    let mut acc = CompensatedSum::new();
    for (k, p) in law.indices().zip(law.masses()) {
        let fk = f.at(k);
        let df = fk - f.at(k - 1);
        let (ck, cprev) = (c.at(k), c.at(k - 1));
        let coef = ck * psi.at(k) + (ck - cprev);
        acc.add(p * (cprev * df + coef * fk));
    }
    Ok(acc.total())
}

/// The multiplier that turns the density operator of the urn law into the
/// urn operator: `c(k) = (k + 1)(β/m + n - k - 1)` for `k < n`, `c(n) = n`.
pub fn urn_c_function(params: &UrnParams) -> CFunction {
    let n = i64::from(params.n);
    let b = params.shape_b();
    CFunction::from_fn(0, n, |k| {
        if k == n {
            n as f64
        } else {
            (k + 1) as f64 * (b + (n - k - 1) as f64)
        }
    })
    .expect("nonzero on 0..n")
}

/// Closed form of `ψ` for the urn law.
pub fn urn_psi_closed_form(params: &UrnParams) -> PsiTable {
    let n = f64::from(params.n);
    let (a, b) = (params.shape_a(), params.shape_b());
    let values = (0..=params.n)
        .map(|k| {
            let k = f64::from(k);
            if k == n {
                -1.0
            } else {
                ((n - k) * (a + k) - (k + 1.0) * (b + n - k - 1.0)) / ((k + 1.0) * (b + n - k - 1.0))
            }
        })
        .collect();
    PsiTable::new(0, values).expect("nonempty")
}

/// `E[S(β/m + n - S) Δf(S - 1) + {(n - S)(α/m + S) - S(β/m + n - S)} f(S)]`
/// with `S` drawn from `law` (normally the urn law itself).
pub fn urn_operator_expectation_under(law: &DiscreteLaw, params: &UrnParams, f: &TestFunction) -> Result<f64> {
    let n = i64::from(params.n);
    check_support(law, 0, n)?;
    check_support(law, f.support_lo(), f.support_hi())?;
    let (a, b) = (params.shape_a(), params.shape_b());
    let nf = n as f64;
    let mut acc = CompensatedSum::new();
    for (k, p) in law.indices().zip(law.masses()) {
        let s = k as f64;
        let fk = f.at(k);
        let df = fk - f.at(k - 1);
        let lead = s * (b + nf - s);
        let coef = (nf - s) * (a + s) - s * (b + nf - s);
        acc.add(p * (lead * df + coef * fk));
    }
    Ok(acc.total())
}

/// The urn characterizing operator's expectation under the urn law.
pub fn urn_operator_expectation(params: &UrnParams, f: &TestFunction) -> Result<f64> {
    urn_operator_expectation_under(&urn_pmf(params), params, f)
}

/// Closed form of `ψ` for the law of `L_{2n}` indexed by `k = L_{2n} / 2`.
pub fn walk_psi_closed_form(params: &WalkParams) -> PsiTable {
    let n = f64::from(params.n);
    let values = (0..=params.n)
        .map(|k| {
            let k = f64::from(k);
            if k == n {
                -1.0
            } else {
                (2.0 * k - n + 1.0) / ((k + 1.0) * (2.0 * (n - k) - 1.0))
            }
        })
        .collect();
    PsiTable::new(0, values).expect("nonempty")
}

/// `c(k) = (k + 1)(2(n - k) - 1)`, the multiplier behind the walk operator.
pub fn walk_c_function(params: &WalkParams) -> CFunction {
    let n = i64::from(params.n);
    CFunction::from_fn(0, n, |k| ((k + 1) * (2 * (n - k) - 1)) as f64).expect("nonzero on 0..n")
}

/// `E[n W (1 - W + 1/(2n)) Δ_{1/n} f(W - 1/n) + (1/2 - W) f(W)]` with
/// `W = k / n` and `k` drawn from `law` on `{0, ..., n}`.
///
/// `Δ_{1/n} f(w) = f(w + 1/n) - f(w)`. At `W = 0` the leading coefficient
/// vanishes, so `f(-1/n)` never enters.
pub fn walk_operator_expectation_under<F: Fn(f64) -> f64>(law: &DiscreteLaw, params: &WalkParams, f: F) -> Result<f64> {
    let n = i64::from(params.n);
    check_support(law, 0, n)?;
    let nf = n as f64;
    let mut acc = CompensatedSum::new();
    for (k, p) in law.indices().zip(law.masses()) {
        let w = k as f64 / nf;
        let fw = f(w);
        let lead = nf * w * (1.0 - w + 0.5 / nf);
        let diff = if k == 0 { 0.0 } else { fw - f((k - 1) as f64 / nf) };
        acc.add(p * (lead * diff + (0.5 - w) * fw));
    }
    Ok(acc.total())
}

/// The walk characterizing operator's expectation under the law of
/// `L_{2n} / (2n)`.
pub fn walk_operator_expectation<F: Fn(f64) -> f64>(params: &WalkParams, f: F) -> Result<f64> {
    walk_operator_expectation_under(&walk_pmf(params), params, f)
}

/// The unique law with `p(k + 1) / p(k) = 1 + ψ(k)`.
pub fn reconstruct_pmf(psi: &PsiTable, scale: f64, step: f64) -> Result<DiscreteLaw> {
    let values = psi.values();
    let (interior, last) = values.split_at(values.len() - 1);
    if (last[0] + 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "psi at the top of the support must be -1, got {}",
            last[0]
        )));
    }
    let mut logs = Vec::with_capacity(values.len());
    let mut acc = CompensatedSum::new();
    logs.push(0.0);
    for (i, &v) in interior.iter().enumerate() {
        if !(v > -1.0) || !v.is_finite() {
            return Err(Error::NonPositiveRatio {
                k: psi.support_lo() + i as i64,
                value: v,
            });
        }
        acc.add(v.ln_1p());
        logs.push(acc.total());
    }
    let lse = log_sum_exp(&logs);
    let logs = logs.into_iter().map(|l| l - lse).collect();
    DiscreteLaw::from_log_masses(psi.support_lo(), scale, step, logs)
}

/// `count` seeded test functions on `[lo, hi]` with values uniform in
/// `[-1, 1]`, each vanishing at `lo - 1`.
pub fn random_test_functions(lo: i64, hi: i64, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let values: Vec<f64> = (lo..=hi).map(|_| rng.random_range(-1.0..=1.0)).collect();
            TestFunction::from_fn(lo, hi, |k| values[(k - lo) as usize])
        })
        .collect()
}

/// Indicators of every support point, then `1, k, k^2, k^3` scaled into
/// `[-1, 1]` on the support.
pub fn structured_test_functions(lo: i64, hi: i64) -> Vec<TestFunction> {
    let mut out: Vec<TestFunction> = (lo..=hi).map(|ell| TestFunction::indicator(lo, hi, ell)).collect();
    let span = (hi - lo).max(1) as f64;
    for degree in 0..=3 {
        out.push(TestFunction::from_fn(lo, hi, |k| ((k - lo) as f64 / span).powi(degree)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::log_gamma;

    fn urn(a: u32, b: u32, m: u32, n: u32) -> UrnParams {
        UrnParams::new(a, b, m, n).unwrap()
    }

    #[test]
    fn psi_of_uniform() {
        let law = urn_pmf(&urn(1, 1, 1, 6));
        let psi = psi_of(&law).unwrap();
        for k in 0..6 {
            assert!(psi.at(k).abs() < 1e-14);
        }
        assert_eq!(psi.at(6), -1.0);
        let psi2 = psi_of(&urn_pmf(&urn(1, 1, 1, 2))).unwrap();
        assert!(psi2.at(0).abs() < 1e-15 && psi2.at(1).abs() < 1e-15);
        assert_eq!(psi2.at(2), -1.0);
    }

    #[test]
    fn psi_of_truncated_poisson() {
        let lambda: f64 = 3.5;
        let logs: Vec<f64> = (0..40)
            .map(|k| -lambda + k as f64 * lambda.ln() - log_gamma(k as f64 + 1.0).unwrap())
            .collect();
        let law = DiscreteLaw::from_log_masses(0, 1.0, 1.0, logs).unwrap();
        let psi = psi_of(&law).unwrap();
        for k in 0..10 {
            let want = lambda / (k as f64 + 1.0) - 1.0;
            assert!((psi.at(k) - want).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn psi_rejects_zero_mass() {
        let law = DiscreteLaw::from_masses(0, 2.0, 1.0, vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(psi_of(&law), Err(Error::ZeroMass { k: 1 }));
    }

    #[test]
    fn psi_matches_closed_forms() {
        let p = urn(2, 3, 1, 40);
        let numeric = psi_of(&urn_pmf(&p)).unwrap();
        let exact = urn_psi_closed_form(&p);
        for (x, y) in numeric.values().iter().zip(exact.values()) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
        let w = WalkParams::new(25).unwrap();
        let numeric = psi_of(&walk_pmf(&w)).unwrap();
        let exact = walk_psi_closed_form(&w);
        for (x, y) in numeric.values().iter().zip(exact.values()) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn density_operator_examples() {
        let law = urn_pmf(&urn(1, 1, 1, 5));
        let psi = psi_of(&law).unwrap();
        for ell in 0..=5 {
            let f = TestFunction::indicator(0, 5, ell);
            assert!(density_operator_expectation(&law, &psi, &f).unwrap().abs() <= 1e-12);
        }
        let f = TestFunction::on_law(&law, |k| k as f64);
        assert!(density_operator_expectation(&law, &psi, &f).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn density_operator_detects_mismatch() {
        // psi from urn(1,1,1,2) is (0, 0, -1); under urn(2,1,1,2) with
        // f = 1{k = 0} the sum is p(0) (1 + 0) - p(1) = 1/6 - 1/3 = -1/6.
        let psi = psi_of(&urn_pmf(&urn(1, 1, 1, 2))).unwrap();
        let other = urn_pmf(&urn(2, 1, 1, 2));
        let f = TestFunction::indicator(0, 2, 0);
        let v = density_operator_expectation(&other, &psi, &f).unwrap();
        assert!((v + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn density_operator_support_mismatch() {
        let law = urn_pmf(&urn(1, 1, 1, 5));
        let psi = psi_of(&law).unwrap();
        let f = TestFunction::indicator(0, 4, 0);
        assert!(matches!(
            density_operator_expectation(&law, &psi, &f),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn test_function_admissibility() {
        assert!(matches!(
            TestFunction::new(0, vec![1.0, 2.0]),
            Err(Error::NotAdmissible { k: -1, .. })
        ));
        let f = TestFunction::new(3, vec![0.0, 2.0, 5.0]).unwrap();
        assert_eq!(f.support_hi(), 4);
        assert_eq!(f.at(2), 0.0);
        assert_eq!(f.at(4), 5.0);
    }

    #[test]
    fn c_function_validation() {
        assert!(matches!(
            CFunction::new(0, vec![1.0, 0.0, 1.0, 1.0]),
            Err(Error::ZeroCFunction { k: 0 })
        ));
        // Zero allowed below the support and at the top.
        assert!(CFunction::new(0, vec![0.0, 1.0, 2.0, 0.0]).is_ok());
        let law = DiscreteLaw::from_masses(0, 2.0, 1.0, vec![0.2, 0.3, 0.5]).unwrap();
        let fake_psi = PsiTable::new(0, vec![0.5, 0.6, -0.5]).unwrap();
        let c = CFunction::new(0, vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        let f = TestFunction::indicator(0, 2, 1);
        assert_eq!(
            c_transformed_expectation(&law, &fake_psi, &c, &f),
            Err(Error::ZeroCFunction { k: 2 })
        );
    }

    #[test]
    fn c_transform_reductions() {
        let law = urn_pmf(&urn(2, 3, 1, 7));
        let psi = psi_of(&law).unwrap();
        let one = CFunction::constant(0, 7, 1.0).unwrap();
        for f in random_test_functions(0, 7, 10, 1) {
            let plain = density_operator_expectation(&law, &psi, &f).unwrap();
            let transformed = c_transformed_expectation(&law, &psi, &one, &f).unwrap();
            assert_eq!(plain.to_bits(), transformed.to_bits());
        }
        let zero = TestFunction::from_fn(0, 7, |_| 0.0);
        let c = urn_c_function(&urn(2, 3, 1, 7));
        assert_eq!(c_transformed_expectation(&law, &psi, &c, &zero).unwrap(), 0.0);
    }

    #[test]
    fn urn_operator_equals_c_transform() {
        for p in [urn(1, 1, 1, 10), urn(3, 2, 2, 25), urn(7, 1, 3, 60)] {
            let law = urn_pmf(&p);
            let psi = psi_of(&law).unwrap();
            let c = urn_c_function(&p);
            for f in random_test_functions(0, i64::from(p.n), 20, 9) {
                let direct = urn_operator_expectation(&p, &f).unwrap();
                let via_c = c_transformed_expectation(&law, &psi, &c, &f).unwrap();
                assert!((direct - via_c).abs() <= 1e-11, "{p:?}: {direct} vs {via_c}");
            }
        }
    }

    #[test]
    fn urn_operator_examples() {
        let p = urn(2, 3, 1, 4);
        let law = urn_pmf(&p);
        let f0 = TestFunction::indicator(0, 4, 0);
        assert!(urn_operator_expectation(&p, &f0).unwrap().abs() <= 1e-12);
        // The two surviving terms: n (α/m) p_0 = (β/m + n - 1) p_1.
        let lhs = 4.0 * 2.0 * law.mass(0);
        let rhs = (3.0 + 4.0 - 1.0) * law.mass(1);
        assert!((lhs - rhs).abs() <= 1e-14);

        let p = urn(1, 1, 1, 10);
        let f = TestFunction::from_fn(0, 10, |k| k as f64);
        assert!(urn_operator_expectation(&p, &f).unwrap().abs() <= 1e-10);
        let zero = TestFunction::from_fn(0, 10, |_| 0.0);
        assert_eq!(urn_operator_expectation(&p, &zero).unwrap(), 0.0);
    }

    #[test]
    fn walk_operator_examples() {
        for n in [1u32, 2, 7, 100, 2000] {
            let p = WalkParams::new(n).unwrap();
            assert!(walk_operator_expectation(&p, |_| 1.0).unwrap().abs() <= 1e-12);
            assert!(walk_operator_expectation(&p, |w| w).unwrap().abs() <= 1e-12);
        }
        // n = 1: W in {0, 1} with mass 1/2 each. At W = 1 the lead
        // coefficient is 1 * 1 * (1/2), so the sum is
        // 1/2 [ (1/2) f(0) ] + 1/2 [ (1/2)(f(1) - f(0)) - (1/2) f(1) ] = 0.
        let p = WalkParams::new(1).unwrap();
        let v = walk_operator_expectation(&p, |w| if w == 0.0 { 3.7 } else { -1.3 }).unwrap();
        assert!(v.abs() <= 1e-15);
    }

    #[test]
    fn walk_operator_equals_c_transform() {
        let p = WalkParams::new(30).unwrap();
        let law = walk_pmf(&p);
        let psi = psi_of(&law).unwrap();
        let c = walk_c_function(&p);
        for f in random_test_functions(0, 30, 10, 4) {
            // The walk operator is the c-transformed operator divided by 2n.
            let via_c = c_transformed_expectation(&law, &psi, &c, &f).unwrap() / 60.0;
            let direct = walk_operator_expectation(&p, |w| f.at((w * 30.0).round() as i64)).unwrap();
            assert!((direct - via_c).abs() <= 1e-12);
        }
    }

    #[test]
    fn reconstruct_examples() {
        let psi = PsiTable::new(0, vec![0.0, 0.0, 0.0, -1.0]).unwrap();
        let law = reconstruct_pmf(&psi, 3.0, 1.0).unwrap();
        for p in law.masses() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let urn_law = urn_pmf(&urn(2, 3, 1, 7));
        let back = reconstruct_pmf(&psi_of(&urn_law).unwrap(), 7.0, 1.0).unwrap();
        for (x, y) in back.masses().iter().zip(urn_law.masses()) {
            assert!((x - y).abs() <= 1e-10);
        }
        let walk_law = walk_pmf(&WalkParams::new(5).unwrap());
        let back = reconstruct_pmf(&psi_of(&walk_law).unwrap(), 10.0, 2.0).unwrap();
        for (x, y) in back.masses().iter().zip(walk_law.masses()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn reconstruct_rejects_bad_ratios() {
        let psi = PsiTable::new(0, vec![0.0, -1.0, 0.0, -1.0]).unwrap();
        assert_eq!(
            reconstruct_pmf(&psi, 3.0, 1.0),
            Err(Error::NonPositiveRatio { k: 1, value: -1.0 })
        );
        let psi = PsiTable::new(0, vec![0.0, 0.5]).unwrap();
        assert!(reconstruct_pmf(&psi, 1.0, 1.0).is_err());
    }

    #[test]
    fn structured_family_shape() {
        let fam = structured_test_functions(0, 4);
        assert_eq!(fam.len(), 5 + 4);
        assert!(fam.iter().all(|f| f.at(-1) == 0.0));
    }
}
