//! Invariant suites over every module, reported as
//! `(suite, check, residual, pass)` rows.
//!
//! Each check reduces to one residual: the worst error, or the worst
//! bound violation (negative when every case has slack). Sizes are chosen so
//! that `Suite::All` finishes in seconds; the acceptance tests run the full
//! grids.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    simulate_urn_with, simulate_walk_l_with, urn_factorial_moment, urn_pmf, walk_pmf, BetaLaw, DiscreteLaw, UrnParams,
    WalkParams,
};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::special::{
    beta_quantile, log_beta, log_falling_factorial, log_gamma, log_rising_factorial, regularized_incomplete_beta,
};
use crate::stein_beta::{
    beta_expectation, bound_constants, equation_residual_fd, extended_lipschitz_family, lipschitz_family,
    monotonicity_classify, refined_sup_norms, solve_stein_with, stein_value_backward, stein_value_forward, sup_norms,
    LipschitzTest, Monotonicity,
};
use crate::stein_discrete::{
    c_transformed_expectation, density_operator_expectation, psi_of, random_test_functions, reconstruct_pmf,
    structured_test_functions, urn_c_function, urn_operator_expectation_under, walk_operator_expectation_under,
    CFunction, TestFunction,
};
use crate::wasserstein::{
    arcsine_moment_gap, arcsine_upper_bound, cdf_antiderivative, urn_lower_bound, urn_upper_bound, wasserstein_exact,
    wasserstein_mc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Special,
    Distributions,
    SteinDiscrete,
    SteinBeta,
    Wasserstein,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 5] = [
        Suite::Special,
        Suite::Distributions,
        Suite::SteinDiscrete,
        Suite::SteinBeta,
        Suite::Wasserstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Special => "special",
            Suite::Distributions => "distributions",
            Suite::SteinDiscrete => "stein-discrete",
            Suite::SteinBeta => "stein-beta",
            Suite::Wasserstein => "wasserstein",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::All]
            .into_iter()
            .chain(Suite::MODULES)
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown suite {s:?}; expected one of all, special, distributions, stein-discrete, stein-beta, wasserstein"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// CSV with header `suite,check,residual,pass`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["suite", "check", "residual", "pass"])?;
        for r in &self.rows {
            w.write_record([r.suite.clone(), r.check.clone(), r.residual.to_string(), r.pass.to_string()])?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

struct Rows<'a> {
    suite: &'a str,
    rows: Vec<CheckRow>,
}

impl Rows<'_> {
    // Passes when `residual <= tol`.
    fn at_most(&mut self, check: &str, residual: f64, tol: f64) {
        self.rows.push(CheckRow {
            suite: self.suite.to_string(),
            check: check.to_string(),
            residual,
            pass: residual <= tol,
        });
    }

    fn flag(&mut self, check: &str, residual: f64, pass: bool) {
        self.rows.push(CheckRow {
            suite: self.suite.to_string(),
            check: check.to_string(),
            residual,
            pass,
        });
    }
}

fn max_of<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Run one suite, or every suite for [`Suite::All`].
pub fn run_suite(suite: Suite, exec: Exec) -> Result<VerifyReport> {
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::MODULES.to_vec(),
        s => vec![s],
    };
    let mut rows = Vec::new();
    for s in suites {
        let mut r = Rows {
            suite: s.name(),
            rows: Vec::new(),
        };
        match s {
            Suite::Special => special_checks(&mut r)?,
            Suite::Distributions => distribution_checks(&mut r, exec)?,
            Suite::SteinDiscrete => stein_discrete_checks(&mut r)?,
            Suite::SteinBeta => stein_beta_checks(&mut r, exec)?,
            Suite::Wasserstein => wasserstein_checks(&mut r, exec)?,
            Suite::All => unreachable!("expanded above"),
        }
        rows.extend(r.rows);
    }
    Ok(VerifyReport { rows })
}

fn special_checks(r: &mut Rows) -> Result<()> {
    use std::f64::consts::PI;
    let mut worst = 0.0f64;
    for i in 1..100 {
        let x = i as f64 / 100.0;
        let lhs = log_gamma(x)? + log_gamma(1.0 - x)?;
        worst = worst.max((lhs - (PI / (PI * x).sin()).ln()).abs());
    }
    r.at_most("log_gamma reflection", worst, 1e-12);

    let mut worst = 0.0f64;
    for i in 1..500 {
        let x = i as f64 * 0.1;
        let next = log_gamma(x + 1.0)?;
        worst = worst.max((next - log_gamma(x)? - x.ln()).abs() / next.abs().max(1.0));
    }
    r.at_most("log_gamma recurrence", worst, 1e-13);

    let shapes = [0.1, 0.5, 1.0, 2.5, 7.0, 30.0];
    let mut sym = 0.0f64;
    let mut lb = 0.0f64;
    let mut inv = 0.0f64;
    for &a in &shapes {
        for &b in &shapes {
            lb = lb.max((log_beta(a, b)? - log_beta(b, a)?).abs());
            for i in 1..20 {
                let x = i as f64 / 20.0;
                let s = regularized_incomplete_beta(x, a, b)? + regularized_incomplete_beta(1.0 - x, b, a)?;
                sym = sym.max((s - 1.0).abs());
                // Near 1 with a small second shape the exact quantile can
                // fall between neighbouring doubles; only a miss beyond
                // that bracket counts.
                let q = beta_quantile(x, a, b)?;
                let lo = regularized_incomplete_beta(q.next_down(), a, b)?;
                let hi = regularized_incomplete_beta(q.next_up(), a, b)?;
                let miss = (regularized_incomplete_beta(q, a, b)? - x).abs().min((lo - x).max(x - hi).max(0.0));
                inv = inv.max(miss);
            }
        }
    }
    r.at_most("log_beta symmetry", lb, 0.0);
    r.at_most("incomplete beta reflection", sym, 1e-13);
    r.at_most("beta quantile inverts cdf to representable precision", inv, 1e-12);

    let mut worst = 0.0f64;
    for &x in &[0.3, 1.0, 4.5, 17.0] {
        for j in 0..40u64 {
            for k in [0u64, 1, 7, 33] {
                let whole = log_rising_factorial(x, j + k)?;
                let split = log_rising_factorial(x, j)? + log_rising_factorial(x + j as f64, k)?;
                worst = worst.max((whole - split).abs() / whole.abs().max(1.0));
            }
        }
    }
    r.at_most("rising factorial semigroup", worst, 1e-13);
    Ok(())
}

fn small_urn_grid() -> impl Iterator<Item = (u32, u32, u32)> {
    (1..=3).flat_map(|a| (1..=3).flat_map(move |b| (1..=3).map(move |m| (a, b, m))))
}

fn brute_factorial_moment(law: &DiscreteLaw, n: u32, a: u32, b: u32) -> f64 {
    law.expect_index(|k| {
        log_falling_factorial(k as f64, u64::from(a)).value()
            * log_falling_factorial(f64::from(n) - k as f64, u64::from(b)).value()
    })
}

// Largest standardized deviation of the empirical masses from the exact ones.
fn max_z(empirical: &DiscreteLaw, exact: &DiscreteLaw, draws: u64) -> f64 {
    let n = draws as f64;
    max_of(empirical.masses().iter().zip(exact.masses()).map(|(e, p)| {
        let se = (p * (1.0 - p) / n).sqrt();
        if se == 0.0 {
            if e == p { 0.0 } else { f64::INFINITY }
        } else {
            (e - p).abs() / se
        }
    }))
}

fn distribution_checks(r: &mut Rows, exec: Exec) -> Result<()> {
    let mut dev = 0.0f64;
    for a in [1, 2, 3, 7] {
        for b in [1, 2, 3, 7] {
            for m in [1, 2, 3, 7] {
                for n in [1, 2, 5, 10, 50, 100, 200] {
                    dev = dev.max(urn_pmf(&UrnParams::new(a, b, m, n)?).raw_mass_deviation());
                }
            }
        }
    }
    r.at_most("urn masses sum to 1", dev, 1e-10);

    let mut dev = 0.0f64;
    let mut first = 0.0f64;
    let mut second = 0.0f64;
    for n in (1..=2000).step_by(7) {
        let law = walk_pmf(&WalkParams::new(n)?);
        dev = dev.max(law.raw_mass_deviation());
        first = first.max((law.expect(|w| w) - 0.5).abs());
        second = second.max((law.expect(|w| w * w) - (0.375 + 0.125 / f64::from(n))).abs());
    }
    r.at_most("walk masses sum to 1", dev, 1e-12);
    r.at_most("walk mean is 1/2", first, 1e-12);
    r.at_most("walk second moment", second, 1e-12);

    let mut fm = 0.0f64;
    let mut ratio = 0.0f64;
    for (al, be, m) in small_urn_grid() {
        for n in [1, 3, 10, 40, 100] {
            let p = UrnParams::new(al, be, m, n)?;
            let law = urn_pmf(&p);
            let nf = f64::from(n);
            for a in 0..=6u32 {
                for b in 0..=(6 - a) {
                    let brute = brute_factorial_moment(&law, n, a, b);
                    fm = fm.max(rel_err(urn_factorial_moment(&p, a, b), brute));
                    let lhs = brute / nf.powi((a + b) as i32);
                    let rhs = log_falling_factorial(nf, u64::from(a + b)).value() / nf.powi((a + b) as i32)
                        * p.limit_law().mixed_moment(a, b);
                    ratio = ratio.max(rel_err(lhs, rhs));
                }
            }
        }
    }
    r.at_most("urn factorial moments", fm, 1e-9);
    r.at_most("moment ratio identity", ratio, 1e-9);

    let draws = 200_000;
    let p = UrnParams::new(2, 1, 1, 5)?;
    let z_urn = max_z(&simulate_urn_with(&p, draws, 17, exec)?, &urn_pmf(&p), draws);
    r.at_most("urn simulator within 3 standard errors", z_urn, 3.0);
    let p = WalkParams::new(6)?;
    let z_walk = max_z(&simulate_walk_l_with(&p, draws, 19, exec)?, &walk_pmf(&p), draws);
    r.at_most("walk simulator within 3 standard errors", z_walk, 3.0);
    Ok(())
}

fn stein_discrete_checks(r: &mut Rows) -> Result<()> {
    let mut density = 0.0f64;
    let mut urn_op = 0.0f64;
    let mut equiv = 0.0f64;
    let mut identity = 0.0f64;
    let mut round_trip = 0.0f64;
    for (al, be, m) in small_urn_grid() {
        for n in [1, 2, 5, 10, 50] {
            let p = UrnParams::new(al, be, m, n)?;
            let law = urn_pmf(&p);
            let n = i64::from(n);
            let psi = psi_of(&law)?;
            let c = urn_c_function(&p);
            let one = CFunction::constant(0, n, 1.0)?;
            let mut fs = random_test_functions(0, n, 50, 101);
            fs.extend(structured_test_functions(0, n));
            for f in &fs {
                let d = density_operator_expectation(&law, &psi, f)?;
                density = density.max(d.abs());
                let u = urn_operator_expectation_under(&law, &p, f)?;
                urn_op = urn_op.max(u.abs());
                equiv = equiv.max((u - c_transformed_expectation(&law, &psi, &c, f)?).abs());
                let c1 = c_transformed_expectation(&law, &psi, &one, f)?;
                identity = identity.max(if c1.to_bits() == d.to_bits() { 0.0 } else { (c1 - d).abs().max(f64::MIN_POSITIVE) });
            }
            let back = reconstruct_pmf(&psi, law.scale(), law.step())?;
            round_trip = round_trip.max(max_of(back.masses().iter().zip(law.masses()).map(|(x, y)| (x - y).abs())));
        }
    }
    r.at_most("density operator vanishes on urn laws", density, 1e-10);
    r.at_most("urn operator vanishes", urn_op, 1e-10);
    r.at_most("urn operator equals c-transform", equiv, 1e-11);
    r.at_most("c = 1 reproduces density operator bitwise", identity, 0.0);

    let mut walk_op = 0.0f64;
    for n in [1, 2, 5, 10, 50, 100, 300] {
        let p = WalkParams::new(n)?;
        let law = walk_pmf(&p);
        let psi = psi_of(&law)?;
        let back = reconstruct_pmf(&psi, law.scale(), law.step())?;
        round_trip = round_trip.max(max_of(back.masses().iter().zip(law.masses()).map(|(x, y)| (x - y).abs())));
        let nf = f64::from(n);
        for f in random_test_functions(0, i64::from(n), 50, 202) {
            let e = walk_operator_expectation_under(&law, &p, |w| f.at((w * nf).round() as i64))?;
            walk_op = walk_op.max(e.abs());
        }
    }
    r.at_most("walk operator vanishes", walk_op, 1e-10);
    r.at_most("pmf reconstructed from psi", round_trip, 1e-10);

    // Each pair of distinct urn laws on one support is told apart by some
    // indicator; the residual is the weakest pair's best separation.
    let n = 5;
    let laws: Vec<(UrnParams, DiscreteLaw)> = small_urn_grid()
        .map(|(a, b, m)| UrnParams::new(a, b, m, n).map(|p| (p, urn_pmf(&p))))
        .collect::<Result<_>>()?;
    let mut weakest = f64::INFINITY;
    for (pi, li) in &laws {
        for (pj, lj) in &laws {
            if li.total_variation(lj)? < 1e-12 || pi == pj {
                continue;
            }
            let sep = structured_test_functions(0, i64::from(n))
                .iter()
                .take(n as usize + 1)
                .map(|f: &TestFunction| urn_operator_expectation_under(li, pj, f).map(f64::abs))
                .collect::<Result<Vec<_>>>()?;
            weakest = weakest.min(max_of(sep));
        }
    }
    r.flag("mismatched urn law detected by an indicator", weakest, weakest > 1e-6);
    Ok(())
}

fn stein_beta_checks(r: &mut Rows, exec: Exec) -> Result<()> {
    let shapes = [0.25, 0.75, 1.0, 1.5, 2.0, 2.75, 4.0];
    let family = lipschitz_family();

    let mut f_bound = f64::NEG_INFINITY;
    let mut fp_bound = f64::NEG_INFINITY;
    let mut fp_split = f64::NEG_INFINITY;
    let mut centred = f64::NEG_INFINITY;
    let mut switch = 0.0f64;
    for &a in &shapes {
        for &b in &shapes {
            let law = BetaLaw::new(a, b)?;
            let c = bound_constants(a, b)?;
            for h in &family {
                let sol = solve_stein_with(&law, h, 512, exec)?;
                let (fs, fps) = sup_norms(&sol);
                let hp = h.hprime_sup();
                let hc = sol.centered_h_sup();
                f_bound = f_bound.max(fs - 2.0 / (a + b) * hp);
                fp_bound = fp_bound.max(fps - (c.b0 + c.b1) * hp);
                fp_split = fp_split.max(fps - (c.b0 * hc + c.b1 * hp));
                centred = centred.max(hc - hp);
                let w = law.mean();
                switch = switch
                    .max((stein_value_forward(&law, h, sol.bh, w)? - stein_value_backward(&law, h, sol.bh, w)?).abs());
            }
        }
    }
    r.at_most("sup |f| within 2/(a+b) |h'|", f_bound, 1e-9);
    r.at_most("sup |f'| within (b0+b1) |h'|", fp_bound, 1e-6);
    r.at_most("sup |f'| within b0 |h-Bh| + b1 |h'|", fp_split, 1e-6);
    r.at_most("|h - Bh| within |h'|", centred, 1e-12);
    r.at_most("solution forms agree at the mean", switch, 1e-9);

    let mut resid = 0.0f64;
    for &(a, b) in &[(0.2, 0.2), (0.5, 3.0), (1.0, 1.0), (2.2, 0.6), (3.5, 4.0)] {
        let law = BetaLaw::new(a, b)?;
        for h in extended_lipschitz_family(20, 77) {
            let bh = beta_expectation(&law, &h)?;
            for w in [1e-5, 0.01, 0.13, 0.37, 0.5, 0.71, 0.96, 1.0 - 1e-5] {
                if h.kinks().iter().any(|k| (k - w).abs() < 3e-3) {
                    continue;
                }
                resid = resid.max(equation_residual_fd(&law, &h, bh, w)?.abs());
            }
        }
    }
    r.at_most("Stein equation residual", resid, 1e-8);

    let mut change = 0.0f64;
    for &(a, b) in &[(0.3, 0.3), (1.0, 2.0), (4.0, 0.5)] {
        let norms = refined_sup_norms(&BetaLaw::new(a, b)?, &LipschitzTest::sine_bump(), 256, 6, exec)?;
        change = change.max(norms.last_change);
    }
    r.at_most("sup norms stable under grid doubling", change, 1e-6);

    let spots = [(0.5, 0.5, 2.0, 6.0), (1.0, 1.0, 0.0, 6.0), (3.0, 3.0, 8.0, 7.0)];
    let spot = max_of(spots.iter().map(|&(a, b, b0, b1)| {
        let c = bound_constants(a, b).expect("positive");
        (c.b0 - b0).abs().max((c.b1 - b1).abs())
    }));
    r.at_most("b0, b1 spot values", spot, 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut mismatches = 0.0;
    for _ in 0..100 {
        let (a, b) = (rng.random_range(-0.99..3.0), rng.random_range(-0.99..3.0));
        let class = monotonicity_classify(a, b)?;
        for i in 1..1000 {
            let w = i as f64 / 1000.0;
            let slope = (a - 1.0) / w - (b - 1.0) / (1.0 - w);
            let want = match class {
                Monotonicity::Constant => 0.0,
                Monotonicity::Increasing => 1.0,
                Monotonicity::Decreasing => -1.0,
                Monotonicity::IncreasingThenDecreasing { turn } => (turn - w).signum(),
                Monotonicity::DecreasingThenIncreasing { turn } => (w - turn).signum(),
            };
            if slope.signum() != want && slope != 0.0 {
                mismatches += 1.0;
            }
        }
    }
    r.at_most("monotonicity table matches sampled slope sign", mismatches, 0.0);
    Ok(())
}

fn wasserstein_checks(r: &mut Rows, exec: Exec) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut anti = 0.0f64;
    for _ in 0..50 {
        let law = BetaLaw::new(rng.random_range(0.05..6.0), rng.random_range(0.05..6.0))?;
        let t = rng.random_range(0.0..1.0);
        let q = integrate(|x| law.cdf(x), 0.0, t, &[], QuadratureOptions::default())?;
        anti = anti.max((cdf_antiderivative(&law, t) - q.value).abs());
    }
    r.at_most("closed-form CDF integral", anti, 1e-10);

    let mut sandwich = f64::NEG_INFINITY;
    let mut duality = f64::NEG_INFINITY;
    let family = lipschitz_family();
    for (a, b, m) in small_urn_grid() {
        for n in [1, 2, 5, 10, 50, 100, 500] {
            let p = UrnParams::new(a, b, m, n)?;
            let law = urn_pmf(&p);
            let target = p.limit_law();
            let dw = wasserstein_exact(&law, &target)?;
            sandwich = sandwich.max(urn_lower_bound(&p) - dw).max(dw - urn_upper_bound(&p));
            if n <= 10 {
                for h in &family {
                    let gap = (law.expect(|x| h.eval(x)) - beta_expectation(&target, h)?).abs();
                    duality = duality.max(gap - dw);
                }
            }
        }
    }
    r.at_most("urn distance between lower and upper bounds", sandwich, 1e-9);
    r.at_most("Lipschitz expectation gaps within distance", duality, 1e-9);

    let mut walk = f64::NEG_INFINITY;
    let mut witness = f64::NEG_INFINITY;
    for n in (1..=500).step_by(3) {
        let p = WalkParams::new(n)?;
        let dw = wasserstein_exact(&walk_pmf(&p), &BetaLaw::arcsine())?;
        walk = walk.max(dw - arcsine_upper_bound(&p));
        witness = witness.max(arcsine_moment_gap(&p) - dw);
    }
    r.at_most("walk distance within 27/(2n) + 8/n^2", walk, 1e-9);
    r.at_most("walk distance exceeds the w^2/2 gap", witness, 1e-12);

    let gap = max_of((1..=2000).step_by(13).map(|n| {
        let g = arcsine_moment_gap(&WalkParams { n });
        (g * 16.0 * f64::from(n) - 1.0).abs()
    }));
    r.at_most("16n times moment gap equals 1", gap, 1e-10);

    let p = UrnParams::new(1, 1, 1, 1)?;
    let uniform = p.limit_law();
    let law = urn_pmf(&p);
    let rate = max_of((1..=1000).step_by(9).map(|n| {
        let p = UrnParams { n, ..p };
        let law = urn_pmf(&p);
        let gap = (law.expect(|x| x * (1.0 - x)) - uniform.mixed_moment(1, 1)).abs();
        (gap - urn_lower_bound(&p)).abs()
    }));
    r.at_most("x(1-x) witness attains the lower bound", rate, 1e-12);

    let mut oracle = 0.0f64;
    for (d, t) in [
        (law, uniform),
        (urn_pmf(&UrnParams::new(2, 3, 2, 20)?), BetaLaw::new(1.0, 1.5)?),
        (walk_pmf(&WalkParams::new(40)?), BetaLaw::arcsine()),
    ] {
        let exact = wasserstein_exact(&d, &t)?;
        oracle = oracle.max((exact - wasserstein_mc(&d, &t, 1_000_000, 23, exec)?).abs());
    }
    r.at_most("exact distance matches stratified estimate", oracle, 1e-6);
    Ok(())
}
