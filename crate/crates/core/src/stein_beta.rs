//! The Beta Stein equation
//!
//! ```text
//! w(1 - w) f'(w) + (α(1 - w) - βw) f(w) = h(w) - E h(Z),   Z ~ Beta(α, β)
//! ```
//!
//! and its bounded solution
//!
//! ```text
//! f(w) =  w^{-α}(1-w)^{-β} ∫_0^w u^{α-1}(1-u)^{β-1} (h(u) - Eh) du
//!      = -w^{-α}(1-w)^{-β} ∫_w^1 u^{α-1}(1-u)^{β-1} (h(u) - Eh) du.
//! ```
//!
//! The first form is used up to the Beta mean and the second beyond it, so
//! the integral always runs from the nearer endpoint, where the prefactor's
//! blow-up is matched by the integral vanishing. Endpoint singularities of
//! the Beta weight are removed by the power substitution `u = w s^M` (and
//! its mirror image), with `M` chosen from the shape.
//!
//! `f'` is then read off the equation itself.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::BetaLaw;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::quadrature::{integrate, QuadratureOptions};

/// Distance of the solution grid from the endpoints.
pub const GRID_EPSILON: f64 = 1e-6;

/// Default number of solution grid points.
pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Grid-refinement stopping threshold for [`refined_sup_norms`].
pub const REFINEMENT_TOLERANCE: f64 = 1e-6;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Lipschitz test function on `[0, 1]` with its a.e. derivative and the
/// exact sup of `|h'|`.
#[derive(Clone)]
pub struct LipschitzTest {
    name: String,
    h: RealFn,
    hprime: RealFn,
    hprime_sup: f64,
    kinks: Vec<f64>,
}

impl fmt::Debug for LipschitzTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzTest")
            .field("name", &self.name)
            .field("hprime_sup", &self.hprime_sup)
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl LipschitzTest {
    /// `kinks` are the points where `h'` jumps; integration splits there.
    pub fn new<H, D>(name: impl Into<String>, h: H, hprime: D, hprime_sup: f64, kinks: Vec<f64>) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            h: Arc::new(h),
            hprime: Arc::new(hprime),
            hprime_sup,
            kinks,
        }
    }

    /// `h(u) = u`.
    pub fn identity() -> Self {
        Self::new("u", |u| u, |_| 1.0, 1.0, vec![])
    }

    /// `h(u) = c`.
    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_| c, |_| 0.0, 0.0, vec![])
    }

    /// `h(u) = u(1 - u)`.
    pub fn parabola() -> Self {
        Self::new("u(1-u)", |u| u * (1.0 - u), |u| 1.0 - 2.0 * u, 1.0, vec![])
    }

    /// `h(u) = u^2 / 2`.
    pub fn half_square() -> Self {
        Self::new("u^2/2", |u| 0.5 * u * u, |u| u, 1.0, vec![])
    }

    /// `h(u) = |u - c|`.
    pub fn abs_shift(c: f64) -> Self {
        Self::new(
            format!("|u-{c}|"),
            move |u| (u - c).abs(),
            move |u| if u < c { -1.0 } else { 1.0 },
            1.0,
            vec![c],
        )
    }

    /// `h(u) = sin(πu) / π`.
    pub fn sine_bump() -> Self {
        use std::f64::consts::PI;
        Self::new("sin(pi u)/pi", |u| (PI * u).sin() / PI, |u| (PI * u).cos(), 1.0, vec![])
    }

    /// `h(u) = (1 - cos(2πu)) / (2π)`.
    pub fn cosine_bump() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "(1-cos(2 pi u))/(2 pi)",
            |u| (1.0 - (2.0 * PI * u).cos()) / (2.0 * PI),
            |u| (2.0 * PI * u).sin(),
            1.0,
            vec![],
        )
    }

    /// `h(u) = sign * Σ_j a_j sin(jπu) / (jπ)` with `a_j ≥ 0`. Since
    /// `h'(0) = sign * Σ a_j` is the extreme of `h'`, the sup norm is exact.
    pub fn sine_series(name: impl Into<String>, sign: f64, weights: Vec<f64>) -> Self {
        use std::f64::consts::PI;
        assert!(weights.iter().all(|w| *w >= 0.0), "weights must be nonnegative");
        let sup = sign.abs() * weights.iter().sum::<f64>();
        let w2 = weights.clone();
        Self::new(
            name,
            move |u| {
                sign * weights
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        let freq = (j + 1) as f64 * PI;
                        a * (freq * u).sin() / freq
                    })
                    .sum::<f64>()
            },
            move |u| {
                sign * w2
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * ((j + 1) as f64 * PI * u).cos())
                    .sum::<f64>()
            },
            sup,
            vec![],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.h)(u)
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        (self.hprime)(u)
    }

    /// `||h'||`.
    pub fn hprime_sup(&self) -> f64 {
        self.hprime_sup
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

/// `u`, `u(1-u)`, `|u - c|` for `c` in {1/4, 1/2, 3/4}, and two smooth
/// bumps; all with `||h'|| = 1`.
pub fn lipschitz_family() -> Vec<LipschitzTest> {
    vec![
        LipschitzTest::identity(),
        LipschitzTest::parabola(),
        LipschitzTest::abs_shift(0.25),
        LipschitzTest::abs_shift(0.5),
        LipschitzTest::abs_shift(0.75),
        LipschitzTest::sine_bump(),
        LipschitzTest::cosine_bump(),
    ]
}

/// [`lipschitz_family`] followed by seeded random sine series with
/// `||h'|| = 1`, `size` members in total.
pub fn extended_lipschitz_family(size: usize, seed: u64) -> Vec<LipschitzTest> {
    let mut family = lipschitz_family();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut i = 0;
    while family.len() < size {
        let raw: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        family.push(LipschitzTest::sine_series(
            format!("sine-series-{i}"),
            sign,
            raw.iter().map(|a| a / total).collect(),
        ));
        i += 1;
    }
    family.truncate(size);
    family
}

fn quad_opts() -> QuadratureOptions {
    QuadratureOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        ..Default::default()
    }
}

// Exponent of the map `v = c s^M`. The Jacobian turns `v^{p-1} dv` into
// `M c^p s^{pM-1} ds`; with `pM >= 4` the integrand is smooth enough at
// `s = 0` for a handful of Kronrod panels.
fn map_power(p: f64) -> i32 {
    ((4.0 / p).ceil() as i32).clamp(1, 64)
}

// c^{-p} ∫_0^c v^{p-1}(1-v)^{q-1} g(v) dv, kinks of `g` given in `v`.
fn scaled_integral<G: Fn(f64) -> f64>(p: f64, q: f64, c: f64, g: G, kinks: &[f64]) -> Result<f64> {
    let m = map_power(p);
    let mf = f64::from(m);
    let breaks: Vec<f64> = kinks
        .iter()
        .filter(|k| **k > 0.0 && **k < c)
        .map(|k| (k / c).powf(mf.recip()))
        .collect();
    let integrand = |s: f64| {
        let v = c * s.powi(m);
        mf * s.powf(p * mf - 1.0) * ((q - 1.0) * (-v).ln_1p()).exp() * g(v)
    };
    Ok(integrate(integrand, 0.0, 1.0, &breaks, quad_opts())?.value)
}

fn reflect(kinks: &[f64]) -> Vec<f64> {
    kinks.iter().map(|k| 1.0 - k).collect()
}

// ∫_0^c u^{a-1}(1-u)^{b-1} g(u) du / B(a, b).
fn lower_piece<G: Fn(f64) -> f64>(law: &BetaLaw, c: f64, g: &G, kinks: &[f64]) -> Result<f64> {
    let (a, b) = (law.a(), law.b());
    let inner = scaled_integral(a, b, c, g, kinks)?;
    Ok((a * c.ln() - law.ln_beta()).exp() * inner)
}

// ∫_c^1 u^{a-1}(1-u)^{b-1} g(u) du / B(a, b).
fn upper_piece<G: Fn(f64) -> f64>(law: &BetaLaw, c: f64, g: &G, kinks: &[f64]) -> Result<f64> {
    let (a, b) = (law.a(), law.b());
    let rest = 1.0 - c;
    let inner = scaled_integral(b, a, rest, |v| g(1.0 - v), &reflect(kinks))?;
    Ok((b * rest.ln() - law.ln_beta()).exp() * inner)
}

/// `E g(Z)` for `Z ~ law`, with `g` possibly kinked at `kinks`.
pub fn beta_expectation_fn<G: Fn(f64) -> f64>(law: &BetaLaw, g: G, kinks: &[f64]) -> Result<f64> {
    let split = 0.5;
    Ok(lower_piece(law, split, &g, kinks)? + upper_piece(law, split, &g, kinks)?)
}

/// `B_{α,β} h = E h(Z)`.
pub fn beta_expectation(law: &BetaLaw, h: &LipschitzTest) -> Result<f64> {
    beta_expectation_fn(law, |u| h.eval(u), h.kinks())
}

/// Which representation [`stein_value`] uses at `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionForm {
    /// Integral from 0, used for `w <= α/(α+β)`.
    Forward,
    /// Integral to 1, used beyond the mean.
    Backward,
}

/// `f(w)` from the integral from 0.
pub fn stein_value_forward(law: &BetaLaw, h: &LipschitzTest, bh: f64, w: f64) -> Result<f64> {
    let (a, b) = (law.a(), law.b());
    let inner = scaled_integral(a, b, w, |u| h.eval(u) - bh, h.kinks())?;
    Ok(inner * (-b * (-w).ln_1p()).exp())
}

/// `f(w)` from the integral to 1.
pub fn stein_value_backward(law: &BetaLaw, h: &LipschitzTest, bh: f64, w: f64) -> Result<f64> {
    let (a, b) = (law.a(), law.b());
    let inner = scaled_integral(b, a, 1.0 - w, |v| h.eval(1.0 - v) - bh, &reflect(h.kinks()))?;
    Ok(-inner * (-a * w.ln()).exp())
}

/// `f(w)` for `w` in `(0, 1)`, choosing the form by position relative to the
/// mean.
pub fn stein_value(law: &BetaLaw, h: &LipschitzTest, bh: f64, w: f64) -> Result<f64> {
    match form_at(law, w) {
        SolutionForm::Forward => stein_value_forward(law, h, bh, w),
        SolutionForm::Backward => stein_value_backward(law, h, bh, w),
    }
}

pub fn form_at(law: &BetaLaw, w: f64) -> SolutionForm {
    if w <= law.mean() {
        SolutionForm::Forward
    } else {
        SolutionForm::Backward
    }
}

/// `f'(w)` from the equation, given `f(w)`.
#[inline]
pub fn stein_derivative(law: &BetaLaw, h: &LipschitzTest, bh: f64, w: f64, f: f64) -> f64 {
    (h.eval(w) - bh - (law.a() * (1.0 - w) - law.b() * w) * f) / (w * (1.0 - w))
}

/// `size` points in `[ε, 1 - ε]` clustered quadratically at both ends
/// (Chebyshev-Lobatto spacing).
pub fn stein_grid(size: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let span = 1.0 - 2.0 * GRID_EPSILON;
    (0..size)
        .map(|i| {
            let t = i as f64 / (size - 1) as f64;
            GRID_EPSILON + span * 0.5 * (1.0 - (PI * t).cos())
        })
        .collect()
}

/// The solution of the Stein equation tabulated on a grid.
#[derive(Debug, Clone)]
pub struct SteinSolution {
    pub law: BetaLaw,
    pub test: LipschitzTest,
    /// `E h(Z)`.
    pub bh: f64,
    pub grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub fprime_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SteinRow {
    w: f64,
    f: f64,
    fprime: f64,
}

impl SteinSolution {
    /// CSV with header `w,f,fprime`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["w", "f", "fprime"])?;
        for ((x, f), fp) in self.grid.iter().zip(&self.f_values).zip(&self.fprime_values) {
            w.write_record([x.to_string(), f.to_string(), fp.to_string()])?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<SteinRow> = self
            .grid
            .iter()
            .zip(&self.f_values)
            .zip(&self.fprime_values)
            .map(|((w, f), fprime)| SteinRow {
                w: *w,
                f: *f,
                fprime: *fprime,
            })
            .collect();
        Ok(serde_json::to_string(&rows)?)
    }

    /// Grid sup of `|h - Bh|`.
    pub fn centered_h_sup(&self) -> f64 {
        self.grid
            .iter()
            .map(|w| (self.test.eval(*w) - self.bh).abs())
            .fold(0.0, f64::max)
    }
}

/// Solve the Stein equation for `h` under `law` on a grid of `grid_size`
/// points.
pub fn solve_stein(law: &BetaLaw, h: &LipschitzTest, grid_size: usize) -> Result<SteinSolution> {
    solve_stein_with(law, h, grid_size, Exec::default())
}

pub fn solve_stein_with(law: &BetaLaw, h: &LipschitzTest, grid_size: usize, exec: Exec) -> Result<SteinSolution> {
    if grid_size < 16 {
        return Err(Error::InvalidParameter(format!("grid_size must be >= 16, got {grid_size}")));
    }
    let bh = beta_expectation(law, h)?;
    let grid = stein_grid(grid_size);
    let f_values = exec.try_map(&grid, |w| stein_value(law, h, bh, *w))?;
    let fprime_values = grid
        .iter()
        .zip(&f_values)
        .map(|(w, f)| stein_derivative(law, h, bh, *w, *f))
        .collect();
    Ok(SteinSolution {
        law: *law,
        test: h.clone(),
        bh,
        grid,
        f_values,
        fprime_values,
    })
}

/// Grid maxima `(max |f|, max |f'|)`: lower estimates of the sup norms.
pub fn sup_norms(sol: &SteinSolution) -> (f64, f64) {
    let f_sup = sol.f_values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let fp_sup = sol.fprime_values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (f_sup, fp_sup)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedNorms {
    pub f_sup: f64,
    pub fprime_sup: f64,
    pub grid_size: usize,
    /// Change in the last doubling (max over the two norms).
    pub last_change: f64,
    pub converged: bool,
}

/// Grid sup norms, doubling the grid from `start_size` until neither norm
/// moves by more than [`REFINEMENT_TOLERANCE`] (at most `max_doublings`).
pub fn refined_sup_norms(
    law: &BetaLaw,
    h: &LipschitzTest,
    start_size: usize,
    max_doublings: usize,
    exec: Exec,
) -> Result<RefinedNorms> {
    let mut size = start_size;
    let (mut f_sup, mut fp_sup) = sup_norms(&solve_stein_with(law, h, size, exec)?);
    let mut last_change = f64::INFINITY;
    for _ in 0..max_doublings {
        size = 2 * size - 1;
        let (f2, fp2) = sup_norms(&solve_stein_with(law, h, size, exec)?);
        last_change = (f2 - f_sup).abs().max((fp2 - fp_sup).abs());
        f_sup = f2;
        fp_sup = fp2;
        if last_change < REFINEMENT_TOLERANCE {
            break;
        }
    }
    Ok(RefinedNorms {
        f_sup,
        fprime_sup: fp_sup,
        grid_size: size,
        last_change,
        converged: last_change < REFINEMENT_TOLERANCE,
    })
}

/// Residual of the Stein equation at `w` with `f'` from a five-point central
/// difference of the quadrature solution, independent of
/// [`stein_derivative`].
pub fn equation_residual_fd(law: &BetaLaw, h: &LipschitzTest, bh: f64, w: f64) -> Result<f64> {
    let delta = (5e-4f64).min(0.25 * w).min(0.25 * (1.0 - w));
    let f = |x: f64| stein_value(law, h, bh, x);
    let d = (f(w - 2.0 * delta)? - 8.0 * f(w - delta)? + 8.0 * f(w + delta)? - f(w + 2.0 * delta)?) / (12.0 * delta);
    let fw = f(w)?;
    Ok(w * (1.0 - w) * d + (law.a() * (1.0 - w) - law.b() * w) * fw - (h.eval(w) - bh))
}

/// Which of the four shape regions the derivative bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundCase {
    /// α ≤ 2, β ≤ 2
    BothSmall,
    /// α > 2, β ≤ 2
    AlphaLarge,
    /// α ≤ 2, β > 2
    BetaLarge,
    /// α > 2, β > 2
    BothLarge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub b0: f64,
    pub b1: f64,
    pub case: BoundCase,
}

/// `b0(α, β)` and `b1(α, β)` with `||f'|| ≤ b0 ||h - Bh|| + b1 ||h'||`.
pub fn bound_constants(alpha: f64, beta: f64) -> Result<BoundConstants> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain {
                name,
                value: v,
                constraint: "finite and > 0",
            });
        }
    }
    let (a, b) = (alpha, beta);
    let s2 = (a + b - 2.0).powi(2);
    let out = match (a > 2.0, b > 2.0) {
        (false, false) => BoundConstants {
            b0: 4.0 * (a - 1.0).abs().max((b - 1.0).abs()),
            b1: 4.0 * (1.0 + a.max(b) / (a + b)),
            case: BoundCase::BothSmall,
        },
        (true, false) => BoundConstants {
            b0: s2 * ((a - 1.0) / (a - 2.0).powi(2)).max((b - 1.0).abs() / (b * b)),
            b1: s2 / (a - 2.0).min(b).powi(2) + 2.0 * (a / (a - 2.0)).max(1.0),
            case: BoundCase::AlphaLarge,
        },
        (false, true) => BoundConstants {
            b0: s2 * ((a - 1.0).abs() / (a * a)).max((b - 1.0) / (b - 2.0).powi(2)),
            b1: s2 / a.min(b - 2.0).powi(2) + 2.0 * (b / (b - 2.0)).max(1.0),
            case: BoundCase::BetaLarge,
        },
        (true, true) => BoundConstants {
            b0: s2 * (1.0 / (a - 1.0)).max(1.0 / (b - 1.0)),
            b1: s2 / (a - 1.0).min(b - 1.0).powi(2) + 2.0 * (a / (a - 1.0)).max(b / (b - 1.0)),
            case: BoundCase::BothLarge,
        },
    };
    Ok(out)
}

/// `x_{α,β} = (α - 1) / (α + β - 2)`, the stationary point of
/// `w^{α-1}(1-w)^{β-1}`.
pub fn stationary_point(alpha: f64, beta: f64) -> f64 {
    (alpha - 1.0) / (alpha + beta - 2.0)
}

/// Shape of `g(w) = w^{α-1}(1-w)^{β-1}` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    DecreasingThenIncreasing { turn: f64 },
    IncreasingThenDecreasing { turn: f64 },
}

/// Monotonicity of `w^{α-1}(1-w)^{β-1}` for `α, β > -1`.
pub fn monotonicity_classify(alpha: f64, beta: f64) -> Result<Monotonicity> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v > -1.0) {
            return Err(Error::Domain {
                name,
                value: v,
                constraint: "finite and > -1",
            });
        }
    }
    use std::cmp::Ordering::*;
    let ord = |v: f64| v.partial_cmp(&1.0).expect("finite");
    Ok(match (ord(alpha), ord(beta)) {
        (Less, Less) => Monotonicity::DecreasingThenIncreasing {
            turn: stationary_point(alpha, beta),
        },
        (Less, _) => Monotonicity::Decreasing,
        (Equal, Less) => Monotonicity::Increasing,
        (Equal, Equal) => Monotonicity::Constant,
        (Equal, Greater) => Monotonicity::Decreasing,
        (Greater, Greater) => Monotonicity::IncreasingThenDecreasing {
            turn: stationary_point(alpha, beta),
        },
        (Greater, _) => Monotonicity::Increasing,
    })
}
