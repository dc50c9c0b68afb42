//! Wasserstein distance between a scaled discrete law on `[0, 1]` and a Beta
//! law, and the bounds it is compared against.
//!
//! On the line `d_W(X, Y) = ∫ |F_X - F_Y|`. The discrete CDF is constant on
//! each cell between support points and the Beta CDF is strictly increasing,
//! so each cell has at most one crossing and integrates in closed form with
//!
//! ```text
//! G(t) = ∫_0^t I_x(a, b) dx = t I_t(a, b) - a/(a+b) I_t(a+1, b).
//! ```

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{urn_pmf, walk_pmf, BetaLaw, DiscreteLaw, UrnParams, WalkParams};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::special::{beta_quantile, regularized_incomplete_beta};
use crate::stein_beta::bound_constants;
use crate::sum::CompensatedSum;

/// Default number of strata for [`wasserstein_mc`].
pub const MC_GRID: usize = 1_000_000;

const MC_CHUNK: usize = 65_536;

/// `∫_0^t I_x(a, b) dx`.
pub fn cdf_antiderivative(law: &BetaLaw, t: f64) -> f64 {
    let (a, b) = (law.a(), law.b());
    let t = t.clamp(0.0, 1.0);
    let i0 = regularized_incomplete_beta(t, a, b).expect("shapes validated");
    let i1 = regularized_incomplete_beta(t, a + 1.0, b).expect("shapes validated");
    t * i0 - law.mean() * i1
}

// ∫_l^r |c - I_x| dx.
fn cell_distance(law: &BetaLaw, l: f64, r: f64, c: f64) -> Result<f64> {
    if r <= l {
        return Ok(0.0);
    }
    let (a, b) = (law.a(), law.b());
    let il = law.cdf(l);
    let ir = law.cdf(r);
    let g = |t: f64| cdf_antiderivative(law, t);
    let (gl, gr) = (g(l), g(r));
    if il >= c {
        return Ok((gr - gl) - c * (r - l));
    }
    if ir <= c {
        return Ok(c * (r - l) - (gr - gl));
    }
    let x = beta_quantile(c, a, b)?.clamp(l, r);
    let gx = g(x);
    Ok((c * (x - l) - (gx - gl)) + ((gr - gx) - c * (r - x)))
}

fn check_unit_support(law: &DiscreteLaw) -> Result<()> {
    for k in law.indices() {
        let x = law.position(k);
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::SupportOutsideUnitInterval { x });
        }
    }
    Ok(())
}

/// Exact `d_W` between `law` (at its scaled positions) and `target`.
pub fn wasserstein_exact(law: &DiscreteLaw, target: &BetaLaw) -> Result<f64> {
    check_unit_support(law)?;
    let cum = law.cumulative();
    let mut total = CompensatedSum::new();
    let mut left = 0.0;
    let mut level = 0.0;
    for (i, (x, c)) in cum.iter().enumerate() {
        total.add(cell_distance(target, left, *x, level)?);
        left = *x;
        level = if i + 1 == cum.len() { 1.0 } else { c.min(1.0) };
    }
    total.add(cell_distance(target, left, 1.0, level)?);
    Ok(total.total().max(0.0))
}

/// Independent estimate of `∫_0^1 |F_law - I_x| dx`: one uniform draw in
/// each of `grid` equal strata.
pub fn wasserstein_mc(law: &DiscreteLaw, target: &BetaLaw, grid: usize, seed: u64, exec: Exec) -> Result<f64> {
    check_unit_support(law)?;
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be >= 1".into()));
    }
    let cum = law.cumulative();
    let positions: Vec<f64> = cum.iter().map(|p| p.0).collect();
    let discrete_cdf = |x: f64| {
        let idx = positions.partition_point(|p| *p <= x);
        match idx {
            0 => 0.0,
            i if i == cum.len() => 1.0,
            i => cum[i - 1].1,
        }
    };
    let h = 1.0 / grid as f64;
    let chunks = grid.div_ceil(MC_CHUNK);
    let partials = exec.map_range(chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let mut acc = CompensatedSum::new();
        for j in chunk * MC_CHUNK..((chunk + 1) * MC_CHUNK).min(grid) {
            let x = (j as f64 + rng.random::<f64>()) * h;
            acc.add((discrete_cdf(x) - target.cdf(x)).abs());
        }
        acc.total()
    });
    let mut total = CompensatedSum::new();
    total.extend(partials);
    Ok(total.total() * h)
}

/// Upper bound on `d_W(S_n/n, Beta(α/m, β/m))`:
/// `((m + α∨β)/(2nm) + αβ/(nm(α+β))) (b0 + b1) + 3/(2n)` with `b0, b1` taken
/// at `(α/m, β/m)`.
pub fn urn_upper_bound(params: &UrnParams) -> f64 {
    let (a, b, m, n) = (
        f64::from(params.alpha),
        f64::from(params.beta),
        f64::from(params.m),
        f64::from(params.n),
    );
    let c = bound_constants(params.shape_a(), params.shape_b()).expect("positive shapes");
    ((m + a.max(b)) / (2.0 * n * m) + a * b / (n * m * (a + b))) * (c.b0 + c.b1) + 1.5 / n
}

/// `αβ / (n(α+β+m)(α+β))`, attained by `h(x) = x(1-x)`.
pub fn urn_lower_bound(params: &UrnParams) -> f64 {
    let (a, b, m, n) = (
        f64::from(params.alpha),
        f64::from(params.beta),
        f64::from(params.m),
        f64::from(params.n),
    );
    a * b / (n * (a + b + m) * (a + b))
}

/// `27/(2n) + 8/n^2`.
pub fn arcsine_upper_bound(params: &WalkParams) -> f64 {
    let n = f64::from(params.n);
    13.5 / n + 8.0 / (n * n)
}

/// `E f(W_n) - E f(Z)` for `f(w) = w^2/2`, `W_n = L_{2n}/(2n)` and `Z`
/// arcsine; equals `1/(16n)`.
pub fn arcsine_moment_gap(params: &WalkParams) -> f64 {
    let law = walk_pmf(params);
    let second = law.expect(|w| w * w);
    0.5 * (second - BetaLaw::arcsine().mixed_moment(2, 0))
}

/// A parameter family swept by [`rate_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Urn { alpha: u32, beta: u32, m: u32 },
    Walk,
}

impl Family {
    fn law_at(&self, n: u32) -> Result<(DiscreteLaw, BetaLaw)> {
        Ok(match *self {
            Family::Urn { alpha, beta, m } => {
                let p = UrnParams::new(alpha, beta, m, n)?;
                (urn_pmf(&p), p.limit_law())
            }
            Family::Walk => (walk_pmf(&WalkParams::new(n)?), BetaLaw::arcsine()),
        })
    }

    /// `(upper, lower)` at `n`. For the walk the lower value is the
    /// `w^2/2` witness gap `1/(16n)`.
    pub fn bounds_at(&self, n: u32) -> Result<(f64, f64)> {
        Ok(match *self {
            Family::Urn { alpha, beta, m } => {
                let p = UrnParams::new(alpha, beta, m, n)?;
                (urn_upper_bound(&p), urn_lower_bound(&p))
            }
            Family::Walk => {
                let p = WalkParams::new(n)?;
                (arcsine_upper_bound(&p), arcsine_moment_gap(&p))
            }
        })
    }
}

/// Exact distance and bounds at one `n`. Violations are reported, never
/// clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub family: Family,
    pub n: u32,
    pub exact_dw: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_estimate: Option<f64>,
}

impl DistanceReport {
    pub fn within_bounds(&self, slack: f64) -> bool {
        self.lower_bound <= self.exact_dw + slack && self.exact_dw <= self.upper_bound + slack
    }
}

/// Distance report for `family` at `n`; `mc` adds the stratified estimate
/// with the given `(grid, seed)`.
pub fn distance_report(family: Family, n: u32, mc: Option<(usize, u64)>, exec: Exec) -> Result<DistanceReport> {
    let (law, target) = family.law_at(n)?;
    let exact_dw = wasserstein_exact(&law, &target)?;
    let (upper_bound, lower_bound) = family.bounds_at(n)?;
    let mc_estimate = match mc {
        Some((grid, seed)) => Some(wasserstein_mc(&law, &target, grid, seed, exec)?),
        None => None,
    };
    Ok(DistanceReport {
        family,
        n,
        exact_dw,
        upper_bound,
        lower_bound,
        mc_estimate,
    })
}

/// One row of a rate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u32,
    pub dw: f64,
    pub n_dw: f64,
    pub upper: f64,
    pub lower: f64,
}

impl From<&DistanceReport> for RateRow {
    fn from(r: &DistanceReport) -> Self {
        Self {
            n: r.n,
            dw: r.exact_dw,
            n_dw: f64::from(r.n) * r.exact_dw,
            upper: r.upper_bound,
            lower: r.lower_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub family: Family,
    pub rows: Vec<RateRow>,
}

const RATE_HEADER: [&str; 5] = ["n", "dw", "n_dw", "upper", "lower"];

impl RateTable {
    /// CSV with header `n,dw,n_dw,upper,lower`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(RATE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.dw.to_string(),
                r.n_dw.to_string(),
                r.upper.to_string(),
                r.lower.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }

    /// Parse rows written by [`RateTable::write_csv`].
    pub fn read_csv_rows<R: Read>(reader: R) -> Result<Vec<RateRow>> {
        let mut rdr = csv::Reader::from_reader(reader);
        if rdr.headers()?.iter().ne(RATE_HEADER) {
            return Err(Error::Serialization("expected header n,dw,n_dw,upper,lower".into()));
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record[i]
                    .parse()
                    .map_err(|e| Error::Serialization(format!("column {}: {e}", RATE_HEADER[i])))
            };
            rows.push(RateRow {
                n: record[0]
                    .parse()
                    .map_err(|e| Error::Serialization(format!("column n: {e}")))?,
                dw: field(1)?,
                n_dw: field(2)?,
                upper: field(3)?,
                lower: field(4)?,
            });
        }
        Ok(rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Exact distance and bounds for each `n`, rows in input order. `n_values`
/// must be nonempty and strictly increasing.
pub fn rate_table(family: Family, n_values: &[u32], exec: Exec) -> Result<RateTable> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("n list must be nonempty".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n list must be strictly increasing".into()));
    }
    let reports = exec.try_map(n_values, |n| distance_report(family, *n, None, Exec::Sequential))?;
    Ok(RateTable {
        family,
        rows: reports.iter().map(RateRow::from).collect(),
    })
}
