//! Hypoexponential distributions: sums of independent exponential stages
//! whose rates may repeat.
//!
//! The closed form groups the stage rates into distinct values `a_i` with
//! multiplicities `n_i` and writes the density as
//! `f(t) = sum_i sum_{j<=n_i} g_ij t^(j-1) e^(-a_i t) / (j-1)!`.
//! The coefficients `g_ij` divide by powers of `a_l - a_i`, so nearly
//! coincident rates are evaluated through the transient solution of the
//! bidiagonal phase-type generator instead.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Relative tolerance under which two rates are merged into one.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;

/// Below this relative gap between distinct rates the closed form is not
/// trusted and evaluation switches to the generator exponential.
pub const CANCELLATION_GAP: f64 = 1e-6;

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b)
}

/// Distinct rates with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMultiset {
    rates: Vec<f64>,
    multiplicities: Vec<u32>,
}

impl RateMultiset {
    pub fn new(rates: Vec<f64>, multiplicities: Vec<u32>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidRates("empty rate set".into()));
        }
        if rates.len() != multiplicities.len() {
            return Err(Error::InvalidRates("rates and multiplicities differ in length".into()));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidRates(format!("rate {r} is not strictly positive")));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidRates("multiplicities must be at least 1".into()));
        }
        Ok(RateMultiset { rates, multiplicities })
    }

    pub fn distinct_rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Number of stages counted with multiplicity.
    pub fn total(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// Stage rates expanded by multiplicity, in grouping order.
    pub fn stages(&self) -> Vec<f64> {
        self.rates
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&r, &n)| std::iter::repeat_n(r, n as usize))
            .collect()
    }

    /// Smallest pairwise relative gap between distinct rates (infinite for a
    /// single rate).
    pub fn min_relative_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, &a) in self.rates.iter().enumerate() {
            for &b in &self.rates[i + 1..] {
                gap = gap.min(relative_gap(a, b));
            }
        }
        gap
    }
}

/// Clusters rates whose relative difference is at most `rel_tol`. Each
/// cluster is represented by the mean of its members; clusters appear in
/// order of their first member.
pub fn group_rates(rates: &[f64], rel_tol: f64) -> Result<RateMultiset> {
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<u32> = Vec::new();
    for &r in rates {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidRates(format!("rate {r} is not strictly positive")));
        }
        let hit = sums
            .iter()
            .zip(&counts)
            .position(|(s, &c)| relative_gap(s / c as f64, r) <= rel_tol);
        match hit {
            Some(i) => {
                sums[i] += r;
                counts[i] += 1;
            }
            None => {
                sums.push(r);
                counts.push(1);
            }
        }
    }
    let means = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    RateMultiset::new(means, counts)
}

/// A hypoexponential distribution with precomputed partial-fraction
/// coefficients.
#[derive(Debug, Clone)]
pub struct HypoExp {
    rates: RateMultiset,
    /// `coeffs[i][j-1]` multiplies `t^(j-1) e^(-a_i t) / (j-1)!`.
    coeffs: Vec<Vec<f64>>,
    stages: Vec<f64>,
    degenerate: bool,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sums `prod_l C(n_l + m_l - 1, m_l) / (a_l - a_i)^m_l` over all
/// non-negative `m` on the other rates with `sum m = remaining`.
fn composition_sum(others: &[(f64, u32)], remaining: u32) -> f64 {
    match others.split_first() {
        None => {
            if remaining == 0 {
                1.0
            } else {
                0.0
            }
        }
        Some((&(diff, n), rest)) => {
            let mut total = 0.0;
            let mut power = 1.0;
            for m in 0..=remaining {
                total += binomial(n + m - 1, m) * power * composition_sum(rest, remaining - m);
                power /= diff;
            }
            total
        }
    }
}

/// Partial-fraction coefficients of the hypoexponential with rate multiset
/// `ms`.
pub fn coefficients(ms: &RateMultiset) -> Result<HypoExp> {
    let rates = ms.distinct_rates();
    let mults = ms.multiplicities();
    for (i, a) in rates.iter().enumerate() {
        if rates[i + 1..].contains(a) {
            return Err(Error::InvalidRates(format!("rate {a} appears twice among distinct rates")));
        }
    }
    let mut coeffs = Vec::with_capacity(rates.len());
    for (i, (&ai, &ni)) in rates.iter().zip(mults).enumerate() {
        // a_i^n_i * prod_{l != i} (a_l / (a_l - a_i))^n_l, the a-product with
        // the m = 0 part of the denominator folded in.
        let mut scale = ai.powi(ni as i32);
        let mut others = Vec::with_capacity(rates.len() - 1);
        for (l, (&al, &nl)) in rates.iter().zip(mults).enumerate() {
            if l != i {
                let diff = al - ai;
                scale *= (al / diff).powi(nl as i32);
                others.push((diff, nl));
            }
        }
        let row = (1..=ni)
            .map(|j| {
                let sign = if (ni - j) % 2 == 0 { 1.0 } else { -1.0 };
                scale * sign * composition_sum(&others, ni - j)
            })
            .collect();
        coeffs.push(row);
    }
    Ok(HypoExp {
        stages: ms.stages(),
        degenerate: ms.min_relative_gap() < CANCELLATION_GAP,
        rates: ms.clone(),
        coeffs,
    })
}

/// `t^j e^(-a t) / j!` evaluated in log space.
fn erlang_term(t: f64, rate: f64, j: u32) -> f64 {
    if j == 0 {
        return (-rate * t).exp();
    }
    if t == 0.0 {
        return 0.0;
    }
    let log_fact: f64 = (1..=j).map(|i| (i as f64).ln()).sum();
    (j as f64 * t.ln() - log_fact - rate * t).exp()
}

impl HypoExp {
    /// Groups `rates` with the default tolerance and computes coefficients.
    pub fn from_rates(rates: &[f64]) -> Result<Self> {
        coefficients(&group_rates(rates, DEFAULT_GROUPING_TOL)?)
    }

    pub fn rates(&self) -> &RateMultiset {
        &self.rates
    }

    /// Coefficient for distinct rate `i` and order `j` (both 1-based).
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i - 1][j - 1]
    }

    pub fn coefficient_table(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn stages(&self) -> &[f64] {
        &self.stages
    }

    /// True when distinct rates are too close for the closed form.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if self.degenerate {
            return transient_exit_density(&self.stages, t);
        }
        let mut f = 0.0;
        for (&a, row) in self.rates.distinct_rates().iter().zip(&self.coeffs) {
            for (j, &g) in row.iter().enumerate() {
                f += g * erlang_term(t, a, j as u32);
            }
        }
        f
    }

    /// `F(tau) = sum_l sum_n v_ln (1/a_l^n - sum_{j<n} tau^j e^(-a_l tau) / (j! a_l^(n-j)))`.
    pub fn cdf(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        if self.degenerate {
            return 1.0 - transient_mass(&self.stages, tau);
        }
        let mut f = 0.0;
        for (&a, row) in self.rates.distinct_rates().iter().zip(&self.coeffs) {
            for (idx, &g) in row.iter().enumerate() {
                let n = idx as i32 + 1;
                let tail: f64 = (0..n).map(|j| erlang_term(tau, a, j as u32) / a.powi(n - j)).sum();
                f += g * (1.0 / a.powi(n) - tail);
            }
        }
        f.clamp(0.0, 1.0)
    }

    /// `1 - F(tau)`, summed directly so small tail probabilities keep their
    /// relative precision.
    pub fn survival(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 1.0;
        }
        if self.degenerate {
            return transient_mass(&self.stages, tau);
        }
        let mut s = 0.0;
        for (&a, row) in self.rates.distinct_rates().iter().zip(&self.coeffs) {
            for (idx, &g) in row.iter().enumerate() {
                let n = idx as i32 + 1;
                s += g * (0..n).map(|j| erlang_term(tau, a, j as u32) / a.powi(n - j)).sum::<f64>();
            }
        }
        s.clamp(0.0, 1.0)
    }

    /// Sum over stages of the inverse rate.
    pub fn mean(&self) -> f64 {
        self.rates
            .distinct_rates()
            .iter()
            .zip(self.rates.multiplicities())
            .map(|(a, &n)| n as f64 / a)
            .sum()
    }

    /// Draws one value as a sum of independent exponential stages.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.stages
            .iter()
            .map(|&r| Exp::new(r).expect("positive rate").sample(rng))
            .sum()
    }
}

/// Phase occupation probabilities at time `t` for the chain that moves
/// through `stages` in order, starting in the first phase. Computed by
/// uniformization.
fn transient(stages: &[f64], t: f64) -> Vec<f64> {
    let k = stages.len();
    let mut out = vec![0.0; k];
    if t <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let unif = stages.iter().cloned().fold(0.0, f64::max);
    let lt = unif * t;
    let stay: Vec<f64> = stages.iter().map(|r| 1.0 - r / unif).collect();
    let go: Vec<f64> = stages.iter().map(|r| r / unif).collect();
    let mut v = vec![0.0; k];
    v[0] = 1.0;
    let mut log_w = -lt;
    let n_max = (lt + 12.0 * lt.sqrt() + 40.0).ceil() as u64;
    let mut n = 0u64;
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            for (o, x) in out.iter_mut().zip(&v) {
                *o += w * x;
            }
        }
        if n >= n_max || v.iter().all(|x| *x == 0.0) {
            break;
        }
        n += 1;
        log_w += lt.ln() - (n as f64).ln();
        for i in (0..k).rev() {
            let inflow = if i > 0 { v[i - 1] * go[i - 1] } else { 0.0 };
            v[i] = v[i] * stay[i] + inflow;
        }
    }
    out
}

/// Probability of not yet having left the last phase by time `t`.
fn transient_mass(stages: &[f64], t: f64) -> f64 {
    transient(stages, t).iter().sum::<f64>().clamp(0.0, 1.0)
}

fn transient_exit_density(stages: &[f64], t: f64) -> f64 {
    let p = transient(stages, t);
    p[p.len() - 1] * stages[stages.len() - 1]
}

fn check_stages(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidRates("empty rate set".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidRates(format!("rate {r} is not strictly positive")));
    }
    Ok(())
}

/// CDF of the sum of exponentials with the given stage rates, from the
/// transient solution of the phase-type generator.
pub fn matrix_cdf(rates: &[f64], tau: f64) -> Result<f64> {
    check_stages(rates)?;
    Ok(if tau <= 0.0 { 0.0 } else { 1.0 - transient_mass(rates, tau) })
}

/// Survival function counterpart of [`matrix_cdf`].
pub fn matrix_survival(rates: &[f64], tau: f64) -> Result<f64> {
    check_stages(rates)?;
    Ok(if tau <= 0.0 { 1.0 } else { transient_mass(rates, tau) })
}

/// Density counterpart of [`matrix_cdf`].
pub fn matrix_pdf(rates: &[f64], t: f64) -> Result<f64> {
    check_stages(rates)?;
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(transient_exit_density(rates, t))
}
