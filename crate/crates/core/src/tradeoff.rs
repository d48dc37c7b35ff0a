//! Storage/repair tradeoff between the minimum-storage and minimum-bandwidth
//! coordinated points.
//!
//! At a fixed `alpha` the feasible `(beta, beta')` region is convex: every
//! scenario constraint is a sum of minima of affine functions. For a given
//! `beta`, the smallest feasible `beta'` of one scenario is found by walking
//! the breakpoints of that concave piecewise-linear function, and the
//! overall minimum is the max over scenarios. `gamma(beta)` is then convex
//! in `beta` and is minimized by golden-section search in floating point.
//! The chosen `beta` is converted exactly, the matching minimal `beta'` is
//! recomputed with rationals, and the point is checked against every
//! constraint exactly.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::cost_model::{check_correct, enumerate_scenarios, mbcr, mscr, CodeParams, CostError, CostPoint};
use crate::ratio::{from_f64, from_usize, int, rat, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TradeoffError {
    #[error("alpha = {alpha} is below the minimum storage M/k = {min}")]
    Infeasible { alpha: Rational, min: Rational },
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("at least two samples are needed, got {0}")]
    TooFewSamples(usize),
    #[error("optimized point failed exact verification at alpha = {0}")]
    VerificationFailed(Rational),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeoffPoint {
    pub alpha: Rational,
    pub beta: Rational,
    pub beta_prime: Rational,
    pub gamma: Rational,
    /// Amounts are expressed in units of `M/k`.
    pub normalized: bool,
}

impl TradeoffPoint {
    fn from_cost(c: &CostPoint) -> Self {
        Self {
            alpha: c.alpha.clone(),
            beta: c.beta.clone(),
            beta_prime: c.beta_prime.clone(),
            gamma: c.gamma.clone(),
            normalized: false,
        }
    }

    pub fn to_cost_point(&self, d: usize, t: usize) -> CostPoint {
        CostPoint::new(self.alpha.clone(), self.beta.clone(), self.beta_prime.clone(), d, t)
    }

    /// Divides every amount by `M/k`.
    pub fn normalize(&self, p: &CodeParams) -> Self {
        if self.normalized {
            return self.clone();
        }
        let b = p.block_size();
        Self {
            alpha: &self.alpha / &b,
            beta: &self.beta / &b,
            beta_prime: &self.beta_prime / &b,
            gamma: &self.gamma / &b,
            normalized: true,
        }
    }
}

/// `1e-9 * M/k`.
pub fn default_tolerance(p: &CodeParams) -> Rational {
    p.block_size() * rat(1, 1_000_000_000)
}

/// Per-scenario terms `(u_i, d - sum_{j<i} u_j, t - u_i)`.
struct ScenarioTable {
    terms: Vec<Vec<(u32, u32, u32)>>,
}

impl ScenarioTable {
    fn new(p: &CodeParams) -> Result<Self, CostError> {
        let terms = enumerate_scenarios(p.k, p.t)?
            .iter()
            .map(|s| {
                let mut before = 0;
                s.parts()
                    .iter()
                    .map(|&u| {
                        let term = (u as u32, (p.d - before) as u32, (p.t - u) as u32);
                        before += u;
                        term
                    })
                    .collect()
            })
            .collect();
        Ok(Self { terms })
    }
}

fn flow_f64(terms: &[(u32, u32, u32)], alpha: f64, beta: f64, bp: f64) -> f64 {
    terms.iter().map(|&(u, a, b)| u as f64 * alpha.min(a as f64 * beta + b as f64 * bp)).sum()
}

/// Smallest `beta' >= 0` with `flow >= m`, or `None` if no `beta'` suffices.
fn min_beta_prime_f64(terms: &[(u32, u32, u32)], alpha: f64, beta: f64, m: f64) -> Option<f64> {
    let mut base = 0.0;
    let mut slope = 0.0;
    let mut bps: Vec<(f64, f64)> = Vec::new();
    for &(u, a, b) in terms {
        let (u, a, b) = (u as f64, a as f64, b as f64);
        let at0 = a * beta;
        if at0 >= alpha || b == 0.0 {
            base += u * alpha.min(at0);
        } else {
            base += u * at0;
            slope += u * b;
            bps.push(((alpha - at0) / b, u * b));
        }
    }
    if base >= m {
        return Some(0.0);
    }
    bps.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut x = 0.0;
    let mut value = base;
    for (bp, drop) in bps {
        let reach = value + slope * (bp - x);
        if reach >= m {
            return Some(x + (m - value) / slope);
        }
        value = reach;
        x = bp;
        slope -= drop;
    }
    // the saturated flow can land a rounding error short of m on the boundary
    (value >= m * (1.0 - 1e-12)).then_some(x)
}

fn min_beta_prime_exact(terms: &[(u32, u32, u32)], alpha: &Rational, beta: &Rational, m: &Rational) -> Option<Rational> {
    let mut base = Rational::zero();
    let mut slope = Rational::zero();
    let mut bps: Vec<(Rational, Rational)> = Vec::new();
    for &(u, a, b) in terms {
        let u = from_usize(u as usize);
        let at0 = beta * from_usize(a as usize);
        if &at0 >= alpha || b == 0 {
            base += &u * if &at0 < alpha { at0 } else { alpha.clone() };
        } else {
            let b = from_usize(b as usize);
            base += &u * &at0;
            slope += &u * &b;
            bps.push(((alpha - at0) / &b, u * b));
        }
    }
    if &base >= m {
        return Some(Rational::zero());
    }
    bps.sort_by(|x, y| x.0.cmp(&y.0));
    let mut x = Rational::zero();
    let mut value = base;
    for (bp, drop) in bps {
        let reach = &value + &slope * (&bp - &x);
        if &reach >= m {
            return Some(x + (m - value) / slope);
        }
        value = reach;
        x = bp;
        slope -= drop;
    }
    None
}

/// Minimal `beta'` over all scenarios at `(alpha, beta)`, normalized units.
fn required_beta_prime(table: &ScenarioTable, alpha: f64, beta: f64, m: f64) -> Option<f64> {
    let mut need = 0.0f64;
    for terms in &table.terms {
        // most scenarios are already satisfied by the running maximum
        if flow_f64(terms, alpha, beta, need) >= m {
            continue;
        }
        need = need.max(min_beta_prime_f64(terms, alpha, beta, m)?);
    }
    Some(need)
}

fn required_beta_prime_exact(table: &ScenarioTable, alpha: &Rational, beta: &Rational, m: &Rational) -> Option<Rational> {
    table.terms.iter().try_fold(Rational::zero(), |need, terms| {
        let x = min_beta_prime_exact(terms, alpha, beta, m)?;
        Some(if x > need { x } else { need })
    })
}

/// Exact minimal `beta'` assuming every scenario stays on the linear piece
/// it occupies at the float optimum. A scenario's piece is fixed by
/// `(saturated parts, sum u a, sum u b)`, and many scenarios share one, so
/// only distinct pieces are solved exactly. The caller verifies the result.
fn piecewise_beta_prime(table: &ScenarioTable, alpha: &Rational, beta: &Rational, p: &CodeParams) -> Option<Rational> {
    let block = p.block_size();
    let (a, b, m) = (to_f64(&(alpha / &block)), to_f64(&(beta / &block)), p.k as f64);
    let need = required_beta_prime(table, a, b, m)?;
    let mut pieces: Vec<(u64, u64, u64)> = table
        .terms
        .iter()
        .filter(|terms| flow_f64(terms, a, b, need) <= m * (1.0 + 1e-9))
        .map(|terms| {
            terms.iter().fold((0, 0, 0), |(sat, ca, cb), &(u, da, db)| {
                if da as f64 * b + db as f64 * need >= a {
                    (sat + u as u64, ca, cb)
                } else {
                    (sat, ca + (u * da) as u64, cb + (u * db) as u64)
                }
            })
        })
        .collect();
    pieces.sort_unstable();
    pieces.dedup();
    let mut best = Rational::zero();
    for (sat, ca, cb) in pieces {
        if cb == 0 {
            continue;
        }
        let x = (&p.file_size - alpha * from_usize(sat as usize) - beta * from_usize(ca as usize)) / from_usize(cb as usize);
        if x > best {
            best = x;
        }
    }
    Some(best)
}

/// Turns a float `beta` into an exactly feasible point, nudging `beta` up
/// when it sits just outside the exact feasible region.
fn settle(p: &CodeParams, table: &ScenarioTable, alpha: &Rational, found: &Rational, fast: bool) -> Result<Option<CostPoint>, TradeoffError> {
    let mut beta = found.clone();
    for shift in (25..=45).rev() {
        let bp = if fast { piecewise_beta_prime(table, alpha, &beta, p) } else { required_beta_prime_exact(table, alpha, &beta, &p.file_size) };
        if let Some(bp) = bp {
            let point = CostPoint::new(alpha.clone(), beta.clone(), bp, p.d, p.t);
            if check_correct(p, &point)?.satisfied() {
                return Ok(Some(point));
            }
        }
        beta = found * (int(1) + rat(1, 1 << shift));
    }
    Ok(None)
}

/// Minimizes `gamma = d beta + (t - 1) beta'` at fixed `alpha` subject to
/// every scenario constraint.
pub fn min_gamma_for_alpha(p: &CodeParams, alpha: &Rational, tolerance: &Rational) -> Result<TradeoffPoint, TradeoffError> {
    let table = ScenarioTable::new(p)?;
    solve_with_table(p, &table, alpha, tolerance)
}

fn solve_with_table(p: &CodeParams, table: &ScenarioTable, alpha: &Rational, tolerance: &Rational) -> Result<TradeoffPoint, TradeoffError> {
    p.validate()?;
    if !tolerance.is_positive() {
        return Err(TradeoffError::InvalidTolerance);
    }
    let block = p.block_size();
    if alpha < &block {
        return Err(TradeoffError::Infeasible { alpha: alpha.clone(), min: block });
    }
    let min_storage = mscr(p)?;
    let min_bandwidth = mbcr(p)?;
    if alpha >= &min_bandwidth.alpha {
        return Ok(TradeoffPoint::from_cost(&min_bandwidth));
    }

    let (d, t) = (p.d as f64, p.t as f64);
    let a = to_f64(&(alpha / &block));
    let m = p.k as f64;
    let gamma_at = |beta: f64| required_beta_prime(table, a, beta, m).map(|bp| d * beta + (t - 1.0) * bp);

    // feasible betas form [beta*, inf); beta = alpha is always feasible
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, a);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = gamma_at(x1);
    let mut f2 = gamma_at(x2);
    let mut best = (a, gamma_at(a).expect("beta = alpha is feasible"));
    for _ in 0..90 {
        for (x, f) in [(x1, f1), (x2, f2)] {
            if let Some(v) = f {
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
        let go_right = match (f1, f2) {
            (_, None) => true,
            (None, Some(_)) => true,
            (Some(v1), Some(v2)) => v1 > v2,
        };
        if go_right {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = gamma_at(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = gamma_at(x1);
        }
    }

    // a float boundary point can sit just below the exact feasible region
    let found = from_f64(best.0).expect("finite") * &block;
    let settled = match settle(p, table, alpha, &found, true)? {
        Some(point) => Some(point),
        None => settle(p, table, alpha, &found, false)?,
    };
    let mut point = settled.ok_or_else(|| TradeoffError::VerificationFailed(alpha.clone()))?;
    if alpha == &min_storage.alpha && (&point.gamma - &min_storage.gamma).abs() <= *tolerance {
        point = min_storage;
    }
    Ok(TradeoffPoint::from_cost(&point))
}

/// `samples` points with `alpha` evenly spaced from the minimum-storage to
/// the minimum-bandwidth point, both endpoints included.
pub fn trace_curve(p: &CodeParams, samples: usize, tolerance: &Rational) -> Result<Vec<TradeoffPoint>, TradeoffError> {
    if samples < 2 {
        return Err(TradeoffError::TooFewSamples(samples));
    }
    let lo = mscr(p)?.alpha;
    let hi = mbcr(p)?.alpha;
    let alphas: Vec<Rational> = (0..samples)
        .map(|i| &lo + (&hi - &lo) * from_usize(i) / from_usize(samples - 1))
        .collect();
    evaluate_at(p, &alphas, tolerance)
}

/// Solves at each `alpha` (in parallel; output order follows the input).
pub fn evaluate_at(p: &CodeParams, alphas: &[Rational], tolerance: &Rational) -> Result<Vec<TradeoffPoint>, TradeoffError> {
    let table = ScenarioTable::new(p)?;
    alphas.par_iter().map(|a| solve_with_table(p, &table, a, tolerance)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::classic_costs;
    use crate::cost_model::Scheme;

    fn params(k: usize, d: usize, t: usize) -> CodeParams {
        CodeParams::new(k, d, t, int(k as i64)).unwrap()
    }

    #[test]
    fn endpoints_snap_to_closed_forms() {
        let p = params(8, 12, 2);
        let tol = default_tolerance(&p);
        let lo = min_gamma_for_alpha(&p, &int(1), &tol).unwrap();
        assert_eq!(lo.gamma, mscr(&p).unwrap().gamma);
        assert_eq!(lo.beta, lo.beta_prime);
        let b = mbcr(&p).unwrap();
        let hi = min_gamma_for_alpha(&p, &(&b.alpha * int(2)), &tol).unwrap();
        assert_eq!(hi.gamma, b.gamma);
        assert_eq!(hi.alpha, b.alpha);
    }

    #[test]
    fn rejects_storage_below_block_size() {
        let p = params(4, 5, 2);
        assert!(matches!(min_gamma_for_alpha(&p, &rat(1, 2), &default_tolerance(&p)), Err(TradeoffError::Infeasible { .. })));
        assert_eq!(min_gamma_for_alpha(&p, &int(1), &Rational::zero()), Err(TradeoffError::InvalidTolerance));
    }

    #[test]
    fn interior_point_is_between_endpoints() {
        let p = params(16, 24, 4);
        let tol = default_tolerance(&p);
        let (s, b) = (mscr(&p).unwrap(), mbcr(&p).unwrap());
        let mid = (&s.alpha + &b.alpha) / int(2);
        let pt = min_gamma_for_alpha(&p, &mid, &tol).unwrap();
        assert!(pt.gamma < s.gamma && pt.gamma > b.gamma);
        assert!(check_correct(&p, &pt.to_cost_point(p.d, p.t)).unwrap().satisfied());
        // 1% less transfer is infeasible
        let shrunk = pt.to_cost_point(p.d, p.t).with_beta_scaled(&rat(99, 100), p.d, p.t).with_beta_prime_scaled(&rat(99, 100), p.d, p.t);
        assert!(!check_correct(&p, &shrunk).unwrap().satisfied());
    }

    #[test]
    fn two_samples_are_the_endpoints() {
        let p = params(6, 8, 3);
        let curve = trace_curve(&p, 2, &default_tolerance(&p)).unwrap();
        assert_eq!(curve[0].gamma, mscr(&p).unwrap().gamma);
        assert_eq!(curve[1].gamma, mbcr(&p).unwrap().gamma);
        assert!(trace_curve(&p, 1, &default_tolerance(&p)).is_err());
    }

    #[test]
    fn single_repair_curve_matches_msr_and_mbr() {
        let p = params(16, 24, 1);
        let curve = trace_curve(&p, 5, &default_tolerance(&p)).unwrap();
        assert_eq!(curve[0].gamma, classic_costs(&p, Scheme::Msr).unwrap().gamma);
        assert_eq!(curve[4].gamma, classic_costs(&p, Scheme::Mbr).unwrap().gamma);
        assert!(curve.windows(2).all(|w| w[0].gamma >= w[1].gamma));
    }

    #[test]
    fn exact_and_float_breakpoint_walks_agree() {
        let terms = vec![(1, 5, 1), (2, 4, 0), (1, 2, 2)];
        let (alpha, beta, m) = (rat(3, 2), rat(1, 4), int(4));
        let exact = min_beta_prime_exact(&terms, &alpha, &beta, &m).unwrap();
        let approx = min_beta_prime_f64(&terms, 1.5, 0.25, 4.0).unwrap();
        assert!((to_f64(&exact) - approx).abs() < 1e-12);
        // flow at the returned value is exactly m
        let c = CostPoint::new(alpha.clone(), beta.clone(), exact, 0, 1);
        let flow: Rational = terms
            .iter()
            .map(|&(u, a, b)| {
                let v = &c.beta * int(a as i64) + &c.beta_prime * int(b as i64);
                int(u as i64) * if v < c.alpha { v } else { c.alpha.clone() }
            })
            .sum();
        assert_eq!(flow, m);
    }
}
