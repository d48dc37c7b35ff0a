//! Closed-form storage and repair costs for erasure codes, regenerating codes
//! and coordinated regenerating codes, plus the recovery-scenario constraint
//! system that decides whether a cost point is correct.
//!
//! Everything here is exact: amounts are [`Rational`]s and comparisons never
//! involve a tolerance.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ratio::{from_usize, Rational};

/// Largest `k` for which recovery scenarios are enumerated.
pub const MAX_SCENARIO_K: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("scenario enumeration for k = {k} exceeds the supported maximum of {max}")]
    ScaleExceeded { k: usize, max: usize },
    #[error("invalid recovery scenario {0}")]
    InvalidScenario(String),
}

/// `(n, k, d, t, M)`: devices, devices needed to recover, live devices
/// contacted per repair, devices repaired together, and file size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub t: usize,
    pub file_size: Rational,
}

impl CodeParams {
    /// Parameters for a system of exactly `d + t` devices.
    pub fn new(k: usize, d: usize, t: usize, file_size: Rational) -> Result<Self, CostError> {
        Self::with_n(d + t, k, d, t, file_size)
    }

    pub fn with_n(n: usize, k: usize, d: usize, t: usize, file_size: Rational) -> Result<Self, CostError> {
        let p = Self { n, k, d, t, file_size };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.k == 0 {
            return Err(CostError::InvalidParams("k must be at least 1".into()));
        }
        if self.t == 0 {
            return Err(CostError::InvalidParams("t must be at least 1".into()));
        }
        if self.d < self.k {
            return Err(CostError::InvalidParams(format!("d = {} must satisfy d >= k = {}", self.d, self.k)));
        }
        if self.d + self.t > self.n {
            return Err(CostError::InvalidParams(format!(
                "d + t = {} exceeds n = {}",
                self.d + self.t,
                self.n
            )));
        }
        if !self.file_size.is_positive() {
            return Err(CostError::InvalidParams("file size must be positive".into()));
        }
        Ok(())
    }

    /// `M / k`, the size of one original block.
    pub fn block_size(&self) -> Rational {
        &self.file_size / from_usize(self.k)
    }

    /// Closed forms are proven only when `t` divides `k`.
    pub fn guaranteed(&self) -> bool {
        self.k % self.t == 0
    }
}

/// Stored amount `alpha` and per-repair transfers. `gamma` is the amount
/// downloaded by one repaired device, `d * beta + (t - 1) * beta_prime`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostPoint {
    pub alpha: Rational,
    pub beta: Rational,
    pub beta_prime: Rational,
    pub gamma: Rational,
    /// False when the point comes from a closed form applied with `t ∤ k`.
    pub guaranteed: bool,
}

impl CostPoint {
    pub fn new(alpha: Rational, beta: Rational, beta_prime: Rational, d: usize, t: usize) -> Self {
        let gamma = repair_cost(&beta, &beta_prime, d, t);
        Self { alpha, beta, beta_prime, gamma, guaranteed: true }
    }

    /// True if `gamma = d beta + (t - 1) beta'` and every amount is non-negative.
    pub fn is_consistent(&self, d: usize, t: usize) -> bool {
        self.gamma == repair_cost(&self.beta, &self.beta_prime, d, t)
            && !self.alpha.is_negative()
            && !self.beta.is_negative()
            && !self.beta_prime.is_negative()
    }

    /// Scales `beta`, recomputing `gamma`.
    pub fn with_beta_scaled(&self, factor: &Rational, d: usize, t: usize) -> Self {
        let beta = &self.beta * factor;
        Self { gamma: repair_cost(&beta, &self.beta_prime, d, t), beta, ..self.clone() }
    }

    /// Scales `beta_prime`, recomputing `gamma`.
    pub fn with_beta_prime_scaled(&self, factor: &Rational, d: usize, t: usize) -> Self {
        let beta_prime = &self.beta_prime * factor;
        Self { gamma: repair_cost(&self.beta, &beta_prime, d, t), beta_prime, ..self.clone() }
    }
}

pub fn repair_cost(beta: &Rational, beta_prime: &Rational, d: usize, t: usize) -> Rational {
    beta * from_usize(d) + beta_prime * from_usize(t - 1)
}

/// The repair schemes the cost model knows how to price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Erasure code, each failure repaired on its own by downloading k blocks.
    EccEager,
    /// Erasure code, t failures repaired by one device that decodes and forwards.
    EccLazy,
    Msr,
    Mbr,
    /// Independent minimum-storage repairs of each of the t failures.
    Mfr,
    Mscr,
    Mbcr,
}

impl Scheme {
    pub const ALL: [Scheme; 7] =
        [Scheme::EccEager, Scheme::EccLazy, Scheme::Msr, Scheme::Mbr, Scheme::Mfr, Scheme::Mscr, Scheme::Mbcr];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EccEager => "ecc_eager",
            Scheme::EccLazy => "ecc_lazy",
            Scheme::Msr => "msr",
            Scheme::Mbr => "mbr",
            Scheme::Mfr => "mfr",
            Scheme::Mscr => "mscr",
            Scheme::Mbcr => "mbcr",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.name() == s)
    }

    /// The `(d, t)` against which the scheme's `gamma` is expressed.
    pub fn effective_dt(self, p: &CodeParams) -> (usize, usize) {
        match self {
            Scheme::EccEager => (p.k, 1),
            Scheme::EccLazy => (p.k, p.t),
            Scheme::Msr | Scheme::Mbr | Scheme::Mfr => (p.d, 1),
            Scheme::Mscr | Scheme::Mbcr => (p.d, p.t),
        }
    }

    pub fn cost(self, p: &CodeParams) -> Result<CostPoint, CostError> {
        match self {
            Scheme::Mscr => mscr(p),
            Scheme::Mbcr => mbcr(p),
            other => classic_costs(p, other),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Minimum-storage coordinated point: `alpha = M/k`,
/// `beta = beta' = (M/k) / (d - k + t)`.
pub fn mscr(p: &CodeParams) -> Result<CostPoint, CostError> {
    p.validate()?;
    let b = p.block_size();
    let share = &b / from_usize(p.d - p.k + p.t);
    let mut c = CostPoint::new(b, share.clone(), share, p.d, p.t);
    c.guaranteed = p.guaranteed();
    Ok(c)
}

/// Minimum-bandwidth coordinated point: `alpha = gamma = (M/k)(2d+t-1)/(2d-k+t)`,
/// `beta = 2 (M/k)/(2d-k+t)`, `beta' = (M/k)/(2d-k+t)`.
pub fn mbcr(p: &CodeParams) -> Result<CostPoint, CostError> {
    p.validate()?;
    let unit = p.block_size() / from_usize(2 * p.d - p.k + p.t);
    let alpha = &unit * from_usize(2 * p.d + p.t - 1);
    let mut c = CostPoint::new(alpha, &unit * from_usize(2), unit, p.d, p.t);
    debug_assert_eq!(c.alpha, c.gamma);
    c.guaranteed = p.guaranteed();
    Ok(c)
}

/// Costs of the uncoordinated baselines. `Mscr`/`Mbcr` are forwarded to
/// [`mscr`]/[`mbcr`] so callers can iterate over [`Scheme::ALL`].
pub fn classic_costs(p: &CodeParams, scheme: Scheme) -> Result<CostPoint, CostError> {
    p.validate()?;
    let b = p.block_size();
    let (d, t) = scheme.effective_dt(p);
    let point = match scheme {
        Scheme::EccEager => CostPoint::new(b.clone(), b, Rational::zero(), d, t),
        Scheme::EccLazy => {
            // one device downloads k blocks and forwards t - 1 of the t it
            // regenerates; per repaired device that is (k + t - 1)/t blocks
            let share = &b / from_usize(p.t);
            CostPoint::new(b, share.clone(), share, d, t)
        }
        Scheme::Msr | Scheme::Mfr => {
            let beta = &b / from_usize(p.d - p.k + 1);
            CostPoint::new(b, beta, Rational::zero(), d, t)
        }
        Scheme::Mbr => {
            let beta = &b * from_usize(2) / from_usize(2 * p.d - p.k + 1);
            let alpha = &beta * from_usize(p.d);
            CostPoint::new(alpha, beta, Rational::zero(), d, t)
        }
        Scheme::Mscr => return mscr(p),
        Scheme::Mbcr => return mbcr(p),
    };
    Ok(point)
}

/// Which end of the coordinated tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrPoint {
    Mscr,
    Mbcr,
}

impl CrPoint {
    pub fn cost(self, p: &CodeParams) -> Result<CostPoint, CostError> {
        match self {
            CrPoint::Mscr => mscr(p),
            CrPoint::Mbcr => mbcr(p),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CrPoint::Mscr => "mscr",
            CrPoint::Mbcr => "mbcr",
        }
    }
}

/// Per-device repair cost for each `t` in `1..=n-k` in a system of constant
/// size `n = d + t`.
pub fn threshold_curve(n: usize, k: usize, file_size: &Rational, point: CrPoint) -> Result<Vec<(usize, Rational)>, CostError> {
    if n <= k {
        return Err(CostError::InvalidParams(format!("need n > k, got n = {n}, k = {k}")));
    }
    (1..=n - k)
        .map(|t| {
            let p = CodeParams::with_n(n, k, n - t, t, file_size.clone())?;
            Ok((t, point.cost(&p)?.gamma))
        })
        .collect()
}

/// A composition `u` of `k`: how many contacted devices a data collector
/// takes from each of `g` successive repair groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecoveryScenario(Vec<usize>);

impl RecoveryScenario {
    pub fn new(parts: Vec<usize>, k: usize, t: usize) -> Result<Self, CostError> {
        let s = Self(parts);
        s.validate(k, t)?;
        Ok(s)
    }

    pub fn validate(&self, k: usize, t: usize) -> Result<(), CostError> {
        if self.0.iter().sum::<usize>() != k || self.0.iter().any(|&u| u == 0 || u > t) {
            return Err(CostError::InvalidScenario(format!("{self} is not a composition of {k} with parts in 1..={t}")));
        }
        Ok(())
    }

    /// `(t, ..., t)`; only meaningful when `t | k`.
    pub fn full_groups(k: usize, t: usize) -> Self {
        Self(vec![t; k / t])
    }

    pub fn singletons(k: usize) -> Self {
        Self(vec![1; k])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn groups(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for RecoveryScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, u) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{u}")?;
        }
        write!(f, ")")
    }
}

/// All compositions of `k` with parts in `1..=t`, in lexicographic order.
pub fn enumerate_scenarios(k: usize, t: usize) -> Result<Vec<RecoveryScenario>, CostError> {
    if k == 0 || t == 0 {
        return Err(CostError::InvalidParams("k and t must be at least 1".into()));
    }
    if k > MAX_SCENARIO_K {
        return Err(CostError::ScaleExceeded { k, max: MAX_SCENARIO_K });
    }
    fn rec(rest: usize, t: usize, prefix: &mut Vec<usize>, out: &mut Vec<RecoveryScenario>) {
        if rest == 0 {
            out.push(RecoveryScenario(prefix.clone()));
            return;
        }
        for u in 1..=t.min(rest) {
            prefix.push(u);
            rec(rest - u, t, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, t, &mut Vec::with_capacity(k), &mut out);
    Ok(out)
}

/// One inequality of the correctness system:
/// `sum_i u_i min{alpha, (d - sum_{j<i} u_j) beta + (t - u_i) beta'} >= M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scenario: RecoveryScenario,
}

impl Constraint {
    pub fn new(scenario: RecoveryScenario) -> Self {
        Self { scenario }
    }

    /// Left-hand side at `c`.
    pub fn lhs(&self, p: &CodeParams, c: &CostPoint) -> Rational {
        scenario_flow(p.d, p.t, &self.scenario, c)
    }

    pub fn holds(&self, p: &CodeParams, c: &CostPoint) -> bool {
        self.lhs(p, c) >= p.file_size
    }
}

/// `sum_i u_i min{alpha, (d - sum_{j<i} u_j) beta + (t - u_i) beta'}`.
pub fn scenario_flow(d: usize, t: usize, s: &RecoveryScenario, c: &CostPoint) -> Rational {
    let mut before = 0usize;
    let mut total = Rational::zero();
    for &u in s.parts() {
        let transfer = &c.beta * from_usize(d.saturating_sub(before)) + &c.beta_prime * from_usize(t.saturating_sub(u));
        let per_device = if transfer < c.alpha { transfer } else { c.alpha.clone() };
        total += per_device * from_usize(u);
        before += u;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub scenario: RecoveryScenario,
    pub lhs: Rational,
}

/// Outcome of [`check_correct`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correctness {
    /// Every violated constraint, in scenario enumeration order.
    pub violations: Vec<Violation>,
    pub scenarios_checked: usize,
    /// False when `t ∤ k`; the constraint system is then only known to be necessary.
    pub guaranteed: bool,
    pub file_size: Rational,
}

impl Correctness {
    pub fn satisfied(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn is_violated(&self, s: &RecoveryScenario) -> bool {
        self.violations.iter().any(|v| &v.scenario == s)
    }

    /// The most violated constraint; ties go to the lexicographically
    /// largest scenario, which puts `(t, ..., t)` ahead of its peers.
    pub fn witness(&self) -> Option<&Violation> {
        self.violations.iter().max_by(|a, b| {
            let da = &self.file_size - &a.lhs;
            let db = &self.file_size - &b.lhs;
            da.cmp(&db).then_with(|| a.scenario.cmp(&b.scenario))
        })
    }
}

/// `alpha, beta, beta', M` as integer numerators over one common
/// denominator, so scenario flows can be summed in `i128`.
struct ScaledPoint {
    alpha: i128,
    beta: i128,
    beta_prime: i128,
    m: i128,
    den: BigInt,
}

impl ScaledPoint {
    fn new(c: &CostPoint, m: &Rational) -> Option<Self> {
        let den = [&c.alpha, &c.beta, &c.beta_prime, m].iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let num = |r: &Rational| (r.numer() * (&den / r.denom())).to_i128();
        Some(Self { alpha: num(&c.alpha)?, beta: num(&c.beta)?, beta_prime: num(&c.beta_prime)?, m: num(m)?, den })
    }

    /// Numerator of [`scenario_flow`], or `None` on overflow.
    fn flow(&self, d: usize, t: usize, s: &RecoveryScenario) -> Option<i128> {
        let mut before = 0usize;
        let mut total = 0i128;
        for &u in s.parts() {
            let a = self.beta.checked_mul(d.saturating_sub(before) as i128)?;
            let b = self.beta_prime.checked_mul(t.saturating_sub(u) as i128)?;
            let per_device = a.checked_add(b)?.min(self.alpha);
            total = total.checked_add(per_device.checked_mul(u as i128)?)?;
            before += u;
        }
        Some(total)
    }
}

/// Evaluates every recovery-scenario constraint at `c`.
pub fn check_correct(p: &CodeParams, c: &CostPoint) -> Result<Correctness, CostError> {
    p.validate()?;
    let scenarios = enumerate_scenarios(p.k, p.t)?;
    let violations = match ScaledPoint::new(c, &p.file_size) {
        Some(sp) => scenarios
            .iter()
            .filter_map(|s| match sp.flow(p.d, p.t, s) {
                Some(lhs) => (lhs < sp.m).then(|| Violation { scenario: s.clone(), lhs: Rational::new(BigInt::from(lhs), sp.den.clone()) }),
                None => {
                    let lhs = scenario_flow(p.d, p.t, s, c);
                    (lhs < p.file_size).then(|| Violation { scenario: s.clone(), lhs })
                }
            })
            .collect(),
        None => scenarios
            .iter()
            .filter_map(|s| {
                let lhs = scenario_flow(p.d, p.t, s, c);
                (lhs < p.file_size).then(|| Violation { scenario: s.clone(), lhs })
            })
            .collect(),
    };
    Ok(Correctness { violations, scenarios_checked: scenarios.len(), guaranteed: p.guaranteed(), file_size: p.file_size.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{int, rat};

    #[test]
    fn huge_denominators_fall_back_to_rationals() {
        let p = CodeParams::new(4, 5, 2, int(4)).unwrap();
        let big = Rational::new(BigInt::from(1), BigInt::from(3).pow(90));
        let c = mscr(&p).unwrap();
        assert!(ScaledPoint::new(&CostPoint { beta: &c.beta - &big, ..c.clone() }, &p.file_size).is_none());
        let shaved = CostPoint::new(c.alpha.clone(), &c.beta - &big, c.beta_prime.clone(), p.d, p.t);
        let r = check_correct(&p, &shaved).unwrap();
        assert_eq!(r.witness().unwrap().scenario, RecoveryScenario::full_groups(4, 2));
        assert_eq!(r.witness().unwrap().lhs, scenario_flow(p.d, p.t, &RecoveryScenario::full_groups(4, 2), &shaved));
    }

    fn mb(v: i64) -> Rational {
        int(v * 1_000_000)
    }

    fn scen(v: &[usize]) -> RecoveryScenario {
        RecoveryScenario(v.to_vec())
    }

    // independent count: C(k) = sum_{p=1..t} C(k-p), C(0) = 1
    fn composition_count(k: usize, t: usize) -> usize {
        let mut c = vec![0usize; k + 1];
        c[0] = 1;
        for i in 1..=k {
            c[i] = (1..=t.min(i)).map(|p| c[i - p]).sum();
        }
        c[k]
    }

    #[test]
    fn scenario_enumeration_examples() {
        assert_eq!(enumerate_scenarios(3, 1).unwrap(), vec![scen(&[1, 1, 1])]);
        assert_eq!(
            enumerate_scenarios(3, 3).unwrap(),
            vec![scen(&[1, 1, 1]), scen(&[1, 2]), scen(&[2, 1]), scen(&[3])]
        );
        assert_eq!(enumerate_scenarios(4, 2).unwrap().len(), 5);
        assert_eq!(enumerate_scenarios(25, 1), Err(CostError::ScaleExceeded { k: 25, max: 24 }));
    }

    #[test]
    fn scenario_counts_follow_recurrence() {
        for k in 1..=14 {
            for t in 1..=k {
                let all = enumerate_scenarios(k, t).unwrap();
                assert_eq!(all.len(), composition_count(k, t));
                let mut sorted = all.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted, all, "lexicographic and unique for k={k} t={t}");
            }
        }
    }

    #[test]
    fn table_one_points() {
        let p = CodeParams::new(32, 36, 4, mb(32)).unwrap();
        let s = mscr(&p).unwrap();
        assert_eq!(s.alpha, mb(1));
        assert_eq!(s.beta, rat(125_000, 1));
        assert_eq!(s.beta, s.beta_prime);
        assert_eq!(s.gamma, rat(39, 8) * mb(1));

        let b = mbcr(&p).unwrap();
        assert_eq!(b.alpha, rat(75, 44) * mb(1));
        assert_eq!(b.alpha, b.gamma);

        assert_eq!(classic_costs(&p, Scheme::EccEager).unwrap().gamma, mb(32));
        assert_eq!(classic_costs(&p, Scheme::EccLazy).unwrap().gamma, rat(35, 4) * mb(1));
        assert_eq!(classic_costs(&p, Scheme::Msr).unwrap().gamma, rat(36, 5) * mb(1));
        let mbr = classic_costs(&p, Scheme::Mbr).unwrap();
        assert_eq!(mbr.gamma, rat(72, 41) * mb(1));
        assert_eq!(mbr.alpha, mbr.gamma);
    }

    #[test]
    fn reductions_to_classic_codes() {
        let p1 = CodeParams::new(32, 36, 1, mb(32)).unwrap();
        assert_eq!(mscr(&p1).unwrap().gamma, classic_costs(&p1, Scheme::Msr).unwrap().gamma);
        assert_eq!(mscr(&p1).unwrap().gamma, rat(36, 5) * mb(1));
        assert_eq!(mbcr(&p1).unwrap().gamma, classic_costs(&p1, Scheme::Mbr).unwrap().gamma);
        assert_eq!(mbcr(&p1).unwrap().gamma, rat(72, 41) * mb(1));

        let pk = CodeParams::new(32, 32, 4, mb(32)).unwrap();
        assert_eq!(mscr(&pk).unwrap().gamma, rat(35, 4) * mb(1));
        assert_eq!(mscr(&pk).unwrap().gamma, classic_costs(&pk, Scheme::EccLazy).unwrap().gamma);

        let pd = CodeParams::new(5, 5, 1, int(5)).unwrap();
        assert_eq!(classic_costs(&pd, Scheme::Mbr).unwrap().gamma, rat(10, 6));
    }

    #[test]
    fn mfr_threshold_value() {
        let p = CodeParams::with_n(64, 32, 48, 16, int(32)).unwrap();
        assert_eq!(classic_costs(&p, Scheme::Mfr).unwrap().gamma, rat(48, 17));
    }

    #[test]
    fn d_below_k_is_rejected() {
        let p = CodeParams { n: 10, k: 3, d: 2, t: 1, file_size: int(3) };
        assert!(matches!(mscr(&p), Err(CostError::InvalidParams(_))));
        assert!(matches!(mbcr(&p), Err(CostError::InvalidParams(_))));
        assert!(CodeParams::new(2, 1, 1, int(1)).is_err());
    }

    #[test]
    fn check_correct_examples() {
        let p = CodeParams::new(32, 36, 4, mb(32)).unwrap();
        // 20569 compositions of 32 with parts <= 4 would be fine, but k=32 is
        // beyond the enumeration cap
        assert!(matches!(check_correct(&p, &mscr(&p).unwrap()), Err(CostError::ScaleExceeded { .. })));

        let p = CodeParams::new(12, 16, 4, mb(12)).unwrap();
        let c = mscr(&p).unwrap();
        assert!(check_correct(&p, &c).unwrap().satisfied());
        let worse = c.with_beta_scaled(&rat(99, 100), p.d, p.t);
        let r = check_correct(&p, &worse).unwrap();
        assert!(!r.satisfied());
        assert!(r.is_violated(&RecoveryScenario::full_groups(12, 4)));
        assert_eq!(r.witness().unwrap().scenario, RecoveryScenario::full_groups(12, 4));

        // full replication
        let m = mb(12);
        let repl = CostPoint::new(m.clone(), &m / from_usize(p.d), Rational::zero(), p.d, p.t);
        assert_eq!(repl.gamma, m);
        assert!(check_correct(&p, &repl).unwrap().satisfied());
    }

    #[test]
    fn unguaranteed_when_t_does_not_divide_k() {
        let p = CodeParams::new(5, 6, 2, int(5)).unwrap();
        let c = mscr(&p).unwrap();
        assert!(!c.guaranteed);
        let r = check_correct(&p, &c).unwrap();
        assert!(!r.guaranteed);
        assert!(r.satisfied());
    }

    #[test]
    fn threshold_curve_shapes() {
        let mscr_curve = threshold_curve(64, 32, &int(32), CrPoint::Mscr).unwrap();
        assert_eq!(mscr_curve.len(), 32);
        assert!(mscr_curve.iter().all(|(_, g)| *g == rat(63, 32)));

        let mbcr_curve = threshold_curve(64, 32, &int(32), CrPoint::Mbcr).unwrap();
        assert_eq!(mbcr_curve[0].1, rat(126, 95));
        assert_eq!(mbcr_curve[1].1, rat(125, 94));
        assert!(mbcr_curve.windows(2).all(|w| w[0].1 < w[1].1));
        // t = n - k, d = k: (n + k - 1)/(2k)
        assert_eq!(mbcr_curve.last().unwrap().1, rat(95, 64));
        assert!(threshold_curve(32, 32, &int(32), CrPoint::Mscr).is_err());
    }

    #[test]
    fn consistency_of_every_scheme() {
        let p = CodeParams::with_n(40, 8, 12, 4, int(800)).unwrap();
        for s in Scheme::ALL {
            let c = s.cost(&p).unwrap();
            let (d, t) = s.effective_dt(&p);
            assert!(c.is_consistent(d, t), "{s}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn closed_forms_are_correct(k in 1usize..=10, t_idx in 0usize..4, extra in 0usize..6, m in 1i64..1000) {
                let divisors: Vec<usize> = (1..=k).filter(|t| k % t == 0).collect();
                let t = divisors[t_idx % divisors.len()];
                let p = CodeParams::new(k, k + extra, t, int(m)).unwrap();
                for point in [mscr(&p).unwrap(), mbcr(&p).unwrap()] {
                    prop_assert!(check_correct(&p, &point).unwrap().satisfied());
                }
            }

            #[test]
            fn integer_flows_match_rational_flows(
                k in 1usize..=8, t in 1usize..=4, extra in 0usize..4,
                nums in proptest::collection::vec(1i64..1000, 3), dens in proptest::collection::vec(1i64..1000, 3),
            ) {
                let t = t.min(k);
                let c = CostPoint::new(rat(nums[0], dens[0]), rat(nums[1], dens[1]), rat(nums[2], dens[2]), k + extra, t);
                let sp = ScaledPoint::new(&c, &rat(7, 3)).unwrap();
                for s in enumerate_scenarios(k, t).unwrap() {
                    let fast = Rational::new(BigInt::from(sp.flow(k + extra, t, &s).unwrap()), sp.den.clone());
                    prop_assert_eq!(fast, scenario_flow(k + extra, t, &s, &c));
                }
            }

            #[test]
            fn closed_forms_are_tight(k in 1usize..=10, t_idx in 0usize..4, extra in 0usize..6, num in 1i64..100) {
                let divisors: Vec<usize> = (1..=k).filter(|t| k % t == 0).collect();
                let t = divisors[t_idx % divisors.len()];
                let p = CodeParams::new(k, k + extra, t, int(1000)).unwrap();
                let shrink = rat(num, 101);
                for point in [mscr(&p).unwrap(), mbcr(&p).unwrap()] {
                    let b = check_correct(&p, &point.with_beta_scaled(&shrink, p.d, p.t)).unwrap();
                    prop_assert!(b.is_violated(&RecoveryScenario::full_groups(k, t)));
                    if t > 1 {
                        let bp = check_correct(&p, &point.with_beta_prime_scaled(&shrink, p.d, p.t)).unwrap();
                        prop_assert!(bp.is_violated(&RecoveryScenario::singletons(k)));
                    }
                }
            }
        }
    }
}
