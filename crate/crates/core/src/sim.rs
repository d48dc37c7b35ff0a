//! Failure/repair simulation comparing repair strategies by transfer cost.
//!
//! Steps are logical: each step repairs one batch of `t` failures. Formula
//! runs price every step with the cost model; codec runs execute the repairs
//! on real coded data and report the measured bytes.

use std::fmt;

use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{adaptive_layout, fixed_code, AdaptiveMode, CodecError, CodedFile, RepairOptions, Rounding, Transfer};
use crate::cost_model::{classic_costs, mbcr, mscr, CodeParams, CostError, CostPoint, CrPoint, Scheme};
use crate::gf::FieldWidth;
use crate::ratio::{format_sig, from_usize, Rational};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    EccEager,
    EccLazy,
    Msr,
    Mbr,
    Mscr,
    Mbcr,
    Arc,
    Mfr,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::EccEager,
        Strategy::EccLazy,
        Strategy::Msr,
        Strategy::Mbr,
        Strategy::Mscr,
        Strategy::Mbcr,
        Strategy::Arc,
        Strategy::Mfr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::EccEager => "ecc_eager",
            Strategy::EccLazy => "ecc_lazy",
            Strategy::Msr => "msr",
            Strategy::Mbr => "mbr",
            Strategy::Mscr => "mscr",
            Strategy::Mbcr => "mbcr",
            Strategy::Arc => "arc",
            Strategy::Mfr => "mfr",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Adaptive strategies take `n` and use `d = n - t`.
    pub fn is_adaptive(self) -> bool {
        matches!(self, Strategy::Arc | Strategy::Mfr)
    }

    pub fn codec_supported(self) -> bool {
        matches!(self, Strategy::Mscr | Strategy::Mbcr | Strategy::Arc | Strategy::Mfr)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One repaired batch, amounts in units of `M/k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub t: usize,
    pub d: usize,
    pub n: usize,
    pub alpha: Rational,
    pub beta: Rational,
    pub beta_prime: Rational,
    /// Per repaired device.
    pub gamma: Rational,
    /// Whole batch, `t * gamma`.
    pub total: Rational,
    /// Largest upload plus download of any single device in the batch.
    pub max_load: Rational,
    pub decode_success_rate: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub strategy: Strategy,
    pub k: usize,
    /// `M/k`, the normalization applied to every amount in `steps`.
    pub block_size: Rational,
    pub steps: Vec<StepRecord>,
}

impl SimReport {
    pub fn total(&self) -> Rational {
        self.steps.iter().map(|s| s.total.clone()).sum()
    }

    pub fn total_bytes(&self) -> Rational {
        self.total() * &self.block_size
    }
}

pub const CSV_HEADER: &str = "strategy,k,d,n,t,alpha_norm,beta_norm,beta_prime_norm,gamma_norm,total_norm,decode_success_rate";

/// One row per step, normalized amounts at 12 significant digits.
pub fn to_csv(reports: &[SimReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        for s in &r.steps {
            let rate = s.decode_success_rate.as_ref().map(|x| format_sig(x, 12)).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.strategy,
                r.k,
                s.d,
                s.n,
                s.t,
                format_sig(&s.alpha, 12),
                format_sig(&s.beta, 12),
                format_sig(&s.beta_prime, 12),
                format_sig(&s.gamma, 12),
                format_sig(&s.total, 12),
                rate
            ));
        }
    }
    out
}

/// Cost point of `strategy` for one batch of `t` failures. For adaptive
/// strategies `d_or_n` is `n`, otherwise `d`.
pub fn strategy_point(strategy: Strategy, k: usize, d_or_n: usize, t: usize, file_size: &Rational) -> Result<(CodeParams, CostPoint), SimError> {
    let p = if strategy.is_adaptive() {
        if t > d_or_n.saturating_sub(k) {
            return Err(SimError::InvalidParams(format!("t = {t} exceeds n - k = {}", d_or_n.saturating_sub(k))));
        }
        CodeParams::with_n(d_or_n, k, d_or_n - t, t, file_size.clone())?
    } else {
        CodeParams::new(k, d_or_n, t, file_size.clone())?
    };
    let c = match strategy {
        Strategy::EccEager => classic_costs(&p, Scheme::EccEager)?,
        Strategy::EccLazy => classic_costs(&p, Scheme::EccLazy)?,
        Strategy::Msr => classic_costs(&p, Scheme::Msr)?,
        Strategy::Mbr => classic_costs(&p, Scheme::Mbr)?,
        Strategy::Mfr => classic_costs(&p, Scheme::Mfr)?,
        Strategy::Mscr | Strategy::Arc => mscr(&p)?,
        Strategy::Mbcr => mbcr(&p)?,
    };
    Ok((p, c))
}

/// Busiest device of a batch when every donor serves all `t` newcomers.
fn max_load(strategy: Strategy, p: &CodeParams, c: &CostPoint) -> Rational {
    let t = from_usize(p.t);
    let pick = |a: Rational, b: Rational| if a > b { a } else { b };
    match strategy {
        // the hub downloads k blocks and forwards t - 1
        Strategy::EccLazy => &c.alpha * from_usize(p.k + p.t - 1),
        Strategy::EccEager | Strategy::Msr | Strategy::Mbr | Strategy::Mfr => pick(c.gamma.clone(), &c.beta * t),
        Strategy::Mscr | Strategy::Mbcr | Strategy::Arc => {
            let newcomer = &c.gamma + &c.beta_prime * from_usize(p.t - 1);
            pick(newcomer, &c.beta * t)
        }
    }
}

fn formula_step(strategy: Strategy, p: &CodeParams, c: &CostPoint) -> StepRecord {
    let b = p.block_size();
    let (d, _) = match strategy {
        Strategy::EccEager => Scheme::EccEager.effective_dt(p),
        Strategy::EccLazy => Scheme::EccLazy.effective_dt(p),
        _ => (p.d, p.t),
    };
    StepRecord {
        t: p.t,
        d,
        n: p.n,
        alpha: &c.alpha / &b,
        beta: &c.beta / &b,
        beta_prime: &c.beta_prime / &b,
        gamma: &c.gamma / &b,
        total: &c.gamma * from_usize(p.t) / &b,
        max_load: max_load(strategy, p, c) / &b,
        decode_success_rate: None,
    }
}

/// Prices one batch of each size in `t_range`.
pub fn run_batch_sweep(strategy: Strategy, k: usize, d_or_n: usize, t_range: impl IntoIterator<Item = usize>, file_size: &Rational) -> Result<SimReport, SimError> {
    let mut steps = Vec::new();
    for t in t_range {
        let (p, c) = strategy_point(strategy, k, d_or_n, t, file_size)?;
        steps.push(formula_step(strategy, &p, &c));
    }
    Ok(SimReport { strategy, k, block_size: file_size / from_usize(k), steps })
}

/// ARC and MFR side by side for a system of constant size `n`.
pub fn run_adaptive_sweep(n: usize, k: usize, t_range: impl IntoIterator<Item = usize> + Clone, file_size: &Rational) -> Result<[SimReport; 2], SimError> {
    Ok([
        run_batch_sweep(Strategy::Arc, k, n, t_range.clone(), file_size)?,
        run_batch_sweep(Strategy::Mfr, k, n, t_range, file_size)?,
    ])
}

/// How failed devices are chosen in a codec trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePattern {
    /// Uniformly among live devices.
    #[default]
    Random,
    /// The `t` live devices that have gone longest without repair.
    OldestFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceOptions {
    pub width: FieldWidth,
    pub file_len: usize,
    /// Each unit is split this many times (finer `beta` overrides).
    pub granularity: usize,
    /// Replaces the code's own per-repair transfer.
    pub transfer_override: Option<Transfer>,
    pub pattern: FailurePattern,
    pub repair: RepairOptions,
    /// Above this many k-subsets the audit samples this many.
    pub audit_limit: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            width: FieldWidth::W16,
            file_len: 4096,
            granularity: 1,
            transfer_override: None,
            pattern: FailurePattern::Random,
            repair: RepairOptions::default(),
            audit_limit: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRound {
    pub round: usize,
    pub subsets_checked: usize,
    pub subsets_full_rank: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecTrace {
    pub report: SimReport,
    /// Round 0 is the state right after encoding.
    pub audit: Vec<AuditRound>,
    /// Exact byte counts per round: `(collected, coordination)` per device,
    /// summed over the batch.
    pub measured_bytes: Vec<(usize, usize)>,
    /// Per-device bytes of each newcomer, per round.
    pub per_device_bytes: Vec<Vec<usize>>,
    /// Whether one live k-subset decoded to the original bytes at the end.
    pub final_decode_ok: bool,
    pub unit_bytes: usize,
    pub code_length: usize,
}

impl CodecTrace {
    pub fn all_subsets_decodable(&self) -> bool {
        self.audit.iter().all(|a| a.subsets_checked == a.subsets_full_rank)
    }

    /// `M` as actually encoded: `l * unit_bytes`.
    pub fn effective_file_size(&self) -> usize {
        self.code_length * self.unit_bytes
    }
}

/// Lexicographic k-subsets of `ids`.
pub fn k_subsets(ids: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = ids.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| ids[i]).collect());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn audit(file: &CodedFile, k: usize, round: usize, limit: usize, rng: &mut ChaCha8Rng) -> Result<AuditRound, SimError> {
    let live = file.live_ids();
    let exhaustive = binomial(live.len(), k) <= limit as u128;
    let subsets = if exhaustive {
        k_subsets(&live, k)
    } else {
        (0..limit)
            .map(|_| {
                let mut s: Vec<usize> = sample(rng, live.len(), k).into_iter().map(|i| live[i]).collect();
                s.sort_unstable();
                s
            })
            .collect()
    };
    let mut full = 0;
    for s in &subsets {
        if file.rank_of(s)? == file.layout.l {
            full += 1;
        }
    }
    Ok(AuditRound { round, subsets_checked: subsets.len(), subsets_full_rank: full, exhaustive })
}

fn choose_failed(file: &CodedFile, t: usize, pattern: FailurePattern, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let live = file.live_ids();
    let mut failed: Vec<usize> = match pattern {
        FailurePattern::Random => sample(rng, live.len(), t).into_iter().map(|i| live[i]).collect(),
        FailurePattern::OldestFirst => {
            let mut sorted = live;
            sorted.sort_unstable();
            sorted.truncate(t);
            sorted
        }
    };
    failed.sort_unstable();
    failed
}

/// Encodes a seeded random file, runs `rounds` batches of `p.t` failures
/// through the codec and audits k-subset decodability after every round.
pub fn run_codec_trace(strategy: Strategy, p: &CodeParams, rounds: usize, seed: u64, options: &TraceOptions) -> Result<CodecTrace, SimError> {
    if !strategy.codec_supported() {
        return Err(SimError::InvalidParams(format!("{strategy} has no codec")));
    }
    p.validate()?;
    let (k, n, t) = (p.k, p.n, p.t);
    let (layout, transfer) = match strategy {
        Strategy::Mscr => fixed_code(p, CrPoint::Mscr, options.width)?,
        Strategy::Mbcr => fixed_code(p, CrPoint::Mbcr, options.width)?,
        Strategy::Arc => (adaptive_layout(n, k, AdaptiveMode::Arc, options.width)?, Transfer { beta_units: 0, beta_prime_units: 0 }),
        _ => (adaptive_layout(n, k, AdaptiveMode::Mfr, options.width)?, Transfer { beta_units: 0, beta_prime_units: 0 }),
    };
    let layout = layout.refined(options.granularity.max(1))?;
    let scale = options.granularity.max(1);
    let transfer = Transfer { beta_units: transfer.beta_units * scale, beta_prime_units: transfer.beta_prime_units * scale };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0u8; options.file_len];
    rng.fill_bytes(&mut data);
    let mut file = CodedFile::encode(&data, &layout, n, rng.random())?;
    let unit = file.layout.unit_bytes;
    let l = file.layout.l;
    // one unit is (M/k) / (l/k)
    let norm = |bytes: usize| Rational::new((bytes * k).into(), (l * unit).into());
    let alpha_norm = norm(file.layout.alpha_units * unit);

    let mut steps = Vec::with_capacity(rounds);
    let mut measured = Vec::with_capacity(rounds);
    let mut per_device = Vec::with_capacity(rounds);
    let mut audits = vec![audit(&file, k, 0, options.audit_limit, &mut rng)?];
    for round in 1..=rounds {
        let failed = choose_failed(&file, t, options.pattern, &mut rng);
        let others: Vec<usize> = file.live_ids().into_iter().filter(|id| !failed.contains(id)).collect();
        let repair_seed = rng.random();
        let (outcomes, used) = match strategy {
            Strategy::Mscr | Strategy::Mbcr => {
                let donors: Vec<usize> = if others.len() > p.d {
                    let mut s: Vec<usize> = sample(&mut rng, others.len(), p.d).into_iter().map(|i| others[i]).collect();
                    s.sort_unstable();
                    s
                } else {
                    others
                };
                let tr = options.transfer_override.unwrap_or(transfer);
                (vec![file.repair(&failed, &donors, tr, options.repair, repair_seed)?], tr)
            }
            Strategy::Arc => {
                let (o, at) = file.repair_adaptive(n, k, &failed, Rounding::Up, options.repair, repair_seed)?;
                (vec![o], at.transfer)
            }
            _ => {
                let (o, at) = file.repair_mfr(n, k, &failed, options.repair, repair_seed)?;
                (o, at.transfer)
            }
        };
        let mut collected = 0;
        let mut coordinated = 0;
        let mut device_bytes = Vec::new();
        let mut load = 0;
        let mut d_used = 0;
        for o in &outcomes {
            collected += o.accounting.per_device.iter().map(|e| e.1).sum::<usize>();
            coordinated += o.accounting.coordination_total();
            device_bytes.extend(o.accounting.per_device.iter().map(|e| e.1 + e.2));
            load = load.max(o.accounting.max_upload());
            d_used = o.donors.len();
            file.commit(o);
        }
        let gamma_bytes = device_bytes.iter().copied().max().unwrap_or(0);
        let a = audit(&file, k, round, options.audit_limit, &mut rng)?;
        steps.push(StepRecord {
            t,
            d: d_used,
            n,
            alpha: alpha_norm.clone(),
            beta: norm(used.beta_units * unit),
            beta_prime: if strategy == Strategy::Mfr { Rational::zero() } else { norm(used.beta_prime_units * unit) },
            gamma: norm(gamma_bytes),
            total: norm(device_bytes.iter().sum()),
            max_load: norm(load.max(gamma_bytes)),
            decode_success_rate: Some(Rational::new(a.subsets_full_rank.into(), a.subsets_checked.max(1).into())),
        });
        measured.push((collected, coordinated));
        per_device.push(device_bytes);
        audits.push(a);
    }

    let live = file.live_ids();
    let pick: Vec<usize> = {
        let mut s: Vec<usize> = sample(&mut rng, live.len(), k).into_iter().map(|i| live[i]).collect();
        s.sort_unstable();
        s
    };
    let final_decode_ok = matches!(file.decode(&pick), Ok(ref out) if *out == data);

    let report = SimReport { strategy, k, block_size: Rational::new((l * unit).into(), k.into()), steps };
    Ok(CodecTrace {
        report,
        audit: audits,
        measured_bytes: measured,
        per_device_bytes: per_device,
        final_decode_ok,
        unit_bytes: unit,
        code_length: l,
    })
}
