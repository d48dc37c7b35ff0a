//! Random linear network code implementing coordinated repair.
//!
//! A file is padded and split into `l` sub-blocks of `unit_bytes` each. Every
//! stored block carries its coefficient vector over those `l` sub-blocks, so
//! repair and decode only ever manipulate (coefficients, payload) pairs.

use std::io::{self, Read, Write};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost_model::{CodeParams, CostError, CrPoint};
use crate::gf::{CoeffMatrix, FieldElement, FieldWidth, RowBasis};
use crate::ratio::{lcm_range, rat, Rational};

pub const MAGIC: &[u8; 4] = b"CRC1";
pub const FORMAT_VERSION: u16 = 1;
const LEN_PREFIX: usize = 8;
const MAX_CODE_LENGTH: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot encode an empty file")]
    FileTooSmall,
    #[error("need {need} donors, got {got}")]
    NotEnoughDonors { need: usize, got: usize },
    #[error("donor {0} is not alive")]
    DeadDonor(usize),
    #[error("no device with id {0}")]
    UnknownDevice(usize),
    #[error("only {live} live devices remain, at least k = {k} are needed")]
    TooManyFailures { live: usize, k: usize },
    #[error("transfer of {numer}/{denom} units is not integral")]
    NonIntegralTransfer { numer: usize, denom: usize },
    #[error("rank {rank} < code length {needed}; cannot decode")]
    RankDeficient { rank: usize, needed: usize },
    #[error("block format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Sizes shared by every block of one coded file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeLayout {
    pub width: FieldWidth,
    /// Number of original sub-blocks.
    pub l: usize,
    /// Blocks held by each device.
    pub alpha_units: usize,
    /// Zero until the layout is sized for a file.
    pub unit_bytes: usize,
}

/// Units sent per donor (`beta`) and per peer (`beta'`) in one repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub beta_units: usize,
    pub beta_prime_units: usize,
}

impl CodeLayout {
    pub fn new(width: FieldWidth, l: usize, alpha_units: usize) -> Result<Self, CodecError> {
        if l == 0 || alpha_units == 0 {
            return Err(CodecError::InvalidParams("code length and alpha must be positive".into()));
        }
        if l > MAX_CODE_LENGTH {
            return Err(CodecError::InvalidParams(format!("code length {l} exceeds {MAX_CODE_LENGTH}")));
        }
        Ok(Self { width, l, alpha_units, unit_bytes: 0 })
    }

    /// Splits every unit into `factor` finer units.
    pub fn refined(&self, factor: usize) -> Result<Self, CodecError> {
        Self::new(self.width, self.l * factor, self.alpha_units * factor)
    }

    /// Length after the length prefix and padding to `l` whole symbols.
    pub fn padded_len(&self, file_len: usize) -> usize {
        let chunk = self.l * self.width.symbol_bytes();
        (file_len + LEN_PREFIX).div_ceil(chunk) * chunk
    }

    pub fn sized_for(&self, file_len: usize) -> Self {
        Self { unit_bytes: self.padded_len(file_len) / self.l, ..*self }
    }

    /// Bytes one stored block occupies in a block file.
    pub fn record_bytes(&self) -> usize {
        self.l * self.width.symbol_bytes() + self.unit_bytes
    }
}

/// Layout and transfer sizes of a fixed `(k, d, t)` code at one of the
/// closed-form points. Units are `M/(k z)` with `z = d - k + t` for minimum
/// storage and `M/(k (2d - k + t))` for minimum bandwidth.
pub fn fixed_code(p: &CodeParams, point: CrPoint, width: FieldWidth) -> Result<(CodeLayout, Transfer), CodecError> {
    p.validate()?;
    let (k, d, t) = (p.k, p.d, p.t);
    match point {
        CrPoint::Mscr => {
            let z = d - k + t;
            Ok((CodeLayout::new(width, k * z, z)?, Transfer { beta_units: 1, beta_prime_units: 1 }))
        }
        CrPoint::Mbcr => {
            let u = 2 * d - k + t;
            Ok((CodeLayout::new(width, k * u, 2 * d + t - 1)?, Transfer { beta_units: 2, beta_prime_units: 1 }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptiveMode {
    Arc,
    Mfr,
}

/// Sub-blocks per device needed to serve every repair size exactly.
pub fn code_length_requirements(n: usize, k: usize, mode: AdaptiveMode) -> Result<BigInt, CodecError> {
    if n <= k || k == 0 {
        return Err(CodecError::InvalidParams(format!("need n > k >= 1, got n = {n}, k = {k}")));
    }
    Ok(match mode {
        AdaptiveMode::Arc => BigInt::from(n - k),
        AdaptiveMode::Mfr => lcm_range((n - k) as u64),
    })
}

/// Minimum-storage layout for adaptive operation: `alpha = z` units.
pub fn adaptive_layout(n: usize, k: usize, mode: AdaptiveMode, width: FieldWidth) -> Result<CodeLayout, CodecError> {
    let z = code_length_requirements(n, k, mode)?
        .to_usize()
        .filter(|z| z * k <= MAX_CODE_LENGTH)
        .ok_or_else(|| CodecError::InvalidParams(format!("code length for n = {n}, k = {k} is too large")))?;
    CodeLayout::new(width, k * z, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Send the next whole number of units.
    #[default]
    Up,
    Reject,
}

/// Transfer sizes of one adaptive repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptiveTransfer {
    pub transfer: Transfer,
    /// `beta = beta'` in units before rounding.
    pub ideal_units: Rational,
    pub rounded: bool,
}

/// `beta = beta' = z / (d - k + t)` units where `z` is the per-device count
/// for `mode` (`t = 1` for the independent-repair baseline).
pub fn adaptive_transfer(n: usize, k: usize, d: usize, t: usize, mode: AdaptiveMode, rounding: Rounding) -> Result<AdaptiveTransfer, CodecError> {
    if d < k {
        return Err(CodecError::TooManyFailures { live: d, k });
    }
    let z = code_length_requirements(n, k, mode)?
        .to_usize()
        .ok_or_else(|| CodecError::InvalidParams("code length overflow".into()))?;
    let t_eff = match mode {
        AdaptiveMode::Arc => t,
        AdaptiveMode::Mfr => 1,
    };
    let denom = d - k + t_eff;
    let rounded = z % denom != 0;
    if rounded && rounding == Rounding::Reject {
        return Err(CodecError::NonIntegralTransfer { numer: z, denom });
    }
    let units = z.div_ceil(denom);
    Ok(AdaptiveTransfer {
        transfer: Transfer { beta_units: units, beta_prime_units: units },
        ideal_units: rat(z as i64, denom as i64),
        rounded,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedBlock {
    pub coeffs: Vec<FieldElement>,
    pub payload: Vec<u8>,
}

impl CodedBlock {
    fn zero(layout: &CodeLayout) -> Self {
        Self { coeffs: vec![0; layout.l], payload: vec![0; layout.unit_bytes] }
    }

    fn unit(layout: &CodeLayout, i: usize, payload: &[u8]) -> Self {
        let mut coeffs = vec![0; layout.l];
        coeffs[i] = 1;
        Self { coeffs, payload: payload.to_vec() }
    }
}

/// Random combination of `sources`, coefficients and payloads alike.
fn combine(layout: &CodeLayout, sources: &[&CodedBlock], rng: &mut ChaCha8Rng) -> CodedBlock {
    let field = layout.width.field();
    let mut out = CodedBlock::zero(layout);
    for s in sources {
        let c = field.random_element(rng);
        field.mul_acc(&mut out.coeffs, &s.coeffs, c);
        field.mul_acc_slice(&mut out.payload, &s.payload, c);
    }
    out
}

fn combine_many(layout: &CodeLayout, sources: &[&CodedBlock], count: usize, rng: &mut ChaCha8Rng) -> Vec<CodedBlock> {
    (0..count).map(|_| combine(layout, sources, rng)).collect()
}

fn coeff_rank(layout: &CodeLayout, blocks: &[&CodedBlock]) -> usize {
    let mut basis = RowBasis::new(layout.width, layout.l);
    for b in blocks {
        basis.insert(&b.coeffs);
        if basis.is_full() {
            break;
        }
    }
    basis.rank()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceState {
    pub id: usize,
    pub blocks: Vec<CodedBlock>,
    pub alive: bool,
}

/// Blocks handled by one newcomer during a repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSession {
    pub device_id: usize,
    /// Collected from the donors, `d beta` units.
    pub w1: Vec<CodedBlock>,
    /// Received from the other newcomers, `(t - 1) beta'` units.
    pub w2: Vec<CodedBlock>,
    /// Stored, `alpha` units.
    pub w3: Vec<CodedBlock>,
    /// Store redraws after a local rank deficiency.
    pub redraws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RepairOptions {
    /// Redraw the stored combinations (up to 3 times) if they lose rank
    /// relative to `W1 + W2`.
    pub redraw_on_deficiency: bool,
}

/// Payload bytes moved in one repair, measured from the blocks sent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransferAccounting {
    /// `(newcomer id, collected bytes, coordination bytes received)`.
    pub per_device: Vec<(usize, usize, usize)>,
    /// `(donor id, bytes uploaded)`.
    pub donor_upload: Vec<(usize, usize)>,
}

impl TransferAccounting {
    pub fn device_total(&self, id: usize) -> Option<usize> {
        self.per_device.iter().find(|e| e.0 == id).map(|e| e.1 + e.2)
    }

    pub fn total(&self) -> usize {
        self.per_device.iter().map(|e| e.1 + e.2).sum()
    }

    pub fn coordination_total(&self) -> usize {
        self.per_device.iter().map(|e| e.2).sum()
    }

    /// Largest upload by any single device, newcomers included.
    pub fn max_upload(&self) -> usize {
        let coord = self.per_device.iter().map(|e| e.2).max().unwrap_or(0);
        self.donor_upload.iter().map(|e| e.1).max().unwrap_or(0).max(coord)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairOutcome {
    pub failed: Vec<usize>,
    pub donors: Vec<usize>,
    pub new_devices: Vec<DeviceState>,
    pub sessions: Vec<RepairSession>,
    pub accounting: TransferAccounting,
}

/// A coded file spread over devices. Each slot of `devices` keeps its
/// position when its device is replaced by a repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedFile {
    pub layout: CodeLayout,
    pub devices: Vec<DeviceState>,
    pub next_id: usize,
}

impl CodedFile {
    pub fn encode(data: &[u8], layout: &CodeLayout, n: usize, seed: u64) -> Result<Self, CodecError> {
        if data.is_empty() {
            return Err(CodecError::FileTooSmall);
        }
        if n == 0 {
            return Err(CodecError::InvalidParams("n must be positive".into()));
        }
        let layout = layout.sized_for(data.len());
        let mut padded = Vec::with_capacity(layout.padded_len(data.len()));
        padded.extend_from_slice(&(data.len() as u64).to_le_bytes());
        padded.extend_from_slice(data);
        padded.resize(layout.padded_len(data.len()), 0);
        let originals: Vec<CodedBlock> = padded
            .chunks(layout.unit_bytes)
            .enumerate()
            .map(|(i, chunk)| CodedBlock::unit(&layout, i, chunk))
            .collect();
        let sources: Vec<&CodedBlock> = originals.iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let devices = (0..n)
            .map(|id| DeviceState { id, blocks: combine_many(&layout, &sources, layout.alpha_units, &mut rng), alive: true })
            .collect();
        Ok(Self { layout, devices, next_id: n })
    }

    pub fn device(&self, id: usize) -> Option<&DeviceState> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn live_ids(&self) -> Vec<usize> {
        self.devices.iter().filter(|d| d.alive).map(|d| d.id).collect()
    }

    /// Runs collect, coordinate and store for the devices in `failed`,
    /// without modifying `self`.
    pub fn repair(&self, failed: &[usize], donors: &[usize], transfer: Transfer, options: RepairOptions, seed: u64) -> Result<RepairOutcome, CodecError> {
        let layout = &self.layout;
        if failed.is_empty() {
            return Err(CodecError::InvalidParams("no failed devices".into()));
        }
        if donors.is_empty() {
            return Err(CodecError::NotEnoughDonors { need: 1, got: 0 });
        }
        for f in failed {
            self.device(*f).ok_or(CodecError::UnknownDevice(*f))?;
        }
        let mut donor_states = Vec::with_capacity(donors.len());
        for id in donors {
            let dev = self.device(*id).ok_or(CodecError::UnknownDevice(*id))?;
            if !dev.alive || failed.contains(id) {
                return Err(CodecError::DeadDonor(*id));
            }
            donor_states.push(dev);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = failed.len();
        let new_ids: Vec<usize> = (0..t).map(|i| self.next_id + i).collect();

        // collect: every donor sends fresh combinations to every newcomer
        let mut w1: Vec<Vec<CodedBlock>> = vec![Vec::new(); t];
        for w in w1.iter_mut() {
            for dev in &donor_states {
                let own: Vec<&CodedBlock> = dev.blocks.iter().collect();
                w.extend(combine_many(layout, &own, transfer.beta_units, &mut rng));
            }
        }

        // coordinate: digests of W1 only
        let mut w2: Vec<Vec<CodedBlock>> = vec![Vec::new(); t];
        for i in 0..t {
            let own: Vec<&CodedBlock> = w1[i].iter().collect();
            for (j, w) in w2.iter_mut().enumerate() {
                if j != i {
                    w.extend(combine_many(layout, &own, transfer.beta_prime_units, &mut rng));
                }
            }
        }

        // store
        let mut sessions = Vec::with_capacity(t);
        let mut new_devices = Vec::with_capacity(t);
        let mut accounting = TransferAccounting::default();
        for (i, (w1, w2)) in w1.into_iter().zip(w2).enumerate() {
            let pool: Vec<&CodedBlock> = w1.iter().chain(w2.iter()).collect();
            let mut w3 = combine_many(layout, &pool, layout.alpha_units, &mut rng);
            let mut redraws = 0;
            if options.redraw_on_deficiency {
                let target = coeff_rank(layout, &pool).min(layout.alpha_units);
                while redraws < 3 && coeff_rank(layout, &w3.iter().collect::<Vec<_>>()) < target {
                    w3 = combine_many(layout, &pool, layout.alpha_units, &mut rng);
                    redraws += 1;
                }
            }
            let collected = w1.iter().map(|b| b.payload.len()).sum();
            let coordinated = w2.iter().map(|b| b.payload.len()).sum();
            accounting.per_device.push((new_ids[i], collected, coordinated));
            new_devices.push(DeviceState { id: new_ids[i], blocks: w3.clone(), alive: true });
            sessions.push(RepairSession { device_id: new_ids[i], w1, w2, w3, redraws });
        }
        let per_donor = t * transfer.beta_units * layout.unit_bytes;
        accounting.donor_upload = donors.iter().map(|d| (*d, per_donor)).collect();

        Ok(RepairOutcome { failed: failed.to_vec(), donors: donors.to_vec(), new_devices, sessions, accounting })
    }

    /// Replaces each failed device by its newcomer, slot for slot.
    pub fn commit(&mut self, outcome: &RepairOutcome) {
        for (f, new) in outcome.failed.iter().zip(&outcome.new_devices) {
            if let Some(slot) = self.devices.iter_mut().find(|d| d.id == *f) {
                *slot = new.clone();
            }
            self.next_id = self.next_id.max(new.id + 1);
        }
    }

    /// Adaptive repair with every other live device as donor.
    pub fn repair_adaptive(&self, n: usize, k: usize, failed: &[usize], rounding: Rounding, options: RepairOptions, seed: u64) -> Result<(RepairOutcome, AdaptiveTransfer), CodecError> {
        let donors: Vec<usize> = self.live_ids().into_iter().filter(|id| !failed.contains(id)).collect();
        let at = adaptive_transfer(n, k, donors.len(), failed.len(), AdaptiveMode::Arc, rounding)?;
        let outcome = self.repair(failed, &donors, at.transfer, options, seed)?;
        Ok((outcome, at))
    }

    /// Independent single repairs of each failed device from the surviving
    /// devices only. Outcomes are returned in `failed` order, not committed.
    pub fn repair_mfr(&self, n: usize, k: usize, failed: &[usize], options: RepairOptions, seed: u64) -> Result<(Vec<RepairOutcome>, AdaptiveTransfer), CodecError> {
        let donors: Vec<usize> = self.live_ids().into_iter().filter(|id| !failed.contains(id)).collect();
        let at = adaptive_transfer(n, k, donors.len(), 1, AdaptiveMode::Mfr, Rounding::Up)?;
        let mut outcomes = Vec::with_capacity(failed.len());
        let mut snapshot = self.clone();
        for (i, f) in failed.iter().enumerate() {
            let out = snapshot.repair(&[*f], &donors, at.transfer, options, seed.wrapping_add(i as u64))?;
            // keep ids unique across the independent repairs
            snapshot.next_id = out.new_devices[0].id + 1;
            outcomes.push(out);
        }
        Ok((outcomes, at))
    }

    pub fn rank_of(&self, ids: &[usize]) -> Result<usize, CodecError> {
        let devices = self.select(ids)?;
        Ok(rank_of_devices(&self.layout, &devices))
    }

    pub fn decode(&self, ids: &[usize]) -> Result<Vec<u8>, CodecError> {
        let devices = self.select(ids)?;
        decode_devices(&self.layout, &devices)
    }

    fn select(&self, ids: &[usize]) -> Result<Vec<&DeviceState>, CodecError> {
        ids.iter()
            .map(|id| match self.device(*id) {
                Some(d) if d.alive => Ok(d),
                Some(_) => Err(CodecError::DeadDonor(*id)),
                None => Err(CodecError::UnknownDevice(*id)),
            })
            .collect()
    }
}

pub fn rank_of_devices(layout: &CodeLayout, devices: &[&DeviceState]) -> usize {
    let blocks: Vec<&CodedBlock> = devices.iter().flat_map(|d| d.blocks.iter()).collect();
    coeff_rank(layout, &blocks)
}

/// Picks `l` independent blocks, inverts their coefficients and strips the
/// length prefix.
pub fn decode_devices(layout: &CodeLayout, devices: &[&DeviceState]) -> Result<Vec<u8>, CodecError> {
    let mut basis = RowBasis::new(layout.width, layout.l);
    let mut chosen: Vec<&CodedBlock> = Vec::with_capacity(layout.l);
    for b in devices.iter().flat_map(|d| d.blocks.iter()) {
        if basis.insert(&b.coeffs) {
            chosen.push(b);
            if basis.is_full() {
                break;
            }
        }
    }
    if chosen.len() < layout.l {
        return Err(CodecError::RankDeficient { rank: chosen.len(), needed: layout.l });
    }
    let rows: Vec<Vec<FieldElement>> = chosen.iter().map(|b| b.coeffs.clone()).collect();
    let inv = CoeffMatrix::from_rows(layout.width, &rows)
        .and_then(|m| m.inverse())
        .map_err(|_| CodecError::RankDeficient { rank: chosen.len(), needed: layout.l })?;
    let field = layout.width.field();
    let mut out = vec![0u8; layout.l * layout.unit_bytes];
    for (i, chunk) in out.chunks_mut(layout.unit_bytes).enumerate() {
        for (j, b) in chosen.iter().enumerate() {
            field.mul_acc_slice(chunk, &b.payload, inv.get(i, j));
        }
    }
    let len = u64::from_le_bytes(out[..LEN_PREFIX].try_into().expect("prefix")) as usize;
    if len > out.len() - LEN_PREFIX {
        return Err(CodecError::Format(format!("decoded length {len} exceeds payload")));
    }
    Ok(out[LEN_PREFIX..LEN_PREFIX + len].to_vec())
}

/// Writes one device in the block file format.
pub fn write_device<W: Write>(mut w: W, layout: &CodeLayout, device: &DeviceState) -> Result<(), CodecError> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[layout.width.bits()])?;
    w.write_all(&(layout.l as u32).to_le_bytes())?;
    w.write_all(&(device.blocks.len() as u32).to_le_bytes())?;
    w.write_all(&(layout.unit_bytes as u64).to_le_bytes())?;
    for b in &device.blocks {
        for c in &b.coeffs {
            match layout.width {
                FieldWidth::W8 => w.write_all(&[*c as u8])?,
                FieldWidth::W16 => w.write_all(&c.to_le_bytes())?,
            }
        }
        w.write_all(&b.payload)?;
    }
    Ok(())
}

/// Reads one device; returns the layout recorded in its header.
pub fn read_device<R: Read>(mut r: R, id: usize) -> Result<(CodeLayout, DeviceState), CodecError> {
    let mut head = [0u8; 4 + 2 + 1 + 4 + 4 + 8];
    r.read_exact(&mut head).map_err(|e| truncated(e, "header"))?;
    if &head[..4] != MAGIC {
        return Err(CodecError::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != FORMAT_VERSION {
        return Err(CodecError::Format(format!("unsupported version {version}")));
    }
    let width = FieldWidth::from_bits(head[6]).ok_or_else(|| CodecError::Format(format!("unsupported field width {}", head[6])))?;
    let l = u32::from_le_bytes(head[7..11].try_into().expect("4 bytes")) as usize;
    let alpha = u32::from_le_bytes(head[11..15].try_into().expect("4 bytes")) as usize;
    let unit_bytes = u64::from_le_bytes(head[15..23].try_into().expect("8 bytes")) as usize;
    let mut layout = CodeLayout::new(width, l, alpha).map_err(|e| CodecError::Format(e.to_string()))?;
    if unit_bytes % width.symbol_bytes() != 0 {
        return Err(CodecError::Format("unit size is not a whole number of symbols".into()));
    }
    layout.unit_bytes = unit_bytes;

    let sb = width.symbol_bytes();
    let mut blocks = Vec::with_capacity(alpha);
    let mut coeff_buf = vec![0u8; l * sb];
    for _ in 0..alpha {
        r.read_exact(&mut coeff_buf).map_err(|e| truncated(e, "coefficients"))?;
        let coeffs = coeff_buf
            .chunks(sb)
            .map(|c| if sb == 1 { c[0] as u16 } else { u16::from_le_bytes([c[0], c[1]]) })
            .collect();
        let mut payload = vec![0u8; unit_bytes];
        r.read_exact(&mut payload).map_err(|e| truncated(e, "payload"))?;
        blocks.push(CodedBlock { coeffs, payload });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(CodecError::Format("trailing bytes after last record".into()));
    }
    Ok((layout, DeviceState { id, blocks, alive: true }))
}

fn truncated(e: io::Error, what: &str) -> CodecError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        CodecError::Format(format!("truncated {what}"))
    } else {
        CodecError::Io(e)
    }
}
