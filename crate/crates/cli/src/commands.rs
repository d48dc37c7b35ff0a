use std::fmt::{self, Write as _};
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use regen::codec::{decode_devices, fixed_code, read_device, write_device, CodeLayout, CodecError, CodedFile, DeviceState, RepairOptions};
use regen::cost_model::{check_correct, enumerate_scenarios, mbcr, mscr, CodeParams, CostError, CostPoint, CrPoint, RecoveryScenario, Scheme};
use regen::flow_graph::{build_worst_case, cut_formula, FlowError};
use regen::gf::FieldWidth;
use regen::ratio::{format_fixed, format_sig, int, Rational};
use regen::sim::{run_batch_sweep, run_codec_trace, to_csv, FailurePattern, SimError, SimReport, Strategy, TraceOptions};
use regen::tradeoff::{default_tolerance, trace_curve, TradeoffError};

use crate::{CodeArgs, CostsArgs, DecodeArgs, EncodeArgs, PointArg, RepairArgs, SimulateArgs, TradeoffArgs, VerifyArgs, WidthArg};

const ORACLE_MAX_K: usize = 6;
const TABLE_SCHEMES: [Scheme; 6] = [Scheme::EccEager, Scheme::EccLazy, Scheme::Msr, Scheme::Mbr, Scheme::Mscr, Scheme::Mbcr];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Infeasible(m) => f.write_str(m),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CostError> for CliError {
    fn from(e: CostError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TradeoffError> for CliError {
    fn from(e: TradeoffError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Io(_) | CodecError::Format(_) => CliError::Io(e.to_string()),
            CodecError::RankDeficient { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Codec(c) => c.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn params(code: &CodeArgs, file_size: Rational) -> Result<CodeParams, CliError> {
    Ok(CodeParams::new(code.k, code.d.unwrap_or(code.k), code.t.unwrap_or(1), file_size)?)
}

fn cr_point(p: PointArg) -> CrPoint {
    match p {
        PointArg::Mscr => CrPoint::Mscr,
        PointArg::Mbcr => CrPoint::Mbcr,
    }
}

fn width(w: WidthArg) -> FieldWidth {
    match w {
        WidthArg::W8 => FieldWidth::W8,
        WidthArg::W16 => FieldWidth::W16,
    }
}

pub fn costs(a: &CostsArgs) -> Result<String, CliError> {
    let p = params(&a.code, a.file_size.clone())?;
    let schemes: Vec<Scheme> = if a.all {
        TABLE_SCHEMES.to_vec()
    } else if !a.scheme.is_empty() {
        a.scheme.clone()
    } else {
        return Err(CliError::Usage("give --all or at least one --scheme".into()));
    };
    let mb = int(1_000_000);
    let show = |v: &Rational| if a.exact { (v / &mb).to_string() } else { format_fixed(&(v / &mb), 1) };
    let mut out = String::new();
    if a.csv {
        out.push_str("scheme,k,d,t,alpha_mb,gamma_mb,guaranteed\n");
    } else {
        let _ = writeln!(out, "{:<10} {:>12} {:>12}  guaranteed", "scheme", "alpha (MB)", "gamma (MB)");
    }
    for s in schemes {
        let c = s.cost(&p)?;
        let (d, t) = s.effective_dt(&p);
        if a.csv {
            let _ = writeln!(out, "{},{},{},{},{},{},{}", s, p.k, d, t, show(&c.alpha), show(&c.gamma), c.guaranteed);
        } else {
            let _ = writeln!(out, "{:<10} {:>12} {:>12}  {}", s.name(), show(&c.alpha), show(&c.gamma), if c.guaranteed { "yes" } else { "no" });
        }
    }
    Ok(out)
}

pub fn tradeoff(a: &TradeoffArgs) -> Result<String, CliError> {
    let mut out = String::from("t,alpha_norm,gamma_norm,beta_norm,beta_prime_norm\n");
    for &t in &a.t.0 {
        let p = CodeParams::new(a.k, a.d, t, int(a.k as i64))?;
        let curve = trace_curve(&p, a.samples, &default_tolerance(&p))?;
        for pt in curve {
            let n = pt.normalize(&p);
            let _ = writeln!(
                out,
                "{t},{},{},{},{}",
                format_sig(&n.alpha, 12),
                format_sig(&n.gamma, 12),
                format_sig(&n.beta, 12),
                format_sig(&n.beta_prime, 12)
            );
        }
    }
    Ok(out)
}

fn scaled_point(p: &CodeParams, a: &VerifyArgs) -> Result<CostPoint, CliError> {
    let mut c = match a.point {
        PointArg::Mscr => mscr(p)?,
        PointArg::Mbcr => mbcr(p)?,
    };
    if let Some(f) = &a.beta_scale {
        c = c.with_beta_scaled(f, p.d, p.t);
    }
    if let Some(f) = &a.beta_prime_scale {
        c = c.with_beta_prime_scaled(f, p.d, p.t);
    }
    Ok(c)
}

/// Returns the report and whether every scenario carries at least `M`.
pub fn verify(a: &VerifyArgs) -> Result<(String, bool), CliError> {
    let m = a.file_size.clone().unwrap_or_else(|| int(a.code.k as i64));
    let p = params(&a.code, m)?;
    if a.oracle && p.k > ORACLE_MAX_K {
        return Err(CostError::ScaleExceeded { k: p.k, max: ORACLE_MAX_K }.into());
    }
    let c = scaled_point(&p, a)?;
    let scenarios = enumerate_scenarios(p.k, p.t)?;
    let mut out = String::new();
    let _ = writeln!(out, "k={} d={} t={} point={:?} alpha={} beta={} beta'={} M={}", p.k, p.d, p.t, a.point, c.alpha, c.beta, c.beta_prime, p.file_size);
    if a.oracle {
        let _ = writeln!(out, "{:<24} {:>14} {:>14}  equal  binding", "scenario", "cut_formula", "min_cut");
    } else {
        let _ = writeln!(out, "{:<24} {:>14}  binding", "scenario", "cut_formula");
    }
    let mut oracle_ok = true;
    for s in &scenarios {
        let formula = cut_formula(&p, &c, s)?;
        let binding = if formula == p.file_size { "*" } else { "" };
        if a.oracle {
            let w = build_worst_case(&p, &c, s)?;
            let cut = w.graph.min_cut(w.collector)?;
            let equal = cut == formula;
            oracle_ok &= equal;
            let _ = writeln!(out, "{:<24} {:>14} {:>14}  {:<5}  {}", s.to_string(), formula.to_string(), cut.to_string(), if equal { "yes" } else { "NO" }, binding);
        } else {
            let _ = writeln!(out, "{:<24} {:>14}  {}", s.to_string(), formula.to_string(), binding);
        }
    }
    let correctness = check_correct(&p, &c)?;
    let pass = correctness.satisfied() && oracle_ok;
    if let Some(w) = correctness.witness() {
        let _ = writeln!(out, "FAIL witness u={} lhs={} < M={}", w.scenario, w.lhs, p.file_size);
    } else if !oracle_ok {
        let _ = writeln!(out, "FAIL max-flow disagrees with the cut formula");
    } else {
        let _ = writeln!(out, "PASS ({} scenarios)", scenarios.len());
    }
    if let Some(path) = &a.dot {
        let s: RecoveryScenario = match correctness.witness() {
            Some(w) => w.scenario.clone(),
            None => RecoveryScenario::full_groups(p.k, p.t),
        };
        let w = build_worst_case(&p, &c, &s)?;
        let flow = w.graph.max_flow(w.collector)?;
        fs::write(path, w.graph.to_dot(Some(&flow))).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok((out, pass))
}

fn device_path(dir: &Path, slot: usize) -> PathBuf {
    dir.join(format!("device_{slot:03}.crc"))
}

fn read_slot(dir: &Path, slot: usize) -> Result<(CodeLayout, DeviceState), CliError> {
    let path = device_path(dir, slot);
    let f = fs::File::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_device(BufReader::new(f), slot).map_err(|e| match e {
        CodecError::Format(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other.into(),
    })
}

fn write_slot(dir: &Path, slot: usize, layout: &CodeLayout, dev: &DeviceState) -> Result<(), CliError> {
    let path = device_path(dir, slot);
    let f = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    write_device(&mut w, layout, dev)?;
    w.flush()?;
    Ok(())
}

pub fn encode(a: &EncodeArgs) -> Result<String, CliError> {
    let data = fs::read(&a.input).map_err(|e| CliError::Io(format!("{}: {e}", a.input.display())))?;
    let p = params(&a.code, int(data.len().max(1) as i64))?;
    let (layout, _) = fixed_code(&p, cr_point(a.point), width(a.width))?;
    let file = CodedFile::encode(&data, &layout, p.d + p.t, a.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    for dev in &file.devices {
        write_slot(&a.out_dir, dev.id, &file.layout, dev)?;
    }
    Ok(format!(
        "encoded {} bytes into {} devices: l={} alpha={} units of {} bytes\n",
        data.len(),
        file.devices.len(),
        file.layout.l,
        file.layout.alpha_units,
        file.layout.unit_bytes
    ))
}

pub fn repair(a: &RepairArgs) -> Result<String, CliError> {
    let p = params(&a.code, int(1))?;
    let n = p.d + p.t;
    let (expected, transfer) = fixed_code(&p, cr_point(a.point), FieldWidth::W16)?;
    let mut devices = Vec::new();
    let mut missing = Vec::new();
    let mut layout: Option<CodeLayout> = None;
    for slot in 0..n {
        if !device_path(&a.dir, slot).exists() {
            missing.push(slot);
            continue;
        }
        let (l, dev) = read_slot(&a.dir, slot)?;
        if (l.l, l.alpha_units) != (expected.l, expected.alpha_units) {
            return Err(CliError::Usage(format!(
                "device {slot} has l={} alpha={}, but these parameters need l={} alpha={}",
                l.l, l.alpha_units, expected.l, expected.alpha_units
            )));
        }
        if layout.is_some_and(|x| x != l) {
            return Err(CliError::Io(format!("device {slot} disagrees with the other block files")));
        }
        layout = Some(l);
        devices.push(dev);
    }
    if missing.len() != p.t {
        return Err(CliError::Usage(format!("found {} missing device files, expected t = {}", missing.len(), p.t)));
    }
    let layout = layout.ok_or_else(|| CliError::Usage("no device files found".into()))?;
    // missing slots take part as failed placeholders
    for &slot in &missing {
        devices.push(DeviceState { id: slot, blocks: Vec::new(), alive: false });
    }
    let donors: Vec<usize> = devices.iter().filter(|d| d.alive).map(|d| d.id).take(p.d).collect();
    let file = CodedFile { layout, devices, next_id: n };
    let outcome = file.repair(&missing, &donors, transfer, RepairOptions { redraw_on_deficiency: a.redraw }, a.seed)?;
    let mut out = String::new();
    for (slot, dev) in missing.iter().zip(&outcome.new_devices) {
        write_slot(&a.dir, *slot, &layout, dev)?;
        let bytes = outcome.accounting.device_total(dev.id).unwrap_or(0);
        let _ = writeln!(out, "repaired device {slot}: downloaded {bytes} bytes");
    }
    let _ = writeln!(out, "total {} bytes, coordination {} bytes", outcome.accounting.total(), outcome.accounting.coordination_total());
    Ok(out)
}

pub fn decode(a: &DecodeArgs) -> Result<String, CliError> {
    let slots: Vec<usize> = match &a.devices {
        Some(list) => list.0.clone(),
        None => {
            let mut present: Vec<usize> = fs::read_dir(&a.dir)
                .map_err(|e| CliError::Io(format!("{}: {e}", a.dir.display())))?
                .filter_map(|e| e.ok())
                .filter_map(|e| {
                    let name = e.file_name().into_string().ok()?;
                    name.strip_prefix("device_")?.strip_suffix(".crc")?.parse().ok()
                })
                .collect();
            present.sort_unstable();
            present.truncate(a.k);
            present
        }
    };
    let mut layout: Option<CodeLayout> = None;
    let mut devices = Vec::with_capacity(slots.len());
    for &slot in &slots {
        let (l, dev) = read_slot(&a.dir, slot)?;
        if layout.is_some_and(|x| x != l) {
            return Err(CliError::Io(format!("device {slot} disagrees with the other block files")));
        }
        layout = Some(l);
        devices.push(dev);
    }
    let layout = layout.ok_or_else(|| CliError::Infeasible("no device files to decode from".into()))?;
    let refs: Vec<&DeviceState> = devices.iter().collect();
    let data = decode_devices(&layout, &refs)?;
    fs::write(&a.out, &data).map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;
    Ok(format!("decoded {} bytes from devices {:?}\n", data.len(), slots))
}

fn default_strategies(figure: Option<u8>) -> Vec<Strategy> {
    match figure {
        Some(11) => vec![Strategy::EccEager, Strategy::EccLazy, Strategy::Arc, Strategy::Mfr],
        _ => vec![Strategy::EccEager, Strategy::EccLazy, Strategy::Msr, Strategy::Mbr, Strategy::Mscr, Strategy::Mbcr],
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let (k, d, n) = match a.figure {
        Some(8) => (Some(32), Some(48), None),
        Some(11) => (Some(32), None, Some(64)),
        Some(f) => return Err(CliError::Usage(format!("no preset {f}; use 8 or 11"))),
        None => (None, None, None),
    };
    let k = a.k.or(k).ok_or_else(|| CliError::Usage("-k is required without --figure".into()))?;
    let (mut d, n) = (a.d.or(d), a.n.or(n));
    if d.is_none() && n.is_none() {
        d = Some(k);
    }
    let ts: Vec<usize> = match (&a.t, a.figure) {
        (Some(list), _) => list.0.clone(),
        (None, Some(_)) => (1..=32).collect(),
        (None, None) => vec![1],
    };
    let strategies = if a.strategy.is_empty() { default_strategies(a.figure) } else { a.strategy.clone() };

    if a.codec {
        return codec_trace(a, k, d, n, &ts, &strategies);
    }
    let mut reports: Vec<SimReport> = Vec::new();
    for &s in &strategies {
        let report = if s.is_adaptive() {
            let n = n.or(d.map(|d| d + ts.iter().max().copied().unwrap_or(1))).ok_or_else(|| CliError::Usage(format!("{s} needs -n")))?;
            run_batch_sweep(s, k, n, ts.iter().copied(), &a.file_size)?
        } else if let (None, Some(n)) = (d, n) {
            // constant system size: d = n - t for every batch
            let mut steps = Vec::new();
            for &t in &ts {
                if t >= n || n - t < k {
                    return Err(CliError::Usage(format!("t = {t} leaves fewer than k live devices")));
                }
                steps.extend(run_batch_sweep(s, k, n - t, [t], &a.file_size)?.steps);
            }
            SimReport { strategy: s, k, block_size: &a.file_size / int(k as i64), steps }
        } else {
            let d = d.ok_or_else(|| CliError::Usage(format!("{s} needs -d")))?;
            run_batch_sweep(s, k, d, ts.iter().copied(), &a.file_size)?
        };
        reports.push(report);
    }
    Ok(to_csv(&reports))
}

fn codec_trace(a: &SimulateArgs, k: usize, d: Option<usize>, n: Option<usize>, ts: &[usize], strategies: &[Strategy]) -> Result<String, CliError> {
    let options = TraceOptions {
        width: width(a.width),
        file_len: a.file_len,
        granularity: a.granularity,
        transfer_override: match (a.beta_units, a.beta_prime_units) {
            (None, None) => None,
            (b, bp) => Some(regen::codec::Transfer { beta_units: b.unwrap_or(a.granularity), beta_prime_units: bp.unwrap_or(a.granularity) }),
        },
        pattern: if a.adversarial { FailurePattern::OldestFirst } else { FailurePattern::Random },
        ..TraceOptions::default()
    };
    let mut reports = Vec::new();
    for &s in strategies {
        if !s.codec_supported() {
            return Err(CliError::Usage(format!("{s} has no codec; use mscr, mbcr, arc or mfr")));
        }
        for &t in ts {
            let p = if s.is_adaptive() {
                let n = n.ok_or_else(|| CliError::Usage(format!("{s} needs -n")))?;
                if t > n.saturating_sub(k) {
                    return Err(CliError::Usage(format!("t = {t} exceeds n - k")));
                }
                CodeParams::with_n(n, k, n - t, t, int(a.file_len as i64))?
            } else {
                let d = d.ok_or_else(|| CliError::Usage(format!("{s} needs -d")))?;
                CodeParams::new(k, d, t, int(a.file_len as i64))?
            };
            reports.push(run_codec_trace(s, &p, a.rounds, a.seed, &options)?.report);
        }
    }
    Ok(to_csv(&reports))
}
