use regen::ratio::{int, rat, Rational};

/// `32MB`, `120KB`, `1.5MB`, `4096B` or a bare byte count. Decimal units.
pub fn size(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let upper = s.to_ascii_uppercase();
    let (num, scale) = if let Some(v) = upper.strip_suffix("MB") {
        (v, 1_000_000)
    } else if let Some(v) = upper.strip_suffix("KB") {
        (v, 1_000)
    } else if let Some(v) = upper.strip_suffix('B') {
        (v, 1)
    } else {
        (upper.as_str(), 1)
    };
    let v = decimal(num.trim())? * int(scale);
    if v <= int(0) {
        return Err(format!("size must be positive: {s}"));
    }
    Ok(v)
}

/// Exact value of a plain decimal such as `0.99`.
pub fn decimal(s: &str) -> Result<Rational, String> {
    let bad = || format!("not a decimal number: {s:?}");
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if (ip.is_empty() && fp.is_empty()) || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) || fp.len() > 18 {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let n: i64 = digits.trim_start_matches('0').parse().or_else(|e| if digits.chars().all(|c| c == '0') { Ok(0) } else { Err(e) }).map_err(|_| bad())?;
    let v = rat(n, 10i64.pow(fp.len() as u32));
    Ok(if neg { -v } else { v })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct List(pub Vec<usize>);

/// `1,2,4`, `1..16` (inclusive) or a mix such as `1..4,8`.
pub fn usize_list(s: &str) -> Result<List, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.parse().map_err(|_| format!("bad range start in {part:?}"))?;
            let b: usize = b.trim_start_matches('=').parse().map_err(|_| format!("bad range end in {part:?}"))?;
            if a > b {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("not a number: {part:?}"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(List(out))
}
