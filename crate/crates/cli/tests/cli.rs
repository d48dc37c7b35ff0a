use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn regen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regen")).args(args).output().expect("run regen")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn costs_table_and_usage_errors() {
    let o = regen(&["costs", "-k", "32", "-d", "36", "-t", "4", "-M", "32MB", "--all"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("mscr") && l.contains("4.9")));
    assert_eq!(text.lines().count(), 7);

    let o = regen(&["costs", "-k", "2", "-d", "1", "-M", "1MB", "--all"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("d >= k"));

    let o = regen(&["costs", "-k", "2", "-M", "1MB"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_witness_and_exit_code() {
    let ok = regen(&["verify", "-k", "4", "-d", "5", "-t", "2", "--oracle"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("PASS"));

    let bad = regen(&["verify", "-k", "4", "-d", "5", "-t", "2", "--beta-scale", "0.99"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("FAIL witness u=(2,2)"));

    let single = regen(&["verify", "-k", "3", "-d", "4", "-t", "1", "--oracle"]);
    assert!(stdout(&single).contains("PASS (1 scenarios)"));

    let big = regen(&["verify", "-k", "8", "-d", "8", "-t", "2", "--oracle"]);
    assert_eq!(big.status.code(), Some(2));
}

#[test]
fn verify_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let o = regen(&["verify", "-k", "2", "-d", "3", "-t", "2", "--point", "mbcr", "--dot", path(&dot)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
}

#[test]
fn encode_repair_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let devs = dir.path().join("dev");
    let data: Vec<u8> = (0..(1u32 << 20)).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
    fs::write(&input, &data).unwrap();
    let args = ["-k", "4", "-d", "5", "-t", "2"];

    let mut enc = vec!["encode", "-i", path(&input), "--out-dir", path(&devs), "--seed", "7"];
    enc.extend(args);
    assert!(regen(&enc).status.success());
    fs::remove_file(devs.join("device_002.crc")).unwrap();
    fs::remove_file(devs.join("device_006.crc")).unwrap();

    let mut rep = vec!["repair", "--dir", path(&devs), "--seed", "8"];
    rep.extend(args);
    let o = regen(&rep);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    for subset in ["2,6,0,1", "3,4,5,6", "0,2,4,6"] {
        let out = dir.path().join(format!("out_{subset}.bin"));
        let o = regen(&["decode", "--dir", path(&devs), "-o", path(&out), "-k", "4", "--devices", subset]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(fs::read(&out).unwrap(), data);
    }

    let out = dir.path().join("short.bin");
    let o = regen(&["decode", "--dir", path(&devs), "-o", path(&out), "-k", "4", "--devices", "0,1,2"]);
    assert_eq!(o.status.code(), Some(3));

    let mut bytes = fs::read(devs.join("device_003.crc")).unwrap();
    bytes[..4].copy_from_slice(b"NOPE");
    fs::write(devs.join("device_003.crc"), bytes).unwrap();
    let o = regen(&["decode", "--dir", path(&devs), "-o", path(&out), "-k", "4", "--devices", "3,4,5,6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));
}

#[test]
fn repair_needs_exactly_t_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    fs::write(&input, b"small file").unwrap();
    let devs = dir.path().join("dev");
    assert!(regen(&["encode", "-i", path(&input), "--out-dir", path(&devs), "-k", "2", "-d", "3", "-t", "2"]).status.success());
    let o = regen(&["repair", "--dir", path(&devs), "-k", "2", "-d", "3", "-t", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = regen(&["decode", "--dir", path(&dir.path().join("nowhere")), "-o", path(&input), "-k", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_presets() {
    let o = regen(&["simulate", "--figure", "11"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let arc: Vec<&str> = text.lines().filter(|l| l.starts_with("arc,")).collect();
    assert_eq!(arc.len(), 32);
    assert!(arc.iter().all(|l| l.split(',').nth(8) == Some("1.96875000000")));

    let o = regen(&["simulate", "--figure", "8", "--t", "1", "--strategy", "mbcr,mbr"]);
    let rows: Vec<Vec<String>> = stdout(&o).lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 2);
    // at t = 1 coordination traffic is unused, everything else coincides
    for i in [5, 6, 8, 9] {
        assert_eq!(rows[0][i], rows[1][i]);
    }

    assert_eq!(regen(&["simulate", "--strategy", "raid5", "-k", "4"]).status.code(), Some(2));
    assert_eq!(regen(&["simulate", "--figure", "9"]).status.code(), Some(2));
}

#[test]
fn simulate_codec_trace_is_reproducible() {
    let args = ["simulate", "--codec", "--strategy", "mscr", "-k", "4", "-d", "5", "--t", "2", "--rounds", "3", "--file-len", "3000", "--seed", "5"];
    let a = stdout(&regen(&args));
    let b = stdout(&regen(&args));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 4);
    assert!(a.lines().skip(1).all(|l| l.ends_with(",1.00000000000")));
}

#[test]
fn tradeoff_endpoints() {
    let o = regen(&["tradeoff", "-k", "4", "-d", "5", "-t", "1,2", "--samples", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    // minimum storage at t = 2: gamma = (d + t - 1)/(d - k + t) = 2
    assert!(lines[3].starts_with("2,1.00000000000,2.00000000000"));
}
