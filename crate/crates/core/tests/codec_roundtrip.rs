use regen::codec::{fixed_code, CodecError, CodedFile, RepairOptions, Transfer};
use regen::cost_model::{CodeParams, CrPoint};
use regen::gf::FieldWidth;
use regen::ratio::int;
use regen::sim::{k_subsets, run_codec_trace, FailurePattern, Strategy, TraceOptions};

#[test]
fn mscr_survives_ten_rounds_for_many_seeds() {
    let p = CodeParams::new(4, 5, 2, int(1)).unwrap();
    let opts = TraceOptions { file_len: 2048, ..TraceOptions::default() };
    let mut clean = 0;
    for seed in 0..30 {
        let tr = run_codec_trace(Strategy::Mscr, &p, 10, seed, &opts).unwrap();
        assert!(tr.final_decode_ok);
        if tr.all_subsets_decodable() {
            clean += 1;
        }
    }
    assert!(clean >= 29, "{clean}/30");
}

#[test]
fn mbcr_survives_repairs() {
    let p = CodeParams::new(4, 6, 2, int(1)).unwrap();
    let tr = run_codec_trace(Strategy::Mbcr, &p, 8, 4, &TraceOptions::default()).unwrap();
    assert!(tr.all_subsets_decodable() && tr.final_decode_ok);
}

#[test]
fn halved_beta_loses_the_file_under_the_binding_history() {
    let p = CodeParams::new(4, 5, 2, int(1)).unwrap();
    let opts = TraceOptions {
        granularity: 2,
        transfer_override: Some(Transfer { beta_units: 1, beta_prime_units: 2 }),
        pattern: FailurePattern::OldestFirst,
        ..TraceOptions::default()
    };
    for seed in 0..10 {
        let tr = run_codec_trace(Strategy::Mscr, &p, 4, seed, &opts).unwrap();
        assert!(!tr.all_subsets_decodable(), "seed {seed}");
    }
}

#[test]
fn non_dividing_group_size_is_checked_empirically() {
    // t does not divide k; no guarantee, but the codec still runs
    let p = CodeParams::new(3, 4, 2, int(1)).unwrap();
    assert!(!p.guaranteed());
    let tr = run_codec_trace(Strategy::Mscr, &p, 5, 2, &TraceOptions::default()).unwrap();
    assert_eq!(tr.audit.len(), 6);
}

#[test]
fn file_round_trip_through_block_files() {
    let p = CodeParams::new(4, 5, 2, int(1)).unwrap();
    let (layout, tr) = fixed_code(&p, CrPoint::Mscr, FieldWidth::W16).unwrap();
    let data: Vec<u8> = (0..10_000u32).map(|i| (i * 31 % 251) as u8).collect();
    let mut file = CodedFile::encode(&data, &layout, 7, 99).unwrap();
    let out = file.repair(&[2, 6], &[0, 1, 3, 4, 5], tr, RepairOptions { redraw_on_deficiency: true }, 5).unwrap();
    file.commit(&out);

    let mut restored = Vec::new();
    for dev in &file.devices {
        let mut buf = Vec::new();
        regen::codec::write_device(&mut buf, &file.layout, dev).unwrap();
        let (layout, d) = regen::codec::read_device(&buf[..], dev.id).unwrap();
        assert_eq!(layout, file.layout);
        restored.push(d);
    }
    let reread = CodedFile { layout: file.layout, devices: restored, next_id: file.next_id };
    for s in k_subsets(&reread.live_ids(), 4) {
        assert_eq!(reread.decode(&s).unwrap(), data);
    }
    assert!(matches!(reread.decode(&[0, 1, 3]), Err(CodecError::RankDeficient { .. })));
}
