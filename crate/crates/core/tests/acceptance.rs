//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! status if any criterion fails. Criterion numbers given as arguments
//! restrict the run to those criteria.

use std::process::ExitCode;
use std::time::Instant;

use b2x_bootstrap::channel::{apply_cfo, awgn};
use b2x_bootstrap::dsp::argmax_abs;
use b2x_bootstrap::harness::{
    calibrate_false_alarm, csv_string, find_required_snr, run_fer_sweep, SignalPath,
    SimulationSpec, SyncMode,
};
use b2x_bootstrap::receiver::{
    default_threshold, delayed_correlate, scaled_frontend, Receiver, ReceiverConfig,
};
use b2x_bootstrap::sequences::{bits_from_index, bits_to_string, gen_pn, PnParams};
use b2x_bootstrap::waveform::{
    apply_phase_ramp, apply_signaling_shift, assemble_frame, ofdm_modulate, BootstrapConfig,
    BootstrapSynth, FrameLayout, MultiplexSynth, Variant, SUBCARRIER_SPACING,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);

const FRAMES: usize = 20_000;
const SEED: u64 = 2024;

fn desk_frame(
    synth: &BootstrapSynth,
    bits: &[bool],
    rng: &mut ChaCha8Rng,
) -> (usize, Vec<Complex64>) {
    let layout = FrameLayout::desk_scale(synth.config());
    let vfs = synth.build_vfs_pair(bits).unwrap().samples;
    let ss = synth.build_ss().unwrap().samples;
    let x = assemble_frame(&layout, &vfs, &[&ss], rng).unwrap();
    (layout.vfs_position(), x)
}

fn required(spec: SimulationSpec) -> Result<f64, String> {
    find_required_snr(&spec)
        .map(|r| r.required_snr.expect("search result").snr_db)
        .map_err(|e| e.to_string())
}

fn search(lo: f64, hi: f64) -> SimulationSpec {
    SimulationSpec {
        snr_lo: lo,
        snr_hi: hi,
        frames: FRAMES,
        seed: SEED,
        ..Default::default()
    }
}

/// Period of the register started from `seed`, by brute force over states.
fn pn_period(seed: u16) -> usize {
    let bits = gen_pn(PnParams::new(seed, 2 * 2047 + 11).unwrap())
        .unwrap()
        .bits;
    (1..=2047 + 1)
        .find(|&p| bits[p..p + 11] == bits[..11])
        .unwrap_or(0)
}

fn c1_sequences() -> Outcome {
    let first = gen_pn(PnParams::new(0x136, 11).unwrap()).unwrap().bits;
    let first: String = first.iter().map(|b| char::from(b'0' + b)).collect();
    let periods = [pn_period(0x100), pn_period(0x136)];
    (
        first == "01101100100" && periods == [2047, 2047],
        format!("first bits {first}, periods {periods:?}"),
    )
}

fn c2_structure() -> Outcome {
    let cfg = BootstrapConfig::normal();
    let synth = BootstrapSynth::new(cfg.clone()).unwrap();
    let mut r = synth
        .build_vfs_pair(&bits_from_index(0x9a, 8))
        .unwrap()
        .samples;
    r.resize(r.len() + 6144, Complex64::default());
    let out = delayed_correlate(&r, &cfg).unwrap();
    let (p1, m1) = argmax_abs(&out.add_1);
    let (p3, _) = argmax_abs(&out.add_3);
    let pc = (0..out.corr.len())
        .max_by(|&a, &b| out.corr[a].total_cmp(&out.corr[b]))
        .unwrap();
    let side = [out.add_1[2560].norm() / m1, out.add_1[9728].norm() / m1];
    let ok =
        p1 == 6144 && p3 == 4096 && pc == 6144 && side.iter().all(|s| (s - 0.5).abs() <= 0.025);
    (
        ok,
        format!(
            "add_1 peak {p1}, add_3 peak {p3}, corr peak {pc}, side ratios {:.4} {:.4}",
            side[0], side[1]
        ),
    )
}

fn c3_loopback() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut errors = 0usize;
    let mut frames = 0usize;
    for v in Variant::ALL {
        let cfg = BootstrapConfig::for_variant(v);
        let synth = BootstrapSynth::new(cfg.clone()).unwrap();
        let mut rx = Receiver::new(ReceiverConfig::new(cfg.clone())).unwrap();
        for p in 0..1usize << cfg.signaling_bits {
            let bits = bits_from_index(p, cfg.signaling_bits);
            let (start, x) = desk_frame(&synth, &bits, &mut rng);
            frames += 1;
            match rx.detect(&x).unwrap() {
                Some(d) if d.start == start && d.bits == bits => {}
                _ => errors += 1,
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (
        errors == 0 && secs < 60.0,
        format!("{frames} patterns, {errors} errors, {secs:.1} s"),
    )
}

fn c4_shift_equivalence() -> Outcome {
    let synth = BootstrapSynth::new(BootstrapConfig::normal()).unwrap();
    let t = synth.templates();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(0..2048);
        let time = apply_signaling_shift(&t.a1, m).unwrap();
        let mut s = t.s1.clone();
        apply_phase_ramp(&mut s.values, m);
        let freq = ofdm_modulate(&s);
        let e = time
            .iter()
            .zip(&freq)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(e);
    }
    (
        worst < 1e-9,
        format!("max abs error {worst:.3e} over 100 shifts"),
    )
}

fn c5_cfo() -> Outcome {
    let cfg = BootstrapConfig::normal();
    let fs = cfg.sample_rate();
    let synth = BootstrapSynth::new(cfg.clone()).unwrap();
    let mut rx = Receiver::new(ReceiverConfig::new(cfg)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let trials = 1000;
    let (mut worst_ifo, mut worst_rmse) = (1.0f64, 0.0f64);
    let mut worst_at = (0i64, 0.0);
    for l in (-67i64..=67).step_by(7) {
        for eps in [-0.4, 0.0, 0.4] {
            let f = (l as f64 + eps) * SUBCARRIER_SPACING;
            let (mut exact, mut sq) = (0usize, 0.0);
            for _ in 0..trials {
                let bits = bits_from_index(rng.random_range(0..256), 8);
                let (_, x) = desk_frame(&synth, &bits, &mut rng);
                let y = awgn(&apply_cfo(&x, f, fs), 10.0, 1.0, &mut rng);
                match rx.detect(&y).unwrap() {
                    Some(d) => {
                        exact += usize::from(d.ifo == l);
                        sq += (d.epsilon - eps).powi(2);
                    }
                    None => sq += 1.0,
                }
            }
            let rate = exact as f64 / trials as f64;
            let rmse = (sq / trials as f64).sqrt();
            if rate < worst_ifo || rmse > worst_rmse {
                worst_at = (l, eps);
            }
            worst_ifo = worst_ifo.min(rate);
            worst_rmse = worst_rmse.max(rmse);
        }
    }
    (
        worst_ifo >= 0.999 && worst_rmse < 0.02,
        format!(
            "worst IFO exact rate {worst_ifo:.4}, worst FFO RMSE {worst_rmse:.4} of spacing (last worst at l={}, eps={})",
            worst_at.0, worst_at.1
        ),
    )
}

fn c6_awgn(base: &Result<f64, String>) -> Outcome {
    match base {
        Ok(s) => (
            (s + 15.38).abs() <= 1.5,
            format!("required SNR {s:.2} dB vs -15.38 dB, {FRAMES} frames per point"),
        ),
        Err(e) => (false, e.clone()),
    }
}

fn c7_impairments(base: &Result<f64, String>) -> Outcome {
    let spec = SimulationSpec {
        cfo_hz: 200e3,
        sfo_ppm: 30.0,
        ..search(-20.0, 0.0)
    };
    match (base, required(spec)) {
        (Ok(b), Ok(s)) => (
            (s - b).abs() < 0.5,
            format!(
                "impaired {s:.2} dB vs clean {b:.2} dB, shift {:.2} dB",
                s - b
            ),
        ),
        (Err(e), _) => (false, e.clone()),
        (_, Err(e)) => (false, e),
    }
}

fn c8_gap() -> Outcome {
    let tu6 = |sync, lo, hi| SimulationSpec {
        profile: Some("tu6".into()),
        speed_kmh: Some(120.0),
        sync,
        ..search(lo, hi)
    };
    let perfect = required(tu6(SyncMode::Perfect, -25.0, 0.0));
    let practical = required(tu6(SyncMode::Practical, -15.0, 10.0));
    match (perfect, practical) {
        (Ok(p), Ok(q)) => (
            (q - p - 5.0).abs() <= 1.5,
            format!(
                "perfect {p:.2} dB, practical {q:.2} dB, gap {:.2} dB",
                q - p
            ),
        ),
        (Err(e), _) | (_, Err(e)) => (false, e),
    }
}

fn c9_delay_spread() -> Outcome {
    let mut snr = Vec::new();
    for ds in [50.0, 300.0, 800.0] {
        let spec = SimulationSpec {
            profile: Some("tdl-c".into()),
            rms_ds_ns: Some(ds),
            ..search(-15.0, 15.0)
        };
        match required(spec) {
            Ok(s) => snr.push(s),
            Err(e) => return (false, format!("{ds} ns: {e}")),
        }
    }
    (
        snr.windows(2).all(|w| w[1] <= w[0]),
        format!(
            "50/300/800 ns: {:.2} / {:.2} / {:.2} dB",
            snr[0], snr[1], snr[2]
        ),
    )
}

/// Lone normal part through the scaled front end against the direct path.
fn multiplex_matches_direct() -> Result<(), String> {
    let cfg = BootstrapConfig::normal();
    let mux = MultiplexSynth::new(std::slice::from_ref(&cfg), 4096).map_err(|e| e.to_string())?;
    let synth = BootstrapSynth::new(cfg.clone()).unwrap();
    let mut rx = Receiver::new(ReceiverConfig::new(cfg.clone())).unwrap();
    for (v, cfo) in [
        (0x00usize, 0.0),
        (0x5a, 900.0),
        (0xff, -4100.0),
        (0x81, 61_500.0),
    ] {
        let bits = bits_from_index(v, 8);
        let mut wide = vec![Complex64::default(); 10_000];
        wide.extend(
            mux.build_vfs_pair(std::slice::from_ref(&bits))
                .unwrap()
                .samples,
        );
        wide.resize(wide.len() + 4096, Complex64::default());
        let wide = apply_cfo(&wide, cfo, mux.sample_rate());
        let base = scaled_frontend(&wide, &cfg, 4096).unwrap();
        let via = rx.detect(&base).unwrap().ok_or("multiplex path missed")?;
        let mut direct = vec![Complex64::default(); 5000];
        direct.extend(synth.build_vfs_pair(&bits).unwrap().samples);
        direct.resize(base.len(), Complex64::default());
        let direct = apply_cfo(&direct, cfo, cfg.sample_rate());
        let d = rx.detect(&direct).unwrap().ok_or("direct path missed")?;
        if via.start != d.start || via.start != 5000 || (via.epsilon - d.epsilon).abs() > 1e-3 {
            return Err(format!(
                "pattern {v:#x} cfo {cfo} Hz: start {} vs {}, eps {:.5} vs {:.5}",
                via.start, d.start, via.epsilon, d.epsilon
            ));
        }
        if via.bits != bits {
            return Err(format!(
                "pattern {v:#x}: decoded {}",
                bits_to_string(&via.bits)
            ));
        }
    }
    Ok(())
}

fn c10_scalability() -> Outcome {
    let mut snr = Vec::new();
    for v in Variant::ALL {
        let spec = SimulationSpec {
            variant: v,
            path: SignalPath::Multiplex,
            ..search(-20.0, 10.0)
        };
        match required(spec) {
            Ok(s) => snr.push(s),
            Err(e) => return (false, format!("{v}: {e}")),
        }
    }
    let trend = snr.windows(2).all(|w| w[1] >= w[0]);
    let equiv = multiplex_matches_direct();
    let list: Vec<String> = snr.iter().map(|s| format!("{s:.2}")).collect();
    (
        trend && equiv.is_ok(),
        format!(
            "1499/839/467/241/127: {} dB; normal part equivalence: {}",
            list.join(" / "),
            equiv.err().unwrap_or_else(|| "ok".into())
        ),
    )
}

fn c11_false_alarm() -> Outcome {
    let thr = default_threshold(Variant::Normal);
    let cal = calibrate_false_alarm(
        Variant::Normal,
        SignalPath::Direct,
        10_000,
        &[10_000],
        &[1e-4],
        SEED,
        0,
    );
    match cal {
        Ok(cal) => {
            let (k, _, hi) = cal.false_alarms(0, thr);
            (
                hi <= 1e-4,
                format!(
                    "threshold {thr}: {k} alarms in {} trials, Wilson upper bound {hi:.3e}",
                    cal.trials
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn c12_slice_start() -> Outcome {
    let cfg = BootstrapConfig::normal();
    let synth = BootstrapSynth::new(cfg.clone()).unwrap();
    let vfs = synth
        .build_vfs_pair(&bits_from_index(0x3c, 8))
        .unwrap()
        .samples;
    let ss = synth.build_ss().unwrap().samples;
    let (lead, nominal) = (3000usize, 6144 + 2048);
    let mut rc = ReceiverConfig::new(cfg.clone());
    rc.ss_positions = vec![nominal];
    let mut rx = Receiver::new(rc).unwrap();
    let capture = |drift: i64| {
        let mut x = vec![Complex64::default(); lead];
        x.extend_from_slice(&vfs);
        x.resize(
            (lead as i64 + nominal as i64 + drift) as usize,
            Complex64::default(),
        );
        x.extend_from_slice(&ss);
        x.resize(x.len() + 500, Complex64::default());
        x
    };
    // (reported drift, slice start it implies relative to the true VFS start)
    let resync = |rx: &mut Receiver, x: &[Complex64]| {
        rx.detect(x)
            .unwrap()
            .and_then(|d| d.ss[0].map(|s| (s.drift, d.start as i64 - lead as i64 + s.drift)))
    };
    let wrong: Vec<i64> = (-64..=64)
        .filter(|&m| resync(&mut rx, &capture(m)).map(|r| r.0) != Some(m))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let trials = 1000;
    let (mut near, mut placed) = (0, 0);
    for _ in 0..trials {
        let m = rng.random_range(-64..=64);
        let y = awgn(&capture(m), 0.0, 1.0, &mut rng);
        if let Some((drift, at)) = resync(&mut rx, &y) {
            near += usize::from((drift - m).abs() <= 1);
            placed += usize::from((at - m).abs() <= 1);
        }
    }
    let rate = near as f64 / trials as f64;
    (
        wrong.is_empty() && rate >= 0.99,
        format!(
            "noiseless misses {wrong:?}; at 0 dB drift within 1 sample in {rate:.3} of {trials}, slice start within 1 sample in {:.3}",
            placed as f64 / trials as f64
        ),
    )
}

fn c13_determinism() -> Outcome {
    let mut spec = SimulationSpec {
        snr_db: vec![-11.0, -9.0, -7.0],
        frames: 1500,
        seed: SEED,
        profile: Some("tu6".into()),
        speed_kmh: Some(120.0),
        cfo_hz: 1234.0,
        sfo_ppm: 10.0,
        ..Default::default()
    };
    let mut csv = Vec::new();
    for w in [1, 4, 8] {
        spec.workers = w;
        csv.push(csv_string(&run_fer_sweep(&spec).unwrap()));
    }
    (
        csv[0] == csv[1] && csv[0] == csv[2],
        format!("{} byte CSV for 1/4/8 workers", csv[0].len()),
    )
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |i: usize| only.is_empty() || only.contains(&i);
    let base = if wanted(6) || wanted(7) {
        required(search(-20.0, 0.0))
    } else {
        Err("not run".into())
    };
    let criteria: Vec<Criterion> = vec![
        ("sequence ground truth", Box::new(c1_sequences)),
        ("structural identities", Box::new(c2_structure)),
        ("exhaustive noiseless loopback", Box::new(c3_loopback)),
        (
            "transform-shift equivalence",
            Box::new(c4_shift_equivalence),
        ),
        ("CFO estimation", Box::new(c5_cfo)),
        ("AWGN required SNR", Box::new(|| c6_awgn(&base))),
        ("impairment robustness", Box::new(|| c7_impairments(&base))),
        ("perfect-vs-practical gap", Box::new(c8_gap)),
        ("delay-spread trend", Box::new(c9_delay_spread)),
        ("scalability trend", Box::new(c10_scalability)),
        ("false alarm", Box::new(c11_false_alarm)),
        ("SS resynchronization", Box::new(c12_slice_start)),
        ("determinism", Box::new(c13_determinism)),
    ];
    let (mut failed, mut ran) = (0, 0);
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !wanted(i + 1) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let (ok, detail) = run();
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.0} s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
