use seqbin_core::decoder::{run, run_with_metric, DecoderConfig};
use seqbin_core::oracle::best_path_exhaustive;
use seqbin_core::rng::{code_seed, stream, DOMAIN_CHANNEL, DOMAIN_SOURCE};
use seqbin_core::sim::{simulate, CodeSpec, SimConfig};
use seqbin_core::{
    branch_metric_si, BranchMetric, Caps, Channel, DecodeStatus, JointSource, Rate, StepInput,
    TreeCode,
};

fn draw(source: &JointSource, n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream(seed, DOMAIN_SOURCE, 0);
    (0..n).map(|_| source.sample_pair(&mut rng)).unzip()
}

fn inputs(code: &TreeCode, u: &[usize], v: &[usize]) -> Vec<StepInput> {
    let mut key = code.root();
    u.iter()
        .zip(v)
        .map(|(&s, &side_info)| {
            key = code.child(&key, s);
            StepInput::Si {
                side_info,
                bits: code.bits(&key).unwrap(),
            }
        })
        .collect()
}

/// Flips the sign of the source term.
struct SignBug;

impl BranchMetric for SignBug {
    fn si(&self, u: usize, v: usize, source: &JointSource, bias: f64) -> f64 {
        bias - source.log2_conditional(u, v).max(-60.0)
    }

    fn jsc(
        &self,
        _: usize,
        _: usize,
        _: &[usize],
        _: &[usize],
        _: &JointSource,
        _: &Channel,
        _: f64,
    ) -> f64 {
        unimplemented!()
    }
}

#[test]
fn decoder_agrees_with_exhaustive_search() {
    let s = JointSource::binary_symmetric(0.1).unwrap();
    for seed in 0..200 {
        let (u, v) = draw(&s, 12, seed);
        let code = TreeCode::si(code_seed(seed, 0), Rate::new(1, 1).unwrap(), 2);
        let r = run(
            &s,
            &code,
            None,
            &u,
            &v,
            &DecoderConfig::new(0.0),
            &mut stream(0, 0, 0),
        )
        .unwrap();
        let best = best_path_exhaustive(&s, None, &code, &inputs(&code, &u, &v), 0.0)
            .unwrap()
            .unwrap();
        assert_eq!(r.estimates.estimate(12), best.path, "seed {seed}");
    }
}

#[test]
fn sign_bug_is_caught_by_exhaustive_search() {
    let s = JointSource::binary_symmetric(0.1).unwrap();
    let mismatches = (0..50)
        .filter(|&seed| {
            let (u, v) = draw(&s, 12, seed);
            let code = TreeCode::si(code_seed(seed, 0), Rate::new(1, 1).unwrap(), 2);
            let cfg = DecoderConfig::new(0.0).with_caps(Caps {
                max_pops_per_step: 10_000,
                max_stack: 100_000,
            });
            let r = run_with_metric(&s, &code, None, &u, &v, &cfg, &mut stream(0, 0, 0), SignBug)
                .unwrap();
            let best = best_path_exhaustive(&s, None, &code, &inputs(&code, &u, &v), 0.0)
                .unwrap()
                .unwrap();
            r.status != DecodeStatus::Completed || r.estimates.estimate(12) != best.path
        })
        .count();
    assert!(mismatches > 0);
}

#[test]
fn noiseless_channel_adds_one_bit_per_step() {
    let s = JointSource::binary_symmetric(0.1).unwrap();
    let ch = Channel::noiseless(2).unwrap();
    let code = TreeCode::jsc(code_seed(3, 0), 1, &ch, 2);
    let (u, v) = draw(&s, 500, 3);
    let bias = 0.7;
    let r = run(
        &s,
        &code,
        Some(&ch),
        &u,
        &v,
        &DecoderConfig::new(bias),
        &mut stream(3, DOMAIN_CHANNEL, 0),
    )
    .unwrap();
    assert_eq!(r.status, DecodeStatus::Completed);
    for m in 1..=r.estimates.len() {
        let path = r.estimates.estimate(m);
        let si: f64 = path
            .iter()
            .zip(&v)
            .map(|(&a, &b)| branch_metric_si(a, b, &s, bias))
            .sum();
        let channel_term = r.estimates.metric(m) - si;
        assert!(
            (channel_term - m as f64).abs() < 1e-9,
            "m={m}: {channel_term}"
        );
    }
}

#[test]
fn simulation_is_reproducible() {
    let cfg = SimConfig {
        source: JointSource::binary_symmetric(0.1).unwrap(),
        code: CodeSpec::Si {
            rate: Rate::from_f64(0.7).unwrap(),
        },
        bias: 0.7,
        caps: Caps::default(),
        trials: 6,
        stream_len: 2000,
        delays: (1..=30).collect(),
        master_seed: 17,
        code_count: 3,
        delay_window: (8, 30),
        comp_window: (8, 1 << 14),
    };
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let other = simulate(&SimConfig {
        master_seed: 18,
        ..cfg
    })
    .unwrap();
    assert_ne!(a.pe_curve, other.pe_curve);
}

#[test]
fn jsc_simulation_over_bsc_runs() {
    let cfg = SimConfig {
        source: JointSource::binary_symmetric(0.1).unwrap(),
        code: CodeSpec::Jsc {
            channel: Channel::bsc(0.02).unwrap(),
            lambda: 1,
        },
        bias: 0.5,
        caps: Caps::default(),
        trials: 4,
        stream_len: 1000,
        delays: vec![1, 5, 10, 20],
        master_seed: 5,
        code_count: 4,
        delay_window: (1, 20),
        comp_window: (1, 1 << 14),
    };
    let r = simulate(&cfg).unwrap();
    assert_eq!(r.cap_abort_count, 0);
    let first = r.pe_curve[0].pe.unwrap();
    let last = r.pe_curve[3].pe.unwrap();
    assert!(last <= first);
}
