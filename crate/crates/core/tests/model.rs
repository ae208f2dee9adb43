mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sagn_core::model::{
    attention_weights, integrate, BatchInput, LabelModel, LabelModelConfig, Sagn, SagnConfig, SleModel, Variant,
};
use sagn_core::nn::{export_state, import_state, EntryKind, Linear, Mode, Module};
use sagn_core::Tensor2;

fn config(variant: Variant, d: usize, h: usize, k: usize) -> SagnConfig {
    SagnConfig {
        in_dim: d,
        hidden_dim: h,
        num_classes: 3,
        num_hops: k,
        encoder_layers: 2,
        post_layers: 2,
        use_batchnorm: true,
        dropout: 0.5,
        input_dropout: 0.2,
        attn_dropout: 0.4,
        leaky_slope: 0.2,
        variant,
    }
}

fn batch(r: &mut impl Rng, b: usize, cfg: &SagnConfig) -> BatchInput<f64> {
    let hops = (0..=cfg.num_hops).map(|_| random_matrix(r, b, cfg.in_dim)).collect();
    BatchInput::new(hops, (0..b).collect()).unwrap()
}

#[test]
fn concatenated_linear_equals_sum_of_sliced_linears() {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let k = r.random_range(0..=5);
        let d = r.random_range(1..=64);
        let h = r.random_range(1..=16);
        let b = r.random_range(1..8);
        let blocks: Vec<Tensor2<f64>> = (0..=k).map(|_| random_matrix(&mut r, b, d)).collect();
        let w = random_matrix(&mut r, (k + 1) * d, h);
        let lin = Linear::from_weights("w", w.clone(), None);
        let joint = lin.apply(&Tensor2::hcat(&blocks).unwrap()).unwrap();
        let mut summed = Tensor2::<f64>::zeros(b, h);
        for (i, x) in blocks.iter().enumerate() {
            let slice: Vec<f64> = w.data()[i * d * h..(i + 1) * d * h].to_vec();
            let wi = Tensor2::from_vec(d, h, slice).unwrap();
            summed.add_assign(&x.matmul(&wi).unwrap()).unwrap();
        }
        worst = worst.max(joint.max_abs_diff(&summed).unwrap());
    }
    assert!(worst < 1e-6, "max deviation {worst}");
}

#[test]
fn concat_variant_feeds_concatenated_encodings_to_post() {
    let mut r = rng(2);
    let cfg = config(Variant::Concat, 6, 5, 3);
    let mut m = Sagn::<f64>::new(cfg, &mut r).unwrap();
    let x = batch(&mut r, 4, &cfg);
    let out = m.forward(&x, Mode::Eval, &mut rng(0)).unwrap();
    let mut encoded = Vec::new();
    for (enc, h) in m.clone().encoders_mut().iter_mut().zip(&x.hops) {
        encoded.push(enc.forward(h, Mode::Eval, &mut rng(0)).unwrap());
    }
    let manual = m.post_mut().forward(&Tensor2::hcat(&encoded).unwrap(), Mode::Eval, &mut rng(0)).unwrap();
    assert_eq!(out, manual);
}

#[test]
fn zero_attention_vector_gives_exact_uniform_weights() {
    let mut r = rng(3);
    for k in 0..6 {
        let h: Vec<Tensor2<f64>> = (0..=k).map(|_| random_matrix(&mut r, 5, 4)).collect();
        let theta = attention_weights(&h, &[0.0; 8], 0.2).unwrap();
        for v in theta.data() {
            assert_eq!(*v, 1.0 / (k + 1) as f64);
        }
    }
}

#[test]
fn uniform_variant_matches_zeroed_attention_bit_for_bit() {
    for seed in 0..5 {
        let cfg = config(Variant::Attention, 7, 6, 3);
        let mut att = Sagn::<f32>::new(cfg, &mut rng(seed)).unwrap();
        let mut uni = Sagn::<f32>::new(SagnConfig { variant: Variant::Uniform, ..cfg }, &mut rng(seed)).unwrap();
        att.attention_vector_mut().unwrap().value.fill(0.0);
        let mut r = rng(100 + seed);
        let hops = (0..=3).map(|_| random_matrix(&mut r, 9, 7).cast::<f32>()).collect();
        let x = BatchInput::new(hops, (0..9).collect()).unwrap();
        let a = att.forward(&x, Mode::Eval, &mut rng(0)).unwrap();
        let u = uni.forward(&x, Mode::Eval, &mut rng(0)).unwrap();
        assert_eq!(a.data(), u.data());
    }
}

#[test]
fn shared_initialisation_across_variants() {
    let cfg = config(Variant::Attention, 5, 4, 2);
    let att = Sagn::<f64>::new(cfg, &mut rng(9)).unwrap();
    let uni = Sagn::<f64>::new(SagnConfig { variant: Variant::ExpDecay { ratio: 0.5 }, ..cfg }, &mut rng(9)).unwrap();
    let a = export_state(&att);
    let u = export_state(&uni);
    for e in &u {
        let twin = a.iter().find(|x| x.name == e.name).unwrap();
        assert_eq!(twin.value, e.value, "{}", e.name);
    }
    assert_eq!(a.len(), u.len() + 1);
}

#[test]
fn fixed_variants_and_integration() {
    let h = vec![
        Tensor2::<f64>::from_rows(&[&[1.0, 0.0]]),
        Tensor2::<f64>::from_rows(&[&[0.0, 1.0]]),
        Tensor2::<f64>::from_rows(&[&[2.0, 2.0]]),
    ];
    let w = sagn_core::model::fixed_hop_weights::<f64>(&Variant::ExpDecay { ratio: 0.5 }, 1, 2).unwrap();
    assert!((w.get(0, 0) - 4.0 / 7.0).abs() < 1e-15);
    assert!((w.get(0, 2) - 1.0 / 7.0).abs() < 1e-15);
    let z = integrate(&h, &w).unwrap();
    assert!((z.get(0, 0) - 6.0 / 7.0).abs() < 1e-15);
    assert!((z.get(0, 1) - 4.0 / 7.0).abs() < 1e-15);
}

#[test]
fn invalid_variants_are_rejected() {
    let cfg = config(Variant::MlpOnly { hop: 4 }, 5, 4, 3);
    assert!(Sagn::<f32>::new(cfg, &mut rng(0)).is_err());
    let cfg = config(Variant::ExpDecay { ratio: -1.0 }, 5, 4, 3);
    assert!(Sagn::<f32>::new(cfg, &mut rng(0)).is_err());
    let cfg = config(Variant::Concat, 5, 4, 3);
    let mut m = Sagn::<f32>::new(cfg, &mut rng(0)).unwrap();
    let x = BatchInput::new(vec![Tensor2::zeros(2, 5); 4], vec![0, 1]).unwrap();
    assert!(m.hop_attention(&x, &mut rng(0)).is_err());
    let short = BatchInput::new(vec![Tensor2::zeros(2, 5); 2], vec![0, 1]).unwrap();
    assert!(m.forward(&short, Mode::Eval, &mut rng(0)).is_err());
    assert!(m.backward(&Tensor2::zeros(2, 3)).is_err());
}

fn enumerated_params<M: Module<f32>>(m: &M) -> usize {
    export_state(m)
        .iter()
        .filter(|e| e.kind == EntryKind::Param)
        .map(|e| e.value.data().len())
        .sum()
}

#[test]
fn attention_uses_fewer_parameters_than_concat() {
    // typical product-graph and desk-scale shapes
    for &(d, h, k) in &[(100, 512, 3), (128, 256, 5), (16, 32, 3), (32, 64, 3), (50, 64, 9), (602, 512, 4)] {
        let att = Sagn::<f32>::new(config(Variant::Attention, d, h, k), &mut rng(0)).unwrap();
        let cat = Sagn::<f32>::new(config(Variant::Concat, d, h, k), &mut rng(0)).unwrap();
        assert!(att.param_count() < cat.param_count(), "d={d} h={h} k={k}");
    }
}

#[test]
fn parameter_gap_follows_closed_form() {
    // Concat widens the post encoder's first layer by K*h*h; attention adds
    // the residual d*h and the 2h attention vector instead.
    for d in [1, 8, 40] {
        for h in [1, 4, 8, 32] {
            for k in 0..5 {
                let att = Sagn::<f32>::new(config(Variant::Attention, d, h, k), &mut rng(0)).unwrap();
                let cat = Sagn::<f32>::new(config(Variant::Concat, d, h, k), &mut rng(0)).unwrap();
                for m in [&att, &cat] {
                    assert_eq!(m.param_count(), enumerated_params(m));
                }
                let gap = cat.param_count() as i64 - att.param_count() as i64;
                assert_eq!(gap, (k * h * h) as i64 - (d * h + 2 * h) as i64, "d={d} h={h} k={k}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn attention_rows_sum_to_one(seed in any::<u64>(), k in 0usize..6, scale in 0.1f64..50.0) {
        let mut r = rng(seed);
        let h: Vec<Tensor2<f64>> = (0..=k).map(|_| random_matrix(&mut r, 6, 4).map(|v| v * scale)).collect();
        let a = random_matrix(&mut r, 8, 1).map(|v| v * scale);
        let theta = attention_weights(&h, a.data(), 0.2).unwrap();
        for i in 0..6 {
            let s: f64 = theta.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
            prop_assert!(theta.row(i).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn param_count_matches_enumeration(
        seed in any::<u64>(),
        d in 1usize..20,
        h in 1usize..20,
        k in 0usize..5,
        v in 0usize..5,
        bn in any::<bool>(),
        label in any::<bool>(),
    ) {
        let variant = [Variant::Attention, Variant::Uniform, Variant::ExpDecay { ratio: 0.7 }, Variant::Concat, Variant::MlpOnly { hop: k }][v];
        let cfg = SagnConfig { use_batchnorm: bn, ..config(variant, d, h, k) };
        let mut r = rng(seed);
        let base = Sagn::<f32>::new(cfg, &mut r).unwrap();
        let lm = label.then(|| LabelModel::new(LabelModelConfig::for_base(3, h, 2, bn, 0.1), &mut r).unwrap());
        let m = SleModel::new(base, lm);
        prop_assert_eq!(m.param_count(), enumerated_params(&m));
        let total: usize = m.param_breakdown().iter().map(|(_, n)| n).sum();
        prop_assert_eq!(total, m.param_count());
        let mut names: Vec<String> = export_state(&m).into_iter().map(|e| e.name).collect();
        let len = names.len();
        names.sort();
        names.dedup();
        prop_assert_eq!(names.len(), len);
    }

    #[test]
    fn label_model_is_row_permutation_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut lm = LabelModel::<f64>::new(LabelModelConfig::for_base(4, 6, 1, true, 0.3), &mut r).unwrap();
        let x = random_matrix(&mut r, 5, 4);
        let perm = [3usize, 0, 4, 1, 2];
        let out = lm.forward(&x, Mode::Eval, &mut rng(0)).unwrap();
        let out_p = lm.forward(&x.gather_rows(&perm), Mode::Eval, &mut rng(0)).unwrap();
        prop_assert_eq!(out.gather_rows(&perm), out_p);
    }
}

#[test]
fn label_model_trivial_cases() {
    let mut lm = LabelModel::<f64>::new(LabelModelConfig::for_base(3, 4, 1, false, 0.0), &mut rng(0)).unwrap();
    lm.for_each_param_mut(&mut |p| p.value.fill(0.0));
    let y = random_matrix(&mut rng(1), 4, 3);
    assert_eq!(lm.forward(&Tensor2::zeros(4, 3), Mode::Eval, &mut rng(0)).unwrap(), Tensor2::zeros(4, 3));

    let mut single = LabelModel::<f64>::new(
        LabelModelConfig { num_classes: 3, hidden_dim: 4, num_layers: 1, use_batchnorm: false, dropout: 0.0 },
        &mut rng(0),
    )
    .unwrap();
    single.for_each_param_mut(&mut |p| {
        if p.name.ends_with("weight") {
            p.value = Tensor2::identity(3);
        } else {
            p.value.fill(0.0);
        }
    });
    assert_eq!(single.forward(&y, Mode::Eval, &mut rng(0)).unwrap(), y);
    assert!(single.forward(&Tensor2::zeros(2, 5), Mode::Eval, &mut rng(0)).is_err());
}

#[test]
fn state_round_trip_restores_outputs() {
    let cfg = config(Variant::Attention, 5, 4, 2);
    let mut a = Sagn::<f32>::new(cfg, &mut rng(1)).unwrap();
    let mut b = Sagn::<f32>::new(cfg, &mut rng(2)).unwrap();
    let mut r = rng(3);
    let x = BatchInput::new((0..3).map(|_| random_matrix(&mut r, 4, 5).cast()).collect(), (0..4).collect()).unwrap();
    a.forward(&x, Mode::Train, &mut rng(0)).unwrap();
    import_state(&mut b, &export_state(&a)).unwrap();
    assert_eq!(a.forward(&x, Mode::Eval, &mut rng(0)).unwrap(), b.forward(&x, Mode::Eval, &mut rng(0)).unwrap());
    let other = Sagn::<f32>::new(SagnConfig { hidden_dim: 7, ..cfg }, &mut rng(1)).unwrap();
    assert!(import_state(&mut b, &export_state(&other)).is_err());
}
