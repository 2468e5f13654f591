use super::*;
use crate::autodiff::OpKind;

fn tiny(vocab: usize) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab,
        embed_dim: 3,
        lstm_hidden: 2,
        dialog_hidden: 3,
        dropout: 0.0,
        n_sentiment: 3,
        n_da: 15,
    }
}

fn zeroed(mut m: HierarchicalModel) -> HierarchicalModel {
    for p in m.params.iter_mut() {
        p.value.fill(0.0);
    }
    m
}

#[test]
fn parameter_count_matches_formula() {
    for cfg in [tiny(7), ModelConfig::new(5331), ModelConfig::with_dims(10, 4, 0.4)] {
        let m = HierarchicalModel::new(cfg.clone(), 1).unwrap();
        assert_eq!(m.parameter_count(), cfg.parameter_count());
    }
    // 100-dim model over a 5331-entry vocabulary
    let c = ModelConfig::new(5331);
    let expected = 5331 * 100 + 2 * 400 * 201 + 100 * 301 + (100 * 101 + 3 * 101) + (100 * 101 + 15 * 101);
    assert_eq!(c.parameter_count(), expected);
}

#[test]
fn initialization_follows_conventions() {
    let m = HierarchicalModel::new(ModelConfig::with_dims(20, 4, 0.0), 9).unwrap();
    let b = m.params.get(m.ids.post_fwd.b).value.data();
    assert_eq!(&b[..4], &[0.0; 4]);
    assert_eq!(&b[4..8], &[1.0; 4]);
    assert_eq!(&b[8..], &[0.0; 8]);
    let w = m.params.get(m.ids.dialog_w_h).value.data();
    let limit = (6.0f64 / 8.0).sqrt();
    assert!(w.iter().all(|x| x.abs() <= limit));
    assert!(w.iter().any(|&x| x != 0.0));
    assert_eq!(m, HierarchicalModel::new(ModelConfig::with_dims(20, 4, 0.0), 9).unwrap());
}

#[test]
fn zero_weights_give_zero_post_vector_and_uniform_outputs() {
    let m = zeroed(HierarchicalModel::new(tiny(6), 3).unwrap());
    let mut g = Graph::new(&m.params);
    let v = m.encode_post(&mut g, &[1, 2, 3]).unwrap();
    assert_eq!(g.shape(v), &[1, 4]);
    assert!(g.value(v).iter().all(|&x| x == 0.0));

    let posts = vec![vec![1], vec![2, 3]];
    let out = m.forward(&mut g, &posts, Mode::Inference).unwrap();
    let ls = g.cross_entropy_rows(out.sentiment, &[Some(0), Some(2)]).unwrap();
    let ld = g.cross_entropy_rows(out.dialog_act, &[Some(4), Some(14)]).unwrap();
    assert!((g.scalar(ls) - 2.0 * 3f64.ln()).abs() < 1e-12);
    assert!((g.scalar(ld) - 2.0 * 15f64.ln()).abs() < 1e-12);
}

#[test]
fn output_shapes() {
    let m = HierarchicalModel::new(tiny(9), 3).unwrap();
    let mut g = Graph::new(&m.params);
    let posts: Vec<Vec<usize>> = (1..=5).map(|n| (0..n).collect()).collect();
    let out = m.forward(&mut g, &posts, Mode::Inference).unwrap();
    assert_eq!(g.shape(out.sentiment), &[5, 3]);
    assert_eq!(g.shape(out.dialog_act), &[5, 15]);
    let single = m.encode_post(&mut g, &[4]).unwrap();
    assert_eq!(g.shape(single), &[1, 4]);
}

#[test]
fn empty_inputs_rejected() {
    let m = HierarchicalModel::new(tiny(4), 3).unwrap();
    let mut g = Graph::new(&m.params);
    assert!(m.encode_post(&mut g, &[]).is_err());
    assert!(m.forward(&mut g, &[], Mode::Inference).is_err());
    assert!(m.encode_post(&mut g, &[4]).is_err());
}

#[test]
fn reversing_post_and_swapping_directions_swaps_halves() {
    let mut m = HierarchicalModel::new(tiny(8), 21).unwrap();
    let tokens = [1usize, 5, 2, 7];
    let reversed: Vec<usize> = tokens.iter().rev().copied().collect();
    let original = {
        let mut g = Graph::new(&m.params);
        let v = m.encode_post(&mut g, &tokens).unwrap();
        g.value(v).to_vec()
    };
    let (f, b) = (m.ids.post_fwd, m.ids.post_bwd);
    for (x, y) in [(f.w_x, b.w_x), (f.w_h, b.w_h), (f.b, b.b)] {
        let vx = m.params.get(x).value.clone();
        let vy = m.params.get(y).value.clone();
        m.params.get_mut(x).value = vy;
        m.params.get_mut(y).value = vx;
    }
    let swapped = {
        let mut g = Graph::new(&m.params);
        let v = m.encode_post(&mut g, &reversed).unwrap();
        g.value(v).to_vec()
    };
    assert_eq!(&swapped[..2], &original[2..]);
    assert_eq!(&swapped[2..], &original[..2]);
}

#[test]
fn dialog_rnn_single_step_by_hand() {
    let m = HierarchicalModel::new(tiny(4), 5).unwrap();
    let mut g = Graph::new(&m.params);
    let x = [0.3, -0.2, 0.9, 0.1];
    let input = g.input(Tensor::matrix(1, 4, x.to_vec()).unwrap());
    let states = m.encode_dialog(&mut g, input).unwrap();
    let wx = m.params.get(m.ids.dialog_w_x).value.clone();
    let b = m.params.get(m.ids.dialog_b).value.clone();
    for j in 0..3 {
        let pre: f64 = (0..4).map(|i| x[i] * wx.get(i, j)).sum::<f64>() + b.data()[j];
        assert!((g.value(states)[j] - pre.tanh()).abs() < 1e-15);
    }
}

#[test]
fn dialog_level_is_causal() {
    let m = HierarchicalModel::new(tiny(10), 8).unwrap();
    let mut posts = vec![vec![1, 2], vec![3], vec![4, 5, 6], vec![7]];
    let before = m.logits(&posts).unwrap();
    posts[2] = vec![9, 9, 9, 9];
    posts[3] = vec![8];
    let after = m.logits(&posts).unwrap();
    assert_eq!(before[..2], after[..2]);
    assert_ne!(before[2], after[2]);
}

#[test]
fn inference_is_bit_deterministic() {
    let m = HierarchicalModel::new(ModelConfig::with_dims(30, 8, 0.4), 2).unwrap();
    let posts = vec![vec![1, 2, 3], vec![4, 5], vec![29]];
    let a = m.logits(&posts).unwrap();
    let b = m.logits(&posts).unwrap();
    let bits = |v: &Vec<(Vec<f64>, Vec<f64>)>| -> Vec<u64> {
        v.iter().flat_map(|(s, d)| s.iter().chain(d)).map(|x| x.to_bits()).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn training_mode_applies_dropout() {
    let m = HierarchicalModel::new(ModelConfig::with_dims(30, 8, 0.4), 2).unwrap();
    let posts = vec![vec![1, 2, 3], vec![4, 5]];
    let inference = m.logits(&posts).unwrap();
    let mut rng = crate::rng::seeded(0);
    let mut g = Graph::new(&m.params);
    let out = m.forward(&mut g, &posts, Mode::Train(&mut rng)).unwrap();
    assert_ne!(g.value(out.sentiment)[..3], inference[0].0[..]);
}

#[test]
fn full_model_gradient_check() {
    let report = model_grad_check(1e-3, None).unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");
    assert_eq!(report.coordinates, tiny(5).parameter_count());
}

#[test]
fn full_model_check_catches_a_wrong_lstm_gradient() {
    let report = model_grad_check(1e-3, Some(OpKind::Sigmoid)).unwrap();
    assert!(report.max_rel_error > 1e-2, "{report:?}");
}

#[test]
fn argmax_rules() {
    assert_eq!(argmax(&[0.0, 1.0, 0.0]), 1);
    assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
    assert_eq!(argmax(&[2.0, 5.0, 5.0]), 1);
    let shifted: Vec<f64> = [0.2, -1.0, 0.7].iter().map(|x| x + 100.0).collect();
    assert_eq!(argmax(&shifted), argmax(&[0.2, -1.0, 0.7]));
}

#[test]
fn config_key_values_round_trip() {
    let c = ModelConfig::with_dims(42, 7, 0.25);
    assert_eq!(ModelConfig::from_key_values(&c.to_key_values()).unwrap(), c);
    assert!(ModelConfig::from_key_values("vocab_size=1\n").is_err());
}
