mod common;

use common::{get_flat, max_gradient_error, random_instance, set_flat};
use mcdrop::nn::{Activation, LossKind, MaskSet, NetworkParams, NetworkSpec};
use mcdrop::rl::{td_loss_and_grad, Transition};
use mcdrop::RngStream;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backprop_matches_central_differences(seed in any::<u64>()) {
        let inst = random_instance(&mut RngStream::new(seed, 0));
        let err = max_gradient_error(&inst, 1e-5, 1e-3);
        prop_assert!(err < 1e-6, "relative error {err:e}");
    }

    #[test]
    fn zero_masks_cut_the_gradient_of_dropped_inputs(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1);
        let mut inst = random_instance(&mut rng);
        // drop every input unit of the first layer for every row
        let widths = inst.spec.layer_widths().to_vec();
        let rows = inst.x.rows();
        let layers: Vec<mcdrop::Matrix> = (0..inst.spec.num_layers())
            .map(|i| mcdrop::Matrix::filled(rows, widths[i], if i == 0 { 0.0 } else { 1.0 }))
            .collect();
        inst.masks = MaskSet::new(layers).unwrap();
        let lambda = inst.spec.weight_decay();
        let g = mcdrop::nn::objective_dropout_grad(&inst.spec, &inst.params, &inst.x, &inst.targets, &inst.masks)
            .unwrap()
            .gradient;
        // only the weight-decay term remains on the first weight matrix
        for (gv, pv) in g.weights[0].as_slice().iter().zip(inst.params.weights[0].as_slice()) {
            prop_assert!((gv - 2.0 * lambda * pv).abs() < 1e-12);
        }
    }
}

#[test]
fn td_gradient_matches_central_differences() {
    let mut rng = RngStream::new(9, 0);
    let spec = NetworkSpec::uniform(vec![27, 12, 12, 5], Activation::Relu, 0.9, LossKind::Euclidean, 1e-3).unwrap();
    let params = NetworkParams::init(&spec, &mut rng);
    let frozen = NetworkParams::init(&spec, &mut rng);
    let batch: Vec<Transition> = (0..6)
        .map(|_| Transition {
            obs: (0..27).map(|_| rng.uniform()).collect(),
            action: rng.below(5),
            reward: rng.normal(),
            next_obs: (0..27).map(|_| rng.uniform()).collect(),
        })
        .collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let masks = MaskSet::sample(&spec, refs.len(), &mut rng);
    let (_, grad) = td_loss_and_grad(&spec, &params, &frozen, &refs, 0.9, &masks).unwrap();
    let flat: Vec<f64> = grad.blocks().flatten().copied().collect();
    let mut probe = params.clone();
    let h = 1e-5;
    for (k, &a) in flat.iter().enumerate() {
        let orig = get_flat(&probe, k);
        set_flat(&mut probe, k, orig + h);
        let up = td_loss_and_grad(&spec, &probe, &frozen, &refs, 0.9, &masks).unwrap().0;
        set_flat(&mut probe, k, orig - h);
        let down = td_loss_and_grad(&spec, &probe, &frozen, &refs, 0.9, &masks).unwrap().0;
        set_flat(&mut probe, k, orig);
        let n = (up - down) / (2.0 * h);
        assert!((a - n).abs() / a.abs().max(n.abs()).max(1e-3) < 1e-6, "param {k}: {a} vs {n}");
    }
}
