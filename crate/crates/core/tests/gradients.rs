use mcopt_core::mlp::{mlp_forward, softmax};
use mcopt_core::{
    make_synthetic, mlp_backward, toy_gradient, toy_objective, Activation, InitScheme, MlpSpec,
    ParameterTensor, ToyPoint,
};
use mcopt_oracles::{finite_diff, max_rel_diff, newton_stationary, DiffConfig};
use proptest::prelude::*;

fn toy_f(x: &[f64]) -> f64 {
    toy_objective(ToyPoint::new(x[0], x[1]))
}

fn toy_g(x: &[f64]) -> Vec<f64> {
    let (gx, gy) = toy_gradient(ToyPoint::new(x[0], x[1]));
    vec![gx, gy]
}

fn loss_at(
    spec: &MlpSpec,
    template: &[ParameterTensor],
    batch: &mcopt_core::Dataset,
    flat: &[f64],
) -> f64 {
    let mut params = template.to_vec();
    let mut at = 0;
    for p in params.iter_mut() {
        let n = p.len();
        p.values.copy_from_slice(&flat[at..at + n]);
        at += n;
    }
    mlp_forward(spec, &params, batch).unwrap().loss
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn backprop_matches_finite_differences(seed in any::<u64>(), tanh in any::<bool>()) {
        let activation = if tanh { Activation::Tanh } else { Activation::Relu };
        let data = make_synthetic(3, 6, 0.5, seed).unwrap();
        let batch = data.subset(&(0..16).collect::<Vec<_>>());
        let spec = MlpSpec::new(vec![2, 8, 3], activation, seed).unwrap();
        let params = spec.init_params(InitScheme::ScaledNormal).unwrap();
        let (loss, grads) = mlp_backward(&spec, &params, &batch).unwrap();
        let flat: Vec<f64> = params.iter().flat_map(|p| p.values.clone()).collect();
        prop_assert_eq!(loss, loss_at(&spec, &params, &batch, &flat));
        let numeric = finite_diff(|x| loss_at(&spec, &params, &batch, x), &flat, DiffConfig::default()).unwrap();
        prop_assert!(max_rel_diff(&grads.concat(), &numeric, 1e-6) <= 1e-4);
    }

    #[test]
    fn toy_gradient_matches_finite_differences(x in -4.0..4.0f64, y in -4.0..4.0f64) {
        let numeric = finite_diff(toy_f, &[x, y], DiffConfig::default()).unwrap();
        prop_assert!(max_rel_diff(&toy_g(&[x, y]), &numeric, 1e-3) <= 1e-6);
    }

    #[test]
    fn toy_objective_is_symmetric_in_y(x in -5.0..5.0f64, y in -5.0..5.0f64) {
        prop_assert_eq!(toy_objective(ToyPoint::new(x, y)), toy_objective(ToyPoint::new(x, -y)));
    }

    #[test]
    fn softmax_sums_to_one(logits in prop::collection::vec(-50.0..50.0f64, 2..10)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&q| q >= 0.0));
    }
}

#[test]
fn newton_finds_single_stationary_point() {
    // the quadratic bowl merges the two wells into one minimum left of the origin
    let mut found = Vec::new();
    for sx in [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5] {
        for sy in [-0.5, 0.0, 0.5] {
            if let Ok(p) = newton_stationary(toy_g, [sx, sy], 1e-12, 100) {
                let g = toy_g(&p);
                assert!(g[0].hypot(g[1]) <= 1e-10, "gradient {g:?} at {p:?}");
                found.push(p);
            }
        }
    }
    assert!(found.len() >= 6);
    for p in &found {
        assert!(
            (p[0] + 0.27150).abs() < 1e-4 && p[1].abs() < 1e-8,
            "stationary point {p:?}"
        );
    }
}

#[test]
fn finite_difference_error_is_second_order() {
    for point in [[0.5, 0.3], [-1.2, 0.8], [1.7, -0.4]] {
        let exact = toy_g(&point);
        let error = |h: f64| {
            let fd = finite_diff(toy_f, &point, DiffConfig::absolute(h)).unwrap();
            fd.iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = error(1e-4) / error(5e-5);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} at {point:?}");
    }
}

#[test]
fn loss_is_zero_only_for_certain_predictions() {
    let data = make_synthetic(2, 5, 0.1, 3).unwrap();
    let spec = MlpSpec::new(vec![2, 2], Activation::Relu, 0).unwrap();
    let mut params = spec.init_params(InitScheme::ScaledNormal).unwrap();
    let out = mlp_forward(&spec, &params, &data).unwrap();
    assert!(out.loss > 0.0);
    // with zero weights and biases favouring no class the loss is n * ln 2
    params[0].values.fill(0.0);
    params[1].values.fill(0.0);
    let flat = mlp_forward(&spec, &params, &data).unwrap();
    assert!((flat.loss - data.len() as f64 * 2f64.ln()).abs() < 1e-12);
}
