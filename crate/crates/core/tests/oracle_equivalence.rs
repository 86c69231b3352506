use mcopt_core::{
    Centralization, Optimizer, OptimizerConfig, ParameterTensor, RectifierScale, Variant,
};
use mcopt_oracles::{
    max_abs_diff, reference_step, RefCentralization, RefHyper, RefTensor, RefVariant,
};
use proptest::prelude::*;

fn ref_variant(v: Variant) -> RefVariant {
    match v {
        Variant::Sgd => RefVariant::Sgd,
        Variant::Sgdm => RefVariant::Sgdm,
        Variant::Adam => RefVariant::Adam,
        Variant::RAdam => RefVariant::RAdam,
        Variant::AdaBelief => RefVariant::AdaBelief,
    }
}

fn ref_centralization(c: Centralization) -> RefCentralization {
    match c {
        Centralization::None => RefCentralization::None,
        Centralization::Gradient => RefCentralization::Gradient,
        Centralization::Moment => RefCentralization::Moment,
    }
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn centralization() -> impl Strategy<Value = Centralization> {
    prop::sample::select(vec![
        Centralization::None,
        Centralization::Gradient,
        Centralization::Moment,
    ])
}

/// Shape with at most 16 elements, rank 1 or 2.
fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        (1usize..=16).prop_map(|n| vec![n]),
        (1usize..=4, 1usize..=4).prop_map(|(r, c)| vec![r, c]),
    ]
}

/// Shape, initial values and one gradient per step.
type Case = (Vec<usize>, Vec<f64>, Vec<Vec<f64>>);

fn instance() -> impl Strategy<Value = Vec<Case>> {
    (1usize..=20).prop_flat_map(|steps| {
        prop::collection::vec(
            shape().prop_flat_map(move |s| {
                let n = s.iter().product::<usize>();
                (
                    Just(s),
                    prop::collection::vec(-2.0..2.0f64, n),
                    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, n), steps),
                )
            }),
            1..=3,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn step_matches_scalar_reference(
        variant in variant(),
        centr in centralization(),
        tensors in instance(),
        alpha in 1e-4..0.1f64,
        beta1 in 0.0..0.95f64,
        beta2 in 0.9..0.9999f64,
        momentum in 0.0..0.95f64,
        mc_min in 1usize..4,
        constant in any::<bool>(),
    ) {
        let scale = if constant { RectifierScale::Constant } else { RectifierScale::StepPower };
        let cfg = OptimizerConfig::new(variant)
            .with_centralization(centr)
            .with_lr(alpha)
            .with_betas(beta1, beta2)
            .with_momentum(momentum)
            .with_mc_min_elements(mc_min)
            .with_rectifier_scale(scale);
        let hyper = RefHyper {
            alpha,
            beta1,
            beta2,
            eps: cfg.epsilon,
            momentum,
            mc_min_elements: mc_min,
            gc_min_rank: cfg.gc_min_rank,
            constant_rectifier: constant,
        };
        let mut params: Vec<ParameterTensor> = tensors
            .iter()
            .enumerate()
            .map(|(i, (s, v, _))| ParameterTensor::new(format!("t{i}"), s, v.clone()).unwrap())
            .collect();
        let mut refs: Vec<RefTensor> = tensors
            .iter()
            .map(|(s, v, _)| RefTensor { theta: v.clone(), m: vec![0.0; v.len()], v: vec![0.0; v.len()], rank: s.len() })
            .collect();
        let mut opt = Optimizer::new(cfg, &params).unwrap();
        let steps = tensors[0].2.len();
        for t in 0..steps {
            let grads: Vec<Vec<f64>> = tensors.iter().map(|(_, _, g)| g[t].clone()).collect();
            for (p, g) in params.iter_mut().zip(&grads) {
                p.set_grad(g).unwrap();
            }
            opt.step(&mut params).unwrap();
            reference_step(ref_variant(variant), ref_centralization(centr), &mut refs, &grads, &hyper, t as u64 + 1).unwrap();
            for (p, r) in params.iter().zip(&refs) {
                let slot = opt.state().slot(p.id()).unwrap();
                prop_assert!(max_abs_diff(&p.values, &r.theta) <= 1e-12);
                prop_assert!(max_abs_diff(&slot.m, &r.m) <= 1e-12);
                prop_assert!(max_abs_diff(&slot.v, &r.v) <= 1e-12);
            }
        }
    }
}
