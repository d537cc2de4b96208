use dayahead::market::ObservationLayout;
use dayahead::nn::{Activation, Mlp, PolicyArch, PolicyParams, ACTION_DIM};
use dayahead::optim::a2c_gradients;
use dayahead::seeding;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

const H: f64 = 1e-5;

fn normals(rng: &mut seeding::Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Largest relative error between `analytic` and central differences of
/// `loss` over every entry of `tensors(params)`.
fn max_fd_error<P: Clone>(
    params: &P,
    analytic: &[Vec<f64>],
    tensors: impl Fn(&mut P) -> Vec<&mut [f64]>,
    loss: impl Fn(&P) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (t, grad) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = tensors(&mut probe)[t][i];
            tensors(&mut probe)[t][i] = orig + H;
            let up = loss(&probe);
            tensors(&mut probe)[t][i] = orig - H;
            let down = loss(&probe);
            tensors(&mut probe)[t][i] = orig;
            worst = worst.max(rel_err(grad[i], (up - down) / (2.0 * H)));
        }
    }
    worst
}

fn random_net(sizes: &[usize], act: Activation, seed: u64) -> Mlp {
    let mut net = Mlp::new(sizes, act);
    let mut rng = seeding::rng(seed);
    for t in net.tensors_mut() {
        let v = normals(&mut rng, t.len(), 0.7);
        t.copy_from_slice(&v);
    }
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mlp_backward_matches_central_differences(
        sizes in prop::collection::vec(1usize..7, 2..5),
        tanh in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let act = if tanh { Activation::Tanh } else { Activation::Identity };
        let net = random_net(&sizes, act, seed);
        let mut rng = seeding::rng(seed ^ 1);
        let x = normals(&mut rng, sizes[0], 1.0);
        let g = normals(&mut rng, *sizes.last().unwrap(), 1.0);
        let trace = net.forward_trace(&x).unwrap();
        let grads = net.backward(&trace, &g).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
        let loss = |n: &Mlp| n.forward(&x).unwrap().iter().zip(&g).map(|(y, w)| y * w).sum::<f64>();
        let err = max_fd_error(&net, &analytic, |n| n.tensors_mut(), loss);
        prop_assert!(err < 1e-4, "max relative error {err}");
    }
}

/// The A2C objective written directly in terms of the parameters, with the
/// sampled actions held fixed.
fn a2c_loss(
    p: &PolicyParams,
    obs: &[Vec<f64>],
    actions: &[Vec<f64>],
    adv: &[f64],
    ret: &[f64],
    vf_coef: f64,
    ent_coef: f64,
) -> f64 {
    let n = obs.len() as f64;
    let mut loss = 0.0;
    for t in 0..obs.len() {
        let mu = p.actor.forward(&obs[t]).unwrap();
        let logp: f64 = (0..ACTION_DIM)
            .map(|i| {
                let s = p.log_std[i];
                let z = (actions[t][i] - mu[i]) / s.exp();
                -0.5 * z * z - s - 0.5 * (2.0 * std::f64::consts::PI).ln()
            })
            .sum();
        let v = p.critic.forward(&obs[t]).unwrap()[0];
        loss += -adv[t] * logp / n + vf_coef * (ret[t] - v).powi(2) / n;
    }
    let entropy: f64 = p
        .log_std
        .iter()
        .map(|s| s + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln())
        .sum();
    loss - ent_coef * entropy
}

#[test]
fn a2c_gradients_match_central_differences() {
    let layout = ObservationLayout {
        include_weather: false,
        price_scale: 1.0,
    };
    let arch = PolicyArch {
        net_arch: vec![6, 5],
        log_std_init: -0.5,
        policy_gain: 0.5,
        ..PolicyArch::default()
    };
    for seed in 0..4 {
        let mut policy = PolicyParams::new(layout, &arch, seed);
        let mut rng = seeding::rng(100 + seed);
        let ls = normals(&mut rng, ACTION_DIM, 0.3);
        for (s, d) in policy.log_std.iter_mut().zip(ls) {
            *s += d;
        }
        let obs: Vec<Vec<f64>> = (0..5)
            .map(|_| normals(&mut rng, layout.len(), 1.0))
            .collect();
        let noise: Vec<Vec<f64>> = (0..5).map(|_| normals(&mut rng, ACTION_DIM, 1.0)).collect();
        let adv = normals(&mut rng, 5, 2.0);
        let ret = normals(&mut rng, 5, 2.0);
        let actor: Vec<_> = obs
            .iter()
            .map(|o| policy.actor.forward_trace(o).unwrap())
            .collect();
        let critic: Vec<_> = obs
            .iter()
            .map(|o| policy.critic.forward_trace(o).unwrap())
            .collect();
        let actions: Vec<Vec<f64>> = actor
            .iter()
            .zip(&noise)
            .map(|(tr, xi)| {
                tr.output()
                    .iter()
                    .zip(xi)
                    .zip(&policy.log_std)
                    .map(|((m, z), s)| m + z * s.exp())
                    .collect()
            })
            .collect();
        let (grads, stats) = a2c_gradients(
            &policy,
            &actor.iter().collect::<Vec<_>>(),
            &critic.iter().collect::<Vec<_>>(),
            &noise.iter().map(Vec::as_slice).collect::<Vec<_>>(),
            &adv,
            &ret,
            0.5,
            0.01,
        )
        .unwrap();
        let loss = |p: &PolicyParams| a2c_loss(p, &obs, &actions, &adv, &ret, 0.5, 0.01);
        let at_policy = stats.policy_loss + 0.5 * stats.value_loss - 0.01 * stats.entropy;
        assert!((at_policy - loss(&policy)).abs() < 1e-9 * (1.0 + at_policy.abs()));
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
        let err = max_fd_error(&policy, &analytic, |p| p.tensors_mut(), loss);
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn policy_round_trip_is_bit_identical() {
    let layout = ObservationLayout {
        include_weather: true,
        price_scale: 213.7,
    };
    let policy = PolicyParams::new(layout, &PolicyArch::default(), 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    policy.save(&path).unwrap();
    let back = PolicyParams::load(&path).unwrap();
    assert_eq!(back, policy);
    let mut rng = seeding::rng(1);
    let obs = normals(&mut rng, layout.len(), 1.0);
    let a = policy.mean_action(&obs).unwrap();
    let b = back.mean_action(&obs).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(
        policy.value(&obs).unwrap().to_bits(),
        back.value(&obs).unwrap().to_bits()
    );
}

#[test]
fn policy_shapes_follow_layout() {
    for (weather, len) in [(true, 141), (false, 69)] {
        let layout = ObservationLayout {
            include_weather: weather,
            price_scale: 1.0,
        };
        let p = PolicyParams::new(layout, &PolicyArch::default(), 0);
        assert_eq!(p.input_size(), len);
        assert_eq!(p.actor.output_size(), ACTION_DIM);
        assert_eq!(p.critic.output_size(), 1);
        assert_eq!(p.log_std, vec![-1.0; 96]);
        assert!(p.mean_action(&vec![0.0; len + 1]).is_err());
    }
}
