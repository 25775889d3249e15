use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surropt_core::surrogate::{Activation, DenseNetwork, NetworkSpec};

/// Smallest |pre-activation| of any hidden ReLU unit over the batch.
fn kink_margin(net: &DenseNetwork, x: &Array2<f64>) -> f64 {
    let mut a = x.clone();
    let mut margin = f64::INFINITY;
    for l in net.layers() {
        let z = a.dot(&l.weights) + &l.bias;
        if l.activation == Activation::Relu {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            a = z.mapv(|v| v.max(0.0));
        } else {
            a = z;
        }
    }
    margin
}

fn random_case(rng: &mut ChaCha8Rng) -> (DenseNetwork, Array2<f64>, Array1<f64>) {
    loop {
        let input_dim = rng.random_range(1..=4);
        let depth = rng.random_range(1..=2);
        let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=5)).collect();
        let spec = NetworkSpec::custom(widths).unwrap();
        let net = DenseNetwork::build(&spec, input_dim, rng.random()).unwrap();
        if net.parameter_count() > 50 {
            continue;
        }
        let rows = 3;
        let x = Array2::from_shape_fn((rows, input_dim), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(rows, |_| rng.random_range(-1.0..1.0));
        if kink_margin(&net, &x) > 1e-3 {
            return (net, x, y);
        }
    }
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let step = 1e-5;
    for case in 0..20 {
        let (net, x, y) = random_case(&mut rng);
        let (_, grads) = net.loss_and_gradient(x.view(), y.view());
        let analytic = grads.flatten();
        let params = net.parameters();
        assert_eq!(analytic.len(), params.len());
        for k in 0..params.len() {
            let loss_at = |delta: f64| {
                let mut p = params.clone();
                p[k] += delta;
                let mut probe = net.clone();
                probe.set_parameters(&p).unwrap();
                probe.loss_and_gradient(x.view(), y.view()).0
            };
            let numeric = (loss_at(step) - loss_at(-step)) / (2.0 * step);
            let scale = analytic[k].abs().max(numeric.abs()).max(1e-6);
            let rel = (analytic[k] - numeric).abs() / scale;
            assert!(rel <= 1e-4, "case {case} param {k}: {} vs {numeric}", analytic[k]);
        }
    }
}
