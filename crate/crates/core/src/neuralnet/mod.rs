//! Fully connected feed-forward regression networks trained with Adam on MAE loss.

mod activation;
mod network;
mod train;

pub use activation::{Activation, OutputActivation};
pub use network::{loss_mae, Architecture, Gradients, Layer, Network};
pub use train::{train, Adam, Check, TrainConfig, TrainingLog};

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn fixture_net() -> Network {
        let arch = Architecture {
            hidden_layers: 1,
            hidden_unit_multiplier: 1,
            hidden_activation: Activation::Sigmoid,
            output_activation: OutputActivation::None,
        };
        let mut net = Network::init(arch, 2, 1, 0).unwrap();
        net.layers[0].w = array![[0.1, 0.2], [0.3, 0.4]];
        net.layers[0].b = array![0.5, -0.5];
        net.layers[1].w = array![[0.6], [-0.7]];
        net.layers[1].b = array![0.05];
        net
    }

    fn random_data(seed: u64, n: usize, d_in: usize, d_out: usize) -> (Array2<f64>, Array2<f64>) {
        let mut rng = crate::seed::rng(seed, &[1]);
        let x = Array2::from_shape_simple_fn((n, d_in), || rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_simple_fn((n, d_out), || rng.random_range(-1.0..1.0));
        (x, y)
    }

    #[test]
    fn init_shapes_and_determinism() {
        let a = Network::init(Architecture::default(), 7, 16, 3).unwrap();
        assert_eq!(a.hidden_widths(), vec![56, 56]);
        assert_eq!(a, Network::init(Architecture::default(), 7, 16, 3).unwrap());
        assert!(a.layers.iter().all(|l| l.b.iter().all(|&b| b == 0.0)));
        let bad = Architecture {
            hidden_layers: 0,
            ..Architecture::default()
        };
        assert!(Network::init(bad, 7, 16, 3).is_err());
    }

    #[test]
    fn forward_by_hand() {
        let net = fixture_net();
        let y = net.forward(&array![[1.0, 2.0]]).unwrap();
        assert!((y[[0, 0]] - 0.0753933382581123).abs() < 1e-12);
        let j = net.input_jacobian(&[1.0, 2.0]).unwrap();
        assert!((j[[0, 0]] + 0.022226853269414884).abs() < 1e-12);
        assert!((j[[0, 1]] + 0.03378004010002143).abs() < 1e-12);
    }

    #[test]
    fn zero_net_and_batching() {
        let mut net = Network::init(Architecture::default(), 3, 2, 1).unwrap();
        let (x, _) = random_data(2, 10, 3, 2);
        let full = net.forward(&x).unwrap();
        for i in 0..10 {
            let row = x.slice(ndarray::s![i..i + 1, ..]).to_owned();
            assert_eq!(net.forward(&row).unwrap().row(0), full.row(i));
        }
        let zeros = vec![0.0; net.n_params()];
        net.set_params_flat(&zeros).unwrap();
        assert!(net.forward(&x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_shifted_lower_bound() {
        let arch = Architecture {
            output_activation: OutputActivation::ReluShifted,
            ..Architecture::default()
        };
        let net = Network::init(arch, 4, 3, 9).unwrap();
        let (x, _) = random_data(3, 50, 4, 3);
        assert!(net.forward(&x).unwrap().iter().all(|&v| v >= -1.0));
    }

    #[test]
    fn mae_values() {
        let y = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(loss_mae(&y, &y), 0.0);
        assert_eq!(loss_mae(&(&y + 0.5), &y), 0.5);
        let p = array![[1.5, 2.0], [2.0, 4.0]];
        let swapped_p = array![[2.0, 4.0], [1.5, 2.0]];
        let swapped_y = array![[3.0, 4.0], [1.0, 2.0]];
        assert_eq!(loss_mae(&p, &y), loss_mae(&swapped_p, &swapped_y));
    }

    #[test]
    fn adam_first_step_is_learning_rate() {
        let mut net = fixture_net();
        let before = net.params_flat();
        let mut adam = Adam::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        let mut g = net.backward(&array![[1.0, 2.0]], &array![[0.0]]).unwrap().1;
        for l in &mut g.layers {
            l.w.fill(1.0);
            l.b.fill(1.0);
        }
        adam.step(&mut net, &g);
        for (a, b) in net.params_flat().iter().zip(&before) {
            assert!(((a - b) + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
        }

        let mut adam = Adam::new(&net, 1e-3, 0.9, 0.999, 1e-8);
        for l in &mut g.layers {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
        let before = net.params_flat();
        adam.step(&mut net, &g);
        assert_eq!(net.params_flat(), before);
    }

    #[test]
    fn flat_validation_stops_at_eleventh_check() {
        let mut net = Network::init(Architecture::default(), 2, 1, 5).unwrap();
        let (x, y) = random_data(4, 5, 2, 1);
        let config = TrainConfig {
            learning_rate: 1e-300,
            ..TrainConfig::default()
        };
        let log = train(&mut net, &x, &y, &x, &y, &config).unwrap();
        assert!(log.early_stopped);
        assert_eq!(log.checks.len(), 11);
        assert_eq!(log.epochs_run, 2200);
        assert_eq!(log.best_epoch, 200);
    }

    #[test]
    fn learns_a_constant() {
        let arch = Architecture {
            hidden_layers: 1,
            hidden_unit_multiplier: 1,
            ..Architecture::default()
        };
        let mut net = Network::init(arch, 3, 2, 5).unwrap();
        let (x, _) = random_data(4, 100, 3, 2);
        // a constant target scales to 0
        let y = Array2::zeros((100, 2));
        let config = TrainConfig {
            max_epochs: 1000,
            ..TrainConfig::default()
        };
        let log = train(&mut net, &x, &y, &x, &y, &config).unwrap();
        assert!(log.best_validation_loss.unwrap() < 1e-3, "{log:?}");
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let (x, y) = random_data(8, 150, 3, 2);
        let config = TrainConfig {
            max_epochs: 50,
            eval_every: 10,
            seed: 17,
            ..TrainConfig::default()
        };
        let run = || {
            let mut net = Network::init(Architecture::default(), 3, 2, 5).unwrap();
            let log = train(&mut net, &x, &y, &x, &y, &config).unwrap();
            (net, log)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_validation_runs_to_cap() {
        let (x, y) = random_data(8, 20, 3, 2);
        let empty = Array2::zeros((0, 3));
        let empty_y = Array2::zeros((0, 2));
        let config = TrainConfig {
            max_epochs: 30,
            eval_every: 10,
            ..TrainConfig::default()
        };
        let mut net = Network::init(Architecture::default(), 3, 2, 5).unwrap();
        let log = train(&mut net, &x, &y, &empty, &empty_y, &config).unwrap();
        assert_eq!(log.epochs_run, 30);
        assert!(!log.early_stopped);
        assert_eq!(log.warnings.len(), 1);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let (x, mut y) = random_data(8, 20, 3, 2);
        y[[3, 1]] = f64::NAN;
        let mut net = Network::init(Architecture::default(), 3, 2, 5).unwrap();
        let err = train(&mut net, &x, &y, &x, &y, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, crate::Error::NonFiniteGradient { epoch: 1 }));
    }
}
