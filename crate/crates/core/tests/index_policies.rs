mod common;

use bml_core::index::{
    kl_bernoulli, lower_bound_constant, measure_loss, rule4_choose, ChannelSource, Genie, LossSettings, RandomChoice,
    Strategy, Ucb,
};
use bml_core::{ObservationCounts, ThetaVector};
use common::{bernoulli_kl, test_rng};

fn settings(horizon: u64, replications: usize, seed: u64) -> LossSettings {
    LossSettings {
        horizon,
        bandwidth: 2.0,
        sense_per_slot: 1,
        replications,
        seed,
    }
}

fn known(values: &[f64]) -> ChannelSource {
    ChannelSource::Known(ThetaVector::new(values.to_vec()).unwrap())
}

#[test]
fn genie_has_no_pseudo_loss() {
    let rep = measure_loss(
        |t: &ThetaVector| Box::new(Genie::new(t, 1)) as Box<dyn Strategy>,
        &known(&[0.3, 0.8, 0.5]),
        settings(2000, 20, 1),
    )
    .unwrap();
    assert_eq!(rep.mean_pseudo_loss, 0.0);
    assert!(rep.mean_loss.abs() < 3.0 * rep.ci95 + 1e-9);
}

#[test]
fn random_choice_loss_is_linear() {
    let theta = [0.9, 0.4, 0.2];
    let horizon = 3000;
    let rep = measure_loss(
        |_: &ThetaVector| Box::new(RandomChoice::new(1)) as Box<dyn Strategy>,
        &known(&theta),
        settings(horizon, 100, 2),
    )
    .unwrap();
    let mean: f64 = theta.iter().sum::<f64>() / 3.0;
    let expected = 2.0 * horizon as f64 * (0.9 - mean);
    assert!((rep.mean_pseudo_loss - expected).abs() < 3.0 * rep.pseudo_ci95);
}

#[test]
fn ucb_beats_random_and_prefers_best_channel() {
    let source = known(&[0.4, 0.85, 0.6]);
    let ucb = measure_loss(|_: &ThetaVector| Box::new(Ucb::new(1)) as Box<dyn Strategy>, &source, settings(5000, 40, 3))
        .unwrap();
    let random =
        measure_loss(|_: &ThetaVector| Box::new(RandomChoice::new(1)) as Box<dyn Strategy>, &source, settings(5000, 40, 3))
            .unwrap();
    assert!(ucb.mean_pseudo_loss < 0.1 * random.mean_pseudo_loss);
    let best = ucb
        .channel_frequencies
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(best, 1);
}

#[test]
fn kl_and_lower_bound_match_direct_formula() {
    let mut rng = test_rng(9);
    for _ in 0..200 {
        let p: f64 = rand::Rng::gen_range(&mut rng, 0.01..0.99);
        let q: f64 = rand::Rng::gen_range(&mut rng, 0.01..0.99);
        assert!((kl_bernoulli(p, q).unwrap() - bernoulli_kl(p, q)).abs() < 1e-12);
    }
    let theta = ThetaVector::new(vec![0.9, 0.5, 0.3]).unwrap();
    let lb = lower_bound_constant(&theta, 1.5);
    let direct = 1.5 * ((0.9 - 0.5) / bernoulli_kl(0.5, 0.9) + (0.9 - 0.3) / bernoulli_kl(0.3, 0.9));
    assert!((lb.constant - direct).abs() < 1e-12);
    assert!(!lb.degenerate);
    assert!(lower_bound_constant(&ThetaVector::new(vec![0.7, 0.7]).unwrap(), 1.0).degenerate);
}

#[test]
fn multi_channel_choice_takes_top_indices() {
    let counts = ObservationCounts::from_pairs(&[(9, 10), (1, 10), (8, 10), (5, 10)]).unwrap();
    let mut rng = test_rng(4);
    let mut pick = rule4_choose(&counts, 50, 2, &mut rng).unwrap();
    pick.sort();
    assert_eq!(pick, vec![0, 2]);
}

#[test]
fn replications_extend_without_disturbing_earlier_ones() {
    let source = known(&[0.6, 0.5]);
    let f = |_: &ThetaVector| Box::new(Ucb::new(1)) as Box<dyn Strategy>;
    let short = measure_loss(f, &source, settings(800, 5, 11)).unwrap();
    let long = measure_loss(f, &source, settings(800, 12, 11)).unwrap();
    assert_eq!(short.losses[..], long.losses[..5]);
    assert_eq!(short.pseudo_losses[..], long.pseudo_losses[..5]);
}
