use thp_core::bounds::NoiseModel;
use thp_core::modulo::Modulus;
use thp_core::rates::{exact_modt_rate, mc_mutual_info};
use thp_core::rng::{Purpose, RngStream};

fn errors(n: usize, reps: u64, point: u64) -> Vec<f64> {
    let m = Modulus::from_power(1.0).unwrap();
    let nm = NoiseModel::from_snr(1.0, &m).unwrap();
    let exact = exact_modt_rate(nm.alpha(), nm.sigma(), &m).unwrap().bits;
    (0..reps)
        .map(|r| {
            let mut rng = RngStream::for_cell(1, point, r, Purpose::Estimator);
            mc_mutual_info(nm.alpha(), nm.sigma(), &m, n, 256, &mut rng)
                .unwrap()
                .bits
                - exact
        })
        .collect()
}

fn mean_square(e: &[f64]) -> f64 {
    e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64
}

#[test]
fn doubling_samples_reduces_mean_square_error() {
    // Per repetition the larger run wins only about 60% of the time, so the comparison is
    // made on the mean square error over many repetitions.
    let small = errors(20_000, 40, 300);
    let large = errors(40_000, 40, 301);
    let wins = small
        .iter()
        .zip(&large)
        .take(10)
        .filter(|(a, b)| b.abs() < a.abs())
        .count();
    println!("first 10 repetitions: doubling reduced |error| in {wins} of 10");
    let (ms, ml) = (mean_square(&small), mean_square(&large));
    println!("mean square error: {ms:.3e} at 2e4 samples, {ml:.3e} at 4e4");
    assert!(ml < ms);
}

#[test]
fn error_shrinks_with_samples() {
    let coarse = mean_square(&errors(10_000, 20, 302)).sqrt();
    let fine = mean_square(&errors(1_000_000, 20, 303)).sqrt();
    println!("rms error {coarse:.4} at 1e4 samples, {fine:.4} at 1e6");
    assert!(fine < coarse / 3.0);
    assert!(fine < 0.01);
}
