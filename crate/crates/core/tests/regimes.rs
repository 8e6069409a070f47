use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use confsets::rng::fill_normals;
use confsets::shapes::{check_condition_a, ConditionCheckConfig, ConditionVerdict, ConfidenceShape, Parallelogram};
use confsets::simulate::{block_design, selection_frequency};
use confsets::{GramData, LinearModel, TuningVector};

fn random_corr(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(p, p);
    fill_normals(rng, a.as_mut_slice());
    let c = a.tr_mul(&a) + DMatrix::identity(p, p) * 0.05;
    let d = DVector::from_fn(p, |j, _| 1.0 / c[(j, j)].sqrt());
    DMatrix::from_fn(p, p, |i, j| c[(i, j)] * d[i] * d[j])
}

#[test]
fn parallelograms_hold_in_two_dimensions() {
    let c = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
    let shape = ConfidenceShape::Parallelogram(Parallelogram::new(c.clone(), vec![1.0, 0.6], 2.0).unwrap());
    let report = check_condition_a(&shape, &c, &ConditionCheckConfig::default()).unwrap();
    assert_eq!(report.verdict, ConditionVerdict::HoldsOnSample);
}

#[test]
fn some_three_dimensional_parallelogram_fails_the_cone_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let found = (0..40).find_map(|_| {
        let c = random_corr(3, &mut rng);
        let shape = ConfidenceShape::Parallelogram(Parallelogram::new(c.clone(), vec![1.0; 3], 1.0).unwrap());
        let report = check_condition_a(&shape, &c, &ConditionCheckConfig::default()).unwrap();
        match report.verdict {
            ConditionVerdict::Counterexample { z, .. } => Some((shape, z)),
            ConditionVerdict::HoldsOnSample => None,
        }
    });
    let (shape, z) = found.expect("no counterexample among 40 random designs");
    assert!(!shape.contains(&z));
}

#[test]
fn zero_frequency_falls_with_signal() {
    let gram = GramData::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0])).unwrap();
    let n = 20;
    let model = LinearModel::new(block_design(&gram, n).unwrap(), DVector::zeros(n), 1.0).unwrap();
    let tuning = TuningVector::finite_sample(vec![(n as f64).sqrt() / 2.0; 2], n).unwrap();
    let grid: Vec<DVector<f64>> = [0.0, 0.5, 1.0, 3.0]
        .iter()
        .map(|m| DVector::from_element(2, m / (n as f64).sqrt()))
        .collect();
    let report = selection_frequency(&model, &tuning, &grid, 20_000, 8).unwrap();
    let first: Vec<f64> = report.rows.iter().map(|r| r.zero_frequency[0]).collect();
    assert!(first.windows(2).all(|w| w[0] >= w[1]), "{first:?}");
    assert!(first[0] > 0.3 && first[3] < 0.05, "{first:?}");
    assert_eq!(report.max_frequency, first[0].max(report.rows[0].zero_frequency[1]));
}
