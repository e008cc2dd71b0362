use connective::gibbs::*;
use connective::{Error, Potential, RadialTable, Space};

/// Hard rods of length `sigma` with centres in an interval of length `len`:
/// `Z = sum_k lambda^k (len - (k - 1) sigma)_+^k / k!`.
fn tonks_z(len: f64, lambda: f64, sigma: f64) -> f64 {
    if len <= 0.0 {
        return 1.0;
    }
    let mut z = 1.0;
    let mut k = 1;
    loop {
        let free = len - (k as f64 - 1.0) * sigma;
        if free <= 0.0 {
            return z;
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        z += lambda.powi(k) * free.powi(k) / fact;
        k += 1;
    }
}

fn tonks_density(len: f64, lambda: f64, sigma: f64, v: f64) -> f64 {
    lambda * tonks_z(v - sigma, lambda, sigma) * tonks_z(len - v - sigma, lambda, sigma) / tonks_z(len, lambda, sigma)
}

fn zero_potential() -> Potential {
    Potential::radial_table(RadialTable::new(vec![1.0], vec![0.0]).unwrap())
}

fn rods(len: f64, lambda: f64) -> GibbsModel {
    GibbsModel::new(
        Potential::hard_sphere(1.0).unwrap(),
        Space::euclidean(1).unwrap(),
        BoxRegion::cube(1, len, Boundary::Free).unwrap(),
        lambda,
    )
    .unwrap()
}

fn strauss_box(side: f64, lambda: f64) -> GibbsModel {
    GibbsModel::new(
        Potential::strauss(1.0, 1.0).unwrap(),
        Space::euclidean(2).unwrap(),
        BoxRegion::cube(2, side, Boundary::Free).unwrap(),
        lambda,
    )
    .unwrap()
}

#[test]
fn tonks_oracle_sanity() {
    // Two rods in [0, 1.5]: Z = 1 + 1.5 lambda + lambda^2 0.5^2 / 2.
    let z = tonks_z(1.5, 0.3, 1.0);
    assert!((z - (1.0 + 0.45 + 0.09 * 0.125)).abs() < 1e-15);
}

#[test]
fn ideal_gas_is_poisson() {
    let model = GibbsModel::new(
        zero_potential(),
        Space::euclidean(2).unwrap(),
        BoxRegion::cube(2, 3.0, Boundary::Free).unwrap(),
        0.5,
    )
    .unwrap();
    let batch = sample_gibbs(&model, 10_000, 1).unwrap();
    assert_eq!(batch.n_accepted, batch.n_proposals);
    let mean = model.expected_points();
    let dom = check_domination(&batch).unwrap();
    assert!((dom.mean_count - mean).abs() < 3.0 * dom.std_error);
    let chi = poisson_count_test(&batch, mean).unwrap();
    assert!(chi.p_value > 0.001, "{chi:?}");
    let part = estimate_partition(&batch).unwrap();
    assert_eq!(part.z_hat, mean.exp());
    let rho = estimate_density(&model, &[1.0, 2.0], &batch).unwrap();
    assert_eq!(rho.value, 0.5);
    let tilted = estimate_tilted_density(&model, &[1.0, 1.0], &[1.5, 1.0], &[1.2, 1.1], &batch).unwrap();
    assert_eq!(tilted.value, 0.5);
}

#[test]
fn zero_activity_gives_empty_configs() {
    let batch = sample_gibbs(&rods(5.0, 0.0), 100, 3).unwrap();
    assert!(batch.configs.iter().all(PointConfiguration::is_empty));
    assert_eq!(batch.n_proposals, 100);
}

#[test]
fn hard_disks_dominated_by_poisson() {
    let model = GibbsModel::new(
        Potential::hard_sphere(1.0).unwrap(),
        Space::euclidean(2).unwrap(),
        BoxRegion::cube(2, 5.0, Boundary::Free).unwrap(),
        0.1,
    )
    .unwrap();
    let batch = sample_gibbs(&model, 20_000, 4).unwrap();
    let dom = check_domination(&batch).unwrap();
    assert!(dom.ok);
    assert!(dom.mean_count < 2.5);
    for c in &batch.configs {
        let h = model.energy(&c.points);
        assert!(!h.is_hard());
        assert!((h.value() - c.energy).abs() <= 1e-9);
    }
}

#[test]
fn energies_recompute_for_soft_potentials() {
    let model = strauss_box(4.0, 0.3);
    let batch = sample_gibbs(&model, 5000, 5).unwrap();
    for c in &batch.configs {
        assert!((model.energy(&c.points).value() - c.energy).abs() <= 1e-9);
        assert!(c.points.iter().all(|p| model.region().contains(p)));
    }
}

#[test]
fn hard_rod_partition_and_density_match_tonks() {
    let (len, lambda) = (10.0, 0.2);
    let model = rods(len, lambda);
    let batch = sample_gibbs(&model, 100_000, 6).unwrap();
    let part = estimate_partition(&batch).unwrap();
    let log_z = tonks_z(len, lambda, 1.0).ln();
    assert!((part.log_z - log_z).abs() < 3.0 * part.log_z_std_error, "{part:?} vs {log_z}");
    assert!(part.log_z >= 0.0 && part.log_z <= lambda * len);
    for v in [5.0, 0.5, 2.3] {
        let rho = estimate_density(&model, &[v], &batch).unwrap();
        let exact = tonks_density(len, lambda, 1.0, v);
        assert!((rho.value - exact).abs() < 3.0 * rho.std_error, "v={v}: {rho:?} vs {exact}");
        assert!(rho.value <= lambda + 3.0 * rho.std_error);
    }
}

#[test]
fn periodic_rods_have_flat_density() {
    let model = GibbsModel::new(
        Potential::hard_sphere(1.0).unwrap(),
        Space::euclidean(1).unwrap(),
        BoxRegion::cube(1, 6.0, Boundary::Periodic).unwrap(),
        0.3,
    )
    .unwrap();
    let batch = sample_gibbs(&model, 50_000, 7).unwrap();
    let a = estimate_density(&model, &[0.1], &batch).unwrap();
    let b = estimate_density(&model, &[3.0], &batch).unwrap();
    assert!((a.value - b.value).abs() < 3.0 * a.std_error.hypot(b.std_error));
}

#[test]
fn ruelle_bound_holds() {
    let model = strauss_box(4.0, 0.1);
    let batch = sample_gibbs(&model, 20_000, 8).unwrap();
    let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![0.2 * i as f64, 4.0 - 0.15 * i as f64]).collect();
    for r in check_ruelle(&model, &batch, &pts).unwrap() {
        assert!(r.ok, "{r:?}");
    }
}

#[test]
fn tilted_density_examples() {
    let model = rods(8.0, 0.2);
    let batch = sample_gibbs(&model, 20_000, 9).unwrap();
    let v = [4.0];
    // Zero tilt radius reduces to the plain density.
    let plain = estimate_density(&model, &[4.6], &batch).unwrap();
    let tilt = estimate_tilted_density(&model, &v, &v, &[4.6], &batch).unwrap();
    assert!((plain.value - tilt.value).abs() < 1e-15);
    // Target strictly inside a hard tilt ball.
    let zero = estimate_tilted_density(&model, &v, &[4.8], &[4.3], &batch).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(matches!(
        estimate_tilted_density(&model, &v, &[4.5], &[9.0], &batch),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn recursion_identity_ideal_gas_exact() {
    let model = GibbsModel::new(
        zero_potential(),
        Space::euclidean(1).unwrap(),
        BoxRegion::cube(1, 8.0, Boundary::Free).unwrap(),
        0.2,
    )
    .unwrap();
    let batch = sample_gibbs(&model, 1000, 10).unwrap();
    let grid = QuadGrid::for_support(model.space(), vec![4.0], 1.0, 16).unwrap();
    let r = verify_recursion_identity(&model, &[4.0], &grid, &batch).unwrap();
    assert_eq!(r.lhs, 0.2);
    assert_eq!(r.rhs, 0.2);
    assert_eq!(r.z_score, 0.0);
}

#[test]
fn recursion_identity_hard_rods() {
    let model = rods(8.0, 0.2);
    let batch = sample_gibbs(&model, 100_000, 11).unwrap();
    let grid = QuadGrid::for_support(model.space(), vec![4.0], 1.0, 64).unwrap();
    let r = verify_recursion_identity(&model, &[4.0], &grid, &batch).unwrap();
    assert!(r.within(3.0), "{r:?}");
    assert!(r.quadrature_shift < r.combined_std_error, "{r:?}");
    let exact = tonks_density(8.0, 0.2, 1.0, 4.0);
    assert!((r.lhs - exact).abs() < 3.0 * r.lhs_std_error);
}

#[test]
fn recursion_identity_strauss_plane() {
    let model = strauss_box(4.0, 0.1);
    let batch = sample_gibbs(&model, 50_000, 12).unwrap();
    let grid = QuadGrid::for_support(model.space(), vec![2.0, 2.0], 1.0, 16).unwrap();
    let r = verify_recursion_identity(&model, &[2.0, 2.0], &grid, &batch).unwrap();
    assert!(r.within(3.0), "{r:?}");
    assert!(r.quadrature_shift < r.combined_std_error, "{r:?}");
}

#[test]
fn kpoint_product_identity() {
    let model = strauss_box(4.0, 0.1);
    let batch = sample_gibbs(&model, 20_000, 13).unwrap();
    let r = verify_kpoint_product(&model, &[vec![2.0, 2.0], vec![2.5, 2.0]], &batch).unwrap();
    assert!(r.z_score <= 3.0, "{r:?}");
    assert!(r.direct > 0.0);

    let rods = rods(8.0, 0.2);
    let rb = sample_gibbs(&rods, 5000, 14).unwrap();
    let close = verify_kpoint_product(&rods, &[vec![3.0], vec![3.5]], &rb).unwrap();
    assert_eq!(close.direct, 0.0);
    assert_eq!(close.product, 0.0);

    let ideal = GibbsModel::new(
        zero_potential(),
        Space::euclidean(2).unwrap(),
        BoxRegion::cube(2, 4.0, Boundary::Free).unwrap(),
        0.1,
    )
    .unwrap();
    let ib = sample_gibbs(&ideal, 1000, 15).unwrap();
    let r = verify_kpoint_product(&ideal, &[vec![1.0, 1.0], vec![1.2, 1.0]], &ib).unwrap();
    assert!((r.direct - 0.01).abs() < 1e-17);
    assert!((r.product - 0.01).abs() < 1e-17);
}

#[test]
fn acceptance_monotone_in_activity() {
    let model = strauss_box(4.0, 0.1);
    let lambdas: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
    let rates = acceptance_sweep(&model, &lambdas, 20_000, 16).unwrap();
    assert_eq!(rates[0], 1.0);
    assert!(rates.windows(2).all(|w| w[1] <= w[0]), "{rates:?}");
}

#[test]
fn sampling_is_reproducible() {
    let model = strauss_box(4.0, 0.2);
    let a = sample_gibbs(&model, 3000, 17).unwrap();
    let b = sample_gibbs(&model, 3000, 17).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let c = pool.install(|| sample_gibbs(&model, 3000, 17)).unwrap();
    assert_eq!(a, c);
}

#[test]
fn rejection_guard() {
    let model = GibbsModel::new(
        Potential::hard_sphere(1.0).unwrap(),
        Space::euclidean(2).unwrap(),
        BoxRegion::cube(2, 10.0, Boundary::Free).unwrap(),
        1.9,
    )
    .unwrap();
    // Roughly 190 proposed disks in a 10 x 10 box never fit.
    assert!(matches!(sample_gibbs(&model, 1, 18), Err(Error::AcceptanceTooLow { .. })));
}
