use hdqkd::channel::{
    chi_of_channel, depolarizing_channel, identity_channel, rotation_channel, Channel, SamplingMode,
};
use hdqkd::qmath::hermitian_basis;
use hdqkd::tomography::{
    process_fidelity, reconstruct, uhlmann_fidelity, MleConfig, ProcessMatrix, TomographyMethod,
};
use hdqkd::Error;

fn channels() -> Vec<Channel> {
    vec![
        identity_channel(2).unwrap(),
        depolarizing_channel(2, 0.05).unwrap(),
        depolarizing_channel(2, 0.2).unwrap(),
        rotation_channel(2, 0.1).unwrap(),
        rotation_channel(2, 0.4).unwrap(),
    ]
}

fn truth(ch: &Channel) -> ProcessMatrix {
    chi_of_channel(ch, &hermitian_basis(2).unwrap()).unwrap()
}

fn assert_valid(chi: &ProcessMatrix) {
    let m = chi.chi();
    let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(herm < 1e-10, "hermiticity {herm}");
    assert!(chi.min_eigenvalue() > -1e-9, "min eigenvalue {}", chi.min_eigenvalue());
    assert!((m.trace().re - 1.0).abs() < 1e-9);
}

#[test]
fn analytic_round_trip() {
    let cfg = MleConfig::default();
    for method in [TomographyMethod::Mub, TomographyMethod::Sic] {
        for ch in channels() {
            let dm = method.simulate(&ch, SamplingMode::Analytic).unwrap();
            let fit = reconstruct(&dm, method, &cfg, false).unwrap();
            assert_valid(&fit);
            let f = uhlmann_fidelity(&fit, &truth(&ch)).unwrap();
            assert!(f >= 0.9999, "{method} {}: F = {f}", ch.label());
        }
    }
}

#[test]
fn sampled_round_trip() {
    let cfg = MleConfig::default();
    let mut chs = channels();
    chs.push(rotation_channel(2, 0.2).unwrap());
    for (k, ch) in chs.into_iter().enumerate() {
        let mode = SamplingMode::Sampled { shots: 100_000, seed: 11 + k as u64 };
        let dm = TomographyMethod::Mub.simulate(&ch, mode).unwrap();
        let fit = reconstruct(&dm, TomographyMethod::Mub, &cfg, false).unwrap();
        assert_valid(&fit);
        let f = uhlmann_fidelity(&fit, &truth(&ch)).unwrap();
        assert!(f >= 0.999, "{}: F = {f}", ch.label());
    }
}

// The SIC table is minimally complete (16 outcomes for 16 parameters), so
// shot noise passes straight into chi; 1e5 shots land near 0.996 for the
// strongest rotation.
#[test]
fn sampled_sic_round_trip() {
    let cfg = MleConfig::default();
    for (k, ch) in channels().into_iter().enumerate() {
        let mode = SamplingMode::Sampled { shots: 100_000, seed: 31 + k as u64 };
        let dm = TomographyMethod::Sic.simulate(&ch, mode).unwrap();
        let fit = reconstruct(&dm, TomographyMethod::Sic, &cfg, false).unwrap();
        assert_valid(&fit);
        let f = uhlmann_fidelity(&fit, &truth(&ch)).unwrap();
        assert!(f >= 0.99, "{}: F = {f}", ch.label());
    }
}

#[test]
fn trace_preserving_fit() {
    let ch = rotation_channel(2, 0.4).unwrap();
    let dm = TomographyMethod::Mub.simulate(&ch, SamplingMode::Analytic).unwrap();
    let fit = reconstruct(&dm, TomographyMethod::Mub, &MleConfig::default(), true).unwrap();
    assert!(uhlmann_fidelity(&fit, &truth(&ch)).unwrap() >= 0.9999);
}

#[test]
fn depolarizing_chi_is_diagonal() {
    let p = 0.1;
    let ch = depolarizing_channel(2, p).unwrap();
    let dm = TomographyMethod::Sic.simulate(&ch, SamplingMode::Analytic).unwrap();
    let fit = reconstruct(&dm, TomographyMethod::Sic, &MleConfig::default(), false).unwrap();
    let expected = [1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0];
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { expected[i] } else { 0.0 };
            assert!((fit.chi()[(i, j)].re - want).abs() < 1e-4, "chi[{i},{j}] = {}", fit.chi()[(i, j)]);
            assert!(fit.chi()[(i, j)].im.abs() < 1e-4);
        }
    }
    let ideal = truth(&identity_channel(2).unwrap());
    assert!((process_fidelity(&fit, &ideal).unwrap() - 0.925).abs() < 1e-4);
}

#[test]
fn incomplete_data_is_rejected() {
    // the computational basis alone cannot see phases
    let ch = identity_channel(2).unwrap();
    let dm = TomographyMethod::Mub.simulate(&ch, SamplingMode::Analytic).unwrap();
    let keep: Vec<usize> = (0..dm.n_rows()).filter(|&r| dm.row_labels()[r].starts_with('z')).collect();
    let cols = dm.context_range(0);
    let sub = hdqkd::channel::DetectionMatrix::new(
        2,
        dm.protocol(),
        dm.mode(),
        keep.iter().map(|&r| dm.row_labels()[r].clone()).collect(),
        vec![dm.contexts()[0].clone()],
        keep.iter().map(|&r| dm.rows()[r][cols.clone()].to_vec()).collect(),
    )
    .unwrap();
    let err = reconstruct(&sub, TomographyMethod::Mub, &MleConfig::default(), false).unwrap_err();
    assert!(matches!(err, Error::NotInformationallyComplete(_)), "{err}");
}
