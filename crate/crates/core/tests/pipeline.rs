use proptest::prelude::*;
use std::f64::consts::PI;

use sphereframes::frame_verify::{certify_frame_with, CertifyConfig, Verdict};
use sphereframes::harmonics::build_sphere_grid;
use sphereframes::output::{json_text, transform_csv, trials_csv, Provenance};
use sphereframes::rotation_grid::build_rotation_grid;
use sphereframes::scale_grid::{build_scale_grid, covering_grid, WeightRule, DEFAULT_COVERAGE};
use sphereframes::transform::{
    discrete_energy, energy_identity_oracle, random_bandlimited, wavelet_analysis_with, TransformMethod,
};
use sphereframes::wavelet_spectra::{beta_table, Preset, ScaleDensity, ScaleQuadrature};
use sphereframes::Exec;

fn small_config() -> CertifyConfig {
    let mut c = CertifyConfig::new(2, Preset::Poisson(2).profile(2), 5, vec![0.8, 1.6]);
    c.trials = 4;
    c.seed = 99;
    c
}

#[test]
fn strategies_give_identical_reports() {
    let c = small_config();
    let seq = certify_frame_with(Exec::Sequential, &c).unwrap();
    let par = certify_frame_with(Exec::Parallel, &c).unwrap();
    assert_eq!(seq, par);
    let mut p = Provenance::default();
    p.push("seed", c.seed);
    assert_eq!(trials_csv(&p, &seq), trials_csv(&p, &par));
    assert_eq!(json_text(&p, "report", &seq).unwrap(), json_text(&p, "report", &par).unwrap());
}

#[test]
fn poisson_family_certifies_and_control_fails() {
    let mut c = small_config();
    let r = certify_frame_with(Exec::default(), &c).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    c.deltas = vec![PI, 2.0 * PI];
    let control = certify_frame_with(Exec::default(), &c).unwrap();
    assert_eq!(control.verdict, Verdict::Fail);
}

#[test]
fn three_sphere_transform_paths_agree() {
    let n = 3;
    let band = 3;
    let profile = Preset::AbelPoisson.profile(n);
    let f = random_bandlimited(n, band, Some(0), 8).unwrap();
    let scales = build_scale_grid(1.0, 2.0, 2).unwrap();
    let rotations = build_rotation_grid(n, &[1.6, 2.0, 2.5]).unwrap();
    let grid = build_sphere_grid(n, band).unwrap();
    let fast = wavelet_analysis_with(Exec::default(), TransformMethod::Fast, n, &profile, &f, &scales, &rotations, &grid).unwrap();
    let naive = wavelet_analysis_with(Exec::default(), TransformMethod::Naive, n, &profile, &f, &scales, &rotations, &grid).unwrap();
    let peak = naive.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in fast.values.iter().zip(&naive.values) {
        assert!((a - b).norm() <= 1e-11 * peak);
    }
    let p = Provenance::default();
    assert_eq!(transform_csv(&p, &fast).lines().count(), 1 + scales.len() * rotations.len());
}

#[test]
fn three_sphere_energy_approaches_the_oracle() {
    let n = 3;
    let band = 2;
    let profile = Preset::GaussWeierstrass.profile(n);
    let density = ScaleDensity::new(n, &profile, band).unwrap();
    let scales = covering_grid(&density, band, 1.5, WeightRule::Midpoint, DEFAULT_COVERAGE).unwrap();
    let beta = beta_table(n, &profile, band, &ScaleQuadrature::default()).unwrap();
    let grid = build_sphere_grid(n, band).unwrap();
    let f = random_bandlimited(n, band, Some(0), 12).unwrap();
    let oracle = energy_identity_oracle(n, &profile, &f, &beta).unwrap();
    let mut errors = Vec::new();
    for delta in [1.2, 0.6] {
        let rotations = build_rotation_grid(n, &[delta, delta, 2.0 * delta]).unwrap();
        let e = discrete_energy(Exec::default(), n, &profile, &f, &scales, &rotations, &grid).unwrap();
        errors.push((e - oracle).abs() / oracle);
    }
    assert!(errors[1] < errors[0] && errors[1] < 0.05, "{errors:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn discrete_energy_is_quadratic_in_the_field(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let n = 2;
        let band = 3;
        let profile = Preset::AbelPoisson.profile(n);
        let scales = build_scale_grid(2.0, 2.0, 4).unwrap();
        let rotations = build_rotation_grid(n, &[0.9, 1.2]).unwrap();
        let grid = build_sphere_grid(n, band).unwrap();
        let f = random_bandlimited(n, band, Some(0), seed).unwrap();
        let mut g = f.clone();
        g.coeffs.values_mut().iter_mut().for_each(|a| *a *= scale);
        let e = |f| discrete_energy(Exec::Sequential, n, &profile, f, &scales, &rotations, &grid).unwrap();
        let (ef, eg) = (e(&f), e(&g));
        prop_assert!((eg - scale * scale * ef).abs() <= 1e-12 * eg);
    }
}
