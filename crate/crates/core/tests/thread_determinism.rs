//! Results must not depend on how many worker threads rayon uses.
#![cfg(feature = "parallel")]

use gammaclass::synthetic::demo_recipes;
use gammaclass::{
    classify_batch, cross_validate, estimate_density, evaluate, fit_library, sample_spectrum, self_truths, CvConfig,
    EnergyGrid, KdeConfig, Kernel, SamplerConfig,
};
use std::sync::Arc;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn outputs_match_across_thread_counts() {
    let grid = Arc::new(EnergyGrid::linear(1500, 0.0, 12000.0).unwrap());
    let refs: Vec<_> = demo_recipes()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.clone(), r.measure(&grid, 3_000_000, i as u64).unwrap()))
        .collect();
    let run = || {
        let gauss = KdeConfig::new(Kernel::Gaussian, 2e-3).unwrap().with_cutoff(10.0).unwrap();
        let d = estimate_density(&refs[0].1, &gauss).unwrap();
        let lib = fit_library(&refs, &KdeConfig::default()).unwrap();
        let shorts: Vec<_> = (0..40).map(|i| sample_spectrum(lib.model(i % 5).unwrap(), 2000, i as u64)).collect();
        let reports = classify_batch(&shorts, &lib).unwrap();
        let cm = evaluate(&lib, &self_truths(&lib), 50, 0.02, &SamplerConfig::with_seed(2)).unwrap();
        let cv_cfg = CvConfig { bandwidth_grid: vec![1e-4, 1e-3, 1e-2], repeats: 2, ..CvConfig::default() };
        let cv = cross_validate(&refs[1].1, &cv_cfg).unwrap();
        (d, lib, reports, cm, cv)
    };
    let one = in_pool(1, run);
    let three = in_pool(3, run);
    assert_eq!(one.0, three.0);
    assert_eq!(one.1, three.1);
    assert_eq!(one.2, three.2);
    assert_eq!(one.3, three.3);
    assert_eq!(one.4, three.4);
}
