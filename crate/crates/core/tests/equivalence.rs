mod common;

use common::{random_block, random_geometry, rng};
use moac_core::model::calibrate_n0;
use moac_core::scalar::relative_error;
use moac_core::{EstimatorId, SlotModel};

fn pairwise(seed: u64, devices: usize, packet_len: usize, esn0_db: f64, cfo_max: f64) -> (f64, f64, f64) {
    let mut r = rng(seed);
    let model = SlotModel::new(random_geometry(&mut r, devices, cfo_max), packet_len);
    let block = random_block(&mut r, devices, packet_len);
    let n0 = calibrate_n0(&model.geometry, &block, esn0_db).unwrap();
    let streams = model.transmit(&block, n0, seed ^ 0x5eed).unwrap();
    let est = |id| model.estimate(id, &streams, n0).unwrap().estimate;
    let (direct, whitened, sp) = (est(EstimatorId::DirectMl), est(EstimatorId::WhitenedMl), est(EstimatorId::SpMl));
    (
        relative_error(direct.as_slice(), whitened.as_slice()),
        relative_error(sp.as_slice(), whitened.as_slice()),
        relative_error(direct.as_slice(), sp.as_slice()),
    )
}

#[test]
fn three_ml_variants_agree_on_shared_noise() {
    let mut worst: f64 = 0.0;
    for devices in [2, 3, 4] {
        for packet_len in [4, 8, 16] {
            for (j, esn0) in [0.0, 10.0, 20.0].into_iter().enumerate() {
                for s in 0..10u64 {
                    let seed = (devices * 1000 + packet_len * 10 + j) as u64 * 100 + s;
                    let (a, b, c) = pairwise(seed, devices, packet_len, esn0, 0.0);
                    worst = worst.max(a).max(b).max(c);
                }
            }
        }
    }
    assert!(worst < 1e-6, "worst pairwise relative deviation {worst:e}");
}

#[test]
fn whitened_and_chain_agree_with_cfo() {
    // CFO changes the standard-path model relative to the whitened one, so only
    // the two estimators sharing D are compared.
    for s in 0..20 {
        let (_, sp_vs_whitened, _) = pairwise(9000 + s, 3, 8, 10.0, 0.3);
        assert!(sp_vs_whitened < 1e-6, "seed {s}: {sp_vs_whitened:e}");
    }
}

#[test]
fn noiseless_exactness() {
    for devices in [1, 2, 3, 4] {
        for s in 0..10u64 {
            let mut r = rng(500 + s + 100 * devices as u64);
            let model = SlotModel::new(random_geometry(&mut r, devices, 0.0), 8);
            let block = random_block(&mut r, devices, 8);
            let streams = model.transmit(&block, 0.0, 0).unwrap();
            for id in [EstimatorId::DirectMl, EstimatorId::WhitenedMl, EstimatorId::SpMl] {
                let est = model.estimate(id, &streams, 0.0).unwrap();
                let err = relative_error(est.estimate.as_slice(), block.target_sum().as_slice());
                assert!(err < 1e-8, "{id} M={devices}: {err:e}");
            }
        }
    }
}

#[test]
fn whitened_estimator_is_linear() {
    let mut r = rng(77);
    let model = SlotModel::new(random_geometry(&mut r, 3, 0.0), 6);
    let block = random_block(&mut r, 3, 6);
    let streams = model.transmit(&block, 0.0, 0).unwrap();
    let alpha = num_complex::Complex::new(-0.7, 1.9);
    let mut scaled = streams.clone();
    scaled.whitened.values *= alpha;
    let base = model.estimate(EstimatorId::WhitenedMl, &streams, 0.0).unwrap().estimate;
    let got = model.estimate(EstimatorId::WhitenedMl, &scaled, 0.0).unwrap().estimate;
    assert!(relative_error(got.as_slice(), (base * alpha).as_slice()) < 1e-12);
}

#[test]
fn aligned_geometry_chain_reads_samples() {
    let model = SlotModel::new(moac_core::Geometry::aligned(3).unwrap(), 5);
    let mut r = rng(3);
    let block = random_block(&mut r, 3, 5);
    for n0 in [0.0, 0.2] {
        let streams = model.transmit(&block, n0, 11).unwrap();
        let sp = model.estimate(EstimatorId::SpMl, &streams, n0).unwrap();
        assert!(relative_error(sp.estimate.as_slice(), streams.whitened.values.as_slice()) < 1e-12);
        assert_eq!(sp.diagnostics.rank_deficient, 5);
    }
}
