//! Corpus helpers shared by the integration tests.
#![allow(dead_code)]

use baton_core::capture::{generate_synthetic, PerturbationSpec};
use baton_core::geometry::{RotationMatrix, Vec3};
use baton_core::pipeline::{average_bars, bars_from_sequence, AverageTrajectory, BarSegment, DownbeatAnchor};
use baton_core::MovementClass;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const TEMPO: f64 = 76.0;
pub const BEATS: usize = 4;
pub const N: usize = 256;

/// Seeds used to build references: 5 takes of 4 bars, 20 bars per class.
pub const REFERENCE_SEEDS: std::ops::Range<u64> = 100..105;
pub const REFERENCE_BARS_PER_SEED: usize = 4;
/// Seeds of held-out single-bar takes.
pub const TEST_SEEDS: std::ops::Range<u64> = 5000..5050;

pub fn spec(class: MovementClass, seed: u64) -> PerturbationSpec {
    PerturbationSpec::default_for(class, seed, TEMPO, BEATS)
}

pub fn bars_of(spec: &PerturbationSpec, bars: usize) -> Vec<BarSegment<f64>> {
    bars_anchored(spec, bars, DownbeatAnchor::Auto)
}

/// Generated bars with a chosen downbeat rule. The generator starts every
/// bar on the beat-1 ictus, so `Index(0)` is the ground-truth anchor.
pub fn bars_anchored(spec: &PerturbationSpec, bars: usize, anchor: DownbeatAnchor) -> Vec<BarSegment<f64>> {
    let seq = generate_synthetic(BEATS, TEMPO, bars, spec).unwrap();
    bars_from_sequence(&seq, N, anchor).unwrap()
}

pub fn single_bar(spec: &PerturbationSpec) -> BarSegment<f64> {
    bars_of(spec, 1).remove(0)
}

pub fn reference_for(class: MovementClass) -> AverageTrajectory<f64> {
    reference_anchored(class, DownbeatAnchor::Auto)
}

pub fn reference_anchored(class: MovementClass, anchor: DownbeatAnchor) -> AverageTrajectory<f64> {
    let bars: Vec<_> = REFERENCE_SEEDS
        .flat_map(|seed| bars_anchored(&spec(class, seed), REFERENCE_BARS_PER_SEED, anchor))
        .collect();
    average_bars(&bars, class).unwrap()
}

pub fn references() -> Vec<AverageTrajectory<f64>> {
    MovementClass::ALL.iter().map(|&c| reference_for(c)).collect()
}

pub fn random_rotation(rng: &mut impl Rng) -> RotationMatrix<f64> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            let q = baton_core::geometry::Quaternion::new(v[0] / n, v[1] / n, v[2] / n, v[3] / n);
            return baton_core::geometry::quat_to_rotation(&q).unwrap();
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3<f64> {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn gaussian_vec(rng: &mut impl Rng, sigma: f64) -> Vec3<f64> {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    Vec3::new(draw(), draw(), draw()) * sigma
}
