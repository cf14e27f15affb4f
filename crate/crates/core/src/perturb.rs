//! Per-frame gamma jitter and the clean-vs-corrupted robustness sweep.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{horn_schunck, FlowField, HornSchunckParams};
use crate::gray::{FrameSequence, GrayImage};
use crate::numeric::wrap_angle;
use crate::phase::{snippet_phase_diffs, PairFields, PhaseDiffConfig};
use crate::pyramid::{build_filter_bank, PyramidSpec};
use crate::rng::SplitMix64;

/// Illumination variability `beta` in [0, 1] and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaJitterSpec {
    pub beta: f64,
    pub seed: u64,
}

impl GammaJitterSpec {
    pub fn new(beta: f64, seed: u64) -> Result<Self> {
        let spec = Self { beta, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Validation(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// γ for frame `index`: `1 - β + 2β·u` with `u` the index-th uniform of
    /// [`SplitMix64`] seeded with `seed`, so γ ∈ (1-β, 1+β).
    pub fn gamma_at(&self, index: u64) -> f64 {
        if self.beta == 0.0 {
            return 1.0;
        }
        let u = SplitMix64::new(self.seed).unit_at(index);
        1.0 - self.beta + 2.0 * self.beta * u
    }

    pub fn gammas(&self, n: usize) -> Vec<f64> {
        (0..n as u64).map(|i| self.gamma_at(i)).collect()
    }
}

/// Pointwise `u^γ`.
pub fn gamma_corrupt_frame(img: &GrayImage, gamma: f64) -> Result<GrayImage> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Validation(format!("gamma must be > 0, got {gamma}")));
    }
    if gamma == 1.0 {
        return Ok(img.clone());
    }
    GrayImage::from_plane(img.as_plane().map(|u| u.powf(gamma).clamp(0.0, 1.0)))
}

/// Applies an independent γ to every frame. The same spec always yields
/// bit-identical output; β = 0 returns the input unchanged.
pub fn gamma_corrupt_sequence(
    seq: &FrameSequence,
    spec: &GammaJitterSpec,
) -> Result<FrameSequence> {
    spec.validate()?;
    let frames = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(i, f)| gamma_corrupt_frame(f, spec.gamma_at(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, seq.frame_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionPipeline {
    PhaseDiff,
    Flow,
}

impl MotionPipeline {
    pub fn name(self) -> &'static str {
        match self {
            MotionPipeline::PhaseDiff => "phase_diff",
            MotionPipeline::Flow => "flow",
        }
    }
}

impl fmt::Display for MotionPipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionPipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase_diff" | "phasediff" | "phase" => Ok(MotionPipeline::PhaseDiff),
            "flow" => Ok(MotionPipeline::Flow),
            other => Err(Error::Validation(format!("unknown pipeline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSettings {
    pub pyramid: PyramidSpec,
    pub phase: PhaseDiffConfig,
    pub flow: HornSchunckParams,
}

/// One `(beta, seed, pipeline)` row of the sweep report.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub seed: u64,
    pub pipeline: MotionPipeline,
    pub n_pairs: usize,
    /// Mean absolute clean-vs-corrupted deviation per compared pixel.
    pub mean_abs_dev: f64,
    /// Total deviation divided by the clean field's total magnitude.
    pub normalized_dev: f64,
}

pub const SWEEP_CSV_HEADER: &str = "beta,seed,pipeline,n_pairs,mean_abs_dev,normalized_dev";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.beta, r.seed, r.pipeline, r.n_pairs, r.mean_abs_dev, r.normalized_dev
        ));
    }
    out
}

enum Motion {
    Phase(Vec<PairFields>),
    Flow(Vec<FlowField>),
}

fn run_pipeline(
    seq: &FrameSequence,
    pipeline: MotionPipeline,
    settings: &SweepSettings,
) -> Result<Motion> {
    seq.ensure_motion_ready()?;
    match pipeline {
        MotionPipeline::PhaseDiff => {
            let (w, h) = seq.dims();
            let bank = build_filter_bank(w, h, &settings.pyramid)?;
            Ok(Motion::Phase(snippet_phase_diffs(
                seq.frames(),
                &bank,
                &settings.phase,
            )?))
        }
        MotionPipeline::Flow => {
            let fields = seq
                .frames()
                .par_windows(2)
                .map(|p| horn_schunck(&p[0], &p[1], &settings.flow))
                .collect::<Result<Vec<_>>>()?;
            Ok(Motion::Flow(fields))
        }
    }
}

/// (sum |deviation|, sum |clean|, compared pixels)
fn deviation(clean: &Motion, corrupt: &Motion) -> (f64, f64, usize) {
    let (mut dev, mut mag, mut n) = (0.0, 0.0, 0usize);
    match (clean, corrupt) {
        (Motion::Phase(a), Motion::Phase(b)) => {
            for (pa, pb) in a.iter().zip(b) {
                for ((_, _, fa), (_, _, fb)) in pa.iter().zip(pb.iter()) {
                    let va = fa.values.as_slice();
                    let vb = fb.values.as_slice();
                    for i in 0..va.len() {
                        if fa.valid[i] && fb.valid[i] {
                            dev += wrap_angle(vb[i] - va[i]).abs();
                            mag += va[i].abs();
                            n += 1;
                        }
                    }
                }
            }
        }
        (Motion::Flow(a), Motion::Flow(b)) => {
            for (fa, fb) in a.iter().zip(b) {
                let (ua, va) = (fa.u.as_slice(), fa.v.as_slice());
                let (ub, vb) = (fb.u.as_slice(), fb.v.as_slice());
                for i in 0..ua.len() {
                    dev += (ub[i] - ua[i]).hypot(vb[i] - va[i]);
                    mag += ua[i].hypot(va[i]);
                    n += 1;
                }
            }
        }
        _ => unreachable!("pipelines are compared like for like"),
    }
    (dev, mag, n)
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// For every β and seed, corrupts `seq`, reruns each pipeline, and reports
/// how far the corrupted motion fields drift from the clean ones. Phase
/// comparisons use only pixels valid in both runs and wrapped differences.
pub fn robustness_sweep(
    seq: &FrameSequence,
    betas: &[f64],
    seeds: &[u64],
    pipelines: &[MotionPipeline],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    for &beta in betas {
        GammaJitterSpec::new(beta, 0)?;
    }
    let n_pairs = seq.len().saturating_sub(1);
    let mut rows = Vec::new();
    for &pipeline in pipelines {
        let clean = run_pipeline(seq, pipeline, settings)?;
        for &beta in betas {
            for &seed in seeds {
                let corrupted = gamma_corrupt_sequence(seq, &GammaJitterSpec { beta, seed })?;
                let motion = run_pipeline(&corrupted, pipeline, settings)?;
                let (dev, mag, n) = deviation(&clean, &motion);
                rows.push(SweepRow {
                    beta,
                    seed,
                    pipeline,
                    n_pairs,
                    mean_abs_dev: ratio(dev, n as f64),
                    normalized_dev: ratio(dev, mag),
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(offset: f64) -> GrayImage {
        GrayImage::from_fn_clamped(16, 16, |x, y| {
            0.5 + 0.3 * ((x as f64 + offset) * 1.1).sin() * (y as f64 * 0.7).cos()
        })
    }

    fn seq(n: usize) -> FrameSequence {
        FrameSequence::new((0..n).map(|i| frame(i as f64 * 0.3)).collect(), 30.0).unwrap()
    }

    #[test]
    fn gamma_frame_examples() {
        let img = GrayImage::new(4, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(gamma_corrupt_frame(&img, 1.0).unwrap(), img);
        let sq = gamma_corrupt_frame(&img, 2.0).unwrap();
        assert_eq!(sq.as_slice(), &[0.0, 0.0625, 0.25, 1.0]);
        for g in [0.01, 0.5, 1.7, 2.0] {
            let out = gamma_corrupt_frame(&img, g).unwrap();
            assert_eq!(out.get(0, 0), 0.0);
            assert_eq!(out.get(3, 0), 1.0);
        }
        assert!(gamma_corrupt_frame(&img, 0.0).is_err());
        assert!(gamma_corrupt_frame(&img, -1.0).is_err());
    }

    #[test]
    fn beta_zero_is_identity() {
        let s = seq(5);
        for seed in [0, 1, 99] {
            let out =
                gamma_corrupt_sequence(&s, &GammaJitterSpec::new(0.0, seed).unwrap()).unwrap();
            assert_eq!(out, s);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let s = seq(6);
        let spec = GammaJitterSpec::new(0.5, 42).unwrap();
        let a = gamma_corrupt_sequence(&s, &spec).unwrap();
        let b = gamma_corrupt_sequence(&s, &spec).unwrap();
        assert_eq!(a, b);
        let c = gamma_corrupt_sequence(&s, &GammaJitterSpec::new(0.5, 43).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn beta_one_gamma_range() {
        let spec = GammaJitterSpec::new(1.0, 7).unwrap();
        let g = spec.gammas(1000);
        assert!(g.iter().all(|&v| v > 0.0 && v < 2.0));
        assert!(g.iter().any(|&v| v < 0.05) && g.iter().any(|&v| v > 1.95));
        let img = GrayImage::new(3, 1, vec![0.0, 0.2, 0.9]).unwrap();
        let small = gamma_corrupt_frame(&img, 1e-3).unwrap();
        assert_eq!(small.get(0, 0), 0.0);
        assert!(small.get(1, 0) > 0.99 && small.get(2, 0) > 0.99);
    }

    #[test]
    fn beta_out_of_range() {
        assert!(matches!(
            GammaJitterSpec::new(1.5, 0),
            Err(Error::Validation(_))
        ));
        assert!(GammaJitterSpec::new(-0.1, 0).is_err());
        let bad = GammaJitterSpec { beta: 2.0, seed: 0 };
        assert!(gamma_corrupt_sequence(&seq(2), &bad).is_err());
    }

    #[test]
    fn gamma_stream_is_documented_splitmix() {
        let spec = GammaJitterSpec::new(0.5, 1234567).unwrap();
        let u0 = ((0x599ED017FB08FC85u64 >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        assert_eq!(spec.gamma_at(0), 0.5 + u0);
    }

    #[test]
    fn sweep_zero_beta_rows_are_zero() {
        let rows = robustness_sweep(
            &seq(4),
            &[0.0, 0.5],
            &[1, 2],
            &[MotionPipeline::PhaseDiff, MotionPipeline::Flow],
            &SweepSettings::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert_eq!(r.n_pairs, 3);
            if r.beta == 0.0 {
                assert_eq!(r.mean_abs_dev, 0.0);
                assert_eq!(r.normalized_dev, 0.0);
            } else {
                assert!(r.normalized_dev > 0.0);
            }
        }
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn pipeline_names_parse() {
        for p in [MotionPipeline::PhaseDiff, MotionPipeline::Flow] {
            assert_eq!(p.name().parse::<MotionPipeline>().unwrap(), p);
        }
        assert!("lk".parse::<MotionPipeline>().is_err());
    }
}
