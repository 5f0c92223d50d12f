use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trafficgen::{generate, ScenarioSpec};

use super::{process, EngineConfig, EngineError, ProcessOptions, RunMetrics};

/// Sketch dimensions to evaluate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid { depths: vec![2, 3, 4, 5], widths: vec![100, 200, 500] }
    }
}

impl SweepGrid {
    /// Grid points in output order: widths outermost.
    pub fn points(&self) -> Vec<(usize, usize)> {
        self.widths.iter().flat_map(|&w| self.depths.iter().map(move |&d| (d, w))).collect()
    }

    fn validate(&self) -> Result<(), EngineError> {
        if self.depths.is_empty() || self.widths.is_empty() {
            return Err(EngineError::InvalidConfig("sweep grid is empty".into()));
        }
        if self.depths.contains(&0) || self.widths.contains(&0) {
            return Err(EngineError::InvalidConfig("sweep dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Metrics for one grid point, averaged over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub width: usize,
    pub repeats: usize,
    pub asr: f64,
    pub fp_rate: f64,
    pub fp_min: f64,
    pub fp_max: f64,
    pub attack_forwarded: f64,
    pub truncated: f64,
    pub dropped: f64,
    /// Mean over the repeats that flagged anything at all.
    pub first_flag_index: Option<f64>,
}

impl SweepRow {
    fn aggregate(depth: usize, width: usize, runs: &[RunMetrics]) -> Self {
        let k = runs.len() as f64;
        let mean = |f: &dyn Fn(&RunMetrics) -> f64| runs.iter().map(f).sum::<f64>() / k;
        let flags: Vec<f64> = runs.iter().filter_map(|m| m.first_flag_index.map(|i| i as f64)).collect();
        SweepRow {
            depth,
            width,
            repeats: runs.len(),
            asr: mean(&|m| m.asr),
            fp_rate: mean(&|m| m.fp_rate),
            fp_min: runs.iter().map(|m| m.fp_rate).fold(f64::INFINITY, f64::min),
            fp_max: runs.iter().map(|m| m.fp_rate).fold(0.0, f64::max),
            attack_forwarded: mean(&|m| m.attack_forwarded as f64),
            truncated: mean(&|m| m.truncated as f64),
            dropped: mean(&|m| m.dropped as f64),
            first_flag_index: (!flags.is_empty()).then(|| flags.iter().sum::<f64>() / flags.len() as f64),
        }
    }
}

/// Runs the scenario `repeats` times per grid point. Repeat `k` uses
/// scenario seed `scenario.seed + k` and sketch seed `base.seed + k`, so
/// every grid point sees the same traffic within a repeat.
pub fn sweep(
    base: &EngineConfig,
    grid: &SweepGrid,
    scenario: &ScenarioSpec,
    repeats: usize,
) -> Result<Vec<SweepRow>, EngineError> {
    grid.validate()?;
    if repeats == 0 {
        return Err(EngineError::InvalidConfig("repeats must be at least 1".into()));
    }
    base.validate()?;
    let points = grid.points();
    let per_repeat: Vec<Vec<RunMetrics>> = (0..repeats as u64)
        .into_par_iter()
        .map(|k| {
            let spec = scenario.with_seed(scenario.seed.wrapping_add(k));
            let stream = generate(&spec)?;
            let opts = ProcessOptions {
                labels: Some(&stream.labels),
                intended_attack: Some(stream.intended_attack),
                ..Default::default()
            };
            points
                .iter()
                .map(|&(d, w)| {
                    let cfg = EngineConfig { seed: base.seed.wrapping_add(k), ..base.with_dimensions(d, w) };
                    Ok(process(&cfg, &stream.packets, opts)?.metrics)
                })
                .collect::<Result<Vec<_>, EngineError>>()
        })
        .collect::<Result<_, _>>()?;

    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &(d, w))| {
            let runs: Vec<RunMetrics> = per_repeat.iter().map(|r| r[i].clone()).collect();
            SweepRow::aggregate(d, w, &runs)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trafficgen::ScenarioKind;

    #[test]
    fn grid_order_and_validation() {
        let g = SweepGrid { depths: vec![2, 3], widths: vec![100, 500] };
        assert_eq!(g.points(), [(2, 100), (3, 100), (2, 500), (3, 500)]);
        assert!(SweepGrid { depths: vec![], widths: vec![1] }.validate().is_err());
        assert!(SweepGrid { depths: vec![0], widths: vec![1] }.validate().is_err());
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let mut spec = ScenarioSpec::new(ScenarioKind::Interleaved, 3);
        spec.attack_count = 500;
        spec.noise_count = 200;
        let grid = SweepGrid { depths: vec![2, 5], widths: vec![100] };
        let a = sweep(&EngineConfig::default(), &grid, &spec, 3).unwrap();
        let b = sweep(&EngineConfig::default(), &grid, &spec, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        for row in &a {
            assert_eq!(row.repeats, 3);
            assert!(row.fp_min <= row.fp_rate && row.fp_rate <= row.fp_max);
            assert!(row.asr < 0.02);
        }
    }
}
