//! Post-processing of trajectories: oscillation amplitude and period,
//! wealth-fraction statistics.

use crate::error::{Error, Result};
use crate::simulate::Trajectory;

/// Fraction of the fundamental price below which the retained signal
/// counts as converged.
pub const AMPLITUDE_FLOOR_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct OscillationStats {
    /// Half peak-to-trough of the retained price signal (currency).
    pub amplitude: f64,
    /// Mean spacing of upward mean-crossings (days); present only when at
    /// least two full cycles were detected.
    pub period: Option<f64>,
    /// Amplitude below the floor (0.1% of the fundamental).
    pub converged: bool,
    /// Mean of the retained signal when converged.
    pub asymptote: Option<f64>,
}

/// Extract oscillation statistics for one asset, discarding the first
/// `transient_fraction` of the trajectory.
pub fn oscillation_stats(
    traj: &Trajectory,
    asset_i: usize,
    transient_fraction: f64,
) -> Result<OscillationStats> {
    if traj.is_empty() {
        return Err(Error::EmptyData("trajectory"));
    }
    assert!(
        (0.0..=0.9).contains(&transient_fraction),
        "transient fraction must lie in [0, 0.9]"
    );
    let start = traj.post_transient_start(transient_fraction);
    let times = &traj.times[start..];
    let signal: Vec<f64> = traj.states[start..]
        .iter()
        .map(|s| s.price(asset_i))
        .collect();
    if signal.is_empty() {
        return Err(Error::TooShort("no samples past the transient".into()));
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &signal {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let amplitude = 0.5 * (hi - lo);
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let floor = AMPLITUDE_FLOOR_FRACTION * traj.fundamentals[asset_i];
    let converged = amplitude < floor;

    // Upward crossings of the retained mean, linearly interpolated.
    let mut crossings = Vec::new();
    for k in 1..signal.len() {
        if signal[k - 1] < mean && signal[k] >= mean {
            let f = (mean - signal[k - 1]) / (signal[k] - signal[k - 1]);
            crossings.push(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    let period = if crossings.len() >= 3 {
        let spans: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
        let p = spans.iter().sum::<f64>() / spans.len() as f64;
        let window = times.last().unwrap() - times.first().unwrap();
        if window < 2.0 * p {
            return Err(Error::TooShort(format!(
                "window of {window:.1} days holds fewer than two {p:.1}-day cycles"
            )));
        }
        Some(p)
    } else {
        None
    };

    Ok(OscillationStats {
        amplitude,
        period,
        converged,
        asymptote: converged.then_some(mean),
    })
}

/// Histogram with uniform bins over [min, max].
#[derive(Debug, Clone)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct WealthStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

/// Wealth-fraction summary for one group over the post-transient window.
pub fn wealth_stats(traj: &Trajectory, group_j: usize, transient_fraction: f64) -> Result<WealthStats> {
    if traj.is_empty() {
        return Err(Error::EmptyData("trajectory"));
    }
    let start = traj.post_transient_start(transient_fraction);
    let series: Vec<f64> = traj.wealth[start..].iter().map(|w| w[group_j]).collect();
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &series {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // Degenerate (constant) series collapse to a single bin.
    let histogram = if std < 1e-12 {
        Histogram {
            min: lo,
            max: hi,
            counts: vec![series.len()],
        }
    } else {
        let bins = 50usize;
        let mut counts = vec![0usize; bins];
        let width = (hi - lo) / bins as f64;
        for &v in &series {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram {
            min: lo,
            max: hi,
            counts,
        }
    };
    Ok(WealthStats {
        mean,
        std,
        min: lo,
        max: hi,
        histogram,
    })
}
