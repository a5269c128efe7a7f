//! Adaptive Dormand-Prince 5(4) integrator with fourth-order dense output.
//!
//! Generic over the right-hand side so the solver can be tested on systems
//! with known solutions independently of the market model.

use crate::error::{Error, Result};

// Dormand-Prince tableau. k7 = f(t+h, y_new) provides FSAL.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense output weights for the fifth interpolation coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_steps: 10_000_000,
            h_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

/// Dense interpolation coefficients for one accepted step.
struct DenseSegment {
    t0: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOpts) -> f64 {
    let n = err.len() as f64;
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / n).sqrt()
}

/// Classical starting-step heuristic based on the scale of y and f.
fn initial_step(f0: &[f64], y0: &[f64], t_end: f64, opts: &OdeOpts) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..y0.len() {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs();
        d0 = d0.max((y0[i] / sc).abs());
        d1 = d1.max((f0[i] / sc).abs());
    }
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0.min(t_end).min(opts.h_max)
}

/// Integrate y' = f(t, y) from 0 to `t_end`, invoking `on_sample` at every
/// multiple of `sample_dt` (including t = 0 and t = t_end) with dense
/// (fourth-order) interpolated values.
pub fn integrate_dense<F, S>(
    mut f: F,
    y0: &[f64],
    t_end: f64,
    sample_dt: f64,
    opts: OdeOpts,
    mut on_sample: S,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    S: FnMut(f64, &[f64]) -> Result<()>,
{
    assert!(t_end > 0.0 && sample_dt > 0.0);
    let dim = y0.len();
    let mut stats = OdeStats::default();
    let mut t = 0.0f64;
    let mut y = y0.to_vec();

    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; dim]);
    f(t, &y, &mut k[0]).map_err(|e| at_time(e, t))?;
    stats.rhs_evals += 1;

    on_sample(0.0, &y)?;
    let mut next_sample = 1usize; // multiples of sample_dt emitted so far

    let mut h = initial_step(&k[0], &y, t_end, &opts);
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut sample_buf = vec![0.0; dim];

    while t < t_end {
        if stats.steps_accepted + stats.steps_rejected > opts.max_steps {
            return Err(Error::NoConvergence {
                what: "ODE step budget exhausted",
                iters: opts.max_steps,
            });
        }
        if h < 1e-14 * t_end.max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last_step = h >= t_end - t;
        if last_step {
            h = t_end - t;
        }
        h = h.min(opts.h_max);

        // Stages 2..7; k[0] is fresh from FSAL.
        let mut failed = None;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..s {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * k[j][i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let stage_k = &mut tail[0];
            debug_assert_eq!(head.len(), s);
            if let Err(e) = f(t + C[s] * h, &y_stage, stage_k) {
                failed = Some((e, t + C[s] * h));
                break;
            }
            stats.rhs_evals += 1;
        }
        if let Some((e, te)) = failed {
            // A stage left the model's valid region; retry with a smaller
            // step before giving up.
            stats.steps_rejected += 1;
            h *= 0.25;
            if h < 1e-14 * t_end.max(1.0) {
                return Err(at_time(e, te));
            }
            continue;
        }

        for i in 0..dim {
            let mut acc = 0.0;
            let mut eacc = 0.0;
            for s in 0..7 {
                if B5[s] != 0.0 {
                    acc += B5[s] * k[s][i];
                }
                if E[s] != 0.0 {
                    eacc += E[s] * k[s][i];
                }
            }
            y_new[i] = y[i] + h * acc;
            err[i] = h * eacc;
        }
        let norm = error_norm(&err, &y, &y_new, &opts);
        if norm <= 1.0 {
            // k7 at (t + h, y_new) doubles as the next step's k1 (FSAL).
            if let Err(e) = f(t + h, &y_new, &mut k[6]) {
                stats.steps_rejected += 1;
                h *= 0.25;
                if h < 1e-14 * t_end.max(1.0) {
                    return Err(at_time(e, t + h));
                }
                continue;
            }
            stats.rhs_evals += 1;

            // Dense output coefficients for this step.
            let mut cont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
            for i in 0..dim {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut acc = 0.0;
                for s in 0..7 {
                    if D[s] != 0.0 {
                        acc += D[s] * k[s][i];
                    }
                }
                cont[4][i] = h * acc;
            }
            let seg = DenseSegment { t0: t, h, cont };

            let t_new = if last_step { t_end } else { t + h };
            loop {
                let ts = next_sample as f64 * sample_dt;
                if ts > t_new + 1e-9 * sample_dt || ts > t_end {
                    break;
                }
                seg.eval_into(ts.min(t_new), &mut sample_buf);
                on_sample(ts, &sample_buf)?;
                next_sample += 1;
            }

            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.steps_accepted += 1;

            let fac = if norm == 0.0 {
                10.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 10.0)
            };
            h *= fac;
        } else {
            stats.steps_rejected += 1;
            h *= (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
        }
    }

    // Emit the final time if the sample grid did not land on it.
    let last_emitted = (next_sample - 1) as f64 * sample_dt;
    if (t_end - last_emitted) > 1e-9 * sample_dt {
        on_sample(t_end, &y)?;
    }
    Ok(stats)
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::DegenerateMarket { asset, .. } => Error::DegenerateMarket {
            asset,
            time: Some(t),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut samples = Vec::new();
        integrate_dense(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            &[1.0],
            10.0,
            0.5,
            OdeOpts::default(),
            |t, y| {
                samples.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(samples.len(), 21);
        for (t, v) in samples {
            assert_relative_eq!(v, (-t).exp(), max_relative = 1e-7, epsilon = 1e-9);
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output_accuracy() {
        let mut worst: f64 = 0.0;
        integrate_dense(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            &[1.0, 0.0],
            50.0,
            0.1,
            OdeOpts::default(),
            |t, y| {
                worst = worst.max((y[0] - t.cos()).abs());
                Ok(())
            },
        )
        .unwrap();
        assert!(worst < 1e-6, "dense output error {worst:.3e}");
    }

    #[test]
    fn tightening_tolerance_reduces_error_by_orders() {
        let run = |rel: f64| {
            let mut last = 0.0;
            integrate_dense(
                |t, y, dy| {
                    dy[0] = y[0] * (t).cos();
                    Ok(())
                },
                &[1.0],
                20.0,
                20.0,
                OdeOpts {
                    rel_tol: rel,
                    abs_tol: rel * 1e-2,
                    ..OdeOpts::default()
                },
                |_t, y| {
                    last = y[0];
                    Ok(())
                },
            )
            .unwrap();
            (last - (20.0f64).sin().exp()).abs()
        };
        let coarse = run(1e-6);
        let fine = run(1e-10);
        assert!(fine < coarse, "refinement failed: {coarse:.3e} -> {fine:.3e}");
        assert!(fine < 1e-8);
    }

    #[test]
    fn rhs_failure_reports_time() {
        let res = integrate_dense(
            |t, y, dy| {
                if t > 1.0 {
                    return Err(Error::DegenerateMarket {
                        asset: 0,
                        time: None,
                    });
                }
                dy[0] = y[0];
                Ok(())
            },
            &[1.0],
            5.0,
            1.0,
            OdeOpts::default(),
            |_, _| Ok(()),
        );
        match res {
            Err(Error::DegenerateMarket { time: Some(t), .. }) => assert!(t > 1.0),
            other => panic!("expected degenerate market with time, got {other:?}"),
        }
    }
}
