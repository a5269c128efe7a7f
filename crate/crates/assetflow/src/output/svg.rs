//! Hand-emitted static SVG plots: fixed 960x600 viewport, 12 px axis
//! font, no timestamps, byte-deterministic for identical input.

use crate::bifurcation::BifurcationDiagram;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::simulate::Trajectory;
use std::fmt::Write as _;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Which view of a trajectory to plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryPlot {
    /// Prices per asset with dashed fundamental-value reference lines.
    Prices,
    /// Wealth fraction per group.
    Wealth,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-300);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    } * mag;
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut v = first;
    while v <= hi + 1e-9 * span {
        ticks.push(v);
        v += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1e5 || a < 1e-3 {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Svg {
        let mut body = String::new();
        writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        )
        .unwrap();
        writeln!(
            body,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
        )
        .unwrap();
        writeln!(
            body,
            "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            title
        )
        .unwrap();
        Svg { body }
    }

    fn axes(&mut self, frame: &Frame, x_label: &str, y_label: &str) {
        let x0 = MARGIN_LEFT;
        let x1 = WIDTH - MARGIN_RIGHT;
        let y0 = HEIGHT - MARGIN_BOTTOM;
        let y1 = MARGIN_TOP;
        writeln!(
            self.body,
            "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>",
            x1 - x0,
            y0 - y1
        )
        .unwrap();
        for t in nice_ticks(frame.x_min, frame.x_max, 7) {
            let x = frame.x(t);
            writeln!(
                self.body,
                "<line x1=\"{x:.2}\" y1=\"{y0:.1}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#000000\" stroke-width=\"1\"/>",
                y0 + 5.0
            )
            .unwrap();
            writeln!(
                self.body,
                "<text x=\"{x:.2}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
                y0 + 18.0,
                fmt_tick(t)
            )
            .unwrap();
        }
        for t in nice_ticks(frame.y_min, frame.y_max, 6) {
            let y = frame.y(t);
            writeln!(
                self.body,
                "<line x1=\"{:.1}\" y1=\"{y:.2}\" x2=\"{x0:.1}\" y2=\"{y:.2}\" stroke=\"#000000\" stroke-width=\"1\"/>",
                x0 - 5.0
            )
            .unwrap();
            writeln!(
                self.body,
                "<text x=\"{:.1}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>",
                x0 - 8.0,
                y + 4.0,
                fmt_tick(t)
            )
            .unwrap();
        }
        writeln!(
            self.body,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            (x0 + x1) / 2.0,
            HEIGHT - 14.0,
            x_label
        )
        .unwrap();
        writeln!(
            self.body,
            "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            y_label
        )
        .unwrap();
    }

    fn polyline(&mut self, frame: &Frame, xs: &[f64], ys: &[f64], color: &str, dashed: bool) {
        // Down-sample long series with a deterministic stride.
        let stride = (xs.len() / 2000).max(1);
        let mut points = String::new();
        for k in (0..xs.len()).step_by(stride) {
            write!(points, "{:.2},{:.2} ", frame.x(xs[k]), frame.y(ys[k])).unwrap();
        }
        if (xs.len() - 1) % stride != 0 {
            if let (Some(&x), Some(&y)) = (xs.last(), ys.last()) {
                write!(points, "{:.2},{:.2} ", frame.x(x), frame.y(y)).unwrap();
            }
        }
        let dash = if dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        writeln!(
            self.body,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            points.trim_end()
        )
        .unwrap();
    }

    fn hline(&mut self, frame: &Frame, y: f64, color: &str) {
        let yy = frame.y(y);
        writeln!(
            self.body,
            "<line x1=\"{:.1}\" y1=\"{yy:.2}\" x2=\"{:.1}\" y2=\"{yy:.2}\" stroke=\"{color}\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>",
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        )
        .unwrap();
    }

    fn vline(&mut self, frame: &Frame, x: f64, color: &str) {
        let xx = frame.x(x);
        writeln!(
            self.body,
            "<line x1=\"{xx:.2}\" y1=\"{:.1}\" x2=\"{xx:.2}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>",
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        )
        .unwrap();
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        for (k, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 16.0 + 16.0 * k as f64;
            let x = WIDTH - MARGIN_RIGHT - 150.0;
            writeln!(
                self.body,
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                y - 4.0,
                x + 22.0,
                y - 4.0
            )
            .unwrap();
            writeln!(
                self.body,
                "<text x=\"{:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>",
                x + 28.0
            )
            .unwrap();
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Render a trajectory plot (prices with dashed fundamental lines, or
/// wealth fractions).
pub fn trajectory_svg(traj: &Trajectory, spec: &ModelSpec, plot: TrajectoryPlot) -> Result<String> {
    if traj.is_empty() {
        return Err(Error::EmptyData("trajectory"));
    }
    let t0 = *traj.times.first().unwrap();
    let t1 = *traj.times.last().unwrap();
    match plot {
        TrajectoryPlot::Prices => {
            let mut svg = Svg::new("Price trajectories");
            let mut all = Vec::new();
            for i in 0..spec.n_assets() {
                all.extend(traj.prices(i));
            }
            all.extend(traj.fundamentals.iter().copied());
            let (lo, hi) = span(all.into_iter());
            let frame = Frame {
                x_min: t0,
                x_max: t1,
                y_min: lo,
                y_max: hi,
            };
            svg.axes(&frame, "t [days]", "price [currency/unit]");
            // One dashed reference per distinct fundamental value.
            let mut drawn: Vec<f64> = Vec::new();
            for &pa in &traj.fundamentals {
                if !drawn.iter().any(|d| (d - pa).abs() < 1e-12) {
                    svg.hline(&frame, pa, "#555555");
                    drawn.push(pa);
                }
            }
            let mut legend = Vec::new();
            for (i, a) in spec.assets.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                svg.polyline(&frame, &traj.times, &traj.prices(i), color, false);
                legend.push((format!("P.{}", a.name), color));
            }
            svg.legend(&legend);
            Ok(svg.finish())
        }
        TrajectoryPlot::Wealth => {
            let mut svg = Svg::new("Wealth fractions");
            let mut all = Vec::new();
            for j in 0..spec.n_groups() {
                all.extend(traj.wealth_series(j));
            }
            let (lo, hi) = span(all.into_iter());
            let frame = Frame {
                x_min: t0,
                x_max: t1,
                y_min: lo,
                y_max: hi,
            };
            svg.axes(&frame, "t [days]", "wealth fraction");
            let mut legend = Vec::new();
            for (j, g) in spec.groups.iter().enumerate() {
                let color = PALETTE[j % PALETTE.len()];
                svg.polyline(&frame, &traj.times, &traj.wealth_series(j), color, false);
                legend.push((format!("W.{}", g.name), color));
            }
            svg.legend(&legend);
            Ok(svg.finish())
        }
    }
}

/// Render the amplitude-vs-parameter bifurcation diagram with a vertical
/// marker at the eigenvalue threshold when present.
pub fn bifurcation_svg(diagram: &BifurcationDiagram, spec: &ModelSpec) -> Result<String> {
    if diagram.samples.is_empty() {
        return Err(Error::EmptyData("bifurcation diagram"));
    }
    let mut svg = Svg::new(&format!("Oscillation amplitude vs {}", diagram.parameter_path));
    let xs: Vec<f64> = diagram.samples.iter().map(|s| s.param_value).collect();
    let (x_lo, x_hi) = span(xs.iter().copied());
    let (y_lo, y_hi) = span(
        diagram
            .samples
            .iter()
            .flat_map(|s| s.amplitude.iter().copied())
            .chain(std::iter::once(0.0)),
    );
    let frame = Frame {
        x_min: x_lo,
        x_max: x_hi,
        y_min: y_lo.min(0.0),
        y_max: y_hi,
    };
    svg.axes(
        &frame,
        &diagram.parameter_path,
        "amplitude [currency, half peak-to-trough]",
    );
    if let Some(th) = diagram.threshold_eigen {
        svg.vline(&frame, th, "#333333");
    }
    let mut legend = Vec::new();
    for (i, a) in spec.assets.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ys: Vec<f64> = diagram
            .samples
            .iter()
            .map(|s| if s.failed.is_none() { s.amplitude[i] } else { f64::NAN })
            .collect();
        let clean: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| (*x, *y))
            .collect();
        let cx: Vec<f64> = clean.iter().map(|p| p.0).collect();
        let cy: Vec<f64> = clean.iter().map(|p| p.1).collect();
        svg.polyline(&frame, &cx, &cy, color, false);
        for (x, y) in &clean {
            writeln!(
                svg.body,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
                frame.x(*x),
                frame.y(*y)
            )
            .unwrap();
        }
        legend.push((format!("amplitude.{}", a.name), color));
    }
    if diagram.threshold_eigen.is_some() {
        legend.push(("eigen threshold".to_string(), "#333333"));
    }
    svg.legend(&legend);
    Ok(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::ScanSample;
    use crate::equilibrium::calibrate_shares;
    use crate::model::test_fixtures::oil_like_spec;
    use crate::model::State;
    use crate::simulate::{integrate, SimulateOpts};

    fn short_traj() -> (Trajectory, ModelSpec) {
        let spec = calibrate_shares(&oil_like_spec()).unwrap();
        let traj = integrate(
            &spec,
            &State::with_prices(&spec, &[82.0, 80.5]),
            20.0,
            SimulateOpts {
                sample_dt: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        (traj, spec)
    }

    #[test]
    fn price_plot_has_dashed_fundamental_line() {
        let (traj, spec) = short_traj();
        let svg = trajectory_svg(&traj, &spec, TrajectoryPlot::Prices).unwrap();
        assert!(svg.contains("stroke-dasharray=\"6 4\""));
        assert!(svg.contains("P.nigeria"));
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn identical_input_renders_identical_bytes() {
        let (traj, spec) = short_traj();
        let a = trajectory_svg(&traj, &spec, TrajectoryPlot::Wealth).unwrap();
        let b = trajectory_svg(&traj, &spec, TrajectoryPlot::Wealth).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bifurcation_plot_marks_threshold() {
        let spec = oil_like_spec();
        let diagram = BifurcationDiagram {
            parameter_path: "groups.china.q1[*]".into(),
            samples: (0..5)
                .map(|k| ScanSample {
                    param_value: 0.1 * k as f64,
                    max_re_lambda: -0.1 + 0.04 * k as f64,
                    amplitude: vec![k as f64, k as f64 * 0.95],
                    period: vec![None, None],
                    failed: None,
                })
                .collect(),
            threshold_eigen: Some(0.25),
            threshold_amplitude: None,
            initial_prices: vec![82.0, 80.5],
        };
        let svg = bifurcation_svg(&diagram, &spec).unwrap();
        assert!(svg.contains("stroke-dasharray=\"4 3\""), "threshold marker missing");
        assert!(svg.contains("eigen threshold"));
    }

    #[test]
    fn empty_diagram_is_an_error() {
        let spec = oil_like_spec();
        let diagram = BifurcationDiagram {
            parameter_path: "groups.china.q1[*]".into(),
            samples: vec![],
            threshold_eigen: None,
            threshold_amplitude: None,
            initial_prices: vec![],
        };
        assert!(matches!(
            bifurcation_svg(&diagram, &spec),
            Err(Error::EmptyData(_))
        ));
    }
}
