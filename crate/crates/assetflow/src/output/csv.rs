//! CSV emission for trajectories and bifurcation diagrams.
//!
//! Columns are named with asset/group identifiers, floats carry 17
//! significant digits (bit-exact round trips), ordering is deterministic.

use crate::bifurcation::BifurcationDiagram;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::simulate::Trajectory;
use std::fmt::Write as _;
use std::path::Path;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a trajectory as CSV text with columns
/// `t, P.<asset>..., zeta1.<asset>.<group>..., zeta2..., W.<group>...`.
pub fn trajectory_csv(traj: &Trajectory, spec: &ModelSpec) -> Result<String> {
    if traj.is_empty() {
        return Err(Error::EmptyData("trajectory"));
    }
    let (m, n) = (spec.n_assets(), spec.n_groups());
    let mut out = String::new();
    out.push('t');
    for a in &spec.assets {
        write!(out, ",P.{}", a.name).unwrap();
    }
    for zeta in ["zeta1", "zeta2"] {
        for a in &spec.assets {
            for g in &spec.groups {
                write!(out, ",{zeta}.{}.{}", a.name, g.name).unwrap();
            }
        }
    }
    for g in &spec.groups {
        write!(out, ",W.{}", g.name).unwrap();
    }
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        let st = &traj.states[k];
        out.push_str(&fmt_f64(*t));
        for i in 0..m {
            out.push(',');
            out.push_str(&fmt_f64(st.price(i)));
        }
        for i in 0..m {
            for j in 0..n {
                out.push(',');
                out.push_str(&fmt_f64(st.zeta1(i, j)));
            }
        }
        for i in 0..m {
            for j in 0..n {
                out.push(',');
                out.push_str(&fmt_f64(st.zeta2(i, j)));
            }
        }
        for j in 0..n {
            out.push(',');
            out.push_str(&fmt_f64(traj.wealth[k][j]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parsed trajectory CSV: header names plus rows of values.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or(Error::EmptyData("csv"))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(header.len());
        for field in line.split(',') {
            let v: f64 = field.parse().map_err(|e| Error::Parse {
                path: format!("csv line {}", lineno + 2),
                message: format!("{e}: `{field}`"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Render a bifurcation diagram as CSV. Threshold metadata rides in `#`
/// comment lines ahead of the header.
pub fn diagram_csv(diagram: &BifurcationDiagram, spec: &ModelSpec) -> Result<String> {
    if diagram.samples.is_empty() {
        return Err(Error::EmptyData("bifurcation diagram"));
    }
    let mut out = String::new();
    writeln!(out, "# parameter_path = {}", diagram.parameter_path).unwrap();
    writeln!(
        out,
        "# initial_prices = {}",
        diagram
            .initial_prices
            .iter()
            .map(|p| fmt_f64(*p))
            .collect::<Vec<_>>()
            .join(" ")
    )
    .unwrap();
    writeln!(out, "# amplitude_unit = absolute currency (half peak-to-trough)").unwrap();
    if let Some(t) = diagram.threshold_eigen {
        writeln!(out, "# threshold_eigen = {}", fmt_f64(t)).unwrap();
    }
    if let Some(t) = diagram.threshold_amplitude {
        writeln!(out, "# threshold_amplitude = {}", fmt_f64(t)).unwrap();
    }
    out.push_str("param,max_re_lambda");
    for a in &spec.assets {
        write!(out, ",amplitude.{}", a.name).unwrap();
    }
    for a in &spec.assets {
        write!(out, ",period.{}", a.name).unwrap();
    }
    out.push_str(",status\n");
    for s in &diagram.samples {
        out.push_str(&fmt_f64(s.param_value));
        out.push(',');
        out.push_str(&fmt_f64(s.max_re_lambda));
        for a in &s.amplitude {
            out.push(',');
            out.push_str(&fmt_f64(*a));
        }
        for p in &s.period {
            out.push(',');
            match p {
                Some(v) => out.push_str(&fmt_f64(*v)),
                None => out.push_str("nan"),
            }
        }
        match &s.failed {
            Some(msg) => writeln!(out, ",failed: {}", msg.replace(',', ";")).unwrap(),
            None => out.push_str(",ok\n"),
        }
    }
    Ok(out)
}

/// Write rendered text to a file, with path context on failure. The file
/// is only created once rendering has succeeded.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::calibrate_shares;
    use crate::model::test_fixtures::oil_like_spec;
    use crate::model::State;
    use crate::simulate::{integrate, SimulateOpts};

    #[test]
    fn header_layout_and_bit_exact_round_trip() {
        let spec = calibrate_shares(&oil_like_spec()).unwrap();
        let initial = State::with_prices(&spec, &[82.0, 80.5]);
        let traj = integrate(
            &spec,
            &initial,
            5.0,
            SimulateOpts {
                sample_dt: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let text = trajectory_csv(&traj, &spec).unwrap();
        let first_line = text.lines().next().unwrap();
        assert_eq!(
            first_line,
            "t,P.nigeria,P.libya,\
             zeta1.nigeria.usa,zeta1.nigeria.china,zeta1.libya.usa,zeta1.libya.china,\
             zeta2.nigeria.usa,zeta2.nigeria.china,zeta2.libya.usa,zeta2.libya.china,\
             W.usa,W.china"
        );
        let (header, rows) = parse_csv(&text).unwrap();
        assert_eq!(header.len(), 13);
        assert_eq!(rows.len(), traj.len());
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row[0].to_bits(), traj.times[k].to_bits());
            assert_eq!(row[1].to_bits(), traj.states[k].price(0).to_bits());
            assert_eq!(row[12].to_bits(), traj.wealth[k][1].to_bits());
        }
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let spec = oil_like_spec();
        let traj = Trajectory {
            times: vec![],
            states: vec![],
            wealth: vec![],
            stats: Default::default(),
            fundamentals: vec![80.0, 80.0],
        };
        assert!(matches!(
            trajectory_csv(&traj, &spec),
            Err(Error::EmptyData(_))
        ));
    }
}
