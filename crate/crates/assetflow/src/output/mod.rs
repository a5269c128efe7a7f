//! File emission: deterministic CSV and SVG renderers.

pub mod csv;
pub mod svg;

pub use csv::{diagram_csv, parse_csv, trajectory_csv, write_text};
pub use svg::{bifurcation_svg, trajectory_svg, TrajectoryPlot};
