//! Golden-file check for the SVG renderer: the output for a fixed input
//! must stay byte-identical. Regenerate with UPDATE_GOLDEN=1 after an
//! intentional renderer change.

use assetflow::bifurcation::{BifurcationDiagram, ScanSample};
use assetflow::model::{AssetSpec, FlowMode, GroupSpec, ModelSpec, RateForm, RateSpec};
use assetflow::output::bifurcation_svg;
use std::path::PathBuf;

fn fixture_spec() -> ModelSpec {
    let mk_asset = |name: &str| AssetSpec {
        name: name.into(),
        fundamental_price: 80.0,
        adjustment_timescale: 1.0,
    };
    let mk_group = |name: &str| GroupSpec {
        name: name.into(),
        cash: 1.0e6,
        shares: vec![100.0, 100.0],
        trend_magnitude: vec![0.0, 0.0],
        value_magnitude: vec![0.0, 0.0],
        trend_timescale: vec![0.1, 0.1],
        value_timescale: vec![0.1, 0.1],
        rates: RateSpec::zeros(RateForm::TrendTanh, 2),
    };
    ModelSpec {
        assets: vec![mk_asset("nigeria"), mk_asset("libya")],
        groups: vec![mk_group("usa"), mk_group("china")],
        flow_mode: FlowMode::FixedEndowment,
    }
}

fn fixture_diagram() -> BifurcationDiagram {
    BifurcationDiagram {
        parameter_path: "groups.china.q1[*]".into(),
        samples: (0..9)
            .map(|k| {
                let q = 0.1 * k as f64;
                let amp = if q > 0.33 { 40.0 * (q - 0.33).sqrt() } else { 0.0 };
                ScanSample {
                    param_value: q,
                    max_re_lambda: -0.1 + 0.6 * (q - 0.33),
                    amplitude: vec![amp, amp * 0.97],
                    period: vec![None, None],
                    failed: None,
                }
            })
            .collect(),
        threshold_eigen: Some(0.33),
        threshold_amplitude: Some(0.335),
        initial_prices: vec![82.0, 80.5],
    }
}

#[test]
fn bifurcation_svg_matches_golden_bytes() {
    let rendered = bifurcation_svg(&fixture_diagram(), &fixture_spec()).unwrap();
    let golden_path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", "bifurcation.svg"]
        .iter()
        .collect();
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        std::fs::create_dir_all(golden_path.parent().unwrap()).unwrap();
        std::fs::write(&golden_path, &rendered).unwrap();
        panic!("golden file regenerated; rerun without UPDATE_GOLDEN");
    }
    let golden = std::fs::read_to_string(&golden_path)
        .expect("golden file missing; run with UPDATE_GOLDEN=1 to create it");
    assert_eq!(rendered, golden, "SVG output drifted from the golden file");
}
