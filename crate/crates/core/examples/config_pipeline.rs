//! The command-line pipeline driven from code: simulate, build the map,
//! localize and evaluate, all from one JSON configuration.
//!
//!     cargo run --release --example config_pipeline -- [out_dir]

use gridloc::cli::{self, BuildMapInputs, EvaluateInputs, LocalizeInputs, RunConfig};

fn main() -> gridloc::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir().join("gridloc-pipeline").display().to_string()
    });
    let cfg = RunConfig::from_json(&format!(
        r#"{{
            "seed": 11,
            "output_dir": {out:?},
            "world": {{"width_m": 40.0, "height_m": 40.0}},
            "rig": {{"laser_count": 16, "gain_range": [0.5, 1.5], "offset_range": [-20.0, 20.0], "noise_sigma": 3.0}},
            "trajectory": {{"kind": "loop", "loop_radius_m": 8.0, "speed_mps": 3.0, "duration_s": 30.0,
                            "rate_hz": 5.0, "start": {{"x": 20.0, "y": 12.0, "h": 0.0}}}}
        }}"#
    ))?;
    let dir = &cfg.output_dir;

    cli::simulate(&cfg)?;
    let (map, report) = cli::build_map(
        &cfg,
        &BuildMapInputs { scans: dir.join(cli::SCANS_FILE), trajectory: dir.join(cli::TRAJECTORY_FILE) },
    )?;
    println!("map: {} scans, {} cells", report.scans_used, map.available_count());

    // a slow tight loop gives the whitening report enough returns per cell;
    // the same drive doubles as the localization run
    let (_, rmse) = cli::localize(
        &cfg,
        &LocalizeInputs {
            map: dir.join(cli::EDGE_FILE),
            scans: dir.join(cli::SCANS_FILE),
            trajectory: dir.join(cli::TRAJECTORY_FILE),
        },
    )?;
    println!("{rmse}");

    let (whitening, _) = cli::evaluate(
        &cfg,
        &EvaluateInputs { scans: Some(dir.join(cli::SCANS_FILE)), diagnostics: None, compare_lut: true },
    )?;
    if let Some(w) = whitening {
        println!("{w}");
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
