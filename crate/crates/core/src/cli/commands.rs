use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;

use super::config::{RunConfig, SeedStream};
use crate::denoise::fista_denoise_traced;
use crate::error::{Error, Result};
use crate::eval::{collect_cell_samples, rmse_report, whitening_report, Histogram, RmseReport, WhiteningReport, KLD_BINS};
use crate::filter::{read_diagnostics, run_localization, write_diagnostics, DiagnosticRow, PoseBelief};
use crate::grid::{write_grd, write_pgm};
use crate::map::{build_global_map, build_lut_calibration, BuildReport, EdgeMap};
use crate::sim::csv_io::{load_scans, load_trajectory, save_scans, save_trajectory};
use crate::sim::{gaussian_perturbation, generate_trajectory, generate_world, survey, LaserRig, Scan};

pub const WORLD_FILE: &str = "world.grd";
pub const SCANS_FILE: &str = "scans.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EDGE_FILE: &str = "edge.grd";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    File::create(&path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn require_scans(path: &Path) -> Result<Vec<Scan>> {
    let scans = load_scans(path)?;
    if scans.is_empty() {
        return Err(Error::Input(format!("{} holds no scans", path.display())));
    }
    Ok(scans)
}

/// Generates the world, a trajectory through it and the scans along it.
pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.output_dir;
    create_dir(out)?;
    let world = generate_world(&cfg.world, cfg.world_seed())?;
    let rig = LaserRig::from_config(&cfg.rig, cfg.stream(SeedStream::Rig))?;
    let traj = generate_trajectory(&cfg.trajectory, cfg.stream(SeedStream::Trajectory))?;
    let scans: Vec<Scan> = survey(&world, &traj, &rig, cfg.stream(SeedStream::Scans)).collect();
    info!("simulated {} scans, {} returns", scans.len(), scans.iter().map(|s| s.returns.len()).sum::<usize>());
    write_grd(out.join(WORLD_FILE), &world.truth)?;
    write_pgm(out.join("world.pgm"), &world.truth)?;
    save_trajectory(out.join(TRAJECTORY_FILE), &traj)?;
    save_scans(out.join(SCANS_FILE), &scans)?;
    cfg.echo(out)
}

pub struct BuildMapInputs {
    pub scans: PathBuf,
    pub trajectory: PathBuf,
}

/// Builds the global edge map from a registered survey, optionally
/// denoising the fused gradients.
pub fn build_map(cfg: &RunConfig, inputs: &BuildMapInputs) -> Result<(EdgeMap, BuildReport)> {
    let scans = require_scans(&inputs.scans)?;
    let traj = load_trajectory(&inputs.trajectory)?;
    let out = &cfg.output_dir;
    create_dir(out)?;
    let (mut map, report) = build_global_map(cfg.map_geometry()?, &traj, &scans)?;
    info!(
        "map from {} scans, {} cells available, {} scans rejected",
        report.scans_used,
        map.available_count(),
        report.rejected.len()
    );
    if cfg.map.denoise {
        let (fused, trace) = fista_denoise_traced(&map.fused, &cfg.map.fista)?;
        info!(
            "denoised in {}/{} iterations",
            trace.objective_x.len(),
            trace.objective_y.len()
        );
        map = EdgeMap::from_fused(fused);
    }
    map.save(out.join(EDGE_FILE))?;
    write_pgm(out.join("edge.pgm"), &map.edge)?;
    write_text(
        out.join("build_report.json"),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    cfg.echo(out)?;
    Ok((map, report))
}

pub struct LocalizeInputs {
    pub map: PathBuf,
    pub scans: PathBuf,
    pub trajectory: PathBuf,
}

/// Runs the filter over a drive and writes per-step diagnostics.
pub fn localize(cfg: &RunConfig, inputs: &LocalizeInputs) -> Result<(Vec<DiagnosticRow>, RmseReport)> {
    let global = EdgeMap::load(&inputs.map)?;
    let scans = require_scans(&inputs.scans)?;
    let traj = load_trajectory(&inputs.trajectory)?;
    if scans.len() != traj.len() {
        return Err(Error::Input(format!(
            "{} scans but {} trajectory poses",
            scans.len(),
            traj.len()
        )));
    }
    let out = &cfg.output_dir;
    create_dir(out)?;
    let f = &cfg.filter;
    let gps = gaussian_perturbation(
        &traj.poses[0],
        (f.gps_sigma[0], f.gps_sigma[1], f.gps_sigma[2]),
        cfg.stream(SeedStream::Gps),
    );
    let initial = PoseBelief::from_sigmas(gps, f.init_sigma);
    let rows = run_localization(&global, &traj, scans, initial, *f)?;
    let report = rmse_report(&rows)?;
    info!("localization RMSE lon {:.2} cm, lat {:.2} cm", report.lon_cm, report.lat_cm);
    write_diagnostics(create(out.join(DIAGNOSTICS_FILE))?, &rows)?;
    write_text(out.join("rmse.txt"), &format!("{report}\n"))?;
    report.write_csv(create(out.join("rmse.csv"))?)?;
    cfg.echo(out)?;
    Ok((rows, report))
}

pub struct EvaluateInputs {
    /// Survey scans for the whitening report.
    pub scans: Option<PathBuf>,
    /// Localization diagnostics for the RMSE report.
    pub diagnostics: Option<PathBuf>,
    /// Add the look-up-table calibration column.
    pub compare_lut: bool,
}

/// Writes the whitening and RMSE reports for whichever inputs are given.
pub fn evaluate(
    cfg: &RunConfig,
    inputs: &EvaluateInputs,
) -> Result<(Option<WhiteningReport>, Option<RmseReport>)> {
    if inputs.scans.is_none() && inputs.diagnostics.is_none() {
        return Err(Error::Config("evaluate needs scans, diagnostics or both".into()));
    }
    let out = &cfg.output_dir;
    create_dir(out)?;
    let mut whitening = None;
    if let Some(path) = &inputs.scans {
        let scans = require_scans(path)?;
        let world = generate_world(&cfg.world, cfg.world_seed())?;
        let geometry = *world.geometry();
        let lut = inputs.compare_lut.then(|| {
            let lasers: BTreeSet<u16> = scans.iter().flat_map(|s| s.returns.iter().map(|r| r.laser)).collect();
            build_lut_calibration(geometry, &scans, lasers)
        });
        let report = whitening_report(&world, geometry, &scans, lut.as_ref(), &cfg.whitening)?;
        write_text(out.join("whitening.txt"), &format!("{report}\n"))?;
        report.write_csv(create(out.join("whitening.csv"))?)?;
        report.write_cells_csv(create(out.join("whitening_cells.csv"))?)?;
        dump_histograms(out, geometry, &scans, lut.as_ref(), &report)?;
        whitening = Some(report);
    }
    let mut rmse = None;
    if let Some(path) = &inputs.diagnostics {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let report = rmse_report(&read_diagnostics(file)?)?;
        write_text(out.join("rmse.txt"), &format!("{report}\n"))?;
        report.write_csv(create(out.join("rmse.csv"))?)?;
        rmse = Some(report);
    }
    cfg.echo(out)?;
    Ok((whitening, rmse))
}

/// Histograms of the best-sampled evaluated cell, one file per column.
fn dump_histograms(
    out: &Path,
    geometry: crate::grid::GridGeometry,
    scans: &[Scan],
    lut: Option<&crate::map::LutCalibration>,
    report: &WhiteningReport,
) -> Result<()> {
    let Some(best) = report.cells.iter().max_by_key(|c| (c.samples, std::cmp::Reverse(c.cell))) else {
        return Ok(());
    };
    let mut cells = collect_cell_samples(geometry, scans, lut);
    let Some(c) = cells.remove(&best.cell) else {
        return Ok(());
    };
    let mut columns = vec![("raw", c.raw), ("gradient_x", c.dx), ("gradient_y", c.dy)];
    if lut.is_some() {
        columns.push(("calibrated", c.calibrated));
    }
    for (name, samples) in columns {
        Histogram::new(&samples, KLD_BINS)?.write_csv(create(out.join(format!("hist_{name}.csv")))?)?;
    }
    Ok(())
}

/// Denoises a saved edge map and writes the result and objective traces.
pub fn denoise(cfg: &RunConfig, map_path: &Path) -> Result<EdgeMap> {
    let map = EdgeMap::load(map_path)?;
    let out = &cfg.output_dir;
    create_dir(out)?;
    let (fused, trace) = fista_denoise_traced(&map.fused, &cfg.map.fista)?;
    let denoised = EdgeMap::from_fused(fused);
    denoised.save(out.join("edge_denoised.grd"))?;
    write_pgm(out.join("edge_denoised.pgm"), &denoised.edge)?;
    let mut w = csv::Writer::from_writer(create(out.join("objective.csv"))?);
    w.write_record(["iteration", "objective_x", "objective_y"])?;
    let n = trace.objective_x.len().max(trace.objective_y.len());
    for k in 0..n {
        let cell = |v: &Vec<f64>| v.get(k).map(|x| x.to_string()).unwrap_or_default();
        w.write_record([k.to_string(), cell(&trace.objective_x), cell(&trace.objective_y)])?;
    }
    w.flush().map_err(|e| Error::Input(format!("writing objective trace: {e}")))?;
    cfg.echo(out)?;
    Ok(denoised)
}
