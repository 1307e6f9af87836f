//! Command-line front end: `simulate`, `reconstruct`, `figures`, `verify`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::config::{parse_apodization, parse_grid, Mode, RunConfig, StateSpec};
use crate::error::{Result, TomoError};
use crate::io;
use crate::states::{exact_wigner, SystemState, WignerGrid};
use crate::tomography::{build_sinogram, error_report, inverse_radon_wigner, reconstruct_density_matrix, Sinogram, SinogramMode};
use crate::transit::{transit_sinogram, TransitParams};
use crate::verify::{arthurs_kelly_distribution, run_ledger, OracleConfig};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "REMOTE_TOMO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "remote-tomo", version, about = "Remote quantum-state tomography through apparatus-mode measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a sinogram and write `sinogram.csv`.
    Simulate(RunArgs),
    /// Compute a sinogram and invert it to `wigner.csv` and `density_matrix.csv`.
    Reconstruct(RunArgs),
    /// Emit the figure bundles: Wigner surface, radial profiles, position densities.
    Figures(RunArgs),
    /// Run the oracle ledger and emit it as JSON.
    Verify(VerifyArgs),
}

/// Flags override values read from `--config`.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Oscillator eigenstate index.
    #[arg(long, conflicts_with_all = ["displaced", "wavefunction"])]
    pub fock: Option<usize>,
    /// Coherent state centre as `q0,p0`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "wavefunction")]
    pub displaced: Option<String>,
    /// `q,re,im` CSV on a uniform grid.
    #[arg(long)]
    pub wavefunction: Option<PathBuf>,
    /// `exact` or `simulated`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Apparatus width; `figures` takes several.
    #[arg(long, num_args = 1..)]
    pub b1: Vec<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    #[arg(long)]
    pub angles: Option<usize>,
    /// `min,max,count`.
    #[arg(long, allow_hyphen_values = true)]
    pub u_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub w_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dm_grid: Option<String>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    /// `none` or `cosine`.
    #[arg(long)]
    pub apodization: Option<String>,
    /// Transit phase of the apparatus photons.
    #[arg(long)]
    pub omega_tau: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Oracle resolution relative to the production grids (at least 2).
    #[arg(long, default_value_t = 2)]
    pub multiplier: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl RunArgs {
    /// Defaults, then the config file, then flags. `figures` keeps the
    /// whole `--b1` list for itself.
    pub fn resolve(&self, multi_b1: bool) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(n) = self.fock {
            c.state = StateSpec::Fock(n);
        }
        if let Some(d) = &self.displaced {
            c.state = format!("displaced:{d}").parse()?;
        }
        if let Some(path) = &self.wavefunction {
            c.state = StateSpec::File(path.clone());
        }
        if let Some(m) = &self.mode {
            c.mode = m.parse()?;
        }
        match (self.b1.as_slice(), multi_b1) {
            ([], _) => {}
            ([b1], false) => c.b1 = *b1,
            (_, false) => return Err(TomoError::Config("--b1 takes one value here".into())),
            ([first, ..], true) => c.b1 = *first,
        }
        if self.b2.is_some() {
            c.b2 = self.b2;
        }
        if let Some(n) = self.angles {
            c.angle_count = n;
        }
        for (flag, target) in [(&self.u_grid, &mut c.u_grid), (&self.w_grid, &mut c.w_grid), (&self.dm_grid, &mut c.dm_grid)] {
            if let Some(text) = flag {
                *target = parse_grid("grid", text)?;
            }
        }
        if self.eta_max.is_some() {
            c.eta_max = self.eta_max;
        }
        if let Some(a) = &self.apodization {
            c.apodization = parse_apodization(a)?;
        }
        if let Some(wt) = self.omega_tau {
            c.omega_tau = wt;
        }
        if let Some(o) = &self.output {
            c.output = o.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`] if set.
pub fn init_threads() -> Result<()> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = text.trim().parse().map_err(|_| TomoError::Config(format!("{THREADS_ENV} = {text} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| TomoError::Config(format!("thread pool: {e}")))
}

/// Runs one subcommand. `Ok(1)` means the oracle ledger had failures.
pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Simulate(args) => {
            let c = args.resolve(false)?;
            let out = prepare_output(&c)?;
            let state = c.build_state()?;
            let sino = sinogram(&c, &state)?;
            write_csv(&out.join("sinogram.csv"), |w| io::write_sinogram(w, &sino))?;
            Ok(0)
        }
        Command::Reconstruct(args) => reconstruct(&args.resolve(false)?),
        Command::Figures(args) => {
            let c = args.resolve(true)?;
            let b1s = if args.b1.is_empty() { vec![0.1, 0.3, FRAC_1_SQRT_2] } else { args.b1.clone() };
            figures(&c, &b1s)
        }
        Command::Verify(args) => {
            let config = OracleConfig::new(args.multiplier)?;
            let ledger = run_ledger(&config)?;
            let json = serde_json::to_string_pretty(&ledger).map_err(|e| TomoError::Io(e.to_string()))?;
            println!("{json}");
            if let Some(dir) = &args.output {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("verify.json"), format!("{json}\n"))?;
            }
            Ok(if ledger.iter().all(|e| e.pass) { 0 } else { 1 })
        }
    }
}

fn prepare_output(c: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&c.output)?;
    std::fs::write(c.output.join("run.conf"), c.to_text())?;
    Ok(c.output.clone())
}

fn write_csv(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = io::create(path)?;
    body(&mut w)?;
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

/// Exact rows ignore transit: free evolution acts on the apparatus only.
fn sinogram(c: &RunConfig, state: &SystemState) -> Result<Sinogram> {
    let angles = c.angles();
    match c.sinogram_mode()? {
        SinogramMode::Simulated(prep) if c.omega_tau != 0.0 => {
            transit_sinogram(state, &prep, &angles, &c.u_grid, TransitParams::from_phase(c.omega_tau)?)
        }
        mode => build_sinogram(state, mode, &angles, &c.u_grid),
    }
}

#[derive(Debug, Serialize)]
struct ReconstructionSummary {
    mode: String,
    b1: f64,
    wigner_peak: f64,
    wigner_min: f64,
    wigner_integral: f64,
    wigner_max_abs_error: f64,
    wigner_l2_error: f64,
    density_matrix_trace: f64,
    density_matrix_fidelity: f64,
    density_matrix_hermiticity_defect: f64,
}

fn reconstruct(c: &RunConfig) -> Result<i32> {
    let out = prepare_output(c)?;
    let state = c.build_state()?;
    let sino = sinogram(c, &state)?;
    info!("inverting {} rows", sino.angles().len());
    let w = inverse_radon_wigner(&sino, &c.w_grid, &c.w_grid, &c.filter())?;
    let rho = reconstruct_density_matrix(&sino, &c.dm_grid)?;
    let exact = exact_wigner(&state, &c.w_grid, &c.w_grid)?;
    let report = error_report(&exact, &w)?;
    write_csv(&out.join("wigner.csv"), |o| io::write_wigner(o, &w))?;
    write_csv(&out.join("density_matrix.csv"), |o| io::write_density_matrix(o, &rho))?;
    let summary = ReconstructionSummary {
        mode: c.mode.to_string(),
        b1: c.b1,
        wigner_peak: w.max_value(),
        wigner_min: w.min_value(),
        wigner_integral: w.integral(),
        wigner_max_abs_error: report.max_abs,
        wigner_l2_error: report.l2,
        density_matrix_trace: rho.trace(),
        density_matrix_fidelity: rho.fidelity(&state),
        density_matrix_hermiticity_defect: rho.hermiticity_defect(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| TomoError::Io(e.to_string()))?;
    std::fs::write(out.join("summary.json"), format!("{json}\n"))?;
    Ok(0)
}

/// Apparatus reconstructions for each `b1`, with transit if configured.
fn simulated_wigners(c: &RunConfig, state: &SystemState, b1s: &[f64]) -> Result<Vec<WignerGrid>> {
    b1s.iter()
        .map(|&b1| {
            info!("reconstructing at b1 = {b1}");
            let cfg = RunConfig { b1, b2: None, mode: Mode::Simulated, ..c.clone() };
            let sino = sinogram(&cfg, state)?;
            inverse_radon_wigner(&sino, &c.w_grid, &c.w_grid, &c.filter())
        })
        .collect()
}

fn label(b1: f64) -> String {
    format!("reconstructed_b1_{b1}")
}

/// `fig2_wigner.csv`, `fig3_radial.csv` and `fig4_position.csv`.
///
/// Curves: (a) exact, (b) first `b1`, (c) = (b) - (a), (d) second `b1`,
/// (e) the balanced `b1 = 1/sqrt2` reconstruction (taken from the list when a
/// value within 1e-3 of it is given). Remaining `b1` values follow, and the
/// last column is the directly computed joint outcome distribution.
fn figures(c: &RunConfig, b1s: &[f64]) -> Result<i32> {
    if b1s.len() < 2 {
        return Err(TomoError::Config("figures needs at least two --b1 values".into()));
    }
    let out = prepare_output(c)?;
    let state = c.build_state()?;
    let g = c.w_grid;
    let exact = exact_wigner(&state, &g, &g)?;

    let balanced = b1s[2..].iter().position(|b| (b - FRAC_1_SQRT_2).abs() < 1e-3).map(|k| k + 2);
    let mut order = vec![b1s[0], b1s[1], balanced.map_or(FRAC_1_SQRT_2, |k| b1s[k])];
    order.extend(b1s.iter().enumerate().skip(2).filter(|(k, _)| Some(*k) != balanced).map(|(_, &b)| b));
    let mut curves = simulated_wigners(c, &state, &order)?;
    curves.push(arthurs_kelly_distribution(&state, &g, &g)?);
    write_csv(&out.join("fig2_wigner.csv"), |o| io::write_wigner(o, &exact))?;

    let mut header = vec![
        "d".to_string(),
        "a_wigner".into(),
        format!("b_{}", label(order[0])),
        "c_difference".into(),
        format!("d_{}", label(order[1])),
        format!("e_{}", label(order[2])),
    ];
    header.extend(order[3..].iter().map(|&b| label(b)));
    header.push("joint_outcome_distribution".into());
    let headers: Vec<&str> = header.iter().map(String::as_str).collect();

    let profiles: Vec<_> = curves.iter().map(|w| error_report(&exact, w).map(|r| r.radial_profile)).collect::<Result<_>>()?;
    let radial = (0..profiles[0].len()).map(|k| {
        let bin = &profiles[0][k];
        let mut row = vec![bin.d, bin.reference, bin.reconstructed, bin.difference];
        row.extend(profiles[1..].iter().map(|p| p[k].reconstructed));
        row
    });
    write_csv(&out.join("fig3_radial.csv"), |o| io::write_table(o, &headers, radial))?;

    let exact_pos: Vec<f64> = g.points().map(|q| state.amplitude_at(q).norm_sqr()).collect();
    let marginals: Vec<Vec<f64>> = curves.iter().map(|w| w.position_marginal()).collect();
    let mut pos_header = headers.clone();
    pos_header[0] = "q";
    pos_header[1] = "a_exact";
    let position = g.points().enumerate().map(|(i, q)| {
        let mut row = vec![q, exact_pos[i], marginals[0][i], marginals[0][i] - exact_pos[i]];
        row.extend(marginals[1..].iter().map(|m| m[i]));
        row
    });
    write_csv(&out.join("fig4_position.csv"), |o| io::write_table(o, &pos_header, position))?;
    Ok(0)
}
