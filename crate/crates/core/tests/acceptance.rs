//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use remote_tomo::interaction::{
    final_system_stats, marginal_stats, tracking_commutator_norm, ApparatusPreparation, JointAmplitude, TrackingEvaluator,
};
use remote_tomo::states::{exact_wigner, gaussian_convolve, oscillator_eigenstate, SystemState, WignerGrid, WignerProjector};
use remote_tomo::tomography::{
    build_sinogram, error_report, inverse_radon_wigner, reconstruct_density_matrix, DensityMatrixGrid, RadonFilterConfig, Sinogram,
    SinogramMode,
};
use remote_tomo::transit::{transit_rows, transit_sinogram, TransitParams};
use remote_tomo::verify::smeared_wigner_reference;
use remote_tomo::{Grid1D, QuadratureAngle, Result};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn fock(n: usize) -> SystemState {
    oscillator_eigenstate(n, Grid1D::default_state()).expect("eigenstate")
}

fn max_abs_diff(a: &WignerGrid, b: &WignerGrid) -> f64 {
    error_report(a, b).expect("matching grids").max_abs
}

struct Shared {
    ugrid: Grid1D,
    wgrid: Grid1D,
    angles: Vec<QuadratureAngle>,
    filter: RadonFilterConfig,
    fock3: SystemState,
    exact_w: WignerGrid,
    exact_sino: Sinogram,
}

impl Shared {
    fn new() -> Result<Self> {
        let ugrid = Grid1D::default_phase_space();
        let wgrid = Grid1D::default_phase_space();
        let angles = QuadratureAngle::half_turn(180);
        let filter = RadonFilterConfig::for_grid(&ugrid);
        let fock3 = fock(3);
        let exact_w = exact_wigner(&fock3, &wgrid, &wgrid)?;
        let exact_sino = build_sinogram(&fock3, SinogramMode::Exact, &angles, &ugrid)?;
        Ok(Self { ugrid, wgrid, angles, filter, fock3, exact_w, exact_sino })
    }

    fn simulated(&self, b1: f64) -> Result<WignerGrid> {
        let prep = ApparatusPreparation::symmetric(b1)?;
        let sino = build_sinogram(&self.fock3, SinogramMode::Simulated(prep), &self.angles, &self.ugrid)?;
        inverse_radon_wigner(&sino, &self.wgrid, &self.wgrid, &self.filter)
    }
}

fn convolution_oracle(_: &Shared) -> Result<Outcome> {
    let ugrid = Grid1D::default_phase_space();
    let mut worst: f64 = 0.0;
    for n in 0..4 {
        let s = fock(n);
        let projector = WignerProjector::new(&s)?;
        for b1 in [0.1, 0.3, FRAC_1_SQRT_2] {
            let eval = TrackingEvaluator::new(&s, ApparatusPreparation::symmetric(b1)?);
            for theta in [0.0, FRAC_PI_4, FRAC_PI_2].map(QuadratureAngle::new) {
                let row = eval.y_theta_row(theta, &ugrid)?;
                let oracle = gaussian_convolve(&projector.density(theta, &ugrid), b1 / 2f64.sqrt())?;
                for (i, u) in ugrid.points().enumerate() {
                    if u.abs() <= 5.0 {
                        worst = worst.max((row[i] - oracle.values[i]).abs());
                    }
                }
            }
        }
    }
    Ok(Outcome {
        name: "convolution-oracle equivalence",
        pass: worst < 1e-4,
        detail: format!("max |E - smeared density| = {worst:.3e} (< 1e-4)"),
    })
}

fn exact_round_trip(sh: &Shared) -> Result<Outcome> {
    let rec = inverse_radon_wigner(&sh.exact_sino, &sh.wgrid, &sh.wgrid, &sh.filter)?;
    let err = max_abs_diff(&rec, &sh.exact_w);
    let origin = rec.nearest(0.0, 0.0);
    let origin_err = (origin + 1.0 / PI).abs();
    Ok(Outcome {
        name: "exact-sinogram Radon round trip",
        pass: err < 5e-3 && origin_err < 5e-3,
        detail: format!("max |W_rec - W| = {err:.3e} (< 5e-3), W_rec(0,0) = {origin:.6} (-1/pi +- 5e-3)"),
    })
}

fn simulated_narrow(sh: &Shared) -> Result<Outcome> {
    let mut errors = Vec::new();
    let mut narrow_vs_reference = f64::NAN;
    for b1 in [FRAC_1_SQRT_2, 0.3, 0.1] {
        let rec = sh.simulated(b1)?;
        errors.push(max_abs_diff(&rec, &sh.exact_w));
        if b1 == 0.1 {
            let reference = smeared_wigner_reference(&sh.fock3, b1, &sh.wgrid, &sh.wgrid)?;
            narrow_vs_reference = max_abs_diff(&rec, &reference);
        }
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome {
        name: "simulated b1=0.1 end-to-end",
        pass: narrow_vs_reference < 1e-3 && monotone,
        detail: format!(
            "max |W_rec - smeared reference| = {narrow_vs_reference:.3e} (< 1e-3); errors vs exact for b1 = 0.707, 0.3, 0.1: {:.3e}, {:.3e}, {:.3e} (strictly decreasing)",
            errors[0], errors[1], errors[2]
        ),
    })
}

fn balanced_apparatus(sh: &Shared) -> Result<Outcome> {
    let rec = sh.simulated(FRAC_1_SQRT_2)?;
    let reference = smeared_wigner_reference(&sh.fock3, FRAC_1_SQRT_2, &sh.wgrid, &sh.wgrid)?;
    let err = max_abs_diff(&rec, &reference);
    let gap = (rec.nearest(0.0, 0.0) - sh.exact_w.nearest(0.0, 0.0)).abs();
    Ok(Outcome {
        name: "b1=1/sqrt2 smeared reconstruction",
        pass: err < 1e-3 && gap > 0.2,
        detail: format!("max |W_rec - smeared reference| = {err:.3e} (< 1e-3), |W_rec(0,0) - W(0,0)| = {gap:.4} (> 0.2)"),
    })
}

fn dispersions(_: &Shared) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in [0, 3] {
        let s = fock(n);
        for prep in [ApparatusPreparation::symmetric(FRAC_1_SQRT_2)?, ApparatusPreparation::new(0.3, 5.0)?] {
            let joint = JointAmplitude::new(&s, prep)?;
            let m = marginal_stats(&joint)?;
            let f = final_system_stats(&joint)?;
            worst = worst
                .max((m.var_x1 - s.variance_position() - prep.position_noise()).abs())
                .max((m.var_x2 - s.variance_momentum() - prep.momentum_noise()).abs())
                .max((f.mean_q - s.mean_position()).abs())
                .max((f.var_q - s.variance_position() - 2.0 * prep.b2() * prep.b2()).abs());
        }
    }
    Ok(Outcome {
        name: "dispersion formulas",
        pass: worst < 1e-5,
        detail: format!("max deviation = {worst:.3e} (< 1e-5)"),
    })
}

fn transit(sh: &Shared) -> Result<Outcome> {
    let prep = ApparatusPreparation::symmetric(0.3)?;
    let base_sino = build_sinogram(&sh.fock3, SinogramMode::Simulated(prep), &sh.angles, &sh.ugrid)?;
    let base = inverse_radon_wigner(&base_sino, &sh.wgrid, &sh.wgrid, &sh.filter)?;
    let mut worst: f64 = 0.0;
    for wt in [0.3, FRAC_PI_2, TAU] {
        let sino = transit_sinogram(&sh.fock3, &prep, &sh.angles, &sh.ugrid, TransitParams::from_phase(wt)?)?;
        let rec = inverse_radon_wigner(&sino, &sh.wgrid, &sh.wgrid, &sh.filter)?;
        worst = worst.max(max_abs_diff(&rec, &base));
    }
    let quarter = TransitParams::from_phase(FRAC_PI_2)?;
    // Every 30th angle is plenty to show the uncorrected rows are wrong.
    let sparse: Vec<usize> = (0..sh.angles.len()).step_by(30).collect();
    let sparse_angles: Vec<QuadratureAngle> = sparse.iter().map(|&j| sh.angles[j]).collect();
    let raw = transit_rows(&sh.fock3, &prep, &sparse_angles, &sh.ugrid, quarter, false)?;
    let mut control: f64 = 0.0;
    for (row, &j) in raw.iter().zip(&sparse) {
        for (a, b) in row.iter().zip(base_sino.row(j)) {
            control = control.max((a - b).abs());
        }
    }
    Ok(Outcome {
        name: "transit invariance",
        pass: worst < 1e-5 && control > 1e-2,
        detail: format!("corrected max |W - W_tau=0| = {worst:.3e} (< 1e-5), uncorrected quarter-period deviation = {control:.3e} (> 1e-2)"),
    })
}

fn density_matrix(sh: &Shared) -> Result<Outcome> {
    let rho = reconstruct_density_matrix(&sh.exact_sino, &DensityMatrixGrid::default_grid())?;
    let fidelity = rho.fidelity(&sh.fock3);
    let herm = rho.hermiticity_defect();
    let trace = rho.trace();
    Ok(Outcome {
        name: "density-matrix reconstruction",
        pass: fidelity > 0.99 && herm < 1e-8 && (trace - 1.0).abs() < 1e-3,
        detail: format!("<phi|rho|phi> = {fidelity:.6} (> 0.99), hermiticity defect = {herm:.1e} (< 1e-8), trace = {trace:.6} (1 +- 1e-3)"),
    })
}

fn non_commutativity(_: &Shared) -> Result<Outcome> {
    let grid = Grid1D::symmetric(4.0, 33)?;
    let norm = tracking_commutator_norm(&ApparatusPreparation::symmetric(FRAC_1_SQRT_2)?, &grid, 0.0, 0.0);
    Ok(Outcome {
        name: "non-commutativity",
        pass: norm > 0.01,
        detail: format!("||[Y, Z]|| = {norm:.4} (> 0.01)"),
    })
}

fn main() -> ExitCode {
    let start = Instant::now();
    let shared = match Shared::new() {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    type Criterion = fn(&Shared) -> Result<Outcome>;
    let criteria: [(&str, Criterion); 8] = [
        ("convolution-oracle equivalence", convolution_oracle),
        ("exact-sinogram Radon round trip", exact_round_trip),
        ("simulated b1=0.1 end-to-end", simulated_narrow),
        ("b1=1/sqrt2 smeared reconstruction", balanced_apparatus),
        ("dispersion formulas", dispersions),
        ("transit invariance", transit),
        ("density-matrix reconstruction", density_matrix),
        ("non-commutativity", non_commutativity),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        match run(&shared) {
            Ok(o) => {
                println!("{} {}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail, t.elapsed().as_secs_f64());
                if !o.pass {
                    failures += 1;
                }
            }
            Err(e) => {
                println!("FAIL {name}: error {e}");
                failures += 1;
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed in {:.1}s", 8 - failures, start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
