use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use remote_tomo::config::{Mode, RunConfig, StateSpec};
use remote_tomo::io::load_wavefunction_file;
use remote_tomo::states::oscillator_eigenstate;
use remote_tomo::verify::LedgerEntry;
use remote_tomo::{Grid1D, TomoError};

const SMALL: [&str; 8] = ["--u-grid", "-6,6,193", "--w-grid", "-6,6,97", "--dm-grid", "-6,6,49", "--angles", "60"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_remote-tomo")).args(args).output().expect("binary runs")
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn exact_vacuum_reconstruction_peaks_at_inverse_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["reconstruct", "--fock", "0", "--mode", "exact", "-o", out];
    args.extend(SMALL);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_table(&dir.path().join("wigner.csv"));
    assert_eq!(header, ["q", "p", "value"]);
    let peak = rows.iter().map(|r| r[2]).fold(f64::MIN, f64::max);
    assert!((peak - 1.0 / PI).abs() < 5e-3, "{peak}");
    let (dm_header, dm_rows) = read_table(&dir.path().join("density_matrix.csv"));
    assert_eq!(dm_header, ["q", "qprime", "re", "im"]);
    assert_eq!(dm_rows.len(), 49 * 49);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["density_matrix_fidelity"].as_f64().unwrap() > 0.99);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let bodies: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let mut args = vec!["simulate", "--fock", "2", "--b1", "0.3", "--omega-tau", "0.7", "-o", d.path().to_str().unwrap()];
            args.extend(SMALL);
            assert!(run(&args).status.success());
            std::fs::read(d.path().join("sinogram.csv")).unwrap()
        })
        .collect();
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies[0].clone()).unwrap();
    assert!(text.starts_with("theta,u,value\n"));
    assert_eq!(text.lines().count(), 1 + 60 * 193);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("recipe.conf");
    let out = dir.path().join("out");
    std::fs::write(&conf, format!("state = fock:1\nb1 = 0.3\nangle_count = 40\noutput = {}\n", out.display())).unwrap();
    let o = run(&["simulate", "--config", conf.to_str().unwrap(), "--b1", "0.2", "--u-grid", "-6,6,129"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = RunConfig::from_file(&out.join("run.conf")).unwrap();
    assert_eq!(resolved.b1, 0.2);
    assert_eq!(resolved.angle_count, 40);
    assert_eq!(resolved.state, StateSpec::Fock(1));
    assert_eq!(resolved.mode, Mode::Simulated);
}

#[test]
fn exit_codes_by_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["simulate", "--b1", "0.1", "--b2", "3", "-o", out]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--mode", "sideways", "-o", out]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--u-grid", "6,-6,10", "-o", out]).status.code(), Some(4));
    assert_eq!(run(&["simulate", "--eta-max", "1000", "-o", out]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn figure_bundle_has_all_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["figures", "--fock", "3", "--b1", "0.1", "0.3", "0.7071", "-o", dir.path().to_str().unwrap()];
    args.extend(SMALL);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_table(&dir.path().join("fig3_radial.csv"));
    for prefix in ["d", "a_", "b_", "c_", "d_", "e_"] {
        assert!(header.iter().any(|h| h.starts_with(prefix)), "{prefix} missing from {header:?}");
    }
    assert!(rows.len() > 50);
    let first = &rows[0];
    // W rises monotonically over the first bin, d = q^2 + p^2 in [0, 0.08).
    let w = |d: f64| (-d).exp() * (4.0 * d.powi(3) - 18.0 * d * d + 18.0 * d - 3.0) / (3.0 * PI);
    assert!(w(0.0) <= first[1] && first[1] <= w(0.08), "exact centre bin {}", first[1]);
    assert!((first[3] - (first[2] - first[1])).abs() < 1e-12);
    let (pos_header, pos_rows) = read_table(&dir.path().join("fig4_position.csv"));
    assert_eq!(pos_header[0], "q");
    assert_eq!(pos_rows.len(), 97);
    assert!(dir.path().join("fig2_wigner.csv").exists());
}

#[test]
fn verify_ledger_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "-o", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let ledger: Vec<LedgerEntry> = serde_json::from_str(&stdout).expect("ledger JSON");
    assert!(ledger.len() >= 8);
    let failing: Vec<_> = ledger.iter().filter(|e| !e.pass).collect();
    assert!(failing.is_empty(), "{failing:?}");
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    for key in ["property", "tolerance", "measured", "pass"] {
        assert!(json[0].get(key).is_some(), "{key}");
    }
}

fn write_samples(path: &Path, scale: f64) {
    let grid = Grid1D::default_state();
    let mut text = String::from("q,re,im\n");
    for q in grid.points() {
        let v = scale * (2.0 * q.powi(3) - 3.0 * q) * (-q * q / 2.0).exp() / (3f64.sqrt() * PI.powf(0.25));
        text.push_str(&format!("{q:.17e},{v:.17e},0\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn wavefunction_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    let reference = oscillator_eigenstate(3, Grid1D::default_state()).unwrap();

    write_samples(&path, 1.0);
    let loaded = load_wavefunction_file(&path).unwrap();
    let worst = loaded.amplitudes().iter().zip(reference.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst:.3e}");

    write_samples(&path, 0.9995f64.sqrt());
    assert!((load_wavefunction_file(&path).unwrap().norm() - 1.0).abs() < 1e-12);

    write_samples(&path, 0.5f64.sqrt());
    assert!(matches!(load_wavefunction_file(&path), Err(TomoError::NormOutOfRange { .. })));

    std::fs::write(&path, "q,re,im\n0,1,0\n0.1,1,0\n0.25,1,0\n").unwrap();
    assert!(matches!(load_wavefunction_file(&path), Err(TomoError::NonUniformGrid(_))));
    std::fs::write(&path, "q,re\n0,1\n").unwrap();
    assert!(matches!(load_wavefunction_file(&path), Err(TomoError::MalformedFile(_))));

    write_samples(&path, 1.0);
    let out = dir.path().join("out");
    let o = run(&["simulate", "--wavefunction", path.to_str().unwrap(), "--mode", "exact", "--angles", "20", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
