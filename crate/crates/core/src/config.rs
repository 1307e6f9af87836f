//! Run configuration: a flat `key = value` document.
//!
//! ```text
//! state = fock:3              # or displaced:q0,p0 or file:path/to/psi.csv
//! mode = simulated            # or exact
//! b1 = 0.1
//! b2 = symmetric              # or an explicit number
//! angle_count = 180
//! u_grid = -8,8,513
//! w_grid = -8,8,513
//! dm_grid = -8,8,129
//! state_grid = -10,10,641
//! eta_max = nyquist           # or a number
//! apodization = none          # or cosine
//! omega_tau = 0
//! output = out
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, TomoError};
use crate::grid::{Grid1D, QuadratureAngle};
use crate::interaction::ApparatusPreparation;
use crate::io::load_wavefunction_file;
use crate::states::{displaced_vacuum, oscillator_eigenstate, SystemState};
use crate::tomography::{Apodization, DensityMatrixGrid, RadonFilterConfig, SinogramMode};

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Fock(usize),
    DisplacedVacuum { q0: f64, p0: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Simulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub state: StateSpec,
    pub mode: Mode,
    pub b1: f64,
    /// `None` means the symmetric choice `b2 = 1/(2 b1)`.
    pub b2: Option<f64>,
    pub angle_count: usize,
    pub u_grid: Grid1D,
    /// Shared by `q` and `p` of reconstructed Wigner functions.
    pub w_grid: Grid1D,
    pub dm_grid: Grid1D,
    pub state_grid: Grid1D,
    /// `None` means the Nyquist limit of `u_grid`.
    pub eta_max: Option<f64>,
    pub apodization: Apodization,
    pub omega_tau: f64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            state: StateSpec::Fock(3),
            mode: Mode::Simulated,
            b1: 0.1,
            b2: None,
            angle_count: 180,
            u_grid: Grid1D::default_phase_space(),
            w_grid: Grid1D::default_phase_space(),
            dm_grid: DensityMatrixGrid::default_grid(),
            state_grid: Grid1D::default_state(),
            eta_max: None,
            apodization: Apodization::None,
            omega_tau: 0.0,
            output: PathBuf::from("out"),
        }
    }
}

const KEYS: [&str; 13] = [
    "state",
    "mode",
    "b1",
    "b2",
    "angle_count",
    "u_grid",
    "w_grid",
    "dm_grid",
    "state_grid",
    "eta_max",
    "apodization",
    "omega_tau",
    "output",
];

fn bad(key: &str, value: &str, why: impl Display) -> TomoError {
    TomoError::Config(format!("{key} = {value}: {why}"))
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

fn grid_text(g: &Grid1D) -> String {
    format!("{},{},{}", g.min(), g.max(), g.count())
}

pub fn parse_grid(key: &str, value: &str) -> Result<Grid1D> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad(key, value, "expected min,max,count"));
    }
    Grid1D::new(number(key, parts[0])?, number(key, parts[1])?, number(key, parts[2])?)
}

impl Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::DisplacedVacuum { q0, p0 } => write!(f, "displaced:{q0},{p0}"),
            StateSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for StateSpec {
    type Err = TomoError;

    fn from_str(value: &str) -> Result<Self> {
        let (kind, rest) = value.split_once(':').ok_or_else(|| bad("state", value, "expected kind:argument"))?;
        match kind.trim() {
            "fock" => Ok(StateSpec::Fock(number("state", rest.trim())?)),
            "displaced" => {
                let (q0, p0) = rest.split_once(',').ok_or_else(|| bad("state", value, "expected displaced:q0,p0"))?;
                Ok(StateSpec::DisplacedVacuum { q0: number("state", q0.trim())?, p0: number("state", p0.trim())? })
            }
            "file" if !rest.trim().is_empty() => Ok(StateSpec::File(PathBuf::from(rest.trim()))),
            _ => Err(bad("state", value, "unknown state kind")),
        }
    }
}

impl FromStr for Mode {
    type Err = TomoError;

    fn from_str(value: &str) -> Result<Self> {
        match value {
            "exact" => Ok(Mode::Exact),
            "simulated" => Ok(Mode::Simulated),
            _ => Err(bad("mode", value, "expected exact or simulated")),
        }
    }
}

impl Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Simulated => "simulated",
        })
    }
}

pub fn parse_apodization(value: &str) -> Result<Apodization> {
    match value {
        "none" => Ok(Apodization::None),
        "cosine" => Ok(Apodization::Cosine),
        _ => Err(bad("apodization", value, "expected none or cosine")),
    }
}

impl RunConfig {
    /// Parses a document; absent keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| TomoError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(TomoError::Config(format!("line {}: unknown key {key}", n + 1)));
            }
            if seen.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(TomoError::Config(format!("line {}: duplicate key {key}", n + 1)));
            }
        }
        let mut config = Self::default();
        for (key, value) in &seen {
            config.set(key, value)?;
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| TomoError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "state" => self.state = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "b1" => self.b1 = number(key, value)?,
            "b2" => self.b2 = if value == "symmetric" { None } else { Some(number(key, value)?) },
            "angle_count" => self.angle_count = number(key, value)?,
            "u_grid" => self.u_grid = parse_grid(key, value)?,
            "w_grid" => self.w_grid = parse_grid(key, value)?,
            "dm_grid" => self.dm_grid = parse_grid(key, value)?,
            "state_grid" => self.state_grid = parse_grid(key, value)?,
            "eta_max" => self.eta_max = if value == "nyquist" { None } else { Some(number(key, value)?) },
            "apodization" => self.apodization = parse_apodization(value)?,
            "omega_tau" => self.omega_tau = number(key, value)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(TomoError::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    /// The document form; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let b2 = self.b2.map_or("symmetric".to_string(), |v| v.to_string());
        let eta = self.eta_max.map_or("nyquist".to_string(), |v| v.to_string());
        let apod = match self.apodization {
            Apodization::None => "none",
            Apodization::Cosine => "cosine",
        };
        let values = [
            self.state.to_string(),
            self.mode.to_string(),
            self.b1.to_string(),
            b2,
            self.angle_count.to_string(),
            grid_text(&self.u_grid),
            grid_text(&self.w_grid),
            grid_text(&self.dm_grid),
            grid_text(&self.state_grid),
            eta,
            apod.to_string(),
            self.omega_tau.to_string(),
            self.output.display().to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn preparation(&self) -> Result<ApparatusPreparation> {
        match self.b2 {
            None => ApparatusPreparation::symmetric(self.b1),
            Some(b2) => ApparatusPreparation::new(self.b1, b2),
        }
    }

    pub fn filter(&self) -> RadonFilterConfig {
        let mut filter = RadonFilterConfig::for_grid(&self.u_grid);
        if let Some(eta) = self.eta_max {
            filter.eta_max = eta;
        }
        filter.apodization = self.apodization;
        filter.angle_count = self.angle_count;
        filter
    }

    pub fn angles(&self) -> Vec<QuadratureAngle> {
        QuadratureAngle::half_turn(self.angle_count)
    }

    pub fn sinogram_mode(&self) -> Result<SinogramMode> {
        Ok(match self.mode {
            Mode::Exact => SinogramMode::Exact,
            Mode::Simulated => SinogramMode::Simulated(self.preparation()?),
        })
    }

    pub fn build_state(&self) -> Result<SystemState> {
        match &self.state {
            StateSpec::Fock(n) => oscillator_eigenstate(*n, self.state_grid),
            StateSpec::DisplacedVacuum { q0, p0 } => displaced_vacuum(*q0, *p0, self.state_grid),
            StateSpec::File(path) => load_wavefunction_file(path),
        }
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        let prep = self.preparation()?;
        if self.mode == Mode::Simulated {
            prep.require_symmetric()?;
        }
        self.filter().validate(&self.u_grid)?;
        if !(self.omega_tau.is_finite() && self.omega_tau >= 0.0) {
            return Err(TomoError::InvalidParameter(format!("omega_tau = {} must be finite and nonnegative", self.omega_tau)));
        }
        if let StateSpec::Fock(n) = self.state {
            // Beyond this the eigenfunction no longer fits the default grids.
            if n > 20 {
                return Err(TomoError::InvalidParameter(format!("fock level {n} above 20")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_partial_documents() {
        let c = RunConfig::parse("# recipe\nstate = displaced:0.5,-1\nb1 = 0.3 # narrow\n\nmode = exact\n").unwrap();
        assert_eq!(c.state, StateSpec::DisplacedVacuum { q0: 0.5, p0: -1.0 });
        assert_eq!(c.b1, 0.3);
        assert_eq!(c.mode, Mode::Exact);
        assert_eq!(c.angle_count, 180);
    }

    #[test]
    fn rejects_bad_documents() {
        for text in ["b1 0.3", "colour = red", "b1 = 0.1\nb1 = 0.2", "u_grid = -8,8", "state = squeezed:1", "mode = fast"] {
            assert!(matches!(RunConfig::parse(text), Err(TomoError::Config(_))), "{text}");
        }
    }

    #[test]
    fn simulated_requires_symmetric() {
        let c = RunConfig { b2: Some(3.0), ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(TomoError::NonSymmetricPreparation { .. })));
        assert!(RunConfig { mode: Mode::Exact, ..c }.validate().is_ok());
    }
}
