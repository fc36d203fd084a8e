//! JSON protocol documents shared by the command-line tools.
//!
//! Documents are plain `f64` records; every kind converts to and from the
//! corresponding in-memory protocol. Kinds are told apart by their keys.

use serde::{Deserialize, Serialize};

use crate::cd_driving::IsingModeSet;
use crate::error::{Result, StaError};
use crate::expansion::ExpansionProtocol;
use crate::fast_forward::{splitting_density, DensityDesign};
use crate::grid::{SampledFunction, TimeGrid};
use crate::interpolant::PolyFunction;
use crate::transport::{TransportProtocol, TransportVariant};
use crate::twolevel::TwoLevelProtocol;
use crate::wave::SpatialGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionDoc {
    pub omega0: f64,
    pub omegaf: f64,
    pub tf: f64,
    /// Scaling-factor coefficients in `s = t/tf`; null for bare schedules.
    pub rho_coeffs: Option<Vec<f64>>,
    pub omega2_samples: Vec<f64>,
    pub imaginary_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportDoc {
    pub variant: TransportVariant,
    pub omega0: f64,
    pub d: f64,
    pub tf: f64,
    pub g: f64,
    pub qc_coeffs: Vec<f64>,
    pub q0_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelDoc {
    #[serde(rename = "T")]
    pub duration: f64,
    /// Number of time intervals; each series holds `grid_n + 1` samples.
    pub grid_n: usize,
    pub omega_r: Vec<f64>,
    pub omega_i: Vec<f64>,
    pub delta: Vec<f64>,
    pub family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSetDoc {
    #[serde(rename = "N_modes")]
    pub n_modes: usize,
    pub ks: Vec<f64>,
    /// Ramp duration; the coefficients are in `s = t/tf`.
    pub tf: f64,
    pub lambda_ramp_coeffs: Vec<f64>,
    pub model: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitGridDoc {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    /// Time intervals of the tabulated potential.
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitDoc {
    pub a0: f64,
    pub xf: f64,
    pub tf: f64,
    pub grid: SplitGridDoc,
    pub g1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Expansion,
    Transport,
    TwoLevel,
    CdIsing,
    FfSplit,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Expansion => "expansion",
            Kind::Transport => "transport",
            Kind::TwoLevel => "twolevel",
            Kind::CdIsing => "cd-ising",
            Kind::FfSplit => "ff-split",
        }
    }

    pub fn parse(s: &str) -> Result<Kind> {
        Ok(match s {
            "expansion" => Kind::Expansion,
            "transport" => Kind::Transport,
            "twolevel" => Kind::TwoLevel,
            "cd-ising" => Kind::CdIsing,
            "ff-split" => Kind::FfSplit,
            other => return Err(StaError::schema("kind", format!("unknown kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProtocolDoc {
    Expansion(ExpansionDoc),
    Transport(TransportDoc),
    TwoLevel(TwoLevelDoc),
    ModeSet(ModeSetDoc),
    Split(SplitDoc),
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(StaError::schema(path, format!("must be positive and finite, got {v}")))
    }
}

fn finite(path: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(StaError::schema(format!("{path}[{i}]"), "not a finite number")),
        None => Ok(()),
    }
}

fn samples(path: &str, v: &[f64]) -> Result<()> {
    if v.len() < 5 {
        return Err(StaError::schema(path, format!("needs at least 5 samples, got {}", v.len())));
    }
    finite(path, v)
}

impl ProtocolDoc {
    pub fn kind(&self) -> Kind {
        match self {
            ProtocolDoc::Expansion(_) => Kind::Expansion,
            ProtocolDoc::Transport(_) => Kind::Transport,
            ProtocolDoc::TwoLevel(_) => Kind::TwoLevel,
            ProtocolDoc::ModeSet(_) => Kind::CdIsing,
            ProtocolDoc::Split(_) => Kind::FfSplit,
        }
    }

    /// Parses and validates a document.
    pub fn parse(text: &str) -> Result<ProtocolDoc> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if !value.is_object() {
            return Err(StaError::schema("$", "protocol must be a JSON object"));
        }
        let doc: ProtocolDoc = serde_json::from_value(value)
            .map_err(|e| StaError::schema("$", format!("matches no protocol kind: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProtocolDoc::Expansion(d) => {
                positive("omega0", d.omega0)?;
                positive("omegaf", d.omegaf)?;
                positive("tf", d.tf)?;
                samples("omega2_samples", &d.omega2_samples)?;
                if let Some(c) = &d.rho_coeffs {
                    if c.is_empty() {
                        return Err(StaError::schema("rho_coeffs", "empty coefficient list"));
                    }
                    finite("rho_coeffs", c)?;
                }
            }
            ProtocolDoc::Transport(d) => {
                positive("omega0", d.omega0)?;
                positive("tf", d.tf)?;
                if !d.d.is_finite() || !d.g.is_finite() {
                    return Err(StaError::schema("d", "d and g must be finite"));
                }
                if d.qc_coeffs.is_empty() {
                    return Err(StaError::schema("qc_coeffs", "empty coefficient list"));
                }
                finite("qc_coeffs", &d.qc_coeffs)?;
                samples("q0_samples", &d.q0_samples)?;
            }
            ProtocolDoc::TwoLevel(d) => {
                positive("T", d.duration)?;
                for (path, v) in [("omega_r", &d.omega_r), ("omega_i", &d.omega_i), ("delta", &d.delta)] {
                    samples(path, v)?;
                    if v.len() != d.grid_n + 1 {
                        return Err(StaError::schema(
                            path,
                            format!("expected grid_n + 1 = {} samples, got {}", d.grid_n + 1, v.len()),
                        ));
                    }
                }
            }
            ProtocolDoc::ModeSet(d) => {
                positive("tf", d.tf)?;
                if d.model != "tfim" {
                    return Err(StaError::schema("model", format!("unsupported model {:?}", d.model)));
                }
                if d.n_modes == 0 || d.ks.len() != d.n_modes {
                    return Err(StaError::schema("ks", format!("expected N_modes = {} wave numbers", d.n_modes)));
                }
                finite("ks", &d.ks)?;
                if d.lambda_ramp_coeffs.is_empty() {
                    return Err(StaError::schema("lambda_ramp_coeffs", "empty coefficient list"));
                }
                finite("lambda_ramp_coeffs", &d.lambda_ramp_coeffs)?;
            }
            ProtocolDoc::Split(d) => {
                positive("a0", d.a0)?;
                positive("xf", d.xf)?;
                positive("tf", d.tf)?;
                if !(d.g1 >= 0.0 && d.g1.is_finite()) {
                    return Err(StaError::schema("g1", "must be non-negative"));
                }
                if d.grid.nt < 4 {
                    return Err(StaError::schema("grid.nt", "needs at least 4 time intervals"));
                }
                SpatialGrid::new(d.grid.x_min, d.grid.x_max, d.grid.nx)
                    .map_err(|e| StaError::schema("grid", e.to_string()))?;
            }
        }
        Ok(())
    }
}

fn grid_for(path: &str, tf: f64, n: usize) -> Result<TimeGrid<f64>> {
    TimeGrid::new(tf, n.saturating_sub(1)).map_err(|e| StaError::schema(path, e.to_string()))
}

impl ExpansionDoc {
    pub fn from_protocol(p: &ExpansionProtocol<f64>) -> Self {
        ExpansionDoc {
            omega0: p.omega0,
            omegaf: p.omegaf,
            tf: p.tf,
            rho_coeffs: p.rho.as_ref().map(|r| r.coeffs.clone()),
            omega2_samples: p.omega2.values.clone(),
            imaginary_flag: p.imaginary,
        }
    }

    pub fn to_protocol(&self) -> Result<ExpansionProtocol<f64>> {
        let grid = grid_for("omega2_samples", self.tf, self.omega2_samples.len())?;
        Ok(ExpansionProtocol {
            omega0: self.omega0,
            omegaf: self.omegaf,
            tf: self.tf,
            rho: self.rho_coeffs.as_ref().map(|c| PolyFunction {
                tf: self.tf,
                coeffs: c.clone(),
            }),
            omega2: SampledFunction::new(grid, self.omega2_samples.clone())?,
            imaginary: self.imaginary_flag,
        })
    }
}

impl TransportDoc {
    pub fn from_protocol(p: &TransportProtocol<f64>) -> Self {
        TransportDoc {
            variant: p.variant,
            omega0: p.omega0,
            d: p.d,
            tf: p.tf,
            g: p.g,
            qc_coeffs: p.qc.coeffs.clone(),
            q0_samples: p.q0.values.clone(),
        }
    }

    pub fn to_protocol(&self) -> Result<TransportProtocol<f64>> {
        let grid = grid_for("q0_samples", self.tf, self.q0_samples.len())?;
        let qc = PolyFunction {
            tf: self.tf,
            coeffs: self.qc_coeffs.clone(),
        };
        let q0 = SampledFunction::new(grid, self.q0_samples.clone())?;
        let max_excursion = grid
            .times()
            .iter()
            .zip(&q0.values)
            .map(|(&t, q)| (q - qc.at(t, 0)).abs())
            .fold(0.0, f64::max);
        let tol = 1e-12 * (1.0 + self.d.abs());
        let (lo, hi) = if self.d >= 0.0 { (0.0, self.d) } else { (self.d, 0.0) };
        let leaves_interval = q0.values.iter().any(|&q| q < lo - tol || q > hi + tol);
        Ok(TransportProtocol {
            variant: self.variant,
            omega0: self.omega0,
            d: self.d,
            tf: self.tf,
            g: self.g,
            qc,
            q0,
            max_excursion,
            leaves_interval,
        })
    }
}

impl TwoLevelDoc {
    pub fn from_protocol(p: &TwoLevelProtocol<f64>) -> Self {
        let grid = p.grid();
        TwoLevelDoc {
            duration: grid.tf,
            grid_n: grid.intervals,
            omega_r: p.omega_r.values.clone(),
            omega_i: p.omega_i.values.clone(),
            delta: p.delta.values.clone(),
            family: p.family.clone(),
        }
    }

    pub fn to_protocol(&self) -> Result<TwoLevelProtocol<f64>> {
        let grid = TimeGrid::new(self.duration, self.grid_n).map_err(|e| StaError::schema("grid_n", e.to_string()))?;
        TwoLevelProtocol::new(
            SampledFunction::new(grid, self.omega_r.clone())?,
            SampledFunction::new(grid, self.omega_i.clone())?,
            SampledFunction::new(grid, self.delta.clone())?,
            self.family.clone(),
        )
    }
}

impl ModeSetDoc {
    pub fn from_modes(m: &IsingModeSet<f64>) -> Self {
        ModeSetDoc {
            n_modes: m.ks.len(),
            ks: m.ks.clone(),
            tf: m.ramp.tf,
            lambda_ramp_coeffs: m.ramp.coeffs.clone(),
            model: "tfim".into(),
        }
    }

    pub fn to_modes(&self) -> IsingModeSet<f64> {
        IsingModeSet {
            ks: self.ks.clone(),
            ramp: PolyFunction {
                tf: self.tf,
                coeffs: self.lambda_ramp_coeffs.clone(),
            },
        }
    }
}

impl SplitDoc {
    pub fn from_design(d: &DensityDesign<f64>, g1: f64, nt: usize) -> Self {
        SplitDoc {
            a0: d.a0,
            xf: d.xf,
            tf: d.tf,
            grid: SplitGridDoc {
                x_min: d.grid.x_min,
                x_max: d.grid.x_max,
                nx: d.grid.nx,
                nt,
            },
            g1,
        }
    }

    pub fn to_design(&self) -> Result<DensityDesign<f64>> {
        let grid = SpatialGrid::new(self.grid.x_min, self.grid.x_max, self.grid.nx)?;
        splitting_density(self.a0, self.xf, self.tf, grid)
    }
}
