//! Design, verification and scan pipelines behind the command-line tools.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cd_driving::{defect_density, ising_ramp, modes_csv, IsingModeSet};
use crate::error::{Result, StaError};
use crate::expansion::{design_expansion, energy_bound, linear_frequency_ramp, ExpansionProtocol};
use crate::fast_forward::{
    asymmetry_csv, asymmetry_scan, ff_potential, splitting_density, AsymmetryOptions,
};
use crate::formats::{ExpansionDoc, Kind, ModeSetDoc, ProtocolDoc, SplitDoc, TransportDoc, TwoLevelDoc};
use crate::grid::TimeGrid;
use crate::transport::{anharmonic_csv, anharmonic_scan_grid, design_transport, fourier_amplitude};
use crate::twolevel::{
    approximate_noise_angles, bloch_vector, closed_form_sensitivities, error_map, error_map_csv, flat_pi_angles,
    ground, invariant_inverse, optimal_noise_protocol, optimal_systematic_protocol, propagate_unitary,
    AuxiliaryAngles, TwoLevelProtocol,
};
use crate::wave::{harmonic_state, propagate, PropagateOptions, SpatialGrid};

/// Largest number of points a single scan may request.
pub const SCAN_BUDGET: usize = 10_000;

/// Ordered `key = value` lines printed after a design.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(pub Vec<(String, String)>);

impl Summary {
    fn num(&mut self, key: &str, v: f64) {
        self.0.push((key.into(), format!("{v:.6e}")));
    }

    fn text(&mut self, key: &str, v: impl ToString) {
        self.0.push((key.into(), v.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn design_expansion_doc(
    omega0: f64,
    omegaf: f64,
    tf: f64,
    intervals: usize,
    linear: bool,
) -> Result<(ProtocolDoc, Summary)> {
    let p = if linear {
        let grid = TimeGrid::new(tf, intervals)?;
        ExpansionProtocol::from_schedule(omega0, omegaf, linear_frequency_ramp(omega0, omegaf, &grid))
    } else {
        design_expansion(omega0, omegaf, tf, intervals)?
    };
    let mut s = Summary::default();
    s.num("gamma", p.gamma());
    s.num("min_omega2", p.omega2.min());
    s.text("omega2_sign", if p.omega2.min() < 0.0 { "negative" } else { "positive" });
    s.text("imaginary_frequency", p.imaginary);
    Ok((ProtocolDoc::Expansion(ExpansionDoc::from_protocol(&p)), s))
}

pub fn design_transport_doc(d: f64, tf: f64, omega0: f64, g: f64, intervals: usize) -> Result<(ProtocolDoc, Summary)> {
    let p = design_transport(d, tf, omega0, g, intervals)?;
    let mut s = Summary::default();
    s.num("fourier_amplitude", fourier_amplitude(&p.q0, omega0).amplitude);
    s.num("max_excursion", p.max_excursion);
    s.text("leaves_interval", p.leaves_interval);
    Ok((ProtocolDoc::Transport(TransportDoc::from_protocol(&p)), s))
}

/// Two-level families: `noise-optimal`, `systematic-optimal` (order `n`),
/// `approximate-noise`, `flat-pi`.
pub fn twolevel_family(family: &str, t: f64, n: u32, intervals: usize) -> Result<(AuxiliaryAngles<f64>, TwoLevelProtocol<f64>)> {
    let mut out = match family {
        "noise-optimal" => optimal_noise_protocol(t, intervals)?,
        "systematic-optimal" => optimal_systematic_protocol(t, n, intervals)?,
        "approximate-noise" => {
            let a = approximate_noise_angles(t, intervals)?;
            let p = invariant_inverse(&a);
            (a, p)
        }
        "flat-pi" => {
            let a = flat_pi_angles(t, intervals)?;
            let p = invariant_inverse(&a);
            (a, p)
        }
        other => return Err(StaError::schema("family", format!("unknown family {other:?}"))),
    };
    out.1.family = family.to_string();
    Ok(out)
}

pub fn design_twolevel_doc(family: &str, t: f64, n: u32, intervals: usize) -> Result<(ProtocolDoc, Summary)> {
    let (angles, p) = twolevel_family(family, t, n, intervals)?;
    let sens = closed_form_sensitivities(&angles);
    let mut s = Summary::default();
    s.text("family", family);
    s.num("qN_T", sens.q_n * t);
    s.num("qS", sens.q_s);
    s.num("max_rabi", p.max_rabi());
    Ok((ProtocolDoc::TwoLevel(TwoLevelDoc::from_protocol(&p)), s))
}

pub fn design_ising_doc(n_modes: usize, lambda0: f64, lambda1: f64, tf: f64) -> Result<(ProtocolDoc, Summary)> {
    let m = IsingModeSet::tfim(n_modes, lambda0, lambda1, tf)?;
    let mut s = Summary::default();
    s.text("modes", n_modes);
    s.num("lambda0", lambda0);
    s.num("lambda1", lambda1);
    Ok((ProtocolDoc::ModeSet(ModeSetDoc::from_modes(&m)), s))
}

pub fn design_split_doc(a0: f64, xf: f64, tf: f64, half_width: f64, nx: usize, nt: usize, g1: f64) -> Result<(ProtocolDoc, Summary)> {
    let d = splitting_density(a0, xf, tf, SpatialGrid::symmetric(half_width, nx)?)?;
    let doc = SplitDoc::from_design(&d, g1, nt);
    ProtocolDoc::Split(doc.clone()).validate()?;
    let mut s = Summary::default();
    s.num("max_excursion", xf);
    s.num("sudden_threshold", 2.0 / tf);
    Ok((ProtocolDoc::Split(doc), s))
}

/// Numerical overrides shared by verification and scans.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Settings {
    pub grid_nx: Option<usize>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub kind: Kind,
    pub metric: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Time series (wave and two-level kinds) or per-mode table.
    pub report_csv: String,
}

/// Box spanning `[lo - margin, hi + margin]` rounded out to `nx` points.
fn box_grid(lo: f64, hi: f64, margin: f64, nx: usize) -> Result<SpatialGrid<f64>> {
    SpatialGrid::new(lo - margin, hi + margin, nx)
}

/// Runs the owning module's check for a protocol document.
pub fn verify(doc: &ProtocolDoc, settings: &Settings) -> Result<Verification> {
    doc.validate()?;
    let (metric, measured, threshold, report_csv) = match doc {
        ProtocolDoc::Expansion(d) => {
            let p = d.to_protocol()?;
            let width = 1.0 / p.omega0.min(p.omegaf).sqrt();
            let grid = box_grid(0.0, 0.0, 14.0 * width, settings.grid_nx.unwrap_or(512))?;
            let target = harmonic_state(grid, 0, p.omegaf, 0.0);
            let opts = PropagateOptions::new(settings.dt.unwrap_or(p.tf / 1e4)).target(target);
            let (_, report) = propagate(&harmonic_state(grid, 0, p.omega0, 0.0), &p.potential(), 0.0, p.tf, &opts)?;
            ("fidelity", report.final_fidelity().unwrap_or(0.0), 0.9999, report.to_csv())
        }
        ProtocolDoc::Transport(d) => {
            let p = d.to_protocol()?;
            let width = 1.0 / p.omega0.sqrt();
            let margin = 14.0 * width + p.max_excursion;
            let grid = box_grid(p.d.min(0.0), p.d.max(0.0), margin, settings.grid_nx.unwrap_or(1024))?;
            let target = harmonic_state(grid, 0, p.omega0, p.d);
            let opts = PropagateOptions::new(settings.dt.unwrap_or(p.tf / 1e4)).target(target);
            let (_, report) = propagate(&harmonic_state(grid, 0, p.omega0, 0.0), &p.potential(), 0.0, p.tf, &opts)?;
            ("fidelity", report.final_fidelity().unwrap_or(0.0), 0.9999, report.to_csv())
        }
        ProtocolDoc::TwoLevel(d) => {
            let p = d.to_protocol()?;
            let run = propagate_unitary(&p, &ground())?;
            ("p2", run.p2, 0.9999, twolevel_report(&p, &run.states))
        }
        ProtocolDoc::ModeSet(d) => {
            let modes = d.to_modes();
            let intervals = settings.dt.map(|dt| (d.tf / dt).ceil() as usize).unwrap_or(1000);
            let res = ising_ramp(&modes, intervals, |_| true)?;
            let cd: Vec<f64> = res.iter().map(|r| r.p_excited_cd).collect();
            ("one_minus_defects", 1.0 - defect_density(&cd), 1.0 - 1e-6, modes_csv(&res))
        }
        ProtocolDoc::Split(d) => {
            let mut design = d.to_design()?;
            if let Some(nx) = settings.grid_nx {
                design.grid = SpatialGrid::new(d.grid.x_min, d.grid.x_max, nx)?;
            }
            let ff = ff_potential(&design, d.g1, d.grid.nt)?;
            let target = design.state(design.tf);
            let opts = PropagateOptions::new(settings.dt.unwrap_or(1e-3))
                .target(target)
                .step_limit(None);
            let (_, report) = propagate(&design.state(0.0), &ff, d.g1, design.tf, &opts)?;
            ("fidelity", report.final_fidelity().unwrap_or(0.0), 0.999, report.to_csv())
        }
    };
    Ok(Verification {
        kind: doc.kind(),
        metric,
        measured,
        threshold,
        passed: measured >= threshold,
        report_csv,
    })
}

/// Same columns as the wave report: `V_exp` is the field energy and the
/// fidelity column holds the excited population.
fn twolevel_report(p: &TwoLevelProtocol<f64>, states: &[[num_complex::Complex<f64>; 2]]) -> String {
    let grid = p.grid();
    let mut out = String::from("t,norm,E,V_exp,dH,fidelity\n");
    for (i, psi) in states.iter().enumerate() {
        let h = p.field_at(i);
        let r = bloch_vector(psi);
        let e = h[0] * r[0] + h[1] * r[1] + h[2] * r[2];
        let h2 = h[0] * h[0] + h[1] * h[1] + h[2] * h[2];
        let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            grid.t(i),
            norm,
            e,
            e,
            (h2 - e * e).max(0.0).sqrt(),
            psi[1].norm_sqr()
        ));
    }
    out
}

/// `start:stop:n` sample axis; `n = 0` is empty and collapses to the
/// kind's default value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl Axis {
    pub fn single(v: f64) -> Self {
        Axis { start: v, stop: v, n: 1 }
    }

    /// `v`, `start:stop:n` or the empty string.
    pub fn parse(path: &str, s: &str) -> Result<Axis> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Axis { start: 0.0, stop: 0.0, n: 0 });
        }
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| StaError::schema(path, format!("not a number: {x:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let axis = match parts.as_slice() {
            [v] => Axis::single(num(v)?),
            [a, b, n] => Axis {
                start: num(a)?,
                stop: num(b)?,
                n: n.trim()
                    .parse()
                    .map_err(|_| StaError::schema(path, format!("not a count: {n:?}")))?,
            },
            _ => return Err(StaError::schema(path, "expected v or start:stop:n")),
        };
        if !axis.start.is_finite() || !axis.stop.is_finite() {
            return Err(StaError::schema(path, "axis bounds must be finite"));
        }
        Ok(axis)
    }

    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub kind: Kind,
    pub axes: BTreeMap<String, Axis>,
    pub params: BTreeMap<String, f64>,
    pub settings: Settings,
}

impl ScanRequest {
    pub fn new(kind: Kind) -> Self {
        ScanRequest {
            kind,
            axes: BTreeMap::new(),
            params: BTreeMap::new(),
            settings: Settings::default(),
        }
    }

    pub fn axis(mut self, name: &str, axis: Axis) -> Self {
        self.axes.insert(name.into(), axis);
        self
    }

    pub fn param(mut self, name: &str, v: f64) -> Self {
        self.params.insert(name.into(), v);
        self
    }

    fn p(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// Axis values, or `[default]` when the axis is absent or empty.
    fn values(&self, name: &str, default: f64) -> Vec<f64> {
        match self.axes.get(name).map(Axis::values) {
            Some(v) if !v.is_empty() => v,
            _ => vec![default],
        }
    }

    fn check_names(&self, axes: &[&str], params: &[&str]) -> Result<()> {
        if let Some(a) = self.axes.keys().find(|a| !axes.contains(&a.as_str())) {
            return Err(StaError::schema(format!("axis.{a}"), format!("{} scans take {axes:?}", self.kind.name())));
        }
        if let Some(p) = self.params.keys().find(|p| !params.contains(&p.as_str())) {
            return Err(StaError::schema(format!("param.{p}"), format!("{} scans take {params:?}", self.kind.name())));
        }
        Ok(())
    }

    pub fn points(&self) -> usize {
        self.axes.values().map(|a| a.n.max(1)).product()
    }
}

/// Runs a scan and returns its CSV; rows follow the axis order given by
/// the kind (first axis major).
pub fn scan(req: &ScanRequest) -> Result<String> {
    let points = req.points();
    if points > SCAN_BUDGET {
        return Err(StaError::BudgetExceeded {
            points,
            limit: SCAN_BUDGET,
        });
    }
    match req.kind {
        Kind::TwoLevel => {
            req.check_names(&["lambda", "beta"], &["T", "n", "intervals"])?;
            let t = req.p("T", 1.0);
            let intervals = req.p("intervals", 2000.0) as usize;
            let (_, noise) = twolevel_family("noise-optimal", t, 1, intervals)?;
            let (_, sys) = twolevel_family("systematic-optimal", t, req.p("n", 1.0) as u32, intervals)?;
            let map = error_map(&noise, &sys, &req.values("lambda", 0.0), &req.values("beta", 0.0))?;
            Ok(error_map_csv(&map))
        }
        Kind::Transport => {
            req.check_names(&["alpha", "g1"], &["d", "tf", "omega0", "margin"])?;
            let (d, tf, w0) = (req.p("d", 10.0), req.p("tf", 2.0), req.p("omega0", 1.0));
            let p = design_transport(d, tf, w0, 0.0, 2000)?;
            let grid = box_grid(d.min(0.0), d.max(0.0), req.p("margin", 24.0), req.settings.grid_nx.unwrap_or(1024))?;
            let dt = req.settings.dt.unwrap_or(2.5e-4);
            let pts = anharmonic_scan_grid(&p, &req.values("alpha", 0.0), &req.values("g1", 0.0), grid, dt)?;
            Ok(anharmonic_csv(&pts))
        }
        Kind::FfSplit => {
            req.check_names(&["lambda"], &["a0", "xf", "tf", "g1", "half_width", "nt", "stretch"])?;
            let (a0, xf, tf) = (req.p("a0", 1.0), req.p("xf", 5.0), req.p("tf", 3.0));
            let grid = SpatialGrid::symmetric(req.p("half_width", 16.0), req.settings.grid_nx.unwrap_or(512))?;
            let design = splitting_density(a0, xf, tf, grid)?;
            let nt = req.p("nt", 600.0) as usize;
            let ff = ff_potential(&design, req.p("g1", 0.0), nt)?;
            let opts = AsymmetryOptions {
                intervals: nt,
                stretch: req.p("stretch", 50.0),
                ..AsymmetryOptions::new(req.settings.dt.unwrap_or(2e-3))
            };
            Ok(asymmetry_csv(&asymmetry_scan(&ff, &req.values("lambda", 0.0), &opts)?))
        }
        Kind::Expansion => {
            req.check_names(&["tf"], &["omega0", "omegaf", "intervals"])?;
            let (w0, wf) = (req.p("omega0", 1.0), req.p("omegaf", 0.1));
            let intervals = req.p("intervals", 2000.0) as usize;
            let width = 1.0 / w0.min(wf).sqrt();
            let grid = box_grid(0.0, 0.0, 14.0 * width, req.settings.grid_nx.unwrap_or(512))?;
            let rows: Vec<String> = req
                .values("tf", 1.0)
                .par_iter()
                .map(|&tf| {
                    let p = design_expansion(w0, wf, tf, intervals)?;
                    let dt = req.settings.dt.map(|dt| dt * tf).unwrap_or(tf / 1e4);
                    let opts = PropagateOptions::new(dt)
                        .target(harmonic_state(grid, 0, wf, 0.0))
                        .step_limit(None);
                    let (_, r) = propagate(&harmonic_state(grid, 0, w0, 0.0), &p.potential(), 0.0, tf, &opts)?;
                    Ok(format!(
                        "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        tf,
                        r.final_fidelity().unwrap_or(0.0),
                        r.mean_energy,
                        energy_bound(0, w0, wf, tf).bound
                    ))
                })
                .collect::<Result<_>>()?;
            Ok(std::iter::once("tf,fidelity,E_mean,B0\n".to_string()).chain(rows).collect())
        }
        Kind::CdIsing => {
            req.check_names(&["tf"], &["modes", "lambda0", "lambda1", "intervals"])?;
            let n = req.p("modes", 8.0) as usize;
            let intervals = req.p("intervals", 1000.0) as usize;
            let rows: Vec<String> = req
                .values("tf", 1.0)
                .par_iter()
                .map(|&tf| {
                    let m = IsingModeSet::tfim(n, req.p("lambda0", 2.0), req.p("lambda1", 0.0), tf)?;
                    let res = ising_ramp(&m, intervals, |_| true)?;
                    let bare: Vec<f64> = res.iter().map(|r| r.p_excited_bare).collect();
                    let cd: Vec<f64> = res.iter().map(|r| r.p_excited_cd).collect();
                    Ok(format!(
                        "{:.16e},{:.16e},{:.16e}\n",
                        tf,
                        defect_density(&bare),
                        defect_density(&cd)
                    ))
                })
                .collect::<Result<_>>()?;
            Ok(std::iter::once("tf,defects_bare,defects_cd\n".to_string()).chain(rows).collect())
        }
    }
}
