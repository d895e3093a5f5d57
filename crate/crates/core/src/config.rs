//! Run configuration (TOML) and the shipped presets.

use crate::error::{Error, Result};
use crate::exact::{BoundaryPulse, Cavity, ExactSolution, InitialPulse, MaterialParams, Mie, Sine1d, Standing2d, Zero};
use crate::material::Materials;
use crate::mesh::{Domain, RegionRule, Shape};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "1d-boundary")]
    Boundary1d,
    #[serde(rename = "1d-interface")]
    Interface1d,
    #[serde(rename = "2d-boundary")]
    Boundary2d,
    #[serde(rename = "2d-interface")]
    Interface2d,
}

impl ProblemKind {
    pub fn dims(self) -> usize {
        match self {
            ProblemKind::Boundary1d | ProblemKind::Interface1d => 1,
            _ => 2,
        }
    }

    pub fn has_interface(self) -> bool {
        matches!(self, ProblemKind::Interface1d | ProblemKind::Interface2d)
    }
}

/// Curve description. Ω is the inside of `boundary`; Ω⁻ the inside of `interface`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ShapeSpec {
    Interval { lo: f64, hi: f64 },
    Circle { center: [f64; 2], radius: f64 },
    /// {(x - point)·normal < 0}
    HalfSpace { point: [f64; 2], normal: [f64; 2] },
}

impl ShapeSpec {
    pub fn to_shape(&self) -> Shape {
        match self {
            ShapeSpec::Interval { lo, hi } => Shape::Interval { lo: *lo, hi: *hi },
            ShapeSpec::Circle { center, radius } => Shape::circle(*center, *radius),
            ShapeSpec::HalfSpace { point, normal } => Shape::HalfSpace { point: *point, normal: *normal },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<ShapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface: Option<ShapeSpec>,
}

impl Geometry {
    pub fn domain(&self) -> Domain {
        Domain { boundary: self.boundary.as_ref().map(|s| s.to_shape()), interface: self.interface.as_ref().map(|s| s.to_shape()) }
    }

    pub fn length(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }
}

/// Exact solution or boundary driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriverSpec {
    Sine1d { kappa: f64 },
    Standing2d { omega: f64 },
    Cavity { i: usize, j: usize },
    Mie { r0: f64, omega: f64, n_trunc: usize },
    BoundaryPulse { sigma: f64, t0: f64 },
    InitialPulse { sigma: f64, center: [f64; 2] },
    Zero,
}

impl DriverSpec {
    pub fn build(&self, dims: usize, mats: &Materials) -> Result<Arc<dyn ExactSolution>> {
        Ok(match self {
            DriverSpec::Sine1d { kappa } => Arc::new(Sine1d { kappa: *kappa }),
            DriverSpec::Standing2d { omega } => Arc::new(Standing2d { omega: *omega }),
            DriverSpec::Cavity { i, j } => Arc::new(Cavity::new(*i, *j)?),
            DriverSpec::Mie { r0, omega, n_trunc } => Arc::new(Mie::new(mats.plus, mats.minus, *r0, *omega, *n_trunc)?),
            DriverSpec::BoundaryPulse { sigma, t0 } => Arc::new(BoundaryPulse { dims, sigma: *sigma, t0: *t0 }),
            DriverSpec::InitialPulse { sigma, center } => Arc::new(InitialPulse { dims, sigma: *sigma, center: *center }),
            DriverSpec::Zero => Arc::new(Zero { dims }),
        })
    }
}

fn default_beta() -> f64 {
    5.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub m: usize,
    pub cfl: f64,
    pub c_h: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub t_final: f64,
    /// Cells per direction; `run` uses the first entry.
    pub n: Vec<usize>,
    /// Z = c = Z̄ = c̄ = 1 in the correction functional.
    #[serde(default = "default_true")]
    pub unit_weights: bool,
    #[serde(default)]
    pub region_rule: RegionRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Step count for `stability`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Penalty values swept by `cond` and `spectrum` (defaults to `[c_h]`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_h_list: Vec<f64>,
    /// CFL values swept by `spectrum` (defaults to `[cfl]`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cfl_list: Vec<f64>,
    /// Reference mesh for `self-converge`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_n: Option<usize>,
    pub geometry: Geometry,
    #[serde(default)]
    pub materials: Materials,
    pub driver: DriverSpec,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn dims(&self) -> usize {
        self.problem.dims()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(1..=2).contains(&self.m) {
            return bad(format!("m must be 1 or 2, got {}", self.m));
        }
        if !(self.cfl > 0.0) {
            return bad(format!("CFL must be positive, got {}", self.cfl));
        }
        for &c in std::iter::once(&self.c_h).chain(&self.c_h_list) {
            if !(c > 0.0 && c < 1.0) {
                return bad(format!("c_H must lie in (0, 1), got {c}"));
            }
        }
        if self.cfl_list.iter().any(|c| !(*c > 0.0)) {
            return bad("CFL list entries must be positive".into());
        }
        if !(self.beta >= 3.0) {
            return bad(format!("beta must be at least 3, got {}", self.beta));
        }
        if !(self.t_final >= 0.0) {
            return bad(format!("final time must be non-negative, got {}", self.t_final));
        }
        if self.n.is_empty() {
            return bad("mesh list n is empty".into());
        }
        let d = self.dims();
        if self.geometry.lo.len() != d || self.geometry.hi.len() != d {
            return bad(format!("geometry extents must have {d} entries for {:?}", self.problem));
        }
        if self.problem.has_interface() != self.geometry.interface.is_some() {
            return bad(format!("{:?} and the interface entry disagree", self.problem));
        }
        if !self.geometry.periodic && self.geometry.boundary.is_none() {
            return bad("a non-periodic problem needs a boundary".into());
        }
        for s in self.geometry.boundary.iter().chain(&self.geometry.interface) {
            let ok = matches!((d, s), (1, ShapeSpec::Interval { .. }) | (1, ShapeSpec::HalfSpace { .. }) | (2, ShapeSpec::Circle { .. }) | (2, ShapeSpec::HalfSpace { .. }));
            if !ok {
                return bad(format!("shape {s:?} does not fit a {d}D problem"));
            }
        }
        self.materials.validate()
    }

    pub fn driver(&self) -> Result<Arc<dyn ExactSolution>> {
        self.driver.build(self.dims(), &self.materials)
    }

    pub fn c_h_values(&self) -> Vec<f64> {
        if self.c_h_list.is_empty() {
            vec![self.c_h]
        } else {
            self.c_h_list.clone()
        }
    }

    pub fn cfl_values(&self) -> Vec<f64> {
        if self.cfl_list.is_empty() {
            vec![self.cfl]
        } else {
            self.cfl_list.clone()
        }
    }
}

pub const PRESETS: &[&str] = &["sine1d", "cavity", "mie", "stability1d", "stability2d", "spectrum1d", "pulse"];

fn base(problem: ProblemKind, geometry: Geometry, driver: DriverSpec) -> RunConfig {
    RunConfig {
        problem,
        m: 1,
        cfl: 0.9,
        c_h: 0.02,
        beta: 5.0,
        t_final: 1.0,
        n: vec![],
        unit_weights: true,
        region_rule: RegionRule::default(),
        seed: 0,
        output: None,
        steps: None,
        c_h_list: vec![],
        cfl_list: vec![],
        reference_n: None,
        geometry,
        materials: Materials::default(),
        driver,
    }
}

fn magnetic_dielectric() -> Materials {
    Materials { plus: MaterialParams { mu: 1.0, eps: 1.0 }, minus: MaterialParams { mu: 2.0, eps: 2.25 } }
}

/// Shipped experiment setups.
pub fn preset(name: &str) -> Result<RunConfig> {
    let interval = |lo: f64, hi: f64| Geometry { lo: vec![0.0], hi: vec![1.0], periodic: false, boundary: Some(ShapeSpec::Interval { lo, hi }), interface: None };
    let unit_circle_box = |r: f64| Geometry {
        lo: vec![0.0, 0.0],
        hi: vec![1.0, 1.0],
        periodic: false,
        boundary: Some(ShapeSpec::Circle { center: [0.5, 0.5], radius: r }),
        interface: None,
    };
    let c = match name {
        "sine1d" => RunConfig {
            c_h: 0.1,
            t_final: 20.0,
            n: vec![200, 400, 800, 1600],
            ..base(ProblemKind::Boundary1d, interval(PI / 50.0, 1.0 - PI / 100.0), DriverSpec::Sine1d { kappa: 250.0 })
        },
        "cavity" => RunConfig {
            n: vec![88, 176, 352],
            ..base(
                ProblemKind::Boundary2d,
                Geometry {
                    lo: vec![-1.1, -1.1],
                    hi: vec![1.1, 1.1],
                    periodic: false,
                    boundary: Some(ShapeSpec::Circle { center: [0.0, 0.0], radius: 1.0 }),
                    interface: None,
                },
                DriverSpec::Cavity { i: 2, j: 11 },
            )
        },
        "mie" => RunConfig {
            n: vec![80, 160, 320],
            materials: magnetic_dielectric(),
            ..base(
                ProblemKind::Interface2d,
                Geometry {
                    lo: vec![-1.0, -1.0],
                    hi: vec![1.0, 1.0],
                    periodic: false,
                    boundary: Some(ShapeSpec::Circle { center: [0.0, 0.0], radius: 0.8 }),
                    interface: Some(ShapeSpec::Circle { center: [0.0, 0.0], radius: 0.6 }),
                },
                DriverSpec::Mie { r0: 0.6, omega: 2.0 * PI, n_trunc: 40 },
            )
        },
        "stability1d" => RunConfig {
            steps: Some(5000),
            n: vec![25, 50, 100],
            ..base(ProblemKind::Boundary1d, interval(PI / 50.0, 1.0 - PI / 100.0), DriverSpec::Zero)
        },
        "stability2d" => RunConfig {
            steps: Some(2000),
            n: vec![50],
            ..base(ProblemKind::Boundary2d, unit_circle_box(0.45), DriverSpec::Zero)
        },
        "spectrum1d" => {
            let (hmax, hmin) = (1.0 / 25.0, 1.0 / 1600.0);
            RunConfig {
                c_h: 0.1,
                n: vec![25, 50],
                c_h_list: vec![0.1, 0.02],
                cfl_list: vec![0.5, 0.9],
                ..base(ProblemKind::Boundary1d, interval(hmax - hmin / 3.0, 1.0 - hmax + 5.0 * hmin / 12.0), DriverSpec::Zero)
            }
        }
        "pulse" => RunConfig {
            n: vec![50, 100, 200],
            reference_n: Some(400),
            materials: magnetic_dielectric(),
            ..base(
                ProblemKind::Interface2d,
                Geometry {
                    interface: Some(ShapeSpec::Circle { center: [0.5, 0.5], radius: 0.25 }),
                    ..unit_circle_box(0.45)
                },
                DriverSpec::BoundaryPulse { sigma: 0.02, t0: 0.3 },
            )
        },
        other => return Err(Error::Config(format!("unknown preset '{other}' (known: {})", PRESETS.join(", ")))),
    };
    c.validate()?;
    Ok(c)
}
