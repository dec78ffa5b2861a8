//! Declarative run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::{clearance_of, EnergyOptions};
use crate::error::{Error, Result};
use crate::fields::Dislocation;
use crate::geometry::{Domain, Outer, Point};
use crate::material::MaterialConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Validate,
    Energy,
    Sweep,
    Forces,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DislocationSpec {
    pub x: f64,
    pub y: f64,
    pub bu: f64,
    pub bw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub h: f64,
    pub grade: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { h: 0.05, grade: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual of the conjugate gradient solves.
    pub solver: f64,
    /// Gauss order of the triangle rules.
    pub quadrature_order: usize,
    /// Relative error allowed by the validate experiment.
    pub validate: f64,
    /// Finite-difference step of the force oracle; scale-relative default.
    pub fd_step: Option<f64>,
    /// Cutoff radius of the self energy; defaults to a quarter of the
    /// smallest clearance.
    pub cutoff: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: 1e-10,
            quadrature_order: 6,
            validate: 0.01,
            fd_step: None,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub result: String,
    pub sweep: String,
    /// Write `*.qcmesh` dumps of the punctured meshes.
    pub meshes: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            result: "result.json".into(),
            sweep: "sweep.csv".into(),
            meshes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub material: MaterialConstants<f64>,
    pub domain: Outer,
    pub dislocations: Vec<DislocationSpec>,
    pub experiment: Experiment,
    /// Defaults to `{0.1, 0.05, 0.025, 0.0125}` times the domain scale.
    #[serde(default)]
    pub eps_ladder: Vec<f64>,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn domain(&self) -> Domain {
        Domain {
            outer: self.domain.clone(),
            holes: Vec::new(),
        }
    }

    pub fn dislocations(&self) -> Vec<Dislocation<f64>> {
        self.dislocations
            .iter()
            .map(|d| Dislocation::new(Point::new(d.x, d.y), d.bu, d.bw))
            .collect()
    }

    /// The configured ladder, or the default geometric ladder.
    pub fn ladder(&self) -> Vec<f64> {
        if self.eps_ladder.is_empty() {
            let s = self.domain().scale();
            [0.1, 0.05, 0.025, 0.0125].iter().map(|e| e * s).collect()
        } else {
            self.eps_ladder.clone()
        }
    }

    pub fn energy_options(&self) -> EnergyOptions {
        EnergyOptions {
            h: self.mesh.h,
            grade: self.mesh.grade,
            order: self.tolerances.quadrature_order,
            tol: self.tolerances.solver,
            ..EnergyOptions::default()
        }
    }

    /// Every check that can run before meshing or solving.
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        let domain = self.domain();
        domain.validate()?;
        let ds = self.dislocations();
        if ds.is_empty() {
            return Err(Error::Config("at least one dislocation is required".into()));
        }
        for (i, d) in ds.iter().enumerate() {
            if ![d.position.x, d.position.y, d.b_u, d.b_w].iter().all(|v| v.is_finite()) {
                return Err(Error::Config(format!("dislocation {i} has non-finite data")));
            }
            if d.is_trivial() {
                return Err(Error::Config(format!("dislocation {i} has zero Burgers moduli")));
            }
            if !(domain.dist_to_outer(d.position) > 0.0) {
                return Err(Error::Config(format!("dislocation {i} is not strictly inside the domain")));
            }
            if let Some(j) = ds[..i].iter().position(|e| e.position == d.position) {
                return Err(Error::Config(format!("dislocations {j} and {i} coincide")));
            }
        }
        let MeshSpec { h, grade } = self.mesh;
        if !(h > 0.0 && h.is_finite()) || !(grade > 0.0 && grade <= 1.0) {
            return Err(Error::Config(format!("mesh needs h > 0 and 0 < grade <= 1, got h = {h}, grade = {grade}")));
        }
        let t = &self.tolerances;
        if !(t.solver > 0.0 && t.solver < 1.0) || !(1..=32).contains(&t.quadrature_order) || !(t.validate > 0.0) {
            return Err(Error::Config("tolerances out of range".into()));
        }
        if t.fd_step.is_some_and(|v| !(v > 0.0)) || t.cutoff.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::Config("fd_step and cutoff must be positive".into()));
        }
        let ladder = self.ladder();
        let limit = (0..ds.len()).map(|k| clearance_of(&domain, &ds, k)).fold(f64::INFINITY, f64::min) * 0.5;
        for (i, &e) in ladder.iter().enumerate() {
            if !(e > 0.0 && e < limit) {
                return Err(Error::Config(format!(
                    "eps_ladder[{i}] = {e} must lie in (0, {limit}) so the cores stay disjoint and inside the domain"
                )));
            }
            if ladder[..i].contains(&e) {
                return Err(Error::Config(format!("eps_ladder value {e} is repeated")));
            }
        }
        if self.experiment == Experiment::Sweep && ladder.len() < 3 {
            return Err(Error::Config("a sweep needs at least 3 eps values".into()));
        }
        if self.experiment == Experiment::Validate {
            self.validate_target()?;
        }
        Ok(())
    }

    /// Radius of the disc for the validate experiment, which needs a single
    /// dislocation at the center of a disc.
    pub fn validate_target(&self) -> Result<f64> {
        match (&self.domain, self.dislocations.as_slice()) {
            (Outer::Disc { center, radius }, [d]) if Point::new(d.x, d.y).dist(*center) <= 1e-12 * radius => Ok(*radius),
            _ => Err(Error::Config(
                "validate needs a single dislocation at the center of a disc domain".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "material": {"C": 1.0, "K": 1.0, "R": 0.0},
        "domain": {"disc": {"center": [0.0, 0.0], "radius": 1.0}},
        "dislocations": [{"x": 0.0, "y": 0.0, "bu": 1.0, "bw": 0.0}],
        "experiment": "validate"
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(BASE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.ladder(), vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(c.mesh, MeshSpec::default());
        assert_eq!(c.outputs.result, "result.json");
    }

    #[test]
    fn round_trip_is_identity() {
        let mut c = RunConfig::from_json(BASE).unwrap();
        c.tolerances.fd_step = Some(1e-3);
        c.domain = Outer::Polygon {
            vertices: vec![Point::new(-1.0, -1.0), Point::new(1.0, -1.0), Point::new(0.0, 1.0)],
        };
        let back = RunConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_material = BASE.replace(r#""R": 0.0"#, r#""R": 1.0"#);
        let err = RunConfig::from_json(&bad_material).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("C*K > R^2"));
        let outside = BASE.replace(r#""x": 0.0"#, r#""x": 2.0"#);
        assert!(RunConfig::from_json(&outside).unwrap().validate().is_err());
        let off_center = BASE.replace(r#""x": 0.0"#, r#""x": 0.3"#);
        assert!(RunConfig::from_json(&off_center).unwrap().validate().is_err());
        let energy = off_center.replace("validate", "energy");
        RunConfig::from_json(&energy).unwrap().validate().unwrap();
        let big_eps = BASE.replace("\"experiment\"", "\"eps_ladder\": [0.6, 0.1, 0.05], \"experiment\"");
        assert!(RunConfig::from_json(&big_eps).unwrap().validate().is_err());
        assert!(RunConfig::from_json(&BASE.replace("\"bu\"", "\"bz\"")).is_err());
    }
}
