use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::FrequencySpec;
use crate::geometry::{GraphDomain, Shape};
use crate::harmonic::{exact_polynomial, MfsSpec, Polynomial};
use crate::quadrature::QuadratureSpec;
use crate::space::{Region, Vec3, VERT};
use crate::straighten::StraightenSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FreqSweep,
    Doubling,
    DerivativeCheck,
    StraightenVerify,
    CriticalPipeline,
    ConformalCount,
    SpvarFit,
    Simon,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::FreqSweep,
        Experiment::Doubling,
        Experiment::DerivativeCheck,
        Experiment::StraightenVerify,
        Experiment::CriticalPipeline,
        Experiment::ConformalCount,
        Experiment::SpvarFit,
        Experiment::Simon,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FreqSweep => "freq-sweep",
            Experiment::Doubling => "doubling",
            Experiment::DerivativeCheck => "derivative-check",
            Experiment::StraightenVerify => "straighten-verify",
            Experiment::CriticalPipeline => "critical-pipeline",
            Experiment::ConformalCount => "conformal-count",
            Experiment::SpvarFit => "spvar-fit",
            Experiment::Simon => "simon",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plot: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainBlock {
    /// `flat`, `quadratic-bump`, `power-alpha` or `cosine-window`.
    pub family: String,
    pub amplitude: f64,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub dimension: usize,
}

impl Default for DomainBlock {
    fn default() -> Self {
        Self { family: "flat".into(), amplitude: 0.0, alpha: 1.0, radius: 1.0, dimension: 2 }
    }
}

impl DomainBlock {
    pub fn shape(&self) -> Result<Shape> {
        let a = self.amplitude;
        Ok(match self.family.as_str() {
            "flat" => Shape::Flat,
            "quadratic-bump" => Shape::QuadraticBump { a },
            "power-alpha" => Shape::PowerAlpha { a, alpha: self.alpha },
            "cosine-window" => Shape::CosineWindow { a },
            other => return Err(Error::Config(format!("domain.family: unknown family `{other}`"))),
        })
    }

    pub fn build(&self) -> Result<GraphDomain> {
        GraphDomain::new(self.dimension, self.shape()?, self.radius).map_err(|e| Error::Config(format!("domain: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Poly,
    Mfs,
    Simon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldBlock {
    pub kind: FieldKind,
    /// Degree of the leading homogeneous harmonic polynomial.
    pub degree: usize,
    /// Extra `[degree, coefficient]` homogeneous harmonic terms.
    pub terms: Vec<[f64; 2]>,
    pub epsilon: f64,
}

impl Default for FieldBlock {
    fn default() -> Self {
        Self { kind: FieldKind::Poly, degree: 2, terms: Vec::new(), epsilon: 0.3 }
    }
}

impl FieldBlock {
    /// The polynomial `P_degree + sum c_k P_k`, vanishing on the flat boundary.
    pub fn polynomial(&self, dim: usize) -> Result<Polynomial> {
        let mut u = exact_polynomial(dim, self.degree).map_err(|e| Error::Config(format!("field.degree: {e}")))?;
        for [k, c] in &self.terms {
            if *k < 1.0 || k.fract() != 0.0 {
                return Err(Error::Config(format!("field.terms: degree {k} is not a positive integer")));
            }
            let p = exact_polynomial(dim, *k as usize).map_err(|e| Error::Config(format!("field.terms: {e}")))?;
            u = u.add(p.scale(*c));
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Centres as full coordinate lists (`[x, y]` in 2D, `[x, y, z]` in 3D; the last entry is vertical).
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub a_factors: Vec<f64>,
    /// Number of random samples where an experiment draws them.
    pub samples: usize,
    /// Half-height of the search box for the Simon experiment.
    pub extent: f64,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { centers: vec![vec![0.0, 0.0]], radii: vec![0.1, 0.25, 0.5, 1.0], a_factors: vec![2.0], samples: 100, extent: 12.0 }
    }
}

impl SweepBlock {
    pub fn center_points(&self, dim: usize) -> Result<Vec<Vec3>> {
        self.centers
            .iter()
            .map(|c| match (dim, c.as_slice()) {
                (2, [x, y]) => {
                    let mut p = Vec3::zeros();
                    p.x = *x;
                    p[VERT] = *y;
                    Ok(p)
                }
                (3, [x, y, z]) => Ok(Vec3::new(*x, *y, *z)),
                _ => Err(Error::Config(format!("sweep.centers: {c:?} does not have {dim} coordinates"))),
            })
            .collect()
    }
}

/// One experiment run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub domain: DomainBlock,
    #[serde(default)]
    pub field: FieldBlock,
    #[serde(default)]
    pub mfs: MfsSpec,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub freq: FrequencySpec,
    #[serde(default)]
    pub straighten: StraightenSpec,
    #[serde(default)]
    pub sweep: SweepBlock,
}

impl ExperimentConfig {
    /// Builtin configuration for an experiment.
    pub fn builtin(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            seed: 0,
            output: OutputBlock::default(),
            domain: DomainBlock::default(),
            field: FieldBlock::default(),
            mfs: MfsSpec::default(),
            quad: QuadratureSpec::default(),
            freq: FrequencySpec::default(),
            straighten: StraightenSpec::default(),
            sweep: SweepBlock::default(),
        };
        match experiment {
            Experiment::FreqSweep | Experiment::DerivativeCheck => {}
            Experiment::Doubling => {
                c.sweep.radii = vec![0.01, 0.02, 0.04];
                c.sweep.a_factors = vec![1.5, 2.0, 3.0];
            }
            Experiment::StraightenVerify => {
                c.domain = DomainBlock { family: "quadratic-bump".into(), amplitude: 0.3, radius: 1.0 / 6.0, ..Default::default() };
                c.field.kind = FieldKind::Mfs;
            }
            Experiment::CriticalPipeline => {
                c.domain = DomainBlock { family: "quadratic-bump".into(), amplitude: 0.05, radius: 0.015, ..Default::default() };
                c.field.kind = FieldKind::Mfs;
                c.mfs.window = 0.12;
            }
            Experiment::ConformalCount => {
                c.domain = DomainBlock { family: "quadratic-bump".into(), amplitude: 8e-4, radius: 1.0, ..Default::default() };
                c.field = FieldBlock { kind: FieldKind::Mfs, degree: 3, terms: vec![[1.0, 0.27]], epsilon: 0.3 };
                c.mfs.window = 2.5;
            }
            Experiment::SpvarFit => {
                c.field.terms = vec![[3.0, 0.3], [1.0, 0.5]];
                c.sweep.centers = vec![vec![0.0, 1.0]];
                c.sweep.radii = vec![0.2, 0.4];
            }
            Experiment::Simon => {
                c.domain.dimension = 3;
                c.field.kind = FieldKind::Simon;
                c.sweep.centers = vec![vec![0.0, 0.0, 0.0]];
            }
        }
        c
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &span_note(text, e.span())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let domain = self.domain.build()?;
        let dim = domain.dim();
        self.sweep.center_points(dim)?;
        if self.sweep.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("sweep.radii must be positive".into()));
        }
        if self.sweep.a_factors.iter().any(|a| !(*a > 1.0)) {
            return Err(Error::Config("sweep.a_factors must exceed 1".into()));
        }
        match (self.field.kind, self.experiment) {
            (FieldKind::Simon, _) if dim != 3 => return Err(Error::Config("field.kind = simon needs domain.dimension = 3".into())),
            (_, Experiment::Simon) if self.field.kind != FieldKind::Simon => {
                return Err(Error::Config("experiment simon needs field.kind = simon".into()))
            }
            (_, Experiment::ConformalCount) if dim != 2 => return Err(Error::Config("conformal-count is planar: set domain.dimension = 2".into())),
            (FieldKind::Simon, e) if e != Experiment::Simon => return Err(Error::Config(format!("field.kind = simon is only used by the simon experiment, not {}", e.name()))),
            _ => {}
        }
        if self.field.kind != FieldKind::Simon {
            self.field.polynomial(dim)?;
        }
        Ok(())
    }

    /// Creates the output directory and checks it accepts files.
    pub fn prepare_output(&self) -> Result<PathBuf> {
        prepare_dir(&self.output.dir)
    }
}

pub fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("output.dir {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::Config(format!("output.dir {} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(dir.to_path_buf())
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(s) => {
            let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

pub const SCHEMA: &str = r#"# Experiment configuration (TOML). Every key is optional except `experiment`.
# Unknown keys are rejected.

experiment = "freq-sweep"   # freq-sweep | doubling | derivative-check | straighten-verify
                            # critical-pipeline | conformal-count | spvar-fit | simon
seed = 0                    # seed for every randomized sample

[output]
dir = "out"                 # created if missing; must be writable
plot = false                # also write SVG plots

[domain]
family = "flat"             # flat | quadratic-bump | power-alpha | cosine-window
amplitude = 0.0             # a in a|x|^2, a|x|^(1+alpha), a sum(1 - cos x_i)
alpha = 1.0                 # power-alpha exponent in (0, 1]
R = 1.0                     # localization radius
dimension = 2               # 2 or 3

[field]
kind = "poly"               # poly | mfs | simon
degree = 2                  # leading homogeneous harmonic polynomial vanishing on {x_d = 0}
terms = []                  # extra [degree, coefficient] homogeneous terms
epsilon = 0.3               # Simon fixture parameter (needs 2 eps^2 < 1/4)

[mfs]                       # fundamental-solution fit (kind = "mfs"); data are the polynomial
window = 1.0                # pulled onto the graph, u(x, x_d - phi(x))
charges = 400
offset = 0.08               # charge distance relative to window
boundary_tol = 1e-6
collocation_ratio = 4
rank_tol = 1e-12

[quad]
radial = 12
angular = 16
tol = 1e-8
max_depth = 12

[freq]
C_mod = 1.0
fd_step_rel = 1e-3

[straighten]
moll_pts = 96
ball_search_grid = 24
bump_radius = 0.2           # test-bump radius relative to the working radius

[sweep]
centers = [[0.0, 0.0]]      # full coordinates; the last entry is vertical
radii = [0.1, 0.25, 0.5, 1.0]
a_factors = [2.0]
samples = 100
extent = 12.0               # Simon search box half-height

# CSV schemas (first row of each file):
#   frequency.csv     center_x, center_y[, center_z], r, D, H_S, H_C, N_S, N_C, R_h, R_b, Err_r, W, quad_err
#   doubling.csv      center_x, center_y[, center_z], rho, a, ratio, exponent, dist, sphere_deviation, predictor
#   derivative.csv    center_x, center_y[, center_z], r, dist, fd, R_h, R_b, Err_r, rim, predicted, literal, rel_err
#   holder.csv        pair_dist, holder_ratio
#   conormal.csv      h, conormal_jump
#   weak_residual.csv center_x, center_y[, center_z], r, residual
#   critical.csv      x, y[, z], grad_norm, u_value, class
#   content.csv       r, count, count_r_pow
#   conformal.csv     N_freq, count, hopf_c
#   spvar.csv         x1_x, x1_y[, x1_z], x2_x, x2_y[, x2_z], r, lhs, rhs_core, ratio
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_text_parses() {
        let cfg = ExperimentConfig::parse(SCHEMA).unwrap();
        assert_eq!(cfg.experiment, Experiment::FreqSweep);
        assert_eq!(cfg.domain.radius, 1.0);
        assert_eq!(cfg.freq.c_mod, 1.0);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("experiment = \"doubling\"\n[quad]\ntol = 1e-6\n").unwrap();
        assert_eq!(cfg.quad.tol, 1e-6);
        assert_eq!(cfg.quad.radial, QuadratureSpec::default().radial);
        assert_eq!(cfg.mfs, MfsSpec::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "experiment = \"freq-sweep\"\nbogus = 1\n",
            "experiment = \"freq-sweep\"\n[domain]\nradius = 1.0\n",
            "experiment = \"freq-sweep\"\n[quad]\nrule = 3\n",
            "experiment = \"nope\"\n",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn inconsistent_blocks_are_rejected() {
        let bad = [
            "experiment = \"simon\"\n",
            "experiment = \"conformal-count\"\n[domain]\ndimension = 3\n[sweep]\ncenters = [[0.0, 0.0, 0.0]]\n",
            "experiment = \"freq-sweep\"\n[sweep]\ncenters = [[0.0, 0.0, 0.0]]\n",
            "experiment = \"freq-sweep\"\n[domain]\nfamily = \"wavy\"\n",
            "experiment = \"freq-sweep\"\n[field]\nterms = [[1.5, 1.0]]\n",
        ];
        for text in bad {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn builtins_validate() {
        for e in Experiment::ALL {
            let c = ExperimentConfig::builtin(e);
            c.validate().unwrap_or_else(|err| panic!("{}: {err}", e.name()));
            let round = toml::to_string(&c).unwrap();
            assert_eq!(ExperimentConfig::parse(&round).unwrap(), c);
            assert_eq!(Experiment::from_name(e.name()), Some(e));
        }
    }

    #[test]
    fn unwritable_output_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, b"x").unwrap();
        assert!(matches!(prepare_dir(&file.join("sub")), Err(Error::Config(_))));
        assert!(prepare_dir(&dir.path().join("a/b")).is_ok());
    }
}
