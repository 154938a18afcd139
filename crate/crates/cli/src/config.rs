//! Experiment configuration: TOML file, `--set` overrides, validation and
//! conversion into solver inputs.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trefftz_core::assembly::{BoundaryCondition, FluxParams, Problem, QuadratureOptions};
use trefftz_core::basis::{BasisFamily, BasisSpec, DegreeSpec};
use trefftz_core::data::{InitialData, ScalarFn, Source};
use trefftz_core::mesh::{build_mesh, MaterialLayout, Mesh, SpaceTimeDomain};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub mesh: MeshConfig,
    pub materials: MaterialsConfig,
    pub basis: BasisConfig,
    pub flux: FluxConfig,
    pub bc: BcConfig,
    pub ic: IcConfig,
    pub source: SourceConfig,
    pub quadrature: QuadratureConfig,
    pub experiment: ExperimentSection,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub x_l: f64,
    pub x_r: f64,
    pub t_final: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { x_l: 0.0, x_r: 60.0, t_final: 60.0 }
    }
}

/// Uniform `hx` by `ht` cells unless `slab_heights` is given, in which case
/// `partitions` lists the interior x-nodes of every slab (a single list is
/// shared by all slabs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub hx: f64,
    pub ht: f64,
    pub slab_heights: Vec<f64>,
    pub partitions: Vec<Vec<f64>>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { hx: 1.0, ht: 1.0, slab_heights: Vec::new(), partitions: Vec::new() }
    }
}

impl MeshConfig {
    pub fn is_explicit(&self) -> bool {
        !self.slab_heights.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialsConfig {
    pub breakpoints: Vec<f64>,
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Default for MaterialsConfig {
    fn default() -> Self {
        Self { breakpoints: Vec::new(), eps: vec![1.0], mu: vec![1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Trefftz,
    Full,
}

impl From<Family> for BasisFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Trefftz => BasisFamily::TrefftzTransport,
            Family::Full => BasisFamily::FullPolynomial,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(BasisFamily::from(*self).name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub family: Family,
    pub degree: usize,
    /// Per-element degrees in element order; overrides `degree` when set.
    pub degrees: Vec<usize>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { family: Family::Trefftz, degree: 2, degrees: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub per_face_scaling: bool,
}

impl Default for FluxConfig {
    fn default() -> Self {
        let f = FluxParams::default();
        Self { alpha: f.alpha, beta: f.beta, delta: f.delta, per_face_scaling: f.per_face_scaling }
    }
}

/// A function of one variable (of `t` for boundary data).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Polynomial {
        coeffs: Vec<f64>,
    },
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    Table {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl FnSpec {
    pub fn to_scalar(&self) -> ScalarFn {
        match self {
            FnSpec::Zero => ScalarFn::Zero,
            FnSpec::Constant { value } => ScalarFn::Constant(*value),
            FnSpec::Polynomial { coeffs } => ScalarFn::Polynomial(coeffs.clone()),
            FnSpec::Gaussian { center, width, amplitude } => ScalarFn::gaussian(*center, *width, *amplitude),
            FnSpec::Table { x, y } => ScalarFn::Table(x.iter().copied().zip(y.iter().copied()).collect()),
        }
    }

    fn check(&self, field: &str, out: &mut Vec<Diagnostic>) {
        match self {
            FnSpec::Gaussian { width, .. } if !(*width > 0.0) => {
                out.push(Diagnostic::new(format!("{field}.width"), format!("must be positive (got {width})")))
            }
            FnSpec::Table { x, y } => check_table(field, x, &[("y", y)], out),
            _ => {}
        }
    }
}

fn check_table(field: &str, x: &[f64], columns: &[(&str, &Vec<f64>)], out: &mut Vec<Diagnostic>) {
    if x.is_empty() {
        out.push(Diagnostic::new(format!("{field}.x"), "must not be empty"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        out.push(Diagnostic::new(format!("{field}.x"), "must be strictly increasing"));
    }
    for (name, col) in columns {
        if col.len() != x.len() {
            out.push(Diagnostic::new(
                format!("{field}.{name}"),
                format!("has {} entries but {field}.x has {}", col.len(), x.len()),
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    #[default]
    Pec,
    Dirichlet,
    Robin,
}

/// Lateral data: `E` for Dirichlet, the ingoing characteristic
/// `sqrt(eps) E ± sqrt(mu) H` for Robin. Ignored for PEC.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcConfig {
    pub kind: BcKind,
    pub left: FnSpec,
    pub right: FnSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcConfig {
    /// `E0 = amplitude_e g`, `H0 = amplitude_h g` with
    /// `g(x) = exp(-(x - center)^2 / width)`.
    Gaussian {
        center: f64,
        width: f64,
        amplitude_e: f64,
        amplitude_h: f64,
    },
    Polynomial {
        e: Vec<f64>,
        h: Vec<f64>,
    },
    Table {
        x: Vec<f64>,
        e: Vec<f64>,
        h: Vec<f64>,
    },
}

impl Default for IcConfig {
    fn default() -> Self {
        IcConfig::Gaussian { center: 10.0, width: 10.0, amplitude_e: 1.0, amplitude_h: 1.0 }
    }
}

impl IcConfig {
    pub fn to_initial(&self) -> InitialData {
        match self {
            IcConfig::Gaussian { center, width, amplitude_e, amplitude_h } => InitialData::new(
                ScalarFn::gaussian(*center, *width, *amplitude_e),
                ScalarFn::gaussian(*center, *width, *amplitude_h),
            ),
            IcConfig::Polynomial { e, h } => {
                InitialData::new(ScalarFn::Polynomial(e.clone()), ScalarFn::Polynomial(h.clone()))
            }
            IcConfig::Table { x, e, h } => {
                let col = |v: &Vec<f64>| ScalarFn::Table(x.iter().copied().zip(v.iter().copied()).collect());
                InitialData::new(col(e), col(h))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    #[default]
    None,
    /// Spatially constant current `J(t) = sum_k coeffs[k] t^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl SourceConfig {
    pub fn to_source(&self) -> Option<Source> {
        match self {
            SourceConfig::None => None,
            SourceConfig::Polynomial { coeffs } => {
                let j = ScalarFn::Polynomial(coeffs.clone());
                Some(Source::new(move |_, t| j.value(t)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub face: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<usize>,
    /// Points per direction for error integrals; `p + 6` by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Run,
    SweepH,
    SweepP,
    SweepFlux,
    Spectrum,
    Energy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Run => "run",
            ExperimentKind::SweepH => "sweep_h",
            ExperimentKind::SweepP => "sweep_p",
            ExperimentKind::SweepFlux => "sweep_flux",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Written to the `experiment` column.
    pub id: String,
    /// Mesh sizes of `sweep_h` (`hx = ht = h`).
    pub h_values: Vec<f64>,
    /// Degrees of `sweep_h`, `sweep_p` and `spectrum`. Empty means
    /// `[basis.degree]`, `0..=10` and `0..=5` respectively.
    pub degrees: Vec<usize>,
    /// Values of alpha and beta on the `sweep_flux` grid.
    pub flux_values: Vec<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Run,
            id: "gaussian".into(),
            h_values: vec![2.0, 1.0, 0.5, 0.25],
            degrees: Vec::new(),
            flux_values: (0..=10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

impl ExperimentSection {
    pub fn resolved_degrees(&self, basis_degree: usize) -> Vec<usize> {
        if !self.degrees.is_empty() {
            return self.degrees.clone();
        }
        match self.kind {
            ExperimentKind::SweepP => (0..=10).collect(),
            ExperimentKind::Spectrum => (0..=5).collect(),
            _ => vec![basis_degree],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: String,
    /// Tab-separated copy of the result table for plotting tools.
    pub plot: String,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "output".into(), csv: "results.csv".into(), plot: "results.tsv".into(), svg: true }
    }
}

/// One violated precondition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

/// Metadata table of a run manifest; skipped when a manifest is read back
/// as a config.
pub const MANIFEST_TABLE: &str = "run";

impl ExperimentConfig {
    /// Reads `path` (or the defaults when `None`) and applies `key=value`
    /// overrides with dotted keys, e.g. `flux.alpha=0.3`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_owned(), source })?,
            None => String::new(),
        };
        let origin = path.map_or_else(|| "<defaults>".to_owned(), |p| p.display().to_string());
        Self::from_toml(&text, &origin, overrides)
    }

    pub fn from_toml(text: &str, origin: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let parse_err = |e: toml::de::Error| ConfigError::Parse { origin: origin.to_owned(), message: e.to_string() };
        let mut table: toml::Table = toml::from_str(text).map_err(parse_err)?;
        let is_manifest = table.remove(MANIFEST_TABLE).is_some();
        if overrides.is_empty() && !is_manifest {
            // Deserialize from the text itself so errors carry line numbers.
            return toml::from_str(text).map_err(parse_err);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse {
            origin: if overrides.is_empty() { origin.to_owned() } else { format!("{origin} with --set overrides") },
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// All violated preconditions; empty for a runnable configuration.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let d = &self.domain;
        if !(d.x_r > d.x_l) {
            out.push(Diagnostic::new("domain.x_r", format!("must exceed domain.x_l (got {} <= {})", d.x_r, d.x_l)));
        }
        if !(d.t_final > 0.0) {
            out.push(Diagnostic::new("domain.t_final", format!("must be positive (got {})", d.t_final)));
        }
        let domain_ok = out.is_empty();

        let m = &self.mesh;
        if m.is_explicit() {
            if m.slab_heights.iter().any(|h| !(*h > 0.0)) {
                out.push(Diagnostic::new("mesh.slab_heights", "must all be positive"));
            }
            if !(m.partitions.len() <= 1 || m.partitions.len() == m.slab_heights.len()) {
                out.push(Diagnostic::new(
                    "mesh.partitions",
                    format!("has {} entries for {} slabs", m.partitions.len(), m.slab_heights.len()),
                ));
            }
        } else {
            for (name, h) in [("mesh.hx", m.hx), ("mesh.ht", m.ht)] {
                if !(h > 0.0) {
                    out.push(Diagnostic::new(name, format!("must be positive (got {h})")));
                }
            }
        }

        let mat = &self.materials;
        let n_layers = mat.breakpoints.len() + 1;
        for (name, v) in [("materials.eps", &mat.eps), ("materials.mu", &mat.mu)] {
            if v.len() != n_layers {
                out.push(Diagnostic::new(
                    name,
                    format!("needs {n_layers} values for {} breakpoints (got {})", mat.breakpoints.len(), v.len()),
                ));
            }
            if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                out.push(Diagnostic::new(name, "must be positive"));
            }
        }
        if mat.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            out.push(Diagnostic::new("materials.breakpoints", "must be strictly increasing"));
        }
        if mat.breakpoints.iter().any(|b| !(*b > d.x_l && *b < d.x_r)) {
            out.push(Diagnostic::new("materials.breakpoints", format!("must lie inside ({}, {})", d.x_l, d.x_r)));
        }

        let f = &self.flux;
        for (name, v) in [("flux.alpha", f.alpha), ("flux.beta", f.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Diagnostic::new(name, format!("must be positive or zero (got {v})")));
            }
        }
        if !(f.delta > 0.0 && f.delta < 1.0) {
            out.push(Diagnostic::new("flux.delta", format!("must lie in (0, 1) (got {})", f.delta)));
        }

        if self.bc.kind != BcKind::Pec {
            self.bc.left.check("bc.left", &mut out);
            self.bc.right.check("bc.right", &mut out);
        }
        match &self.ic {
            IcConfig::Gaussian { width, .. } if !(*width > 0.0) => {
                out.push(Diagnostic::new("ic.width", format!("must be positive (got {width})")))
            }
            IcConfig::Table { x, e, h } => check_table("ic", x, &[("e", e), ("h", h)], &mut out),
            _ => {}
        }
        if self.source != SourceConfig::None && self.basis.family == Family::Trefftz {
            out.push(Diagnostic::new(
                "source",
                "is not supported by the Trefftz basis, which only solves the homogeneous equations; \
                 use basis.family = \"full\" or remove the source",
            ));
        }

        let e = &self.experiment;
        let explicit_degrees = !self.basis.degrees.is_empty();
        match e.kind {
            ExperimentKind::SweepH => {
                if e.h_values.len() < 3 {
                    out.push(Diagnostic::new("experiment.h_values", "needs at least 3 mesh sizes for a rate fit"));
                }
                if e.h_values.iter().any(|h| !(*h > 0.0)) {
                    out.push(Diagnostic::new("experiment.h_values", "must all be positive"));
                }
                if m.is_explicit() {
                    out.push(Diagnostic::new(
                        "mesh.slab_heights",
                        "must be empty for sweep_h, which builds uniform meshes",
                    ));
                }
            }
            ExperimentKind::SweepFlux => {
                if e.flux_values.is_empty() || e.flux_values.iter().any(|v| !(*v >= 0.0)) {
                    out.push(Diagnostic::new(
                        "experiment.flux_values",
                        "must be a non-empty list of non-negative values",
                    ));
                }
            }
            ExperimentKind::Spectrum => {
                if m.is_explicit() {
                    out.push(Diagnostic::new(
                        "mesh.slab_heights",
                        "must be empty for spectrum, which needs identical slabs",
                    ));
                } else if m.ht > 0.0 && d.t_final < 2.0 * m.ht * (1.0 - 1e-12) {
                    out.push(Diagnostic::new("domain.t_final", "must span at least two slabs for spectrum"));
                }
            }
            _ => {}
        }
        let sweeps_degree =
            matches!(e.kind, ExperimentKind::SweepH | ExperimentKind::SweepP | ExperimentKind::Spectrum);
        if explicit_degrees && sweeps_degree {
            out.push(Diagnostic::new("basis.degrees", format!("cannot be combined with {}", e.kind.name())));
        }
        if e.id.contains([',', '\n', '"']) {
            out.push(Diagnostic::new("experiment.id", "must not contain commas, quotes or newlines"));
        }

        // Mesh-level checks need a sane domain and material layout.
        if domain_ok && out.iter().all(|d| !d.field.starts_with("materials") && !d.field.starts_with("mesh")) {
            match self.build_mesh(None) {
                Ok(mesh) => {
                    if explicit_degrees && self.basis.degrees.len() != mesh.elements.len() {
                        out.push(Diagnostic::new(
                            "basis.degrees",
                            format!("has {} entries for {} elements", self.basis.degrees.len(), mesh.elements.len()),
                        ));
                    }
                }
                Err(trefftz_core::Error::NonconformingMaterial { slab, breakpoint }) => out.push(Diagnostic::new(
                    "materials.breakpoints",
                    format!("value {breakpoint} is not a node of the x-partition of slab {slab}"),
                )),
                Err(err) => out.push(Diagnostic::new("mesh", err.to_string())),
            }
        }
        out
    }

    pub fn space_time_domain(&self) -> trefftz_core::Result<SpaceTimeDomain> {
        SpaceTimeDomain::new(self.domain.x_l, self.domain.x_r, self.domain.t_final)
    }

    pub fn material_layout(&self) -> trefftz_core::Result<MaterialLayout> {
        let m = &self.materials;
        MaterialLayout::new(m.breakpoints.clone(), m.eps.clone(), m.mu.clone())
    }

    /// Mesh of the configuration, with cell size `h` in both directions
    /// when given.
    pub fn build_mesh(&self, h: Option<f64>) -> trefftz_core::Result<Mesh> {
        let domain = self.space_time_domain()?;
        let materials = self.material_layout()?;
        let m = &self.mesh;
        if let Some(h) = h {
            return Mesh::uniform(domain, materials, h, h);
        }
        if m.is_explicit() {
            let partitions = match m.partitions.len() {
                0 => vec![Vec::new(); m.slab_heights.len()],
                1 => vec![m.partitions[0].clone(); m.slab_heights.len()],
                _ => m.partitions.clone(),
            };
            build_mesh(domain, materials, &m.slab_heights, &partitions)
        } else {
            Mesh::uniform(domain, materials, m.hx, m.ht)
        }
    }

    pub fn basis_spec(&self, degree: Option<usize>) -> BasisSpec {
        let family = self.basis.family.into();
        match degree {
            Some(p) => BasisSpec::uniform(family, p),
            None if !self.basis.degrees.is_empty() => {
                BasisSpec { family, degrees: DegreeSpec::PerElement(self.basis.degrees.clone()) }
            }
            None => BasisSpec::uniform(family, self.basis.degree),
        }
    }

    pub fn flux_params(&self) -> FluxParams {
        FluxParams {
            alpha: self.flux.alpha,
            beta: self.flux.beta,
            delta: self.flux.delta,
            per_face_scaling: self.flux.per_face_scaling,
        }
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        let (l, r) = (self.bc.left.to_scalar(), self.bc.right.to_scalar());
        match self.bc.kind {
            BcKind::Pec => BoundaryCondition::Pec,
            BcKind::Dirichlet => BoundaryCondition::Dirichlet { left: l, right: r },
            BcKind::Robin => BoundaryCondition::Robin { left: l, right: r },
        }
    }

    pub fn problem(&self, flux: FluxParams) -> Problem {
        let mut p = Problem::new(flux, self.boundary_condition(), self.ic.to_initial());
        p.source = self.source.to_source();
        p.quadrature = QuadratureOptions { face: self.quadrature.face, data: self.quadrature.data };
        p
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let bad = |reason: &str| ConfigError::Override { spec: spec.to_owned(), reason: reason.to_owned() };
    let (key, raw) = spec.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|k| k.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let raw = raw.trim();
    // Anything that is not a TOML value is taken as a bare string.
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let (last, parents) = path.split_last().expect("non-empty key");
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| bad(&format!("`{k}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
