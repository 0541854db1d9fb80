//! System files: a JSON envelope with inline matrices, or the same envelope
//! pointing at Matrix Market `array real general` files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use phdae_core::analyze::Pencil;
use phdae_core::numkernel::RealMatrix;
use phdae_core::structures::{
    DHSystem, DiracPair, ExtendedHDAE, LagrangePair, MonotoneAnnihilatorSystem, StructureKind,
};
use phdae_core::{Mat, TolerancePolicy};

use crate::report::CliError;

/// Inline matrix or a path relative to the system file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(RealMatrix),
    File(String),
}

/// Partial tolerance settings; unset fields keep their defaults.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub relative_rank_tol: Option<f64>,
    pub structure_tol: Option<f64>,
    pub cluster_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: TolerancePolicy) -> TolerancePolicy {
        TolerancePolicy {
            relative_rank_tol: self.relative_rank_tol.or(base.relative_rank_tol),
            structure_tol: self.structure_tol.unwrap_or(base.structure_tol),
            cluster_tol: self.cluster_tol.unwrap_or(base.cluster_tol),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub kind: String,
    pub matrices: BTreeMap<String, MatrixSource>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
}

impl SystemFile {
    pub fn inline(kind: &str, matrices: &[(&str, &Mat)]) -> Self {
        SystemFile {
            kind: kind.to_string(),
            matrices: matrices
                .iter()
                .map(|(n, m)| (n.to_string(), MatrixSource::Inline(RealMatrix::from_mat(m))))
                .collect(),
            parameters: BTreeMap::new(),
            tolerances: None,
            variables: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Structure(StructureKind),
    /// A bare pencil `lambda E - A`.
    Pencil,
}

#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub kind: SystemKind,
    pub matrices: BTreeMap<String, Mat>,
    pub tolerances: ToleranceOverrides,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// Dense Matrix Market body, column-major.
pub fn parse_matrix_market(text: &str) -> Result<Mat, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| usage("empty Matrix Market file"))?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(usage("missing %%MatrixMarket matrix header"));
    }
    if fields[2] != "array" || fields[3] != "real" || fields[4] != "general" {
        return Err(usage(format!("unsupported Matrix Market format '{}'", fields[2..].join(" "))));
    }
    let mut tokens = lines
        .filter(|l| !l.trim_start().starts_with('%'))
        .flat_map(|l| l.split_whitespace())
        .map(str::to_string);
    let mut next_usize = |what: &str| -> Result<usize, CliError> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| usage(format!("bad Matrix Market {what}")))
    };
    let rows = next_usize("row count")?;
    let cols = next_usize("column count")?;
    let values: Vec<f64> = tokens
        .map(|t| t.parse::<f64>().map_err(|_| usage(format!("bad Matrix Market entry '{t}'"))))
        .collect::<Result<_, _>>()?;
    if values.len() != rows * cols {
        return Err(usage(format!("expected {} entries, found {}", rows * cols, values.len())));
    }
    Ok(Mat::from_column_slice(rows, cols, &values))
}

pub fn write_matrix_market(m: &Mat) -> String {
    let mut s = format!("%%MatrixMarket matrix array real general\n{} {}\n", m.nrows(), m.ncols());
    for v in m.iter() {
        s.push_str(&format!("{v:.16e}\n"));
    }
    s
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load(path: &Path) -> Result<LoadedSystem, CliError> {
    let text = read(path)?;
    let file: SystemFile =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let kind = match file.kind.as_str() {
        "pencil" => SystemKind::Pencil,
        k => SystemKind::Structure(k.parse().map_err(|e| usage(format!("{e}")))?),
    };
    let mut matrices = BTreeMap::new();
    for (name, src) in &file.matrices {
        let m = match src {
            MatrixSource::Inline(r) => r.to_mat().map_err(|e| usage(format!("matrix {name}: {e}")))?,
            MatrixSource::File(rel) => {
                let p = resolve(base, rel);
                parse_matrix_market(&read(&p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?
            }
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(usage(format!("matrix {name} has non-finite entries")));
        }
        matrices.insert(name.clone(), m);
    }
    let required: &[&str] = match kind {
        SystemKind::Pencil => &["E", "A"],
        SystemKind::Structure(k) => k.required(),
    };
    for r in required {
        if !matrices.contains_key(*r) {
            return Err(usage(format!("kind '{}' needs matrix {r}", file.kind)));
        }
    }
    Ok(LoadedSystem { kind, matrices, tolerances: file.tolerances.unwrap_or_default() })
}

/// A vector given as a JSON array, a one-column JSON matrix or a one-column
/// Matrix Market file.
pub fn load_vector(path: &Path) -> Result<DVector<f64>, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with("%%") {
        let m = parse_matrix_market(&text)?;
        if m.ncols() != 1 {
            return Err(usage("vector file must have one column"));
        }
        return Ok(DVector::from_column_slice(m.as_slice()));
    }
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(DVector::from_vec(v));
    }
    let m: RealMatrix = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let m = m.to_mat().map_err(|e| usage(format!("{e}")))?;
    if m.ncols() != 1 {
        return Err(usage("vector file must have one column"));
    }
    Ok(DVector::from_column_slice(m.as_slice()))
}

impl LoadedSystem {
    fn get(&self, name: &str) -> Result<Mat, CliError> {
        self.matrices.get(name).cloned().ok_or_else(|| usage(format!("missing matrix {name}")))
    }

    fn kind_name(&self) -> String {
        match self.kind {
            SystemKind::Pencil => "pencil".into(),
            SystemKind::Structure(k) => k.to_string(),
        }
    }

    fn wrong_kind(&self, wanted: &str) -> CliError {
        usage(format!("this operation needs {wanted}, the file holds '{}'", self.kind_name()))
    }

    pub fn pencil(&self) -> Result<Pencil, CliError> {
        let (e, a) = match self.kind {
            SystemKind::Pencil => (self.get("E")?, self.get("A")?),
            SystemKind::Structure(StructureKind::Dh) => self.dh()?.pencil(),
            SystemKind::Structure(StructureKind::Extended) => self.extended()?.pencil(),
            SystemKind::Structure(StructureKind::MonotoneAnnihilator) => self.monotone_system()?.pencil(),
            _ => return Err(self.wrong_kind("a pencil, dh, extended or monotone-annihilator system")),
        };
        Pencil::new(e, a).map_err(CliError::Core)
    }

    pub fn dh(&self) -> Result<DHSystem, CliError> {
        if self.kind != SystemKind::Structure(StructureKind::Dh) {
            return Err(self.wrong_kind("a dh system"));
        }
        Ok(DHSystem::new(self.get("E")?, self.get("J")?, self.get("R")?, self.get("Q")?))
    }

    pub fn extended(&self) -> Result<ExtendedHDAE, CliError> {
        if self.kind != SystemKind::Structure(StructureKind::Extended) {
            return Err(self.wrong_kind("an extended system"));
        }
        Ok(ExtendedHDAE::new(self.get("K")?, self.get("L")?, self.get("P")?, self.get("S")?))
    }

    pub fn monotone_system(&self) -> Result<MonotoneAnnihilatorSystem, CliError> {
        if self.kind != SystemKind::Structure(StructureKind::MonotoneAnnihilator) {
            return Err(self.wrong_kind("a monotone-annihilator system"));
        }
        Ok(MonotoneAnnihilatorSystem::new(self.get("C")?, self.get("D")?, self.get("P")?, self.get("S")?))
    }

    /// `(P, S)` of a Lagrange pair, an extended or a monotone-annihilator system.
    pub fn lagrange(&self) -> Result<LagrangePair, CliError> {
        match self.kind {
            SystemKind::Structure(
                StructureKind::Lagrange | StructureKind::Extended | StructureKind::MonotoneAnnihilator,
            ) => Ok(LagrangePair::new(self.get("P")?, self.get("S")?)),
            _ => Err(self.wrong_kind("a Lagrange pair (P, S)")),
        }
    }

    /// `(K, L)` of a Dirac pair or an extended system.
    pub fn dirac(&self) -> Result<DiracPair, CliError> {
        match self.kind {
            SystemKind::Structure(StructureKind::Dirac | StructureKind::Extended) => {
                Ok(DiracPair::new(self.get("K")?, self.get("L")?))
            }
            _ => Err(self.wrong_kind("a Dirac pair (K, L)")),
        }
    }
}
