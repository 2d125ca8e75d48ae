//! Run configuration read from a single JSON document.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sympkit_core::{
    from_sturm_liouville, AlphaMatrix, CMatrix, CoefficientSequence, SymplecticSystem, ToleranceConfig,
    TrajectorySequence,
};

use crate::error::CliError;

/// A matrix or vector entry: a real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(self) -> Complex64 {
        match self {
            Entry::Real(re) => Complex64::new(re, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Row-major nested rows.
pub type MatrixSpec = Vec<Vec<Entry>>;

/// A scalar repeated over the horizon, or one value per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Constant(f64),
    Values(Vec<f64>),
}

impl Series {
    fn expand(&self, len: usize, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Series::Constant(x) => Ok(vec![*x; len]),
            Series::Values(v) if v.len() == len => Ok(v.clone()),
            Series::Values(v) => Err(CliError::Config(format!("{name} has {} entries, expected {len}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `p` has `N + 2` entries, `q` and `w` have `N + 1`.
    SturmLiouville { p: Series, q: Series, w: Series },
    /// One `S_k` and one `Ψ_k` per index `k ∈ [0, N]`.
    Explicit { s: Vec<MatrixSpec>, psi: Vec<MatrixSpec> },
    Constant { s: MatrixSpec, psi: MatrixSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub structural_tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub psd_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub lambdas: Vec<[f64; 2]>,
    /// Inclusive index bounds; defaults to `[0, N]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<MatrixSpec>,
    /// Horizons for the truncation sequence; defaults to `N/4, N/2, N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_ratio_threshold: Option<f64>,
    /// Acceptance bound for the last `M_N` drift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_tol: Option<f64>,
    /// Forcing `f_k`, one vector per index; missing trailing entries are zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Entry>>,
    /// Last index of the Green table grid written to reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

pub const DEFAULT_THRESHOLD: f64 = 1.0 + 1e-6;
pub const DEFAULT_DRIFT_TOL: f64 = 1e-6;

fn matrix(spec: &MatrixSpec, name: &str) -> Result<CMatrix, CliError> {
    let rows = spec.len();
    let cols = spec.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || spec.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config(format!("{name} must be a nonempty rectangular matrix")));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| spec[i][j].value()))
}

fn vector(spec: &[Entry]) -> CMatrix {
    CMatrix::from_fn(spec.len(), 1, |i, _| spec[i].value())
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn tolerance_config(&self) -> Result<ToleranceConfig, CliError> {
        let d = ToleranceConfig::default();
        let Some(t) = self.tolerances else { return Ok(d) };
        ToleranceConfig::new(
            t.structural_tol.unwrap_or(d.structural_tol),
            t.rank_tol.unwrap_or(d.rank_tol),
            t.psd_tol.unwrap_or(d.psd_tol),
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build_system(&self) -> Result<SymplecticSystem, CliError> {
        let n_h = self.horizon;
        if n_h == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        let tol = self.tolerance_config()?;
        let sys = match &self.system {
            SystemSpec::SturmLiouville { p, q, w } => from_sturm_liouville(
                &p.expand(n_h + 2, "p")?,
                &q.expand(n_h + 1, "q")?,
                &w.expand(n_h + 1, "w")?,
            )?
            .with_tolerances(tol)?,
            SystemSpec::Explicit { s, psi } => {
                if s.len() != n_h + 1 || psi.len() != n_h + 1 {
                    return Err(CliError::Config(format!(
                        "explicit system needs {} matrices each, got S: {}, Psi: {}",
                        n_h + 1,
                        s.len(),
                        psi.len()
                    )));
                }
                let s = s.iter().map(|m| matrix(m, "S")).collect::<Result<Vec<_>, _>>()?;
                let psi = psi.iter().map(|m| matrix(m, "Psi")).collect::<Result<Vec<_>, _>>()?;
                let n = s[0].nrows() / 2;
                SymplecticSystem::new(CoefficientSequence::new(n, n_h, s, psi)?, tol)?
            }
            SystemSpec::Constant { s, psi } => {
                SymplecticSystem::constant(matrix(s, "S")?, matrix(psi, "Psi")?, n_h, tol)?
            }
        };
        Ok(sys)
    }

    /// The λ samples; every sample must be off the real axis.
    pub fn nonreal_lambdas(&self) -> Result<Vec<Complex64>, CliError> {
        if self.lambdas.is_empty() {
            return Err(CliError::Config("lambdas must be nonempty for this command".into()));
        }
        self.lambdas
            .iter()
            .map(|&[re, im]| {
                if im == 0.0 || !re.is_finite() || !im.is_finite() {
                    Err(CliError::Config(format!("lambda [{re}, {im}] must be finite and nonreal")))
                } else {
                    Ok(Complex64::new(re, im))
                }
            })
            .collect()
    }

    pub fn interval(&self) -> Result<(usize, usize), CliError> {
        let [lo, hi] = self.interval.unwrap_or([0, self.horizon]);
        if lo > hi || hi > self.horizon {
            return Err(CliError::Config(format!("interval [{lo}, {hi}] outside [0, {}]", self.horizon)));
        }
        Ok((lo, hi))
    }

    fn boundary(&self, spec: &Option<MatrixSpec>, n: usize, tol: f64, name: &str) -> Result<AlphaMatrix, CliError> {
        match spec {
            None => Ok(AlphaMatrix::first_block(n)),
            Some(m) => AlphaMatrix::new(matrix(m, name)?, tol).map_err(|e| CliError::Config(format!("{name}: {e}"))),
        }
    }

    pub fn alpha(&self, n: usize) -> Result<AlphaMatrix, CliError> {
        self.boundary(&self.alpha, n, self.tolerance_config()?.structural_tol, "alpha")
    }

    pub fn beta(&self, n: usize) -> Result<AlphaMatrix, CliError> {
        self.boundary(&self.beta, n, self.tolerance_config()?.structural_tol, "beta")
    }

    pub fn n_list(&self) -> Result<Vec<usize>, CliError> {
        let list = match &self.n_list {
            Some(l) => l.clone(),
            None => {
                let mut l = vec![self.horizon / 4, self.horizon / 2, self.horizon];
                l.retain(|&x| x > 0);
                l.dedup();
                l
            }
        };
        if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) || list.last() > Some(&self.horizon) {
            return Err(CliError::Config(format!("n_list {list:?} must be strictly increasing within [1, N]")));
        }
        Ok(list)
    }

    pub fn threshold(&self) -> f64 {
        self.growth_ratio_threshold.unwrap_or(DEFAULT_THRESHOLD)
    }

    pub fn drift_tol(&self) -> f64 {
        self.drift_tol.unwrap_or(DEFAULT_DRIFT_TOL)
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(self.horizon.min(10)).min(self.horizon)
    }

    /// Forcing on `[0, N − 1]` with `dim` rows, zero-padded.
    pub fn forcing(&self, dim: usize, lambda: Complex64) -> Result<TrajectorySequence, CliError> {
        let spec = self.f.as_ref().ok_or_else(|| CliError::Config("f is required for this command".into()))?;
        if spec.len() > self.horizon {
            return Err(CliError::Config(format!("f has {} entries, at most N = {} allowed", spec.len(), self.horizon)));
        }
        let mut values = Vec::with_capacity(self.horizon);
        for (k, fk) in spec.iter().enumerate() {
            if fk.len() != dim {
                return Err(CliError::Config(format!("f[{k}] has {} entries, expected {dim}", fk.len())));
            }
            values.push(vector(fk));
        }
        values.resize(self.horizon, CMatrix::zeros(dim, 1));
        Ok(TrajectorySequence::new(0, values, lambda)?)
    }

    pub fn weyl_vector(&self, n: usize) -> Result<Option<CMatrix>, CliError> {
        match &self.v {
            None => Ok(None),
            Some(v) if v.len() == n => Ok(Some(vector(v))),
            Some(v) => Err(CliError::Config(format!("v has {} entries, expected {n}", v.len()))),
        }
    }
}
