//! File formats and run configuration.
//!
//! States, channels and records are JSON with complex entries written as
//! `[re, im]` pairs; tabular reports are mirrored as CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{NamedState, RegularizationSeries, Theorem, TheoremRecord};
use crate::measures::{BracketedValue, Provenance, Symmetry};
use crate::protocols::{Branch, MeasurePrepareChannel};
use crate::quantum::linalg::{CMat, C64};
use crate::quantum::{DensityMatrix, Effect};
use crate::sdp::{SolveMeta, SolverSettings};
use crate::{separability, Options};

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidState(format!("matrix with {n} rows is not square")));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub name: String,
    pub dims: Vec<usize>,
    pub matrix: MatrixJson,
}

impl StateFile {
    pub fn from_state(name: impl Into<String>, rho: &DensityMatrix) -> Self {
        Self {
            name: name.into(),
            dims: rho.dims().to_vec(),
            matrix: matrix_to_json(rho.matrix()),
        }
    }

    /// Validates the matrix as a density matrix.
    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(matrix_from_json(&self.matrix)?, self.dims.clone())
    }

    pub fn to_named(&self) -> Result<NamedState> {
        Ok(NamedState::new(self.name.clone(), self.to_state()?))
    }
}

pub fn load_state(path: &Path) -> Result<StateFile> {
    let file: StateFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.to_state()?;
    Ok(file)
}

pub fn save_state(path: &Path, name: &str, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &StateFile::from_state(name, rho))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputJson {
    pub dims: Vec<usize>,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchJson {
    pub effect: MatrixJson,
    pub output: OutputJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    /// Input factor dimensions; a single factor when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dims: Option<Vec<usize>>,
    pub branches: Vec<BranchJson>,
}

impl ChannelFile {
    pub fn from_channel(channel: &MeasurePrepareChannel) -> Self {
        Self {
            input_dims: Some(channel.input_dims.clone()),
            branches: channel
                .branches
                .iter()
                .map(|b| BranchJson {
                    effect: matrix_to_json(b.effect.matrix()),
                    output: OutputJson {
                        dims: b.output.dims().to_vec(),
                        matrix: matrix_to_json(b.output.matrix()),
                    },
                })
                .collect(),
        }
    }

    /// Rebuilds and re-validates the channel. Outputs that are all
    /// isotropic on two equal factors are scored with that symmetry.
    pub fn to_channel(&self) -> Result<MeasurePrepareChannel> {
        let mut branches = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            let effect = matrix_from_json(&b.effect)?;
            let input_dims = self.input_dims.clone().unwrap_or_else(|| vec![effect.nrows()]);
            branches.push(Branch {
                effect: Effect::new(effect, input_dims)?,
                output: DensityMatrix::new(matrix_from_json(&b.output.matrix)?, b.output.dims.clone())?,
            });
        }
        let isotropic = branches.iter().all(|b| {
            let dims = b.output.dims();
            dims.len() == 2 && dims[0] == dims[1] && separability::is_isotropic(b.output.matrix(), dims)
        });
        let symmetry = if isotropic && !branches.is_empty() { Symmetry::Isotropic } else { Symmetry::None };
        MeasurePrepareChannel::new(branches, symmetry)
    }
}

pub fn save_channel(path: &Path, channel: &MeasurePrepareChannel) -> Result<()> {
    write_json(path, &ChannelFile::from_channel(channel))
}

pub fn load_channel(path: &Path) -> Result<MeasurePrepareChannel> {
    let file: ChannelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.to_channel()
}

/// Output of one measure evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub measure: String,
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    pub value_lower: f64,
    pub value_upper: f64,
    pub exact: bool,
    pub provenance: Provenance,
    pub solver_meta: SolveMeta,
}

impl MeasureRecord {
    pub fn new(measure: &str, state: &str, eps: Option<f64>, v: &BracketedValue) -> Self {
        Self {
            measure: measure.to_string(),
            state: state.to_string(),
            eps,
            value_lower: v.lower,
            value_upper: v.upper,
            exact: v.exact,
            provenance: v.provenance,
            solver_meta: v.meta,
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Columns: theorem, state, eps, delta, lower, rate, upper, pass, gap,
/// wall_ms. `gap` is the largest relative duality gap of the record's
/// solves; `delta` is empty for theorems without one.
pub fn records_csv(records: &[TheoremRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["theorem", "state", "eps", "delta", "lower", "rate", "upper", "pass", "gap", "wall_ms"])?;
    for r in records {
        w.write_record([
            r.theorem.to_string(),
            r.state.clone(),
            r.eps.to_string(),
            r.delta.map(|d| d.to_string()).unwrap_or_default(),
            r.lower.to_string(),
            r.rate.to_string(),
            r.upper.to_string(),
            r.pass.to_string(),
            format!("{:e}", r.meta.max_gap),
            r.wall_ms.to_string(),
        ])?;
    }
    csv_string(w)
}

/// Columns: state, eps, n, lower, upper, reference.
pub fn series_csv(series: &[RegularizationSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["state", "eps", "n", "lower", "upper", "reference"])?;
    for s in series {
        for e in &s.entries {
            w.write_record([
                s.state.clone(),
                s.eps.to_string(),
                e.n.to_string(),
                e.lower.to_string(),
                e.upper.to_string(),
                s.reference.map(|r| r.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Settings for the `experiments` suites and the solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// See-saw restarts.
    pub restarts: usize,
    pub seed: u64,
    /// Largest matrix side the regularisation series may build.
    pub max_side: usize,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    /// Adds wall-clock times to records. Off by default so reports are
    /// byte-identical across runs.
    pub record_timing: bool,
    pub theorems: Vec<u8>,
    pub eps: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Battery state ids to run; `None` runs the whole built-in battery.
    pub battery: Option<Vec<String>>,
    /// Extra states appended to the battery.
    pub state_files: Vec<PathBuf>,
    /// Directory of the measure cache; `None` disables it.
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = Options::default();
        Self {
            gap_tol: opts.solver.gap_tol,
            feas_tol: opts.solver.feas_tol,
            max_iter: opts.solver.max_iter,
            restarts: opts.restarts,
            seed: opts.seed,
            max_side: 16,
            out_dir: PathBuf::from("out"),
            workers: 0,
            record_timing: false,
            theorems: vec![1, 2, 3],
            eps: vec![0.0, 0.01, 0.1],
            deltas: vec![1.0, 0.5],
            battery: None,
            state_files: Vec::new(),
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return bad(format!("tolerances must be positive (gap {}, feas {})", self.gap_tol, self.feas_tol));
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if self.battery.as_ref().is_some_and(|b| b.is_empty()) && self.state_files.is_empty() {
            return bad("the battery is empty".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return bad(format!("ε = {e} is outside [0, 1)"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0)) {
            return bad(format!("δ = {d} must be positive"));
        }
        for &t in &self.theorems {
            Theorem::from_id(t)?;
        }
        Ok(())
    }

    pub fn options(&self) -> Options {
        Options {
            solver: SolverSettings {
                gap_tol: self.gap_tol,
                feas_tol: self.feas_tol,
                max_iter: self.max_iter,
            },
            restarts: self.restarts,
            seed: self.seed,
            dump_dir: None,
        }
    }

    pub fn theorem_list(&self) -> Result<Vec<Theorem>> {
        self.theorems.iter().map(|&t| Theorem::from_id(t)).collect()
    }

    /// The built-in battery filtered by `battery`, followed by the extra
    /// state files.
    pub fn resolve_battery(&self) -> Result<Vec<NamedState>> {
        let all = crate::experiments::state_battery();
        let mut out = match &self.battery {
            None => all,
            Some(ids) => {
                let mut picked = Vec::with_capacity(ids.len());
                for id in ids {
                    let s = all
                        .iter()
                        .find(|s| &s.id == id)
                        .ok_or_else(|| Error::InvalidParameter(format!("unknown battery state {id:?}")))?;
                    picked.push(s.clone());
                }
                picked
            }
        };
        for path in &self.state_files {
            out.push(load_state(path)?.to_named()?);
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("the battery is empty".into()));
        }
        Ok(out)
    }
}

/// Measure results keyed by a hash of (state, measure, ε, config).
///
/// Advisory only: a missing or unreadable entry is a miss.
#[derive(Clone, Debug)]
pub struct ResultCache {
    dir: PathBuf,
}

impl ResultCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(state: &StateFile, measure: &str, eps: Option<f64>, config: &RunConfig) -> String {
        let mut h = Sha256::new();
        for part in [
            serde_json::to_string(state).unwrap_or_default(),
            measure.to_string(),
            format!("{eps:?}"),
            serde_json::to_string(&config.options()).unwrap_or_default(),
        ] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<MeasureRecord> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, record: &MeasureRecord) -> Result<()> {
        write_json(&self.path(key), record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random::random_density;
    use crate::quantum::max_entangled;
    use rand::SeedableRng;

    #[test]
    fn state_round_trip() {
        let rho = random_density(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1), &[2, 3]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_state(&path, "r", &rho).unwrap();
        let back = load_state(&path).unwrap();
        assert_eq!(back.dims, vec![2, 3]);
        let diff = crate::quantum::linalg::max_abs_diff(back.to_state().unwrap().matrix(), rho.matrix());
        assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn invalid_state_is_rejected() {
        let file = StateFile {
            name: "bad".into(),
            dims: vec![2],
            matrix: vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]],
        };
        assert!(file.to_state().is_err());
    }

    #[test]
    fn channel_round_trip() {
        let ch = MeasurePrepareChannel::replacer(vec![2, 2], max_entangled(2).unwrap(), Symmetry::None).unwrap();
        let file = ChannelFile::from_channel(&ch);
        let text = serde_json::to_string(&file).unwrap();
        let back: ChannelFile = serde_json::from_str(&text).unwrap();
        let ch2 = back.to_channel().unwrap();
        assert_eq!(ch2.input_dims, vec![2, 2]);
        assert_eq!(ch2.symmetry, Symmetry::Isotropic);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let empty = RunConfig { battery: Some(vec![]), ..RunConfig::default() };
        assert!(empty.validate().is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"restarts": 4, "battery": ["mes-2"]}"#).unwrap();
        assert_eq!(cfg.resolve_battery().unwrap().len(), 1);
        assert!(serde_json::from_str::<RunConfig>(r#"{"restart": 4}"#).is_err());
        let bad = RunConfig { gap_tol: 0.0, ..RunConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cache_keys_track_config() {
        let f = StateFile::from_state("b", &max_entangled(2).unwrap());
        let a = ResultCache::key(&f, "emax", None, &RunConfig::default());
        let b = ResultCache::key(&f, "emax", None, &RunConfig { seed: 7, ..RunConfig::default() });
        assert_ne!(a, b);
        assert_eq!(a, ResultCache::key(&f, "emax", None, &RunConfig::default()));
    }
}
