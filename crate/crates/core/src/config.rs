//! Tool configuration: a flat key/value file with list values.
//!
//! ```text
//! # routines known to be pure even without an in-file `pure` prefix
//! purity_whitelist = s2c, boost, interp, c2s, sv2cv
//! reshape_routines = s2c
//! derived_type_registry = dt
//! array_shape.a = n1, n2
//! mpi_flavor = openmpi
//! mode = d2xu
//! output_dir = out
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fortran::{parse_dims, DimSpec};
use crate::transform::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpiFlavor {
    OpenMpi,
    Mpich,
    SlurmSrun,
}

impl FromStr for MpiFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "openmpi" => Ok(MpiFlavor::OpenMpi),
            "mpich" => Ok(MpiFlavor::Mpich),
            "slurm-srun" | "slurm_srun" | "srun" => Ok(MpiFlavor::SlurmSrun),
            other => Err(Error::Config(format!(
                "unknown MPI flavor `{other}` (expected openmpi, mpich, or slurm-srun)"
            ))),
        }
    }
}

impl std::fmt::Display for MpiFlavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MpiFlavor::OpenMpi => "openmpi",
            MpiFlavor::Mpich => "mpich",
            MpiFlavor::SlurmSrun => "slurm-srun",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ToolConfig {
    /// Routine names that may be treated as pure inside loops.
    pub purity_whitelist: Vec<String>,
    /// Callees that need the `reshape` inline option.
    pub reshape_routines: Vec<String>,
    /// Variable names that are derived-type instances (their `enter`/`exit`
    /// data directives survive unified-memory stripping one mode longer).
    pub derived_type_registry: Vec<String>,
    /// Shapes for arrays whose declarations are not visible in the file.
    pub array_shapes: BTreeMap<String, Vec<DimSpec>>,
    pub mpi_flavor: MpiFlavor,
    pub mode: Option<Mode>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            purity_whitelist: Vec::new(),
            reshape_routines: Vec::new(),
            derived_type_registry: Vec::new(),
            array_shapes: BTreeMap::new(),
            mpi_flavor: MpiFlavor::OpenMpi,
            mode: None,
            output_dir: None,
        }
    }
}

impl ToolConfig {
    pub fn parse(text: &str) -> Result<ToolConfig> {
        let mut cfg = ToolConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let list = || -> Vec<String> {
                value
                    .split(',')
                    .map(|v| v.trim().to_ascii_lowercase())
                    .filter(|v| !v.is_empty())
                    .collect()
            };
            match key.as_str() {
                "purity_whitelist" => cfg.purity_whitelist = list(),
                "reshape_routines" => cfg.reshape_routines = list(),
                "derived_type_registry" => cfg.derived_type_registry = list(),
                "mpi_flavor" => cfg.mpi_flavor = value.parse()?,
                "mode" => cfg.mode = Some(value.parse()?),
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                _ => {
                    if let Some(name) = key.strip_prefix("array_shape.") {
                        if name.is_empty() {
                            return Err(Error::Config(format!(
                                "line {}: array_shape key without a name",
                                n + 1
                            )));
                        }
                        cfg.array_shapes
                            .insert(name.to_ascii_lowercase(), parse_dims(value));
                    } else {
                        return Err(Error::Config(format!(
                            "line {}: unknown config key `{key}`",
                            n + 1
                        )));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ToolConfig> {
        let text = std::fs::read_to_string(path)?;
        ToolConfig::parse(&text)
    }

    pub fn is_whitelisted_pure(&self, name: &str) -> bool {
        let n = name.to_ascii_lowercase();
        self.purity_whitelist.iter().any(|w| *w == n)
    }

    pub fn is_derived_type(&self, name: &str) -> bool {
        let n = name.to_ascii_lowercase();
        self.derived_type_registry.iter().any(|w| *w == n)
    }

    pub fn needs_reshape(&self, name: &str) -> bool {
        let n = name.to_ascii_lowercase();
        self.reshape_routines.iter().any(|w| *w == n)
    }
}
