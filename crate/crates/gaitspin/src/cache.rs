//! Disk cache for the field-evaluation stage.
//!
//! Connection grids dominate pipeline runtime, so their results are cached
//! keyed by the configuration subset that determines them: robot, basis,
//! grid, and contact filter. Planner and simulation settings do not
//! invalidate the cache. Corrupted or mismatched cache files are recomputed,
//! never trusted.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::config::{PipelineConfig, SCHEMA_ID};
use crate::dynamics::ForceModel;
use crate::error::{Error, Result};
use crate::fields::{evaluate_connection_grid, ConnectionFieldSet, PotentialStack};
use crate::model::enumerate_contact_patterns;

/// Environment variable overriding the configured cache directory.
pub const CACHE_DIR_ENV: &str = "GAITSPIN_CACHE_DIR";

/// Cached output of the field-evaluation stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldsArtifact {
    pub schema: String,
    /// Digest of the configuration subset this artifact was computed from.
    pub fields_key: String,
    pub set: ConnectionFieldSet,
    pub stack: PotentialStack,
}

impl FieldsArtifact {
    pub fn n_patterns(&self) -> usize {
        self.set.fields.len()
    }
}

/// How a [`FieldsArtifact`] was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    /// Loaded intact from disk.
    Hit,
    /// No usable cache file existed; computed and stored.
    Computed,
    /// A cache file existed but failed integrity checks; recomputed.
    Recomputed(String),
    /// Caching disabled; computed without reading or writing the cache.
    Bypassed,
}

#[derive(Serialize)]
struct FieldsKey<'a> {
    robot: &'a crate::model::RobotSpec,
    basis: &'a crate::model::ShapeBasis,
    grid: &'a crate::fields::GridSpec,
    contact_filter: &'a crate::config::ContactFilterConfig,
}

/// Digest of the configuration subset that determines field values.
pub fn fields_cache_key(config: &PipelineConfig) -> String {
    let key = FieldsKey {
        robot: &config.robot,
        basis: &config.basis,
        grid: &config.grid,
        contact_filter: &config.contact_filter,
    };
    let value = serde_json::to_value(&key).expect("cache key serializes");
    let canonical = serde_json::to_string(&value).expect("canonical JSON serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(out, "{byte:02x}").expect("hex formatting");
    }
    out
}

/// The cache directory: the [`CACHE_DIR_ENV`] override when set, the
/// configured path otherwise.
pub fn resolve_cache_dir(config: &PipelineConfig) -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.paths.cache_dir.clone(),
    }
}

/// Cache file location for a configuration.
pub fn cache_file_path(config: &PipelineConfig) -> PathBuf {
    let key = fields_cache_key(config);
    resolve_cache_dir(config).join(format!("fields-{}.json", &key[..16]))
}

fn integrity_check(artifact: &FieldsArtifact, expected_key: &str) -> std::result::Result<(), String> {
    if artifact.schema != SCHEMA_ID {
        return Err(format!("schema {:?} does not match {SCHEMA_ID:?}", artifact.schema));
    }
    if artifact.fields_key != expected_key {
        return Err("fields key does not match the configuration".to_string());
    }
    if artifact.set.fields.len() != artifact.stack.entries.len() {
        return Err("connection set and potential stack disagree on pattern count".to_string());
    }
    let nodes = artifact.set.grid.node_count();
    if artifact.stack.grid != artifact.set.grid {
        return Err("connection set and potential stack disagree on the grid".to_string());
    }
    for field in &artifact.set.fields {
        if field.row_x.len() != nodes || field.row_y.len() != nodes || field.row_theta.len() != nodes
        {
            return Err("connection rows have the wrong node count".to_string());
        }
    }
    for entry in &artifact.stack.entries {
        if entry.potential_x.len() != nodes
            || entry.potential_y.len() != nodes
            || entry.div_free_x.len() != nodes
            || entry.div_free_y.len() != nodes
        {
            return Err("potential entries have the wrong node count".to_string());
        }
    }
    Ok(())
}

fn try_load(path: &Path, expected_key: &str) -> std::result::Result<FieldsArtifact, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("unreadable: {e}"))?;
    let artifact: FieldsArtifact =
        serde_json::from_str(&text).map_err(|e| format!("unparsable: {e}"))?;
    integrity_check(&artifact, expected_key)?;
    Ok(artifact)
}

fn compute(config: &PipelineConfig) -> Result<FieldsArtifact> {
    let patterns = enumerate_contact_patterns(
        config.robot.n_legs(),
        config.contact_filter.min_stance,
        config.contact_filter.exclude_unilateral,
    )?;
    let fm = ForceModel::from_robot(&config.robot);
    let set = evaluate_connection_grid(&config.robot, &config.basis, &patterns, &config.grid, &fm)?;
    let stack = PotentialStack::from_connection_fields(&set)?;
    Ok(FieldsArtifact {
        schema: SCHEMA_ID.to_string(),
        fields_key: fields_cache_key(config),
        set,
        stack,
    })
}

fn store(path: &Path, artifact: &FieldsArtifact) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let text = serde_json::to_string(artifact).map_err(|e| {
        Error::argument(format!("cache artifact serialization failed: {e}"))
    })?;
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    std::fs::write(&tmp, text).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Loads the fields artifact for `config` from cache, or computes it.
///
/// With `use_cache` false the cache is neither read nor written. A cache
/// file that exists but fails any integrity check is recomputed and
/// overwritten; the outcome carries the reason.
pub fn load_or_compute(
    config: &PipelineConfig,
    use_cache: bool,
) -> Result<(FieldsArtifact, CacheOutcome)> {
    if !use_cache {
        return Ok((compute(config)?, CacheOutcome::Bypassed));
    }
    let path = cache_file_path(config);
    let expected_key = fields_cache_key(config);
    let outcome = if path.exists() {
        match try_load(&path, &expected_key) {
            Ok(artifact) => return Ok((artifact, CacheOutcome::Hit)),
            Err(reason) => CacheOutcome::Recomputed(reason),
        }
    } else {
        CacheOutcome::Computed
    };
    let artifact = compute(config)?;
    store(&path, &artifact)?;
    Ok((artifact, outcome))
}
