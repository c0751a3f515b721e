//! Machine-readable emission of sweep results: a fixed-header CSV whose
//! bytes are a pure function of the records (wall times are JSON-only), and
//! a versioned JSON document. Every emitted file embeds the tool version
//! and the hash of the originating configuration.

use std::io::Write;
use std::path::Path;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::convergence::SweepRecord;

/// Schema tag of the sweep documents.
pub const SWEEP_SCHEMA: &str = "shellwave-sweep/1";

/// CSV column order; kept stable for downstream consumers.
pub const CSV_HEADER: &str = "eps,eigenvalue,norm_a,norm_b,ref_renormalized,ref_naive,diff_renormalized,diff_naive,profile,kappa";

/// Provenance stamped into every artifact.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub tool_version: String,
    pub config_hash: String,
}

impl RunMeta {
    pub fn from_config_bytes(config: &[u8]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config);
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: format!("{:x}", hasher.finalize()),
        }
    }
}

/// 17 significant digits: enough to round-trip every double exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Render records as CSV with a provenance comment line. Byte-identical
/// for identical records and configuration.
pub fn sweep_csv(meta: &RunMeta, records: &[SweepRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# {SWEEP_SCHEMA} version={} config={}\n",
        meta.tool_version, meta.config_hash
    ));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            format_float(r.eps),
            format_opt(r.eigenvalue),
            format_opt(r.norm_a),
            format_opt(r.norm_b),
            format_opt(r.reference_renormalized),
            format_opt(r.reference_naive),
            format_opt(r.diff_renormalized),
            format_opt(r.diff_naive),
            r.profile,
            r.kappa,
        ));
    }
    out
}

/// Render records as the versioned JSON document (includes wall times).
pub fn sweep_json(meta: &RunMeta, records: &[SweepRecord]) -> String {
    let doc = json!({
        "schema": SWEEP_SCHEMA,
        "tool_version": meta.tool_version,
        "config_hash": meta.config_hash,
        "records": records,
    });
    serde_json::to_string_pretty(&doc).expect("records serialize")
}

/// Write through a sibling temp file and rename, so consumers never see a
/// partial artifact.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default(),
        std::process::id()
    ));
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
