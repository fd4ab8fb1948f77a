//! Artifact emission: JSON to stdout and disk, optional CSV, and the run
//! manifest with a digest of the emitted bytes.
//!
//! The manifest's `wall_ms` is the only field allowed to differ between
//! reruns; `output_digest` covers exactly the JSON and CSV bytes, so two
//! runs produced identical artifacts iff their digests agree.

use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// 64-bit FNV-1a over the emitted artifact bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    args: &'a serde_json::Value,
    generator: &'a str,
    table_limit_cap: u64,
    tolerances: &'a serde_json::Value,
    wall_ms: u128,
    digest_algorithm: &'a str,
    output_digest: String,
}

pub struct Emitter {
    command: String,
    out_dir: Option<PathBuf>,
    started: Instant,
}

impl Emitter {
    pub fn new(command: &str, out_dir: Option<&str>) -> Self {
        Self {
            command: command.to_string(),
            out_dir: out_dir.map(PathBuf::from),
            started: Instant::now(),
        }
    }

    /// Emit the artifacts and manifest. JSON always goes to stdout; when an
    /// output directory is set, JSON/CSV/manifest land there as
    /// `<command>.json`, `<command>.csv`, `<command>.manifest.json`.
    pub fn finish<T: Serialize>(
        &self,
        payload: &T,
        csv: Option<String>,
        args: serde_json::Value,
        tolerances: serde_json::Value,
    ) -> Result<(), String> {
        let mut json =
            serde_json::to_string_pretty(payload).map_err(|e| format!("json: {e}"))?;
        json.push('\n');

        let mut stdout = std::io::stdout();
        stdout.write_all(json.as_bytes()).map_err(|e| e.to_string())?;

        let mut digest_input = json.clone().into_bytes();
        if let Some(csv_text) = &csv {
            digest_input.extend_from_slice(csv_text.as_bytes());
        }
        let digest = format!("{:016x}", fnv1a64(&digest_input));

        if let Some(dir) = &self.out_dir {
            std::fs::create_dir_all(dir).map_err(|e| format!("create {dir:?}: {e}"))?;
            let base = dir.join(&self.command);
            std::fs::write(base.with_extension("json"), &json).map_err(|e| e.to_string())?;
            if let Some(csv_text) = &csv {
                std::fs::write(base.with_extension("csv"), csv_text)
                    .map_err(|e| e.to_string())?;
            }
            let manifest = RunManifest {
                command: &self.command,
                args: &args,
                generator: dispersion_lab::rng::GENERATOR_NAME,
                table_limit_cap: crate::config::table_limit_cap(),
                tolerances: &tolerances,
                wall_ms: self.started.elapsed().as_millis(),
                digest_algorithm: "fnv1a64",
                output_digest: digest,
            };
            let mut manifest_json = serde_json::to_string_pretty(&manifest)
                .map_err(|e| format!("manifest json: {e}"))?;
            manifest_json.push('\n');
            std::fs::write(
                dir.join(format!("{}.manifest.json", self.command)),
                manifest_json,
            )
            .map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

/// RFC-4180-style CSV: header row, comma separator, `.` decimals, `\n`
/// line endings. Values never need quoting here (numeric columns and fixed
/// labels only).
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "csv row width mismatch");
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
