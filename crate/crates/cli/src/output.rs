//! Artifact writers. Every file is a pure function of its inputs so reruns
//! are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Collects written files (relative to the output directory) for the
/// manifest.
pub struct Artifacts {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.insert(rel.to_string(), sha256_hex(bytes));
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        self.write(rel, json_bytes(value)?.as_slice())
    }

    pub fn csv(&mut self, rel: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Other(format!("{rel}: {e}"));
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Other(format!("{rel}: {e}")))?;
        self.write(rel, &bytes)
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish(mut self, mut manifest: BTreeMap<String, serde_json::Value>) -> Result<(), CliError> {
        manifest.insert("artifacts".into(), serde_json::to_value(&self.written).expect("string map"));
        let bytes = json_bytes(&manifest)?;
        let path = self.root.join("manifest.json");
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.clear();
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with object keys sorted (serde_json maps are ordered).
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Other(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Other(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Shortest round-trip formatting; infinities as `inf`/`-inf`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Name fragment for a cost level, e.g. `0.001`.
pub fn cost_tag(cost: f64) -> String {
    format!("{cost}")
}

/// File-name friendly strategy name: `PCA&DWT RRL` → `pca_dwt_rrl`.
pub fn slug(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Static line chart of wealth curves sharing one x axis.
pub fn wealth_svg(title: &str, curves: &[(String, Vec<f64>)]) -> String {
    let (w, h) = (900.0, 480.0);
    let (left, right, top, bottom) = (60.0, 170.0, 40.0, 40.0);
    let len = curves.iter().map(|c| c.1.len()).max().unwrap_or(0).max(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in curves.iter().flat_map(|c| c.1.iter()).filter(|v| v.is_finite()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let x = |i: usize| left + pw * i as f64 / (len - 1) as f64;
    let y = |v: f64| top + ph * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left}" y="24" font-family="sans-serif" font-size="15">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>"##
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3}</text>"#,
            left - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">period</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    for (i, (name, vals)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(t, v)| format!("{:.2},{:.2}", x(t), y(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 * i as f64 + 8.0;
        let lx = w - right + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
