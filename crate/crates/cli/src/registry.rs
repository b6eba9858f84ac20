//! Audit-anchor registry, shipped as data so new audits bind without code
//! changes here.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

const MANIFEST: &str = include_str!("../assets/anchors.json");

#[derive(Debug, Clone, Deserialize)]
pub struct AnchorEntry {
    pub anchor: String,
    pub description: String,
    pub applies_to: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Registry {
    pub schema_version: u32,
    pub anchors: Vec<AnchorEntry>,
}

impl Registry {
    pub fn load() -> Result<Self> {
        let reg: Registry =
            serde_json::from_str(MANIFEST).context("parsing the anchor registry manifest")?;
        if reg.schema_version != 1 {
            bail!("unsupported registry schema version {}", reg.schema_version);
        }
        Ok(reg)
    }

    pub fn get(&self, anchor: &str) -> Option<&AnchorEntry> {
        self.anchors.iter().find(|e| e.anchor == anchor)
    }

    pub fn contains(&self, anchor: &str) -> bool {
        self.get(anchor).is_some()
    }

    /// Anchors with a canonical standalone scenario.
    pub fn scenario_anchors(&self) -> Vec<&str> {
        self.anchors
            .iter()
            .filter(|e| e.applies_to.iter().any(|k| k == "scenario"))
            .map(|e| e.anchor.as_str())
            .collect()
    }

    pub fn trajectory_anchor(&self, anchor: &str) -> bool {
        self.get(anchor)
            .map(|e| e.applies_to.iter().any(|k| k == "trajectory"))
            .unwrap_or(false)
    }
}
