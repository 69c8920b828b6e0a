//! Declarative experiment configuration: TOML ingestion with per-preset
//! defaults, validation that names the offending field, CLI overrides and
//! canonical re-emission.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::device::DeviceParams;
use crate::engine::PulseSpec;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LimitState, Node};

/// Which canned experiment supplies the default parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Generic run: reference defaults, damage applied before the pulse.
    Run,
    /// Shortest-path solution.
    Fig2,
    /// Switching dynamics along the solution row.
    Fig3a,
    /// Entropy decay for several memory contents.
    Fig3b,
    /// Low memory content (r_on = 160, V = 15.25).
    Fig4,
    /// Damage and healing of a found path.
    Fig5,
}

/// Grid dimensions in nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

/// Fully resolved, validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridDims,
    pub device: DeviceParams,
    pub source: Node,
    pub sink: Node,
    pub pulse: PulseSpec,
    /// Nodes removed by the damage phase (fig5) or before the run (generic).
    pub damage: Vec<Node>,
    /// Column boundary of the entropy cut.
    pub entropy_cut: usize,
    /// Output directory for emitted artifacts.
    pub outputs: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    grid: Option<RawGrid>,
    device: Option<RawDevice>,
    pulse: Option<RawPulse>,
    source: Option<[usize; 2]>,
    sink: Option<[usize; 2]>,
    damage: Option<Vec<[usize; 2]>>,
    entropy_cut: Option<usize>,
    outputs: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    rows: Option<usize>,
    cols: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    r_on: Option<f64>,
    r_off: Option<f64>,
    gamma: Option<f64>,
    i_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    amplitude: Option<f64>,
    dt: Option<f64>,
    max_time: Option<f64>,
    record_every: Option<usize>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("parse: {}", e.message())))
    }

    /// Apply a `key=value` override. Supported keys: `grid.rows`, `grid.cols`,
    /// `device.{r_on,r_off,gamma,i_threshold}`,
    /// `pulse.{amplitude,dt,max_time,record_every}`, `source`, `sink`
    /// (value `row,col`), `damage` (semicolon-separated `row,col` pairs, empty
    /// to clear), `entropy_cut`, `outputs`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{}': expected key=value", spec)))?;
        let bad =
            |what: &str| Error::Config(format!("override {}: invalid {} '{}'", key, what, value));
        let as_f64 = || value.parse::<f64>().map_err(|_| bad("number"));
        let as_usize = || value.parse::<usize>().map_err(|_| bad("integer"));
        let as_node = |s: &str| -> Result<[usize; 2]> {
            let (r, c) = s.split_once(',').ok_or_else(|| bad("coordinate"))?;
            Ok([
                r.trim().parse().map_err(|_| bad("coordinate"))?,
                c.trim().parse().map_err(|_| bad("coordinate"))?,
            ])
        };
        match key {
            "grid.rows" => self.grid.get_or_insert_with(Default::default).rows = Some(as_usize()?),
            "grid.cols" => self.grid.get_or_insert_with(Default::default).cols = Some(as_usize()?),
            "device.r_on" => {
                self.device.get_or_insert_with(Default::default).r_on = Some(as_f64()?)
            }
            "device.r_off" => {
                self.device.get_or_insert_with(Default::default).r_off = Some(as_f64()?)
            }
            "device.gamma" => {
                self.device.get_or_insert_with(Default::default).gamma = Some(as_f64()?)
            }
            "device.i_threshold" => {
                self.device.get_or_insert_with(Default::default).i_threshold = Some(as_f64()?)
            }
            "pulse.amplitude" => {
                self.pulse.get_or_insert_with(Default::default).amplitude = Some(as_f64()?)
            }
            "pulse.dt" => self.pulse.get_or_insert_with(Default::default).dt = Some(as_f64()?),
            "pulse.max_time" => {
                self.pulse.get_or_insert_with(Default::default).max_time = Some(as_f64()?)
            }
            "pulse.record_every" => {
                self.pulse.get_or_insert_with(Default::default).record_every = Some(as_usize()?)
            }
            "source" => self.source = Some(as_node(value)?),
            "sink" => self.sink = Some(as_node(value)?),
            "damage" => {
                let mut nodes = Vec::new();
                for part in value.split(';').filter(|p| !p.trim().is_empty()) {
                    nodes.push(as_node(part)?);
                }
                self.damage = Some(nodes);
            }
            "entropy_cut" => self.entropy_cut = Some(as_usize()?),
            "outputs" => self.outputs = Some(value.to_string()),
            _ => return Err(Error::Config(format!("override: unknown key '{}'", key))),
        }
        Ok(())
    }

    /// Fill unspecified fields from the preset's defaults and validate.
    pub fn resolve(&self, preset: Preset) -> Result<ExperimentConfig> {
        let grid = GridDims {
            rows: self.grid.as_ref().and_then(|g| g.rows).unwrap_or(11),
            cols: self.grid.as_ref().and_then(|g| g.cols).unwrap_or(11),
        };
        let default_r_on = if preset == Preset::Fig4 { 160.0 } else { 10.0 };
        let default_amplitude = if preset == Preset::Fig4 { 15.25 } else { 6.0 };
        let d = self.device.clone().unwrap_or_default();
        let device = DeviceParams {
            r_on: d.r_on.unwrap_or(default_r_on),
            r_off: d.r_off.unwrap_or(200.0),
            gamma: d.gamma.unwrap_or(1e6),
            i_threshold: d.i_threshold.unwrap_or(0.01),
        };
        let p = self.pulse.clone().unwrap_or_default();
        let pulse = PulseSpec {
            amplitude: p.amplitude.unwrap_or(default_amplitude),
            dt: p.dt.unwrap_or(1e-6),
            max_time: p.max_time.unwrap_or(1.0),
            record_every: p.record_every.unwrap_or(200),
        };
        let source = self
            .source
            .map(|[r, c]| Node::new(r, c))
            .unwrap_or_else(|| Node::new(grid.rows / 2, 0));
        let sink = self
            .sink
            .map(|[r, c]| Node::new(r, c))
            .unwrap_or_else(|| Node::new(grid.rows / 2, grid.cols.saturating_sub(1)));
        let damage = match &self.damage {
            Some(list) => list.iter().map(|&[r, c]| Node::new(r, c)).collect(),
            None if preset == Preset::Fig5 => default_fig5_damage(grid, source)?,
            None => Vec::new(),
        };
        let entropy_cut = self
            .entropy_cut
            .unwrap_or((grid.cols.saturating_sub(1)) / 2);
        let outputs = PathBuf::from(self.outputs.clone().unwrap_or_else(|| "out".into()));

        let cfg = ExperimentConfig {
            grid,
            device,
            source,
            sink,
            pulse,
            damage,
            entropy_cut,
            outputs,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Default healing damage: one node of the expected solution row at the
/// central column plus the two nodes blocking the depth-1 detour above it,
/// so healing is forced around the shorter (lower) side.
fn default_fig5_damage(grid: GridDims, source: Node) -> Result<Vec<Node>> {
    let mc = grid.cols / 2;
    if source.row == 0 || mc == 0 {
        return Err(Error::Config(
            "damage: default fig5 damage needs source.row >= 1 and cols >= 2; set damage explicitly"
                .into(),
        ));
    }
    Ok(vec![
        Node::new(source.row, mc),
        Node::new(source.row - 1, mc),
        Node::new(source.row - 1, mc - 1),
    ])
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.rows < 2 || self.grid.cols < 2 {
            return Err(Error::Config(format!(
                "grid.rows/grid.cols: need at least 2x2, got {}x{}",
                self.grid.rows, self.grid.cols
            )));
        }
        self.device.validate()?;
        self.pulse.validate()?;
        let in_grid = |n: Node| n.row < self.grid.rows && n.col < self.grid.cols;
        for (name, n) in [("source", self.source), ("sink", self.sink)] {
            if !in_grid(n) {
                return Err(Error::Config(format!(
                    "{}: node {} outside {}x{} grid",
                    name, n, self.grid.rows, self.grid.cols
                )));
            }
        }
        if self.source == self.sink {
            return Err(Error::Config(format!(
                "source/sink: must be distinct, both are {}",
                self.source
            )));
        }
        for &n in &self.damage {
            if !in_grid(n) {
                return Err(Error::Config(format!("damage: node {} outside grid", n)));
            }
            if n == self.source || n == self.sink {
                return Err(Error::Config(format!(
                    "damage: cannot remove terminal {}",
                    n
                )));
            }
        }
        if self.entropy_cut >= self.grid.cols - 1 {
            return Err(Error::Config(format!(
                "entropy_cut: boundary {} out of range 0..{}",
                self.entropy_cut,
                self.grid.cols - 1
            )));
        }
        Ok(())
    }

    /// Fresh all-OFF lattice with this config's terminals and damage applied.
    pub fn build_lattice(&self) -> Result<Lattice> {
        let l = self.build_lattice_intact()?;
        l.remove_nodes(&self.damage)
    }

    /// Fresh all-OFF lattice without the damage set (used by the healing
    /// preset, which damages the evolved network instead).
    pub fn build_lattice_intact(&self) -> Result<Lattice> {
        let mut l = Lattice::build_grid(
            self.grid.rows,
            self.grid.cols,
            self.device,
            self.device.r_off,
        )?;
        l.set_terminals(self.source, self.sink)?;
        l.initialize(LimitState::Off);
        Ok(l)
    }

    /// Canonical TOML rendering of the effective configuration. Reloading
    /// the emitted text yields an equal config.
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "source = [{}, {}]\n",
            self.source.row, self.source.col
        ));
        s.push_str(&format!("sink = [{}, {}]\n", self.sink.row, self.sink.col));
        let damage: Vec<String> = self
            .damage
            .iter()
            .map(|n| format!("[{}, {}]", n.row, n.col))
            .collect();
        s.push_str(&format!("damage = [{}]\n", damage.join(", ")));
        s.push_str(&format!("entropy_cut = {}\n", self.entropy_cut));
        s.push_str(&format!(
            "outputs = {:?}\n",
            self.outputs.display().to_string()
        ));
        s.push_str("\n[grid]\n");
        s.push_str(&format!(
            "rows = {}\ncols = {}\n",
            self.grid.rows, self.grid.cols
        ));
        s.push_str("\n[device]\n");
        s.push_str(&format!("r_on = {}\n", fmt_float(self.device.r_on)));
        s.push_str(&format!("r_off = {}\n", fmt_float(self.device.r_off)));
        s.push_str(&format!("gamma = {}\n", fmt_float(self.device.gamma)));
        s.push_str(&format!(
            "i_threshold = {}\n",
            fmt_float(self.device.i_threshold)
        ));
        s.push_str("\n[pulse]\n");
        s.push_str(&format!(
            "amplitude = {}\n",
            fmt_float(self.pulse.amplitude)
        ));
        s.push_str(&format!("dt = {}\n", fmt_float(self.pulse.dt)));
        s.push_str(&format!("max_time = {}\n", fmt_float(self.pulse.max_time)));
        s.push_str(&format!("record_every = {}\n", self.pulse.record_every));
        s
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{:02x}", b)).collect()
    }
}

/// Render a float as a TOML float (always with a decimal point or exponent),
/// preserving the exact value on re-parse.
fn fmt_float(v: f64) -> String {
    let s = format!("{}", v);
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("nan") {
        s
    } else {
        format!("{}.0", s)
    }
}

/// Load and resolve a config file against a preset's defaults.
pub fn load_config(path: &Path, preset: Preset) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    RawConfig::parse(&text)?.resolve(preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_reference_defaults() {
        let raw =
            RawConfig::parse("[grid]\nrows = 11\ncols = 11\n\n[pulse]\namplitude = 6.0\n").unwrap();
        let cfg = raw.resolve(Preset::Fig2).unwrap();
        assert_eq!(cfg.device.r_on, 10.0);
        assert_eq!(cfg.device.r_off, 200.0);
        assert_eq!(cfg.device.gamma, 1e6);
        assert_eq!(cfg.device.i_threshold, 0.01);
        assert_eq!(cfg.pulse.amplitude, 6.0);
        assert_eq!(cfg.pulse.dt, 1e-6);
        assert_eq!(cfg.source, Node::new(5, 0));
        assert_eq!(cfg.sink, Node::new(5, 10));
        assert_eq!(cfg.entropy_cut, 5);
        assert!(cfg.damage.is_empty());
    }

    #[test]
    fn empty_config_resolves_per_preset() {
        let cfg = RawConfig::default().resolve(Preset::Fig2).unwrap();
        assert_eq!(cfg.device.r_on, 10.0);
        assert_eq!(cfg.pulse.amplitude, 6.0);

        let cfg4 = RawConfig::default().resolve(Preset::Fig4).unwrap();
        assert_eq!(cfg4.device.r_on, 160.0);
        assert_eq!(cfg4.pulse.amplitude, 15.25);

        let cfg5 = RawConfig::default().resolve(Preset::Fig5).unwrap();
        assert_eq!(
            cfg5.damage,
            vec![Node::new(5, 5), Node::new(4, 5), Node::new(4, 4)]
        );
    }

    #[test]
    fn invalid_device_named_in_error() {
        let raw = RawConfig::parse("[device]\nr_on = 300.0\n").unwrap();
        let err = raw.resolve(Preset::Fig2).unwrap_err();
        assert!(err.to_string().contains("r_on"), "message: {}", err);
    }

    #[test]
    fn source_equals_sink_rejected() {
        let raw = RawConfig::parse("source = [5, 0]\nsink = [5, 0]\n").unwrap();
        let err = raw.resolve(Preset::Fig2).unwrap_err();
        assert!(err.to_string().contains("source/sink"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RawConfig::parse("unknown_field = 1\n").is_err());
        assert!(RawConfig::parse("[device]\nresistance = 5.0\n").is_err());
    }

    #[test]
    fn grid_defaults_propagate_to_terminals() {
        let raw = RawConfig::parse("[grid]\nrows = 5\ncols = 7\n").unwrap();
        let cfg = raw.resolve(Preset::Run).unwrap();
        assert_eq!(cfg.source, Node::new(2, 0));
        assert_eq!(cfg.sink, Node::new(2, 6));
        assert_eq!(cfg.entropy_cut, 3);
    }

    #[test]
    fn toml_round_trip() {
        let raw = RawConfig::parse(
            "damage = [[5, 5], [4, 5]]\nentropy_cut = 4\n[device]\nr_on = 20.0\n[pulse]\namplitude = 6.75\ndt = 1e-6\n",
        )
        .unwrap();
        let cfg = raw.resolve(Preset::Run).unwrap();
        let text = cfg.to_toml_string();
        let cfg2 = RawConfig::parse(&text)
            .unwrap()
            .resolve(Preset::Run)
            .unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(cfg.hash(), cfg2.hash());
    }

    #[test]
    fn overrides_apply_and_reject_unknown() {
        let mut raw = RawConfig::default();
        raw.apply_override("device.r_on=160").unwrap();
        raw.apply_override("pulse.amplitude=15.25").unwrap();
        raw.apply_override("source=3,0").unwrap();
        raw.apply_override("damage=5,5;4,5").unwrap();
        let cfg = raw.resolve(Preset::Run).unwrap();
        assert_eq!(cfg.device.r_on, 160.0);
        assert_eq!(cfg.pulse.amplitude, 15.25);
        assert_eq!(cfg.source, Node::new(3, 0));
        assert_eq!(cfg.damage, vec![Node::new(5, 5), Node::new(4, 5)]);

        let mut raw = RawConfig::default();
        assert!(raw.apply_override("nonsense.key=1").is_err());
        assert!(raw.apply_override("device.r_on").is_err());
        assert!(raw.apply_override("device.r_on=abc").is_err());
    }

    #[test]
    fn damage_on_terminal_rejected() {
        let raw = RawConfig::parse("damage = [[5, 0]]\n").unwrap();
        assert!(raw.resolve(Preset::Run).is_err());
    }

    #[test]
    fn entropy_cut_out_of_range_rejected() {
        let raw = RawConfig::parse("entropy_cut = 10\n").unwrap();
        assert!(raw.resolve(Preset::Run).is_err());
    }

    #[test]
    fn load_config_reads_file_and_reports_missing_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "[pulse]\namplitude = 3.5\n").unwrap();
        let cfg = load_config(&path, Preset::Fig2).unwrap();
        assert_eq!(cfg.pulse.amplitude, 3.5);
        assert!(matches!(
            load_config(&dir.path().join("missing.toml"), Preset::Fig2),
            Err(Error::Io { .. })
        ));
    }
}
