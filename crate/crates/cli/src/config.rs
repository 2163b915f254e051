//! Resolution of the run configuration: preset, then config file, then
//! `--set` overrides, then the dedicated flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use qmemristor::presets::{self, Preset};
use qmemristor::{GaussianState, SimParams};

use crate::CliError;

/// Fully resolved configuration. Serialised flat, with the initial state
/// nested under `initial`, which is also the accepted `--config` format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub params: SimParams,
    pub initial: GaussianState,
}

#[derive(Debug, Default)]
pub struct Overrides<'a> {
    pub preset: Option<Preset>,
    pub config: Option<&'a Path>,
    pub set: &'a [String],
    pub seed: Option<u64>,
    pub traj: Option<usize>,
    pub record_stride: Option<usize>,
}

fn merge(base: &mut Map<String, Value>, patch: Map<String, Value>) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set_path(root: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Config(format!("empty key in --set {key}")))?;
    let mut node = root;
    for p in parts {
        node = match node.entry(p).or_insert_with(|| Value::Object(Map::new())) {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("--set {key}: '{p}' is not a group"))),
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_assignment(s: &str) -> Result<(&str, Value), CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{s}'")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.trim(), value))
}

pub fn resolve(o: &Overrides) -> Result<RunConfig, CliError> {
    let preset = o.preset.unwrap_or(Preset::Fig3b);
    let base = RunConfig {
        params: preset.params(),
        initial: presets::initial_state(),
    };
    let Value::Object(mut root) = serde_json::to_value(base).expect("config serialises") else {
        unreachable!("config is a struct");
    };

    if let Some(path) = o.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(m)) => merge(&mut root, m),
            Ok(_) => return Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
            Err(e) => return Err(CliError::Config(format!("{}: {e}", path.display()))),
        }
    }
    for s in o.set {
        let (key, value) = parse_assignment(s)?;
        set_path(&mut root, key, value)?;
    }
    if let Some(seed) = o.seed {
        root.insert("master_seed".into(), seed.into());
    }
    if let Some(n) = o.traj {
        root.insert("n_traj".into(), n.into());
    }
    if let Some(n) = o.record_stride {
        root.insert("record_stride".into(), n.into());
    }

    // Flattened structs do not support deny_unknown_fields, so the two parts
    // are checked separately.
    let initial = root.remove("initial").unwrap_or(Value::Null);
    let initial: GaussianState =
        serde_json::from_value(initial).map_err(|e| CliError::Config(format!("initial: {e}")))?;
    let params: SimParams = serde_json::from_value(Value::Object(root)).map_err(|e| CliError::Config(e.to_string()))?;
    let params = params.validate()?;
    Ok(RunConfig { params, initial })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn defaults_to_fig3b() {
        let c = resolve(&Overrides::default()).unwrap();
        assert_eq!(c.params, Preset::Fig3b.params());
        assert_eq!(c.initial.mean_phi, 20.0);
    }

    #[test]
    fn flags_override_set_which_overrides_preset() {
        let s = sets(&["epsilon=0", "master_seed=3", "initial.mean_phi=5"]);
        let c = resolve(&Overrides {
            preset: Some(Preset::Fig3a),
            set: &s,
            seed: Some(9),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.params.tau, 0.005);
        assert_eq!(c.params.epsilon, 0.0);
        assert_eq!(c.params.master_seed, 9);
        assert_eq!(c.initial.mean_phi, 5.0);
    }

    #[test]
    fn unknown_and_invalid_keys_are_config_errors() {
        let s = sets(&["epsilom=0"]);
        let e = resolve(&Overrides { set: &s, ..Default::default() }).unwrap_err();
        assert!(e.to_string().contains("epsilom"), "{e}");

        let s = sets(&["tau=-1"]);
        let e = resolve(&Overrides { set: &s, ..Default::default() }).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        assert!(e.to_string().contains("tau must be positive"), "{e}");

        let s = sets(&["initial.var_x=1"]);
        assert!(resolve(&Overrides { set: &s, ..Default::default() }).is_err());
        let s = sets(&["noequals"]);
        assert!(resolve(&Overrides { set: &s, ..Default::default() }).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = sets(&["nu=0.25", "initial.var_q=0.7"]);
        let c = resolve(&Overrides { set: &s, ..Default::default() }).unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
        let again = resolve(&Overrides {
            preset: Some(Preset::Fig3c),
            config: Some(&path),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(again, c);
    }
}
