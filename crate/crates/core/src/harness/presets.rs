//! Built-in configurations. Each can be passed to the CLI as
//! `--config preset:<name>`.

use super::config::{Config, InstanceConfig};
use crate::error::{Error, Result};

pub const FIVE_NODE: &str = include_str!("../../presets/five_node.toml");
pub const MIXING: &str = include_str!("../../presets/mixing.toml");
pub const INSTANCES: &str = include_str!("../../presets/instances.toml");
pub const LOWER_BOUND_TOY: &str = include_str!("../../presets/lower_bound_toy.toml");

pub const NAMES: [&str; 4] = ["five_node", "mixing", "instances", "lower_bound_toy"];

pub fn text(name: &str) -> Result<&'static str> {
    match name {
        "five_node" => Ok(FIVE_NODE),
        "mixing" => Ok(MIXING),
        "instances" => Ok(INSTANCES),
        "lower_bound_toy" => Ok(LOWER_BOUND_TOY),
        other => Err(Error::Parse {
            key: "--config".into(),
            message: format!("unknown preset `{other}` (known: {})", NAMES.join(", ")),
        }),
    }
}

pub fn load(name: &str) -> Result<Config> {
    Config::parse(text(name)?)
}

/// Node parameters of the five-node family indexed by `kappa`: `kappa = 1`
/// is the stepped profile, otherwise `0.1 + 0.2 (a-1)/(kappa-1)`.
pub fn kappa_thetas(kappa: u32, arms: usize) -> Vec<f64> {
    if kappa <= 1 {
        let mut t = vec![0.7; arms];
        t[0] = 0.3;
        return t;
    }
    (0..arms).map(|a| 0.1 + 0.2 * a as f64 / (kappa - 1) as f64).collect()
}

pub fn kappa_instances(base: &InstanceConfig, kappas: &[u32]) -> Vec<InstanceConfig> {
    kappas
        .iter()
        .map(|&k| base.with_thetas(format!("{}_{k}", base.id), kappa_thetas(k, 5)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in NAMES {
            load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(load("nope").is_err());
    }

    #[test]
    fn kappa_profiles() {
        assert_eq!(kappa_thetas(1, 5), vec![0.3, 0.7, 0.7, 0.7, 0.7]);
        let t3 = kappa_thetas(3, 5);
        for (a, b) in t3.iter().zip([0.1, 0.2, 0.3, 0.4, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let t2 = kappa_thetas(2, 5);
        for (a, b) in t2.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
