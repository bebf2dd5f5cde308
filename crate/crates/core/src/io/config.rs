use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::device::SwitchingParams;
use crate::error::{Error, Result};
use crate::experiments::{CyclingOptions, DriftModel, HsrOptions};
use crate::homeostasis::{FeedforwardMap, InputPattern, NeuronConfig, WeightMode};
use crate::presets::DeviceLevel;
use crate::thermal::{scrambled_schedule, PlantPreset, ScheduleEntry, TemperatureSchedule};

/// Prefix of environment variables that override config keys.
pub const ENV_PREFIX: &str = "MEMTHERMO_";

/// A documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct ConfigKey {
    pub name: &'static str,
    pub doc: &'static str,
}

pub const KEYS: &[ConfigKey] = &[
    ConfigKey {
        name: "run.seed",
        doc: "seed of every random sub-stream",
    },
    ConfigKey {
        name: "run.experiment",
        doc: "subcommand that wrote the manifest",
    },
    ConfigKey {
        name: "run.version",
        doc: "version that wrote the manifest",
    },
    ConfigKey {
        name: "device.level",
        doc: "level preset for single-device runs",
    },
    ConfigKey {
        name: "device.levels",
        doc: "level presets swept by `levels`",
    },
    ConfigKey {
        name: "plant.preset",
        doc: "packaged | on-wafer",
    },
    ConfigKey {
        name: "plant.tau_air",
        doc: "chamber air time constant (s)",
    },
    ConfigKey {
        name: "plant.tau_dev",
        doc: "device time constant (s) or `preset`",
    },
    ConfigKey {
        name: "schedule.kind",
        doc: "scrambled | list",
    },
    ConfigKey {
        name: "schedule.setpoints",
        doc: "setpoints for kind = list (K)",
    },
    ConfigKey {
        name: "schedule.hold",
        doc: "hold per setpoint (s)",
    },
    ConfigKey {
        name: "cycle.cadence",
        doc: "read interval during holds (s)",
    },
    ConfigKey {
        name: "cycle.require_settled",
        doc: "fail on an unsettled hold",
    },
    ConfigKey {
        name: "drift.enabled",
        doc: "enable slow resistance drift",
    },
    ConfigKey {
        name: "drift.sigma",
        doc: "log-drift per sqrt(hour)",
    },
    ConfigKey {
        name: "drift.max_discrepancy",
        doc: "largest revisit discrepancy",
    },
    ConfigKey {
        name: "switching.v_th",
        doc: "switching threshold (V)",
    },
    ConfigKey {
        name: "switching.g_14_310",
        doc: "train fraction at 1.4 V, 310 K",
    },
    ConfigKey {
        name: "switching.g_14_360",
        doc: "train fraction at 1.4 V, 360 K",
    },
    ConfigKey {
        name: "switching.beta",
        doc: "voltage steepness (1/V)",
    },
    ConfigKey {
        name: "switching.coupling_width",
        doc: "voltage band of the temperature ramp (V)",
    },
    ConfigKey {
        name: "switching.n_tau",
        doc: "pulse-count saturation scale",
    },
    ConfigKey {
        name: "switching.eta_nv",
        doc: "non-volatile share of a change",
    },
    ConfigKey {
        name: "switching.tau_ret",
        doc: "retention decay constant (s)",
    },
    ConfigKey {
        name: "switching.burn_in_gain",
        doc: "first-train multiplier",
    },
    ConfigKey {
        name: "switching.v_reset",
        doc: "reset pulse magnitude (V)",
    },
    ConfigKey {
        name: "hsr.temperatures",
        doc: "test temperatures (K)",
    },
    ConfigKey {
        name: "hsr.cadence",
        doc: "read interval while settling (s)",
    },
    ConfigKey {
        name: "hsr.stabilise",
        doc: "wait after a temperature change (s)",
    },
    ConfigKey {
        name: "hsr.pulse_v",
        doc: "programming amplitude (V)",
    },
    ConfigKey {
        name: "hsr.pulse_width",
        doc: "programming pulse width (s)",
    },
    ConfigKey {
        name: "hsr.pulses",
        doc: "pulses per train",
    },
    ConfigKey {
        name: "hsr.pulse_period",
        doc: "time between pulses (s)",
    },
    ConfigKey {
        name: "hsr.retention_reads",
        doc: "reads after the train",
    },
    ConfigKey {
        name: "hsr.retention_interval",
        doc: "time between retention reads (s)",
    },
    ConfigKey {
        name: "nullcline.voltages",
        doc: "amplitudes (V)",
    },
    ConfigKey {
        name: "nullcline.temperatures",
        doc: "temperatures (K)",
    },
    ConfigKey {
        name: "iv.temperatures",
        doc: "IV temperatures (K)",
    },
    ConfigKey {
        name: "iv.v_max",
        doc: "largest IV bias (V)",
    },
    ConfigKey {
        name: "iv.steps",
        doc: "bias steps per polarity",
    },
    ConfigKey {
        name: "signature.input",
        doc: "IV CSV to fit; empty synthesises one",
    },
    ConfigKey {
        name: "thermometer.temperatures",
        doc: "true temperatures (K)",
    },
    ConfigKey {
        name: "thermometer.trials",
        doc: "noisy reads per temperature",
    },
    ConfigKey {
        name: "thermometer.noise",
        doc: "relative log-normal read noise",
    },
    ConfigKey {
        name: "thermometer.guard",
        doc: "relative band guard",
    },
    ConfigKey {
        name: "neuron.level",
        doc: "synapse level preset",
    },
    ConfigKey {
        name: "neuron.spread",
        doc: "log-normal synapse spread",
    },
    ConfigKey {
        name: "neuron.theta",
        doc: "spike threshold or `auto`",
    },
    ConfigKey {
        name: "neuron.window",
        doc: "steps (or spikes) per rate sample",
    },
    ConfigKey {
        name: "neuron.dt",
        doc: "seconds per step",
    },
    ConfigKey {
        name: "neuron.weights",
        doc: "resistance | conductance",
    },
    ConfigKey {
        name: "feedforward.mode",
        doc: "calibrated | affine | table",
    },
    ConfigKey {
        name: "feedforward.kappa",
        doc: "affine gain (K per unit load)",
    },
    ConfigKey {
        name: "feedforward.table",
        doc: "load:K pairs separated by `;`",
    },
    ConfigKey {
        name: "calibrate.loads",
        doc: "loads the gain is calibrated on",
    },
    ConfigKey {
        name: "baseline.loads",
        doc: "loads of the baseline curve",
    },
    ConfigKey {
        name: "homeostasis.pattern",
        doc: "steps:load segments",
    },
    ConfigKey {
        name: "homeostasis.pattern_file",
        doc: "step,load CSV; overrides the pattern",
    },
];

fn default_value(name: &str) -> String {
    let sw = SwitchingParams::default();
    let hsr = HsrOptions::default();
    let s = match name {
        "run.seed" => "0",
        "run.experiment"
        | "run.version"
        | "signature.input"
        | "feedforward.table"
        | "homeostasis.pattern_file" => "",
        "device.level" | "neuron.level" => "pristine",
        "device.levels" => "pristine,L1,L2,L3,L4",
        "plant.preset" => "packaged",
        "plant.tau_air" => "180",
        "plant.tau_dev" => "preset",
        "schedule.kind" => "scrambled",
        "schedule.setpoints" => "300,310,320,330,340,350,360,360,300",
        "schedule.hold" => "3600",
        "cycle.cadence" | "hsr.cadence" => "6",
        "cycle.require_settled" => "true",
        "drift.enabled" => "false",
        "drift.sigma" => "0.01",
        "drift.max_discrepancy" => "0.05",
        "switching.v_th" => return sw.v_th.to_string(),
        "switching.g_14_310" => return sw.g_14_310.to_string(),
        "switching.g_14_360" => return sw.g_14_360.to_string(),
        "switching.beta" => return sw.beta.to_string(),
        "switching.coupling_width" => return sw.coupling_width.to_string(),
        "switching.n_tau" => return sw.n_tau.to_string(),
        "switching.eta_nv" => return sw.eta_nv.to_string(),
        "switching.tau_ret" => return sw.tau_ret.to_string(),
        "switching.burn_in_gain" => return sw.burn_in_gain.to_string(),
        "switching.v_reset" => return sw.v_reset.to_string(),
        "hsr.temperatures" => "310,320,330,340,350,360",
        "hsr.stabilise" => return hsr.stabilise.to_string(),
        "hsr.pulse_v" => return hsr.pulse_v.to_string(),
        "hsr.pulse_width" => return hsr.pulse_width.to_string(),
        "hsr.pulses" => return hsr.pulses.to_string(),
        "hsr.pulse_period" => return hsr.pulse_period.to_string(),
        "hsr.retention_reads" => return hsr.retention_reads.to_string(),
        "hsr.retention_interval" => return hsr.retention_interval.to_string(),
        "nullcline.voltages" => "0.7,0.8,0.9,1.0,1.1,1.2,1.3,1.4",
        "nullcline.temperatures" => "310,320,330,340,350,360",
        "iv.temperatures" => "300,330,360",
        "iv.v_max" => "0.4",
        "iv.steps" => "8",
        "thermometer.temperatures" => "300,310,320,330,340,350,360",
        "thermometer.trials" => "100",
        "thermometer.noise" => "0.01",
        "thermometer.guard" => "0.05",
        "neuron.spread" => "0",
        "neuron.theta" => "auto",
        "neuron.window" => "25",
        "neuron.dt" => "1",
        "neuron.weights" => "resistance",
        "feedforward.mode" => "calibrated",
        "feedforward.kappa" => "0",
        "calibrate.loads" => "0.15,0.2,0.25,0.3,0.35,0.4",
        "baseline.loads" => "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6",
        "homeostasis.pattern" => "3000:0.2,6000:0.3,6000:0.2",
        other => unreachable!("no default for {other}"),
    };
    s.to_string()
}

/// Flat `section.key = value` configuration with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|k| (k.name.to_string(), default_value(k.name)))
                .collect(),
        }
    }
}

impl Config {
    pub fn is_known(key: &str) -> bool {
        KEYS.iter().any(|k| k.name == key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !Self::is_known(key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.values
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped; a key may appear only once per text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {} is not `key = value`", lineno + 1),
                ));
            };
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "duplicate key"));
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies `MEMTHERMO_SECTION__KEY=value` overrides.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = rest.to_ascii_lowercase().replacen("__", ".", 1);
            if !Self::is_known(&key) {
                return Err(Error::config(
                    name,
                    "environment override names no config key",
                ));
            }
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("config key {key} is not declared"))
    }

    /// Resolved configuration, one `key = value` line per key in key order.
    /// Loading the text back reproduces the configuration exactly.
    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key);
        raw.parse()
            .map_err(|_| Error::config(key, format!("cannot parse '{raw}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key)?;
        if !v.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
        Ok(v)
    }

    pub fn positive(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        if v <= 0.0 {
            return Err(Error::config(key, "must be positive"));
        }
        Ok(v)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parse(key)
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Err(Error::config(key, "list is empty"));
        }
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::config(key, format!("cannot parse list item '{}'", item.trim()))
                    })
            })
            .collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64("run.seed")
    }

    pub fn level(&self, key: &str) -> Result<DeviceLevel> {
        self.get(key)
            .parse()
            .map_err(|e: Error| Error::config(key, e.to_string()))
    }

    pub fn levels(&self) -> Result<Vec<DeviceLevel>> {
        let key = "device.levels";
        self.get(key)
            .split(',')
            .map(|s| {
                s.parse()
                    .map_err(|e: Error| Error::config(key, e.to_string()))
            })
            .collect()
    }

    /// `(tau_air, tau_dev)`.
    pub fn plant_taus(&self) -> Result<(f64, f64)> {
        let preset: PlantPreset = self
            .get("plant.preset")
            .parse()
            .map_err(|e: Error| Error::config("plant.preset", e.to_string()))?;
        let tau_dev = match self.get("plant.tau_dev") {
            "preset" => preset.tau_dev(),
            _ => self.positive("plant.tau_dev")?,
        };
        Ok((self.positive("plant.tau_air")?, tau_dev))
    }

    pub fn switching(&self) -> Result<SwitchingParams> {
        let p = SwitchingParams {
            v_th: self.f64("switching.v_th")?,
            g_14_310: self.f64("switching.g_14_310")?,
            g_14_360: self.f64("switching.g_14_360")?,
            beta: self.f64("switching.beta")?,
            coupling_width: self.f64("switching.coupling_width")?,
            n_tau: self.f64("switching.n_tau")?,
            eta_nv: self.f64("switching.eta_nv")?,
            tau_ret: self.f64("switching.tau_ret")?,
            burn_in_gain: self.f64("switching.burn_in_gain")?,
            v_reset: self.f64("switching.v_reset")?,
        };
        p.validate()
            .map_err(|e| Error::config("switching", e.to_string()))?;
        Ok(p)
    }

    pub fn schedule(&self) -> Result<TemperatureSchedule> {
        let hold = self.positive("schedule.hold")?;
        let seed = self.seed()?;
        let result = match self.get("schedule.kind") {
            "scrambled" => scrambled_schedule(seed, hold),
            "list" => {
                let entries = self
                    .f64_list("schedule.setpoints")?
                    .into_iter()
                    .map(|setpoint| ScheduleEntry { setpoint, hold })
                    .collect();
                TemperatureSchedule::new(entries, seed)
            }
            other => {
                return Err(Error::config(
                    "schedule.kind",
                    format!("unknown kind '{other}'"),
                ))
            }
        };
        result.map_err(|e| Error::config("schedule", e.to_string()))
    }

    pub fn cycling_options(&self) -> Result<CyclingOptions> {
        let (tau_air, tau_dev) = self.plant_taus()?;
        Ok(CyclingOptions {
            cadence: self.positive("cycle.cadence")?,
            tau_air,
            tau_dev,
            drift: DriftModel {
                enabled: self.bool("drift.enabled")?,
                sigma_per_sqrt_hour: self.f64("drift.sigma")?,
                max_discrepancy: self.positive("drift.max_discrepancy")?,
            },
            seed: self.seed()?,
            require_settled: self.bool("cycle.require_settled")?,
        })
    }

    pub fn hsr_options(&self) -> Result<HsrOptions> {
        let (tau_air, tau_dev) = self.plant_taus()?;
        Ok(HsrOptions {
            cadence: self.positive("hsr.cadence")?,
            stabilise: self.positive("hsr.stabilise")?,
            pulse_v: self.f64("hsr.pulse_v")?,
            pulse_width: self.positive("hsr.pulse_width")?,
            pulses: self.u64("hsr.pulses")?,
            pulse_period: self.positive("hsr.pulse_period")?,
            retention_reads: self.usize("hsr.retention_reads")?,
            retention_interval: self.positive("hsr.retention_interval")?,
            tau_air,
            tau_dev,
        })
    }

    /// Neuron configuration. A `calibrated` feedforward mode is returned as
    /// a zero-gain affine map; the caller calibrates it.
    pub fn neuron_config(&self) -> Result<NeuronConfig> {
        let (tau_air, tau_dev) = self.plant_taus()?;
        let theta = match self.get("neuron.theta") {
            "auto" => None,
            _ => Some(self.positive("neuron.theta")?),
        };
        let weight_mode = match self.get("neuron.weights") {
            "resistance" => WeightMode::Resistance,
            "conductance" => WeightMode::Conductance,
            other => {
                return Err(Error::config(
                    "neuron.weights",
                    format!("unknown mode '{other}'"),
                ))
            }
        };
        let spread = self.f64("neuron.spread")?;
        if spread < 0.0 {
            return Err(Error::config("neuron.spread", "must be non-negative"));
        }
        let window = self.usize("neuron.window")?;
        if window == 0 {
            return Err(Error::config("neuron.window", "must be at least 1"));
        }
        Ok(NeuronConfig {
            level: self.level("neuron.level")?,
            spread_sigma: spread,
            theta,
            dt: self.positive("neuron.dt")?,
            window,
            tau_air,
            tau_dev,
            weight_mode,
            map: match self.get("feedforward.mode") {
                "calibrated" => FeedforwardMap::Affine { kappa: 0.0 },
                _ => self.feedforward_map()?,
            },
        })
    }

    pub fn feedforward_calibrated(&self) -> bool {
        self.get("feedforward.mode") == "calibrated"
    }

    pub fn feedforward_map(&self) -> Result<FeedforwardMap> {
        match self.get("feedforward.mode") {
            "affine" | "calibrated" => FeedforwardMap::affine(self.f64("feedforward.kappa")?)
                .map_err(|e| Error::config("feedforward.kappa", e.to_string())),
            "table" => {
                let key = "feedforward.table";
                let points = self
                    .get(key)
                    .split(';')
                    .map(|pair| {
                        let (l, t) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::config(key, format!("'{pair}' is not load:K")))?;
                        let parse = |s: &str| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::config(key, format!("cannot parse '{s}'")))
                        };
                        Ok((parse(l)?, parse(t)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FeedforwardMap::table(points).map_err(|e| Error::config(key, e.to_string()))
            }
            other => Err(Error::config(
                "feedforward.mode",
                format!("unknown mode '{other}'"),
            )),
        }
    }

    /// Inline `steps:load` segments.
    pub fn pattern(&self) -> Result<InputPattern> {
        let key = "homeostasis.pattern";
        let segments = self
            .get(key)
            .split(',')
            .map(|seg| {
                let (n, l) = seg
                    .split_once(':')
                    .ok_or_else(|| Error::config(key, format!("'{seg}' is not steps:load")))?;
                let steps = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::config(key, format!("bad step count '{n}'")))?;
                let load = l
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(key, format!("bad load '{l}'")))?;
                Ok((steps, load))
            })
            .collect::<Result<Vec<_>>>()?;
        InputPattern::from_loads(&segments).map_err(|e| Error::config(key, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_has_a_default() {
        let c = Config::default();
        for k in KEYS {
            let _ = c.get(k.name);
        }
        c.switching().unwrap();
        c.schedule().unwrap();
        c.cycling_options().unwrap();
        c.hsr_options().unwrap();
        c.neuron_config().unwrap();
        c.pattern().unwrap();
        assert_eq!(c.levels().unwrap(), DeviceLevel::ALL.to_vec());
        assert_eq!(c.plant_taus().unwrap(), (180.0, 720.0));
        assert_eq!(c.switching().unwrap(), SwitchingParams::default());
        assert_eq!(c.hsr_options().unwrap(), HsrOptions::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let mut c = Config::default();
        let err = c
            .apply_text("plant.tau_air = 100\nplant.bogus = 1\n")
            .unwrap_err();
        assert_eq!(
            err,
            Error::Config {
                key: "plant.bogus".into(),
                reason: "unknown key".into()
            }
        );
    }

    #[test]
    fn comments_blank_lines_and_duplicates() {
        let mut c = Config::default();
        c.apply_text("# comment\n\nrun.seed = 9\n").unwrap();
        assert_eq!(c.seed().unwrap(), 9);
        assert!(c.apply_text("run.seed = 1\nrun.seed = 2\n").is_err());
        assert!(c.apply_text("no equals sign\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = Config::default();
        c.apply_text("plant.preset = on-wafer\nneuron.theta = 7.5\n")
            .unwrap();
        let mut d = Config::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
        assert_eq!(d.plant_taus().unwrap(), (180.0, 60.0));
    }

    #[test]
    fn env_overrides() {
        let mut c = Config::default();
        c.apply_env([
            ("MEMTHERMO_PLANT__TAU_DEV".to_string(), "300".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ])
        .unwrap();
        assert_eq!(c.plant_taus().unwrap().1, 300.0);
        let err = c
            .apply_env([("MEMTHERMO_NOPE__X".to_string(), "1".to_string())])
            .unwrap_err();
        assert!(matches!(err, Error::Config { key, .. } if key == "MEMTHERMO_NOPE__X"));
    }

    #[test]
    fn bad_values_name_their_key() {
        let mut c = Config::default();
        c.set("schedule.hold", "-5").unwrap();
        assert!(matches!(c.schedule(), Err(Error::Config { key, .. }) if key == "schedule.hold"));
        c.set("feedforward.mode", "table").unwrap();
        c.set("feedforward.table", "0.1:300;0.4:350").unwrap();
        assert_eq!(c.feedforward_map().unwrap().setpoint(0.4), 350.0);
    }
}
