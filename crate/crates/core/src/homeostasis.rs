//! Thermally regulated accumulate-and-fire neuron.
//!
//! Twenty-five memristive synapses share one thermal plant. The plant
//! setpoint follows the mean input load, and because heating lowers every
//! synapse resistance it lowers the weights and pulls the firing rate back
//! toward its baseline.

use rand_distr::{Distribution, StandardNormal};

use crate::device::{read_resistance, DeviceState, ThermalFit, T_MAX, T_MIN};
use crate::error::{Error, Result};
use crate::presets::DeviceLevel;
use crate::rng;
use crate::stats::variance;
use crate::thermal::{ThermalPlant, TAU_AIR_DEFAULT, TAU_DEV_PACKAGED};

pub const N_SYNAPSES: usize = 25;
pub const DEFAULT_WINDOW: usize = 25;
/// Steps averaged for a settled rate.
pub const SETTLED_STEPS: usize = 2000;
/// Load at which the default threshold gives half a spike per step at 300 K.
const THETA_LOAD: f64 = 0.25;
const THETA_RATE: f64 = 0.5;
pub const KAPPA_STEP: f64 = 2.0;
pub const KAPPA_MAX: f64 = 240.0;

/// `w = r_now / r_ref`: heating lowers the resistance and therefore the weight.
pub fn synapse_weight(r_now: f64, r_ref: f64) -> f64 {
    r_now / r_ref
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Weight proportional to resistance.
    Resistance,
    /// Weight proportional to conductance, `r_ref / r_now`.
    Conductance,
}

/// Load to temperature setpoint map.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedforwardMap {
    /// `clamp(300 + kappa * load, 300, 360)`.
    Affine { kappa: f64 },
    /// Piecewise-linear `(load, setpoint)` table, held flat outside its range.
    Table(Vec<(f64, f64)>),
}

impl FeedforwardMap {
    pub fn affine(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::invalid(format!(
                "feedforward gain must be non-negative, got {kappa}"
            )));
        }
        Ok(FeedforwardMap::Affine { kappa })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("feedforward table is empty"));
        }
        if points
            .windows(2)
            .any(|w| !(w[1].0 > w[0].0) || w[1].1 < w[0].1)
        {
            return Err(Error::invalid(
                "feedforward table needs increasing loads and non-decreasing setpoints",
            ));
        }
        Ok(FeedforwardMap::Table(points))
    }

    pub fn setpoint(&self, load: f64) -> f64 {
        let raw = match self {
            FeedforwardMap::Affine { kappa } => T_MIN + kappa * load,
            FeedforwardMap::Table(points) => {
                let i = points.partition_point(|p| p.0 <= load);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[i - 1].1
                } else {
                    let (l0, t0) = points[i - 1];
                    let (l1, t1) = points[i];
                    t0 + (t1 - t0) * (load - l0) / (l1 - l0)
                }
            }
        };
        raw.clamp(T_MIN, T_MAX)
    }
}

pub fn feedforward_setpoint(load: f64, map: &FeedforwardMap) -> f64 {
    map.setpoint(load)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronConfig {
    pub level: DeviceLevel,
    /// Log-normal device-to-device spread of the synapse resistances.
    pub spread_sigma: f64,
    /// Threshold; `None` picks the default operating point.
    pub theta: Option<f64>,
    pub dt: f64,
    pub window: usize,
    pub tau_air: f64,
    pub tau_dev: f64,
    pub weight_mode: WeightMode,
    pub map: FeedforwardMap,
}

impl Default for NeuronConfig {
    fn default() -> Self {
        Self {
            level: DeviceLevel::Pristine,
            spread_sigma: 0.0,
            theta: None,
            dt: 1.0,
            window: DEFAULT_WINDOW,
            tau_air: TAU_AIR_DEFAULT,
            tau_dev: TAU_DEV_PACKAGED,
            weight_mode: WeightMode::Resistance,
            map: FeedforwardMap::Affine { kappa: 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronSystem {
    synapses: Vec<DeviceState>,
    r_ref: Vec<f64>,
    fit: ThermalFit,
    plant: ThermalPlant,
    accumulator: f64,
    theta: f64,
    dt: f64,
    window: usize,
    weight_mode: WeightMode,
    map: FeedforwardMap,
    cached: Option<(f64, Vec<f64>)>,
}

impl NeuronSystem {
    pub fn new(config: &NeuronConfig, fit: &ThermalFit, seed: u64) -> Result<Self> {
        if !(config.dt > 0.0) || !config.dt.is_finite() {
            return Err(Error::invalid("neuron time step must be positive"));
        }
        if config.window == 0 {
            return Err(Error::invalid("rate window must be at least one step"));
        }
        if !(config.spread_sigma >= 0.0) {
            return Err(Error::invalid("device spread must be non-negative"));
        }
        let nominal = config.level.state();
        let mut spread = rng::substream(seed, rng::STREAM_SPREAD);
        let synapses: Vec<DeviceState> = (0..N_SYNAPSES)
            .map(|_| {
                if config.spread_sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut spread);
                    nominal.scaled((config.spread_sigma * z).exp())
                } else {
                    nominal
                }
            })
            .collect();
        let mut system = Self {
            synapses,
            r_ref: vec![config.level.r_ref(); N_SYNAPSES],
            fit: fit.clone(),
            plant: ThermalPlant::new(T_MIN, config.tau_air, config.tau_dev)?,
            accumulator: 0.0,
            theta: 1.0,
            dt: config.dt,
            window: config.window,
            weight_mode: config.weight_mode,
            map: config.map.clone(),
            cached: None,
        };
        system.theta = match config.theta {
            Some(theta) if theta > 0.0 && theta.is_finite() => theta,
            Some(theta) => {
                return Err(Error::invalid(format!(
                    "threshold must be positive, got {theta}"
                )))
            }
            None => system.weights_at(T_MIN).iter().sum::<f64>() * THETA_LOAD / THETA_RATE,
        };
        Ok(system)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn accumulator(&self) -> f64 {
        self.accumulator
    }

    pub fn plant(&self) -> &ThermalPlant {
        &self.plant
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn map(&self) -> &FeedforwardMap {
        &self.map
    }

    pub fn with_map(mut self, map: FeedforwardMap) -> Self {
        self.map = map;
        self
    }

    pub fn weights_at(&self, t: f64) -> Vec<f64> {
        self.synapses
            .iter()
            .zip(&self.r_ref)
            .map(|(s, &r_ref)| {
                let r = read_resistance(s, &self.fit, t);
                match self.weight_mode {
                    WeightMode::Resistance => synapse_weight(r, r_ref),
                    WeightMode::Conductance => r_ref / r,
                }
            })
            .collect()
    }

    fn current_weights(&mut self) -> &[f64] {
        let t = self.plant.t_dev();
        if self.cached.as_ref().is_none_or(|(tc, _)| *tc != t) {
            self.cached = Some((t, self.weights_at(t)));
        }
        &self.cached.as_ref().expect("cache filled above").1
    }

    /// Puts the plant at equilibrium for a constant `load` and clears the
    /// accumulator.
    pub fn settle_at(&mut self, load: f64) -> Result<()> {
        self.plant.set_setpoint(self.map.setpoint(load))?;
        self.plant.equilibrate();
        self.accumulator = 0.0;
        Ok(())
    }

    /// Sets the plant to a fixed setpoint at equilibrium, bypassing the map.
    pub fn hold_at(&mut self, t_set: f64) -> Result<()> {
        self.plant.set_setpoint(t_set)?;
        self.plant.equilibrate();
        self.accumulator = 0.0;
        Ok(())
    }
}

/// One step of the neuron: integrate the weighted inputs, fire at most once,
/// then advance the plant toward the setpoint for the mean input.
pub fn neuron_step(system: &mut NeuronSystem, x: &[f64]) -> Result<bool> {
    if x.len() != N_SYNAPSES {
        return Err(Error::invalid(format!(
            "expected {N_SYNAPSES} inputs, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("inputs must lie in [0, 1]"));
    }
    let theta = system.theta;
    let drive: f64 = system
        .current_weights()
        .iter()
        .zip(x)
        .map(|(w, v)| w * v)
        .sum();
    system.accumulator += drive;
    let spiked = system.accumulator >= theta;
    if spiked {
        // Carry the excess over; anything beyond a second threshold is lost.
        system.accumulator = (system.accumulator - theta) % theta;
    }
    let load = x.iter().sum::<f64>() / N_SYNAPSES as f64;
    system.plant.set_setpoint(system.map.setpoint(load))?;
    system.plant = system.plant.advanced(system.dt);
    Ok(spiked)
}

/// Inputs of one pattern segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentInput {
    /// Every synapse sees the same value.
    Uniform(f64),
    Vector(Vec<f64>),
}

impl SegmentInput {
    fn inputs(&self) -> Vec<f64> {
        match self {
            SegmentInput::Uniform(load) => vec![*load; N_SYNAPSES],
            SegmentInput::Vector(v) => v.clone(),
        }
    }

    pub fn load(&self) -> f64 {
        match self {
            SegmentInput::Uniform(load) => *load,
            SegmentInput::Vector(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub steps: usize,
    pub input: SegmentInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputPattern {
    segments: Vec<Segment>,
}

impl InputPattern {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.iter().map(|s| s.steps).sum::<usize>() == 0 {
            return Err(Error::invalid("input pattern has zero duration"));
        }
        for s in &segments {
            let ok = match &s.input {
                SegmentInput::Uniform(l) => (0.0..=1.0).contains(l),
                SegmentInput::Vector(v) => {
                    v.len() == N_SYNAPSES && v.iter().all(|x| (0.0..=1.0).contains(x))
                }
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "segment inputs must be {N_SYNAPSES} values or one load, all in [0, 1]"
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Constant uniform loads, `(steps, load)` per segment.
    pub fn from_loads(loads: &[(usize, f64)]) -> Result<Self> {
        Self::new(
            loads
                .iter()
                .map(|&(steps, load)| Segment {
                    steps,
                    input: SegmentInput::Uniform(load),
                })
                .collect(),
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> usize {
        self.segments.iter().map(|s| s.steps).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load: f64,
    pub spiked: bool,
    pub t_set: f64,
    pub t_dev: f64,
}

/// Rate over a block of consecutive steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRate {
    pub start_step: usize,
    pub steps: usize,
    pub spikes: usize,
    /// Spikes per step.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeostasisRun {
    pub steps: Vec<StepRecord>,
    /// Non-overlapping windows of `window` steps.
    pub step_windows: Vec<WindowRate>,
    /// Blocks ending on every `window`-th spike.
    pub spike_windows: Vec<WindowRate>,
    pub spike_steps: Vec<usize>,
}

impl HomeostasisRun {
    pub fn rate_between(&self, from: usize, to: usize) -> f64 {
        let n = to.saturating_sub(from);
        if n == 0 {
            return 0.0;
        }
        let spikes = self.steps[from..to].iter().filter(|s| s.spiked).count();
        spikes as f64 / n as f64
    }
}

/// Simulates `pattern` starting from equilibrium at its first segment load.
pub fn run_homeostasis(pattern: &InputPattern, system: &NeuronSystem) -> Result<HomeostasisRun> {
    let mut sys = system.clone();
    let first = pattern
        .segments()
        .iter()
        .find(|s| s.steps > 0)
        .expect("pattern has positive duration");
    sys.settle_at(first.input.load())?;

    let mut steps = Vec::with_capacity(pattern.duration());
    let mut spike_steps = Vec::new();
    for segment in pattern.segments() {
        let x = segment.input.inputs();
        let load = segment.input.load();
        for _ in 0..segment.steps {
            let step = steps.len();
            let spiked = neuron_step(&mut sys, &x)?;
            if spiked {
                spike_steps.push(step);
            }
            steps.push(StepRecord {
                step,
                load,
                spiked,
                t_set: sys.plant.t_set(),
                t_dev: sys.plant.t_dev(),
            });
        }
    }

    let window = sys.window;
    let step_windows = steps
        .chunks_exact(window)
        .enumerate()
        .map(|(i, chunk)| {
            let spikes = chunk.iter().filter(|s| s.spiked).count();
            WindowRate {
                start_step: i * window,
                steps: window,
                spikes,
                rate: spikes as f64 / window as f64,
            }
        })
        .collect();

    let mut spike_windows = Vec::new();
    let mut start = 0;
    for group in spike_steps.chunks_exact(window) {
        let end = group[window - 1] + 1;
        spike_windows.push(WindowRate {
            start_step: start,
            steps: end - start,
            spikes: window,
            rate: window as f64 / (end - start) as f64,
        });
        start = end;
    }

    Ok(HomeostasisRun {
        steps,
        step_windows,
        spike_windows,
        spike_steps,
    })
}

/// Spike rate at constant `load` once the plant has reached equilibrium.
pub fn settled_rate(system: &NeuronSystem, load: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&load) {
        return Err(Error::invalid(format!("load {load} outside [0, 1]")));
    }
    let mut sys = system.clone();
    sys.settle_at(load)?;
    let x = vec![load; N_SYNAPSES];
    let mut spikes = 0usize;
    for _ in 0..SETTLED_STEPS {
        spikes += usize::from(neuron_step(&mut sys, &x)?);
    }
    Ok(spikes as f64 / SETTLED_STEPS as f64)
}

/// `(load, settled rate)` with the system's own feedforward map.
pub fn baseline_curve(loads: &[f64], system: &NeuronSystem) -> Result<Vec<(f64, f64)>> {
    loads
        .iter()
        .map(|&load| Ok((load, settled_rate(system, load)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainCalibration {
    pub kappa: f64,
    /// Variance of the settled rates at `kappa`.
    pub variance: f64,
    pub rates: Vec<(f64, f64)>,
}

/// Grid search over the affine gain for the smallest variance of settled
/// rates across `loads`; ties go to the smaller gain.
pub fn calibrate_gain(loads: &[f64], template: &NeuronSystem) -> Result<GainCalibration> {
    if loads.is_empty() {
        return Err(Error::Calibration(
            "gain calibration needs at least one load".into(),
        ));
    }
    let mut best: Option<GainCalibration> = None;
    let n = (KAPPA_MAX / KAPPA_STEP).round() as usize;
    for i in 0..=n {
        let kappa = i as f64 * KAPPA_STEP;
        let system = template.clone().with_map(FeedforwardMap::Affine { kappa });
        let rates = baseline_curve(loads, &system)?;
        let values: Vec<f64> = rates.iter().map(|r| r.1).collect();
        let var = variance(&values);
        if best.as_ref().is_none_or(|b| var < b.variance) {
            best = Some(GainCalibration {
                kappa,
                variance: var,
                rates,
            });
        }
    }
    best.ok_or_else(|| Error::Calibration("no feasible gain".into()))
}

/// Rate response to a single load step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResponse {
    pub baseline: f64,
    /// Rate of the first window after the step minus the baseline.
    pub first_window_deviation: f64,
    /// Largest absolute window deviation before the residual is measured.
    pub peak_deviation: f64,
    /// Settled rate after five device time constants minus the baseline.
    pub residual: f64,
}

/// Settles at `from`, steps to `to`, and measures the transient and the
/// residual offset five device time constants later.
pub fn step_response(system: &NeuronSystem, from: f64, to: f64) -> Result<StepResponse> {
    let window = system.window;
    let pre = SETTLED_STEPS.div_ceil(window) * window;
    let relax =
        ((5.0 * system.plant.tau_dev() / system.dt).ceil() as usize).div_ceil(window) * window;
    let pattern = InputPattern::from_loads(&[(pre, from), (relax + SETTLED_STEPS, to)])?;
    let run = run_homeostasis(&pattern, system)?;
    let baseline = run.rate_between(0, pre);
    let first = pre / window;
    let last = (pre + relax) / window;
    let deviations: Vec<f64> = run.step_windows[first..last]
        .iter()
        .map(|w| w.rate - baseline)
        .collect();
    let peak = deviations.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let residual = run.rate_between(pre + relax, pre + relax + SETTLED_STEPS) - baseline;
    Ok(StepResponse {
        baseline,
        first_window_deviation: deviations[0],
        peak_deviation: peak,
        residual,
    })
}
