use std::path::Path;

use memthermo::calibration::{extract_thermionic, fit_switch_curve, BandEdge};
use memthermo::device::ThermalFit;
use memthermo::experiments::{
    run_heat_stimulate_retention, run_iv_sweep, run_level_sweep, run_nullcline_sweep,
    run_thermal_cycling, run_thermometer, TraceRecord,
};
use memthermo::homeostasis::{
    baseline_curve, calibrate_gain, run_homeostasis, FeedforwardMap, GainCalibration, InputPattern,
    NeuronSystem,
};
use memthermo::io::{
    format_sig9 as num, read_iv_csv, read_pattern_csv, trace_table, Config, Table, TRACE_HEADER,
};
use memthermo::presets::default_fit;
use memthermo::{rng, Error, Result};

use super::Command;

pub(crate) fn run(command: Command, config: &Config, out: &Path) -> Result<()> {
    let fit = default_fit();
    match command {
        Command::Cycle => cycle(config, &fit, out),
        Command::Levels => levels(config, &fit, out),
        Command::Iv => iv(config, &fit, out),
        Command::Signature => signature(config, &fit, out),
        Command::Hsr => hsr(config, &fit, out),
        Command::Nullcline => nullcline(config, &fit, out),
        Command::Thermometer => thermometer(config, &fit, out),
        Command::Baseline => baseline(config, &fit, out),
        Command::Homeostasis => homeostasis(config, &fit, out),
        Command::Calibrate => calibrate(config, &fit, out),
    }
}

fn opt_index(i: Option<u64>) -> String {
    i.map(|i| i.to_string()).unwrap_or_default()
}

fn trace_row(r: &TraceRecord) -> Vec<String> {
    let mut row: Vec<String> = [r.t, r.t_set, r.t_air, r.t_dev, r.r]
        .iter()
        .map(|&v| num(v))
        .collect();
    row.push(r.phase.to_string());
    row
}

fn cycle(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let level = config.level("device.level")?;
    let run = run_thermal_cycling(
        &level.state(),
        fit,
        &config.schedule()?,
        &config.cycling_options()?,
        rng::STREAM_DRIFT,
    )?;
    trace_table(&run.trace).write(&out.join("cycle.csv"))?;
    let mut holds = Table::new(&["setpoint_K", "r_end_ohm", "r_steady_ohm", "settled"]);
    for h in &run.holds {
        holds.push(vec![
            num(h.setpoint),
            num(h.r_end),
            num(h.r_steady),
            h.settling.is_settled().to_string(),
        ]);
    }
    holds.write(&out.join("cycle_holds.csv"))
}

fn levels(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let runs = run_level_sweep(
        &config.levels()?,
        fit,
        &config.schedule()?,
        &config.cycling_options()?,
    )?;
    let mut header = vec!["level"];
    header.extend(TRACE_HEADER);
    let mut traces = Table::new(&header);
    let mut summary = Table::new(&["level", "r_ref_ohm", "drop", "sensitivity_pct_per_K"]);
    for lr in &runs {
        for r in &lr.run.trace {
            let mut row = vec![lr.level.label().to_string()];
            row.extend(trace_row(r));
            traces.push(row);
        }
        summary.push(vec![
            lr.level.label().to_string(),
            num(lr.level.r_ref()),
            num(lr.drop),
            num(lr.sensitivity),
        ]);
    }
    traces.write(&out.join("levels.csv"))?;
    summary.write(&out.join("levels_summary.csv"))
}

fn iv_set(config: &Config, fit: &ThermalFit) -> Result<memthermo::calibration::IvCurveSet> {
    run_iv_sweep(
        config.level("device.level")?,
        fit,
        &config.f64_list("iv.temperatures")?,
        config.positive("iv.v_max")?,
        config.usize("iv.steps")?,
        &config.switching()?,
    )
}

fn iv(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let set = iv_set(config, fit)?;
    let mut table = Table::new(&["T_K", "v_V", "i_A"]);
    for curve in &set.curves {
        for &(v, i) in &curve.points {
            table.push_numbers(&[curve.temperature, v, i]);
        }
    }
    table.write(&out.join("iv.csv"))
}

fn signature(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let input = config.get("signature.input");
    let set = if input.is_empty() {
        iv_set(config, fit)?
    } else {
        read_iv_csv(Path::new(input))?
    };
    let ex = extract_thermionic(&set)?;
    let mut table = Table::new(&["parameter", "value"]);
    let d = &ex.diagnostics;
    for (name, value) in [
        ("a_prefactor", ex.a_prefactor),
        ("phi_b", ex.phi_b),
        ("alpha_pos", ex.alpha_pos),
        ("alpha_neg", ex.alpha_neg),
        ("stage1_r2", d.stage1_r2),
        ("stage2_r2", d.stage2_r2),
        ("max_regen_error", d.max_regen_error),
    ] {
        table.push(vec![name.to_string(), num(value)]);
    }
    table.write(&out.join("signature.csv"))?;
    let mut slopes = Table::new(&["v_V", "slope_K"]);
    for &(v, m) in &d.slopes {
        slopes.push_numbers(&[v, m]);
    }
    slopes.write(&out.join("signature_slopes.csv"))?;
    // Estimates that violate the model's invariants are reported after the
    // tables are written so they can be inspected.
    ex.params().map(|_| ()).map_err(|e| Error::Extraction {
        stage: "parameters",
        reason: e.to_string(),
    })
}

fn hsr(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let level = config.level("device.level")?;
    let params = config.switching()?;
    let opts = config.hsr_options()?;
    let mut header = vec!["T_test_K"];
    header.extend(TRACE_HEADER);
    header.extend(["pulse_index", "v_V"]);
    let mut traces = Table::new(&header);
    let mut summary = Table::new(&[
        "T_test_K",
        "T_program_K",
        "reference_ohm",
        "frac_ref",
        "frac_at_test",
        "frac_at_300",
        "retention_recovery",
        "reset_pulses",
    ]);
    for t_test in config.f64_list("hsr.temperatures")? {
        let run = run_heat_stimulate_retention(&level.state(), t_test, fit, &params, &opts)?;
        for r in &run.trace {
            let mut row = vec![num(t_test)];
            row.extend(trace_row(r));
            row.push(opt_index(r.pulse_index));
            row.push(num(r.v_applied));
            traces.push(row);
        }
        let mut row: Vec<String> = [
            t_test,
            run.t_program,
            run.reference_r,
            run.fraction_ref,
            run.fraction_at_test,
            run.fraction_at_300,
            run.retention_recovery,
        ]
        .iter()
        .map(|&v| num(v))
        .collect();
        row.push(run.reset_pulses.to_string());
        summary.push(row);
    }
    traces.write(&out.join("hsr.csv"))?;
    summary.write(&out.join("hsr_summary.csv"))
}

fn nullcline(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let sweep = run_nullcline_sweep(
        &config.level("device.level")?.state(),
        &config.f64_list("nullcline.voltages")?,
        &config.f64_list("nullcline.temperatures")?,
        fit,
        &config.switching()?,
        &config.hsr_options()?,
    )?;
    let mut grid = Table::new(&["v_V", "T_K", "frac"]);
    let mut detail = Table::new(&[
        "v_V",
        "T_K",
        "T_program_K",
        "frac_ref",
        "frac_at_test",
        "frac_at_300",
        "reset_pulses",
    ]);
    for c in &sweep.cells {
        grid.push_numbers(&[c.v, c.t, c.fraction_ref]);
        let mut row: Vec<String> = [
            c.v,
            c.t,
            c.t_program,
            c.fraction_ref,
            c.fraction_at_test,
            c.fraction_at_300,
        ]
        .iter()
        .map(|&v| num(v))
        .collect();
        row.push(c.reset_pulses.to_string());
        detail.push(row);
    }
    grid.write(&out.join("nullcline.csv"))?;
    detail.write(&out.join("nullcline_detail.csv"))?;
    let curve = fit_switch_curve(&sweep.grid())?;
    let mut fitted = Table::new(&["parameter", "value"]);
    for (name, value) in [
        ("g_14_310", curve.g_14_310),
        ("g_14_360", curve.g_14_360),
        ("beta", curve.beta),
    ] {
        fitted.push(vec![name.to_string(), num(value)]);
    }
    fitted.write(&out.join("nullcline_fit.csv"))
}

fn thermometer(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let run = run_thermometer(
        config.level("device.level")?,
        fit,
        &config.f64_list("thermometer.temperatures")?,
        config.usize("thermometer.trials")?,
        config.f64("thermometer.noise")?,
        config.f64("thermometer.guard")?,
        config.seed()?,
    )?;
    let mut reads = Table::new(&["T_true_K", "trial", "r_ohm", "T_est_K", "clamped"]);
    for r in run.exact.iter().chain(&run.noisy) {
        let (estimate, clamped) = match r.reading {
            Some(reading) => (
                num(reading.kelvin),
                match reading.clamped {
                    None => "none",
                    Some(BandEdge::Cold) => "cold",
                    Some(BandEdge::Hot) => "hot",
                },
            ),
            None => (String::new(), "out_of_band"),
        };
        reads.push(vec![
            num(r.t_true),
            r.trial.map(|t| t.to_string()).unwrap_or_default(),
            num(r.r),
            estimate,
            clamped.to_string(),
        ]);
    }
    reads.write(&out.join("thermometer.csv"))?;
    let mut summary = Table::new(&["T_true_K", "rms_error_K", "max_abs_error_K", "out_of_band"]);
    for a in run.accuracy() {
        let mut row: Vec<String> = [a.t_true, a.rms_error, a.max_abs_error]
            .iter()
            .map(|&v| num(v))
            .collect();
        row.push(a.out_of_band.to_string());
        summary.push(row);
    }
    summary.write(&out.join("thermometer_summary.csv"))
}

/// Builds the neuron and, for the calibrated feedforward mode, fits its gain.
fn neuron(config: &Config, fit: &ThermalFit) -> Result<(NeuronSystem, Option<GainCalibration>)> {
    let system = NeuronSystem::new(&config.neuron_config()?, fit, config.seed()?)?;
    if config.feedforward_calibrated() {
        let cal = calibrate_gain(&config.f64_list("calibrate.loads")?, &system)?;
        let kappa = cal.kappa;
        Ok((system.with_map(FeedforwardMap::Affine { kappa }), Some(cal)))
    } else {
        Ok((system, None))
    }
}

fn baseline(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let (system, _) = neuron(config, fit)?;
    let mut table = Table::new(&["load", "rate"]);
    for (load, rate) in baseline_curve(&config.f64_list("baseline.loads")?, &system)? {
        table.push_numbers(&[load, rate]);
    }
    table.write(&out.join("baseline.csv"))
}

fn homeostasis(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let (system, _) = neuron(config, fit)?;
    let file = config.get("homeostasis.pattern_file");
    let pattern = if file.is_empty() {
        config.pattern()?
    } else {
        InputPattern::from_loads(&read_pattern_csv(Path::new(file))?)?
    };
    let run = run_homeostasis(&pattern, &system)?;
    let mut steps = Table::new(&["step", "load", "spiked", "t_set_K", "t_dev_K"]);
    for s in &run.steps {
        steps.push(vec![
            s.step.to_string(),
            num(s.load),
            u8::from(s.spiked).to_string(),
            num(s.t_set),
            num(s.t_dev),
        ]);
    }
    steps.write(&out.join("homeostasis_steps.csv"))?;
    for (name, windows) in [
        ("homeostasis_windows.csv", &run.step_windows),
        ("homeostasis_spike_windows.csv", &run.spike_windows),
    ] {
        let mut table = Table::new(&["start_step", "steps", "spikes", "rate"]);
        for w in windows {
            table.push(vec![
                w.start_step.to_string(),
                w.steps.to_string(),
                w.spikes.to_string(),
                num(w.rate),
            ]);
        }
        table.write(&out.join(name))?;
    }
    Ok(())
}

fn calibrate(config: &Config, fit: &ThermalFit, out: &Path) -> Result<()> {
    let system = NeuronSystem::new(&config.neuron_config()?, fit, config.seed()?)?;
    let cal = calibrate_gain(&config.f64_list("calibrate.loads")?, &system)?;
    let mut rates = Table::new(&["load", "rate"]);
    for &(load, rate) in &cal.rates {
        rates.push_numbers(&[load, rate]);
    }
    rates.write(&out.join("calibrate_gain.csv"))?;

    let mut barrier = Table::new(&["level", "r_ref_ohm", "drop", "phi_app_eV"]);
    for a in fit.anchors() {
        barrier.push(vec![
            a.label.clone(),
            num(a.r_ref),
            num(a.total_drop),
            num(a.phi_app),
        ]);
    }
    barrier.write(&out.join("calibrate_barrier.csv"))?;

    let mut summary = Table::new(&["parameter", "value"]);
    summary.push(vec!["kappa".into(), num(cal.kappa)]);
    summary.push(vec!["rate_variance".into(), num(cal.variance)]);
    let ex = extract_thermionic(&iv_set(config, fit)?)?;
    for (name, value) in [
        ("phi_b", ex.phi_b),
        ("alpha_pos", ex.alpha_pos),
        ("alpha_neg", ex.alpha_neg),
        ("a_prefactor", ex.a_prefactor),
    ] {
        summary.push(vec![name.into(), num(value)]);
    }
    summary.write(&out.join("calibrate_summary.csv"))
}
