//! Scenario pipelines. Each scenario consumes the validated config, runs the
//! corresponding physics pipeline, writes its tables and returns a flat JSON
//! summary.

use maqm_core::fock::{C64, JointState, SourceParams};
use maqm_core::memory::{
    crosstalk_leakage, stirap_transfer, CellAddress, DecoherenceModel, MemoryCell,
};
use maqm_core::photonics::{
    anticorrelation, calibrate_chi, chain_transmission, fidelity_bound, herald_statistics,
};
use maqm_core::protocol::{
    aggregate, bell_phi_plus, bell_psi_plus, mix_white_noise, noisy_link_state, raqm_read,
    raqm_write, run_shot, six_state_specs, Event, SwapOutcome,
};
use maqm_core::rng::{stream, Domain};
use maqm_core::tomography::{reconstruct, simulate_counts, MeasurementSetting};
use maqm_core::{fit, memory::survival};
use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::output::OutputWriter;

pub type Summary = Map<String, Value>;

/// Worker-count environment variable honored by all parallel scenarios.
pub const WORKERS_ENV: &str = "MAQM_WORKERS";

fn thread_pool() -> AppResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let n: usize = raw
            .parse()
            .map_err(|_| AppError::config(format!("{WORKERS_ENV} must be a positive integer")))?;
        if n == 0 {
            return Err(AppError::config(format!("{WORKERS_ENV} must be positive")));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(AppError::runtime)
}

pub fn run_scenario(name: &str, config: &Config, writer: &OutputWriter) -> AppResult<Summary> {
    let summary = match name {
        "lifetime" => lifetime(config, writer)?,
        "repeater" => repeater(config, writer)?,
        "raqm" => raqm(config, writer)?,
        "stirap" => stirap(config, writer)?,
        "herald-stats" => herald_stats(config, writer)?,
        "fidelity" => fidelity(config)?,
        other => return Err(AppError::config(format!("unknown scenario {other:?}"))),
    };
    writer.write_metadata(name)?;
    Ok(summary)
}

/// Per-cell decay curves with counting noise, exponential fits, and the
/// retrieval efficiency at the probe time.
fn lifetime(config: &Config, writer: &OutputWriter) -> AppResult<Summary> {
    let lt = &config.lifetime;
    let mut rows = Vec::new();
    let mut tau_sum = 0.0;
    for (index, cell) in config.cells.iter().enumerate() {
        let address = CellAddress::new(cell.x, cell.y).map_err(AppError::config)?;
        let mem = MemoryCell::new(
            address,
            cell.r_i,
            DecoherenceModel::Empirical { tau: cell.tau_seconds },
        )
        .map_err(AppError::config)?;
        let mut rng = stream(config.seed, Domain::Fit, index as u64);
        let mut points = Vec::with_capacity(lt.n_points);
        for i in 0..lt.n_points {
            let t = lt.t_max * i as f64 / (lt.n_points - 1) as f64;
            let ideal = cell.r_i * survival(&mem, t).map_err(AppError::runtime)?;
            let sigma = (lt.relative_noise * ideal).max(1e-9);
            let y = if lt.relative_noise > 0.0 {
                let noise = Normal::new(0.0, sigma).expect("valid sigma");
                (ideal + noise.sample(&mut rng)).max(1e-9)
            } else {
                ideal
            };
            points.push(fit::DataPoint { t, y, sigma });
        }
        let fitted = fit::fit_exponential(&points).map_err(AppError::runtime)?;
        tau_sum += fitted.tau;
        rows.push(vec![
            json!(cell.x),
            json!(cell.y),
            json!(cell.r_i),
            json!(cell.tau_seconds),
            json!(fitted.model(lt.probe_time)),
            json!(fitted.tau),
            json!(fitted.tau_err),
        ]);
    }
    writer.write_table(
        "lifetime_grid",
        &["x", "y", "r_i", "tau_seconds", "r_at_probe", "tau_fit", "tau_fit_err"],
        &rows,
    )?;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("lifetime"));
    summary.insert("cells".into(), json!(config.cells.len()));
    summary.insert("probe_time".into(), json!(lt.probe_time));
    summary.insert("mean_tau_fit".into(), json!(tau_sum / config.cells.len() as f64));
    Ok(summary)
}

/// Full repeater pipeline: parallel shots, swap statistics, and tomography
/// of the mean heralded output state.
fn repeater(config: &Config, writer: &OutputWriter) -> AppResult<Summary> {
    let pool = thread_pool()?;
    let shots = config.shots;
    let results: Vec<(SwapOutcome, Vec<Event>)> = pool.install(|| {
        (0..shots)
            .into_par_iter()
            .map(|shot| run_shot(&config.node, &config.noise, config.seed, shot))
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(AppError::runtime)?;

    let outcomes: Vec<SwapOutcome> = results.iter().map(|(o, _)| o.clone()).collect();
    let events: Vec<Event> = results.into_iter().flat_map(|(_, e)| e).collect();
    let stats = aggregate(&outcomes);

    let rows: Vec<Vec<Value>> = outcomes
        .iter()
        .enumerate()
        .map(|(shot, o)| {
            vec![
                json!(shot),
                json!(o.success),
                json!(format!("{:?}", o.pattern)),
                json!(o.accidental),
                json!(o.gap_time),
                json!(o.total_wall_time),
                o.fidelity.map_or(Value::Null, |f| json!(f)),
            ]
        })
        .collect();
    writer.write_table(
        "swap_outcomes",
        &["shot", "success", "pattern", "accidental", "gap_time", "wall_time", "fidelity"],
        &rows,
    )?;
    writer.write_events(&events)?;

    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("repeater"));
    summary.insert("shots".into(), json!(stats.shots));
    summary.insert("successes".into(), json!(stats.successes));
    summary.insert("success_rate".into(), json!(stats.success_rate));
    summary.insert("mean_gap_time".into(), json!(stats.mean_gap_time));
    summary.insert("mean_fidelity".into(), json!(stats.mean_fidelity));
    summary.insert("mean_fidelity_raw".into(), json!(stats.mean_fidelity_raw));

    // Tomography of the shot-averaged conditional output state.
    if let Some(mean_state) = mean_success_state(&outcomes) {
        let settings = MeasurementSetting::all_nine();
        let mut tomo_rng = stream(config.seed, Domain::Tomography, 0);
        let counts = simulate_counts(
            &mean_state,
            &settings,
            config.tomography.shots_per_setting,
            &mut tomo_rng,
        )
        .map_err(AppError::runtime)?;
        writer.write_text("counts.txt", &counts.to_text())?;
        let target = bell_psi_plus("s1", "s2");
        let mut boot_rng = stream(config.seed, Domain::Bootstrap, 0);
        let recon = reconstruct(&counts, &target, config.tomography.bootstrap, &mut boot_rng)
            .map_err(AppError::runtime)?;
        summary.insert("tomography_fidelity".into(), json!(recon.fidelity));
        summary.insert(
            "tomography_error_bar".into(),
            recon.error_bar.map_or(Value::Null, |e| json!(e)),
        );
        summary.insert("tomography_low_confidence".into(), json!(recon.low_confidence));
        summary.insert("tomography_total_counts".into(), json!(counts.total()));
    }
    Ok(summary)
}

fn mean_success_state(outcomes: &[SwapOutcome]) -> Option<JointState> {
    let states: Vec<&JointState> = outcomes
        .iter()
        .filter(|o| o.success)
        .filter_map(|o| o.output_state.as_ref())
        .collect();
    let first = states.first()?;
    let d = first.mode_set().dim();
    let mut rho = DMatrix::<C64>::zeros(d, d);
    for s in &states {
        rho += s.density();
    }
    rho /= C64::new(states.len() as f64, 0.0);
    JointState::mixed(first.mode_set().clone(), rho).ok()
}

/// Six complementary states, written and read back in forward and reverse
/// order under the configured noise.
fn raqm(config: &Config, writer: &OutputWriter) -> AppResult<Summary> {
    let cell = CellAddress::new(config.raqm.cell.0, config.raqm.cell.1).map_err(AppError::config)?;
    let specs = six_state_specs(cell);
    let labels = ["L", "R", "+", "-", "sigma+", "sigma-"];
    let n = specs.len();
    let forward: Vec<usize> = (0..n).collect();
    let reverse: Vec<usize> = (0..n).rev().collect();

    let mut rows = Vec::new();
    let mut min_fidelity = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for (order_name, order) in [("forward", &forward), ("reverse", &reverse)] {
        let mut stored = Vec::with_capacity(n);
        for (i, spec) in specs.iter().enumerate() {
            let mut rng = stream(config.seed, Domain::Shot, i as u64);
            stored.push(
                raqm_write(*spec, &format!("q{i}"), &config.node, &config.noise, &mut rng, 0.0)
                    .map_err(AppError::runtime)?,
            );
        }
        let read = raqm_read(&mut stored, order, &config.node, &config.noise)
            .map_err(AppError::runtime)?;
        for (slot, (&i, r)) in order.iter().zip(&read).enumerate() {
            // binomial uncertainty of a fidelity estimate at `shots` samples
            let sigma = (r.fidelity * (1.0 - r.fidelity) / config.shots as f64)
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let margin = (r.fidelity - 2.0 / 3.0) / sigma;
            min_fidelity = min_fidelity.min(r.fidelity);
            min_margin = min_margin.min(margin);
            rows.push(vec![
                json!(labels[i]),
                json!(order_name),
                json!(slot),
                json!(r.read_time),
                json!(r.fidelity),
                json!(sigma),
                json!(margin),
                json!(r.detection_weight),
            ]);
        }
    }
    writer.write_table(
        "raqm_fidelities",
        &["state", "order", "slot", "read_time", "fidelity", "sigma", "margin", "detection_weight"],
        &rows,
    )?;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("raqm"));
    summary.insert("states".into(), json!(n));
    summary.insert("min_fidelity".into(), json!(min_fidelity));
    summary.insert("min_margin_sigma".into(), json!(min_margin));
    summary.insert("classical_bound".into(), json!(2.0 / 3.0));
    summary.insert("all_above_bound".into(), json!(min_fidelity > 2.0 / 3.0));
    Ok(summary)
}

/// STIRAP transfer efficiency and the crosstalk leakage decay.
fn stirap(config: &Config, writer: &OutputWriter) -> AppResult<Summary> {
    let result = stirap_transfer(&config.stirap.pulse, config.stirap.two_photon_detuning)
        .map_err(AppError::runtime)?;
    let rows: Vec<Vec<Value>> = config
        .stirap
        .crosstalk_probe_times
        .iter()
        .map(|&t| {
            let leak = crosstalk_leakage(result.efficiency, t, config.noise.tau_fast);
            vec![json!(t), json!(leak)]
        })
        .collect();
    writer.write_table("crosstalk", &["time", "leakage"], &rows)?;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("stirap"));
    summary.insert("efficiency".into(), json!(result.efficiency));
    summary.insert("population_initial".into(), json!(result.populations[0]));
    summary.insert("population_intermediate".into(), json!(result.populations[1]));
    summary.insert("population_target".into(), json!(result.populations[2]));
    Ok(summary)
}

/// Source calibration against the target cross-correlation, heralding
/// probabilities, anticorrelation and the fidelity bound.
fn herald_stats(config: &Config, writer: &OutputWriter) -> AppResult<Summary> {
    let chain = config.noise.detection;
    let target = config.herald_stats.target_g_c;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("herald-stats"));
    summary.insert("target_g_c".into(), json!(target));
    summary.insert("chain_transmission".into(), json!(chain_transmission(&chain)));
    summary.insert(
        "fidelity_bound".into(),
        json!(fidelity_bound(target).map_err(AppError::config)?),
    );

    let mut rows = Vec::new();
    match calibrate_chi(target, &chain, &chain) {
        Ok(source) => {
            let stats = herald_statistics(&source, &chain, &chain);
            let alpha = anticorrelation(&source, &chain, &chain);
            summary.insert("chi".into(), json!(source.chi()));
            summary.insert("g_c".into(), json!(stats.g_c));
            summary.insert("alpha".into(), json!(alpha));
            summary.insert("p_signal".into(), json!(stats.p_signal));
            summary.insert("p_idler".into(), json!(stats.p_idler));
            summary.insert("p_coincidence".into(), json!(stats.p_coincidence));
            summary.insert("calibrated".into(), json!(true));
            rows.push(vec![
                json!(source.chi()),
                json!(stats.g_c),
                json!(alpha),
                json!(stats.p_signal),
                json!(stats.p_idler),
                json!(stats.p_coincidence),
            ]);
        }
        Err(err) => {
            summary.insert("calibrated".into(), json!(false));
            summary.insert("calibration_error".into(), json!(err.to_string()));
        }
    }
    // statistics at the configured chi, independent of calibration
    let configured = SourceParams::new(config.source.chi, config.source.n_max)
        .map_err(AppError::config)?;
    let stats = herald_statistics(&configured, &chain, &chain);
    let alpha = anticorrelation(&configured, &chain, &chain);
    rows.push(vec![
        json!(configured.chi()),
        json!(stats.g_c),
        json!(alpha),
        json!(stats.p_signal),
        json!(stats.p_idler),
        json!(stats.p_coincidence),
    ]);
    writer.write_table(
        "herald_stats",
        &["chi", "g_c", "alpha", "p_signal", "p_idler", "p_coincidence"],
        &rows,
    )?;
    Ok(summary)
}

/// Fidelity of the default heralded link after a given storage time; used
/// mostly as a sweep target.
fn fidelity(config: &Config) -> AppResult<Summary> {
    let target = bell_phi_plus("s", "a");
    let state = if config.noise.link_fidelity >= 1.0 {
        target.clone()
    } else {
        noisy_link_state(&target, config.noise.link_fidelity)
    };
    let lambda = (-config.fidelity.storage_time / config.noise.white_noise_tau).exp();
    let stored = mix_white_noise(&state, lambda);
    let f = stored.fidelity(&target).map_err(AppError::runtime)?;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("fidelity"));
    summary.insert("storage_time".into(), json!(config.fidelity.storage_time));
    summary.insert("fidelity".into(), json!(f));
    Ok(summary)
}

/// Exponential fit of an external data table (columns `t,y,sigma`).
pub fn fit_file(path: &std::path::Path, writer: &OutputWriter) -> AppResult<Summary> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| AppError::runtime(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader.headers().map_err(AppError::config)?.clone();
    let expected = ["t", "y", "sigma"];
    if headers.iter().take(3).ne(expected) {
        return Err(AppError::config(format!(
            "fit data must have columns t,y,sigma; got {headers:?}"
        )));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(AppError::config)?;
        let field = |i: usize| -> AppResult<f64> {
            record
                .get(i)
                .ok_or_else(|| AppError::config("short record in fit data"))?
                .trim()
                .parse()
                .map_err(|_| AppError::config(format!("non-numeric field in {record:?}")))
        };
        points.push(fit::DataPoint {
            t: field(0)?,
            y: field(1)?,
            sigma: field(2)?,
        });
    }
    let fitted = fit::fit_exponential(&points).map_err(AppError::runtime)?;
    let mut summary = Summary::new();
    summary.insert("scenario".into(), json!("fit"));
    summary.insert("points".into(), json!(points.len()));
    summary.insert("r0".into(), json!(fitted.r0));
    summary.insert("r0_err".into(), json!(fitted.r0_err));
    summary.insert("tau".into(), json!(fitted.tau));
    summary.insert("tau_err".into(), json!(fitted.tau_err));
    summary.insert("chi2".into(), json!(fitted.chi2));
    summary.insert("iterations".into(), json!(fitted.iterations));
    writer.write_metadata("fit")?;
    Ok(summary)
}
