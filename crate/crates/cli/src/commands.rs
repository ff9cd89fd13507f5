//! One function per subcommand: compute, then hand files and a summary to the writer.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use fractal_weyl::classical::{
    escape_zones, fit_exponential_rate, fit_power_tail, lyapunov, phase_portrait, sabine_dwell, survival,
};
use fractal_weyl::husimi::{husimi_schur, husimi_states, HusimiGrid};
use fractal_weyl::rotor::{open_map, OpenMap, OpenMapSpec};
use fractal_weyl::spectra::{eigenvalues, leading_count, ordered_schur, ResonanceSet, UNIMODULAR_TOLERANCE};
use fractal_weyl::weyl::{chaotic_exponent, p_curve, sweep_report, sweep_spectra};
use serde_json::{json, Value};

use crate::config::{Basis, Command, RunConfig};
use crate::output::Outputs;

const LYAPUNOV_BURN_IN: usize = 1000;

pub fn execute(config: &RunConfig) -> Result<(Outputs, Value)> {
    match config.command {
        Command::Spectrum => spectrum(config),
        Command::SchurHusimi => schur_husimi(config),
        Command::ClassicalEscape => classical_escape(config),
        Command::ClassicalSurvival => classical_survival(config),
        Command::PhasePortrait => portrait(config),
        Command::WeylSweep => weyl_sweep(config),
    }
}

fn conventions(config: &RunConfig) -> Value {
    json!({
        "opening": "half-open [a, b) in q",
        "sites": config.sites,
        "bands": "strict on both ends",
        "unimodular_tolerance": UNIMODULAR_TOLERANCE,
        "denominator": "K = M - N_open",
    })
}

fn build_map(config: &RunConfig, dimension: usize) -> Result<OpenMap> {
    let spec = OpenMapSpec::new(dimension, config.k, config.opening()?, config.sites)?;
    Ok(open_map(&spec)?)
}

fn spectrum(config: &RunConfig) -> Result<(Outputs, Value)> {
    let map = build_map(config, config.dimension())?;
    let res = eigenvalues(&map)?;
    let mut csv = Vec::new();
    res.write_csv(&mut csv)?;
    let mut out = Outputs::default();
    out.add("spectrum.csv", csv);
    let summary = json!({
        "M": config.dimension(),
        "K": res.len(),
        "removed": map.removed_count(),
        "band": config.band,
        "band_count": res.count_in_band(config.band.lo, config.band.hi)?,
        "count_below_0.1": res.count_below(0.1),
        "count_above_0.98": res.count_above(0.98),
        "max_modulus": res.max_modulus(),
        "conventions": conventions(config),
    });
    Ok((out, summary))
}

fn schur_husimi(config: &RunConfig) -> Result<(Outputs, Value)> {
    let map = build_map(config, config.dimension())?;
    let schur = ordered_schur(&map, config.order)?;
    let res = ResonanceSet::from_eigenvalues(schur.eigenvalues());
    let (lo, hi) = (config.band.lo, config.band.hi);
    let spec = map.spec();
    let (grid, extra): (HusimiGrid, Value) = match config.basis {
        Basis::Schur => {
            let r = leading_count(&res, config.order, lo, hi)?;
            let grid = husimi_schur(&schur, r, &map, config.grid)
                .with_context(|| format!("band {} holds {r} resonances", config.band))?;
            let residual = schur.invariance_residual(map.matrix(), r)?;
            (grid, json!({ "invariance_residual": residual }))
        }
        Basis::Eigenvectors => {
            let range = schur.band_range(lo, hi)?;
            let vectors = schur.eigenvectors(range.clone())?;
            let mut grid = husimi_states(&vectors, map.kept_sites(), spec.dimension, spec.sites, config.grid)?;
            grid.provenance.spec = Some(spec.clone());
            grid.provenance.source = "eigenvectors".into();
            grid.provenance.order = Some(config.order);
            (grid, json!({ "positions": [range.start, range.end] }))
        }
    };
    let mut grid = grid;
    grid.provenance.band = Some((lo, hi));
    let mut bytes = Vec::new();
    grid.write_binary(&mut bytes)?;
    let mut out = Outputs::default();
    out.add("husimi.grid", bytes);
    out.add_json("husimi.json", &grid.sidecar())?;
    let summary = json!({
        "M": config.dimension(),
        "K": schur.dimension(),
        "r": grid.provenance.r,
        "order": config.order,
        "basis": config.basis,
        "band": config.band,
        "total_weight": grid.total(),
        "details": extra,
        "conventions": conventions(config),
    });
    Ok((out, summary))
}

fn classical_escape(config: &RunConfig) -> Result<(Outputs, Value)> {
    let opening = config.opening()?;
    let zones = escape_zones(config.k, &opening, config.n, config.t_max)?;
    let mut bytes = Vec::new();
    zones.write_binary(&mut bytes)?;
    let measures: Vec<f64> = (1..=config.t_max as i32).map(|t| zones.measure(t)).collect();
    let axis: Vec<f64> = (0..config.n).map(|i| (i as f64 + 0.5) / config.n as f64).collect();
    let sidecar = json!({
        "format": "ESCZGRID",
        "nq": config.n,
        "np": config.n,
        "t_max": config.t_max,
        "k": config.k,
        "opening": [opening.start(), opening.end()],
        "cells": { "not_escaped": -1, "started_in_opening": 0 },
        "q_axis": axis,
        "p_axis": axis,
    });
    let mut out = Outputs::default();
    out.add("zones.grid", bytes);
    out.add_json("zones.json", &sidecar)?;
    let summary = json!({
        "zone_measures": measures,
        "opening_measure": zones.measure(0),
        "not_escaped_measure": zones.measure(-1),
        "sabine_dwell": sabine_dwell(&opening),
    });
    Ok((out, summary))
}

fn classical_survival(config: &RunConfig) -> Result<(Outputs, Value)> {
    let opening = config.opening()?;
    let curve = survival(config.k, &opening, config.samples, config.t_max, config.seed)?;
    let mut csv = Vec::new();
    curve.write_csv(&mut csv)?;
    let or_error = |r: fractal_weyl::Result<_>| match r {
        Ok(fit) => json!(fit),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let lyap = lyapunov(config.k, config.lyapunov_iter, config.seed, LYAPUNOV_BURN_IN)?;
    let report = json!({
        "k": config.k,
        "opening": [opening.start(), opening.end()],
        "samples": curve.samples,
        "seed": curve.seed,
        "t_max": curve.t_max(),
        "sabine_dwell": sabine_dwell(&opening),
        "exponential": or_error(fit_exponential_rate(&curve, config.fit.lo, config.fit.hi)),
        "power_tail": or_error(fit_power_tail(&curve, config.tail.lo, config.tail.hi)),
        "lyapunov": lyap,
        "initial_ensemble": "uniform on the complement of the opening",
    });
    let mut out = Outputs::default();
    out.add("survival.csv", csv);
    out.add_json("survival_fit.json", &report)?;
    Ok((out, report))
}

fn portrait(config: &RunConfig) -> Result<(Outputs, Value)> {
    let points = phase_portrait(config.k, config.n_traj, config.n_iter, config.seed)?;
    let mut csv = String::from("trajectory,q,p\n");
    for (i, x) in points.iter().enumerate() {
        writeln!(csv, "{},{},{}", i / (config.n_iter + 1), x.q, x.p)?;
    }
    let mut out = Outputs::default();
    out.add("portrait.csv", csv.into_bytes());
    Ok((out, json!({ "points": points.len() })))
}

fn weyl_sweep(config: &RunConfig) -> Result<(Outputs, Value)> {
    let opening = config.opening()?;
    let window = config.modulus_window()?;
    let spectra = sweep_spectra(&config.dimensions, config.k, opening, config.sites)?;
    let report = sweep_report(&spectra, config.k, opening, config.sites, window)?;

    let thresholds: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let curves = spectra
        .iter()
        .map(|res| p_curve(res, &thresholds))
        .collect::<fractal_weyl::Result<Vec<_>>>()?;
    let mut csv = String::from("mu");
    for m in &config.dimensions {
        write!(csv, ",M{m}")?;
    }
    csv.push('\n');
    for (i, mu) in thresholds.iter().enumerate() {
        write!(csv, "{mu}")?;
        for c in &curves {
            write!(csv, ",{}", c.fractions[i])?;
        }
        csv.push('\n');
    }

    let lyap = lyapunov(config.k, config.lyapunov_iter, config.seed, LYAPUNOV_BURN_IN)?;
    let dwell = sabine_dwell(&opening);
    let predicted = if lyap.chaotic {
        json!(chaotic_exponent(1.0, lyap.lambda, dwell)?)
    } else {
        Value::Null
    };
    let document = json!({
        "report": report,
        "classical": {
            "lyapunov": lyap,
            "sabine_dwell": dwell,
            "predicted_count_exponent": predicted,
        },
        "conventions": conventions(config),
    });
    let mut out = Outputs::default();
    out.add_json("weyl_report.json", &document)?;
    out.add("pcurve.csv", csv.into_bytes());
    Ok((out, document))
}
