//! Subcommand implementations.

use std::fs;
use std::path::Path;

use dpistab_core::dpi::{CellStatus, IterationLimits, IterationStatus, Scheme};
use dpistab_core::pde::{
    self, FourierSymbol, PoissonConfig, Residual, StabilityVerdict, SymbolTerm,
};
use dpistab_core::{perturbation, series};
use serde_json::json;

use crate::support::{
    default_max_iter, emit, fmt, parse_range, write_manifest, AppError, AppResult, RunManifest,
};
use crate::{AmplitudeArgs, BorderArgs, FourierArgs, PoissonArgs, ScanArgs, SchemeArg};

impl SchemeArg {
    fn to_core(self) -> Scheme {
        match self {
            SchemeArg::Explicit => Scheme::Explicit,
            SchemeArg::Implicit => Scheme::Implicit,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SchemeArg::Explicit => "explicit",
            SchemeArg::Implicit => "implicit",
        }
    }
}

pub fn run_border(dir: &Path, args: &BorderArgs) -> AppResult<()> {
    let eps_hats = parse_range(&args.eps_hat)?;
    if args.z < 1 {
        return Err(AppError::usage("--z must be at least 1"));
    }
    let mut manifest = RunManifest::new("border");
    manifest
        .param("eps_hat", &args.eps_hat)
        .param("z", args.z)
        .param("scheme", args.scheme.name());

    let mut csv = String::new();
    match args.scheme {
        SchemeArg::Explicit => {
            csv.push_str("eps_hat,r_border\n");
            for &e in &eps_hats {
                let b = series::explicit_border_r(e, args.z)?;
                csv.push_str(&format!("{},{}\n", fmt(e), fmt(b.r_max)));
            }
        }
        SchemeArg::Implicit => {
            if args.z != 1 {
                return Err(AppError::usage(
                    "the implicit gap is the quadratic-nonlinearity result; use --z 1",
                ));
            }
            csv.push_str("eps_hat,r_low,r_high\n");
            for &e in &eps_hats {
                let g = series::implicit_gap(e)?;
                csv.push_str(&format!("{},{},{}\n", fmt(e), fmt(g.r_low), fmt(g.r_high)));
            }
        }
    }
    emit(dir, &mut manifest, "border.csv", &csv)?;
    write_manifest(dir, &manifest)?;
    println!("wrote border.csv ({} rows)", eps_hats.len());
    Ok(())
}

pub fn run_scan(dir: &Path, args: &ScanArgs) -> AppResult<()> {
    let r_axis = parse_range(&args.r)?;
    let eps_axis = parse_range(&args.eps_hat)?;
    let max_iter = match args.max_iter {
        Some(n) => n,
        None => default_max_iter()?,
    };
    let limits = IterationLimits::with_max_iter(max_iter);
    let grid = dpistab_core::scan_region(
        &r_axis,
        &eps_axis,
        args.z,
        args.scheme.to_core(),
        args.u0,
        &limits,
    )?;

    let mut manifest = RunManifest::new("scan");
    manifest
        .param("r", &args.r)
        .param("eps_hat", &args.eps_hat)
        .param("z", args.z)
        .param("scheme", args.scheme.name())
        .param("u0", args.u0)
        .param("max_iter", max_iter);

    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("csv is ascii");
    emit(dir, &mut manifest, "region.csv", &csv)?;

    let cells = grid.analytic.len();
    let summary = json!({
        "cells": cells,
        "r_points": grid.r_axis.len(),
        "eps_hat_points": grid.eps_hat_axis.len(),
        "analytic_stable": grid.analytic.iter().filter(|a| **a).count(),
        "empirical_converged": grid
            .empirical
            .iter()
            .filter(|e| matches!(e, CellStatus::Converged))
            .count(),
        "maxiter_cells": grid.maxiter_cells(),
        "disagreement_cells": grid.disagreement_cells(),
    });
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| AppError::Numeric(e.to_string()))?;
    text.push('\n');
    emit(dir, &mut manifest, "scan_summary.json", &text)?;
    write_manifest(dir, &manifest)?;
    println!(
        "wrote region.csv ({cells} cells) and scan_summary.json ({} disagreements)",
        grid.disagreement_cells()
    );
    Ok(())
}

pub fn run_amplitudes(dir: &Path, args: &AmplitudeArgs) -> AppResult<()> {
    if args.scheme == SchemeArg::Explicit && args.r.abs() >= 1.0 {
        return Err(AppError::usage(format!(
            "explicit amplitudes converge only on the domain |r| < 1 (got r = {})",
            args.r
        )));
    }
    if args.scheme == SchemeArg::Implicit && args.z != 1 {
        return Err(AppError::usage(
            "the implicit ladder is the quadratic-nonlinearity result; use --z 1",
        ));
    }
    let mut manifest = RunManifest::new("amplitudes");
    manifest
        .param("r", args.r)
        .param("u0", args.u0)
        .param("z", args.z)
        .param("order", args.order)
        .param("iterations", args.iterations)
        .param("scheme", args.scheme.name());

    let mut csv = String::from("i,n_used,recursive,closed_form,rel_err\n");
    match args.scheme {
        SchemeArg::Explicit => {
            let table =
                perturbation::explicit_cascade(args.r, args.u0, args.z, args.order, args.iterations);
            for i in 0..=args.order {
                let recursive = table.raw(i, args.iterations);
                let closed = perturbation::converged_amplitude(i, args.r, args.u0, args.z)?;
                let n_used = table.convergence_iteration(i).unwrap_or(args.iterations);
                let rel = (recursive - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
                csv.push_str(&format!(
                    "{i},{n_used},{},{},{}\n",
                    fmt(recursive),
                    fmt(closed),
                    fmt(rel)
                ));
            }
        }
        SchemeArg::Implicit => {
            let table = perturbation::implicit_cascade(args.r, args.u0, args.order)?;
            for i in 0..=args.order {
                let recursive = table.raw(i, 1);
                let closed = perturbation::implicit_closed_amplitude(i, args.r, args.u0)?;
                let rel = (recursive - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
                csv.push_str(&format!(
                    "{i},1,{},{},{}\n",
                    fmt(recursive),
                    fmt(closed),
                    fmt(rel)
                ));
            }
        }
    }
    emit(dir, &mut manifest, "amplitudes.csv", &csv)?;
    write_manifest(dir, &manifest)?;
    println!("wrote amplitudes.csv ({} orders)", args.order + 1);
    Ok(())
}

fn status_label(s: IterationStatus) -> &'static str {
    match s {
        IterationStatus::Converged => "converged",
        IterationStatus::Diverged => "diverged",
        IterationStatus::MaxIterations => "maxiter",
    }
}

pub fn run_poisson(dir: &Path, args: &PoissonArgs) -> AppResult<()> {
    let max_iter = match args.max_iter {
        Some(n) => n,
        None => default_max_iter()?,
    };
    let mut config = if let Some(path) = &args.config {
        let text = fs::read_to_string(path)?;
        serde_json::from_str::<PoissonConfig>(&text)
            .map_err(|e| AppError::usage(format!("bad poisson config: {e}")))?
    } else {
        let m = args
            .m
            .ok_or_else(|| AppError::usage("either --m or --config is required"))?;
        let beta = if args.sweep {
            // Placeholder; the sweep bisects beta itself.
            1.0
        } else {
            args.beta
                .ok_or_else(|| AppError::usage("either --beta or --sweep is required"))?
        };
        let mut cfg = PoissonConfig::new(m, beta);
        cfg.max_iter = max_iter;
        cfg
    };
    if args.linear_residual {
        config.residual = Residual::Linear;
    }

    let mut manifest = RunManifest::new("poisson");
    manifest
        .param("m", config.m)
        .param("max_iter", config.max_iter)
        .param("residual", if config.residual == Residual::Linear { "linear" } else { "nonlinear" })
        .param("sweep", args.sweep);

    if args.sweep {
        let analytic = pde::analytic_cfl_bound(config.m)?;
        let limits = IterationLimits::with_max_iter(config.max_iter);
        let experimental = pde::experimental_cfl_bound(config.m, config.residual, &limits)?;
        let bounds = json!({
            "m": config.m,
            "analytic_bound": analytic,
            "experimental_bound": experimental,
        });
        let mut text = serde_json::to_string_pretty(&bounds)
            .map_err(|e| AppError::Numeric(e.to_string()))?;
        text.push('\n');
        emit(dir, &mut manifest, "poisson_bounds.json", &text)?;
        write_manifest(dir, &manifest)?;
        println!("analytic bound {analytic:.6}, experimental bound {experimental:.6}");
    } else {
        manifest.param("beta", config.beta);
        let run = pde::simulate_poisson(&config)?;
        let mut csv = String::from("step,max_norm\n");
        for (step, norm) in run.norm_history.iter().enumerate() {
            csv.push_str(&format!("{step},{}\n", fmt(*norm)));
        }
        emit(dir, &mut manifest, "poisson_run.csv", &csv)?;
        let result = json!({
            "status": status_label(run.outcome.status),
            "iterations": run.outcome.iterations_used,
            "final_max_norm": run.outcome.final_value,
        });
        let mut text = serde_json::to_string_pretty(&result)
            .map_err(|e| AppError::Numeric(e.to_string()))?;
        text.push('\n');
        emit(dir, &mut manifest, "poisson_result.json", &text)?;
        write_manifest(dir, &manifest)?;
        // A diverged run is a scientific result, not a tool failure.
        println!(
            "status {} after {} iterations",
            status_label(run.outcome.status),
            run.outcome.iterations_used
        );
    }
    Ok(())
}

fn parse_coeff(spec: &str) -> AppResult<SymbolTerm> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(AppError::usage(format!(
            "coefficient {spec:?} must be l,m,value"
        )));
    }
    let dim: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| AppError::usage(format!("bad dimension index in {spec:?}")))?;
    let order: u32 = parts[1]
        .trim()
        .parse()
        .map_err(|_| AppError::usage(format!("bad derivative order in {spec:?}")))?;
    let coeff: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|_| AppError::usage(format!("bad coefficient in {spec:?}")))?;
    Ok(SymbolTerm { dim, order, coeff })
}

pub fn run_fourier(dir: &Path, args: &FourierArgs) -> AppResult<()> {
    let terms = args
        .coeffs
        .iter()
        .map(|c| parse_coeff(c))
        .collect::<AppResult<Vec<_>>>()?;
    let symbol = FourierSymbol::new(terms)?;
    if args.etas.len() != symbol.dim() {
        return Err(AppError::usage(format!(
            "symbol spans {} dimension(s) but {} --eta range(s) given",
            symbol.dim(),
            args.etas.len()
        )));
    }
    let axes = args
        .etas
        .iter()
        .map(|e| parse_range(e))
        .collect::<AppResult<Vec<_>>>()?;

    // Row-major cartesian product, last axis fastest.
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(grid.len() * axis.len());
        for prefix in &grid {
            for &v in axis {
                let mut point = prefix.clone();
                point.push(v);
                next.push(point);
            }
        }
        grid = next;
    }

    let stability = pde::fourier_stability(&symbol, &grid, args.eps_hat)?;
    let contour = pde::fourier_contour(&symbol, &grid, args.eps_hat)?;

    let mut manifest = RunManifest::new("fourier");
    manifest.param("eps_hat", args.eps_hat);
    for (i, c) in args.coeffs.iter().enumerate() {
        manifest.param(&format!("coeff_{i}"), c);
    }
    for (i, e) in args.etas.iter().enumerate() {
        manifest.param(&format!("eta_{i}"), e);
    }

    let mut csv = String::new();
    for l in 1..=symbol.dim() {
        csv.push_str(&format!("eta_{l},"));
    }
    csv.push_str("theta,verdict\n");
    for sample in &contour {
        for v in &sample.eta {
            csv.push_str(&fmt(*v));
            csv.push(',');
        }
        csv.push_str(&format!("{},{}\n", fmt(sample.theta), sample.verdict.label()));
    }
    emit(dir, &mut manifest, "fourier_contour.csv", &csv)?;

    let summary = json!({
        "r": stability.r,
        "theta": if stability.verdict == StabilityVerdict::Undecided {
            serde_json::Value::Null
        } else {
            json!(stability.theta)
        },
        "verdict": stability.verdict.label(),
    });
    let mut text =
        serde_json::to_string_pretty(&summary).map_err(|e| AppError::Numeric(e.to_string()))?;
    text.push('\n');
    emit(dir, &mut manifest, "fourier_summary.json", &text)?;
    write_manifest(dir, &manifest)?;
    println!(
        "r = {:.6}, verdict {}",
        stability.r,
        stability.verdict.label()
    );
    Ok(())
}
