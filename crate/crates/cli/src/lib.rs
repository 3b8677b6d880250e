//! Subcommand bodies. Each takes a validated [`RunConfig`], writes its
//! artifacts under `config.out` and returns what goes into the manifest.

use burgers_core::acceptance::{run_all, spectral_sweep};
use burgers_core::config::{Command, InitialData, Preset, RunConfig};
use burgers_core::evolution::{
    column_field, evolve2d, evolve3d, extract_secondary_profile, fit_decay, modulated_column, transient_start,
    DecayRateFit, Evolve3dOptions, Nonlinearity, StepControl,
};
use burgers_core::fd::FdOrder;
use burgers_core::fields::{eval_g, grad_g, singular_burgers_residual, ExactFlow, SingularBurgers};
use burgers_core::grid::{ScalarField2D, VectorField3D};
use burgers_core::io::{fmt_f64, read_dump, write_csv, write_dump, write_scalar_csv, write_vector_csv, FieldDump, Manifest, LIBRARY_VERSION};
use burgers_core::spectrum::horizontal_bound;
use burgers_core::{LabError, Result};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Instant;

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    /// False when a checked quantity missed its tolerance.
    pub passed: bool,
    pub outputs: Vec<PathBuf>,
    pub results: Value,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Runs the configured command and writes `manifest.json` next to its
/// outputs.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.out)?;
    let start = Instant::now();
    let mut outcome = match cfg.command {
        Command::Fields => cmd_fields(cfg)?,
        Command::Residual => cmd_residual(cfg)?,
        Command::Spectrum => cmd_spectrum(cfg)?,
        Command::Evolve2d => cmd_evolve2d(cfg)?,
        Command::Evolve3d => cmd_evolve3d(cfg)?,
        Command::Accept => cmd_accept(cfg)?,
    };
    let manifest_path = cfg.out.join("manifest.json");
    let manifest = Manifest {
        command: cfg.command.name().to_string(),
        library_version: LIBRARY_VERSION,
        config: cfg,
        wall_seconds: start.elapsed().as_secs_f64(),
        outputs: outcome.outputs.clone(),
        results: json!({ "passed": outcome.passed, "values": outcome.results }),
    };
    manifest.write(&manifest_path)?;
    outcome.outputs.push(manifest_path);
    Ok(outcome)
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.passed => EXIT_OK,
        Ok(_) => EXIT_NUMERICAL,
        Err(LabError::Config { .. }) | Err(LabError::InvalidParameter { .. }) => EXIT_CONFIG,
        Err(_) => EXIT_NUMERICAL,
    }
}

fn preset(cfg: &RunConfig) -> Option<Preset> {
    match &cfg.initial {
        InitialData::Preset(p) => Some(*p),
        InitialData::File(_) => None,
    }
}

fn load_file(cfg: &RunConfig) -> Result<FieldDump> {
    match &cfg.initial {
        InitialData::File(p) => read_dump(p).map_err(|e| LabError::Config {
            key: "initial.data".into(),
            reason: format!("{}: {e}", p.display()),
        }),
        InitialData::Preset(p) => Err(LabError::Config { key: "initial.data".into(), reason: format!("`{}` is not a file", p.name()) }),
    }
}

fn d1g(cfg: &RunConfig) -> ScalarField2D {
    ScalarField2D::from_fn(cfg.grid2d(), |x, y| grad_g(x, y)[0])
}

fn cmd_fields(cfg: &RunConfig) -> Result<Outcome> {
    let field = match preset(cfg) {
        Some(Preset::D1g) => FieldDump::Planar(d1g(cfg)),
        Some(Preset::GaussianColumn) => FieldDump::Planar(ScalarField2D::from_fn(cfg.grid2d(), eval_g)),
        Some(Preset::Modulated3d) => FieldDump::Spatial(modulated_column(cfg.grid3d()?, cfg.weight, cfg.evolve.perturbation)?),
        Some(Preset::SingularBurgers) => {
            let t = cfg.residual.times[0];
            let flow = SingularBurgers::new(cfg.params());
            FieldDump::Spatial(VectorField3D::from_fn(cfg.grid3d()?, |x, y, z| flow.velocity([x, y, z], t)))
        }
        None => load_file(cfg)?,
    };
    let csv = cfg.out.join("field.csv");
    let bin = cfg.out.join("field.bin");
    let shape = match &field {
        FieldDump::Planar(f) => {
            write_scalar_csv(&csv, f)?;
            json!({ "dimension": 2, "n": f.grid.n(), "max_abs": f.max_abs() })
        }
        FieldDump::Spatial(f) => {
            write_vector_csv(&csv, f)?;
            json!({ "dimension": 3, "n": f.grid.n(), "n3": f.grid.n3(), "max_abs": f.max_abs() })
        }
    };
    write_dump(&bin, &field)?;
    Ok(Outcome { passed: true, outputs: vec![csv, bin], results: shape })
}

fn cmd_residual(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.params();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &cfg.residual.times {
        let r = singular_burgers_residual(&p, t, cfg.grid.n, cfg.residual.core, FdOrder::Fourth)?;
        worst = worst.max(r.max);
        rows.push(vec![fmt_f64(t), fmt_f64(r.max), fmt_f64(r.velocity_scale), r.interior_points.to_string()]);
    }
    let csv = cfg.out.join("residual.csv");
    write_csv(&csv, &["t", "residual", "velocity_scale", "interior_points"], &rows)?;
    let passed = worst < cfg.tolerances.residual;
    Ok(Outcome { passed, outputs: vec![csv], results: json!({ "max_residual": worst, "tolerance": cfg.tolerances.residual }) })
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let s = &cfg.spectrum;
    let sweep = spectral_sweep(s.modes, &s.mus, &s.alphas, cfg.weight)?;
    let mut rows = Vec::new();
    let mut excess = f64::NEG_INFINITY;
    let mut tops = Vec::new();
    for rep in &sweep.horizontal {
        for r in rep.csv_rows() {
            rows.push(std::iter::once("horizontal".to_string()).chain(r).collect());
        }
        if let Some(a) = rep.converged_abscissa() {
            excess = excess.max(a - horizontal_bound(rep.mu));
            tops.push(json!({ "mu": rep.mu, "alpha": rep.alpha, "abscissa": a, "bound": horizontal_bound(rep.mu) }));
        }
    }
    let mut vertical = Vec::new();
    for rep in &sweep.vertical {
        for r in rep.csv_rows() {
            rows.push(std::iter::once("vertical".to_string()).chain(r).collect());
        }
        vertical.push(json!({ "alpha": rep.alpha, "abscissa": rep.converged_abscissa() }));
    }
    let csv = cfg.out.join("spectrum.csv");
    write_csv(&csv, &["operator", "mu", "alpha", "m", "K", "re", "im", "converged"], &rows)?;
    let passed = excess <= cfg.tolerances.spectral && sweep.eigenspace_residual < cfg.tolerances.spectral;
    Ok(Outcome {
        passed,
        outputs: vec![csv],
        results: json!({
            "horizontal": tops,
            "vertical": vertical,
            "max_excess_over_bound": excess,
            "eigenspace_residual": sweep.eigenspace_residual,
        }),
    })
}

fn fit_json(fit: &DecayRateFit) -> Value {
    json!({
        "window": fit.window,
        "exponent": fit.exponent,
        "residual": fit.residual,
        "samples": fit.samples,
        "target": fit.target,
    })
}

fn fit_window(cfg: &RunConfig) -> [f64; 2] {
    cfg.evolve.fit_window.unwrap_or([transient_start(cfg.time.dt), cfg.time.tau_end])
}

fn control(cfg: &RunConfig) -> Result<StepControl> {
    Ok(StepControl::new(cfg.time.dt, cfg.time.tau_end, cfg.weight)?.every(cfg.time.record_every))
}

fn nonlinearity(cfg: &RunConfig) -> Nonlinearity {
    if cfg.evolve.nonlinear {
        Nonlinearity::Full
    } else {
        Nonlinearity::Off
    }
}

fn cmd_evolve2d(cfg: &RunConfig) -> Result<Outcome> {
    let w0 = match preset(cfg) {
        Some(_) => d1g(cfg),
        None => match load_file(cfg)? {
            FieldDump::Planar(f) => f,
            FieldDump::Spatial(_) => {
                return Err(LabError::Config { key: "initial.data".into(), reason: "evolve2d needs a planar dump".into() })
            }
        },
    };
    let st = evolve2d(&w0, &cfg.params(), nonlinearity(cfg), &control(cfg)?)?;
    let rows: Vec<Vec<String>> = st
        .history
        .iter()
        .map(|r| {
            [r.tau, r.norm, r.grad_norm, r.mass, r.first_moments[0], r.first_moments[1], r.p1[0], r.p1[1]]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect()
        })
        .collect();
    let csv = cfg.out.join("history.csv");
    write_csv(&csv, &["tau", "norm", "grad_norm", "mass", "moment1", "moment2", "p1_1", "p1_2"], &rows)?;
    let bin = cfg.out.join("final.bin");
    write_dump(&bin, &FieldDump::Planar(st.w.clone()))?;
    let samples: Vec<(f64, f64)> = st.history.iter().map(|r| (r.tau, r.norm)).collect();
    let fit = fit_decay(&samples, fit_window(cfg), Some(-0.5))?;
    Ok(Outcome {
        passed: true,
        outputs: vec![csv, bin],
        results: json!({
            "decay": fit_json(&fit),
            "rate_matches": fit.matches(cfg.tolerances.rate * 0.5),
            "final_tau": st.tau,
        }),
    })
}

fn cmd_evolve3d(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid3d()?;
    let w0 = match preset(cfg) {
        Some(Preset::Modulated3d) => modulated_column(grid, cfg.weight, cfg.evolve.perturbation)?,
        Some(_) => column_field(grid, &grid.horizontal().sample(|x, y| grad_g(x, y)[0])),
        None => match load_file(cfg)? {
            FieldDump::Spatial(f) => f,
            FieldDump::Planar(f) => column_field(grid, &f.plain()),
        },
    };
    let params = cfg.params();
    let opts = Evolve3dOptions {
        nonlinear: nonlinearity(cfg),
        leray: cfg.evolve.leray,
        divergence_growth: cfg.tolerances.divergence_growth,
        ..Evolve3dOptions::default()
    };
    let st = evolve3d(&w0, &params, &opts, &control(cfg)?)?;
    let rows: Vec<Vec<String>> = st
        .history
        .iter()
        .map(|r| {
            let mut row: Vec<String> = [
                r.tau,
                r.norm,
                r.d3_norm,
                r.divergence,
                r.max_slice_mean,
                r.theta_center[0],
                r.theta_center[1],
                r.p1[0],
                r.p1[1],
            ]
            .iter()
            .map(|v| fmt_f64(*v))
            .collect();
            row.push(r.projected.to_string());
            row
        })
        .collect();
    let csv = cfg.out.join("history.csv");
    write_csv(
        &csv,
        &["tau", "norm", "d3_norm", "divergence", "max_slice_mean", "theta1", "theta2", "p1_1", "p1_2", "projected"],
        &rows,
    )?;
    let bin = cfg.out.join("final.bin");
    write_dump(&bin, &FieldDump::Spatial(st.w.clone()))?;
    let target = -(0.5 + params.chi());
    let samples: Vec<(f64, f64)> = st.history.iter().filter(|r| r.d3_norm > 0.0).map(|r| (r.tau, r.d3_norm)).collect();
    let fit = if samples.len() >= 10 { Some(fit_decay(&samples, fit_window(cfg), Some(target))?) } else { None };
    let profile = extract_secondary_profile(&st, &params, cfg.weight, cfg.evolve.delta)?;
    let lambda = st.history[0].p1;
    Ok(Outcome {
        passed: true,
        outputs: vec![csv, bin],
        results: json!({
            "vertical_decay": fit.as_ref().map(fit_json),
            "rate_matches": fit.as_ref().map(|f| f.matches(cfg.tolerances.rate * target.abs())),
            "projections": st.projections,
            "secondary_profile": profile,
            "lambda": lambda,
            "d": [profile.coefficients[0] - lambda[0], profile.coefficients[1] - lambda[1]],
        }),
    })
}

fn cmd_accept(cfg: &RunConfig) -> Result<Outcome> {
    let outcomes = run_all(|o| println!("{o}"));
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| vec![o.id.to_string(), o.title.to_string(), o.passed.to_string(), o.detail.clone(), fmt_f64(o.wall_seconds)])
        .collect();
    let csv = cfg.out.join("acceptance.csv");
    write_csv(&csv, &["criterion", "title", "passed", "detail", "wall_seconds"], &rows)?;
    let passed = outcomes.iter().all(|o| o.passed);
    Ok(Outcome { passed, outputs: vec![csv], results: serde_json::to_value(&outcomes).unwrap_or(Value::Null) })
}
