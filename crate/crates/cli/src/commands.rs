//! Subcommand implementations. Every run validates its configuration first,
//! writes CSV data plus a JSON metadata echo, and maps failures onto the
//! exit-code contract (1 validation, 2 numerical, 3 acceptance).

use crate::config::{RunConfig, ShapeSpec};
use crate::output::{fmt, measured_entry, write_csv, write_metadata, Metadata};
use fracfilt_core::acceptance;
use fracfilt_core::basis::{hs_norm, spectral_frac_laplacian, Field};
use fracfilt_core::duality::{
    backward_solve, build_coefficient, energy_identity_check, smooth_coefficient,
    uniqueness_witness,
};
use fracfilt_core::error::Error as CoreError;
use fracfilt_core::evolve::{
    compare, evolve, local_energy_check, minimal_solution, Trajectory,
};
use fracfilt_core::extension::{dtn_flux, extend_cylinder, weighted_energy};
use fracfilt_core::shapes;
use fracfilt_core::singular::{
    cutoff_scaling_scan, default_p, qform_l1, tp_scaling_scan, validate_exponents, CutoffGamma,
    WeightH,
};
use serde_json::Map;
use std::path::Path;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Acceptance(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Acceptance(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Convergence(_) | CoreError::Tail(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("output path: {e}"))
    }
}

fn validated(config: &RunConfig) -> Result<(), CliError> {
    config.validate().map_err(CliError::Validation)
}

type Rows = Vec<Vec<String>>;

fn trajectory_rows(traj: &Trajectory) -> Rows {
    let nodes = traj.fields[0].basis().nodes().to_vec();
    let mut rows = Vec::new();
    for (t, field) in traj.times.iter().zip(&traj.fields) {
        for (x, v) in nodes.iter().zip(field.values()) {
            rows.push(vec![fmt(*t), fmt(*x), fmt(*v)]);
        }
    }
    rows
}

pub fn run_solve(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let basis = config.basis().map_err(CliError::Validation)?;
    let s = config.order().map_err(CliError::Validation)?;
    let phi = config.nonlinearity().map_err(CliError::Validation)?;
    let cfg = config.solver().map_err(CliError::Validation)?;
    let u0 = config.datum(basis, seed).map_err(CliError::Validation)?;
    let traj = evolve(&u0, config.t_end, &cfg, &phi, s)?;

    write_csv(out, "solve_trajectory.csv", &["t", "x", "value"], &trajectory_rows(&traj))?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "eps_used", traj.eps_used);
    measured_entry(&mut measured, "final_sup_norm", *traj.sup_norms.last().unwrap());
    measured_entry(&mut measured, "global_min", traj.global_min());
    measured_entry(&mut measured, "global_max", traj.global_max());
    measured_entry(
        &mut measured,
        "total_newton_iters",
        traj.diagnostics.iter().map(|d| d.newton_iters as f64).sum(),
    );
    measured_entry(
        &mut measured,
        "total_cg_iters",
        traj.diagnostics.iter().map(|d| d.cg_iters as f64).sum(),
    );
    write_metadata(
        out,
        "solve_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "solve",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

pub fn run_compare(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let basis = config.basis().map_err(CliError::Validation)?;
    let s = config.order().map_err(CliError::Validation)?;
    let phi = config.nonlinearity().map_err(CliError::Validation)?;
    let cfg = config.solver().map_err(CliError::Validation)?;
    let pairs = config.pairs.unwrap_or(10);

    let mut rows = Vec::new();
    let mut worst_gap = f64::INFINITY;
    for trial in 0..pairs as u64 {
        let lower = shapes::random_bumps(seed.wrapping_add(2 * trial), config.r, 0.8);
        let extra = shapes::random_bumps(seed.wrapping_add(2 * trial + 1), config.r, 0.6);
        let u0 = Field::from_values(
            basis.clone(),
            basis.nodes().iter().map(|&x| lower(x)).collect(),
        )?;
        let w0 = Field::from_values(
            basis.clone(),
            basis.nodes().iter().map(|&x| lower(x) + extra(x)).collect(),
        )?;
        let rep = compare(&u0, &w0, config.t_end, &cfg, &phi, s)?;
        worst_gap = worst_gap.min(rep.min_gap);
        rows.push(vec![
            trial.to_string(),
            fmt(rep.min_gap),
            fmt(rep.lower_min),
            fmt(rep.upper_max_overshoot),
        ]);
    }
    write_csv(
        out,
        "compare_pairs.csv",
        &["pair", "min_gap", "min_value", "max_overshoot"],
        &rows,
    )?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "worst_min_gap", worst_gap);
    write_metadata(
        out,
        "compare_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "compare",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

fn datum_closure(spec: &ShapeSpec, seed: u64) -> Result<Box<dyn Fn(f64) -> f64>, CliError> {
    match spec {
        ShapeSpec::Bump {
            center,
            width,
            height,
        } => Ok(Box::new(shapes::bump(*center, *width, *height))),
        ShapeSpec::Plateau {
            center,
            radius,
            height,
        } => Ok(Box::new(shapes::plateau(*center, *radius, *height))),
        ShapeSpec::Step { at, width, height } => {
            Ok(Box::new(shapes::smooth_step(*at, *width, *height)))
        }
        ShapeSpec::RandomBumps { spread, max_height } => {
            Ok(Box::new(shapes::random_bumps(seed, *spread, *max_height)))
        }
        ShapeSpec::RandomBandLimited { .. } => Err(CliError::Validation(
            "`minimal` needs a pointwise datum shape (bump/plateau/step/random-bumps)".into(),
        )),
    }
}

pub fn run_minimal(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let s = config.order().map_err(CliError::Validation)?;
    let phi = config.nonlinearity().map_err(CliError::Validation)?;
    let cfg = config.solver().map_err(CliError::Validation)?;
    let r_list = config.r_list.clone().unwrap_or(vec![2.0, 4.0, 8.0]);
    let k_list = config.k_list.clone().unwrap_or(vec![2.0]);
    let nodes_per_unit = config.nodes_per_unit.unwrap_or(48);
    let datum = datum_closure(&config.u0, seed)?;
    let rep = minimal_solution(
        &datum,
        &r_list,
        &k_list,
        config.t_end,
        &cfg,
        &phi,
        s,
        nodes_per_unit,
    )?;

    let mut rows = Vec::new();
    for sol in &rep.family {
        rows.push(vec![
            fmt(sol.k),
            fmt(sol.r),
            fmt(*sol.trajectory.sup_norms.last().unwrap()),
            fmt(sol.trajectory.final_field().l2_norm()),
        ]);
    }
    write_csv(
        out,
        "minimal_family.csv",
        &["k", "r", "final_sup", "final_l2"],
        &rows,
    )?;
    let report_rows: Rows = vec![
        vec!["min_r_monotonicity".into(), fmt(rep.min_r_monotonicity)],
        vec!["min_k_monotonicity".into(), fmt(rep.min_k_monotonicity)],
        vec!["limit_estimate".into(), fmt(rep.limit_estimate)],
    ]
    .into_iter()
    .chain(
        rep.cauchy_sups
            .iter()
            .enumerate()
            .map(|(i, v)| vec![format!("cauchy_sup_{i}"), fmt(*v)]),
    )
    .collect();
    write_csv(out, "minimal_report.csv", &["metric", "value"], &report_rows)?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "min_r_monotonicity", rep.min_r_monotonicity);
    measured_entry(&mut measured, "min_k_monotonicity", rep.min_k_monotonicity);
    measured_entry(&mut measured, "limit_estimate", rep.limit_estimate);
    write_metadata(
        out,
        "minimal_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "minimal",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

fn default_y_grid() -> Vec<f64> {
    (0..12)
        .map(|i| 1e-3 * (2.0f64 / 1e-3).powf(i as f64 / 11.0))
        .collect()
}

pub fn run_extend(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let basis = config.basis().map_err(CliError::Validation)?;
    let s = config.order().map_err(CliError::Validation)?;
    let u0 = config.datum(basis.clone(), seed).map_err(CliError::Validation)?;
    let ygrid = config.y_grid.clone().unwrap_or_else(default_y_grid);
    let ext = extend_cylinder(&u0, s, &ygrid)?;

    let mut rows = Vec::new();
    for (j, &y) in ext.ygrid.iter().enumerate() {
        for (i, &x) in basis.nodes().iter().enumerate() {
            rows.push(vec![fmt(y), fmt(x), fmt(ext.values[(j, i)])]);
        }
    }
    write_csv(out, "extension_field.csv", &["y", "x", "value"], &rows)?;

    // flux table along the same heights
    let target = spectral_frac_laplacian(&u0, s);
    let scale = target.l2_norm().max(1e-300);
    let mut dtn_rows = Vec::new();
    for &y in &ext.ygrid {
        let err = dtn_flux(&u0, s, y)?.l2_distance(&target)?;
        dtn_rows.push(vec![fmt(y), fmt(err), fmt(err / scale)]);
    }
    write_csv(
        out,
        "extension_dtn.csv",
        &["y", "abs_l2_error", "rel_l2_error"],
        &dtn_rows,
    )?;

    let energy = weighted_energy(&ext)?;
    let hs = hs_norm(&u0, s);
    let mut measured = Map::new();
    measured_entry(&mut measured, "weighted_energy", energy);
    measured_entry(&mut measured, "hs_norm", hs);
    measured_entry(
        &mut measured,
        "energy_rel_gap",
        ((energy - hs) / hs.max(1e-300)).abs(),
    );
    write_metadata(
        out,
        "extend_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "extend",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

pub fn run_dtn_check(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let basis = config.basis().map_err(CliError::Validation)?;
    let s = config.order().map_err(CliError::Validation)?;
    let u0 = config.datum(basis, seed).map_err(CliError::Validation)?;
    let target = spectral_frac_laplacian(&u0, s);
    let scale = target.l2_norm().max(1e-300);
    let ys = config
        .y_grid
        .clone()
        .unwrap_or(vec![1e-1, 1e-2, 1e-3, 1e-4]);

    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for &y in &ys {
        let err = dtn_flux(&u0, s, y)?.l2_distance(&target)?;
        errs.push(err);
        rows.push(vec![fmt(y), fmt(err), fmt(err / scale)]);
    }
    write_csv(out, "dtn_check.csv", &["y", "abs_l2_error", "rel_l2_error"], &rows)?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "final_rel_error", errs.last().unwrap() / scale);
    measured_entry(
        &mut measured,
        "monotone_decreasing",
        if errs.windows(2).all(|w| w[1] < w[0]) { 1.0 } else { 0.0 },
    );
    write_metadata(
        out,
        "dtn_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "dtn-check",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

pub fn run_energy_check(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let basis = config.basis().map_err(CliError::Validation)?;
    let s = config.order().map_err(CliError::Validation)?;
    let phi = config.nonlinearity().map_err(CliError::Validation)?;
    let cfg = config.solver().map_err(CliError::Validation)?;
    let u0 = config.datum(basis.clone(), seed).map_err(CliError::Validation)?;

    // trace identity between the weighted cylinder energy and the H^s norm
    let ext = extend_cylinder(&u0, s, &[0.5])?;
    let energy = weighted_energy(&ext)?;
    let hs = hs_norm(&u0, s);

    // local energy estimate along a short evolution
    let traj = evolve(&u0, config.t_end, &cfg, &phi, s)?;
    let r_window = (0.45 * config.r).max(0.26);
    let rep = local_energy_check(&traj, r_window, &phi, s)?;

    let rows: Rows = vec![
        vec!["hs_norm".into(), fmt(hs)],
        vec!["weighted_energy".into(), fmt(energy)],
        vec![
            "trace_identity_rel_error".into(),
            fmt(((energy - hs) / hs.max(1e-300)).abs()),
        ],
        vec!["local_energy_lhs".into(), fmt(rep.lhs)],
        vec!["local_dirichlet_term".into(), fmt(rep.dirichlet_term)],
        vec!["local_bulk_unit".into(), fmt(rep.bulk_unit)],
        vec!["local_measured_c".into(), fmt(rep.measured_c)],
        vec!["window_radius".into(), fmt(r_window)],
    ];
    write_csv(out, "energy_check.csv", &["quantity", "value"], &rows)?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "trace_identity_rel_error", ((energy - hs) / hs.max(1e-300)).abs());
    measured_entry(&mut measured, "local_measured_c", rep.measured_c);
    write_metadata(
        out,
        "energy_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "energy-check",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

pub fn run_cutoff_scan(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let s = config.order().map_err(CliError::Validation)?;
    let r_list = config.r_list.clone().unwrap_or(vec![1.0, 2.0, 4.0, 8.0]);
    let p = default_p(config.d, s)?;
    validate_exponents(config.d, s, p)?;
    let h = WeightH::new(1.0 + s.value(), config.d, s)?;

    let frac_rows = cutoff_scaling_scan(s, &r_list)?;
    let tp_rows = tp_scaling_scan(s, p, &r_list)?;
    let mut rows = Vec::new();
    for (i, &r) in r_list.iter().enumerate() {
        let q = qform_l1(&h, &CutoffGamma::new(r)?, s)?;
        rows.push(vec![
            fmt(r),
            fmt(frac_rows[i].sup),
            fmt(frac_rows[i].scaled_sup),
            fmt(tp_rows[i].sup),
            fmt(tp_rows[i].scaled_sup),
            fmt(q),
        ]);
    }
    write_csv(
        out,
        "cutoff_scan.csv",
        &[
            "r",
            "fraclap_sup",
            "fraclap_sup_scaled",
            "tp_sup",
            "tp_sup_scaled",
            "qform_l1",
        ],
        &rows,
    )?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "p", p);
    measured_entry(&mut measured, "weight_alpha", h.alpha);
    write_metadata(
        out,
        "cutoff_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "cutoff-scan",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

pub fn run_duality(config: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let started = Instant::now();
    validated(config)?;
    let basis = config.basis().map_err(CliError::Validation)?;
    let s = config.order().map_err(CliError::Validation)?;
    let phi = config.nonlinearity().map_err(CliError::Validation)?;
    let cfg = config.solver().map_err(CliError::Validation)?;
    let opts = config.duality.clone().unwrap_or_default();
    let u0 = config.datum(basis.clone(), seed).map_err(CliError::Validation)?;

    // two discretizations of the same problem feed the dual coefficient
    let u = evolve(&u0, config.t_end, &cfg, &phi, s)?;
    let mut cfg_fine = cfg.clone();
    cfg_fine.tau = cfg.tau / 2.0;
    let w_full = evolve(&u0, config.t_end, &cfg_fine, &phi, s)?;
    let w = {
        let mut fields = Vec::new();
        for &t in &u.times {
            let idx = w_full
                .times
                .iter()
                .position(|&tt| (tt - t).abs() < 1e-12)
                .ok_or_else(|| CliError::Numerical("time grids failed to nest".into()))?;
            fields.push(w_full.fields[idx].clone());
        }
        Trajectory {
            times: u.times.clone(),
            sup_norms: fields.iter().map(|f| f.linf_norm()).collect(),
            fields,
            diagnostics: Vec::new(),
            eps_used: w_full.eps_used,
            background: w_full.background,
            eps_continuation_gap: None,
        }
    };
    let coeff = build_coefficient(&u, &w, &phi)?;
    let smoothed = smooth_coefficient(&coeff, &basis, opts.k, opts.pieces)?;
    let chi = Field::from_values(
        basis.clone(),
        basis
            .nodes()
            .iter()
            .map(|&x| shapes::plateau(0.0, 0.35 * config.r, 1.0)(x))
            .collect(),
    )?;
    let psi = backward_solve(&smoothed, &chi, s, opts.inner_steps)?;
    let energy = energy_identity_check(&psi, &smoothed, &chi, s)?;
    let witness = uniqueness_witness(&u, &w, &chi, &coeff, &smoothed, s)?;

    let rows: Rows = vec![
        vec!["markov_min".into(), fmt(psi.min_value)],
        vec!["markov_max".into(), fmt(psi.max_value)],
        vec!["energy_lhs".into(), fmt(energy.lhs)],
        vec!["energy_rhs".into(), fmt(energy.rhs)],
        vec!["energy_residual".into(), fmt(energy.relative_residual)],
        vec!["witness".into(), fmt(witness.witness)],
        vec!["witness_bound".into(), fmt(witness.bound)],
        vec!["coeff_floor".into(), fmt(smoothed.floor())],
        vec!["coeff_ceiling".into(), fmt(smoothed.ceiling())],
        vec!["coeff_l2_defect".into(), fmt(smoothed.l2_defect)],
    ];
    write_csv(out, "duality.csv", &["quantity", "value"], &rows)?;
    let mut measured = Map::new();
    measured_entry(&mut measured, "energy_residual", energy.relative_residual);
    measured_entry(&mut measured, "witness", witness.witness);
    measured_entry(&mut measured, "witness_bound", witness.bound);
    write_metadata(
        out,
        "duality_meta.json",
        &Metadata {
            tool: "fracfilt",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: "duality",
            seed,
            config,
            measured,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    )?;
    Ok(())
}

pub fn run_selftest(out: &Path) -> Result<(), CliError> {
    let results = acceptance::run_all();
    let mut rows = Vec::new();
    let mut all_pass = true;
    for c in &results {
        println!("{}", c.summary_line());
        all_pass &= c.passed;
        rows.push(vec![
            c.id.to_string(),
            c.name.to_string(),
            c.passed.to_string(),
            fmt(c.runtime.as_secs_f64()),
            c.details.clone(),
        ]);
    }
    // details may contain commas; quote the last column
    let quoted: Rows = rows
        .into_iter()
        .map(|mut r| {
            let d = r.pop().unwrap().replace('"', "'");
            r.push(format!("\"{d}\""));
            r
        })
        .collect();
    write_csv(
        out,
        "selftest.csv",
        &["id", "name", "passed", "runtime_s", "details"],
        &quoted,
    )?;
    if all_pass {
        Ok(())
    } else {
        let failed: Vec<String> = results
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("criterion {:02} ({})", c.id, c.name))
            .collect();
        Err(CliError::Acceptance(format!(
            "acceptance failures: {}",
            failed.join(", ")
        )))
    }
}
