//! Subcommand drivers. Each returns the tables it produced; writing them is
//! left to the caller.

use crate::config::{FieldKind, RunConfig};
use crate::table::{Cell, Table};
use hencky_core::analysis::{delta_sweep, recession_of_hom};
use hencky_core::cell::{derive_seed, dual_cell, minimize_cell, CellSpec, GridField};
use hencky_core::kernels::{central_gradient, helmholtz_decompose};
use hencky_core::sampling;
use hencky_core::SymTensor64;
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<hencky_core::Error> for CliError {
    fn from(e: hencky_core::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub jobs: usize,
    /// Fill the `seconds` column (breaks byte-identical reruns).
    pub timing: bool,
}

/// An `(x, y)` series for external plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Output {
    pub tables: Vec<(String, Table)>,
    pub series: Vec<Series>,
}

/// Runs `work` over `items` on a pool of `jobs` threads; results keep the
/// item order.
pub fn run_jobs<I, R, F>(jobs: usize, items: &[I], work: F) -> Result<Vec<R>, CliError>
where
    I: Sync,
    R: Send,
    F: Fn(&I) -> Result<R, CliError> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&work).collect())
}

pub fn tensor_header(prefix: &str, dim: usize) -> Vec<String> {
    let mut h = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            h.push(format!("{prefix}{}{}", i + 1, j + 1));
        }
    }
    h
}

fn tensor_cells(x: &SymTensor64) -> Vec<Cell> {
    x.upper().iter().map(|&v| Cell::Num(v)).collect()
}

fn seconds(opts: &RunOptions, t: Instant) -> Cell {
    if opts.timing {
        Cell::Num(t.elapsed().as_secs_f64())
    } else {
        Cell::Empty
    }
}

fn need_strains(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.strains.is_empty() {
        return Err(CliError::Config("config field `strains`: at least one strain is required".into()));
    }
    Ok(())
}

fn cell_spec(cfg: &RunConfig, k: usize) -> Result<CellSpec, CliError> {
    CellSpec::with_boundary(cfg.dim, k, cfg.m, cfg.boundary).map_err(|e| CliError::Config(format!("grid: {e}")))
}

pub fn homogenize(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CliError> {
    need_strains(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.strains.len())
        .flat_map(|i| cfg.k_list.iter().map(move |&k| (i, k)))
        .collect();
    let results = run_jobs(opts.jobs, &jobs, |&(i, k)| {
        let t = Instant::now();
        let r = minimize_cell(&cfg.density, &cfg.strains[i], cell_spec(cfg, k)?, &cfg.solver)?;
        Ok((r, seconds(opts, t)))
    })?;
    let mut header = vec!["density".to_string(), "n".into()];
    header.extend(tensor_header("x", cfg.dim));
    header.extend(["k", "m", "value", "grad_norm", "restarts_used", "seconds"].map(String::from));
    let mut table = Table::new(header);
    let mut series: Vec<Series> = (0..cfg.strains.len())
        .map(|i| Series { name: format!("homogenize_{i}"), points: vec![] })
        .collect();
    for (&(i, k), (r, secs)) in jobs.iter().zip(results) {
        let mut row = vec![Cell::from(cfg.density_name.as_str()), cfg.dim.into()];
        row.extend(tensor_cells(&cfg.strains[i]));
        row.extend([k.into(), cfg.m.into(), r.value.into(), r.gradient_norm.into(), r.restarts_used.into(), secs]);
        table.push(row);
        series[i].points.push((k as f64, r.value));
    }
    Ok(Output { tables: vec![("homogenize".into(), table)], series })
}

pub fn sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CliError> {
    need_strains(cfg)?;
    let spec = cell_spec(cfg, cfg.k_list[0])?;
    let results = run_jobs(opts.jobs, &cfg.strains, |x| {
        Ok(delta_sweep(&cfg.density, x, &cfg.deltas, spec, &cfg.solver)?)
    })?;
    let mut header = tensor_header("x", cfg.dim);
    header.extend(["row", "delta", "value", "monotone_ok", "limit_gap"].map(String::from));
    let mut table = Table::new(header);
    let mut series = vec![];
    for (i, (x, t)) in cfg.strains.iter().zip(results).enumerate() {
        for (&d, &v) in t.deltas.iter().zip(&t.values) {
            let mut row = tensor_cells(x);
            row.extend([Cell::from("data"), d.into(), v.into(), Cell::Empty, Cell::Empty]);
            table.push(row);
        }
        let mut row = tensor_cells(x);
        row.extend([Cell::from("summary"), Cell::Empty, Cell::Empty, t.monotone_ok.into(), t.limit_gap.into()]);
        table.push(row);
        series.push(Series {
            name: format!("sweep_{i}"),
            points: t.deltas.iter().copied().zip(t.values.iter().copied()).collect(),
        });
    }
    Ok(Output { tables: vec![("sweep".into(), table)], series })
}

pub fn recession(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CliError> {
    if cfg.directions.is_empty() {
        return Err(CliError::Config("config field `recession.directions`: no traceless direction given".into()));
    }
    let spec = cell_spec(cfg, cfg.k_list[0])?;
    let results = run_jobs(opts.jobs, &cfg.directions, |p| {
        Ok(recession_of_hom(&cfg.density, p, &cfg.t_schedule, spec, &cfg.solver)?)
    })?;
    let mut header = tensor_header("p", cfg.dim);
    header.extend(["t", "value", "extrapolated"].map(String::from));
    let mut table = Table::new(header);
    let mut series = vec![];
    for (i, (p, est)) in cfg.directions.iter().zip(results).enumerate() {
        for &(t, q) in &est.samples {
            let mut row = tensor_cells(p);
            row.extend([t.into(), q.into(), est.value.into()]);
            table.push(row);
        }
        series.push(Series { name: format!("recession_{i}"), points: est.samples.clone() });
    }
    Ok(Output { tables: vec![("recession".into(), table)], series })
}

pub fn dual(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CliError> {
    if !&cfg.density.is_convex() {
        return Err(CliError::Config(format!(
            "config field `density.name`: the dual needs a convex density, '{}' is not",
            cfg.density_name
        )));
    }
    let spec = cell_spec(cfg, cfg.k_list[0])?;
    let results = run_jobs(opts.jobs, &cfg.stresses, |y| {
        Ok(dual_cell(&cfg.density, y, spec, &cfg.solver, &cfg.conjugate)?)
    })?;
    let mut header = tensor_header("y", cfg.dim);
    header.extend(["value", "feasible", "truncated_value", "infeasibility"].map(String::from));
    let mut table = Table::new(header);
    let mut points = vec![];
    for (i, (y, d)) in cfg.stresses.iter().zip(results).enumerate() {
        let mut row = tensor_cells(y);
        row.extend([d.value.into(), d.feasible.into(), d.truncated_value.into(), d.infeasibility.into()]);
        table.push(row);
        points.push((i as f64, d.truncated_value));
    }
    Ok(Output {
        tables: vec![("dual".into(), table)],
        series: vec![Series { name: "dual".into(), points }],
    })
}

/// Test field for the decomposition; always on a zero-boundary grid.
pub fn make_field(spec: CellSpec, kind: FieldKind, seed: u64) -> Result<GridField<f64>, CliError> {
    let mut rng = sampling::rng(seed);
    let n = spec.dim;
    let mut noise = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let field = match kind {
        FieldKind::Random => {
            let mut f = GridField::from_values(spec, noise(spec.num_nodes() * n))?;
            f.zero_boundary();
            f
        }
        FieldKind::Gradient => {
            let mut phi = noise(spec.num_nodes());
            for (i, p) in phi.iter_mut().enumerate() {
                if spec.is_boundary_node(i) {
                    *p = 0.0;
                }
            }
            GridField::from_values(spec, central_gradient(&spec, &phi))?
        }
        FieldKind::Solenoidal => {
            let mut f = GridField::from_values(spec, noise(spec.num_nodes() * n))?;
            f.zero_boundary();
            helmholtz_decompose(&f)?.v
        }
    };
    Ok(field)
}

pub fn decompose(cfg: &RunConfig, opts: &RunOptions) -> Result<Output, CliError> {
    let spec = CellSpec::new(cfg.dim, cfg.k_list[0], cfg.m).map_err(|e| CliError::Config(format!("grid: {e}")))?;
    let items: Vec<(usize, FieldKind)> = cfg.fields.iter().copied().enumerate().collect();
    let results = run_jobs(opts.jobs, &items, |&(i, kind)| {
        let u = make_field(spec, kind, derive_seed(cfg.solver.seed, i as u64))?;
        let h = helmholtz_decompose(&u)?;
        let g = central_gradient(&spec, &h.phi);
        let rec = u
            .values()
            .iter()
            .zip(h.v.values().iter().zip(&g))
            .fold(0.0f64, |m, (a, (b, c))| m.max((a - b - c).abs()));
        Ok((h, rec))
    })?;
    let header = [
        "field_id",
        "kind",
        "div_residual",
        "orthogonality_residual",
        "reconstruction_residual",
        "v_max",
        "phi_max",
    ];
    let mut table = Table::new(header);
    let mut points = vec![];
    for (&(i, kind), (h, rec)) in items.iter().zip(results) {
        let phi_max = h.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        table.push(vec![
            i.into(),
            kind.name().into(),
            h.div_residual.into(),
            h.orthogonality.into(),
            rec.into(),
            h.v.max_abs().into(),
            phi_max.into(),
        ]);
        points.push((i as f64, h.div_residual));
    }
    Ok(Output {
        tables: vec![("decompose".into(), table)],
        series: vec![Series { name: "decompose".into(), points }],
    })
}
