//! Run orchestration: the time loop with per-step diagnostics, file output,
//! and convergence studies on the manufactured cases.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use log::{info, warn};
use thiserror::Error;

use crate::cases::{CaseError, Scale, Setup};
use crate::config::{CaseId, ConfigError, SchemeConfig};
use crate::diagnostics::{
    convergence_error, div_norms, electric_residual, observed_orders, reconnected_flux, total_entropy, vertex_divergence,
    DiagnosticsError, DivergenceReport,
};
use crate::grid::FieldArray;
use crate::output::{write_snapshot, NormsWriter, StepLog};
use crate::state::{BX, BY, ION};
use crate::stepper::{StepError, StepReport, Solver};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("step {step} at t = {time}: {source}")]
    Step { step: usize, time: f64, source: StepError },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} has no exact solution")]
    NoExactSolution(CaseId),
}

impl RunError {
    /// Exit status of the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::NoExactSolution(_) => 2,
            _ => 3,
        }
    }
}

/// A solver together with its setup and the diagnostics history.
pub struct Run {
    pub setup: Setup,
    pub solver: Solver,
    pub history: Vec<DivergenceReport>,
    pub last_step: Option<StepReport>,
}

impl Run {
    pub fn new(setup: Setup) -> Result<Self, RunError> {
        let solver = setup.solver()?;
        let mut run = Run {
            setup,
            solver,
            history: Vec::new(),
            last_step: None,
        };
        let r = run.report(0, 0.0, 0.0, 0.0)?;
        run.history.push(r);
        Ok(run)
    }

    pub fn from_config(cfg: &SchemeConfig, scale: Scale) -> Result<Self, RunError> {
        Self::new(Setup::resolve(cfg, scale)?)
    }

    pub fn time(&self) -> f64 {
        self.solver.time
    }

    pub fn finished(&self) -> bool {
        let t_end = self.setup.t_end;
        self.solver.time >= t_end - 1e-12 * t_end.abs().max(1.0) || self.setup.max_steps.is_some_and(|m| self.solver.steps >= m)
    }

    /// Reconnected flux of the current state (GEM only).
    pub fn psi_flux(&self) -> Option<f64> {
        (self.setup.case == CaseId::Gem).then(|| {
            let u = &self.solver.u;
            reconnected_flux(|i, j| u.get(i, j)[BY], &self.solver.op.grid, self.setup.values.b0)
        })
    }

    fn report(&mut self, step: usize, dt: f64, res_l1: f64, res_l2: f64) -> Result<DivergenceReport, RunError> {
        let grid = self.solver.op.grid.clone();
        let (l1, l2) = div_norms(&vertex_divergence(&self.solver.u, &grid, BX, BY));
        self.solver.op.recover(&self.solver.u).map_err(|source| RunError::Step {
            step,
            time: self.solver.time,
            source,
        })?;
        let model = &self.solver.op.model;
        let entropy = total_entropy(self.solver.op.primitives(), &grid, &model.gas_i, &model.gas_e);
        Ok(DivergenceReport {
            step,
            time: self.solver.time,
            dt,
            div_b_l1: l1,
            div_b_l2: l2,
            div_e_res_l1: res_l1,
            div_e_res_l2: res_l2,
            total_entropy: entropy,
            psi_flux: self.psi_flux(),
        })
    }

    /// Advances one step, never past the end time.
    pub fn step(&mut self) -> Result<DivergenceReport, RunError> {
        let cap = self.setup.t_end - self.solver.time;
        let step = self.solver.steps + 1;
        let (rep, old, currents) = self.solver.step(cap).map_err(|source| RunError::Step {
            step,
            time: self.solver.time,
            source,
        })?;
        let res = electric_residual(
            &self.solver.u,
            &old,
            currents.as_ref(),
            rep.dt,
            self.setup.sources.maxwell_source_scale,
            &self.solver.op.grid,
        )?;
        let (r1, r2) = div_norms(&res);
        let r = self.report(rep.step, rep.dt, r1, r2)?;
        self.last_step = Some(rep);
        self.history.push(r);
        Ok(r)
    }

    /// Ion density of the current state.
    pub fn ion_density(&mut self) -> Result<FieldArray<f64>, RunError> {
        let time = self.solver.time;
        let step = self.solver.steps;
        let grid = self.solver.op.grid.clone();
        let prim = self.solver.op.recover(&self.solver.u).map_err(|source| RunError::Step { step, time, source })?;
        let mut rho = FieldArray::new(&grid, 0.0);
        rho.map_interior(|i, j, v| *v = prim.get(i, j)[ION]);
        Ok(rho)
    }

    /// L1 error of the ion density against the manufactured solution.
    pub fn density_error(&mut self) -> Result<f64, RunError> {
        let case = self.setup.case;
        self.setup.exact_density(0.0, 0.0, 0.0).ok_or(RunError::NoExactSolution(case))?;
        let rho = self.ion_density()?;
        let t = self.solver.time;
        let s = &self.setup;
        Ok(convergence_error(&rho, &self.solver.op.grid, |x, y| s.exact_density(x, y, t).unwrap_or(f64::NAN)))
    }

    fn snapshot(&mut self, path: &std::path::Path) -> Result<(), RunError> {
        let grid = self.solver.op.grid.clone();
        let time = self.solver.time;
        // a failed recovery leaves the last good primitives in place
        if self.solver.op.recover(&self.solver.u).is_err() {
            warn!("writing {} with stale primitives", path.display());
        }
        write_snapshot(path, &grid, time, &self.solver.u, self.solver.op.primitives(), self.setup.output.binary)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub wall: Duration,
    pub last: DivergenceReport,
    pub output_dir: PathBuf,
}

/// Runs to the end time, writing `norms.csv`, `steps.csv`, snapshots at the
/// configured cadence and `final.txt` into the output directory. On a step
/// failure the last good state goes to `partial.txt` before the error is
/// returned.
pub fn run(setup: Setup) -> Result<RunSummary, RunError> {
    let dir = setup.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let every = setup.output.snapshot_every;
    let start = Instant::now();
    let mut run = Run::new(setup)?;
    let mut norms = NormsWriter::create(&dir.join("norms.csv"), run.setup.case == CaseId::Gem)?;
    let mut log = StepLog::create(&dir.join("steps.csv"))?;
    norms.write(&run.history[0])?;
    info!(
        "{} {}x{} {} {} to t = {}",
        run.setup.case, run.setup.nx, run.setup.ny, run.setup.scheme, run.setup.integrator, run.setup.t_end
    );
    if every > 0 {
        run.snapshot(&dir.join("snapshot_000000.txt"))?;
    }
    while !run.finished() {
        let r = match run.step() {
            Ok(r) => r,
            Err(e) => {
                norms.flush()?;
                log.flush()?;
                run.snapshot(&dir.join("partial.txt"))?;
                return Err(e);
            }
        };
        norms.write(&r)?;
        if let Some(rep) = &run.last_step {
            log.write(rep)?;
            if rep.step % 100 == 0 {
                info!("step {} t = {:.6} dt = {:.3e} divB = {:.3e}", rep.step, rep.time, rep.dt, r.div_b_l1);
            }
        }
        if every > 0 && r.step % every == 0 {
            run.snapshot(&dir.join(format!("snapshot_{:06}.txt", r.step)))?;
        }
    }
    norms.flush()?;
    log.flush()?;
    run.snapshot(&dir.join("final.txt"))?;
    let last = *run.history.last().expect("history starts with the initial report");
    Ok(RunSummary {
        steps: run.solver.steps,
        time: run.solver.time,
        wall: start.elapsed(),
        last,
        output_dir: dir,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Runs a manufactured case at each resolution (square grids in 2-D) and
/// reports the ion-density L1 errors with observed orders.
pub fn convergence_study(template: &SchemeConfig, scale: Scale, cells: &[usize]) -> Result<Vec<ConvergenceRow>, RunError> {
    let mut errors = Vec::with_capacity(cells.len());
    for &n in cells {
        let mut cfg = template.clone();
        cfg.nx = Some(n);
        cfg.ny = (!cfg.test_case.is_1d()).then_some(n);
        let mut run = Run::from_config(&cfg, scale)?;
        run.setup.exact_density(0.0, 0.0, 0.0).ok_or(RunError::NoExactSolution(cfg.test_case))?;
        while !run.finished() {
            run.step()?;
        }
        let e = run.density_error()?;
        info!("{} cells: L1 error {e:.6e} after {} steps", n, run.solver.steps);
        errors.push(e);
    }
    let orders = observed_orders(&errors);
    Ok(cells
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(k, (&c, &e))| ConvergenceRow {
            cells: c,
            error: e,
            order: k.checked_sub(1).map(|p| orders[p]),
        })
        .collect())
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("cells,l1_error,order\n");
    for r in rows {
        match r.order {
            Some(o) => s.push_str(&format!("{},{:.6e},{:.4}\n", r.cells, r.error, o)),
            None => s.push_str(&format!("{},{:.6e},\n", r.cells, r.error)),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwell::MaxwellScheme;
    use crate::output::{Snapshot, NORMS_HEADER};
    use crate::stepper::Integrator;

    fn quick(case: CaseId, integrator: Integrator, dir: &std::path::Path) -> Setup {
        let mut cfg = SchemeConfig::new(case, MaxwellScheme::MultiD, integrator);
        cfg.output.dir = dir.to_path_buf();
        cfg.output.snapshot_every = 2;
        cfg.nx = Some(16);
        cfg.max_steps = Some(4);
        Setup::resolve(&cfg, Scale::Desk).unwrap()
    }

    #[test]
    fn run_writes_norms_log_and_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = quick(CaseId::OrszagTang, Integrator::Explicit, dir.path());
        s.ny = 16;
        let sum = run(s).unwrap();
        assert_eq!(sum.steps, 4);
        let norms = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        assert_eq!(norms.lines().next().unwrap(), NORMS_HEADER);
        assert_eq!(norms.lines().count(), 6);
        for f in ["snapshot_000000.txt", "snapshot_000002.txt", "snapshot_000004.txt", "final.txt", "steps.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let snap = Snapshot::read(&dir.path().join("final.txt")).unwrap();
        assert_eq!((snap.nx, snap.ny), (16, 16));
        assert!((snap.time - sum.time).abs() < 1e-15);
        assert!(sum.last.div_b_l1 < 1e-13);
    }

    #[test]
    fn gem_norms_carry_the_flux_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = quick(CaseId::Gem, Integrator::Imex, dir.path());
        s.ny = 8;
        s.max_steps = Some(1);
        run(s).unwrap();
        let norms = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        assert!(norms.lines().next().unwrap().ends_with(",psi_flux"));
    }

    #[test]
    fn runs_are_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(quick(CaseId::Briowu, Integrator::Imex, a.path())).unwrap();
        run(quick(CaseId::Briowu, Integrator::Imex, b.path())).unwrap();
        for f in ["norms.csv", "final.txt"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn run_stops_exactly_at_end_time() {
        let mut cfg = SchemeConfig::new(CaseId::Accuracy1d, MaxwellScheme::MultiD, Integrator::Explicit);
        cfg.nx = Some(16);
        cfg.t_end = Some(0.13);
        let mut r = Run::from_config(&cfg, Scale::Desk).unwrap();
        while !r.finished() {
            r.step().unwrap();
        }
        assert_eq!(r.time(), 0.13);
    }

    #[test]
    fn convergence_table_shape() {
        let mut cfg = SchemeConfig::new(CaseId::Accuracy1d, MaxwellScheme::MultiD, Integrator::Explicit);
        cfg.t_end = Some(0.1);
        let rows = convergence_study(&cfg, Scale::Desk, &[16, 32]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].order.is_none() && rows[1].order.unwrap() > 1.0);
        let csv = convergence_csv(&rows);
        assert!(csv.starts_with("cells,l1_error,order\n16,"));
        cfg.test_case = CaseId::Blast;
        assert!(matches!(convergence_study(&cfg, Scale::Desk, &[8]), Err(RunError::NoExactSolution(CaseId::Blast))));
    }
}
