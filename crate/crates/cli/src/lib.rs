//! Scenario runner for the characteristic-coordinate wave solver.

pub mod expr;
pub mod scenario;
pub mod tasks;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use tasks::TaskOptions;

#[derive(Parser)]
#[command(name = "nvw", about = "Conservative solutions of the regularized variational wave system")]
pub struct Cli {
    #[command(subcommand)]
    pub task: Task,
}

#[derive(Subcommand)]
pub enum Task {
    /// List the bundled scenarios.
    List,
    /// Evolve a scenario and emit the time slice.
    Solve(CommonArgs),
    /// Run the scenario's invariant battery.
    Verify(CommonArgs),
    /// Tabulate total energy across the scenario times.
    Conservation(CommonArgs),
    /// Solve at increasing resolution and check residual decay.
    Convergence(CommonArgs),
    /// Check density positivity after evolution on the interval.
    Regularization(CommonArgs),
    /// Vanishing-density approximation study.
    Approximation(CommonArgs),
}

#[derive(clap::Args)]
pub struct CommonArgs {
    /// Bundled scenario name or a JSON file path.
    #[arg(long)]
    pub scenario: String,
    /// Output directory for emitted files.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the fixed-point tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Override the solver grid target.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Refinement levels for the convergence task.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Also dump the family data and the raw characteristic grid.
    #[arg(long, default_value_t = false)]
    pub dump_lagrangian: bool,
}

impl CommonArgs {
    fn options(&self) -> TaskOptions {
        TaskOptions {
            out_dir: self.out.clone(),
            tol: self.tol,
            grid: self.grid,
            levels: self.levels,
            dump_lagrangian: self.dump_lagrangian,
        }
    }
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.task {
        Task::List => return tasks::task_list(),
        Task::Solve(a) => tasks::task_solve(&a.scenario, &a.options()),
        Task::Verify(a) => tasks::task_verify(&a.scenario, &a.options()),
        Task::Conservation(a) => tasks::task_conservation(&a.scenario, &a.options()),
        Task::Convergence(a) => tasks::task_convergence(&a.scenario, &a.options()),
        Task::Regularization(a) => tasks::task_regularization(&a.scenario, &a.options()),
        Task::Approximation(a) => tasks::task_approximation(&a.scenario, &a.options()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}

/// Honor the thread cap before any parallel work starts.
pub fn init_threads() {
    if let Ok(v) = std::env::var("NVW_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}
