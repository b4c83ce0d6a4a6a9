//! `qvlab` command line.
//!
//! CSV columns per subcommand:
//!
//! | subcommand    | file                | columns                                   |
//! |---------------|---------------------|-------------------------------------------|
//! | `hardy-table` | `hardy_table.csv`   | `r, chi, limit, ratio_to_limit`           |
//! | `green`       | `green.csv`         | `r, G, dG, hardy_weight`                  |
//! | `tone`        | `eigenfunction.csv` | `r, phi`                                  |
//! | `capacity`    | `capacity.csv`      | `outer, value`                            |
//! | `classify`    | `classify.csv`      | `outer, value, null_sequence`             |
//! | `solve`       | `solution.csv`      | `r, u, phi_inf, phi_0` (one file per run) |
//! | `yamabe`      | `conformal.csv`     | `r, u` (one file per run)                 |

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::capacity::{capacity_ladder, classify_criticality, global_capacity, SupersolutionDatum};
use crate::error::{Error, Result};
use crate::green::{green_hardy_weight, is_subcritical_model, AsymptoticClass, GreenKernel};
use crate::hardy::{log_grid, HardyWeight};
use crate::mesh::{DiscreteFunction, RadialMesh};
use crate::report::{some, write_csv, write_json};
use crate::scenario::{Scenario, SolveMode};
use crate::solver::{monotone_iteration, multi_solution_sequence, Coefficients, MonotoneOptions, SolveReport};
use crate::spectral::fundamental_tone;
use crate::verify;
use crate::yamabe::{
    conformal_laplacian_subcritical, prescribed_curvature_sequence, run_prescribed_curvature, ConformalOptions,
    ConformalReport, ConformalSubcriticality, YamabeProblem,
};

#[derive(Debug, Parser)]
#[command(
    name = "qvlab",
    version,
    about = "Hardy weights, capacities and semilinear solvers on radial model manifolds"
)]
pub struct Cli {
    /// Output directory (default: the scenario's `output.dir`, else `.`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `solver.tol`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    /// Scenario TOML file.
    pub scenario: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the Hardy weight against its limit at infinity.
    HardyTable(ScenarioArg),
    /// Tabulate the Green kernel and its Hardy weight.
    Green(ScenarioArg),
    /// Fundamental tone of `Q_V` on the scenario domain.
    Tone(ScenarioArg),
    /// Capacity ladder of `K = B_inner`.
    Capacity(ScenarioArg),
    /// Subcritical / critical classification from the capacity ladder.
    Classify(ScenarioArg),
    /// Monotone iteration for `Delta_p u + a u^{p-1} - b F(u) = 0`.
    Solve(ScenarioArg),
    /// Prescribed scalar curvature deformation.
    Yamabe(ScenarioArg),
    /// Golden values and seeded properties.
    Verify {
        /// Optional scenario; only its seed is used.
        scenario: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::HardyTable(_) => "hardy-table",
            Command::Green(_) => "green",
            Command::Tone(_) => "tone",
            Command::Capacity(_) => "capacity",
            Command::Classify(_) => "classify",
            Command::Solve(_) => "solve",
            Command::Yamabe(_) => "yamabe",
            Command::Verify { .. } => "verify",
        }
    }
}

struct Ctx {
    sc: Scenario,
    out: PathBuf,
    seed: u64,
    tol: Option<f64>,
    command: &'static str,
}

impl Ctx {
    fn json<T: Serialize>(&self, result: &T) -> Result<()> {
        write_json(&self.out.join(format!("{}.json", self.command)), self.command, self.seed, result)
    }

    fn monotone_options(&self) -> MonotoneOptions {
        let mut o = MonotoneOptions { ladder: self.sc.ladder(), ..Default::default() };
        if let Some(t) = self.tol.or(self.sc.solver.tol) {
            o.tol = t;
        }
        if let Some(n) = self.sc.solver.max_iter {
            o.max_iter = n;
        }
        o
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("--tol: must be positive and finite, got {t}")));
        }
    }
    let command = cli.command.name();
    let path = match &cli.command {
        Command::HardyTable(a)
        | Command::Green(a)
        | Command::Tone(a)
        | Command::Capacity(a)
        | Command::Classify(a)
        | Command::Solve(a)
        | Command::Yamabe(a) => Some(a.scenario.as_path()),
        Command::Verify { scenario } => scenario.as_deref(),
    };
    let sc = path.map(Scenario::from_path).transpose()?;
    let seed = cli.seed.or(sc.as_ref().map(|s| s.seed)).unwrap_or(0);
    let out = match (&cli.out, sc.as_ref().and_then(|s| s.output.dir.as_ref().map(|d| (s, d)))) {
        (Some(o), _) => o.clone(),
        (None, Some((s, d))) if d.is_relative() => s.base_dir.join(d),
        (None, Some((_, d))) => d.clone(),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&out)?;
    let Some(sc) = sc else {
        return run_verify(&out, seed);
    };
    if let Command::Verify { .. } = cli.command {
        return run_verify(&out, seed);
    }
    let ctx = Ctx { sc, out, seed, tol: cli.tol, command };
    match cli.command {
        Command::HardyTable(_) => hardy_table(&ctx)?,
        Command::Green(_) => green(&ctx)?,
        Command::Tone(_) => tone(&ctx)?,
        Command::Capacity(_) => capacity(&ctx)?,
        Command::Classify(_) => classify(&ctx)?,
        Command::Solve(_) => solve(&ctx)?,
        Command::Yamabe(_) => yamabe(&ctx)?,
        Command::Verify { .. } => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(out: &Path, seed: u64) -> Result<ExitCode> {
    let start = Instant::now();
    let results = verify::run_all(seed);
    println!("{:>3}  {:<34} {:<6} {:>8}  detail", "id", "check", "result", "seconds");
    for r in &results {
        println!(
            "{:>3}  {:<34} {:<6} {:>8.3}  {}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let total = start.elapsed().as_secs_f64();
    println!("{} of {} checks passed in {total:.2}s", results.len() - failed, results.len());
    #[derive(Serialize)]
    struct Summary<'a> {
        checks: &'a [verify::CheckResult],
        failed: usize,
    }
    write_json(&out.join("verify.json"), "verify", seed, &Summary { checks: &results, failed })?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn table_radii(sc: &Scenario) -> Vec<f64> {
    log_grid(sc.table.r_min, sc.table.r_max, sc.table.points)
}

fn hardy_table(ctx: &Ctx) -> Result<()> {
    let mm = ctx.sc.model()?;
    let hw = HardyWeight::new(&mm)?;
    let radii = table_radii(&ctx.sc);
    let chi = hw.values_at(&radii)?;
    let limit = hw.limit_at_infinity();
    let lim_col = vec![limit; radii.len()];
    let ratio: Vec<Option<f64>> = chi.iter().map(|c| limit.map(|l| c / l)).collect();
    write_csv(
        &ctx.out.join("hardy_table.csv"),
        &["r", "chi", "limit", "ratio_to_limit"],
        &[some(&radii), some(&chi), lim_col, ratio],
    )?;
    #[derive(Serialize)]
    struct Out {
        m: usize,
        p: f64,
        alpha: f64,
        limit: Option<f64>,
        min_chi: f64,
        chi_at_r_max: f64,
    }
    ctx.json(&Out {
        m: mm.m(),
        p: mm.p(),
        alpha: hw.alpha(),
        limit,
        min_chi: chi.iter().cloned().fold(f64::INFINITY, f64::min),
        chi_at_r_max: *chi.last().unwrap(),
    })
}

fn green(ctx: &Ctx) -> Result<()> {
    let mm = ctx.sc.model()?;
    let class = is_subcritical_model(&mm);
    let g = GreenKernel::new(&mm)?;
    let radii = table_radii(&ctx.sc);
    let vals = g.values_at(&radii)?;
    let der = radii.iter().map(|&r| g.derivative(r)).collect::<Result<Vec<_>>>()?;
    let hw = radii.iter().map(|&r| green_hardy_weight(&g, r)).collect::<Result<Vec<_>>>()?;
    write_csv(
        &ctx.out.join("green.csv"),
        &["r", "G", "dG", "hardy_weight"],
        &[some(&radii), some(&vals), some(&der), some(&hw)],
    )?;
    #[derive(Serialize)]
    struct Out {
        subcriticality: crate::green::Subcriticality,
        asymptotic_class: AsymptoticClass,
    }
    ctx.json(&Out { subcriticality: class, asymptotic_class: g.asymptotic_class() })
}

fn write_function(path: &Path, mesh: &RadialMesh, cols: &[(&str, &DiscreteFunction)]) -> Result<()> {
    let mut header = vec!["r"];
    let mut data = vec![some(mesh.nodes())];
    for (name, f) in cols {
        header.push(name);
        data.push(some(f.values()));
    }
    write_csv(path, &header, &data)
}

fn tone(ctx: &Ctx) -> Result<()> {
    let mm = ctx.sc.model()?;
    let mesh = ctx.sc.mesh(&mm)?;
    let v = ctx.sc.profile_or_zero("V", &mm)?;
    let t = fundamental_tone(&mesh, &v)?;
    write_function(&ctx.out.join("eigenfunction.csv"), &mesh, &[("phi", &t.eigenfunction)])?;
    #[derive(Serialize)]
    struct Out {
        lambda: f64,
        method: crate::spectral::ToneMethod,
        iterations: usize,
        residual: f64,
    }
    ctx.json(&Out { lambda: t.lambda, method: t.method, iterations: t.iterations, residual: t.residual })
}

fn cap_inputs(ctx: &Ctx) -> Result<(Vec<RadialMesh>, crate::mesh::PotentialProfile, SupersolutionDatum)> {
    let mm = ctx.sc.model()?;
    let c = ctx.sc.capacity;
    let ladder = capacity_ladder(&mm, c.inner, c.factor, c.rungs, c.elements_per_factor)?;
    Ok((ladder, ctx.sc.profile_or_zero("V", &mm)?, SupersolutionDatum::constant(c.g)))
}

fn capacity(ctx: &Ctx) -> Result<()> {
    let (ladder, v, g) = cap_inputs(ctx)?;
    let gc = global_capacity(&ladder, &v, &g)?;
    write_csv(&ctx.out.join("capacity.csv"), &["outer", "value"], &[some(&gc.radii), some(&gc.values)])?;
    ctx.json(&gc)
}

fn classify(ctx: &Ctx) -> Result<()> {
    let (ladder, v, g) = cap_inputs(ctx)?;
    let rep = classify_criticality(&ladder, &v, &g)?;
    write_csv(
        &ctx.out.join("classify.csv"),
        &["outer", "value", "null_sequence"],
        &[some(&rep.radii), some(&rep.values), some(&rep.null_sequence)],
    )?;
    if let Some(gs) = &rep.ground_state {
        write_function(&ctx.out.join("ground_state.csv"), ladder.last().unwrap(), &[("u", gs)])?;
    }
    ctx.json(&rep)
}

fn solution_csv(ctx: &Ctx, mesh: &RadialMesh, runs: &[SolveReport]) -> Result<()> {
    for (k, r) in runs.iter().enumerate() {
        let name = if runs.len() == 1 { "solution.csv".to_string() } else { format!("solution_{k}.csv") };
        write_function(&ctx.out.join(name), mesh, &[("u", &r.solution), ("phi_inf", &r.phi_inf), ("phi_0", &r.phi_0)])?;
    }
    Ok(())
}

fn solve(ctx: &Ctx) -> Result<()> {
    let mm = ctx.sc.model()?;
    let mesh = ctx.sc.mesh(&mm)?;
    let window = ctx.sc.window(&mesh)?;
    let coeffs = Coefficients::new(ctx.sc.profile_or_zero("a", &mm)?, ctx.sc.profile_or_zero("b", &mm)?);
    let f = ctx.sc.nonlinearity()?;
    let opts = ctx.monotone_options();
    let eps = ctx.sc.solver.epsilon;
    let runs = match ctx.sc.solver.mode {
        SolveMode::Single => vec![monotone_iteration(&mesh, &coeffs, &f, eps, &window, &opts)?],
        SolveMode::Sequence => multi_solution_sequence(&mesh, &coeffs, &f, eps, &window, ctx.sc.solver.count, &opts)?,
    };
    solution_csv(ctx, &mesh, &runs)?;
    match ctx.sc.solver.mode {
        SolveMode::Single => ctx.json(&runs[0]),
        SolveMode::Sequence => ctx.json(&runs),
    }
}

fn yamabe(ctx: &Ctx) -> Result<()> {
    let mm = ctx.sc.model()?;
    let mesh = ctx.sc.mesh(&mm)?;
    let window = ctx.sc.window(&mesh)?;
    let s = ctx.sc.profile("s", &mm)?.ok_or_else(|| Error::Config("coefficients.s: required for yamabe".into()))?;
    let yp = YamabeProblem::new(mm.m(), s, ctx.sc.profile_or_zero("s_tilde", &mm)?)?;
    let opts = ConformalOptions {
        monotone: ctx.monotone_options(),
        floor: ctx.sc.solver.floor,
        track_ladder: ctx.sc.solver.track_ladder,
    };
    let fallback = ctx.sc.ladder().meshes(&mesh)?;
    let class = conformal_laplacian_subcritical(&yp, &mesh, Some(&fallback))?;
    if class == ConformalSubcriticality::NotSubcritical {
        return Err(Error::NotSubcritical("conformal Laplacian".into()));
    }
    let eps = ctx.sc.solver.epsilon;
    let runs: Vec<ConformalReport> = match ctx.sc.solver.mode {
        SolveMode::Single => vec![run_prescribed_curvature(&yp, &mesh, eps, &window, &opts)?],
        SolveMode::Sequence => prescribed_curvature_sequence(&yp, &mesh, eps, &window, ctx.sc.solver.count, &opts)?,
    };
    for (k, r) in runs.iter().enumerate() {
        let name = if runs.len() == 1 { "conformal.csv".to_string() } else { format!("conformal_{k}.csv") };
        write_function(&ctx.out.join(name), &mesh, &[("u", &r.solve.solution)])?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        subcriticality: ConformalSubcriticality,
        runs: &'a [ConformalReport],
    }
    ctx.json(&Out { subcriticality: class, runs: &runs })
}
