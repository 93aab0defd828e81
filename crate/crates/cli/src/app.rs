//! `run` and `check` commands.

use std::fs;
use std::path::{Path, PathBuf};

use memkernel::classical::{classical_kernel_laplace, solve_classical};
use memkernel::pairs::{check_convergence, check_legitimate, default_tr_tol};
use memkernel::solver::{evolve_state, nz_kernel_laplace, solve, solve_series, solve_volterra, SolveSpec};
use memkernel::superop::default_psd_tol;
use memkernel::{ClassicalPair64, LegitimacyReport, MapFamily64, Method, TimeGrid64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{build_model, Model, QuantumModel, RunConfig, DEFAULT_SERIES_ORDER};
use crate::error::CliError;
use crate::report::*;

/// Command-line overrides shared by both commands.
#[derive(Debug, Clone, Default)]
pub struct Options {
    /// `volterra`, `series:M`, `inhomogeneous` or `all`.
    pub method: Option<String>,
    /// Directory that relative output paths are resolved against.
    pub out_dir: Option<PathBuf>,
    /// PSD tolerance for the certification checks.
    pub tol: Option<f64>,
    /// Seed for `random` states and channels.
    pub seed: u64,
}

/// What a successful command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub written: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
enum Selection {
    One(Method),
    All,
}

fn parse_method(s: &str) -> Result<Selection, CliError> {
    if s == "all" {
        return Ok(Selection::All);
    }
    s.parse()
        .map(Selection::One)
        .map_err(|_| CliError::validation(format!("unknown method `{s}`; use volterra, series:M, inhomogeneous or all")))
}

struct Prepared {
    cfg: RunConfig,
    grid: TimeGrid64,
    rng: ChaCha8Rng,
    stem: String,
}

fn prepare(config_path: &Path, opts: &Options) -> Result<(Prepared, Model), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let grid = cfg.time_grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let model = build_model(&cfg, grid, &mut rng)?;
    let stem = config_path
        .file_stem()
        .map_or_else(|| "memkernel".to_string(), |s| s.to_string_lossy().into_owned());
    Ok((
        Prepared {
            cfg,
            grid,
            rng,
            stem,
        },
        model,
    ))
}

fn grid_report(g: &TimeGrid64) -> GridReport {
    GridReport {
        t_max: g.t_max(),
        n_steps: g.n_steps(),
        dt: g.dt(),
    }
}

fn psd_tol(opts: &Options, d: usize) -> Result<f64, CliError> {
    match opts.tol {
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(CliError::validation(format!("--tol must be positive, got {t}"))),
        None => Ok(default_psd_tol(d)),
    }
}

fn uncertified_note(r: &LegitimacyReport<f64>) -> Option<String> {
    if r.verdict {
        return None;
    }
    let failed: Vec<&str> = [
        (r.cp_n, "cp_N"),
        (r.cp_q, "cp_Q"),
        (r.initial_identity, "initial_identity"),
        (r.tr_residual_max <= r.tol_tr, "trace_condition"),
        (r.monotone, "monotone"),
    ]
    .iter()
    .filter(|(ok, _)| !ok)
    .map(|(_, name)| *name)
    .collect();
    Some(format!(
        "not certified (failed: {}). The legitimate-pair conditions are sufficient but not necessary; \
         the dynamics may still be CPTP, see the solution diagnostics.",
        failed.join(", ")
    ))
}

fn quantum_check(q: &QuantumModel, p: &Prepared, opts: &Options, command: &'static str) -> Result<QuantumReport, CliError> {
    let pair = &q.pair;
    let tol = psd_tol(opts, pair.dim())?;
    let legitimacy = check_legitimate(pair, tol, default_tr_tol(&p.grid));
    let s_list = p.cfg.s_list()?;
    let convergence = check_convergence(pair, &s_list, tol).map_err(|e| CliError::from_core(e, "convergence"))?;
    let memory_kernel = s_list
        .iter()
        .map(|&s| match nz_kernel_laplace(pair, s) {
            Ok(k) => KernelLaplaceReport {
                s,
                trace_residual: Some(k.trace_residual),
                condition: Some(k.condition),
                error: None,
            },
            Err(e) => KernelLaplaceReport {
                s,
                trace_residual: None,
                condition: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(QuantumReport {
        command,
        model: p.cfg.model.name(),
        label: pair.label().to_string(),
        dim: pair.dim(),
        grid: grid_report(&p.grid),
        note: uncertified_note(&legitimacy),
        legitimacy,
        convergence,
        memory_kernel,
        solutions: Vec::new(),
        solver_gaps: Vec::new(),
        skipped: Vec::new(),
    })
}

fn solve_one(q: &QuantumModel, method: Method) -> Result<(MapFamily64, Option<f64>), CliError> {
    let ctx = method.to_string();
    match method {
        Method::Series(m) => {
            let s = solve_series(&q.pair, m).map_err(|e| CliError::from_core(e, &ctx))?;
            Ok((s.lambda, Some(s.tail_norm)))
        }
        Method::Volterra => Ok((
            solve_volterra(&q.pair).map_err(|e| CliError::from_core(e, &ctx))?,
            None,
        )),
        Method::Inhomogeneous => {
            let mut spec = SolveSpec::new(q.pair.clone(), method);
            if let Some((k, src)) = &q.kernel {
                spec = spec.with_kernel(k.clone(), src.clone());
            }
            Ok((solve(&spec).map_err(|e| CliError::from_core(e, &ctx))?, None))
        }
    }
}

fn max_map_trace_defect(lambda: &MapFamily64) -> f64 {
    let d = lambda.dim();
    let id = memkernel::CMat64::identity(d, d);
    lambda
        .dual_identities()
        .iter()
        .map(|x| (x - &id).norm())
        .fold(0.0, f64::max)
}

fn quantum_run(q: &QuantumModel, p: &mut Prepared, opts: &Options, sel: Selection) -> Result<(QuantumReport, Vec<u8>), CliError> {
    let mut report = quantum_check(q, p, opts, "run")?;
    let state_cfg = p
        .cfg
        .initial_state
        .clone()
        .ok_or_else(|| CliError::validation("`run` needs an initial_state"))?;
    let rho0 = state_cfg.build(q.pair.dim(), &mut p.rng, "initial state")?;

    let methods = match sel {
        Selection::One(m) => vec![m],
        Selection::All => vec![
            Method::Volterra,
            Method::Series(p.cfg.series_order.unwrap_or(DEFAULT_SERIES_ORDER)),
            Method::Inhomogeneous,
        ],
    };
    let mut solved: Vec<(Method, MapFamily64)> = Vec::new();
    let mut trajectory = None;
    for m in methods {
        let (lambda, tail) = match solve_one(q, m) {
            Ok(x) => x,
            // Without a closed-form kernel the inhomogeneous route needs
            // commuting transforms; `all` records the skip instead of failing.
            Err(e) if sel == Selection::All && m == Method::Inhomogeneous => {
                report.skipped.push(e.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let traj = evolve_state(&lambda, &rho0).map_err(|e| CliError::from_core(e, "evolution"))?;
        report.solutions.push(SolutionReport {
            method: m.to_string(),
            min_choi_eig: lambda.min_choi_eigs().into_iter().fold(f64::INFINITY, f64::min),
            max_map_trace_defect: max_map_trace_defect(&lambda),
            max_state_trace_defect: traj.diagnostics.iter().map(|d| d.trace_defect).fold(0.0, f64::max),
            series_tail_norm: tail,
        });
        if trajectory.is_none() {
            trajectory = Some(traj);
        }
        solved.push((m, lambda));
    }
    for i in 0..solved.len() {
        for j in i + 1..solved.len() {
            let gap = solved[i]
                .1
                .max_distance(&solved[j].1)
                .map_err(|e| CliError::from_core(e, "solver gap"))?;
            report.solver_gaps.push(GapReport {
                a: solved[i].0.to_string(),
                b: solved[j].0.to_string(),
                max_gap: gap,
            });
        }
    }
    let mut csv = Vec::new();
    trajectory
        .expect("at least one solver ran")
        .write_csv(&mut csv)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok((report, csv))
}

fn classical_check(c: &ClassicalPair64, p: &Prepared, command: &'static str) -> Result<ClassicalReport, CliError> {
    let tol_tr = default_tr_tol(&p.grid);
    let residual = c.tr_semi_residual();
    let verdict = c.is_nonnegative() && residual <= tol_tr;
    let note = (!verdict).then(|| {
        format!(
            "not certified (nonnegative: {}, tr_semi_residual {:e} vs tol {:e}). The conditions are sufficient but \
             not necessary; inspect the solution's column sums and minimum entry.",
            c.is_nonnegative(),
            residual,
            tol_tr
        )
    });
    let kernel_laplace = p
        .cfg
        .s_list()?
        .into_iter()
        .map(|s| match classical_kernel_laplace(c, s) {
            Ok(w) => ClassicalKernelReport {
                s,
                max_column_sum: Some(w.column_iter().map(|col| col.sum().abs()).fold(0.0, f64::max)),
                w: Some(w.row_iter().map(|r| r.iter().copied().collect()).collect()),
                error: None,
            },
            Err(e) => ClassicalKernelReport {
                s,
                w: None,
                max_column_sum: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ClassicalReport {
        command,
        model: p.cfg.model.name(),
        dim: c.dim(),
        grid: grid_report(&p.grid),
        nonnegative: c.is_nonnegative(),
        tr_semi_residual: residual,
        tol_tr,
        verdict,
        note,
        kernel_laplace,
        solution: None,
        solver_gaps: Vec::new(),
    })
}

fn classical_run(c: &ClassicalPair64, p: &Prepared, sel: Selection) -> Result<(ClassicalReport, Vec<u8>), CliError> {
    let mut report = classical_check(c, p, "run")?;
    let t = solve_classical(c).map_err(|e| CliError::from_core(e, "classical solver"))?;
    report.solution = Some(ClassicalSolutionReport {
        column_sum_defect: t.column_sum_defect(),
        min_entry: t.min_entry(),
    });
    if sel == Selection::All {
        let embedded = c.to_quantum().map_err(|e| CliError::from_core(e, "quantum embedding"))?;
        let lambda = solve_volterra(&embedded).map_err(|e| CliError::from_core(e, "embedded volterra"))?;
        let m = c.dim();
        let gap = t
            .samples
            .iter()
            .zip(lambda.samples())
            .flat_map(|(tk, lk)| {
                (0..m).flat_map(move |i| (0..m).map(move |j| (tk[(i, j)] - lk.matrix()[(i + i * m, j + j * m)].re).abs()))
            })
            .fold(0.0, f64::max);
        report.solver_gaps.push(GapReport {
            a: "classical".into(),
            b: "quantum_embedding".into(),
            max_gap: gap,
        });
    }
    let mut csv = Vec::new();
    t.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    Ok((report, csv))
}

fn resolve(opts: &Options, name: Option<&String>, fallback: String) -> PathBuf {
    let rel = PathBuf::from(name.cloned().unwrap_or(fallback));
    match &opts.out_dir {
        Some(dir) if rel.is_relative() => dir.join(rel),
        _ => rel,
    }
}

/// Write every file or none: contents go to temporary siblings first and
/// are renamed into place only once all writes succeeded.
fn write_all(files: Vec<(PathBuf, Vec<u8>)>) -> Result<Vec<PathBuf>, CliError> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (path, bytes) in files {
        let mut tmp = path.clone().into_os_string();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        let res = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .map_or(Ok(()), fs::create_dir_all)
            .and_then(|_| fs::write(&tmp, bytes));
        if let Err(e) = res {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(CliError::Io(format!("{}: {e}", path.display())));
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in &staged {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(&staged);
            return Err(CliError::Io(format!("{}: {e}", path.display())));
        }
    }
    Ok(staged.into_iter().map(|(_, p)| p).collect())
}

/// Certify the configured pair and write the report; no trajectory.
pub fn check(config_path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let (p, model) = prepare(config_path, opts)?;
    let report = match &model {
        Model::Quantum(q) => Report::Quantum(quantum_check(q, &p, opts, "check")?),
        Model::Classical(c) => Report::Classical(classical_check(c, &p, "check")?),
    };
    let path = resolve(opts, p.cfg.outputs.report_json.as_ref(), format!("{}.report.json", p.stem));
    let written = write_all(vec![(path, report.to_json().into_bytes())])?;
    Ok(Outcome { report, written })
}

/// Certify, solve and write the trajectory CSV and the report.
pub fn run(config_path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let (mut p, model) = prepare(config_path, opts)?;
    let method = opts
        .method
        .clone()
        .or_else(|| p.cfg.method.clone())
        .unwrap_or_else(|| "volterra".into());
    let sel = parse_method(&method)?;
    let (report, csv) = match &model {
        Model::Quantum(q) => {
            let (r, csv) = quantum_run(q, &mut p, opts, sel)?;
            (Report::Quantum(r), csv)
        }
        Model::Classical(c) => {
            let (r, csv) = classical_run(c, &p, sel)?;
            (Report::Classical(r), csv)
        }
    };
    let csv_path = resolve(opts, p.cfg.outputs.trajectory_csv.as_ref(), format!("{}.csv", p.stem));
    let json_path = resolve(opts, p.cfg.outputs.report_json.as_ref(), format!("{}.report.json", p.stem));
    let written = write_all(vec![(csv_path, csv), (json_path, report.to_json().into_bytes())])?;
    Ok(Outcome { report, written })
}
