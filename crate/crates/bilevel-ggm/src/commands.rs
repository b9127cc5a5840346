//! The subcommands. Each returns an [`Outcome`] and leaves exit-code policy to
//! the binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bilevel_ggm_core::metrics::estimation_error_with;
use bilevel_ggm_core::rcm::edge_counts;
use bilevel_ggm_core::{
    bic1, bic2, degrees_of_freedom, edge_confusion, edges_from_precision, generate_scenario,
    glasso_fit, glasso_kkt, majority_vote_group, mean_adjacency, rcm_fit_with, rcm_kkt, tune_with,
    Criterion, EdgeSet, GlassoOptions, LambdaTriple, RcmFit, SubjectData, SymMatrix,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::exec::PoolExecutor;
use crate::io;

pub const MANIFEST: &str = "manifest.json";
pub const FIT_REPORT: &str = "fit_report.json";
pub const TUNE_TABLE: &str = "tune_table.csv";
pub const METRICS: &str = "metrics.csv";

/// What a command reports besides its files.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// `false` when a solver stopped at its iteration limit.
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn ok() -> Self {
        Self {
            converged: true,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub lambda: LambdaTriple,
    pub criterion: Criterion,
    /// Value of `criterion`; absent for BIC2 with unequal sample sizes.
    pub bic: Option<f64>,
    pub bic1: f64,
    pub bic2: Option<f64>,
    pub df: f64,
    pub df_subjects: Vec<usize>,
    pub df_group: usize,
    pub kkt_individual: f64,
    pub kkt_group: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub group_estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlassoReport {
    pub lambda: f64,
    pub objective: f64,
    pub kkt: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_delta: f64,
}

fn executor(config: &RunConfig) -> CliResult<PoolExecutor> {
    PoolExecutor::new(config.resolved_threads()?)
}

pub fn simulate(config: &RunConfig) -> CliResult<Outcome> {
    let scenario = config.require_scenario()?;
    let truth = generate_scenario(scenario)?;
    let out = &config.output_dir;
    io::create_dir(out)?;
    for (k, d) in truth.datasets.iter().enumerate() {
        let k = k + 1;
        io::write_table(
            &out.join(format!("subject_{k}.csv")),
            d.p(),
            d.observations(),
        )?;
        io::write_edges(
            &out.join(format!("truth_subject_{k}_edges.csv")),
            &truth.individual_edges[k - 1],
        )?;
        io::write_matrix(
            &out.join(format!("truth_subject_{k}_precision.csv")),
            &truth.individual_precisions[k - 1],
        )?;
    }
    io::write_edges(&out.join("truth_group_edges.csv"), &truth.group_edges)?;
    io::write_matrix(
        &out.join("truth_group_precision.csv"),
        &truth.group_precision,
    )?;
    io::write_json(&out.join(MANIFEST), config)?;
    Ok(Outcome::ok())
}

pub fn fit(config: &RunConfig, data_dir: &Path) -> CliResult<Outcome> {
    let lambda = config.require_lambda()?;
    let subjects = io::read_subjects(data_dir)?;
    let exec = executor(config)?;
    let opts = config.solver.to_options();
    let fit = rcm_fit_with(&subjects, &lambda, &opts, None, &exec)?;
    write_fit(&config.output_dir, &fit, &subjects, config.criterion)
}

pub fn tune(config: &RunConfig, data_dir: &Path) -> CliResult<Outcome> {
    let grid = config.require_grid()?;
    let subjects = io::read_subjects(data_dir)?;
    let exec = executor(config)?;
    let opts = config.solver.to_options();
    let result = tune_with(&subjects, grid, config.criterion, &opts, &exec, true)?;

    let out = &config.output_dir;
    io::create_dir(out)?;
    let mut table = String::from("lambda1,lambda2,lambda3,bic,df,converged\n");
    for e in &result.table {
        writeln!(
            table,
            "{},{},{},{},{},{}",
            io::format_f64(e.lambda.lambda1),
            io::format_f64(e.lambda.lambda2),
            io::format_f64(e.lambda.lambda3),
            io::format_f64(e.bic),
            io::format_f64(e.df),
            e.converged
        )
        .unwrap();
    }
    let path = out.join(TUNE_TABLE);
    std::fs::write(&path, table).map_err(|e| CliError::io(&path, e))?;

    let mut outcome = write_fit(out, &result.best, &subjects, config.criterion)?;
    if !result.infeasible.is_empty() {
        outcome.warnings.push(format!(
            "skipped {} grid points with lambda2 = 0 and lambda3 > 0",
            result.infeasible.len()
        ));
    }
    if !result.best_converged {
        outcome
            .warnings
            .push("no grid point converged; best is chosen among all fits".into());
    }
    Ok(outcome)
}

fn write_fit(
    out: &Path,
    fit: &RcmFit,
    subjects: &[SubjectData],
    criterion: Criterion,
) -> CliResult<Outcome> {
    io::create_dir(out)?;
    io::write_matrix(&out.join("omega0.csv"), &fit.omega0)?;
    io::write_edges(
        &out.join("edges_group.csv"),
        &edges_from_precision(&fit.omega0),
    )?;
    for (k, omega) in fit.omegas.iter().enumerate() {
        io::write_matrix(&out.join(format!("omega_{}.csv", k + 1)), omega)?;
        io::write_edges(
            &out.join(format!("edges_subject_{}.csv", k + 1)),
            &edges_from_precision(omega),
        )?;
    }

    let covs: Vec<&SymMatrix> = subjects.iter().map(|s| s.sample_cov()).collect();
    let (kkt_individual, kkt_group) = rcm_kkt(fit, &covs)?;
    let (df_subjects, df_group) = edge_counts(fit);
    let bic1 = bic1(fit, subjects)?;
    let bic2 = bic2(fit, subjects).ok();
    let report = FitReport {
        lambda: fit.lambda,
        criterion,
        bic: match criterion {
            Criterion::Bic1 => Some(bic1),
            Criterion::Bic2 => bic2,
        },
        bic1,
        bic2,
        df: degrees_of_freedom(fit),
        df_subjects,
        df_group,
        kkt_individual,
        kkt_group,
        objective_trace: fit.objective_trace.clone(),
        iterations: fit.iterations,
        converged: fit.converged,
        group_estimated: fit.group_estimated,
    };
    io::write_json(&out.join(FIT_REPORT), &report)?;

    let mut outcome = Outcome::ok();
    if !fit.converged {
        outcome.converged = false;
        outcome.warnings.push(format!(
            "block coordinate descent stopped after {} iterations without converging",
            fit.iterations
        ));
    }
    Ok(outcome)
}

/// One row of `metrics.csv`; `None` prints as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub bic: Option<f64>,
    pub itpr: Option<f64>,
    pub ifpr: Option<f64>,
    pub gtpr: f64,
    pub gfpr: f64,
    pub frobenius: Option<f64>,
    pub l1norm: Option<f64>,
}

pub const METRICS_HEADER: &str = "method,BIC,ITPR,IFPR,GTPR,GFPR,Frobenius,L1norm";

impl MetricsRow {
    fn to_csv(&self) -> String {
        let f = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), io::format_f64);
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            f(self.bic),
            f(self.itpr),
            f(self.ifpr),
            f(Some(self.gtpr)),
            f(Some(self.gfpr)),
            f(self.frobenius),
            f(self.l1norm)
        )
    }
}

fn require(path: PathBuf) -> CliResult<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingTruth(path))
    }
}

/// Scores a fit directory against simulation truth.
///
/// The `rcm` row averages the individual rates and errors over subjects. The
/// `majority_vote` row scores the group network formed from the fitted
/// individual networks by strict majority; its individual columns are `NA`.
pub fn evaluate(
    fit_dir: &Path,
    truth_dir: &Path,
    out_dir: &Path,
    offdiag_only_norms: bool,
) -> CliResult<Vec<MetricsRow>> {
    let omega0 = io::read_matrix(&fit_dir.join("omega0.csv"))?;
    let p = omega0.dim();
    let omega_files = io::indexed_files(fit_dir, "omega_", ".csv")?;
    if omega_files.is_empty() {
        return Err(CliError::data(fit_dir, "no omega_<k>.csv files"));
    }
    let k = omega_files.len();
    let truth_files = io::indexed_files(truth_dir, "truth_subject_", "_edges.csv")?;
    if truth_files.len() != k {
        return Err(CliError::InconsistentDimensions(format!(
            "fit has {k} subjects, truth has {}",
            truth_files.len()
        )));
    }
    let truth_group = io::read_edges(&require(truth_dir.join("truth_group_edges.csv"))?, p)?;

    let (mut itpr, mut ifpr, mut frob, mut l1) = (0.0, 0.0, 0.0, 0.0);
    let mut networks: Vec<EdgeSet> = Vec::with_capacity(k);
    for (i, path) in omega_files.iter().enumerate() {
        let omega = io::read_matrix(path)?;
        if omega.dim() != p {
            return Err(CliError::InconsistentDimensions(format!(
                "{} is {}x{}, omega0.csv is {p}x{p}",
                path.display(),
                omega.dim(),
                omega.dim()
            )));
        }
        let truth_edges = io::read_edges(&truth_files[i], p)?;
        let truth_prec = io::read_matrix(&require(
            truth_dir.join(format!("truth_subject_{}_precision.csv", i + 1)),
        )?)?;
        let est = edges_from_precision(&omega);
        let c = edge_confusion(&est, &truth_edges)?;
        let (f, a) = estimation_error_with(&omega, &truth_prec, offdiag_only_norms)?;
        itpr += c.tpr;
        ifpr += c.fpr;
        frob += f;
        l1 += a;
        networks.push(est);
    }
    let kf = k as f64;
    let group = edge_confusion(&edges_from_precision(&omega0), &truth_group)?;
    let bic = match io::read_json::<FitReport>(&fit_dir.join(FIT_REPORT)) {
        Ok(r) => r.bic,
        Err(_) => None,
    };
    let vote = edge_confusion(&majority_vote_group(&networks)?, &truth_group)?;
    let rows = vec![
        MetricsRow {
            method: "rcm".into(),
            bic,
            itpr: Some(itpr / kf),
            ifpr: Some(ifpr / kf),
            gtpr: group.tpr,
            gfpr: group.fpr,
            frobenius: Some(frob / kf),
            l1norm: Some(l1 / kf),
        },
        MetricsRow {
            method: "majority_vote".into(),
            bic: None,
            itpr: None,
            ifpr: None,
            gtpr: vote.tpr,
            gfpr: vote.fpr,
            frobenius: None,
            l1norm: None,
        },
    ];

    io::create_dir(out_dir)?;
    let mut text = String::from(METRICS_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    let path = out_dir.join(METRICS);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    let freq = mean_adjacency(&networks)?;
    io::write_matrix(&out_dir.join("mean_adjacency.csv"), &freq)?;
    Ok(rows)
}

/// Single-subject graphical lasso. `input` holds a covariance matrix, or raw
/// observations when `observations` is set.
pub fn glasso(
    input: &Path,
    lambda: f64,
    observations: bool,
    opts: &GlassoOptions,
    out_dir: &Path,
) -> CliResult<Outcome> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CliError::InvalidConfig(
            "lambda must be finite and non-negative".into(),
        ));
    }
    let s = if observations {
        io::read_subject(input)?.sample_cov().clone()
    } else {
        io::read_matrix(input)?
    };
    let (omega, report) = glasso_fit(&s, lambda, opts)?;
    io::create_dir(out_dir)?;
    io::write_matrix(&out_dir.join("omega.csv"), &omega)?;
    io::write_edges(&out_dir.join("edges.csv"), &edges_from_precision(&omega))?;
    let summary = GlassoReport {
        lambda,
        objective: report.objective,
        kkt: glasso_kkt(&s, lambda, &omega)?,
        iterations: report.iterations,
        converged: report.converged,
        final_delta: report.final_delta,
    };
    io::write_json(&out_dir.join("glasso_report.json"), &summary)?;
    let mut outcome = Outcome::ok();
    if !report.converged {
        outcome.converged = false;
        outcome.warnings.push(format!(
            "graphical lasso stopped after {} sweeps without converging",
            report.iterations
        ));
    }
    Ok(outcome)
}
