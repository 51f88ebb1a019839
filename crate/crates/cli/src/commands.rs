//! The `fit`, `demo`, `simulate` and `tails` commands.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use asymcopula::inference::{
    default_workers, fit_grid, lr_test, pseudo_observations, tail_estimate, AsymSide, BaseFamily, FitOptions,
    FitResult, Level, ModelSpec, TailEstimate,
};
use asymcopula::margins::{MarginModel, MarginOptions};
use asymcopula::sample::{reproduce_figure1, sample_model};
use asymcopula::stats::kendall_tau;
use asymcopula::tails::{
    closed_form_tails, lambda_lower_frailty_gumbel, numerical_tail_probe, FrailtyGumbelLowerTail, TailReport, TailSide,
    DEFAULT_LOWER_PROBES, DEFAULT_UPPER_PROBES,
};
use asymcopula::CopulaModel;

use crate::data::{demo_dataset, read_columns, write_pairs, Dataset};
use crate::report::{
    read_json, render_text, write_json, DataSummary, FitReport, LrRow, MarginSummary, MarginsFile, ModelRow, RunConfig,
    TailRow,
};
use crate::{
    parse_grid, parse_pair, parse_params, CliError, CliResult, Command, DemoArgs, FitArgs, GridArgs, SimulateArgs,
    TailsArgs,
};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit(args) => fit(&args).map(|_| ()),
        Command::Demo(args) => demo(&args).map(|_| ()),
        Command::Simulate(args) => simulate(&args),
        Command::Tails(args) => tails(&args).map(|_| ()),
    }
}

fn create_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn fit(args: &FitArgs) -> CliResult<FitReport> {
    let thresholds = parse_pair(&args.thresholds, "--thresholds")?;
    let dither = parse_pair(&args.dither, "--dither")?;
    let specs = parse_grid(&args.grid.grid, &args.grid.asym_side)?;
    let data = read_columns(&args.input, &args.cols)?;
    run_fit(
        "fit",
        Some(args.input.display().to_string()),
        &data,
        thresholds,
        dither,
        &specs,
        &args.grid,
    )
}

pub fn demo(args: &DemoArgs) -> CliResult<FitReport> {
    let thresholds = parse_pair(&args.thresholds, "--thresholds")?;
    let dither = parse_pair(&args.dither, "--dither")?;
    let specs = parse_grid(&args.grid.grid, &args.grid.asym_side)?;
    let data = demo_dataset(args.n, args.grid.seed)?;
    create_out(&args.grid.out)?;
    write_pairs(&args.grid.out.join("demo_data.csv"), ["Hs", "Ws"], &data.pairs)?;
    run_fit("demo", None, &data, thresholds, dither, &specs, &args.grid)
}

/// Margins, pseudo-observations, the model grid, LR tests and tail indices;
/// writes `report.json`, `report.txt` and `margins.json` into the output directory.
pub fn run_fit(
    command: &str,
    input: Option<String>,
    data: &Dataset,
    thresholds: [f64; 2],
    dither: [f64; 2],
    specs: &[ModelSpec],
    grid: &GridArgs,
) -> CliResult<FitReport> {
    let xs: Vec<f64> = data.pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = data.pairs.iter().map(|p| p.1).collect();
    let mut margins = Vec::with_capacity(2);
    for (i, col) in [&xs, &ys].into_iter().enumerate() {
        let opts = MarginOptions {
            threshold_quantile: thresholds[i],
            dither_halfwidth: dither[i],
            seed: grid.seed.wrapping_add(i as u64),
        };
        let m = MarginModel::fit(col, opts)
            .map_err(|e| CliError::Config(format!("margin of column '{}': {e}", data.columns[i])))?;
        margins.push(m);
    }
    let pseudo = pseudo_observations(&data.pairs, &margins[0], &margins[1]).pairs;

    let workers = default_workers();
    let fits = fit_grid(&pseudo, specs, &FitOptions::default(), workers);
    let mut rows: Vec<(ModelSpec, Result<FitResult, String>)> = fits
        .into_iter()
        .map(|(s, r)| (s, r.map_err(|e| e.to_string())))
        .collect();
    rows.sort_by_key(|r| r.0);

    let lookup = |spec: ModelSpec| rows.iter().find(|r| r.0 == spec).and_then(|r| r.1.as_ref().ok());
    let mut lr_tests = Vec::new();
    let mut tails = Vec::new();
    for (spec, res) in &rows {
        let Ok(full) = res else { continue };
        if let Some(restricted) = spec.restricted().and_then(lookup) {
            if let Ok(test) = lr_test(restricted, full) {
                lr_tests.push(LrRow {
                    restricted: restricted.spec.to_string(),
                    full: spec.to_string(),
                    test,
                });
            }
        }
        if spec.level == Level::Base && spec.family != BaseFamily::Plackett {
            if let Some(row) = tail_row(full) {
                tails.push(row);
            }
        }
    }
    let best_bic = rows
        .iter()
        .filter_map(|(s, r)| r.as_ref().ok().filter(|f| f.bic.is_finite()).map(|f| (s, f.bic)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(s, _)| s.to_string());

    let report = FitReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: RunConfig {
            command: command.to_string(),
            input,
            columns: data.columns.clone(),
            thresholds,
            dither,
            grid: specs.iter().map(ToString::to_string).collect(),
            seed: grid.seed,
            workers,
        },
        data: DataSummary {
            source: data.source.clone(),
            n_rows: data.n_rows,
            n_dropped: data.n_dropped,
            n_used: data.pairs.len(),
            pseudo_tau: kendall_tau(&pseudo),
        },
        margins: margins
            .iter()
            .enumerate()
            .map(|(i, m)| MarginSummary::new(&data.columns[i], thresholds[i], m))
            .collect(),
        models: rows
            .iter()
            .map(|(s, r)| ModelRow {
                spec: s.to_string(),
                n_params: s.n_params(),
                result: r.as_ref().ok().cloned(),
                error: r.as_ref().err().cloned(),
            })
            .collect(),
        lr_tests,
        tails,
        best_bic,
    };

    create_out(&grid.out)?;
    write_json(&grid.out.join("report.json"), &report)?;
    let text = render_text(&report);
    std::fs::write(grid.out.join("report.txt"), &text)?;
    let [m1, m2]: [MarginModel; 2] = margins.try_into().expect("two margins");
    write_json(
        &grid.out.join("margins.json"),
        &MarginsFile {
            columns: data.columns.clone(),
            margins: [m1, m2],
        },
    )?;
    print!("{text}");

    if report.models.iter().all(|m| m.result.is_none()) {
        let reasons: Vec<String> = report
            .models
            .iter()
            .map(|m| format!("{}: {}", m.spec, m.error.as_deref().unwrap_or("?")))
            .collect();
        return Err(CliError::Numeric(format!(
            "every model failed ({})",
            reasons.join("; ")
        )));
    }
    Ok(report)
}

fn tail_row(fit: &FitResult) -> Option<TailRow> {
    match tail_estimate(fit) {
        Ok(TailEstimate { lambda, stderr }) => Some(TailRow {
            spec: fit.spec.to_string(),
            lambda_upper: lambda,
            stderr: Some(stderr),
        }),
        Err(_) => closed_form_tails(&fit.model)
            .and_then(|t| t.lambda_upper)
            .map(|l| TailRow {
                spec: fit.spec.to_string(),
                lambda_upper: l,
                stderr: None,
            }),
    }
}

fn parse_spec(text: &str) -> CliResult<ModelSpec> {
    Ok(text.parse::<ModelSpec>()?)
}

fn build_model(spec: &ModelSpec, params: Option<&str>) -> CliResult<CopulaModel> {
    let text = params.ok_or_else(|| {
        CliError::Config(format!(
            "--params is required for {spec} ({})",
            spec.param_names().join(", ")
        ))
    })?;
    let values = parse_params(text)?;
    Ok(spec.build(&values)?)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    create_out(&args.out)?;
    if args.figure1 {
        return figure1(args);
    }
    let spec = parse_spec(args.model.as_deref().unwrap_or_default())?;
    let model = build_model(&spec, args.params.as_deref())?;
    let margins: Option<MarginsFile> = args.margins.as_deref().map(read_json).transpose()?;
    let header = match &margins {
        Some(m) => [m.columns[0].as_str(), m.columns[1].as_str()],
        None => ["u", "v"],
    };
    let pairs = if args.n == 0 {
        vec![]
    } else {
        let set = sample_model(args.n, &model, args.seed)?;
        eprintln!("sampled {} pairs from {} via {}", set.len(), model, set.method);
        for d in &set.diagnostics {
            eprintln!("  {d}");
        }
        match &margins {
            Some(m) => set
                .pairs
                .iter()
                .map(|&(u, v)| (m.margins[0].quantile(u), m.margins[1].quantile(v)))
                .collect(),
            None => set.pairs,
        }
    };
    write_pairs(&args.out.join("samples.csv"), header, &pairs)?;
    if let Some(m) = args.surface {
        write_surface(&args.out.join("surface.csv"), &model, m)?;
    }
    Ok(())
}

fn write_surface(path: &Path, model: &CopulaModel, m: usize) -> CliResult<()> {
    if m == 0 {
        return Err(CliError::Config("--surface needs at least one grid point".into()));
    }
    let mut text = String::from("u,v,cdf,density\n");
    for i in 0..m {
        let u = (i as f64 + 0.5) / m as f64;
        for j in 0..m {
            let v = (j as f64 + 0.5) / m as f64;
            let d = model.density(u, v)?;
            let _ = writeln!(text, "{u},{v},{},{d}", model.cdf(u, v));
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Figure1Summary<'a> {
    seed: u64,
    alpha: f64,
    delta: f64,
    beta: f64,
    models: Vec<String>,
    tau_hat: [f64; 3],
    tau_model: [f64; 3],
    tau_bound: f64,
    files: [&'a str; 3],
}

fn figure1(args: &SimulateArgs) -> CliResult<()> {
    let fig = reproduce_figure1(args.seed)?;
    let files = ["figure1_a.csv", "figure1_b.csv", "figure1_c.csv"];
    for (set, file) in fig.sets.iter().zip(files) {
        write_pairs(&args.out.join(file), ["u", "v"], &set.pairs)?;
    }
    let summary = Figure1Summary {
        seed: args.seed,
        alpha: fig.alpha,
        delta: fig.delta,
        beta: fig.beta,
        models: fig.models.iter().map(ToString::to_string).collect(),
        tau_hat: fig.tau_hat,
        tau_model: fig.tau_model,
        tau_bound: fig.tau_bound,
        files,
    };
    write_json(&args.out.join("figure1.json"), &summary)?;
    for (k, file) in files.iter().enumerate() {
        println!(
            "{file}: tau_hat {:.3}  tau {:.3}  {}",
            fig.tau_hat[k], fig.tau_model[k], summary.models[k]
        );
    }
    println!(
        "delta {:.4}  beta {:.4}  tau ceiling of the two-parameter model {:.3}",
        fig.delta, fig.beta, fig.tau_bound
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailsOutput {
    pub spec: String,
    pub params: Vec<(String, f64)>,
    pub closed_form: Option<TailReport>,
    pub upper_probe: TailReport,
    pub lower_probe: TailReport,
    /// Lower-tail candidates for the frailty-mixed one-sided Gumbel.
    pub frailty_gumbel: Option<FrailtyGumbelLowerTail>,
    /// Upper index with delta-method standard error, for base fits read from a report.
    pub delta_method: Option<TailEstimate>,
}

pub fn tails(args: &TailsArgs) -> CliResult<TailsOutput> {
    let spec = parse_spec(&args.model)?;
    let (values, delta_method) = match &args.report {
        Some(path) => {
            if args.params.is_some() {
                return Err(CliError::Config("give either --params or --report, not both".into()));
            }
            let report: FitReport = read_json(path)?;
            let row = report
                .models
                .iter()
                .find(|m| m.spec.parse::<ModelSpec>().ok() == Some(spec))
                .ok_or_else(|| CliError::Config(format!("{spec} is not in {}", path.display())))?;
            let fit = row.result.as_ref().ok_or_else(|| {
                CliError::Config(format!(
                    "{spec} failed in {}: {}",
                    path.display(),
                    row.error.as_deref().unwrap_or("?")
                ))
            })?;
            (fit.values(), tail_estimate(fit).ok())
        }
        None => {
            let text = args.params.as_deref().ok_or_else(|| {
                CliError::Config(format!(
                    "--params or --report is required ({})",
                    spec.param_names().join(", ")
                ))
            })?;
            (parse_params(text)?, None)
        }
    };
    let model = spec.build(&values)?;
    let names = spec.param_names();
    let frailty_gumbel = if spec.family == BaseFamily::Gumbel && spec.level == Level::Mixed && spec.side == AsymSide::V
    {
        let get = |n: &str| values[names.iter().position(|m| *m == n).expect("parameter present")];
        Some(lambda_lower_frailty_gumbel(get("alpha"), get("delta"), get("beta"))?)
    } else {
        None
    };
    let out = TailsOutput {
        spec: spec.to_string(),
        params: names
            .iter()
            .map(|n| n.to_string())
            .zip(values.iter().copied())
            .collect(),
        closed_form: closed_form_tails(&model),
        upper_probe: numerical_tail_probe(&model, TailSide::Upper, &DEFAULT_UPPER_PROBES)?,
        lower_probe: numerical_tail_probe(&model, TailSide::Lower, &DEFAULT_LOWER_PROBES)?,
        frailty_gumbel,
        delta_method,
    };
    create_out(&args.out)?;
    write_json(&args.out.join("tails.json"), &out)?;
    print!("{}", render_tails(&out));
    Ok(out)
}

fn render_tails(t: &TailsOutput) -> String {
    let mut s = String::new();
    let params: Vec<String> = t.params.iter().map(|(n, v)| format!("{n}={v}")).collect();
    let _ = writeln!(s, "{}  {}", t.spec, params.join(" "));
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    if let Some(c) = &t.closed_form {
        let _ = writeln!(
            s,
            "closed form: lambda_U {}  lambda_L {}",
            opt(c.lambda_upper),
            opt(c.lambda_lower)
        );
    }
    if let Some(d) = &t.delta_method {
        let _ = writeln!(s, "delta method: lambda_U {:.4} (se {:.4})", d.lambda, d.stderr);
    }
    for (label, p) in [("upper", &t.upper_probe), ("lower", &t.lower_probe)] {
        let pts: Vec<String> = p.probe_points.iter().map(|(u, r)| format!("{u:e}:{r:.4}")).collect();
        let flag = if p.monotone { "" } else { "  (not monotone)" };
        let _ = writeln!(s, "{label} probe: {}{flag}", pts.join("  "));
    }
    if let Some(g) = &t.frailty_gumbel {
        let _ = writeln!(
            s,
            "frailty-gumbel lower tail: r {:.4}, alternative r {:.4}",
            g.r, g.r_alt
        );
        let _ = writeln!(
            s,
            "  r^(-1/beta) {:.4}  r^(-beta) {:.4}  alt^(-1/beta) {:.4}  alt^(-beta) {:.4}",
            g.lambda_gamma_inverse_beta, g.lambda_gamma_beta, g.lambda_alt_inverse_beta, g.lambda_alt_beta
        );
    }
    s
}
