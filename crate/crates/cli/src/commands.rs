use std::fmt;
use std::fs;

use anyhow::{Context, Result};
use demandid::evaluate::{reduction, Comparison};
use demandid::forecast::{run_forecast, ForecastOutput};
use demandid::simulate::{
    gen_cyclical, gen_lumpy, gen_stochastic, CycleShape, CyclicalSpec, LumpySpec, StochasticSpec,
};
use demandid::{
    classify_series, compare_methods, improvement_report, Cell, ClassificationReport, DemandClass,
    DemandSeries, DistError, EvalError, EvaluationColumn, EvaluationMatrix, FitState,
    ImprovementReport, MethodId, MethodOptions, RunConfig, Smoothing, SplitSpec,
};
use serde::Serialize;

use crate::config::FileConfig;
use crate::input::read_series;
use crate::report::{histogram, histogram_text, params_text, percent, Bin, Table};
use crate::{
    ClassifyArgs, ClassifyFlags, EvaluateArgs, ForecastArgs, Format, MethodArg, MethodFlags,
    Outcome, RecommendArgs, SeriesArgs, SeriesType, Shape, SimulateArgs, SplitFlags,
};

const HISTOGRAM_BINS: usize = 10;

/// The series could not be assigned a demand type; exit code 3.
#[derive(Debug)]
pub struct NotClassified(pub String);

impl fmt::Display for NotClassified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotClassified {}

fn run_config(file: &FileConfig, flags: &ClassifyFlags) -> RunConfig {
    let d = RunConfig::default();
    RunConfig {
        significance_alpha: flags
            .alpha
            .or(file.significance_alpha)
            .unwrap_or(d.significance_alpha),
        mc_replicates: flags.mc.or(file.mc_replicates).unwrap_or(d.mc_replicates),
        rng_seed: flags.seed.or(file.rng_seed).unwrap_or(d.rng_seed),
        detrend: flags.detrend || file.detrend.unwrap_or(d.detrend),
        zero_ratio_threshold: flags
            .zero_ratio_threshold
            .or(file.zero_ratio_threshold)
            .unwrap_or(d.zero_ratio_threshold),
    }
}

fn split_spec(file: &FileConfig, flags: &SplitFlags) -> SplitSpec {
    let d = SplitSpec::default();
    SplitSpec {
        holdout_fraction: flags
            .holdout
            .or(file.holdout_fraction)
            .unwrap_or(d.holdout_fraction),
        min_train_cycles: flags
            .min_train_cycles
            .or(file.min_train_cycles)
            .unwrap_or(d.min_train_cycles),
    }
}

fn method_options(file: &FileConfig, flags: &MethodFlags) -> MethodOptions {
    let hw_smoothing = match (flags.hw_alpha, flags.hw_beta, flags.hw_gamma) {
        (Some(a), Some(b), Some(g)) => Some(Smoothing::new(a, b, g)),
        _ => None,
    };
    MethodOptions {
        ses_alpha: flags.ses_alpha.or(file.ses_alpha),
        hw_smoothing,
        max_lag: flags.max_lag.or(file.max_lag),
        criterion: flags
            .criterion
            .map(Into::into)
            .or(file.criterion)
            .unwrap_or_default(),
    }
}

fn load(args: &SeriesArgs) -> Result<(FileConfig, DemandSeries)> {
    let file = FileConfig::load(args.config.as_deref())?;
    let series = read_series(&args.input, args.period.or(file.period))?;
    Ok((file, series))
}

fn label(series: &DemandSeries) -> &str {
    series.origin_label().unwrap_or("series")
}

fn series_line(series: &DemandSeries) -> String {
    format!(
        "series: {} (n = {}, period = {})\n",
        label(series),
        series.len(),
        series.period_length()
    )
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn method_from_arg(m: MethodArg) -> Option<MethodId> {
    match m {
        MethodArg::Ses => Some(MethodId::Ses),
        MethodArg::HwAdd => Some(MethodId::HoltWintersAdditive),
        MethodArg::HwMult => Some(MethodId::HoltWintersMultiplicative),
        MethodArg::Stepar => Some(MethodId::StepwiseAr),
        MethodArg::Ma => Some(MethodId::MovingAverage),
        MethodArg::Auto => None,
    }
}

fn classify_or_explain(series: &DemandSeries, cfg: &RunConfig) -> Result<ClassificationReport> {
    match classify_series(series, cfg) {
        Ok(r) => Ok(r),
        Err(DistError::AllFamiliesFailed(reasons)) => {
            let degenerate = reasons
                .iter()
                .any(|(_, e)| matches!(e, DistError::DegenerateSample));
            let detail = DistError::AllFamiliesFailed(reasons).to_string();
            let msg = if degenerate {
                format!("cannot classify {}: DegenerateSample, every value is the same ({detail})", label(series))
            } else {
                format!("cannot classify {}: {detail}", label(series))
            };
            Err(NotClassified(msg).into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome> {
    let sim = match args.kind {
        SeriesType::Cyclical => {
            let mut spec = CyclicalSpec::sawtooth(args.n, args.base, args.amplitude, args.cycle_period);
            spec.cycles[0].shape = match args.shape {
                Shape::Sawtooth => CycleShape::Sawtooth,
                Shape::Sine => CycleShape::Sine,
            };
            spec.trend_slope = args.trend;
            if let Some(sd) = args.noise_sd {
                spec.noise_sd = sd;
            }
            gen_cyclical(&spec, args.seed)
        }
        SeriesType::Stochastic => gen_stochastic(
            &StochasticSpec {
                n: args.n,
                alpha: args.ar_alpha,
                noise_sd: args.noise_sd.unwrap_or(10.0),
                mean_level: args.mean,
                y1: None,
            },
            args.seed,
        ),
        SeriesType::Lumpy => gen_lumpy(
            &LumpySpec {
                n: args.n,
                base_level: args.base_level,
                burst_scale: args.burst_scale,
                zero_prob: args.zero_prob,
            },
            args.seed,
        ),
    }?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["period", "value"])?;
    for (i, v) in sim.series.values().iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    let csv_text = String::from_utf8(w.into_inner()?)?;
    let mut notes = String::new();
    if sim.floored > 0 {
        notes.push_str(&format!("note: {} negative values were raised to 0\n", sim.floored));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, csv_text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(Outcome::ok(format!(
                "wrote {} rows to {}\n{notes}",
                sim.series.len(),
                path.display()
            )))
        }
        None => {
            if !notes.is_empty() {
                eprint!("{notes}");
            }
            Ok(Outcome::ok(csv_text))
        }
    }
}

#[derive(Serialize)]
struct ClassifyJson<'a> {
    series: &'a str,
    n: usize,
    report: &'a ClassificationReport,
    histogram: Vec<Bin>,
}

fn classification_text(report: &ClassificationReport) -> String {
    let w = &report.winning_fit;
    let mut t = Table::new(["Distribution", "Parameters", "D", "p", "Demand Type", "Rationale"]);
    t.row([
        w.family.label().to_string(),
        params_text(&w.params),
        w.ks_statistic.to_string(),
        w.p_value.to_string(),
        report.demand_class.to_string(),
        report.rationale.clone(),
    ]);
    let mut out = t.render();
    out.push_str("\nall fits, ranked by p then D:\n");
    let mut all = Table::new(["Distribution", "Parameters", "D", "p"]);
    for f in &report.all_fits {
        all.row([
            f.family.label().to_string(),
            params_text(&f.params),
            f.ks_statistic.to_string(),
            f.p_value.to_string(),
        ]);
    }
    out.push_str(&all.render());
    for (family, why) in &report.skipped {
        out.push_str(&format!("skipped {family}: {why}\n"));
    }
    out.push_str(&format!(
        "share of periods at the minimum: {}\ndetrended: {}\n",
        report.zero_ratio,
        if report.detrended { "yes" } else { "no" }
    ));
    out
}

pub fn classify(args: &ClassifyArgs) -> Result<Outcome> {
    let (file, series) = load(&args.series)?;
    let cfg = run_config(&file, &args.classify);
    let report = classify_or_explain(&series, &cfg)?;
    let bins = histogram(series.values(), HISTOGRAM_BINS);
    let stdout = match args.format {
        Format::Json => json(&ClassifyJson {
            series: label(&series),
            n: series.len(),
            report: &report,
            histogram: bins,
        })?,
        Format::Text | Format::Csv => {
            let mut out = series_line(&series);
            out.push_str(&classification_text(&report));
            out.push_str("\nhistogram:\n");
            out.push_str(&histogram_text(&bins));
            out
        }
    };
    let code = if report.demand_class == DemandClass::Unclassified { 3 } else { 0 };
    Ok(Outcome { stdout, code })
}

fn state_text(state: &FitState) -> String {
    match state {
        FitState::Ses(s) => format!("alpha={}, level={}", s.alpha, s.level),
        FitState::HoltWinters(s) => format!(
            "level_alpha={}, trend_beta={}, seasonal_gamma={}, level={}, trend={}, seasonals=[{}]",
            s.smoothing.level_alpha,
            s.smoothing.trend_beta,
            s.smoothing.seasonal_gamma,
            s.level,
            s.trend,
            s.seasonals.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
        ),
        FitState::StepwiseAr(s) => {
            let lags = if s.terms.lags.is_empty() {
                "none".to_string()
            } else {
                s.terms
                    .lags
                    .iter()
                    .map(|(k, phi)| format!("{k}:{phi}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            format!(
                "trend=[{}, {}, {}], lags={lags}",
                s.terms.trend[0], s.terms.trend[1], s.terms.trend[2]
            )
        }
        FitState::MovingAverage(s) => format!("window={}", s.window.len()),
    }
}

#[derive(Serialize)]
struct ForecastJson<'a> {
    series: &'a str,
    method: MethodId,
    auto_class: Option<DemandClass>,
    output: &'a ForecastOutput,
}

pub fn forecast(args: &ForecastArgs) -> Result<Outcome> {
    let (file, series) = load(&args.series)?;
    let options = method_options(&file, &args.methods);
    let (method, auto_class) = match method_from_arg(args.method) {
        Some(m) => (m, None),
        None => {
            let cfg = run_config(&file, &args.classify);
            let report = classify_or_explain(&series, &cfg)?;
            let table = file.auto_table()?;
            let m = table.method_for(report.demand_class).ok_or_else(|| {
                NotClassified(format!(
                    "--method auto needs a demand type, but {} is Unclassified ({})",
                    label(&series),
                    report.rationale
                ))
            })?;
            (m, Some(report.demand_class))
        }
    };
    let horizon = usize::try_from(args.horizon)?;
    let output = run_forecast(method, &series, horizon, &options)
        .with_context(|| format!("{method} is not applicable to {}", label(&series)))?;

    let stdout = match args.format {
        Format::Json => json(&ForecastJson {
            series: label(&series),
            method,
            auto_class,
            output: &output,
        })?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["step", "forecast"])?;
            for (h, v) in output.forecasts.iter().enumerate() {
                w.write_record([(h + 1).to_string(), v.to_string()])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            let mut out = series_line(&series);
            out.push_str(&format!("method: {method} ({})\n", method.description()));
            if let Some(class) = auto_class {
                out.push_str(&format!("selected automatically for {class} demand\n"));
            }
            out.push_str(&format!("parameters: {}\n", state_text(&output.final_state)));
            out.push_str(&format!("in-sample MSE: {}\n\n", output.train_mse));
            let mut t = Table::new(["step", "forecast"]);
            for (h, v) in output.forecasts.iter().enumerate() {
                t.row([(h + 1).to_string(), v.to_string()]);
            }
            out.push_str(&t.render());
            if output.floored {
                out.push_str("note: negative forecasts were raised to 0\n");
            }
            out
        }
    };
    Ok(Outcome::ok(stdout))
}

#[derive(Debug, Clone, Serialize)]
struct SeriesResult {
    series: String,
    cells: Vec<(MethodId, Cell)>,
    ranking: Vec<MethodId>,
    recommended: Option<MethodId>,
    improvement: Option<ImprovementReport>,
}

impl SeriesResult {
    fn from_column(col: &EvaluationColumn) -> Self {
        Self {
            series: col.label.clone(),
            cells: col.cells.clone(),
            ranking: col.ranking.clone(),
            recommended: Some(col.recommended),
            improvement: improvement_report(col).ok(),
        }
    }

    fn failed(series: String, why: &str, failures: Option<Vec<(MethodId, String)>>) -> Self {
        let cells = match failures {
            Some(f) => f.into_iter().map(|(m, w)| (m, Cell::Failed(w))).collect(),
            None => MethodId::ALL
                .iter()
                .map(|&m| (m, Cell::Failed(why.to_string())))
                .collect(),
        };
        Self {
            series,
            cells,
            ranking: Vec::new(),
            recommended: None,
            improvement: None,
        }
    }

    fn cell(&self, m: MethodId) -> Option<&Cell> {
        self.cells.iter().find(|(k, _)| *k == m).map(|(_, c)| c)
    }
}

#[derive(Serialize)]
struct EvaluateJson<'a> {
    holdout_fraction: f64,
    columns: &'a [SeriesResult],
    mean: Option<&'a SeriesResult>,
}

fn matrix_text(split: &SplitSpec, columns: &[SeriesResult], mean: Option<&SeriesResult>) -> String {
    let shown: Vec<&SeriesResult> = columns.iter().chain(mean).collect();
    let mut header = vec!["Method".to_string()];
    header.extend(shown.iter().map(|c| c.series.clone()));
    let mut t = Table::new(header);
    let mut notes: Vec<String> = Vec::new();
    for m in MethodId::ALL {
        let mut row = vec![format!("{} ({m})", m.description())];
        for col in &shown {
            row.push(match col.cell(m) {
                Some(Cell::Mse(v)) => v.to_string(),
                Some(Cell::Failed(why)) => {
                    notes.push(format!("{m} on {}: {why}", col.series));
                    format!("failed [{}]", notes.len())
                }
                None => "-".to_string(),
            });
        }
        t.row(row);
    }
    let mut rec = vec!["recommended".to_string()];
    rec.extend(
        shown
            .iter()
            .map(|c| c.recommended.map_or("-".to_string(), |m| m.to_string())),
    );
    t.row(rec);

    let mut out = format!(
        "holdout MSE of one-step-ahead forecasts (holdout fraction {})\n",
        split.holdout_fraction
    );
    out.push_str(&t.render());
    if !notes.is_empty() {
        out.push_str("\nfailures:\n");
        for (i, n) in notes.iter().enumerate() {
            out.push_str(&format!("  [{}] {n}\n", i + 1));
        }
    }
    let reports: Vec<(&str, &ImprovementReport)> = shown
        .iter()
        .filter_map(|c| c.improvement.as_ref().map(|r| (c.series.as_str(), r)))
        .collect();
    if !reports.is_empty() {
        out.push_str("\nimprovement of the recommended method:\n");
        for (series, r) in reports {
            out.push_str(&format!("  {series}: {}\n", improvement_line(r.recommended, &r.vs_runner_up, r.vs_baseline.as_ref())));
        }
    }
    out
}

fn comparison_text(c: &Comparison) -> String {
    format!(
        "{} lower MSE than {} (reduction {}; {} MSE {})",
        percent(c.reduction),
        c.method,
        c.reduction,
        c.method,
        c.mse
    )
}

fn improvement_line(best: MethodId, runner_up: &Comparison, baseline: Option<&Comparison>) -> String {
    let mut s = format!("{best} has {}", comparison_text(runner_up));
    if let Some(b) = baseline {
        if b.method != best && b.method != runner_up.method {
            s.push_str(&format!("; vs moving average: {}", comparison_text(b)));
        }
    }
    s
}

pub fn evaluate(args: &EvaluateArgs) -> Result<Outcome> {
    let file = FileConfig::load(args.config.as_deref())?;
    let split = split_spec(&file, &args.split);
    let options = method_options(&file, &args.methods);
    let period = args.period.or(file.period);

    let mut columns = Vec::new();
    let mut succeeded = Vec::new();
    for path in &args.inputs {
        let series = read_series(path, period)?;
        let name = label(&series).to_string();
        match compare_methods(&series, &split, &options) {
            Ok(col) => {
                columns.push(SeriesResult::from_column(&col));
                succeeded.push(col);
            }
            Err(EvalError::AllMethodsFailed(f)) => {
                columns.push(SeriesResult::failed(name, "", Some(f)));
            }
            Err(EvalError::Split(e)) => {
                columns.push(SeriesResult::failed(name, &e.to_string(), None));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mean = if args.inputs.len() > 1 && !succeeded.is_empty() {
        EvaluationMatrix::new(succeeded.clone())
            .aggregate("mean")
            .ok()
            .map(|c| SeriesResult::from_column(&c))
    } else {
        None
    };

    let stdout = match args.format {
        Format::Json => json(&EvaluateJson {
            holdout_fraction: split.holdout_fraction,
            columns: &columns,
            mean: mean.as_ref(),
        })?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["method", "series", "mse", "error"])?;
            for col in columns.iter().chain(mean.as_ref()) {
                for (m, cell) in &col.cells {
                    let (mse, err) = match cell {
                        Cell::Mse(v) => (v.to_string(), String::new()),
                        Cell::Failed(why) => (String::new(), why.clone()),
                    };
                    w.write_record([m.as_str(), &col.series, &mse, &err])?;
                }
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => matrix_text(&split, &columns, mean.as_ref()),
    };
    let code = if succeeded.is_empty() { 2 } else { 0 };
    if code != 0 {
        eprintln!("error: every method failed on every series");
    }
    Ok(Outcome { stdout, code })
}

#[derive(Serialize)]
struct RecommendJson<'a> {
    series: &'a str,
    classification: &'a ClassificationReport,
    evaluation: &'a EvaluationColumn,
    recommended: MethodId,
    source: &'a str,
    holdout_mse: f64,
    vs_runner_up: Option<Comparison>,
    vs_baseline: Option<Comparison>,
    warnings: &'a [String],
}

pub fn recommend(args: &RecommendArgs) -> Result<Outcome> {
    let (file, series) = load(&args.series)?;
    let cfg = run_config(&file, &args.classify);
    let split = split_spec(&file, &args.split);
    let options = method_options(&file, &args.methods);
    let table = file.auto_table()?;

    let report = classify_or_explain(&series, &cfg)?;
    let column = compare_methods(&series, &split, &options)?;

    let mut warnings = Vec::new();
    let from_table = table.method_for(report.demand_class);
    let (chosen, source) = match from_table {
        Some(m) if column.mse_of(m).is_some() => (m, "demand-type table"),
        Some(m) => {
            let why = match column.cell(m) {
                Some(Cell::Failed(why)) => why.clone(),
                _ => "no result".to_string(),
            };
            warnings.push(format!(
                "{m}, the table's choice for {} demand, failed ({why}); falling back to the lowest holdout MSE",
                report.demand_class
            ));
            (column.recommended, "lowest holdout MSE")
        }
        None => {
            warnings.push(
                "series is Unclassified; falling back to the lowest holdout MSE".to_string(),
            );
            (column.recommended, "lowest holdout MSE")
        }
    };
    let holdout_mse = column.mse_of(chosen).expect("chosen method has a result");
    let compare = |m: MethodId| {
        column.mse_of(m).map(|v| Comparison {
            method: m,
            mse: v,
            reduction: reduction(holdout_mse, v),
        })
    };
    let vs_runner_up = column
        .ranking
        .iter()
        .find(|&&m| m != chosen)
        .and_then(|&m| compare(m));
    let runner_up_is_ma = vs_runner_up.as_ref().map(|c| c.method) == Some(MethodId::MovingAverage);
    let vs_baseline = if chosen == MethodId::MovingAverage || runner_up_is_ma {
        None
    } else {
        compare(MethodId::MovingAverage)
    };

    let stdout = match args.format {
        Format::Json => json(&RecommendJson {
            series: label(&series),
            classification: &report,
            evaluation: &column,
            recommended: chosen,
            source,
            holdout_mse,
            vs_runner_up: vs_runner_up.clone(),
            vs_baseline: vs_baseline.clone(),
            warnings: &warnings,
        })?,
        Format::Text | Format::Csv => {
            let w = &report.winning_fit;
            let mut out = series_line(&series);
            out.push_str(&format!("demand type: {}\n", report.demand_class));
            out.push_str(&format!(
                "distribution: {} fit ({}), D = {}, p = {}\n",
                w.family,
                params_text(&w.params),
                w.ks_statistic,
                w.p_value
            ));
            out.push_str(&format!(
                "recommended method: {chosen} ({}), from the {source}\n",
                chosen.description()
            ));
            out.push_str(&format!("holdout MSE: {holdout_mse}\n"));
            if let Some(c) = &vs_runner_up {
                out.push_str(&format!("improvement vs runner-up: {}\n", comparison_text(c)));
            }
            if let Some(c) = &vs_baseline {
                out.push_str(&format!("improvement vs moving average: {}\n", comparison_text(c)));
            }
            if column.recommended != chosen {
                out.push_str(&format!(
                    "lowest holdout MSE overall: {} ({})\n",
                    column.recommended,
                    column.mse_of(column.recommended).unwrap_or(f64::NAN)
                ));
            }
            for w in &warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            out
        }
    };
    Ok(Outcome::ok(stdout))
}
