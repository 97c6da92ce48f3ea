use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::marketdata::{parse_price_panel, parse_subperiod_table, DateRange, PricePanel, SubperiodTable};
use crate::metrics::{closes_to_returns, performance_summary, render_table, report_to_csv, PerformanceRow, ReturnSeries};
use crate::pairselect::Method;
use crate::sweep::{
    adaptive_backtest, best_and_averaged, grid_to_csv, sensitivity_table, sensitivity_to_csv, snap_to_grid, AdaptiveResult,
    Backtest, BlockChoice, Engine, GridEvaluator, GridOutcome, ParamGrid, RankBy, SweepError,
};
use crate::synthgen::{gen_universe, SynthConfig};
use crate::tradesim::{ledgers_to_csv, parse_ledger_csv, parse_returns_csv, returns_to_csv, CapitalBasis, CostModel, StrategyParams};

use super::{
    AdaptiveArgs, BacktestArgs, CliError, Command, DataArgs, GridArgs, GridCmdArgs, Layers, OutputSet, ReportArgs,
    SensitivityArgs, StrategyArgs, SynthArgs,
};

/// Console text plus files, produced inside the worker pool.
struct Emitted {
    stdout: String,
    outputs: OutputSet,
    manifest: Option<PathBuf>,
}

pub(super) fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let emitted = match command {
        Command::Synth(a) => synth(a)?,
        Command::Backtest(a) => {
            let ctx = Context::resolve(&a.data, &a.strategy, true)?;
            with_pool(ctx.jobs, move || backtest(ctx, a))?
        }
        Command::Grid(a) => {
            let ctx = Context::resolve(&a.data, &a.strategy, true)?;
            with_pool(ctx.jobs, move || grid(ctx, a))?
        }
        Command::Adaptive(a) => {
            let ctx = Context::resolve(&a.data, &a.strategy, true)?;
            with_pool(ctx.jobs, move || adaptive(ctx, a))?
        }
        Command::Sensitivity(a) => {
            let ctx = Context::resolve(&a.data, &a.strategy, true)?;
            with_pool(ctx.jobs, move || sensitivity(ctx, a))?
        }
        Command::Report(a) => {
            let ctx = Context::resolve(&a.data, &a.strategy, false)?;
            report(ctx, a)?
        }
    };
    if let Some(manifest) = &emitted.manifest {
        emitted.outputs.finish(manifest)?;
    }
    stdout.write_all(emitted.stdout.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    match jobs {
        None => f(),
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(f),
    }
}

fn pipeline(e: SweepError) -> CliError {
    CliError::Pipeline(e.to_string())
}

fn read_file(path: &str, err: fn(String) -> CliError) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| err(format!("cannot read {path}: {e}")))
}

fn file_name(path: &str) -> String {
    Path::new(path).file_name().map_or_else(|| path.to_string(), |n| n.to_string_lossy().into_owned())
}

/// Everything a pipeline command needs, resolved from flags, config file
/// and defaults.
struct Context {
    layers: Layers,
    panel: Option<PricePanel>,
    data_sha256: Option<String>,
    benchmark: Option<ReturnSeries>,
    benchmark_ticker: String,
    range: Option<DateRange>,
    subperiods: SubperiodTable,
    engine: Engine,
    params: StrategyParams,
    out: PathBuf,
    jobs: Option<usize>,
    notes: Vec<String>,
}

impl Context {
    fn resolve(data: &DataArgs, strategy: &StrategyArgs, needs_data: bool) -> Result<Self, CliError> {
        let layers = Layers::load(data.config.as_deref())?;
        let data_path = layers.get_opt("data", data.data.clone())?;
        let benchmark_ticker = layers.get("benchmark_ticker", data.benchmark_ticker.clone(), "MKT".to_string())?;
        let subperiods = match layers.get_opt("subperiods", data.subperiods.clone())? {
            Some(path) => parse_subperiod_table(&read_file(&path, CliError::Config)?)
                .map_err(|e| CliError::Config(format!("{path}: {e}")))?,
            None => SubperiodTable::default_table(),
        };
        let out = PathBuf::from(layers.get("out", data.out.clone(), "out".to_string())?);
        let jobs = layers.get_opt("jobs", data.jobs)?;
        layers.get("seed", data.seed, 0u64)?;

        let method = layers.get("method", strategy.method, Method::Distance)?;
        let base = StrategyParams::baseline();
        let params = StrategyParams {
            n_pairs: layers.get("pairs", strategy.pairs, base.n_pairs)?,
            threshold: layers.get("threshold", strategy.threshold, base.threshold)?,
            length_multiplier: layers.get("multiplier", strategy.multiplier, base.length_multiplier)?,
            confidence: layers.get("confidence", strategy.confidence, base.confidence)?,
            lag: layers.get("lag", strategy.lag, base.lag)?,
            allow_reentry: layers.get("reentry", strategy.reentry, base.allow_reentry)?,
        };
        params.validate().map_err(CliError::Config)?;
        let mut costs = CostModel::from_table(subperiods.clone());
        if let Some(bps) = layers.get_opt("cost_bps", strategy.cost_bps)? {
            costs = costs.with_flat_bps(bps);
        }
        if let Some(fee) = layers.get_opt("short_fee", strategy.short_fee)? {
            costs = costs.with_short_fee(fee);
        }
        costs.validate().map_err(CliError::Config)?;
        let engine = Engine {
            method,
            costs,
            basis: layers.get("capital_basis", strategy.capital_basis, CapitalBasis::Committed)?,
            rank_by: RankBy::Return,
            exhaustive: layers.get("exhaustive", strategy.exhaustive, false)?,
            max_lag: layers.get_opt("max_lag", strategy.max_lag)?,
        };
        let start = layers.get_opt("start", data.start)?;
        let end = layers.get_opt("end", data.end)?;

        let mut notes = vec![match engine.basis {
            CapitalBasis::Committed => format!("returns on committed capital: {} equal pair slots per cycle", params.n_pairs),
            CapitalBasis::Employed => "returns on employed capital: pairs holding a position that day".to_string(),
        }];
        notes.push("sharpe = mean / std of monthly returns x sqrt(12), zero risk-free rate".into());

        let mut ctx = Context {
            layers,
            panel: None,
            data_sha256: None,
            benchmark: None,
            benchmark_ticker,
            range: None,
            subperiods,
            engine,
            params,
            out,
            jobs,
            notes,
        };
        match data_path {
            Some(path) => ctx.load_data(&path, start, end)?,
            None if needs_data => return Err(CliError::Config("--data is required".into())),
            None => {}
        }
        Ok(ctx)
    }

    fn load_data(
        &mut self,
        path: &str,
        start: Option<chrono::NaiveDate>,
        end: Option<chrono::NaiveDate>,
    ) -> Result<(), CliError> {
        let bytes = read_file(path, CliError::Data)?;
        let full = parse_price_panel(&bytes).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        if full.n_dates() == 0 {
            return Err(CliError::Data(format!("{path}: no observations")));
        }
        let (panel, bench) = full.split_off(&self.benchmark_ticker);
        match bench {
            Some(closes) => {
                self.benchmark = Some(closes_to_returns(panel.dates(), &closes).map_err(|e| CliError::Data(e.to_string()))?);
            }
            None => self.notes.push(format!("benchmark {} not in data: excess is measured against zero", self.benchmark_ticker)),
        }
        let range = DateRange::new(
            start.unwrap_or(panel.dates()[0]),
            end.unwrap_or(*panel.dates().last().expect("non-empty")),
        );
        if range.start > range.end {
            return Err(CliError::Config(format!("start {} is after end {}", range.start, range.end)));
        }
        self.data_sha256 = Some(super::sha256_hex(&bytes));
        self.panel = Some(panel);
        self.range = Some(range);
        Ok(())
    }

    fn panel(&self) -> &PricePanel {
        self.panel.as_ref().expect("data loaded")
    }

    fn range(&self) -> DateRange {
        self.range.expect("data loaded")
    }

    fn scenario(&self, name: &str) -> String {
        format!("{}-{name}", self.engine.method)
    }

    fn run_record(&self, command: &str) -> serde_json::Value {
        let mut config = self.layers.resolved();
        for key in ["config", "data", "out", "subperiods", "returns", "ledger"] {
            if let Some(v) = config.get_mut(key) {
                if !v.is_empty() {
                    *v = file_name(v);
                }
            }
        }
        json!({"kind": "run", "command": command, "config": config, "data_sha256": self.data_sha256})
    }

    fn summarize(&self, returns: &ReturnSeries, scenario: &str, trade_dates: &[chrono::NaiveDate]) -> Result<Vec<PerformanceRow>, CliError> {
        performance_summary(returns, self.benchmark.as_ref(), scenario, &self.subperiods, trade_dates)
            .map_err(|e| CliError::Report(e.to_string()))
    }

    fn table(&self, rows: &[PerformanceRow], extra: &[String]) -> String {
        let mut notes = self.notes.clone();
        notes.extend_from_slice(extra);
        if rows.iter().any(|r| r.sharpe_degenerate) {
            notes.push("inf / 0 sharpe marks zero dispersion of monthly returns".into());
        }
        render_table(rows, &notes)
    }

    fn resolve_grid(&self, args: &GridArgs) -> Result<(ParamGrid, usize), CliError> {
        let d = ParamGrid::default();
        let grid = ParamGrid {
            n_pairs: self.layers.get_list("grid_pairs", args.grid_pairs.clone(), d.n_pairs)?,
            thresholds: self.layers.get_list("grid_thresholds", args.grid_thresholds.clone(), d.thresholds)?,
            multipliers: self.layers.get_list("grid_multipliers", args.grid_multipliers.clone(), d.multipliers)?,
            confidences: self.layers.get_list("grid_confidences", args.grid_confidences.clone(), d.confidences)?,
            lags: vec![self.params.lag],
            allow_reentry: self.params.allow_reentry,
        };
        for p in grid.points(self.engine.method) {
            p.validate().map_err(|e| CliError::Config(format!("grid point: {e}")))?;
        }
        let top_k = self.layers.get("top_k", args.top_k, 3usize)?;
        if top_k == 0 {
            return Err(CliError::Config("top_k must be at least 1".into()));
        }
        Ok((grid, top_k))
    }

    fn rank_by(&mut self, args: &GridArgs) -> Result<(), CliError> {
        self.engine.rank_by = self.layers.get("rank_by", args.rank_by, RankBy::Return)?;
        Ok(())
    }

    fn evaluator(&self, grid: &ParamGrid) -> GridEvaluator<'_> {
        let max_pairs = grid.max_pairs().max(self.params.n_pairs);
        let min_conf = grid.min_confidence(self.engine.method).min(self.params.confidence);
        GridEvaluator::new(self.panel(), self.engine.clone(), max_pairs, min_conf)
    }

    /// Subperiod rows clipped to the data range, dropping rows outside it.
    fn subperiod_ranges(&self) -> Vec<(String, DateRange)> {
        let range = self.range();
        self.subperiods
            .rows()
            .iter()
            .zip(self.subperiods.ranges())
            .filter_map(|(row, r)| {
                let clipped = DateRange::new(r.start.max(range.start), r.end.min(range.end));
                (clipped.start <= clipped.end).then(|| (row.label.clone(), clipped))
            })
            .collect()
    }
}

fn params_json(p: &StrategyParams) -> serde_json::Value {
    json!({
        "n_pairs": p.n_pairs,
        "threshold": p.threshold,
        "multiplier": p.length_multiplier,
        "confidence": p.confidence,
        "lag": p.lag,
        "reentry": p.allow_reentry,
    })
}

fn grid_records(out: &mut OutputSet, outcome: &GridOutcome, evaluated_on: &str) {
    for (rank, r) in outcome.results.iter().enumerate() {
        out.record(json!({"kind": "grid_point", "window": evaluated_on, "status": "ok", "rank": rank + 1, "params": params_json(&r.params)}));
    }
    for f in &outcome.failures {
        out.record(json!({"kind": "grid_point", "window": evaluated_on, "status": "failed", "reason": f.reason, "params": params_json(&f.params)}));
    }
}

fn cycles_csv(run: &Backtest) -> String {
    let mut out = String::from("formation_start,trading_start,trading_end,pair\n");
    for c in &run.cycles {
        for p in &c.pairs {
            let _ = writeln!(out, "{},{},{},{p}", c.formation_start, c.trading_start, c.trading_end);
        }
    }
    out
}

fn backtest(ctx: Context, _args: BacktestArgs) -> Result<Emitted, CliError> {
    let evaluator = GridEvaluator::new(ctx.panel(), ctx.engine.clone(), ctx.params.n_pairs, ctx.params.confidence);
    let run = evaluator.evaluate(&ctx.params, ctx.range(), false, &ctx.engine.costs).map_err(pipeline)?;
    let rows = ctx.summarize(&run.returns, &ctx.scenario("base"), &run.trade_dates)?;

    let mut out = OutputSet::default();
    out.record(ctx.run_record("backtest"));
    for c in run.cycles.iter().filter(|c| c.note.is_some()) {
        out.record(json!({"kind": "cycle", "trading_start": c.trading_start.to_string(), "note": c.note}));
    }
    out.add(ctx.out.join("returns.csv"), returns_to_csv(run.returns.dates(), run.returns.returns()));
    out.add(ctx.out.join("ledger.csv"), ledgers_to_csv(&run.ledgers));
    out.add(ctx.out.join("pairs.csv"), cycles_csv(&run));
    out.add(ctx.out.join("report.csv"), report_to_csv(&rows));
    Ok(Emitted { stdout: ctx.table(&rows, &[]), outputs: out, manifest: Some(ctx.out.join("backtest.manifest.jsonl")) })
}

fn grid(mut ctx: Context, args: GridCmdArgs) -> Result<Emitted, CliError> {
    let mut notes = Vec::new();
    ctx.rank_by(&args.grid)?;
    let (pgrid, top_k) = ctx.resolve_grid(&args.grid)?;
    let evaluator = ctx.evaluator(&pgrid);
    let costs = &ctx.engine.costs;
    let range = ctx.range();
    let mut out = OutputSet::default();
    out.record(ctx.run_record("grid"));

    let outcome = evaluator.grid(&pgrid, range, false, costs).map_err(pipeline)?;
    grid_records(&mut out, &outcome, "full");
    let base = evaluator.evaluate(&ctx.params, range, false, costs).map_err(pipeline)?;
    let mut rows = ctx.summarize(&base.returns, &ctx.scenario("base"), &base.trade_dates)?;

    // best: each subperiod traded with the parameters that were best on it
    let mut best_returns = ReturnSeries::empty();
    let mut best_trades = Vec::new();
    let mut best_csv = String::from("subperiod,start,end,n_pairs,threshold,multiplier,confidence,lag,mean_monthly,sharpe\n");
    for (label, sub) in ctx.subperiod_ranges() {
        let sub_outcome = evaluator.grid(&pgrid, sub, false, costs).map_err(pipeline)?;
        grid_records(&mut out, &sub_outcome, &label);
        let Some(best) = sub_outcome.results.first() else {
            notes.push(format!("best: no grid point fits subperiod {label}"));
            continue;
        };
        let run = evaluator.evaluate(&best.params, sub, false, costs).map_err(pipeline)?;
        best_returns.extend(&run.returns).map_err(|e| CliError::Pipeline(e.to_string()))?;
        best_trades.extend(run.trade_dates);
        let p = &best.params;
        let _ = writeln!(
            best_csv,
            "{label},{},{},{},{},{},{},{},{},{}",
            sub.start, sub.end, p.n_pairs, p.threshold, p.length_multiplier, p.confidence, p.lag, best.mean_monthly, best.sharpe
        );
    }
    if !best_returns.is_empty() {
        rows.extend(ctx.summarize(&best_returns, &ctx.scenario("best"), &best_trades)?);
    }

    match best_and_averaged(&outcome.results, top_k) {
        Ok((best, avg)) => {
            let snapped = snap_to_grid(&avg, &pgrid, ctx.engine.method);
            out.record(json!({
                "kind": "averaged",
                "top_k": top_k,
                "best": params_json(&best.params),
                "averaged": {"n_pairs": avg.n_pairs, "threshold": avg.threshold, "multiplier": avg.multiplier, "confidence": avg.confidence, "lag": avg.lag},
                "snapped": params_json(&snapped),
            }));
            let fine = evaluator.evaluate(&snapped, range, false, costs).map_err(pipeline)?;
            rows.extend(ctx.summarize(&fine.returns, &ctx.scenario("finetuned"), &fine.trade_dates)?);
        }
        Err(e) => notes.push(format!("finetuned: {e}")),
    }

    out.add(ctx.out.join("grid.csv"), grid_to_csv(&outcome.results));
    out.add(ctx.out.join("best_by_subperiod.csv"), best_csv);
    out.add(ctx.out.join("report.csv"), report_to_csv(&rows));
    Ok(Emitted { stdout: ctx.table(&rows, &notes), outputs: out, manifest: Some(ctx.out.join("grid.manifest.jsonl")) })
}

fn blocks_csv(result: &AdaptiveResult) -> String {
    let mut out = String::from("block_start,block_end,choice,tuned_start,tuned_end,n_pairs,threshold,multiplier,confidence,lag\n");
    for b in &result.blocks {
        let (choice, on) = match &b.choice {
            BlockChoice::Baseline => ("baseline", None),
            BlockChoice::Tuned { on } => ("tuned", Some(on)),
            BlockChoice::Fallback { on } => ("fallback", Some(on)),
        };
        let (ts, te) = on.map_or((String::new(), String::new()), |r| (r.start.to_string(), r.end.to_string()));
        let p = &b.params;
        let _ = writeln!(
            out,
            "{},{},{choice},{ts},{te},{},{},{},{},{}",
            b.range.start, b.range.end, p.n_pairs, p.threshold, p.length_multiplier, p.confidence, p.lag
        );
    }
    out
}

fn adaptive(mut ctx: Context, args: AdaptiveArgs) -> Result<Emitted, CliError> {
    ctx.rank_by(&args.grid)?;
    let (pgrid, _) = ctx.resolve_grid(&args.grid)?;
    let months = ctx.layers.get("retune_months", args.retune_months, 24u32)?;
    let evaluator = ctx.evaluator(&pgrid);
    let result = adaptive_backtest(&evaluator, &pgrid, &ctx.params, ctx.range(), months).map_err(pipeline)?;
    let rows = ctx.summarize(&result.returns, &ctx.scenario("adaptive"), &result.trade_dates)?;

    let mut out = OutputSet::default();
    out.record(ctx.run_record("adaptive"));
    for b in &result.blocks {
        out.record(json!({
            "kind": "block",
            "start": b.range.start.to_string(),
            "end": b.range.end.to_string(),
            "params": params_json(&b.params),
            "failed_grid_points": b.failures,
        }));
    }
    out.add(ctx.out.join("returns.csv"), returns_to_csv(result.returns.dates(), result.returns.returns()));
    out.add(ctx.out.join("ledger.csv"), ledgers_to_csv(&result.ledgers));
    out.add(ctx.out.join("blocks.csv"), blocks_csv(&result));
    out.add(ctx.out.join("report.csv"), report_to_csv(&rows));
    Ok(Emitted { stdout: ctx.table(&rows, &[]), outputs: out, manifest: Some(ctx.out.join("adaptive.manifest.jsonl")) })
}

fn sensitivity(mut ctx: Context, args: SensitivityArgs) -> Result<Emitted, CliError> {
    ctx.rank_by(&args.grid)?;
    let (pgrid, top_k) = ctx.resolve_grid(&args.grid)?;
    let lags = ctx.layers.get_list("lags", args.lags.clone(), vec![0usize, 1])?;
    let levels = ctx.layers.get_list("cost_levels", args.cost_levels.clone(), vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0])?;
    if levels.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(CliError::Config("cost levels must be non-negative".into()));
    }
    let subs = ctx.subperiod_ranges();
    if subs.is_empty() {
        return Err(CliError::Config("no subperiod overlaps the data range".into()));
    }
    let evaluator = ctx.evaluator(&pgrid);
    let table = sensitivity_table(&evaluator, &pgrid, &lags, &levels, &subs, top_k).map_err(pipeline)?;

    let mut out = OutputSet::default();
    out.record(ctx.run_record("sensitivity"));
    let mut text = String::new();
    for c in &table.cells {
        out.record(json!({"kind": "cell", "lag": c.lag, "cost_bps": c.cost_bps, "used": c.used, "skipped": c.skipped}));
        if !c.skipped.is_empty() {
            let _ = writeln!(text, "note: lag {} cost {}: skipped {}", c.lag, c.cost_bps, c.skipped.join(", "));
        }
    }
    let csv = sensitivity_to_csv(&table);
    out.add(ctx.out.join("sensitivity.csv"), csv.clone());
    Ok(Emitted { stdout: csv + &text, outputs: out, manifest: Some(ctx.out.join("sensitivity.manifest.jsonl")) })
}

fn report(ctx: Context, args: ReportArgs) -> Result<Emitted, CliError> {
    if args.show_config {
        ctx.layers.get_opt("returns", args.returns.clone())?;
        ctx.layers.get_opt("ledger", args.ledger.clone())?;
        ctx.layers.get("scenario", args.scenario.clone(), "strategy".to_string())?;
        let text = format!("{}\n{}", ctx.layers.render(), ctx.subperiods.to_csv_string());
        return Ok(Emitted { stdout: text, outputs: OutputSet::default(), manifest: None });
    }
    let path = ctx.layers.get_opt("returns", args.returns.clone())?.ok_or_else(|| CliError::Config("--returns is required".into()))?;
    let (dates, values) =
        parse_returns_csv(&read_file(&path, CliError::Report)?).map_err(|e| CliError::Report(format!("{path}: {e}")))?;
    let returns = ReturnSeries::new(dates, values).map_err(|e| CliError::Report(format!("{path}: {e}")))?;
    let mut trade_dates = Vec::new();
    if let Some(ledger) = ctx.layers.get_opt("ledger", args.ledger.clone())? {
        let rows = parse_ledger_csv(&read_file(&ledger, CliError::Report)?).map_err(|e| CliError::Report(format!("{ledger}: {e}")))?;
        trade_dates = rows.iter().filter(|r| r.action.starts_with("open")).map(|r| r.date).collect();
        trade_dates.sort();
    }
    let scenario = ctx.layers.get("scenario", args.scenario.clone(), "strategy".to_string())?;
    let rows = ctx.summarize(&returns, &scenario, &trade_dates)?;
    let mut out = OutputSet::default();
    out.record(ctx.run_record("report"));
    out.add(ctx.out.join("summary.csv"), report_to_csv(&rows));
    Ok(Emitted { stdout: ctx.table(&rows, &[]), outputs: out, manifest: Some(ctx.out.join("report.manifest.jsonl")) })
}

fn synth(args: SynthArgs) -> Result<Emitted, CliError> {
    let layers = Layers::load(args.config.as_deref())?;
    let d = SynthConfig::default();
    let bench = layers.get("benchmark_ticker", args.benchmark_ticker.clone(), "MKT".to_string())?;
    let cfg = SynthConfig {
        n_stocks: layers.get("stocks", args.stocks, d.n_stocks)?,
        n_planted_pairs: layers.get("pairs", args.pairs, d.n_planted_pairs)?,
        days: layers.get("days", args.days, d.days)?,
        hedge_ratios: layers.get_list("hedge_ratio", args.hedge_ratio.clone(), vec![1.0])?,
        ou_theta: layers.get("theta", args.theta, d.ou_theta)?,
        ou_sigma: layers.get("sigma", args.sigma, d.ou_sigma)?,
        walk_sigma: layers.get("walk_sigma", args.walk_sigma, d.walk_sigma)?,
        seed: layers.get("seed", args.seed, d.seed)?,
        start_date: layers.get("start_date", args.start_date, d.start_date)?,
        gapped_stocks: layers.get("gapped", args.gapped, d.gapped_stocks)?,
        gap_every: layers.get("gap_every", args.gap_every, d.gap_every)?,
        benchmark_ticker: (bench != "none").then_some(bench),
    };
    let path = PathBuf::from(layers.get("out", args.out.clone(), "universe.csv".to_string())?);
    let (panel, manifest) = gen_universe(&cfg).map_err(|e| CliError::Config(e.to_string()))?;

    let stem = path.file_stem().map_or_else(|| "universe".to_string(), |s| s.to_string_lossy().into_owned());
    let sibling = |suffix: &str| path.with_file_name(format!("{stem}{suffix}"));
    let mut out = OutputSet::default();
    let mut config = layers.resolved();
    if let Some(v) = config.get_mut("out") {
        *v = file_name(v);
    }
    out.record(json!({"kind": "run", "command": "synth", "config": config}));
    out.record(json!({"kind": "universe", "illiquid": manifest.illiquid, "gapped": manifest.gapped, "benchmark": manifest.benchmark}));
    out.add(&path, panel.to_csv_string());
    out.add(sibling(".pairs.csv"), manifest.to_csv_string());

    let mut text = format!("{} stocks x {} days -> {}\n", cfg.n_stocks, cfg.days, path.display());
    for p in &manifest.pairs {
        let _ = writeln!(text, "planted {}/{} beta {}", p.leg_a, p.leg_b, p.beta);
    }
    Ok(Emitted { stdout: text, outputs: out, manifest: Some(sibling(".manifest.jsonl")) })
}
