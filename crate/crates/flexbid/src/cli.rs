use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use flexbid_core::datagen::{generate_fleet, FleetConfig};
use flexbid_core::heuristics::{run_method, Method};
use flexbid_core::market::{
    dropout_analysis, evaluate, optimal_schedule, plugin_schedule, sweep_periods, OrderPolicy, TradeReport,
};
use flexbid_core::oracle::solve_exact;
use flexbid_core::{MaggConfig, PriceCurve, RegulationModel};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{self, write_bytes};
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "flexbid", version, about = "Aggregate EV flex-offers into day-ahead flexible orders")]
pub struct Cli {
    /// Directory every other path is resolved against.
    #[arg(long)]
    pub workdir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic fleet and write its flex-offers.
    Generate(GenerateArgs),
    /// Run one aggregation method over a flex-offer file.
    Aggregate(AggregateArgs),
    /// Trade the aggregates of a run and compare costs.
    Settle(SettleArgs),
    /// Run every method on one fleet and export the hourly schedules.
    Compare(CompareArgs),
    /// Settle one aggregation against every two-day window of a year.
    SweepYear(SweepArgs),
    /// Consumer price when a share of participants does not show up.
    Dropout(DropoutArgs),
    /// Exhaustive optimum for a small flex-offer file.
    Oracle(OracleArgs),
    /// Write a two-level day/night price curve.
    Prices(PricesArgs),
}

/// `first:last:step`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sizes {
    pub first: usize,
    pub last: usize,
    pub step: usize,
}

impl Sizes {
    pub fn values(&self) -> Vec<usize> {
        (self.first..=self.last).step_by(self.step).collect()
    }
}

impl FromStr for Sizes {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("{s:?}: {e}"))?;
        match nums[..] {
            [first, last, step] if step > 0 && first > 0 && first <= last => Ok(Sizes { first, last, step }),
            _ => Err(format!("{s:?} is not first:last:step with 0 < first <= last and step > 0")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, conflicts_with = "sizes", required_unless_present = "sizes")]
    pub n: Option<usize>,
    /// Fleet sizes `first:last:step`; one file per size.
    #[arg(long)]
    pub sizes: Option<Sizes>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(
        long,
        help = "Output path; the letter n in braces is replaced by the fleet size. A `.json` extension writes the JSON form"
    )]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AggregationArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lot size in kW; the tolerance follows at 5% unless given.
    #[arg(long)]
    pub lot: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_orders: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MarketArgs {
    /// Regulation price premium/discount as a fraction of spot.
    #[arg(long)]
    pub beta: Option<f64>,
    /// EUR/MWh above which orders are not activated.
    #[arg(long)]
    pub price_limit: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub fos: PathBuf,
    /// sa, sag, lp, dp or dtf.
    #[arg(long)]
    pub variant: Method,
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SettleArgs {
    #[arg(long)]
    pub fos: PathBuf,
    #[arg(long)]
    pub afos: PathBuf,
    #[arg(long)]
    pub prices: PathBuf,
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub fos: PathBuf,
    #[arg(long)]
    pub prices: PathBuf,
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value = "compare.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "compare.plot.csv")]
    pub plot: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub fos: PathBuf,
    /// 8760 hourly prices.
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long)]
    pub variant: Method,
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DropoutArgs {
    #[arg(long)]
    pub fos: PathBuf,
    #[arg(long)]
    pub afos: PathBuf,
    #[arg(long)]
    pub prices: PathBuf,
    /// Comma-separated dropout shares in [0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9")]
    pub q_grid: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value = "dropout.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub fos: PathBuf,
    /// Most alignments to evaluate before giving up.
    #[arg(long, default_value_t = 10_000_000)]
    pub budget: u64,
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    #[arg(long, default_value = "oracle.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PricesArgs {
    #[arg(long)]
    pub day: f64,
    #[arg(long)]
    pub night: f64,
    /// First night hour of the day.
    #[arg(long, default_value_t = 22)]
    pub night_start: usize,
    /// First day hour after the night.
    #[arg(long, default_value_t = 6)]
    pub night_end: usize,
    #[arg(long, default_value_t = 48)]
    pub horizon: usize,
    #[arg(long, default_value = "prices.csv")]
    pub out: PathBuf,
}

/// `fleet.csv` -> `fleet.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn resolve_config(workdir: &Path, path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(&workdir.join(p)),
        None => Ok(RunConfig::default()),
    }
}

fn aggregation_config(workdir: &Path, args: &AggregationArgs) -> Result<RunConfig> {
    let mut cfg = resolve_config(workdir, args.config.as_deref())?;
    if let Some(lot) = args.lot {
        cfg.aggregation = cfg.aggregation.with_lot(lot);
    }
    if let Some(t) = args.tolerance {
        cfg.aggregation.tolerance = t;
    }
    if let Some(k) = args.max_orders {
        cfg.aggregation.max_orders = k;
    }
    cfg.aggregation.validate()?;
    Ok(cfg)
}

fn apply_market(cfg: &mut RunConfig, args: &MarketArgs) -> Result<RegulationModel> {
    if let Some(b) = args.beta {
        cfg.market.beta = b;
    }
    if let Some(limit) = args.price_limit {
        cfg.market.price_limit = Some(limit);
    }
    if let Some(limit) = cfg.market.price_limit.filter(|l| !l.is_finite()) {
        return Err(CliError::Usage(format!("price limit {limit} must be finite")));
    }
    Ok(RegulationModel::new(cfg.market.beta)?)
}

fn policy(cfg: &RunConfig) -> OrderPolicy {
    OrderPolicy {
        price_limit: cfg.market.price_limit,
        ..OrderPolicy::from_config(&cfg.aggregation)
    }
}

fn config_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

/// Collects outputs, writes them and the manifest.
struct Run<'a> {
    workdir: &'a Path,
    manifest: RunManifest,
    started: Instant,
}

impl<'a> Run<'a> {
    fn new(workdir: &'a Path, command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Run {
            workdir,
            manifest: RunManifest::new(command, config, seed),
            started: Instant::now(),
        }
    }

    fn input(&mut self, rel: &Path) -> Result<PathBuf> {
        self.manifest.add_input(self.workdir, rel)?;
        Ok(self.workdir.join(rel))
    }

    fn output(&mut self, rel: &Path, bytes: &[u8]) -> Result<()> {
        write_bytes(&self.workdir.join(rel), bytes)?;
        self.manifest.add_output(rel, bytes);
        Ok(())
    }

    fn finish(mut self, manifest_rel: &Path) -> Result<RunManifest> {
        self.manifest.wall_ms = self.started.elapsed().as_millis();
        write_bytes(&self.workdir.join(manifest_rel), &formats::to_json(&self.manifest))?;
        Ok(self.manifest)
    }
}

pub fn run(cli: &Cli) -> Result<RunManifest> {
    let w = cli.workdir.as_path();
    match &cli.command {
        Command::Generate(a) => generate(w, a),
        Command::Aggregate(a) => aggregate(w, a),
        Command::Settle(a) => settle(w, a),
        Command::Compare(a) => compare(w, a),
        Command::SweepYear(a) => sweep_year(w, a),
        Command::Dropout(a) => dropout(w, a),
        Command::Oracle(a) => oracle(w, a),
        Command::Prices(a) => prices(w, a),
    }
}

#[derive(Serialize)]
struct FleetMeta<'a> {
    generator: String,
    seed: u64,
    config: &'a FleetConfig,
}

fn generate(workdir: &Path, args: &GenerateArgs) -> Result<RunManifest> {
    let base = resolve_config(workdir, args.config.as_deref())?.fleet;
    let sizes = match (args.n, args.sizes) {
        (Some(n), None) => vec![n],
        (None, Some(s)) => s.values(),
        _ => return Err(CliError::Usage("give exactly one of --n and --sizes".into())),
    };
    let template = args.out.clone().unwrap_or_else(|| {
        PathBuf::from(if args.sizes.is_some() { "fleet_{n}.csv" } else { "fleet.csv" })
    });
    let template_str = template.to_string_lossy().into_owned();
    if sizes.len() > 1 && !template_str.contains("{n}") {
        return Err(CliError::Usage(format!("--out {template_str:?} needs {{n}} when generating several sizes")));
    }

    let mut run = Run::new(workdir, "generate", config_json(&base), Some(args.seed));
    let mut first = None;
    for n in sizes {
        let cfg = FleetConfig { n, seed: args.seed, ..base.clone() };
        let fos = generate_fleet(&cfg)?;
        let out = PathBuf::from(template_str.replace("{n}", &n.to_string()));
        let bytes = if out.extension().is_some_and(|e| e == "json") {
            formats::offers_to_json(&fos)
        } else {
            formats::offers_to_csv(&fos)
        };
        run.output(&out, &bytes)?;
        let meta = FleetMeta {
            generator: format!("flexbid {}", env!("CARGO_PKG_VERSION")),
            seed: args.seed,
            config: &cfg,
        };
        run.output(&sibling(&out, "meta.json"), &formats::to_json(&meta))?;
        println!("{}: {} flex-offers", out.display(), fos.len());
        first.get_or_insert(out);
    }
    let first = first.expect("at least one size");
    let manifest_path = if args.sizes.is_some() {
        PathBuf::from(template_str.replace("{n}", "all")).with_extension("manifest.json")
    } else {
        sibling(&first, "manifest.json")
    };
    run.finish(&manifest_path)
}

#[derive(Serialize)]
struct AggregateStats {
    method: String,
    offers: usize,
    traded_afos: usize,
    total_afos: usize,
    leftover: usize,
    participation_pct: f64,
    traded_energy_kwh: f64,
    rounds: u64,
    comparisons: u64,
    snapshots: u64,
    dtf_fallbacks: u64,
}

fn aggregate(workdir: &Path, args: &AggregateArgs) -> Result<RunManifest> {
    let mut cfg = aggregation_config(workdir, &args.aggregation)?;
    if let Method::Magg(v) = args.variant {
        cfg.aggregation.variant = v;
    }
    let echo = json!({ "method": args.variant.name(), "aggregation": cfg.aggregation });
    let mut run = Run::new(workdir, "aggregate", echo, None);
    let fos = formats::read_offers(&run.input(&args.fos)?)?;
    let result = run_method(&fos, args.variant, &cfg.aggregation)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("afos_{}.csv", args.variant.name())));
    run.output(&out, &formats::aggregates_to_csv(&result))?;
    let stats = AggregateStats {
        method: args.variant.name().into(),
        offers: fos.len(),
        traded_afos: result.orders.len(),
        total_afos: result.all_afos.len(),
        leftover: result.leftover.len(),
        participation_pct: 100.0 * result.traded_ids().len() as f64 / fos.len() as f64,
        traded_energy_kwh: result.objective_energy(),
        rounds: result.stats.rounds,
        comparisons: result.stats.comparisons,
        snapshots: result.stats.snapshots,
        dtf_fallbacks: result.stats.dtf_fallbacks,
    };
    run.output(&sibling(&out, "stats.json"), &formats::to_json(&stats))?;
    println!(
        "{}: {} traded of {} aggregates, participation {:.1}%",
        args.variant.name(),
        stats.traded_afos,
        stats.total_afos,
        stats.participation_pct
    );
    run.finish(&sibling(&out, "manifest.json"))
}

fn settle(workdir: &Path, args: &SettleArgs) -> Result<RunManifest> {
    let mut cfg = aggregation_config(workdir, &args.aggregation)?;
    let reg = apply_market(&mut cfg, &args.market)?;
    let echo = json!({ "aggregation": cfg.aggregation, "market": cfg.market });
    let mut run = Run::new(workdir, "settle", echo, None);
    let fos = formats::read_offers(&run.input(&args.fos)?)?;
    let result = formats::read_aggregates(&run.input(&args.afos)?, &fos)?;
    let curve = formats::read_curve(&run.input(&args.prices)?)?;
    let report = evaluate(&fos, &result, &curve, &reg, &policy(&cfg))?;

    let out = args.out.clone().unwrap_or_else(|| sibling(&args.afos, "report.json"));
    let plot = args.plot.clone().unwrap_or_else(|| sibling(&args.afos, "plot.csv"));
    run.output(&out, &formats::to_json(&report))?;
    let plugin = plugin_schedule(&fos, &curve)?;
    let optimal = optimal_schedule(&fos, &curve)?;
    let series: [(&str, &[f64]); 3] = [("plugin", &plugin), ("optimal", &optimal), ("flexorder", &report.schedule)];
    run.output(&plot, &formats::plot_csv(&curve, &series))?;
    println!(
        "plug-in {:.4} EUR, flexible orders {:.4} EUR, optimal {:.4} EUR, reduction {:.2}%",
        report.plugin_cost, report.flexorder_cost, report.optimal_cost, report.cost_reduction_pct
    );
    run.finish(&sibling(&out, "manifest.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub traded_afos: usize,
    pub total_afos: usize,
    pub plugin_cost: f64,
    pub flexorder_cost: f64,
    pub optimal_cost: f64,
    pub cost_reduction_pct: f64,
    pub optimal_reduction_pct: f64,
    pub participation_pct: f64,
    pub traded_energy_pct: f64,
    pub purchase_ratio: f64,
}

impl MethodSummary {
    fn new(method: Method, total_afos: usize, r: &TradeReport) -> Self {
        MethodSummary {
            method: method.name().into(),
            traded_afos: r.orders.len(),
            total_afos,
            plugin_cost: r.plugin_cost,
            flexorder_cost: r.flexorder_cost,
            optimal_cost: r.optimal_cost,
            cost_reduction_pct: r.cost_reduction_pct,
            optimal_reduction_pct: r.optimal_reduction_pct,
            participation_pct: r.participation_pct,
            traded_energy_pct: r.traded_energy_pct,
            purchase_ratio: r.purchase_ratio(),
        }
    }
}

/// All five methods on one fleet and curve, in [`Method::ALL`] order, with their schedules.
pub fn compare_methods(
    fos: &[flexbid_core::FlexOffer],
    curve: &PriceCurve,
    cfg: &MaggConfig,
    reg: &RegulationModel,
    policy: &OrderPolicy,
) -> Result<Vec<(MethodSummary, Vec<f64>)>> {
    Method::ALL
        .iter()
        .map(|&m| {
            let result = run_method(fos, m, cfg)?;
            let report = evaluate(fos, &result, curve, reg, policy)?;
            Ok((MethodSummary::new(m, result.all_afos.len(), &report), report.schedule))
        })
        .collect()
}

fn compare(workdir: &Path, args: &CompareArgs) -> Result<RunManifest> {
    let mut cfg = aggregation_config(workdir, &args.aggregation)?;
    let reg = apply_market(&mut cfg, &args.market)?;
    let echo = json!({ "aggregation": cfg.aggregation, "market": cfg.market });
    let mut run = Run::new(workdir, "compare", echo, None);
    let fos = formats::read_offers(&run.input(&args.fos)?)?;
    let curve = formats::read_curve(&run.input(&args.prices)?)?;
    let rows = compare_methods(&fos, &curve, &cfg.aggregation, &reg, &policy(&cfg))?;

    let plugin = plugin_schedule(&fos, &curve)?;
    let optimal = optimal_schedule(&fos, &curve)?;
    let mut series: Vec<(&str, &[f64])> = vec![("plugin", &plugin), ("optimal", &optimal)];
    series.extend(rows.iter().map(|(s, sched)| (s.method.as_str(), sched.as_slice())));
    run.output(&args.plot, &formats::plot_csv(&curve, &series))?;
    let summaries: Vec<&MethodSummary> = rows.iter().map(|(s, _)| s).collect();
    run.output(&args.out, &formats::to_json(&summaries))?;
    for s in summaries {
        println!(
            "{:>4}: {} traded / {} aggregates, reduction {:.2}%, participation {:.1}%",
            s.method, s.traded_afos, s.total_afos, s.cost_reduction_pct, s.participation_pct
        );
    }
    run.finish(&sibling(&args.out, "manifest.json"))
}

fn sweep_year(workdir: &Path, args: &SweepArgs) -> Result<RunManifest> {
    let mut cfg = aggregation_config(workdir, &args.aggregation)?;
    let reg = apply_market(&mut cfg, &args.market)?;
    if let Method::Magg(v) = args.variant {
        cfg.aggregation.variant = v;
    }
    let echo = json!({ "method": args.variant.name(), "aggregation": cfg.aggregation, "market": cfg.market });
    let mut run = Run::new(workdir, "sweep-year", echo, None);
    let fos = formats::read_offers(&run.input(&args.fos)?)?;
    let prices = formats::read_prices(&run.input(&args.prices)?)?;
    let result = run_method(&fos, args.variant, &cfg.aggregation)?;
    let sweep = sweep_periods(&fos, &result, &prices, &reg, &policy(&cfg))?;
    let mut csv = String::from("period,reduction_pct\n");
    for (i, r) in sweep.reductions.iter().enumerate() {
        csv.push_str(&format!("{i},{r}\n"));
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("sweep_{}.csv", args.variant.name())));
    run.output(&out, csv.as_bytes())?;
    println!("{} periods, mean reduction {:.2}%", sweep.reductions.len(), sweep.mean_reduction);
    run.finish(&sibling(&out, "manifest.json"))
}

fn dropout(workdir: &Path, args: &DropoutArgs) -> Result<RunManifest> {
    let mut cfg = aggregation_config(workdir, &args.aggregation)?;
    let reg = apply_market(&mut cfg, &args.market)?;
    let echo = json!({ "aggregation": cfg.aggregation, "market": cfg.market, "q_grid": args.q_grid });
    let mut run = Run::new(workdir, "dropout", echo, Some(args.seed));
    let fos = formats::read_offers(&run.input(&args.fos)?)?;
    let result = formats::read_aggregates(&run.input(&args.afos)?, &fos)?;
    let curve = formats::read_curve(&run.input(&args.prices)?)?;
    let table = dropout_analysis(&fos, &result, &curve, &reg, &policy(&cfg), &args.q_grid, args.seed)?;
    let mut csv = String::from("q,dropped,flexible_eur_kwh,plugin_eur_kwh\n");
    for r in &table.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.q, r.dropped, r.flexible_price, r.plugin_price));
    }
    run.output(&args.out, csv.as_bytes())?;
    match table.break_even_q {
        Some(q) => println!("break-even dropout share: {q}"),
        None => println!("flexible orders stay cheaper on the whole grid"),
    }
    run.finish(&sibling(&args.out, "manifest.json"))
}

fn oracle(workdir: &Path, args: &OracleArgs) -> Result<RunManifest> {
    let cfg = aggregation_config(workdir, &args.aggregation)?;
    let echo = json!({ "aggregation": cfg.aggregation, "budget": args.budget });
    let mut run = Run::new(workdir, "oracle", echo, None);
    let fos = formats::read_offers(&run.input(&args.fos)?)?;
    let res = solve_exact(&fos, &cfg.aggregation, args.budget)?;
    run.output(&args.out, &formats::to_json(&res))?;
    println!(
        "optimum {} kWh in {} blocks ({} alignments evaluated)",
        res.best_energy,
        res.blocks.len(),
        res.alignments_explored
    );
    run.finish(&sibling(&args.out, "manifest.json"))
}

fn prices(workdir: &Path, args: &PricesArgs) -> Result<RunManifest> {
    let curve = PriceCurve::day_night(args.day, args.night, args.night_start, args.night_end, args.horizon)?;
    let echo = json!({
        "day": args.day,
        "night": args.night,
        "night_start": args.night_start,
        "night_end": args.night_end,
        "horizon": args.horizon,
    });
    let mut run = Run::new(workdir, "prices", echo, None);
    run.output(&args.out, &formats::prices_to_csv(curve.prices()))?;
    println!("{}: {} hours", args.out.display(), curve.horizon());
    run.finish(&sibling(&args.out, "manifest.json"))
}
