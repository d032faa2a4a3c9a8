use std::path::Path;

use greensr::repetita::{write_demands, write_graph};
use greensr::synth::{
    gravity_for_mlu, gravity_matrix, isp_like_series, random_network, scale_to_spr_mlu, seeded,
    sinusoid_series, TopologyParams,
};
use greensr::{
    arc_traffic, build_port_lp, compute_fractions, detect_low_load, fit_profile, optimize_with_table,
    spr_baseline, utilization, validate_plan, EcmpMode, Exec, Mode, TrafficTimeSeries,
};
use serde::Serialize;

use crate::args::*;
use crate::config::{mode, read, read_graph, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{emit, row, to_csv, to_json, write_rows, ConfigDoc, SCHEMA_VERSION};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Optimize(a) => optimize(a),
        Command::Baseline(a) => baseline(a),
        Command::Analyze(a) => analyze(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Compare(a) => compare(a),
        Command::Generate(g) => generate(g),
        Command::ExportLp(a) => export_lp(a),
    }
}

fn store_config(path: Option<&Path>, instance: &str, config: greensr::SrConfiguration) -> CliResult<()> {
    let Some(path) = path else { return Ok(()) };
    let doc = ConfigDoc {
        schema_version: SCHEMA_VERSION,
        instance: instance.to_string(),
        configuration: config,
    };
    emit(Some(path), &to_json(&doc, &path.display().to_string())?)
}

fn optimize(a: OptimizeArgs) -> CliResult<()> {
    let rc = RunConfig::new(&a.instance, a.solve.theta, a.solve.ecmp)?.with_solve(&a.solve)?;
    let (net, m) = rc.load()?;
    let table = compute_fractions(&net, None, rc.ecmp, rc.exec)?;
    let config = optimize_with_table(&net, &m, &table, &rc.params(mode(a.mode)))?;
    let r = row(&rc.instance, &net, &config, config.mlu, rc.linecard_share)?;
    store_config(a.config_out.as_deref(), &rc.instance, config)?;
    write_rows(vec![r], &a.output)
}

fn baseline(a: BaselineArgs) -> CliResult<()> {
    let rc = RunConfig::new(&a.instance, a.theta, a.ecmp)?;
    let (net, m) = rc.load()?;
    let table = compute_fractions(&net, None, rc.ecmp, rc.exec)?;
    let config = spr_baseline(&net, &m, &table, rc.theta)?;
    let r = row(&rc.instance, &net, &config, config.mlu, rc.linecard_share)?;
    store_config(a.config_out.as_deref(), &rc.instance, config)?;
    write_rows(vec![r], &a.output)
}

fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let text = read(&a.config)?;
    let doc: ConfigDoc = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: a.config.display().to_string(),
        source,
    })?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::Schema {
            found: doc.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let cfg = doc.configuration;
    let mut inst = a.instance.clone();
    inst.instance.get_or_insert(doc.instance);
    let rc = RunConfig::new(&inst, cfg.theta, a.ecmp)?;
    let (net, m) = rc.load()?;
    let violations = validate_plan(&net, &cfg.plan)?;
    if let Some(v) = violations.first() {
        return Err(CliError::Config(format!(
            "stored plan is invalid for this network: {v} ({} violations)",
            violations.len()
        )));
    }
    let table = compute_fractions(&net, None, rc.ecmp, Exec::default())?;
    let traffic = arc_traffic(&table, &m, &cfg.routing)?;
    let (_, mlu) = utilization(&net, &cfg.plan, &traffic)?;
    write_rows(vec![row(&rc.instance, &net, &cfg, mlu, rc.linecard_share)?], &a.output)
}

fn compare(a: CompareArgs) -> CliResult<()> {
    let rc = RunConfig::new(&a.instance, a.solve.theta, a.solve.ecmp)?.with_solve(&a.solve)?;
    let (net, m) = rc.load()?;
    let table = compute_fractions(&net, None, rc.ecmp, rc.exec)?;
    let mut rows = Vec::new();
    for method in &a.methods {
        let config = match method {
            MethodArg::Spr => spr_baseline(&net, &m, &table, rc.theta)?,
            MethodArg::Splitting => optimize_with_table(&net, &m, &table, &rc.params(Mode::Splitting))?,
            MethodArg::NoSplitting => optimize_with_table(&net, &m, &table, &rc.params(Mode::NoSplitting))?,
        };
        rows.push(row(&rc.instance, &net, &config, config.mlu, rc.linecard_share)?);
    }
    write_rows(rows, &a.output)
}

#[derive(Serialize)]
struct SlotRow {
    slot: usize,
    time: String,
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    low: bool,
}

#[derive(Serialize)]
struct WindowOut {
    start: usize,
    len: usize,
    end: usize,
    start_time: String,
    end_time: String,
}

#[derive(Serialize)]
struct AnalysisDoc {
    schema_version: u32,
    slots_per_day: usize,
    confidence: f64,
    fraction: f64,
    window: Option<WindowOut>,
    profile: Vec<SlotRow>,
}

fn clock(slot: usize, slots_per_day: usize) -> String {
    let minutes = slot * 1440 / slots_per_day;
    format!("{:02}:{:02}", minutes / 60 % 24, minutes % 60)
}

fn analyze(a: AnalyzeArgs) -> CliResult<()> {
    let file = std::fs::File::open(&a.series).map_err(|source| CliError::Read {
        path: a.series.display().to_string(),
        source,
    })?;
    let series = TrafficTimeSeries::from_csv(file, a.slots_per_day)?;
    let p = fit_profile(&series, a.confidence)?;
    let w = detect_low_load(&p, a.fraction)?;
    let spd = series.slots_per_day;
    let profile: Vec<SlotRow> = (0..spd)
        .map(|s| SlotRow {
            slot: s,
            time: clock(s, spd),
            mean: p.mean[s],
            sd: p.sd[s],
            lower: p.lower[s],
            upper: p.upper[s],
            low: w.as_ref().is_some_and(|w| w.contains(s)),
        })
        .collect();
    let bytes = match a.output.format {
        Format::Csv => to_csv(&profile)?,
        Format::Json => to_json(
            &AnalysisDoc {
                schema_version: SCHEMA_VERSION,
                slots_per_day: spd,
                confidence: a.confidence,
                fraction: a.fraction,
                window: w.map(|w| WindowOut {
                    start: w.start,
                    len: w.len,
                    end: w.end(),
                    start_time: clock(w.start, spd),
                    end_time: clock(w.end(), spd),
                }),
                profile,
            },
            "<analysis>",
        )?,
    };
    emit(a.output.out.as_deref(), &bytes)
}

fn generate(g: Generate) -> CliResult<()> {
    match g {
        Generate::Demands(a) => {
            let net = read_graph(&a.graph, a.accept_asymmetric)?;
            let table = compute_fractions(&net, None, EcmpMode::EvenSplit, Exec::default())?;
            if a.mlu <= 0.0 || !a.mlu.is_finite() {
                return Err(CliError::Config(format!("mlu must be positive, got {}", a.mlu)));
            }
            let m = gravity_for_mlu(&mut seeded(a.seed), &net, &table, a.mlu, Exec::default())?;
            emit(a.out.as_deref(), write_demands(&m).as_bytes())
        }
        Generate::Series(a) => {
            let mut rng = seeded(a.seed);
            let s = match a.kind {
                SeriesKind::Isp => isp_like_series(&mut rng, a.days, a.peak, a.sigma)?,
                SeriesKind::Sinusoid => sinusoid_series(&mut rng, a.days, a.slots_per_day, a.phase, a.sigma)?,
            };
            let mut buf = Vec::new();
            s.write_csv(&mut buf)?;
            emit(a.out.as_deref(), &buf)
        }
        Generate::Random(a) => {
            let mut rng = seeded(a.seed);
            let p = TopologyParams {
                nodes: a.nodes,
                mean_degree: a.mean_degree,
                ports_per_link: 1,
                ..TopologyParams::default()
            };
            let net = random_network(&mut rng, &p)?;
            let table = compute_fractions(&net, None, EcmpMode::EvenSplit, Exec::default())?;
            let m = gravity_matrix(&mut rng, a.nodes);
            let m = scale_to_spr_mlu(&net, &m, &table, a.spr_mlu)?;
            emit(Some(&a.graph_out), write_graph(&net).as_bytes())?;
            emit(Some(&a.demands_out), write_demands(&m).as_bytes())
        }
    }
}

fn export_lp(a: ExportLpArgs) -> CliResult<()> {
    let rc = RunConfig::new(&a.instance, a.theta, a.ecmp)?;
    let (net, m) = rc.load()?;
    let table = compute_fractions(&net, None, rc.ecmp, rc.exec)?;
    let lp = build_port_lp(&net, &m, &table, &rc.params(mode(a.mode)))?;
    emit(a.out.as_deref(), greensr_lp::to_lp_string(&lp.model).as_bytes())
}
