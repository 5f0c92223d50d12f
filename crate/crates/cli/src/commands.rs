use std::fs::File;
use std::io::{self, BufReader, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use tcguard::engine::report::{write_metrics_csv, write_metrics_json, write_sweep_csv, write_verdicts_csv};
use tcguard::engine::{RuleToggles, SweepGrid};
use tcguard::pcap::{read_capture, write_capture_to, PcapError};
use tcguard::sketch::cost::{cost_table, write_cost_csv, SketchCostParams, DOMAIN_POINTS};
use tcguard::trafficgen::{load_domain_list, read_labels_csv, write_labels_csv, Arrival, GenError, OobVariant};
use tcguard::{process, EngineConfig, EngineError, ProcessOptions, ScenarioKind, ScenarioSpec};

use crate::config::{parse_list, FileSettings};
use crate::{AnalyzeArgs, BadInput, CostmodelArgs, EngineFlags, GenerateArgs, ScenarioFlags, SweepArgs};

/// Files are only written once every output has been produced, so a
/// failing command leaves nothing half-written behind.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    fn commit(self) -> Result<()> {
        for (path, bytes) in self.files {
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

// Every engine error traces back to configuration or input data.
fn engine_error(e: EngineError) -> anyhow::Error {
    BadInput::err(e.to_string())
}

fn gen_error(e: GenError) -> anyhow::Error {
    BadInput::err(e.to_string())
}

fn parse_value<T: std::str::FromStr>(what: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| BadInput::err(format!("invalid {what} {raw:?}: {e}")))
}

fn parse_serde<T: DeserializeOwned>(what: &str, raw: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(raw.trim().to_ascii_lowercase()))
        .map_err(|_| BadInput::err(format!("invalid {what} {raw:?}")))
}

fn engine_config(flags: &EngineFlags, seed: Option<u64>, file: &FileSettings) -> Result<EngineConfig> {
    let d = EngineConfig::default();
    let rules = match file.pick(flags.rules.clone(), "rules")? {
        None => RuleToggles::default(),
        Some(list) => {
            let mut t = RuleToggles { r1: false, r2: false, r3: false };
            for r in list.split(',').map(|r| r.trim().to_ascii_lowercase()).filter(|r| !r.is_empty()) {
                match r.as_str() {
                    "r1" => t.r1 = true,
                    "r2" => t.r2 = true,
                    "r3" => t.r3 = true,
                    _ => return Err(BadInput::err(format!("unknown rule {r:?} (expected r1, r2, r3)"))),
                }
            }
            t
        }
    };
    let cfg = EngineConfig {
        tau: file.pick(flags.tau, "tau")?.unwrap_or(d.tau),
        check_interval: file.pick(flags.interval, "interval")?.unwrap_or(d.check_interval),
        window_seconds: file.pick(flags.window, "window")?.unwrap_or(d.window_seconds),
        cms_depth: file.pick(flags.cms_d, "cms-d")?.unwrap_or(d.cms_depth),
        cms_width: file.pick(flags.cms_w, "cms-w")?.unwrap_or(d.cms_width),
        resolver_ip: None,
        seed: file.seed(seed)?.unwrap_or(d.seed),
        rules,
    };
    cfg.validate().map_err(engine_error)?;
    Ok(cfg)
}

fn scenario_spec(flags: &ScenarioFlags, seed: Option<u64>, file: &FileSettings) -> Result<ScenarioSpec> {
    let kind: ScenarioKind = match file.pick(flags.scenario.clone(), "scenario")? {
        Some(s) => parse_value("scenario", &s)?,
        None => return Err(BadInput::err("--scenario is required")),
    };
    let mut spec = ScenarioSpec::new(kind, file.seed(seed)?.unwrap_or(0));
    if let Some(n) = file.pick(flags.attack_count, "attack-count")? {
        spec.attack_count = n;
    }
    if let Some(n) = file.pick(flags.noise_count, "noise-count")? {
        spec.noise_count = n;
    }
    if let Some(ms) = file.pick(flags.rate_ms, "rate-ms")? {
        spec.attack_window_ms = ms;
    }
    if let Some(ms) = file.pick(flags.noise_window_ms, "noise-window-ms")? {
        spec.noise_window_ms = ms;
    }
    if let Some(a) = file.pick(flags.arrival.clone(), "arrival")? {
        spec.noise_arrival = parse_serde::<Arrival>("arrival", &a)?;
    }
    if let Some(v) = file.pick(flags.oob_variant.clone(), "oob-variant")? {
        spec.oob_variant = parse_serde::<OobVariant>("oob variant", &v)?;
    }
    if let Some(path) = file.pick(flags.domains.clone(), "domains")? {
        spec.noise_domains = Some(load_domain_list(&path).map_err(gen_error)?);
    }
    spec.validate().map_err(gen_error)?;
    Ok(spec)
}

fn open_input(path: &Path, what: &str) -> Result<File> {
    File::open(path).map_err(|e| BadInput::err(format!("cannot open {what} {}: {e}", path.display())))
}

fn emit(out: Option<PathBuf>, bytes: Vec<u8>, outputs: &mut Outputs) -> Result<()> {
    match out {
        Some(path) => outputs.add(path, bytes),
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let file = FileSettings::load(args.config.as_deref())?;
    let resolver_raw =
        file.pick(args.resolver.clone(), "resolver")?.ok_or_else(|| BadInput::err("--resolver is required"))?;
    let resolver: IpAddr = parse_value("resolver address", &resolver_raw)?;
    let mut cfg = engine_config(&args.engine, args.seed, &file)?;
    cfg.resolver_ip = Some(resolver);

    let pcap = file.pick(args.pcap.clone(), "pcap")?.ok_or_else(|| BadInput::err("--pcap is required"))?;
    let out_verdicts = file.pick(args.out_verdicts.clone(), "out-verdicts")?;
    let out_metrics = file.pick(args.out_metrics.clone(), "out-metrics")?;
    let out_metrics_csv = file.pick(args.out_metrics_csv.clone(), "out-metrics-csv")?;
    let emit_pcap = file.pick(args.emit_pcap.clone(), "emit-pcap")?;

    let capture = read_capture(&pcap, resolver).map_err(|e| match e {
        PcapError::Io(io) => BadInput::err(format!("cannot read {}: {io}", pcap.display())),
        other => BadInput::err(format!("{}: {other}", pcap.display())),
    })?;
    let labels = match file.pick(args.labels.clone(), "labels")? {
        Some(path) => Some(
            read_labels_csv(BufReader::new(open_input(&path, "labels")?))
                .map_err(gen_error)
                .with_context(|| format!("in {}", path.display()))?,
        ),
        None => None,
    };

    let opts = ProcessOptions {
        labels: labels.as_deref(),
        intended_attack: None,
        malformed: capture.stats.malformed,
        keep_emitted: emit_pcap.is_some(),
    };
    let result = process(&cfg, &capture.packets, opts).map_err(engine_error)?;

    let mut outputs = Outputs::default();
    if let Some(path) = out_verdicts {
        let mut buf = Vec::new();
        write_verdicts_csv(&result.verdicts, &capture.packets, &mut buf)?;
        outputs.add(path, buf);
    }
    if let Some(path) = out_metrics_csv {
        let mut buf = Vec::new();
        write_metrics_csv(&result.metrics, &mut buf)?;
        outputs.add(path, buf);
    }
    if let Some(path) = emit_pcap {
        outputs.add(path, write_capture_to(Vec::new(), &result.emitted)?);
    }
    let mut json = Vec::new();
    write_metrics_json(&result.metrics, &mut json)?;
    emit(out_metrics, json, &mut outputs)?;
    outputs.commit()?;

    let m = &result.metrics;
    eprintln!(
        "{} packets: {} forwarded, {} truncated, {} dropped ({} malformed frames skipped)",
        m.total, m.forwarded, m.truncated, m.dropped, m.malformed
    );
    if m.labelled {
        eprintln!("asr {:.6e}  fp_rate {:.6}", m.asr, m.fp_rate);
    }
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let file = FileSettings::load(args.config.as_deref())?;
    let spec = scenario_spec(&args.scenario, args.seed, &file)?;
    let out = file.pick(args.out.clone(), "out")?.ok_or_else(|| BadInput::err("--out is required"))?;
    let labels_path = file.pick(args.labels.clone(), "labels")?;
    let stream = tcguard::generate(&spec).map_err(gen_error)?;

    let mut outputs = Outputs::default();
    outputs.add(out, write_capture_to(Vec::new(), stream.query.iter().chain(&stream.packets))?);
    if let Some(path) = labels_path {
        let mut buf = Vec::new();
        write_labels_csv(&stream.labels, &mut buf)?;
        outputs.add(path, buf);
    }
    outputs.commit()?;
    eprintln!(
        "{} scenario, seed {}: {} responses ({} attack)",
        spec.kind,
        spec.seed,
        stream.len(),
        stream.count(tcguard::Label::Attack)
    );
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let file = FileSettings::load(args.config.as_deref())?;
    let spec = scenario_spec(&args.scenario, args.seed, &file)?;
    let base = engine_config(&args.engine, args.seed, &file)?;
    let list = |flag: &Option<String>, key: &str| -> Result<Option<Vec<usize>>> {
        match flag {
            Some(s) => parse_list(s).map(Some),
            None => file.get_list(key),
        }
    };
    let defaults = SweepGrid::default();
    let grid = SweepGrid {
        depths: list(&args.d_grid, "d-grid")?.unwrap_or(defaults.depths),
        widths: list(&args.w_grid, "w-grid")?.unwrap_or(defaults.widths),
    };
    let repeats = file.pick(args.repeats, "repeats")?.unwrap_or(10);
    let rows = tcguard::engine::sweep(&base, &grid, &spec, repeats).map_err(engine_error)?;

    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    let mut outputs = Outputs::default();
    emit(file.pick(args.out.clone(), "out")?, buf, &mut outputs)?;
    outputs.commit()
}

pub fn costmodel(args: CostmodelArgs) -> Result<()> {
    let rows = cost_table(&SketchCostParams::default(), &DOMAIN_POINTS)?;
    let mut buf = Vec::new();
    write_cost_csv(&rows, &mut buf)?;
    let mut outputs = Outputs::default();
    emit(args.out, buf, &mut outputs)?;
    outputs.commit()
}
