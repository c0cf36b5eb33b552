use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use num_bigint::BigUint;
use nsp_core::arith::{Arith, Modulus};
use nsp_core::audit::{audit_transcript, collusion_recover, inject_fault, AuditReport, CollusionCoalition};
use nsp_core::engine::{count_messages, count_protocols, n_party_protocol_with, ProtocolOptions, ProtocolStats, RootReplay};
use nsp_core::oracle::{plaintext_scalar_product, symbolic_expand_protocol, worked_example};
use nsp_core::runtime::{run_simulation, PartyId, Transcript};
use nsp_core::shares::random_vectors;
use nsp_core::{DiagVec, RandomnessConfig, Scalar};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{AttackArgs, AuditArgs, BenchArgs, CountsArgs, ExpandArgs, ExpandFormat, Format, ProtocolArgs, RunArgs};
use crate::error::{CliError, CliResult};

/// What a command prints and how the process exits.
pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

/// Data and options of one configured run.
struct Setup {
    data: Vec<DiagVec>,
    opts: ProtocolOptions,
    source: &'static str,
}

fn read_vector(path: &Path) -> CliResult<DiagVec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        DiagVec::from_json(&text)
    } else {
        DiagVec::from_csv(&text)
    };
    parsed.map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn setup(p: &ProtocolArgs) -> CliResult<Setup> {
    let (data, source) = if !p.inputs.is_empty() {
        let n = p.parties.unwrap_or(p.inputs.len());
        if n != p.inputs.len() {
            return Err(CliError::config(format!(
                "--parties is {n} but {} input files were given",
                p.inputs.len()
            )));
        }
        let data = p.inputs.iter().map(|f| read_vector(f)).collect::<CliResult<Vec<_>>>()?;
        if let Some(d) = data.iter().find(|d| d.len() != data[0].len()) {
            return Err(CliError::config(format!(
                "input vectors differ in length ({} and {})",
                data[0].len(),
                d.len()
            )));
        }
        (data, "files")
    } else if p.replay_worked_example {
        (worked_example().data, "worked-example")
    } else {
        let n = p.parties.unwrap_or(3);
        (random_vectors(n, p.length, &p.value_range, p.seed)?, "synthetic")
    };
    if data.len() < 2 {
        return Err(CliError::config(format!("need at least 2 parties, got {}", data.len())));
    }

    let mut opts = ProtocolOptions::new(p.mode.into(), p.strategy.into(), RandomnessConfig::with_seed(p.seed));
    opts.threads = p.threads;
    if let Some(text) = &p.modulus {
        let value: Scalar = text
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("--modulus is not an integer: {text:?}")))?;
        opts.arith = Arith::Modular(Modulus::new(value)?);
    }
    if p.replay_worked_example {
        let ex = worked_example();
        opts.replay = Some(RootReplay {
            shares: ex.shares,
            v2: ex.v2,
        });
    }
    Ok(Setup { data, opts, source })
}

#[derive(Serialize)]
struct StatsDoc {
    protocols: u64,
    messages: u64,
    shortcuts: u64,
    deliveries: u64,
}

impl From<ProtocolStats> for StatsDoc {
    fn from(s: ProtocolStats) -> Self {
        StatsDoc {
            protocols: s.protocols,
            messages: s.messages,
            shortcuts: s.shortcuts,
            deliveries: s.deliveries,
        }
    }
}

#[derive(Serialize)]
struct ConfigDoc {
    seed: u64,
    parties: usize,
    length: usize,
    mode: String,
    strategy: String,
    modulus: Option<String>,
    data: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_range: Option<String>,
    replay: bool,
}

impl ConfigDoc {
    fn new(p: &ProtocolArgs, s: &Setup) -> Self {
        ConfigDoc {
            seed: p.seed,
            parties: s.data.len(),
            length: s.data[0].len(),
            mode: s.opts.mode.to_string(),
            strategy: s.opts.strategy.to_string(),
            modulus: s.opts.arith.modulus().map(|m| m.to_string()),
            data: s.source,
            value_range: (s.source == "synthetic").then(|| p.value_range.to_string()),
            replay: s.opts.replay.is_some(),
        }
    }
}

#[derive(Serialize)]
struct VerifyDoc {
    oracle: String,
    #[serde(rename = "match")]
    matches: bool,
}

#[derive(Serialize)]
struct RunDoc {
    #[serde(flatten)]
    config: ConfigDoc,
    result: String,
    stats: StatsDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<VerifyDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<f64>,
}

impl RunDoc {
    fn to_csv(&self) -> String {
        let mut head = vec!["seed", "parties", "length", "mode", "strategy", "modulus", "result"];
        let c = &self.config;
        let mut row = vec![
            c.seed.to_string(),
            c.parties.to_string(),
            c.length.to_string(),
            c.mode.clone(),
            c.strategy.clone(),
            c.modulus.clone().unwrap_or_default(),
            self.result.clone(),
        ];
        head.extend(["protocols", "messages", "shortcuts", "deliveries"]);
        row.extend(
            [self.stats.protocols, self.stats.messages, self.stats.shortcuts, self.stats.deliveries].map(|x| x.to_string()),
        );
        if let Some(v) = &self.verify {
            head.extend(["oracle", "match"]);
            row.extend([v.oracle.clone(), v.matches.to_string()]);
        }
        if let Some(a) = &self.audit {
            head.push("violations");
            row.push(a.violations.len().to_string());
        }
        if let Some(t) = self.elapsed_ms {
            head.push("elapsed_ms");
            row.push(format!("{t:.3}"));
        }
        format!("{}\n{}\n", head.join(","), row.join(","))
    }
}

fn json_line(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("document serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn run(args: &RunArgs, force_verify: bool) -> CliResult<Outcome> {
    let mut s = setup(&args.protocol)?;
    s.opts.verify = args.debug_verify;
    let verify = args.verify || force_verify;
    let record = args.audit || args.transcript.is_some() || args.inject_fault.is_some();

    if let Some(dir) = &args.dump_inputs {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (i, d) in s.data.iter().enumerate() {
            let (name, text) = match args.format {
                Format::Json => (format!("p{}.json", i + 1), d.to_json() + "\n"),
                Format::Csv => (format!("p{}.csv", i + 1), d.to_csv()),
            };
            write_file(&dir.join(name), &text)?;
        }
    }

    let started = Instant::now();
    let (result, transcript) = if record {
        let (r, t) = run_simulation(&s.data, &s.opts)?;
        (r, Some(t))
    } else {
        (n_party_protocol_with(&s.data, &s.opts)?, None)
    };
    let elapsed = started.elapsed();
    info!(
        "{} parties, length {}: {} instances, {} messages in {:?}",
        s.data.len(),
        s.data[0].len(),
        result.stats.protocols,
        result.stats.messages,
        elapsed
    );

    let mut code = 0;
    let verify_doc = if verify {
        let oracle = plaintext_scalar_product(&s.data)?;
        let matches = oracle == result.value;
        if !matches {
            warn!("protocol gave {}, plaintext product is {oracle}", result.value);
            code = 1;
        }
        Some(VerifyDoc {
            oracle: oracle.to_string(),
            matches,
        })
    } else {
        None
    };

    let mut audit = None;
    if let Some(mut t) = transcript {
        if let Some(fault) = args.inject_fault {
            let changed = inject_fault(&mut t, fault)?;
            info!("injected {fault} into messages {changed:?}");
        }
        if args.audit {
            let report = audit_transcript(&t);
            for v in &report.violations {
                warn!("{v}");
            }
            if !report.is_clean() {
                code = 1;
            }
            audit = Some(report);
        }
        if let Some(path) = &args.transcript {
            write_file(path, &t.to_jsonl(args.audit_payloads))?;
        }
    }

    let doc = RunDoc {
        config: ConfigDoc::new(&args.protocol, &s),
        result: result.value.to_string(),
        stats: result.stats.into(),
        verify: verify_doc,
        audit,
        elapsed_ms: (!args.no_timing).then_some(elapsed.as_secs_f64() * 1e3),
    };
    let stdout = match args.format {
        Format::Json => json_line(&doc),
        Format::Csv => doc.to_csv(),
    };
    Ok(Outcome { stdout, code })
}

fn count_value(x: BigUint) -> Value {
    match u64::try_from(&x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

pub fn counts(args: &CountsArgs) -> CliResult<Outcome> {
    if args.n_max < 2 {
        return Err(CliError::config("--n-max must be at least 2"));
    }
    let mut rows = Vec::new();
    for n in 2..=args.n_max {
        rows.push((n, count_protocols(n)?, count_messages(n)?));
    }
    let stdout = match args.format {
        Format::Csv => {
            let mut out = String::from("n,protocols,messages\n");
            for (n, p, m) in &rows {
                out.push_str(&format!("{n},{p},{m}\n"));
            }
            out
        }
        Format::Json => json_line(&json!({
            "rows": rows
                .into_iter()
                .map(|(n, p, m)| json!({"n": n, "protocols": count_value(p), "messages": count_value(m)}))
                .collect::<Vec<_>>()
        })),
    };
    Ok(Outcome::ok(stdout))
}

#[derive(Serialize)]
struct BenchCell {
    n: usize,
    m: usize,
    reps: usize,
    mean_ms: f64,
    protocols: u64,
    messages: u64,
}

pub fn bench(args: &BenchArgs) -> CliResult<Outcome> {
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(CliError::config("need 2 <= --n-min <= --n-max"));
    }
    if args.reps == 0 || args.lengths.is_empty() || args.lengths.contains(&0) {
        return Err(CliError::config("need --reps >= 1 and positive --lengths"));
    }
    let mut cells = Vec::new();
    let mut monotone = serde_json::Map::new();
    let mut all_monotone = true;
    for &m in &args.lengths {
        let mut previous: Option<f64> = None;
        let mut rising = true;
        for n in args.n_min..=args.n_max {
            let data = random_vectors(n, m, &args.value_range, args.seed)?;
            let mut opts = ProtocolOptions::new(args.mode.into(), args.strategy.into(), RandomnessConfig::with_seed(args.seed));
            opts.threads = args.threads;
            let mut total = 0.0;
            let mut stats = ProtocolStats::default();
            for _ in 0..args.reps {
                let started = Instant::now();
                stats = n_party_protocol_with(&data, &opts)?.stats;
                total += started.elapsed().as_secs_f64() * 1e3;
            }
            let mean_ms = total / args.reps as f64;
            info!("n={n} m={m}: {mean_ms:.3} ms");
            if previous.is_some_and(|p| mean_ms <= p) {
                rising = false;
            }
            previous = Some(mean_ms);
            cells.push(BenchCell {
                n,
                m,
                reps: args.reps,
                mean_ms,
                protocols: stats.protocols,
                messages: stats.messages,
            });
        }
        if !rising {
            warn!("time is not increasing in n at m={m}");
        }
        all_monotone &= rising;
        monotone.insert(m.to_string(), json!(rising));
    }
    let stdout = match args.format {
        Format::Csv => {
            let mut out = String::from("n,m,reps,mean_ms,protocols,messages\n");
            for c in &cells {
                out.push_str(&format!("{},{},{},{:.3},{},{}\n", c.n, c.m, c.reps, c.mean_ms, c.protocols, c.messages));
            }
            out
        }
        Format::Json => json_line(&json!({
            "seed": args.seed,
            "mode": nsp_core::engine::ExecutionMode::from(args.mode).to_string(),
            "strategy": nsp_core::runtime::CommodityStrategy::from(args.strategy).to_string(),
            "cells": cells,
            "monotone_in_n": monotone,
            "monotone": all_monotone,
        })),
    };
    Ok(Outcome {
        stdout,
        code: if all_monotone { 0 } else { 1 },
    })
}

#[derive(Serialize)]
struct AttackDoc {
    #[serde(flatten)]
    config: ConfigDoc,
    coalition: Vec<String>,
    target: String,
    success: bool,
    protocol: Option<String>,
    recovered: Option<Vec<String>>,
    matches_input: Option<bool>,
}

pub fn attack(args: &AttackArgs) -> CliResult<Outcome> {
    let s = setup(&args.protocol)?;
    let truth = match args.target {
        PartyId::Party(i) if (1..=s.data.len()).contains(&(i as usize)) => s.data[i as usize - 1].clone(),
        other => return Err(CliError::config(format!("target {other} is not a data owner of this run"))),
    };
    let coalition = CollusionCoalition::new(args.coalition.iter().copied())?;
    let (_, transcript) = run_simulation(&s.data, &s.opts)?;
    let recovery = collusion_recover(&transcript, &coalition, args.target)?;
    let matches = recovery.as_ref().map(|r| r.data == truth);
    let code = if matches == Some(false) { 1 } else { 0 };
    let doc = AttackDoc {
        config: ConfigDoc::new(&args.protocol, &s),
        coalition: coalition.parties().iter().map(|p| p.to_string()).collect(),
        target: args.target.to_string(),
        success: recovery.is_some(),
        protocol: recovery.as_ref().map(|r| r.protocol.to_string()),
        recovered: recovery.as_ref().map(|r| r.data.iter().map(|x| x.to_string()).collect()),
        matches_input: matches,
    };
    Ok(Outcome {
        stdout: json_line(&doc),
        code,
    })
}

pub fn expand(args: &ExpandArgs) -> CliResult<Outcome> {
    let mut e = symbolic_expand_protocol(args.parties)?;
    if args.share_identity {
        e = e.with_share_identity();
    }
    Ok(Outcome::ok(match args.format {
        ExpandFormat::Text => e.to_text(),
        ExpandFormat::Json => e.to_json() + "\n",
    }))
}

pub fn audit(args: &AuditArgs) -> CliResult<Outcome> {
    let text = fs::read_to_string(&args.transcript).map_err(|e| CliError::io(&args.transcript, e))?;
    let t = Transcript::from_jsonl(&text)?;
    let report = audit_transcript(&t);
    Ok(Outcome {
        stdout: json_line(&report),
        code: if report.is_clean() { 0 } else { 1 },
    })
}
