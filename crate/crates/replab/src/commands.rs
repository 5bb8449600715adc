use replab_core::entropy::EntropyTable;
use replab_core::hilberg::{fit_law, Law, LawFit};
use replab_core::seqstat::{CurveSet, StatCurve};
use replab_core::sources::sample_path;
use replab_core::verify::{
    check_prop1, check_prop2, check_prop3, check_prop4, modal_block, theorem_report, verify_chen_moy, verify_kac,
    verify_kontoyiannis, PathCheckConfig, TheoremConfig, Verdict, VerificationReport,
};
use replab_core::{SeedSpec, SourceModel, SymbolSeq};
use serde::Serialize;
use serde_json::json;

use crate::config::{config_error, parse_grid, RunConfig, Suite};
use crate::io::{self, CurveRow};
use crate::Outcome;

const DEFAULT_K_GRID: &str = "1..=64";
const DEFAULT_N_GRID: &str = "dyadic";

#[derive(Debug, Serialize)]
struct FailedFit {
    law: Law,
    error: String,
}

struct Analysis {
    rows: Vec<CurveRow>,
    fits: Vec<LawFit>,
    failed: Vec<FailedFit>,
}

fn analyse(seq: &SymbolSeq, cfg: &RunConfig) -> anyhow::Result<Analysis> {
    if seq.is_empty() {
        let failed = [Law::LogPower, Law::StretchedExp]
            .into_iter()
            .map(|law| FailedFit {
                law,
                error: "empty input".into(),
            })
            .collect();
        return Ok(Analysis {
            rows: Vec::new(),
            fits: Vec::new(),
            failed,
        });
    }
    let n = seq.len() as u64;
    let ng = parse_grid(cfg.n_grid.as_deref().unwrap_or(DEFAULT_N_GRID), n)?;
    let kg = parse_grid(cfg.k_grid.as_deref().unwrap_or(DEFAULT_K_GRID), n)?;
    let set = CurveSet::compute(seq);
    let curves: Vec<StatCurve> = vec![
        set.l1.select(&ng),
        set.l2.select(&ng),
        set.r1.select(&kg),
        set.r2.select(&kg),
    ];
    let mut fits = Vec::new();
    let mut failed = Vec::new();
    for (law, curve) in [(Law::LogPower, &curves[1]), (Law::StretchedExp, &curves[3])] {
        match fit_law(curve, law) {
            Ok(f) => fits.push(f),
            Err(e) => failed.push(FailedFit {
                law,
                error: e.to_string(),
            }),
        }
    }
    Ok(Analysis {
        rows: io::curve_rows(&curves),
        fits,
        failed,
    })
}

fn write_analysis(a: &Analysis, cfg: &RunConfig, extra: &[String]) -> anyhow::Result<()> {
    let out = &cfg.output;
    io::write_atomic(&out.join("curves.csv"), &io::curves_csv(&a.rows, cfg, extra)?)?;
    io::write_json(
        &out.join("fits.json"),
        cfg,
        &[
            ("input", json!(extra)),
            ("fits", json!(a.fits)),
            ("failed", json!(a.failed)),
        ],
    )?;
    for f in &a.fits {
        println!(
            "{:<14} parameter {:.4}  C {:.4}  r^2 {:.4}  window {}..{}  censored {:.3}",
            f.law.name(),
            f.parameter,
            f.c,
            f.r_squared,
            f.window.0,
            f.window.1,
            f.censored_fraction
        );
    }
    for f in &a.failed {
        println!("{:<14} not fitted: {}", f.law.name(), f.error);
    }
    Ok(())
}

pub fn analyze(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| config_error("analyze needs an input file"))?;
    let seq = io::ingest(input, cfg.mode)?;
    let mut extra = vec![format!(
        "input: {} symbols, alphabet size {}",
        seq.len(),
        seq.alphabet_size()
    )];
    if seq.is_empty() {
        eprintln!("warning: {} is empty, writing empty curves", input.display());
        extra.push("warning: empty input".into());
    }
    let a = analyse(&seq, cfg)?;
    write_analysis(&a, cfg, &extra)?;
    Ok(Outcome::Success)
}

fn model_lines(model: &SourceModel) -> Vec<String> {
    let mut v = vec![format!("model: {} ({})", model.label(), model.kind_name())];
    if model.is_exploratory() {
        v.push("exploratory: stationarity and ergodicity are not established for this source".into());
    }
    v
}

pub fn simulate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.model()?;
    let n = cfg.n.unwrap_or(100_000);
    let seq = sample_path(&model, n, SeedSpec::new(cfg.seed, 0));
    let extra = model_lines(&model);
    io::write_atomic(&cfg.output.join("sequence.txt"), &io::sequence_file(&seq, cfg, &extra))?;
    let a = analyse(&seq, cfg)?;
    write_analysis(&a, cfg, &extra)?;
    Ok(Outcome::Success)
}

fn grid_usize(spec: Option<&str>, default: &str, max: u64) -> anyhow::Result<Vec<usize>> {
    Ok(parse_grid(spec.unwrap_or(default), max)?
        .into_iter()
        .map(|k| k as usize)
        .collect())
}

fn block_for(model: &SourceModel, cfg: &RunConfig, default_k: usize) -> anyhow::Result<Vec<u32>> {
    match &cfg.block {
        Some(b) if b.is_empty() => Err(config_error("block: must not be empty")),
        Some(b) => Ok(b.clone()),
        None => Ok(modal_block(model, cfg.k.unwrap_or(default_k))?),
    }
}

fn run_suite(model: &SourceModel, suite: Suite, cfg: &RunConfig) -> anyhow::Result<Vec<VerificationReport>> {
    let seed = SeedSpec::new(cfg.seed, 0);
    let p = cfg.perturbation;
    let path_cfg = || -> anyhow::Result<PathCheckConfig> {
        let n = cfg.n.unwrap_or(1_000_000);
        Ok(PathCheckConfig {
            paths: cfg.paths.unwrap_or(50),
            path_length: n,
            ks: grid_usize(cfg.k_grid.as_deref(), "1,2,4,8,16", n as u64 - 1)?,
            rho: cfg.rho.clone(),
            k0: cfg.k0,
            pass_fraction: cfg.pass_fraction,
            seed,
            perturbation: p,
            enumeration_limit: cfg.enumeration_limit,
            truncation: cfg.truncation,
        })
    };
    Ok(match suite {
        Suite::Kac => {
            let block = block_for(model, cfg, 3)?;
            vec![verify_kac(model, &block, cfg.trials.unwrap_or(100_000), seed, p)?]
        }
        Suite::Kontoyiannis => {
            let ks = match (&cfg.k_grid, cfg.k) {
                (Some(g), _) => grid_usize(Some(g), "", 64)?,
                (None, Some(k)) => vec![k],
                (None, None) => vec![2, 4, 8],
            };
            ks.into_iter()
                .map(|k| verify_kontoyiannis(model, k, cfg.trials.unwrap_or(100_000), seed, p))
                .collect::<Result<_, _>>()?
        }
        Suite::Chenmoy => {
            let block = block_for(model, cfg, 2)?;
            vec![verify_chen_moy(model, &block, cfg.n.unwrap_or(1_000_000), seed, p)?]
        }
        Suite::Prop1 => vec![check_prop1(model, &path_cfg()?)?],
        Suite::Prop2 => vec![check_prop2(model, &path_cfg()?)?],
        Suite::Prop3 => vec![check_prop3(model, &path_cfg()?)?],
        Suite::Prop4 => {
            let ks = grid_usize(cfg.k_grid.as_deref(), "1..=8", 64)?;
            vec![check_prop4(model, &ks, cfg.truncation, cfg.enumeration_limit, p)?]
        }
        Suite::Theorems => {
            let defaults = TheoremConfig::default();
            let tc = TheoremConfig {
                paths: cfg.paths.unwrap_or(defaults.paths),
                path_length: cfg.n.unwrap_or(defaults.path_length),
                slack: cfg.slack,
                seed,
                enumeration_limit: cfg.enumeration_limit,
                ..defaults
            };
            vec![theorem_report(model, &tc)?]
        }
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::EACH {
                match run_suite(model, s, cfg) {
                    Ok(r) => all.extend(r),
                    Err(e) => eprintln!("skipping {s:?}: {e:#}"),
                }
            }
            all
        }
    })
}

fn summary(r: &VerificationReport) -> String {
    let mut s = format!("{:<13} {:<12}", r.check, r.verdict.name());
    if r.informational {
        s.push_str(" (informational)");
    }
    for (k, v) in r.empirical.iter().take(4) {
        s.push_str(&format!("  {k}={v:.4}"));
    }
    s
}

pub fn verify(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let report_path = cfg.output.join("report.json");
    let result = cfg
        .suite
        .ok_or_else(|| config_error("verify needs a suite"))
        .and_then(|suite| run_suite(&cfg.model()?, suite, cfg));
    let reports = match result {
        Ok(r) => r,
        Err(e) => {
            let msg = format!("{e:#}");
            io::write_json(&report_path, cfg, &[("reports", json!([])), ("error", json!(msg))])?;
            // checker errors here are model/suite mismatches: usage errors
            return Err(config_error(msg));
        }
    };
    io::write_json(&report_path, cfg, &[("reports", json!(reports))])?;
    let mut outcome = Outcome::Success;
    for r in &reports {
        println!("{}", summary(r));
        if r.is_decisive() && r.verdict != Verdict::Pass {
            outcome = Outcome::ChecksFailed;
        }
    }
    Ok(outcome)
}

pub fn entropy(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.model()?;
    let orders = cfg.orders()?;
    let ks = grid_usize(cfg.k_grid.as_deref(), "1..=8", 1 << 20)?;
    let table = EntropyTable::build(
        &model,
        &orders,
        &ks,
        &cfg.conditioning,
        cfg.truncation,
        cfg.enumeration_limit,
    )
    .map_err(|e| config_error(format!("entropy: {e}")))?;
    let rows = io::entropy_rows(&table.rows);
    io::write_atomic(&cfg.output.join("entropy.csv"), &io::entropy_csv(&rows, cfg)?)?;
    let (unit, scale) = if cfg.bits {
        ("bits", 1.0 / std::f64::consts::LN_2)
    } else {
        ("nats", 1.0)
    };
    println!(
        "{:>6} {:>4} {:>8} {:>14} {:>14}  kind ({unit})",
        "gamma", "k", "i", "lo", "hi"
    );
    for r in &rows {
        println!(
            "{:>6} {:>4} {:>8} {:>14.8} {:>14.8}  {}",
            r.gamma,
            r.k,
            r.i,
            r.lo * scale,
            r.hi * scale,
            serde_json::to_value(r.kind)?.as_str().unwrap_or_default()
        );
    }
    if !table.is_consistent() {
        eprintln!("warning: table is not monotone in the order");
    }
    Ok(Outcome::Success)
}
