mod input;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use toralconj_core::bf::{bf_group, default_family, strong_bf_screen, FamilyParams, ScreenOutcome};
use toralconj_core::ideal::{eigen_ideal, eigen_ideal_pair, principal_search, weak_equivalence, PrincipalSearch};
use toralconj_core::intertwine::{similarity_check, Similarity};
use toralconj_core::linalg::{IntMatrix, IntPolynomial, PowerCap};
use toralconj_core::modules::DEFAULT_ISO_BUDGET;
use toralconj_core::pipeline::{class_name, decide, Config, Outcome};
use toralconj_core::tower::{build_tower, injectivity_probe, verify_factorization, verify_filtered, ClassifyParams};

use input::read_matrix;

/// Conjugacy invariants of hyperbolic integer matrices.
#[derive(Parser)]
#[command(name = "toralconj", version)]
struct Cli {
    /// Print a structured JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Add wall-clock time to the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct FamilyArgs {
    /// Linear polynomials x -+ c for c up to this bound.
    #[arg(long, default_value_t = 5)]
    family_c: u32,
    /// Binomials x^m -+ 1 for m up to this bound.
    #[arg(long, default_value_t = 6)]
    family_m: u32,
    /// Cyclotomic polynomials up to this index.
    #[arg(long, default_value_t = 12)]
    family_cyclotomic: u32,
    /// Hom elements tried per primary component.
    #[arg(long, default_value_t = DEFAULT_ISO_BUDGET)]
    budget: u64,
}

impl FamilyArgs {
    fn params(&self) -> FamilyParams {
        FamilyParams {
            linear: self.family_c,
            binomial: self.family_m,
            cyclotomic: self.family_cyclotomic,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Invariant factors of BF_g(A) = Z^n / Z^n g(A).
    Bf { matrix: PathBuf, g: String },
    /// Strong BF screen over the default family.
    Screen {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Levels of the quotient tower Z^n / Z^n (A^(k!) - I).
    Tower {
        matrix: PathBuf,
        #[arg(long, default_value_t = 2)]
        levels: u32,
        /// Check nesting, factorisation, filtering and run the injectivity probe.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 10)]
        probe_bound: u64,
    },
    /// Eigen ideal of A and pairwise ideal tests.
    Ideal {
        matrix: PathBuf,
        #[command(subcommand)]
        action: IdealCmd,
    },
    /// Full pipeline with an inline certificate.
    Decide {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = Config::default().search_bound)]
        search_bound: u64,
        #[arg(long, default_value_t = Config::default().principal_bound)]
        principal_bound: u64,
        #[arg(long, default_value_t = Config::default().generator_bound)]
        generator_bound: u64,
        #[arg(long, default_value_t = Config::default().tower_depth)]
        depth: u32,
        #[arg(long, default_value_t = ClassifyParams::default().entry_bound)]
        entry_bound: u64,
        #[arg(long, default_value_t = ClassifyParams::default().max_points)]
        max_points: u64,
    },
}

#[derive(Subcommand)]
enum IdealCmd {
    Show,
    /// Multiplier ring of the eigen ideal.
    Ring,
    WeakEquiv { other: PathBuf },
    /// Bounded search for a generator of (J : I).
    Principal {
        other: PathBuf,
        #[arg(long, default_value_t = 8)]
        bound: u64,
    },
}

struct Report {
    command: &'static str,
    inputs: Value,
    config: Value,
    result: Value,
    text: Vec<String>,
    code: u8,
}

fn max_bits() -> Result<u64> {
    match std::env::var("TORALCONJ_MAX_BITS") {
        Ok(s) => s
            .trim()
            .parse()
            .with_context(|| format!("TORALCONJ_MAX_BITS = {s:?} is not a bit count")),
        Err(_) => Ok(PowerCap::default().max_bits),
    }
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn matrix_text(m: &IntMatrix) -> String {
    let rows: Vec<String> = (0..m.rows()).map(|i| format!("[{}]", list(m.row(i)))).collect();
    format!("[{}]", rows.join(", "))
}

fn cmd_bf(path: &Path, g: &str) -> Result<Report> {
    let a = read_matrix(path)?;
    let g: IntPolynomial = g.parse().context("polynomial")?;
    let grp = bf_group(&a, &g)?;
    let fp = grp.module.fingerprint();
    let text = vec![
        format!("g = {g}"),
        format!("BF_g(A) = {fp}"),
        format!("order {}", fp.order),
    ];
    Ok(Report {
        command: "bf",
        inputs: json!({"a": report::matrix(&a), "g": report::poly(&g)}),
        config: json!({}),
        result: json!({
            "invariant_factors": report::ints(&fp.invariant_factors),
            "order": report::int(&fp.order),
            "trivial": grp.module.is_trivial(),
        }),
        text,
        code: 0,
    })
}

fn cmd_screen(a: &Path, b: &Path, fam: FamilyArgs) -> Result<Report> {
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    let inputs = json!({"a": report::matrix(&a), "b": report::matrix(&b)});
    let config = json!({"family": report::family_params(&fam.params()), "budget": fam.budget});
    let sim = similarity_check(&a, &b)?;
    if let Similarity::NotSimilar(w) = &sim {
        return Ok(Report {
            command: "screen",
            inputs,
            config,
            result: json!({"similarity": report::similarity(&sim)}),
            text: vec![format!("not similar: {w}")],
            code: 0,
        });
    }
    let family = default_family(&a, &b, fam.params());
    let r = strong_bf_screen(&a, &b, &family, fam.budget)?;
    let code = if matches!(r.outcome, ScreenOutcome::PartialUnknown { .. }) { 2 } else { 0 };
    let mut text = vec![format!("family: {}", list(&r.family))];
    text.push(format!("{}", r.outcome));
    Ok(Report {
        command: "screen",
        inputs,
        config,
        result: json!({"similarity": report::similarity(&sim), "screen": report::screen(&r)}),
        text,
        code,
    })
}

fn cmd_tower(path: &Path, levels: u32, verify: bool, probe_bound: u64) -> Result<Report> {
    let a = read_matrix(path)?;
    let cap = PowerCap {
        max_bits: max_bits()?,
        ..PowerCap::default()
    };
    let t = build_tower(&a, levels, cap)?;
    let mut text = Vec::new();
    let lv: Vec<Value> = t
        .levels()
        .iter()
        .map(|l| {
            let fp = l.module().fingerprint();
            text.push(format!("level {}: {fp}", l.k));
            json!({"k": l.k, "order": report::int(&fp.order), "invariant_factors": report::ints(&fp.invariant_factors)})
        })
        .collect();
    let mut result = json!({"levels": lv});
    let mut code = 0;
    if verify {
        let nesting = t.verify_nesting();
        let compat = t.verify_epi_compatibility();
        let fact: Vec<Value> = (1..=levels.min(cap.max_k - 1))
            .map(|k| Ok(json!({"k": k, "holds": verify_factorization(&a, k, cap)?})))
            .collect::<Result<_>>()?;
        let top = levels.max(2);
        let mut filt = Vec::new();
        for k1 in 1..=top {
            for k2 in k1..=top {
                if k1 + k2 <= cap.max_k {
                    filt.push(json!({"k1": k1, "k2": k2, "holds": verify_filtered(&a, k1, k2, cap)?}));
                }
            }
        }
        let probe = injectivity_probe(&t, probe_bound);
        let all = nesting
            && compat
            && fact.iter().chain(&filt).all(|v| v["holds"] == json!(true))
            && probe.all_escaped();
        text.push(format!("nesting: {nesting}, epimorphisms compose: {compat}"));
        text.push(format!(
            "factorisation: {}",
            fact.iter().all(|v| v["holds"] == json!(true))
        ));
        text.push(format!("filtered: {}", filt.iter().all(|v| v["holds"] == json!(true))));
        text.push(format!(
            "probe (bound {probe_bound}): {} vectors, escapes per level ({}), {} stuck, {} certified by inverse, {} by norm",
            probe.vectors,
            list(&probe.escape_counts),
            probe.stuck.len(),
            probe.inverse_certified,
            probe.norm_certified
        ));
        if !all {
            text.push("verification FAILED".into());
            code = 1;
        }
        result["verify"] = json!({
            "nesting": nesting,
            "epimorphisms_compose": compat,
            "factorization": fact,
            "filtered": filt,
            "probe": report::probe(&probe),
            "all_passed": all,
        });
    }
    Ok(Report {
        command: "tower",
        inputs: json!({"a": report::matrix(&a)}),
        config: json!({"levels": levels, "verify": verify, "probe_bound": probe_bound, "max_bits": cap.max_bits}),
        result,
        text,
        code,
    })
}

fn cmd_ideal(path: &Path, action: &IdealCmd) -> Result<Report> {
    let a = read_matrix(path)?;
    let mut inputs = json!({"a": report::matrix(&a)});
    let (sub, config, result, text) = match action {
        IdealCmd::Show => {
            let ei = eigen_ideal(&a)?;
            let u: Vec<Value> = ei.vector.iter().map(report::element).collect();
            let text = vec![
                format!("field: {}", ei.ideal.field()),
                format!("eigenvector: ({})", list(&ei.vector)),
                format!("ideal: {}", ei.ideal),
            ];
            ("show", json!({}), json!({"field": ei.ideal.field().to_string(), "eigenvector": u, "ideal": report::ideal(&ei.ideal)}), text)
        }
        IdealCmd::Ring => {
            let ei = eigen_ideal(&a)?;
            let o = ei.ideal.multiplier_ring()?;
            let text = vec![format!("multiplier ring: {o}")];
            ("ring", json!({}), json!({"ring": report::order(&o)}), text)
        }
        IdealCmd::WeakEquiv { other } => {
            let b = read_matrix(other)?;
            inputs["b"] = report::matrix(&b);
            let (ei, ej) = eigen_ideal_pair(&a, &b)?;
            let w = weak_equivalence(&ei.ideal, &ej.ideal)?;
            let text = vec![match &w {
                toralconj_core::ideal::WeakEquivalence::WeaklyEquivalent { ring, .. } => {
                    format!("WeaklyEquivalent over {ring}: I X = J, J Y = I, X Y = O verified")
                }
                toralconj_core::ideal::WeakEquivalence::No(why) => format!("not weakly equivalent: {why}"),
            }];
            ("weak-equiv", json!({}), json!({"weak_equivalence": report::weak(&w)}), text)
        }
        IdealCmd::Principal { other, bound } => {
            let b = read_matrix(other)?;
            inputs["b"] = report::matrix(&b);
            let (ei, ej) = eigen_ideal_pair(&a, &b)?;
            let x = ej.ideal.colon(&ei.ideal)?;
            let p = principal_search(&x, *bound)?;
            let text = vec![
                format!("(J : I) = {x}"),
                match &p {
                    PrincipalSearch::Principal(z) => format!("Principal: generated by {z}"),
                    PrincipalSearch::NotFoundWithinBound { bound, tried } => {
                        format!("NotFoundWithinBound (bound {bound}, {tried} tried)")
                    }
                },
            ];
            let result = json!({"colon": report::ideal(&x), "principal_search": report::principal(&p)});
            ("principal", json!({"bound": bound}), result, text)
        }
    };
    inputs["subcommand"] = json!(sub);
    Ok(Report {
        command: "ideal",
        inputs,
        config,
        result,
        text,
        code: 0,
    })
}

fn cmd_decide(a: &Path, b: &Path, config: Config) -> Result<Report> {
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    if a.rows() != b.rows() {
        bail!("matrices have sizes {} and {}", a.rows(), b.rows());
    }
    let v = decide(&a, &b, &config)?;
    let mut text = Vec::new();
    let code = match &v.outcome {
        Outcome::Conjugate(c) => {
            text.push(format!("Conjugate: C = {}", matrix_text(c)));
            text.push(format!("A C = C B, det C = {}", c.det()));
            0
        }
        Outcome::NotConjugate(w) => {
            text.push(format!("NotConjugate: {w}"));
            0
        }
        Outcome::Unknown(reasons) => {
            text.push("Unknown".into());
            text.extend(reasons.iter().map(|r| format!("  {r}")));
            2
        }
    };
    if let Some(s) = &v.evidence.screen {
        text.push(format!("screen ({} polynomials): {}", s.family.len(), s.outcome));
    }
    if let Some(toralconj_core::pipeline::TowerEvidence::Classified { class, .. }) = &v.evidence.tower {
        text.push(format!("tower: Δ {}", class_name(class)));
    }
    Ok(Report {
        command: "decide",
        inputs: json!({"a": report::matrix(&a), "b": report::matrix(&b)}),
        config: report::config(&config),
        result: report::verdict(&v),
        text,
        code,
    })
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.cmd {
        Cmd::Bf { matrix, g } => cmd_bf(matrix, g),
        Cmd::Screen { a, b, family } => cmd_screen(a, b, *family),
        Cmd::Tower {
            matrix,
            levels,
            verify,
            probe_bound,
        } => cmd_tower(matrix, *levels, *verify, *probe_bound),
        Cmd::Ideal { matrix, action } => cmd_ideal(matrix, action),
        Cmd::Decide {
            a,
            b,
            family,
            search_bound,
            principal_bound,
            generator_bound,
            depth,
            entry_bound,
            max_points,
        } => {
            let config = Config {
                family: family.params(),
                iso_budget: family.budget,
                search_bound: *search_bound,
                principal_bound: *principal_bound,
                generator_bound: *generator_bound,
                tower_depth: *depth,
                classify: ClassifyParams {
                    entry_bound: *entry_bound,
                    max_points: *max_points,
                },
                cap: PowerCap {
                    max_bits: max_bits()?,
                    ..PowerCap::tower()
                },
            };
            cmd_decide(a, b, config)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let start = Instant::now();
    let rep = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let elapsed = start.elapsed().as_secs_f64() * 1000.0;
    if cli.json {
        let mut doc = json!({
            "command": rep.command,
            "inputs": rep.inputs,
            "config": rep.config,
            "result": rep.result,
            "exit_code": rep.code,
        });
        if cli.timing {
            doc["timing_ms"] = json!((elapsed * 1000.0).round() / 1000.0);
        }
        println!("{}", serde_json::to_string_pretty(&doc).expect("serialisable"));
    } else {
        for line in &rep.text {
            println!("{line}");
        }
        if cli.timing {
            println!("time: {elapsed:.1} ms");
        }
    }
    ExitCode::from(rep.code)
}
