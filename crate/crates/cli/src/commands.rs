use std::fs;
use std::io::Write;
use std::path::PathBuf;

use remlab_core::analytic_bk::{bk_chain, format_subset};
use remlab_core::analytic_grem::{beta_ladder, exp_ladder, recover_params};
use remlab_core::simulator::{converge, empirical_ldp, simulate, SimConfig};
use remlab_core::{BetaLadder, Error, ModelSpec, RecoveryFamily};
use serde_json::json;

use crate::args::Format;
use crate::config::{CommandName, Recovery, RunConfig, VERSION};
use crate::error::{invalid, CliError, CliResult};
use crate::output::{json, num, Table};

pub fn run(cfg: &RunConfig, manifest: Option<PathBuf>) -> CliResult<()> {
    cfg.check()?;
    let body = match cfg.command {
        CommandName::Analytic => analytic(cfg)?,
        CommandName::Simulate => match &cfg.hist {
            Some(edges) => histogram(cfg, edges)?,
            None => simulation(cfg)?,
        },
        CommandName::Converge => convergence(cfg)?,
        CommandName::Ladder => ladder(cfg)?,
        CommandName::Recover => recover(cfg)?,
        CommandName::Validate => json(&json!({ "status": "ok", "model": cfg.model()?.label() }))?,
    };
    match &cfg.out {
        Some(path) => fs::write(path, &body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout().write_all(&body).map_err(|e| CliError::Io(e.to_string()))?,
    }
    let manifest = manifest.or_else(|| {
        cfg.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest {
        let echo = RunConfig { version: Some(VERSION.to_string()), ..cfg.clone() };
        fs::write(&path, json(&echo)?).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn analytic(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let model = cfg.model()?;
    let label = model.label();
    let energies = cfg.betas.iter().map(|&b| model.analytic_energy(b)).collect::<Result<Vec<f64>, Error>>()?;
    match cfg.format {
        Format::Csv => {
            let mut t = Table::new(&["model", "beta", "energy"])?;
            for (b, e) in cfg.betas.iter().zip(&energies) {
                t.row([label.clone(), num(*b), num(*e)])?;
            }
            t.finish()
        }
        Format::Json => {
            let rows: Vec<_> = cfg.betas.iter().zip(&energies).map(|(b, e)| json!({ "beta": b, "energy": e })).collect();
            json(&json!({ "model": label, "rows": rows }))
        }
    }
}

fn sim_config(cfg: &RunConfig, n: usize) -> SimConfig {
    let mut sc = SimConfig::new(n, cfg.betas.clone(), cfg.replicas, cfg.seed.unwrap_or_default()).with_tree(cfg.tree);
    if let Some(s) = cfg.samples {
        sc = sc.with_samples(s);
    }
    sc
}

fn simulation(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let res = simulate(cfg.model()?, &sim_config(cfg, cfg.n.unwrap_or_default()))?;
    match cfg.format {
        Format::Csv => {
            let mut t = Table::new(&["model", "N", "seed", "replica", "beta", "logZ_over_N"])?;
            for (r, row) in res.values.iter().enumerate() {
                for (b, v) in res.betas.iter().zip(row) {
                    t.row([res.model.clone(), res.n.to_string(), res.seed.to_string(), r.to_string(), num(*b), num(*v)])?;
                }
            }
            t.finish()
        }
        Format::Json => json(&res),
    }
}

fn histogram(cfg: &RunConfig, edges: &[f64]) -> CliResult<Vec<u8>> {
    let ModelSpec::Rem { rem } = cfg.model()? else {
        return Err(invalid("hist", "histograms need a single-level rem model"));
    };
    let (rate, _) = rem.rate_and_objective().ok_or_else(|| invalid("hist", "model has no driving distribution"))?;
    let h = empirical_ldp(&rate, cfg.n.unwrap_or_default(), edges, cfg.seed.unwrap_or_default())?;
    match cfg.format {
        Format::Csv => {
            let mut t = Table::new(&["lo", "hi", "mass", "rate_stat"])?;
            for j in 0..h.mass.len() {
                t.row([num(h.lo[j]), num(h.hi[j]), num(h.mass[j]), num(h.rate_stat[j])])?;
            }
            t.finish()
        }
        Format::Json => json(&h),
    }
}

fn convergence(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let model = cfg.model()?;
    if cfg.samples.is_some() {
        log::warn!("converge always enumerates; ignoring --samples");
    }
    let table = converge(model, &cfg.n_list, &cfg.betas, cfg.replicas, cfg.seed.unwrap_or_default(), cfg.tree)?;
    let summary: Vec<String> = table.median_error.iter().map(|(n, e)| format!("N={n}: {e:.3e}")).collect();
    eprintln!(
        "median error {}; {}",
        summary.join(", "),
        if table.decreasing { "nonincreasing in N" } else { "not monotone in N" }
    );
    match cfg.format {
        Format::Csv => {
            let label = model.label();
            let mut t = Table::new(&["model", "N", "beta", "mean", "std", "analytic", "error"])?;
            for r in &table.rows {
                t.row([label.clone(), r.n.to_string(), num(r.beta), num(r.mean), num(r.std), num(r.analytic), num(r.error)])?;
            }
            t.finish()
        }
        Format::Json => json(&table),
    }
}

fn grem_ladder(cfg: &RunConfig) -> CliResult<Option<BetaLadder>> {
    let Some(ModelSpec::Grem { grem }) = &cfg.model else {
        return Ok(None);
    };
    let ladder = match grem.uniform_gamma() {
        Some(g) if g > 1.0 => beta_ladder(grem)?,
        Some(1.0) => exp_ladder(grem)?,
        _ => return Err(invalid("gamma", "ladders need a uniform family with gamma >= 1")),
    };
    Ok(Some(ladder))
}

fn ladder(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    if let Some(ladder) = grem_ladder(cfg)? {
        let finite = ladder.finite_betas();
        let ranks = &ladder.ranks[..finite.len()];
        return match cfg.format {
            Format::Json => json(&json!({ "model": "grem", "betas": finite, "ranks": ranks })),
            Format::Csv => {
                let mut t = Table::new(&["beta", "rank"])?;
                for (b, r) in finite.iter().zip(ranks) {
                    t.row([num(*b), r.to_string()])?;
                }
                t.finish()
            }
        };
    }
    let Some(ModelSpec::Bk { bk }) = &cfg.model else {
        return Err(invalid("model", "ladders exist for grem and bk models"));
    };
    let chain = bk_chain(bk)?;
    let k = chain.betas.iter().filter(|b| b.is_finite()).count();
    let sets: Vec<String> = chain.sets[..k].iter().map(|&s| format_subset(s)).collect();
    let blocks: Vec<Vec<usize>> = chain.blocks[..k].iter().map(|b| b.iter().map(|i| i + 1).collect()).collect();
    match cfg.format {
        Format::Json => json(&json!({
            "model": "bk",
            "betas": &chain.betas[..k],
            "sets": sets,
            "blocks": blocks,
            "surviving_count": chain.surviving_count,
        })),
        Format::Csv => {
            let mut t = Table::new(&["beta", "set"])?;
            for (b, s) in chain.betas[..k].iter().zip(&sets) {
                t.row([num(*b), s.clone()])?;
            }
            t.finish()
        }
    }
}

fn recover(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let curve = match &cfg.curve {
        Some(c) => c.clone(),
        None => cfg.model()?.curve()?.ok_or_else(|| invalid("model", "no closed-form curve for this model"))?,
    };
    let family = match cfg.recovery {
        Some(Recovery::Exp) => RecoveryFamily::Exp,
        Some(Recovery::Gamma { gamma }) => RecoveryFamily::Gamma(gamma),
        None => match &cfg.model {
            Some(ModelSpec::Grem { grem }) => match grem.uniform_gamma() {
                Some(1.0) => RecoveryFamily::Exp,
                Some(g) => RecoveryFamily::Gamma(g),
                None => return Err(invalid("kind", "give --kind exp or --kind gamma --gamma G")),
            },
            _ => return Err(invalid("kind", "give --kind exp or --kind gamma --gamma G")),
        },
    };
    let spec = recover_params(&curve, family)?;
    match cfg.format {
        Format::Json => json(&spec),
        Format::Csv => {
            let mut t = Table::new(&["level", "p", "a"])?;
            for i in 0..spec.n() {
                t.row([(i + 1).to_string(), num(spec.p[i]), num(spec.a[i])])?;
            }
            t.finish()
        }
    }
}
