use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use fiberwave_core::helmholtz::junction_matrix;
use fiberwave_core::schema::{matrix_to_value, parse_geometry, parse_graph, tabulated_block_from};
use fiberwave_core::solver::{self, IncidentSelection};
use fiberwave_core::spectrum::{spectrum_csv, sweep_with_threshold};
use fiberwave_core::{global_ordering, validate_graph, Error, MetricGraph, SolveRequest};
use serde_json::json;

use crate::{Failure, JunctionArgs, SolveArgs, SweepArgs, ValidateArgs, EXIT_INPUT, EXIT_IO, EXIT_NUMERIC};

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, anyhow!("reading {}: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> Result<MetricGraph, Failure> {
    let text = read_text(path)?;
    parse_graph(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.error = f.error.context(format!("in {}", path.display()));
        f
    })
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_IO, anyhow!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_threshold(t: f64) -> Result<(), Failure> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rcond threshold {t} must lie in (0, 1)")).into())
    }
}

pub fn solve(a: SolveArgs) -> Result<(), Failure> {
    check_threshold(a.rcond_threshold)?;
    let g = load_graph(&a.graph)?;
    let incident = match (a.channel, a.mode) {
        (Some(channel), Some(mode)) => IncidentSelection::One { channel, mode },
        _ => IncidentSelection::All,
    };
    let req = SolveRequest {
        lambda: a.lambda,
        eps: a.eps,
        incident,
    };
    let s = solver::solve(&g, &req)?;
    let certified = s.rcond >= a.rcond_threshold;
    if !certified && !a.allow_flagged {
        return Err(Failure::new(
            EXIT_NUMERIC,
            anyhow!(
                "solve at lambda = {} is uncertified (rcond {:e} < {:e}); pass --allow-flagged to report it",
                a.lambda,
                s.rcond,
                a.rcond_threshold
            ),
        ));
    }
    let ns = &s.scattering;
    let columns: Vec<(usize, usize)> = match incident {
        IncidentSelection::All => ns.ordering.entries.clone(),
        IncidentSelection::One { channel, mode } => vec![(channel, mode)],
    };
    let fields: Vec<_> = s
        .fields
        .iter()
        .zip(&columns)
        .map(|(f, col)| {
            let channels: Vec<_> = f
                .channels
                .iter()
                .map(|c| json!({"id": c.channel, "alpha": c.alpha, "beta": c.beta}))
                .collect();
            json!({"incident": col, "channels": channels})
        })
        .collect();
    let out = json!({
        "lambda": a.lambda,
        "eps": a.eps,
        "ordering": ns.ordering.entries,
        "columns": columns,
        "t": matrix_to_value(&ns.t),
        "rcond": s.rcond,
        "certified": certified,
        "fields": fields,
    });
    write_output(&a.out.output, &(serde_json::to_string_pretty(&out).expect("JSON value") + "\n"))
}

pub fn sweep(a: SweepArgs) -> Result<(), Failure> {
    check_threshold(a.rcond_threshold)?;
    let g = load_graph(&a.graph)?;
    let sr = sweep_with_threshold(&g, a.eps, a.lo, a.hi, a.steps, a.rcond_threshold)?;
    write_output(&a.out.output, &spectrum_csv(&sr))?;
    for (lo, hi) in &sr.flagged {
        eprintln!("flagged: [{lo}, {hi}]");
    }
    for r in &sr.resonances {
        eprintln!("resonance near lambda = {} (rcond {:e})", r.lambda, r.rcond);
    }
    if !sr.flagged.is_empty() && !a.allow_flagged {
        return Err(Failure::new(
            EXIT_NUMERIC,
            anyhow!("{} flagged interval(s); pass --allow-flagged to accept", sr.flagged.len()),
        ));
    }
    Ok(())
}

pub fn junction(a: JunctionArgs) -> Result<(), Failure> {
    let text = read_text(&a.geometry)?;
    let mut geom = parse_geometry(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.error = f.error.context(format!("in {}", a.geometry.display()));
        f
    })?;
    if let Some(h) = a.h {
        geom = geom.with_h(h);
    }
    if let Some(n) = a.n_ev {
        geom = geom.with_evanescent_modes(n);
    }
    let mut lambdas = a.lambda.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let jms = lambdas
        .iter()
        .map(|&l| junction_matrix(&geom, l))
        .collect::<Result<Vec<_>, _>>()?;
    let block = tabulated_block_from(&jms);
    write_output(&a.out.output, &(serde_json::to_string_pretty(&block).expect("JSON value") + "\n"))
}

pub fn network_validate(a: ValidateArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph)?;
    let report = validate_graph(&g);
    if !report.is_valid() {
        for v in &report.violations {
            println!("violation: {v}");
        }
        return Err(Failure::new(
            EXIT_INPUT,
            anyhow!("{} violation(s) in {}", report.violations.len(), a.graph.display()),
        ));
    }
    println!("valid: {} channels, {} vertices", g.channels.len(), g.vertices.len());
    if let Some(lambda) = a.lambda {
        let o = global_ordering(&g, lambda)?;
        println!("propagating modes at lambda = {lambda}: M = {}", o.len());
        for (c, n) in &o.entries {
            println!("  channel {c} mode {n}");
        }
    }
    Ok(())
}
