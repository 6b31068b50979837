use std::fs;
use std::path::Path;

use netscale_core::scaling::fit_scaling_with_threshold;
use netscale_core::{alignment_check, LevelCurve, Quantity, ScalingFit, ScalingSample, Verdict};
use serde_json::Value;

use crate::tables::{float, opt_float, Table};
use crate::{input_err, usage_err, CliError, ScalingArgs, TableFormat};

/// One level's per-window series for every quantity.
struct Level {
    window_size: u64,
    first_packet: Vec<u64>,
    series: Vec<Vec<f64>>,
}

struct QuantityFit {
    fit: Option<ScalingFit>,
    samples: Vec<ScalingSample>,
    dispersion: Option<f64>,
}

pub fn cmd_scaling(args: &ScalingArgs) -> Result<(), CliError> {
    if args.threshold.is_nan() || args.threshold <= 0.0 {
        return Err(usage_err("--threshold must be positive"));
    }
    let input_format = detect_format(&args.input)?;
    let levels = read_levels(&args.input, input_format)?;
    if levels.len() < 2 {
        return Err(input_err(format!(
            "{}: scaling needs analyze output for at least 2 levels, found {}",
            args.input.display(),
            levels.len()
        )));
    }
    let n0 = levels[0].window_size;

    let fits: Vec<QuantityFit> = (0..Quantity::ALL.len())
        .map(|qi| {
            let samples: Vec<ScalingSample> = levels
                .iter()
                .map(|l| ScalingSample::from_values(l.window_size, &l.series[qi]))
                .collect();
            let fit = fit_scaling_with_threshold(&samples, args.threshold).ok();
            let dispersion = fit.as_ref().and_then(|f| {
                let curves: Vec<LevelCurve> = levels
                    .iter()
                    .map(|l| LevelCurve {
                        window_size: l.window_size,
                        values: fractions(l, qi),
                    })
                    .collect();
                alignment_check(&curves, 1.0 - f.exponent, n0).ok().filter(|d| d.is_finite())
            });
            QuantityFit {
                fit,
                samples,
                dispersion,
            }
        })
        .collect();

    let out = args.out.as_deref().unwrap_or(&args.input);
    fs::create_dir_all(out).map_err(|e| input_err(format!("{}: {e}", out.display())))?;

    let mut long = Table::new(&[
        "quantity",
        "window_size",
        "mean",
        "std",
        "alpha",
        "intercept",
        "residual",
        "verdict",
        "dispersion",
    ]);
    let mut summary = Table::new(&["quantity", "alpha", "intercept", "residual", "verdict", "dispersion", "levels"]);
    let mut alignment = Table::new(&["quantity", "window_size", "first_packet", "fraction", "scaled_fraction"]);
    for (qi, (q, qf)) in Quantity::ALL.iter().zip(&fits).enumerate() {
        let head = fit_cells(qf);
        for s in &qf.samples {
            let mut row = vec![Value::from(q.name()), s.window_size.into(), float(s.mean), float(s.std)];
            row.extend(head.iter().cloned());
            long.push(row);
        }
        let mut row = vec![Value::from(q.name())];
        row.extend(head);
        row.push(qf.samples.len().into());
        summary.push(row);

        if let Some(fit) = &qf.fit {
            let beta = 1.0 - fit.exponent;
            for l in &levels {
                let scale = (l.window_size as f64 / n0 as f64).powf(beta);
                for (first, fraction) in l.first_packet.iter().zip(fractions(l, qi)) {
                    alignment.push(vec![
                        q.name().into(),
                        l.window_size.into(),
                        (*first).into(),
                        float(fraction),
                        float(fraction * scale),
                    ]);
                }
            }
        }
    }
    long.write(out, "scaling", args.format)?;
    summary.write(out, "scaling_summary", args.format)?;
    alignment.write(out, "alignment", args.format)?;

    for (q, qf) in Quantity::ALL.iter().zip(&fits) {
        match &qf.fit {
            Some(f) if f.verdict == Verdict::Scaling => {
                println!("{:<24} alpha {:>7.4}  residual {:.4}", q.name(), f.exponent, f.residual)
            }
            _ => println!("{:<24} no simple scaling relation", q.name()),
        }
    }
    Ok(())
}

/// alpha, intercept, residual, verdict, dispersion
fn fit_cells(qf: &QuantityFit) -> Vec<Value> {
    match &qf.fit {
        Some(f) => vec![
            float(f.exponent),
            float(f.intercept),
            float(f.residual),
            f.verdict.name().into(),
            opt_float(qf.dispersion),
        ],
        None => vec![Value::Null, Value::Null, Value::Null, Verdict::None.name().into(), Value::Null],
    }
}

fn fractions(level: &Level, qi: usize) -> Vec<f64> {
    level.series[qi].iter().map(|v| v / level.window_size as f64).collect()
}

fn detect_format(dir: &Path) -> Result<TableFormat, CliError> {
    for format in [TableFormat::Tsv, TableFormat::Json] {
        if dir.join(format!("levels.{}", format.extension())).is_file() {
            return Ok(format);
        }
    }
    Err(input_err(format!("{}: no levels.tsv or levels.json; not an analyze output directory", dir.display())))
}

fn read_levels(dir: &Path, format: TableFormat) -> Result<Vec<Level>, CliError> {
    let index = Table::read(dir, "levels", format)?;
    let bad = |what: &str| input_err(format!("{}: levels table: {what}", dir.display()));
    let size_col = index.column("window_size").ok_or_else(|| bad("no window_size column"))?;
    let count_col = index.column("windows").ok_or_else(|| bad("no windows column"))?;

    let mut levels = Vec::new();
    for r in 0..index.rows.len() {
        let window_size = index.u64(r, size_col).ok_or_else(|| bad("bad window_size"))?;
        let windows = index.u64(r, count_col).ok_or_else(|| bad("bad windows"))?;
        if windows == 0 {
            continue;
        }
        if !window_size.is_power_of_two() {
            return Err(bad("window size is not a power of two"));
        }
        let stem = format!("level{}.quantities", window_size.trailing_zeros());
        let table = Table::read(dir, &stem, format)?;
        let bad = |what: String| input_err(format!("{}: {stem}: {what}", dir.display()));
        let first_col = table.column("first_packet").ok_or_else(|| bad("no first_packet column".into()))?;
        let mut series = Vec::with_capacity(Quantity::ALL.len());
        for q in Quantity::ALL {
            let col = table.column(q.name()).ok_or_else(|| bad(format!("no {q} column")))?;
            let values = (0..table.rows.len())
                .map(|r| table.f64(r, col).ok_or_else(|| bad(format!("row {}: bad {q}", r + 1))))
                .collect::<Result<Vec<f64>, _>>()?;
            series.push(values);
        }
        let first_packet = (0..table.rows.len())
            .map(|r| table.u64(r, first_col).ok_or_else(|| bad(format!("row {}: bad first_packet", r + 1))))
            .collect::<Result<Vec<u64>, _>>()?;
        if first_packet.is_empty() {
            continue;
        }
        levels.push(Level {
            window_size,
            first_packet,
            series,
        });
    }
    levels.sort_by_key(|l| l.window_size);
    Ok(levels)
}
