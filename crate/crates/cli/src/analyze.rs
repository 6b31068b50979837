use std::fs;
use std::path::Path;

use netscale_core::ingest::{read_stream, IdFilter};
use netscale_core::window::{Evaluator, WindowResult};
use netscale_core::{
    window_stats, AnalysisRequest, Anonymizer, DegreeKind, IdSet, Quadrant, QuadrantSpec, Quantity, StreamFormat,
    ValidityFilter, WindowSpec,
};
use serde_json::Value;

use crate::tables::{float, Table};
use crate::{input_err, usage_err, AnalyzeArgs, CliError, InputFormat};

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let spec = WindowSpec {
        base_window: args.base_window,
        levels: args.levels,
        start_index: args.start_index,
    };
    spec.validate().map_err(usage_err)?;
    if args.threads == 0 {
        return Err(usage_err("--threads must be at least 1"));
    }

    let anonymizer = args
        .anonymize_key
        .as_deref()
        .map(|key| Anonymizer::from_hex(key).ok_or_else(|| usage_err(format!("invalid anonymization key `{key}`"))))
        .transpose()?;
    let filter = ValidityFilter::new(
        IdFilter::new(opt_id_set(&args.allow_src)?, opt_id_set(&args.deny_src)?.unwrap_or_default()),
        IdFilter::new(opt_id_set(&args.allow_dst)?, opt_id_set(&args.deny_dst)?.unwrap_or_default()),
    )
    .map_err(usage_err)?;

    let mut request = AnalysisRequest {
        quadrant: None,
        distributions: parse_distributions(&args.distributions)?,
        keep_matrices: false,
    };
    match (&args.quadrant, &args.internal) {
        (Some(q), Some(internal)) => {
            let q: Quadrant = q.parse().map_err(usage_err)?;
            let mut qs = QuadrantSpec::new(load_id_set(internal)?, q);
            if let Some(anon) = &anonymizer {
                qs = qs.relabeled(anon.clone());
            }
            request.quadrant = Some(qs);
        }
        (Some(_), None) => return Err(usage_err("--quadrant requires --internal")),
        (None, internal) => {
            // Reject a malformed set even when no quadrant uses it.
            if let Some(internal) = internal {
                load_id_set(internal)?;
            }
        }
    }

    let mut evaluator = Evaluator::new(spec, request.clone(), args.threads).map_err(usage_err)?;
    let mut levels: Vec<Vec<WindowResult>> = vec![Vec::new(); spec.levels as usize];
    let mut sink = |r: WindowResult| levels[r.level as usize].push(r);
    let mut valid = 0u64;
    for path in &args.input {
        let format = match args.input_format {
            Some(InputFormat::Binary) => StreamFormat::Binary,
            Some(InputFormat::Csv) => StreamFormat::Csv,
            None => StreamFormat::from_path(path),
        };
        let context = |e: &dyn std::fmt::Display| input_err(format!("{}: {e}", path.display()));
        for record in read_stream(path, format).map_err(|e| context(&e))? {
            let record = record.map_err(|e| context(&e))?;
            if !filter.accepts(&record) {
                continue;
            }
            valid += 1;
            let record = match &anonymizer {
                Some(anon) => anon.apply(record),
                None => record,
            };
            evaluator.push(record, &mut sink).map_err(|e| context(&e))?;
        }
    }
    let summary = evaluator.finish(&mut sink).map_err(input_err)?;
    if valid == 0 {
        return Err(input_err("no valid packets after filtering"));
    }
    if levels[0].is_empty() {
        return Err(input_err(format!(
            "{} valid packets do not fill one window of {} after skipping {} windows",
            valid, spec.base_window, spec.start_index
        )));
    }

    fs::create_dir_all(&args.out).map_err(|e| input_err(format!("{}: {e}", args.out.display())))?;
    let mut index = Table::new(&["level", "log2_window", "window_size", "windows"]);
    for (level, windows) in levels.iter().enumerate() {
        let size = spec.window_size(level as u8);
        index.push(vec![
            level.into(),
            size.trailing_zeros().into(),
            size.into(),
            windows.len().into(),
        ]);
        if windows.is_empty() {
            continue;
        }
        let stem = format!("level{}", size.trailing_zeros());
        quantity_table(windows, &spec).write(&args.out, &format!("{stem}.quantities"), args.format)?;
        for &kind in &request.distributions {
            distribution_table(windows, kind).write(&args.out, &format!("{stem}.{kind}"), args.format)?;
        }
    }
    index.write(&args.out, "levels", args.format)?;

    let complete: Vec<String> = summary.windows_per_level.iter().map(u64::to_string).collect();
    println!(
        "{valid} valid packets, {} discarded in the trailing partial window; windows per level: {}",
        summary.discarded,
        complete.join(" ")
    );
    Ok(())
}

fn quantity_table(windows: &[WindowResult], spec: &WindowSpec) -> Table {
    let mut columns = vec!["window", "first_packet"];
    columns.extend(Quantity::ALL.iter().map(|q| q.name()));
    let mut table = Table::new(&columns);
    for w in windows {
        let first = (spec.start_index * spec.base_window) + w.index * w.window_size;
        let mut row: Vec<Value> = vec![w.index.into(), first.into()];
        row.extend(Quantity::ALL.iter().map(|&q| Value::from(w.quantities.get(q))));
        table.push(row);
    }
    table
}

/// Per-bin mean and standard deviation across the windows that have a
/// distribution of this kind.
fn distribution_table(windows: &[WindowResult], kind: DegreeKind) -> Table {
    let mut table = Table::new(&["bin", "edge", "mean", "std", "windows"]);
    let dists: Vec<_> = windows.iter().filter_map(|w| w.distribution(kind).cloned()).collect();
    if let Ok(stats) = window_stats(&dists) {
        for b in stats.bins {
            table.push(vec![
                b.index.into(),
                b.edge.into(),
                float(b.mean),
                float(b.std),
                stats.windows.into(),
            ]);
        }
    }
    table
}

fn parse_distributions(text: &str) -> Result<Vec<DegreeKind>, CliError> {
    match text.trim() {
        "all" => Ok(DegreeKind::ALL.to_vec()),
        "none" | "" => Ok(Vec::new()),
        list => {
            let mut kinds = Vec::new();
            for name in list.split(',') {
                let kind: DegreeKind = name.trim().parse().map_err(usage_err)?;
                if !kinds.contains(&kind) {
                    kinds.push(kind);
                }
            }
            Ok(kinds)
        }
    }
}

fn opt_id_set(arg: &Option<String>) -> Result<Option<IdSet>, CliError> {
    arg.as_deref().map(load_id_set).transpose()
}

/// An existing file is read as an ID-set listing; anything else is parsed inline.
fn load_id_set(arg: &str) -> Result<IdSet, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        IdSet::parse(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
    } else {
        IdSet::parse(arg).map_err(usage_err)
    }
}
