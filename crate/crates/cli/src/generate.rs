use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use netscale_core::ingest::BinaryWriter;
use netscale_core::synth::{internal_set, TopologyKind, TopologySpec, TopologyStream};
use netscale_core::TrafficMatrix;

use crate::{input_err, usage_err, CliError, GenerateArgs, InputFormat};

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let kind: TopologyKind = args.topology.parse().map_err(usage_err)?;
    let mut spec = TopologySpec::new(kind, args.packets)
        .with_zipf(args.zipf_s, args.population)
        .with_seed(args.seed);
    if args.balanced {
        spec = spec.balanced();
    }
    if let Some(peers) = args.peers {
        spec = spec.with_peers(peers);
    }
    let stream = TopologyStream::new(spec).map_err(usage_err)?;

    let io_err = |e: std::io::Error| input_err(format!("{}: {e}", args.out.display()));
    let file = BufWriter::new(File::create(&args.out).map_err(io_err)?);
    let mut keys = Vec::with_capacity(args.packets.min(1 << 26) as usize);
    match args.format {
        InputFormat::Binary => {
            let mut writer = BinaryWriter::new(file).map_err(io_err)?;
            for r in stream {
                writer.write(r).map_err(io_err)?;
                keys.push((r.src, r.dst));
            }
            writer.finish().map_err(io_err)?;
        }
        InputFormat::Csv => {
            let mut file = file;
            writeln!(file, "src,dst").map_err(io_err)?;
            for r in stream {
                writeln!(file, "{},{}", r.src, r.dst).map_err(io_err)?;
                keys.push((r.src, r.dst));
            }
            file.flush().map_err(io_err)?;
        }
    }

    let sidecar = sidecar_path(&args.out);
    std::fs::write(&sidecar, internal_set().to_string()).map_err(|e| input_err(format!("{}: {e}", sidecar.display())))?;

    let links = TrafficMatrix::from_keys(&mut keys).nnz();
    println!(
        "{}: {} packets, {} unique links ({}); internal set in {}",
        args.out.display(),
        keys.len(),
        links,
        kind,
        sidecar.display()
    );
    Ok(())
}

/// `<out>.internal`
pub(crate) fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".internal");
    PathBuf::from(name)
}
