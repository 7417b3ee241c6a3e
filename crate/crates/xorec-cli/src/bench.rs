//! Throughput sweep over block sizes and pipelines. Machine-dependent,
//! informational.

use std::time::Instant;

use clap::Args;
use rand::RngCore;
use serde::Serialize;

use xorec::codec::{build_encode_program, CodecParams, Compression, PipelineConfig, Scheduler};
use xorec::exec::{run_with, wide_kernel_available, Kernel, Program};

use crate::CmdError;

#[derive(Args)]
pub struct BenchArgs {
    /// Data shard count
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Parity shard count
    #[arg(long, default_value_t = 4)]
    p: usize,
    /// Payload size in bytes
    #[arg(long, default_value_t = 10 * 1000 * 1000)]
    size: usize,
    /// Timed executions per cell
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

const BLOCK_SIZES: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

#[derive(Serialize)]
struct BenchRow {
    block_size: usize,
    /// Unoptimized program, bytewise kernel.
    scalar_gbps: f64,
    /// Unoptimized program, wide kernel.
    unoptimized_gbps: f64,
    /// Compressed + fused + scheduled program, wide kernel.
    optimized_gbps: f64,
}

fn throughput(
    prog: &Program,
    packets: &[&[u8]],
    payload: usize,
    block_size: usize,
    reps: usize,
    kernel: Kernel,
) -> f64 {
    // one warmup, then timed runs
    let _ = run_with(prog, packets, block_size, kernel).expect("aligned by construction");
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(
            run_with(prog, packets, block_size, kernel).expect("aligned by construction"),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    payload as f64 * reps as f64 / secs / 1e9
}

pub fn run(args: BenchArgs) -> Result<(), CmdError> {
    let params = CodecParams::new(args.n, args.p).map_err(CmdError::op)?;
    if !wide_kernel_available() {
        eprintln!("note: no 32-byte kernel on this machine; wide columns fall back to 8-byte lanes");
    }
    let mut rows = Vec::new();
    for &block_size in &BLOCK_SIZES {
        let base = PipelineConfig {
            compression: Compression::None,
            fuse: false,
            scheduler: Scheduler::None,
            block_size,
        };
        let full = PipelineConfig { block_size, ..PipelineConfig::default() };
        let unopt = build_encode_program(params, &base).map_err(CmdError::op)?;
        let opt = build_encode_program(params, &full).map_err(CmdError::op)?;

        let unit = args.n * 8 * block_size;
        let payload = args.size.div_ceil(unit).max(1) * unit;
        let packet_len = payload / (args.n * 8);
        let mut data = vec![0u8; payload];
        rand::thread_rng().fill_bytes(&mut data);
        let packets: Vec<&[u8]> = data.chunks_exact(packet_len).collect();

        rows.push(BenchRow {
            block_size,
            scalar_gbps: throughput(&unopt, &packets, payload, block_size, args.reps, Kernel::Scalar),
            unoptimized_gbps: throughput(&unopt, &packets, payload, block_size, args.reps, Kernel::Auto),
            optimized_gbps: throughput(&opt, &packets, payload, block_size, args.reps, Kernel::Auto),
        });
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows).map_err(CmdError::op)?);
        return Ok(());
    }
    println!(
        "RS({},{}) encode throughput (GB/s), {} bytes x {} reps",
        args.n, args.p, args.size, args.reps
    );
    println!("{:>10}  {:>8}  {:>8}  {:>9}", "block", "scalar", "unopt", "optimized");
    for r in &rows {
        println!(
            "{:>10}  {:>8.2}  {:>8.2}  {:>9.2}",
            r.block_size, r.scalar_gbps, r.unoptimized_gbps, r.optimized_gbps
        );
    }
    Ok(())
}
