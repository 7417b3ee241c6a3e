//! Batch command line for the xorec erasure codec: shard files on disk,
//! inspect what the optimizer does to a coding program, benchmark block
//! sizes, and self-check the build.
//!
//! Exit codes: 0 success, 1 usage error, 2 operation error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use xorec::codec::{
    decode_slp, encode_slp, optimize_stages, stage_metrics, Codec, CodecParams, Compression,
    ErasurePattern, PipelineConfig, Scheduler, ShardHeader, StageMetrics, SHARD_HEADER_LEN,
};
use xorec::slp::{parse_text, Slp};

mod bench;
mod selftest;

#[derive(Parser)]
#[command(name = "xorec", version, about = "XOR-program-optimizing Reed-Solomon erasure codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split FILE into n+p shard files `<stem>.shard<k>`
    Encode(EncodeArgs),
    /// Rebuild the original file from n or more shard files
    Decode(DecodeArgs),
    /// Show per-stage program metrics for a codec or an SLP text file
    Analyze(AnalyzeArgs),
    /// Measure coding throughput across block sizes
    Bench(bench::BenchArgs),
    /// Run the built-in verification suites
    Selftest(selftest::SelftestArgs),
}

#[derive(Args, Clone)]
struct CodecOpts {
    /// Data shard count
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Parity shard count
    #[arg(long, default_value_t = 4)]
    p: usize,
    /// Pipeline: {none|repair|xorrepair}[,fuse][,dfs|greedy]
    #[arg(long, default_value = "xorrepair,fuse,dfs")]
    pipeline: String,
    /// Block size in bytes (power of two, 64..4096)
    #[arg(long, default_value_t = 1024)]
    block_size: usize,
    /// Cache capacity in blocks for the greedy scheduler and IOcost columns
    #[arg(long)]
    capacity: Option<usize>,
}

impl CodecOpts {
    fn params(&self) -> Result<CodecParams, String> {
        CodecParams::new(self.n, self.p).map_err(|e| e.to_string())
    }

    fn config(&self) -> Result<PipelineConfig, String> {
        if !self.block_size.is_power_of_two() || !(64..=4096).contains(&self.block_size) {
            return Err(format!("block size {} not a power of two in 64..4096", self.block_size));
        }
        let mut compression = None;
        let mut fuse = false;
        let mut scheduler = Scheduler::None;
        for part in self.pipeline.split(',') {
            match part.trim() {
                "none" => compression = Some(Compression::None),
                "repair" => compression = Some(Compression::Repair),
                "xorrepair" => compression = Some(Compression::XorRepair),
                "fuse" => fuse = true,
                "dfs" => scheduler = Scheduler::Dfs,
                "greedy" => {
                    let capacity = self.capacity.ok_or("greedy needs --capacity")?;
                    scheduler = Scheduler::Greedy { capacity };
                }
                other => return Err(format!("unknown pipeline stage `{other}`")),
            }
        }
        let compression = compression.ok_or("pipeline must start with none|repair|xorrepair")?;
        Ok(PipelineConfig { compression, fuse, scheduler, block_size: self.block_size })
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    codec: CodecOpts,
    /// File to encode
    file: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    /// Where to write the reconstructed file
    #[arg(long, short)]
    out: PathBuf,
    /// Pipeline for the reconstruction programs
    #[arg(long, default_value = "xorrepair,fuse,dfs")]
    pipeline: String,
    /// Cache capacity for a greedy pipeline
    #[arg(long)]
    capacity: Option<usize>,
    /// Shard files (any n of the n+p produced by encode)
    shards: Vec<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    codec: CodecOpts,
    /// Analyze the decode program for these lost shards, e.g. `2,4,5,6`
    #[arg(long)]
    pattern: Option<String>,
    /// Analyze a program in the SLP text format instead of a codec program
    #[arg(long)]
    slp: Option<PathBuf>,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Bench(args) => bench::run(args),
        Command::Selftest(args) => selftest::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Op(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

pub enum CmdError {
    Usage(String),
    Op(String),
}

impl CmdError {
    pub fn op(e: impl std::fmt::Display) -> CmdError {
        CmdError::Op(e.to_string())
    }
}

fn shard_path(input: &Path, k: usize) -> PathBuf {
    let stem = input.file_stem().unwrap_or(input.as_os_str());
    let mut name = stem.to_os_string();
    name.push(format!(".shard{k}"));
    input.with_file_name(name)
}

fn cmd_encode(args: EncodeArgs) -> Result<(), CmdError> {
    let params = args.codec.params().map_err(CmdError::Usage)?;
    let config = args.codec.config().map_err(CmdError::Usage)?;
    let data = std::fs::read(&args.file)
        .map_err(|e| CmdError::Op(format!("{}: {e}", args.file.display())))?;
    let codec = Codec::new(params, config).map_err(CmdError::op)?;
    let shards = codec.encode(&data);
    for (k, shard) in shards.iter().enumerate() {
        let header = ShardHeader {
            n: params.n() as u8,
            p: params.p() as u8,
            shard_index: k as u8,
            original_len: data.len() as u64,
            block_size: config.block_size as u32,
        };
        let path = shard_path(&args.file, k);
        let mut bytes = header.to_bytes().to_vec();
        bytes.extend_from_slice(shard);
        std::fs::write(&path, bytes)
            .map_err(|e| CmdError::Op(format!("{}: {e}", path.display())))?;
    }
    println!("wrote {} shards for {} bytes", shards.len(), data.len());
    Ok(())
}

fn cmd_decode(args: DecodeArgs) -> Result<(), CmdError> {
    if args.shards.is_empty() {
        return Err(CmdError::Usage("no shard files given".into()));
    }
    let mut header: Option<ShardHeader> = None;
    let mut slots: Vec<Option<Vec<u8>>> = Vec::new();
    for path in &args.shards {
        let bytes = std::fs::read(path)
            .map_err(|e| CmdError::Op(format!("{}: {e}", path.display())))?;
        let (h, payload) = ShardHeader::parse(&bytes)
            .map_err(|e| CmdError::Op(format!("{}: {e}", path.display())))?;
        match header {
            None => {
                header = Some(h);
                slots = vec![None; h.n as usize + h.p as usize];
            }
            Some(prev) => {
                let consistent = prev.n == h.n
                    && prev.p == h.p
                    && prev.original_len == h.original_len
                    && prev.block_size == h.block_size;
                if !consistent {
                    return Err(CmdError::Op(format!(
                        "{}: header disagrees with the other shards",
                        path.display()
                    )));
                }
            }
        }
        let idx = h.shard_index as usize;
        if idx >= slots.len() {
            return Err(CmdError::Op(format!("{}: shard index out of range", path.display())));
        }
        slots[idx] = Some(payload.to_vec());
    }
    let header = header.expect("at least one shard");
    let present = slots.iter().filter(|s| s.is_some()).count();
    if present < header.n as usize {
        return Err(CmdError::Op(format!(
            "unrecoverable: {present} shards present, {} needed",
            header.n
        )));
    }
    let params =
        CodecParams::new(header.n as usize, header.p as usize).map_err(CmdError::op)?;
    let opts = CodecOpts {
        n: header.n as usize,
        p: header.p as usize,
        pipeline: args.pipeline.clone(),
        block_size: header.block_size as usize,
        capacity: args.capacity,
    };
    let config = opts.config().map_err(CmdError::Usage)?;
    let codec = Codec::new(params, config).map_err(CmdError::op)?;
    let data = codec.decode(&slots, header.original_len as usize).map_err(CmdError::op)?;
    std::fs::write(&args.out, &data)
        .map_err(|e| CmdError::Op(format!("{}: {e}", args.out.display())))?;
    println!("reconstructed {} bytes to {}", data.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    stage: String,
    xors: usize,
    mem: usize,
    nvar: usize,
    ccap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    iocost: Option<usize>,
}

/// Per-stage metric rows in pipeline order.
#[derive(Serialize)]
pub struct Report {
    program: String,
    rows: Vec<ReportRow>,
}

impl Report {
    fn new(program: String, stages: &[(String, Slp)], capacity: Option<usize>) -> Report {
        Report {
            program,
            rows: stages
                .iter()
                .map(|(name, slp)| {
                    let m: StageMetrics = stage_metrics(name, slp, capacity);
                    ReportRow {
                        stage: m.stage,
                        xors: m.xors,
                        mem: m.mem,
                        nvar: m.nvar,
                        ccap: m.ccap,
                        iocost: m.iocost,
                    }
                })
                .collect(),
        }
    }

    fn render(&self) -> String {
        let mut header = vec!["stage", "#xor", "#mem", "nvar", "ccap"];
        let with_io = self.rows.iter().any(|r| r.iocost.is_some());
        if with_io {
            header.push("iocost");
        }
        let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let mut row = vec![
                r.stage.clone(),
                r.xors.to_string(),
                r.mem.to_string(),
                r.nvar.to_string(),
                r.ccap.to_string(),
            ];
            if with_io {
                row.push(r.iocost.map_or(String::new(), |v| v.to_string()));
            }
            table.push(row);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("program: {}\n", self.program);
        for row in &table {
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<width$}", width = widths[0]);
                } else {
                    let _ = write!(out, "  {cell:>width$}", width = widths[c]);
                }
            }
            out.push('\n');
        }
        out
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CmdError> {
    let config = args.codec.config().map_err(CmdError::Usage)?;
    let (label, slp) = if let Some(path) = &args.slp {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Op(format!("{}: {e}", path.display())))?;
        (path.display().to_string(), parse_text(&text).map_err(CmdError::op)?)
    } else {
        let params = args.codec.params().map_err(CmdError::Usage)?;
        match &args.pattern {
            Some(pat) => {
                let lost: Vec<usize> = pat
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CmdError::Usage(format!("bad pattern `{pat}`")))?;
                let pattern = ErasurePattern::new(lost);
                (
                    format!("RS({},{}) decode {:?}", params.n(), params.p(), pattern.indices()),
                    decode_slp(params, &pattern).map_err(CmdError::op)?,
                )
            }
            None => (
                format!("RS({},{}) encode", params.n(), params.p()),
                encode_slp(params).map_err(CmdError::op)?,
            ),
        }
    };
    let stages = optimize_stages(&slp, &config).map_err(CmdError::op)?;
    let named: Vec<(String, Slp)> =
        stages.into_iter().map(|s| (s.name.to_string(), s.slp)).collect();
    let report = Report::new(label, &named, args.codec.capacity);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(CmdError::op)?);
    } else {
        print!("{}", report.render());
    }
    Ok(())
}

// keep the shared constant referenced so format changes surface here
const _: () = assert!(SHARD_HEADER_LEN == 32);
