//! The erasure-coding front end: RS(n, p) parameters, the optimization
//! pipeline, shard encode/decode with padding, and the shard wire format.
//!
//! Encoding splits the (zero-padded) payload into n shards of 8 packets
//! each; the packets are the inputs of an XOR program derived from the
//! coding matrix, and the program's goals are the 8·p parity packets.
//! Decoding inverts the surviving rows of the matrix and reconstructs
//! exactly the erased shards — data shards from the inverse rows, parity
//! shards by re-encoding through the inverse. Decode programs are memoized
//! per erasure pattern behind a bounded LRU cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::compress::{repair, xor_repair, CompressError};
use crate::exec::{compile, run, ExecError, Program};
use crate::fuse::fuse;
use crate::gf256::{rs_coding_matrix, GfElem, GfError, GfMatrix};
use crate::schedule::{
    build_graph, ccap, dfs_schedule, greedy_schedule, iocost, strategy_to_slp, ScheduleError,
};
use crate::slp::{from_bitmatrix, Slp, SlpError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad codec parameters: {0}")]
    BadParams(String),
    #[error("{lost} shards lost but only {max} recoverable")]
    Unrecoverable { lost: usize, max: usize },
    #[error("inconsistent shards: {0}")]
    InconsistentShards(String),
    #[error("bad shard header: {0}")]
    BadHeader(String),
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error(transparent)]
    Slp(#[from] SlpError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// n data shards, p parity shards.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct CodecParams {
    n: usize,
    p: usize,
}

impl CodecParams {
    pub fn new(n: usize, p: usize) -> Result<CodecParams, CodecError> {
        if n < 1 || n + p > 255 {
            return Err(CodecError::BadParams(format!("RS({n}, {p})")));
        }
        Ok(CodecParams { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn total(&self) -> usize {
        self.n + self.p
    }
}

/// The set of lost shard indices.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct ErasurePattern(Vec<usize>);

impl ErasurePattern {
    pub fn new(mut lost: Vec<usize>) -> ErasurePattern {
        lost.sort_unstable();
        lost.dedup();
        ErasurePattern(lost)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Compression {
    None,
    Repair,
    XorRepair,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Scheduler {
    None,
    Dfs,
    Greedy { capacity: usize },
}

/// Which passes to run and how to block execution.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct PipelineConfig {
    pub compression: Compression,
    pub fuse: bool,
    pub scheduler: Scheduler,
    pub block_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            compression: Compression::XorRepair,
            fuse: true,
            scheduler: Scheduler::Dfs,
            block_size: 1024,
        }
    }
}

/// One optimization stage and its program.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub slp: Slp,
}

/// Runs the configured passes, keeping every intermediate program.
pub fn optimize_stages(p: &Slp, config: &PipelineConfig) -> Result<Vec<Stage>, CodecError> {
    let mut stages = vec![Stage { name: "original", slp: p.clone() }];
    let cur = |stages: &Vec<Stage>| stages.last().unwrap().slp.clone();
    match config.compression {
        Compression::None => {}
        Compression::Repair => {
            stages.push(Stage { name: "repair", slp: repair(&cur(&stages))? });
        }
        Compression::XorRepair => {
            stages.push(Stage { name: "xorrepair", slp: xor_repair(&cur(&stages))? });
        }
    }
    if config.fuse {
        stages.push(Stage { name: "fuse", slp: fuse(&cur(&stages))? });
    }
    match config.scheduler {
        Scheduler::None => {}
        Scheduler::Dfs => {
            let g = build_graph(&cur(&stages))?;
            stages.push(Stage { name: "dfs", slp: strategy_to_slp(&dfs_schedule(&g), &g) });
        }
        Scheduler::Greedy { capacity } => {
            let g = build_graph(&cur(&stages))?;
            stages
                .push(Stage { name: "greedy", slp: strategy_to_slp(&greedy_schedule(&g, capacity)?, &g) });
        }
    }
    Ok(stages)
}

/// The metric row of one stage, using the accounting of the reports: `xors`
/// counts kernel invocations so it stays comparable across fusion.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StageMetrics {
    pub stage: String,
    pub xors: usize,
    pub mem: usize,
    pub nvar: usize,
    pub ccap: usize,
    pub iocost: Option<usize>,
}

pub fn stage_metrics(name: &str, p: &Slp, capacity: Option<usize>) -> StageMetrics {
    StageMetrics {
        stage: name.to_string(),
        xors: p.kernel_calls(),
        mem: p.count_mem(),
        nvar: p.nvar(),
        ccap: ccap(p),
        iocost: capacity.map(|c| iocost(p, c).unwrap_or(usize::MAX)),
    }
}

/// The program computing the 8·p parity packets of the coding matrix from
/// the 8·n data packets.
pub fn encode_slp(params: CodecParams) -> Result<Slp, CodecError> {
    let v = rs_coding_matrix(params.n, params.p)?;
    let parity: Vec<usize> = (params.n..params.total()).collect();
    Ok(from_bitmatrix(&v.select_rows(&parity).to_bitmatrix())?)
}

/// The first n surviving rows for a pattern.
fn survivor_rows(params: CodecParams, pattern: &ErasurePattern) -> Vec<usize> {
    (0..params.total()).filter(|i| !pattern.indices().contains(i)).take(params.n).collect()
}

/// The program reconstructing exactly the erased shards (8 packets each)
/// from the packets of the first n survivors.
pub fn decode_slp(params: CodecParams, pattern: &ErasurePattern) -> Result<Slp, CodecError> {
    if pattern.len() > params.p {
        return Err(CodecError::Unrecoverable { lost: pattern.len(), max: params.p });
    }
    if pattern.indices().iter().any(|&i| i >= params.total()) {
        return Err(CodecError::BadParams(format!(
            "erasure index out of range for RS({}, {})",
            params.n, params.p
        )));
    }
    let v = rs_coding_matrix(params.n, params.p)?;
    let survivors = survivor_rows(params, pattern);
    let minv = v.select_rows(&survivors).invert()?;
    let rows: Vec<Vec<GfElem>> = pattern
        .indices()
        .iter()
        .map(|&e| {
            if e < params.n {
                minv.row(e).to_vec()
            } else {
                // lost parity: re-encode its matrix row through the inverse
                let w = v.row(e);
                (0..params.n)
                    .map(|c| {
                        let mut acc = GfElem::ZERO;
                        for k in 0..params.n {
                            acc = acc.add(w[k].mul(minv.get(k, c)));
                        }
                        acc
                    })
                    .collect()
            }
        })
        .collect();
    if rows.is_empty() {
        let mut empty = Slp::new(8 * params.n as u32, crate::slp::Form::Binary);
        empty.num_consts = 8 * params.n as u32;
        return Ok(empty);
    }
    Ok(from_bitmatrix(&GfMatrix::from_rows(rows)?.to_bitmatrix())?)
}

fn build_program(slp: &Slp, config: &PipelineConfig) -> Result<Program, CodecError> {
    let stages = optimize_stages(slp, config)?;
    Ok(compile(&stages.last().unwrap().slp)?)
}

/// Optimizes and compiles the parity program for `params`.
pub fn build_encode_program(
    params: CodecParams,
    config: &PipelineConfig,
) -> Result<Program, CodecError> {
    build_program(&encode_slp(params)?, config)
}

/// Optimizes and compiles the reconstruction program for one pattern.
pub fn build_decode_program(
    params: CodecParams,
    pattern: &ErasurePattern,
    config: &PipelineConfig,
) -> Result<Program, CodecError> {
    build_program(&decode_slp(params, pattern)?, config)
}

/// Bounded memo of compiled decode programs, least recently used out first.
struct DecodeCache {
    map: HashMap<ErasurePattern, (u64, Arc<Program>)>,
    clock: u64,
    capacity: usize,
}

impl DecodeCache {
    fn new(capacity: usize) -> Self {
        DecodeCache { map: HashMap::new(), clock: 0, capacity }
    }

    fn get(&mut self, key: &ErasurePattern) -> Option<Arc<Program>> {
        self.clock += 1;
        let clock = self.clock;
        self.map.get_mut(key).map(|(stamp, prog)| {
            *stamp = clock;
            prog.clone()
        })
    }

    fn insert(&mut self, key: ErasurePattern, prog: Arc<Program>) {
        self.clock += 1;
        if self.map.len() >= self.capacity {
            if let Some(oldest) =
                self.map.iter().min_by_key(|(_, (stamp, _))| *stamp).map(|(k, _)| k.clone())
            {
                self.map.remove(&oldest);
            }
        }
        self.map.insert(key, (self.clock, prog));
    }
}

/// An RS(n, p) codec with its optimization pipeline and program caches.
pub struct Codec {
    params: CodecParams,
    config: PipelineConfig,
    encode_prog: OnceLock<Arc<Program>>,
    decode_cache: Mutex<DecodeCache>,
}

impl Codec {
    pub fn new(params: CodecParams, config: PipelineConfig) -> Result<Codec, CodecError> {
        if config.block_size == 0 {
            return Err(CodecError::BadParams("block size must be positive".into()));
        }
        Ok(Codec {
            params,
            config,
            encode_prog: OnceLock::new(),
            decode_cache: Mutex::new(DecodeCache::new(1024)),
        })
    }

    pub fn params(&self) -> CodecParams {
        self.params
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn encode_program(&self) -> Result<Arc<Program>, CodecError> {
        if let Some(p) = self.encode_prog.get() {
            return Ok(p.clone());
        }
        let prog = Arc::new(build_encode_program(self.params, &self.config)?);
        Ok(self.encode_prog.get_or_init(|| prog).clone())
    }

    fn decode_program(&self, pattern: &ErasurePattern) -> Result<Arc<Program>, CodecError> {
        if let Some(p) = self.decode_cache.lock().unwrap().get(pattern) {
            return Ok(p);
        }
        let prog = Arc::new(build_decode_program(self.params, pattern, &self.config)?);
        self.decode_cache.lock().unwrap().insert(pattern.clone(), prog.clone());
        Ok(prog)
    }

    /// Bytes per shard for a payload of `len` bytes: the payload is
    /// zero-padded to a multiple of n·8·block_size.
    pub fn shard_len(&self, len: usize) -> usize {
        let unit = self.params.n * 8 * self.config.block_size;
        let padded = len.div_ceil(unit).max(1) * unit;
        padded / self.params.n
    }

    /// Splits `data` into n data shards and computes the p parity shards.
    /// The first n shards are the padded payload, verbatim.
    pub fn encode(&self, data: &[u8]) -> Vec<Vec<u8>> {
        let shard_len = self.shard_len(data.len());
        let packet_len = shard_len / 8;
        let mut padded = data.to_vec();
        padded.resize(shard_len * self.params.n, 0);

        let packets: Vec<&[u8]> = (0..self.params.n * 8)
            .map(|i| {
                let (s, k) = (i / 8, i % 8);
                &padded[s * shard_len + k * packet_len..][..packet_len]
            })
            .collect();
        let mut shards: Vec<Vec<u8>> = Vec::with_capacity(self.params.total());
        for s in 0..self.params.n {
            shards.push(padded[s * shard_len..(s + 1) * shard_len].to_vec());
        }
        if self.params.p > 0 {
            let prog = self.encode_program().expect("encode program construction cannot fail");
            let parity =
                run(&prog, &packets, self.config.block_size).expect("aligned by construction");
            for chunk in parity.chunks(8) {
                shards.push(chunk.concat());
            }
        }
        shards
    }

    /// Reconstructs the payload from at least n shards; `None` marks a lost
    /// shard. The result is truncated to `original_len`.
    pub fn decode(
        &self,
        shards: &[Option<Vec<u8>>],
        original_len: usize,
    ) -> Result<Vec<u8>, CodecError> {
        if shards.len() != self.params.total() {
            return Err(CodecError::InconsistentShards(format!(
                "expected {} shard slots, got {}",
                self.params.total(),
                shards.len()
            )));
        }
        let lost: Vec<usize> =
            (0..shards.len()).filter(|&i| shards[i].is_none()).collect();
        if lost.len() > self.params.p {
            return Err(CodecError::Unrecoverable { lost: lost.len(), max: self.params.p });
        }
        let shard_len = shards
            .iter()
            .flatten()
            .map(Vec::len)
            .next()
            .ok_or_else(|| CodecError::InconsistentShards("no shards present".into()))?;
        if shards.iter().flatten().any(|s| s.len() != shard_len) {
            return Err(CodecError::InconsistentShards("shard lengths differ".into()));
        }
        if shard_len % (8 * self.config.block_size) != 0 {
            return Err(CodecError::InconsistentShards(format!(
                "shard length {shard_len} is not a multiple of 8 × block size"
            )));
        }
        let capacity = shard_len * self.params.n;
        if original_len > capacity {
            return Err(CodecError::InconsistentShards(format!(
                "original length {original_len} exceeds capacity {capacity}"
            )));
        }

        let pattern = ErasurePattern::new(lost);
        let mut restored: HashMap<usize, Vec<u8>> = HashMap::new();
        if !pattern.is_empty() {
            let prog = self.decode_program(&pattern)?;
            let packet_len = shard_len / 8;
            let survivors = survivor_rows(self.params, &pattern);
            let packets: Vec<&[u8]> = survivors
                .iter()
                .flat_map(|&s| {
                    let shard = shards[s].as_deref().expect("survivor present");
                    (0..8).map(move |k| &shard[k * packet_len..][..packet_len])
                })
                .collect();
            let outputs = run(&prog, &packets, self.config.block_size)?;
            for (chunk, &e) in outputs.chunks(8).zip(pattern.indices()) {
                restored.insert(e, chunk.concat());
            }
        }
        let mut data = Vec::with_capacity(original_len);
        for s in 0..self.params.n {
            match &shards[s] {
                Some(shard) => data.extend_from_slice(shard),
                None => data.extend_from_slice(&restored[&s]),
            }
        }
        data.truncate(original_len);
        Ok(data)
    }
}

pub const SHARD_MAGIC: [u8; 4] = *b"XSLP";
pub const SHARD_FORMAT_VERSION: u8 = 1;
pub const SHARD_HEADER_LEN: usize = 32;

/// The 32-byte shard file header.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct ShardHeader {
    pub n: u8,
    pub p: u8,
    pub shard_index: u8,
    pub original_len: u64,
    pub block_size: u32,
}

impl ShardHeader {
    pub fn to_bytes(&self) -> [u8; SHARD_HEADER_LEN] {
        let mut out = [0u8; SHARD_HEADER_LEN];
        out[..4].copy_from_slice(&SHARD_MAGIC);
        out[4] = SHARD_FORMAT_VERSION;
        out[5] = self.n;
        out[6] = self.p;
        out[7] = self.shard_index;
        out[8..16].copy_from_slice(&self.original_len.to_le_bytes());
        out[16..20].copy_from_slice(&self.block_size.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<(ShardHeader, &[u8]), CodecError> {
        if bytes.len() < SHARD_HEADER_LEN {
            return Err(CodecError::BadHeader("shorter than the header".into()));
        }
        if bytes[..4] != SHARD_MAGIC {
            return Err(CodecError::BadHeader("bad magic".into()));
        }
        if bytes[4] != SHARD_FORMAT_VERSION {
            return Err(CodecError::BadHeader(format!("unsupported version {}", bytes[4])));
        }
        if bytes[20..32].iter().any(|&b| b != 0) {
            return Err(CodecError::BadHeader("reserved bytes must be zero".into()));
        }
        let header = ShardHeader {
            n: bytes[5],
            p: bytes[6],
            shard_index: bytes[7],
            original_len: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
            block_size: u32::from_le_bytes(bytes[16..20].try_into().unwrap()),
        };
        Ok((header, &bytes[SHARD_HEADER_LEN..]))
    }
}

/// All k-subsets of {0, …, n−1} in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        if n - start < k - cur.len() {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Per-program stage metrics for the encode program and every erasure
/// pattern of maximal size, plus the averaged stage-over-stage ratios.
pub struct DatasetMetrics {
    /// Row 0 is the encode program; row i > 0 is the i-th pattern in
    /// lexicographic order.
    pub rows: Vec<Vec<StageMetrics>>,
    /// Average of compressed-over-original kernel-call ratios, when the
    /// pipeline compresses.
    pub avg_xor_ratio: Option<f64>,
    /// Average of final-memory-over-original-memory ratios, when the
    /// pipeline fuses.
    pub avg_mem_ratio: Option<f64>,
}

/// Runs every coding program of the codec through the pipeline. The decode
/// set is all C(n+p, p) erasure patterns of maximal size.
pub fn dataset_metrics(
    params: CodecParams,
    config: &PipelineConfig,
) -> Result<DatasetMetrics, CodecError> {
    let mut slps = vec![encode_slp(params)?];
    for pat in combinations(params.total(), params.p) {
        slps.push(decode_slp(params, &ErasurePattern::new(pat))?);
    }
    let mut rows = Vec::with_capacity(slps.len());
    let (mut xr, mut mr) = (0.0f64, 0.0f64);
    for slp in &slps {
        let stages = optimize_stages(slp, config)?;
        if config.compression != Compression::None {
            let compressed = &stages[1].slp;
            xr += compressed.kernel_calls() as f64 / slp.kernel_calls().max(1) as f64;
        }
        if config.fuse {
            let last = &stages.last().unwrap().slp;
            mr += last.count_mem() as f64 / slp.count_mem().max(1) as f64;
        }
        rows.push(
            stages.iter().map(|s| stage_metrics(s.name, &s.slp, None)).collect::<Vec<_>>(),
        );
    }
    let n = slps.len() as f64;
    Ok(DatasetMetrics {
        rows,
        avg_xor_ratio: (config.compression != Compression::None).then_some(xr / n),
        avg_mem_ratio: config.fuse.then_some(mr / n),
    })
}
