//! Built-in verification: the field tables against their defining routine,
//! the byte↔bitmatrix bridge, pipeline semantics, and full shard roundtrips.

use clap::Args;
use rand::{Rng, RngCore, SeedableRng};

use xorec::codec::{
    combinations, decode_slp, encode_slp, optimize_stages, Codec, CodecParams, ErasurePattern,
    PipelineConfig,
};
use xorec::exec::{compile, run as run_program};
use xorec::gf256::{bits_to_byte, byte_to_bits, mul_shift_reduce, mul_table, tilde, GfElem, MulTable};
use xorec::slp::Slp;

use crate::CmdError;

#[derive(Args)]
pub struct SelftestArgs {
    /// Corrupt one multiplication-table entry to prove the field suite bites
    #[arg(long)]
    inject_gf_fault: bool,
}

struct Outcome {
    name: &'static str,
    failures: usize,
    detail: String,
}

fn field_suite(table: &MulTable) -> Outcome {
    let mut failures = 0;
    let mut detail = String::new();
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            if table.mul(a, b) != mul_shift_reduce(a, b) {
                if failures == 0 {
                    detail = format!("first mismatch at {a:#04x} × {b:#04x}");
                }
                failures += 1;
            }
        }
    }
    for a in 1..=255u8 {
        let inv = GfElem(a).inv().expect("nonzero");
        if GfElem(a).mul(inv) != GfElem::ONE {
            failures += 1;
        }
    }
    Outcome { name: "field", failures, detail }
}

fn tilde_suite() -> Outcome {
    let mut failures = 0;
    let mut detail = String::new();
    for x in 0..=255u8 {
        let m = tilde(GfElem(x));
        for y in 0..=255u8 {
            let got = bits_to_byte(&m.mul_bits(&byte_to_bits(y)));
            let want = GfElem(x).mul(GfElem(y)).0;
            if got != want {
                if failures == 0 {
                    detail = format!("first mismatch at {x:#04x} × {y:#04x}");
                }
                failures += 1;
            }
        }
    }
    Outcome { name: "tilde", failures, detail }
}

fn one_hot_matches(slp: &Slp) -> bool {
    let prog = match compile(slp) {
        Ok(p) => p,
        Err(_) => return false,
    };
    let n = slp.num_consts as usize;
    let inputs: Vec<Vec<u8>> =
        (0..n).map(|k| (0..n).map(|j| u8::from(j == k)).collect()).collect();
    let refs: Vec<&[u8]> = inputs.iter().map(|v| v.as_slice()).collect();
    let out = match run_program(&prog, &refs, n.max(1)) {
        Ok(o) => o,
        Err(_) => return false,
    };
    match slp.result() {
        Ok(values) => values.iter().zip(&out).all(|(want, got)| {
            (0..n as u32).all(|c| (got[c as usize] == 1) == want.contains(c))
        }),
        Err(_) => false,
    }
}

fn pipeline_suite() -> Outcome {
    let mut failures = 0;
    let mut detail = String::new();
    let config = PipelineConfig::default();
    for n in 8..=10usize {
        for p in 2..=4usize {
            let params = CodecParams::new(n, p).unwrap();
            let mut programs = vec![encode_slp(params).unwrap()];
            // a light sample of erasure patterns per codec
            for pat in combinations(n + p, p).into_iter().step_by(97) {
                programs.push(decode_slp(params, &ErasurePattern::new(pat)).unwrap());
            }
            for slp in &programs {
                let want = slp.result().unwrap();
                let stages = match optimize_stages(slp, &config) {
                    Ok(s) => s,
                    Err(e) => {
                        failures += 1;
                        detail = format!("RS({n},{p}): {e}");
                        continue;
                    }
                };
                for st in &stages {
                    if st.slp.result().ok().as_ref() != Some(&want) {
                        failures += 1;
                        detail = format!("RS({n},{p}) stage {} changed semantics", st.name);
                    }
                }
                if !one_hot_matches(&stages.last().unwrap().slp) {
                    failures += 1;
                    detail = format!("RS({n},{p}) executor disagrees with set semantics");
                }
            }
        }
    }
    Outcome { name: "pipeline", failures, detail }
}

fn roundtrip_suite() -> Outcome {
    let mut failures = 0;
    let mut detail = String::new();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5e1f);
    for n in 8..=10usize {
        for p in 2..=4usize {
            let params = CodecParams::new(n, p).unwrap();
            let codec =
                Codec::new(params, PipelineConfig { block_size: 64, ..Default::default() })
                    .unwrap();
            let len = rng.gen_range(1..40_000);
            let mut data = vec![0u8; len];
            rng.fill_bytes(&mut data);
            let shards = codec.encode(&data);
            for pat in combinations(n + p, p).into_iter().step_by(53) {
                let mut have: Vec<Option<Vec<u8>>> =
                    shards.iter().cloned().map(Some).collect();
                for &i in &pat {
                    have[i] = None;
                }
                match codec.decode(&have, data.len()) {
                    Ok(got) if got == data => {}
                    Ok(_) => {
                        failures += 1;
                        detail = format!("RS({n},{p}) pattern {pat:?}: wrong bytes");
                    }
                    Err(e) => {
                        failures += 1;
                        detail = format!("RS({n},{p}) pattern {pat:?}: {e}");
                    }
                }
            }
        }
    }
    Outcome { name: "roundtrip", failures, detail }
}

pub fn run_suites(inject_gf_fault: bool) -> Vec<Outcome> {
    let field = if inject_gf_fault {
        let mut corrupted = MulTable::build();
        corrupted.0[0x53][0xca] ^= 0x01;
        field_suite(&corrupted)
    } else {
        field_suite(mul_table())
    };
    vec![field, tilde_suite(), pipeline_suite(), roundtrip_suite()]
}

pub fn run(args: SelftestArgs) -> Result<(), CmdError> {
    let outcomes = run_suites(args.inject_gf_fault);
    let mut failed = false;
    for o in &outcomes {
        if o.failures == 0 {
            println!("{:<10} pass", o.name);
        } else {
            failed = true;
            println!("{:<10} FAIL ({} failures) {}", o.name, o.failures, o.detail);
        }
    }
    if failed {
        Err(CmdError::Op("self-test failed".into()))
    } else {
        println!("all suites pass");
        Ok(())
    }
}
