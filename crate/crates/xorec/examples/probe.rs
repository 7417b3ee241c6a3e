//! Scratch probe: xor-count distribution over decode patterns (temporary).

use xorec::codec::{combinations, decode_slp, CodecParams, ErasurePattern};

fn main() {
    let params = CodecParams::new(10, 4).unwrap();
    let mut all: Vec<(usize, Vec<usize>)> = combinations(14, 4)
        .into_iter()
        .map(|pat| {
            (decode_slp(params, &ErasurePattern::new(pat.clone())).unwrap().count_xor(), pat)
        })
        .collect();
    all.sort_by(|a, b| b.0.cmp(&a.0));
    for (x, pat) in all.iter().take(12) {
        println!("{x} {pat:?}");
    }
    let rank = all.iter().position(|(_, p)| p == &vec![2, 4, 5, 6]).unwrap();
    println!("{{2,4,5,6}} rank: {rank} of {}", all.len());
}
