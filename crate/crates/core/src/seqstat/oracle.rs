//! Exhaustive pairwise oracle for the four curves.
//!
//! Every pair of start positions `j < i` is visited and the common extension
//! of `X[j..]` and `X[i..]` is obtained by walking each diagonal `i - j`
//! backwards. The curves are then read off the definitions directly. The
//! routine shares no code with the Z-array or the suffix automaton.

use alloc::vec;
use alloc::vec::Vec;

use super::{CurveKind, SeqError, StatCurve, SymbolSeq};

/// Default length limit of [`brute_force_curve`].
pub const DEFAULT_ORACLE_LIMIT: usize = 2000;

/// Definitional evaluation of a curve by enumeration of all position pairs.
pub fn brute_force_curve(seq: &SymbolSeq, kind: CurveKind, limit: usize) -> Result<StatCurve, SeqError> {
    let s = seq.symbols();
    let n = s.len();
    if n > limit {
        return Err(SeqError::OracleLimit { len: n, limit });
    }

    // prefix_ext[i]: common extension of X[0..] and X[i..];
    // best_ext[i]: max over j < i of the common extension of X[j..] and X[i..].
    let mut prefix_ext = vec![0usize; n];
    let mut best_ext = vec![0usize; n];
    for d in 1..n {
        let mut run = 0usize;
        for j in (0..n - d).rev() {
            run = if s[j] == s[j + d] { run + 1 } else { 0 };
            let i = j + d;
            if run > best_ext[i] {
                best_ext[i] = run;
            }
            if j == 0 {
                prefix_ext[i] = run;
            }
        }
    }

    let values: Vec<(u64, bool)> = match kind {
        CurveKind::L1 => (1..=n)
            .map(|len| {
                let v = (1..len).map(|i| prefix_ext[i].min(len - i)).max().unwrap_or(0);
                (v as u64, false)
            })
            .collect(),
        CurveKind::L2 => (1..=n)
            .map(|len| {
                let v = (1..len).map(|i| best_ext[i].min(len - i)).max().unwrap_or(0);
                (v as u64, false)
            })
            .collect(),
        CurveKind::R1 => first_shift(&prefix_ext, n),
        CurveKind::R2 => first_shift(&best_ext, n),
    };
    Ok(StatCurve::from_dense(kind, values))
}

fn first_shift(ext: &[usize], n: usize) -> Vec<(u64, bool)> {
    (1..=n)
        .map(|k| match (1..n).find(|&i| ext[i] >= k) {
            Some(i) => (i as u64, false),
            None => ((n - k + 1) as u64, true),
        })
        .collect()
}
