//! Exact rank of integer matrices, by elimination over a large prime field.

use std::collections::HashMap;

use crate::meshkit::IntMatrix;

/// The Mersenne prime 2^61 - 1.
const P: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn inv(a: u64) -> u64 {
    powmod(a, P - 2)
}

fn reduce(v: i64) -> u64 {
    v.rem_euclid(P as i64) as u64
}

/// `row - factor * pivot` for sparse rows sorted by column.
fn axpy(row: &[(usize, u64)], factor: u64, pivot: &[(usize, u64)]) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map_or(usize::MAX, |e| e.0);
        let cj = pivot.get(j).map_or(usize::MAX, |e| e.0);
        if ci < cj {
            out.push(row[i]);
            i += 1;
        } else if cj < ci {
            let v = (P - mulmod(factor, pivot[j].1)) % P;
            if v != 0 {
                out.push((cj, v));
            }
            j += 1;
        } else {
            let v = (row[i].1 + P - mulmod(factor, pivot[j].1)) % P;
            if v != 0 {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Rank of an integer matrix over GF(2^61 - 1). Incidence matrices of
/// simplicial complexes in space have no torsion of that size, so this is
/// the rank over the rationals.
pub fn exact_rank(m: &IntMatrix) -> usize {
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    for r in &m.rows {
        let mut row: Vec<(usize, u64)> = r.iter().filter(|e| e.1 != 0).map(|&(c, v)| (c, reduce(v))).collect();
        row.sort_unstable_by_key(|e| e.0);
        while let Some(&(c, v)) = row.first() {
            match pivots.get(&c) {
                Some(p) => row = axpy(&row, v, p),
                None => {
                    let s = inv(v);
                    let normalized = row.iter().map(|&(c, x)| (c, mulmod(x, s))).collect();
                    pivots.insert(c, normalized);
                    break;
                }
            }
        }
    }
    pivots.len()
}

/// Dimension of the null space of an integer matrix.
pub fn exact_nullity(m: &IntMatrix) -> usize {
    m.ncols - exact_rank(m)
}
