//! Probe enumeration: composable tuples of probe objects for a shape, and
//! automorphism tuples of a probe for naturality checks.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cells::Shape;
use crate::oracle::InstanceOracle;

/// Enumeration stops growing beyond this many tuples before sampling.
const ENUM_LIMIT: usize = 4_000_000;

/// 64-bit FNV-1a, used to derive per-item seeds from labels.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn item_rng(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(label.as_bytes()))
}

struct ColumnCand<O> {
    cells: Vec<O>,
    left: O,
    right: O,
}

fn columns<O: InstanceOracle>(o: &O, h: usize, l1: &[O::Obj], l2: &[O::Obj]) -> Vec<ColumnCand<O::Obj>> {
    if h == 0 {
        return l1
            .iter()
            .map(|f| {
                let (a, b) = o.obj_boundary(1, f);
                ColumnCand { cells: vec![f.clone()], left: a, right: b }
            })
            .collect();
    }
    let bounds: Vec<(O::Obj, O::Obj)> = l2.iter().map(|x| o.obj_boundary(2, x)).collect();
    let mut chains: Vec<Vec<usize>> = (0..l2.len()).map(|i| vec![i]).collect();
    for _ in 1..h {
        let mut next = Vec::new();
        for c in &chains {
            let last = &bounds[*c.last().unwrap()].1;
            for (j, b) in bounds.iter().enumerate() {
                if &b.0 == last {
                    let mut d = c.clone();
                    d.push(j);
                    next.push(d);
                }
            }
        }
        chains = next;
    }
    chains
        .into_iter()
        .map(|c| {
            let (a, b) = o.obj_boundary(1, &bounds[c[0]].0);
            ColumnCand { cells: c.iter().map(|&i| l2[i].clone()).collect(), left: a, right: b }
        })
        .collect()
}

/// All composable tuples of probe objects of `shape` (primary cells in order),
/// reduced to at most `cap` by a seeded sample that keeps enumeration order.
pub fn shape_probes<O: InstanceOracle>(o: &O, shape: &Shape, cap: usize, seed: u64) -> Vec<Vec<O::Obj>> {
    if shape.cols.is_empty() {
        return thin(o.probe_objects(0).into_iter().map(|a| vec![a]).collect(), cap, seed, shape);
    }
    let l1 = o.probe_objects(1);
    let l2 = o.probe_objects(2);
    let cands: Vec<Vec<ColumnCand<O::Obj>>> = shape.cols.iter().map(|&h| columns(o, h, &l1, &l2)).collect();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn dfs<T: PartialEq>(cands: &[Vec<ColumnCand<T>>], stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if out.len() >= ENUM_LIMIT {
            return;
        }
        let j = stack.len();
        if j == cands.len() {
            out.push(stack.clone());
            return;
        }
        for (k, c) in cands[j].iter().enumerate() {
            if j > 0 && cands[j - 1][stack[j - 1]].right != c.left {
                continue;
            }
            stack.push(k);
            dfs(cands, stack, out);
            stack.pop();
        }
    }
    dfs(&cands, &mut stack, &mut out);
    let picked = thin(out, cap, seed, shape);
    picked
        .into_iter()
        .map(|ix| ix.iter().enumerate().flat_map(|(j, &k)| cands[j][k].cells.iter().cloned()).collect())
        .collect()
}

fn thin<T>(mut v: Vec<T>, cap: usize, seed: u64, shape: &Shape) -> Vec<T> {
    if v.len() <= cap {
        return v;
    }
    let mut rng = item_rng(seed, &format!("probes {shape}"));
    let mut idx = sample(&mut rng, v.len(), cap).into_vec();
    idx.sort_unstable();
    let mut keep = vec![false; v.len()];
    for i in idx {
        keep[i] = true;
    }
    let mut k = 0;
    v.retain(|_| {
        k += 1;
        keep[k - 1]
    });
    v
}

/// Automorphism tuples of a probe: identities everywhere except one column,
/// which carries the `k`-th automorphism of each of its cells. At most
/// `per_col` per column.
pub fn shape_endos<O: InstanceOracle>(o: &O, shape: &Shape, probe: &[O::Obj], per_col: usize) -> Vec<Vec<O::Mor>> {
    if shape.cols.is_empty() {
        return o.endo_probes(0, &probe[0]).into_iter().take(per_col).map(|m| vec![m]).collect();
    }
    let levels = shape.prim_levels();
    let base: Vec<O::Mor> = probe.iter().zip(&levels).map(|(x, &l)| o.identity(l, x)).collect();
    let off = shape.col_offsets();
    let mut out = Vec::new();
    for (j, &h) in shape.cols.iter().enumerate() {
        let n = h.max(1);
        let level = if h == 0 { 1 } else { 2 };
        let endos: Vec<Vec<O::Mor>> = (0..n).map(|i| o.endo_probes(level, &probe[off[j] + i])).collect();
        let avail = endos.iter().map(|e| e.len()).min().unwrap_or(0).min(per_col);
        for k in 0..avail {
            let mut t = base.clone();
            for i in 0..n {
                t[off[j] + i] = endos[i][k].clone();
            }
            out.push(t);
        }
    }
    out
}
