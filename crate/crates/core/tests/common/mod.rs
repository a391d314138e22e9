//! Brute-force reference implementations used as independent oracles.
//! Everything here is deliberately naive: all-pairs scans instead of
//! neighbourhood walks, enumeration instead of dynamic programming.

#![allow(dead_code)]

use radstab_core::radiomics::LevelGrid;
use radstab_core::MaskVolume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coords(dims: [usize; 3], i: usize) -> [isize; 3] {
    [(i % dims[0]) as isize, ((i / dims[0]) % dims[1]) as isize, (i / (dims[0] * dims[1])) as isize]
}

fn chebyshev(a: [isize; 3], b: [isize; 3]) -> isize {
    (0..3).map(|k| (a[k] - b[k]).abs()).max().unwrap()
}

/// Random level grid: each voxel is outside the ROI with probability
/// `hole`, otherwise a level in 1..=ng. Level `ng` is forced somewhere so
/// the matrices are sized alike.
pub fn random_levels(seed: u64, dims: [usize; 3], ng: u32, hole: f64) -> LevelGrid {
    let mut r = rng(seed);
    let n = dims.iter().product();
    let mut levels: Vec<u32> = (0..n).map(|_| if r.random::<f64>() < hole { 0 } else { r.random_range(1..=ng) }).collect();
    levels[n / 2] = ng;
    LevelGrid::from_levels(dims, levels)
}

/// Dense `ng × cols` matrix, row = level − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Naive {
    pub rows: usize,
    pub cols: usize,
    pub m: Vec<Vec<f64>>,
}

impl Naive {
    fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, m: vec![vec![0.0; cols]; rows] }
    }

    pub fn total(&self) -> f64 {
        self.m.iter().flatten().sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.m.iter().flatten().copied().collect()
    }

    fn sum(ms: &[Naive]) -> Naive {
        let mut out = Naive::new(ms[0].rows, ms[0].cols);
        for x in ms {
            for i in 0..out.rows {
                for j in 0..out.cols {
                    out.m[i][j] += x.m[i][j];
                }
            }
        }
        out
    }
}

fn roi(g: &LevelGrid) -> Vec<(usize, [isize; 3], u32)> {
    g.levels.iter().enumerate().filter(|(_, &l)| l > 0).map(|(i, &l)| (i, coords(g.dims, i), l)).collect()
}

/// Co-occurrences over every ordered ROI pair whose displacement is ±d.
pub fn glcm(g: &LevelGrid, d: [isize; 3]) -> Naive {
    let ng = g.ng as usize;
    let mut out = Naive::new(ng, ng);
    let vox = roi(g);
    for &(_, a, la) in &vox {
        for &(_, b, lb) in &vox {
            let diff = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            if diff == d || diff == [-d[0], -d[1], -d[2]] {
                out.m[la as usize - 1][lb as usize - 1] += 1.0;
            }
        }
    }
    out
}

/// Maximal runs: every (start, length) segment along `d` is tested for
/// uniformity and for being bounded by a different level at both ends.
pub fn glrlm(g: &LevelGrid, d: [isize; 3]) -> Naive {
    let ng = g.ng as usize;
    let longest = *g.dims.iter().max().unwrap();
    let mut out = Naive::new(ng, longest);
    let level = |p: [isize; 3]| -> u32 {
        if (0..3).all(|k| p[k] >= 0 && (p[k] as usize) < g.dims[k]) {
            g.levels[p[0] as usize + g.dims[0] * (p[1] as usize + g.dims[1] * p[2] as usize)]
        } else {
            0
        }
    };
    let step = |p: [isize; 3], k: isize| [p[0] + k * d[0], p[1] + k * d[1], p[2] + k * d[2]];
    for (_, start, l) in roi(g) {
        for len in 1..=longest as isize {
            let uniform = (0..len).all(|k| level(step(start, k)) == l);
            if uniform && level(step(start, -1)) != l && level(step(start, len)) != l {
                out.m[l as usize - 1][len as usize - 1] += 1.0;
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Chebyshev distance from each ROI voxel to the nearest position that is
/// outside the ROI, scanning a one-voxel halo around the grid.
pub fn border_distances(g: &LevelGrid) -> Vec<usize> {
    let vox = roi(g);
    let mut outside = Vec::new();
    for z in -1..=g.dims[2] as isize {
        for y in -1..=g.dims[1] as isize {
            for x in -1..=g.dims[0] as isize {
                let inside = (0..3).all(|k| [x, y, z][k] >= 0 && ([x, y, z][k] as usize) < g.dims[k])
                    && g.levels[x as usize + g.dims[0] * (y as usize + g.dims[1] * z as usize)] > 0;
                if !inside {
                    outside.push([x, y, z]);
                }
            }
        }
    }
    vox.iter().map(|&(_, p, _)| outside.iter().map(|&q| chebyshev(p, q)).min().unwrap() as usize).collect()
}

/// `(level, size, distance)` per zone, zones found by union-find over all
/// same-level ROI pairs at Chebyshev distance 1.
pub fn zones(g: &LevelGrid) -> Vec<(u32, usize, usize)> {
    let vox = roi(g);
    let mut parent: Vec<usize> = (0..vox.len()).collect();
    for a in 0..vox.len() {
        for b in a + 1..vox.len() {
            if vox[a].2 == vox[b].2 && chebyshev(vox[a].1, vox[b].1) == 1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let dist = border_distances(g);
    let mut acc: std::collections::BTreeMap<usize, (u32, usize, usize)> = Default::default();
    for a in 0..vox.len() {
        let r = find(&mut parent, a);
        let e = acc.entry(r).or_insert((vox[a].2, 0, usize::MAX));
        e.1 += 1;
        e.2 = e.2.min(dist[a]);
    }
    acc.into_values().collect()
}

pub fn glszm(g: &LevelGrid) -> Naive {
    let zs = zones(g);
    let mut out = Naive::new(g.ng as usize, zs.iter().map(|z| z.1).max().unwrap());
    for (l, s, _) in zs {
        out.m[l as usize - 1][s - 1] += 1.0;
    }
    out
}

pub fn gldzm(g: &LevelGrid) -> Naive {
    let zs = zones(g);
    let mut out = Naive::new(g.ng as usize, zs.iter().map(|z| z.2).max().unwrap());
    for (l, _, d) in zs {
        out.m[l as usize - 1][d - 1] += 1.0;
    }
    out
}

/// Column = number of equal-level voxels within Chebyshev distance 1,
/// centre included, minus one.
pub fn ngldm(g: &LevelGrid) -> Naive {
    let vox = roi(g);
    let mut out = Naive::new(g.ng as usize, 27);
    for &(_, a, la) in &vox {
        let same = vox.iter().filter(|&&(_, b, lb)| lb == la && chebyshev(a, b) <= 1).count();
        out.m[la as usize - 1][same - 1] += 1.0;
    }
    out
}

/// Per-level `(n, s)` of the neighbourhood gray-tone difference matrix.
pub fn ngtdm(g: &LevelGrid) -> (Vec<f64>, Vec<f64>) {
    let vox = roi(g);
    let ng = g.ng as usize;
    let (mut n, mut s) = (vec![0.0; ng], vec![0.0; ng]);
    for &(_, a, la) in &vox {
        let nb: Vec<f64> = vox.iter().filter(|&&(_, b, _)| chebyshev(a, b) == 1).map(|&(_, _, lb)| lb as f64).collect();
        if nb.is_empty() {
            continue;
        }
        let mean = nb.iter().sum::<f64>() / nb.len() as f64;
        n[la as usize - 1] += 1.0;
        s[la as usize - 1] += (la as f64 - mean).abs();
    }
    (n, s)
}

fn h(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

/// The 25 co-occurrence features written out term by term.
pub fn glcm_features(c: &Naive) -> Vec<f64> {
    let ng = c.rows;
    let t = c.total();
    if t == 0.0 {
        return vec![f64::NAN; 25];
    }
    let p: Vec<Vec<f64>> = c.m.iter().map(|r| r.iter().map(|v| v / t).collect()).collect();
    let lv = |i: usize| (i + 1) as f64;
    let sum_over = |f: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..ng {
            for j in 0..ng {
                acc += f(lv(i), lv(j), p[i][j]);
            }
        }
        acc
    };
    let jmax = p.iter().flatten().copied().fold(0.0, f64::max);
    let mu = sum_over(&|i, _, v| i * v);
    let var = sum_over(&|i, _, v| (i - mu).powi(2) * v);
    let jent = h(p.iter().flatten().copied());
    let mut pd = vec![0.0; ng];
    let mut ps = vec![0.0; 2 * ng + 1];
    for i in 0..ng {
        for j in 0..ng {
            pd[i.abs_diff(j)] += p[i][j];
            ps[i + j + 2] += p[i][j];
        }
    }
    let davg: f64 = pd.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let dvar: f64 = pd.iter().enumerate().map(|(k, v)| (k as f64 - davg).powi(2) * v).sum();
    let savg: f64 = ps.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let svar: f64 = ps.iter().enumerate().map(|(k, v)| (k as f64 - savg).powi(2) * v).sum();
    let ngf = ng as f64;
    let px: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let hx = h(px.iter().copied());
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let q = px[i] * px[j];
            if q > 0.0 {
                hxy1 -= p[i][j] * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    vec![
        jmax,
        mu,
        var,
        jent,
        davg,
        dvar,
        h(pd.iter().copied()),
        savg,
        svar,
        h(ps.iter().copied()),
        sum_over(&|_, _, v| v * v),
        sum_over(&|i, j, v| (i - j).powi(2) * v),
        sum_over(&|i, j, v| (i - j).abs() * v),
        sum_over(&|i, j, v| v / (1.0 + (i - j).abs())),
        sum_over(&|i, j, v| v / (1.0 + (i - j).abs() / ngf)),
        sum_over(&|i, j, v| v / (1.0 + (i - j).powi(2))),
        sum_over(&|i, j, v| v / (1.0 + (i - j).powi(2) / (ngf * ngf))),
        sum_over(&|i, j, v| if i != j { v / (i - j).powi(2) } else { 0.0 }),
        sum_over(&|i, j, v| (i - mu) * (j - mu) * v) / var,
        sum_over(&|i, j, v| i * j * v),
        sum_over(&|i, j, v| (i + j - 2.0 * mu).powi(2) * v),
        sum_over(&|i, j, v| (i + j - 2.0 * mu).powi(3) * v),
        sum_over(&|i, j, v| (i + j - 2.0 * mu).powi(4) * v),
        if hx > 0.0 { (jent - hxy1) / hx } else { f64::NAN },
        (1.0 - (-2.0 * (hxy2 - jent)).exp()).max(0.0).sqrt(),
    ]
}

/// The 16 run/zone/dependence features of a level × size matrix.
pub fn size_features(c: &Naive, denominator: f64) -> Vec<f64> {
    let t = c.total();
    if t == 0.0 {
        return vec![f64::NAN; 16];
    }
    let cell = |i: usize, j: usize| c.m[i][j];
    let emph = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..c.rows {
            for j in 0..c.cols {
                acc += cell(i, j) * f((i + 1) as f64, (j + 1) as f64);
            }
        }
        acc / t
    };
    let rows: Vec<f64> = (0..c.rows).map(|i| (0..c.cols).map(|j| cell(i, j)).sum()).collect();
    let cols: Vec<f64> = (0..c.cols).map(|j| (0..c.rows).map(|i| cell(i, j)).sum()).collect();
    let mu_i: f64 = rows.iter().enumerate().map(|(i, r)| (i + 1) as f64 * r / t).sum();
    let mu_j: f64 = cols.iter().enumerate().map(|(j, r)| (j + 1) as f64 * r / t).sum();
    vec![
        emph(&|_, j| 1.0 / (j * j)),
        emph(&|_, j| j * j),
        emph(&|i, _| 1.0 / (i * i)),
        emph(&|i, _| i * i),
        emph(&|i, j| 1.0 / (i * i * j * j)),
        emph(&|i, j| i * i / (j * j)),
        emph(&|i, j| j * j / (i * i)),
        emph(&|i, j| i * i * j * j),
        rows.iter().map(|r| r * r).sum::<f64>() / t,
        rows.iter().map(|r| r * r).sum::<f64>() / (t * t),
        cols.iter().map(|r| r * r).sum::<f64>() / t,
        cols.iter().map(|r| r * r).sum::<f64>() / (t * t),
        t / denominator,
        rows.iter().enumerate().map(|(i, r)| ((i + 1) as f64 - mu_i).powi(2) * r / t).sum(),
        cols.iter().enumerate().map(|(j, r)| ((j + 1) as f64 - mu_j).powi(2) * r / t).sum(),
        h(c.m.iter().flatten().map(|v| v / t)),
    ]
}

pub fn ngtdm_features(n: &[f64], s: &[f64], cap: f64) -> Vec<f64> {
    let nvc: f64 = n.iter().sum();
    let p: Vec<f64> = n.iter().map(|v| v / nvc).collect();
    let levels: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let ngp = levels.len() as f64;
    let ps: f64 = (0..p.len()).map(|i| p[i] * s[i]).sum();
    let s_sum: f64 = s.iter().sum();
    let g = |i: usize| (i + 1) as f64;
    let double = |f: &dyn Fn(usize, usize) -> f64| -> f64 {
        levels.iter().flat_map(|&i| levels.iter().map(move |&j| (i, j))).map(|(i, j)| f(i, j)).sum()
    };
    let coarseness = if ps > 0.0 { (1.0 / ps).min(cap) } else { cap };
    let contrast = if ngp > 1.0 { double(&|i, j| p[i] * p[j] * (g(i) - g(j)).powi(2)) / (ngp * (ngp - 1.0)) * s_sum / nvc } else { 0.0 };
    let busy_den = double(&|i, j| (g(i) * p[i] - g(j) * p[j]).abs());
    let busyness = if busy_den > 0.0 { ps / busy_den } else { 0.0 };
    let complexity = double(&|i, j| (g(i) - g(j)).abs() * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j])) / nvc;
    let strength = if s_sum > 0.0 { double(&|i, j| (p[i] + p[j]) * (g(i) - g(j)).powi(2)) / s_sum } else { 0.0 };
    vec![coarseness, contrast, busyness, complexity, strength]
}

/// Family feature vectors the way the extractor lays them out: averaged
/// over directions, then merged.
pub fn glcm_family(g: &LevelGrid, dirs: &[[isize; 3]]) -> Vec<f64> {
    let ms: Vec<Naive> = dirs.iter().map(|&d| glcm(g, d)).collect();
    let per: Vec<Vec<f64>> = ms.iter().filter(|m| m.total() > 0.0).map(glcm_features).collect();
    let mut out: Vec<f64> = (0..25).map(|k| per.iter().map(|f| f[k]).sum::<f64>() / per.len() as f64).collect();
    out.extend(glcm_features(&Naive::sum(&ms)));
    out
}

pub fn glrlm_family(g: &LevelGrid, dirs: &[[isize; 3]]) -> Vec<f64> {
    let nv = g.n_voxels as f64;
    let ms: Vec<Naive> = dirs.iter().map(|&d| glrlm(g, d)).collect();
    let per: Vec<Vec<f64>> = ms.iter().map(|m| size_features(m, nv)).collect();
    let mut out: Vec<f64> = (0..16).map(|k| per.iter().map(|f| f[k]).sum::<f64>() / per.len() as f64).collect();
    out.extend(size_features(&Naive::sum(&ms), nv * dirs.len() as f64));
    out
}

pub fn ngldm_family(g: &LevelGrid) -> Vec<f64> {
    let m = ngldm(g);
    let t = m.total();
    let mut out = size_features(&m, g.n_voxels as f64);
    out.push(m.m.iter().flatten().map(|v| (v / t).powi(2)).sum());
    out
}

/// Relative closeness with NaN matching NaN.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn all_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y, tol))
}

// ---------------------------------------------------------------- geometry

/// Symmetric surface Hausdorff distance by scanning every surface pair.
/// Surface voxels are ROI voxels with a 6-neighbour outside the ROI or grid.
pub fn hausdorff(a: &MaskVolume, b: &MaskVolume) -> f64 {
    let dims = a.header.dims;
    let surface = |m: &MaskVolume| -> Vec<[isize; 3]> {
        let on = |p: [isize; 3]| {
            (0..3).all(|k| p[k] >= 0 && (p[k] as usize) < dims[k])
                && m.voxels[p[0] as usize + dims[0] * (p[1] as usize + dims[1] * p[2] as usize)] != 0
        };
        (0..m.voxels.len())
            .map(|i| coords(dims, i))
            .filter(|&p| on(p))
            .filter(|&p| {
                [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
                    .iter()
                    .any(|d| !on([p[0] + d[0], p[1] + d[1], p[2] + d[2]]))
            })
            .collect()
    };
    let (sa, sb) = (surface(a), surface(b));
    let dist = |p: [isize; 3], q: [isize; 3]| (((p[0] - q[0]).pow(2) + (p[1] - q[1]).pow(2) + (p[2] - q[2]).pow(2)) as f64).sqrt();
    let directed = |x: &[[isize; 3]], y: &[[isize; 3]]| {
        x.iter().map(|&p| y.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    directed(&sa, &sb).max(directed(&sb, &sa))
}

// ---------------------------------------------------------------- statistics

/// Average ranks by counting, O(n²).
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact Wilcoxon p by enumerating all 2ⁿ sign patterns of the
/// non-zero differences.
pub fn wilcoxon_enumerated(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let r = ranks(&nz.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let n = nz.len();
    let total: f64 = r.iter().sum();
    let plus: f64 = nz.iter().zip(&r).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w = plus.min(total - plus);
    let hits = (0u32..1 << n).filter(|mask| (0..n).filter(|k| mask >> k & 1 == 1).map(|k| r[k]).sum::<f64>() <= w + 1e-9).count();
    (2.0 * hits as f64 / (1u64 << n) as f64).min(1.0)
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly,
/// ties counting one half.
pub fn pairwise_auc(y: &[u8], p: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                den += 1.0;
                num += if p[i] > p[j] {
                    1.0
                } else if p[i] == p[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

/// Single-file NIfTI-1 stream; `payload` is already encoded in the chosen
/// byte order.
pub fn nifti_bytes(dims: [i16; 3], datatype: i16, bitpix: i16, scl: (f32, f32), payload: &[u8], big_endian: bool) -> Vec<u8> {
    let mut h = vec![0u8; 352];
    let put = |h: &mut Vec<u8>, off: usize, b: &[u8]| h[off..off + b.len()].copy_from_slice(b);
    let i16b = |v: i16| if big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
    let f32b = |v: f32| if big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
    put(&mut h, 0, &if big_endian { 348i32.to_be_bytes() } else { 348i32.to_le_bytes() });
    for (k, d) in [3, dims[0], dims[1], dims[2], 1, 1, 1, 1].iter().enumerate() {
        put(&mut h, 40 + 2 * k, &i16b(*d));
    }
    put(&mut h, 70, &i16b(datatype));
    put(&mut h, 72, &i16b(bitpix));
    for (k, s) in [1.0f32, 0.8, 0.8, 2.5, 1.0, 1.0, 1.0, 1.0].iter().enumerate() {
        put(&mut h, 76 + 4 * k, &f32b(*s));
    }
    put(&mut h, 108, &f32b(352.0));
    put(&mut h, 112, &f32b(scl.0));
    put(&mut h, 116, &f32b(scl.1));
    put(&mut h, 344, b"n+1\0");
    h.extend_from_slice(payload);
    h
}

pub fn f32_payload(voxels: &[f32], big_endian: bool) -> Vec<u8> {
    voxels.iter().flat_map(|v| if big_endian { v.to_be_bytes() } else { v.to_le_bytes() }).collect()
}
