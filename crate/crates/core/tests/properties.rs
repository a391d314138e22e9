//! Property tests for the invariants each module promises.

mod common;

use proptest::prelude::*;
use rand::Rng;

use radstab_core::dimred::{fit_reducer, info, ReducerMethod, ReducerSpec};
use radstab_core::models::{compute_metrics, roc_auc, stratified_kfold};
use radstab_core::phantom::{dilate, erode, PhantomSpec};
use radstab_core::preprocess::{connected_components_3d, crop_roi, Connectivity};
use radstab_core::radiomics::MinMaxScaling;
use radstab_core::seg_metrics::{dice, hausdorff, iou};
use radstab_core::stats::{bh_fdr, friedman, icc_2_1, spearman};
use radstab_core::volume::{parse_nifti1, read_raw, write_raw, Grid, RawVolume};
use radstab_core::{Datatype, FeatureMatrix, MaskVolume, Volume3D, VolumeHeader};

fn random_mask(seed: u64, dims: [usize; 3], density: f64) -> MaskVolume {
    let mut r = common::rng(seed);
    let bits: Vec<bool> = (0..dims.iter().product()).map(|_| r.random::<f64>() < density).collect();
    MaskVolume::from_fn(dims, |x, y, z| bits[x + dims[0] * (y + dims[1] * z)])
}

fn random_matrix(seed: u64, n: usize, p: usize) -> FeatureMatrix {
    let mut r = common::rng(seed);
    let rows = (0..n).map(|_| (0..p).map(|_| r.random_range(-3.0..3.0)).collect()).collect();
    FeatureMatrix::from_unnamed_rows(rows)
}

// ------------------------------------------------------------ volume_io

proptest! {
    #[test]
    fn raw_round_trip_is_bit_exact(seed in any::<u64>(), f32_type in any::<bool>(), dims in prop::array::uniform3(1usize..6)) {
        let mut r = common::rng(seed);
        let mut header = VolumeHeader::new(dims).with_spacing([0.5, 1.0, 2.25]);
        header.datatype = if f32_type { Datatype::F32 } else { Datatype::F64 };
        let voxels: Vec<f64> = (0..header.voxel_count())
            .map(|_| {
                let v: f64 = r.random_range(-1e6..1e6);
                if f32_type { v as f32 as f64 } else { v }
            })
            .collect();
        let vol = Volume3D::new(header, voxels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("v");
        write_raw(&vol, &stem).unwrap();
        let back = read_raw(&stem.with_extension("vol"), &stem.with_extension("json")).unwrap();
        let RawVolume::Image(back) = back else { panic!("read back as mask") };
        prop_assert_eq!(back.header.dims, dims);
        prop_assert!(back.voxels.iter().zip(&vol.voxels).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn nifti_is_endianness_invariant(seed in any::<u64>(), dims in prop::array::uniform3(1i16..5)) {
        let mut r = common::rng(seed);
        let n = dims.iter().map(|&d| d as usize).product();
        let voxels: Vec<f32> = (0..n).map(|_| r.random_range(-1e4f32..1e4)).collect();
        let le = parse_nifti1(&common::nifti_bytes(dims, 16, 32, (1.0, 0.0), &common::f32_payload(&voxels, false), false)).unwrap();
        let be = parse_nifti1(&common::nifti_bytes(dims, 16, 32, (1.0, 0.0), &common::f32_payload(&voxels, true), true)).unwrap();
        prop_assert_eq!(&le.voxels, &be.voxels);
        prop_assert_eq!(le.header.dims, be.header.dims);
        prop_assert_eq!(le.header.spacing, be.header.spacing);
    }
}

#[test]
fn integer_scaling_matches_scalar_oracle() {
    let mut r = common::rng(4);
    for _ in 0..1000 {
        let stored: i16 = r.random();
        let slope: f32 = r.random_range(-50.0..50.0);
        let inter: f32 = r.random_range(-1000.0..1000.0);
        let bytes = common::nifti_bytes([1, 1, 1], 4, 16, (slope, inter), &stored.to_le_bytes(), false);
        let v = parse_nifti1(&bytes).unwrap();
        let want = if slope == 0.0 { stored as f64 } else { stored as f64 * slope as f64 + inter as f64 };
        assert_eq!(v.voxels[0], want, "stored {stored} slope {slope} inter {inter}");
    }
}

// ------------------------------------------------------------ preprocess

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Union-find over every foreground pair within Chebyshev distance 1 whose
/// offset has at most `max_nonzero` nonzero components.
fn union_find_roots(m: &MaskVolume, max_nonzero: usize) -> Vec<usize> {
    let n = m.voxels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let on: Vec<usize> = (0..n).filter(|&i| m.voxels[i] != 0).collect();
    for (a_i, &a) in on.iter().enumerate() {
        let ca = m.coords(a);
        for &b in &on[a_i + 1..] {
            let cb = m.coords(b);
            let d: Vec<usize> = (0..3).map(|k| ca[k].abs_diff(cb[k])).collect();
            if d.iter().all(|&v| v <= 1) && d.iter().filter(|&&v| v == 1).count() <= max_nonzero {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

#[test]
fn components_agree_with_union_find() {
    for seed in 0..200u64 {
        let m = random_mask(seed, [16, 16, 16], 0.04 + 0.3 * (seed % 5) as f64 / 5.0);
        let on: Vec<usize> = (0..m.voxels.len()).filter(|&i| m.voxels[i] != 0).collect();
        for (conn, max_nonzero) in [(Connectivity::Six, 1), (Connectivity::Eighteen, 2), (Connectivity::TwentySix, 3)] {
            let got = connected_components_3d(&m, conn);
            let roots = union_find_roots(&m, max_nonzero);
            let mut pairs = std::collections::HashMap::new();
            for &i in &on {
                assert_ne!(got.labels[i], 0);
                // The map root -> label must be a bijection.
                let prev = pairs.insert(roots[i], got.labels[i]);
                assert!(prev.is_none_or(|l| l == got.labels[i]), "seed {seed} {conn:?}");
            }
            let labels: std::collections::HashSet<_> = pairs.values().collect();
            assert_eq!(labels.len(), pairs.len(), "seed {seed} {conn:?}: merged components");
            assert_eq!(got.num_components(), pairs.len());
            let max = got.labels.iter().max().copied().unwrap_or(0) as usize;
            assert_eq!(max, got.num_components(), "labels not contiguous");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crop_keeps_largest_component(seed in any::<u64>(), density in 0.02f64..0.4, margin in 0usize..4) {
        let m = random_mask(seed, [14, 12, 10], density);
        prop_assume!(m.count() > 0);
        let img = Volume3D::from_fn([14, 12, 10], |x, y, z| (x * 100 + y * 10 + z) as f64);
        let lab = connected_components_3d(&m, Connectivity::TwentySix);
        let keep = lab.largest().unwrap();
        let c = crop_roi(&img, &m, margin, Connectivity::TwentySix).unwrap();
        for (i, &l) in lab.labels.iter().enumerate() {
            let [x, y, z] = m.coords(i);
            let inside = (0..3).all(|k| [x, y, z][k] >= c.region.lo[k] && [x, y, z][k] < c.region.hi[k]);
            if l == keep {
                prop_assert!(inside);
                let (cx, cy, cz) = (x - c.region.lo[0], y - c.region.lo[1], z - c.region.lo[2]);
                prop_assert!(c.mask.get(cx, cy, cz));
                prop_assert_eq!(c.image.get(cx, cy, cz), img.get(x, y, z));
            } else if inside {
                let (cx, cy, cz) = (x - c.region.lo[0], y - c.region.lo[1], z - c.region.lo[2]);
                prop_assert!(!c.mask.get(cx, cy, cz));
            }
        }
        prop_assert!((0..3).all(|k| c.region.lo[k] < c.region.hi[k] && c.region.hi[k] <= c.region.source_dims[k]));
    }
}

// ------------------------------------------------------------ seg_metrics

proptest! {
    #[test]
    fn overlap_metrics_are_symmetric(seed in any::<u64>(), da in 0.0f64..0.6, db in 0.0f64..0.6) {
        let a = random_mask(seed, [9, 8, 7], da);
        let b = random_mask(seed ^ 0x5555, [9, 8, 7], db);
        prop_assert_eq!(dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
        if a.count() > 0 && b.count() > 0 {
            prop_assert_eq!(hausdorff(&a, &b, 100.0).unwrap(), hausdorff(&b, &a, 100.0).unwrap());
            prop_assert!(hausdorff(&a, &b, 95.0).unwrap() <= hausdorff(&a, &b, 100.0).unwrap());
        }
        let (d, j) = (dice(&a, &b).unwrap(), iou(&a, &b).unwrap());
        if a.count() + b.count() > 0 {
            prop_assert!((d - 2.0 * j / (1.0 + j)).abs() <= 1e-12);
            prop_assert!(j <= d);
        }
    }

    #[test]
    fn metrics_are_translation_equivariant(seed in any::<u64>(), shift in prop::array::uniform3(0usize..4)) {
        let (a, b) = (random_mask(seed, [6, 6, 6], 0.3), random_mask(seed.wrapping_add(1), [6, 6, 6], 0.3));
        prop_assume!(a.count() > 0 && b.count() > 0);
        let place = |m: &MaskVolume, s: [usize; 3]| {
            MaskVolume::from_fn([10, 10, 10], |x, y, z| {
                x >= s[0] && y >= s[1] && z >= s[2] && x - s[0] < 6 && y - s[1] < 6 && z - s[2] < 6 && m.get(x - s[0], y - s[1], z - s[2])
            })
        };
        let (a0, b0) = (place(&a, [0, 0, 0]), place(&b, [0, 0, 0]));
        let (a1, b1) = (place(&a, shift), place(&b, shift));
        prop_assert_eq!(dice(&a0, &b0).unwrap(), dice(&a1, &b1).unwrap());
        prop_assert_eq!(iou(&a0, &b0).unwrap(), iou(&a1, &b1).unwrap());
        prop_assert_eq!(hausdorff(&a0, &b0, 100.0).unwrap(), hausdorff(&a1, &b1, 100.0).unwrap());
        prop_assert_eq!(hausdorff(&a0, &b0, 95.0).unwrap(), hausdorff(&a1, &b1, 95.0).unwrap());
    }
}

// ------------------------------------------------------------ phantom

fn phantom_masks(n: usize) -> Vec<MaskVolume> {
    let spec = PhantomSpec { dims: [32, 32, 32], radius_range: [5.0, 9.0], ..Default::default() };
    (0..n).map(|i| spec.generate_case(i).mask).collect()
}

#[test]
fn dilation_strictly_lowers_dice() {
    for (i, m) in phantom_masks(20).iter().enumerate() {
        let scores: Vec<f64> = (0..=5).map(|r| dice(m, &dilate(m, r)).unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[1] < w[0]), "case {i}: {scores:?}");
    }
}

#[test]
fn closing_is_closer_than_dilation() {
    for (i, m) in phantom_masks(20).iter().enumerate() {
        for r in 1..=3 {
            let dilated = dilate(m, r);
            let closed = erode(&dilated, r).unwrap();
            assert!(dice(m, &closed).unwrap() >= dice(m, &dilated).unwrap(), "case {i} r {r}");
        }
    }
}

#[test]
fn erosion_strictly_lowers_dice() {
    for (i, m) in phantom_masks(10).iter().enumerate() {
        assert_eq!(dice(m, m).unwrap(), 1.0);
        assert!(dice(m, &erode(m, 1).unwrap()).unwrap() < 1.0, "case {i}");
    }
}

// ------------------------------------------------------------ stats

proptest! {
    #[test]
    fn spearman_of_monotone_map_is_one(xs in prop::collection::hash_set(-1000i32..1000, 3..40), a in 0.01f64..5.0, b in -10.0f64..10.0, kind in 0u8..3) {
        let x: Vec<f64> = xs.into_iter().map(|v| v as f64 / 10.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| match kind {
                0 => a * v + b,
                1 => (v / 100.0).exp() * a + b,
                _ => v * v * v + a * v,
            })
            .collect();
        prop_assert_eq!(spearman(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn bh_rejections_grow_with_q(p in prop::collection::vec(0.0f64..1.0, 1..50), q1 in 0.001f64..0.5, dq in 0.0f64..0.5) {
        let small = bh_fdr(&p, q1).unwrap();
        let large = bh_fdr(&p, q1 + dq).unwrap();
        prop_assert!(small.iter().zip(&large).all(|(s, l)| !s || *l));
    }

    #[test]
    fn icc_is_rater_symmetric(seed in any::<u64>(), n in 3usize..40) {
        let mut r = common::rng(seed);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v * 0.8 + r.random_range(-1.0..1.0)).collect();
        let (ab, ba) = (icc_2_1(&a, &b).unwrap(), icc_2_1(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() <= 1e-12, "{} vs {}", ab, ba);
    }

    #[test]
    fn friedman_ignores_monotone_rescaling(seed in any::<u64>(), raters in 2usize..8, k in 2usize..6) {
        let mut r = common::rng(seed);
        let ratings: Vec<Vec<f64>> = (0..raters).map(|_| (0..k).map(|_| r.random_range(1..6) as f64).collect()).collect();
        let transformed: Vec<Vec<f64>> = ratings
            .iter()
            .map(|row| {
                let (a, b) = (r.random_range(0.1..10.0), r.random_range(-20.0..20.0));
                row.iter().map(|v| a * v.powi(3) + b).collect()
            })
            .collect();
        match (friedman(&ratings), friedman(&transformed)) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.chi2 - y.chi2).abs() <= 1e-9);
                prop_assert!((x.p - y.p).abs() <= 1e-12);
                prop_assert_eq!(x.exact_p, y.exact_p);
            }
            (Err(x), Err(y)) => prop_assert_eq!(x, y),
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }
}

// ------------------------------------------------------------ dimred

fn named(m: FeatureMatrix) -> FeatureMatrix {
    let ids = (0..m.n_cols()).map(|j| format!("f{j:02}")).collect();
    FeatureMatrix::new(m.case_ids.clone(), ids, m.data().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pca_components_are_orthogonal_and_ordered(seed in any::<u64>(), p in 2usize..10) {
        let x = named(random_matrix(seed, 40, p));
        let k = p.min(4);
        let fitted = fit_reducer(&ReducerSpec::new(ReducerMethod::Pca, k), &x, None).unwrap();
        let z = fitted.apply(&x).unwrap();
        let cols: Vec<Vec<f64>> = (0..k).map(|j| z.column(j)).collect();
        for a in 0..k {
            for b in a + 1..k {
                let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).sum();
                prop_assert!(dot.abs() < 1e-9, "gram ({}, {}) = {}", a, b, dot);
            }
        }
        let var: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).collect();
        prop_assert!(var.windows(2).all(|w| w[0] >= w[1] - 1e-9), "{:?}", var);
    }

    #[test]
    fn selection_is_permutation_equivariant(seed in any::<u64>(), method in prop::sample::select(vec![ReducerMethod::AnovaF, ReducerMethod::MutualInfo, ReducerMethod::GainRatio, ReducerMethod::Lasso])) {
        let mut r = common::rng(seed);
        let x = named(random_matrix(seed, 40, 8));
        let y: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let mut perm: Vec<usize> = (0..8).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let shuffled = x.select_columns(&perm);
        let spec = ReducerSpec::new(method, 3);
        let a = fit_reducer(&spec, &x, Some(&y)).unwrap();
        let b = fit_reducer(&spec, &shuffled, Some(&y)).unwrap();
        prop_assert_eq!(a.selected_ids(), b.selected_ids());
    }
}

#[test]
fn independent_columns_have_near_zero_mi() {
    for seed in 0..5 {
        let mut r = common::rng(900 + seed);
        let a: Vec<f64> = (0..10_000).map(|_| r.random()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| r.random()).collect();
        let mi = info::mutual_information(&info::equal_frequency_bins(&a, 10), &info::equal_frequency_bins(&b, 10));
        assert!(mi < 0.02, "seed {seed}: MI {mi}");
    }
}

#[test]
fn minmax_ignores_case_order() {
    let x = named(random_matrix(3, 30, 6));
    let mut order: Vec<usize> = (0..30).rev().collect();
    order.rotate_left(7);
    let a = MinMaxScaling::fit(&x);
    let b = MinMaxScaling::fit(&x.select_rows(&order));
    assert_eq!(a, b);
}

// ------------------------------------------------------------ models

#[test]
fn auc_matches_pairwise_formulation() {
    for seed in 0..1000u64 {
        let mut r = common::rng(seed);
        let n = r.random_range(2..60);
        let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        // Coarse scores so ties occur.
        let p: Vec<f64> = (0..n).map(|_| r.random_range(0..12) as f64 / 11.0).collect();
        match roc_auc(&y, &p) {
            Some(auc) => assert!((auc - common::pairwise_auc(&y, &p)).abs() <= 1e-12, "seed {seed}"),
            None => assert!(y.iter().all(|&v| v == y[0])),
        }
    }
}

proptest! {
    #[test]
    fn metrics_are_bounded_and_f1_is_harmonic(seed in any::<u64>(), n in 1usize..80, threshold in 0.05f64..0.95) {
        let mut r = common::rng(seed);
        let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let p: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let m = compute_metrics(&y, &p, threshold).unwrap();
        prop_assert!(m.values().iter().all(|v| (0.0..=1.0).contains(v)));
        if m.precision + m.recall > 0.0 {
            let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
            prop_assert!((m.f1 - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn folds_are_balanced_and_stratified(seed in any::<u64>(), n0 in 5usize..80, n1 in 5usize..80) {
        let mut y = vec![0u8; n0];
        y.extend(std::iter::repeat_n(1u8, n1));
        let split = stratified_kfold(&y, 5, seed).unwrap();
        let sizes = split.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let ratio = n1 as f64 / (n0 + n1) as f64;
        for f in 0..5 {
            let (_, held) = split.fold_indices(f);
            let pos = held.iter().filter(|&&i| y[i] == 1).count() as f64;
            prop_assert!((pos - ratio * held.len() as f64).abs() <= 1.0 + 1e-9, "fold {} pos {} of {}", f, pos, held.len());
        }
        prop_assert_eq!(stratified_kfold(&y, 5, seed).unwrap(), split);
    }
}
