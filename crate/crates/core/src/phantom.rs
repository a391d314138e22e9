//! Synthetic cohorts of textured ellipsoid tumours with a planted survival
//! signal, and mask perturbations that imitate imperfect segmenters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{Grid, MaskVolume, Volume3D, VolumeHeader};

#[derive(Debug, Error, PartialEq)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error("class balance {0:.3} outside [0.3, 0.7]")]
    ClassBalance(f64),
    #[error("perturbation would leave an empty mask")]
    ErosionExtinction,
    #[error("mask is empty")]
    EmptyMask,
}

/// Logistic survival signal on standardized tumour size and intensity
/// offset, both mapped to [−1, 1] over their sampling ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalRule {
    pub intercept: f64,
    pub volume_weight: f64,
    pub intensity_weight: f64,
}

impl Default for SignalRule {
    fn default() -> Self {
        Self { intercept: 0.0, volume_weight: 12.0, intensity_weight: 12.0 }
    }
}

impl SignalRule {
    pub fn probability(&self, size_z: f64, intensity_z: f64) -> f64 {
        let logit = self.intercept + self.volume_weight * size_z + self.intensity_weight * intensity_z;
        1.0 / (1.0 + (-logit).exp())
    }
}

/// A block of consecutive cases sharing a dataset tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortGroup {
    pub tag: String,
    pub n_cases: usize,
    #[serde(default = "yes")]
    pub labeled: bool,
}

fn yes() -> bool {
    true
}

/// A named mask source derived from the ground truth by a perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSource {
    pub name: String,
    pub perturbation: PerturbationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub seed: u64,
    pub groups: Vec<CohortGroup>,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Per-axis ellipsoid radius range in voxels.
    pub radius_range: [f64; 2],
    /// Gaussian smoothing sigma of the background texture, in voxels.
    pub correlation_length: f64,
    pub noise_sd: f64,
    /// Range of the intensity offset added inside the tumour.
    pub offset_range: [f64; 2],
    /// Voxels kept free between the ellipsoid's bounding box and the grid edge.
    pub edge_margin: usize,
    pub signal: SignalRule,
    pub mask_sources: Vec<MaskSource>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            seed: 20241015,
            groups: vec![CohortGroup { tag: "phantom".into(), n_cases: 60, labeled: true }],
            dims: [64; 3],
            spacing: [1.0; 3],
            radius_range: [5.0, 12.0],
            correlation_length: 1.5,
            noise_sd: 1.0,
            offset_range: [0.5, 2.5],
            edge_margin: 2,
            signal: SignalRule::default(),
            mask_sources: Vec::new(),
        }
    }
}

/// Parameters drawn for one case before any voxel is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseParams {
    pub centre: [f64; 3],
    pub radii: [f64; 3],
    pub offset: f64,
    pub class_probability: f64,
    pub label: bool,
    pub survival_years: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomCase {
    pub case_id: String,
    pub dataset_tag: String,
    pub labeled: bool,
    pub image: Volume3D,
    pub mask: MaskVolume,
    pub params: CaseParams,
}

impl PhantomCase {
    pub fn survival_years(&self) -> f64 {
        self.params.survival_years
    }
}

fn unit_range(v: f64, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        2.0 * (v - range[0]) / (range[1] - range[0]) - 1.0
    } else {
        0.0
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

/// Per-case generator; stream 2i draws parameters and 2i+1 draws noise.
fn case_rng(seed: u64, index: usize, noise: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index as u64 + u64::from(noise));
    rng
}

impl PhantomSpec {
    pub fn n_cases(&self) -> usize {
        self.groups.iter().map(|g| g.n_cases).sum()
    }

    /// Tag and labeled flag of the case at a global index.
    pub fn group_of(&self, index: usize) -> Option<&CohortGroup> {
        let mut start = 0;
        for g in &self.groups {
            if index < start + g.n_cases {
                return Some(g);
            }
            start += g.n_cases;
        }
        None
    }

    pub fn case_id(&self, index: usize) -> String {
        let tag = self.group_of(index).map_or("phantom", |g| g.tag.as_str());
        format!("{tag}_{index:04}")
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: &str| Err(PhantomError::InvalidSpec(m.to_string()));
        let [lo, hi] = self.radius_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad("radius_range must satisfy 0 < lo ≤ hi");
        }
        if self.offset_range[1] < self.offset_range[0] {
            return bad("offset_range must be ascending");
        }
        if !(self.noise_sd >= 0.0) || !(self.correlation_length >= 0.0) {
            return bad("noise_sd and correlation_length must be ≥ 0");
        }
        if self.spacing.iter().any(|s| !(*s > 0.0)) {
            return bad("spacing must be positive");
        }
        let need = 2 * (hi.ceil() as usize + self.edge_margin) + 1;
        if self.dims.iter().any(|&d| d < need) {
            return Err(PhantomError::InvalidSpec(format!("radius {hi} with margin {} needs dims ≥ {need}", self.edge_margin)));
        }
        let mut tags = std::collections::HashSet::new();
        if self.groups.iter().any(|g| !tags.insert(g.tag.as_str())) {
            return bad("group tags must be unique");
        }
        let balance = self.expected_class_balance(4000);
        if !(0.3..=0.7).contains(&balance) {
            return Err(PhantomError::ClassBalance(balance));
        }
        Ok(())
    }

    /// Monte Carlo mean class-1 probability over the parameter distribution.
    pub fn expected_class_balance(&self, draws: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_ba1a_ce00_0001);
        let total: f64 = (0..draws).map(|_| self.draw_params(&mut rng).class_probability).sum();
        total / draws as f64
    }

    fn draw_params(&self, rng: &mut ChaCha8Rng) -> CaseParams {
        let radii = [0; 3].map(|_| uniform(rng, self.radius_range));
        let centre: [f64; 3] = std::array::from_fn(|k| {
            let reach = radii[k].ceil() + self.edge_margin as f64;
            let lo = reach;
            let hi = self.dims[k] as f64 - 1.0 - reach;
            uniform(rng, [lo, hi.max(lo)])
        });
        let offset = uniform(rng, self.offset_range);
        let size = (radii[0] * radii[1] * radii[2]).cbrt();
        let class_probability = self.signal.probability(unit_range(size, self.radius_range), unit_range(offset, self.offset_range));
        let label = rng.random::<f64>() < class_probability;
        let survival_years = if label { rng.random_range(4.5..10.0) } else { rng.random_range(0.5..3.5) };
        CaseParams { centre, radii, offset, class_probability, label, survival_years }
    }

    /// Parameters of case `index` without generating its volumes.
    pub fn case_params(&self, index: usize) -> CaseParams {
        self.draw_params(&mut case_rng(self.seed, index, false))
    }

    pub fn generate_case(&self, index: usize) -> PhantomCase {
        let params = self.case_params(index);
        let header = VolumeHeader::new(self.dims).with_spacing(self.spacing);
        let mask = ellipsoid(self.dims, params.centre, params.radii);
        let mut rng = case_rng(self.seed, index, true);
        let mut noise: Vec<f64> = (0..header.voxel_count()).map(|_| StandardNormal.sample(&mut rng)).collect();
        smooth_unit_variance(&mut noise, self.dims, self.correlation_length);
        let voxels = noise.iter().zip(&mask.voxels).map(|(n, &m)| self.noise_sd * n + if m != 0 { params.offset } else { 0.0 }).collect();
        let mut mask = mask;
        mask.header.spacing = self.spacing;
        let group = self.group_of(index);
        PhantomCase {
            case_id: self.case_id(index),
            dataset_tag: group.map_or_else(|| "phantom".to_string(), |g| g.tag.clone()),
            labeled: group.is_none_or(|g| g.labeled),
            image: Volume3D { header, voxels },
            mask,
            params,
        }
    }

    pub fn generate_cohort(&self) -> Result<Vec<PhantomCase>, PhantomError> {
        self.validate()?;
        Ok((0..self.n_cases()).into_par_iter().map(|i| self.generate_case(i)).collect())
    }
}

pub fn ellipsoid(dims: [usize; 3], centre: [f64; 3], radii: [f64; 3]) -> MaskVolume {
    MaskVolume::from_fn(dims, |x, y, z| {
        let d = [x as f64 - centre[0], y as f64 - centre[1], z as f64 - centre[2]];
        (0..3).map(|k| (d[k] / radii[k]).powi(2)).sum::<f64>() <= 1.0
    })
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian smoothing (edge-clamped), rescaled so white noise of
/// unit variance stays at unit variance away from the edges.
fn smooth_unit_variance(data: &mut [f64], dims: [usize; 3], sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut buf = vec![0.0; data.len()];
    for axis in 0..3 {
        let n = dims[axis] as isize;
        for (i, out) in buf.iter_mut().enumerate() {
            let pos = ((i / strides[axis]) % dims[axis]) as isize;
            let base = i as isize - pos * strides[axis] as isize;
            *out = k
                .iter()
                .enumerate()
                .map(|(t, w)| {
                    let q = (pos + t as isize - r).clamp(0, n - 1);
                    w * data[(base + q * strides[axis] as isize) as usize]
                })
                .sum();
        }
        data.copy_from_slice(&buf);
    }
    let gain = k.iter().map(|w| w * w).sum::<f64>().powf(1.5);
    data.iter_mut().for_each(|v| *v /= gain);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Dilate,
    Erode,
    Translate,
    BoundaryFlip,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Radius or shift in voxels; flip probability for `boundary_flip`.
    pub magnitude: f64,
    /// Flip probability of the last step of `hybrid`.
    #[serde(default = "default_flip")]
    pub flip_probability: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_flip() -> f64 {
    0.2
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, magnitude: f64, seed: u64) -> Self {
        Self { kind, magnitude, flip_probability: default_flip(), seed }
    }
}

/// Max (dilate) or min (erode) filter over the cube of half-width `r`,
/// one axis at a time. Voxels beyond the grid count as background.
fn cube_filter(mask: &MaskVolume, r: usize, dilate: bool) -> MaskVolume {
    let dims = mask.header.dims;
    let mut cur = mask.voxels.clone();
    let strides = [1, dims[0], dims[0] * dims[1]];
    for axis in 0..3 {
        let n = dims[axis];
        let mut next = vec![0u8; cur.len()];
        for (i, out) in next.iter_mut().enumerate() {
            let pos = (i / strides[axis]) % n;
            let base = i - pos * strides[axis];
            let (lo, hi) = (pos as isize - r as isize, pos as isize + r as isize);
            let mut window = (lo..=hi).map(|q| if q < 0 || q >= n as isize { 0 } else { cur[base + q as usize * strides[axis]] });
            *out = if dilate { u8::from(window.any(|v| v != 0)) } else { u8::from(window.all(|v| v != 0)) };
        }
        cur = next;
    }
    MaskVolume { header: mask.header.clone(), voxels: cur }
}

pub fn dilate(mask: &MaskVolume, r: usize) -> MaskVolume {
    cube_filter(mask, r, true)
}

pub fn erode(mask: &MaskVolume, r: usize) -> Result<MaskVolume, PhantomError> {
    let out = cube_filter(mask, r, false);
    if out.is_blank() {
        return Err(PhantomError::ErosionExtinction);
    }
    Ok(out)
}

/// Shifts by `offset`, first clamped so the mask's bounding box stays inside
/// the grid.
pub fn translate(mask: &MaskVolume, offset: [isize; 3]) -> MaskVolume {
    let dims = mask.header.dims;
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for (i, &v) in mask.voxels.iter().enumerate() {
        if v != 0 {
            let c = mask.coords(i);
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
    }
    let shift: [isize; 3] = std::array::from_fn(|k| offset[k].clamp(-(lo[k] as isize), (dims[k] - 1 - hi[k]) as isize));
    let mut out = MaskVolume { header: mask.header.clone(), voxels: vec![0; mask.voxels.len()] };
    for (i, &v) in mask.voxels.iter().enumerate() {
        if v != 0 {
            let c = mask.coords(i);
            let j =
                out.index((c[0] as isize + shift[0]) as usize, (c[1] as isize + shift[1]) as usize, (c[2] as isize + shift[2]) as usize);
            out.voxels[j] = 1;
        }
    }
    out
}

/// Flips each voxel of the two-sided boundary band (inside voxels with an
/// outside face neighbour and outside voxels with an inside one)
/// independently with probability `p`.
pub fn boundary_flip(mask: &MaskVolume, p: f64, seed: u64) -> MaskVolume {
    const FACES: [[isize; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = mask.clone();
    for i in 0..mask.voxels.len() {
        let [x, y, z] = mask.coords(i);
        let inside = mask.voxels[i] != 0;
        let on_band = FACES.iter().any(|d| {
            let (qx, qy, qz) = (x as isize + d[0], y as isize + d[1], z as isize + d[2]);
            let other = mask.in_bounds(qx, qy, qz) && mask.get(qx as usize, qy as usize, qz as usize);
            other != inside
        });
        if on_band && rng.random::<f64>() < p {
            out.voxels[i] = u8::from(!inside);
        }
    }
    out
}

/// Shift direction for `translate`, one of the 26 unit offsets.
fn direction(seed: u64) -> [isize; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = rng.random_range(0..26usize);
    if k >= 13 {
        k += 1;
    }
    [(k % 3) as isize - 1, ((k / 3) % 3) as isize - 1, (k / 9) as isize - 1]
}

impl MaskSource {
    /// The perturbation applied to case `index`; the seed is mixed with the
    /// case index so every case gets its own flips and direction.
    pub fn for_case(&self, index: usize) -> PerturbationSpec {
        let mut p = self.perturbation.clone();
        p.seed = p.seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        p
    }
}

pub fn perturb_mask(mask: &MaskVolume, spec: &PerturbationSpec) -> Result<MaskVolume, PhantomError> {
    if mask.is_blank() {
        return Err(PhantomError::EmptyMask);
    }
    let steps = spec.magnitude.max(0.0).round() as usize;
    let out = match spec.kind {
        PerturbationKind::Dilate => dilate(mask, steps),
        PerturbationKind::Erode => erode(mask, steps)?,
        PerturbationKind::Translate => translate(mask, direction(spec.seed).map(|d| d * steps as isize)),
        PerturbationKind::BoundaryFlip => boundary_flip(mask, spec.magnitude.clamp(0.0, 1.0), spec.seed),
        PerturbationKind::Hybrid => {
            let moved = translate(mask, direction(spec.seed).map(|d| d * steps as isize));
            let grown = dilate(&moved, steps);
            if steps == 0 {
                grown
            } else {
                boundary_flip(&grown, spec.flip_probability.clamp(0.0, 1.0), spec.seed.wrapping_add(1))
            }
        }
    };
    if out.is_blank() {
        return Err(PhantomError::ErosionExtinction);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> PhantomSpec {
        PhantomSpec { dims: [32; 3], radius_range: [4.0, 8.0], ..Default::default() }
    }

    #[test]
    fn cases_are_deterministic() {
        let s = small_spec();
        assert_eq!(s.generate_case(3), s.generate_case(3));
        assert_ne!(s.generate_case(3).image, s.generate_case(4).image);
    }

    #[test]
    fn fixed_radius_volume() {
        let s = PhantomSpec { radius_range: [8.0, 8.0], ..small_spec() };
        let expected = 4.0 / 3.0 * std::f64::consts::PI * 512.0;
        for i in 0..5 {
            let n = s.generate_case(i).mask.count() as f64;
            assert!((n - expected).abs() / expected < 0.05, "{n}");
        }
    }

    #[test]
    fn zero_signal_gives_base_rate() {
        let s = PhantomSpec { signal: SignalRule { intercept: 0.4, volume_weight: 0.0, intensity_weight: 0.0 }, ..small_spec() };
        let base = 1.0 / (1.0 + (-0.4f64).exp());
        let n = 500;
        let ones = (0..n).filter(|&i| s.case_params(i).label).count() as f64;
        let se = (base * (1.0 - base) / n as f64).sqrt();
        assert!((ones / n as f64 - base).abs() < 3.0 * se);
        assert!((s.expected_class_balance(1000) - base).abs() < 1e-12);
    }

    #[test]
    fn survival_matches_label() {
        let s = small_spec();
        for i in 0..50 {
            let p = s.case_params(i);
            assert_eq!(p.label, p.survival_years > 4.0);
        }
    }

    #[test]
    fn validation() {
        assert!(small_spec().validate().is_ok());
        let tight = PhantomSpec { dims: [16; 3], radius_range: [4.0, 8.0], ..Default::default() };
        assert!(matches!(tight.validate(), Err(PhantomError::InvalidSpec(_))));
        let skewed = PhantomSpec { signal: SignalRule { intercept: 40.0, ..Default::default() }, ..small_spec() };
        assert!(matches!(skewed.validate(), Err(PhantomError::ClassBalance(_))));
    }

    #[test]
    fn smoothing_preserves_unit_variance() {
        let dims = [40, 40, 40];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v: Vec<f64> = (0..64000).map(|_| StandardNormal.sample(&mut rng)).collect();
        smooth_unit_variance(&mut v, dims, 1.5);
        let interior: Vec<f64> = (0..v.len())
            .filter(|&i| {
                let c = [i % 40, (i / 40) % 40, i / 1600];
                c.iter().all(|&x| (6..34).contains(&x))
            })
            .map(|i| v[i])
            .collect();
        let var = interior.iter().map(|x| x * x).sum::<f64>() / interior.len() as f64;
        assert!((var - 1.0).abs() < 0.15, "{var}");
    }

    #[test]
    fn morphology_fixtures() {
        let mut one = MaskVolume::empty([5, 5, 5]);
        one.set(2, 2, 2, true);
        assert_eq!(dilate(&one, 1).count(), 27);
        assert_eq!(perturb_mask(&one, &PerturbationSpec::new(PerturbationKind::Dilate, 0.0, 0)).unwrap(), one);
        let block = MaskVolume::from_fn([5, 5, 5], |x, y, z| (1..4).contains(&x) && (1..4).contains(&y) && (1..4).contains(&z));
        assert_eq!(erode(&block, 1).unwrap().count(), 1);
        assert_eq!(perturb_mask(&block, &PerturbationSpec::new(PerturbationKind::Erode, 2.0, 0)), Err(PhantomError::ErosionExtinction));
    }

    #[test]
    fn translation_is_clamped() {
        let mut m = MaskVolume::empty([4, 4, 4]);
        m.set(1, 1, 1, true);
        let t = translate(&m, [10, -10, 1]);
        assert!(t.get(3, 0, 2));
        assert_eq!(t.count(), 1);
    }

    #[test]
    fn flip_zero_is_identity() {
        let m = ellipsoid([12; 3], [6.0; 3], [3.0, 4.0, 2.5]);
        assert_eq!(boundary_flip(&m, 0.0, 9), m);
        assert_ne!(boundary_flip(&m, 0.5, 9), m);
    }
}
