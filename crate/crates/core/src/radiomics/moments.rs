//! Rotation-invariant combinations of scale-normalized central moments.
//!
//! Each ROI voxel carries weight `(x − min)/(max − min) + 1`, so the
//! invariants see intensity but not its scale or offset. With `M` the
//! second-order and `T` the third-order normalized moment tensors:
//!
//! - `j1, j2, j3`: trace, sum of principal 2×2 minors and determinant of `M`
//! - `i4 = T_ijk T_ijk`, `i5 = v_i v_i` with `v_i = T_ijj`
//! - `i6 = T_ijk T_ijl M_kl`, `i7 = v_i M_ij v_j`
//! - `i8 = u_i u_i` with `u_i = T_ijk M_jk`, `i9 = u_i v_i`
//! - `i10 = T_ijk T_lmn M_il M_jm M_kn`

use super::RadiomicsError;
use crate::volume::{MaskVolume, Volume3D};

pub const FEATURES: [&str; 10] = ["j1", "j2", "j3", "i4", "i5", "i6", "i7", "i8", "i9", "i10"];

/// Second- and third-order normalized moment tensors.
fn tensors(vol: &Volume3D, mask: &MaskVolume) -> Result<([[f64; 3]; 3], [[[f64; 3]; 3]; 3]), RadiomicsError> {
    let [nx, ny, nz] = vol.header.dims;
    let sp = vol.header.spacing;
    let mut pts: Vec<([f64; 3], f64)> = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if mask.get(x, y, z) {
                    pts.push(([x as f64 * sp[0], y as f64 * sp[1], z as f64 * sp[2]], vol.get(x, y, z)));
                }
            }
        }
    }
    if pts.is_empty() {
        return Err(RadiomicsError::EmptyMask);
    }
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let weight = |v: f64| if hi > lo { (v - lo) / (hi - lo) + 1.0 } else { 1.0 };

    let mut m000 = 0.0;
    let mut c = [0.0; 3];
    for (p, v) in &pts {
        let w = weight(*v);
        m000 += w;
        for k in 0..3 {
            c[k] += w * p[k];
        }
    }
    c.iter_mut().for_each(|v| *v /= m000);

    let mut second = [[0.0; 3]; 3];
    let mut third = [[[0.0; 3]; 3]; 3];
    for (p, v) in &pts {
        let w = weight(*v);
        let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        for i in 0..3 {
            for j in 0..3 {
                second[i][j] += w * d[i] * d[j];
                for k in 0..3 {
                    third[i][j][k] += w * d[i] * d[j] * d[k];
                }
            }
        }
    }
    let s2 = m000.powf(1.0 + 2.0 / 3.0);
    let s3 = m000.powf(2.0);
    for i in 0..3 {
        for j in 0..3 {
            second[i][j] /= s2;
            for k in 0..3 {
                third[i][j][k] /= s3;
            }
        }
    }
    Ok((second, third))
}

pub fn moment_invariants(vol: &Volume3D, mask: &MaskVolume) -> Result<Vec<f64>, RadiomicsError> {
    let (m, t) = tensors(vol, mask)?;
    let r = 0..3;
    let j1 = m[0][0] + m[1][1] + m[2][2];
    let j2 = m[0][0] * m[1][1] + m[0][0] * m[2][2] + m[1][1] * m[2][2] - m[0][1].powi(2) - m[0][2].powi(2) - m[1][2].powi(2);
    let j3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);

    let v: Vec<f64> = r.clone().map(|i| (0..3).map(|j| t[i][j][j]).sum()).collect();
    let u: Vec<f64> =
        r.clone().map(|i| (0..3).flat_map(|j| (0..3).map(move |k| (j, k))).map(|(j, k)| t[i][j][k] * m[j][k]).sum()).collect();
    let (mut i4, mut i6, mut i10) = (0.0, 0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                i4 += t[i][j][k].powi(2);
                for l in 0..3 {
                    i6 += t[i][j][k] * t[i][j][l] * m[k][l];
                }
                // T_lmn M_il M_jm M_kn rotates T into the frame of M.
                let mut rotated = 0.0;
                for l in 0..3 {
                    for mm in 0..3 {
                        for n in 0..3 {
                            rotated += t[l][mm][n] * m[i][l] * m[j][mm] * m[k][n];
                        }
                    }
                }
                i10 += t[i][j][k] * rotated;
            }
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mv: Vec<f64> = (0..3).map(|i| dot(&m[i], &v)).collect();
    Ok(vec![j1, j2, j3, i4, dot(&v, &v), i6, dot(&v, &mv), dot(&u, &u), dot(&u, &v), i10])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(dims: [usize; 3], shift: [usize; 3]) -> (Volume3D, MaskVolume) {
        let inside = move |x: usize, y: usize, z: usize| {
            let (a, b, c) = (x as isize - shift[0] as isize, y as isize - shift[1] as isize, z as isize - shift[2] as isize);
            (0..5).contains(&a) && (0..4).contains(&b) && (0..3).contains(&c) && (a + b + c) % 4 != 3
        };
        let intensity = move |x: usize, y: usize, z: usize| ((x - shift[0]) * 3 + (y - shift[1]) * 5 + (z - shift[2]) * 7) as f64 % 11.0;
        let vol = Volume3D::from_fn(dims, |x, y, z| if inside(x, y, z) { intensity(x, y, z) } else { 0.0 });
        (vol, MaskVolume::from_fn(dims, inside))
    }

    #[test]
    fn point_mass_has_zero_second_moments() {
        let mut m = MaskVolume::empty([3, 3, 3]);
        m.set(1, 1, 1, true);
        let f = moment_invariants(&Volume3D::filled([3, 3, 3], 2.0), &m).unwrap();
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn whole_voxel_translation() {
        let (v0, m0) = blob([9, 9, 9], [0, 0, 0]);
        let (v1, m1) = blob([9, 9, 9], [3, 2, 4]);
        let a = moment_invariants(&v0, &m0).unwrap();
        let b = moment_invariants(&v1, &m1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn axis_swap_keeps_second_order_invariants() {
        let (v, m) = blob([9, 9, 9], [1, 1, 1]);
        let swapped_v = Volume3D::from_fn([9, 9, 9], |x, y, z| v.get(y, x, z));
        let swapped_m = MaskVolume::from_fn([9, 9, 9], |x, y, z| m.get(y, x, z));
        let a = moment_invariants(&v, &m).unwrap();
        let b = moment_invariants(&swapped_v, &swapped_m).unwrap();
        for k in 0..10 {
            assert!((a[k] - b[k]).abs() < 1e-12 * a[k].abs().max(1e-300) + 1e-18, "{k}: {} vs {}", a[k], b[k]);
        }
    }

    #[test]
    fn empty_mask() {
        assert!(moment_invariants(&Volume3D::filled([2, 2, 2], 1.0), &MaskVolume::empty([2, 2, 2])).is_err());
    }
}
