use super::{GridGeometry, MaskedGrid};
use crate::error::{Error, Result};
use crate::pose::Pose2;

/// Nearest-neighbor resampling: each destination cell center `p` is mapped
/// to `transform · p` and takes the value of the source cell containing it.
/// Out-of-bounds or unavailable source cells yield unavailable cells.
pub fn resample_rigid(src: &MaskedGrid, transform: &Pose2, dst: GridGeometry) -> MaskedGrid {
    let sg = src.geometry();
    let mut out = MaskedGrid::unavailable(dst);
    for i in 0..dst.nx {
        for j in 0..dst.ny {
            let (px, py) = dst.cell_center(i, j);
            let (qx, qy) = transform.transform_point(px, py);
            if let Some(n) = sg.index_of(qx, qy) {
                if let Some(v) = src.get_index(n) {
                    out.set(i, j, v);
                }
            }
        }
    }
    out
}

/// Resamples `src` onto `dst` through a rotation by `offset.h` about the
/// destination grid center followed by a translation `(offset.x, offset.y)`.
pub fn resample(src: &MaskedGrid, offset: Pose2, dst: GridGeometry) -> MaskedGrid {
    resample_rigid(src, &pivot_transform(dst.center(), offset), dst)
}

/// Block average over `factor × factor` cells. The pooled grid keeps the
/// origin; a block is available when any of its cells is.
pub fn pool_mean(src: &MaskedGrid, factor: usize) -> Result<MaskedGrid> {
    if factor == 0 {
        return Err(Error::Config("pooling factor must be at least 1".into()));
    }
    let g = src.geometry();
    let dst = GridGeometry::new(
        g.nx.div_ceil(factor),
        g.ny.div_ceil(factor),
        g.cell_size * factor as f64,
        g.origin_x,
        g.origin_y,
    )?;
    let mut sum = vec![0.0; dst.len()];
    let mut count = vec![0u32; dst.len()];
    for (n, v) in src.iter_available() {
        let (i, j) = g.coords(n);
        let m = dst.index(i / factor, j / factor);
        sum[m] += v;
        count[m] += 1;
    }
    let mask: Vec<bool> = count.iter().map(|&c| c > 0).collect();
    let values = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    MaskedGrid::from_parts(dst, values, mask)
}

/// Rigid transform `p ↦ R(h)(p − pivot) + pivot + t`.
pub fn pivot_transform(pivot: (f64, f64), offset: Pose2) -> Pose2 {
    let (s, c) = offset.h.sin_cos();
    let (cx, cy) = pivot;
    Pose2::new(
        cx - (c * cx - s * cy) + offset.x,
        cy - (s * cx + c * cy) + offset.y,
        offset.h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn ramp(nx: usize, ny: usize) -> MaskedGrid {
        let g = GridGeometry::new(nx, ny, 0.1, 0.0, 0.0).unwrap();
        MaskedGrid::from_fn(g, |i, j| Some((i * 100 + j) as f64))
    }

    #[test]
    fn identity_is_exact() {
        let src = ramp(7, 5).masked_by(&[true, false, true].repeat(12)[..35]);
        let out = resample(&src, Pose2::identity(), *src.geometry());
        assert_eq!(out, src);
    }

    #[test]
    fn pooling_averages_available_cells() {
        let g = GridGeometry::new(3, 2, 0.1, 1.0, 2.0).unwrap();
        let src = MaskedGrid::from_fn(g, |i, j| (i + j != 1).then_some((10 * i + j) as f64));
        let p = pool_mean(&src, 2).unwrap();
        assert_eq!((p.nx(), p.ny()), (2, 1));
        assert!((p.geometry().cell_size - 0.2).abs() < 1e-15);
        assert_eq!(p.geometry().origin_x, 1.0);
        // block 0 holds (0,0)=0 and (1,1)=11; (0,1) and (1,0) are masked
        assert_eq!(p.get(0, 0), Some(5.5));
        assert_eq!(p.get(1, 0), Some(20.5));
        assert_eq!(pool_mean(&src, 1).unwrap(), src);
        assert!(pool_mean(&src, 0).is_err());
    }

    #[test]
    fn one_cell_shift_in_x() {
        let src = ramp(6, 4);
        let out = resample(&src, Pose2::new(0.1, 0.0, 0.0), *src.geometry());
        for i in 0..5 {
            for j in 0..4 {
                assert_eq!(out.get(i, j), src.get(i + 1, j));
            }
        }
        for j in 0..4 {
            assert_eq!(out.get(5, j), None);
        }
    }

    #[test]
    fn quarter_turn_about_center_matches_brute_force() {
        let src = ramp(8, 8);
        let out = resample(&src, Pose2::new(0.0, 0.0, FRAC_PI_2), *src.geometry());
        // p - c rotated by +90°: (u, v) -> (-v, u), in cell units about 3.5.
        for i in 0..8 {
            for j in 0..8 {
                let (u, v) = (i as f64 - 3.5, j as f64 - 3.5);
                let si = (-v + 3.5).round() as usize;
                let sj = (u + 3.5).round() as usize;
                assert_eq!(out.get(i, j), src.get(si, sj), "cell ({i},{j})");
            }
        }
    }
}
