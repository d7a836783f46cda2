use super::{GradientField, MaskedGrid};

/// First-order forward differences. `dx` is unavailable on the last column
/// and `dy` on the last row; no wrapping.
pub fn gradient(g: &MaskedGrid) -> GradientField {
    let geom = *g.geometry();
    let (nx, ny) = (geom.nx, geom.ny);
    let mut dx = MaskedGrid::unavailable(geom);
    let mut dy = MaskedGrid::unavailable(geom);
    for i in 0..nx {
        for j in 0..ny {
            let n = geom.index(i, j);
            let Some(v) = g.get_index(n) else { continue };
            if i + 1 < nx {
                if let Some(r) = g.get_index(n + ny) {
                    dx.set_index(n, r - v);
                }
            }
            if j + 1 < ny {
                if let Some(u) = g.get_index(n + 1) {
                    dy.set_index(n, u - v);
                }
            }
        }
    }
    GradientField { dx, dy }
}

/// Five-point Laplacian, available only where the cell and all four
/// in-grid neighbors are available.
pub fn laplacian(g: &MaskedGrid) -> MaskedGrid {
    let geom = *g.geometry();
    let (nx, ny) = (geom.nx, geom.ny);
    let mut out = MaskedGrid::unavailable(geom);
    if nx < 3 || ny < 3 {
        return out;
    }
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let n = geom.index(i, j);
            let cells = [n, n + 1, n - 1, n + ny, n - ny].map(|k| g.get_index(k));
            if let [Some(c), Some(u), Some(d), Some(r), Some(l)] = cells {
                out.set_index(n, -4.0 * c + u + d + r + l);
            }
        }
    }
    out
}

/// Per-cell Euclidean norm of a gradient field.
pub fn magnitude(f: &GradientField) -> MaskedGrid {
    let mut out = MaskedGrid::unavailable(*f.geometry());
    for (n, gx) in f.dx.iter_available() {
        if let Some(gy) = f.dy.get_index(n) {
            out.set_index(n, gx.hypot(gy));
        }
    }
    out
}
