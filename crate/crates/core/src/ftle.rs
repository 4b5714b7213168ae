//! Finite-time Lyapunov exponent fields from flow-map gradients, plus the
//! smoothing, cropping, fusion and peak-finding steps applied to them.

use rayon::prelude::*;

use crate::advection::FlowMap;
use crate::error::{Error, Result};
pub use crate::field::ScalarField;

pub const DEFAULT_SIGMA: f64 = 1.5;
pub const DEFAULT_MARGIN: usize = 5;
/// Floor on the Cauchy–Green eigenvalue before taking the logarithm.
pub const EIGEN_FLOOR: f64 = 1e-30;

/// Derivatives of a particle's final position with respect to its initial
/// position: `xy` is d(final x)/d(initial y), and so on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2x2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Jacobian2x2 {
    pub const IDENTITY: Self = Self {
        xx: 1.0,
        xy: 0.0,
        yx: 0.0,
        yy: 1.0,
    };

    pub fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Self { xx, xy, yx, yy }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            xx: self.xx * o.xx + self.xy * o.yx,
            xy: self.xx * o.xy + self.xy * o.yy,
            yx: self.yx * o.xx + self.yy * o.yx,
            yy: self.yx * o.xy + self.yy * o.yy,
        }
    }

    /// Largest eigenvalue of the Cauchy–Green tensor `J^T J`.
    pub fn max_stretch_squared(&self) -> f64 {
        let a = self.xx * self.xx + self.yx * self.yx;
        let b = self.xx * self.xy + self.yx * self.yy;
        let d = self.xy * self.xy + self.yy * self.yy;
        let half_trace = 0.5 * (a + d);
        let half_diff = 0.5 * (a - d);
        half_trace + half_diff.hypot(b)
    }
}

/// Interior Jacobians of a flow map, `(cols-2) x (rows-2)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianField {
    pub cols: usize,
    pub rows: usize,
    pub values: Vec<Jacobian2x2>,
}

impl JacobianField {
    pub fn get(&self, col: usize, row: usize) -> Jacobian2x2 {
        self.values[row * self.cols + col]
    }
}

/// Central-difference gradient of the x- and y-flow maps.
pub fn flow_map_gradient(map: &FlowMap) -> Result<JacobianField> {
    let (cols, rows) = (map.cols(), map.rows());
    if cols < 3 || rows < 3 {
        return Err(Error::InvalidArgument(format!(
            "flow map {cols}x{rows} is too small for central differences"
        )));
    }
    let grid = map.grid();
    let (sx2, sy2) = (2.0 * grid.step_x, 2.0 * grid.step_y);
    let (fx, fy) = (map.final_x(), map.final_y());
    let (ic, ir) = (cols - 2, rows - 2);
    let values = (0..ic * ir)
        .into_par_iter()
        .map(|k| {
            let (c, r) = (k % ic + 1, k / ic + 1);
            let at = |cc: usize, rr: usize| rr * cols + cc;
            Jacobian2x2 {
                xx: (fx[at(c + 1, r)] - fx[at(c - 1, r)]) / sx2,
                xy: (fx[at(c, r + 1)] - fx[at(c, r - 1)]) / sy2,
                yx: (fy[at(c + 1, r)] - fy[at(c - 1, r)]) / sx2,
                yy: (fy[at(c, r + 1)] - fy[at(c, r - 1)]) / sy2,
            }
        })
        .collect();
    Ok(JacobianField {
        cols: ic,
        rows: ir,
        values,
    })
}

/// `ln(lambda_max(J^T J)) / (2T)`.
pub fn ftle_from_jacobian(j: &Jacobian2x2, duration: f64) -> f64 {
    let lambda = j.max_stretch_squared();
    let lambda = if lambda <= EIGEN_FLOOR {
        EIGEN_FLOOR
    } else {
        lambda
    };
    lambda.ln() / (2.0 * duration)
}

/// FTLE over the interior of the map. Cell (0, 0) of the result is grid
/// cell (1, 1), recorded as the field offset.
pub fn compute_ftle_field(map: &FlowMap) -> Result<ScalarField> {
    let jac = flow_map_gradient(map)?;
    let t = map.duration().abs();
    let values: Vec<f64> = jac
        .values
        .par_iter()
        .map(|j| ftle_from_jacobian(j, t))
        .collect();
    Ok(ScalarField::new(jac.cols, jac.rows, values)?.with_offset((1, 1)))
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Separable Gaussian blur, radius `ceil(3 sigma)`, replicated borders.
pub fn gaussian_smooth(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma {sigma} must be positive"
        )));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (cols, rows) = (field.cols(), field.rows());
    let src = field.values();

    let mut horizontal = vec![0.0; cols * rows];
    horizontal
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, out)| {
            let row = &src[r * cols..(r + 1) * cols];
            for (c, o) in out.iter_mut().enumerate() {
                *o = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, w)| {
                        let cc = (c as isize + k as isize - radius).clamp(0, cols as isize - 1);
                        w * row[cc as usize]
                    })
                    .sum();
            }
        });

    let mut out = vec![0.0; cols * rows];
    out.par_chunks_mut(cols).enumerate().for_each(|(r, dst)| {
        for (c, o) in dst.iter_mut().enumerate() {
            *o = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let rr = (r as isize + k as isize - radius).clamp(0, rows as isize - 1);
                    w * horizontal[rr as usize * cols + c]
                })
                .sum();
        }
    });
    Ok(ScalarField::from_parts_unchecked(
        cols,
        rows,
        out,
        field.offset(),
    ))
}

/// Crops `margin` cells from every side; the offset tracks the crop.
pub fn strip_boundary(field: &ScalarField, margin: usize) -> Result<ScalarField> {
    let (cols, rows) = (field.cols(), field.rows());
    if 2 * margin >= cols.min(rows) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} leaves nothing of a {cols}x{rows} field"
        )));
    }
    let (nc, nr) = (cols - 2 * margin, rows - 2 * margin);
    let values = (0..nr)
        .flat_map(|r| (0..nc).map(move |c| (c, r)))
        .map(|(c, r)| field.get(c + margin, r + margin))
        .collect();
    let (ox, oy) = field.offset();
    Ok(ScalarField::from_parts_unchecked(
        nc,
        nr,
        values,
        (ox + margin, oy + margin),
    ))
}

/// Pointwise maximum of forward and backward FTLE.
pub fn combine_ftle(forward: &ScalarField, backward: &ScalarField) -> Result<ScalarField> {
    if forward.cols() != backward.cols() || forward.rows() != backward.rows() {
        return Err(Error::DimensionMismatch(format!(
            "forward {}x{} vs backward {}x{}",
            forward.cols(),
            forward.rows(),
            backward.cols(),
            backward.rows()
        )));
    }
    let values = forward
        .values()
        .iter()
        .zip(backward.values())
        .map(|(a, b)| a.max(*b))
        .collect();
    Ok(ScalarField::from_parts_unchecked(
        forward.cols(),
        forward.rows(),
        values,
        forward.offset(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub col: usize,
    pub row: usize,
    pub value: f64,
}

/// Strict 8-neighbourhood maxima above `min + min_prominence`, highest first.
pub fn find_ftle_peaks(field: &ScalarField, min_prominence: f64) -> Vec<Peak> {
    let (cols, rows) = (field.cols(), field.rows());
    let floor = field.min() + min_prominence;
    let mut peaks = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = field.get(c, r);
            if v <= floor {
                continue;
            }
            let mut strict = true;
            'nb: for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nc, nr) = (c as isize + dc, r as isize + dr);
                    if nc < 0 || nr < 0 || nc >= cols as isize || nr >= rows as isize {
                        continue;
                    }
                    if field.get(nc as usize, nr as usize) >= v {
                        strict = false;
                        break 'nb;
                    }
                }
            }
            if strict {
                peaks.push(Peak {
                    col: c,
                    row: r,
                    value: v,
                });
            }
        }
    }
    // stable sort keeps row-major order among equal values
    peaks.sort_by(|a, b| b.value.total_cmp(&a.value));
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advection::{Direction, ParticleGrid};

    fn map_from_fn(n: usize, f: impl Fn(f64, f64) -> (f64, f64)) -> FlowMap {
        let g = ParticleGrid::covering(n, n, 1.0).unwrap();
        let (xs, ys) = g.positions().into_iter().map(|(x, y)| f(x, y)).unzip();
        FlowMap::new(g, xs, ys, Direction::Forward, 20.0).unwrap()
    }

    fn rot(theta: f64) -> Jacobian2x2 {
        let (s, c) = theta.sin_cos();
        Jacobian2x2::new(c, -s, s, c)
    }

    #[test]
    fn gradient_of_identity_and_translation() {
        for m in [
            map_from_fn(8, |x, y| (x, y)),
            map_from_fn(8, |x, y| (x + 3.5, y - 1.25)),
        ] {
            let j = flow_map_gradient(&m).unwrap();
            assert_eq!((j.cols, j.rows), (6, 6));
            for v in &j.values {
                assert!((v.xx - 1.0).abs() < 1e-12 && v.xy.abs() < 1e-12);
                assert!(v.yx.abs() < 1e-12 && (v.yy - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_of_analytic_saddle_map() {
        let (a, t, c): (f64, f64, f64) = (0.05, 20.0, 15.5);
        let e = (a * t).exp();
        let m = map_from_fn(32, |x, y| (c + (x - c) * e, c + (y - c) / e));
        let j = flow_map_gradient(&m).unwrap();
        for v in &j.values {
            assert!((v.xx - 1.0f64.exp()).abs() < 1e-9);
            assert!((v.yy - (-1.0f64).exp()).abs() < 1e-9);
            assert!(v.xy.abs() < 1e-9 && v.yx.abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_of_minimal_map() {
        let g = ParticleGrid::new(0.0, 0.0, 2.0, 0.5, 3, 3).unwrap();
        let m = FlowMap::identity(g, Direction::Forward, 1.0).unwrap();
        let j = flow_map_gradient(&m).unwrap();
        assert_eq!((j.cols, j.rows), (1, 1));
        assert_eq!(j.get(0, 0), Jacobian2x2::IDENTITY);
    }

    #[test]
    fn ftle_identity_rotation_and_diagonal() {
        assert_eq!(ftle_from_jacobian(&Jacobian2x2::IDENTITY, 7.0), 0.0);
        for theta in [0.3, 1.2, -2.5] {
            assert!(ftle_from_jacobian(&rot(theta), 3.0).abs() < 1e-12);
        }
        let (a, t): (f64, f64) = (0.05, 20.0);
        let j = Jacobian2x2::new((a * t).exp(), 0.0, 0.0, (-a * t).exp());
        assert!((ftle_from_jacobian(&j, t) - a).abs() < 1e-12);
    }

    #[test]
    fn ftle_degenerate_guard() {
        let z = Jacobian2x2::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(ftle_from_jacobian(&z, 2.0), EIGEN_FLOOR.ln() / 4.0);
    }

    #[test]
    fn ftle_rotation_invariance_and_scaling() {
        let j = Jacobian2x2::new(1.7, 0.4, -0.3, 0.8);
        let base = ftle_from_jacobian(&j, 5.0);
        for (a, b) in [(0.2, 1.1), (-0.7, 2.9), (3.0, -1.0)] {
            let rj = rot(a).mul(&j).mul(&rot(b));
            assert!((ftle_from_jacobian(&rj, 5.0) - base).abs() < 1e-10);
        }
        let s: f64 = 3.0;
        let d = |k: f64| Jacobian2x2::new(s.powf(k), 0.0, 0.0, 0.5);
        let one = ftle_from_jacobian(&d(1.0), 4.0);
        for k in [2.0, 3.0, 0.5] {
            assert!((ftle_from_jacobian(&d(k), 4.0) - k * one).abs() < 1e-12);
        }
    }

    #[test]
    fn ftle_field_of_identity_is_zero() {
        let f = compute_ftle_field(&map_from_fn(10, |x, y| (x, y))).unwrap();
        assert_eq!((f.cols(), f.rows(), f.offset()), (8, 8, (1, 1)));
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn smoothing_constant_and_impulse() {
        let c = ScalarField::filled(9, 7, 2.5);
        let s = gaussian_smooth(&c, 1.3).unwrap();
        assert!(s.values().iter().all(|&v| (v - 2.5).abs() < 1e-12));

        let n = 21;
        let imp =
            ScalarField::from_fn(n, n, |x, y| if (x, y) == (10, 10) { 1.0 } else { 0.0 }).unwrap();
        let s = gaussian_smooth(&imp, 1.0).unwrap();
        // independent 2-D table normalised over its square support
        let r = 3i64;
        let mut table = vec![0.0; 49];
        for dy in -r..=r {
            for dx in -r..=r {
                table[((dy + r) * 7 + dx + r) as usize] =
                    (-((dx * dx + dy * dy) as f64) / 2.0).exp();
            }
        }
        let total: f64 = table.iter().sum();
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = (x as i64 - 10, y as i64 - 10);
                let want = if dx.abs() <= r && dy.abs() <= r {
                    table[((dy + r) * 7 + dx + r) as usize] / total
                } else {
                    0.0
                };
                assert!((s.get(x, y) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn smoothing_conserves_interior_mass() {
        let f = ScalarField::from_fn(30, 30, |x, y| {
            if (10..20).contains(&x) && (12..18).contains(&y) {
                ((x * 7 + y * 3) % 5) as f64
            } else {
                0.0
            }
        })
        .unwrap();
        let s = gaussian_smooth(&f, 1.5).unwrap();
        let a: f64 = f.values().iter().sum();
        let b: f64 = s.values().iter().sum();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn strip_boundary_cases() {
        let f = ScalarField::from_fn(10, 10, |x, y| (y * 10 + x) as f64).unwrap();
        assert_eq!(strip_boundary(&f, 0).unwrap(), f);
        let s = strip_boundary(&f, 2).unwrap();
        assert_eq!((s.cols(), s.rows(), s.offset()), (6, 6, (2, 2)));
        assert_eq!(s.get(0, 0), 22.0);
        assert_eq!(s.get(5, 5), 77.0);
        assert!(strip_boundary(&f, 5).is_err());
    }

    #[test]
    fn combine_cases() {
        let f = ScalarField::from_fn(5, 4, |x, y| x as f64 - y as f64).unwrap();
        assert_eq!(combine_ftle(&f, &f).unwrap(), f);
        let z = ScalarField::filled(5, 4, 0.0);
        let m = combine_ftle(&f, &z).unwrap();
        for (a, b) in m.values().iter().zip(f.values()) {
            assert_eq!(*a, b.max(0.0));
        }
        assert!(combine_ftle(&f, &ScalarField::filled(4, 4, 0.0)).is_err());
    }

    #[test]
    fn peaks_cases() {
        assert!(find_ftle_peaks(&ScalarField::filled(6, 6, 1.0), 0.1).is_empty());
        let imp =
            ScalarField::from_fn(7, 7, |x, y| if (x, y) == (2, 4) { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(
            find_ftle_peaks(&imp, 0.5),
            vec![Peak {
                col: 2,
                row: 4,
                value: 1.0
            }]
        );

        let bump =
            |x: f64, y: f64, cx: f64, cy: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / 8.0).exp();
        let f = ScalarField::from_fn(48, 32, |x, y| {
            let (x, y) = (x as f64, y as f64);
            2.0 * bump(x, y, 14.0, 16.0) + bump(x, y, 34.0, 16.0)
        })
        .unwrap();
        let p = find_ftle_peaks(&f, 0.5);
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].col, p[0].row), (14, 16));
        assert_eq!((p[1].col, p[1].row), (34, 16));
    }
}
