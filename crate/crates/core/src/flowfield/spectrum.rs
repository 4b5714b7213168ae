use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::FlowField;
use crate::field::ScalarField;

/// Centred 2-D spectrum of the complex flow `u + i v`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpectrum {
    /// `ln(1 + |W|)`.
    pub log_magnitude: ScalarField,
    /// `arg(W)` in `(-pi, pi]`, with `arg(0) = 0`.
    pub phase: ScalarField,
}

/// DFT of the flow with the zero frequency moved to `(width/2, height/2)`.
pub fn flow_spectrum(field: &FlowField) -> FlowSpectrum {
    let (w, h) = (field.width(), field.height());
    let mut data: Vec<Complex64> = field
        .u()
        .iter()
        .zip(field.v())
        .map(|(&u, &v)| Complex64::new(u, v))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in data.chunks_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = data[y * w + x];
        }
        col_fft.process(&mut column);
        for y in 0..h {
            data[y * w + x] = column[y];
        }
    }

    let mut log_magnitude = vec![0.0; w * h];
    let mut phase = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let z = data[y * w + x];
            let dst = ((y + h / 2) % h) * w + (x + w / 2) % w;
            log_magnitude[dst] = z.norm().ln_1p();
            phase[dst] = principal_arg(z);
        }
    }
    FlowSpectrum {
        log_magnitude: ScalarField::from_parts_unchecked(w, h, log_magnitude, (0, 0)),
        phase: ScalarField::from_parts_unchecked(w, h, phase, (0, 0)),
    }
}

fn principal_arg(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    let a = z.im.atan2(z.re);
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(field: &FlowField) -> Vec<Complex64> {
        let (w, h) = (field.width(), field.height());
        let mut out = vec![Complex64::new(0.0, 0.0); w * h];
        for ky in 0..h {
            for kx in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let (u, v) = field.at(x, y);
                        let ang =
                            -2.0 * PI * ((kx * x) as f64 / w as f64 + (ky * y) as f64 / h as f64);
                        acc += Complex64::new(u, v) * Complex64::from_polar(1.0, ang);
                    }
                }
                out[ky * w + kx] = acc;
            }
        }
        out
    }

    #[test]
    fn zero_field_spectrum_is_zero() {
        let s = flow_spectrum(&FlowField::zeros(8, 8).unwrap());
        assert!(s.log_magnitude.values().iter().all(|&v| v == 0.0));
        assert!(s.phase.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_concentrates_in_dc() {
        let (w, h, c) = (12, 10, 1.5);
        let s = flow_spectrum(&FlowField::constant(w, h, c, 0.0).unwrap());
        for y in 0..h {
            for x in 0..w {
                let lm = s.log_magnitude.get(x, y);
                if (x, y) == (w / 2, h / 2) {
                    assert!((lm - (1.0 + c * (w * h) as f64).ln()).abs() < 1e-9);
                } else {
                    // |W| < 1e-9 off the DC bin
                    assert!(lm.exp_m1() < 1e-9, "bin ({x},{y}) = {lm}");
                }
            }
        }
    }

    #[test]
    fn single_frequency_matches_naive_dft() {
        let n = 16;
        let f = FlowField::from_fn(n, n, |x, _| {
            ((2.0 * PI * 3.0 * x as f64 / n as f64).cos(), 0.0)
        })
        .unwrap();
        let s = flow_spectrum(&f);
        let oracle = naive_dft(&f);
        let mut nonzero = Vec::new();
        for ky in 0..n {
            for kx in 0..n {
                let z = oracle[ky * n + kx];
                let (sx, sy) = ((kx + n / 2) % n, (ky + n / 2) % n);
                assert!((s.log_magnitude.get(sx, sy) - z.norm().ln_1p()).abs() < 1e-9);
                if z.norm() > 1e-6 {
                    nonzero.push((kx, ky));
                    assert!((s.phase.get(sx, sy) - principal_arg(z)).abs() < 1e-9);
                }
            }
        }
        assert_eq!(nonzero, vec![(3, 0), (13, 0)]);
    }

    #[test]
    fn phase_range() {
        let f = FlowField::from_fn(9, 7, |x, y| ((x * y) as f64 * 0.37 - 1.0, (x as f64).sin()))
            .unwrap();
        let s = flow_spectrum(&f);
        assert!(s.phase.values().iter().all(|&p| p > -PI && p <= PI));
    }
}
