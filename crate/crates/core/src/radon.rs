//! Parallel-beam Radon transform and filtered back projection.
//!
//! Images live on the uniform `N x N` grid of the unit square (the scaled
//! support coordinates). Ray directions are `(cos t, sin t)` with `t` measured
//! from the positive x-axis, and the offset `y` runs along the direction.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{Domain, SampledField};
use crate::grid::UniformInterval;

/// Values indexed by angle and offset, stored angle-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub angles: Vec<f64>,
    pub offsets: UniformInterval,
    pub values: Vec<Complex64>,
}

impl Sinogram {
    pub fn zeros(angles: Vec<f64>, offsets: UniformInterval) -> Self {
        let len = angles.len() * offsets.len();
        Self {
            angles,
            offsets,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_offsets(&self) -> usize {
        self.offsets.len()
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.n_offsets();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    pub fn header(&self) -> SinogramHeader {
        let step = if self.angles.len() > 1 {
            (self.angles[1] - self.angles[0]).to_degrees()
        } else {
            180.0
        };
        SinogramHeader {
            n_angles: self.n_angles(),
            n_offsets: self.n_offsets(),
            angle_step_deg: step,
            complex: !self.is_real(),
        }
    }

    /// Little-endian `float64`, angle-major; complex values interleave `re, im`.
    pub fn to_binary(&self) -> Vec<u8> {
        let complex = !self.is_real();
        let mut out = Vec::new();
        for z in &self.values {
            out.extend_from_slice(&z.re.to_le_bytes());
            if complex {
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_binary(header: &SinogramHeader, bytes: &[u8]) -> Result<Self> {
        let floats: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let values: Vec<Complex64> = if header.complex {
            floats.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
        } else {
            floats.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        };
        if values.len() != header.n_angles * header.n_offsets {
            return Err(invalid("sinogram payload does not match its header"));
        }
        let step = header.angle_step_deg.to_radians();
        Ok(Self {
            angles: (0..header.n_angles).map(|k| k as f64 * step).collect(),
            offsets: UniformInterval::new(header.n_offsets)?,
            values,
        })
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write_binary(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::File::create(dir.join(format!("{stem}.bin")))?.write_all(&self.to_binary())?;
        let header = serde_json::to_string_pretty(&self.header())?;
        std::fs::write(dir.join(format!("{stem}.json")), header + "\n")?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinogramHeader {
    pub n_angles: usize,
    pub n_offsets: usize,
    pub angle_step_deg: f64,
    pub complex: bool,
}

/// `count` angles `k pi / count` covering `[0, pi)` with step `step_deg`.
pub fn uniform_angles(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg > 0.0 && step_deg <= 90.0) {
        return Err(invalid(format!("angle step must lie in (0, 90] degrees, got {step_deg}")));
    }
    let count = 180.0 / step_deg;
    if (count - count.round()).abs() > 1e-9 {
        return Err(invalid(format!("angle step {step_deg} does not divide 180 degrees")));
    }
    let count = count.round() as usize;
    Ok((0..count).map(|k| k as f64 * PI / count as f64).collect())
}

/// Bilinear interpolation at fractional indices; zero outside the grid.
pub(crate) fn bilinear(values: &[Complex64], n: usize, fx: f64, fy: f64) -> Complex64 {
    const SLACK: f64 = 1e-9;
    let last = (n - 1) as f64;
    if !(fx >= -SLACK && fx <= last + SLACK && fy >= -SLACK && fy <= last + SLACK) {
        return Complex64::new(0.0, 0.0);
    }
    let fx = fx.clamp(0.0, last);
    let fy = fy.clamp(0.0, last);
    let ix = (fx.floor() as usize).min(n - 2);
    let iy = (fy.floor() as usize).min(n - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let v = |i: usize, j: usize| values[j * n + i];
    v(ix, iy) * ((1.0 - tx) * (1.0 - ty))
        + v(ix + 1, iy) * (tx * (1.0 - ty))
        + v(ix, iy + 1) * ((1.0 - tx) * ty)
        + v(ix + 1, iy + 1) * (tx * ty)
}

/// Line integrals of `image` (treated as living on `[-1, 1]^2`).
pub fn forward_radon(image: &SampledField, angles: &[f64], offsets: UniformInterval) -> Result<Sinogram> {
    if image.dim != 2 {
        return Err(invalid("the Radon transform needs a 2-d image"));
    }
    let n = image.n;
    let h = image.grid().step();
    let half_len = (2f64.sqrt() / h).ceil() as i64;
    let y = offsets.nodes();
    let to_index = |x: f64| (x + 1.0) / h;

    let values = angles
        .par_iter()
        .flat_map_iter(|&t| {
            let (s, c) = t.sin_cos();
            let image = &image.values;
            y.iter().map(move |&yi| {
                // Trapezoid along the line; samples outside the square vanish.
                let sum: Complex64 = (-half_len..=half_len)
                    .map(|k| {
                        let tk = k as f64 * h;
                        let (qx, qy) = (yi * c - tk * s, yi * s + tk * c);
                        bilinear(image, n, to_index(qx), to_index(qy))
                    })
                    .sum();
                sum * h
            })
        })
        .collect();
    Ok(Sinogram {
        angles: angles.to_vec(),
        offsets,
        values,
    })
}

/// Frequency window applied on top of the ramp filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterWindow {
    /// Plain Ram-Lak.
    #[default]
    RamLak,
    /// Ram-Lak multiplied by `cos(pi f)`, `f` in cycles per sample.
    Cosine,
}

fn ram_lak(k: i64, h: f64) -> f64 {
    if k == 0 {
        1.0 / (4.0 * h * h)
    } else if k % 2 == 0 {
        0.0
    } else {
        -1.0 / (PI * PI * (k * k) as f64 * h * h)
    }
}

/// Ramp-filters each row, `Q = h * sum_j kernel[i - j] p_j`.
fn filter_rows(rows: &[Vec<Complex64>], h: f64, window: FilterWindow) -> Vec<Vec<Complex64>> {
    let n = rows.first().map_or(0, Vec::len);
    match window {
        FilterWindow::RamLak => {
            let kernel: Vec<f64> = (-(n as i64 - 1)..n as i64).map(|k| ram_lak(k, h)).collect();
            rows.par_iter()
                .map(|p| {
                    (0..n)
                        .map(|i| {
                            let s: Complex64 = (0..n).map(|j| p[j] * kernel[i + n - 1 - j]).sum();
                            s * h
                        })
                        .collect()
                })
                .collect()
        }
        FilterWindow::Cosine => {
            let len = (2 * n).next_power_of_two();
            let mut planner = FftPlanner::<f64>::new();
            let fft = planner.plan_fft_forward(len);
            let ifft = planner.plan_fft_inverse(len);
            let mut response = vec![Complex64::new(0.0, 0.0); len];
            for k in -(n as i64 - 1)..n as i64 {
                response[k.rem_euclid(len as i64) as usize] = Complex64::new(ram_lak(k, h), 0.0);
            }
            fft.process(&mut response);
            for (m, z) in response.iter_mut().enumerate() {
                let f = if m <= len / 2 { m as f64 } else { m as f64 - len as f64 } / len as f64;
                *z *= (PI * f).cos() * h / len as f64;
            }
            rows.iter()
                .map(|p| {
                    let mut buf = vec![Complex64::new(0.0, 0.0); len];
                    buf[..n].copy_from_slice(p);
                    fft.process(&mut buf);
                    for (b, r) in buf.iter_mut().zip(&response) {
                        *b *= r;
                    }
                    ifft.process(&mut buf);
                    buf.truncate(n);
                    buf
                })
                .collect()
        }
    }
}

/// Filtered back projection onto the `n_out x n_out` grid of the unit square.
pub fn fbp_inverse(sino: &Sinogram, n_out: usize, window: FilterWindow) -> Result<SampledField> {
    if sino.n_angles() < 2 {
        return Err(invalid(format!(
            "filtered back projection needs at least 2 angles, got {}",
            sino.n_angles()
        )));
    }
    let grid = UniformInterval::new(n_out)?;
    let n = sino.n_offsets();
    let h = sino.offsets.step();
    // Projections vanish beyond |y| = 1, but their filtered versions do not;
    // the square's corners reach |y| = sqrt(2).
    let pad = ((2f64.sqrt() - 1.0) / h).ceil() as usize + 1;
    let padded: Vec<Vec<Complex64>> = (0..sino.n_angles())
        .map(|k| {
            let mut row = vec![Complex64::new(0.0, 0.0); n + 2 * pad];
            row[pad..pad + n].copy_from_slice(sino.row(k));
            row
        })
        .collect();
    let filtered = filter_rows(&padded, h, window);
    let n_ext = n + 2 * pad;
    let origin = 1.0 / h + pad as f64;
    let x = grid.nodes();
    let trig: Vec<(f64, f64)> = sino.angles.iter().map(|t| t.sin_cos()).collect();
    let weight = PI / sino.n_angles() as f64;

    let values = (0..n_out)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let (x, trig, filtered) = (&x, &trig, &filtered);
            (0..n_out).map(move |ix| {
                let mut acc = Complex64::new(0.0, 0.0);
                for ((s, c), q) in trig.iter().zip(filtered) {
                    acc += linear(q, n_ext, (x[ix] * c + x[iy] * s) / h + origin);
                }
                acc * weight
            })
        })
        .collect();
    SampledField::from_values(Domain::Spatial, 2, n_out, 1.0, values)
}

fn linear(q: &[Complex64], n: usize, f: f64) -> Complex64 {
    let last = (n - 1) as f64;
    if !(f >= 0.0 && f <= last) {
        return Complex64::new(0.0, 0.0);
    }
    let i = (f.floor() as usize).min(n - 2);
    let t = f - i as f64;
    q[i] * (1.0 - t) + q[i + 1] * t
}
