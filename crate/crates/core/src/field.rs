//! Problem geometry and fields sampled on uniform circumscribed grids.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::UniformInterval;

/// Geometry of the reconstruction problem: data on the ball `B_r`, support in `B_sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub r: f64,
    pub sigma: f64,
    pub c: f64,
    pub d: usize,
    pub n: usize,
}

impl ProblemConfig {
    pub fn new(r: f64, sigma: f64, d: usize, n: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("r and sigma must be positive, got r={r} sigma={sigma}")));
        }
        if d != 1 && d != 2 {
            return Err(invalid(format!("dimension must be 1 or 2, got {d}")));
        }
        UniformInterval::new(n)?;
        Ok(Self {
            r,
            sigma,
            c: r * sigma,
            d,
            n,
        })
    }

    pub fn grid(&self) -> UniformInterval {
        UniformInterval::new(self.n).expect("validated at construction")
    }

    pub fn zeros(&self, domain: Domain) -> SampledField {
        let half_width = match domain {
            Domain::Spatial => self.sigma,
            Domain::Fourier => self.r,
        };
        SampledField::zeros(domain, self.d, self.n, half_width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `[-sigma, sigma]^d`
    Spatial,
    /// `[-r, r]^d`
    Fourier,
}

/// Complex samples on the `N^d` uniform grid of `[-half_width, half_width]^d`.
///
/// Two-dimensional fields are stored row-major with the second coordinate
/// selecting the row: `values[iy * N + ix]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub domain: Domain,
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn zeros(domain: Domain, dim: usize, n: usize, half_width: f64) -> Self {
        Self {
            domain,
            dim,
            n,
            half_width,
            values: vec![Complex64::new(0.0, 0.0); n.pow(dim as u32)],
        }
    }

    pub fn from_values(
        domain: Domain,
        dim: usize,
        n: usize,
        half_width: f64,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        UniformInterval::new(n)?;
        if dim != 1 && dim != 2 {
            return Err(invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if values.len() != n.pow(dim as u32) {
            return Err(invalid(format!(
                "{} values do not fill a {dim}-d grid of {n} nodes per axis",
                values.len()
            )));
        }
        Ok(Self {
            domain,
            dim,
            n,
            half_width,
            values,
        })
    }

    pub fn grid(&self) -> UniformInterval {
        UniformInterval::new(self.n).expect("validated")
    }

    /// Node coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        self.grid().nodes().into_iter().map(|x| x * self.half_width).collect()
    }

    /// Simpson weights along one axis, scaled to the half-width.
    pub fn axis_weights(&self) -> Vec<f64> {
        self.grid().weights().into_iter().map(|w| w * self.half_width).collect()
    }

    /// Product quadrature weights restricted to the closed ball of radius `half_width`.
    pub fn ball_weights(&self) -> Vec<f64> {
        let w = self.axis_weights();
        if self.dim == 1 {
            return w;
        }
        let x = self.grid().nodes();
        let mut out = Vec::with_capacity(self.n * self.n);
        for iy in 0..self.n {
            for ix in 0..self.n {
                let inside = x[ix] * x[ix] + x[iy] * x[iy] <= 1.0 + 1e-12;
                out.push(if inside { w[ix] * w[iy] } else { 0.0 });
            }
        }
        out
    }

    /// Whether each node lies in the closed ball of radius `half_width`.
    pub fn ball_mask(&self) -> Vec<bool> {
        if self.dim == 1 {
            return vec![true; self.n];
        }
        let x = self.grid().nodes();
        let mut out = Vec::with_capacity(self.n * self.n);
        for iy in 0..self.n {
            for ix in 0..self.n {
                out.push(x[ix] * x[ix] + x[iy] * x[iy] <= 1.0 + 1e-12);
            }
        }
        out
    }

    pub fn same_grid(&self, other: &SampledField) -> bool {
        self.domain == other.domain
            && self.dim == other.dim
            && self.n == other.n
            && self.half_width == other.half_width
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SampledField {
        SampledField {
            values: self.values.iter().map(|&z| f(z)).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: f64) -> SampledField {
        self.map(|z| z * s)
    }

    /// Real part as a new field, and the `L2` norm of the discarded imaginary part.
    pub fn real_part(&self) -> (SampledField, f64) {
        let w = self.ball_weights();
        let lost = self
            .values
            .iter()
            .zip(&w)
            .map(|(z, w)| w * z.im * z.im)
            .sum::<f64>()
            .sqrt();
        (self.map(|z| Complex64::new(z.re, 0.0)), lost)
    }

    /// Value at `(ix, iy)` of a 2-d field.
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.n + ix]
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// CSV `x,re,im` for 1-d fields.
    pub fn to_csv(&self) -> Result<String> {
        if self.dim != 1 {
            return Err(invalid("CSV export is for 1-d fields"));
        }
        let mut out = String::from("x,re,im\n");
        for (x, z) in self.axis().iter().zip(&self.values) {
            let _ = writeln!(out, "{x:?},{:?},{:?}", z.re, z.im);
        }
        Ok(out)
    }

    pub fn from_csv(domain: Domain, text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("line {}: {e}", i + 1)))
            };
            if cols.len() != 3 {
                return Err(invalid(format!("line {}: expected x,re,im", i + 1)));
            }
            xs.push(parse(cols[0])?);
            values.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
        }
        let half_width = xs.last().copied().ok_or_else(|| invalid("empty field"))?;
        Self::from_values(domain, 1, values.len(), half_width, values)
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            domain: self.domain,
            n: self.n,
            half_width: self.half_width,
            dtype: if self.is_real() { "float64" } else { "complex128" }.to_string(),
            layout: "row-major:y,x".to_string(),
        }
    }

    /// Little-endian `float64` payload; complex values interleave `re, im`.
    pub fn to_binary(&self) -> Vec<u8> {
        let real = self.is_real();
        let mut out = Vec::with_capacity(self.values.len() * if real { 8 } else { 16 });
        for z in &self.values {
            out.extend_from_slice(&z.re.to_le_bytes());
            if !real {
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write_binary(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::File::create(dir.join(format!("{stem}.bin")))?.write_all(&self.to_binary())?;
        let header = serde_json::to_string_pretty(&self.header())?;
        std::fs::write(dir.join(format!("{stem}.json")), header + "\n")?;
        Ok(())
    }

    pub fn read_binary(dir: &Path, stem: &str) -> Result<Self> {
        let header: FieldHeader =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut bytes = Vec::new();
        std::fs::File::open(dir.join(format!("{stem}.bin")))?.read_to_end(&mut bytes)?;
        Self::from_binary(&header, &bytes)
    }

    pub fn from_binary(header: &FieldHeader, bytes: &[u8]) -> Result<Self> {
        let floats: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let values = match header.dtype.as_str() {
            "float64" => floats.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            "complex128" => floats.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect(),
            other => return Err(invalid(format!("unknown dtype {other}"))),
        };
        Self::from_values(header.domain, 2, header.n, header.half_width, values)
    }
}

/// JSON header accompanying a binary 2-d field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub domain: Domain,
    #[serde(rename = "N")]
    pub n: usize,
    pub half_width: f64,
    pub dtype: String,
    pub layout: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn config_validation() {
        let cfg = ProblemConfig::new(10.0, 1.0, 2, 129).unwrap();
        assert_eq!(cfg.c, 10.0);
        assert!(ProblemConfig::new(10.0, 1.0, 3, 129).is_err());
        assert!(ProblemConfig::new(10.0, 1.0, 1, 128).is_err());
        assert!(ProblemConfig::new(0.0, 1.0, 1, 129).is_err());
    }

    #[test]
    fn ball_weights_drop_corners() {
        let f = SampledField::zeros(Domain::Fourier, 2, 5, 10.0);
        let w = f.ball_weights();
        assert_eq!(w[0], 0.0);
        assert!(w[2] > 0.0); // (0, -r) lies on the boundary circle
        assert!(w[12] > 0.0);
        assert_eq!(f.ball_mask().iter().filter(|m| **m).count(), 13);
    }

    #[test]
    fn csv_round_trip() {
        let values = (0..5).map(|k| Complex64::new(k as f64 * 0.1, -(k as f64))).collect();
        let f = SampledField::from_values(Domain::Spatial, 1, 5, 1.0, values).unwrap();
        let back = SampledField::from_csv(Domain::Spatial, &f.to_csv().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #[test]
        fn binary_round_trip(vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 9), real in any::<bool>()) {
            let values = vals.iter().map(|&(a, b)| Complex64::new(a, if real { 0.0 } else { b })).collect();
            let f = SampledField::from_values(Domain::Fourier, 2, 3, 10.0, values).unwrap();
            let back = SampledField::from_binary(&f.header(), &f.to_binary()).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
