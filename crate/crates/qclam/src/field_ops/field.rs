use std::io::{Read, Write};

use num_complex::Complex;

use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Real};

/// Complex samples on every node of a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField<T> {
    spec: GridSpec,
    values: Vec<Complex<T>>,
}

/// Closed disk used as an integration region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: Complex<f64>,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn unit() -> Self {
        Self::new(Complex::new(0.0, 0.0), 1.0)
    }

    #[inline]
    pub fn contains(&self, w: Complex<f64>) -> bool {
        (w - self.center).norm() <= self.radius
    }
}

impl<T: Real> ComplexField<T> {
    pub fn new(spec: GridSpec, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::validation(format!(
                "field has {} values, grid needs {}",
                values.len(),
                spec.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::validation(format!(
                "non-finite value at node ({}, {})",
                k % spec.n(),
                k / spec.n()
            )));
        }
        Ok(Self { spec, values })
    }

    /// Skips the finiteness scan; for values produced by the crate itself.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::from_raw(spec, vec![Complex::new(T::zero(), T::zero()); spec.len()])
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Complex<f64>) -> Complex<T>) -> Result<Self> {
        let values = spec.nodes().map(|(_, _, w)| f(w)).collect();
        Self::new(spec, values)
    }

    /// Identity map `w -> w`.
    pub fn identity(spec: GridSpec) -> Self {
        Self::from_raw(spec, spec.nodes().map(|(i, j, _)| spec.point(i, j)).collect())
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.values[self.spec.index(i, j)]
    }

    pub fn map(&self, mut f: impl FnMut(Complex<T>) -> Complex<T>) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(
        &self,
        other: &Self,
        mut f: impl FnMut(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self::from_raw(
            self.spec,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::validation("fields live on different grids"));
        }
        Ok(())
    }

    /// Discrete L^2 norm over the whole cell, `(h^2 sum |f|^2)^(1/2)`.
    pub fn l2_norm(&self) -> T {
        let h = T::lit(self.spec.spacing());
        let sq: Vec<T> = self.values.iter().map(|v| v.norm_sqr()).collect();
        (pairwise_sum(&sq) * h * h).sqrt()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Largest modulus at nodes with `|w| > radius`.
    pub fn sup_outside(&self, radius: f64) -> T {
        self.spec
            .nodes()
            .zip(&self.values)
            .filter(|((_, _, w), _)| w.norm() > radius)
            .fold(T::zero(), |m, (_, v)| m.max(v.norm()))
    }

    /// Relative discrete L^2 distance to `reference` over the nodes accepted by `mask`.
    pub fn relative_l2_error_where(
        &self,
        reference: &Self,
        mut mask: impl FnMut(Complex<f64>) -> bool,
    ) -> Result<T> {
        self.check_same_grid(reference)?;
        let mut num = Vec::new();
        let mut den = Vec::new();
        for ((_, _, w), (a, b)) in self.spec.nodes().zip(self.values.iter().zip(&reference.values)) {
            if mask(w) {
                num.push((*a - *b).norm_sqr());
                den.push(b.norm_sqr());
            }
        }
        let den = pairwise_sum(&den);
        if den == T::zero() {
            return Err(Error::validation("reference field vanishes on the comparison set"));
        }
        Ok((pairwise_sum(&num) / den).sqrt())
    }

    pub fn relative_l2_error(&self, reference: &Self) -> Result<T> {
        self.relative_l2_error_where(reference, |_| true)
    }

    /// Central-difference `(d/dw, d/dw-bar)` at an interior node.
    pub fn wirtinger_at(&self, i: usize, j: usize) -> Option<(Complex<T>, Complex<T>)> {
        let n = self.spec.n();
        if i == 0 || j == 0 || i + 1 >= n || j + 1 >= n {
            return None;
        }
        let two_h = T::lit(2.0 * self.spec.spacing());
        let fx = (self.get(i + 1, j) - self.get(i - 1, j)) / two_h;
        let fy = (self.get(i, j + 1) - self.get(i, j - 1)) / two_h;
        let iu = Complex::new(T::zero(), T::one());
        let half = T::lit(0.5);
        Some(((fx - iu * fy) * half, (fx + iu * fy) * half))
    }

    /// Bilinear interpolation; `None` outside the sampled square.
    pub fn bilinear(&self, w: Complex<f64>) -> Option<Complex<T>> {
        let (fx, fy) = self.spec.locate(w);
        let n = self.spec.n();
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (n - 1) as f64 && fy <= (n - 1) as f64) {
            return None;
        }
        let i = (fx.floor() as usize).min(n - 2);
        let j = (fy.floor() as usize).min(n - 2);
        let (tx, ty) = (T::lit(fx - i as f64), T::lit(fy - j as f64));
        let one = T::one();
        let a = self.get(i, j) * (one - tx) + self.get(i + 1, j) * tx;
        let b = self.get(i, j + 1) * (one - tx) + self.get(i + 1, j + 1) * tx;
        Some(a * (one - ty) + b * ty)
    }

    /// Writes one grid row per line as `re,im` pairs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let n = self.spec.n();
        let mut record: Vec<String> = Vec::with_capacity(2 * n);
        for row in self.values.chunks(n) {
            record.clear();
            for v in row {
                record.push(format!("{:e}", v.re.as_f64()));
                record.push(format!("{:e}", v.im.as_f64()));
            }
            wtr.write_record(&record).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`ComplexField::write_csv`]. The row count
    /// fixes `N`; `half_width` is not stored in the file.
    pub fn read_csv<R: Read>(input: R, half_width: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut values = Vec::new();
        let mut width = None;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() % 2 != 0 || rec.is_empty() {
                return Err(Error::Parse { line, message: "expected an even number of fields".into() });
            }
            match width {
                None => width = Some(rec.len()),
                Some(w) if w != rec.len() => {
                    return Err(Error::Parse {
                        line,
                        message: format!("row has {} fields, previous rows have {w}", rec.len()),
                    })
                }
                _ => {}
            }
            for pair in rec.iter().collect::<Vec<_>>().chunks(2) {
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::Parse { line, message: format!("bad number {s:?}") })
                };
                values.push(Complex::new(T::lit(parse(pair[0])?), T::lit(parse(pair[1])?)));
            }
        }
        let n = width.unwrap_or(0) / 2;
        if n == 0 || values.len() != n * n {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected a square grid, got {} values in rows of {n}", values.len()),
            });
        }
        Self::new(GridSpec::new(half_width, n)?, values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

/// Midpoint-rule `(∫_region |f|^p dA)^(1/p)`.
pub fn lp_norm<T: Real>(f: &ComplexField<T>, p: f64, region: Disk) -> Result<T> {
    if !(p >= 1.0) {
        return Err(Error::validation(format!("L^p norm needs p >= 1, got {p}")));
    }
    let spec = f.spec();
    let l = spec.half_width();
    let c = region.center;
    if region.radius < 0.0
        || c.re - region.radius < -l
        || c.re + region.radius > l
        || c.im - region.radius < -l
        || c.im + region.radius > l
    {
        return Err(Error::validation("integration disk leaves the grid cell"));
    }
    let h = T::lit(spec.spacing());
    let pt = T::lit(p);
    let terms: Vec<T> = spec
        .nodes()
        .zip(f.values())
        .filter(|((_, _, w), _)| region.contains(*w))
        .map(|(_, v)| v.norm().powf(pt))
        .collect();
    Ok((pairwise_sum(&terms) * h * h).powf(T::one() / pt))
}
