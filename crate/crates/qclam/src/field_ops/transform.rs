use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::field::ComplexField;
use super::grid::GridSpec;
use super::kernel::{beurling_cell, cauchy_cell};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest modulus tolerated outside the declared support.
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

/// Cached FFT plans and kernel spectra for one grid.
///
/// The Cauchy and Beurling transforms are linear convolutions with the
/// cell-averaged kernels of [`super::kernel`], computed on a zero-padded
/// `2N x 2N` array so that no periodic images enter. A separate periodic
/// Beurling transform applies the symbol `conj(xi)/xi` on the `N x N` torus;
/// it is exactly unitary on mean-zero fields.
pub struct TransformPlan<T: Real> {
    spec: GridSpec,
    m: usize,
    fft_m: Arc<dyn Fft<T>>,
    ifft_m: Arc<dyn Fft<T>>,
    fft_n: Arc<dyn Fft<T>>,
    ifft_n: Arc<dyn Fft<T>>,
    // Spectra are stored transposed: entry [kx * m + ky].
    cauchy_hat: Vec<Complex<T>>,
    beurling_hat: Vec<Complex<T>>,
}

impl<T: Real> std::fmt::Debug for TransformPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformPlan").field("spec", &self.spec).finish()
    }
}

fn transpose<T: Copy>(buf: &mut [T], m: usize) {
    const B: usize = 32;
    for bi in (0..m).step_by(B) {
        for bj in (bi..m).step_by(B) {
            for i in bi..(bi + B).min(m) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(m) {
                    buf.swap(i * m + j, j * m + i);
                }
            }
        }
    }
}

impl<T: Real> TransformPlan<T> {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n();
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let mut plan = Self {
            spec,
            m,
            fft_m: planner.plan_fft_forward(m),
            ifft_m: planner.plan_fft_inverse(m),
            fft_n: planner.plan_fft_forward(n),
            ifft_n: planner.plan_fft_inverse(n),
            cauchy_hat: Vec::new(),
            beurling_hat: Vec::new(),
        };
        let h = spec.spacing();
        let mut kc = vec![Complex::new(T::zero(), T::zero()); m * m];
        let mut kb = kc.clone();
        let span = n as i64 - 1;
        for jy in -span..=span {
            let row = jy.rem_euclid(m as i64) as usize * m;
            for jx in -span..=span {
                let k = row + jx.rem_euclid(m as i64) as usize;
                let d = Complex::new(jx as f64 * h, jy as f64 * h);
                let c = cauchy_cell(d, h);
                let b = beurling_cell(jx, jy, h);
                kc[k] = Complex::new(T::lit(c.re), T::lit(c.im));
                kb[k] = Complex::new(T::lit(b.re), T::lit(b.im));
            }
        }
        plan.forward_padded(&mut kc, m);
        plan.forward_padded(&mut kb, m);
        // Both kernels have zero mean by symmetry; pin the zero mode exactly.
        kc[0] = Complex::new(T::zero(), T::zero());
        kb[0] = Complex::new(T::zero(), T::zero());
        plan.cauchy_hat = kc;
        plan.beurling_hat = kb;
        plan
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// In-place forward transform of an `m x m` buffer whose rows beyond
    /// `rows` are zero. Leaves the spectrum in transposed layout.
    fn forward_padded(&self, buf: &mut [Complex<T>], rows: usize) {
        let m = self.m;
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fft_m.get_inplace_scratch_len()];
        for row in buf[..rows * m].chunks_exact_mut(m) {
            self.fft_m.process_with_scratch(row, &mut scratch);
        }
        transpose(buf, m);
        self.fft_m.process_with_scratch(buf, &mut scratch);
    }

    /// Inverse of [`Self::forward_padded`], returning the top-left `n x n`
    /// block, normalized.
    fn inverse_block(&self, buf: &mut [Complex<T>]) -> Vec<Complex<T>> {
        let (m, n) = (self.m, self.spec.n());
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.ifft_m.get_inplace_scratch_len()];
        self.ifft_m.process_with_scratch(buf, &mut scratch);
        transpose(buf, m);
        let scale = T::one() / T::lit((m * m) as f64);
        let mut out = Vec::with_capacity(n * n);
        for row in buf[..n * m].chunks_exact_mut(m) {
            self.ifft_m.process_with_scratch(row, &mut scratch);
            out.extend(row[..n].iter().map(|v| *v * scale));
        }
        out
    }

    fn padded(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let (m, n) = (self.m, self.spec.n());
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m * m];
        for (j, row) in f.chunks_exact(n).enumerate() {
            buf[j * m..j * m + n].copy_from_slice(row);
        }
        self.forward_padded(&mut buf, n);
        buf
    }

    fn convolve(&self, spectrum: &[Complex<T>], kernel: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = spectrum.iter().zip(kernel).map(|(a, b)| *a * *b).collect();
        self.inverse_block(&mut buf)
    }

    pub(crate) fn cauchy_raw(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let s = self.padded(f);
        self.convolve(&s, &self.cauchy_hat)
    }

    pub(crate) fn beurling_raw(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        let s = self.padded(f);
        self.convolve(&s, &self.beurling_hat)
    }

    /// Cauchy and Beurling transforms of the same input, sharing one forward FFT.
    pub(crate) fn both_raw(&self, f: &[Complex<T>]) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
        let s = self.padded(f);
        (self.convolve(&s, &self.cauchy_hat), self.convolve(&s, &self.beurling_hat))
    }

    fn checked(&self, f: &ComplexField<T>, radius: f64) -> Result<()> {
        if f.spec() != self.spec {
            return Err(Error::validation("field grid differs from the plan grid"));
        }
        check_support(f, radius)
    }

    /// `C f(w) = (1/pi) ∫ f(zeta) / (w - zeta) dA`, for `f` supported in the closed unit disk.
    pub fn cauchy(&self, f: &ComplexField<T>) -> Result<ComplexField<T>> {
        self.cauchy_supported(f, 1.0)
    }

    /// `B f = d/dw C f`, for `f` supported in the closed unit disk.
    pub fn beurling(&self, f: &ComplexField<T>) -> Result<ComplexField<T>> {
        self.beurling_supported(f, 1.0)
    }

    pub fn cauchy_supported(&self, f: &ComplexField<T>, radius: f64) -> Result<ComplexField<T>> {
        self.checked(f, radius)?;
        Ok(ComplexField::from_raw(self.spec, self.cauchy_raw(f.values())))
    }

    pub fn beurling_supported(&self, f: &ComplexField<T>, radius: f64) -> Result<ComplexField<T>> {
        self.checked(f, radius)?;
        Ok(ComplexField::from_raw(self.spec, self.beurling_raw(f.values())))
    }

    /// Beurling transform on the torus: multiplier `conj(xi)/xi`, zero at `xi = 0`.
    pub fn periodic_beurling(&self, f: &ComplexField<T>) -> Result<ComplexField<T>> {
        if f.spec() != self.spec {
            return Err(Error::validation("field grid differs from the plan grid"));
        }
        let n = self.spec.n();
        let mut buf = f.values().to_vec();
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fft_n.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(n) {
            self.fft_n.process_with_scratch(row, &mut scratch);
        }
        transpose(&mut buf, n);
        self.fft_n.process_with_scratch(&mut buf, &mut scratch);
        let signed = |k: usize| if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        for kx in 0..n {
            for ky in 0..n {
                let xi = Complex::new(signed(kx), signed(ky));
                let s = if kx == 0 && ky == 0 { Complex::new(0.0, 0.0) } else { xi.conj() / xi };
                buf[kx * n + ky] = buf[kx * n + ky] * Complex::new(T::lit(s.re), T::lit(s.im));
            }
        }
        self.ifft_n.process_with_scratch(&mut buf, &mut scratch);
        transpose(&mut buf, n);
        for row in buf.chunks_exact_mut(n) {
            self.ifft_n.process_with_scratch(row, &mut scratch);
        }
        let scale = T::one() / T::lit((n * n) as f64);
        Ok(ComplexField::from_raw(self.spec, buf.into_iter().map(|v| v * scale).collect()))
    }
}

/// Fails unless `|f| <= 1e-12` at every node farther than `radius + 2h` from the origin.
pub fn check_support<T: Real>(f: &ComplexField<T>, radius: f64) -> Result<()> {
    let spec = f.spec();
    let reach = radius + 2.0 * spec.spacing();
    if reach >= spec.half_width() {
        return Err(Error::validation(format!(
            "support radius {radius} does not fit in the cell of half-width {}",
            spec.half_width()
        )));
    }
    let leak = f.sup_outside(reach).as_f64();
    if leak > SUPPORT_TOLERANCE {
        return Err(Error::validation(format!(
            "field is not supported in the disk of radius {radius}: |f| = {leak:e} outside"
        )));
    }
    Ok(())
}

type PlanKey = (usize, u64, TypeId);

/// Shared plan for a grid; built once per grid and scalar type.
pub fn plan_for<T: Real>(spec: GridSpec) -> Arc<TransformPlan<T>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    let key = (spec.n(), spec.half_width().to_bits(), TypeId::of::<T>());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().expect("plan cache").get(&key) {
        return Arc::clone(p).downcast::<TransformPlan<T>>().expect("plan type");
    }
    // Build outside the lock; a racing duplicate is harmless.
    let plan = Arc::new(TransformPlan::<T>::new(spec));
    cache
        .lock()
        .expect("plan cache")
        .entry(key)
        .or_insert_with(|| plan.clone() as Arc<dyn Any + Send + Sync>);
    plan
}

pub fn cauchy_transform<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>> {
    plan_for::<T>(f.spec()).cauchy(f)
}

pub fn beurling_transform<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>> {
    plan_for::<T>(f.spec()).beurling(f)
}

pub fn periodic_beurling_transform<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>> {
    plan_for::<T>(f.spec()).periodic_beurling(f)
}

/// Evaluates the Cauchy transform of a grid field at an arbitrary point,
/// using the same cell weights as the grid convolution.
#[derive(Clone, Debug)]
pub struct CauchySum {
    h: f64,
    points: Vec<Complex<f64>>,
}

impl CauchySum {
    /// `support` lists the nodes whose values may be nonzero.
    pub fn new(spec: GridSpec, support: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            h: spec.spacing(),
            points: support.into_iter().map(|(i, j)| spec.point_f64(i, j)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `values[k]` belongs to the `k`-th support node.
    pub fn eval<T: Real>(&self, values: &[Complex<T>], w: Complex<f64>) -> Complex<T> {
        debug_assert_eq!(values.len(), self.points.len());
        let mut acc = Complex::new(0.0f64, 0.0);
        for (p, v) in self.points.iter().zip(values) {
            let k = cauchy_cell(w - p, self.h);
            let v = Complex::new(v.re.as_f64(), v.im.as_f64());
            acc += k * v;
        }
        Complex::new(T::lit(acc.re), T::lit(acc.im))
    }
}
