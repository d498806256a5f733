use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square sampling grid on `[-L, L)^2` with `N x N` nodes.
///
/// Node `(i, j)` sits at `x = -L + i h`, `y = -L + j h`, so the origin is the
/// node `(N/2, N/2)`. Values are stored row-major: index `j * N + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width >= 2.0) {
            return Err(Error::validation(format!(
                "grid half-width must be >= 2, got {half_width}"
            )));
        }
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::validation(format!(
                "grid resolution must be a power of two >= 64, got {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn coord(&self, idx: usize) -> f64 {
        -self.half_width + idx as f64 * self.spacing()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn point<T: Real>(&self, i: usize, j: usize) -> Complex<T> {
        Complex::new(T::lit(self.coord(i)), T::lit(self.coord(j)))
    }

    #[inline]
    pub fn point_f64(&self, i: usize, j: usize) -> Complex<f64> {
        Complex::new(self.coord(i), self.coord(j))
    }

    /// Fractional grid coordinates of a point.
    #[inline]
    pub fn locate(&self, w: Complex<f64>) -> (f64, f64) {
        let h = self.spacing();
        ((w.re + self.half_width) / h, (w.im + self.half_width) / h)
    }

    /// Nearest node, if it lies at least `margin` nodes away from the edge.
    pub fn nearest_node(&self, w: Complex<f64>, margin: usize) -> Option<(usize, usize)> {
        let (fx, fy) = self.locate(w);
        let (i, j) = (fx.round(), fy.round());
        let lo = margin as f64;
        let hi = (self.n - 1 - margin) as f64;
        (i >= lo && i <= hi && j >= lo && j <= hi).then_some((i as usize, j as usize))
    }

    /// Tensor cubic Lagrange stencil around `w`: the lower-left node
    /// `(i0, j0)` of the 4x4 block and the weights along each axis. `None`
    /// when the block would leave the grid.
    pub fn cubic_stencil(&self, w: Complex<f64>) -> Option<CubicStencil> {
        let (fx, fy) = self.locate(w);
        let (bx, by) = (fx.floor(), fy.floor());
        if !(bx >= 1.0 && by >= 1.0 && bx + 2.0 <= (self.n - 1) as f64 && by + 2.0 <= (self.n - 1) as f64) {
            return None;
        }
        Some(CubicStencil {
            i0: bx as usize - 1,
            j0: by as usize - 1,
            wx: lagrange4(fx - bx),
            wy: lagrange4(fy - by),
        })
    }

    /// Iterator over `(i, j, point)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Complex<f64>)> + '_ {
        (0..self.n).flat_map(move |j| (0..self.n).map(move |i| (i, j, self.point_f64(i, j))))
    }
}

/// Weights of a 4x4 cubic interpolation block; see [`GridSpec::cubic_stencil`].
#[derive(Clone, Copy, Debug)]
pub struct CubicStencil {
    pub i0: usize,
    pub j0: usize,
    pub wx: [f64; 4],
    pub wy: [f64; 4],
}

impl CubicStencil {
    /// Interpolates `values` (a full grid in storage order).
    pub fn apply<T: Real>(&self, n: usize, values: &[Complex<T>]) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (b, &wy) in self.wy.iter().enumerate() {
            let row = (self.j0 + b) * n + self.i0;
            let mut r = Complex::new(T::zero(), T::zero());
            for (a, &wx) in self.wx.iter().enumerate() {
                r = r + values[row + a] * T::lit(wx);
            }
            acc = acc + r * T::lit(wy);
        }
        acc
    }
}

// Lagrange weights for nodes at -1, 0, 1, 2 evaluated at t in [0, 1).
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 2.0, n: 256 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolution_and_width() {
        assert!(GridSpec::new(2.0, 100).is_err());
        assert!(GridSpec::new(2.0, 32).is_err());
        assert!(GridSpec::new(1.5, 128).is_err());
        assert!(GridSpec::new(2.0, 128).is_ok());
    }

    #[test]
    fn origin_is_a_node() {
        let g = GridSpec::new(2.0, 128).unwrap();
        assert_eq!(g.point_f64(64, 64), Complex::new(0.0, 0.0));
        assert_eq!(g.nearest_node(Complex::new(0.001, -0.001), 1), Some((64, 64)));
        assert_eq!(g.nearest_node(Complex::new(-2.0, 0.0), 1), None);
    }

    #[test]
    fn cubic_stencil_is_exact_on_cubics() {
        let g = GridSpec::new(2.0, 64).unwrap();
        let f = |w: Complex<f64>| w * w * w - Complex::new(0.5, 2.0) * w.conj() * w + 3.0;
        let vals: Vec<Complex<f64>> = g.nodes().map(|(_, _, w)| f(w)).collect();
        for w in [Complex::new(0.123, -0.77), Complex::new(-1.3, 0.05), Complex::new(0.0, 0.0)] {
            let s = g.cubic_stencil(w).unwrap();
            assert!((s.apply(g.n(), &vals) - f(w)).norm() < 1e-12);
        }
        assert!(g.cubic_stencil(Complex::new(-1.99, 0.0)).is_none());
    }
}
