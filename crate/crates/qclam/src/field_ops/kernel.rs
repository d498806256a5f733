//! Cell-averaged kernels of the Cauchy and Beurling transforms.
//!
//! A grid value `f_j` is read as constant on the square cell of side `h`
//! centred at its node. The transforms then become discrete convolutions with
//! the exact integrals of `1/(pi u)` and `-1/(pi u^2)` over those cells.
//! Nearby cells use closed-form antiderivatives; far cells use tensor
//! Gauss-Legendre rules, where the closed forms would lose digits to
//! cancellation.

use std::f64::consts::PI;

use num_complex::Complex;

type C64 = Complex<f64>;

const GL2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Chebyshev distance (in cells) up to which closed forms are used.
const EXACT_RADIUS: f64 = 5.5;
/// Beyond this distance the 2x2 rule is accurate to ~1e-8 relative.
const GL4_RADIUS: f64 = 10.5;

#[inline]
fn gauss<F: Fn(C64) -> C64>(center: C64, h: f64, rule: &[(f64, f64)], g: F) -> C64 {
    let half = 0.5 * h;
    let mut acc = C64::new(0.0, 0.0);
    for &(xa, wa) in rule {
        for &(ya, wb) in rule {
            acc += g(center + C64::new(half * xa, half * ya)) * (wa * wb);
        }
    }
    acc * (half * half)
}

/// `-i (z log z - z)`, with its limit 0 at the origin.
#[inline]
fn cauchy_antiderivative(z: C64) -> C64 {
    if z.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let v = z * z.ln() - z;
    C64::new(v.im, -v.re)
}

/// `∫∫ du/u` over `[x0,x1] x [y0,y1]` inside the closed first quadrant.
fn cauchy_rect_q1(x0: f64, x1: f64, y0: f64, y1: f64) -> C64 {
    let g = cauchy_antiderivative;
    g(C64::new(x1, y1)) - g(C64::new(x0, y1)) - g(C64::new(x1, y0)) + g(C64::new(x0, y0))
}

/// `∫∫ du/u` over an arbitrary axis-aligned rectangle, splitting at the axes
/// so that every piece can be mirrored into the first quadrant, where the
/// principal logarithm is continuous.
fn cauchy_rect(x0: f64, x1: f64, y0: f64, y1: f64) -> C64 {
    let split = |a: f64, b: f64| -> Vec<(f64, f64, bool)> {
        if a < 0.0 && b > 0.0 {
            vec![(0.0, -a, true), (0.0, b, false)]
        } else if b <= 0.0 {
            vec![(-b, -a, true)]
        } else {
            vec![(a, b, false)]
        }
    };
    let mut total = C64::new(0.0, 0.0);
    for &(xa, xb, xneg) in &split(x0, x1) {
        for &(ya, yb, yneg) in &split(y0, y1) {
            let q = cauchy_rect_q1(xa, xb, ya, yb);
            total += match (xneg, yneg) {
                (false, false) => q,
                (true, false) => -q.conj(),
                (false, true) => q.conj(),
                (true, true) => -q,
            };
        }
    }
    total
}

/// `(1/pi) ∫_Q du/u` for the square `Q` of side `h` centred at `d`.
///
/// This is the weight of a cell centred at `zeta` in the Cauchy transform
/// evaluated at `w = zeta + d`.
pub fn cauchy_cell(d: C64, h: f64) -> C64 {
    let cheb = d.re.abs().max(d.im.abs()) / h;
    if cheb <= EXACT_RADIUS {
        let half = 0.5 * h;
        cauchy_rect(d.re - half, d.re + half, d.im - half, d.im + half) / PI
    } else {
        let rule: &[(f64, f64)] = if cheb <= GL4_RADIUS { &GL4 } else { &GL2 };
        gauss(d, h, rule, |u| u.inv()) / PI
    }
}

/// Principal value of `-(1/pi) ∫_Q du/u^2` for the square of side `h`
/// centred at the grid offset `(jx, jy)`; zero for the central cell.
pub fn beurling_cell(jx: i64, jy: i64, h: f64) -> C64 {
    if jx == 0 && jy == 0 {
        return C64::new(0.0, 0.0);
    }
    let d = C64::new(jx as f64 * h, jy as f64 * h);
    let cheb = jx.abs().max(jy.abs()) as f64;
    if cheb <= EXACT_RADIUS {
        // Integrating -1/u^2 in x gives 1/u; the remaining vertical integrals of
        // 1/(x + iy) are ratio logarithms along segments avoiding the origin.
        let half = 0.5 * h;
        let (x0, x1, y0, y1) = (d.re - half, d.re + half, d.im - half, d.im + half);
        let z11 = C64::new(x1, y1);
        let z10 = C64::new(x1, y0);
        let z01 = C64::new(x0, y1);
        let z00 = C64::new(x0, y0);
        let v = (z11 / z10).ln() - (z01 / z00).ln();
        C64::new(v.im, -v.re) / PI
    } else {
        let rule: &[(f64, f64)] = if cheb <= GL4_RADIUS { &GL4 } else { &GL2 };
        -gauss(d, h, rule, |u| (u * u).inv()) / PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(d: C64, h: f64, g: impl Fn(C64) -> C64) -> C64 {
        // composite midpoint with m^2 sub-cells
        let m = 400;
        let s = h / m as f64;
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..m {
            for b in 0..m {
                let u = d + C64::new(-0.5 * h + (a as f64 + 0.5) * s, -0.5 * h + (b as f64 + 0.5) * s);
                acc += g(u);
            }
        }
        acc * s * s
    }

    #[test]
    fn cauchy_cell_matches_brute_force_quadrature() {
        let h = 0.05;
        for &(jx, jy) in &[(1, 0), (0, -1), (-2, 3), (4, -5), (7, 2), (-12, 20)] {
            let d = C64::new(jx as f64 * h, jy as f64 * h);
            let exact = cauchy_cell(d, h);
            let reference = brute(d, h, |u| u.inv() / PI);
            assert!((exact - reference).norm() < 1e-6 * reference.norm().max(1e-3), "{jx},{jy}");
        }
    }

    #[test]
    fn cauchy_cell_at_off_grid_offsets() {
        let h = 0.05;
        for &d in &[C64::new(0.013, 0.002), C64::new(-0.31, 0.07), C64::new(0.0, -0.5)] {
            let exact = cauchy_cell(d, h);
            let reference = brute(d, h, |u| u.inv() / PI);
            assert!((exact - reference).norm() < 1e-4 * reference.norm(), "{d}");
        }
    }

    #[test]
    fn cauchy_central_cell_vanishes_and_kernel_is_odd() {
        let h = 0.1;
        assert!(cauchy_cell(C64::new(0.0, 0.0), h).norm() < 1e-15);
        for &(jx, jy) in &[(1, 2), (3, -1), (9, 9), (20, -3)] {
            let d = C64::new(jx as f64 * h, jy as f64 * h);
            assert!((cauchy_cell(d, h) + cauchy_cell(-d, h)).norm() < 1e-15);
        }
    }

    #[test]
    fn beurling_cell_matches_brute_force_quadrature() {
        let h = 0.05;
        for &(jx, jy) in &[(1, 0), (0, 1), (1, 1), (-3, 2), (6, -1), (15, 4)] {
            let d = C64::new(jx as f64 * h, jy as f64 * h);
            let exact = beurling_cell(jx, jy, h);
            let reference = brute(d, h, |u| -(u * u).inv() / PI);
            assert!((exact - reference).norm() < 1e-5 * reference.norm(), "{jx},{jy}");
        }
    }

    #[test]
    fn rule_switch_is_continuous() {
        // Closed form and Gauss-Legendre agree near the switching radius.
        let h = 1.0;
        let d = C64::new(5.0, 3.0);
        let a = cauchy_rect(d.re - 0.5, d.re + 0.5, d.im - 0.5, d.im + 0.5) / PI;
        let b = gauss(d, h, &GL4, |u| u.inv()) / PI;
        assert!((a - b).norm() < 1e-9 * a.norm());
    }
}
