//! Uniform periodic grids in the rapidity variable `z`, spectral derivatives
//! and local cubic interpolation.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coeffs::Dim;
use crate::error::{Error, Result};

/// Uniform periodic grid with `n` points per axis on `[-W, W)`, row-major in 2D (`idx = i * n + j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: Dim,
    pub n: usize,
    pub half_width: f64,
}

/// `<z> = sqrt(1 + |z|^2)`.
pub fn jbr(z2: f64) -> f64 {
    (1.0 + z2).sqrt()
}

impl Grid {
    pub fn new(dim: Dim, n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid size {n} must be a power of two >= 8")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Config(format!("half width {half_width} must be positive")));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.n,
            Dim::Two => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dz()
    }

    /// Point coordinates; the second entry is 0 in 1D.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            Dim::One => [self.coord(idx), 0.0],
            Dim::Two => [self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    pub fn norm2(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        p[0] * p[0] + p[1] * p[1]
    }

    /// Index of `-z`.
    pub fn reflect(&self, idx: usize) -> usize {
        let n = self.n;
        match self.dim {
            Dim::One => (n - idx) % n,
            Dim::Two => ((n - idx / n) % n) * n + (n - idx % n) % n,
        }
    }

    /// Area (length) element.
    pub fn cell(&self) -> f64 {
        self.dz().powi(self.dim.as_int() as i32)
    }

    /// Trapezoid L2 norm on the periodic grid.
    pub fn l2<T: Copy + Into<Complex64>>(&self, f: &[T]) -> f64 {
        (f.iter().map(|&v| v.into().norm_sqr()).sum::<f64>() * self.cell()).sqrt()
    }

    /// Grid neighbours along the axes, without wrap-around.
    pub fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        let (i, j) = match self.dim {
            Dim::One => (idx, 0),
            Dim::Two => (idx / n, idx % n),
        };
        let two = self.dim == Dim::Two;
        let cand = [
            (i > 0).then(|| idx - if two { n } else { 1 }),
            (i + 1 < n).then(|| idx + if two { n } else { 1 }),
            (two && j > 0).then(|| idx - 1),
            (two && j + 1 < n).then(|| idx + 1),
        ];
        cand.into_iter().flatten()
    }

    pub(crate) fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let base = 2.0 * PI / (2.0 * self.half_width);
        (0..n)
            .map(|k| {
                if k == n / 2 {
                    0.0
                } else if k < n / 2 {
                    base * k as f64
                } else {
                    base * (k as f64 - n as f64)
                }
            })
            .collect()
    }
}

/// First and second spectral derivatives on a [`Grid`].
#[derive(Debug, Clone)]
pub struct Derivs {
    /// `d/dz_1`, `d/dz_2` (the latter zero in 1D).
    pub grad: [Vec<Complex64>; 2],
    /// `d^2/dz_1^2`, `d^2/dz_1 dz_2`, `d^2/dz_2^2`.
    pub hess: [Vec<Complex64>; 3],
}

fn fft_axis(data: &mut [Complex64], n: usize, rows: usize, axis: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if axis == 1 || rows == 1 {
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
    } else {
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }
}

fn to_freq(grid: &Grid, f: &[Complex64]) -> Vec<Complex64> {
    let mut buf = f.to_vec();
    match grid.dim {
        Dim::One => fft_axis(&mut buf, grid.n, 1, 1, false),
        Dim::Two => {
            fft_axis(&mut buf, grid.n, grid.n, 1, false);
            fft_axis(&mut buf, grid.n, grid.n, 0, false);
        }
    }
    buf
}

fn from_freq(grid: &Grid, mut buf: Vec<Complex64>) -> Vec<Complex64> {
    match grid.dim {
        Dim::One => fft_axis(&mut buf, grid.n, 1, 1, true),
        Dim::Two => {
            fft_axis(&mut buf, grid.n, grid.n, 1, true);
            fft_axis(&mut buf, grid.n, grid.n, 0, true);
        }
    }
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Spectral gradient and Hessian of a periodic sample array.
pub fn derivs(grid: &Grid, f: &[Complex64]) -> Result<Derivs> {
    if f.len() != grid.len() {
        return Err(Error::Shape(format!("{} samples on a grid of {}", f.len(), grid.len())));
    }
    let k = grid.wavenumbers();
    let hat = to_freq(grid, f);
    let n = grid.n;
    let i = Complex64::new(0.0, 1.0);
    let apply = |m: &dyn Fn(usize) -> Complex64| {
        let spec: Vec<Complex64> = hat.iter().enumerate().map(|(idx, &v)| v * m(idx)).collect();
        from_freq(grid, spec)
    };
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    match grid.dim {
        Dim::One => {
            let d1 = apply(&|idx| i * k[idx]);
            let d2 = apply(&|idx| Complex64::new(-k[idx] * k[idx], 0.0));
            Ok(Derivs { grad: [d1, zero.clone()], hess: [d2, zero.clone(), zero] })
        }
        Dim::Two => {
            let k1 = |idx: usize| k[idx / n];
            let k2 = |idx: usize| k[idx % n];
            Ok(Derivs {
                grad: [apply(&|idx| i * k1(idx)), apply(&|idx| i * k2(idx))],
                hess: [
                    apply(&|idx| Complex64::new(-k1(idx) * k1(idx), 0.0)),
                    apply(&|idx| Complex64::new(-k1(idx) * k2(idx), 0.0)),
                    apply(&|idx| Complex64::new(-k2(idx) * k2(idx), 0.0)),
                ],
            })
        }
    }
}

/// Spectral derivatives of a real array, returned as real arrays.
pub fn derivs_real(grid: &Grid, f: &[f64]) -> Result<([Vec<f64>; 2], [Vec<f64>; 3])> {
    let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let d = derivs(grid, &c)?;
    let re = |v: &Vec<Complex64>| v.iter().map(|c| c.re).collect::<Vec<f64>>();
    Ok((
        [re(&d.grad[0]), re(&d.grad[1])],
        [re(&d.hess[0]), re(&d.hess[1]), re(&d.hess[2])],
    ))
}

fn lagrange(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Locates `x` in the 4-point stencil; `None` outside the table.
fn stencil(grid: &Grid, x: f64) -> Option<(usize, [f64; 4])> {
    let u = (x + grid.half_width) / grid.dz();
    let base = u.floor();
    if !(base >= 1.0 && base + 2.0 <= (grid.n - 1) as f64) {
        return None;
    }
    Some((base as usize - 1, lagrange(u - base)))
}

/// Whether `p` lies where [`interp`] has a full stencil.
pub fn inside(grid: &Grid, p: [f64; 2]) -> bool {
    match grid.dim {
        Dim::One => stencil(grid, p[0]).is_some(),
        Dim::Two => stencil(grid, p[0]).is_some() && stencil(grid, p[1]).is_some(),
    }
}

/// Cubic (bicubic in 2D) Lagrange interpolation; zero outside the table.
pub fn interp<T>(grid: &Grid, f: &[T], p: [f64; 2]) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    match grid.dim {
        Dim::One => match stencil(grid, p[0]) {
            Some((i0, w)) => (0..4).fold(T::default(), |acc, a| acc + f[i0 + a] * w[a]),
            None => T::default(),
        },
        Dim::Two => match (stencil(grid, p[0]), stencil(grid, p[1])) {
            (Some((i0, wi)), Some((j0, wj))) => {
                let n = grid.n;
                let mut acc = T::default();
                for a in 0..4 {
                    let mut row = T::default();
                    for b in 0..4 {
                        row = row + f[(i0 + a) * n + j0 + b] * wj[b];
                    }
                    acc = acc + row * wi[a];
                }
                acc
            }
            _ => T::default(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_index() {
        let g = Grid::new(Dim::Two, 8, 2.0).unwrap();
        for idx in 1..g.len() {
            let (p, q) = (g.point(idx), g.point(g.reflect(idx)));
            let wrap = |a: f64, b: f64| (a + b).abs() < 1e-12 || ((a + b).abs() - 4.0).abs() < 1e-12;
            assert!(wrap(p[0], q[0]) && wrap(p[1], q[1]));
        }
    }

    #[test]
    fn spectral_derivative_of_gaussian() {
        let g = Grid::new(Dim::One, 256, 12.0).unwrap();
        let f: Vec<Complex64> = (0..g.n).map(|i| Complex64::new((-0.5 * g.coord(i).powi(2)).exp(), 0.0)).collect();
        let d = derivs(&g, &f).unwrap();
        for i in 0..g.n {
            let z = g.coord(i);
            let e = (-0.5 * z * z).exp();
            assert!((d.grad[0][i].re + z * e).abs() < 1e-12);
            assert!((d.hess[0][i].re - (z * z - 1.0) * e).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_mixed_derivative_2d() {
        let g = Grid::new(Dim::Two, 64, 10.0).unwrap();
        let f: Vec<Complex64> = (0..g.len())
            .map(|idx| {
                let p = g.point(idx);
                Complex64::new((-0.5 * (p[0] * p[0] + p[1] * p[1])).exp(), 0.0)
            })
            .collect();
        let d = derivs(&g, &f).unwrap();
        for idx in 0..g.len() {
            let p = g.point(idx);
            let e = f[idx].re;
            assert!((d.hess[1][idx].re - p[0] * p[1] * e).abs() < 1e-11);
            assert!((d.grad[1][idx].re + p[1] * e).abs() < 1e-11);
        }
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = Grid::new(Dim::One, 16, 4.0).unwrap();
        let f: Vec<f64> = (0..16).map(|i| g.coord(i).powi(3) - g.coord(i)).collect();
        let x = 0.37;
        assert!((interp(&g, &f, [x, 0.0]) - (x * x * x - x)).abs() < 1e-12);
        assert_eq!(interp(&g, &f, [3.9, 0.0]), 0.0);
    }

    #[test]
    fn bicubic_exact_on_products() {
        let g = Grid::new(Dim::Two, 16, 4.0).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|idx| { let p = g.point(idx); p[0] * p[0] * p[1] }).collect();
        let p = [0.3, -1.2];
        assert!((interp(&g, &f, p) - p[0] * p[0] * p[1]).abs() < 1e-12);
    }
}
