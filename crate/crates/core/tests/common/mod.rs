#![allow(dead_code)]

use overiva_core::linalg::{CMatrix, C64};
use overiva_core::Spectrogram;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct Gen(Xoshiro256PlusPlus);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn complex(&mut self) -> C64 {
        C64::new(self.normal(), self.normal())
    }

    pub fn vector(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex()).collect()
    }

    pub fn matrix(&mut self, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| self.complex())
    }

    pub fn hermitian(&mut self, n: usize) -> CMatrix {
        self.matrix(n, n).hermitian_part()
    }

    /// `AᴴA/n + I`, comfortably conditioned.
    pub fn pd(&mut self, n: usize) -> CMatrix {
        let a = self.matrix(n, n);
        let mut g = (&a.adjoint() * &a).scale(C64::new(1.0 / n as f64, 0.0));
        for i in 0..n {
            g[(i, i)] += C64::new(1.0, 0.0);
        }
        g.hermitian_part()
    }

    pub fn spectrogram(&mut self, bins: usize, frames: usize, channels: usize) -> Spectrogram {
        Spectrogram::from_fn(bins, frames, channels, |_, _, _| self.complex())
    }
}

pub fn vec_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius distance between the orthogonal projectors onto the column
/// spaces of `a` and `b`.
pub fn projector_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let proj = |m: &CMatrix| {
        let gram = &m.adjoint() * m;
        &(m * &overiva_core::linalg::inverse(&gram).unwrap()) * &m.adjoint()
    };
    (&proj(a) - &proj(b)).fro_norm()
}
