//! Arbitrary-length discrete Fourier transforms.
//!
//! Lengths are `p - 1` (multiplicative group) or `p` (additive group), so
//! neither is a power of two. Above a small threshold the transform is
//! reduced to a power-of-two circular convolution with the chirp
//! `e(-n^2 / 2N)` (Bluestein); below it the direct sum is used.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Lengths at or below this run the direct O(N^2) sum.
pub const DIRECT_THRESHOLD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `X[k] = sum_n x[n] e(-nk/N)`
    Forward,
    /// `X[k] = sum_n x[n] e(+nk/N)`, unscaled
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Backward => 1.0,
        }
    }
}

/// A planned DFT of fixed length and direction.
pub struct ChirpDft {
    len: usize,
    direction: Direction,
    kind: Kind,
}

enum Kind {
    Direct { roots: Vec<Complex64> },
    Chirp(ChirpPlan),
}

struct ChirpPlan {
    conv_len: usize,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChirpDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            Kind::Direct { .. } => "direct",
            Kind::Chirp(_) => "chirp",
        };
        f.debug_struct("ChirpDft")
            .field("len", &self.len)
            .field("direction", &self.direction)
            .field("kind", &kind)
            .finish()
    }
}

impl ChirpDft {
    pub fn new(len: usize, direction: Direction) -> Self {
        Self::with_threshold(len, direction, DIRECT_THRESHOLD)
    }

    pub fn with_threshold(len: usize, direction: Direction, threshold: usize) -> Self {
        assert!(len > 0, "zero-length transform");
        let sign = direction.sign();
        let kind = if len <= threshold {
            let roots = (0..len).map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / len as f64)).collect();
            Kind::Direct { roots }
        } else {
            Kind::Chirp(ChirpPlan::new(len, sign))
        };
        ChirpDft { len, direction, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn process(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len);
        match &self.kind {
            Kind::Direct { roots } => {
                let n = self.len;
                (0..n)
                    .map(|k| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        let mut idx = 0usize;
                        for &x in input {
                            acc += x * roots[idx];
                            idx += k;
                            if idx >= n {
                                idx -= n;
                            }
                        }
                        acc
                    })
                    .collect()
            }
            Kind::Chirp(plan) => plan.run(input),
        }
    }
}

impl ChirpPlan {
    fn new(len: usize, sign: f64) -> Self {
        let conv_len = (2 * len - 1).next_power_of_two();
        let two_n = 2 * len as u64;
        // n^2 is reduced mod 2N in integers so the phase stays exact for large N
        let chirp: Vec<Complex64> = (0..len as u64)
            .map(|n| {
                let q = (n * n) % two_n;
                Complex64::from_polar(1.0, sign * PI * q as f64 / len as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); conv_len];
        kernel[0] = chirp[0].conj();
        for n in 1..len {
            let c = chirp[n].conj();
            kernel[n] = c;
            kernel[conv_len - n] = c;
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(conv_len);
        let inv = planner.plan_fft_inverse(conv_len);
        fwd.process(&mut kernel);
        ChirpPlan { conv_len, chirp, kernel_spectrum: kernel, fwd, inv }
    }

    fn run(&self, input: &[Complex64]) -> Vec<Complex64> {
        let len = input.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.conv_len];
        for (b, (&x, &c)) in buf.iter_mut().zip(input.iter().zip(&self.chirp)) {
            *b = x * c;
        }
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.conv_len as f64;
        (0..len).map(|k| buf[k] * self.chirp[k] * scale).collect()
    }
}
