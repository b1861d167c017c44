//! Dense polynomials over `F_p`, lowest degree first.

use crate::field::{mul_mod, pow_mod, reduce};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    p: u64,
    coeffs: Vec<u64>,
}

impl Poly {
    pub fn new(p: u64, coeffs: &[i64]) -> Self {
        let mut out = Poly { p, coeffs: coeffs.iter().map(|&c| reduce(c, p)).collect() };
        out.trim();
        out
    }

    fn from_raw(p: u64, coeffs: Vec<u64>) -> Self {
        let mut out = Poly { p, coeffs };
        out.trim();
        out
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn eval(&self, x: u64) -> u64 {
        let p = self.p;
        self.coeffs.iter().rev().fold(0, |acc, &c| (mul_mod(acc, x % p, p) + c) % p)
    }

    pub fn derivative(&self) -> Poly {
        let p = self.p;
        let c = self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| mul_mod(c, i as u64 % p, p)).collect();
        Poly::from_raw(p, c)
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let p = self.p;
        let dd = d.degree().expect("division by zero polynomial");
        let lead_inv = pow_mod(d.coeffs[dd], p - 2, p);
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Poly::from_raw(p, vec![]), self.clone());
        }
        let mut q = vec![0u64; r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = mul_mod(r[i + dd], lead_inv, p);
            q[i] = c;
            if c != 0 {
                for (j, &dc) in d.coeffs.iter().enumerate() {
                    r[i + j] = (r[i + j] + p - mul_mod(c, dc, p)) % p;
                }
            }
        }
        r.truncate(dd);
        (Poly::from_raw(p, q), Poly::from_raw(p, r))
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> Poly {
        match self.degree() {
            None => self.clone(),
            Some(d) => {
                let inv = pow_mod(self.coeffs[d], self.p - 2, self.p);
                Poly::from_raw(self.p, self.coeffs.iter().map(|&c| mul_mod(c, inv, self.p)).collect())
            }
        }
    }

    /// Number of distinct roots over the algebraic closure: `deg(f / gcd(f, f'))`.
    ///
    /// Valid while the degree is below `p`.
    pub fn distinct_root_count(&self) -> usize {
        let Some(d) = self.degree() else { return 0 };
        if d == 0 {
            return 0;
        }
        let g = self.gcd(&self.derivative());
        let (sq_free, _) = self.div_rem(&g);
        sq_free.degree().unwrap_or(0)
    }

    /// `F_p`-rational roots with multiplicities, by exhaustive evaluation.
    pub fn rational_roots(&self) -> Vec<(u64, usize)> {
        if self.degree().unwrap_or(0) == 0 {
            return vec![];
        }
        let mut out = vec![];
        for x in 0..self.p {
            if self.eval(x) == 0 {
                let lin = Poly::from_raw(self.p, vec![(self.p - x) % self.p, 1]);
                let mut f = self.clone();
                let mut mult = 0;
                loop {
                    let (q, r) = f.div_rem(&lin);
                    if !r.is_zero() {
                        break;
                    }
                    mult += 1;
                    f = q;
                }
                out.push((x, mult));
            }
        }
        out
    }
}
