//! Eigenvalues of a general real matrix: balancing, reduction to upper Hessenberg form by
//! stabilized elementary similarity transforms, then Francis double-shift QR iteration down to
//! real Schur form. Only the eigenvalues are accumulated.

use num_complex::Complex;

use super::{LinalgError, Matrix};
use crate::scalar::Real;

const RADIX: f64 = 2.0;
/// Iteration budget per eigenvalue, as a multiple of `max(10, n)`.
const ITS_PER_SIZE: usize = 30;

/// One-based square work array; index 0 is unused. Keeps the QR sweep readable against the
/// classic formulation without off-by-one translation.
struct Work<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> Work<T> {
    fn from_matrix(m: &Matrix<T>) -> Self {
        let n = m.rows();
        let mut a = vec![T::zero(); (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Self { n, a }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        let n = self.n;
        self.a[i * (n + 1) + j] = v;
    }

    #[inline]
    fn sub(&mut self, i: usize, j: usize, v: T) {
        let n = self.n;
        self.a[i * (n + 1) + j] -= v;
    }
}

fn balance<T: Real>(w: &mut Work<T>) {
    let n = w.n;
    let radix = T::lit(RADIX);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 1..=n {
                if j != i {
                    c += w.get(j, i).abs();
                    r += w.get(i, j).abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let ginv = T::one() / f;
                    for j in 1..=n {
                        let v = w.get(i, j) * ginv;
                        w.set(i, j, v);
                    }
                    for j in 1..=n {
                        let v = w.get(j, i) * f;
                        w.set(j, i, v);
                    }
                }
            }
        }
    }
}

fn hessenberg<T: Real>(w: &mut Work<T>) {
    let n = w.n;
    if n < 3 {
        return;
    }
    for m in 2..n {
        let mut x = T::zero();
        let mut piv = m;
        for j in m..=n {
            if w.get(j, m - 1).abs() > x.abs() {
                x = w.get(j, m - 1);
                piv = j;
            }
        }
        if piv != m {
            for j in (m - 1)..=n {
                let (a, b) = (w.get(piv, j), w.get(m, j));
                w.set(piv, j, b);
                w.set(m, j, a);
            }
            for j in 1..=n {
                let (a, b) = (w.get(j, piv), w.get(j, m));
                w.set(j, piv, b);
                w.set(j, m, a);
            }
        }
        if x != T::zero() {
            for i in (m + 1)..=n {
                let mut y = w.get(i, m - 1);
                if y != T::zero() {
                    y /= x;
                    w.set(i, m - 1, y);
                    for j in m..=n {
                        let v = y * w.get(m, j);
                        w.sub(i, j, v);
                    }
                    for j in 1..=n {
                        let v = y * w.get(j, i);
                        let cur = w.get(j, m);
                        w.set(j, m, cur + v);
                    }
                }
            }
        }
    }
    // Multipliers were stored below the subdiagonal; they are not part of the Hessenberg form.
    for i in 3..=n {
        for j in 1..(i - 1) {
            w.set(i, j, T::zero());
        }
    }
}

#[inline]
fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr<T: Real>(w: &mut Work<T>) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = w.n;
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];

    let mut anorm = T::zero();
    for i in 1..=n {
        for j in (i.saturating_sub(1)).max(1)..=n {
            anorm += w.get(i, j).abs();
        }
    }

    let mut nn = n;
    let mut t = T::zero();
    let half = T::lit(0.5);
    let (mut p, mut q, mut r): (T, T, T);
    let (mut x, mut y, mut z);
    let mut ww;
    let mut s;

    while nn >= 1 {
        let mut its = 0usize;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                s = w.get(l - 1, l - 1).abs() + w.get(l, l).abs();
                if s == T::zero() {
                    s = anorm;
                }
                if w.get(l, l - 1).abs() + s == s {
                    w.set(l, l - 1, T::zero());
                    break;
                }
                l -= 1;
            }
            x = w.get(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = T::zero();
                nn -= 1;
                break;
            }
            y = w.get(nn - 1, nn - 1);
            ww = w.get(nn, nn - 1) * w.get(nn - 1, nn);
            if l == nn - 1 {
                p = half * (y - x);
                q = p * p + ww;
                z = q.abs().sqrt();
                x += t;
                if q >= T::zero() {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != T::zero() {
                        wr[nn] = x - ww / z;
                    }
                    wi[nn - 1] = T::zero();
                    wi[nn] = T::zero();
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }

            if its == ITS_PER_SIZE * n.max(10) {
                return Err(LinalgError::NoConvergence { routine: "eigenvalues" });
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift.
                t += x;
                for i in 1..=nn {
                    w.sub(i, i, x);
                }
                s = w.get(nn, nn - 1).abs() + w.get(nn - 1, nn - 2).abs();
                x = T::lit(0.75) * s;
                y = x;
                ww = T::lit(-0.4375) * s * s;
            }
            its += 1;

            // Form shift and look for two consecutive small subdiagonal elements.
            let mut m = nn - 2;
            loop {
                z = w.get(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - ww) / w.get(m + 1, m) + w.get(m, m + 1);
                q = w.get(m + 1, m + 1) - z - r - s;
                r = w.get(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = w.get(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (w.get(m - 1, m - 1).abs() + z.abs() + w.get(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                w.set(i, i - 2, T::zero());
                if i != m + 2 {
                    w.set(i, i - 3, T::zero());
                }
            }

            // Double QR step on rows l..nn and columns m..nn.
            let mut k = m;
            while k + 1 <= nn {
                if k != m {
                    p = w.get(k, k - 1);
                    q = w.get(k + 1, k - 1);
                    r = T::zero();
                    if k != nn - 1 {
                        r = w.get(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != T::zero() {
                    if k == m {
                        if l != m {
                            let v = -w.get(k, k - 1);
                            w.set(k, k - 1, v);
                        }
                    } else {
                        w.set(k, k - 1, -s * x);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = w.get(k, j) + q * w.get(k + 1, j);
                        if k != nn - 1 {
                            p += r * w.get(k + 2, j);
                            w.sub(k + 2, j, p * z);
                        }
                        w.sub(k + 1, j, p * y);
                        w.sub(k, j, p * x);
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * w.get(i, k) + y * w.get(i, k + 1);
                        if k != nn - 1 {
                            p += z * w.get(i, k + 2);
                            w.sub(i, k + 2, p * r);
                        }
                        w.sub(i, k + 1, p * q);
                        w.sub(i, k, p);
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

/// All eigenvalues (with multiplicity) of a real square matrix.
pub fn eigenvalues_raw<T: Real>(m: &Matrix<T>) -> Result<Vec<Complex<T>>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex::new(m[(0, 0)], T::zero())]);
    }
    let mut w = Work::from_matrix(m);
    balance(&mut w);
    hessenberg(&mut w);
    hqr(&mut w)
}
