//! Dense row-major matrices, blocked LU with partial pivoting, 1-norm
//! condition estimation, Cholesky, and real nonsymmetric eigenvalues.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut c = Mat::zeros(self.rows, other.cols);
        gemm_acc(1.0, self, other, 0.0, &mut c);
        c
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// D^{-1/2} A D^{-1/2} with D = diag(A); returns the scaled matrix and d^{-1/2}.
    pub fn symmetric_scaling(&self) -> Result<(Mat, Vec<f64>)> {
        let mut s = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let d = self[(i, i)];
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite(i));
            }
            s.push(1.0 / d.sqrt());
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            let si = s[i];
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v *= si * s[j];
            }
        }
        Ok((out, s))
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// c = alpha * a * b + beta * c.
pub fn gemm_acc(alpha: f64, a: &Mat, b: &Mat, beta: f64, c: &mut Mat) {
    assert_eq!(a.cols, b.rows);
    assert_eq!((c.rows, c.cols), (a.rows, b.cols));
    if a.rows == 0 || b.cols == 0 {
        return;
    }
    if a.cols == 0 {
        c.data.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    // SAFETY: the three buffers are distinct allocations with the stated
    // row-major shapes.
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.cols as isize,
            1,
            b.data.as_ptr(),
            b.cols as isize,
            1,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// PA = LU with partial pivoting; `piv[j]` is the row swapped with row j.
#[derive(Clone, Debug)]
pub struct Lu {
    pub n: usize,
    pub lu: Vec<f64>,
    pub piv: Vec<usize>,
}

const BLOCK: usize = 48;

pub fn lu_factor(a: &Mat) -> Result<Lu> {
    if a.rows != a.cols {
        return Err(Error::Domain("LU of a non-square matrix".into()));
    }
    let n = a.rows;
    let scale = a.norm_max();
    let tol = 1e-14 * scale;
    let mut lu = a.data.clone();
    let mut piv = vec![0; n];
    let mut kb = 0;
    while kb < n {
        let jb = BLOCK.min(n - kb);
        let pe = kb + jb;
        for j in kb..pe {
            let mut p = j;
            let mut best = lu[j * n + j].abs();
            for i in j + 1..n {
                let v = lu[i * n + j].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tol || !best.is_finite() {
                return Err(Error::Singular { column: j, pivot: best, scale });
            }
            piv[j] = p;
            if p != j {
                for c in 0..n {
                    lu.swap(j * n + c, p * n + c);
                }
            }
            let d = lu[j * n + j];
            let (top, bottom) = lu.split_at_mut((j + 1) * n);
            let prow = &top[j * n + j + 1..j * n + pe];
            for i in 0..n - j - 1 {
                let row = &mut bottom[i * n..(i + 1) * n];
                let l = row[j] / d;
                row[j] = l;
                if l != 0.0 {
                    for (x, u) in row[j + 1..pe].iter_mut().zip(prow) {
                        *x -= l * u;
                    }
                }
            }
        }
        if pe < n {
            for j in kb..pe {
                let (top, bottom) = lu.split_at_mut((j + 1) * n);
                let urow = &top[j * n + pe..j * n + n];
                for i in j + 1..pe {
                    let row = &mut bottom[(i - j - 1) * n..(i - j) * n];
                    let l = row[j];
                    if l != 0.0 {
                        for (x, u) in row[pe..].iter_mut().zip(urow) {
                            *x -= l * u;
                        }
                    }
                }
            }
            let m = n - pe;
            // SAFETY: L21 (rows pe.., cols kb..pe), U12 (rows kb..pe, cols pe..)
            // and A22 (rows pe.., cols pe..) are disjoint regions of `lu`.
            unsafe {
                let base = lu.as_mut_ptr();
                matrixmultiply::dgemm(
                    m,
                    jb,
                    m,
                    -1.0,
                    base.add(pe * n + kb),
                    n as isize,
                    1,
                    base.add(kb * n + pe),
                    n as isize,
                    1,
                    1.0,
                    base.add(pe * n + pe),
                    n as isize,
                    1,
                );
            }
        }
        kb = pe;
    }
    Ok(Lu { n, lu, piv })
}

impl Lu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            b.swap(j, self.piv[j]);
        }
        for i in 0..n {
            let s = dot(&self.lu[i * n..i * n + i], &b[..i]);
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu[i * n + i + 1..(i + 1) * n], &b[i + 1..]);
            b[i] = (b[i] - s) / self.lu[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves A^T x = b.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            b[i] /= self.lu[i * n + i];
            let bi = b[i];
            for (x, u) in b[i + 1..].iter_mut().zip(&self.lu[i * n + i + 1..(i + 1) * n]) {
                *x -= u * bi;
            }
        }
        for i in (0..n).rev() {
            let bi = b[i];
            for (x, l) in b[..i].iter_mut().zip(&self.lu[i * n..i * n + i]) {
                *x -= l * bi;
            }
        }
        for j in (0..n).rev() {
            b.swap(j, self.piv[j]);
        }
    }

    /// Solves A X = B for the columns of an n × r row-major block.
    pub fn solve_columns(&self, b: &mut Mat) {
        let n = self.n;
        assert_eq!(b.rows, n);
        let r = b.cols;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                for c in 0..r {
                    b.data.swap(j * r + c, p * r + c);
                }
            }
        }
        for i in 0..n {
            let (done, rest) = b.data.split_at_mut(i * r);
            let bi = &mut rest[..r];
            for (j, &l) in self.lu[i * n..i * n + i].iter().enumerate() {
                if l != 0.0 {
                    for (x, y) in bi.iter_mut().zip(&done[j * r..(j + 1) * r]) {
                        *x -= l * y;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = b.data.split_at_mut((i + 1) * r);
            let bi = &mut head[i * r..];
            for (jj, &u) in self.lu[i * n + i + 1..(i + 1) * n].iter().enumerate() {
                if u != 0.0 {
                    for (x, y) in bi.iter_mut().zip(&tail[jj * r..(jj + 1) * r]) {
                        *x -= u * y;
                    }
                }
            }
            let d = self.lu[i * n + i];
            bi.iter_mut().for_each(|x| *x /= d);
        }
    }

    /// Solves A^T X = B for the columns of an n × r row-major block.
    pub fn solve_transpose_columns(&self, b: &mut Mat) {
        let n = self.n;
        assert_eq!(b.rows, n);
        let r = b.cols;
        for i in 0..n {
            let d = self.lu[i * n + i];
            let (head, tail) = b.data.split_at_mut((i + 1) * r);
            let bi = &mut head[i * r..];
            bi.iter_mut().for_each(|x| *x /= d);
            for (jj, &u) in self.lu[i * n + i + 1..(i + 1) * n].iter().enumerate() {
                if u != 0.0 {
                    for (x, y) in tail[jj * r..(jj + 1) * r].iter_mut().zip(bi.iter()) {
                        *x -= u * y;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = b.data.split_at_mut(i * r);
            let bi = &tail[..r];
            for (j, &l) in self.lu[i * n..i * n + i].iter().enumerate() {
                if l != 0.0 {
                    for (x, y) in head[j * r..(j + 1) * r].iter_mut().zip(bi) {
                        *x -= l * y;
                    }
                }
            }
        }
        for j in (0..n).rev() {
            let p = self.piv[j];
            if p != j {
                for c in 0..r {
                    b.data.swap(j * r + c, p * r + c);
                }
            }
        }
    }

    pub fn inverse(&self) -> Mat {
        let mut x = Mat::identity(self.n);
        self.solve_columns(&mut x);
        x
    }

    /// Hager-Higham estimate of ||A^{-1}||_1.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let ny: f64 = y.iter().map(|v| v.abs()).sum();
            if iter > 0 && ny <= est {
                break;
            }
            est = ny;
            let mut z: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.solve_transpose_in_place(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bj, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bj, bv) });
            if iter > 0 && (zmax <= dot(&z, &x) || j == last_j) {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        let mut alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 })
            })
            .collect();
        self.solve_in_place(&mut alt);
        let alt_est = 2.0 * alt.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }
}

/// Estimated 1-norm condition number of `a` using its LU factors.
pub fn condition_estimate(a: &Mat, lu: &Lu) -> f64 {
    a.norm1() * lu.inverse_norm1_estimate()
}

/// Exact 1-norm condition number through the explicit inverse.
pub fn condition_exact(a: &Mat) -> Result<f64> {
    let lu = lu_factor(a)?;
    Ok(a.norm1() * lu.inverse().norm1())
}

/// Unpivoted Cholesky factor L (lower triangular, A = L L^T).
pub fn cholesky(a: &Mat) -> Result<Mat> {
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite(j));
        }
        d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Reduces `a` to upper Hessenberg form by Householder similarity transforms.
pub fn hessenberg(a: &Mat) -> Mat {
    let n = a.rows;
    let mut h = a.clone();
    let mut v = vec![0.0; n];
    for m in 1..n.saturating_sub(1) {
        let scale: f64 = (m..n).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in m..n {
            v[i] = h[(i, m - 1)] / scale;
            hh += v[i] * v[i];
        }
        let mut g = hh.sqrt();
        if v[m] > 0.0 {
            g = -g;
        }
        hh -= v[m] * g;
        v[m] -= g;
        for j in m - 1..n {
            let f = (m..n).map(|i| v[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in m..n {
                h[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let f = (m..n).map(|j| v[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in m..n {
                h[(i, j)] -= f * v[j];
            }
        }
        for i in m + 1..n {
            h[(i, m - 1)] = 0.0;
        }
    }
    h
}

/// All eigenvalues of a real square matrix (Hessenberg reduction followed by
/// Francis double-shift QR).
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>> {
    if a.rows != a.cols {
        return Err(Error::Domain("eigenvalues of a non-square matrix".into()));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = hessenberg(a);
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let eps = f64::EPSILON;
    let norm: f64 = (0..n)
        .map(|i| (i.saturating_sub(1)..n).map(|j| h[(i, j)].abs()).sum::<f64>())
        .sum();
    let max_iter = 100 * n;
    let mut total = 0usize;
    let mut exshift = 0.0;
    let mut iter = 0;
    let mut nn = n as isize - 1;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);
    while nn >= 0 {
        let nu = nn as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == nu {
            wr[nu] = h[(nu, nu)] + exshift;
            wi[nu] = 0.0;
            nn -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[(nu, nu)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                wi[nu - 1] = 0.0;
                wi[nu] = 0.0;
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            nn -= 2;
            iter = 0;
        } else {
            total += 1;
            if total > max_iter {
                return Err(Error::Numerical(format!("QR iteration did not converge in {max_iter} sweeps")));
            }
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..n {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Eigenvector for a known eigenvalue by complex inverse iteration; returns
/// the vector and the residual ||Av - λv||_2 with ||v||_2 = 1.
pub fn eigenvector(a: &Mat, lambda: Complex64) -> Result<(Vec<Complex64>, f64)> {
    let n = a.rows;
    let shift = lambda + Complex64::new(1e-10, 1e-10) * (1.0 + a.norm_max());
    let mut m: Vec<Complex64> = a.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for i in 0..n {
        m[i * n + i] -= shift;
    }
    let mut piv = vec![0; n];
    for j in 0..n {
        let p = (j..n).max_by(|&x, &y| m[x * n + j].norm().total_cmp(&m[y * n + j].norm())).unwrap();
        piv[j] = p;
        if p != j {
            for c in 0..n {
                m.swap(j * n + c, p * n + c);
            }
        }
        let mut d = m[j * n + j];
        if d.norm() == 0.0 {
            d = Complex64::new(f64::EPSILON, 0.0);
            m[j * n + j] = d;
        }
        for i in j + 1..n {
            let l = m[i * n + j] / d;
            m[i * n + j] = l;
            if l.norm() != 0.0 {
                for c in j + 1..n {
                    let u = m[j * n + c];
                    m[i * n + c] -= l * u;
                }
            }
        }
    }
    let solve = |b: &mut Vec<Complex64>| {
        for j in 0..n {
            b.swap(j, piv[j]);
        }
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= m[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= m[i * n + j] * b[j];
            }
            b[i] = s / m[i * n + i];
        }
    };
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + (i as f64 * 0.37).sin(), 0.1)).collect();
    let residual = |v: &[Complex64]| -> f64 {
        (0..n)
            .map(|i| {
                let mut s = -lambda * v[i];
                for j in 0..n {
                    s += a[(i, j)] * v[j];
                }
                s.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut res = f64::INFINITY;
    for _ in 0..6 {
        solve(&mut v);
        let nv = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 || !nv.is_finite() {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        v.iter_mut().for_each(|c| *c /= nv);
        res = residual(&v);
        if res <= 1e-13 * (1.0 + a.norm_max()) {
            break;
        }
    }
    Ok((v, res))
}
