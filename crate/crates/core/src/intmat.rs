//! Exact integer matrix algebra: Pfaffians, Smith normal form, lattice
//! kernels and completions.
//!
//! Everything here runs over i128 with checked arithmetic. The matrices are
//! small (at most `2n x 2n` for torus dimension `n <= 8` or so), so recursive
//! Pfaffian expansion and textbook Smith reduction are the right tools; no
//! fraction-free pivoting tricks are needed beyond picking small pivots.

use crate::error::Error;
use crate::Result;

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i128>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = IMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v as i128;
            }
        }
        m
    }

    pub fn col(&self, j: usize) -> Vec<i128> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row a += k * row b
    fn add_row(&mut self, a: usize, b: usize, k: i128) {
        for j in 0..self.cols {
            let v = self[(b, j)].checked_mul(k).and_then(|x| self[(a, j)].checked_add(x));
            self[(a, j)] = v.expect("integer overflow in row operation");
        }
    }

    /// col a += k * col b
    fn add_col(&mut self, a: usize, b: usize, k: i128) {
        for i in 0..self.rows {
            let v = self[(i, b)].checked_mul(k).and_then(|x| self[(i, a)].checked_add(x));
            self[(i, a)] = v.expect("integer overflow in column operation");
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            self[(a, j)] = -self[(a, j)];
        }
    }

    fn negate_col(&mut self, a: usize) {
        for i in 0..self.rows {
            self[(i, a)] = -self[(i, a)];
        }
    }

    pub fn mul_vec(&self, x: &[i128]) -> Vec<i128> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(0i128, |acc, j| {
                    self[(i, j)]
                        .checked_mul(x[j])
                        .and_then(|v| acc.checked_add(v))
                        .expect("integer overflow in matrix-vector product")
                })
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = i128;
    fn index(&self, (i, j): (usize, usize)) -> &i128 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i128 {
        &mut self.data[i * self.cols + j]
    }
}

/// Pfaffian of an antisymmetric integer matrix, by expansion along the first
/// remaining row. O((2n-1)!!) terms; exact.
pub fn pfaffian(m: &IMat) -> Result<i128> {
    let n = m.rows;
    if n != m.cols {
        return Err(Error::BadInput(format!("pfaffian of non-square {}x{} matrix", n, m.cols)));
    }
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] != -m[(j, i)] {
                return Err(Error::BadInput(format!(
                    "pfaffian of non-antisymmetric matrix at ({i},{j})"
                )));
            }
        }
    }
    if n % 2 != 0 {
        return Ok(0);
    }
    let idx: Vec<usize> = (0..n).collect();
    Ok(pf_rec(m, &idx))
}

fn pf_rec(m: &IMat, idx: &[usize]) -> i128 {
    if idx.is_empty() {
        return 1;
    }
    let first = idx[0];
    let mut acc: i128 = 0;
    let mut sign: i128 = 1;
    for (k, &j) in idx.iter().enumerate().skip(1) {
        let a = m[(first, j)];
        if a != 0 {
            let rest: Vec<usize> = idx[1..]
                .iter()
                .enumerate()
                .filter(|&(t, _)| t != k - 1)
                .map(|(_, &v)| v)
                .collect();
            let term = a
                .checked_mul(pf_rec(m, &rest))
                .and_then(|v| v.checked_mul(sign))
                .expect("integer overflow in pfaffian");
            acc = acc.checked_add(term).expect("integer overflow in pfaffian");
        }
        sign = -sign;
    }
    acc
}

/// Smith normal form with accumulated transforms.
///
/// Returns `(d, u, u_inv, v)` with `u * a * v = diag(d)` (padded with zeros),
/// `u` and `v` unimodular and `u_inv = u^{-1}`. The diagonal entries are
/// nonnegative and each divides the next.
pub struct Smith {
    pub d: Vec<i128>,
    pub u: IMat,
    pub u_inv: IMat,
    pub v: IMat,
}

pub fn smith_normal_form(a: &IMat) -> Smith {
    let (r, c) = (a.rows, a.cols);
    let mut m = a.clone();
    let mut u = IMat::identity(r);
    let mut u_inv = IMat::identity(r);
    let mut v = IMat::identity(c);

    let steps = r.min(c);
    let mut t = 0;
    while t < steps {
        // find smallest nonzero entry in the remaining block as pivot
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                if m[(i, j)] != 0
                    && pivot.is_none_or(|(pi, pj)| m[(i, j)].abs() < m[(pi, pj)].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != t {
            m.swap_rows(t, pi);
            u.swap_rows(t, pi);
            u_inv.swap_cols(t, pi);
        }
        if pj != t {
            m.swap_cols(t, pj);
            v.swap_cols(t, pj);
        }

        // clear row and column t; restart if a reduction leaves a remainder
        loop {
            let mut dirty = false;
            for i in (t + 1)..r {
                if m[(i, t)] != 0 {
                    let q = div_round(m[(i, t)], m[(t, t)]);
                    if q != 0 {
                        m.add_row(i, t, -q);
                        u.add_row(i, t, -q);
                        u_inv.add_col(t, i, q);
                    }
                    if m[(i, t)] != 0 {
                        // remainder strictly smaller than pivot: swap it up
                        m.swap_rows(t, i);
                        u.swap_rows(t, i);
                        u_inv.swap_cols(t, i);
                        dirty = true;
                    }
                }
            }
            for j in (t + 1)..c {
                if m[(t, j)] != 0 {
                    let q = div_round(m[(t, j)], m[(t, t)]);
                    if q != 0 {
                        m.add_col(j, t, -q);
                        v.add_col(j, t, -q);
                    }
                    if m[(t, j)] != 0 {
                        m.swap_cols(t, j);
                        v.swap_cols(t, j);
                        dirty = true;
                    }
                }
            }
            if !dirty {
                break;
            }
        }

        if m[(t, t)] < 0 {
            m.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
        t += 1;
    }

    // enforce divisibility d_i | d_{i+1}: fold the later column in, take a
    // gcd by row operations, and clear again
    let rank = t;
    loop {
        let mut fixed = true;
        for i in 0..rank.saturating_sub(1) {
            if m[(i, i)] != 0 && m[(i + 1, i + 1)] % m[(i, i)] != 0 {
                fixed = false;
                m.add_col(i, i + 1, 1);
                v.add_col(i, i + 1, 1);
                while m[(i + 1, i)] != 0 {
                    let q = div_round(m[(i, i)], m[(i + 1, i)]);
                    m.add_row(i, i + 1, -q);
                    u.add_row(i, i + 1, -q);
                    u_inv.add_col(i + 1, i, q);
                    m.swap_rows(i, i + 1);
                    u.swap_rows(i, i + 1);
                    u_inv.swap_cols(i, i + 1);
                }
                // every block entry is divisible by the new corner gcd
                let q = m[(i, i + 1)] / m[(i, i)];
                if q != 0 {
                    m.add_col(i + 1, i, -q);
                    v.add_col(i + 1, i, -q);
                }
                if m[(i, i)] < 0 {
                    m.negate_row(i);
                    u.negate_row(i);
                    u_inv.negate_col(i);
                }
                if m[(i + 1, i + 1)] < 0 {
                    m.negate_row(i + 1);
                    u.negate_row(i + 1);
                    u_inv.negate_col(i + 1);
                }
            }
        }
        if fixed {
            break;
        }
    }

    let d: Vec<i128> = (0..steps).map(|i| m[(i, i)]).collect();
    debug_assert!({
        // u * a * v == diag(d)
        let prod = mat_mul(&mat_mul(&u, a), &v);
        let mut ok = true;
        for i in 0..r {
            for j in 0..c {
                let want = if i == j && i < steps { d[i] } else { 0 };
                ok &= prod[(i, j)] == want;
            }
        }
        ok
    });
    Smith { d, u, u_inv, v }
}

fn mat_mul(a: &IMat, b: &IMat) -> IMat {
    assert_eq!(a.cols, b.rows);
    let mut m = IMat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == 0 {
                continue;
            }
            for j in 0..b.cols {
                let v = aik
                    .checked_mul(b[(k, j)])
                    .and_then(|x| m[(i, j)].checked_add(x))
                    .expect("integer overflow in matrix product");
                m[(i, j)] = v;
            }
        }
    }
    m
}

/// Rounded division: the quotient minimizing |a - q b|.
fn div_round(a: i128, b: i128) -> i128 {
    let q = a / b;
    let r = a - q * b;
    if 2 * r.abs() > b.abs() {
        q + if (r > 0) == (b > 0) { 1 } else { -1 }
    } else {
        q
    }
}

/// Basis of the integer kernel `{x : a x = 0}` as columns.
pub fn integer_kernel(a: &IMat) -> Vec<Vec<i128>> {
    let s = smith_normal_form(a);
    let rank = s.d.iter().filter(|&&d| d != 0).count();
    (rank..a.cols).map(|j| s.v.col(j)).collect()
}

/// Whether `b` is an integer combination of the columns of `k`.
///
/// `k`'s columns must span a saturated sublattice (Smith invariants all 1),
/// which holds for kernels of integer matrices.
pub struct SaturatedSpan {
    smith: Smith,
    rank: usize,
}

impl SaturatedSpan {
    pub fn new(k: &IMat) -> Self {
        let smith = smith_normal_form(k);
        let rank = smith.d.iter().filter(|&&d| d != 0).count();
        debug_assert!(smith.d[..rank].iter().all(|&d| d == 1), "span is not saturated");
        SaturatedSpan { smith, rank }
    }

    pub fn contains(&self, b: &[i128]) -> bool {
        // b = k c  <=>  (u b) lies in the image of diag(d) = first `rank` axes
        let ub = self.smith.u.mul_vec(b);
        ub.iter().skip(self.rank).all(|&x| x == 0)
    }
}

/// Extend the saturated column span of `k` (2n x r) to a basis of Z^{2n}.
///
/// Returns the 2n - r completion vectors; together with the columns of `k`
/// they form a unimodular matrix, so their classes generate the quotient
/// lattice Z^{2n} / span(k).
pub fn lattice_completion(k: &IMat) -> Vec<Vec<i128>> {
    let s = smith_normal_form(k);
    let rank = s.d.iter().filter(|&&d| d != 0).count();
    assert!(
        s.d[..rank].iter().all(|&d| d == 1),
        "completion requires a saturated span"
    );
    // span(k) = span of the first `rank` columns of u^{-1}; the rest complete it
    (rank..k.rows).map(|j| s.u_inv.col(j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(entries: &[(usize, usize, i64)], n: usize) -> IMat {
        let mut m = IMat::zeros(n, n);
        for &(i, j, v) in entries {
            m[(i, j)] = v as i128;
            m[(j, i)] = -(v as i128);
        }
        m
    }

    #[test]
    fn pfaffian_of_standard_blocks() {
        let m = block(&[(0, 1, 3)], 2);
        assert_eq!(pfaffian(&m).unwrap(), 3);
        // direct sum multiplies
        let m = block(&[(0, 1, -1), (2, 3, 2)], 4);
        assert_eq!(pfaffian(&m).unwrap(), -2);
        // interleaved indices pick up the permutation sign
        let m = block(&[(0, 2, 1), (1, 3, 1)], 4);
        assert_eq!(pfaffian(&m).unwrap(), -1);
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        // Pf(A)^2 = det(A) for a dense antisymmetric example
        let m = block(&[(0, 1, 2), (0, 2, -1), (0, 3, 4), (1, 2, 3), (1, 3, 1), (2, 3, 2)], 4);
        let pf = pfaffian(&m).unwrap();
        // det by cofactor expansion over f64 is exact at this size
        let mut a = [[0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = m[(i, j)] as f64;
            }
        }
        let det = det4(&a);
        assert_eq!((pf * pf) as f64, det);
    }

    fn det4(a: &[[f64; 4]; 4]) -> f64 {
        let mut m = *a;
        let mut det = 1.0;
        for c in 0..4 {
            let p = (c..4).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap()).unwrap();
            if m[p][c] == 0.0 {
                return 0.0;
            }
            if p != c {
                m.swap(p, c);
                det = -det;
            }
            det *= m[c][c];
            for i in (c + 1)..4 {
                let f = m[i][c] / m[c][c];
                for j in c..4 {
                    m[i][j] -= f * m[c][j];
                }
            }
        }
        det
    }

    #[test]
    fn pfaffian_rejects_asymmetric_input() {
        let mut m = IMat::zeros(2, 2);
        m[(0, 1)] = 1;
        assert!(pfaffian(&m).is_err());
    }

    #[test]
    fn smith_reduces_and_tracks_transforms() {
        let a = IMat::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.d, vec![2, 2, 156]);
        // u_inv really is the inverse of u
        let prod = mat_mul(&s.u, &s.u_inv);
        assert_eq!(prod, IMat::identity(3));
    }

    #[test]
    fn kernel_of_singular_antisymmetric_matrix() {
        // E = u v^T - v u^T with u = (1,0,1,0), v = (0,1,0,1): rank 2,
        // kernel spanned by (1,0,-1,0) and (0,1,0,-1)
        let e = block(&[(0, 1, 1), (0, 3, 1), (2, 1, 1), (2, 3, 1)], 4);
        let ker = integer_kernel(&e);
        assert_eq!(ker.len(), 2);
        for k in &ker {
            assert!(e.mul_vec(k).iter().all(|&x| x == 0));
        }
        let kmat = {
            let mut m = IMat::zeros(4, 2);
            for (j, k) in ker.iter().enumerate() {
                for i in 0..4 {
                    m[(i, j)] = k[i];
                }
            }
            m
        };
        let span = SaturatedSpan::new(&kmat);
        assert!(span.contains(&[1, 0, -1, 0]));
        assert!(!span.contains(&[1, 0, 0, 0]));
        // completion extends to a basis: 2 vectors for the quotient
        assert_eq!(lattice_completion(&kmat).len(), 2);
    }

    #[test]
    fn completion_spans_quotient() {
        let k = IMat::from_rows(&[vec![1], vec![0], vec![2], vec![0]]);
        let comp = lattice_completion(&k);
        assert_eq!(comp.len(), 3);
        // stacking kernel + completion gives a unimodular matrix: det = +-1
        let mut m = [[0f64; 4]; 4];
        for i in 0..4 {
            m[i][0] = k[(i, 0)] as f64;
            for (j, c) in comp.iter().enumerate() {
                m[i][j + 1] = c[i] as f64;
            }
        }
        assert_eq!(super::tests::det4(&m).abs(), 1.0);
    }
}
