//! Small dense complex linear-algebra helpers: matrix exponentials and
//! block decomposition of sparse generators.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Matrix exponential of a complex square matrix.
///
/// Evaluated through the real 2n × 2n embedding `[[Re, -Im], [Im, Re]]`,
/// which lets the scaling-and-squaring Padé kernel run on the fast real
/// GEMM path. The embedding is an algebra homomorphism, so the upper-left
/// and lower-left blocks of the real exponential are exactly Re/Im of the
/// complex one.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    match n {
        0 => return DMatrix::zeros(0, 0),
        1 => return DMatrix::from_element(1, 1, m[(0, 0)].exp()),
        2 => return expm2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
        _ => {}
    }
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i + n, j + n)] = z.re;
            real[(i + n, j)] = z.im;
            real[(i, j + n)] = -z.im;
        }
    }
    let e = real.exp();
    DMatrix::from_fn(n, n, |i, j| C64::new(e[(i, j)], e[(i + n, j)]))
}

/// Closed-form exponential of a 2 × 2 complex matrix.
///
/// With `mu = tr/2` and `N = M - mu I`, `N^2 = delta^2 I` so
/// `exp(M) = e^mu (cosh(delta) I + sinh(delta)/delta N)`; the `sinh(x)/x`
/// factor is expanded near zero, which keeps the critically damped
/// (defective) case exact.
pub fn expm2(a: C64, b: C64, c: C64, d: C64) -> DMatrix<C64> {
    let mu = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let delta = (half_diff * half_diff + b * c).sqrt();
    let cosh = delta.cosh();
    let sinhc = sinhc(delta);
    let scale = mu.exp();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            scale * (cosh + sinhc * half_diff),
            scale * sinhc * b,
            scale * sinhc * c,
            scale * (cosh - sinhc * half_diff),
        ],
    )
}

fn sinhc(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        C64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// Connected components of the undirected graph whose edges are the
/// nonzero off-diagonal entries of `m` (either orientation).
///
/// Components are returned with sorted members, ordered by smallest member.
pub fn connected_components(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != C64::new(0.0, 0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `exp(t M)` for a generator `M` that splits into independent blocks,
/// stored block by block.
#[derive(Clone, Debug)]
pub struct BlockExp {
    dim: usize,
    blocks: Vec<(Vec<usize>, DMatrix<C64>)>,
}

impl BlockExp {
    pub fn new(generator: &DMatrix<C64>, t: f64) -> Self {
        let dim = generator.nrows();
        let blocks = connected_components(generator)
            .into_iter()
            .map(|idx| {
                let k = idx.len();
                let sub = DMatrix::from_fn(k, k, |a, b| generator[(idx[a], idx[b])] * t);
                let e = expm(&sub);
                (idx, e)
            })
            .collect();
        BlockExp { dim, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|(i, _)| i.len()).max().unwrap_or(0)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        assert_eq!(v.len(), self.dim);
        let mut out = DVector::zeros(self.dim);
        for (idx, e) in &self.blocks {
            for (a, &ia) in idx.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (b, &ib) in idx.iter().enumerate() {
                    acc += e[(a, b)] * v[ib];
                }
                out[ia] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (idx, e) in &self.blocks {
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    out[(ia, ib)] = e[(a, b)];
                }
            }
        }
        out
    }
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
