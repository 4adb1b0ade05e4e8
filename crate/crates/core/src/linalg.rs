//! Complex block-tridiagonal systems with 3×3 blocks.
//!
//! The forward sweep eliminates the sub-diagonal blocks one harmonic at a time
//! (block Thomas algorithm); each Schur complement is factorized with partial
//! pivoting. A dense Gaussian elimination over the assembled matrix is kept
//! as an independent route for cross-checks.

use num_complex::Complex64 as C64;

pub type Vec3 = [C64; 3];
pub type Block3 = [[C64; 3]; 3];

/// Relative pivot threshold below which a block is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn zero_block() -> Block3 {
    [[ZERO; 3]; 3]
}

pub fn diag_block(d: [C64; 3]) -> Block3 {
    let mut b = zero_block();
    for i in 0..3 {
        b[i][i] = d[i];
    }
    b
}

pub fn block_norm(b: &Block3) -> f64 {
    b.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn mat_vec(b: &Block3, x: &Vec3) -> Vec3 {
    let mut y = [ZERO; 3];
    for i in 0..3 {
        y[i] = b[i][0] * x[0] + b[i][1] * x[1] + b[i][2] * x[2];
    }
    y
}

fn mat_mul(a: &Block3, b: &Block3) -> Block3 {
    let mut c = zero_block();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

fn sub_vec(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Pivot index at which a factorization broke down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub block: usize,
}

/// LU factorization of a 3×3 block with row pivoting.
#[derive(Debug, Clone, Copy)]
struct Lu3 {
    lu: Block3,
    perm: [usize; 3],
}

impl Lu3 {
    fn factor(mut a: Block3) -> Option<Self> {
        let scale = block_norm(&a);
        if scale == 0.0 {
            return None;
        }
        let mut perm = [0, 1, 2];
        for k in 0..3 {
            let p = (k..3).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
            if a[p][k].norm() < PIVOT_TOLERANCE * scale {
                return None;
            }
            a.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..3 {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..3 {
                    let akj = a[k][j];
                    a[i][j] -= f * akj;
                }
            }
        }
        Some(Lu3 { lu: a, perm })
    }

    fn solve(&self, b: &Vec3) -> Vec3 {
        let a = &self.lu;
        let mut y = [b[self.perm[0]], b[self.perm[1]], b[self.perm[2]]];
        for i in 1..3 {
            for j in 0..i {
                let yj = y[j];
                y[i] -= a[i][j] * yj;
            }
        }
        for i in (0..3).rev() {
            for j in i + 1..3 {
                let yj = y[j];
                y[i] -= a[i][j] * yj;
            }
            y[i] /= a[i][i];
        }
        y
    }

    fn solve_block(&self, b: &Block3) -> Block3 {
        let mut out = zero_block();
        for j in 0..3 {
            let col = self.solve(&[b[0][j], b[1][j], b[2][j]]);
            for i in 0..3 {
                out[i][j] = col[i];
            }
        }
        out
    }
}

/// Square block-tridiagonal operator.
///
/// `upper[i]` couples row block `i` to column block `i + 1`, `lower[i]`
/// couples row block `i + 1` to column block `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    pub diag: Vec<Block3>,
    pub upper: Vec<Block3>,
    pub lower: Vec<Block3>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<Block3>, upper: Vec<Block3>, lower: Vec<Block3>) -> Self {
        assert!(!diag.is_empty(), "block system needs at least one block");
        assert_eq!(upper.len(), diag.len() - 1);
        assert_eq!(lower.len(), diag.len() - 1);
        BlockTridiagonal { diag, upper, lower }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[Vec3]) -> Vec<Vec3> {
        let n = self.blocks();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = mat_vec(&self.diag[i], &x[i]);
                if i + 1 < n {
                    let u = mat_vec(&self.upper[i], &x[i + 1]);
                    y = [y[0] + u[0], y[1] + u[1], y[2] + u[2]];
                }
                if i > 0 {
                    let l = mat_vec(&self.lower[i - 1], &x[i - 1]);
                    y = [y[0] + l[0], y[1] + l[1], y[2] + l[2]];
                }
                y
            })
            .collect()
    }

    /// Block Thomas solve of `self · x = rhs`.
    pub fn solve(&self, rhs: &[Vec3]) -> Result<Vec<Vec3>, Singular> {
        let n = self.blocks();
        assert_eq!(rhs.len(), n);
        let mut factors = Vec::with_capacity(n);
        // S_i^{-1} U_i for the back substitution
        let mut carry: Vec<Block3> = Vec::with_capacity(n.saturating_sub(1));
        let mut g: Vec<Vec3> = Vec::with_capacity(n);

        for i in 0..n {
            let (schur, gi) = if i == 0 {
                (self.diag[0], rhs[0])
            } else {
                let l = &self.lower[i - 1];
                let lc = mat_mul(l, &carry[i - 1]);
                let mut s = self.diag[i];
                for r in 0..3 {
                    for c in 0..3 {
                        s[r][c] -= lc[r][c];
                    }
                }
                let prev: &Lu3 = &factors[i - 1];
                let w = prev.solve(&g[i - 1]);
                (s, sub_vec(&rhs[i], &mat_vec(l, &w)))
            };
            let lu = Lu3::factor(schur).ok_or(Singular { block: i })?;
            if i + 1 < n {
                carry.push(lu.solve_block(&self.upper[i]));
            }
            factors.push(lu);
            g.push(gi);
        }

        let mut x = vec![[ZERO; 3]; n];
        x[n - 1] = factors[n - 1].solve(&g[n - 1]);
        for i in (0..n - 1).rev() {
            let w = factors[i].solve(&g[i]);
            x[i] = sub_vec(&w, &mat_vec(&carry[i], &x[i + 1]));
        }
        Ok(x)
    }

    /// Row-major dense copy of the operator.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let n = self.blocks();
        let mut a = vec![vec![ZERO; 3 * n]; 3 * n];
        let mut put = |bi: usize, bj: usize, b: &Block3| {
            for r in 0..3 {
                for c in 0..3 {
                    a[3 * bi + r][3 * bj + c] = b[r][c];
                }
            }
        };
        for i in 0..n {
            put(i, i, &self.diag[i]);
            if i + 1 < n {
                put(i, i + 1, &self.upper[i]);
                put(i + 1, i, &self.lower[i]);
            }
        }
        a
    }

    /// Solve through the dense matrix. Slow; meant for cross-checks.
    pub fn solve_dense(&self, rhs: &[Vec3]) -> Result<Vec<Vec3>, Singular> {
        let b: Vec<C64> = rhs.iter().flatten().copied().collect();
        let x = dense_solve(self.to_dense(), b)?;
        Ok(x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    /// `‖self · x − rhs‖ / ‖rhs‖` in the max norm (absolute when `rhs` is zero).
    pub fn relative_residual(&self, x: &[Vec3], rhs: &[Vec3]) -> f64 {
        let ax = self.apply(x);
        let num = ax
            .iter()
            .zip(rhs)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).norm()))
            .fold(0.0, f64::max);
        let den = rhs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }
}

/// Gaussian elimination with partial pivoting on a dense complex matrix.
pub fn dense_solve(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Result<Vec<C64>, Singular> {
    let n = b.len();
    let scale = a.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        if scale == 0.0 || a[p][k].norm() < PIVOT_TOLERANCE * scale {
            return Err(Singular { block: k / 3 });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let akj = a[k][j];
                a[i][j] -= f * akj;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * b[j];
        }
        b[i] = s / a[i][i];
    }
    Ok(b)
}
