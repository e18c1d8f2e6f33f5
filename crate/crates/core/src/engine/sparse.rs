//! Sparse symmetric positive-definite solver by node elimination.
//!
//! Pivots are chosen by minimum current degree (ties by index) so star-shaped
//! networks such as a fan-out bus stay fill-free. The factor is reused across
//! right-hand sides.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite;

#[derive(Debug, Clone, Default)]
pub struct SymmetricBuilder {
    diag: Vec<f64>,
    off: Vec<BTreeMap<usize, f64>>,
}

impl SymmetricBuilder {
    pub fn new(n: usize) -> Self {
        SymmetricBuilder {
            diag: vec![0.0; n],
            off: vec![BTreeMap::new(); n],
        }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Adds `v` at (i, j) and (j, i).
    pub fn add_off(&mut self, i: usize, j: usize, v: f64) {
        debug_assert_ne!(i, j);
        *self.off[i].entry(j).or_insert(0.0) += v;
        *self.off[j].entry(i).or_insert(0.0) += v;
    }

    pub fn factor(self) -> Result<SparseFactor, NotPositiveDefinite> {
        let SymmetricBuilder { mut diag, mut off } = self;
        let n = diag.len();
        let scale: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
        let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (off[i].len(), i)).collect();
        let mut order = Vec::with_capacity(n);
        let mut pivots = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);

        while let Some((_, p)) = queue.pop_first() {
            let d = diag[p];
            if !(d > 1e-13 * scale[p]) || !d.is_finite() {
                return Err(NotPositiveDefinite);
            }
            let row = std::mem::take(&mut off[p]);
            let nbrs: Vec<(usize, f64)> = row.iter().map(|(&j, &v)| (j, v)).collect();
            for &(j, _) in &nbrs {
                queue.remove(&(off[j].len(), j));
                off[j].remove(&p);
            }
            for (a, &(j, vj)) in nbrs.iter().enumerate() {
                diag[j] -= vj * vj / d;
                for &(k, vk) in &nbrs[a + 1..] {
                    let delta = vj * vk / d;
                    *off[j].entry(k).or_insert(0.0) -= delta;
                    *off[k].entry(j).or_insert(0.0) -= delta;
                }
            }
            for &(j, _) in &nbrs {
                queue.insert((off[j].len(), j));
            }
            order.push(p);
            pivots.push(d);
            rows.push(nbrs);
        }
        Ok(SparseFactor {
            order,
            pivots,
            rows,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SparseFactor {
    order: Vec<usize>,
    pivots: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = b.to_vec();
        for ((&p, &d), row) in self.order.iter().zip(&self.pivots).zip(&self.rows) {
            let bp = rhs[p];
            if bp != 0.0 {
                for &(j, v) in row {
                    rhs[j] -= v * bp / d;
                }
            }
        }
        let mut x = vec![0.0; rhs.len()];
        for ((&p, &d), row) in self
            .order
            .iter()
            .zip(&self.pivots)
            .zip(&self.rows)
            .rev()
        {
            let s: f64 = row.iter().map(|&(j, v)| v * x[j]).sum();
            x[p] = (rhs[p] - s) / d;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn solves_small_laplacian() {
        // chain 0-1-2 with a grounded end at each side
        let mut b = SymmetricBuilder::new(3);
        let dense = vec![
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ];
        for i in 0..3 {
            b.add_diag(i, 2.0);
        }
        b.add_off(0, 1, -1.0);
        b.add_off(1, 2, -1.0);
        let f = b.factor().unwrap();
        let rhs = [1.0, 0.0, 3.0];
        let x = f.solve(&rhs);
        let back = dense_mul(&dense, &x);
        for (u, v) in back.iter().zip(rhs) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn star_hub_is_eliminated_last() {
        let n = 50;
        let mut b = SymmetricBuilder::new(n + 1);
        for i in 0..n {
            b.add_diag(i, 2.0);
            b.add_diag(n, 1.0);
            b.add_off(i, n, -1.0);
        }
        b.add_diag(n, 1.0);
        let f = b.factor().unwrap();
        assert_eq!(*f.order.last().unwrap(), n);
        assert!(f.rows.iter().all(|r| r.len() <= 1));
    }

    #[test]
    fn singular_rejected() {
        let mut b = SymmetricBuilder::new(2);
        b.add_diag(0, 1.0);
        b.add_diag(1, 1.0);
        b.add_off(0, 1, -1.0);
        assert!(b.factor().is_err());
    }
}
