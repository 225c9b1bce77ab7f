//! Discretized function space on the unit interval.
//!
//! Profiles (strategy or aggregate) are represented by their values at the
//! `M` midpoints of a uniform grid. Midpoint quadrature is exact for
//! piecewise-constant profiles aligned to the grid and for affine functions,
//! and it keeps the block embedding/averaging maps exact inverses of each
//! other.

use crate::{fmt_f64, Error, Result};
use std::io::{BufRead, Write};

/// Uniform midpoint grid on [0,1] with `m` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    m: usize,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(Grid { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Midpoint of cell `i`: (i + 1/2) / m.
    pub fn point(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.m as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.point(i)).collect()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.m as f64
    }
}

/// A function in the discretized L2 space: one value per grid midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProfile {
    grid: Grid,
    values: Vec<f64>,
}

/// Relabeling family searched by [`perm_invariant_dist`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationSearch {
    /// No relabeling; returns the plain L2 distance.
    Identity,
    /// Sort both value vectors before measuring. A valid measure-preserving
    /// relabeling for block profiles, and the optimum over all cell
    /// permutations.
    SortValues,
    /// Minimize over every permutation of `blocks` equal blocks. Both
    /// profiles must be block-constant with that block count.
    ExhaustiveBlocks(usize),
}

impl GridProfile {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(grid.len(), values.len()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "profile value {bad} is not finite"
            )));
        }
        Ok(GridProfile { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let values = vec![c; grid.len()];
        GridProfile { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.len(), other.grid.len()));
        }
        Ok(())
    }

    /// Midpoint quadrature of the profile over [0,1].
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Discrete L2 norm: sqrt((1/M) sum v_i^2).
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// Discrete L2 inner product (1/M) sum p_i q_i.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.len() as f64)
    }

    pub fn l2_dist(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let sq = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        Ok((sq / self.len() as f64).sqrt())
    }

    pub fn sup_dist(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Block averages over `n` equal blocks (the map that inverts
    /// [`embed_step`]).
    pub fn block_average(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 || self.len() % n != 0 {
            return Err(Error::NotBlockAligned {
                cells: self.len(),
                blocks: n,
            });
        }
        let per = self.len() / n;
        Ok((0..n)
            .map(|b| {
                let chunk = &self.values[b * per..(b + 1) * per];
                // Exact on block-constant profiles, so averaging inverts
                // the block embedding without rounding.
                if chunk.iter().all(|v| *v == chunk[0]) {
                    chunk[0]
                } else {
                    chunk.iter().sum::<f64>() / per as f64
                }
            })
            .collect())
    }

    /// Serialize as CSV with header `x,value`, full double precision.
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x,value")?;
        for i in 0..self.len() {
            writeln!(w, "{},{}", fmt_f64(self.grid.point(i)), fmt_f64(self.values[i]))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn from_csv(r: impl BufRead) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line == "x,value") {
                continue;
            }
            let mut parts = line.split(',');
            let _x = parts.next();
            let v = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing value", lineno + 1)))?;
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
            );
        }
        let grid = Grid::new(values.len())?;
        GridProfile::new(grid, values)
    }
}

/// Embed a vector of `n` block values as the step profile constant on each
/// block [(i-1)/n, i/n), on a grid with `m` cells (`m` a multiple of `n`).
pub fn embed_step(v: &[f64], m: usize) -> Result<GridProfile> {
    let n = v.len();
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if m == 0 || m % n != 0 {
        return Err(Error::NotBlockAligned { cells: m, blocks: n });
    }
    let per = m / n;
    let mut values = Vec::with_capacity(m);
    for &x in v {
        values.extend(std::iter::repeat_n(x, per));
    }
    GridProfile::new(Grid::new(m)?, values)
}

/// Upper bound on the permutation-invariant L2 distance between two
/// profiles: the minimum of the plain L2 distance over the relabelings in
/// `search`. The true infimum ranges over all measure-preserving bijections
/// of the unit interval, which has no constructive parametrization; every
/// value reported here is therefore an upper bound.
pub fn perm_invariant_dist(
    p: &GridProfile,
    q: &GridProfile,
    search: PermutationSearch,
) -> Result<f64> {
    p.check_same_grid(q)?;
    match search {
        PermutationSearch::Identity => p.l2_dist(q),
        PermutationSearch::SortValues => {
            let mut a = p.values.clone();
            let mut b = q.values.clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let sq = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
            Ok((sq / a.len() as f64).sqrt())
        }
        PermutationSearch::ExhaustiveBlocks(blocks) => {
            if blocks > 9 {
                return Err(Error::TooManyBlocks(blocks));
            }
            let a = block_values(p, blocks)?;
            let b = block_values(q, blocks)?;
            let mut best = f64::INFINITY;
            let mut perm: Vec<usize> = (0..blocks).collect();
            heap_permutations(&mut perm, &mut |perm| {
                let sq = a
                    .iter()
                    .zip(perm)
                    .map(|(x, &pi)| (x - b[pi]) * (x - b[pi]))
                    .sum::<f64>();
                best = best.min(sq / blocks as f64);
            });
            Ok(best.sqrt())
        }
    }
}

/// Block values of a profile that must be exactly block-constant.
fn block_values(p: &GridProfile, blocks: usize) -> Result<Vec<f64>> {
    if blocks == 0 || p.len() % blocks != 0 {
        return Err(Error::NotBlockAligned {
            cells: p.len(),
            blocks,
        });
    }
    let per = p.len() / blocks;
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let chunk = &p.values[b * per..(b + 1) * per];
        if chunk.iter().any(|v| *v != chunk[0]) {
            return Err(Error::NotBlockConstant(blocks));
        }
        out.push(chunk[0]);
    }
    Ok(out)
}

/// Heap's algorithm; calls `f` on every permutation of `items`.
fn heap_permutations<T>(items: &mut [T], f: &mut impl FnMut(&[T])) {
    fn inner<T>(k: usize, items: &mut [T], f: &mut impl FnMut(&[T])) {
        if k <= 1 {
            f(items);
            return;
        }
        for i in 0..k {
            inner(k - 1, items, f);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    inner(items.len(), items, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn grid_midpoints() {
        assert!(Grid::new(0).is_err());
        assert_eq!(Grid::new(1).unwrap().points(), vec![0.5]);
        assert_eq!(Grid::new(2).unwrap().points(), vec![0.25, 0.75]);
        assert_eq!(
            Grid::new(4).unwrap().points(),
            vec![0.125, 0.375, 0.625, 0.875]
        );
    }

    #[test]
    fn integrate_examples() {
        let one = GridProfile::constant(Grid::new(8).unwrap(), 1.0);
        assert_eq!(one.integrate(), 1.0);

        let half = GridProfile::new(Grid::new(2).unwrap(), vec![0.0, 1.0]).unwrap();
        assert_eq!(half.integrate(), 0.5);

        // Midpoint rule is exact for affine functions.
        let ramp = GridProfile::from_fn(Grid::new(1000).unwrap(), |x| x).unwrap();
        assert!((ramp.integrate() - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn norms_and_distances() {
        let grid = Grid::new(1000).unwrap();
        let one = GridProfile::constant(grid.clone(), 1.0);
        assert!((one.l2_norm() - 1.0).abs() < 1e-15);
        assert_eq!(one.l2_dist(&one).unwrap(), 0.0);

        let ramp = GridProfile::from_fn(grid, |x| x).unwrap();
        assert!((ramp.l2_norm() - 1.0 / 3.0f64.sqrt()).abs() <= 1e-6);

        let other = GridProfile::constant(Grid::new(999).unwrap(), 1.0);
        assert!(one.l2_dist(&other).is_err());
    }

    #[test]
    fn embed_and_average() {
        let p = embed_step(&[1.0, 2.0], 4).unwrap();
        assert_eq!(p.values(), &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(p.block_average(2).unwrap(), vec![1.0, 2.0]);

        let c = embed_step(&[7.5], 16).unwrap();
        assert_eq!(c.values(), vec![7.5; 16].as_slice());

        let p = embed_step(&[3.0, 1.0, 2.0], 6).unwrap();
        assert_eq!(p.values(), &[3.0, 3.0, 1.0, 1.0, 2.0, 2.0]);

        let five = GridProfile::constant(Grid::new(9).unwrap(), 5.0);
        assert_eq!(five.block_average(3).unwrap(), vec![5.0; 3]);

        let ramp = GridProfile::from_fn(Grid::new(1000).unwrap(), |x| x).unwrap();
        let means = ramp.block_average(2).unwrap();
        assert!((means[0] - 0.25).abs() <= 1e-12);
        assert!((means[1] - 0.75).abs() <= 1e-12);

        assert!(embed_step(&[1.0, 2.0], 5).is_err());
        assert!(ramp.block_average(3).is_err());
    }

    #[test]
    fn perm_dist_examples() {
        let p = embed_step(&[1.0, 2.0], 8).unwrap();
        let q = embed_step(&[2.0, 1.0], 8).unwrap();
        for mode in [
            PermutationSearch::Identity,
            PermutationSearch::SortValues,
            PermutationSearch::ExhaustiveBlocks(2),
        ] {
            assert_eq!(perm_invariant_dist(&p, &p, mode).unwrap(), 0.0);
        }
        assert_eq!(
            perm_invariant_dist(&p, &q, PermutationSearch::SortValues).unwrap(),
            0.0
        );

        // Oracle: enumerate all 6 block permutations by hand. The cyclic
        // shift (2,0,1) -> (0,1,2) reaches distance zero.
        let p = embed_step(&[0.0, 1.0, 2.0], 6).unwrap();
        let q = embed_step(&[2.0, 0.0, 1.0], 6).unwrap();
        assert_eq!(
            perm_invariant_dist(&p, &q, PermutationSearch::ExhaustiveBlocks(3)).unwrap(),
            0.0
        );
        assert!(perm_invariant_dist(&p, &q, PermutationSearch::Identity).unwrap() > 1.0);
    }

    #[test]
    fn perm_dist_rejects_bad_inputs() {
        let p = embed_step(&[0.0; 10], 10).unwrap();
        assert!(matches!(
            perm_invariant_dist(&p, &p, PermutationSearch::ExhaustiveBlocks(10)),
            Err(Error::TooManyBlocks(10))
        ));
        let ramp = GridProfile::from_fn(Grid::new(10).unwrap(), |x| x).unwrap();
        assert!(perm_invariant_dist(&ramp, &p, PermutationSearch::ExhaustiveBlocks(5)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = GridProfile::from_fn(Grid::new(17).unwrap(), |x| (13.0 * x).sin() / 3.0).unwrap();
        let csv = p.to_csv_string();
        assert!(csv.starts_with("x,value\n"));
        let q = GridProfile::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn triangle_inequality_random_triples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let grid = Grid::new(64).unwrap();
        for _ in 0..200 {
            let mut draw = || {
                let v: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
                GridProfile::new(grid.clone(), v).unwrap()
            };
            let (a, b, c) = (draw(), draw(), draw());
            let ab = a.l2_dist(&b).unwrap();
            let bc = b.l2_dist(&c).unwrap();
            let ac = a.l2_dist(&c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn embed_average_adjunction(v in proptest::collection::vec(-100.0f64..100.0, 1..12),
                                    mult in 1usize..6) {
            let m = v.len() * mult;
            let p = embed_step(&v, m).unwrap();
            prop_assert_eq!(p.block_average(v.len()).unwrap(), v);
        }

        #[test]
        fn perm_dist_never_exceeds_l2(a in proptest::collection::vec(-10.0f64..10.0, 6),
                                      b in proptest::collection::vec(-10.0f64..10.0, 6)) {
            let p = embed_step(&a, 6).unwrap();
            let q = embed_step(&b, 6).unwrap();
            let plain = p.l2_dist(&q).unwrap();
            for mode in [PermutationSearch::Identity, PermutationSearch::SortValues,
                         PermutationSearch::ExhaustiveBlocks(6)] {
                prop_assert!(perm_invariant_dist(&p, &q, mode).unwrap() <= plain + 1e-12);
            }
        }

        #[test]
        fn perm_dist_zero_on_block_permutations(a in proptest::collection::vec(-10.0f64..10.0, 5),
                                                shift in 0usize..5) {
            let rotated: Vec<f64> = (0..5).map(|i| a[(i + shift) % 5]).collect();
            let p = embed_step(&a, 10).unwrap();
            let q = embed_step(&rotated, 10).unwrap();
            let d = perm_invariant_dist(&p, &q, PermutationSearch::ExhaustiveBlocks(5)).unwrap();
            prop_assert!(d <= 1e-12);
        }
    }
}
