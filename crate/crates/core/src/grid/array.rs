use rayon::prelude::*;

/// Ghost-layer width on every side of every lattice.
pub const GHOST: usize = 2;
const G: isize = GHOST as isize;

/// Deterministic parallel sum of `f` over the index box `0..dims`, with the
/// same row decomposition as [`Array3::par_sum`].
pub fn par_sum_box<F>(dims: [usize; 3], f: F) -> f64
where
    F: Fn([usize; 3]) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..dims[1] * dims[2])
        .into_par_iter()
        .map(|r| {
            let (j, k) = (r % dims[1], r / dims[1]);
            (0..dims[0]).map(|i| f([i, j, k])).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// Dense 3-D lattice with [`GHOST`] padding cells on each side.
///
/// Axis 0 is contiguous. Rows (fixed axis-1 and axis-2 index) are the unit of
/// parallel work; reductions sum per-row partials in row order so results do
/// not depend on the thread count.
#[derive(Clone, Debug, PartialEq)]
pub struct Array3<T> {
    n: [usize; 3],
    s1: usize,
    s2: usize,
    data: Vec<T>,
}

impl<T: Copy + Send + Sync> Array3<T> {
    pub fn new(n: [usize; 3], fill: T) -> Self {
        let s1 = n[0] + 2 * GHOST;
        let s2 = s1 * (n[1] + 2 * GHOST);
        Self {
            n,
            s1,
            s2,
            data: vec![fill; s2 * (n[2] + 2 * GHOST)],
        }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    /// Memory strides along the three axes.
    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [1, self.s1, self.s2]
    }

    #[inline]
    pub fn index(&self, i: isize, j: isize, k: isize) -> usize {
        debug_assert!(i >= -G && i < self.n[0] as isize + G);
        debug_assert!(j >= -G && j < self.n[1] as isize + G);
        debug_assert!(k >= -G && k < self.n[2] as isize + G);
        (i + G) as usize + (j + G) as usize * self.s1 + (k + G) as usize * self.s2
    }

    #[inline]
    pub fn idx(&self, p: [usize; 3]) -> usize {
        (p[0] + GHOST) + (p[1] + GHOST) * self.s1 + (p[2] + GHOST) * self.s2
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize, k: isize) -> T {
        self.data[self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, k: isize, v: T) {
        let ix = self.index(i, j, k);
        self.data[ix] = v;
    }

    #[inline]
    pub fn at(&self, p: [usize; 3]) -> T {
        self.data[self.idx(p)]
    }

    #[inline]
    pub fn at_mut(&mut self, p: [usize; 3]) -> &mut T {
        let ix = self.idx(p);
        &mut self.data[ix]
    }

    #[inline]
    pub fn raw(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn raw_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len_interior(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Interior indices in memory order.
    pub fn interior(&self) -> impl Iterator<Item = [usize; 3]> {
        let n = self.n;
        (0..n[2]).flat_map(move |k| (0..n[1]).flat_map(move |j| (0..n[0]).map(move |i| [i, j, k])))
    }

    /// Overwrites every interior value with `f(index)`, in parallel over rows.
    pub fn par_fill<F>(&mut self, f: F)
    where
        F: Fn([usize; 3]) -> T + Sync,
    {
        let n = self.n;
        let rows_per_plane = n[1] + 2 * GHOST;
        self.data
            .par_chunks_mut(self.s1)
            .enumerate()
            .for_each(|(r, row)| {
                let jp = r % rows_per_plane;
                let kp = r / rows_per_plane;
                if jp < GHOST || jp >= n[1] + GHOST || kp < GHOST || kp >= n[2] + GHOST {
                    return;
                }
                let (j, k) = (jp - GHOST, kp - GHOST);
                for i in 0..n[0] {
                    row[i + GHOST] = f([i, j, k]);
                }
            });
    }

    /// Updates every interior value in place with `f(index, old)`.
    pub fn par_update<F>(&mut self, f: F)
    where
        F: Fn([usize; 3], T) -> T + Sync,
    {
        let n = self.n;
        let rows_per_plane = n[1] + 2 * GHOST;
        self.data
            .par_chunks_mut(self.s1)
            .enumerate()
            .for_each(|(r, row)| {
                let jp = r % rows_per_plane;
                let kp = r / rows_per_plane;
                if jp < GHOST || jp >= n[1] + GHOST || kp < GHOST || kp >= n[2] + GHOST {
                    return;
                }
                let (j, k) = (jp - GHOST, kp - GHOST);
                for i in 0..n[0] {
                    row[i + GHOST] = f([i, j, k], row[i + GHOST]);
                }
            });
    }

    /// Deterministic parallel sum of `f(index, value)` over the interior.
    pub fn par_sum<F>(&self, f: F) -> f64
    where
        F: Fn([usize; 3], T) -> f64 + Sync,
    {
        let n = self.n;
        let partials: Vec<f64> = (0..n[1] * n[2])
            .into_par_iter()
            .map(|r| {
                let (j, k) = (r % n[1], r / n[1]);
                let base = self.idx([0, j, k]);
                let mut acc = 0.0;
                for i in 0..n[0] {
                    acc += f([i, j, k], self.data[base + i]);
                }
                acc
            })
            .collect();
        partials.iter().sum()
    }

    /// Deterministic parallel fold with an associative, commutative `combine`
    /// (used for minima and maxima).
    pub fn par_fold<A, F, C>(&self, init: A, f: F, combine: C) -> A
    where
        A: Copy + Send + Sync,
        F: Fn(A, [usize; 3], T) -> A + Sync,
        C: Fn(A, A) -> A + Sync,
    {
        let n = self.n;
        let partials: Vec<A> = (0..n[1] * n[2])
            .into_par_iter()
            .map(|r| {
                let (j, k) = (r % n[1], r / n[1]);
                let base = self.idx([0, j, k]);
                let mut acc = init;
                for i in 0..n[0] {
                    acc = f(acc, [i, j, k], self.data[base + i]);
                }
                acc
            })
            .collect();
        partials.into_iter().fold(init, combine)
    }

    /// Copies the interior of `other` (same dims) into `self`.
    pub fn copy_interior_from(&mut self, other: &Array3<T>) {
        assert_eq!(self.n, other.n);
        self.data.copy_from_slice(&other.data);
    }
}

impl Array3<f64> {
    /// Calls `f(raw_index, &mut value)` on every interior value in parallel
    /// rows and returns the row-ordered sum of its results. The raw index
    /// addresses [`Array3::raw`] of any lattice with the same dims, which is
    /// what the fused solver kernels rely on.
    pub fn par_sweep<F>(&mut self, f: F) -> f64
    where
        F: Fn(usize, &mut f64) -> f64 + Sync,
    {
        let n = self.n;
        let s1 = self.s1;
        let rows_per_plane = n[1] + 2 * GHOST;
        let partials: Vec<f64> = self
            .data
            .par_chunks_mut(s1)
            .enumerate()
            .map(|(r, row)| {
                let jp = r % rows_per_plane;
                let kp = r / rows_per_plane;
                if jp < GHOST || jp >= n[1] + GHOST || kp < GHOST || kp >= n[2] + GHOST {
                    return 0.0;
                }
                let base = r * s1;
                let mut acc = 0.0;
                for i in GHOST..n[0] + GHOST {
                    acc += f(base + i, &mut row[i]);
                }
                acc
            })
            .collect();
        partials.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.par_fold(0.0, |m, _, v| m.max(v.abs()), f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.par_sum(|_, v| v)
    }

    pub fn dot(&self, other: &Array3<f64>) -> f64 {
        self.par_sum(|p, v| v * other.at(p))
    }

    /// `self += alpha * x` over the interior.
    pub fn axpy(&mut self, alpha: f64, x: &Array3<f64>) {
        self.par_update(|p, v| v + alpha * x.at(p));
    }
}
