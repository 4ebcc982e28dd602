//! Synchronous mean-shift updates.
//!
//! Both updates replace a query point `y` by the kernel-weighted average
//!
//! ```text
//! y' = sum_j f(|x_j - y|) w_j x_j / sum_k f(|x_k - y|) w_k
//! ```
//!
//! over a source set `x`. For the blurring update the source is the current
//! snapshot of the points themselves; for the nonblurring update it is the
//! fixed original data. Every query is evaluated against the same snapshot, so
//! queries are independent and are processed in parallel. The per-query
//! summation order is fixed (sixteen interleaved partial sums over the source
//! index, added up in a fixed tree), which makes results bitwise independent
//! of the number of workers.

use rayon::prelude::*;

use super::points::PointSet;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

const LANES: usize = 16;
const BLOCK: usize = 256;

/// Source points transposed to one contiguous column per dimension, padded
/// to a multiple of `LANES` with zero-weight entries.
struct Columns {
    dim: usize,
    padded: usize,
    cols: Vec<f64>,
    weights: Vec<f64>,
}

impl Columns {
    fn new(points: &PointSet) -> Self {
        let n = points.len();
        let dim = points.dim();
        let padded = n.div_ceil(LANES) * LANES;
        let mut cols = vec![0.0; dim * padded];
        for (j, row) in points.rows().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                cols[k * padded + j] = x;
            }
        }
        let mut weights = vec![0.0; padded];
        weights[..n].copy_from_slice(points.weights());
        Self { dim, padded, cols, weights }
    }

    fn col(&self, k: usize) -> &[f64] {
        &self.cols[k * self.padded..(k + 1) * self.padded]
    }

    /// Writes the weighted average for `query` into `out`; returns the
    /// denominator `sum_k f w_k`.
    ///
    /// The wider instruction sets only change how many lanes the compiler
    /// processes at once. No fused multiply-add is enabled, so every path
    /// produces the same bits.
    fn weighted_mean(&self, kernel: &KernelSpec, query: &[f64], out: &mut [f64]) -> f64 {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx512f") {
                // SAFETY: the feature was detected at runtime.
                return unsafe { self.weighted_mean_avx512(kernel, query, out) };
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the feature was detected at runtime.
                return unsafe { self.weighted_mean_avx2(kernel, query, out) };
            }
        }
        self.weighted_mean_portable(kernel, query, out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    unsafe fn weighted_mean_avx512(&self, kernel: &KernelSpec, query: &[f64], out: &mut [f64]) -> f64 {
        self.weighted_mean_portable(kernel, query, out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn weighted_mean_avx2(&self, kernel: &KernelSpec, query: &[f64], out: &mut [f64]) -> f64 {
        self.weighted_mean_portable(kernel, query, out)
    }

    #[inline(always)]
    fn weighted_mean_portable(&self, kernel: &KernelSpec, query: &[f64], out: &mut [f64]) -> f64 {
        let mut den = [0.0; LANES];
        let mut num = vec![[0.0; LANES]; self.dim];
        let mut d2 = [0.0; BLOCK];
        let mut fw = [0.0; BLOCK];

        let mut start = 0;
        while start < self.padded {
            let len = BLOCK.min(self.padded - start);
            let d2 = &mut d2[..len];
            let fw = &mut fw[..len];

            d2.fill(0.0);
            for (k, &q) in query.iter().enumerate() {
                for (d, &c) in d2.iter_mut().zip(&self.col(k)[start..start + len]) {
                    let t = c - q;
                    *d += t * t;
                }
            }
            kernel.fill_from_squared(d2, fw);
            for (f, &w) in fw.iter_mut().zip(&self.weights[start..start + len]) {
                *f *= w;
            }

            for chunk in fw.chunks_exact(LANES) {
                for l in 0..LANES {
                    den[l] += chunk[l];
                }
            }
            for (k, acc) in num.iter_mut().enumerate() {
                let col = &self.col(k)[start..start + len];
                for (f, c) in fw.chunks_exact(LANES).zip(col.chunks_exact(LANES)) {
                    for l in 0..LANES {
                        acc[l] += f[l] * c[l];
                    }
                }
            }
            start += len;
        }

        let total = combine(den);
        for (o, acc) in out.iter_mut().zip(&num) {
            *o = combine(*acc) / total;
        }
        total
    }
}

/// One blurring update: every point moves to the kernel-weighted average of
/// the current snapshot. Weights are carried over unchanged.
///
/// The self term contributes `f(0) w_i = w_i > 0`, so the denominator never
/// vanishes.
pub fn blurring_step(points: &PointSet, kernel: &KernelSpec) -> PointSet {
    if rayon::current_num_threads() == 1 && points.len() >= 2 * TILE {
        if let Some(coords) = symmetric::blurring_coords(points, kernel) {
            return points.with_coords(coords);
        }
    }
    blurring_step_rows(points, kernel)
}

/// Row-parallel blurring update: each query is evaluated against the whole
/// snapshot independently.
fn blurring_step_rows(points: &PointSet, kernel: &KernelSpec) -> PointSet {
    let source = Columns::new(points);
    let dim = points.dim();
    let mut coords = vec![0.0; points.coords().len()];
    coords
        .par_chunks_mut(dim)
        .zip(points.coords().par_chunks(dim))
        .for_each(|(out, query)| {
            source.weighted_mean(kernel, query, out);
        });
    points.with_coords(coords)
}

const TILE: usize = 128;
const _: () = assert!(TILE.is_multiple_of(LANES));

/// Pairwise sum of the lane accumulators in a fixed tree order.
#[inline(always)]
fn combine(mut acc: [f64; LANES]) -> f64 {
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] = acc[2 * l] + acc[2 * l + 1];
        }
    }
    acc[0]
}

/// Single-threaded blurring update that evaluates each kernel value once and
/// uses it for both points of the pair.
///
/// Tile pairs `(a, b)` with `b >= a` are visited in row-major order and rows
/// inside a tile in increasing order. Every point therefore receives its
/// contributions in increasing source index, spread over the same lanes
/// (`j mod LANES`) as the row-parallel path. Since `(x - y)^2 == (y - x)^2`
/// exactly, the two paths agree bit for bit. Masked-out and padding entries
/// only ever add `+0.0`, which leaves a partial sum unchanged.
mod symmetric {
    use super::{combine, KernelSpec, PointSet, LANES, TILE};
    use crate::kernel::SquaredFill;

    /// Returns `None` for dimensions without a specialized kernel.
    pub(super) fn blurring_coords(points: &PointSet, kernel: &KernelSpec) -> Option<Vec<f64>> {
        Some(match points.dim() {
            1 => dispatch::<1>(points, kernel),
            2 => dispatch::<2>(points, kernel),
            3 => dispatch::<3>(points, kernel),
            4 => dispatch::<4>(points, kernel),
            _ => return None,
        })
    }

    fn dispatch<const D: usize>(points: &PointSet, kernel: &KernelSpec) -> Vec<f64> {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx512f") {
                // SAFETY: the feature was detected at runtime.
                return unsafe { coords_avx512::<D>(points, kernel) };
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the feature was detected at runtime.
                return unsafe { coords_avx2::<D>(points, kernel) };
            }
        }
        coords_portable::<D>(points, kernel)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    unsafe fn coords_avx512<const D: usize>(points: &PointSet, kernel: &KernelSpec) -> Vec<f64> {
        coords_portable::<D>(points, kernel)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn coords_avx2<const D: usize>(points: &PointSet, kernel: &KernelSpec) -> Vec<f64> {
        coords_portable::<D>(points, kernel)
    }

    /// Lane-major partial sums: `den[l][j]`, `num[k][l][j]`.
    struct Sums<const D: usize> {
        np: usize,
        den: Vec<f64>,
        num: Vec<f64>,
    }

    impl<const D: usize> Sums<D> {
        #[inline(always)]
        fn den_at(&mut self, lane: usize, start: usize) -> &mut [f64; LANES] {
            let at = lane * self.np + start;
            (&mut self.den[at..at + LANES]).try_into().unwrap()
        }

        #[inline(always)]
        fn num_at(&mut self, k: usize, lane: usize, start: usize) -> &mut [f64; LANES] {
            let at = (k * LANES + lane) * self.np + start;
            (&mut self.num[at..at + LANES]).try_into().unwrap()
        }
    }

    #[inline(always)]
    fn coords_portable<const D: usize>(points: &PointSet, kernel: &KernelSpec) -> Vec<f64> {
        // one copy of the loop per kernel family keeps the family match out of it
        match kernel.squared_fill() {
            SquaredFill::Gaussian { scale, cutoff_sq } => accumulate::<D, _>(points, Gaussian { scale, cutoff_sq }),
            fill => accumulate::<D, _>(points, fill),
        }
    }

    trait Fill {
        fn fill(&self, dist_sq: &[f64], out: &mut [f64]);
    }

    struct Gaussian {
        scale: f64,
        cutoff_sq: f64,
    }

    impl Fill for Gaussian {
        #[inline(always)]
        fn fill(&self, dist_sq: &[f64], out: &mut [f64]) {
            SquaredFill::Gaussian { scale: self.scale, cutoff_sq: self.cutoff_sq }.fill(dist_sq, out);
        }
    }

    impl Fill for SquaredFill<'_> {
        #[inline(always)]
        fn fill(&self, dist_sq: &[f64], out: &mut [f64]) {
            SquaredFill::fill(self, dist_sq, out);
        }
    }

    #[inline(always)]
    #[allow(clippy::needless_range_loop)]
    fn accumulate<const D: usize, F: Fill>(points: &PointSet, fill: F) -> Vec<f64> {
        let n = points.len();
        let np = n.div_ceil(LANES) * LANES;
        let mut cols = vec![0.0; D * np];
        for (j, row) in points.rows().enumerate() {
            for k in 0..D {
                cols[k * np + j] = row[k];
            }
        }
        let mut w = vec![0.0; np];
        w[..n].copy_from_slice(points.weights());
        let mut sums = Sums::<D> { np, den: vec![0.0; LANES * np], num: vec![0.0; D * LANES * np] };

        let tiles = np.div_ceil(TILE);
        for a in 0..tiles {
            let a_end = ((a + 1) * TILE).min(n);
            for b in a..tiles {
                let b_end = ((b + 1) * TILE).min(np);
                for i in a * TILE..a_end {
                    let xi: [f64; D] = std::array::from_fn(|k| cols[k * np + i]);
                    let li = i % LANES;
                    let mut rden = [0.0; LANES];
                    let mut rnum = [[0.0; LANES]; D];
                    for l in 0..LANES {
                        rden[l] = sums.den[l * np + i];
                        for k in 0..D {
                            rnum[k][l] = sums.num[(k * LANES + l) * np + i];
                        }
                    }

                    let first = if a == b { i - i % LANES } else { b * TILE };
                    for c in (first..b_end).step_by(LANES) {
                        let mut d2 = [0.0; LANES];
                        for k in 0..D {
                            let xc: &[f64; LANES] = cols[k * np + c..k * np + c + LANES].try_into().unwrap();
                            for l in 0..LANES {
                                let t = xc[l] - xi[k];
                                d2[l] += t * t;
                            }
                        }
                        let mut kv = [0.0; LANES];
                        fill.fill(&d2, &mut kv);

                        // row i takes f_ij w_j for j >= i; column j takes f_ij w_i for j > i
                        let wc: &[f64; LANES] = w[c..c + LANES].try_into().unwrap();
                        let mut fr = [0.0; LANES];
                        let mut fc = [0.0; LANES];
                        if a == b && c <= i {
                            for l in 0..LANES {
                                let j = c + l;
                                fr[l] = if j >= i { kv[l] * wc[l] } else { 0.0 };
                                fc[l] = if j > i { kv[l] * w[i] } else { 0.0 };
                            }
                        } else {
                            for l in 0..LANES {
                                fr[l] = kv[l] * wc[l];
                                fc[l] = kv[l] * w[i];
                            }
                        }

                        for l in 0..LANES {
                            rden[l] += fr[l];
                        }
                        let dcol = sums.den_at(li, c);
                        for l in 0..LANES {
                            dcol[l] += fc[l];
                        }
                        for k in 0..D {
                            let xc: &[f64; LANES] = cols[k * np + c..k * np + c + LANES].try_into().unwrap();
                            for l in 0..LANES {
                                rnum[k][l] += fr[l] * xc[l];
                            }
                            let ncol = sums.num_at(k, li, c);
                            for l in 0..LANES {
                                ncol[l] += fc[l] * xi[k];
                            }
                        }
                    }

                    for l in 0..LANES {
                        sums.den[l * np + i] = rden[l];
                        for k in 0..D {
                            sums.num[(k * LANES + l) * np + i] = rnum[k][l];
                        }
                    }
                }
            }
        }

        let gather = |v: &[f64], base: usize, i: usize| std::array::from_fn(|l| v[base + l * np + i]);
        let mut coords = vec![0.0; n * D];
        for i in 0..n {
            let total = combine(gather(&sums.den, 0, i));
            for k in 0..D {
                coords[i * D + k] = combine(gather(&sums.num, k * LANES * np, i)) / total;
            }
        }
        coords
    }
}

/// One nonblurring update: every center moves to the kernel-weighted average
/// of the fixed `data`. Center weights are carried over unchanged.
///
/// Fails with [`Error::IsolatedCenter`] when a center has no data point with
/// positive influence (possible with truncated kernels).
pub fn nonblurring_step(centers: &PointSet, data: &PointSet, kernel: &KernelSpec) -> Result<PointSet> {
    if centers.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: centers.dim() });
    }
    let source = Columns::new(data);
    let dim = centers.dim();
    let mut coords = vec![0.0; centers.coords().len()];
    let isolated = coords
        .par_chunks_mut(dim)
        .zip(centers.coords().par_chunks(dim))
        .enumerate()
        .filter_map(|(i, (out, query))| {
            let den = source.weighted_mean(kernel, query, out);
            (den == 0.0).then_some(i)
        })
        .min();
    match isolated {
        Some(index) => Err(Error::IsolatedCenter { index }),
        None => Ok(centers.with_coords(coords)),
    }
}
