//! Deterministic parallel reductions.
//!
//! Work is split into chunks of a fixed size that does not depend on the
//! number of worker threads. Each chunk is reduced sequentially and the chunk
//! partials are combined in chunk order, so results are bitwise identical for
//! any thread count.

use rayon::prelude::*;

/// Items per reduction chunk.
pub const CHUNK: usize = 2048;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of `f(item)` over `items`.
pub fn par_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let partials: Vec<f64> =
        items.par_chunks(CHUNK).map(|chunk| chunk.iter().map(&f).collect::<CompensatedSum>().value()).collect();
    partials.into_iter().collect::<CompensatedSum>().value()
}

/// Scatter-add reduction into a vector of length `len`. `f` adds the
/// contribution of one item into the chunk-local buffer.
pub fn par_scatter<T, F>(items: &[T], len: usize, f: F) -> Vec<f64>
where
    T: Sync,
    F: Fn(&T, &mut [f64]) + Sync,
{
    let partials: Vec<Vec<f64>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut buf = vec![0.0; len];
            for item in chunk {
                f(item, &mut buf);
            }
            buf
        })
        .collect();
    let mut out = vec![0.0; len];
    for buf in partials {
        for (o, b) in out.iter_mut().zip(buf) {
            *o += b;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        let s: CompensatedSum = xs.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn par_sum_independent_of_pool_size() {
        let xs: Vec<f64> = (0..50_000).map(|i| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64)).collect();
        let run =
            |threads: usize| {
                rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                    (par_sum(&xs, |x| x * x), par_scatter(&xs, 3, |x, b| b[(x.to_bits() % 3) as usize] += x))
                })
            };
        let (a1, v1) = run(1);
        let (a4, v4) = run(4);
        assert_eq!(a1.to_bits(), a4.to_bits());
        assert_eq!(v1, v4);
    }
}
