//! Serial / data-parallel execution switch.
//!
//! Every batch loop in the crate (trajectories, shot bases, moment
//! accumulation, sparse mat-vec rows) goes through these helpers. Work is
//! split into chunks whose boundaries depend only on the input length, and
//! chunk results are combined in index order, so the output is bit-identical
//! for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent work items is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Uses the rayon pool when the `parallel` feature is compiled in,
    /// otherwise identical to `Serial`.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `f(0..n)` collected in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fixed-size chunked fold followed by an in-order reduction.
    ///
    /// `fold` consumes items `[start, end)` of a chunk into a fresh
    /// accumulator; `merge` adds a later chunk into an earlier one.
    pub fn chunked_reduce<A, I, F, M>(self, n: usize, chunk: usize, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut A, usize) + Sync + Send,
        M: Fn(&mut A, A),
    {
        let chunk = chunk.max(1);
        let n_chunks = n.div_ceil(chunk);
        let partials = self.map(n_chunks, |c| {
            let mut acc = init();
            for i in c * chunk..((c + 1) * chunk).min(n) {
                fold(&mut acc, i);
            }
            acc
        });
        let mut iter = partials.into_iter();
        let mut total = iter.next().unwrap_or_else(&init);
        for p in iter {
            merge(&mut total, p);
        }
        total
    }

    /// Apply `f(row, out)` to every element of `out` (row-parallel kernels).
    pub fn for_each_row<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_iter_mut().with_min_len(1024).enumerate().for_each(|(i, o)| f(i, o));
            return;
        }
        out.iter_mut().enumerate().for_each(|(i, o)| f(i, o));
    }
}

/// Run `f` on a pool with `workers` threads (global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => return pool.install(f),
            Err(e) => log::warn!("could not build a {n}-thread pool ({e}); using the global pool"),
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let f = |acc: &mut f64, i: usize| *acc += (i as f64).sqrt().sin();
        let a = Execution::Serial.chunked_reduce(10_001, 64, || 0.0, f, |a, b| *a += b);
        let b = Execution::Parallel.chunked_reduce(10_001, 64, || 0.0, f, |a, b| *a += b);
        assert_eq!(a.to_bits(), b.to_bits());
        let c = with_workers(Some(3), || {
            Execution::Parallel.chunked_reduce(10_001, 64, || 0.0, f, |a, b| *a += b)
        });
        assert_eq!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn map_keeps_order() {
        let v = Execution::Parallel.map(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }
}
