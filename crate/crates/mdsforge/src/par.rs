//! Execution policy for the data-parallel sums.
//!
//! Work is split into a fixed list of items independent of the thread count,
//! each item is evaluated on its own, and the results are merged in index
//! order. Parallel and sequential runs therefore produce identical floats.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn name(&self) -> &'static str {
        match self {
            Exec::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Exec::Rayon => "rayon",
        }
    }

    /// Map `f` over `items`, keeping order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Rayon => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
        }
    }

    /// Map over `0..n`, keeping order.
    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Rayon => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }
}

/// Chunk boundaries for `0..n` with a fixed block size.
pub fn blocks(n: usize, block: usize) -> Vec<(usize, usize)> {
    let block = block.max(1);
    (0..n.div_ceil(block))
        .map(|b| (b * block, ((b + 1) * block).min(n)))
        .collect()
}

/// Sum of per-block partial sums in block order.
pub fn ordered_sum<T: Copy + std::ops::Add<Output = T>>(zero: T, parts: &[T]) -> T {
    parts.iter().fold(zero, |a, &b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_cover() {
        let b = blocks(10, 4);
        assert_eq!(b, vec![(0, 4), (4, 8), (8, 10)]);
        assert!(blocks(0, 4).is_empty());
    }

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a: f64 = Exec::Sequential.map_range(1000, f).iter().sum();
        let b: f64 = Exec::default().map_range(1000, f).iter().sum();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
