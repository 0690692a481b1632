//! Reductions whose result does not depend on the thread count.

/// Fixed block length for parallel reductions. Each block is summed in
/// order and the block totals are combined in order, so the rounding is the
/// same however the blocks are scheduled.
const BLOCK: usize = 4096;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

fn block_total<T>(block: &[T], f: &(impl Fn(&T) -> f64 + Sync)) -> f64 {
    block.iter().map(f).collect::<KahanSum>().total()
}

/// Compensated `Σ f(item)` evaluated in fixed blocks.
pub fn det_sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if items.len() >= 4 * BLOCK {
            let partial: Vec<f64> = items
                .par_chunks(BLOCK)
                .map(|block| block_total(block, &f))
                .collect();
            return partial.into_iter().collect::<KahanSum>().total();
        }
    }
    items
        .chunks(BLOCK)
        .map(|block| block_total(block, &f))
        .collect::<KahanSum>()
        .total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0e16, 1.0, -1.0e16];
        values.extend(std::iter::repeat_n(1.0, 10));
        assert_eq!(values.iter().copied().collect::<KahanSum>().total(), 11.0);
    }

    #[test]
    fn det_sum_matches_plain_sum() {
        let items: Vec<f64> = (0..100_000).map(|i| (i as f64).sqrt()).collect();
        let plain: f64 = items.iter().sum();
        let det = det_sum(&items, |&x| x);
        assert!((plain - det).abs() / plain < 1e-12);
    }
}
