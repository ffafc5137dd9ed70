use rand::Rng;

pub const DEFAULT_TABLE_SIZE: usize = 10_000_000;
pub const DEFAULT_POWER: f64 = 0.75;

/// Precomputed noise distribution: each index occupies a share of the table
/// proportional to `count^power`.
#[derive(Debug, Clone, Default)]
pub struct NegativeTable {
    table: Vec<u32>,
    distinct: usize,
}

impl NegativeTable {
    /// Table over `(index, count)` pairs with distinct indices. Entries with a
    /// zero count are ignored.
    pub fn new(items: impl IntoIterator<Item = (u32, u64)>, power: f64, size: usize) -> Self {
        let items: Vec<(u32, f64)> = items
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (i, (c as f64).powf(power)))
            .collect();
        if items.is_empty() || size == 0 {
            return NegativeTable {
                table: Vec::new(),
                distinct: 0,
            };
        }
        let total: f64 = items.iter().map(|&(_, w)| w).sum();
        let mut table = Vec::with_capacity(size);
        let mut i = 0;
        let mut cumulative = items[0].1 / total;
        let mut distinct = 0;
        let mut last = usize::MAX;
        for a in 0..size {
            if i != last {
                distinct += 1;
                last = i;
            }
            table.push(items[i].0);
            if (a + 1) as f64 / size as f64 > cumulative && i + 1 < items.len() {
                i += 1;
                cumulative += items[i].1 / total;
            }
        }
        NegativeTable { table, distinct }
    }

    /// Table over dense indices `0..counts.len()`.
    pub fn from_counts(counts: &[u64], power: f64, size: usize) -> Self {
        Self::new(
            counts.iter().enumerate().map(|(i, &c)| (i as u32, c)),
            power,
            size,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    /// Number of distinct indices present in the table.
    pub fn distinct(&self) -> usize {
        self.distinct
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.table[rng.random_range(0..self.table.len())]
    }

    /// Draw until the result differs from `exclude`. Returns `None` when the
    /// table cannot produce such a draw.
    #[inline]
    pub fn sample_excluding<R: Rng + ?Sized>(&self, exclude: u32, rng: &mut R) -> Option<u32> {
        if self.table.is_empty() || (self.distinct == 1 && self.table[0] == exclude) {
            return None;
        }
        loop {
            let s = self.sample(rng);
            if s != exclude {
                return Some(s);
            }
        }
    }
}
