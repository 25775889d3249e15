use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, SampleRecord};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<SampleRecord>,
    pub test: Vec<SampleRecord>,
    pub split_seed: u64,
    pub train_fraction: f64,
}

/// Seeded shuffle into `ceil(n * train_fraction)` training records and the
/// remainder for testing. Both sides keep at least one record.
pub fn split(records: &[SampleRecord], train_fraction: f64, seed: u64) -> Result<DataSplit, DatasetError> {
    if records.len() < 2 {
        return Err(DatasetError::TooFew {
            needed: 2,
            got: records.len(),
        });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = records.len();
    let n_train = ((n as f64 * train_fraction).ceil() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect();
    Ok(DataSplit {
        train: pick(&order[..n_train]),
        test: pick(&order[n_train..]),
        split_seed: seed,
        train_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(n: usize) -> Vec<SampleRecord> {
        (0..n)
            .map(|i| SampleRecord {
                x: vec![i as f64],
                f1: i as f64,
                f2: 0.0,
                f3: 0.0,
            })
            .collect()
    }

    #[test]
    fn sizes() {
        let s = split(&records(10), 0.8, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let s = split(&records(7), 0.5, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (4, 3));
    }

    #[test]
    fn seeded_and_partitioning() {
        let rs = records(25);
        let a = split(&rs, 0.8, 42).unwrap();
        assert_eq!(a, split(&rs, 0.8, 42).unwrap());
        assert_ne!(a.train, split(&rs, 0.8, 43).unwrap().train);
        let mut ids: Vec<u64> = a.train.iter().chain(&a.test).map(|r| r.f1 as u64).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn preconditions() {
        assert!(matches!(split(&records(1), 0.5, 0), Err(DatasetError::TooFew { .. })));
        assert!(split(&records(4), 0.0, 0).is_err());
        assert!(split(&records(4), 1.0, 0).is_err());
        // test side is never empty
        let s = split(&records(2), 0.99, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
    }
}
