use crate::error::arg_err;
use crate::so3::Mat3;
use crate::Result;

/// A fully symmetric `k`-way Cartesian tensor, stored flat with the first
/// index most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTensor {
    pub order: usize,
    pub entries: Vec<f64>,
}

/// `T^(k) = (1/m) sum_i r_i^{⊗k}`.
pub fn moment_tensor(k: usize, vectors: &[[f64; 3]]) -> Result<MomentTensor> {
    if k == 0 {
        return arg_err("moment order must be at least 1");
    }
    if vectors.is_empty() {
        return arg_err("moment tensor of an empty set");
    }
    let n = 3usize.pow(k as u32);
    // Factors are multiplied in sorted index order so that entries related
    // by an index permutation are bit-identical.
    let sorted: Vec<Vec<usize>> = (0..n)
        .map(|flat| {
            let mut idx: Vec<usize> = (0..k)
                .map(|a| (flat / 3usize.pow((k - 1 - a) as u32)) % 3)
                .collect();
            idx.sort_unstable();
            idx
        })
        .collect();
    let mut entries = vec![0.0; n];
    for v in vectors {
        for (e, idx) in entries.iter_mut().zip(&sorted) {
            *e += idx.iter().fold(1.0, |p, &i| p * v[i]);
        }
    }
    let m = vectors.len() as f64;
    entries.iter_mut().for_each(|e| *e /= m);
    Ok(MomentTensor { order: k, entries })
}

impl MomentTensor {
    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * 3 + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order, "index arity");
        self.entries[self.flat_index(idx)]
    }

    /// Applies `rotation` along every index.
    pub fn rotated(&self, rotation: &Mat3) -> MomentTensor {
        let mut data = self.entries.clone();
        let n = data.len();
        for axis in 0..self.order {
            let stride = 3usize.pow((self.order - 1 - axis) as u32);
            let mut next = vec![0.0; n];
            for (flat, out) in next.iter_mut().enumerate() {
                let i = (flat / stride) % 3;
                let base = flat - i * stride;
                *out = (0..3)
                    .map(|j| rotation[i][j] * data[base + j * stride])
                    .sum();
            }
            data = next;
        }
        MomentTensor {
            order: self.order,
            entries: data,
        }
    }

    /// Largest difference between an entry and any entry with permuted
    /// indices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for flat in 0..self.entries.len() {
            let mut idx: Vec<usize> = (0..self.order)
                .map(|a| (flat / 3usize.pow((self.order - 1 - a) as u32)) % 3)
                .collect();
            let base = self.entries[flat];
            for_each_permutation(&mut idx, &mut |p| {
                worst = worst.max((self.entries[self.flat_index(p)] - base).abs());
            });
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &MomentTensor) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn for_each_permutation(items: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
    fn heap(k: usize, items: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            visit(items);
            return;
        }
        for i in 0..k {
            heap(k - 1, items, visit);
            let swap = if k.is_multiple_of(2) { i } else { 0 };
            items.swap(swap, k - 1);
        }
    }
    let n = items.len();
    heap(n, items, visit);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_is_the_mean() {
        let t = moment_tensor(1, &[[1.0, -2.0, 0.5]]).unwrap();
        assert_eq!(t.entries, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn second_order_of_two_axes() {
        let t = moment_tensor(2, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(t.entries, vec![0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(moment_tensor(0, &[[1.0, 0.0, 0.0]]).is_err());
        assert!(moment_tensor(2, &[]).is_err());
    }
}
