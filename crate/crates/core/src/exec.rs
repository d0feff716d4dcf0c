//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the indexed maps run on the rayon
//! pool; without it they fall back to a plain loop. Results are always
//! returned in index order, so reductions over them are deterministic
//! regardless of thread count.

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    seq_map(n, f)
}

/// Sequential counterpart of [`par_map`].
pub fn seq_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Index of the largest value; ties go to the smaller index. NaN never wins.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Index of the smallest value; ties go to the smaller index.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    argmax(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let a = par_map(1000, |i| (i as f64).sin());
        let b = seq_map(1000, |i| (i as f64).sin());
        assert_eq!(a, b);
    }

    #[test]
    fn ties_break_to_smaller_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmin(&[2.0, 0.5, 0.5]), Some(1));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[f64::NAN, 1.0]), Some(1));
    }
}
