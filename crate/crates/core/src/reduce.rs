//! Fixed-shape pairwise reduction.
//!
//! Block sums are combined along a binary tree whose shape depends only on
//! the number of leaves, so floating-point results are identical whether the
//! two halves of each node run sequentially or on different threads.

/// Runs two closures, possibly in parallel.
pub trait Joiner: Sync {
    fn join<A, B, FA, FB>(&self, a: FA, b: FB) -> (A, B)
    where
        A: Send,
        B: Send,
        FA: FnOnce() -> A + Send,
        FB: FnOnce() -> B + Send;
}

/// Runs both halves on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Joiner for Sequential {
    fn join<A, B, FA, FB>(&self, a: FA, b: FB) -> (A, B)
    where
        A: Send,
        B: Send,
        FA: FnOnce() -> A + Send,
        FB: FnOnce() -> B + Send,
    {
        (a(), b())
    }
}

/// Reduces leaves `start..end` (non-empty). The left subtree always holds the
/// largest power of two strictly smaller than the range length.
pub(crate) fn pairwise<T, J, L, C>(joiner: &J, start: usize, end: usize, leaf: &L, combine: &C) -> T
where
    T: Send,
    J: Joiner,
    L: Fn(usize) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    debug_assert!(start < end);
    let len = end - start;
    if len == 1 {
        return leaf(start);
    }
    let left = if len.is_power_of_two() { len / 2 } else { 1 << (usize::BITS - 1 - len.leading_zeros()) };
    let mid = start + left;
    let (a, b) =
        joiner.join(|| pairwise(joiner, start, mid, leaf, combine), || pairwise(joiner, mid, end, leaf, combine));
    combine(a, b)
}
