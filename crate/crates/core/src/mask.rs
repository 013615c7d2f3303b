//! Fixed-width rectangle-id sets for the exponential solvers.

/// Set of rectangle ids `< MAX_MASK_RECTS`.
pub type Mask = u128;

pub const MAX_MASK_RECTS: usize = 128;

pub fn full(n: usize) -> Mask {
    debug_assert!(n <= MAX_MASK_RECTS);
    if n == MAX_MASK_RECTS {
        Mask::MAX
    } else {
        (1u128 << n) - 1
    }
}

pub fn bit(i: usize) -> Mask {
    1u128 << i
}

pub fn ones(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

pub fn count(m: Mask) -> usize {
    m.count_ones() as usize
}
