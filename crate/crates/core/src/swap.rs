//! Token-order perturbations: move the first two query tokens to the end in
//! reversed order ("what is love" -> "love is what").

use std::ops::RangeInclusive;

/// Query text lengths eligible for the perturbation.
pub const ELIGIBLE_LEN: RangeInclusive<usize> = 3..=8;

/// Moves the first two tokens to the end, swapped. `None` unless the query
/// has 3 to 8 tokens.
pub fn swap_first_two_to_end<T: Clone>(tokens: &[T]) -> Option<Vec<T>> {
    if !ELIGIBLE_LEN.contains(&tokens.len()) {
        return None;
    }
    let mut out = Vec::with_capacity(tokens.len());
    out.extend_from_slice(&tokens[2..]);
    out.push(tokens[1].clone());
    out.push(tokens[0].clone());
    Some(out)
}

/// Same move, but only for queries starting with "what is"
/// (case-insensitive, on surface strings).
pub fn swap_what_is<S: AsRef<str> + Clone>(tokens: &[S]) -> Option<Vec<S>> {
    starts_with_what_is(tokens)
        .then(|| swap_first_two_to_end(tokens))
        .flatten()
}

pub fn starts_with_what_is<S: AsRef<str>>(tokens: &[S]) -> bool {
    tokens.len() >= 2
        && tokens[0].as_ref().eq_ignore_ascii_case("what")
        && tokens[1].as_ref().eq_ignore_ascii_case("is")
}

/// Where each original token lands after [`swap_first_two_to_end`]:
/// `result[i]` is the new index of original token `i`.
pub fn moved_positions(len: usize) -> Vec<usize> {
    (0..len)
        .map(|i| match i {
            0 => len - 1,
            1 => len - 2,
            _ => i - 2,
        })
        .collect()
}
