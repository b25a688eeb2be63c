//! Column-major run-length codec for binary masks, the encoding used by
//! COCO-family annotations and by the segmentor wire protocol. Runs
//! alternate starting with background, so a mask whose first cell is
//! foreground opens with a zero-length run.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RleError {
    #[error("run lengths sum to {sum} but the mask has {expected} cells")]
    LengthMismatch { sum: usize, expected: usize },
}

/// Expand alternating run lengths into column-major cell values.
pub fn decode(counts: &[usize], height: usize, width: usize) -> Result<Vec<bool>, RleError> {
    let expected = height * width;
    let sum: usize = counts.iter().sum();
    if sum != expected {
        return Err(RleError::LengthMismatch { sum, expected });
    }
    let mut cells = Vec::with_capacity(expected);
    let mut value = false;
    for &run in counts {
        for _ in 0..run {
            cells.push(value);
        }
        value = !value;
    }
    Ok(cells)
}

/// Encode column-major cell values into alternating run lengths starting
/// with background.
pub fn encode(cells: &[bool]) -> Vec<usize> {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0usize;
    for &cell in cells {
        if cell == current {
            run += 1;
        } else {
            counts.push(run);
            current = cell;
            run = 1;
        }
    }
    counts.push(run);
    if counts.is_empty() {
        counts.push(0);
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_background_run() {
        let cells = decode(&[9], 3, 3).unwrap();
        assert!(cells.iter().all(|&c| !c));
    }

    #[test]
    fn zero_length_leading_run_is_all_foreground() {
        let cells = decode(&[0, 9], 3, 3).unwrap();
        assert!(cells.iter().all(|&c| c));
    }

    #[test]
    fn worked_three_run_example() {
        // 2 background, 3 foreground, 4 background in column-major order.
        let cells = decode(&[2, 3, 4], 3, 3).unwrap();
        let expected: Vec<bool> = (0..9).map(|i| (2..5).contains(&i)).collect();
        assert_eq!(cells, expected);
    }

    #[test]
    fn mismatched_total_rejected() {
        assert!(matches!(
            decode(&[4], 3, 3),
            Err(RleError::LengthMismatch {
                sum: 4,
                expected: 9
            })
        ));
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(cells in proptest::collection::vec(any::<bool>(), 1..256)) {
            let counts = encode(&cells);
            // Any factorization of the length works for the roundtrip.
            let decoded = decode(&counts, cells.len(), 1).unwrap();
            prop_assert_eq!(decoded, cells);
        }
    }
}
