//! Fixed-length block segmentation.

/// Default block length in seconds (2.5 minutes).
pub const DEFAULT_BLOCK_LENGTH: f64 = 150.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// 1-based block index.
    pub index: usize,
    pub start: f64,
    pub end: f64,
    /// Per-channel mean over the samples inside the block; NaN for an empty
    /// block.
    pub means: Vec<f64>,
    pub samples: usize,
}

/// Contiguous `[start, end)` ranges from `t = 0` covering `duration` seconds.
/// A trailing partial block is kept when it is at least half full.
pub fn block_ranges(duration: f64, block_length: f64) -> Vec<(f64, f64)> {
    if !(duration > 0.0 && block_length > 0.0) {
        return Vec::new();
    }
    let ratio = duration / block_length;
    // tolerate rounding in durations such as 600.0000000001
    let full = (ratio + 1e-9).floor() as usize;
    let mut ranges: Vec<(f64, f64)> = (0..full)
        .map(|k| (k as f64 * block_length, (k + 1) as f64 * block_length))
        .collect();
    let partial = duration - full as f64 * block_length;
    if partial >= 0.5 * block_length {
        ranges.push((full as f64 * block_length, duration));
    }
    ranges
}

/// Splits time-stamped channels into blocks and averages each channel.
///
/// The series duration is the last timestamp. A sample exactly at the end
/// of the final kept block belongs to that block; samples in a dropped
/// partial block are discarded.
pub fn segment_blocks(times: &[f64], channels: &[&[f64]], block_length: f64) -> Vec<Block> {
    let Some(&duration) = times.last() else {
        return Vec::new();
    };
    let ranges = block_ranges(duration, block_length);
    let mut sums = vec![vec![0.0; channels.len()]; ranges.len()];
    let mut counts = vec![0usize; ranges.len()];
    let last_end = ranges.last().map(|r| r.1).unwrap_or(0.0);

    for (i, &t) in times.iter().enumerate() {
        if t < 0.0 || t > last_end {
            continue;
        }
        let k = ((t / block_length).floor() as usize).min(ranges.len() - 1);
        counts[k] += 1;
        for (c, ch) in channels.iter().enumerate() {
            sums[k][c] += ch[i];
        }
    }

    ranges
        .into_iter()
        .enumerate()
        .map(|(k, (start, end))| Block {
            index: k + 1,
            start,
            end,
            means: sums[k].iter().map(|s| s / counts[k] as f64).collect(),
            samples: counts[k],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(duration: f64, rate: f64) -> Vec<f64> {
        let n = (duration * rate).round() as usize;
        (1..=n).map(|k| k as f64 / rate).collect()
    }

    #[test]
    fn ten_minutes_make_four_blocks() {
        let t = grid(600.0, 15.0);
        let v = vec![1.0; t.len()];
        let blocks = segment_blocks(&t, &[&v], DEFAULT_BLOCK_LENGTH);
        assert_eq!(blocks.len(), 4);
        for (k, b) in blocks.iter().enumerate() {
            assert_eq!(b.start, 150.0 * k as f64);
            assert_eq!(b.end - b.start, 150.0);
        }
    }

    #[test]
    fn short_trailing_block_dropped() {
        let t = grid(500.0, 15.0);
        let v = vec![0.0; t.len()];
        let blocks = segment_blocks(&t, &[&v], 150.0);
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[2].end, 450.0);
        // 100 s partial is kept
        assert_eq!(block_ranges(550.0, 150.0).len(), 4);
        assert_eq!(block_ranges(550.0, 150.0)[3], (450.0, 550.0));
    }

    #[test]
    fn constant_series_constant_means() {
        let t = grid(600.0, 4.0);
        let v = vec![2.0; t.len()];
        for b in segment_blocks(&t, &[&v], 150.0) {
            assert_eq!(b.means, vec![2.0]);
        }
    }

    #[test]
    fn empty_input() {
        assert!(segment_blocks(&[], &[], 150.0).is_empty());
        assert!(block_ranges(0.0, 150.0).is_empty());
    }
}
