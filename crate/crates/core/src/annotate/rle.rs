//! Uncompressed column-major run-length encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::Mask;

/// Alternating run lengths starting with unset pixels, scanning columns
/// top to bottom, left to right. `size` is `[height, width]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub counts: Vec<u32>,
    pub size: [u32; 2],
}

pub fn rle_encode(mask: &Mask) -> Rle {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..mask.width {
        for y in 0..mask.height {
            let v = mask.get(x, y);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    Rle {
        counts,
        size: [mask.height, mask.width],
    }
}

pub fn rle_decode(rle: &Rle) -> Result<Mask> {
    let [h, w] = rle.size;
    let total: u64 = rle.counts.iter().map(|&c| c as u64).sum();
    if total != h as u64 * w as u64 {
        return Err(Error::invalid(format!("RLE counts sum to {total}, expected {}", h as u64 * w as u64)));
    }
    let mut mask = Mask::new(w, h);
    let mut pos = 0usize;
    for (k, &c) in rle.counts.iter().enumerate() {
        if k % 2 == 1 {
            for p in pos..pos + c as usize {
                let (x, y) = (p / h as usize, p % h as usize);
                mask.data[y * w as usize + x] = true;
            }
        }
        pos += c as usize;
    }
    Ok(mask)
}
