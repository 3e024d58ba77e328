//! Keyed block-wise pixel shuffling and its inverse.
//!
//! An image of size `h × w × c` is split into `M × M` blocks, each block is
//! flattened row-major over (row, col, channel) into a vector of length
//! `M·M·c`, the vector is permuted by a single key-derived permutation shared
//! by every block, and the blocks are merged back in place.

use ndarray::Array4;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ImageBatch, PermutationKey};

/// A bijection on `[0, M·M·c)` applied to every flattened block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPermutation {
    perm: Vec<usize>,
}

impl BlockPermutation {
    /// Wraps a raw permutation vector, verifying bijectivity.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let len = perm.len();
        let mut seen = vec![false; len];
        for &p in &perm {
            if p >= len || seen[p] {
                return Err(Error::Data(format!(
                    "vector of length {len} is not a permutation"
                )));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// The inverse bijection.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0usize; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { perm: inv }
    }
}

/// Derives the shared block permutation from the secret key.
///
/// Deterministic Fisher–Yates over `[0, M·M·c)` driven by a ChaCha8 stream
/// seeded with `key.seed`; the same key always yields the same permutation.
pub fn derive_permutation(key: &PermutationKey, channels: usize) -> Result<BlockPermutation> {
    if channels < 1 {
        return Err(Error::Config("channels must be >= 1".into()));
    }
    let len = key.block_size * key.block_size * channels;
    let mut perm: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
    for i in (1..len).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    BlockPermutation::new(perm)
}

fn apply_blockwise(
    images: &ImageBatch,
    key: &PermutationKey,
    perm: &BlockPermutation,
) -> Result<ImageBatch> {
    let (h, w, c) = images.image_dims();
    key.check_divides(h, w)?;
    let m = key.block_size;
    let block_len = m * m * c;
    debug_assert_eq!(perm.len(), block_len);

    let src = images.data();
    let (n, _, _, _) = src.dim();
    let mut dst = Array4::zeros((n, h, w, c));
    let mut flat = vec![0.0f64; block_len];

    for img in 0..n {
        for bi in (0..h).step_by(m) {
            for bj in (0..w).step_by(m) {
                // Flatten the block row-major over (row, col, channel).
                let mut k = 0;
                for r in 0..m {
                    for col in 0..m {
                        for ch in 0..c {
                            flat[k] = src[[img, bi + r, bj + col, ch]];
                            k += 1;
                        }
                    }
                }
                let mut k = 0;
                for r in 0..m {
                    for col in 0..m {
                        for ch in 0..c {
                            dst[[img, bi + r, bj + col, ch]] = flat[perm.as_slice()[k]];
                            k += 1;
                        }
                    }
                }
            }
        }
    }
    ImageBatch::new(dst)
}

/// Shuffles every `M × M × c` block of every image with the key-derived
/// permutation. Output shape equals input shape; block positions are
/// unchanged.
pub fn shuffle_image(images: &ImageBatch, key: &PermutationKey) -> Result<ImageBatch> {
    let (_, _, c) = images.image_dims();
    let perm = derive_permutation(key, c)?;
    apply_blockwise(images, key, &perm)
}

/// Exact inverse of [`shuffle_image`] for the same key.
pub fn unshuffle_image(images: &ImageBatch, key: &PermutationKey) -> Result<ImageBatch> {
    let (_, _, c) = images.image_dims();
    let perm = derive_permutation(key, c)?.inverse();
    apply_blockwise(images, key, &perm)
}

/// Applies the same keyed permutation to an arbitrary tensor of matching
/// dims. Used to push gradients through the transform: the permutation is
/// linear, so the input gradient is the inverse permutation of the output
/// gradient.
pub fn permute_raw(tensor: &Array4<f64>, key: &PermutationKey, inverse: bool) -> Result<Array4<f64>> {
    let (n, h, w, c) = tensor.dim();
    key.check_divides(h, w)?;
    let perm = if inverse {
        derive_permutation(key, c)?.inverse()
    } else {
        derive_permutation(key, c)?
    };
    let m = key.block_size;
    let block_len = m * m * c;
    let mut dst = Array4::zeros((n, h, w, c));
    let mut flat = vec![0.0f64; block_len];
    for img in 0..n {
        for bi in (0..h).step_by(m) {
            for bj in (0..w).step_by(m) {
                let mut k = 0;
                for r in 0..m {
                    for col in 0..m {
                        for ch in 0..c {
                            flat[k] = tensor[[img, bi + r, bj + col, ch]];
                            k += 1;
                        }
                    }
                }
                let mut k = 0;
                for r in 0..m {
                    for col in 0..m {
                        for ch in 0..c {
                            dst[[img, bi + r, bj + col, ch]] = flat[perm.as_slice()[k]];
                            k += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(dst)
}

const FLATTEN_ORDER: &str = "row_major_hwc";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyFile {
    seed: u64,
    block_size: usize,
    flatten_order: String,
}

/// Writes the key to a JSON file: `{seed, block_size, flatten_order}`.
pub fn save_key_file(key: &PermutationKey, path: &Path) -> Result<()> {
    let record = KeyFile {
        seed: key.seed,
        block_size: key.block_size,
        flatten_order: FLATTEN_ORDER.to_string(),
    };
    let text = serde_json::to_string_pretty(&record)
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a key file, rejecting unknown fields and foreign flatten orders.
pub fn load_key_file(path: &Path) -> Result<PermutationKey> {
    let text = std::fs::read_to_string(path)?;
    let record: KeyFile =
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if record.flatten_order != FLATTEN_ORDER {
        return Err(Error::Format(format!(
            "unsupported flatten_order {:?}",
            record.flatten_order
        )));
    }
    PermutationKey::new(record.seed, record.block_size)
}
