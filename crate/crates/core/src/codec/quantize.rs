use crate::error::{CoreError, Result};
use scmap_nn::{init, Tensor};
use rand_chacha::ChaCha8Rng;

/// Shared vector codebook. Entries are rows of a [size, dim] tensor.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub embed: Tensor,
    pub size: usize,
    pub dim: usize,
}

impl Codebook {
    /// Entries start uniform in [-1/size, 1/size].
    pub fn new(size: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / size as f64;
        Self {
            embed: init::uniform(vec![size, dim], -bound, bound, rng),
            size,
            dim,
        }
    }

    pub fn from_tensor(embed: Tensor) -> Result<Self> {
        let s = embed.shape();
        if s.len() != 2 || s[0] < 2 || s[1] == 0 {
            return Err(CoreError::InvalidInput(format!(
                "codebook tensor must be [size >= 2, dim >= 1], got {s:?}"
            )));
        }
        Ok(Self {
            size: s[0],
            dim: s[1],
            embed,
        })
    }

    pub fn entry(&self, n: usize) -> &[f64] {
        &self.embed.data()[n * self.dim..(n + 1) * self.dim]
    }

    /// Index of the entry nearest to `v` in Euclidean distance. Entries are
    /// scanned in order with a strict comparison, so equal distances resolve
    /// to the lowest index.
    pub fn nearest(&self, v: &[f64]) -> usize {
        debug_assert_eq!(v.len(), self.dim);
        let mut best = f64::INFINITY;
        let mut best_idx = 0;
        for n in 0..self.size {
            let e = self.entry(n);
            let mut d = 0.0;
            for i in 0..self.dim {
                let diff = v[i] - e[i];
                d += diff * diff;
            }
            if d < best {
                best = d;
                best_idx = n;
            }
        }
        best_idx
    }

    /// Snaps every spatial position of a [n, dim, h, w] map to its nearest
    /// entry. Returns indices in row-major (n, h, w) order plus the
    /// quantized map.
    pub fn quantize_map(&self, z: &Tensor) -> Result<(Vec<u32>, Tensor)> {
        let s = z.shape();
        if s.len() != 4 || s[1] != self.dim {
            return Err(CoreError::InvalidInput(format!(
                "expected [n, {}, h, w] latent map, got {s:?}",
                self.dim
            )));
        }
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let mut indices = Vec::with_capacity(n * h * w);
        let mut q = Tensor::zeros(s.to_vec());
        let mut v = vec![0.0; c];
        for ni in 0..n {
            for y in 0..h {
                for x in 0..w {
                    for ci in 0..c {
                        v[ci] = z.at4(ni, ci, y, x);
                    }
                    let idx = self.nearest(&v);
                    indices.push(idx as u32);
                    let e = self.entry(idx);
                    for ci in 0..c {
                        let off = q.idx4(ni, ci, y, x);
                        q.data_mut()[off] = e[ci];
                    }
                }
            }
        }
        Ok((indices, q))
    }

    /// Rebuilds a latent map from stored indices.
    pub fn lookup_map(&self, indices: &[u32], n: usize, h: usize, w: usize) -> Result<Tensor> {
        if indices.len() != n * h * w {
            return Err(CoreError::InvalidInput(format!(
                "{} indices cannot fill a {n}x{h}x{w} grid",
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= self.size) {
            return Err(CoreError::InvalidInput(format!(
                "index {bad} out of range for a {}-entry codebook",
                self.size
            )));
        }
        let mut q = Tensor::zeros(vec![n, self.dim, h, w]);
        for ni in 0..n {
            for y in 0..h {
                for x in 0..w {
                    let e = self.entry(indices[(ni * h + y) * w + x] as usize);
                    for ci in 0..self.dim {
                        let off = q.idx4(ni, ci, y, x);
                        q.data_mut()[off] = e[ci];
                    }
                }
            }
        }
        Ok(q)
    }

    /// Bits needed to address any entry: ceil(log2(size)).
    pub fn bits_per_index(&self) -> u8 {
        let mut bits = 0u8;
        while (1usize << bits) < self.size {
            bits += 1;
        }
        bits.max(1)
    }
}
