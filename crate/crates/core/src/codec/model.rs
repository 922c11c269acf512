use crate::channel::{power_normalize, snr_db_to_sigma, GaussianSource};
use crate::codec::attention::{GateCache, SnrGate};
use crate::codec::blocks::{
    ConvDown, ConvDownCache, ConvUp, ConvUpCache, ResDown, ResDownCache, ResUp, ResUpCache,
};
use crate::codec::config::CodecConfig;
use crate::codec::quantize::Codebook;
use crate::error::{CoreError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scmap_nn::{Conv2d, Tensor};

/// Full semantic codec: convolutional encoder, SNR gates, shared vector
/// codebook, 1x1 channel coder pair, and a mirrored decoder ending in a
/// tanh squashed to [0, 1].
#[derive(Debug, Clone)]
pub struct CodecModel {
    pub config: CodecConfig,
    pub enc1: ConvDown,
    pub enc2: ConvDown,
    pub enc3: ResDown,
    pub enc4: ResDown,
    pub tx_gate: SnrGate,
    pub codebook: Codebook,
    pub tx_coder: Conv2d,
    pub rx_coder: Conv2d,
    pub rx_gate: SnrGate,
    pub dec1: ResUp,
    pub dec2: ResUp,
    pub dec3: ConvUp,
    pub out: scmap_nn::ConvTranspose2d,
}

/// Digital latent: one codebook index per latent grid cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitalLatent {
    pub h: usize,
    pub w: usize,
    pub bits_per_index: u8,
    pub indices: Vec<u32>,
}

/// Analog latent: channel-coded, power-normalized symbol block.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogLatent {
    pub channels: usize,
    pub h: usize,
    pub w: usize,
    pub symbols: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub recon_mse: f64,
    pub codebook: f64,
    pub commitment: f64,
}

/// Every intermediate a training step needs for its backward pass.
pub struct TrainForward {
    pub input: Tensor,
    pub snr_db: f64,
    c1: ConvDownCache,
    c2: ConvDownCache,
    c3: ResDownCache,
    c4: ResDownCache,
    gate_tx: GateCache,
    pub z_a: Tensor,
    pub tx_indices: Vec<u32>,
    pub z_q: Tensor,
    t_data: Vec<f64>,
    sum_sq: f64,
    gain: f64,
    y: Tensor,
    pub rx_indices: Vec<u32>,
    w_q: Tensor,
    u: Tensor,
    gate_rx: GateCache,
    d1: ResUpCache,
    d2: ResUpCache,
    d3: ConvUpCache,
    dec3_out: Tensor,
    pub recon: Tensor,
    pub losses: LossBreakdown,
}

/// Quantities a finite-difference probe must hold fixed so the surrogate
/// loss stays differentiable: selected indices, both straight-through
/// offsets, the base latents entering the two auxiliary terms, and the
/// channel noise draw.
pub struct FrozenPoint {
    pub snr_db: f64,
    pub tx_indices: Vec<u32>,
    pub o1: Tensor,
    pub o2: Tensor,
    pub a_base: Tensor,
    pub e_base: Tensor,
    pub noise: Vec<f64>,
}

fn identity_coder(channels: usize) -> Result<Conv2d> {
    let w = Tensor::from_fn(vec![channels, channels, 1, 1], |i| {
        if i / channels == i % channels {
            1.0
        } else {
            0.0
        }
    });
    let b = Tensor::zeros(vec![channels]);
    Ok(Conv2d::from_weights(w, b, 1, 0)?)
}

impl CodecModel {
    pub fn new(config: CodecConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [w0, w1, w2, w3] = config.widths;
        let attn = config.attention;
        let mut m = Self {
            enc1: ConvDown::new(config.in_channels, w0, &mut rng)?,
            enc2: ConvDown::new(w0, w1, &mut rng)?,
            enc3: ResDown::new(w1, w2, &mut rng)?,
            enc4: ResDown::new(w2, w3, &mut rng)?,
            tx_gate: SnrGate::new(w3, attn, &mut rng),
            codebook: Codebook::new(config.codebook_size, w3, &mut rng),
            // The coder pair starts as the identity map. The receiver-side
            // snap then returns the transmitted codeword from step one, and
            // training keeps the chain near that fixed point, which keeps
            // symbol transport consistent with index transport. Random init
            // would let the pair converge onto an arbitrary relabeling of
            // the codebook that index transport cannot follow.
            tx_coder: identity_coder(w3)?,
            rx_coder: identity_coder(w3)?,
            rx_gate: SnrGate::new(w3, attn, &mut rng),
            dec1: ResUp::new(w3, w2, &mut rng)?,
            dec2: ResUp::new(w2, w1, &mut rng)?,
            dec3: ConvUp::new(w1, w0, &mut rng)?,
            out: scmap_nn::ConvTranspose2d::new(w0, config.in_channels, 4, 2, 1, &mut rng)?,
            config,
        };
        // A fresh model must be usable for inference, so its norm layers
        // start from neutral running statistics.
        m.seed_norm_stats();
        Ok(m)
    }

    fn seed_norm_stats(&mut self) {
        for bn in [
            &mut self.enc1.bn,
            &mut self.enc2.bn,
            &mut self.enc3.b1,
            &mut self.enc3.b2,
            &mut self.enc4.b1,
            &mut self.enc4.b2,
            &mut self.dec1.b1,
            &mut self.dec1.b2,
            &mut self.dec2.b1,
            &mut self.dec2.b2,
            &mut self.dec3.bn,
        ] {
            bn.seed_running_stats();
        }
    }

    fn check_image(&self, img: &Tensor) -> Result<(usize, usize)> {
        let s = img.shape();
        if s.len() != 4 || s[1] != self.config.in_channels {
            return Err(CoreError::InvalidInput(format!(
                "expected [n, {}, h, w] image, got {s:?}",
                self.config.in_channels
            )));
        }
        self.config.check_input_size(s[2], s[3])
    }

    fn encode_eval(&self, img: &Tensor, snr_db: f64) -> Result<Tensor> {
        self.check_image(img)?;
        let e = self.enc1.forward_eval(img)?;
        let e = self.enc2.forward_eval(&e)?;
        let e = self.enc3.forward_eval(&e)?;
        let e = self.enc4.forward_eval(&e)?;
        let (z_a, _) = self.tx_gate.forward(&e, snr_db)?;
        Ok(z_a)
    }

    fn decode_eval(&self, latent: &Tensor, snr_db: f64) -> Result<Tensor> {
        let (v, _) = self.rx_gate.forward(latent, snr_db)?;
        let d = self.dec1.forward_eval(&v)?;
        let d = self.dec2.forward_eval(&d)?;
        let d = self.dec3.forward_eval(&d)?;
        let p = self.out.forward(&d)?;
        Ok(p.map(|v| (v.tanh() + 1.0) / 2.0))
    }

    /// Encoder + quantizer, emitting one index per latent cell.
    pub fn encode_digital(&self, img: &Tensor, snr_db: f64) -> Result<DigitalLatent> {
        let (h, w) = self.check_image(img)?;
        let z_a = self.encode_eval(img, snr_db)?;
        let (indices, _) = self.codebook.quantize_map(&z_a)?;
        Ok(DigitalLatent {
            h,
            w,
            bits_per_index: self.codebook.bits_per_index(),
            indices,
        })
    }

    pub fn decode_digital(&self, latent: &DigitalLatent, snr_db: f64) -> Result<Tensor> {
        let q = self
            .codebook
            .lookup_map(&latent.indices, 1, latent.h, latent.w)?;
        self.decode_eval(&q, snr_db)
    }

    /// Encoder + quantizer + channel coder + power normalization.
    pub fn encode_analog(&self, img: &Tensor, snr_db: f64) -> Result<AnalogLatent> {
        let (h, w) = self.check_image(img)?;
        let z_a = self.encode_eval(img, snr_db)?;
        let (_, z_q) = self.codebook.quantize_map(&z_a)?;
        let t = self.tx_coder.forward(&z_q)?;
        let (symbols, _) = power_normalize(t.data())?;
        Ok(AnalogLatent {
            channels: self.config.latent_dim(),
            h,
            w,
            symbols,
        })
    }

    /// Channel decoder: 1x1 conv, snap each latent vector back onto the
    /// shared codebook, then decode.
    pub fn decode_analog(&self, latent: &AnalogLatent, snr_db: f64) -> Result<Tensor> {
        if latent.channels != self.config.latent_dim() {
            return Err(CoreError::InvalidInput(format!(
                "symbol block has {} channels, codec expects {}",
                latent.channels,
                self.config.latent_dim()
            )));
        }
        let expect = latent.channels * latent.h * latent.w;
        if latent.symbols.len() != expect {
            return Err(CoreError::InvalidInput(format!(
                "symbol block of {} values cannot fill {}x{}x{}",
                latent.symbols.len(),
                latent.channels,
                latent.h,
                latent.w
            )));
        }
        let y = Tensor::new(
            vec![1, latent.channels, latent.h, latent.w],
            latent.symbols.clone(),
        )
        .map_err(CoreError::from)?;
        let u = self.rx_coder.forward(&y)?;
        let (_, snapped) = self.codebook.quantize_map(&u)?;
        self.decode_eval(&snapped, snr_db)
    }

    /// Standard normal draw sized for one latent symbol block.
    pub fn draw_noise(&self, img_h: usize, img_w: usize, seed: u64) -> Result<Vec<f64>> {
        let (h, w) = self.config.check_input_size(img_h, img_w)?;
        let n = self.config.latent_dim() * h * w;
        let mut src = GaussianSource::from_seed(seed);
        Ok((0..n).map(|_| src.next_standard()).collect())
    }

    /// Training forward through the whole analog pipeline with a fixed
    /// noise draw. Norm layers run in batch-statistics mode.
    pub fn forward_train(
        &mut self,
        img: &Tensor,
        snr_db: f64,
        noise: &[f64],
    ) -> Result<TrainForward> {
        self.check_image(img)?;
        let (e1, c1) = self.enc1.forward_train(img)?;
        let (e2, c2) = self.enc2.forward_train(&e1)?;
        let (e3, c3) = self.enc3.forward_train(&e2)?;
        let (e4, c4) = self.enc4.forward_train(&e3)?;
        let (z_a, gate_tx) = self.tx_gate.forward(&e4, snr_db)?;
        let (tx_indices, z_q) = self.codebook.quantize_map(&z_a)?;

        let t = self.tx_coder.forward(&z_q)?;
        let sum_sq: f64 = t.iter().map(|v| v * v).sum();
        let (symbols, gain) = power_normalize(t.data())?;
        if noise.len() != symbols.len() {
            return Err(CoreError::InvalidInput(format!(
                "noise draw of {} values does not match {} symbols",
                noise.len(),
                symbols.len()
            )));
        }
        let sigma = snr_db_to_sigma(snr_db, 1.0);
        let received: Vec<f64> = symbols
            .iter()
            .zip(noise)
            .map(|(s, n)| s + sigma * n)
            .collect();
        let y = Tensor::new(t.shape().to_vec(), received)?;

        let u = self.rx_coder.forward(&y)?;
        let (rx_indices, w_q) = self.codebook.quantize_map(&u)?;
        let (v, gate_rx) = self.rx_gate.forward(&w_q, snr_db)?;

        let (d1o, d1) = self.dec1.forward_train(&v)?;
        let (d2o, d2) = self.dec2.forward_train(&d1o)?;
        let (d3o, d3) = self.dec3.forward_train(&d2o)?;
        let p = self.out.forward(&d3o)?;
        let recon = p.map(|v| (v.tanh() + 1.0) / 2.0);

        let numel_img = img.len() as f64;
        let recon_mse = recon
            .iter()
            .zip(img.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / numel_img;
        let numel_latent = z_a.len() as f64;
        let gap = z_a
            .iter()
            .zip(z_q.iter())
            .map(|(a, q)| (a - q) * (a - q))
            .sum::<f64>()
            / numel_latent;
        let losses = LossBreakdown {
            total: recon_mse + gap + self.config.commitment_beta * gap,
            recon_mse,
            codebook: gap,
            commitment: self.config.commitment_beta * gap,
        };

        Ok(TrainForward {
            input: img.clone(),
            snr_db,
            c1,
            c2,
            c3,
            c4,
            gate_tx,
            z_a,
            tx_indices,
            z_q,
            t_data: t.into_data(),
            sum_sq,
            gain,
            y,
            rx_indices,
            w_q,
            u,
            gate_rx,
            d1,
            d2,
            d3,
            dec3_out: d3o,
            recon,
            losses,
        })
    }

    /// Accumulates gradients for the training loss. Quantization follows
    /// the straight-through convention: reconstruction gradient passes
    /// unchanged through both snaps, the codebook learns only from the
    /// codebook term, and the commitment term pulls the gated latent
    /// toward its selected entry.
    pub fn backward_train(&mut self, fwd: &TrainForward) -> Result<()> {
        let numel_img = fwd.input.len() as f64;
        let d_recon = Tensor::new(
            fwd.recon.shape().to_vec(),
            fwd.recon
                .iter()
                .zip(fwd.input.iter())
                .map(|(r, s)| 2.0 * (r - s) / numel_img)
                .collect(),
        )?;
        // recon = (tanh(p) + 1) / 2, so tanh(p) = 2 recon - 1.
        let d_pre = Tensor::new(
            d_recon.shape().to_vec(),
            d_recon
                .iter()
                .zip(fwd.recon.iter())
                .map(|(g, r)| {
                    let th = 2.0 * r - 1.0;
                    g * (1.0 - th * th) / 2.0
                })
                .collect(),
        )?;

        let g = self.out.backward(&fwd.dec3_out, &d_pre)?;
        let g = self.dec3.backward(&fwd.d3, &g)?;
        let g = self.dec2.backward(&fwd.d2, &g)?;
        let g = self.dec1.backward(&fwd.d1, &g)?;
        let d_wq = self.rx_gate.backward(&fwd.gate_rx, &g)?;

        // Receiver snap: straight through.
        let d_u = d_wq;
        let d_y = self.rx_coder.backward(&fwd.y, &d_u)?;

        // Power normalization: y_i = x_i * gain(x); the Jacobian couples
        // every symbol through the shared gain.
        let d_sym = d_y.data();
        let x = &fwd.t_data;
        let dot: f64 = d_sym.iter().zip(x.iter()).map(|(g, xv)| g * xv).sum();
        let gain = fwd.gain;
        let scale = gain * dot / fwd.sum_sq;
        let d_t = Tensor::new(
            fwd.y.shape().to_vec(),
            d_sym
                .iter()
                .zip(x.iter())
                .map(|(g, xv)| gain * g - scale * xv)
                .collect(),
        )?;

        let d_zq = self.tx_coder.backward(&fwd.z_q, &d_t)?;

        // Transmitter snap: straight through into the gated latent, plus
        // the commitment pull toward the (fixed) selected entries.
        let numel_latent = fwd.z_a.len() as f64;
        let beta = self.config.commitment_beta;
        let d_za = Tensor::new(
            d_zq.shape().to_vec(),
            d_zq.iter()
                .zip(fwd.z_a.iter().zip(fwd.z_q.iter()))
                .map(|(g, (za, zq))| g + 2.0 * beta * (za - zq) / numel_latent)
                .collect(),
        )?;

        // Codebook term: each selected entry moves toward the latent it
        // was chosen for.
        {
            let dim = self.codebook.dim;
            let s = fwd.z_a.shape();
            let (h, w) = (s[2], s[3]);
            let grad = self.codebook.embed.grad_mut();
            for (pos, &k) in fwd.tx_indices.iter().enumerate() {
                let (n, rem) = (pos / (h * w), pos % (h * w));
                let (yy, xx) = (rem / w, rem % w);
                for c in 0..dim {
                    let za = fwd.z_a.at4(n, c, yy, xx);
                    let zq = fwd.z_q.at4(n, c, yy, xx);
                    grad[k as usize * dim + c] += 2.0 * (zq - za) / numel_latent;
                }
            }
        }

        let d_f = self.tx_gate.backward(&fwd.gate_tx, &d_za)?;
        let g = self.enc4.backward(&fwd.c4, &d_f)?;
        let g = self.enc3.backward(&fwd.c3, &g)?;
        let g = self.enc2.backward(&fwd.c2, &g)?;
        let _ = self.enc1.backward(&fwd.c1, &g)?;
        Ok(())
    }

    /// Captures the non-differentiable quantities of a forward pass so a
    /// finite-difference probe can rerun the loss as a smooth function.
    pub fn freeze(&self, fwd: &TrainForward, noise: &[f64]) -> FrozenPoint {
        let o1 = Tensor::new(
            fwd.z_q.shape().to_vec(),
            fwd.z_q
                .iter()
                .zip(fwd.z_a.iter())
                .map(|(q, a)| q - a)
                .collect(),
        )
        .expect("shape preserved");
        let o2 = Tensor::new(
            fwd.w_q.shape().to_vec(),
            fwd.w_q
                .iter()
                .zip(fwd.u.iter())
                .map(|(q, u)| q - u)
                .collect(),
        )
        .expect("shape preserved");
        FrozenPoint {
            snr_db: fwd.snr_db,
            tx_indices: fwd.tx_indices.clone(),
            o1,
            o2,
            a_base: fwd.z_a.clone(),
            e_base: fwd.z_q.clone(),
            noise: noise.to_vec(),
        }
    }

    /// Loss of the straight-through surrogate at the current parameters:
    /// identical to the training loss at the freeze point, and smooth in
    /// every parameter, so its finite differences must match the analytic
    /// gradients from `backward_train`.
    pub fn frozen_loss(&mut self, img: &Tensor, fp: &FrozenPoint) -> Result<f64> {
        let (e1, _) = self.enc1.forward_train(img)?;
        let (e2, _) = self.enc2.forward_train(&e1)?;
        let (e3, _) = self.enc3.forward_train(&e2)?;
        let (e4, _) = self.enc4.forward_train(&e3)?;
        let (z_a, _) = self.tx_gate.forward(&e4, fp.snr_db)?;

        let z_q = Tensor::new(
            z_a.shape().to_vec(),
            z_a.iter().zip(fp.o1.iter()).map(|(a, o)| a + o).collect(),
        )?;
        let t = self.tx_coder.forward(&z_q)?;
        let (symbols, _) = power_normalize(t.data())?;
        let sigma = snr_db_to_sigma(fp.snr_db, 1.0);
        let received: Vec<f64> = symbols
            .iter()
            .zip(&fp.noise)
            .map(|(s, n)| s + sigma * n)
            .collect();
        let y = Tensor::new(t.shape().to_vec(), received)?;
        let u = self.rx_coder.forward(&y)?;
        let w_q = Tensor::new(
            u.shape().to_vec(),
            u.iter().zip(fp.o2.iter()).map(|(a, o)| a + o).collect(),
        )?;
        let (v, _) = self.rx_gate.forward(&w_q, fp.snr_db)?;
        let (d1o, _) = self.dec1.forward_train(&v)?;
        let (d2o, _) = self.dec2.forward_train(&d1o)?;
        let (d3o, _) = self.dec3.forward_train(&d2o)?;
        let p = self.out.forward(&d3o)?;
        let recon = p.map(|v| (v.tanh() + 1.0) / 2.0);

        let numel_img = img.len() as f64;
        let recon_mse = recon
            .iter()
            .zip(img.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / numel_img;

        let numel_latent = z_a.len() as f64;
        let dim = self.codebook.dim;
        let mut cb = 0.0;
        {
            let s = z_a.shape();
            let (h, w) = (s[2], s[3]);
            for (pos, &k) in fp.tx_indices.iter().enumerate() {
                let (n, rem) = (pos / (h * w), pos % (h * w));
                let (yy, xx) = (rem / w, rem % w);
                let e = self.codebook.entry(k as usize);
                for c in 0..dim {
                    let diff = e[c] - fp.a_base.at4(n, c, yy, xx);
                    cb += diff * diff;
                }
            }
        }
        cb /= numel_latent;

        let commit = self.config.commitment_beta
            * z_a
                .iter()
                .zip(fp.e_base.iter())
                .map(|(a, e)| (a - e) * (a - e))
                .sum::<f64>()
            / numel_latent;

        Ok(recon_mse + cb + commit)
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.named_params_mut() {
            p.zero_grad();
        }
    }

    /// Trainable parameters in a fixed, documented order.
    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v: Vec<(String, &mut Tensor)> = Vec::new();
        let attn = self.config.attention;
        v.push(("enc1.conv.weight".into(), &mut self.enc1.conv.weight));
        v.push(("enc1.conv.bias".into(), &mut self.enc1.conv.bias));
        v.push(("enc1.bn.gamma".into(), &mut self.enc1.bn.gamma));
        v.push(("enc1.bn.beta".into(), &mut self.enc1.bn.beta));
        v.push(("enc2.conv.weight".into(), &mut self.enc2.conv.weight));
        v.push(("enc2.conv.bias".into(), &mut self.enc2.conv.bias));
        v.push(("enc2.bn.gamma".into(), &mut self.enc2.bn.gamma));
        v.push(("enc2.bn.beta".into(), &mut self.enc2.bn.beta));
        v.push(("enc3.c1.weight".into(), &mut self.enc3.c1.weight));
        v.push(("enc3.c1.bias".into(), &mut self.enc3.c1.bias));
        v.push(("enc3.b1.gamma".into(), &mut self.enc3.b1.gamma));
        v.push(("enc3.b1.beta".into(), &mut self.enc3.b1.beta));
        v.push(("enc3.c2.weight".into(), &mut self.enc3.c2.weight));
        v.push(("enc3.c2.bias".into(), &mut self.enc3.c2.bias));
        v.push(("enc3.b2.gamma".into(), &mut self.enc3.b2.gamma));
        v.push(("enc3.b2.beta".into(), &mut self.enc3.b2.beta));
        v.push(("enc3.skip.weight".into(), &mut self.enc3.skip.weight));
        v.push(("enc3.skip.bias".into(), &mut self.enc3.skip.bias));
        v.push(("enc4.c1.weight".into(), &mut self.enc4.c1.weight));
        v.push(("enc4.c1.bias".into(), &mut self.enc4.c1.bias));
        v.push(("enc4.b1.gamma".into(), &mut self.enc4.b1.gamma));
        v.push(("enc4.b1.beta".into(), &mut self.enc4.b1.beta));
        v.push(("enc4.c2.weight".into(), &mut self.enc4.c2.weight));
        v.push(("enc4.c2.bias".into(), &mut self.enc4.c2.bias));
        v.push(("enc4.b2.gamma".into(), &mut self.enc4.b2.gamma));
        v.push(("enc4.b2.beta".into(), &mut self.enc4.b2.beta));
        v.push(("enc4.skip.weight".into(), &mut self.enc4.skip.weight));
        v.push(("enc4.skip.bias".into(), &mut self.enc4.skip.bias));
        if attn {
            v.push(("tx_gate.fc.weight".into(), &mut self.tx_gate.fc.weight));
            v.push(("tx_gate.fc.bias".into(), &mut self.tx_gate.fc.bias));
        }
        v.push(("codebook.embed".into(), &mut self.codebook.embed));
        v.push(("tx_coder.weight".into(), &mut self.tx_coder.weight));
        v.push(("tx_coder.bias".into(), &mut self.tx_coder.bias));
        v.push(("rx_coder.weight".into(), &mut self.rx_coder.weight));
        v.push(("rx_coder.bias".into(), &mut self.rx_coder.bias));
        if attn {
            v.push(("rx_gate.fc.weight".into(), &mut self.rx_gate.fc.weight));
            v.push(("rx_gate.fc.bias".into(), &mut self.rx_gate.fc.bias));
        }
        v.push(("dec1.t1.weight".into(), &mut self.dec1.t1.weight));
        v.push(("dec1.t1.bias".into(), &mut self.dec1.t1.bias));
        v.push(("dec1.b1.gamma".into(), &mut self.dec1.b1.gamma));
        v.push(("dec1.b1.beta".into(), &mut self.dec1.b1.beta));
        v.push(("dec1.c2.weight".into(), &mut self.dec1.c2.weight));
        v.push(("dec1.c2.bias".into(), &mut self.dec1.c2.bias));
        v.push(("dec1.b2.gamma".into(), &mut self.dec1.b2.gamma));
        v.push(("dec1.b2.beta".into(), &mut self.dec1.b2.beta));
        v.push(("dec1.skip.weight".into(), &mut self.dec1.skip.weight));
        v.push(("dec1.skip.bias".into(), &mut self.dec1.skip.bias));
        v.push(("dec2.t1.weight".into(), &mut self.dec2.t1.weight));
        v.push(("dec2.t1.bias".into(), &mut self.dec2.t1.bias));
        v.push(("dec2.b1.gamma".into(), &mut self.dec2.b1.gamma));
        v.push(("dec2.b1.beta".into(), &mut self.dec2.b1.beta));
        v.push(("dec2.c2.weight".into(), &mut self.dec2.c2.weight));
        v.push(("dec2.c2.bias".into(), &mut self.dec2.c2.bias));
        v.push(("dec2.b2.gamma".into(), &mut self.dec2.b2.gamma));
        v.push(("dec2.b2.beta".into(), &mut self.dec2.b2.beta));
        v.push(("dec2.skip.weight".into(), &mut self.dec2.skip.weight));
        v.push(("dec2.skip.bias".into(), &mut self.dec2.skip.bias));
        v.push(("dec3.t.weight".into(), &mut self.dec3.t.weight));
        v.push(("dec3.t.bias".into(), &mut self.dec3.t.bias));
        v.push(("dec3.bn.gamma".into(), &mut self.dec3.bn.gamma));
        v.push(("dec3.bn.beta".into(), &mut self.dec3.bn.beta));
        v.push(("out.weight".into(), &mut self.out.weight));
        v.push(("out.bias".into(), &mut self.out.bias));
        v
    }

    /// Every persisted tensor: parameters first, then norm-layer running
    /// statistics. Order matches `named_params_mut` + `named_stats_mut`.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut v: Vec<(String, &Tensor)> = Vec::new();
        let attn = self.config.attention;
        v.push(("enc1.conv.weight".into(), &self.enc1.conv.weight));
        v.push(("enc1.conv.bias".into(), &self.enc1.conv.bias));
        v.push(("enc1.bn.gamma".into(), &self.enc1.bn.gamma));
        v.push(("enc1.bn.beta".into(), &self.enc1.bn.beta));
        v.push(("enc2.conv.weight".into(), &self.enc2.conv.weight));
        v.push(("enc2.conv.bias".into(), &self.enc2.conv.bias));
        v.push(("enc2.bn.gamma".into(), &self.enc2.bn.gamma));
        v.push(("enc2.bn.beta".into(), &self.enc2.bn.beta));
        v.push(("enc3.c1.weight".into(), &self.enc3.c1.weight));
        v.push(("enc3.c1.bias".into(), &self.enc3.c1.bias));
        v.push(("enc3.b1.gamma".into(), &self.enc3.b1.gamma));
        v.push(("enc3.b1.beta".into(), &self.enc3.b1.beta));
        v.push(("enc3.c2.weight".into(), &self.enc3.c2.weight));
        v.push(("enc3.c2.bias".into(), &self.enc3.c2.bias));
        v.push(("enc3.b2.gamma".into(), &self.enc3.b2.gamma));
        v.push(("enc3.b2.beta".into(), &self.enc3.b2.beta));
        v.push(("enc3.skip.weight".into(), &self.enc3.skip.weight));
        v.push(("enc3.skip.bias".into(), &self.enc3.skip.bias));
        v.push(("enc4.c1.weight".into(), &self.enc4.c1.weight));
        v.push(("enc4.c1.bias".into(), &self.enc4.c1.bias));
        v.push(("enc4.b1.gamma".into(), &self.enc4.b1.gamma));
        v.push(("enc4.b1.beta".into(), &self.enc4.b1.beta));
        v.push(("enc4.c2.weight".into(), &self.enc4.c2.weight));
        v.push(("enc4.c2.bias".into(), &self.enc4.c2.bias));
        v.push(("enc4.b2.gamma".into(), &self.enc4.b2.gamma));
        v.push(("enc4.b2.beta".into(), &self.enc4.b2.beta));
        v.push(("enc4.skip.weight".into(), &self.enc4.skip.weight));
        v.push(("enc4.skip.bias".into(), &self.enc4.skip.bias));
        if attn {
            v.push(("tx_gate.fc.weight".into(), &self.tx_gate.fc.weight));
            v.push(("tx_gate.fc.bias".into(), &self.tx_gate.fc.bias));
        }
        v.push(("codebook.embed".into(), &self.codebook.embed));
        v.push(("tx_coder.weight".into(), &self.tx_coder.weight));
        v.push(("tx_coder.bias".into(), &self.tx_coder.bias));
        v.push(("rx_coder.weight".into(), &self.rx_coder.weight));
        v.push(("rx_coder.bias".into(), &self.rx_coder.bias));
        if attn {
            v.push(("rx_gate.fc.weight".into(), &self.rx_gate.fc.weight));
            v.push(("rx_gate.fc.bias".into(), &self.rx_gate.fc.bias));
        }
        v.push(("dec1.t1.weight".into(), &self.dec1.t1.weight));
        v.push(("dec1.t1.bias".into(), &self.dec1.t1.bias));
        v.push(("dec1.b1.gamma".into(), &self.dec1.b1.gamma));
        v.push(("dec1.b1.beta".into(), &self.dec1.b1.beta));
        v.push(("dec1.c2.weight".into(), &self.dec1.c2.weight));
        v.push(("dec1.c2.bias".into(), &self.dec1.c2.bias));
        v.push(("dec1.b2.gamma".into(), &self.dec1.b2.gamma));
        v.push(("dec1.b2.beta".into(), &self.dec1.b2.beta));
        v.push(("dec1.skip.weight".into(), &self.dec1.skip.weight));
        v.push(("dec1.skip.bias".into(), &self.dec1.skip.bias));
        v.push(("dec2.t1.weight".into(), &self.dec2.t1.weight));
        v.push(("dec2.t1.bias".into(), &self.dec2.t1.bias));
        v.push(("dec2.b1.gamma".into(), &self.dec2.b1.gamma));
        v.push(("dec2.b1.beta".into(), &self.dec2.b1.beta));
        v.push(("dec2.c2.weight".into(), &self.dec2.c2.weight));
        v.push(("dec2.c2.bias".into(), &self.dec2.c2.bias));
        v.push(("dec2.b2.gamma".into(), &self.dec2.b2.gamma));
        v.push(("dec2.b2.beta".into(), &self.dec2.b2.beta));
        v.push(("dec2.skip.weight".into(), &self.dec2.skip.weight));
        v.push(("dec2.skip.bias".into(), &self.dec2.skip.bias));
        v.push(("dec3.t.weight".into(), &self.dec3.t.weight));
        v.push(("dec3.t.bias".into(), &self.dec3.t.bias));
        v.push(("dec3.bn.gamma".into(), &self.dec3.bn.gamma));
        v.push(("dec3.bn.beta".into(), &self.dec3.bn.beta));
        v.push(("out.weight".into(), &self.out.weight));
        v.push(("out.bias".into(), &self.out.bias));
        v.push(("enc1.bn.running_mean".into(), &self.enc1.bn.running_mean));
        v.push(("enc1.bn.running_var".into(), &self.enc1.bn.running_var));
        v.push(("enc2.bn.running_mean".into(), &self.enc2.bn.running_mean));
        v.push(("enc2.bn.running_var".into(), &self.enc2.bn.running_var));
        v.push(("enc3.b1.running_mean".into(), &self.enc3.b1.running_mean));
        v.push(("enc3.b1.running_var".into(), &self.enc3.b1.running_var));
        v.push(("enc3.b2.running_mean".into(), &self.enc3.b2.running_mean));
        v.push(("enc3.b2.running_var".into(), &self.enc3.b2.running_var));
        v.push(("enc4.b1.running_mean".into(), &self.enc4.b1.running_mean));
        v.push(("enc4.b1.running_var".into(), &self.enc4.b1.running_var));
        v.push(("enc4.b2.running_mean".into(), &self.enc4.b2.running_mean));
        v.push(("enc4.b2.running_var".into(), &self.enc4.b2.running_var));
        v.push(("dec1.b1.running_mean".into(), &self.dec1.b1.running_mean));
        v.push(("dec1.b1.running_var".into(), &self.dec1.b1.running_var));
        v.push(("dec1.b2.running_mean".into(), &self.dec1.b2.running_mean));
        v.push(("dec1.b2.running_var".into(), &self.dec1.b2.running_var));
        v.push(("dec2.b1.running_mean".into(), &self.dec2.b1.running_mean));
        v.push(("dec2.b1.running_var".into(), &self.dec2.b1.running_var));
        v.push(("dec2.b2.running_mean".into(), &self.dec2.b2.running_mean));
        v.push(("dec2.b2.running_var".into(), &self.dec2.b2.running_var));
        v.push(("dec3.bn.running_mean".into(), &self.dec3.bn.running_mean));
        v.push(("dec3.bn.running_var".into(), &self.dec3.bn.running_var));
        v
    }

    /// Norm-layer running statistics, saved alongside the parameters.
    pub(crate) fn named_stats_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v: Vec<(String, &mut Tensor)> = Vec::new();
        v.push(("enc1.bn.running_mean".into(), &mut self.enc1.bn.running_mean));
        v.push(("enc1.bn.running_var".into(), &mut self.enc1.bn.running_var));
        v.push(("enc2.bn.running_mean".into(), &mut self.enc2.bn.running_mean));
        v.push(("enc2.bn.running_var".into(), &mut self.enc2.bn.running_var));
        v.push(("enc3.b1.running_mean".into(), &mut self.enc3.b1.running_mean));
        v.push(("enc3.b1.running_var".into(), &mut self.enc3.b1.running_var));
        v.push(("enc3.b2.running_mean".into(), &mut self.enc3.b2.running_mean));
        v.push(("enc3.b2.running_var".into(), &mut self.enc3.b2.running_var));
        v.push(("enc4.b1.running_mean".into(), &mut self.enc4.b1.running_mean));
        v.push(("enc4.b1.running_var".into(), &mut self.enc4.b1.running_var));
        v.push(("enc4.b2.running_mean".into(), &mut self.enc4.b2.running_mean));
        v.push(("enc4.b2.running_var".into(), &mut self.enc4.b2.running_var));
        v.push(("dec1.b1.running_mean".into(), &mut self.dec1.b1.running_mean));
        v.push(("dec1.b1.running_var".into(), &mut self.dec1.b1.running_var));
        v.push(("dec1.b2.running_mean".into(), &mut self.dec1.b2.running_mean));
        v.push(("dec1.b2.running_var".into(), &mut self.dec1.b2.running_var));
        v.push(("dec2.b1.running_mean".into(), &mut self.dec2.b1.running_mean));
        v.push(("dec2.b1.running_var".into(), &mut self.dec2.b1.running_var));
        v.push(("dec2.b2.running_mean".into(), &mut self.dec2.b2.running_mean));
        v.push(("dec2.b2.running_var".into(), &mut self.dec2.b2.running_var));
        v.push(("dec3.bn.running_mean".into(), &mut self.dec3.bn.running_mean));
        v.push(("dec3.bn.running_var".into(), &mut self.dec3.bn.running_var));
        v
    }
}
