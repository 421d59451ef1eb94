//! Fully connected network with rectifier hidden layers, hand-written
//! backpropagation and an Adam optimizer.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::rng::GameRng;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// (outputs, inputs)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { w: Array2::zeros((outputs, inputs)), b: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Parameter gradients, shaped like the network.
pub type Grads = Mlp;

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self { layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() }
    }

    /// Uniform He-style initialization; biases start at zero.
    pub fn new(sizes: &[usize], rng: &mut GameRng) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs() as f64).sqrt();
            layer.w.mapv_inplace(|_| (rng.unit() * 2.0 - 1.0) * bound);
        }
        if let Some(last) = net.layers.last_mut() {
            last.w.mapv_inplace(|x| x * 0.1);
        }
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(l.b.iter()).all(|x| x.is_finite()))
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>, Error> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: x.len() });
        }
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.w.dot(&h) + &layer.b;
            if i < last {
                h.mapv_inplace(relu);
            }
        }
        Ok(h)
    }

    /// Rows of `x` are examples.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, Error> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        Ok(self.activations(x).pop().expect("output layer").1)
    }

    /// Which hidden units are active (pre-activation > 0), example by example.
    pub fn active_units(&self, x: ArrayView2<f64>) -> Vec<bool> {
        let acts = self.activations(x);
        acts[..acts.len() - 1].iter().flat_map(|(z, _)| z.iter().map(|&v| v > 0.0).collect::<Vec<_>>()).collect()
    }

    /// (pre-activation, post-activation) per layer.
    fn activations(&self, x: ArrayView2<f64>) -> Vec<(Array2<f64>, Array2<f64>)> {
        let last = self.layers.len() - 1;
        let mut out: Vec<(Array2<f64>, Array2<f64>)> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = match out.last() {
                Some((_, a)) => a.view(),
                None => x,
            };
            let z = input.dot(&layer.w.t()) + &layer.b;
            let a = if i < last { z.mapv(relu) } else { z.clone() };
            out.push((z, a));
        }
        out
    }

    /// Mean squared error of Q(s, a) against `targets` over the batch.
    pub fn loss(&self, x: ArrayView2<f64>, actions: &[usize], targets: &[f64]) -> f64 {
        let q = self.activations(x).pop().expect("output").1;
        let n = actions.len() as f64;
        actions
            .iter()
            .zip(targets)
            .enumerate()
            .map(|(i, (&a, &y))| (q[[i, a]] - y).powi(2))
            .sum::<f64>()
            / n
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, actions: &[usize], targets: &[f64]) -> (f64, Grads) {
        let n = actions.len();
        let acts = self.activations(x);
        let q = &acts.last().expect("output").1;
        let mut dz = Array2::<f64>::zeros(q.raw_dim());
        let mut loss = 0.0;
        for (i, (&a, &y)) in actions.iter().zip(targets).enumerate() {
            let err = q[[i, a]] - y;
            loss += err * err;
            dz[[i, a]] = 2.0 * err / n as f64;
        }
        loss /= n as f64;

        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 { x } else { acts[l - 1].1.view() };
            let dw = dz.t().dot(&input);
            let db = dz.sum_axis(Axis(0));
            if l > 0 {
                let mut da = dz.dot(&self.layers[l].w);
                Zip::from(&mut da).and(&acts[l - 1].0).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                dz = da;
            }
            grads.push(Layer { w: dw, b: db });
        }
        grads.reverse();
        (loss, Mlp { layers: grads })
    }

    /// Visits every parameter in a fixed order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()))
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Mlp,
    v: Mlp,
    t: u64,
}

impl Adam {
    pub fn new(net: &Mlp) -> Self {
        let sizes = net.sizes();
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, m: Mlp::zeros(&sizes), v: Mlp::zeros(&sizes), t: 0 }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Grads, lr: f64) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let step = lr * c2.sqrt() / c1;
        let eps = self.epsilon * c2.sqrt();
        let params = net.params_mut().zip(self.m.params_mut()).zip(self.v.params_mut()).zip(grads.params());
        for (((p, m), v), &g) in params {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= step * *m / (v.sqrt() + eps);
        }
    }
}

const MAGIC: &[u8; 8] = b"DQNCKPT\0";
const VERSION: u32 = 1;

/// Binary checkpoint: magic, version, config JSON, layer shapes, then
/// row-major weights and biases as little-endian f64.
pub fn encode_checkpoint(net: &Mlp, config_json: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + net.parameter_count() * 8 + config_json.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    out.extend_from_slice(config_json.as_bytes());
    out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
    for l in &net.layers {
        out.extend_from_slice(&(l.outputs() as u32).to_le_bytes());
        out.extend_from_slice(&(l.inputs() as u32).to_le_bytes());
    }
    for l in &net.layers {
        for x in l.w.iter().chain(l.b.iter()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, Error> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Returns the network and the echoed config JSON.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Mlp, String), Error> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let len = r.u32()? as usize;
    let config = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| Error::Checkpoint("config is not UTF-8".into()))?;
    let n_layers = r.u32()? as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(Error::Checkpoint(format!("bad layer count {n_layers}")));
    }
    let mut shapes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        shapes.push((r.u32()? as usize, r.u32()? as usize));
    }
    for w in shapes.windows(2) {
        if w[0].0 != w[1].1 {
            return Err(Error::Checkpoint("layer shapes do not chain".into()));
        }
    }
    let mut layers = Vec::with_capacity(n_layers);
    for &(rows, cols) in &shapes {
        let mut w = Array2::zeros((rows, cols));
        for x in w.iter_mut() {
            *x = r.f64()?;
        }
        let mut b = Array1::zeros(rows);
        for x in b.iter_mut() {
            *x = r.f64()?;
        }
        layers.push(Layer { w, b });
    }
    if r.at != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok((Mlp { layers }, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small() -> Mlp {
        Mlp::new(&[4, 6, 5, 3], &mut GameRng::new(2))
    }

    #[test]
    fn zero_params_give_zero_output() {
        let net = Mlp::zeros(&[140, 256, 256, 34]);
        let out = net.forward(Array1::from_elem(140, 0.7).view()).unwrap();
        assert_eq!(out.len(), 34);
        assert!(out.iter().all(|&x| x == 0.0));
        assert_eq!(net.sizes(), vec![140, 256, 256, 34]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            small().forward(Array1::zeros(3).view()),
            Err(Error::ShapeMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn batch_matches_single() {
        let net = small();
        let x = array![[0.1, 0.2, 0.3, 0.4], [1.0, -1.0, 0.5, 0.0]];
        let q = net.forward_batch(x.view()).unwrap();
        for i in 0..2 {
            let single = net.forward(x.row(i)).unwrap();
            for j in 0..3 {
                assert!((single[j] - q[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_layer_is_linear() {
        let mut net = small();
        for l in &mut net.layers {
            l.b.fill(0.0);
        }
        let x = array![0.3, 0.1, 0.9, 0.2];
        let q1 = net.forward(x.view()).unwrap();
        net.layers.last_mut().unwrap().w.mapv_inplace(|w| 2.0 * w);
        let q2 = net.forward(x.view()).unwrap();
        for j in 0..3 {
            assert!((q2[j] - 2.0 * q1[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_loss_has_zero_gradient() {
        let net = small();
        let x = array![[0.1, 0.2, 0.3, 0.4]];
        let q = net.forward(x.row(0)).unwrap();
        let (loss, g) = net.loss_and_grad(x.view(), &[1], &[q[1]]);
        assert_eq!(loss, 0.0);
        assert!(g.params().all(|&p| p == 0.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = small();
        let bytes = encode_checkpoint(&net, "{\"a\":1}");
        let (back, cfg) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(cfg, "{\"a\":1}");
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).is_err());
    }

    #[test]
    fn adam_reduces_loss() {
        let mut net = small();
        let mut opt = Adam::new(&net);
        let x = array![[0.1, 0.2, 0.3, 0.4], [0.5, 0.1, 0.0, 0.9]];
        let before = net.loss(x.view(), &[0, 2], &[1.0, -1.0]);
        for _ in 0..200 {
            let (_, g) = net.loss_and_grad(x.view(), &[0, 2], &[1.0, -1.0]);
            opt.step(&mut net, &g, 1e-2);
        }
        assert!(net.loss(x.view(), &[0, 2], &[1.0, -1.0]) < before * 0.01);
    }
}
