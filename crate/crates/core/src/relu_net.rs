//! Explicit ReLU networks on pairs of unit vectors, with width and
//! weight-bound accounting.
//!
//! A network is a chain of affine layers with the ReLU applied after every
//! layer except the last; the input is the concatenation of the two sphere
//! points. Depth 2 means one hidden layer, depth 3 two. Each layer carries
//! the bound its entries were constructed under, so a bound evaluation can
//! be generated from a network value alone.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sphere_mc::sample_unit_vector;

/// Input unit-norm tolerance used when none is given explicitly.
pub const DEFAULT_UNIT_TOL: f64 = 1e-9;

/// A dense affine map with entries confined to [-bound, bound].
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer<F> {
    out_dim: usize,
    in_dim: usize,
    // row-major: weights[row * in_dim + col]
    weights: Vec<F>,
    bias: Vec<F>,
    declared_bound: F,
}

impl<F: Real> AffineLayer<F> {
    pub fn new(
        out_dim: usize,
        in_dim: usize,
        weights: Vec<F>,
        bias: Vec<F>,
        declared_bound: F,
    ) -> Result<Self> {
        if !(declared_bound > F::zero()) {
            return Err(Error::Domain("layer bound must be positive".into()));
        }
        if weights.len() != out_dim * in_dim || bias.len() != out_dim {
            return Err(Error::ShapeMismatch(format!(
                "layer {out_dim}x{in_dim}: got {} weights, {} biases",
                weights.len(),
                bias.len()
            )));
        }
        let layer = Self {
            out_dim,
            in_dim,
            weights,
            bias,
            declared_bound,
        };
        layer.check_entries()?;
        Ok(layer)
    }

    fn check_entries(&self) -> Result<()> {
        let max = self.max_abs_entry();
        if max > self.declared_bound {
            return Err(Error::Domain(format!(
                "layer entry magnitude {max} exceeds declared bound {}",
                self.declared_bound
            )));
        }
        Ok(())
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn bias(&self) -> &[F] {
        &self.bias
    }

    pub fn declared_bound(&self) -> F {
        self.declared_bound
    }

    pub fn max_abs_entry(&self) -> F {
        let mut max = F::zero();
        for &w in self.weights.iter().chain(&self.bias) {
            max = max.max(w.abs());
        }
        max
    }

    fn apply(&self, input: &[F], output: &mut Vec<F>) {
        output.clear();
        for row in 0..self.out_dim {
            let mut acc = self.bias[row];
            let base = row * self.in_dim;
            for (col, &x) in input.iter().enumerate() {
                acc = acc + self.weights[base + col] * x;
            }
            output.push(acc);
        }
    }
}

/// Result of a width/weight audit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundsCheck<F> {
    pub width: usize,
    pub max_abs_entry: F,
    pub ok: bool,
}

/// Analytic vs. measured pre-activation magnitude of the first layer.
#[derive(Debug, Clone, Copy)]
pub struct PreactivationBound<F> {
    pub analytic: F,
    pub empirical: F,
}

/// A depth-2 or depth-3 ReLU network on pairs of unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNetwork<F> {
    layers: Vec<AffineLayer<F>>,
    input_split: (usize, usize),
    declared_bound: F,
}

impl<F: Real> ReluNetwork<F> {
    pub fn new(
        layers: Vec<AffineLayer<F>>,
        input_split: (usize, usize),
        declared_bound: F,
    ) -> Result<Self> {
        if layers.len() < 2 || layers.len() > 3 {
            return Err(Error::ShapeMismatch(format!(
                "expected 2 or 3 layers, got {}",
                layers.len()
            )));
        }
        if layers[0].in_dim() != input_split.0 + input_split.1 {
            return Err(Error::ShapeMismatch(format!(
                "first layer expects {} inputs, split is {:?}",
                layers[0].in_dim(),
                input_split
            )));
        }
        for pair in layers.windows(2) {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer chain breaks: {} outputs feeding {} inputs",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        if layers.last().unwrap().out_dim() != 1 {
            return Err(Error::ShapeMismatch("final output must be scalar".into()));
        }
        if !(declared_bound > F::zero()) {
            return Err(Error::Domain("network bound must be positive".into()));
        }
        Ok(Self {
            layers,
            input_split,
            declared_bound,
        })
    }

    pub fn layers(&self) -> &[AffineLayer<F>] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_split(&self) -> (usize, usize) {
        self.input_split
    }

    pub fn declared_bound(&self) -> F {
        self.declared_bound
    }

    /// Max hidden-layer output dimension.
    pub fn width(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(AffineLayer::out_dim)
            .max()
            .unwrap_or(0)
    }

    /// Forward pass at the default unit-norm tolerance.
    pub fn evaluate(&self, x: &[F], x_prime: &[F]) -> Result<F> {
        self.evaluate_with_tol(x, x_prime, F::of(DEFAULT_UNIT_TOL))
    }

    /// Forward pass; inputs must be unit vectors within `unit_tol` (they are
    /// rejected, never silently normalized).
    pub fn evaluate_with_tol(&self, x: &[F], x_prime: &[F], unit_tol: F) -> Result<F> {
        self.check_inputs(x, x_prime, unit_tol)?;
        let mut current: Vec<F> = x.iter().chain(x_prime.iter()).copied().collect();
        let mut next = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.apply(&current, &mut next);
            if idx + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.max(F::zero());
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current[0])
    }

    /// Gradient of the output with respect to the concatenated input,
    /// split back into the two halves. The ReLU subgradient at 0 is 0.
    pub fn input_gradient(&self, x: &[F], x_prime: &[F], unit_tol: F) -> Result<(Vec<F>, Vec<F>)> {
        self.check_inputs(x, x_prime, unit_tol)?;
        let mut activations: Vec<Vec<F>> =
            vec![x.iter().chain(x_prime.iter()).copied().collect()];
        let mut masks: Vec<Vec<bool>> = Vec::new();
        let mut buf = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.apply(activations.last().unwrap(), &mut buf);
            if idx + 1 < self.layers.len() {
                masks.push(buf.iter().map(|v| *v > F::zero()).collect());
                for v in buf.iter_mut() {
                    *v = v.max(F::zero());
                }
            }
            activations.push(buf.clone());
        }
        // backward: start from the output layer's weight row
        let last = self.layers.last().unwrap();
        let mut grad: Vec<F> = last.weights().to_vec();
        for (layer, mask) in self.layers[..self.layers.len() - 1]
            .iter()
            .zip(&masks)
            .rev()
        {
            let mut next_grad = vec![F::zero(); layer.in_dim()];
            for row in 0..layer.out_dim() {
                if !mask[row] {
                    continue;
                }
                let g = grad[row];
                let base = row * layer.in_dim();
                for (col, ng) in next_grad.iter_mut().enumerate() {
                    *ng = *ng + g * layer.weights()[base + col];
                }
            }
            grad = next_grad;
        }
        let (d1, _) = self.input_split;
        let grad_prime = grad.split_off(d1);
        Ok((grad, grad_prime))
    }

    fn check_inputs(&self, x: &[F], x_prime: &[F], unit_tol: F) -> Result<()> {
        let (d1, d2) = self.input_split;
        if x.len() != d1 || x_prime.len() != d2 {
            return Err(Error::ShapeMismatch(format!(
                "inputs of length {}/{} against split {:?}",
                x.len(),
                x_prime.len(),
                self.input_split
            )));
        }
        for v in [x, x_prime] {
            let norm = v.iter().map(|a| *a * *a).sum::<F>().sqrt();
            if (norm - F::one()).abs() > unit_tol {
                return Err(Error::NotUnitVector {
                    norm: norm.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Audits the stored entries against the declared network bound.
    pub fn validate_bounds(&self) -> BoundsCheck<F> {
        let mut max = F::zero();
        for layer in &self.layers {
            max = max.max(layer.max_abs_entry());
        }
        BoundsCheck {
            width: self.width(),
            max_abs_entry: max,
            ok: max <= self.declared_bound,
        }
    }

    /// Analytic bound sqrt(4d) B + B on the first-layer pre-activation over
    /// unit-vector inputs, next to an empirical max over `samples` random
    /// pairs. Depth-2 networks only.
    pub fn max_preactivation_bound(
        &self,
        samples: usize,
        seed: u64,
    ) -> Result<PreactivationBound<F>> {
        if self.depth() != 2 {
            return Err(Error::ShapeMismatch(
                "pre-activation bound is defined for depth-2 networks".into(),
            ));
        }
        let (d1, d2) = self.input_split;
        if d1 != d2 {
            return Err(Error::ShapeMismatch(
                "pre-activation bound assumes equal input halves".into(),
            ));
        }
        let b = self.declared_bound;
        let analytic = (F::of(4.0) * F::of_usize(d1)).sqrt() * b + b;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut empirical = F::zero();
        let mut buf = Vec::new();
        for _ in 0..samples {
            let x = sample_unit_vector(d1, &mut rng);
            let y = sample_unit_vector(d2, &mut rng);
            let joined: Vec<F> = x
                .iter()
                .chain(y.iter())
                .map(|&v| F::of(v))
                .collect();
            self.layers[0].apply(&joined, &mut buf);
            for v in &buf {
                empirical = empirical.max(v.abs());
            }
        }
        Ok(PreactivationBound {
            analytic,
            empirical,
        })
    }

    // ------------------------------------------------------------------
    // serialization
    // ------------------------------------------------------------------

    pub fn save(&self, path: impl AsRef<Path>, mode: SerializationMode) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_to(&mut writer, mode)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        Self::read_from(&mut reader)
    }

    pub fn write_to(&self, w: &mut impl Write, mode: SerializationMode) -> Result<()> {
        match mode {
            SerializationMode::Binary => self.write_binary(w),
            SerializationMode::Text => self.write_text(w),
        }
    }

    fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.input_split.0 as u32).to_le_bytes())?;
        w.write_all(&(self.input_split.1 as u32).to_le_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        w.write_all(&self.declared_bound.as_f64().to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
            w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
            w.write_all(&layer.declared_bound().as_f64().to_le_bytes())?;
            for &v in layer.weights() {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
            for &v in layer.bias() {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        Ok(())
    }

    fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", TEXT_MAGIC)?;
        writeln!(w, "input_split {} {}", self.input_split.0, self.input_split.1)?;
        writeln!(w, "declared_bound {}", self.declared_bound.as_f64())?;
        writeln!(w, "layers {}", self.layers.len())?;
        for layer in &self.layers {
            writeln!(
                w,
                "layer {} {} {}",
                layer.out_dim(),
                layer.in_dim(),
                layer.declared_bound().as_f64()
            )?;
            for row in 0..layer.out_dim() {
                let base = row * layer.in_dim();
                write!(w, "w")?;
                for col in 0..layer.in_dim() {
                    write!(w, " {}", layer.weights()[base + col].as_f64())?;
                }
                writeln!(w)?;
            }
            write!(w, "b")?;
            for &v in layer.bias() {
                write!(w, " {}", v.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::parse_binary(&bytes[BINARY_MAGIC.len()..])
        } else if bytes.starts_with(TEXT_MAGIC.as_bytes()) {
            let text = std::str::from_utf8(&bytes)
                .map_err(|_| Error::Format("text network file is not UTF-8".into()))?;
            Self::parse_text(text)
        } else {
            Err(Error::Format(
                "unrecognized network file (bad magic or unsupported version)".into(),
            ))
        }
    }

    fn parse_binary(mut bytes: &[u8]) -> Result<Self> {
        let d1 = take_u32(&mut bytes)? as usize;
        let d2 = take_u32(&mut bytes)? as usize;
        let n_layers = take_u32(&mut bytes)? as usize;
        let declared = F::of(take_f64(&mut bytes)?);
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let out_dim = take_u32(&mut bytes)? as usize;
            let in_dim = take_u32(&mut bytes)? as usize;
            let layer_bound = F::of(take_f64(&mut bytes)?);
            let mut weights = Vec::with_capacity(out_dim * in_dim);
            for _ in 0..out_dim * in_dim {
                weights.push(F::of(take_f64(&mut bytes)?));
            }
            let mut bias = Vec::with_capacity(out_dim);
            for _ in 0..out_dim {
                bias.push(F::of(take_f64(&mut bytes)?));
            }
            layers.push(AffineLayer::new(out_dim, in_dim, weights, bias, layer_bound)?);
        }
        if !bytes.is_empty() {
            return Err(Error::Format("trailing bytes after network data".into()));
        }
        Self::new(layers, (d1, d2), declared)
    }

    fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        lines.next(); // magic, already checked
        let split_line = expect_line(&mut lines, "input_split")?;
        let d1: usize = parse_field(&split_line, 1)?;
        let d2: usize = parse_field(&split_line, 2)?;
        let bound_line = expect_line(&mut lines, "declared_bound")?;
        let declared = F::of(parse_field::<f64>(&bound_line, 1)?);
        let layers_line = expect_line(&mut lines, "layers")?;
        let n_layers: usize = parse_field(&layers_line, 1)?;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let header = expect_line(&mut lines, "layer")?;
            let out_dim: usize = parse_field(&header, 1)?;
            let in_dim: usize = parse_field(&header, 2)?;
            let layer_bound = F::of(parse_field::<f64>(&header, 3)?);
            let mut weights = Vec::with_capacity(out_dim * in_dim);
            for _ in 0..out_dim {
                let row = expect_line(&mut lines, "w")?;
                let entries: Vec<&str> = row.split_whitespace().skip(1).collect();
                if entries.len() != in_dim {
                    return Err(Error::Format(format!(
                        "weight row with {} entries, expected {in_dim}",
                        entries.len()
                    )));
                }
                for e in entries {
                    weights.push(F::of(e.parse::<f64>().map_err(|_| {
                        Error::Format(format!("bad weight entry '{e}'"))
                    })?));
                }
            }
            let bias_line = expect_line(&mut lines, "b")?;
            let mut bias = Vec::with_capacity(out_dim);
            for e in bias_line.split_whitespace().skip(1) {
                bias.push(F::of(e.parse::<f64>().map_err(|_| {
                    Error::Format(format!("bad bias entry '{e}'"))
                })?));
            }
            if bias.len() != out_dim {
                return Err(Error::Format("bias length mismatch".into()));
            }
            layers.push(AffineLayer::new(out_dim, in_dim, weights, bias, layer_bound)?);
        }
        Self::new(layers, (d1, d2), declared)
    }
}

/// On-disk representation: decimal text (shortest round-trip) or IEEE-754
/// little-endian doubles. Binary round-trips bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerializationMode {
    Text,
    Binary,
}

const BINARY_MAGIC: &[u8] = b"relunet-bin-v1\n";
const TEXT_MAGIC: &str = "relunet-text-v1";

fn take_u32(bytes: &mut &[u8]) -> Result<u32> {
    if bytes.len() < 4 {
        return Err(Error::Format("truncated network file".into()));
    }
    let (head, tail) = bytes.split_at(4);
    *bytes = tail;
    Ok(u32::from_le_bytes(head.try_into().unwrap()))
}

fn take_f64(bytes: &mut &[u8]) -> Result<f64> {
    if bytes.len() < 8 {
        return Err(Error::Format("truncated network file".into()));
    }
    let (head, tail) = bytes.split_at(8);
    *bytes = tail;
    Ok(f64::from_le_bytes(head.try_into().unwrap()))
}

fn expect_line<'a>(lines: &mut impl Iterator<Item = &'a str>, keyword: &str) -> Result<String> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("missing '{keyword}' line")))?;
    if !line.starts_with(keyword) {
        return Err(Error::Format(format!(
            "expected '{keyword}' line, found '{line}'"
        )));
    }
    Ok(line.to_string())
}

fn parse_field<T: std::str::FromStr>(line: &str, index: usize) -> Result<T> {
    line.split_whitespace()
        .nth(index)
        .ok_or_else(|| Error::Format(format!("missing field {index} in '{line}'")))?
        .parse::<T>()
        .map_err(|_| Error::Format(format!("bad field {index} in '{line}'")))
}
