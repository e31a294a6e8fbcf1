//! Reproducible ℓ₁ feasibility instances `min_{x ∈ dom h} ‖Ax − b‖₁` with
//! `b = A x*`, their problem constants, and a binary container format.
//!
//! Every random array is drawn from its own ChaCha8 stream keyed by the seed,
//! so generation is independent of the order in which arrays are built.

use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist, CsrMatrix, DenseMatrix, Matrix};
use crate::problem::{CompositeObjective, L1Residual, ProblemError, SimpleTerm};

const MAGIC: &[u8; 8] = b"ADGPBINS";
const VERSION: u32 = 1;

const STREAM_N: u64 = 1;
const STREAM_U: u64 = 2;
const STREAM_XSTAR: u64 = 3;
const STREAM_X0: u64 = 4;
const STREAM_POSITIONS: u64 = 5;
const STREAM_D: u64 = 6;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid dimensions m = {m}, n = {n}")]
    InvalidDims { m: usize, n: usize },
    #[error("degenerate instance: density {density} gives {nnz} nonzeros")]
    Degenerate { density: f64, nnz: usize },
    #[error("box radius {radius} excludes a point with component {max_component}")]
    RadiusTooSmall { radius: f64, max_component: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Dense,
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub kind: InstanceKind,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
    pub x0: Vec<f64>,
    pub phi_star: f64,
    pub domain: SimpleTerm,
    pub density: f64,
    pub seed: u64,
}

/// `M`, `L`, `D` and `d₀` for an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConstants {
    pub m_const: f64,
    pub l_const: f64,
    /// Stored as `null` in JSON when infinite.
    #[serde(with = "finite_or_null")]
    pub diameter: f64,
    pub d0: f64,
}

/// Seeded sampler over one ChaCha8 stream.
pub struct StreamSampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl StreamSampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box–Muller; both outputs of a pair are used.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Uniform integer in `0..bound`, by rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}

fn squared_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut s = StreamSampler::new(seed, stream);
    (0..n).map(|_| s.normal().powi(2)).collect()
}

fn squared_open_uniforms(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut s = StreamSampler::new(seed, stream);
    (0..n).map(|_| s.uniform_open().powi(2)).collect()
}

/// `k` distinct sorted indices from `0..total` (Floyd's algorithm).
fn sample_positions(sampler: &mut StreamSampler, total: u64, k: usize) -> Vec<u64> {
    let mut chosen = std::collections::HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in (total - k as u64)..total {
        let t = sampler.below(j + 1);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out.sort_unstable();
    out
}

fn finish(kind: InstanceKind, a: Matrix, density: f64, seed: u64) -> Instance {
    let n = a.cols();
    let x_star = squared_normals(seed, STREAM_XSTAR, n);
    let x0 = squared_open_uniforms(seed, STREAM_X0, n);
    let mut b = vec![0.0; a.rows()];
    a.mul_vec(&x_star, &mut b);
    Instance { kind, a, b, x_star, x0, phi_star: 0.0, domain: SimpleTerm::NonnegOrthant { dim: n }, density, seed }
}

/// `A = N U` with `N` standard normal (m×n) and `U ~ U[0,100]` (n×n).
pub fn gen_dense(m: usize, n: usize, seed: u64) -> Result<Instance, InstanceError> {
    if m == 0 || n == 0 {
        return Err(InstanceError::InvalidDims { m, n });
    }
    let mut sn = StreamSampler::new(seed, STREAM_N);
    let nmat = DenseMatrix { rows: m, cols: n, data: (0..m * n).map(|_| sn.normal()).collect() };
    let mut su = StreamSampler::new(seed, STREAM_U);
    let umat = DenseMatrix { rows: n, cols: n, data: (0..n * n).map(|_| 100.0 * su.uniform()).collect() };
    Ok(finish(InstanceKind::Dense, Matrix::Dense(nmat.matmul(&umat)), 1.0, seed))
}

/// `A = D N` with sparse standard-normal `N` at uniform positions and `D ~ U[0,1000]` diagonal.
pub fn gen_sparse(m: usize, n: usize, density: f64, seed: u64) -> Result<Instance, InstanceError> {
    if m == 0 || n == 0 {
        return Err(InstanceError::InvalidDims { m, n });
    }
    let total = (m as u64) * (n as u64);
    let nnz = if density > 0.0 && density <= 1.0 { (density * total as f64).round() as usize } else { 0 };
    if nnz == 0 {
        return Err(InstanceError::Degenerate { density, nnz });
    }
    let mut sp = StreamSampler::new(seed, STREAM_POSITIONS);
    let positions = sample_positions(&mut sp, total, nnz);
    let mut sd = StreamSampler::new(seed, STREAM_D);
    let d: Vec<f64> = (0..m).map(|_| 1000.0 * sd.uniform()).collect();
    let mut sn = StreamSampler::new(seed, STREAM_N);
    let triplets: Vec<(usize, usize, f64)> = positions
        .iter()
        .map(|&p| {
            let (i, j) = ((p / n as u64) as usize, (p % n as u64) as usize);
            (i, j, d[i] * sn.normal())
        })
        .collect();
    let a = CsrMatrix::from_sorted_triplets(m, n, &triplets);
    Ok(finish(InstanceKind::Sparse, Matrix::Sparse(a), density, seed))
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn id(&self) -> String {
        let kind = match self.kind {
            InstanceKind::Dense => "dense",
            InstanceKind::Sparse => "sparse",
        };
        let boxed = if self.domain.is_bounded() { "-box" } else { "" };
        format!("{kind}-{}x{}-s{}{boxed}", self.a.rows(), self.a.cols(), self.seed)
    }

    pub fn objective(&self, with_phi_star: bool) -> CompositeObjective {
        let f = Arc::new(L1Residual::new(self.a.clone(), self.b.clone()));
        CompositeObjective::new(f, self.domain.clone(), with_phi_star.then_some(self.phi_star))
    }

    pub fn constants(&self) -> InstanceConstants {
        compute_constants(self)
    }

    /// The same data over `dom h = [0, radius]ⁿ`.
    pub fn boxed_variant(&self, radius: f64) -> Result<Instance, InstanceError> {
        let max_component = self.x_star.iter().chain(&self.x0).fold(0.0f64, |a, &v| a.max(v));
        if !(radius >= max_component) {
            return Err(InstanceError::RadiusTooSmall { radius, max_component });
        }
        let n = self.dim();
        let domain = SimpleTerm::boxed(vec![0.0; n], vec![radius; n])?;
        Ok(Instance { domain, ..self.clone() })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let n = self.dim();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[match self.a {
            Matrix::Dense(_) => 0u8,
            Matrix::Sparse(_) => 1u8,
        }])?;
        w.write_all(&(self.a.rows() as u64).to_le_bytes())?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&self.density.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.phi_star.to_le_bytes())?;
        match &self.domain {
            SimpleTerm::Zero { .. } => w.write_all(&[0u8])?,
            SimpleTerm::NonnegOrthant { .. } => w.write_all(&[1u8])?,
            SimpleTerm::Box { lower, upper } => {
                w.write_all(&[2u8])?;
                write_f64s(w, lower)?;
                write_f64s(w, upper)?;
            }
        }
        match &self.a {
            Matrix::Dense(d) => write_f64s(w, &d.data)?,
            Matrix::Sparse(s) => {
                w.write_all(&(s.nnz() as u64).to_le_bytes())?;
                for &p in &s.indptr {
                    w.write_all(&(p as u64).to_le_bytes())?;
                }
                for &j in &s.indices {
                    w.write_all(&(j as u64).to_le_bytes())?;
                }
                write_f64s(w, &s.values)?;
            }
        }
        write_f64s(w, &self.b)?;
        write_f64s(w, &self.x_star)?;
        write_f64s(w, &self.x0)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Instance, InstanceError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(InstanceError::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(InstanceError::Format(format!("unsupported version {version}")));
        }
        let tag = read_u8(r)?;
        let m = read_u64(r)? as usize;
        let n = read_u64(r)? as usize;
        let density = read_f64(r)?;
        let seed = read_u64(r)?;
        let phi_star = read_f64(r)?;
        let domain = match read_u8(r)? {
            0 => SimpleTerm::Zero { dim: n },
            1 => SimpleTerm::NonnegOrthant { dim: n },
            2 => {
                let lower = read_f64s(r, n)?;
                let upper = read_f64s(r, n)?;
                SimpleTerm::boxed(lower, upper)?
            }
            t => return Err(InstanceError::Format(format!("unknown domain tag {t}"))),
        };
        let (kind, a) = match tag {
            0 => (InstanceKind::Dense, Matrix::Dense(DenseMatrix { rows: m, cols: n, data: read_f64s(r, m * n)? })),
            1 => {
                let nnz = read_u64(r)? as usize;
                let indptr = (0..=m).map(|_| read_u64(r).map(|v| v as usize)).collect::<io::Result<Vec<_>>>()?;
                let indices = (0..nnz).map(|_| read_u64(r).map(|v| v as usize)).collect::<io::Result<Vec<_>>>()?;
                let values = read_f64s(r, nnz)?;
                if indptr.last() != Some(&nnz) || indices.iter().any(|&j| j >= n) {
                    return Err(InstanceError::Format("inconsistent CSR arrays".into()));
                }
                (InstanceKind::Sparse, Matrix::Sparse(CsrMatrix { rows: m, cols: n, indptr, indices, values }))
            }
            t => return Err(InstanceError::Format(format!("unknown matrix tag {t}"))),
        };
        let b = read_f64s(r, m)?;
        let x_star = read_f64s(r, n)?;
        let x0 = read_f64s(r, n)?;
        Ok(Instance { kind, a, b, x_star, x0, phi_star, domain, density, seed })
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Instance, InstanceError> {
        let mut r = io::BufReader::new(std::fs::File::open(path)?);
        Instance::read_from(&mut r)
    }

    /// Writes `A` in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "% {}", self.id())?;
        match &self.a {
            Matrix::Dense(d) => {
                writeln!(w, "{} {} {}", d.rows, d.cols, d.data.len())?;
                for i in 0..d.rows {
                    for (j, v) in d.row(i).iter().enumerate() {
                        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
                    }
                }
            }
            Matrix::Sparse(s) => {
                writeln!(w, "{} {} {}", s.rows, s.cols, s.nnz())?;
                for i in 0..s.rows {
                    let (idx, val) = s.row(i);
                    for (&j, v) in idx.iter().zip(val) {
                        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `L = 0`, `M = ‖(Σ_i |A_ij|)_j‖`, `D` from the domain and `d₀ = ‖x₀ − x*‖`.
pub fn compute_constants(inst: &Instance) -> InstanceConstants {
    let m_const = inst.a.col_abs_sums().iter().map(|s| s * s).sum::<f64>().sqrt();
    InstanceConstants { m_const, l_const: 0.0, diameter: inst.domain.diameter(), d0: dist(&inst.x0, &inst.x_star) }
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn write_f64s<W: Write>(w: &mut W, v: &[f64]) -> io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u8<R: Read>(r: &mut R) -> io::Result<u8> {
    Ok(read_array::<R, 1>(r)?[0])
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| read_f64(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_instance() -> Instance {
        let a = Matrix::Dense(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        Instance {
            kind: InstanceKind::Dense,
            a,
            b: vec![1.0, 2.0],
            x_star: vec![1.0, 2.0],
            x0: vec![1.0, 2.0],
            phi_star: 0.0,
            domain: SimpleTerm::NonnegOrthant { dim: 2 },
            density: 1.0,
            seed: 0,
        }
    }

    #[test]
    fn constants_identity() {
        let c = compute_constants(&identity_instance());
        assert!((c.m_const - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.l_const, 0.0);
        assert_eq!(c.d0, 0.0);
        assert!(c.diameter.is_infinite());
    }

    #[test]
    fn constants_json_keeps_infinite_diameter() {
        let c = compute_constants(&identity_instance());
        let back: InstanceConstants = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn constants_single_row() {
        let mut inst = identity_instance();
        inst.a = Matrix::Dense(DenseMatrix::from_rows(&[vec![1.0, -1.0]]));
        inst.b = vec![-1.0];
        assert!((compute_constants(&inst).m_const - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dense_shapes_and_optimum() {
        let inst = gen_dense(5, 7, 3).unwrap();
        assert_eq!((inst.a.rows(), inst.a.cols(), inst.b.len()), (5, 7, 5));
        assert!(inst.x_star.iter().all(|&v| v >= 0.0));
        assert!(inst.x0.iter().all(|&v| v > 0.0 && v < 1.0));
        let phi = inst.objective(true).eval_phi(&inst.x_star).unwrap();
        let scale: f64 = inst.b.iter().map(|v| v.abs()).sum();
        assert!(phi <= 1e-8 * scale, "{phi}");
    }

    #[test]
    fn sparse_density_and_scaling() {
        let inst = gen_sparse(200, 300, 0.02, 9).unwrap();
        let ratio = inst.a.nnz() as f64 / (200.0 * 300.0);
        assert!((ratio - 0.02).abs() <= 0.002, "{ratio}");
        let phi = inst.objective(true).eval_phi(&inst.x_star).unwrap();
        assert!(phi <= 1e-8 * inst.b.iter().map(|v| v.abs()).sum::<f64>());
        assert!(gen_sparse(10, 10, 0.0, 1).is_err());
        assert!(gen_sparse(10, 10, 1e-4, 1).is_err());
    }

    #[test]
    fn sparse_rows_follow_diagonal_scale() {
        let inst = gen_sparse(50, 40, 0.3, 4).unwrap();
        let mut sd = StreamSampler::new(4, STREAM_D);
        let d: Vec<f64> = (0..50).map(|_| 1000.0 * sd.uniform()).collect();
        let mut sn = StreamSampler::new(4, STREAM_N);
        let Matrix::Sparse(s) = &inst.a else { panic!("expected CSR") };
        for (i, di) in d.iter().enumerate() {
            for v in s.row(i).1 {
                assert_eq!(*v, di * sn.normal());
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_dense(4, 6, 11).unwrap();
        let b = gen_dense(4, 6, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_dense(4, 6, 12).unwrap());
    }

    #[test]
    fn boxed_variant_checks_radius() {
        let inst = identity_instance();
        let b = inst.boxed_variant(10.0).unwrap();
        assert!((compute_constants(&b).diameter - 10.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.objective(true).eval_phi(&b.x_star).unwrap(), 0.0);
        assert!(matches!(inst.boxed_variant(1.0), Err(InstanceError::RadiusTooSmall { .. })));
    }

    #[test]
    fn container_round_trip() {
        for inst in [gen_dense(3, 4, 1).unwrap(), gen_sparse(6, 5, 0.4, 2).unwrap().boxed_variant(50.0).unwrap()] {
            let mut buf = Vec::new();
            inst.write_to(&mut buf).unwrap();
            let back = Instance::read_from(&mut buf.as_slice()).unwrap();
            assert_eq!(back, inst);
        }
    }

    #[test]
    fn matrix_market_header() {
        let inst = gen_sparse(6, 5, 0.4, 2).unwrap();
        let mut buf = Vec::new();
        inst.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "%%MatrixMarket matrix coordinate real general");
        lines.next();
        assert_eq!(lines.next().unwrap(), format!("6 5 {}", inst.a.nnz()));
    }
}
