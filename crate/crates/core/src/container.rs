//! Binary containers for algebra elements and Fock vectors, with a JSON
//! provenance sidecar.
//!
//! Both formats are little-endian, open with an eight-byte magic tag and a
//! fixed header, and carry enough deformation data to rebuild kernels
//! exactly. Serialisation is deterministic: writing the same value twice
//! produces identical bytes, and the sidecar records a SHA-256 digest of
//! the payload so external tooling can detect drift without parsing it.

use std::collections::HashMap;
use std::io::{Cursor, Read, Write as IoWrite};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deform::MultiplicativeDeformation;
use crate::element::{PairKernel, TensorElement, TensorTerm};
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::grid::SpacetimeGrid;
use crate::qmatrix::QMatrix;
use crate::quadrature::{OnShellRule, RuleKind};
use crate::rfunc::DeformationFunction;
use crate::testfn::{SupportBox, TestFunction};

type C = Complex64;

const ELEMENT_MAGIC: &[u8; 8] = b"WFRM0001";
const FOCK_MAGIC: &[u8; 8] = b"WFCK0001";

/// Provenance sidecar written next to every container.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub sha256: String,
    pub payload_bytes: usize,
    pub description: SidecarPayload,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SidecarPayload {
    Element {
        d: usize,
        points_per_axis: usize,
        extent: f64,
        truncation: usize,
        terms: usize,
        max_degree: usize,
    },
    Fock {
        rule: String,
        mass: f64,
        nodes: usize,
        span: f64,
        particle_cap: usize,
    },
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_i32(buf: &mut Vec<u8>, v: i32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_i64(buf: &mut Vec<u8>, v: i64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_c(buf: &mut Vec<u8>, v: C) {
    put_f64(buf, v.re);
    put_f64(buf, v.im);
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader {
            cur: Cursor::new(data),
        }
    }

    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut out = vec![0u8; n];
        self.cur
            .read_exact(&mut out)
            .map_err(|_| Error::ConfigInvalid("container is truncated".into()))?;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn c(&mut self) -> Result<C> {
        let re = self.f64()?;
        let im = self.f64()?;
        Ok(C::new(re, im))
    }

    fn done(&self) -> bool {
        self.cur.position() as usize == self.cur.get_ref().len()
    }
}

fn encode_deformation(buf: &mut Vec<u8>, def: &MultiplicativeDeformation) {
    put_f64(buf, def.r().exponential_coefficient());
    put_u32(buf, def.r().zeros().len() as u32);
    for z in def.r().zeros() {
        put_c(buf, *z);
    }
    let q = def.q();
    put_u32(buf, q.dim() as u32);
    put_f64(buf, q.kappa());
    put_f64(buf, q.kappa_prime());
}

fn decode_deformation(r: &mut Reader) -> Result<MultiplicativeDeformation> {
    let c = r.f64()?;
    let nz = r.u32()? as usize;
    let mut zeros = Vec::with_capacity(nz);
    for _ in 0..nz {
        zeros.push(r.c()?);
    }
    let rf = DeformationFunction::new(c, zeros)?;
    let d = r.u32()? as usize;
    let kappa = r.f64()?;
    let kappa_prime = r.f64()?;
    Ok(MultiplicativeDeformation::new(
        rf,
        QMatrix::new(d, kappa, kappa_prime)?,
    ))
}

/// Serialises an element to its canonical byte representation.
pub fn element_to_bytes(e: &TensorElement) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(ELEMENT_MAGIC);
    let g = e.grid();
    put_u32(&mut buf, g.dim() as u32);
    put_u32(&mut buf, g.points_per_axis() as u32);
    put_f64(&mut buf, g.extent());
    put_u32(&mut buf, g.n_trunc() as u32);
    put_c(&mut buf, e.scalar_part());
    put_u32(&mut buf, e.terms().len() as u32);
    for term in e.terms() {
        put_c(&mut buf, term.coeff);
        put_u32(&mut buf, term.degree() as u32);
        for f in &term.factors {
            let s = f.support();
            for a in 0..g.dim() {
                put_i64(&mut buf, s.lo[a]);
                put_u64(&mut buf, s.shape[a] as u64);
            }
            for v in f.values() {
                put_c(&mut buf, *v);
            }
        }
        put_u32(&mut buf, term.kernels.len() as u32);
        for k in &term.kernels {
            put_u32(&mut buf, k.left as u32);
            put_u32(&mut buf, k.right as u32);
            put_i32(&mut buf, k.power);
            encode_deformation(&mut buf, &k.deformation);
        }
    }
    buf
}

/// Parses an element from bytes produced by [`element_to_bytes`].
/// Structurally identical kernel deformations share one allocation.
pub fn element_from_bytes(data: &[u8]) -> Result<TensorElement> {
    let mut r = Reader::new(data);
    if r.bytes(8)? != ELEMENT_MAGIC {
        return Err(Error::ConfigInvalid(
            "not an element container (bad magic)".into(),
        ));
    }
    let d = r.u32()? as usize;
    let m = r.u32()? as usize;
    let l = r.f64()?;
    let n_trunc = r.u32()? as usize;
    let grid = SpacetimeGrid::new(d, m, l, n_trunc)?;
    let scalar = r.c()?;
    let n_terms = r.u32()? as usize;
    let mut dedup: HashMap<Vec<u8>, Arc<MultiplicativeDeformation>> = HashMap::new();
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let coeff = r.c()?;
        let degree = r.u32()? as usize;
        let mut factors = Vec::with_capacity(degree);
        for _ in 0..degree {
            let mut lo = Vec::with_capacity(d);
            let mut shape = Vec::with_capacity(d);
            for _ in 0..d {
                lo.push(r.i64()?);
                shape.push(r.u64()? as usize);
            }
            let support = SupportBox { lo, shape };
            let len = support.len();
            let mut values = Vec::with_capacity(len);
            for _ in 0..len {
                values.push(r.c()?);
            }
            factors.push(Arc::new(TestFunction::from_box_values(
                grid, support, values,
            )?));
        }
        let nk = r.u32()? as usize;
        let mut kernels = Vec::with_capacity(nk);
        for _ in 0..nk {
            let left = r.u32()? as usize;
            let right = r.u32()? as usize;
            let power = r.i32()?;
            let start = r.cur.position() as usize;
            let def = decode_deformation(&mut r)?;
            let key = data[start..r.cur.position() as usize].to_vec();
            let shared = dedup
                .entry(key)
                .or_insert_with(|| Arc::new(def))
                .clone();
            kernels.push(PairKernel {
                left,
                right,
                power,
                deformation: shared,
            });
        }
        terms.push(TensorTerm {
            coeff,
            factors,
            kernels,
        });
    }
    if !r.done() {
        return Err(Error::ConfigInvalid(
            "element container has trailing bytes".into(),
        ));
    }
    TensorElement::from_terms(grid, scalar, terms)
}

/// Serialises a Fock vector together with its quadrature rule parameters.
pub fn fock_to_bytes(rule: &OnShellRule, v: &FockVector) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(FOCK_MAGIC);
    put_u32(
        &mut buf,
        match rule.kind() {
            RuleKind::GaussLegendreMomentum => 0,
            RuleKind::UniformRapidity => 1,
        },
    );
    put_f64(&mut buf, rule.mass());
    put_u32(&mut buf, rule.len() as u32);
    put_f64(&mut buf, rule.span());
    put_u32(&mut buf, (v.sector_count() - 1) as u32);
    for n in 0..v.sector_count() {
        let s = v.sector(n);
        put_u64(&mut buf, s.len() as u64);
        for x in s {
            put_c(&mut buf, *x);
        }
    }
    buf
}

/// Parses a Fock vector container, rebuilding the rule from its parameters.
pub fn fock_from_bytes(data: &[u8]) -> Result<(OnShellRule, FockVector)> {
    let mut r = Reader::new(data);
    if r.bytes(8)? != FOCK_MAGIC {
        return Err(Error::ConfigInvalid(
            "not a Fock container (bad magic)".into(),
        ));
    }
    let kind = r.u32()?;
    let mass = r.f64()?;
    let nodes = r.u32()? as usize;
    let span = r.f64()?;
    let rule = match kind {
        0 => OnShellRule::gauss_legendre(mass, nodes, span)?,
        1 => OnShellRule::uniform_rapidity(mass, nodes, span)?,
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown quadrature-rule tag {other}"
            )))
        }
    };
    let n_max = r.u32()? as usize;
    let mut sectors = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let len = r.u64()? as usize;
        if len != nodes.pow(n as u32) {
            return Err(Error::ConfigInvalid(format!(
                "sector {n} length {len} does not match {nodes}^{n}"
            )));
        }
        let mut s = Vec::with_capacity(len);
        for _ in 0..len {
            s.push(r.c()?);
        }
        sectors.push(s);
    }
    if !r.done() {
        return Err(Error::ConfigInvalid(
            "Fock container has trailing bytes".into(),
        ));
    }
    Ok((rule, FockVector::from_sectors(sectors)?))
}

fn write_with_sidecar(path: &Path, bytes: &[u8], description: SidecarPayload) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    let sidecar = Sidecar {
        format: String::from_utf8_lossy(&bytes[..8]).into_owned(),
        sha256: hex_digest(bytes),
        payload_bytes: bytes.len(),
        description,
    };
    let mut meta = path.as_os_str().to_owned();
    meta.push(".meta.json");
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(meta, json)?;
    Ok(())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_element(path: &Path, e: &TensorElement) -> Result<()> {
    let bytes = element_to_bytes(e);
    let g = e.grid();
    write_with_sidecar(
        path,
        &bytes,
        SidecarPayload::Element {
            d: g.dim(),
            points_per_axis: g.points_per_axis(),
            extent: g.extent(),
            truncation: g.n_trunc(),
            terms: e.terms().len(),
            max_degree: e.max_degree(),
        },
    )
}

pub fn read_element(path: &Path) -> Result<TensorElement> {
    element_from_bytes(&std::fs::read(path)?)
}

pub fn write_fock_vector(path: &Path, rule: &OnShellRule, v: &FockVector) -> Result<()> {
    let bytes = fock_to_bytes(rule, v);
    write_with_sidecar(
        path,
        &bytes,
        SidecarPayload::Fock {
            rule: format!("{:?}", rule.kind()),
            mass: rule.mass(),
            nodes: rule.len(),
            span: rule.span(),
            particle_cap: v.sector_count() - 1,
        },
    )
}

pub fn read_fock_vector(path: &Path) -> Result<(OnShellRule, FockVector)> {
    fock_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::deformed_product;
    use crate::fock::FockSpace;
    use crate::grid::Vfield;

    fn sample_element() -> TensorElement {
        let grid = SpacetimeGrid::new(2, 16, 4.0, 4).unwrap();
        let f = TestFunction::bump(
            grid,
            &Vfield::new(&[0.0, 0.5]),
            &Vfield::new(&[1.2, 1.2]),
            &Vfield::new(&[0.3, -0.2]),
        )
        .unwrap();
        let g = TestFunction::bump(
            grid,
            &Vfield::new(&[0.2, -0.6]),
            &Vfield::new(&[1.0, 1.3]),
            &Vfield::new(&[-0.1, 0.4]),
        )
        .unwrap();
        let def = Arc::new(MultiplicativeDeformation::new(
            DeformationFunction::new(
                0.25,
                vec![C::new(0.0, 2.0), C::new(1.0, 0.5), C::new(-1.0, 0.5)],
            )
            .unwrap(),
            QMatrix::new(2, 1.0, 0.0).unwrap(),
        ));
        let ef = TensorElement::from_single(f);
        let eg = TensorElement::from_single(g);
        let fg = deformed_product(&def, &ef, &eg).unwrap();
        fg.add(&ef.scale(C::new(0.7, -0.3)))
            .unwrap()
            .add(&TensorElement::unit(grid).scale(C::new(0.2, 0.1)))
            .unwrap()
    }

    #[test]
    fn element_bytes_roundtrip_and_are_deterministic() {
        let e = sample_element();
        let b1 = element_to_bytes(&e);
        let back = element_from_bytes(&b1).unwrap();
        let b2 = element_to_bytes(&back);
        assert_eq!(b1, b2, "re-serialisation must be byte-identical");
        // Momentum representations agree pointwise.
        let pts = vec![
            vec![Vfield::new(&[0.4, -0.3]), Vfield::new(&[0.1, 0.9])],
            vec![Vfield::new(&[-1.0, 0.2]), Vfield::new(&[0.6, 0.6])],
        ];
        assert!(e.max_component_diff(&back, &pts) == 0.0);
    }

    #[test]
    fn kernel_deformations_share_storage_after_parsing() {
        let e = sample_element();
        let back = element_from_bytes(&element_to_bytes(&e)).unwrap();
        let mut defs: Vec<&Arc<MultiplicativeDeformation>> = Vec::new();
        for t in back.terms() {
            for k in &t.kernels {
                defs.push(&k.deformation);
            }
        }
        if defs.len() >= 2 {
            assert!(Arc::ptr_eq(defs[0], defs[1]));
        }
    }

    #[test]
    fn fock_vector_roundtrips_bitwise() {
        let rule = OnShellRule::uniform_rapidity(1.0, 17, 2.5).unwrap();
        let fs = FockSpace::new(rule, 2).unwrap();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let v = fs
            .create(
                &triv,
                &crate::fock::gaussian_rapidity_profile(fs.rule(), 0.3, 0.4),
                &fs.vacuum(),
            )
            .unwrap();
        let bytes = fock_to_bytes(fs.rule(), &v);
        let (rule2, v2) = fock_from_bytes(&bytes).unwrap();
        assert_eq!(rule2.len(), fs.rule().len());
        for n in 0..=2 {
            assert_eq!(v.sector(n), v2.sector(n));
        }
        assert_eq!(bytes, fock_to_bytes(&rule2, &v2));
    }

    #[test]
    fn corrupted_containers_are_rejected() {
        let e = sample_element();
        let mut b = element_to_bytes(&e);
        b[0] = b'X';
        assert!(element_from_bytes(&b).is_err());
        let b2 = element_to_bytes(&e);
        assert!(element_from_bytes(&b2[..b2.len() - 4]).is_err());
        let mut b3 = element_to_bytes(&e);
        b3.extend_from_slice(&[0, 1, 2, 3]);
        assert!(element_from_bytes(&b3).is_err());
    }

    #[test]
    fn files_and_sidecars_are_written_together() {
        let dir = std::env::temp_dir().join(format!("wf-container-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("element.wfrm");
        let e = sample_element();
        write_element(&path, &e).unwrap();
        let back = read_element(&path).unwrap();
        assert_eq!(element_to_bytes(&e), element_to_bytes(&back));
        let sidecar: Sidecar = serde_json::from_str(
            &std::fs::read_to_string(dir.join("element.wfrm.meta.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(sidecar.sha256, hex_digest(&element_to_bytes(&e)));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
