//! Flat binary batches: a fixed little-endian header followed by the
//! row-major endpoint matrix as `f64`.
//!
//! | bytes | field |
//! |---|---|
//! | 8 | magic `HKBATCH1` |
//! | 4 + 4 | model tag, model parameter |
//! | 8 | dims |
//! | 8 | n |
//! | 8 | seed |
//! | 8 | horizon |
//! | 1 | scheme (0 exact, 1 Euler) |
//! | 8 | dt (NaN when exact) |
//! | 8 | reflections |

use std::io::{Read, Write};

use super::{Diagnostics, SampleBatch, Scheme};
use crate::error::{ensure, Error, Result};
use crate::geometry::ModelId;

const MAGIC: &[u8; 8] = b"HKBATCH1";

fn model_tag(m: Option<ModelId>) -> (u32, u32) {
    match m {
        None => (0, 0),
        Some(ModelId::Heat(k)) => (1, k as u32),
        Some(ModelId::Heisenberg) => (2, 0),
        Some(ModelId::Kolmogorov) => (3, 0),
        Some(ModelId::IteratedKolmogorov(k)) => (4, k as u32),
        Some(ModelId::QuadraticLifted) => (5, 0),
        Some(ModelId::Asian) => (6, 0),
    }
}

fn model_from_tag(tag: u32, p: u32) -> Result<Option<ModelId>> {
    Ok(match tag {
        0 => None,
        1 => Some(ModelId::Heat(p as usize)),
        2 => Some(ModelId::Heisenberg),
        3 => Some(ModelId::Kolmogorov),
        4 => Some(ModelId::IteratedKolmogorov(p as usize)),
        5 => Some(ModelId::QuadraticLifted),
        6 => Some(ModelId::Asian),
        _ => return Err(Error::Argument(format!("unknown model tag {tag}"))),
    })
}

pub fn write_batch<W: Write>(b: &SampleBatch, w: &mut W) -> Result<()> {
    let (tag, p) = model_tag(b.model);
    w.write_all(MAGIC)?;
    w.write_all(&tag.to_le_bytes())?;
    w.write_all(&p.to_le_bytes())?;
    w.write_all(&(b.dims as u64).to_le_bytes())?;
    w.write_all(&(b.n as u64).to_le_bytes())?;
    w.write_all(&b.seed.to_le_bytes())?;
    w.write_all(&b.horizon.to_le_bytes())?;
    let (s, dt) = match b.scheme {
        Scheme::Exact => (0u8, f64::NAN),
        Scheme::Euler { dt } => (1u8, dt),
    };
    w.write_all(&[s])?;
    w.write_all(&dt.to_le_bytes())?;
    w.write_all(&b.diagnostics.reflections.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * b.data.len());
    for v in &b.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut a = [0u8; K];
    r.read_exact(&mut a)?;
    Ok(a)
}

pub fn read_batch<R: Read>(r: &mut R) -> Result<SampleBatch> {
    ensure(&take::<8, _>(r)? == MAGIC, || Error::Argument("not a sample batch".into()))?;
    let tag = u32::from_le_bytes(take(r)?);
    let p = u32::from_le_bytes(take(r)?);
    let model = model_from_tag(tag, p)?;
    let dims = u64::from_le_bytes(take(r)?) as usize;
    let n = u64::from_le_bytes(take(r)?) as usize;
    let seed = u64::from_le_bytes(take(r)?);
    let horizon = f64::from_le_bytes(take(r)?);
    let s = take::<1, _>(r)?[0];
    let dt = f64::from_le_bytes(take(r)?);
    let scheme = match s {
        0 => Scheme::Exact,
        1 => Scheme::Euler { dt },
        _ => return Err(Error::Argument(format!("unknown scheme tag {s}"))),
    };
    let reflections = u64::from_le_bytes(take(r)?);
    let mut raw = vec![0u8; 8 * dims * n];
    r.read_exact(&mut raw)?;
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(SampleBatch { model, dims, data, n, seed, horizon, scheme, diagnostics: Diagnostics { reflections } })
}
