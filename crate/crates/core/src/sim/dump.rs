//! Binary soup dumps for replay.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u32` dimension,
//! `u32` window and guard radii, `f64` u_max, intensity, capacity and its
//! standard error, `u64` capacity samples, `u32` escape radius, `u64` seed
//! and stream, `u64` trajectory count; then per trajectory an `f64` label,
//! `u32` entry index, `u64` run count and `(u32 start, u32 length)` runs of
//! consecutive window indices.

use std::io::{Read, Write};

use super::soup::{Trajectory, TrajectorySoup};
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, PotentialEstimate};
use crate::rng::StreamId;

const MAGIC: &[u8; 8] = b"ILSOUP\0\0";
pub const DUMP_VERSION: u32 = 1;

fn runs(trace: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &s in trace {
        match out.last_mut() {
            Some((start, len)) if *start + *len == s => *len += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

pub fn write_soups<W: Write>(mut w: W, soups: &[TrajectorySoup]) -> Result<()> {
    for soup in soups {
        w.write_all(MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(soup.window.dim() as u32).to_le_bytes())?;
        w.write_all(&soup.window.radius().to_le_bytes())?;
        w.write_all(&soup.guard.radius().to_le_bytes())?;
        for v in [
            soup.u_max,
            soup.intensity,
            soup.cap_estimate.value,
            soup.cap_estimate.stderr,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&soup.cap_estimate.samples.to_le_bytes())?;
        w.write_all(&soup.cap_estimate.escape_radius.to_le_bytes())?;
        w.write_all(&soup.stream.seed.to_le_bytes())?;
        w.write_all(&soup.stream.stream.to_le_bytes())?;
        w.write_all(&(soup.trajectories.len() as u64).to_le_bytes())?;
        for t in &soup.trajectories {
            w.write_all(&t.label.to_le_bytes())?;
            w.write_all(&t.entry.to_le_bytes())?;
            let r = runs(&t.trace);
            w.write_all(&(r.len() as u64).to_le_bytes())?;
            for (s, l) in r {
                w.write_all(&s.to_le_bytes())?;
                w.write_all(&l.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b)?;
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

/// Reads every soup in the stream.
pub fn read_soups<R: Read>(inner: R) -> Result<Vec<TrajectorySoup>> {
    let mut r = Reader { inner };
    let mut out = Vec::new();
    loop {
        let mut magic = [0u8; 8];
        match r.inner.read(&mut magic[..1])? {
            0 => return Ok(out),
            _ => r.inner.read_exact(&mut magic[1..])?,
        }
        if &magic != MAGIC {
            return Err(Error::Format("bad soup dump magic".into()));
        }
        let version = r.u32()?;
        if version != DUMP_VERSION {
            return Err(Error::Format(format!(
                "unsupported soup dump version {version}"
            )));
        }
        let d = r.u32()? as usize;
        let window = LatticeBox::centered(d, r.u32()?)?;
        let guard = LatticeBox::centered(d, r.u32()?)?;
        let u_max = r.f64()?;
        let intensity = r.f64()?;
        let value = r.f64()?;
        let stderr = r.f64()?;
        let cap_estimate = PotentialEstimate {
            value,
            stderr,
            samples: r.u64()?,
            escape_radius: r.u32()?,
        };
        let stream = StreamId {
            seed: r.u64()?,
            stream: r.u64()?,
        };
        let count = r.u64()?;
        let vol = window.volume() as u64;
        let mut trajectories = Vec::new();
        for _ in 0..count {
            let label = r.f64()?;
            let entry = r.u32()?;
            let nruns = r.u64()?;
            let mut trace = Vec::new();
            for _ in 0..nruns {
                let s = r.u32()?;
                let l = r.u32()?;
                if s as u64 + l as u64 > vol {
                    return Err(Error::Format("trace run outside window".into()));
                }
                trace.extend(s..s + l);
            }
            trajectories.push(Trajectory {
                label,
                entry,
                trace,
            });
        }
        out.push(TrajectorySoup {
            window,
            guard,
            u_max,
            intensity,
            cap_estimate,
            stream,
            trajectories,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{SoupConfig, SoupSampler};

    #[test]
    fn round_trip() {
        let s = SoupSampler::new(
            SoupConfig {
                cap_samples: 200,
                ..SoupConfig::new(3, 3, 1.0)
            },
            5,
        )
        .unwrap();
        let soups: Vec<_> = (0..3)
            .map(|i| s.sample(SoupSampler::stream(5, i)).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_soups(&mut buf, &soups).unwrap();
        let back = read_soups(&buf[..]).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in soups.iter().zip(&back) {
            assert_eq!(a.trajectories, b.trajectories);
            assert_eq!(a.cap_estimate, b.cap_estimate);
            assert_eq!(a.stream, b.stream);
            assert_eq!(a.intensity.to_bits(), b.intensity.to_bits());
        }
        buf[0] = b'X';
        assert!(read_soups(&buf[..]).is_err());
    }
}
