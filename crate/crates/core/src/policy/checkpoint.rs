//! Parameter checkpoints.
//!
//! Byte layout, little-endian throughout:
//!
//! ```text
//! u32            number of layer dims D
//! D x u32        layer dims (input, hidden..., output)
//! u32            action dim A (0 for plain critics)
//! (P + A) x f64  flat network parameters, then the A log-std entries
//! ```
//!
//! `P` is the parameter count implied by the dims. Values are written as raw
//! IEEE-754 bits, so a save/load round trip is bit-identical and resumed
//! runs reproduce exactly.

use std::io::{Read, Write};

use super::gaussian::GaussianPolicy;
use super::heads::ValueNet;
use super::mlp::Mlp;
use crate::numerics::RngStream;
use crate::{Error, Result};

pub fn write_checkpoint<W: Write>(
    mut w: W,
    dims: &[usize],
    action_dim: usize,
    values: &[f64],
) -> Result<()> {
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        w.write_all(&(*d as u32).to_le_bytes())?;
    }
    w.write_all(&(action_dim as u32).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Vec<usize>, usize, Vec<f64>)> {
    let mut u32_buf = [0u8; 4];
    r.read_exact(&mut u32_buf)?;
    let n_dims = u32::from_le_bytes(u32_buf) as usize;
    if !(2..=64).contains(&n_dims) {
        return Err(Error::InvalidConfig(format!(
            "checkpoint header lists {n_dims} dims"
        )));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        r.read_exact(&mut u32_buf)?;
        dims.push(u32::from_le_bytes(u32_buf) as usize);
    }
    r.read_exact(&mut u32_buf)?;
    let action_dim = u32::from_le_bytes(u32_buf) as usize;

    let param_count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let total = param_count + action_dim;
    let mut values = Vec::with_capacity(total);
    let mut f64_buf = [0u8; 8];
    for _ in 0..total {
        r.read_exact(&mut f64_buf)?;
        values.push(f64::from_le_bytes(f64_buf));
    }
    Ok((dims, action_dim, values))
}

impl GaussianPolicy {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_checkpoint(w, self.mean_net.dims(), self.act_dim(), &self.flat())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let (dims, action_dim, values) = read_checkpoint(r)?;
        if *dims.last().unwrap() != action_dim {
            return Err(Error::InvalidConfig(
                "checkpoint action dim does not match output layer".into(),
            ));
        }
        let hidden = &dims[1..dims.len() - 1];
        let mut rng = RngStream::new(0);
        let mut policy = GaussianPolicy::new(dims[0], action_dim, hidden, &mut rng);
        policy.set_from_flat(&values)?;
        Ok(policy)
    }
}

impl ValueNet {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_checkpoint(w, self.net().dims(), 0, &self.net().flat())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let (dims, action_dim, values) = read_checkpoint(r)?;
        if action_dim != 0 || *dims.last().unwrap() != 1 {
            return Err(Error::InvalidConfig(
                "checkpoint is not a scalar critic".into(),
            ));
        }
        let hidden = &dims[1..dims.len() - 1];
        let mut rng = RngStream::new(0);
        let mut net = ValueNet::new(dims[0], hidden, &mut rng);
        net.net_mut().set_from_flat(&values)?;
        Ok(net)
    }
}

// Keep the unused import warning away when Mlp is only referenced in docs.
#[allow(unused)]
fn _assert_layout(net: &Mlp) -> usize {
    net.param_count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_roundtrip_is_bit_identical() {
        let mut rng = RngStream::new(33);
        let policy = GaussianPolicy::new(5, 2, &[8, 8], &mut rng);
        let mut buf = Vec::new();
        policy.save(&mut buf).unwrap();
        let restored = GaussianPolicy::load(buf.as_slice()).unwrap();
        let a = policy.flat();
        let b = restored.flat();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn value_net_roundtrip_is_bit_identical() {
        let mut rng = RngStream::new(34);
        let mut net = ValueNet::new(4, &[8], &mut rng);
        // Give the zeroed head nontrivial values first.
        let flat: Vec<f64> = (0..net.net().param_count()).map(|_| rng.normal()).collect();
        net.net_mut().set_from_flat(&flat).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        let restored = ValueNet::load(buf.as_slice()).unwrap();
        for (x, y) in net.net().flat().iter().zip(&restored.net().flat()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn truncated_checkpoint_is_error() {
        let mut rng = RngStream::new(35);
        let policy = GaussianPolicy::new(3, 1, &[4], &mut rng);
        let mut buf = Vec::new();
        policy.save(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(GaussianPolicy::load(buf.as_slice()).is_err());
    }
}
