use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Lattice, SpectralError, SpectralInterface};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Serializable spectrum. Coefficients are listed row-major over the
/// wavenumbers `k = -N/2+1 ..= N/2` on each axis.
///
/// `state` carries optional scalar run state (analyticity rate, accumulated
/// integrals) so a trajectory can be resumed exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub dims: usize,
    pub period: f64,
    pub modes: usize,
    pub time: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub state: BTreeMap<String, f64>,
}

fn row_major_wavevectors(dims: usize, n: usize) -> Vec<[i64; 2]> {
    let half = (n / 2) as i64;
    let axis: Vec<i64> = (-half + 1..=half).collect();
    if dims == 1 {
        axis.iter().map(|&k| [k, 0]).collect()
    } else {
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect()
    }
}

impl Snapshot {
    pub fn from_interface(f: &SpectralInterface) -> Self {
        let lat = f.lattice();
        let ks = row_major_wavevectors(lat.dims(), lat.modes());
        let (re, im) = ks.iter().map(|&k| f.coeffs()[lat.flat_index(k)]).map(|c| (c.re, c.im)).unzip();
        Self {
            version: SNAPSHOT_VERSION,
            dims: lat.dims(),
            period: lat.period(),
            modes: lat.modes(),
            time: f.time(),
            re,
            im,
            state: BTreeMap::new(),
        }
    }

    pub fn to_interface(&self) -> Result<SpectralInterface, SpectralError> {
        let lat = Lattice::new(self.dims, self.modes, self.period)?;
        if self.re.len() != lat.len() || self.im.len() != lat.len() {
            return Err(SpectralError::GridMismatch);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (j, k) in row_major_wavevectors(self.dims, self.modes).into_iter().enumerate() {
            coeffs[lat.flat_index(k)] = Complex64::new(self.re[j], self.im[j]);
        }
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(SpectralError::InvalidLattice(format!("bad snapshot time {}", self.time)));
        }
        SpectralInterface::from_coeffs(lat, coeffs, self.time)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serialization cannot fail for finite data")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_starts_at_negative_half_plus_one() {
        let ks = row_major_wavevectors(2, 4);
        assert_eq!(ks[0], [-1, -1]);
        assert_eq!(ks[1], [-1, 0]);
        assert_eq!(ks[15], [2, 2]);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let lat = Lattice::new(2, 8, 1.7).unwrap();
        let f = SpectralInterface::from_fn(lat, |x| (x[0] * 3.69).sin() * 0.1 / 3.0 + (x[1] * 7.39).cos() / 7.0)
            .with_time(0.1 + 0.2);
        let text = f.to_snapshot().to_json();
        let back = Snapshot::from_json(&text).unwrap().to_interface().unwrap();
        assert_eq!(back, f);
    }
}
