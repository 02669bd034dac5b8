//! Polar code construction, encoding and CRC attachment.
//!
//! A code of length `N = 2^n` carries `K` information bits (the last `r`
//! of which hold a CRC checksum) on the `K` most reliable synthetic
//! channels; the remaining positions are frozen to zero. Encoding is the
//! Kronecker-power butterfly `x = u * F^(x)n` over GF(2) with
//! `F = [[1,0],[1,1]]`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A bit; 0 or 1 stored in a byte.
pub type Bit = u8;

/// CRC polynomial description.
///
/// `poly` includes the leading coefficient, so a width-`r` polynomial
/// lies in `[2^r, 2^(r+1))`. The checksum occupies the last `r`
/// information positions of the code, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrcSpec {
    width: u32,
    poly: u64,
    init: u64,
}

/// 24-bit CRC used by default (polynomial 0x1864CFB).
pub const CRC24_DEFAULT: CrcSpec = CrcSpec {
    width: 24,
    poly: 0x1864CFB,
    init: 0,
};

/// 8-bit CRC (polynomial 0x107) for small test codes.
pub const CRC8_DEFAULT: CrcSpec = CrcSpec {
    width: 8,
    poly: 0x107,
    init: 0,
};

impl CrcSpec {
    pub fn new(width: u32, poly: u64, init: u64) -> Result<Self> {
        if width == 0 || width > 63 {
            return Err(Error::InvalidParameter(format!(
                "CRC width {width} out of range"
            )));
        }
        if poly >> width != 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial {poly:#x} does not have degree {width}"
            )));
        }
        if init >> width != 0 {
            return Err(Error::InvalidParameter("CRC init wider than CRC".into()));
        }
        Ok(Self { width, poly, init })
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Checksum of `message`, returned as `width` bits, MSB first.
    pub fn checksum(&self, message: &[Bit]) -> Vec<Bit> {
        let mask = (1u64 << self.width) - 1;
        let low = self.poly & mask;
        let mut reg = self.init;
        for &bit in message {
            let top = (reg >> (self.width - 1)) & 1;
            reg = (reg << 1) & mask;
            if top ^ (bit as u64) == 1 {
                reg ^= low;
            }
        }
        (0..self.width)
            .rev()
            .map(|i| ((reg >> i) & 1) as Bit)
            .collect()
    }

    /// True iff the trailing `width` bits of `data` are the checksum of
    /// the leading bits.
    pub fn check(&self, data: &[Bit]) -> bool {
        let w = self.width as usize;
        if data.len() < w {
            return false;
        }
        let (message, tail) = data.split_at(data.len() - w);
        self.checksum(message) == tail
    }
}

/// Default polynomial for a given CRC width.
pub fn default_crc(width: u32) -> Result<CrcSpec> {
    match width {
        8 => Ok(CRC8_DEFAULT),
        24 => Ok(CRC24_DEFAULT),
        w => CrcSpec::new(w, (1 << w) | 0b11, 0), // x^w + x + 1
    }
}

/// How the information set is derived from the design SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionMethod {
    /// Bhattacharyya-parameter recursion `z -> {2z - z^2, z^2}`.
    Bhattacharyya,
    /// Gaussian approximation of the mean LLR evolution.
    GaussianApprox,
}

impl std::str::FromStr for ConstructionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bhattacharyya" => Ok(Self::Bhattacharyya),
            "gaussian_approx" | "ga" => Ok(Self::GaussianApprox),
            other => Err(Error::Parse(format!(
                "unknown construction method {other:?}"
            ))),
        }
    }
}

/// A polar code: block length, information set and optional CRC.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: u32,
    block_len: usize,
    num_info: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    crc: Option<CrcSpec>,
}

impl PolarCode {
    /// Builds a code from an explicit information set. `crc = None`
    /// yields a plain polar code with `r = 0`.
    pub fn with_info_set(n: u32, info_set: Vec<usize>, crc: Option<CrcSpec>) -> Result<Self> {
        let block_len = 1usize
            .checked_shl(n)
            .ok_or_else(|| Error::InvalidParameter(format!("exponent n={n} too large")))?;
        let mut sorted = info_set;
        sorted.sort_unstable();
        sorted.dedup();
        let num_info = sorted.len();
        if num_info == 0 || num_info > block_len {
            return Err(Error::InvalidParameter(format!(
                "information set size {num_info} out of range for N={block_len}"
            )));
        }
        if sorted.last().is_some_and(|&i| i >= block_len) {
            return Err(Error::InvalidParameter(
                "information set index out of range".into(),
            ));
        }
        if let Some(c) = &crc {
            if c.width() >= num_info {
                return Err(Error::InvalidParameter(format!(
                    "CRC width {} must be smaller than K={}",
                    c.width(),
                    num_info
                )));
            }
        }
        let mut frozen = vec![true; block_len];
        for &i in &sorted {
            frozen[i] = false;
        }
        Ok(Self {
            n,
            block_len,
            num_info,
            info_set: sorted,
            frozen,
            crc,
        })
    }

    /// Constructs the information set by ranking synthetic channels at
    /// `design_snr_db` (an Eb/N0) under the chosen method and keeping
    /// the `k` most reliable. Deterministic for fixed inputs; ties break
    /// toward the higher index.
    pub fn construct(
        n: u32,
        k: usize,
        r: u32,
        design_snr_db: f64,
        method: ConstructionMethod,
        crc: Option<CrcSpec>,
    ) -> Result<Self> {
        let block_len = 1usize
            .checked_shl(n)
            .ok_or_else(|| Error::InvalidParameter(format!("exponent n={n} too large")))?;
        if k == 0 || k > block_len {
            return Err(Error::InvalidParameter(format!(
                "K={k} out of range for N={block_len}"
            )));
        }
        if r as usize >= k {
            return Err(Error::InvalidParameter(format!("CRC width {r} >= K={k}")));
        }
        let crc = match (r, crc) {
            (0, None) => None,
            (0, Some(_)) => {
                return Err(Error::InvalidParameter("CRC spec given but r = 0".into()))
            }
            (r, None) => Some(default_crc(r)?),
            (r, Some(c)) if c.width() == r as usize => Some(c),
            _ => {
                return Err(Error::InvalidParameter(
                    "CRC spec width disagrees with r".into(),
                ))
            }
        };
        let rate = (k - r as usize) as f64 / block_len as f64;
        let ebn0 = 10f64.powf(design_snr_db / 10.0);
        let info_set = match method {
            ConstructionMethod::Bhattacharyya => {
                // Initial parameter for a BPSK/AWGN channel at Es/N0 = R*Eb/N0.
                let z0 = (-(rate * ebn0)).exp().clamp(1e-12, 1.0 - 1e-12);
                select_best(&bhattacharyya_params(n, z0), k, true)
            }
            ConstructionMethod::GaussianApprox => {
                let sigma_sq = 1.0 / (2.0 * rate * ebn0);
                let mu0 = 2.0 / sigma_sq;
                select_best(&gaussian_approx_means(n, mu0), k, false)
            }
        };
        Self::with_info_set(n, info_set, crc)
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    /// Block length `N`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of information bits `K`, CRC included.
    pub fn num_info(&self) -> usize {
        self.num_info
    }

    /// CRC width `r` (0 when the code has no CRC).
    pub fn crc_len(&self) -> usize {
        self.crc.map_or(0, |c| c.width())
    }

    /// Code rate `(K - r) / N`.
    pub fn rate(&self) -> f64 {
        (self.num_info - self.crc_len()) as f64 / self.block_len as f64
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn crc(&self) -> Option<&CrcSpec> {
        self.crc.as_ref()
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    /// Number of frozen bits in each length-`m` sub-block, `m | N`.
    pub fn frozen_counts(&self, m: usize) -> Result<Vec<usize>> {
        if m == 0 || self.block_len % m != 0 {
            return Err(Error::InvalidParameter(format!(
                "sub-code length {m} does not divide N={}",
                self.block_len
            )));
        }
        Ok(self
            .frozen
            .chunks(m)
            .map(|c| c.iter().filter(|&&f| f).count())
            .collect())
    }

    /// Encodes a full source word (frozen positions must be zero).
    pub fn encode(&self, u: &[Bit]) -> Result<Vec<Bit>> {
        if u.len() != self.block_len {
            return Err(Error::InvalidParameter(format!(
                "source word length {} != N={}",
                u.len(),
                self.block_len
            )));
        }
        for (i, &b) in u.iter().enumerate() {
            if self.frozen[i] && b != 0 {
                return Err(Error::InvalidParameter(format!(
                    "frozen bit {i} set in source word"
                )));
            }
        }
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }

    /// Builds the source word for `message` (length `K - r`): message
    /// bits then checksum, placed on the information set in index order.
    pub fn attach_crc(&self, message: &[Bit]) -> Result<Vec<Bit>> {
        let payload = self.num_info - self.crc_len();
        if message.len() != payload {
            return Err(Error::InvalidParameter(format!(
                "message length {} != K - r = {payload}",
                message.len()
            )));
        }
        let mut info = message.to_vec();
        if let Some(crc) = &self.crc {
            info.extend(crc.checksum(message));
        }
        let mut u = vec![0u8; self.block_len];
        for (&pos, &bit) in self.info_set.iter().zip(&info) {
            u[pos] = bit;
        }
        Ok(u)
    }

    /// True iff the trailing `r` information bits are the checksum of
    /// the others. Codes without CRC accept everything.
    pub fn check_crc(&self, decoded_info: &[Bit]) -> bool {
        if decoded_info.len() != self.num_info {
            return false;
        }
        match &self.crc {
            Some(crc) => crc.check(decoded_info),
            None => true,
        }
    }

    /// The information bits of a source word, in index order.
    pub fn extract_info(&self, u: &[Bit]) -> Vec<Bit> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }
}

/// On-disk code description. Stores the explicit information set so a
/// run is reproducible without re-deriving the construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeFile {
    pub n: u32,
    pub k: usize,
    pub r: u32,
    pub design_snr_db: f64,
    pub method: ConstructionMethod,
    pub info_set: Vec<usize>,
    #[serde(default)]
    pub crc_poly: Option<u64>,
    #[serde(default)]
    pub crc_init: Option<u64>,
}

impl CodeFile {
    pub fn describe(code: &PolarCode, design_snr_db: f64, method: ConstructionMethod) -> Self {
        Self {
            n: code.exponent(),
            k: code.num_info(),
            r: code.crc_len() as u32,
            design_snr_db,
            method,
            info_set: code.info_set().to_vec(),
            crc_poly: code.crc().map(|c| c.poly),
            crc_init: code.crc().map(|c| c.init),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("code file serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("code file: {e}")))
    }

    /// Rebuilds the code from the stored information set.
    pub fn build(&self) -> Result<PolarCode> {
        let crc = match (self.r, self.crc_poly) {
            (0, _) => None,
            (r, Some(p)) => Some(CrcSpec::new(r, p, self.crc_init.unwrap_or(0))?),
            (r, None) => Some(default_crc(r)?),
        };
        let code = PolarCode::with_info_set(self.n, self.info_set.clone(), crc)?;
        if code.num_info() != self.k {
            return Err(Error::Parse(format!(
                "info_set has {} entries but k = {}",
                code.num_info(),
                self.k
            )));
        }
        Ok(code)
    }
}

/// In-place butterfly for `x = u * F^(x)n` in natural bit order.
/// Self-inverse over GF(2).
pub fn polar_transform(bits: &mut [Bit]) {
    let n = bits.len();
    let mut step = 1;
    while step < n {
        let mut base = 0;
        while base < n {
            for j in base..base + step {
                bits[j] ^= bits[j + step];
            }
            base += 2 * step;
        }
        step *= 2;
    }
}

/// Bhattacharyya parameters of the `2^n` synthetic channels for an
/// initial parameter `z0`, in natural source-bit order (lower is more
/// reliable).
pub fn bhattacharyya_params(n: u32, z0: f64) -> Vec<f64> {
    let mut z = vec![z0];
    for _ in 0..n {
        let mut next = Vec::with_capacity(z.len() * 2);
        for &v in &z {
            next.push(2.0 * v - v * v);
            next.push(v * v);
        }
        z = next;
    }
    z
}

/// Mean-LLR estimates of the `2^n` synthetic channels under the Gaussian
/// approximation, starting from mean `mu0` (higher is more reliable).
pub fn gaussian_approx_means(n: u32, mu0: f64) -> Vec<f64> {
    let mut mu = vec![mu0];
    for _ in 0..n {
        let mut next = Vec::with_capacity(mu.len() * 2);
        for &m in &mu {
            next.push(phi_inv(1.0 - (1.0 - phi(m)).powi(2)));
            next.push(2.0 * m);
        }
        mu = next;
    }
    mu
}

fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).exp()
    } else {
        (std::f64::consts::PI / x).sqrt() * (-x / 4.0).exp() * (1.0 - 10.0 / (7.0 * x))
    }
}

/// Inverse of `phi` by bisection; `phi` is monotone decreasing.
fn phi_inv(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while phi(hi) > y && hi < 1e9 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Indices of the `k` best channels. `ascending` selects the smallest
/// values (Bhattacharyya), otherwise the largest (mean LLR). Ties break
/// toward the higher index so construction is deterministic.
fn select_best(metric: &[f64], k: usize, ascending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..metric.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = metric[a].partial_cmp(&metric[b]).expect("finite metric");
        let ord = if ascending { ord } else { ord.reverse() };
        ord.then(b.cmp(&a))
    });
    let mut best: Vec<usize> = idx[..k].to_vec();
    best.sort_unstable();
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive GF(2) multiply by the explicit Kronecker power, used as an
    /// oracle for the butterfly.
    fn encode_naive(u: &[Bit]) -> Vec<Bit> {
        let n = u.len();
        let mut f = vec![vec![1u8; 1]; 1];
        while f.len() < n {
            let m = f.len();
            let mut g = vec![vec![0u8; 2 * m]; 2 * m];
            for i in 0..m {
                for j in 0..m {
                    g[i][j] = f[i][j];
                    g[i + m][j] = f[i][j];
                    g[i + m][j + m] = f[i][j];
                }
            }
            f = g;
        }
        (0..n)
            .map(|j| (0..n).fold(0u8, |acc, i| acc ^ (u[i] & f[i][j])))
            .collect()
    }

    fn test_code_n8() -> PolarCode {
        PolarCode::with_info_set(3, vec![3, 5, 6, 7], Some(CrcSpec::new(2, 0b111, 0).unwrap()))
            .unwrap()
    }

    #[test]
    fn transform_matches_naive_kronecker_product() {
        use rand::Rng;
        let mut rng = crate::rng::substream(11, 0);
        for n in [2usize, 4, 8, 16, 32, 64] {
            for _ in 0..20 {
                let u: Vec<Bit> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
                let mut x = u.clone();
                polar_transform(&mut x);
                assert_eq!(x, encode_naive(&u), "N={n}");
            }
        }
    }

    #[test]
    fn transform_known_values() {
        let mut x = vec![1, 1];
        polar_transform(&mut x);
        assert_eq!(x, vec![0, 1]);

        // [0,1,1,1] * F^(x)2 = [1,0,0,1], by summing generator rows 1..3.
        let mut x = vec![0, 1, 1, 1];
        polar_transform(&mut x);
        assert_eq!(x, vec![1, 0, 0, 1]);
        assert_eq!(encode_naive(&[0, 1, 1, 1]), vec![1, 0, 0, 1]);

        let mut x = vec![0u8; 8];
        polar_transform(&mut x);
        assert_eq!(x, vec![0u8; 8]);
    }

    #[test]
    fn transform_is_an_involution_and_linear() {
        use rand::Rng;
        let mut rng = crate::rng::substream(12, 0);
        for n in [2usize, 8, 64] {
            for _ in 0..20 {
                let a: Vec<Bit> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
                let b: Vec<Bit> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
                let mut aa = a.clone();
                polar_transform(&mut aa);
                polar_transform(&mut aa);
                assert_eq!(aa, a);

                let sum: Vec<Bit> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
                let mut enc_sum = sum.clone();
                polar_transform(&mut enc_sum);
                let (mut ea, mut eb) = (a.clone(), b.clone());
                polar_transform(&mut ea);
                polar_transform(&mut eb);
                let xor: Vec<Bit> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
                assert_eq!(enc_sum, xor);
            }
        }
    }

    #[test]
    fn bhattacharyya_recursion_by_hand() {
        // One level from 0.5: {2z - z^2, z^2} = {0.75, 0.25}; second
        // level gives {0.9375, 0.5625, 0.4375, 0.0625}.
        let z = bhattacharyya_params(2, 0.5);
        let expect = [0.9375, 0.5625, 0.4375, 0.0625];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(select_best(&z, 1, true), vec![3]);
    }

    #[test]
    fn trivial_full_rate_code() {
        // n = 1, K = 2: every position carries information.
        let z = bhattacharyya_params(1, 0.3);
        assert_eq!(select_best(&z, 2, true), vec![0, 1]);
        let code = PolarCode::construct(1, 2, 0, 0.0, ConstructionMethod::Bhattacharyya, None)
            .unwrap();
        assert_eq!(code.info_set(), &[0, 1]);
    }

    #[test]
    fn construction_is_deterministic_and_monotone_in_k() {
        for method in [ConstructionMethod::Bhattacharyya, ConstructionMethod::GaussianApprox] {
            let a = PolarCode::construct(8, 100, 8, 1.0, method, None).unwrap();
            let b = PolarCode::construct(8, 100, 8, 1.0, method, None).unwrap();
            assert_eq!(a.info_set(), b.info_set());
            let bigger = PolarCode::construct(8, 140, 8, 1.0, method, None).unwrap();
            for i in a.info_set() {
                assert!(bigger.info_set().contains(i), "{method:?}: lost index {i}");
            }
        }
    }

    #[test]
    fn construction_rejects_bad_sizes() {
        assert!(PolarCode::construct(3, 0, 0, 0.0, ConstructionMethod::Bhattacharyya, None)
            .is_err());
        assert!(PolarCode::construct(3, 9, 0, 0.0, ConstructionMethod::Bhattacharyya, None)
            .is_err());
        assert!(PolarCode::construct(3, 4, 4, 0.0, ConstructionMethod::Bhattacharyya, None)
            .is_err());
    }

    #[test]
    fn encode_rejects_frozen_violations() {
        let code = test_code_n8();
        let mut u = vec![0u8; 8];
        u[0] = 1; // frozen
        assert!(code.encode(&u).is_err());
        u[0] = 0;
        assert!(code.encode(&u).is_ok());
        assert!(code.encode(&[0u8; 4]).is_err());
    }

    #[test]
    fn crc_round_trip_and_single_flip() {
        let code = test_code_n8();
        for msg in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
            let u = code.attach_crc(&msg).unwrap();
            let info = code.extract_info(&u);
            assert!(code.check_crc(&info));
            for i in 0..info.len() {
                let mut bad = info.clone();
                bad[i] ^= 1;
                assert!(!code.check_crc(&bad), "flip at {i} undetected");
            }
        }
        // All-zero message stays all-zero for a zero-init CRC.
        let u = code.attach_crc(&[0, 0]).unwrap();
        assert_eq!(u, vec![0u8; 8]);
    }

    #[test]
    fn crc_checksum_matches_long_division_oracle() {
        // Plain polynomial long division over GF(2).
        fn long_division(message: &[Bit], poly_bits: &[Bit]) -> Vec<Bit> {
            let r = poly_bits.len() - 1;
            let mut work: Vec<Bit> = message.to_vec();
            work.extend(std::iter::repeat_n(0, r));
            for i in 0..message.len() {
                if work[i] == 1 {
                    for (j, &p) in poly_bits.iter().enumerate() {
                        work[i + j] ^= p;
                    }
                }
            }
            work[message.len()..].to_vec()
        }

        let spec = CrcSpec::new(8, 0x1D5, 0).unwrap(); // x^8+x^7+x^6+x^4+x^2+1
        let poly_bits: Vec<Bit> = (0..=8).rev().map(|i| ((0x1D5u64 >> i) & 1) as Bit).collect();
        let m = [1u8, 0, 1, 0, 1];
        assert_eq!(spec.checksum(&m), long_division(&m, &poly_bits));

        use rand::Rng;
        let mut rng = crate::rng::substream(13, 0);
        for _ in 0..200 {
            let len = rng.gen_range(1..40);
            let m: Vec<Bit> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
            assert_eq!(spec.checksum(&m), long_division(&m, &poly_bits));
        }
    }

    #[test]
    fn code_file_round_trip() {
        let code =
            PolarCode::construct(5, 16, 8, 1.5, ConstructionMethod::GaussianApprox, None).unwrap();
        let file = CodeFile::describe(&code, 1.5, ConstructionMethod::GaussianApprox);
        let text = file.to_toml();
        let back = CodeFile::from_toml(&text).unwrap().build().unwrap();
        assert_eq!(back, code);
    }

    #[test]
    fn info_set_round_trips_through_attach_extract() {
        use rand::Rng;
        let code =
            PolarCode::construct(6, 32, 8, 2.0, ConstructionMethod::Bhattacharyya, None).unwrap();
        let mut rng = crate::rng::substream(14, 0);
        for _ in 0..50 {
            let msg: Vec<Bit> = (0..24).map(|_| rng.gen_range(0..2u8)).collect();
            let u = code.attach_crc(&msg).unwrap();
            let info = code.extract_info(&u);
            assert_eq!(&info[..24], &msg[..]);
            assert!(code.check_crc(&info));
            // Encoding round-trips because the transform is self-inverse.
            let x = code.encode(&u).unwrap();
            let mut back = x.clone();
            polar_transform(&mut back);
            assert_eq!(back, u);
        }
    }
}
